#pragma once

// JSON model documents:
//   {"model":"brownian","sigma":1.0,"drift":0.0}
//   {"model":"stable","alpha":1.5,"cplus":0.5,"cminus":0.5}
//   {"model":"stable","alpha":1.5,"c":1.0,"beta":0.0}
//   {"model":"brownian_jumps","sigma":1.0,"drift":0.0,"atoms":[{"size":-1.0,"rate":0.2}]}
// Unknown keys are rejected.

#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "levyh/levy_model.hpp"

namespace levyh {

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& doc, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (const auto& [key, value] : doc.items()) {
        if (!allowed.count(key)) throw ModelError(where + ": unknown key '" + key + "'");
    }
}

inline double number(const nlohmann::json& doc, const char* key, const std::string& where) {
    if (!doc.contains(key)) throw ModelError(where + ": missing key '" + key + "'");
    const auto& v = doc.at(key);
    if (!v.is_number()) throw ModelError(where + ": '" + key + "' must be a number");
    return v.get<double>();
}

inline double number_or(const nlohmann::json& doc, const char* key, double fallback,
                        const std::string& where) {
    return doc.contains(key) ? number(doc, key, where) : fallback;
}

}  // namespace detail

inline LevyModel model_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ModelError("model document must be a JSON object");
    if (!doc.contains("model") || !doc.at("model").is_string())
        throw ModelError("model document needs a string 'model' field");
    const auto kind = doc.at("model").get<std::string>();
    if (kind == "brownian") {
        detail::reject_unknown_keys(doc, {"model", "sigma", "drift"}, kind);
        return LevyModel::brownian(detail::number(doc, "sigma", kind),
                                   detail::number_or(doc, "drift", 0.0, kind));
    }
    if (kind == "stable") {
        detail::reject_unknown_keys(doc, {"model", "alpha", "cplus", "cminus", "c", "beta"}, kind);
        const double alpha = detail::number(doc, "alpha", kind);
        const bool intensities = doc.contains("cplus") || doc.contains("cminus");
        const bool scale = doc.contains("c") || doc.contains("beta");
        if (intensities && scale)
            throw ModelError("stable: give either (cplus, cminus) or (c, beta), not both");
        if (intensities)
            return LevyModel::stable_from_intensities(alpha, detail::number(doc, "cplus", kind),
                                                      detail::number(doc, "cminus", kind));
        return LevyModel::stable(alpha, detail::number(doc, "c", kind),
                                 detail::number_or(doc, "beta", 0.0, kind));
    }
    if (kind == "brownian_jumps") {
        detail::reject_unknown_keys(doc, {"model", "sigma", "drift", "atoms"}, kind);
        std::vector<JumpAtom> atoms;
        if (doc.contains("atoms")) {
            if (!doc.at("atoms").is_array()) throw ModelError("brownian_jumps: 'atoms' must be an array");
            for (const auto& a : doc.at("atoms")) {
                if (!a.is_object()) throw ModelError("brownian_jumps: atoms must be objects");
                detail::reject_unknown_keys(a, {"size", "rate"}, "atom");
                atoms.push_back({detail::number(a, "size", "atom"), detail::number(a, "rate", "atom")});
            }
        }
        return LevyModel::brownian_jumps(detail::number(doc, "sigma", kind),
                                         detail::number_or(doc, "drift", 0.0, kind), std::move(atoms));
    }
    throw ModelError("unknown model family '" + kind + "'");
}

inline LevyModel model_from_string(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError(std::string("model document is not valid JSON: ") + e.what());
    }
    return model_from_json(doc);
}

inline LevyModel model_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file '" + path + "'");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return model_from_string(text);
}

inline nlohmann::json model_to_json(const LevyModel& model) {
    return std::visit([](const auto& p) -> nlohmann::json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, BrownianParams>) {
            return {{"model", "brownian"}, {"sigma", p.sigma}, {"drift", p.drift}};
        } else if constexpr (std::is_same_v<P, StableParams>) {
            return {{"model", "stable"}, {"alpha", p.alpha}, {"c", p.c}, {"beta", p.beta}};
        } else {
            nlohmann::json atoms = nlohmann::json::array();
            for (const auto& a : p.atoms) atoms.push_back({{"size", a.size}, {"rate", a.rate}});
            return {{"model", "brownian_jumps"}, {"sigma", p.sigma}, {"drift", p.drift}, {"atoms", atoms}};
        }
    }, model.params());
}

}  // namespace levyh
