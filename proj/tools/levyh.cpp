// levyh: potential-theory tables and Monte Carlo checks for Levy processes
// conditioned to avoid zero.
//
// CSV goes to stdout (or --out), the human summary to stderr.
// Exit codes: 0 ok, 1 invalid input, 2 numerical failure, 3 Monte Carlo
// acceptance failure.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "levyh/format.hpp"
#include "levyh/identities.hpp"
#include "levyh/levy_model.hpp"
#include "levyh/model_io.hpp"
#include "levyh/montecarlo.hpp"
#include "levyh/potential.hpp"
#include "levyh/regularity.hpp"

using namespace levyh;

namespace {

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A quadrature failure at a named evaluation point.
struct PointFailure : std::runtime_error {
    PointFailure(const std::string& point, const QuadratureError& e)
        : std::runtime_error(std::string(e.what()) + " at " + point + " (best estimate "
                             + format_double(e.best_estimate()) + ", error bound "
                             + format_double(e.error_bound()) + ")") {}
};

double parse_number(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw UsageError("not a number: '" + s + "'");
    }
    if (used != s.size()) throw UsageError("not a number: '" + s + "'");
    return v;
}

/// Comma-separated items, each a number or an inclusive range a:b:step.
std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw UsageError("empty grid item in '" + text + "'");
        const auto c1 = item.find(':');
        if (c1 == std::string::npos) {
            out.push_back(parse_number(item));
            continue;
        }
        const auto c2 = item.find(':', c1 + 1);
        if (c2 == std::string::npos) throw UsageError("grid range must be a:b:step, got '" + item + "'");
        const double a = parse_number(item.substr(0, c1));
        const double b = parse_number(item.substr(c1 + 1, c2 - c1 - 1));
        const double step = parse_number(item.substr(c2 + 1));
        if (!(step > 0.0)) throw UsageError("grid step must be > 0 in '" + item + "'");
        if (b < a) throw UsageError("grid range end precedes start in '" + item + "'");
        const auto count = static_cast<long>(std::floor((b - a) / step + 0.5));
        for (long k = 0; k <= count; ++k) {
            const double v = a + static_cast<double>(k) * step;
            // snap values that are zero up to rounding
            out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
        }
    }
    if (out.empty()) throw UsageError("grid '" + text + "' is empty");
    return out;
}

struct Options {
    std::string model_path;
    std::string model_text;
    std::string config_path;
    std::string out_path;
    std::string q_text;
    std::string x_text;
    std::string y_text;
    std::string lambda_text;
    unsigned threads = default_threads();
    // quadrature overrides
    std::optional<double> lambda_max, rel_tol, abs_tol;
    std::optional<std::size_t> max_panels;
    std::optional<int> tail_doublings;
    // Monte Carlo
    std::size_t n = 100000;
    double dt = 1e-3;
    double eps = 1e-3;
    double t = 1.0;
    std::optional<std::uint64_t> seed;
    int bins = 40;
    std::size_t paths = 0;
    bool density = false;
    bool conditioned = false;
    double tol_abs = 0.0;
    double tol_rel = 0.0;
};

/// Fills unset options from a run-config document; explicit flags win.
void apply_config(Options& o, const CLI::App& sub) {
    if (o.config_path.empty()) return;
    std::ifstream in(o.config_path);
    if (!in) throw UsageError("cannot open config " + o.config_path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config " + o.config_path + ": " + e.what());
    }
    static const std::set<std::string> keys{"model", "quadrature", "q", "x", "y", "lambda", "n",
                                            "dt", "eps", "t", "seed", "threads", "out", "bins"};
    for (const auto& [k, v] : doc.items())
        if (!keys.count(k)) throw UsageError("config: unknown key '" + k + "'");
    auto unset = [&](const char* flag) { return sub.count(flag) == 0; };
    auto grid_text = [](const nlohmann::json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number()) return format_double(v.get<double>());
        if (v.is_array()) {
            std::string s;
            for (const auto& e : v) {
                if (!s.empty()) s += ',';
                s += e.is_string() ? e.get<std::string>() : format_double(e.get<double>());
            }
            return s;
        }
        throw UsageError("config: grids must be strings, numbers or arrays");
    };
    try {
        if (doc.contains("model") && unset("--model") && unset("--model-json")) {
            if (doc["model"].is_string()) o.model_path = doc["model"].get<std::string>();
            else o.model_text = doc["model"].dump();
        }
        if (doc.contains("quadrature")) {
            const auto& qd = doc["quadrature"];
            for (const auto& [k, v] : qd.items()) {
                if (k == "lambda_max" && unset("--lambda-max")) o.lambda_max = v.get<double>();
                else if (k == "rel_tol" && unset("--rel-tol")) o.rel_tol = v.get<double>();
                else if (k == "abs_tol" && unset("--abs-tol")) o.abs_tol = v.get<double>();
                else if (k == "max_panels" && unset("--max-panels")) o.max_panels = v.get<std::size_t>();
                else if (k == "tail_doublings" && unset("--tail-doublings")) o.tail_doublings = v.get<int>();
                else if (k != "lambda_max" && k != "rel_tol" && k != "abs_tol" && k != "max_panels"
                         && k != "tail_doublings")
                    throw UsageError("config: unknown quadrature key '" + k + "'");
            }
        }
        if (doc.contains("q") && unset("--q")) o.q_text = grid_text(doc["q"]);
        if (doc.contains("x") && unset("--x")) o.x_text = grid_text(doc["x"]);
        if (doc.contains("y") && unset("--y")) o.y_text = grid_text(doc["y"]);
        if (doc.contains("lambda") && unset("--lambda")) o.lambda_text = grid_text(doc["lambda"]);
        if (doc.contains("n") && unset("--n")) o.n = doc["n"].get<std::size_t>();
        if (doc.contains("dt") && unset("--dt")) o.dt = doc["dt"].get<double>();
        if (doc.contains("eps") && unset("--eps")) o.eps = doc["eps"].get<double>();
        if (doc.contains("t") && unset("--t")) o.t = doc["t"].get<double>();
        if (doc.contains("seed") && unset("--seed")) o.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("threads") && unset("--threads")) o.threads = doc["threads"].get<unsigned>();
        if (doc.contains("bins") && unset("--bins")) o.bins = doc["bins"].get<int>();
        if (doc.contains("out") && unset("--out")) o.out_path = doc["out"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
}

LevyModel load_model(const Options& o) {
    if (!o.model_text.empty()) return model_from_string(o.model_text);
    if (o.model_path.empty()) throw UsageError("a model is required (--model FILE or --model-json TEXT)");
    return model_from_file(o.model_path);
}

QuadratureConfig quadrature(const Options& o) {
    QuadratureConfig c;
    if (o.lambda_max) c.lambda_max = *o.lambda_max;
    if (o.rel_tol) c.rel_tol = *o.rel_tol;
    if (o.abs_tol) c.abs_tol = *o.abs_tol;
    if (o.max_panels) c.max_panels = *o.max_panels;
    if (o.tail_doublings) c.tail_doublings = *o.tail_doublings;
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return c;
}

std::vector<double> grid(const std::string& text, const char* flag) {
    if (text.empty()) throw UsageError(std::string("missing grid ") + flag);
    return parse_grid(text);
}

std::uint64_t require_seed(const Options& o) {
    if (!o.seed) throw UsageError("Monte Carlo commands require --seed");
    return *o.seed;
}

template <class F>
double at(const std::string& point, F&& f) {
    try {
        return f();
    } catch (const QuadratureError& e) {
        throw PointFailure(point, e);
    }
}

std::string pt(std::initializer_list<std::pair<const char*, double>> kv) {
    std::string s;
    for (const auto& [k, v] : kv) {
        if (!s.empty()) s += ' ';
        s += k;
        s += '=';
        s += format_double(v);
    }
    return s;
}

/// Rows are computed in parallel into slots, then written in order.
template <class Row>
std::vector<std::string> rows(std::size_t n, unsigned threads, Row&& row) {
    std::vector<std::string> out(n);
    parallel_for(n, threads, [&](std::size_t i) { out[i] = row(i); });
    return out;
}

int run(const std::string& cmd, Options& o, std::ostream& out) {
    const auto model = load_model(o);
    const auto cfg = quadrature(o);
    std::cerr << "model: " << model_to_json(model).dump() << '\n';
    const std::string model_name = model.family();

    if (cmd == "psi") {
        const auto lam = grid(o.lambda_text, "--lambda");
        out << "lambda,re_psi,im_psi\n";
        for (double l : lam) {
            const cplx v = model.psi(l);
            out << format_double(l) << ',' << format_double(v.real()) << ',' << format_double(v.imag()) << '\n';
        }
        return 0;
    }

    if (cmd == "regularity") {
        const auto qs = o.q_text.empty() ? std::vector<double>{1.0} : grid(o.q_text, "--q");
        out << "q,kesten_integral,tail_exponent,integral_converged,sigma_positive,infinite_variation_jumps,"
               "verdict\n";
        for (double q : qs) {
            if (!(q > 0.0)) throw UsageError("q must be > 0");
            const auto r = check_regularity(model, q, cfg);
            out << format_double(q) << ',' << format_double(r.kesten_integral) << ','
                << format_double(r.tail_exponent) << ',' << (r.integral_converged ? "true" : "false") << ','
                << (r.sigma_positive ? "true" : "false") << ',' << (r.infinite_variation_jumps ? "true" : "false")
                << ',' << to_string(r.verdict) << '\n';
            std::cerr << "q=" << format_double(q) << ": " << to_string(r.verdict) << " (" << r.diagnostics << ")\n";
        }
        return 0;
    }

    PotentialEvaluator ev(model, cfg);

    if (cmd == "resolvent" || cmd == "hitting") {
        const auto qs = grid(o.q_text, "--q");
        const auto xs = grid(o.x_text, "--x");
        for (double q : qs)
            if (!(q > 0.0)) throw UsageError("q must be > 0");
        const bool closed = cmd == "resolvent" && closed_form_u_q(model, qs.front(), 0.0).has_value();
        out << (cmd == "resolvent" ? (closed ? "q,x,u_q,closed_form,abs_err\n" : "q,x,u_q\n")
                                   : "q,x,laplace\n");
        const auto lines = rows(qs.size() * xs.size(), o.threads, [&](std::size_t k) {
            const double q = qs[k / xs.size()];
            const double x = xs[k % xs.size()];
            const double v = at(pt({{"q", q}, {"x", x}}),
                                [&] { return cmd == "resolvent" ? ev.u_q(q, x) : ev.hitting_laplace(q, x); });
            std::string line = format_double(q) + ',' + format_double(x) + ',' + format_double(v);
            if (closed) {
                const double c = *closed_form_u_q(model, q, x);
                line += ',' + format_double(c) + ',' + format_double(std::abs(v - c));
            }
            return line;
        });
        for (const auto& l : lines) out << l << '\n';
        return 0;
    }

    if (cmd == "h" || cmd == "hstar") {
        const auto xs = grid(o.x_text, "--x");
        const bool with_q = !o.q_text.empty();
        const auto qs = with_q ? grid(o.q_text, "--q") : std::vector<double>{0.0};
        for (double q : qs)
            if (with_q && !(q > 0.0)) throw UsageError("q must be > 0");
        const bool closed = cmd == "h" && !with_q && closed_form_h(model, 1.0).has_value();
        const std::string name = cmd == "h" ? (with_q ? "h_q" : "h") : (with_q ? "h_q_star" : "h_star");
        out << (with_q ? "q,x," : "x,") << name << (closed ? ",closed_form,abs_err\n" : "\n");
        if (cmd == "hstar" && !with_q) {
            try {
                std::cerr << "kappa = " << format_double(ev.kappa()) << " (" << to_string(ev.kappa_method())
                          << ")\n";
            } catch (const KappaError& e) {
                std::cerr << e.what() << '\n';
                return 2;
            }
        }
        const auto lines = rows(qs.size() * xs.size(), o.threads, [&](std::size_t k) {
            const double q = qs[k / xs.size()];
            const double x = xs[k % xs.size()];
            const double v = at(with_q ? pt({{"q", q}, {"x", x}}) : pt({{"x", x}}), [&] {
                if (cmd == "h") return with_q ? ev.h_q(q, x) : ev.h(x);
                return with_q ? ev.h_q_star(q, x) : ev.h_star(x);
            });
            std::string line = (with_q ? format_double(q) + ',' : std::string()) + format_double(x) + ','
                + format_double(v);
            if (closed) {
                const double c = *closed_form_h(model, x);
                line += ',' + format_double(c) + ',' + format_double(std::abs(v - c));
            }
            return line;
        });
        for (const auto& l : lines) out << l << '\n';
        return 0;
    }

    if (cmd == "killed") {
        const auto qs = grid(o.q_text, "--q");
        const auto xs = grid(o.x_text, "--x");
        const auto ys = grid(o.y_text, "--y");
        for (double q : qs)
            if (!(q > 0.0)) throw UsageError("q must be > 0");
        out << (o.conditioned ? "q,x,y,killed,conditioned\n" : "q,x,y,killed\n");
        const std::size_t per_q = xs.size() * ys.size();
        const auto lines = rows(qs.size() * per_q, o.threads, [&](std::size_t k) {
            const double q = qs[k / per_q];
            const double x = xs[(k % per_q) / ys.size()];
            const double y = ys[k % ys.size()];
            const auto where = pt({{"q", q}, {"x", x}, {"y", y}});
            std::string line = format_double(q) + ',' + format_double(x) + ',' + format_double(y) + ','
                + format_double(at(where, [&] { return ev.killed_resolvent(q, x, y); }));
            if (o.conditioned) line += ',' + format_double(at(where, [&] { return ev.conditioned_resolvent(q, x, y); }));
            return line;
        });
        for (const auto& l : lines) out << l << '\n';
        return 0;
    }

    if (cmd == "green") {
        const auto xs = grid(o.x_text, "--x");
        const auto ys = grid(o.y_text, "--y");
        try {
            std::cerr << "kappa = " << format_double(ev.kappa()) << " (" << to_string(ev.kappa_method()) << ")\n";
        } catch (const KappaError& e) {
            std::cerr << e.what() << '\n';
            return 2;
        }
        out << "x,y,green\n";
        const auto lines = rows(xs.size() * ys.size(), o.threads, [&](std::size_t k) {
            const double x = xs[k / ys.size()];
            const double y = ys[k % ys.size()];
            return format_double(x) + ',' + format_double(y) + ','
                + format_double(at(pt({{"x", x}, {"y", y}}), [&] { return ev.conditioned_green(x, y); }));
        });
        for (const auto& l : lines) out << l << '\n';
        return 0;
    }

    if (cmd == "verify") {
        const auto qs = grid(o.q_text, "--q");
        const auto xs = grid(o.x_text, "--x");
        if (o.tol_abs > 0.0 && o.tol_rel > 0.0) throw UsageError("give one of --tol-abs, --tol-rel");
        const auto tol = o.tol_rel > 0.0 ? IdentityTolerance::relative(o.tol_rel)
                                         : IdentityTolerance::absolute(o.tol_abs > 0.0 ? o.tol_abs : 1e-6);
        const auto reports = verify_identities(ev, qs, xs, tol, o.threads);
        write_identity_csv(out, reports);
        bool ok = true;
        for (const auto& r : reports) {
            std::cerr << to_string(r.identity) << ": " << (r.pass ? "pass" : "FAIL")
                      << " max_abs_err=" << format_double(r.max_abs_err)
                      << " max_rel_err=" << format_double(r.max_rel_err) << '\n';
            for (const auto& p : r.points)
                if (!p.pass)
                    std::cerr << "  " << (p.skipped ? "skipped " : "failed ") << p.label
                              << (p.note.empty() ? "" : " (" + p.note + ")") << '\n';
            ok = ok && r.pass;
        }
        return ok ? 0 : 2;
    }

    SimulationOptions sim{o.eps, o.threads};
    const std::uint64_t seed = require_seed(o);
    const auto xs = grid(o.x_text, "--x");

    if (cmd == "simulate") {
        if (o.paths > 0) {
            out << "x0,path,step,time,value,hit\n";
            for (double x : xs)
                for (std::size_t p = 0; p < o.paths; ++p) {
                    const auto ps = sample_path(model, x, o.t, o.dt, stream_seed(seed, 0, p), o.eps);
                    for (std::size_t k = 0; k < ps.values.size(); ++k)
                        out << format_double(x) << ',' << p << ',' << k << ','
                            << format_double(std::min(o.t, static_cast<double>(k) * o.dt)) << ','
                            << format_double(ps.values[k]) << ','
                            << (ps.hit_index && *ps.hit_index <= k ? "true" : "false") << '\n';
                }
            return 0;
        }
        std::vector<EstimatorRow> table;
        for (double x : xs) {
            const auto e = survival_probability(model, x, o.t, o.dt, o.n, seed, sim);
            table.push_back({"survival_probability", model_name,
                             detail::label({{"x", x}, {"t", o.t}, {"dt", o.dt}, {"eps", o.eps}, {"seed", double(seed)}}),
                             e, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()});
            std::cerr << "P_x(T_0 > t) at x=" << format_double(x) << ": " << format_double(e.mean) << " +- "
                      << format_double(e.std_err) << '\n';
        }
        write_estimator_csv(out, table);
        return 0;
    }

    if (cmd == "invariance") {
        std::vector<EstimatorRow> table;
        for (double x : xs) {
            const auto r = invariance_check(model, ev, x, o.t, o.dt, o.n, seed, sim);
            table.push_back({"invariance_check", model_name,
                             detail::label({{"x", x}, {"t", o.t}, {"dt", o.dt}, {"eps", o.eps}, {"seed", double(seed)}}),
                             r.estimate, r.target, r.z});
            std::cerr << "E_x[h(X_t); t<T_0] at x=" << format_double(x) << ": " << format_double(r.estimate.mean)
                      << " +- " << format_double(r.estimate.std_err) << ", h(x)=" << format_double(r.target)
                      << ", z=" << format_double(r.z) << '\n';
        }
        write_estimator_csv(out, table);
        return 0;
    }

    if (cmd == "condition") {
        if (o.density) {
            out << "x,bin_lo,bin_hi,density,stderr,reference,z\n";
            for (double x : xs) {
                const auto r = conditioned_density_check(model, ev, x, o.t, o.bins, o.dt, o.n, seed, sim);
                for (const auto& b : r.bins)
                    out << format_double(x) << ',' << format_double(b.lo) << ',' << format_double(b.hi) << ','
                        << format_double(b.density) << ',' << format_double(b.std_err) << ','
                        << (b.reference ? format_double(*b.reference) : "") << ','
                        << (b.reference ? format_double(b.z) : "") << '\n';
                std::cerr << "x=" << format_double(x) << ": mass " << format_double(r.mass.mean) << " +- "
                          << format_double(r.mass.std_err);
                if (r.has_reference)
                    std::cerr << ", chi2=" << format_double(r.chi_square) << " dof=" << r.dof
                              << " p=" << format_double(r.p_value);
                std::cerr << '\n';
            }
            return 0;
        }
        const auto qs = grid(o.q_text, "--q");
        out << "x,q,t,functional,rejection,rejection_stderr,transform,transform_stderr,z\n";
        for (double x : xs)
            for (double q : qs) {
                const auto r = conditioned_consistency(model, ev, x, q, o.t, o.dt, o.n, seed, sim);
                for (const auto& row : r.rows)
                    out << format_double(x) << ',' << format_double(q) << ',' << format_double(o.t) << ','
                        << csv_field(row.name) << ',' << format_double(row.rejection.mean) << ','
                        << format_double(row.rejection.std_err) << ',' << format_double(row.transform.mean) << ','
                        << format_double(row.transform.std_err) << ',' << format_double(row.z) << '\n';
                std::cerr << "x=" << format_double(x) << " q=" << format_double(q) << ": acceptance "
                          << format_double(r.acceptance_rate) << ", max |z| " << format_double(r.max_abs_z())
                          << '\n';
            }
        return 0;
    }

    throw UsageError("unknown command " + cmd);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Potential theory and Monte Carlo checks for Levy processes conditioned to avoid zero"};
    app.require_subcommand(1);
    Options o;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"psi", "characteristic exponent on a lambda grid"},
        {"regularity", "check that 0 is regular for itself"},
        {"resolvent", "resolvent density u_q(x)"},
        {"h", "invariant function h(x), or h_q(x) with --q"},
        {"hstar", "h*(x), or h_q*(x) with --q"},
        {"hitting", "E_x[exp(-q T_0)]"},
        {"killed", "killed resolvent density u_q^0(x,y)"},
        {"green", "Green density of the conditioned process"},
        {"verify", "resolvent / h identity suite"},
        {"simulate", "survival probability P_x(T_0 > t), or sample paths with --paths"},
        {"invariance", "Monte Carlo check of E_x[h(X_t); t < T_0] = h(x)"},
        {"condition", "rejection vs h_q-transform estimators, or the conditioned density with --density"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--model", o.model_path, "model JSON file");
        sub->add_option("--model-json", o.model_text, "model JSON document");
        sub->add_option("--config", o.config_path, "run config JSON");
        sub->add_option("--out", o.out_path, "write CSV here instead of stdout");
        sub->add_option("--threads", o.threads, "worker threads (default LEVYH_THREADS)");
        sub->add_option("--lambda-max", o.lambda_max);
        sub->add_option("--rel-tol", o.rel_tol);
        sub->add_option("--abs-tol", o.abs_tol);
        sub->add_option("--max-panels", o.max_panels);
        sub->add_option("--tail-doublings", o.tail_doublings);
        if (name == "psi") sub->add_option("--lambda", o.lambda_text, "lambda grid");
        if (name != "psi") {
            sub->add_option("--q", o.q_text, "q grid");
            sub->add_option("--x", o.x_text, "x grid: numbers and a:b:step ranges, comma separated");
        }
        if (name == "killed" || name == "green") sub->add_option("--y", o.y_text, "y grid");
        if (name == "killed") sub->add_flag("--conditioned", o.conditioned, "add the conditioned resolvent");
        if (name == "verify") {
            sub->add_option("--tol-abs", o.tol_abs, "absolute tolerance (default 1e-6)");
            sub->add_option("--tol-rel", o.tol_rel, "relative tolerance");
        }
        if (name == "simulate" || name == "invariance" || name == "condition") {
            sub->add_option("--n", o.n, "number of paths");
            sub->add_option("--dt", o.dt, "time step");
            sub->add_option("--eps", o.eps, "zero threshold for stable paths");
            sub->add_option("--t", o.t, "time horizon");
            sub->add_option("--seed", o.seed, "master seed");
        }
        if (name == "simulate") sub->add_option("--paths", o.paths, "emit this many sample paths per x");
        if (name == "condition") {
            sub->add_flag("--density", o.density, "h-weighted histogram against the reference density");
            sub->add_option("--bins", o.bins, "histogram bins");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    CLI::App* sub = app.get_subcommands().front();
    try {
        apply_config(o, *sub);
        if (o.threads == 0) throw UsageError("--threads must be > 0");
        if (o.out_path.empty()) return run(sub->get_name(), o, std::cout);
        std::ofstream file(o.out_path);
        if (!file) throw UsageError("cannot write " + o.out_path);
        const int code = run(sub->get_name(), o, file);
        file.flush();
        if (!file) {
            std::cerr << "error: writing " << o.out_path << " failed\n";
            return 1;
        }
        return code;
    } catch (const AcceptanceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const PointFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const QuadratureError& e) {
        std::cerr << "numerical failure: " << e.what() << " (best estimate " << format_double(e.best_estimate())
                  << ", error bound " << format_double(e.error_bound()) << ")\n";
        return 2;
    } catch (const KappaError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
