#pragma once

// Supported Levy process families and their characteristic exponents.
//
// Sign convention: E[exp(i*lambda*X_t)] = exp(-t*psi(lambda)). With the
// Levy-Khintchine triplet (a, sigma, pi) this reads
//   psi(l) = i*a*l + sigma^2 l^2 / 2 + int (1 - e^{ilx} + ilx 1{|x|<1}) pi(dx).
// User-facing drifts are physical (mean displacement per unit time), so for
// Brownian motion a = -drift.

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace levyh {

using cplx = std::complex<double>;

class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct BrownianParams {
    double sigma = 1.0;
    double drift = 0.0;
};

/// Strictly alpha-stable law, psi(l) = c|l|^alpha (1 - i beta sgn(l) tan(alpha pi / 2)).
struct StableParams {
    double alpha = 1.5;
    double c = 1.0;
    double beta = 0.0;
};

struct JumpAtom {
    double size = 0.0;
    double rate = 0.0;
};

/// Brownian motion plus a finite-activity compound Poisson part.
/// `sigma` may only be zero for models built through
/// LevyModel::unchecked_compound_poisson.
struct BrownianJumpsParams {
    double sigma = 1.0;
    double drift = 0.0;
    std::vector<JumpAtom> atoms;
};

enum class RecurrenceClass { Recurrent, Transient, Unknown };

inline const char* to_string(RecurrenceClass r) {
    switch (r) {
    case RecurrenceClass::Recurrent: return "recurrent";
    case RecurrenceClass::Transient: return "transient";
    case RecurrenceClass::Unknown: return "unknown";
    }
    return "unknown";
}

class LevyModel {
public:
    using Params = std::variant<BrownianParams, StableParams, BrownianJumpsParams>;

    static LevyModel brownian(double sigma, double drift = 0.0) {
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw ModelError("brownian: sigma must be > 0");
        if (!std::isfinite(drift))
            throw ModelError("brownian: drift must be finite");
        return LevyModel(BrownianParams{sigma, drift});
    }

    /// Stable law from Levy-measure intensities c+ x^{-1-alpha} dx on x > 0 and
    /// c- |x|^{-1-alpha} dx on x < 0.
    static LevyModel stable_from_intensities(double alpha, double cplus, double cminus) {
        if (!(alpha > 1.0 && alpha < 2.0))
            throw ModelError("stable: intensity form requires alpha in (1,2); use (c, beta) for alpha = 2");
        if (!(cplus >= 0.0) || !(cminus >= 0.0) || !(cplus + cminus > 0.0))
            throw ModelError("stable: cplus, cminus must be >= 0 with cplus + cminus > 0");
        const double c = -(cplus + cminus) * boost::math::tgamma(2.0 - alpha)
            * std::cos(alpha * std::numbers::pi / 2.0) / (alpha * (alpha - 1.0));
        const double beta = (cplus - cminus) / (cplus + cminus);
        return stable(alpha, c, beta);
    }

    static LevyModel stable(double alpha, double c, double beta) {
        // H.1 and H.2 hold for stable laws exactly when alpha is in (1,2].
        if (!(alpha > 1.0 && alpha <= 2.0))
            throw ModelError("stable: alpha must lie in (1,2]");
        if (!(c > 0.0) || !std::isfinite(c))
            throw ModelError("stable: scale c must be > 0");
        if (!(std::abs(beta) <= 1.0))
            throw ModelError("stable: skewness beta must lie in [-1,1]");
        return LevyModel(StableParams{alpha, c, beta});
    }

    static LevyModel brownian_jumps(double sigma, double drift, std::vector<JumpAtom> atoms) {
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw ModelError("brownian_jumps: sigma must be > 0");
        validate_atoms(atoms);
        if (!std::isfinite(drift))
            throw ModelError("brownian_jumps: drift must be finite");
        return LevyModel(BrownianJumpsParams{sigma, drift, std::move(atoms)});
    }

    /// Pure compound Poisson process (sigma = 0). Violates H.2; exists only so
    /// the regularity check can be exercised on a failing model.
    static LevyModel unchecked_compound_poisson(double drift, std::vector<JumpAtom> atoms) {
        validate_atoms(atoms);
        return LevyModel(BrownianJumpsParams{0.0, drift, std::move(atoms)});
    }

    const Params& params() const noexcept { return params_; }
    bool is_brownian() const noexcept { return std::holds_alternative<BrownianParams>(params_); }
    bool is_stable() const noexcept { return std::holds_alternative<StableParams>(params_); }
    bool is_brownian_jumps() const noexcept { return std::holds_alternative<BrownianJumpsParams>(params_); }

    std::string family() const {
        return std::visit([](const auto& p) -> std::string {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, BrownianParams>) return "brownian";
            else if constexpr (std::is_same_v<P, StableParams>) return "stable";
            else return "brownian_jumps";
        }, params_);
    }

    /// Gaussian coefficient (0 for stable laws with alpha < 2).
    double sigma() const {
        return std::visit([](const auto& p) -> double {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, StableParams>)
                return p.alpha == 2.0 ? std::sqrt(2.0 * p.c) : 0.0;
            else
                return p.sigma;
        }, params_);
    }

    bool symmetric() const {
        return std::visit([](const auto& p) -> bool {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, BrownianParams>) return p.drift == 0.0;
            else if constexpr (std::is_same_v<P, StableParams>) return p.beta == 0.0 || p.alpha == 2.0;
            else {
                if (p.drift != 0.0) return false;
                // symmetric iff the atom multiset is invariant under size -> -size
                for (const auto& a : p.atoms) {
                    double mirrored = 0.0, same = 0.0;
                    for (const auto& b : p.atoms) {
                        if (b.size == -a.size) mirrored += b.rate;
                        if (b.size == a.size) same += b.rate;
                    }
                    if (mirrored != same) return false;
                }
                return true;
            }
        }, params_);
    }

    /// Spectrally one-sided stable law: h vanishes on a half-line there.
    bool one_sided_stable() const {
        const auto* s = std::get_if<StableParams>(&params_);
        return s && s->alpha < 2.0 && std::abs(s->beta) == 1.0;
    }

    /// Law of -X.
    LevyModel dual() const {
        return std::visit([](const auto& p) -> LevyModel {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, BrownianParams>)
                return LevyModel(BrownianParams{p.sigma, -p.drift});
            else if constexpr (std::is_same_v<P, StableParams>)
                return LevyModel(StableParams{p.alpha, p.c, -p.beta});
            else {
                BrownianJumpsParams d{p.sigma, -p.drift, p.atoms};
                for (auto& a : d.atoms) a.size = -a.size;
                return LevyModel(std::move(d));
            }
        }, params_);
    }

    cplx psi(double lambda) const {
        return std::visit([lambda](const auto& p) -> cplx {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, BrownianParams>) {
                return {0.5 * p.sigma * p.sigma * lambda * lambda, -p.drift * lambda};
            } else if constexpr (std::is_same_v<P, StableParams>) {
                if (lambda == 0.0) return {0.0, 0.0};
                const double mag = p.c * std::pow(std::abs(lambda), p.alpha);
                const double skew = p.alpha == 2.0 ? 0.0
                    : p.beta * std::tan(p.alpha * std::numbers::pi / 2.0);
                return {mag, -mag * skew * (lambda > 0.0 ? 1.0 : -1.0)};
            } else {
                double re = 0.5 * p.sigma * p.sigma * lambda * lambda;
                double im = -p.drift * lambda;
                for (const auto& a : p.atoms) {
                    // rate * (1 - e^{i l s}), with 1 - cos written as 2 sin^2 for small l
                    const double half = std::sin(0.5 * lambda * a.size);
                    re += a.rate * 2.0 * half * half;
                    im -= a.rate * std::sin(lambda * a.size);
                }
                return {re, im};
            }
        }, params_);
    }

    /// E[X_1] when finite (stable laws with alpha > 1 have mean zero).
    double mean() const {
        return std::visit([](const auto& p) -> double {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, BrownianParams>) return p.drift;
            else if constexpr (std::is_same_v<P, StableParams>) return 0.0;
            else {
                double m = p.drift;
                for (const auto& a : p.atoms) m += a.rate * a.size;
                return m;
            }
        }, params_);
    }

    /// Bound on |psi(l)| / |l| near the origin for finite-mean jump models;
    /// used to locate the scale at which q + psi changes character.
    double linear_scale() const {
        return std::visit([](const auto& p) -> double {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, BrownianParams>) return std::abs(p.drift) + p.sigma;
            else if constexpr (std::is_same_v<P, StableParams>) return p.c;
            else {
                double s = std::abs(p.drift) + p.sigma;
                for (const auto& a : p.atoms) s += a.rate * std::abs(a.size);
                return s;
            }
        }, params_);
    }

    /// Distances from the real axis to the zeros of q + psi(lambda) in the
    /// lower and upper half-planes, for exponents whose continuation is a
    /// quadratic polynomial (Brownian motion, alpha = 2). Empty otherwise.
    std::optional<std::pair<double, double>> resolvent_pole_distances(double q) const {
        if (const auto* b = std::get_if<BrownianParams>(&params_)) {
            // q + s^2 l^2 / 2 - i mu l = 0  =>  l = i (mu +- R) / s^2
            const double s2 = b->sigma * b->sigma;
            const double root = std::sqrt(b->drift * b->drift + 2.0 * q * s2);
            return std::pair{(root - b->drift) / s2, (root + b->drift) / s2};
        }
        if (const auto* s = std::get_if<StableParams>(&params_); s && s->alpha == 2.0) {
            const double d = std::sqrt(q / s->c);
            return std::pair{d, d};
        }
        return std::nullopt;
    }

    /// True when psi continues analytically from (0, inf) into Re(l) > 0 with
    /// |psi| -> inf there; see psi_right_half.
    bool continues_right() const { return !std::holds_alternative<BrownianJumpsParams>(params_); }

    /// Continuation of psi from (0, inf) into Re(l) > 0: the polynomial for
    /// Brownian motion, c (1 - i beta tan(alpha pi/2)) l^alpha (principal
    /// branch) for stable laws.
    cplx psi_right_half(cplx lambda) const {
        if (const auto* b = std::get_if<BrownianParams>(&params_))
            return 0.5 * b->sigma * b->sigma * lambda * lambda - cplx(0.0, b->drift) * lambda;
        if (const auto* s = std::get_if<StableParams>(&params_)) {
            if (s->alpha == 2.0) return s->c * lambda * lambda;
            const cplx c_plus = s->c * cplx(1.0, -s->beta * std::tan(s->alpha * std::numbers::pi / 2.0));
            return c_plus * std::pow(lambda, s->alpha);
        }
        throw std::logic_error("psi_right_half: exponent has no continuation off the real axis");
    }

    /// Analytic continuation of psi; defined when resolvent_pole_distances is.
    cplx psi_continued(cplx lambda) const {
        if (const auto* b = std::get_if<BrownianParams>(&params_))
            return 0.5 * b->sigma * b->sigma * lambda * lambda - cplx(0.0, b->drift) * lambda;
        if (const auto* s = std::get_if<StableParams>(&params_); s && s->alpha == 2.0)
            return s->c * lambda * lambda;
        throw std::logic_error("psi_continued: exponent has no polynomial continuation");
    }

private:
    explicit LevyModel(Params p) : params_(std::move(p)) {}

    static void validate_atoms(const std::vector<JumpAtom>& atoms) {
        for (const auto& a : atoms) {
            if (!(a.size != 0.0) || !std::isfinite(a.size))
                throw ModelError("jump atom size must be finite and non-zero");
            if (!(a.rate > 0.0) || !std::isfinite(a.rate))
                throw ModelError("jump atom rate must be > 0");
        }
    }

    Params params_;
};

inline cplx eval_psi(const LevyModel& model, double lambda) { return model.psi(lambda); }

inline RecurrenceClass recurrence_class(const LevyModel& model) {
    return std::visit([](const auto& p) -> RecurrenceClass {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, BrownianParams>)
            return p.drift == 0.0 ? RecurrenceClass::Recurrent : RecurrenceClass::Transient;
        else if constexpr (std::is_same_v<P, StableParams>)
            return RecurrenceClass::Recurrent;
        else
            return RecurrenceClass::Unknown;  // the classifier abstains for jump models
    }, model.params());
}

// ---------------------------------------------------------------------------
// Closed forms

/// Resolvent density of Brownian motion with drift mu and volatility sigma:
///   u_q(x) = exp(mu x / sigma^2 - |x| sqrt(mu^2 + 2 q sigma^2) / sigma^2) / sqrt(mu^2 + 2 q sigma^2).
inline std::optional<double> closed_form_u_q(const LevyModel& model, double q, double x) {
    if (!(q > 0.0)) throw ModelError("closed_form_u_q: q must be > 0");
    const auto* b = std::get_if<BrownianParams>(&model.params());
    if (!b) return std::nullopt;
    const double s2 = b->sigma * b->sigma;
    const double root = std::sqrt(b->drift * b->drift + 2.0 * q * s2);
    return std::exp((b->drift * x - std::abs(x) * root) / s2) / root;
}

/// K(alpha) (1 - beta sgn x) |x|^{alpha-1} for stable laws; for Brownian motion
/// |x| / sigma^2 without drift and (1 - e^{-(mu x + |mu x|)/sigma^2}) / |mu| with.
inline std::optional<double> closed_form_h(const LevyModel& model, double x) {
    if (x == 0.0) return 0.0;
    return std::visit([x](const auto& p) -> std::optional<double> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, BrownianParams>) {
            const double s2 = p.sigma * p.sigma;
            if (p.drift == 0.0) return std::abs(x) / s2;
            const double m = std::abs(p.drift);
            return -std::expm1(-(p.drift * x + m * std::abs(x)) / s2) / m;
        } else if constexpr (std::is_same_v<P, StableParams>) {
            if (p.alpha == 2.0) return std::abs(x) / (2.0 * p.c);
            const double a = p.alpha;
            const double t = std::tan(a * std::numbers::pi / 2.0);
            const double k = boost::math::tgamma(2.0 - a) * std::sin(a * std::numbers::pi / 2.0)
                / (p.c * std::numbers::pi * (a - 1.0) * (1.0 + p.beta * p.beta * t * t));
            const double sgn = x > 0.0 ? 1.0 : -1.0;
            return k * (1.0 - p.beta * sgn) * std::pow(std::abs(x), a - 1.0);
        } else {
            return std::nullopt;
        }
    }, model.params());
}

}  // namespace levyh
