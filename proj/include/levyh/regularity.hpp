#pragma once

// Numerical proxy for hypotheses H.1/H.2: the integral of Re(1/(q + psi))
// over R must be finite and the process must not be compound Poisson.
// Finiteness cannot be decided numerically; the proxy is "the tail of the
// integral extrapolates to a finite value AND the fitted decay exponent of
// Re(1/(q + psi)) over the last decade is below -1".

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "levyh/levy_model.hpp"
#include "levyh/quadrature.hpp"

namespace levyh {

enum class Verdict { Pass, Fail, Inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

struct RegularityReport {
    double q = 0.0;
    double kesten_integral = std::numeric_limits<double>::infinity();
    double tail_exponent = 0.0;
    bool integral_converged = false;
    bool sigma_positive = false;
    bool infinite_variation_jumps = false;
    bool passes = false;
    Verdict verdict = Verdict::Inconclusive;
    std::string diagnostics;
};

namespace detail {

/// Least-squares slope of log Re(1/(q+psi)) against log lambda on [lo, hi].
inline double tail_exponent(const LevyModel& model, double q, double lo, double hi) {
    constexpr int n = 41;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int used = 0;
    for (int i = 0; i < n; ++i) {
        const double lam = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
        const double v = (1.0 / (q + model.psi(lam))).real();
        if (!(v > 0.0)) continue;
        const double x = std::log(lam);
        const double y = std::log(v);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++used;
    }
    if (used < 2) return 0.0;
    return (used * sxy - sx * sy) / (used * sxx - sx * sx);
}

inline bool infinite_variation_jumps(const LevyModel& model) {
    // int_{|x|<1} |x| pi(dx) diverges for stable jumps with alpha >= 1
    if (const auto* s = std::get_if<StableParams>(&model.params())) return s->alpha < 2.0;
    return false;
}

}  // namespace detail

inline RegularityReport check_regularity(const LevyModel& model, double q, const QuadratureConfig& cfg = {}) {
    if (!(q > 0.0)) throw std::invalid_argument("check_regularity: q must be > 0");
    cfg.validate();
    RegularityReport rep;
    rep.q = q;
    rep.sigma_positive = model.sigma() > 0.0;
    rep.infinite_variation_jumps = detail::infinite_variation_jumps(model);
    std::ostringstream diag;

    auto re = [&](double lam) { return (1.0 / (q + model.psi(lam))).real(); };
    try {
        quad::LogScaleOptions in;
        in.start = 1.0;
        in.direction = quad::Direction::Inward;
        in.min_reach = 1e-3 * std::min(q, 1.0) / (1.0 + model.linear_scale());
        in.max_chunks = 200;
        quad::LogScaleOptions out;
        out.start = 1.0;
        out.min_reach = cfg.lambda_max;
        out.chunk = std::numbers::ln2;
        out.max_chunks = static_cast<int>(std::ceil(std::log2(cfg.lambda_max))) + cfg.tail_doublings;
        const auto lo = quad::log_scale(re, in, cfg);
        const auto hi = quad::log_scale(re, out, cfg);
        rep.kesten_integral = 2.0 * (lo.value + hi.value);
        rep.integral_converged = true;
    } catch (const QuadratureError& e) {
        rep.kesten_integral = std::numeric_limits<double>::infinity();
        diag << "integral did not converge within " << cfg.tail_doublings
             << " truncation doublings past " << cfg.lambda_max << " (partial value "
             << 2.0 * e.best_estimate() << "); ";
    }
    rep.tail_exponent = detail::tail_exponent(model, q, cfg.lambda_max / 10.0, cfg.lambda_max);
    diag << "tail exponent " << rep.tail_exponent << " on [" << cfg.lambda_max / 10.0 << ", "
         << cfg.lambda_max << "]; ";

    const bool numeric_finite = rep.integral_converged && rep.tail_exponent < -1.0;
    const bool structural = rep.sigma_positive || rep.infinite_variation_jumps;
    if (!structural) {
        rep.verdict = Verdict::Fail;
        diag << "no Gaussian part and finite-variation jumps: compound Poisson excluded";
    } else if (numeric_finite) {
        rep.verdict = Verdict::Pass;
        diag << "integral finite";
    } else {
        rep.verdict = Verdict::Inconclusive;
        diag << "structure admits regularity but the numerical test did not confirm a finite integral";
    }
    rep.passes = rep.verdict == Verdict::Pass;
    rep.diagnostics = diag.str();
    return rep;
}

}  // namespace levyh
