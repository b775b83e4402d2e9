#pragma once

// Potential-theoretic quantities of a Levy process for which 0 is regular:
// resolvent densities, the invariant function h, h*, kappa, hitting-time
// transforms and the killed / conditioned resolvent and Green densities.
//
// Everything is obtained by Fourier inversion,
//   u_q(x) = (1/2pi) int Re(e^{-i l x} / (q + psi(l))) dl,
//   h_q(x) = (1/2pi) int Re((1 - e^{i l x}) / (q + psi(l))) dl,
//   h(x)   = (1/2pi) int Re((1 - e^{i l x}) / psi(l)) dl,
// folded onto [0, inf) with psi(-l) = conj(psi(l)). h and h_q are single
// quadratures of the difference integrand; they are never formed as
// u_q(0) - u_q(-x), which cancels catastrophically as q -> 0.

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "levyh/levy_model.hpp"
#include "levyh/quadrature.hpp"

namespace levyh {

enum class KappaMethod { Analytic, Extrapolated };

inline const char* to_string(KappaMethod m) {
    return m == KappaMethod::Analytic ? "analytic" : "extrapolated";
}

/// kappa = lim_{q->0} 1/u_q(0) could not be extrapolated reliably.
class KappaError : public std::runtime_error {
public:
    KappaError(const std::string& what, std::vector<double> q, std::vector<double> inv_u0)
        : std::runtime_error(what), q_(std::move(q)), seq_(std::move(inv_u0)) {}
    const std::vector<double>& q_values() const noexcept { return q_; }
    const std::vector<double>& sequence() const noexcept { return seq_; }

private:
    std::vector<double> q_;
    std::vector<double> seq_;
};

/// The h-transform is undefined at a starting point where h vanishes.
class HTransformError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct KappaResult {
    double value = 0.0;
    KappaMethod method = KappaMethod::Analytic;
    std::vector<double> q_values;
    std::vector<double> sequence;   // 1/u_q(0) along q_values (empty when analytic)
    double order = 0.0;             // observed convergence order in log10(q)
};

class PotentialEvaluator {
public:
    explicit PotentialEvaluator(LevyModel model, QuadratureConfig cfg = {})
        : model_(std::move(model)), cfg_(cfg), cache_(std::make_unique<Cache>()) {
        cfg_.validate();
    }

    const LevyModel& model() const noexcept { return model_; }
    const QuadratureConfig& config() const noexcept { return cfg_; }

    // --- resolvent --------------------------------------------------------

    /// Arguments closer to the origin than this are evaluated at the origin.
    static constexpr double origin_radius = 1e-100;

    double u_q(double q, double x) const {
        require_q(q);
        if (std::abs(x) < origin_radius) return u_q0(q);
        return std::max(0.0, fourier(q, x, Kind::Resolvent));
    }

    /// u_q(0), cached per q. The cache is a write-once-per-key table guarded
    /// by a shared mutex, so concurrent readers are safe.
    double u_q0(double q) const {
        require_q(q);
        {
            std::shared_lock lock(cache_->mutex);
            if (auto it = cache_->u0.find(q); it != cache_->u0.end()) return it->second;
        }
        const double v = fourier(q, 0.0, Kind::Resolvent);
        if (!(v > 0.0)) throw QuadratureError("u_q(0) is not positive", v, 0.0);
        std::unique_lock lock(cache_->mutex);
        return cache_->u0.emplace(q, v).first->second;
    }

    /// E_x[e^{-q T_0}] = u_q(-x) / u_q(0).
    double hitting_laplace(double q, double x) const {
        if (x == 0.0) return 1.0;
        return std::clamp(u_q(q, -x) / u_q0(q), 0.0, 1.0);
    }

    /// h_q(x) = u_q(0) - u_q(-x), computed as one quadrature.
    double h_q(double q, double x) const {
        require_q(q);
        if (std::abs(x) < origin_radius) return 0.0;
        return clamp_small_negative(fourier(q, x, Kind::Increment));
    }

    double h(double x) const {
        if (std::abs(x) < origin_radius) return 0.0;
        return clamp_small_negative(fourier(0.0, x, Kind::Increment));
    }

    // --- kappa ------------------------------------------------------------

    const KappaResult& kappa_result() const {
        std::call_once(cache_->kappa_once, [this] { cache_->kappa = compute_kappa(); });
        if (!cache_->kappa) throw *cache_->kappa_error;
        return *cache_->kappa;
    }
    double kappa() const { return kappa_result().value; }
    KappaMethod kappa_method() const { return kappa_result().method; }

    // --- auxiliary function h* -------------------------------------------

    /// h*(x) = h(x) + h(-x) - kappa h(x) h(-x).
    double h_star(double x) const {
        if (x == 0.0) return 0.0;
        const double a = h(x);
        const double b = h(-x);
        const double k = kappa();
        return k == 0.0 ? a + b : a + b - k * a * b;
    }

    /// h_q*(x) = u_q(0) - u_q(x) u_q(-x) / u_q(0), written through h_q as
    /// h_q(x) + h_q(-x) - h_q(x) h_q(-x) / u_q(0) to avoid cancellation.
    double h_q_star(double q, double x) const {
        if (x == 0.0) return 0.0;
        const double a = h_q(q, x);
        const double b = h_q(q, -x);
        return a + b - a * b / u_q0(q);
    }

    // --- killed and conditioned densities --------------------------------

    /// u_q^0(x,y) = u_q(y-x) - u_q(-x) u_q(y) / u_q(0).
    double killed_resolvent(double q, double x, double y) const {
        require_q(q);
        if (x == 0.0 || y == 0.0) return 0.0;
        const double u0 = u_q0(q);
        // h_q(x) + h_q(-y) - h_q(x-y) - h_q(x) h_q(-y) / u_q(0), cancellation-free near 0
        const double a = h_q(q, x);
        const double b = h_q(q, -y);
        const double c = h_q(q, x - y);
        return clamp_small_negative(a + b - c - a * b / u0);
    }

    /// u_q^(x,y) = h(y)/h(x) u_q^0(x,y) for x != 0; entrance branch
    /// u_q^(0,y) = h(y) u_q(y) / u_q(0).
    double conditioned_resolvent(double q, double x, double y) const {
        require_q(q);
        if (y == 0.0) return 0.0;
        if (x == 0.0) return h(y) * u_q(q, y) / u_q0(q);
        const double hx = require_positive_h(x);
        return h(y) / hx * killed_resolvent(q, x, y);
    }

    /// Green density of the conditioned process,
    ///   u_0^(x,y) = h(y)/h(x) [h(x) + h(-y) - h(x-y) - kappa h(x) h(-y)],
    ///   u_0^(0,y) = h*(y) - h(-y),   u_0^(x,0) = 0.
    double conditioned_green(double x, double y) const {
        if (y == 0.0) return 0.0;
        if (x == 0.0) return h_star(y) - h(-y);
        const double hx = require_positive_h(x);
        const double hy = h(y);
        const double hmy = h(-y);
        const double k = kappa();
        return hy / hx * (hx + hmy - h(x - y) - k * hx * hmy);
    }

    /// h(x), or HTransformError when h(x) is zero to quadrature accuracy.
    double require_positive_h(double x) const {
        const double hx = h(x);
        if (!(hx > cfg_.abs_tol))
            throw HTransformError("h-transform undefined at x = " + std::to_string(x) + " (h(x) = 0)");
        return hx;
    }

    /// Strict positivity of h away from 0 is only claimed for driftless
    /// Brownian motion and two-sided stable laws.
    bool h_positive_off_origin() const {
        if (const auto* b = std::get_if<BrownianParams>(&model_.params())) return b->drift == 0.0;
        if (const auto* s = std::get_if<StableParams>(&model_.params()))
            return s->alpha == 2.0 || std::abs(s->beta) < 1.0;
        return false;
    }

private:
    enum class Kind { Resolvent, Increment };

    struct Cache {
        std::shared_mutex mutex;
        std::map<double, double> u0;
        std::once_flag kappa_once;
        std::optional<KappaResult> kappa;
        std::optional<KappaError> kappa_error;
    };

    static void require_q(double q) {
        if (!(q > 0.0) || !std::isfinite(q)) throw std::invalid_argument("q must be > 0");
    }

    double clamp_small_negative(double v) const {
        return (v < 0.0 && v > -100.0 * cfg_.abs_tol) ? 0.0 : v;
    }

    /// Below: largest lambda on a quarter-decade grid where |psi| <= 1e-3 q.
    double low_scale(double q) const {
        if (q == 0.0) return 0.0;
        for (int k = 0; k >= -400; --k) {
            const double lam = std::pow(10.0, 0.25 * k);
            if (std::abs(model_.psi(lam)) <= 1e-3 * q) return lam;
        }
        return 1e-100;
    }

    /// Above: smallest lambda >= 1 on the same grid where |psi| >= 1e3 max(q,1).
    double high_scale(double q) const {
        const double target = 1e3 * std::max(q, 1.0);
        for (int k = 0; k <= 400; ++k) {
            const double lam = std::pow(10.0, 0.25 * k);
            if (std::abs(model_.psi(lam)) >= target) return lam;
        }
        return 1e100;
    }

    QuadEstimate outward(auto&& f, double start, double q) const {
        quad::LogScaleOptions opt;
        opt.start = start;
        opt.direction = quad::Direction::Outward;
        opt.min_reach = std::max(cfg_.lambda_max, high_scale(q));
        opt.chunk = std::numbers::ln2;
        const double explicit_chunks = std::max(0.0, std::log2(opt.min_reach / start));
        opt.max_chunks = static_cast<int>(std::ceil(explicit_chunks)) + cfg_.tail_doublings;
        return quad::log_scale(f, opt, cfg_);
    }

    QuadEstimate inward(auto&& f, double start, double q) const {
        quad::LogScaleOptions opt;
        opt.start = start;
        opt.direction = quad::Direction::Inward;
        opt.min_reach = std::min(start, q > 0.0 ? low_scale(q) : start);
        opt.chunk = 1.0;
        opt.max_chunks = std::max(60, static_cast<int>(std::floor(std::log(start / 1e-100))));
        return quad::log_scale(f, opt, cfg_);
    }

    /// (1/pi) int_0^inf of the folded integrand for u_q (Resolvent) or
    /// h_q / h (Increment, q = 0 meaning h).
    double fourier(double q, double x, Kind kind) const {
        auto g = [this, q](double lam) { return 1.0 / (q + model_.psi(lam)); };

        if (x == 0.0) {
            // only u_q(0) reaches here
            auto re = [&](double lam) { return g(lam).real(); };
            const double split = 1.0;
            const auto lo = inward(re, split, q);
            const auto hi = outward(re, split, q);
            return (lo.value + hi.value) / std::numbers::pi;
        }

        const double w = std::abs(x);
        const double half_period = std::numbers::pi / w;

        if (kind == Kind::Resolvent) {
            if (auto shifted = shifted_resolvent(q, x)) return *shifted;
            if (auto rotated = rotated_resolvent(q, x)) return *rotated;
        }

        auto full = [&](double lam) {
            const cplx gv = g(lam);
            const double s = std::sin(lam * x);
            if (kind == Kind::Resolvent)
                return gv.real() * std::cos(lam * x) + gv.imag() * s;
            const double half = std::sin(0.5 * lam * x);
            return 2.0 * half * half * gv.real() + s * gv.imag();
        };
        auto osc = [&](double lam) {
            const cplx gv = g(lam);
            const double c = std::cos(lam * x);
            const double s = std::sin(lam * x);
            return kind == Kind::Resolvent ? gv.real() * c + gv.imag() * s
                                           : -gv.real() * c + gv.imag() * s;
        };

        double total = inward(full, half_period, q).value;
        total += model_.continues_right() ? vertical_tail(q, x, kind)
                                          : quad::oscillatory(osc, half_period, half_period, cfg_).value;
        if (kind == Kind::Increment) {
            auto re = [&](double lam) { return g(lam).real(); };
            total += outward(re, half_period, q).value;
        }
        return total / std::numbers::pi;
    }

    /// The oscillating part past l0 = pi/|x|, taken along Re(l) = l0 where
    /// e^{-+i l x} decays like e^{-s|x|}. Neither psi nor q + psi vanishes in
    /// Re(l) > 0, so the contour can be swung up (or down) from the real axis.
    double vertical_tail(double q, double x, Kind kind) const {
        const double w = std::abs(x);
        const double l0 = std::numbers::pi / w;
        const double sx = x > 0.0 ? 1.0 : -1.0;
        const double dir = kind == Kind::Resolvent ? -sx : sx;
        auto f = [&](double s) {
            const cplx g = 1.0 / (q + model_.psi_right_half(cplx(l0, dir * s)));
            return -sx * g.imag() * std::exp(-s * w);
        };
        const double s0 = 1.0 / w;
        double total = quad::gauss_kronrod(f, 0.0, s0).value;
        quad::LogScaleOptions opt;
        opt.start = s0;
        opt.min_reach = 40.0 * s0;
        opt.max_chunks = 60;
        total += quad::log_scale(f, opt, cfg_).value;
        return total;
    }

    /// u_q(x) decays exponentially for Brownian-type exponents and the real-axis
    /// integral then loses all relative accuracy to cancellation. Moving the
    /// contour to Im(l) = -eta sgn(x) pulls out the factor e^{-eta |x|}; eta stays
    /// a margin of 1/|x| short of the nearest zero of q + psi.
    std::optional<double> shifted_resolvent(double q, double x) const {
        const auto poles = model_.resolvent_pole_distances(q);
        if (!poles) return std::nullopt;
        const double w = std::abs(x);
        const double d = x > 0.0 ? poles->first : poles->second;
        if (d * w <= 2.0) return std::nullopt;
        const double eta = d - 1.0 / w;
        const cplx shift(0.0, x > 0.0 ? -eta : eta);
        auto f = [&](double s) {
            const cplx a = std::exp(cplx(0.0, -s * x)) / (q + model_.psi_continued(s + shift));
            const cplx b = std::exp(cplx(0.0, s * x)) / (q + model_.psi_continued(-s + shift));
            return (a + b).real();
        };
        const double half_period = std::numbers::pi / w;
        double total = inward(f, half_period, q).value;
        total += quad::oscillatory(f, half_period, half_period, cfg_).value;
        return std::exp(-eta * w) * total / (2.0 * std::numbers::pi);
    }

    /// Stable exponents with alpha < 2 continue from (0, inf) as C l^alpha, so
    /// the half-line integral can be taken along the ray arg l = -sgn(x) pi/4,
    /// where e^{-i l x} decays. The 1/q part of 1/(q + psi) integrates to a
    /// purely imaginary value and is dropped before integrating.
    std::optional<double> rotated_resolvent(double q, double x) const {
        const auto* sp = std::get_if<StableParams>(&model_.params());
        if (!sp || sp->alpha == 2.0) return std::nullopt;
        const double a = sp->alpha;
        const cplx c_plus = sp->c * cplx(1.0, -sp->beta * std::tan(0.5 * a * std::numbers::pi));
        // near the origin the dropped 1/q part is large and the real-axis form is better
        if (std::abs(x) * std::pow(q / std::abs(c_plus), 1.0 / a) < 1.0) return std::nullopt;
        const double phi = x > 0.0 ? -0.25 * std::numbers::pi : 0.25 * std::numbers::pi;
        const cplx dir = std::polar(1.0, phi);
        const cplx c_ray = c_plus * std::polar(1.0, a * phi);
        auto f = [&](double r) {
            const cplx psi = c_ray * std::pow(r, a);
            const cplx rest = -psi / (q * (q + psi));
            return (dir * rest * std::exp(cplx(0.0, -x) * (r * dir))).real();
        };
        const double start = 1.0 / std::abs(x);
        quad::LogScaleOptions opt;
        opt.start = start;
        opt.min_reach = 40.0 * start;
        opt.max_chunks = 60;
        double total = inward(f, start, q).value;
        total += quad::log_scale(f, opt, cfg_).value;
        return total / std::numbers::pi;
    }

    std::optional<KappaResult> compute_kappa() const {
        if (recurrence_class(model_) == RecurrenceClass::Recurrent)
            return KappaResult{0.0, KappaMethod::Analytic, {}, {}, 0.0};
        std::vector<double> qs;
        std::vector<double> s;
        try {
            for (int k = 1; k <= 6; ++k) {
                const double q = std::pow(10.0, -k);
                qs.push_back(q);
                s.push_back(1.0 / u_q0(q));
            }
        } catch (const QuadratureError& e) {
            cache_->kappa_error.emplace(std::string("kappa extrapolation failed: ") + e.what(), qs, s);
            return std::nullopt;
        }
        // Successive differences must shrink geometrically in log10(q).
        std::vector<double> d;
        for (std::size_t i = 0; i + 1 < s.size(); ++i) d.push_back(s[i] - s[i + 1]);
        std::vector<double> order;
        for (std::size_t i = 0; i + 1 < d.size(); ++i) {
            const double ratio = d[i + 1] / d[i];
            if (!(ratio > 0.0 && ratio < 1.0)) {
                cache_->kappa_error.emplace(
                    "kappa extrapolation failed: 1/u_q(0) is not monotone and convergent", qs, s);
                return std::nullopt;
            }
            order.push_back(-std::log10(ratio));
        }
        const auto [omin, omax] = std::minmax_element(order.begin(), order.end());
        if ((*omax - *omin) > 0.2 * *omax) {
            cache_->kappa_error.emplace(
                "kappa extrapolation failed: unstable convergence order", qs, s);
            return std::nullopt;
        }
        const double rho = d.back() / d[d.size() - 2];
        double value = s.back() - d.back() * rho / (1.0 - rho);
        if (value < 0.0 && value > -1e-6) value = 0.0;
        if (value < 0.0) {
            cache_->kappa_error.emplace("kappa extrapolation failed: negative limit", qs, s);
            return std::nullopt;
        }
        return KappaResult{value, KappaMethod::Extrapolated, qs, s, order.back()};
    }

    LevyModel model_;
    QuadratureConfig cfg_;
    std::unique_ptr<Cache> cache_;
};

}  // namespace levyh
