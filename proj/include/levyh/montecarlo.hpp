#pragma once

// Path simulation on a time grid, zero-hitting detection and the Monte Carlo
// estimators built on it.
//
// Continuous-path models (Brownian, alpha = 2, and the Gaussian stretches of
// Brownian-with-jumps) detect T_0 inside a cell with the Brownian-bridge
// crossing probability exp(-2 a b / (s^2 h)) for endpoints a, b of one sign;
// estimators carry the product of the no-crossing factors as a survival
// weight, samplers draw the crossing. Stable paths with alpha < 2 are killed
// when a grid value lands in [-eps, eps], which is biased (the bias vanishes
// as dt, eps -> 0).
//
// Each path draws from its own mt19937_64 stream seeded from
// (seed, stream, path index), and per-path results are reduced by pairwise
// summation in index order, so estimates do not depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "levyh/format.hpp"
#include "levyh/levy_model.hpp"
#include "levyh/parallel.hpp"
#include "levyh/potential.hpp"

namespace levyh {

/// Rejection sampling accepted too few paths to say anything.
class AcceptanceError : public std::runtime_error {
public:
    AcceptanceError(const std::string& what, double rate) : std::runtime_error(what), rate_(rate) {}
    double rate() const noexcept { return rate_; }

private:
    double rate_;
};

struct BridgeExact {};
struct Threshold {
    double eps = 1e-3;
};
using HitMethod = std::variant<BridgeExact, Threshold>;

struct PathSample {
    double x0 = 0.0;
    double dt = 0.0;
    std::vector<double> values;          // X at 0, dt, 2dt, ..., t_end (last cell may be shorter)
    std::optional<std::size_t> hit_index; // cell [k-1, k] in which T_0 was declared
    HitMethod hit_method;
    double survival_weight = 1.0;         // product of per-cell no-hit probabilities
};

struct MCEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    std::size_t n = 0;
    double n_effective = 0.0;
};

struct SimulationOptions {
    double eps = 1e-3;                   // threshold for stable paths
    unsigned threads = default_threads();
};

// --- random streams ---------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed of the engine for path `index` of stream `stream`.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(splitmix64(seed ^ splitmix64(stream)) + index);
}

namespace mc_stream {
inline constexpr std::uint64_t path = 1;
inline constexpr std::uint64_t rejection = 2;
inline constexpr std::uint64_t transform = 3;
}  // namespace mc_stream

// --- stepping ---------------------------------------------------------------

namespace detail {

inline double bridge_survival(double a, double b, double var) {
    if (a == 0.0 || b == 0.0 || (a > 0.0) != (b > 0.0)) return 0.0;
    if (var <= 0.0) return 1.0;
    return -std::expm1(-2.0 * a * b / var);
}

/// Chambers-Mallows-Stuck variate with E exp(i l S) = exp(-|l|^a (1 - i b sgn(l) tan(a pi/2))).
template <class Rng>
double stable_variate(double alpha, double beta, Rng& rng) {
    std::uniform_real_distribution<double> uni(-0.5 * std::numbers::pi, 0.5 * std::numbers::pi);
    std::exponential_distribution<double> expo(1.0);
    const double v = uni(rng);
    const double w = expo(rng);
    const double t = beta * std::tan(0.5 * alpha * std::numbers::pi);
    const double b = std::atan(t) / alpha;
    const double s = std::pow(1.0 + t * t, 0.5 / alpha);
    const double av = alpha * (v + b);
    return s * std::sin(av) / std::pow(std::cos(v), 1.0 / alpha)
        * std::pow(std::cos(v - av) / w, (1.0 - alpha) / alpha);
}

}  // namespace detail

/// Advances a path by one cell and reports the probability that the cell
/// contains no zero of the path (0 or 1 under the threshold rule).
class PathStepper {
public:
    PathStepper(const LevyModel& model, double eps) : model_(model), eps_(eps) {
        if (const auto* s = std::get_if<StableParams>(&model.params()); s && s->alpha < 2.0) {
            if (!(eps > 0.0)) throw std::invalid_argument("threshold eps must be > 0");
            method_ = Threshold{eps};
        }
    }

    const HitMethod& method() const noexcept { return method_; }

    template <class Rng>
    double step(double& x, double h, Rng& rng) const {
        std::normal_distribution<double> normal(0.0, 1.0);
        return std::visit([&](const auto& p) -> double {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, BrownianParams>) {
                const double a = x;
                x = a + p.drift * h + p.sigma * std::sqrt(h) * normal(rng);
                return detail::bridge_survival(a, x, p.sigma * p.sigma * h);
            } else if constexpr (std::is_same_v<P, StableParams>) {
                if (p.alpha == 2.0) {
                    const double a = x;
                    x = a + std::sqrt(2.0 * p.c * h) * normal(rng);
                    return detail::bridge_survival(a, x, 2.0 * p.c * h);
                }
                x += std::pow(p.c * h, 1.0 / p.alpha) * detail::stable_variate(p.alpha, p.beta, rng);
                return std::abs(x) <= eps_ ? 0.0 : 1.0;
            } else {
                return jump_step(p, x, h, rng);
            }
        }, model_.params());
    }

private:
    template <class Rng>
    double jump_step(const BrownianJumpsParams& p, double& x, double h, Rng& rng) const {
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> uni(0.0, h);
        std::vector<std::pair<double, double>> jumps;   // (time in cell, size)
        for (const auto& atom : p.atoms) {
            std::poisson_distribution<long> count(atom.rate * h);
            for (long k = count(rng); k > 0; --k) jumps.emplace_back(uni(rng), atom.size);
        }
        std::sort(jumps.begin(), jumps.end());
        double survive = 1.0;
        double now = 0.0;
        auto diffuse = [&](double len) {
            const double a = x;
            x = a + p.drift * len + p.sigma * std::sqrt(len) * normal(rng);
            survive *= detail::bridge_survival(a, x, p.sigma * p.sigma * len);
        };
        for (const auto& [when, size] : jumps) {
            diffuse(when - now);
            now = when;
            x += size;
        }
        diffuse(h - now);
        return survive;
    }

    const LevyModel& model_;
    double eps_;
    HitMethod method_ = BridgeExact{};
};

namespace detail {

inline void require_grid(double t_end, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be > 0");
    if (!(t_end >= dt) || !std::isfinite(t_end)) throw std::invalid_argument("t_end must be >= dt");
}

/// Cell lengths covering [0, t] with cells of dt and a shorter last cell.
inline std::vector<double> cells(double t, double dt) {
    std::vector<double> out;
    if (t <= 0.0) return out;
    const double ratio = t / dt;
    auto full = static_cast<std::size_t>(std::floor(ratio + 1e-9));
    const double rest = t - static_cast<double>(full) * dt;
    out.assign(full, dt);
    if (rest > 1e-9 * dt) out.push_back(rest);
    return out;
}

template <class Rng>
double run_weighted(const PathStepper& stepper, double& x, const std::vector<double>& grid, Rng& rng) {
    double w = 1.0;
    for (double h : grid) {
        w *= stepper.step(x, h, rng);
        if (w == 0.0) return 0.0;
    }
    return w;
}

/// Runs the path over [0, duration] in cells of dt and draws each cell's
/// crossing; false once T_0 is declared.
template <class Rng>
bool run_declared(const PathStepper& stepper, double& x, double duration, double dt, Rng& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double left = duration;
    while (left > 1e-9 * dt) {
        const double h = std::min(dt, left);
        left -= h;
        const double s = stepper.step(x, h, rng);
        if (s == 0.0) return false;
        if (s < 1.0 && uni(rng) >= s) return false;
    }
    return true;
}

inline MCEstimate plain_mean(const std::vector<double>& y) {
    const std::size_t n = y.size();
    MCEstimate e;
    e.n = n;
    e.n_effective = static_cast<double>(n);
    if (n == 0) return e;
    e.mean = pairwise_sum(y) / static_cast<double>(n);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (y[i] - e.mean) * (y[i] - e.mean);
    const double var = n > 1 ? pairwise_sum(sq) / static_cast<double>(n - 1) : 0.0;
    e.std_err = std::sqrt(var / static_cast<double>(n));
    return e;
}

/// Self-normalised estimate sum(w f) / sum(w) with delta-method error.
inline MCEstimate ratio_mean(const std::vector<double>& w, const std::vector<double>& f) {
    const std::size_t n = w.size();
    MCEstimate e;
    e.n = n;
    const double sw = pairwise_sum(w);
    if (!(sw > 0.0)) {
        e.mean = std::numeric_limits<double>::quiet_NaN();
        e.std_err = std::numeric_limits<double>::infinity();
        return e;
    }
    std::vector<double> tmp(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] * f[i];
    e.mean = pairwise_sum(tmp) / sw;
    for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] * w[i];
    const double sww = pairwise_sum(tmp);
    e.n_effective = sw * sw / sww;
    for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] * w[i] * (f[i] - e.mean) * (f[i] - e.mean);
    e.std_err = std::sqrt(pairwise_sum(tmp)) / sw;
    return e;
}

inline double weight_n_effective(const std::vector<double>& w) {
    std::vector<double> sq(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) sq[i] = w[i] * w[i];
    const double s = pairwise_sum(w);
    const double s2 = pairwise_sum(sq);
    return s2 > 0.0 ? s * s / s2 : 0.0;
}

}  // namespace detail

/// Piecewise-linear table of a function on [lo, hi] with 0 as a node; falls
/// back to the function itself outside the table.
class TabulatedFunction {
public:
    TabulatedFunction(std::function<double(double)> f, double lo, double hi, std::size_t nodes,
                      unsigned threads)
        : f_(std::move(f)) {
        lo = std::min(lo, 0.0);
        hi = std::max(hi, 0.0);
        const double span = hi - lo;
        if (span > 0.0) {
            const auto left = static_cast<std::size_t>(std::ceil(nodes * (-lo) / span));
            const auto right = static_cast<std::size_t>(std::ceil(nodes * hi / span));
            for (std::size_t i = left; i > 0; --i) x_.push_back(lo * static_cast<double>(i) / left);
            x_.push_back(0.0);
            for (std::size_t i = 1; i <= right; ++i) x_.push_back(hi * static_cast<double>(i) / right);
        } else {
            x_.push_back(0.0);
        }
        y_.resize(x_.size());
        parallel_for(x_.size(), threads, [&](std::size_t i) { y_[i] = f_(x_[i]); });
    }

    double operator()(double x) const {
        if (x < x_.front() || x > x_.back()) return f_(x);
        if (x_.size() == 1) return y_.front();
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        if (it == x_.end()) return y_.back();
        const std::size_t j = static_cast<std::size_t>(it - x_.begin());
        const double t = (x - x_[j - 1]) / (x_[j] - x_[j - 1]);
        return y_[j - 1] + t * (y_[j] - y_[j - 1]);
    }

private:
    std::function<double(double)> f_;
    std::vector<double> x_;
    std::vector<double> y_;
};

// --- samplers and estimators -------------------------------------------------

inline PathSample sample_path(const LevyModel& model, double x0, double t_end, double dt, std::uint64_t seed,
                              double eps = 1e-3) {
    detail::require_grid(t_end, dt);
    PathStepper stepper(model, eps);
    std::mt19937_64 rng(stream_seed(seed, mc_stream::path, 0));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    PathSample ps;
    ps.x0 = x0;
    ps.dt = dt;
    ps.hit_method = stepper.method();
    ps.values.push_back(x0);
    double x = x0;
    std::size_t k = 0;
    if (std::holds_alternative<Threshold>(ps.hit_method) && std::abs(x0) <= eps) ps.hit_index = 0;
    for (double h : detail::cells(t_end, dt)) {
        ++k;
        const double s = stepper.step(x, h, rng);
        ps.values.push_back(x);
        ps.survival_weight *= s;
        const bool hit = s == 0.0 || (s < 1.0 && uni(rng) >= s);
        if (hit && !ps.hit_index) ps.hit_index = k;
    }
    return ps;
}

namespace detail {

/// Endpoint X_t and survival weight of n independent paths from x.
struct Endpoints {
    std::vector<double> x;
    std::vector<double> w;
};

inline Endpoints simulate_endpoints(const LevyModel& model, double x, double t, double dt, std::size_t n,
                                    std::uint64_t seed, std::uint64_t stream, const SimulationOptions& opt) {
    detail::require_grid(t, dt);
    if (n == 0) throw std::invalid_argument("n must be > 0");
    PathStepper stepper(model, opt.eps);
    const auto grid = cells(t, dt);
    Endpoints out{std::vector<double>(n), std::vector<double>(n)};
    const bool dead_at_start = std::holds_alternative<Threshold>(stepper.method()) && std::abs(x) <= opt.eps;
    parallel_for(n, opt.threads, [&](std::size_t i) {
        std::mt19937_64 rng(stream_seed(seed, stream, i));
        double xi = x;
        const double w = dead_at_start ? 0.0 : run_weighted(stepper, xi, grid, rng);
        out.x[i] = xi;
        out.w[i] = w;
    });
    return out;
}

inline std::pair<double, double> endpoint_range(const Endpoints& e) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < e.x.size(); ++i) {
        if (e.w[i] == 0.0) continue;
        lo = std::min(lo, e.x[i]);
        hi = std::max(hi, e.x[i]);
    }
    if (lo > hi) return {0.0, 0.0};
    return {lo, hi};
}

inline void require_start(double x) {
    if (x == 0.0 || !std::isfinite(x)) throw std::invalid_argument("starting point must be finite and != 0");
}

}  // namespace detail

/// P_x(T_0 > t).
inline MCEstimate survival_probability(const LevyModel& model, double x, double t, double dt, std::size_t n,
                                       std::uint64_t seed, const SimulationOptions& opt = {}) {
    detail::require_start(x);
    const auto e = detail::simulate_endpoints(model, x, t, dt, n, seed, mc_stream::path, opt);
    return detail::plain_mean(e.w);
}

struct TargetedEstimate {
    MCEstimate estimate;
    double target = 0.0;
    double z = 0.0;
};

/// E_x[h(X_t); t < T_0], to be compared with h(x).
inline TargetedEstimate invariance_check(const LevyModel& model, const PotentialEvaluator& ev, double x, double t,
                                         double dt, std::size_t n, std::uint64_t seed,
                                         const SimulationOptions& opt = {}) {
    detail::require_start(x);
    const double hx = ev.require_positive_h(x);
    const auto e = detail::simulate_endpoints(model, x, t, dt, n, seed, mc_stream::path, opt);
    const auto [lo, hi] = detail::endpoint_range(e);
    const TabulatedFunction h([&](double y) { return ev.h(y); }, lo, hi, 4000, opt.threads);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = e.w[i] == 0.0 ? 0.0 : e.w[i] * h(e.x[i]);
    TargetedEstimate out;
    out.estimate = detail::plain_mean(y);
    out.estimate.n_effective = std::min(static_cast<double>(n), detail::weight_n_effective(e.w));
    out.target = hx;
    out.z = out.estimate.std_err > 0.0 ? (out.estimate.mean - hx) / out.estimate.std_err : 0.0;
    return out;
}

/// Test functionals for the conditioning comparison, oriented by the sign of x.
struct TestFunctional {
    std::string name;
    std::function<double(double)> f;
};

inline std::vector<TestFunctional> conditioning_functionals(double x, double cap = 16.0) {
    const double s = x > 0.0 ? 1.0 : -1.0;
    std::vector<TestFunctional> out;
    for (int k = -2; k <= 2; ++k) {
        const double a = std::ldexp(1.0, k);
        const double b = 2.0 * a;
        const double lo = s > 0.0 ? a : -b;
        const double hi = s > 0.0 ? b : -a;
        out.push_back({"1[" + format_double(lo) + "," + format_double(hi) + ")",
                       [lo, hi](double y) { return (y >= lo && y < hi) ? 1.0 : 0.0; }});
    }
    out.push_back({"identity", [](double y) { return y; }});
    out.push_back({"min(y^2," + format_double(cap) + ")", [cap](double y) { return std::min(y * y, cap); }});
    return out;
}

/// h_q-transform estimates E_x[f(X_t) | t < e_q < T_0]: surviving paths
/// weighted by h_q(X_t) e^{-qt}.
inline std::vector<MCEstimate> conditioned_expectation(const LevyModel& model, const PotentialEvaluator& ev,
                                                       double x, double q, double t, double dt, std::size_t n,
                                                       std::uint64_t seed, const std::vector<TestFunctional>& fs,
                                                       const SimulationOptions& opt = {}) {
    detail::require_start(x);
    if (!(q > 0.0)) throw std::invalid_argument("q must be > 0");
    if (!(ev.h_q(q, x) > ev.config().abs_tol)) throw HTransformError("conditioning needs h_q(x) > 0");
    const auto e = detail::simulate_endpoints(model, x, t, dt, n, seed, mc_stream::transform, opt);
    const auto [lo, hi] = detail::endpoint_range(e);
    const TabulatedFunction hq([&](double y) { return ev.h_q(q, y); }, lo, hi, 4000, opt.threads);
    std::vector<double> w(n);
    const double discount = std::exp(-q * t);
    for (std::size_t i = 0; i < n; ++i) w[i] = e.w[i] == 0.0 ? 0.0 : e.w[i] * hq(e.x[i]) * discount;
    std::vector<MCEstimate> out;
    std::vector<double> fv(n);
    for (const auto& tf : fs) {
        for (std::size_t i = 0; i < n; ++i) fv[i] = tf.f(e.x[i]);
        out.push_back(detail::ratio_mean(w, fv));
    }
    return out;
}

struct FunctionalComparison {
    std::string name;
    MCEstimate rejection;
    MCEstimate transform;
    double z = 0.0;
};

struct ConsistencyReport {
    double x = 0.0;
    double q = 0.0;
    double t = 0.0;
    double acceptance_rate = 0.0;
    std::vector<FunctionalComparison> rows;

    double max_abs_z() const {
        double m = 0.0;
        for (const auto& r : rows) m = std::max(m, std::abs(r.z));
        return m;
    }
};

/// Rejection (paths with t < e_q and no zero before e_q) against the
/// h_q-transform, on independent streams.
inline ConsistencyReport conditioned_consistency(const LevyModel& model, const PotentialEvaluator& ev, double x,
                                                 double q, double t, double dt, std::size_t n, std::uint64_t seed,
                                                 const SimulationOptions& opt = {}) {
    detail::require_start(x);
    if (!(q > 0.0)) throw std::invalid_argument("q must be > 0");
    detail::require_grid(t, dt);
    const auto fs = conditioning_functionals(x);

    // P_x(T_0 > e_q) = h_q(x) / u_q(0) bounds the acceptance rate from above
    const double bound = ev.h_q(q, x) / ev.u_q0(q);
    if (bound < 1e-4)
        throw AcceptanceError("rejection acceptance rate is at most " + format_double(bound)
                                  + ", below 1e-4; use a larger q",
                              bound);

    PathStepper stepper(model, opt.eps);
    std::vector<double> accepted(n), end(n);
    parallel_for(n, opt.threads, [&](std::size_t i) {
        std::mt19937_64 rng(stream_seed(seed, mc_stream::rejection, i));
        std::exponential_distribution<double> clock(q);
        const double horizon = clock(rng);
        accepted[i] = 0.0;
        end[i] = 0.0;
        if (horizon <= t) return;
        double xi = x;
        if (std::holds_alternative<Threshold>(stepper.method()) && std::abs(xi) <= opt.eps) return;
        if (!detail::run_declared(stepper, xi, t, dt, rng)) return;
        const double xt = xi;
        if (!detail::run_declared(stepper, xi, horizon - t, dt, rng)) return;
        accepted[i] = 1.0;
        end[i] = xt;
    });
    const double kept = pairwise_sum(accepted);
    ConsistencyReport rep{x, q, t, kept / static_cast<double>(n), {}};
    if (rep.acceptance_rate < 1e-4)
        throw AcceptanceError("rejection acceptance rate " + format_double(rep.acceptance_rate)
                                  + " is below 1e-4; use a larger q",
                              rep.acceptance_rate);

    const auto transformed = conditioned_expectation(model, ev, x, q, t, dt, n, seed, fs, opt);
    std::vector<double> fv(n);
    for (std::size_t k = 0; k < fs.size(); ++k) {
        for (std::size_t i = 0; i < n; ++i) fv[i] = fs[k].f(end[i]);
        FunctionalComparison row{fs[k].name, detail::ratio_mean(accepted, fv), transformed[k], 0.0};
        const double se = std::hypot(row.rejection.std_err, row.transform.std_err);
        const double diff = row.rejection.mean - row.transform.mean;
        row.z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

struct DensityBin {
    double lo = 0.0;
    double hi = 0.0;
    double density = 0.0;        // weighted mass in the bin / (n * width)
    double std_err = 0.0;
    std::optional<double> reference;   // exact bin average of the reference density
    double z = 0.0;
};

struct DensityReport {
    MCEstimate mass;                    // E_x[h(X_t)/h(x); t < T_0], should be 1
    double mass_opposite_side = 0.0;    // weighted mass on the other side of 0 from x
    std::vector<DensityBin> bins;
    bool has_reference = false;
    double chi_square = 0.0;
    int dof = 0;
    double p_value = std::numeric_limits<double>::quiet_NaN();

    /// Bin containing y, if any.
    const DensityBin* bin_at(double y) const {
        for (const auto& b : bins)
            if (y >= b.lo && y < b.hi) return &b;
        return nullptr;
    }
};

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

/// int_a^b (y/x)(phi_s(y-x) - phi_s(y+x)) dy, s the standard deviation.
inline double killed_bm_h_transform_mass(double x, double s, double a, double b) {
    auto first = [&](double y) { return x * normal_cdf((y - x) / s) - s * normal_pdf((y - x) / s); };
    auto second = [&](double y) { return -x * normal_cdf((y + x) / s) - s * normal_pdf((y + x) / s); };
    return ((first(b) - first(a)) - (second(b) - second(a))) / x;
}

}  // namespace detail

/// Histogram of h-weighted surviving endpoints against the density
/// (h(y)/h(x)) P_x(X_t in dy, t < T_0). A reference density is available for
/// driftless Brownian motion.
inline DensityReport conditioned_density_check(const LevyModel& model, const PotentialEvaluator& ev, double x,
                                               double t, int bins, double dt, std::size_t n, std::uint64_t seed,
                                               const SimulationOptions& opt = {}) {
    detail::require_start(x);
    if (bins <= 0) throw std::invalid_argument("bins must be > 0");
    const double hx = ev.require_positive_h(x);
    const auto e = detail::simulate_endpoints(model, x, t, dt, n, seed, mc_stream::path, opt);
    const auto [elo, ehi] = detail::endpoint_range(e);
    const TabulatedFunction h([&](double y) { return ev.h(y); }, elo, ehi, 4000, opt.threads);

    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = e.w[i] == 0.0 ? 0.0 : e.w[i] * h(e.x[i]) / hx;

    DensityReport rep;
    rep.mass = detail::plain_mean(w);
    rep.mass.n_effective = std::min(static_cast<double>(n), detail::weight_n_effective(e.w));
    {
        std::vector<double> other(n);
        for (std::size_t i = 0; i < n; ++i) other[i] = (e.x[i] > 0.0) != (x > 0.0) ? w[i] : 0.0;
        rep.mass_opposite_side = pairwise_sum(other) / static_cast<double>(n);
    }

    const auto* bp = std::get_if<BrownianParams>(&model.params());
    const double sigma = model.sigma();
    const bool continuous = bp || (model.is_stable() && sigma > 0.0);
    rep.has_reference = bp && bp->drift == 0.0;
    double spread = 0.0;
    if (continuous) {
        spread = sigma * std::sqrt(t);
    } else if (const auto* sp = std::get_if<StableParams>(&model.params())) {
        spread = std::pow(sp->c * t, 1.0 / sp->alpha);
    } else {
        const auto& jp = std::get<BrownianJumpsParams>(model.params());
        double v = jp.sigma * jp.sigma;
        for (const auto& a : jp.atoms) v += a.rate * a.size * a.size;
        spread = std::sqrt(v * t);
    }
    double lo = x - 6.0 * spread;
    double hi = x + 6.0 * spread;
    double width = (hi - lo) / bins;
    if (continuous) {
        // bins start at 0 and put x at a bin centre
        const double ax = std::abs(x);
        const double rough = (ax + 6.0 * spread) / bins;
        width = ax / (std::max(0.0, std::round(ax / rough - 0.5)) + 0.5);
        lo = x > 0.0 ? 0.0 : -bins * width;
        hi = x > 0.0 ? bins * width : 0.0;
    }

    std::vector<int> bin_of(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double b = std::floor((e.x[i] - lo) / width);
        bin_of[i] = (w[i] == 0.0 || b < 0.0 || b >= bins) ? -1 : static_cast<int>(b);
    }
    std::vector<double> m(n), m2(n);
    const double nn = static_cast<double>(n);
    for (int b = 0; b < bins; ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            const double v = bin_of[i] == b ? w[i] : 0.0;
            m[i] = v;
            m2[i] = v * v;
        }
        const double mean = pairwise_sum(m) / nn;
        const double var = std::max(0.0, pairwise_sum(m2) / nn - mean * mean);
        DensityBin bin;
        bin.lo = lo + b * width;
        bin.hi = b + 1 == bins ? hi : lo + (b + 1) * width;
        bin.density = mean / width;
        bin.std_err = std::sqrt(var / nn) / width;
        if (rep.has_reference) {
            bin.reference = detail::killed_bm_h_transform_mass(x, sigma * std::sqrt(t), bin.lo, bin.hi) / width;
            const double diff = bin.density - *bin.reference;
            bin.z = bin.std_err > 0.0 ? diff / bin.std_err : 0.0;
            if (bin.std_err > 0.0) {
                rep.chi_square += bin.z * bin.z;
                ++rep.dof;
            }
        }
        rep.bins.push_back(bin);
    }
    if (rep.has_reference && rep.dof > 0)
        rep.p_value = boost::math::gamma_q(0.5 * rep.dof, 0.5 * rep.chi_square);
    return rep;
}

// --- CSV --------------------------------------------------------------------

struct EstimatorRow {
    std::string op;
    std::string model;
    std::string params;
    MCEstimate estimate;
    double target = std::numeric_limits<double>::quiet_NaN();
    double z = std::numeric_limits<double>::quiet_NaN();
};

/// CSV: op,model,params,estimate,stderr,n,n_effective,target,z (empty target/z when absent).
inline void write_estimator_csv(std::ostream& os, const std::vector<EstimatorRow>& rows) {
    os << "op,model,params,estimate,stderr,n,n_effective,target,z\n";
    auto opt = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
    for (const auto& r : rows)
        os << csv_field(r.op) << ',' << csv_field(r.model) << ',' << csv_field(r.params) << ','
           << format_double(r.estimate.mean) << ',' << format_double(r.estimate.std_err) << ',' << r.estimate.n
           << ',' << format_double(r.estimate.n_effective) << ',' << opt(r.target) << ',' << opt(r.z) << '\n';
}

}  // namespace levyh
