#pragma once

// Quadrature building blocks for Fourier-type integrals with algebraically
// decaying, possibly endpoint-singular amplitudes.
//
//  * log_scale:   integral of f over [a, inf) or (0, a] after the change of
//                 variables lambda = a e^{+-t}. Power laws in lambda become
//                 geometric sequences of unit-chunk contributions, so the
//                 remainder past the last chunk is the sum of a fitted
//                 geometric series (the C lambda^{-p} envelope).
//  * oscillatory: integral of an oscillating integrand over [a, inf) from
//                 half-period panels, with the partial sums accelerated by
//                 Wynn's epsilon algorithm.
//  * real_line:   integral over R with user breakpoints; tanh-sinh between
//                 breakpoints (cusps at the ends are fine), log_scale tails.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace levyh {

struct QuadratureConfig {
    double lambda_max = 1e4;        // explicit integration range before tail extrapolation
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    std::size_t max_panels = 100000;
    int tail_doublings = 12;        // truncation doublings allowed past lambda_max

    void validate() const {
        if (!(lambda_max > 0.0) || !(rel_tol > 0.0) || !(abs_tol > 0.0) || max_panels == 0
            || tail_doublings <= 0)
            throw std::invalid_argument("QuadratureConfig: all fields must be positive");
        if (!(rel_tol < 1.0))
            throw std::invalid_argument("QuadratureConfig: rel_tol must be < 1");
    }

    double tolerance(double value) const { return std::max(abs_tol, rel_tol * std::abs(value)); }
};

struct QuadEstimate {
    double value = 0.0;
    double error = 0.0;
};

/// Raised when a quadrature exhausts its budget before reaching tolerance.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double best_estimate, double error_bound)
        : std::runtime_error(what), best_(best_estimate), err_(error_bound) {}
    double best_estimate() const noexcept { return best_; }
    double error_bound() const noexcept { return err_; }

private:
    double best_;
    double err_;
};

namespace quad {

/// Adaptive 31-point Gauss-Kronrod on [a, b].
template <class F>
QuadEstimate gauss_kronrod(F&& f, double a, double b, double rel_tol = 1e-11, unsigned depth = 10) {
    double err = 0.0;
    double l1 = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, a, b, depth, rel_tol, &err, &l1);
    return {v, err * l1};
}

/// Wynn's epsilon algorithm on a sequence of partial sums. Returns the
/// extrapolated limit; `err` receives the spread of the last two even-column
/// entries used.
inline double wynn_epsilon(std::span<const double> sums, double& err) {
    const std::size_t n = sums.size();
    if (n == 0) {
        err = std::numeric_limits<double>::infinity();
        return 0.0;
    }
    double best = sums[n - 1];
    err = n >= 2 ? std::abs(sums[n - 1] - sums[n - 2]) : std::numeric_limits<double>::infinity();
    std::vector<double> prev(n, 0.0);                  // eps_{k-1}
    std::vector<double> cur(sums.begin(), sums.end());  // eps_k
    for (int k = 1; cur.size() >= 2; ++k) {
        std::vector<double> next(cur.size() - 1);
        for (std::size_t j = 0; j + 1 < cur.size(); ++j) {
            const double d = cur[j + 1] - cur[j];
            if (d == 0.0 || !std::isfinite(d)) return best;
            next[j] = prev[j + 1] + 1.0 / d;
        }
        if (k % 2 == 0 && next.size() >= 2) {
            const double cand = next.back();
            const double cand_err = std::abs(cand - next[next.size() - 2]);
            if (std::isfinite(cand) && cand_err < err) {
                best = cand;
                err = cand_err;
            }
        }
        prev = std::move(cur);
        cur = std::move(next);
    }
    return best;
}

enum class Direction { Outward, Inward };

struct LogScaleOptions {
    double start = 1.0;
    Direction direction = Direction::Outward;
    double min_reach = 0.0;    // explicit integration must pass this lambda before extrapolating (0: none)
    double chunk = 1.0;        // chunk width in log-lambda
    int max_chunks = 400;
    int min_chunks = 3;
    unsigned depth = 10;       // bisection depth of each chunk's Gauss-Kronrod rule
    double chunk_rel_tol = 1e-11;
};

/// Integral of f over [start, inf) (Outward) or (0, start] (Inward).
template <class F>
QuadEstimate log_scale(F&& f, const LogScaleOptions& opt, const QuadratureConfig& cfg) {
    const double sgn = opt.direction == Direction::Outward ? 1.0 : -1.0;
    auto g = [&](double t) {
        const double lam = opt.start * std::exp(sgn * t);
        return f(lam) * lam;
    };
    double sum = 0.0;
    double c_prev = std::numeric_limits<double>::quiet_NaN();
    double prev_total = std::numeric_limits<double>::quiet_NaN();
    double prev_change = std::numeric_limits<double>::quiet_NaN();
    double last_tail = std::numeric_limits<double>::infinity();
    for (int k = 0; k < opt.max_chunks; ++k) {
        const double t0 = k * opt.chunk;
        const double t1 = t0 + opt.chunk;
        const double c = gauss_kronrod(g, t0, t1, opt.chunk_rel_tol, opt.depth).value;
        if (!std::isfinite(c))
            throw QuadratureError("log-scale quadrature produced a non-finite chunk", sum, last_tail);
        sum += c;
        const double lam_end = opt.start * std::exp(sgn * t1);
        const bool reached = opt.min_reach <= 0.0
            || (opt.direction == Direction::Outward ? lam_end >= opt.min_reach : lam_end <= opt.min_reach);
        const double tol = cfg.rel_tol * std::abs(sum);
        if (reached && k + 1 >= opt.min_chunks) {
            if (std::abs(c) <= 1e-3 * tol && std::abs(c_prev) <= 1e-3 * tol)
                return {sum, std::abs(c)};
        }
        if (k >= 1 && c_prev != 0.0 && std::isfinite(c_prev)) {
            const double r = c / c_prev;
            if (r > 0.0 && r < 1.0) {
                const double tail = c * r / (1.0 - r);
                const double total = sum + tail;
                last_tail = std::abs(tail);
                const double change = std::abs(total - prev_total);
                if (reached && k + 1 >= opt.min_chunks && change <= tol && prev_change <= tol)
                    return {total, change};
                prev_change = change;
                prev_total = total;
            } else {
                prev_total = std::numeric_limits<double>::quiet_NaN();
                prev_change = std::numeric_limits<double>::quiet_NaN();
            }
        }
        c_prev = c;
    }
    throw QuadratureError("log-scale tail did not converge", sum, last_tail);
}

/// Integral over [start, inf) of an integrand oscillating with the given
/// half-period.
template <class F>
QuadEstimate oscillatory(F&& f, double start, double half_period, const QuadratureConfig& cfg) {
    constexpr std::size_t window = 40;
    constexpr std::size_t batch = 8;
    std::vector<double> sums;
    sums.reserve(256);
    double s = 0.0;
    double prev_est = std::numeric_limits<double>::quiet_NaN();
    double prev_term = std::numeric_limits<double>::infinity();
    double last_err = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < cfg.max_panels; ++n) {
        const double a = start + static_cast<double>(n) * half_period;
        const double term = gauss_kronrod(f, a, a + half_period).value;
        if (!std::isfinite(term))
            throw QuadratureError("oscillatory panel produced a non-finite value", s, last_err);
        s += term;
        sums.push_back(s);
        const double tol = cfg.tolerance(s);
        if (n >= 2 && std::abs(term) <= 1e-3 * tol && std::abs(prev_term) <= 1e-3 * tol)
            return {s, std::abs(term)};
        prev_term = term;
        if (sums.size() >= 2 * batch && sums.size() % batch == 0) {
            const std::size_t m = std::min(window, sums.size());
            double werr = 0.0;
            const double est = wynn_epsilon(std::span<const double>(sums).last(m), werr);
            const double etol = cfg.tolerance(est);
            const double diff = std::abs(est - prev_est);
            last_err = std::isfinite(diff) ? std::max(diff, werr) : werr;
            if (std::isfinite(prev_est) && diff <= etol && werr <= etol)
                return {est, last_err};
            prev_est = est;
        }
    }
    throw QuadratureError("oscillatory quadrature exhausted its panel budget", s, last_err);
}

/// Integral over the real line. Breakpoints mark kinks or cusps of f.
template <class F>
QuadEstimate real_line(F&& f, std::vector<double> breaks, const QuadratureConfig& cfg) {
    thread_local boost::math::quadrature::tanh_sinh<double> ts(12);
    if (breaks.empty()) breaks.push_back(0.0);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    QuadEstimate total;
    auto piece = [&](double a, double b) {
        double err = 0.0, l1 = 0.0;
        std::size_t levels = 0;
        const double v = ts.integrate(f, a, b, 1e-10, &err, &l1, &levels);
        total.value += v;
        total.error += err * l1;
    };
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) piece(breaks[i], breaks[i + 1]);

    const double lo = breaks.front();
    const double hi = breaks.back();
    piece(hi, hi + 1.0);
    piece(lo - 1.0, lo);
    LogScaleOptions opt;
    opt.start = 1.0;
    opt.max_chunks = 200;
    opt.depth = 3;
    opt.chunk_rel_tol = cfg.rel_tol;
    const auto right = log_scale([&](double s) { return f(hi + s); }, opt, cfg);
    const auto left = log_scale([&](double s) { return f(lo - s); }, opt, cfg);
    total.value += right.value + left.value;
    total.error += right.error + left.error;
    return total;
}

}  // namespace quad
}  // namespace levyh
