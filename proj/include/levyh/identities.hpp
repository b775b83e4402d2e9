#pragma once

// Identity checks that tie the resolvent density to h by nested quadrature:
//
//  (a) resolvent equation  int u_q(y-x) u_r(z-y) dy = [u_r(z-x) - u_q(z-x)] / (q - r)
//  (b) cross identity      int u_q(y-x) u_r(y) dy   = [u_r(x) + u_q(-x)] / (r + q)
//  (c) U_q h               int u_q(y-x) h(y) dy     = [h(x) + u_q(-x)] / q
//  (d) q u_q(x) -> 0 as q -> 0
//
// Left-hand sides integrate over y with breakpoints at the kinks of the
// integrand and extrapolated tails; right-hand sides use single quadratures.

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "levyh/format.hpp"
#include "levyh/parallel.hpp"
#include "levyh/potential.hpp"

namespace levyh {

enum class Identity { Resolvent, Cross, UqH, Vanishing };

inline const char* to_string(Identity id) {
    switch (id) {
    case Identity::Resolvent: return "resolvent_equation";
    case Identity::Cross: return "cross_resolvent";
    case Identity::UqH: return "Uq_h";
    case Identity::Vanishing: return "q_uq_vanishes";
    }
    return "?";
}

struct IdentityTolerance {
    enum class Kind { Absolute, Relative } kind = Kind::Absolute;
    double value = 1e-6;

    static IdentityTolerance absolute(double v) { return {Kind::Absolute, v}; }
    static IdentityTolerance relative(double v) { return {Kind::Relative, v}; }
};

struct IdentityPoint {
    std::string label;
    double left = 0.0;
    double right = 0.0;
    double abs_err = 0.0;
    double rel_err = 0.0;
    bool skipped = false;
    std::string note;
    bool pass = false;
};

struct IdentityReport {
    Identity identity = Identity::Resolvent;
    std::vector<IdentityPoint> points;
    double max_abs_err = 0.0;
    double max_rel_err = 0.0;
    IdentityTolerance tolerance;
    bool pass = false;   // every point evaluated and within tolerance
};

namespace detail {

inline std::string label(std::initializer_list<std::pair<const char*, double>> kv) {
    std::string s;
    for (const auto& [k, v] : kv) {
        if (!s.empty()) s += ';';
        s += k;
        s += '=';
        s += format_double(v);
    }
    return s;
}

inline void finish_point(IdentityPoint& p, const IdentityTolerance& tol, double scale) {
    p.abs_err = std::abs(p.left - p.right);
    const double denom = scale > 0.0 ? scale : std::max(std::abs(p.left), std::abs(p.right));
    p.rel_err = denom > 0.0 ? p.abs_err / denom : p.abs_err;
    const double err = tol.kind == IdentityTolerance::Kind::Absolute ? p.abs_err : p.rel_err;
    p.pass = !p.skipped && err <= tol.value;
}

inline void finish_report(IdentityReport& rep) {
    rep.pass = !rep.points.empty();
    for (const auto& p : rep.points) {
        if (p.skipped) {
            rep.pass = false;
            continue;
        }
        rep.max_abs_err = std::max(rep.max_abs_err, p.abs_err);
        rep.max_rel_err = std::max(rep.max_rel_err, p.rel_err);
        rep.pass = rep.pass && p.pass;
    }
}

/// Runs `eval` for one point and converts quadrature failures into a skipped point.
template <class Eval>
IdentityPoint guarded(std::string label, const IdentityTolerance& tol, Eval&& eval) {
    IdentityPoint p;
    p.label = std::move(label);
    try {
        double scale = 0.0;
        eval(p, scale);
        finish_point(p, tol, scale);
    } catch (const QuadratureError& e) {
        p.skipped = true;
        p.pass = false;
        p.note = e.what();
    }
    return p;
}

}  // namespace detail

/// Both sides of the resolvent equation at one point; q and r must differ.
inline std::pair<double, double> resolvent_equation(const PotentialEvaluator& ev, double q, double r, double x,
                                                    double z) {
    if (std::abs(q - r) < 1e-12) throw std::invalid_argument("resolvent equation needs q != r");
    const double left = quad::real_line([&](double y) { return ev.u_q(q, y - x) * ev.u_q(r, z - y); },
                                        {x, z}, ev.config()).value;
    return {left, (ev.u_q(r, z - x) - ev.u_q(q, z - x)) / (q - r)};
}

/// Aitken's delta-squared limit of the last three terms.
inline double aitken_limit(double s0, double s1, double s2) {
    const double d1 = s1 - s0;
    const double d2 = s2 - s1;
    const double den = d2 - d1;
    if (den == 0.0) return s2;
    return s2 - d2 * d2 / den;
}

inline std::vector<IdentityReport> verify_identities(const PotentialEvaluator& ev,
                                                     const std::vector<double>& q_grid,
                                                     const std::vector<double>& x_grid,
                                                     IdentityTolerance tol,
                                                     unsigned threads = default_threads()) {
    if (q_grid.empty() || x_grid.empty())
        throw std::invalid_argument("verify_identities: grids must be nonempty");
    for (double q : q_grid)
        if (!(q > 0.0)) throw std::invalid_argument("verify_identities: q values must be > 0");

    const auto& cfg = ev.config();
    std::vector<IdentityReport> reports;

    // (a) unordered pairs q != r; the identity is symmetric in (q, r)
    {
        struct Job { double q, r, x; };
        std::vector<Job> jobs;
        for (std::size_t i = 0; i < q_grid.size(); ++i)
            for (std::size_t j = i + 1; j < q_grid.size(); ++j) {
                if (std::abs(q_grid[i] - q_grid[j]) < 1e-12) continue;
                for (double x : x_grid) jobs.push_back({q_grid[i], q_grid[j], x});
            }
        IdentityReport rep{Identity::Resolvent, std::vector<IdentityPoint>(jobs.size()), 0, 0, tol, false};
        parallel_for(jobs.size(), threads, [&](std::size_t k) {
            const auto [q, r, x] = jobs[k];
            const double z = 0.0;
            rep.points[k] = detail::guarded(detail::label({{"q", q}, {"r", r}, {"x", x}, {"z", z}}), tol,
                [&](IdentityPoint& p, double&) { std::tie(p.left, p.right) = resolvent_equation(ev, q, r, x, z); });
        });
        detail::finish_report(rep);
        reports.push_back(std::move(rep));
    }

    // (b) all ordered pairs, q = r included
    {
        struct Job { double q, r, x; };
        std::vector<Job> jobs;
        for (double q : q_grid)
            for (double r : q_grid)
                for (double x : x_grid) jobs.push_back({q, r, x});
        IdentityReport rep{Identity::Cross, std::vector<IdentityPoint>(jobs.size()), 0, 0, tol, false};
        parallel_for(jobs.size(), threads, [&](std::size_t k) {
            const auto [q, r, x] = jobs[k];
            rep.points[k] = detail::guarded(detail::label({{"q", q}, {"r", r}, {"x", x}}), tol,
                [&](IdentityPoint& p, double&) {
                    p.left = quad::real_line([&](double y) { return ev.u_q(q, y - x) * ev.u_q(r, y); },
                                             {x, 0.0}, cfg).value;
                    p.right = (ev.u_q(r, x) + ev.u_q(q, -x)) / (r + q);
                });
        });
        detail::finish_report(rep);
        reports.push_back(std::move(rep));
    }

    // (c) U_q h(x)
    {
        struct Job { double q, x; };
        std::vector<Job> jobs;
        for (double q : q_grid)
            for (double x : x_grid) jobs.push_back({q, x});
        IdentityReport rep{Identity::UqH, std::vector<IdentityPoint>(jobs.size()), 0, 0, tol, false};
        parallel_for(jobs.size(), threads, [&](std::size_t k) {
            const auto [q, x] = jobs[k];
            rep.points[k] = detail::guarded(detail::label({{"q", q}, {"x", x}}), tol,
                [&](IdentityPoint& p, double&) {
                    p.left = quad::real_line([&](double y) { return ev.u_q(q, y - x) * ev.h(y); },
                                             {x, 0.0}, cfg).value;
                    p.right = (ev.h(x) + ev.u_q(q, -x)) / q;
                });
        });
        detail::finish_report(rep);
        reports.push_back(std::move(rep));
    }

    // (d) q u_q(x) along q = 10^-1 .. 10^-10, limit by Aitken extrapolation;
    // relative errors are measured against the largest term of the sequence.
    {
        IdentityReport rep{Identity::Vanishing, std::vector<IdentityPoint>(x_grid.size()), 0, 0, tol, false};
        parallel_for(x_grid.size(), threads, [&](std::size_t k) {
            const double x = x_grid[k];
            rep.points[k] = detail::guarded(detail::label({{"x", x}, {"q_min", 1e-10}}), tol,
                [&](IdentityPoint& p, double& scale) {
                    std::vector<double> s;
                    for (int e = 1; e <= 10; ++e) {
                        const double q = std::pow(10.0, -e);
                        s.push_back(q * ev.u_q(q, x));
                    }
                    bool decreasing = true;
                    for (std::size_t i = 2; i < s.size(); ++i) decreasing = decreasing && s[i] < s[i - 1];
                    const std::size_t n = s.size();
                    p.left = std::abs(aitken_limit(s[n - 3], s[n - 2], s[n - 1]));
                    p.right = 0.0;
                    scale = *std::max_element(s.begin(), s.end());
                    if (!decreasing) {
                        // not a vanishing sequence: report the last term itself
                        p.left = s.back();
                        p.note = "sequence q*u_q(x) not decreasing";
                    }
                });
        });
        detail::finish_report(rep);
        reports.push_back(std::move(rep));
    }
    return reports;
}

inline bool all_pass(const std::vector<IdentityReport>& reports) {
    for (const auto& r : reports)
        if (!r.pass) return false;
    return !reports.empty();
}

/// CSV: identity,point,left,right,abs_err,rel_err,pass  (skipped points carry pass=skipped)
inline void write_identity_csv(std::ostream& os, const std::vector<IdentityReport>& reports) {
    os << "identity,point,left,right,abs_err,rel_err,pass\n";
    for (const auto& r : reports)
        for (const auto& p : r.points)
            os << to_string(r.identity) << ',' << csv_field(p.label) << ',' << format_double(p.left) << ','
               << format_double(p.right) << ',' << format_double(p.abs_err) << ','
               << format_double(p.rel_err) << ',' << (p.skipped ? "skipped" : (p.pass ? "true" : "false"))
               << '\n';
}

}  // namespace levyh
