#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "scan3d/bound_kernel.hpp"
#include "scan3d/errors.hpp"
#include "scan3d/is_estimator.hpp"
#include "scan3d/scan_engine.hpp"

namespace scan3d {

/// Per-axis ratios L_j = T_j / (m_j - 1).
using Ratios = std::array<double, 3>;

struct PipelineOptions {
    std::int64_t iterations = 100000;
    SimulationOptions simulation;
    bool squared_delta22 = false;  ///< square delta_22 inside delta_2 (derivation-consistent form)
    bool monotone_enforce = true;  ///< Q_3.. := min(Q_3.., Q_2..) along each axis before the cascade
    LRule l_rule = LRule::near_infimum;
};

/// The eight base probabilities Q_rts, r, t, s in {2, 3}.
class QTable {
public:
    static constexpr std::size_t slot(int r, int t, int s) noexcept
    {
        return static_cast<std::size_t>((r - 2) * 4 + (t - 2) * 2 + (s - 2));
    }

    static QTable constant(double q)
    {
        QTable table;
        for (int r = 2; r <= 3; ++r)
            for (int t = 2; t <= 3; ++t)
                for (int s = 2; s <= 3; ++s) {
                    QEstimate e;
                    e.value = e.raw_value = q;
                    e.rts = {r, t, s};
                    table.set(r, t, s, e);
                }
        return table;
    }

    void set(int r, int t, int s, const QEstimate& e)
    {
        check(r, t, s);
        entries_[slot(r, t, s)] = e;
        filled_ |= 1u << slot(r, t, s);
    }

    const QEstimate& at(int r, int t, int s) const
    {
        check(r, t, s);
        return entries_[slot(r, t, s)];
    }

    double q(int r, int t, int s) const { return at(r, t, s).value; }
    double beta(int r, int t, int s) const { return at(r, t, s).beta; }

    bool complete() const noexcept { return filled_ == 0xffu; }

    const std::array<QEstimate, 8>& entries() const noexcept { return entries_; }

private:
    static void check(int r, int t, int s)
    {
        for (int v : {r, t, s}) {
            if (v != 2 && v != 3) throw ParameterError("Q_rts indices must be 2 or 3");
        }
    }

    std::array<QEstimate, 8> entries_{};
    unsigned filled_ = 0;
};

/// Makes the table nonincreasing in each index (a larger region cannot raise P(S <= n)).
inline QTable enforce_monotone(const QTable& in)
{
    if (!in.complete()) throw ParameterError("incomplete Q table");
    QTable out = in;
    auto lower = [&](int r, int t, int s, int r0, int t0, int s0) {
        QEstimate e = out.at(r, t, s);
        e.value = std::min(e.value, out.q(r0, t0, s0));
        out.set(r, t, s, e);
    };
    for (int a = 2; a <= 3; ++a)
        for (int b = 2; b <= 3; ++b) {
            lower(3, a, b, 2, a, b);
        }
    for (int a = 2; a <= 3; ++a)
        for (int b = 2; b <= 3; ++b) {
            lower(a, 3, b, a, 2, b);
        }
    for (int a = 2; a <= 3; ++a)
        for (int b = 2; b <= 3; ++b) {
            lower(a, b, 3, a, b, 2);
        }
    return out;
}

/// Runs estimate_q for all eight (r, t, s).
inline QTable estimate_q_table(const Extent3& window, const DistributionModel& model, std::int64_t n,
                               const PipelineOptions& options)
{
    QTable table;
    for (int r = 2; r <= 3; ++r)
        for (int t = 2; t <= 3; ++t)
            for (int s = 2; s <= 3; ++s) {
                table.set(r, t, s, estimate_q(r, t, s, window, model, n, options.iterations, options.simulation));
            }
    return table;
}

/// Intermediate values of the three-level H cascade.
struct Cascade {
    std::array<std::array<double, 2>, 2> gamma_ts{}; ///< [t-2][s-2] = H(Q_2ts, Q_3ts, L1)
    std::array<double, 2> gamma_s{};                 ///< [s-2] = H(gamma_2s, gamma_3s, L2)
    double point = 1.0;                              ///< H(gamma_2, gamma_3, L3)
    double point_raw = 1.0;                          ///< same, unclamped at the last level
};

inline void check_ratios(const Ratios& L, double minimum)
{
    for (double l : L) {
        if (!(l >= minimum)) {
            throw GeometryError("ratios L_j = T_j/(m_j - 1) must be >= " + format_double(minimum) + ", got " +
                                format_double(l));
        }
    }
}

inline Cascade cascade_point(const QTable& q, const Ratios& L)
{
    if (!q.complete()) throw ParameterError("incomplete Q table");
    check_ratios(L, 3.0);
    Cascade c;
    for (int t = 2; t <= 3; ++t)
        for (int s = 2; s <= 3; ++s) {
            c.gamma_ts[t - 2][s - 2] = h_approx(q.q(2, t, s), q.q(3, t, s), L[0]);
        }
    for (int s = 2; s <= 3; ++s) {
        c.gamma_s[s - 2] = h_approx(c.gamma_ts[0][s - 2], c.gamma_ts[1][s - 2], L[1]);
    }
    c.point_raw = h_approx_raw(c.gamma_s[0], c.gamma_s[1], L[2]);
    c.point = h_approx(c.gamma_s[0], c.gamma_s[1], L[2]);
    return c;
}

/// Which plug-in alpha failed the 0.1 validity gate.
enum class GateLevel { none, alpha233, alpha23, alpha3 };

inline const char* gate_name(GateLevel g) noexcept
{
    switch (g) {
    case GateLevel::none: return "none";
    case GateLevel::alpha233: return "alpha233";
    case GateLevel::alpha23: return "alpha23";
    case GateLevel::alpha3: return "alpha3";
    }
    return "none";
}

struct ApproximationError {
    bool applicable = true;
    GateLevel failing = GateLevel::none;
    double alpha233 = 0.0;
    double alpha23 = 0.0;
    double alpha3 = 0.0;
    double F1 = std::numeric_limits<double>::quiet_NaN();
    double F2 = std::numeric_limits<double>::quiet_NaN();
    double F3 = std::numeric_limits<double>::quiet_NaN();
    double delta_22 = 0.0;
    double delta_23 = 0.0;
    double delta_2 = 0.0;
    double E_app = std::numeric_limits<double>::infinity();
};

namespace detail {
inline double sq(double x) noexcept
{
    return x * x;
}

/// F at a level: (1 - q1) of every application is bounded by the level's alpha.
inline double level_factor(double alpha, double m, LRule rule)
{
    return f_factor(alpha, m, alpha, rule);
}
} // namespace detail

/**
 * Approximation-error budget E_app of the three-level cascade, with plug-in
 * alphas: alpha233 = max_ts(1 - Q_2ts), alpha23 = max_s(1 - gamma_2s),
 * alpha3 = max_s(1 - gamma_s). Each must be <= 0.1, otherwise the result is
 * marked inapplicable with the failing level and E_app = +inf.
 */
inline ApproximationError approximation_error(const QTable& q, const Ratios& L, const Cascade& c,
                                              bool squared_delta22 = false, LRule rule = LRule::near_infimum)
{
    using detail::sq;
    const auto [L1, L2, L3] = L;
    ApproximationError e;
    for (int t = 2; t <= 3; ++t)
        for (int s = 2; s <= 3; ++s) e.alpha233 = std::max(e.alpha233, 1.0 - q.q(2, t, s));
    e.alpha23 = std::max(1.0 - c.gamma_ts[0][0], 1.0 - c.gamma_ts[0][1]);
    e.alpha3 = std::max(1.0 - c.gamma_s[0], 1.0 - c.gamma_s[1]);
    e.alpha233 = std::max(e.alpha233, 0.0);
    e.alpha23 = std::max(e.alpha23, 0.0);
    e.alpha3 = std::max(e.alpha3, 0.0);

    if (e.alpha233 > kMaxAlpha) e.failing = GateLevel::alpha233;
    else if (e.alpha23 > kMaxAlpha) e.failing = GateLevel::alpha23;
    else if (e.alpha3 > kMaxAlpha) e.failing = GateLevel::alpha3;
    if (e.failing != GateLevel::none) {
        e.applicable = false;
        return e;
    }

    e.F3 = detail::level_factor(e.alpha233, L1 - 1.0, rule);
    e.F2 = detail::level_factor(e.alpha23, L2 - 1.0, rule);
    e.F1 = detail::level_factor(e.alpha3, L3 - 1.0, rule);

    e.delta_22 = 1.0 - c.gamma_ts[0][0] + (L1 - 1.0) * e.F3 * sq(1.0 - q.q(2, 2, 2));
    e.delta_23 = 1.0 - c.gamma_ts[0][1] + (L1 - 1.0) * e.F3 * sq(1.0 - q.q(2, 2, 3));
    const double d22_term = squared_delta22 ? sq(e.delta_22) : e.delta_22;
    e.delta_2 = 1.0 - c.gamma_s[0] + (L2 - 1.0) * e.F2 * d22_term +
                (L2 - 2.0) * (L1 - 1.0) * e.F3 * (sq(1.0 - q.q(2, 2, 2)) + sq(1.0 - q.q(2, 3, 2)));

    double sum_2ts = 0.0;
    for (int t = 2; t <= 3; ++t)
        for (int s = 2; s <= 3; ++s) sum_2ts += sq(1.0 - q.q(2, t, s));
    e.E_app = (L3 - 1.0) * e.F1 * sq(e.delta_2) + (L3 - 2.0) * (L2 - 1.0) * e.F2 * (sq(e.delta_22) + sq(e.delta_23)) +
              (L3 - 2.0) * (L2 - 2.0) * (L1 - 1.0) * e.F3 * sum_2ts;
    return e;
}

struct SimulationError {
    std::array<double, 8> u_rts{};                     ///< indexed by QTable::slot
    std::array<std::array<double, 2>, 2> u_ts{};       ///< [t-2][s-2]
    std::array<double, 2> u_s{};                       ///< [s-2]
    double delta_bar_22 = 0.0;
    double delta_bar_23 = 0.0;
    double delta_bar_2 = 0.0;
    double E_sf = 0.0;
    double E_sapp = std::numeric_limits<double>::infinity();
    double E_sim = std::numeric_limits<double>::infinity();
};

/**
 * Simulation error: E_sf propagates the half-widths beta_rts through the
 * cascade, E_sapp re-evaluates the approximation bound on beta-inflated
 * inputs u, and E_sim = E_sf + E_sapp. Non-finite F factors (inapplicable
 * theorem) give E_sapp = E_sim = +inf.
 */
inline SimulationError simulation_error(const QTable& q, const Ratios& L, const Cascade& c, double F1, double F2,
                                        double F3, bool squared_delta22 = false)
{
    using detail::sq;
    const auto [L1, L2, L3] = L;
    SimulationError e;

    double beta_sum = 0.0;
    for (const auto& entry : q.entries()) beta_sum += entry.beta;
    e.E_sf = (L1 - 2.0) * (L2 - 2.0) * (L3 - 2.0) * beta_sum;

    for (int r = 2; r <= 3; ++r)
        for (int t = 2; t <= 3; ++t)
            for (int s = 2; s <= 3; ++s) {
                e.u_rts[QTable::slot(r, t, s)] = 1.0 - q.q(r, t, s) + q.beta(r, t, s);
            }
    for (int t = 2; t <= 3; ++t)
        for (int s = 2; s <= 3; ++s) {
            e.u_ts[t - 2][s - 2] = 1.0 - c.gamma_ts[t - 2][s - 2] + (L1 - 2.0) * (q.beta(2, t, s) + q.beta(3, t, s));
        }
    for (int s = 2; s <= 3; ++s) {
        const double b = q.beta(2, 2, s) + q.beta(3, 2, s) + q.beta(2, 3, s) + q.beta(3, 3, s);
        e.u_s[s - 2] = 1.0 - c.gamma_s[s - 2] + (L1 - 2.0) * (L2 - 2.0) * b;
    }

    if (!std::isfinite(F1) || !std::isfinite(F2) || !std::isfinite(F3)) {
        e.E_sapp = std::numeric_limits<double>::infinity();
        e.E_sim = std::numeric_limits<double>::infinity();
        return e;
    }

    auto u = [&](int r, int t, int s) { return e.u_rts[QTable::slot(r, t, s)]; };
    e.delta_bar_22 = e.u_ts[0][0] + (L1 - 1.0) * F3 * sq(u(2, 2, 2));
    e.delta_bar_23 = e.u_ts[0][1] + (L1 - 1.0) * F3 * sq(u(2, 2, 3));
    const double d22_term = squared_delta22 ? sq(e.delta_bar_22) : e.delta_bar_22;
    e.delta_bar_2 = e.u_s[0] + (L2 - 1.0) * F2 * d22_term + (L2 - 2.0) * (L1 - 1.0) * F3 * (sq(u(2, 2, 2)) + sq(u(2, 3, 2)));

    double sum_u2ts = 0.0;
    for (int t = 2; t <= 3; ++t)
        for (int s = 2; s <= 3; ++s) sum_u2ts += sq(u(2, t, s));
    e.E_sapp = (L3 - 1.0) * F1 * sq(e.delta_bar_2) +
               (L3 - 2.0) * (L2 - 1.0) * F2 * (sq(e.delta_bar_22) + sq(e.delta_bar_23)) +
               (L3 - 2.0) * (L2 - 2.0) * (L1 - 1.0) * F3 * sum_u2ts;
    e.E_sim = e.E_sf + e.E_sapp;
    return e;
}

struct ErrorBudget {
    Cascade cascade;
    ApproximationError approximation;
    SimulationError simulation;
    double total = std::numeric_limits<double>::infinity(); ///< E_app + E_sim
};

inline ErrorBudget error_budget(const QTable& q, const Ratios& L, bool squared_delta22 = false,
                                LRule rule = LRule::near_infimum)
{
    ErrorBudget b;
    b.cascade = cascade_point(q, L);
    b.approximation = approximation_error(q, L, b.cascade, squared_delta22, rule);
    b.simulation = simulation_error(q, L, b.cascade, b.approximation.F1, b.approximation.F2, b.approximation.F3,
                                    squared_delta22);
    b.total = b.approximation.E_app + b.simulation.E_sim;
    return b;
}

struct ApproxReport {
    ScanGeometry geometry;
    DistributionModel model;
    std::int64_t n = 0;
    Ratios L{};
    double point = 1.0;
    double E_app = 0.0;
    double E_sim = 0.0;
    double total = 0.0;
    bool applicable = true;
    GateLevel failing = GateLevel::none;
    QTable q_table{};   ///< values fed to the cascade (after monotone enforcement when enabled)
    QTable q_raw{};     ///< estimator output
    ErrorBudget budget{};
    std::uint64_t seed = 0;
    std::int64_t iterations = 0;
    double elapsed_seconds = 0.0;
};

/// Builds a report for ratios L from an already estimated Q table.
inline ApproxReport report_from_table(const ScanGeometry& geometry, const DistributionModel& model, std::int64_t n,
                                      const Ratios& L, const QTable& q_raw, const PipelineOptions& options)
{
    ApproxReport rep{geometry, model};
    rep.n = n;
    rep.L = L;
    rep.q_raw = q_raw;
    rep.q_table = options.monotone_enforce ? enforce_monotone(q_raw) : q_raw;
    rep.budget = error_budget(rep.q_table, L, options.squared_delta22, options.l_rule);
    rep.point = rep.budget.cascade.point;
    rep.E_app = rep.budget.approximation.E_app;
    rep.E_sim = rep.budget.simulation.E_sim;
    rep.total = rep.budget.total;
    rep.applicable = rep.budget.approximation.applicable;
    rep.failing = rep.budget.approximation.failing;
    rep.seed = options.simulation.seed;
    rep.iterations = options.iterations;
    return rep;
}

/// Approximates P(S <= n) over `geometry` from the eight simulated Q_rts; requires (m_j - 1) | T_j and L_j >= 4.
inline ApproxReport approximate_cdf(const ScanGeometry& geometry, const DistributionModel& model, std::int64_t n,
                                    const PipelineOptions& options = {})
{
    const auto start = std::chrono::steady_clock::now();
    geometry.require_standard();
    if (!geometry.divisible()) {
        throw GeometryError("T_j must be multiples of m_j - 1 (region " + geometry.region().str() + ", window " +
                            geometry.window().str() + "); use interpolated_cdf");
    }
    const Ratios L = geometry.ratios();
    check_ratios(L, 4.0);
    const QTable q = estimate_q_table(geometry.window(), model, n, options);
    ApproxReport rep = report_from_table(geometry, model, n, L, q, options);
    rep.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

/// Bracketed approximation for regions whose extents are not multiples of m_j - 1.
struct InterpolatedReport {
    ApproxReport lower; ///< ratios floor(T_j/(m_j-1)) + 1 on non-divisible axes
    ApproxReport upper; ///< ratios floor(T_j/(m_j-1))
    double weight = 0.0;
    double point = 1.0;
    double total = 0.0;
    double bracket_min = 1.0;
    double bracket_max = 1.0;
    bool inverted = false; ///< lower.point > upper.point
};

/**
 * Linear interpolation between the two bracketing cascades. The weight is the
 * mean over axes of frac(T_j / (m_j - 1)); the point is
 * (1 - w) upper + w lower and the total error is the larger bracket total plus
 * half the bracket width. Both brackets share one Q table.
 */
inline InterpolatedReport interpolated_cdf(const ScanGeometry& geometry, const DistributionModel& model,
                                           std::int64_t n, const PipelineOptions& options = {})
{
    const auto start = std::chrono::steady_clock::now();
    geometry.require_standard();
    const Extent3 region = geometry.region();
    const Extent3 window = geometry.window();
    Ratios upper_L{};
    Ratios lower_L{};
    std::array<int, 3> up_ext{};
    std::array<int, 3> low_ext{};
    double frac_sum = 0.0;
    for (int a = 0; a < 3; ++a) {
        const int step = window[a] - 1;
        const int whole = region[a] / step;
        const bool exact = region[a] % step == 0;
        frac_sum += static_cast<double>(region[a] % step) / step;
        upper_L[static_cast<std::size_t>(a)] = whole;
        lower_L[static_cast<std::size_t>(a)] = exact ? whole : whole + 1;
        up_ext[static_cast<std::size_t>(a)] = whole * step;
        low_ext[static_cast<std::size_t>(a)] = (exact ? whole : whole + 1) * step;
    }
    check_ratios(upper_L, 4.0);

    const QTable q = estimate_q_table(window, model, n, options);
    const ScanGeometry upper_geo({up_ext[0], up_ext[1], up_ext[2]}, window);
    const ScanGeometry lower_geo({low_ext[0], low_ext[1], low_ext[2]}, window);

    InterpolatedReport out{report_from_table(lower_geo, model, n, lower_L, q, options),
                           report_from_table(upper_geo, model, n, upper_L, q, options)};
    out.weight = frac_sum / 3.0;
    out.point = (1.0 - out.weight) * out.upper.point + out.weight * out.lower.point;
    out.bracket_min = std::min(out.lower.point, out.upper.point);
    out.bracket_max = std::max(out.lower.point, out.upper.point);
    out.inverted = out.lower.point > out.upper.point;
    out.total = std::max(out.lower.total, out.upper.total) + 0.5 * (out.bracket_max - out.bracket_min);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.lower.elapsed_seconds = out.upper.elapsed_seconds = elapsed;
    return out;
}

/// Point estimate and total error of P(S <= n), interpolating when the geometry is not divisible.
struct CdfPoint {
    double point = 1.0;
    double total = 0.0;
    bool applicable = true;
};

inline CdfPoint evaluate_cdf(const ScanGeometry& geometry, const DistributionModel& model, std::int64_t n,
                             const PipelineOptions& options)
{
    if (geometry.divisible()) {
        const ApproxReport rep = approximate_cdf(geometry, model, n, options);
        return {rep.point, rep.total, rep.applicable};
    }
    const InterpolatedReport rep = interpolated_cdf(geometry, model, n, options);
    return {rep.point, rep.total, rep.lower.applicable && rep.upper.applicable};
}

struct CriticalValue {
    std::int64_t tau = 1;
    double attained = 0.0; ///< estimated P(S >= tau), plus the total error in conservative mode
};

/**
 * Smallest tau with estimated P(S >= tau) <= significance, scanning n = tau - 1
 * upward from 0. Conservative mode adds the total error bound before comparing
 * (an inapplicable bound never passes). Throws UnreachableError when no tau
 * within the window support qualifies. `evaluate` defaults to evaluate_cdf.
 */
inline CriticalValue critical_value(const ScanGeometry& geometry, const DistributionModel& model, double significance,
                                    const PipelineOptions& options = {}, bool conservative = false,
                                    std::function<CdfPoint(std::int64_t)> evaluate = {})
{
    if (!(significance > 0.0 && significance <= 1.0)) {
        throw ParameterError("significance must lie in (0, 1], got " + format_double(significance));
    }
    if (!evaluate) {
        evaluate = [&](std::int64_t n) { return evaluate_cdf(geometry, model, n, options); };
    }
    const AggregateDistribution agg = window_aggregate_distribution(model, geometry.window());
    const std::int64_t max_support =
        agg.support_max() ? *agg.support_max() : static_cast<std::int64_t>(agg.cdf_table().size()) - 1;
    for (std::int64_t n = 0; n < max_support; ++n) {
        const CdfPoint cdf = evaluate(n);
        double tail = 1.0 - cdf.point;
        if (conservative) tail = cdf.applicable ? tail + cdf.total : std::numeric_limits<double>::infinity();
        if (tail <= significance) return {n + 1, tail};
    }
    throw UnreachableError("no critical value within the window support (max " + std::to_string(max_support) +
                           ") reaches significance " + format_double(significance));
}

} // namespace scan3d
