#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/tools/minima.hpp>

#include "scan3d/errors.hpp"
#include "scan3d/random_field.hpp"

namespace scan3d {

/// Largest alpha for which the approximation theorem is stated.
inline constexpr double kMaxAlpha = 0.1;
/// Positive floor applied to alpha before the sub-terms are evaluated.
inline constexpr double kMinAlpha = 1e-12;
/// l = t2^3 * (1 + kLMargin): the near-infimum admissible choice.
inline constexpr double kLMargin = 1e-9;

/**
 * The three real roots of alpha t^3 - t + 1 = 0 in ascending order, valid for
 * 0 < alpha < 4/27. Trigonometric closed form, each root Newton-polished.
 */
inline std::array<double, 3> cubic_roots(double alpha)
{
    if (!(alpha > 0.0 && alpha < 4.0 / 27.0)) {
        throw BoundValidityError("alpha t^3 - t + 1 has three real roots only for 0 < alpha < 4/27, got " +
                                 format_double(alpha));
    }
    // Depressed form t^3 + P t + Q with P = -1/alpha, Q = 1/alpha.
    const double P = -1.0 / alpha;
    const double Q = 1.0 / alpha;
    const double amp = 2.0 * std::sqrt(-P / 3.0);
    const double arg = std::clamp((3.0 * Q / (2.0 * P)) * std::sqrt(-3.0 / P), -1.0, 1.0);
    const double theta = std::acos(arg);
    std::array<double, 3> roots{};
    for (int k = 0; k < 3; ++k) {
        double t = amp * std::cos(theta / 3.0 - 2.0 * std::numbers::pi * k / 3.0);
        for (int it = 0; it < 60; ++it) {
            const double f = alpha * t * t * t - t + 1.0;
            const double df = 3.0 * alpha * t * t - 1.0;
            if (df == 0.0) break;
            const double step = f / df;
            t -= step;
            if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(t))) break;
        }
        roots[static_cast<std::size_t>(k)] = t;
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

/**
 * Second real root (ascending order) of alpha t^3 - t + 1 = 0 for
 * 0 < alpha <= 0.1. This is the smallest positive root, t2 = 1 + alpha + O(alpha^2).
 */
inline double solve_cubic_second_root(double alpha)
{
    if (!(alpha > 0.0 && alpha <= kMaxAlpha)) {
        throw BoundValidityError("alpha must lie in (0, 0.1], got " + format_double(alpha));
    }
    return cubic_roots(alpha)[1];
}

/// K(alpha) for a given l; throws when a denominator is not positive.
inline double kappa(double alpha, double l)
{
    const double la = l * alpha;
    const double base = 1.0 - alpha * (1.0 + la) * (1.0 + la);
    if (!(base > 0.0)) throw BoundValidityError("K(alpha): 1 - alpha(1 + l alpha)^2 <= 0");
    const double den = 1.0 - 2.0 * alpha * (1.0 + la) / (base * base);
    if (!(den > 0.0)) throw BoundValidityError("K(alpha): 1 - 2 alpha(1 + l alpha)/[...]^2 <= 0");
    const double num = (11.0 - 3.0 * alpha) / ((1.0 - alpha) * (1.0 - alpha)) +
                       2.0 * l * (1.0 + 3.0 * alpha) *
                           (2.0 + 3.0 * la - alpha * (2.0 - la) * (1.0 + la) * (1.0 + la)) / (base * base * base);
    return num / den;
}

inline double l_bound(double alpha, double K)
{
    const double a2 = alpha * alpha;
    const double a3 = a2 * alpha;
    const double a6 = a3 * a3;
    const double poly = 1.0 + alpha + 3.0 * a2;
    return 3.0 * K * poly * (poly + K * a3) + a6 * K * K * K + 9.0 * alpha * (4.0 + 3.0 * alpha + 3.0 * a2) + 55.1;
}

inline double e_term(double alpha, double eta)
{
    const double ae2 = alpha * eta * eta;
    const double g = 1.0 - ae2;
    const double inner = 1.0 + eta - 2.0 * alpha * eta;
    const double cond = g * g - ae2 * inner * inner;
    if (!(g > 0.0) || !(cond > 0.0)) {
        throw BoundValidityError("E(alpha): (1 - alpha eta^2)^2 - alpha eta^2 (1 + eta - 2 alpha eta)^2 <= 0");
    }
    const double a = 1.0 + (1.0 - 2.0 * alpha) * eta;
    const double num = std::pow(eta, 5) * a * a * a * a * (1.0 + alpha * (eta - 2.0)) *
                       (1.0 + eta + (1.0 - 3.0 * alpha) * eta * eta);
    return num / (2.0 * g * g * g * g * cond);
}

/// Cached sub-terms of the error factor at one alpha.
struct AlphaContext {
    double alpha = 0.0;
    double t2 = 1.0;
    double l = 1.0;
    double eta = 1.0;
    double K = 0.0;
    double L = 0.0;
    double E = 0.0;
    double Gamma = 0.0;
};

inline AlphaContext make_alpha_context(double alpha, double l)
{
    AlphaContext ctx;
    ctx.alpha = alpha;
    ctx.t2 = solve_cubic_second_root(alpha);
    if (!(l > ctx.t2 * ctx.t2 * ctx.t2)) throw BoundValidityError("l must exceed t2^3");
    ctx.l = l;
    ctx.eta = 1.0 + l * alpha;
    ctx.K = kappa(alpha, l);
    ctx.L = l_bound(alpha, ctx.K);
    ctx.E = e_term(alpha, ctx.eta);
    ctx.Gamma = ctx.L + ctx.E;
    return ctx;
}

inline AlphaContext make_alpha_context(double alpha)
{
    const double t2 = solve_cubic_second_root(alpha);
    return make_alpha_context(alpha, t2 * t2 * t2 * (1.0 + kLMargin));
}

/// How l > t2^3 is picked when evaluating F.
enum class LRule {
    near_infimum, ///< l = t2^3 (1 + 1e-9)
    minimize_f,   ///< l minimising F(alpha, m) numerically
};

namespace detail {
inline double f_from_context(const AlphaContext& c, double m, double one_minus_q1)
{
    return 1.0 + 3.0 / m + (c.Gamma / m + c.K) * one_minus_q1;
}

inline AlphaContext minimising_context(double alpha, double m, double one_minus_q1)
{
    const double t2 = solve_cubic_second_root(alpha);
    const double lo = t2 * t2 * t2 * (1.0 + kLMargin);
    auto valid = [&](double l) {
        try {
            make_alpha_context(alpha, l);
            return true;
        } catch (const BoundValidityError&) {
            return false;
        }
    };
    double hi = lo * 2.0;
    for (int i = 0; i < 60 && valid(hi); ++i) hi *= 2.0;
    double good = lo;
    for (int i = 0; i < 200 && hi - good > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (good + hi);
        (valid(mid) ? good : hi) = mid;
    }
    auto objective = [&](double l) { return f_from_context(make_alpha_context(alpha, l), m, one_minus_q1); };
    const auto best = boost::math::tools::brent_find_minima(objective, lo, good, 52);
    // Brent never evaluates the endpoints; F is often smallest right at the lower one.
    return best.second < objective(lo) ? make_alpha_context(alpha, best.first) : make_alpha_context(alpha, lo);
}
} // namespace detail

/**
 * F(alpha, m) = 1 + 3/m + [Gamma(alpha)/m + K(alpha)] (1 - q1).
 *
 * When one_minus_q1 is zero the bracket vanishes and the sub-terms are not
 * evaluated. Otherwise alpha is floored at kMinAlpha.
 */
inline double f_factor(double alpha, double m, double one_minus_q1, LRule rule = LRule::near_infimum)
{
    if (!(m >= 1.0)) throw ParameterError("F(alpha, m) needs m >= 1");
    if (!(one_minus_q1 >= 0.0)) throw ParameterError("1 - q1 must be nonnegative");
    if (alpha > kMaxAlpha) throw BoundValidityError("alpha exceeds 0.1: " + format_double(alpha));
    if (one_minus_q1 > alpha * (1.0 + 1e-12) + 1e-15) throw ParameterError("1 - q1 must not exceed alpha");
    if (one_minus_q1 == 0.0) return 1.0 + 3.0 / m;
    const double a = std::max(alpha, kMinAlpha);
    const AlphaContext ctx =
        rule == LRule::minimize_f ? detail::minimising_context(a, m, one_minus_q1) : make_alpha_context(a);
    return detail::f_from_context(ctx, m, one_minus_q1);
}

/// H(x, y, m) = (2x - y) / [1 + x - y + 2(x - y)^2]^(m - 1), no clamping.
inline double h_approx_raw(double x, double y, double m)
{
    const double d = x - y;
    return (2.0 * x - y) / std::pow(1.0 + d + 2.0 * d * d, m - 1.0);
}

/// H with 2x - y and the result clamped to [0, 1]; tolerates y > x.
inline double h_approx(double x, double y, double m)
{
    const double d = x - y;
    const double lead = std::clamp(2.0 * x - y, 0.0, 1.0);
    return std::clamp(lead / std::pow(1.0 + d + 2.0 * d * d, m - 1.0), 0.0, 1.0);
}

struct TheoremBound {
    double approx = 1.0;
    double err = 0.0;
};

/**
 * q_m ~ (2q1 - q2) / [1 + q1 - q2 + 2(q1 - q2)^2]^m with error at most
 * m F(alpha, m) (1 - q1)^2. Requires q1 >= 1 - alpha >= 0.9.
 */
inline TheoremBound theorem_bound(double q1, double q2, int m, double alpha, LRule rule = LRule::near_infimum)
{
    if (m < 1) throw ParameterError("theorem_bound needs m >= 1");
    if (!(alpha >= 0.0 && alpha <= kMaxAlpha)) {
        throw BoundValidityError("theorem inapplicable: alpha " + format_double(alpha) + " outside [0, 0.1]");
    }
    if (!(q1 >= 1.0 - alpha) || !(q1 >= 0.9)) {
        throw BoundValidityError("theorem inapplicable: q1 = " + format_double(q1) + " < 1 - alpha");
    }
    const double d = q1 - q2;
    const double omq = std::max(0.0, 1.0 - q1);
    TheoremBound out;
    out.approx = (2.0 * q1 - q2) / std::pow(1.0 + d + 2.0 * d * d, m);
    out.err = m * f_factor(alpha, m, std::min(omq, alpha), rule) * omq * omq;
    return out;
}

} // namespace scan3d
