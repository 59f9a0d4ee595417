#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "scan3d/errors.hpp"
#include "scan3d/field.hpp"
#include "scan3d/random_field.hpp"

namespace scan3d {

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> parts;
    for (;;) {
        const auto pos = s.find(sep);
        parts.push_back(trim(s.substr(0, pos)));
        if (pos == std::string_view::npos) break;
        s.remove_prefix(pos + 1);
    }
    return parts;
}

template <class T>
T parse_number(std::string_view text, std::string_view what)
{
    text = trim(text);
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw ParameterError("cannot parse " + std::string(what) + " from '" + std::string(text) + "'");
    }
    return value;
}

} // namespace detail

/// Parses "bernoulli:p=0.00005", "binomial:m=10,p=0.0025" or "poisson:lambda=0.025".
inline DistributionModel parse_model(std::string_view spec)
{
    spec = detail::trim(spec);
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos) {
        throw ParameterError("model must look like bernoulli:p=..., binomial:m=...,p=... or poisson:lambda=...");
    }
    const std::string_view kind = spec.substr(0, colon);
    double p = -1.0;
    double lambda = -1.0;
    std::int64_t trials = -1;
    for (const auto item : detail::split(spec.substr(colon + 1), ',')) {
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw ParameterError("model parameter '" + std::string(item) + "' lacks '='");
        const auto key = detail::trim(item.substr(0, eq));
        const auto value = item.substr(eq + 1);
        if (key == "p") p = detail::parse_number<double>(value, "p");
        else if (key == "lambda") lambda = detail::parse_number<double>(value, "lambda");
        else if (key == "m") trials = detail::parse_number<std::int64_t>(value, "m");
        else throw ParameterError("unknown model parameter '" + std::string(key) + "'");
    }
    if (kind == "bernoulli" && trials < 0 && lambda < 0) return DistributionModel::bernoulli(p);
    if (kind == "binomial" && lambda < 0) return DistributionModel::binomial(trials, p);
    if (kind == "poisson" && trials < 0 && p < 0) return DistributionModel::poisson(lambda);
    throw ParameterError("invalid model '" + std::string(spec) + "'");
}

/// Parses "a,b,c" into positive extents.
inline Extent3 parse_extent(std::string_view text)
{
    const auto parts = detail::split(text, ',');
    if (parts.size() != 3) throw ParameterError("extent must be three comma-separated integers, got '" + std::string(text) + "'");
    const Extent3 e{detail::parse_number<int>(parts[0], "extent"), detail::parse_number<int>(parts[1], "extent"),
                    detail::parse_number<int>(parts[2], "extent")};
    if (!e.positive()) throw GeometryError("extents must be positive, got " + e.str());
    return e;
}

/// Parses "5", "1..3" or comma lists of either ("1..3,7") into nonnegative n values.
inline std::vector<std::int64_t> parse_n_values(std::string_view text)
{
    std::vector<std::int64_t> values;
    for (const auto item : detail::split(text, ',')) {
        const auto dots = item.find("..");
        if (dots == std::string_view::npos) {
            values.push_back(detail::parse_number<std::int64_t>(item, "n"));
            continue;
        }
        const auto lo = detail::parse_number<std::int64_t>(item.substr(0, dots), "n");
        const auto hi = detail::parse_number<std::int64_t>(item.substr(dots + 2), "n");
        if (hi < lo) throw ParameterError("empty n range '" + std::string(item) + "'");
        if (hi - lo > 100000) throw ParameterError("n range '" + std::string(item) + "' is too long");
        for (auto n = lo; n <= hi; ++n) values.push_back(n);
    }
    for (const auto n : values) {
        if (n < 0) throw ParameterError("n must be nonnegative");
    }
    return values;
}

} // namespace scan3d
