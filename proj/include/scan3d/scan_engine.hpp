#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "scan3d/errors.hpp"
#include "scan3d/field.hpp"

namespace scan3d {

/**
 * Region extents T and window extents m of a scan. Construction only checks
 * that the window fits (1 <= m_j <= T_j); the stricter standing assumption
 * 2 <= m_j <= T_j - 1 used by the approximation is checked by
 * require_standard().
 */
class ScanGeometry {
public:
    ScanGeometry(Extent3 region, Extent3 window) : region_(region), window_(window)
    {
        if (!region.positive() || !window.positive()) {
            throw GeometryError("region and window extents must be positive (region " + region.str() + ", window " +
                                window.str() + ")");
        }
        for (int a = 0; a < 3; ++a) {
            if (window[a] > region[a]) {
                throw GeometryError("window " + window.str() + " does not fit in region " + region.str());
            }
        }
    }

    const Extent3& region() const noexcept { return region_; }
    const Extent3& window() const noexcept { return window_; }

    /// Number of admissible origins per axis, T_j - m_j + 1.
    Extent3 origin_extent() const noexcept
    {
        return {region_.d1 - window_.d1 + 1, region_.d2 - window_.d2 + 1, region_.d3 - window_.d3 + 1};
    }

    std::int64_t origin_count() const noexcept { return origin_extent().volume(); }

    void require_standard() const
    {
        for (int a = 0; a < 3; ++a) {
            if (window_[a] < 2 || window_[a] > region_[a] - 1) {
                throw GeometryError("window extents must satisfy 2 <= m_j <= T_j - 1 (region " + region_.str() +
                                    ", window " + window_.str() + ")");
            }
        }
    }

    /// T_j / (m_j - 1); requires m_j >= 2.
    std::array<double, 3> ratios() const noexcept
    {
        return {static_cast<double>(region_.d1) / (window_.d1 - 1), static_cast<double>(region_.d2) / (window_.d2 - 1),
                static_cast<double>(region_.d3) / (window_.d3 - 1)};
    }

    /// True when every (m_j - 1) divides T_j.
    bool divisible() const noexcept
    {
        for (int a = 0; a < 3; ++a) {
            if (window_[a] < 2 || region_[a] % (window_[a] - 1) != 0) return false;
        }
        return true;
    }

    friend bool operator==(const ScanGeometry&, const ScanGeometry&) = default;

private:
    Extent3 region_;
    Extent3 window_;
};

/**
 * Summed-volume table: entry (a, b, c) holds the sum of X over the first a, b
 * and c cells along each axis, so the table has a zero boundary plane and
 * extents (T1+1, T2+1, T3+1).
 */
class PrefixVolume {
public:
    PrefixVolume() = default;
    explicit PrefixVolume(const Field& field) { assign(field); }

    /// Rebuilds from `field`, reusing storage.
    void assign(const Field& field)
    {
        if (data_.empty() || !(field.dims() == dims_)) {
            // Interior entries are all rewritten below; only the zero planes need initialising.
            dims_ = field.dims();
            s2_ = static_cast<std::int64_t>(dims_.d3) + 1;
            s1_ = (static_cast<std::int64_t>(dims_.d2) + 1) * s2_;
            const auto total = static_cast<std::size_t>((static_cast<std::int64_t>(dims_.d1) + 1) * s1_);
            data_.assign(total, 0);
        }

        const auto cells = field.cells();
        std::size_t src = 0;
        for (int i = 0; i < dims_.d1; ++i) {
            for (int j = 0; j < dims_.d2; ++j) {
                std::int64_t* row = &data_[static_cast<std::size_t>((i + 1) * s1_ + (j + 1) * s2_ + 1)];
                const std::int64_t* above = row - s2_;
                const std::int64_t* before = row - s1_;
                const std::int64_t* diag = row - s1_ - s2_;
                std::int64_t run = 0;
                for (int k = 0; k < dims_.d3; ++k) {
                    run += cells[src++];
                    row[k] = run + above[k] + before[k] - diag[k];
                }
            }
        }
    }

    const Extent3& dims() const noexcept { return dims_; }

    /// Cumulative entry for padded coordinates 0 <= a <= T1, etc.
    std::int64_t at(int a, int b, int c) const noexcept
    {
        return data_[static_cast<std::size_t>(a * s1_ + b * s2_ + c)];
    }

    /// Sum over the box with zero-based origin `o` and extents `w`; unchecked.
    std::int64_t box_sum(const Index3& o, const Extent3& w) const noexcept
    {
        const std::int64_t base = o.i1 * s1_ + o.i2 * s2_ + o.i3;
        const std::int64_t d1 = w.d1 * s1_;
        const std::int64_t d2 = w.d2 * s2_;
        const std::int64_t d3 = w.d3;
        const std::int64_t* p = data_.data() + base;
        return p[d1 + d2 + d3] - p[d2 + d3] - p[d1 + d3] - p[d1 + d2] + p[d3] + p[d2] + p[d1] - p[0];
    }

    /// Visits every admissible origin's window sum in row-major order.
    template <class Visit>
    void for_each_window(const Extent3& w, Visit&& visit) const
    {
        const std::int64_t d1 = w.d1 * s1_;
        const std::int64_t d2 = w.d2 * s2_;
        const std::int64_t d3 = w.d3;
        const int n1 = dims_.d1 - w.d1 + 1;
        const int n2 = dims_.d2 - w.d2 + 1;
        const int n3 = dims_.d3 - w.d3 + 1;
        for (int i = 0; i < n1; ++i) {
            for (int j = 0; j < n2; ++j) {
                const std::int64_t* p = data_.data() + i * s1_ + j * s2_;
                for (int k = 0; k < n3; ++k, ++p) {
                    visit(p[d1 + d2 + d3] - p[d2 + d3] - p[d1 + d3] - p[d1 + d2] + p[d3] + p[d2] + p[d1] - p[0]);
                }
            }
        }
    }

private:
    Extent3 dims_{};
    std::int64_t s1_ = 0;
    std::int64_t s2_ = 0;
    std::vector<std::int64_t> data_;
};

inline PrefixVolume build_prefix(const Field& field)
{
    return PrefixVolume(field);
}

namespace detail {
inline void check_window(const Extent3& region, const Extent3& window)
{
    ScanGeometry(region, window);
}
} // namespace detail

/// Y at zero-based origin `origin`; requires 0 <= origin_j <= T_j - m_j.
inline std::int64_t window_sum(const PrefixVolume& prefix, const Index3& origin, const Extent3& window)
{
    detail::check_window(prefix.dims(), window);
    const Extent3& t = prefix.dims();
    if (origin.i1 < 0 || origin.i2 < 0 || origin.i3 < 0 || origin.i1 > t.d1 - window.d1 ||
        origin.i2 > t.d2 - window.d2 || origin.i3 > t.d3 - window.d3) {
        throw BoundsError("window origin (" + std::to_string(origin.i1) + "," + std::to_string(origin.i2) + "," +
                          std::to_string(origin.i3) + ") out of range for window " + window.str() + " in region " +
                          t.str());
    }
    return prefix.box_sum(origin, window);
}

inline std::int64_t scan_statistic(const PrefixVolume& prefix, const Extent3& window)
{
    detail::check_window(prefix.dims(), window);
    std::int64_t best = std::numeric_limits<std::int64_t>::min();
    prefix.for_each_window(window, [&](std::int64_t y) { best = std::max(best, y); });
    return best;
}

/// Maximum window sum S over all admissible origins.
inline std::int64_t scan_statistic(const Field& field, const Extent3& window)
{
    return scan_statistic(PrefixVolume(field), window);
}

inline std::int64_t exceedance_count(const PrefixVolume& prefix, const Extent3& window, std::int64_t tau)
{
    detail::check_window(prefix.dims(), window);
    std::int64_t count = 0;
    prefix.for_each_window(window, [&](std::int64_t y) { count += (y >= tau) ? 1 : 0; });
    return count;
}

/// Number of origins whose window sum is at least tau.
inline std::int64_t exceedance_count(const Field& field, const Extent3& window, std::int64_t tau)
{
    return exceedance_count(PrefixVolume(field), window, tau);
}

} // namespace scan3d
