#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scan3d/errors.hpp"

namespace scan3d {

/// Extents of a 3D box of lattice cells.
struct Extent3 {
    int d1 = 1;
    int d2 = 1;
    int d3 = 1;

    constexpr int operator[](int axis) const noexcept
    {
        return axis == 0 ? d1 : (axis == 1 ? d2 : d3);
    }

    constexpr std::int64_t volume() const noexcept
    {
        return static_cast<std::int64_t>(d1) * d2 * d3;
    }

    constexpr bool positive() const noexcept { return d1 >= 1 && d2 >= 1 && d3 >= 1; }

    friend constexpr bool operator==(const Extent3&, const Extent3&) = default;

    std::string str() const
    {
        return std::to_string(d1) + "x" + std::to_string(d2) + "x" + std::to_string(d3);
    }
};

/// Zero-based lattice coordinate.
struct Index3 {
    int i1 = 0;
    int i2 = 0;
    int i3 = 0;

    friend constexpr bool operator==(const Index3&, const Index3&) = default;
};

/// Row-major linear index with i3 fastest.
constexpr std::int64_t linear_index(const Extent3& dims, int i1, int i2, int i3) noexcept
{
    return (static_cast<std::int64_t>(i1) * dims.d2 + i2) * dims.d3 + i3;
}

/// Dense integer lattice X[i1][i2][i3], i3 fastest.
class Field {
public:
    Field() = default;

    explicit Field(Extent3 dims) : dims_(dims)
    {
        if (!dims.positive()) {
            throw ParameterError("field extents must be positive, got " + dims.str());
        }
        cells_.assign(static_cast<std::size_t>(dims.volume()), 0);
    }

    Field(Extent3 dims, std::vector<std::int32_t> cells) : dims_(dims), cells_(std::move(cells))
    {
        if (!dims.positive() || static_cast<std::int64_t>(cells_.size()) != dims.volume()) {
            throw ParameterError("field cell count does not match extents " + dims.str());
        }
    }

    const Extent3& dims() const noexcept { return dims_; }
    std::int64_t size() const noexcept { return static_cast<std::int64_t>(cells_.size()); }

    std::int32_t& at(int i1, int i2, int i3) noexcept
    {
        return cells_[static_cast<std::size_t>(linear_index(dims_, i1, i2, i3))];
    }
    std::int32_t at(int i1, int i2, int i3) const noexcept
    {
        return cells_[static_cast<std::size_t>(linear_index(dims_, i1, i2, i3))];
    }

    std::span<std::int32_t> cells() noexcept { return cells_; }
    std::span<const std::int32_t> cells() const noexcept { return cells_; }

    void clear() noexcept { std::fill(cells_.begin(), cells_.end(), 0); }

private:
    Extent3 dims_{};
    std::vector<std::int32_t> cells_;
};

} // namespace scan3d
