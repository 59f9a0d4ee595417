#pragma once

#include <stdexcept>
#include <string>

namespace scan3d {

/// Invalid distribution parameters, iteration counts or similar caller input.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Window/region extents that violate the scan geometry requirements.
class GeometryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Window origin outside the admissible range.
class BoundsError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// A truncated tail P(Y >= tau) with zero mass.
class EmptySupportError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Error-factor terms whose denominators are not positive, or an alpha outside
/// the range where the approximation theorem holds.
class BoundValidityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// No critical value exists inside the window support.
class UnreachableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace scan3d
