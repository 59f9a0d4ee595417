#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "scan3d/errors.hpp"
#include "scan3d/field.hpp"
#include "scan3d/random_field.hpp"

namespace scan3d {

inline constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

/// One published row. Bracket tables carry the bracket fields and leave the budget columns absent.
struct PublishedRow {
    int n = 0;
    double naive = kAbsent;
    double naive_pm = kAbsent;
    double point = kAbsent;
    double e_app = kAbsent;
    double e_sim = kAbsent;
    double total = kAbsent;
    double bracket_next = kAbsent;    ///< P(S(L+1) <= n)
    double bracket_next_pm = kAbsent;
    double bracket_floor = kAbsent;   ///< P(S(L) <= n)
    double bracket_floor_pm = kAbsent;
};

struct PublishedSection {
    std::string label;
    DistributionModel model;
    Extent3 region;
    Extent3 window;
    std::vector<PublishedRow> rows;
};

struct PublishedTable {
    int id = 0;
    std::string caption;
    bool bracketed = false;
    double resolution = 1e-6; ///< one unit in the last printed decimal place
    std::vector<PublishedSection> sections;
};

namespace detail {
inline PublishedRow row(int n, double naive, double point, double e_app, double e_sim, double total)
{
    PublishedRow r;
    r.n = n;
    r.naive = naive;
    r.point = point;
    r.e_app = e_app;
    r.e_sim = e_sim;
    r.total = total;
    return r;
}

inline PublishedRow bracket_row(int n, double next, double next_pm, double naive, double naive_pm, double floor_v,
                                double floor_pm)
{
    PublishedRow r;
    r.n = n;
    r.bracket_next = next;
    r.bracket_next_pm = next_pm;
    r.naive = naive;
    r.naive_pm = naive_pm;
    r.bracket_floor = floor_v;
    r.bracket_floor_pm = floor_pm;
    return r;
}
} // namespace detail

/// Published values for tables 1 to 4 (importance sampling with 1e5 iterations, naive columns with 1e3 repetitions).
inline PublishedTable published_table(int id)
{
    using detail::bracket_row;
    using detail::row;
    const Extent3 r60{60, 60, 60};
    switch (id) {
    case 1:
        return {1,
                "Bernoulli model, window 5x5x5, region 60x60x60",
                false,
                1e-6,
                {{"p=0.00005",
                  DistributionModel::bernoulli(0.00005),
                  r60,
                  {5, 5, 5},
                  {row(1, 0.841806, 0.851076, 0.011849, 0.064889, 0.076738),
                   row(2, 0.999119, 0.999192, 0.000000, 0.000170, 0.000170),
                   row(3, 0.999997, 0.999997, 0.000000, 3e-7, 3e-7)}},
                 {"p=0.0001",
                  DistributionModel::bernoulli(0.0001),
                  r60,
                  {5, 5, 5},
                  {row(2, 0.993294, 0.993192, 0.000010, 0.001367, 0.001377),
                   row(3, 0.999963, 0.999963, 0.000000, 0.000005, 0.000005),
                   row(4, 0.999999, 0.999999, 0.000000, 2e-9, 2e-9)}}}};
    case 2:
        return {2,
                "Bernoulli p=0.0025, region 60x60x60, two windows of volume 64",
                false,
                1e-6,
                {{"m=4,4,4",
                  DistributionModel::bernoulli(0.0025),
                  r60,
                  {4, 4, 4},
                  {row(5, 0.961691, 0.963506, 0.000038, 0.003622, 0.003660),
                   row(6, 0.999006, 0.999023, 0.000000, 0.000071, 0.000071),
                   row(7, 0.999980, 0.999980, 0.000000, 0.000001, 0.000001),
                   row(8, 0.999999, 0.999999, 0.000000, 2e-9, 2e-9)}},
                 {"m=8,4,2",
                  DistributionModel::bernoulli(0.0025),
                  r60,
                  {8, 4, 2},
                  {row(5, 0.969189, 0.969110, 0.000007, 0.003387, 0.003395),
                   row(6, 0.999297, 0.999228, 0.000000, 0.000071, 0.000071),
                   row(7, 0.999984, 0.999984, 0.000000, 0.000001, 0.000001),
                   row(8, 0.999999, 0.999999, 0.000000, 2e-9, 2e-9)}}}};
    case 3:
        return {3,
                "Bernoulli p=0.0001, window 10x10x10, region 185x185x185 (L=20 and L=21 brackets)",
                true,
                1e-8,
                {{"p=0.0001",
                  DistributionModel::bernoulli(0.0001),
                  {185, 185, 185},
                  {10, 10, 10},
                  {bracket_row(4, 0.97524633, 0.00754004, 0.97465263, 0.00618987, 0.97491935, 0.00643099),
                   bracket_row(5, 0.99931055, 0.00015833, 0.99935163, 0.00014759, 0.99938629, 0.00013490),
                   bracket_row(6, 0.99998641, 0.00000272, 0.99998632, 0.00000326, 0.99998784, 0.00000230)}}}};
    case 4:
        return {4,
                "Binomial and Poisson models, window 4x4x4, region 84x84x84",
                false,
                1e-6,
                {{"binomial m=10,p=0.0025",
                  DistributionModel::binomial(10, 0.0025),
                  {84, 84, 84},
                  {4, 4, 4},
                  {row(10, 0.726386, 0.723224, 0.007763, 0.032197, 0.039960),
                   row(11, 0.954605, 0.955417, 0.000123, 0.003079, 0.003202),
                   row(12, 0.993938, 0.993906, 0.000001, 0.000331, 0.000333),
                   row(13, 0.999289, 0.999284, 0.000000, 0.000033, 0.000033),
                   row(14, 0.999923, 0.999921, 0.000000, 0.000003, 0.000003),
                   row(15, 0.999992, 0.999992, 0.000000, 3e-7, 3e-7)}},
                 {"poisson lambda=0.025",
                  DistributionModel::poisson(0.025),
                  {84, 84, 84},
                  {4, 4, 4},
                  {row(10, 0.713184, 0.708481, 0.009211, 0.035294, 0.044506),
                   row(11, 0.950947, 0.950197, 0.000143, 0.003345, 0.003488),
                   row(12, 0.993624, 0.993452, 0.000002, 0.000365, 0.000367),
                   row(13, 0.999218, 0.999210, 0.000000, 0.000038, 0.000038),
                   row(14, 0.999912, 0.999911, 0.000000, 0.000003, 0.000003),
                   row(15, 0.999990, 0.999990, 0.000000, 3e-7, 3e-7)}}}};
    default:
        throw ParameterError("table id must be 1, 2, 3 or 4, got " + std::to_string(id));
    }
}

} // namespace scan3d
