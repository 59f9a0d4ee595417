#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "scan3d/approx_pipeline.hpp"
#include "scan3d/is_estimator.hpp"
#include "scan3d/published_tables.hpp"

namespace scan3d {

/// One published-vs-computed comparison; `within` is |computed - published| <= tolerance.
struct ComparisonCell {
    std::string column;
    double published = 0.0;
    double computed = 0.0;
    double tolerance = 0.0;
    bool within = false;

    double deviation() const noexcept { return computed - published; }
};

struct TableRowResult {
    std::string section;
    std::int64_t n = 0;
    std::optional<ApproxReport> report;             ///< divisible geometries
    std::optional<InterpolatedReport> interpolated; ///< non-divisible geometries
    std::optional<NaiveEstimate> naive;
    PublishedRow published;
    std::vector<ComparisonCell> cells;

    double point() const { return report ? report->point : interpolated->point; }
    double total() const { return report ? report->total : interpolated->total; }
    double e_app() const
    {
        return report ? report->E_app : std::max(interpolated->lower.E_app, interpolated->upper.E_app);
    }
    double e_sim() const
    {
        return report ? report->E_sim : std::max(interpolated->lower.E_sim, interpolated->upper.E_sim);
    }
};

struct TableResult {
    PublishedTable table;
    bool squared_delta22 = true;
    std::vector<TableRowResult> rows;

    bool all_within() const
    {
        for (const auto& row : rows)
            for (const auto& c : row.cells)
                if (!c.within) return false;
        return true;
    }
};

struct TableOptions {
    PipelineOptions pipeline;
    std::int64_t repetitions = 1000; ///< naive whole-region repetitions; 0 skips the naive column
    std::function<void(const std::string&)> progress;
};

namespace detail {
inline ComparisonCell compare(std::string column, double published, double computed, double tolerance)
{
    ComparisonCell c{std::move(column), published, computed, tolerance, false};
    c.within = std::isfinite(tolerance) && std::abs(computed - published) <= tolerance;
    return c;
}

/// Half-width of a published naive estimate from 1e3 repetitions.
inline double published_naive_beta(double p)
{
    return kZ95 * std::sqrt(std::max(p * (1.0 - p), 0.0) / 1000.0);
}

/// Our naive half-width; a sample with no events either way uses the rule-of-three bound 3 / N.
inline double naive_halfwidth(const NaiveEstimate& e)
{
    if (e.p_hat <= 0.0 || e.p_hat >= 1.0) return 3.0 / static_cast<double>(e.repetitions);
    return e.beta;
}
} // namespace detail

/**
 * Recomputes a published table. Point columns are compared with tolerance
 * published total error + computed total error (bracket columns use the
 * published half-widths); naive columns with 3 (our beta + published beta).
 * Every tolerance also carries one unit of the last printed decimal, since
 * published values are rounded or truncated to that place.
 */
inline TableResult run_published_table(int id, const TableOptions& options)
{
    TableResult result{published_table(id), options.pipeline.squared_delta22, {}};
    const double res = result.table.resolution;
    for (const auto& section : result.table.sections) {
        const ScanGeometry geometry(section.region, section.window);
        std::optional<ScanHistogram> hist;
        if (options.repetitions > 0) {
            if (options.progress) options.progress("table " + std::to_string(id) + " [" + section.label + "] naive simulation");
            hist = naive_scan_distribution(geometry, section.model, options.repetitions, options.pipeline.simulation);
        }
        for (const auto& pub : section.rows) {
            if (options.progress) {
                options.progress("table " + std::to_string(id) + " [" + section.label + "] n=" + std::to_string(pub.n));
            }
            TableRowResult row;
            row.section = section.label;
            row.n = pub.n;
            row.published = pub;
            if (geometry.divisible()) row.report = approximate_cdf(geometry, section.model, pub.n, options.pipeline);
            else row.interpolated = interpolated_cdf(geometry, section.model, pub.n, options.pipeline);

            if (result.table.bracketed) {
                const auto& in = *row.interpolated;
                row.cells.push_back(detail::compare("bracket_next", pub.bracket_next, in.lower.point,
                                                    pub.bracket_next_pm + in.lower.total + res));
                row.cells.push_back(detail::compare("bracket_floor", pub.bracket_floor, in.upper.point,
                                                    pub.bracket_floor_pm + in.upper.total + res));
            } else {
                row.cells.push_back(detail::compare("point", pub.point, row.point(), pub.total + row.total() + res));
            }
            if (hist) {
                row.naive = NaiveEstimate{hist->cdf(pub.n), hist->beta(pub.n), hist->repetitions};
                const double pub_beta =
                    std::isnan(pub.naive_pm) ? detail::published_naive_beta(pub.naive) : pub.naive_pm;
                row.cells.push_back(detail::compare("naive", pub.naive, row.naive->p_hat,
                                                    3.0 * (detail::naive_halfwidth(*row.naive) + pub_beta) + res));
            }
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

} // namespace scan3d
