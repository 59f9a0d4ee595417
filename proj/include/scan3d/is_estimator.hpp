#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "scan3d/errors.hpp"
#include "scan3d/field.hpp"
#include "scan3d/parallel.hpp"
#include "scan3d/random_field.hpp"
#include "scan3d/rng.hpp"
#include "scan3d/scan_engine.hpp"

namespace scan3d {

/// Two-sided 95% normal quantile used for every simulation half-width.
inline constexpr double kZ95 = 1.96;

/// Iterations per aggregation batch. Fixed so results do not depend on the worker count.
inline constexpr std::int64_t kBatchSize = 1024;

/// Which threshold the exceedance count of an importance-sampling iteration uses.
enum class Step4Threshold {
    tau,           ///< count windows with Y >= tau (unbiased)
    sampled_total, ///< count windows with Y >= T, the sampled seeded-window total
};

struct SimulationOptions {
    std::uint64_t seed = 0;
    int threads = 0; ///< 0 = hardware concurrency
    Step4Threshold step4 = Step4Threshold::tau;
};

/// P(S >= tau) estimated as B * rho_hat.
struct TailEstimate {
    double tail = 0.0;
    double beta = 0.0;
    double rho_hat = 0.0;
    double rho_var = 0.0;
    double bonferroni = 0.0;
    std::int64_t iterations = 0;
};

/// One estimated base probability Q_rts = P(S <= n) over a reduced region.
struct QEstimate {
    double value = 1.0;     ///< clamp(1 - B rho_hat, 0, 1)
    double raw_value = 1.0; ///< 1 - B rho_hat before clamping
    double beta = 0.0;      ///< 1.96 B sqrt(rho_var / iterations)
    double rho_hat = 0.0;
    double rho_var = 0.0;
    double bonferroni = 0.0;
    std::int64_t iterations = 0;
    std::array<int, 3> rts{0, 0, 0};
};

/// B = (number of origins) * P(Y_111 >= tau).
inline double bonferroni_bound(const ScanGeometry& geometry, const DistributionModel& model, std::int64_t tau)
{
    const AggregateDistribution agg = window_aggregate_distribution(model, geometry.window());
    return static_cast<double>(geometry.origin_count()) * agg.upper_tail(tau);
}

/**
 * Importance-sampling estimate of P(S >= tau) over `geometry`.
 *
 * Each iteration draws a total T from Y | Y >= tau, drops it into a uniformly
 * chosen window (cells drawn from their law given the sum), fills the rest of
 * the region i.i.d., and records 1 / C where C counts windows reaching the
 * threshold. Then P(S >= tau) = B E[1/C]. Iteration k uses substream
 * (seed, stream, k).
 */
inline TailEstimate is_tail_estimate(const ScanGeometry& geometry, const DistributionModel& model, std::int64_t tau,
                                     std::int64_t iterations, const SimulationOptions& options = {},
                                     std::uint64_t stream = streams::kImportanceBase)
{
    if (tau < 1) throw ParameterError("importance sampling needs tau >= 1");
    if (iterations < 2) throw ParameterError("importance sampling needs at least 2 iterations");

    TailEstimate out;
    out.iterations = iterations;
    const Extent3 window = geometry.window();
    const AggregateDistribution agg = window_aggregate_distribution(model, window);
    const double mass = agg.upper_tail(tau);
    if (!(mass > 0.0)) return out;
    std::optional<TruncatedTail> truncated;
    try {
        truncated.emplace(agg, tau);
    } catch (const EmptySupportError&) {
        return out;
    }

    out.bonferroni = static_cast<double>(geometry.origin_count()) * mass;
    const Extent3 region = geometry.region();
    const Extent3 origins = geometry.origin_extent();
    const CellSampler sampler(model);

    struct Worker {
        Field field;
        PrefixVolume prefix;
        ConditionalFiller filler;
    };
    auto make_worker = [&] { return Worker{Field(region), PrefixVolume(), ConditionalFiller(model, window)}; };

    const std::int64_t window_plane = static_cast<std::int64_t>(window.d2) * window.d3;
    auto run = [&](std::int64_t batch, Worker& w) {
        RunningStats stats;
        const std::int64_t begin = batch * kBatchSize;
        const std::int64_t end = std::min(iterations, begin + kBatchSize);
        auto cells = w.field.cells();
        for (std::int64_t k = begin; k < end; ++k) {
            RandomStream rng(options.seed, stream, static_cast<std::uint64_t>(k));
            const std::int64_t total = truncated->sample(rng);
            auto j = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(origins.volume())));
            const int j3 = static_cast<int>(j % origins.d3);
            j /= origins.d3;
            const int j2 = static_cast<int>(j % origins.d2);
            const int j1 = static_cast<int>(j / origins.d2);

            sampler.fill(cells, rng);
            for (int a = 0; a < window.d1; ++a) {
                for (int b = 0; b < window.d2; ++b) {
                    std::int32_t* row = &w.field.at(j1 + a, j2 + b, j3);
                    std::fill(row, row + window.d3, 0);
                }
            }
            w.filler.draw(total, rng, [&](std::int64_t local) {
                const int a = static_cast<int>(local / window_plane);
                const int b = static_cast<int>((local / window.d3) % window.d2);
                const int c = static_cast<int>(local % window.d3);
                ++w.field.at(j1 + a, j2 + b, j3 + c);
            });

            w.prefix.assign(w.field);
            const std::int64_t threshold = options.step4 == Step4Threshold::tau ? tau : total;
            std::int64_t hits = 0;
            w.prefix.for_each_window(window, [&](std::int64_t y) { hits += (y >= threshold) ? 1 : 0; });
            // The seeded window always reaches the threshold, so hits >= 1.
            stats.push(1.0 / static_cast<double>(hits));
        }
        return stats;
    };

    const std::int64_t batches = (iterations + kBatchSize - 1) / kBatchSize;
    const auto parts = run_batches<RunningStats>(batches, options.threads, make_worker, run);
    RunningStats merged;
    for (const auto& part : parts) merged.merge(part);

    out.rho_hat = merged.mean;
    out.rho_var = merged.sample_variance();
    out.tail = out.bonferroni * out.rho_hat;
    out.beta = kZ95 * out.bonferroni * std::sqrt(out.rho_var / static_cast<double>(iterations));
    return out;
}

/// Region r(m1-1) x t(m2-1) x s(m3-1) on which Q_rts is defined.
inline Extent3 q_region(int r, int t, int s, const Extent3& window)
{
    for (int v : {r, t, s}) {
        if (v != 2 && v != 3) throw ParameterError("Q_rts indices must be 2 or 3");
    }
    if (window.d1 < 2 || window.d2 < 2 || window.d3 < 2) {
        throw GeometryError("Q_rts needs window extents >= 2, got " + window.str());
    }
    return {r * (window.d1 - 1), t * (window.d2 - 1), s * (window.d3 - 1)};
}

/// Q_rts(n) = P(S <= n) over q_region(r, t, s), via the importance-sampling tail at tau = n + 1.
inline QEstimate estimate_q(int r, int t, int s, const Extent3& window, const DistributionModel& model,
                            std::int64_t n, std::int64_t iterations, const SimulationOptions& options = {})
{
    if (n < 0) throw ParameterError("n must be nonnegative");
    const ScanGeometry geometry(q_region(r, t, s, window), window);
    const auto stream = streams::kImportanceBase + static_cast<std::uint64_t>(100 * r + 10 * t + s);
    const TailEstimate tail = is_tail_estimate(geometry, model, n + 1, iterations, options, stream);

    QEstimate q;
    q.raw_value = 1.0 - tail.tail;
    q.value = std::clamp(q.raw_value, 0.0, 1.0);
    q.beta = tail.beta;
    q.rho_hat = tail.rho_hat;
    q.rho_var = tail.rho_var;
    q.bonferroni = tail.bonferroni;
    q.iterations = iterations;
    q.rts = {r, t, s};
    return q;
}

/// Empirical law of the scan statistic from whole-region simulation.
struct ScanHistogram {
    std::vector<std::int64_t> counts; ///< counts[v] = repetitions with S == v
    std::int64_t repetitions = 0;

    /// Fraction of repetitions with S <= n.
    double cdf(std::int64_t n) const noexcept
    {
        if (n < 0) return 0.0;
        std::int64_t hits = 0;
        for (std::int64_t v = 0; v <= n && v < static_cast<std::int64_t>(counts.size()); ++v) {
            hits += counts[static_cast<std::size_t>(v)];
        }
        return static_cast<double>(hits) / static_cast<double>(repetitions);
    }

    double beta(std::int64_t n) const noexcept
    {
        const double p = cdf(n);
        return kZ95 * std::sqrt(p * (1.0 - p) / static_cast<double>(repetitions));
    }
};

/// Naive (hit-or-miss) simulation of the whole region; repetition k uses substream (seed, kNaiveScan, k).
inline ScanHistogram naive_scan_distribution(const ScanGeometry& geometry, const DistributionModel& model,
                                             std::int64_t repetitions, const SimulationOptions& options = {})
{
    if (repetitions < 2) throw ParameterError("naive simulation needs at least 2 repetitions");
    const CellSampler sampler(model);
    const Extent3 region = geometry.region();
    const Extent3 window = geometry.window();

    struct Worker {
        Field field;
        PrefixVolume prefix;
    };
    auto make_worker = [&] { return Worker{Field(region), PrefixVolume()}; };
    auto run = [&](std::int64_t batch, Worker& w) {
        std::vector<std::int64_t> counts;
        const std::int64_t begin = batch * kBatchSize;
        const std::int64_t end = std::min(repetitions, begin + kBatchSize);
        for (std::int64_t k = begin; k < end; ++k) {
            RandomStream rng(options.seed, streams::kNaiveScan, static_cast<std::uint64_t>(k));
            sampler.fill(w.field.cells(), rng);
            w.prefix.assign(w.field);
            const std::int64_t s = scan_statistic(w.prefix, window);
            if (s >= static_cast<std::int64_t>(counts.size())) counts.resize(static_cast<std::size_t>(s) + 1, 0);
            ++counts[static_cast<std::size_t>(s)];
        }
        return counts;
    };

    const std::int64_t batches = (repetitions + kBatchSize - 1) / kBatchSize;
    const auto parts = run_batches<std::vector<std::int64_t>>(batches, options.threads, make_worker, run);
    ScanHistogram hist;
    hist.repetitions = repetitions;
    for (const auto& part : parts) {
        if (part.size() > hist.counts.size()) hist.counts.resize(part.size(), 0);
        for (std::size_t v = 0; v < part.size(); ++v) hist.counts[v] += part[v];
    }
    return hist;
}

struct NaiveEstimate {
    double p_hat = 1.0;
    double beta = 0.0;
    std::int64_t repetitions = 0;
};

/// P(S <= n) by whole-region simulation with the CLT half-width 1.96 sqrt(p(1-p)/reps).
inline NaiveEstimate naive_scan_estimate(const ScanGeometry& geometry, const DistributionModel& model, std::int64_t n,
                                         std::int64_t repetitions, const SimulationOptions& options = {})
{
    const ScanHistogram hist = naive_scan_distribution(geometry, model, repetitions, options);
    return {hist.cdf(n), hist.beta(n), repetitions};
}

} // namespace scan3d
