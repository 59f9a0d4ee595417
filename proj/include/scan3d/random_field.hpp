#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/poisson.hpp>

#include "scan3d/errors.hpp"
#include "scan3d/field.hpp"
#include "scan3d/rng.hpp"

namespace scan3d {

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double value)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

enum class CellLaw { bernoulli, binomial, poisson };

/// Null-hypothesis law of a single lattice cell.
class DistributionModel {
public:
    static DistributionModel bernoulli(double p)
    {
        check_probability(p);
        return DistributionModel(CellLaw::bernoulli, p, 1, 0.0);
    }

    static DistributionModel binomial(std::int64_t trials, double p)
    {
        check_probability(p);
        if (trials < 1) {
            throw ParameterError("binomial trials must be >= 1, got " + std::to_string(trials));
        }
        return DistributionModel(CellLaw::binomial, p, trials, 0.0);
    }

    static DistributionModel poisson(double lambda)
    {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) {
            throw ParameterError("poisson lambda must be > 0, got " + format_double(lambda));
        }
        return DistributionModel(CellLaw::poisson, 0.0, 0, lambda);
    }

    CellLaw kind() const noexcept { return kind_; }
    double p() const noexcept { return p_; }
    std::int64_t trials() const noexcept { return trials_; }
    double lambda() const noexcept { return lambda_; }

    double mean() const noexcept
    {
        return kind_ == CellLaw::poisson ? lambda_ : static_cast<double>(trials_) * p_;
    }

    /// Largest attainable value, or nullopt for unbounded support.
    std::optional<std::int64_t> max_value() const noexcept
    {
        if (kind_ == CellLaw::poisson) return std::nullopt;
        return trials_;
    }

    /// Most likely value; the pmf is nonincreasing beyond it.
    std::int64_t mode() const noexcept
    {
        if (kind_ == CellLaw::poisson) return static_cast<std::int64_t>(std::floor(lambda_));
        return std::min<std::int64_t>(trials_, static_cast<std::int64_t>(std::floor((trials_ + 1) * p_)));
    }

    double pmf(std::int64_t k) const
    {
        if (k < 0) return 0.0;
        if (kind_ == CellLaw::poisson) {
            return boost::math::pdf(boost::math::poisson_distribution<double>(lambda_), static_cast<double>(k));
        }
        if (k > trials_) return 0.0;
        if (p_ == 0.0) return k == 0 ? 1.0 : 0.0;
        if (p_ == 1.0) return k == trials_ ? 1.0 : 0.0;
        return boost::math::pdf(boost::math::binomial_distribution<double>(static_cast<double>(trials_), p_),
                                static_cast<double>(k));
    }

    /// P(X >= k), evaluated on the upper tail directly rather than as 1 - cdf.
    double upper_tail(std::int64_t k) const
    {
        if (k <= 0) return 1.0;
        if (kind_ == CellLaw::poisson) {
            return boost::math::cdf(
                boost::math::complement(boost::math::poisson_distribution<double>(lambda_), static_cast<double>(k - 1)));
        }
        if (k > trials_) return 0.0;
        if (p_ == 0.0) return 0.0;
        if (p_ == 1.0) return 1.0;
        return boost::math::cdf(boost::math::complement(
            boost::math::binomial_distribution<double>(static_cast<double>(trials_), p_), static_cast<double>(k - 1)));
    }

    /// Text form accepted by the command line, e.g. "binomial:m=10,p=0.0025".
    std::string describe() const
    {
        switch (kind_) {
        case CellLaw::bernoulli: return "bernoulli:p=" + format_double(p_);
        case CellLaw::binomial: return "binomial:m=" + std::to_string(trials_) + ",p=" + format_double(p_);
        case CellLaw::poisson: return "poisson:lambda=" + format_double(lambda_);
        }
        return {};
    }

    friend bool operator==(const DistributionModel&, const DistributionModel&) = default;

private:
    DistributionModel(CellLaw kind, double p, std::int64_t trials, double lambda)
        : kind_(kind), p_(p), trials_(trials), lambda_(lambda)
    {
    }

    static void check_probability(double p)
    {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ParameterError("probability must lie in [0,1], got " + format_double(p));
        }
    }

    CellLaw kind_;
    double p_;
    std::int64_t trials_;
    double lambda_;
};

/// Pmf tables stop once the cumulative mass passes this level (unbounded laws).
inline constexpr double kTableMassCutoff = 1.0 - 1e-15;

/**
 * Exact law of the sum Y of N i.i.d. cells. Bernoulli(p) cells sum to
 * Binomial(N, p), Binomial(m, p) cells to Binomial(mN, p) and Poisson(λ) cells
 * to Poisson(λN). The pmf/cdf tables are truncated at kTableMassCutoff; point
 * queries and upper tails are always evaluated exactly.
 */
class AggregateDistribution {
public:
    AggregateDistribution(const DistributionModel& cell, std::int64_t cells)
        : cell_(cell), cells_(cells), law_(aggregate_law(cell, cells))
    {
        double acc = 0.0;
        const auto max = law_.max_value();
        for (std::int64_t t = 0;; ++t) {
            const double p = law_.pmf(t);
            acc += p;
            pmf_.push_back(p);
            cdf_.push_back(std::min(acc, 1.0));
            if (max && t >= *max) break;
            if (t > law_.mode() && (acc >= kTableMassCutoff || p <= 1e-300)) break;
        }
    }

    const DistributionModel& cell_law() const noexcept { return cell_; }
    const DistributionModel& law() const noexcept { return law_; }
    std::int64_t cells() const noexcept { return cells_; }

    std::int64_t support_min() const noexcept { return 0; }
    std::optional<std::int64_t> support_max() const noexcept { return law_.max_value(); }

    const std::vector<double>& pmf_table() const noexcept { return pmf_; }
    const std::vector<double>& cdf_table() const noexcept { return cdf_; }

    double pmf(std::int64_t t) const { return law_.pmf(t); }
    double upper_tail(std::int64_t tau) const { return law_.upper_tail(tau); }

private:
    static DistributionModel aggregate_law(const DistributionModel& cell, std::int64_t cells)
    {
        if (cells < 1) throw ParameterError("aggregate needs at least one cell");
        switch (cell.kind()) {
        case CellLaw::bernoulli: return DistributionModel::binomial(cells, cell.p());
        case CellLaw::binomial: return DistributionModel::binomial(cell.trials() * cells, cell.p());
        case CellLaw::poisson: return DistributionModel::poisson(cell.lambda() * static_cast<double>(cells));
        }
        throw ParameterError("unknown cell law");
    }

    DistributionModel cell_;
    std::int64_t cells_;
    DistributionModel law_;
    std::vector<double> pmf_;
    std::vector<double> cdf_;
};

inline AggregateDistribution window_aggregate_distribution(const DistributionModel& model, const Extent3& window)
{
    if (!window.positive()) throw ParameterError("window extents must be positive, got " + window.str());
    return AggregateDistribution(model, window.volume());
}

/// Law of Y conditioned on Y >= tau, sampled by inverse cdf on the renormalised tail.
class TruncatedTail {
public:
    TruncatedTail(const AggregateDistribution& agg, std::int64_t tau) : tau_(std::max<std::int64_t>(tau, 0))
    {
        mass_ = agg.upper_tail(tau_);
        if (!(mass_ > 0.0)) {
            throw EmptySupportError("P(Y >= " + std::to_string(tau) + ") is zero");
        }
        const auto max = agg.support_max();
        const std::int64_t mode = agg.law().mode();
        double acc = 0.0;
        for (std::int64_t t = tau_; !max || t <= *max; ++t) {
            const double p = agg.pmf(t);
            acc += p;
            cumulative_.push_back(acc);
            if (t > mode && p <= 1e-17 * acc) break;
        }
        if (!(acc > 0.0)) {
            throw EmptySupportError("P(Y >= " + std::to_string(tau) + ") underflows");
        }
        law_ = agg.law();
    }

    std::int64_t tau() const noexcept { return tau_; }
    double mass() const noexcept { return mass_; }

    /// p_T(t) = P(Y = t) / P(Y >= tau).
    double probability(std::int64_t t) const { return t < tau_ ? 0.0 : law_->pmf(t) / mass_; }

    std::int64_t sample(RandomStream& rng) const
    {
        const double u = rng.uniform() * cumulative_.back();
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        const auto idx = std::min<std::ptrdiff_t>(it - cumulative_.begin(),
                                                  static_cast<std::ptrdiff_t>(cumulative_.size()) - 1);
        return tau_ + idx;
    }

private:
    std::int64_t tau_;
    double mass_ = 0.0;
    std::vector<double> cumulative_;
    std::optional<DistributionModel> law_;
};

inline std::int64_t sample_truncated_aggregate(const AggregateDistribution& agg, std::int64_t tau, RandomStream& rng)
{
    return TruncatedTail(agg, tau).sample(rng);
}

/**
 * I.i.d. cell sampler. Sparse laws (P(X != 0) <= 0.25) are filled by geometric
 * skipping between nonzero cells, with values drawn from X | X >= 1; dense laws
 * use a per-cell inverse cdf. Both routes draw from the same law.
 */
class CellSampler {
public:
    static constexpr double kSparseThreshold = 0.25;

    explicit CellSampler(const DistributionModel& model) : model_(model)
    {
        p_nonzero_ = model.upper_tail(1);
        sparse_ = p_nonzero_ <= kSparseThreshold;
        if (p_nonzero_ > 0.0) log_zero_ = std::log1p(-p_nonzero_);

        const auto max = model.max_value();
        double acc = 0.0;
        for (std::int64_t k = 0;; ++k) {
            const double p = model.pmf(k);
            acc += p;
            cdf_.push_back(acc);
            if (k >= 1) nonzero_cdf_.push_back(acc - model.pmf(0));
            if (max && k >= *max) break;
            if (k >= 1 && k > model.mode() && p <= 1e-18) break;
        }
        for (auto& c : nonzero_cdf_) c /= std::max(nonzero_cdf_.empty() ? 1.0 : nonzero_cdf_.back(), 1e-300);
    }

    const DistributionModel& model() const noexcept { return model_; }
    double nonzero_probability() const noexcept { return p_nonzero_; }
    bool sparse() const noexcept { return sparse_; }

    std::int32_t draw(RandomStream& rng) const
    {
        const double u = rng.uniform();
        if (model_.kind() == CellLaw::bernoulli) return u < model_.p() ? 1 : 0;
        return lookup(cdf_, u, 0);
    }

    std::int32_t draw_nonzero(RandomStream& rng) const
    {
        if (model_.kind() == CellLaw::bernoulli) return 1;
        return lookup(nonzero_cdf_, rng.uniform(), 1);
    }

    /// Overwrites every entry of `cells` with an i.i.d. draw.
    void fill(std::span<std::int32_t> cells, RandomStream& rng) const
    {
        if (!sparse_) {
            for (auto& c : cells) c = draw(rng);
            return;
        }
        std::fill(cells.begin(), cells.end(), 0);
        if (p_nonzero_ <= 0.0) return;
        const auto n = static_cast<std::int64_t>(cells.size());
        for (std::int64_t pos = skip(rng); pos < n; pos += 1 + skip(rng)) {
            cells[static_cast<std::size_t>(pos)] = draw_nonzero(rng);
        }
    }

private:
    /// Number of zero cells before the next nonzero one.
    std::int64_t skip(RandomStream& rng) const
    {
        const double g = std::floor(std::log(rng.uniform_open0()) / log_zero_);
        return g >= 4.0e18 ? std::numeric_limits<std::int64_t>::max() / 2 : static_cast<std::int64_t>(g);
    }

    static std::int32_t lookup(const std::vector<double>& cdf, double u, std::int32_t offset)
    {
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        auto idx = it - cdf.begin();
        if (idx >= static_cast<std::ptrdiff_t>(cdf.size())) idx = static_cast<std::ptrdiff_t>(cdf.size()) - 1;
        return static_cast<std::int32_t>(idx) + offset;
    }

    DistributionModel model_;
    double p_nonzero_ = 0.0;
    double log_zero_ = 0.0;
    bool sparse_ = false;
    std::vector<double> cdf_;
    std::vector<double> nonzero_cdf_;
};

inline Field sample_field(const Extent3& dims, const DistributionModel& model, RandomStream& rng)
{
    Field field(dims);
    CellSampler(model).fill(field.cells(), rng);
    return field;
}

/**
 * Draws window cell values from their exact joint law given that they sum to T.
 *
 * Bernoulli and Binomial(m, p) cells are handled together: the window holds
 * N·m independent trials, and conditioning on T successes makes the set of
 * successful trials a uniform T-subset (multivariate hypergeometric counts per
 * cell). Poisson cells given their sum are multinomial(T; 1/N, ..., 1/N).
 */
class ConditionalFiller {
public:
    ConditionalFiller(const DistributionModel& model, const Extent3& window)
        : model_(model), cells_(window.volume())
    {
        if (!window.positive()) throw ParameterError("window extents must be positive, got " + window.str());
        if (model.kind() != CellLaw::poisson) {
            per_cell_ = model.trials();
            slots_ = cells_ * per_cell_;
            marked_.assign(static_cast<std::size_t>(slots_), 0);
        }
    }

    std::int64_t cells() const noexcept { return cells_; }

    bool achievable(std::int64_t total) const noexcept
    {
        return total >= 0 && (model_.kind() == CellLaw::poisson || total <= slots_);
    }

    /// Calls add_unit(local_index) once per unit of the total, local_index in [0, N).
    template <class AddUnit>
    void draw(std::int64_t total, RandomStream& rng, AddUnit&& add_unit)
    {
        if (!achievable(total)) {
            throw ParameterError("window total " + std::to_string(total) + " is not attainable");
        }
        if (model_.kind() == CellLaw::poisson) {
            for (std::int64_t u = 0; u < total; ++u) {
                add_unit(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(cells_))));
            }
            return;
        }
        // Floyd's algorithm: uniform T-subset of the trial slots.
        chosen_.clear();
        for (std::int64_t j = slots_ - total; j < slots_; ++j) {
            auto t = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(j + 1)));
            if (marked_[static_cast<std::size_t>(t)]) t = j;
            marked_[static_cast<std::size_t>(t)] = 1;
            chosen_.push_back(t);
        }
        for (const auto slot : chosen_) {
            marked_[static_cast<std::size_t>(slot)] = 0;
            add_unit(slot / per_cell_);
        }
    }

private:
    DistributionModel model_;
    std::int64_t cells_;
    std::int64_t per_cell_ = 1;
    std::int64_t slots_ = 0;
    std::vector<std::uint8_t> marked_;
    std::vector<std::int64_t> chosen_;
};

/// Window cells (i3 fastest) whose sum is exactly `total`.
inline std::vector<std::int32_t> fill_window_conditional(const DistributionModel& model, const Extent3& window,
                                                         std::int64_t total, RandomStream& rng)
{
    ConditionalFiller filler(model, window);
    std::vector<std::int32_t> cells(static_cast<std::size_t>(filler.cells()), 0);
    filler.draw(total, rng, [&](std::int64_t idx) { ++cells[static_cast<std::size_t>(idx)]; });
    return cells;
}

} // namespace scan3d
