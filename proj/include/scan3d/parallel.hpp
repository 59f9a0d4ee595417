#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace scan3d {

/// Streaming mean / M2 accumulator (Welford), mergeable with Chan's update.
struct RunningStats {
    std::int64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double x) noexcept
    {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }

    void merge(const RunningStats& other) noexcept
    {
        if (other.count == 0) return;
        if (count == 0) {
            *this = other;
            return;
        }
        const double n = static_cast<double>(count + other.count);
        const double delta = other.mean - mean;
        mean += delta * static_cast<double>(other.count) / n;
        m2 += other.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(other.count) / n;
        count += other.count;
    }

    /// Unbiased sample variance (denominator count - 1).
    double sample_variance() const noexcept
    {
        return count > 1 ? std::max(0.0, m2 / static_cast<double>(count - 1)) : 0.0;
    }
};

inline int resolve_threads(int requested) noexcept
{
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/**
 * Runs batch_count independent batches on up to `threads` workers and returns
 * the per-batch results indexed by batch. make_state() builds one scratch state
 * per worker; run(batch, state) must depend only on the batch index, so the
 * returned vector is identical for every thread count.
 */
template <class Result, class MakeState, class Run>
std::vector<Result> run_batches(std::int64_t batch_count, int threads, MakeState make_state, Run run)
{
    std::vector<Result> results(static_cast<std::size_t>(std::max<std::int64_t>(batch_count, 0)));
    const int workers = static_cast<int>(std::min<std::int64_t>(resolve_threads(threads), std::max<std::int64_t>(batch_count, 1)));
    if (workers <= 1) {
        auto state = make_state();
        for (std::int64_t b = 0; b < batch_count; ++b) results[static_cast<std::size_t>(b)] = run(b, state);
        return results;
    }

    std::atomic<std::int64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        try {
            auto state = make_state();
            for (std::int64_t b = next++; b < batch_count; b = next++) {
                results[static_cast<std::size_t>(b)] = run(b, state);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = batch_count;
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    pool.clear();
    if (failure) std::rethrow_exception(failure);
    return results;
}

} // namespace scan3d
