// Library walk-through: approximate P(S <= n) for a Bernoulli field, check it
// against plain simulation, then find a critical value for a scan test.

#include <cstdio>

#include "scan3d/approx_pipeline.hpp"
#include "scan3d/is_estimator.hpp"

int main()
{
    using namespace scan3d;

    // 30x30x30 cells, 4x4x4 window, each cell is 1 with probability 0.002.
    const ScanGeometry geometry({30, 30, 30}, {4, 4, 4});
    const auto model = DistributionModel::bernoulli(0.002);

    PipelineOptions options;
    options.iterations = 20000;
    options.simulation.seed = 1;

    std::printf("   n  approximation   +- total error   naive (2000 reps)\n");
    const ScanHistogram naive = naive_scan_distribution(geometry, model, 2000, options.simulation);
    for (std::int64_t n = 3; n <= 6; ++n) {
        const ApproxReport r = approximate_cdf(geometry, model, n, options);
        if (r.applicable) {
            std::printf("%4lld  %.6f        %.2e         %.4f +- %.4f\n", static_cast<long long>(n), r.point, r.total,
                        naive.cdf(n), naive.beta(n));
        } else {
            std::printf("%4lld  %.6f        no bound (%s)   %.4f +- %.4f\n", static_cast<long long>(n), r.point,
                        gate_name(r.failing), naive.cdf(n), naive.beta(n));
        }
    }

    // Smallest tau with P(S >= tau) <= 0.05 under the null model.
    const CriticalValue cv = critical_value(geometry, model, 0.05, options);
    std::printf("critical value at 5%%: reject when S >= %lld (tail %.4f)\n", static_cast<long long>(cv.tau),
                cv.attained);
    return 0;
}
