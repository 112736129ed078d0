// Times the Monte Carlo harness and the tier engine, serial against parallel.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "nof1/generator.hpp"
#include "nof1/harness.hpp"
#include "nof1/tier_engine.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace nof1;

template <class F>
static double seconds(F&& f)
{
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int main(int argc, char** argv)
{
    const int n = argc > 1 ? std::atoi(argv[1]) : 40;
    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    const auto base = default_generator_config();
    AnalysisConfig analysis;
    MonteCarloConfig mc;
    mc.n_datasets = n;

    ExperimentReport serial, parallel;
    const double ts = seconds([&] { serial = monte_carlo(base, analysis, mc, {Execution::serial, 0}); });
    const double tp = seconds([&] { parallel = monte_carlo(base, analysis, mc, {Execution::parallel, 0}); });
    const bool same = report_to_json(serial) == report_to_json(parallel);
    std::printf("monte_carlo  n=%d threads=%d  serial %.3fs  parallel %.3fs  speedup %.2fx  identical=%s\n", n,
                threads, ts, tp, ts / tp, same ? "yes" : "no");

    const auto [dataset, truth] = generate(base);
    const auto pairs = truth.all_pairs();
    const PriorConfig prior;
    const EngineConfig engine;
    TimelineMap a, b;
    const double es = seconds([&] {
        for (int i = 0; i < 10; ++i) a = run_engine(dataset, pairs, prior, engine, Execution::serial);
    });
    const double ep = seconds([&] {
        for (int i = 0; i < 10; ++i) b = run_engine(dataset, pairs, prior, engine, Execution::parallel);
    });
    std::printf("run_engine   x10        serial %.3fs  parallel %.3fs  speedup %.2fx  identical=%s\n", es, ep,
                es / ep, a == b ? "yes" : "no");
    return same && a == b ? 0 : 1;
}
