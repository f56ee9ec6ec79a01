#pragma once

#include <string>
#include <vector>

#include "csod/optim.hpp"

namespace csod {

// The six algorithms compared by the benchmark, in output-column order.
const std::vector<Algo>& bench_algorithms();

struct BenchResult {
    std::string task;
    std::vector<std::string> algorithms;
    // traces[a][i] = loss after i updates (or epochs for micro_sod); row 0 is
    // the shared initial loss
    std::vector<std::vector<double>> traces;
};

// Tasks: "quadratic" (convex bowl, 8-dim), "rosenbrock" (classic 2-dim from
// (-1.2, 1)), "micro_sod" (a tiny net trained on an in-memory synthetic set,
// one trace entry per epoch). All algorithms start from the same point.
BenchResult optbench(const std::string& task, int iterations, std::uint64_t seed);

// Per-task hyperparameters used by the benchmark.
OptimizerConfig bench_config(const std::string& task, Algo algo);

void write_bench_csv(const std::string& path, const BenchResult& result);

}  // namespace csod
