#include "csod/bench.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>

#include "csod/data.hpp"
#include "csod/net.hpp"
#include "csod/rng.hpp"
#include "csod/trainer.hpp"

namespace csod {

const std::vector<Algo>& bench_algorithms() {
    static const std::vector<Algo> algos = {Algo::adadelta, Algo::adam, Algo::adagrad,
                                            Algo::rmsprop, Algo::adamw, Algo::adax};
    return algos;
}

OptimizerConfig bench_config(const std::string& task, Algo algo) {
    OptimizerConfig c;
    c.algorithm = algo;
    c.beta1 = 0.9;
    c.weight_decay = 0.0;
    switch (algo) {
        case Algo::adadelta:
            c.alpha = 1.0;
            c.beta2 = 0.9;
            c.eps = 1e-6;
            break;
        case Algo::adagrad:
            c.alpha = task == "rosenbrock" ? 1e-1 : 2e-2;
            break;
        case Algo::rmsprop:
            c.alpha = task == "rosenbrock" ? 1e-2 : 2e-3;
            c.beta2 = 0.99;
            break;
        case Algo::adam:
        case Algo::adamw:
            c.alpha = task == "rosenbrock" ? 1e-2 : (task == "micro_sod" ? 1e-2 : 2e-3);
            c.beta2 = 0.999;
            break;
        case Algo::adax:
            c.alpha = task == "rosenbrock" ? 1e-2 : (task == "micro_sod" ? 1e-2 : 2e-3);
            c.beta2 = kAdaxDefaultBeta2;
            break;
        case Algo::sgd_momentum:
            c.alpha = 1e-3;
            c.momentum = 0.9;
            break;
    }
    return c;
}

namespace {

struct VectorTask {
    int dim;
    std::vector<double> theta0;
    std::function<double(const double*)> f;
    std::function<void(const double*, double*)> grad;
};

VectorTask make_quadratic(std::uint64_t seed) {
    VectorTask t;
    t.dim = 8;
    Rng rng(seed);
    for (int i = 0; i < t.dim; ++i) {
        const double mag = rng.uniform(1.5, 2.5);
        t.theta0.push_back(rng.uniform() < 0.5 ? -mag : mag);
    }
    t.f = [dim = t.dim](const double* x) {
        double s = 0.0;
        for (int i = 0; i < dim; ++i) s += x[i] * x[i];
        return 0.5 * s;
    };
    t.grad = [dim = t.dim](const double* x, double* g) {
        for (int i = 0; i < dim; ++i) g[i] = x[i];
    };
    return t;
}

VectorTask make_rosenbrock() {
    VectorTask t;
    t.dim = 2;
    t.theta0 = {-1.2, 1.0};
    t.f = [](const double* p) {
        const double x = p[0], y = p[1];
        return (1.0 - x) * (1.0 - x) + 100.0 * (y - x * x) * (y - x * x);
    };
    t.grad = [](const double* p, double* g) {
        const double x = p[0], y = p[1];
        g[0] = -2.0 * (1.0 - x) - 400.0 * x * (y - x * x);
        g[1] = 200.0 * (y - x * x);
    };
    return t;
}

std::vector<double> run_vector_task(const VectorTask& task, const OptimizerConfig& cfg,
                                    int iterations) {
    Param p(Shape{1, task.dim, 1, 1});
    for (int i = 0; i < task.dim; ++i) p.value[i] = task.theta0[static_cast<std::size_t>(i)];
    Optimizer opt(cfg, {&p});
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(iterations) + 1);
    trace.push_back(task.f(p.value.data()));
    for (int it = 0; it < iterations; ++it) {
        task.grad(p.value.data(), p.grad.data());
        opt.step();
        trace.push_back(task.f(p.value.data()));
    }
    return trace;
}

NetConfig micro_sod_net_config() {
    NetConfig cfg;
    cfg.stages = 2;
    cfg.stage_channels = {8, 16};
    cfg.input_size = 32;
    cfg.decoder = NetConfig::Decoder::fire;
    cfg.se_enabled = true;
    cfg.edge_branch = false;
    return cfg;
}

std::vector<double> run_micro_sod(const OptimizerConfig& cfg, int epochs, std::uint64_t seed) {
    const NetConfig net_cfg = micro_sod_net_config();
    std::vector<SampleRecord> samples;
    for (int i = 0; i < 8; ++i) {
        samples.push_back(generate_sample(mix_seed(seed, 1000 + static_cast<std::uint64_t>(i)),
                                          net_cfg.input_size));
    }
    SodNet net(net_cfg, seed);
    Optimizer opt(cfg, net.params());

    auto full_loss = [&] {
        double acc = 0.0;
        for (const auto& s : samples) {
            ForwardOutputs out = net.forward(s.image);
            acc += total_loss(out, s.mask, s.edge);
        }
        return acc / static_cast<double>(samples.size());
    };

    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(epochs) + 1);
    trace.push_back(full_loss());
    const int k = 4;  // micro-batches per optimizer step
    for (int e = 0; e < epochs; ++e) {
        for (std::size_t start = 0; start < samples.size(); start += k) {
            std::vector<const SampleRecord*> micro;
            for (std::size_t i = start; i < std::min(samples.size(), start + k); ++i) {
                micro.push_back(&samples[i]);
            }
            accumulate_and_step(opt, net, micro);
        }
        trace.push_back(full_loss());
    }
    return trace;
}

}  // namespace

BenchResult optbench(const std::string& task, int iterations, std::uint64_t seed) {
    check<ConfigError>(task == "quadratic" || task == "rosenbrock" || task == "micro_sod",
                       "unknown optbench task '", task,
                       "' (expected quadratic, rosenbrock or micro_sod)");
    check<ConfigError>(iterations >= 1, "optbench: iterations must be >= 1");
    BenchResult r;
    r.task = task;
    for (Algo a : bench_algorithms()) {
        r.algorithms.push_back(algo_name(a));
        const OptimizerConfig cfg = bench_config(task, a);
        if (task == "quadratic") {
            r.traces.push_back(run_vector_task(make_quadratic(seed), cfg, iterations));
        } else if (task == "rosenbrock") {
            r.traces.push_back(run_vector_task(make_rosenbrock(), cfg, iterations));
        } else {
            r.traces.push_back(run_micro_sod(cfg, iterations, seed));
        }
    }
    return r;
}

void write_bench_csv(const std::string& path, const BenchResult& result) {
    std::ofstream f(path, std::ios::trunc);
    check<IoError>(f.good(), "cannot open bench csv for writing: ", path);
    f << "iter";
    for (const auto& a : result.algorithms) f << "," << a;
    f << "\n";
    const std::size_t rows = result.traces.empty() ? 0 : result.traces[0].size();
    char buf[64];
    for (std::size_t i = 0; i < rows; ++i) {
        f << i;
        for (const auto& tr : result.traces) {
            std::snprintf(buf, sizeof(buf), ",%.12g", tr[i]);
            f << buf;
        }
        f << "\n";
    }
    f.flush();
    check<IoError>(f.good(), "failed writing bench csv: ", path);
}

}  // namespace csod
