#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "csod/bench.hpp"
#include "csod/config.hpp"
#include "csod/data.hpp"
#include "csod/metrics.hpp"
#include "csod/net.hpp"
#include "csod/trainer.hpp"

namespace fs = std::filesystem;
using namespace csod;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitFailure = 3;

struct GenDataArgs {
    std::uint64_t seed = 7;
    int size = 64;
    int train = 200;
    int test = 50;
    std::string out;
};

int cmd_gen_data(const GenDataArgs& a) {
    check<ConfigError>(a.size >= 16, "--size must be >= 16");
    check<ConfigError>(a.train >= 0 && a.test >= 0 && a.train + a.test > 0,
                       "need at least one sample across --train/--test");
    GeneratedDataset d = generate_dataset(a.seed, a.size, a.train, a.test, a.out);
    std::printf("gen-data: wrote %lld train + %lld test triplets (%dx%d) under %s\n",
                static_cast<long long>(d.train.count()), static_cast<long long>(d.test.count()),
                a.size, a.size, a.out.c_str());
    return 0;
}

int cmd_train(const std::string& config_path) {
    RunConfig cfg = RunConfig::parse_file(config_path);
    DatasetManifest manifest = load_manifest(cfg.data_root, DatasetManifest::Split::train);
    check<ConfigError>(manifest.count() > 0, "train split is empty under ", cfg.data_root);
    std::vector<SampleRecord> samples = load_split(manifest);
    for (const auto& s : samples) {
        check<ConfigError>(s.image.h() == cfg.net.input_size,
                           "dataset resolution ", s.image.h(), " does not match net.input_size ",
                           cfg.net.input_size);
    }

    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    check<IoError>(!ec, "cannot create output dir ", cfg.out_dir, ": ", ec.message());

    SodNet net(cfg.net, cfg.seed);
    OptimizerConfig ocfg = cfg.optimizer;
    ocfg.alpha = cfg.base_lr;
    Optimizer opt(ocfg, net.params());

    TrainResult result = train_model(net, opt, samples, cfg, &std::cerr);
    write_train_log_csv(cfg.out_dir + "/train_log.csv", result.log);
    save_checkpoint(net, cfg.out_dir + "/model.csod");
    std::printf("train: %d epochs on %lld samples, mean loss %.6g -> %.6g; wrote %s\n",
                cfg.epochs, static_cast<long long>(manifest.count()), result.epoch0_mean_loss,
                result.final_epoch_mean_loss, (cfg.out_dir + "/model.csod").c_str());
    return 0;
}

struct EvalArgs {
    std::string config;
    std::string checkpoint;
    std::string data;
    std::string split = "test";
    std::string out;
};

int cmd_eval(const EvalArgs& a) {
    std::string checkpoint = a.checkpoint;
    std::string data = a.data;
    std::string out = a.out;
    if (!a.config.empty()) {
        RunConfig cfg = RunConfig::parse_file(a.config);
        if (checkpoint.empty()) checkpoint = cfg.out_dir + "/model.csod";
        if (data.empty()) data = cfg.data_root;
        if (out.empty()) out = cfg.out_dir + "/eval";
    }
    check<ConfigError>(!checkpoint.empty(), "--checkpoint (or --config) is required");
    check<ConfigError>(!data.empty(), "--data (or --config) is required");
    check<ConfigError>(!out.empty(), "--out (or --config) is required");
    check<ConfigError>(a.split == "train" || a.split == "test", "--split must be train or test");

    auto net = load_checkpoint(checkpoint);
    const auto split =
        a.split == "train" ? DatasetManifest::Split::train : DatasetManifest::Split::test;
    DatasetManifest manifest = load_manifest(data, split);
    check<ConfigError>(manifest.count() > 0, "split '", a.split, "' is empty under ", data);

    std::error_code ec;
    fs::create_directories(out, ec);
    check<IoError>(!ec, "cannot create eval output dir ", out, ": ", ec.message());

    std::vector<SaliencyPair> pairs;
    for (const auto& entry : manifest.entries) {
        SampleRecord rec = load_sample(manifest, entry);
        ForwardOutputs outputs = net->forward(rec.image);
        write_image(out + "/" + cat("pred_", entry.id, ".pgm"), outputs.final_map);
        pairs.emplace_back(std::move(outputs.final_map), std::move(rec.mask));
    }
    MetricsReport report = evaluate(pairs);
    write_metrics_csv(out + "/metrics.csv", cat(fs::path(data).filename().string(), "_", a.split),
                      report);
    write_pr_csv(out + "/pr_curve.csv", report);
    std::printf("eval: %lld samples  maxf %.4f  mae %.4f  iou %.4f  smeasure %.4f -> %s\n",
                static_cast<long long>(manifest.count()), report.max_f, report.mae, report.iou,
                report.s_measure, out.c_str());
    return 0;
}

void print_count_row(const char* name, const BlockParamCount& c) {
    std::printf("  %-22s %12lld weights %10lld biases %12lld total\n", name,
                static_cast<long long>(c.weights), static_cast<long long>(c.biases),
                static_cast<long long>(c.total()));
}

int cmd_count_params(const std::string& config_path) {
    RunConfig cfg = RunConfig::parse_file(config_path);

    NetConfig fire_cfg = cfg.net;
    NetConfig plain_cfg = cfg.net;
    plain_cfg.decoder = NetConfig::Decoder::plain;
    SodNet configured(fire_cfg, 0, /*init_params=*/false);
    SodNet plain_twin(plain_cfg, 0, /*init_params=*/false);

    std::printf("configured net (decoder=%s):\n",
                fire_cfg.decoder == NetConfig::Decoder::fire ? "fire" : "plain");
    print_count_row("encoder", configured.encoder_param_count());
    print_count_row("decoder blocks", configured.decoder_core_param_count());
    print_count_row("decoder channel-match", configured.decoder_plumbing_param_count());
    print_count_row("prediction heads", configured.heads_param_count());
    print_count_row("edge branch", configured.edge_param_count());
    print_count_row("TOTAL", configured.param_count());
    std::printf("plain-decoder twin:\n");
    print_count_row("decoder blocks", plain_twin.decoder_core_param_count());
    print_count_row("TOTAL", plain_twin.param_count());

    const double ratio = decoder_param_ratio(cfg.net);
    std::printf("decoder block parameter ratio (configured/plain): %.4f\n", ratio);
    std::printf("projected checkpoint bytes: configured %lld, plain twin %lld\n",
                static_cast<long long>(projected_checkpoint_bytes(fire_cfg)),
                static_cast<long long>(projected_checkpoint_bytes(plain_cfg)));
    return 0;
}

struct BenchArgs {
    std::string task;
    int iters = 500;
    std::uint64_t seed = 7;
    std::string out;
};

int cmd_optbench(const BenchArgs& a) {
    BenchResult r = optbench(a.task, a.iters, a.seed);
    const std::string out = a.out.empty() ? cat("optbench_", a.task, ".csv") : a.out;
    write_bench_csv(out, r);
    std::printf("optbench %s: %d iterations -> %s\n", a.task.c_str(), a.iters, out.c_str());
    for (std::size_t i = 0; i < r.algorithms.size(); ++i) {
        std::printf("  %-10s initial %.6g final %.6g\n", r.algorithms[i].c_str(),
                    r.traces[i].front(), r.traces[i].back());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale salient object detection: compressed decoder, channel attention, "
                 "AdaX optimizer suite"};
    app.require_subcommand(1);

    GenDataArgs gen;
    CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic dataset");
    gen_cmd->add_option("--seed", gen.seed, "generator seed");
    gen_cmd->add_option("--size", gen.size, "square image size");
    gen_cmd->add_option("--train", gen.train, "train sample count");
    gen_cmd->add_option("--test", gen.test, "test sample count");
    gen_cmd->add_option("--out", gen.out, "dataset root directory")->required();

    std::string train_config;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model from a run config");
    train_cmd->add_option("--config", train_config, "run config file")->required();

    EvalArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    eval_cmd->add_option("--config", eval_args.config, "run config (supplies defaults)");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint path");
    eval_cmd->add_option("--data", eval_args.data, "dataset root");
    eval_cmd->add_option("--split", eval_args.split, "train or test");
    eval_cmd->add_option("--out", eval_args.out, "output directory");

    std::string count_config;
    CLI::App* count_cmd =
        app.add_subcommand("count-params", "parameter accounting for a configured net");
    count_cmd->add_option("--config", count_config, "run config file")->required();

    BenchArgs bench;
    CLI::App* bench_cmd = app.add_subcommand("optbench", "optimizer comparison traces");
    bench_cmd->add_option("--task", bench.task, "quadratic | rosenbrock | micro_sod")->required();
    bench_cmd->add_option("--iters", bench.iters, "iterations (epochs for micro_sod)");
    bench_cmd->add_option("--seed", bench.seed, "shared initialization seed");
    bench_cmd->add_option("--out", bench.out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*gen_cmd) return cmd_gen_data(gen);
        if (*train_cmd) return cmd_train(train_config);
        if (*eval_cmd) return cmd_eval(eval_args);
        if (*count_cmd) return cmd_count_params(count_config);
        if (*bench_cmd) return cmd_optbench(bench);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return 0;
}
