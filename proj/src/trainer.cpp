#include "csod/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "csod/rng.hpp"

namespace csod {

double accumulate_and_step(Optimizer& opt, SodNet& net,
                           const std::vector<const SampleRecord*>& micro) {
    check(!micro.empty(), "accumulate_and_step: empty micro-batch list");
    net.zero_grad();
    double loss_sum = 0.0;
    for (const SampleRecord* rec : micro) {
        net.forward(rec->image);
        loss_sum += net.backward(rec->mask, rec->edge);
    }
    const double inv_k = 1.0 / static_cast<double>(micro.size());
    for (Param* p : net.params()) {
        for (std::int64_t i = 0; i < p->grad.size(); ++i) p->grad[i] *= inv_k;
    }
    opt.step();
    net.zero_grad();
    return loss_sum * inv_k;
}

TrainResult train_model(SodNet& net, Optimizer& opt, const std::vector<SampleRecord>& samples,
                        const RunConfig& cfg, std::ostream* progress) {
    check(!samples.empty(), "train_model: no training samples");
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    TrainResult result;
    const int count = static_cast<int>(samples.size());
    const int k = cfg.accumulation;
    std::vector<int> order(samples.size());
    for (int i = 0; i < count; ++i) order[static_cast<std::size_t>(i)] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = schedule_lr(cfg.base_lr, epoch, cfg.epochs);
        opt.set_alpha(lr);

        // deterministic per-epoch shuffle
        Rng rng(mix_seed(cfg.seed, 0x5u * static_cast<std::uint64_t>(epoch) + 1));
        for (int i = count - 1; i > 0; --i) {
            const int j = rng.uniform_int(0, i);
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        double epoch_loss = 0.0;
        int steps = 0;
        for (int start = 0; start < count; start += k, ++steps) {
            std::vector<const SampleRecord*> micro;
            for (int i = start; i < std::min(count, start + k); ++i) {
                micro.push_back(&samples[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
            }
            const double loss = accumulate_and_step(opt, net, micro);
            check(std::isfinite(loss), "training aborted: loss is not finite at epoch ", epoch,
                  " step ", steps);
            epoch_loss += loss;
            result.log.push_back(TrainLogRow{epoch, steps, lr, loss, elapsed()});
        }
        epoch_loss /= static_cast<double>(steps);
        if (epoch == 0) result.epoch0_mean_loss = epoch_loss;
        result.final_epoch_mean_loss = epoch_loss;
        if (progress) {
            (*progress) << "epoch " << epoch << " lr " << lr << " mean_loss " << epoch_loss
                        << " elapsed " << elapsed() << "s\n";
        }
    }
    return result;
}

void write_train_log_csv(const std::string& path, const std::vector<TrainLogRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    check<IoError>(f.good(), "cannot open train log for writing: ", path);
    f << "epoch,step,lr,train_loss,wall_seconds\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.12g,%.17g,%.3f\n", r.epoch, r.step, r.lr,
                      r.train_loss, r.wall_seconds);
        f << buf;
    }
    f.flush();
    check<IoError>(f.good(), "failed writing train log: ", path);
}

}  // namespace csod
