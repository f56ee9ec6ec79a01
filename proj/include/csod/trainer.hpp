#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "csod/config.hpp"
#include "csod/data.hpp"
#include "csod/net.hpp"
#include "csod/optim.hpp"

namespace csod {

struct TrainLogRow {
    int epoch;
    int step;
    double lr;
    double train_loss;
    double wall_seconds;
};

// Sums gradients over the micro-batches, divides by their count, then takes
// one optimizer step and zeroes the gradients. Returns the mean loss.
double accumulate_and_step(Optimizer& opt, SodNet& net,
                           const std::vector<const SampleRecord*>& micro);

struct TrainResult {
    std::vector<TrainLogRow> log;
    double epoch0_mean_loss{0.0};
    double final_epoch_mean_loss{0.0};
};

// The full training protocol: per-epoch step schedule, deterministic shuffle,
// gradient accumulation, one log row per optimizer step. Aborts with a
// diagnostic naming the step if the loss goes non-finite.
TrainResult train_model(SodNet& net, Optimizer& opt, const std::vector<SampleRecord>& samples,
                        const RunConfig& cfg, std::ostream* progress = nullptr);

void write_train_log_csv(const std::string& path, const std::vector<TrainLogRow>& rows);

}  // namespace csod
