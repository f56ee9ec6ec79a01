#pragma once

#include <optional>
#include <string>
#include <vector>

#include "csod/tensor.hpp"

namespace csod {

enum class Algo { sgd_momentum, adam, adax, adagrad, rmsprop, adadelta, adamw };

const char* algo_name(Algo a);
Algo algo_from_name(const std::string& name);

struct OptimizerConfig {
    Algo algorithm{Algo::adax};
    double alpha{5e-5};
    double beta1{0.9};
    double beta2{-1.0};  // unset; resolved() picks the per-algorithm default
    double eps{1e-8};
    double weight_decay{5e-4};  // coupled (added to the gradient) except for adamw
    double momentum{0.0};       // sgd_momentum only
    // Placement of eps in the denominator. adam-family is canonically
    // sqrt(v)+eps; adax is written with eps inside the root. Leave unset to get
    // the per-algorithm default.
    std::optional<bool> eps_inside_sqrt;

    void validate() const;
    // fills algorithm-dependent defaults (adax beta2, eps placement)
    OptimizerConfig resolved() const;
    bool eps_inside() const;
};

inline constexpr double kAdaxDefaultBeta2 = 1e-4;

// First/second moment accumulators plus the step counter.
struct MomentState {
    Tensor m;
    Tensor v;
    long t{0};
};

class Optimizer {
public:
    Optimizer() = default;
    Optimizer(const OptimizerConfig& cfg, std::vector<Param*> params);

    void attach(std::vector<Param*> params);
    // One update from the gradients currently stored in the parameters.
    void step();
    void zero_grad();

    void set_alpha(double a) { cfg_.alpha = a; }
    double alpha() const { return cfg_.alpha; }
    const OptimizerConfig& config() const { return cfg_; }
    const MomentState& state(std::size_t i) const { return states_[i]; }
    std::size_t size() const { return params_.size(); }

private:
    OptimizerConfig cfg_{};
    std::vector<Param*> params_;
    std::vector<MomentState> states_;
};

// Step schedule: base alpha for the first half of training, base/10 afterwards.
double schedule_lr(double base_alpha, int epoch, int total_epochs);

}  // namespace csod
