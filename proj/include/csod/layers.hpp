#pragma once

#include <vector>

#include "csod/ops.hpp"
#include "csod/tensor.hpp"

namespace csod {

// Parameter bookkeeping shared by blocks and whole networks.
struct BlockParamCount {
    std::int64_t weights{0};
    std::int64_t biases{0};
    std::int64_t total() const { return weights + biases; }

    BlockParamCount& operator+=(const BlockParamCount& o) {
        weights += o.weights;
        biases += o.biases;
        return *this;
    }
    friend BlockParamCount operator+(BlockParamCount a, const BlockParamCount& b) { return a += b; }
    bool operator==(const BlockParamCount&) const = default;
};

// Runtime count over any parameter list; must agree with the closed forms.
BlockParamCount count_params(const std::vector<const Param*>& params);
BlockParamCount count_params(const std::vector<Param*>& params);

// Convolution layer that owns its parameters and retains the forward input
// so backward can be called without re-supplying it.
class Conv2dLayer {
public:
    Conv2dLayer(int c_in, int c_out, int ksize, int stride = 1, int padding = 0);

    Tensor forward(const Tensor& x);
    // Accumulates parameter gradients, returns the input gradient.
    Tensor backward(const Tensor& upstream);

    void collect_params(std::vector<Param*>& out);
    void collect_params(std::vector<const Param*>& out) const;
    BlockParamCount param_count() const;

    Param& weight() { return weight_; }
    Param& bias() { return bias_; }
    int c_in() const { return weight_.value.c(); }
    int c_out() const { return weight_.value.n(); }
    void set_need_input_grad(bool v) { need_input_grad_ = v; }

private:
    Param weight_;
    Param bias_;
    int stride_;
    int padding_;
    Tensor input_;
    bool has_input_{false};
    bool need_input_grad_{true};
};

class LinearLayer {
public:
    LinearLayer(int in_features, int out_features);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& upstream);

    void collect_params(std::vector<Param*>& out);
    void collect_params(std::vector<const Param*>& out) const;
    BlockParamCount param_count() const;

    Param& weight() { return weight_; }
    Param& bias() { return bias_; }

private:
    Param weight_;
    Param bias_;
    Tensor input_;
    bool has_input_{false};
};

}  // namespace csod
