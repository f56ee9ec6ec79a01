#include "csod/layers.hpp"

namespace csod {

BlockParamCount count_params(const std::vector<const Param*>& params) {
    BlockParamCount c;
    for (const Param* p : params) {
        if (p->is_bias) {
            c.biases += p->value.size();
        } else {
            c.weights += p->value.size();
        }
    }
    return c;
}

BlockParamCount count_params(const std::vector<Param*>& params) {
    std::vector<const Param*> cp(params.begin(), params.end());
    return count_params(cp);
}

Conv2dLayer::Conv2dLayer(int c_in, int c_out, int ksize, int stride, int padding)
    : weight_(Shape{c_out, c_in, ksize, ksize}),
      bias_(Shape{1, c_out, 1, 1}),
      stride_(stride),
      padding_(padding) {
    check(c_in >= 1 && c_out >= 1 && ksize >= 1, "Conv2dLayer: invalid dims (", c_in, ",",
          c_out, ",", ksize, ")");
    bias_.is_bias = true;
}

Tensor Conv2dLayer::forward(const Tensor& x) {
    input_ = x;
    has_input_ = true;
    return conv2d(x, weight_.value, bias_.value, stride_, padding_);
}

Tensor Conv2dLayer::backward(const Tensor& upstream) {
    check(has_input_, "Conv2dLayer: backward called before forward");
    Conv2dGrads g = conv2d_backward(input_, weight_.value, upstream, stride_, padding_,
                                    need_input_grad_);
    for (std::int64_t i = 0; i < g.weight.size(); ++i) weight_.grad[i] += g.weight[i];
    for (std::int64_t i = 0; i < g.bias.size(); ++i) bias_.grad[i] += g.bias[i];
    return std::move(g.input);
}

void Conv2dLayer::collect_params(std::vector<Param*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

void Conv2dLayer::collect_params(std::vector<const Param*>& out) const {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

BlockParamCount Conv2dLayer::param_count() const {
    return BlockParamCount{weight_.value.size(), bias_.value.size()};
}

LinearLayer::LinearLayer(int in_features, int out_features)
    : weight_(Shape{out_features, in_features, 1, 1}), bias_(Shape{1, out_features, 1, 1}) {
    check(in_features >= 1 && out_features >= 1, "LinearLayer: invalid dims (", in_features,
          ",", out_features, ")");
    bias_.is_bias = true;
}

Tensor LinearLayer::forward(const Tensor& x) {
    input_ = x;
    has_input_ = true;
    return linear(x, weight_.value, bias_.value);
}

Tensor LinearLayer::backward(const Tensor& upstream) {
    check(has_input_, "LinearLayer: backward called before forward");
    LinearGrads g = linear_backward(input_, weight_.value, upstream);
    for (std::int64_t i = 0; i < g.weight.size(); ++i) weight_.grad[i] += g.weight[i];
    for (std::int64_t i = 0; i < g.bias.size(); ++i) bias_.grad[i] += g.bias[i];
    return std::move(g.input);
}

void LinearLayer::collect_params(std::vector<Param*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

void LinearLayer::collect_params(std::vector<const Param*>& out) const {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

BlockParamCount LinearLayer::param_count() const {
    return BlockParamCount{weight_.value.size(), bias_.value.size()};
}

}  // namespace csod
