#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "csod/tensor.hpp"

namespace csod {

// ---- convolution ----------------------------------------------------------

// weight: (c_out, c_in, kh, kw); bias: (1, c_out, 1, 1); zero padding.
// output spatial size = floor((h + 2*padding - kh)/stride) + 1
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride = 1, int padding = 0);

struct Conv2dGrads {
    Tensor input;
    Tensor weight;
    Tensor bias;
};
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& upstream,
                            int stride = 1, int padding = 0, bool need_input_grad = true);

// ---- pointwise activations ------------------------------------------------

enum class Act { relu, sigmoid };

Tensor pointwise_activation(Act kind, const Tensor& input);
// Both derivatives are functions of the forward output: relu' = 1[y>0],
// sigmoid' = y*(1-y).
Tensor pointwise_activation_backward(Act kind, const Tensor& output, const Tensor& upstream);

// ---- pooling / resampling --------------------------------------------------

struct MaxPoolOut {
    Tensor out;
    std::vector<std::int64_t> argmax;  // flat input index per output element
};
MaxPoolOut maxpool2x2(const Tensor& input);
Tensor maxpool2x2_backward(const Tensor& upstream, const std::vector<std::int64_t>& argmax,
                           const Shape& input_shape);

Tensor upsample_nearest2x(const Tensor& input);
Tensor upsample_nearest2x_backward(const Tensor& upstream);

// repeated nearest 2x until (target_h, target_w); target must be src * 2^k
Tensor upsample_to(const Tensor& input, int target_h, int target_w);
Tensor upsample_to_backward(const Tensor& upstream, int src_h, int src_w);

Tensor global_avg_pool(const Tensor& input);
Tensor global_avg_pool_backward(const Tensor& upstream, const Shape& input_shape);

// ---- linear ----------------------------------------------------------------

// input: (n, f, 1, 1); weight: (out, f, 1, 1); bias: (1, out, 1, 1)
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);

struct LinearGrads {
    Tensor input;
    Tensor weight;
    Tensor bias;
};
LinearGrads linear_backward(const Tensor& input, const Tensor& weight, const Tensor& upstream);

// ---- combining ops ---------------------------------------------------------

Tensor concat_channels(const Tensor& a, const Tensor& b);
std::pair<Tensor, Tensor> concat_channels_backward(const Tensor& upstream, int c_a);

// s: (n, c, 1, 1), broadcast multiply over the spatial plane
Tensor channel_scale(const Tensor& x, const Tensor& s);
struct ChannelScaleGrads {
    Tensor x;
    Tensor s;
};
ChannelScaleGrads channel_scale_backward(const Tensor& x, const Tensor& s, const Tensor& upstream);

Tensor add(const Tensor& a, const Tensor& b);  // backward of either input is the upstream

// ---- loss ------------------------------------------------------------------

inline constexpr double kBceClamp = 1e-7;

// mean over all elements of -[t*ln(p) + (1-t)*ln(1-p)], p clamped to
// [kBceClamp, 1-kBceClamp]; target must lie in [0,1]
double bce_loss(const Tensor& pred, const Tensor& target);
Tensor bce_loss_backward(const Tensor& pred, const Tensor& target);

}  // namespace csod
