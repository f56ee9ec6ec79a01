#pragma once

#include <memory>
#include <optional>
#include <utility>

#include "csod/layers.hpp"

namespace csod {

// Squeeze/expand compression block: 1x1 squeeze to s channels, then parallel
// 1x1 and 3x3 expand paths concatenated back together.
struct FireConfig {
    int c_in{0};
    int squeeze{0};
    int expand1{0};
    int expand3{0};

    int c_out() const { return expand1 + expand3; }
    void validate() const;
};

struct SEConfig {
    int channels{0};
    int reduction{4};

    int hidden() const { return channels / reduction; }
    void validate() const;
};

// Closed-form parameter arithmetic, cross-checked against the runtime counts.
BlockParamCount fire_param_count(const FireConfig& cfg);
BlockParamCount se_param_count(const SEConfig& cfg);
BlockParamCount plain_param_count(int c_in, int c_out);

class FireBlock {
public:
    explicit FireBlock(const FireConfig& cfg);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& upstream);

    void collect_params(std::vector<Param*>& out);
    void collect_params(std::vector<const Param*>& out) const;
    BlockParamCount param_count() const;
    const FireConfig& config() const { return cfg_; }

private:
    FireConfig cfg_;
    Conv2dLayer squeeze_;
    Conv2dLayer expand1_;
    Conv2dLayer expand3_;
    Tensor squeeze_act_;
    Tensor out_act_;
};

// Channel attention: global average pool, bottleneck FC pair, sigmoid scale.
// By default the scaled map is residual-added back onto the input.
class SEBlock {
public:
    enum class Fuse { scale_residual, scale_only };

    explicit SEBlock(const SEConfig& cfg, Fuse fuse = Fuse::scale_residual);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& upstream);

    void collect_params(std::vector<Param*>& out);
    void collect_params(std::vector<const Param*>& out) const;
    BlockParamCount param_count() const;
    const SEConfig& config() const { return cfg_; }

private:
    SEConfig cfg_;
    Fuse fuse_;
    LinearLayer fc1_;
    LinearLayer fc2_;
    Tensor input_;
    Tensor z_act_;
    Tensor scale_act_;
};

// The uncompressed baseline: one 3x3 same-padding conv + relu.
class PlainBlock {
public:
    PlainBlock(int c_in, int c_out);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& upstream);

    void collect_params(std::vector<Param*>& out);
    void collect_params(std::vector<const Param*>& out) const;
    BlockParamCount param_count() const;

private:
    Conv2dLayer conv_;
    Tensor out_act_;
};

// One decoder level: upsample the coarser feature, 1x1-match its channels,
// add the skip, then run the level core (fire+SE, or the plain baseline).
class DecoderBlock {
public:
    enum class Kind { fire_se, fire_only, plain };

    DecoderBlock(Kind kind, int c_below, const FireConfig& fire_cfg, const SEConfig& se_cfg,
                 SEBlock::Fuse fuse = SEBlock::Fuse::scale_residual);

    Tensor forward(const Tensor& skip, const Tensor& below);
    // returns {d_skip, d_below}
    std::pair<Tensor, Tensor> backward(const Tensor& upstream);

    void collect_params(std::vector<Param*>& out);
    void collect_params(std::vector<const Param*>& out) const;
    BlockParamCount param_count() const;
    // the replaceable level core only (fire [+SE] or plain), without the
    // channel-matching conv shared by both decoder variants
    BlockParamCount core_param_count() const;
    int c_out() const { return c_out_; }

private:
    Kind kind_;
    int c_out_;
    Conv2dLayer match_;
    std::optional<FireBlock> fire_;
    std::optional<SEBlock> se_;
    std::optional<PlainBlock> plain_;
    Shape below_shape_;
};

template <class Block>
BlockParamCount count_params(const Block& block) {
    std::vector<const Param*> ps;
    block.collect_params(ps);
    return count_params(ps);
}

}  // namespace csod
