#include "csod/blocks.hpp"

namespace csod {

void FireConfig::validate() const {
    check(c_in >= 1, "FireConfig: c_in must be >= 1, got ", c_in);
    check(squeeze >= 1, "FireConfig: squeeze must be >= 1, got ", squeeze);
    check(expand1 == expand3, "FireConfig: expand paths must keep a 1:1 ratio, got ", expand1,
          " vs ", expand3);
    check(expand1 >= 1, "FireConfig: expand channels must be >= 1, got ", expand1);
    check(squeeze <= c_in, "FireConfig: squeeze (", squeeze, ") must not exceed c_in (", c_in,
          ")");
}

void SEConfig::validate() const {
    check(channels >= 1, "SEConfig: channels must be >= 1, got ", channels);
    check(reduction >= 1, "SEConfig: reduction must be >= 1, got ", reduction);
    check(hidden() >= 1, "SEConfig: bottleneck width ", channels, "/", reduction,
          " collapses below 1");
}

BlockParamCount fire_param_count(const FireConfig& cfg) {
    BlockParamCount c;
    c.weights = static_cast<std::int64_t>(cfg.c_in) * cfg.squeeze +
                static_cast<std::int64_t>(cfg.squeeze) * cfg.expand1 +
                9ll * cfg.squeeze * cfg.expand3;
    c.biases = cfg.squeeze + cfg.expand1 + cfg.expand3;
    return c;
}

BlockParamCount se_param_count(const SEConfig& cfg) {
    const std::int64_t h = cfg.hidden();
    BlockParamCount c;
    c.weights = cfg.channels * h + h * cfg.channels;
    c.biases = h + cfg.channels;
    return c;
}

BlockParamCount plain_param_count(int c_in, int c_out) {
    return BlockParamCount{9ll * c_in * c_out, c_out};
}

FireBlock::FireBlock(const FireConfig& cfg)
    : cfg_((cfg.validate(), cfg)),
      squeeze_(cfg.c_in, cfg.squeeze, 1),
      expand1_(cfg.squeeze, cfg.expand1, 1),
      expand3_(cfg.squeeze, cfg.expand3, 3, 1, 1) {}

Tensor FireBlock::forward(const Tensor& x) {
    check(x.c() == cfg_.c_in, "fire block: input has ", x.c(), " channels, config expects ",
          cfg_.c_in);
    squeeze_act_ = pointwise_activation(Act::relu, squeeze_.forward(x));
    Tensor merged = concat_channels(expand1_.forward(squeeze_act_), expand3_.forward(squeeze_act_));
    out_act_ = pointwise_activation(Act::relu, merged);
    return out_act_;
}

Tensor FireBlock::backward(const Tensor& upstream) {
    Tensor d_merged = pointwise_activation_backward(Act::relu, out_act_, upstream);
    auto [d_e1, d_e3] = concat_channels_backward(d_merged, cfg_.expand1);
    Tensor d_sq = expand1_.backward(d_e1);
    Tensor d_sq3 = expand3_.backward(d_e3);
    for (std::int64_t i = 0; i < d_sq.size(); ++i) d_sq[i] += d_sq3[i];
    Tensor d_pre = pointwise_activation_backward(Act::relu, squeeze_act_, d_sq);
    return squeeze_.backward(d_pre);
}

void FireBlock::collect_params(std::vector<Param*>& out) {
    squeeze_.collect_params(out);
    expand1_.collect_params(out);
    expand3_.collect_params(out);
}

void FireBlock::collect_params(std::vector<const Param*>& out) const {
    squeeze_.collect_params(out);
    expand1_.collect_params(out);
    expand3_.collect_params(out);
}

BlockParamCount FireBlock::param_count() const {
    return squeeze_.param_count() + expand1_.param_count() + expand3_.param_count();
}

SEBlock::SEBlock(const SEConfig& cfg, Fuse fuse)
    : cfg_((cfg.validate(), cfg)),
      fuse_(fuse),
      fc1_(cfg.channels, cfg.hidden()),
      fc2_(cfg.hidden(), cfg.channels) {}

Tensor SEBlock::forward(const Tensor& x) {
    check(x.c() == cfg_.channels, "SE block: input has ", x.c(), " channels, config expects ",
          cfg_.channels);
    input_ = x;
    Tensor pooled = global_avg_pool(x);
    z_act_ = pointwise_activation(Act::relu, fc1_.forward(pooled));
    scale_act_ = pointwise_activation(Act::sigmoid, fc2_.forward(z_act_));
    Tensor scaled = channel_scale(x, scale_act_);
    if (fuse_ == Fuse::scale_residual) return add(scaled, x);
    return scaled;
}

Tensor SEBlock::backward(const Tensor& upstream) {
    // d(scaled)/d(upstream) is upstream itself in both fuse modes
    ChannelScaleGrads g = channel_scale_backward(input_, scale_act_, upstream);
    Tensor d_s = pointwise_activation_backward(Act::sigmoid, scale_act_, g.s);
    Tensor d_z = fc2_.backward(d_s);
    Tensor d_pre = pointwise_activation_backward(Act::relu, z_act_, d_z);
    Tensor d_pooled = fc1_.backward(d_pre);
    Tensor dx_pool = global_avg_pool_backward(d_pooled, input_.shape());
    Tensor dx = std::move(g.x);
    for (std::int64_t i = 0; i < dx.size(); ++i) dx[i] += dx_pool[i];
    if (fuse_ == Fuse::scale_residual) {
        for (std::int64_t i = 0; i < dx.size(); ++i) dx[i] += upstream[i];
    }
    return dx;
}

void SEBlock::collect_params(std::vector<Param*>& out) {
    fc1_.collect_params(out);
    fc2_.collect_params(out);
}

void SEBlock::collect_params(std::vector<const Param*>& out) const {
    fc1_.collect_params(out);
    fc2_.collect_params(out);
}

BlockParamCount SEBlock::param_count() const {
    return fc1_.param_count() + fc2_.param_count();
}

PlainBlock::PlainBlock(int c_in, int c_out) : conv_(c_in, c_out, 3, 1, 1) {}

Tensor PlainBlock::forward(const Tensor& x) {
    check(x.c() == conv_.c_in(), "plain_block: input has ", x.c(), " channels, expected ",
          conv_.c_in());
    out_act_ = pointwise_activation(Act::relu, conv_.forward(x));
    return out_act_;
}

Tensor PlainBlock::backward(const Tensor& upstream) {
    Tensor d_pre = pointwise_activation_backward(Act::relu, out_act_, upstream);
    return conv_.backward(d_pre);
}

void PlainBlock::collect_params(std::vector<Param*>& out) { conv_.collect_params(out); }
void PlainBlock::collect_params(std::vector<const Param*>& out) const {
    conv_.collect_params(out);
}
BlockParamCount PlainBlock::param_count() const { return conv_.param_count(); }

DecoderBlock::DecoderBlock(Kind kind, int c_below, const FireConfig& fire_cfg,
                           const SEConfig& se_cfg, SEBlock::Fuse fuse)
    : kind_(kind),
      c_out_(fire_cfg.c_out()),
      match_(c_below, fire_cfg.c_in, 1) {
    if (kind_ == Kind::plain) {
        plain_.emplace(fire_cfg.c_in, fire_cfg.c_out());
    } else {
        fire_.emplace(fire_cfg);
        if (kind_ == Kind::fire_se) {
            check(se_cfg.channels == fire_cfg.c_out(), "DecoderBlock: SE channels ",
                  se_cfg.channels, " must equal fire output channels ", fire_cfg.c_out());
            se_.emplace(se_cfg, fuse);
        }
    }
}

Tensor DecoderBlock::forward(const Tensor& skip, const Tensor& below) {
    below_shape_ = below.shape();
    Tensor up = upsample_nearest2x(below);
    check(up.h() == skip.h() && up.w() == skip.w(),
          "decoder block: upsampled below is ", up.h(), "x", up.w(), " but skip is ", skip.h(),
          "x", skip.w());
    Tensor fused = add(skip, match_.forward(up));
    if (kind_ == Kind::plain) return plain_->forward(fused);
    Tensor out = fire_->forward(fused);
    if (se_) return se_->forward(out);
    return out;
}

std::pair<Tensor, Tensor> DecoderBlock::backward(const Tensor& upstream) {
    Tensor d_core;
    if (kind_ == Kind::plain) {
        d_core = plain_->backward(upstream);
    } else if (se_) {
        d_core = fire_->backward(se_->backward(upstream));
    } else {
        d_core = fire_->backward(upstream);
    }
    Tensor d_up = match_.backward(d_core);
    Tensor d_below = upsample_nearest2x_backward(d_up);
    return {std::move(d_core), std::move(d_below)};
}

void DecoderBlock::collect_params(std::vector<Param*>& out) {
    match_.collect_params(out);
    if (fire_) fire_->collect_params(out);
    if (se_) se_->collect_params(out);
    if (plain_) plain_->collect_params(out);
}

void DecoderBlock::collect_params(std::vector<const Param*>& out) const {
    match_.collect_params(out);
    if (fire_) fire_->collect_params(out);
    if (se_) se_->collect_params(out);
    if (plain_) plain_->collect_params(out);
}

BlockParamCount DecoderBlock::param_count() const {
    return match_.param_count() + core_param_count();
}

BlockParamCount DecoderBlock::core_param_count() const {
    BlockParamCount c;
    if (fire_) c += fire_->param_count();
    if (se_) c += se_->param_count();
    if (plain_) c += plain_->param_count();
    return c;
}

}  // namespace csod
