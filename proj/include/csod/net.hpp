#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "csod/blocks.hpp"

namespace csod {

struct NetConfig {
    enum class Decoder { fire, plain };

    int stages{4};
    std::vector<int> stage_channels{16, 32, 64, 128};
    Decoder decoder{Decoder::fire};
    bool se_enabled{true};
    bool edge_branch{true};
    int input_size{64};

    // block-level knobs
    int fire_squeeze_div{4};  // squeeze = (e1+e3)/fire_squeeze_div, floored at 1
    int se_reduction{4};
    bool se_residual{true};  // false: pure multiplicative scaling, no residual add

    void validate() const;
    std::string serialize() const;
    static NetConfig deserialize(const std::string& text);
};

struct ForwardOutputs {
    std::vector<Tensor> side_maps;  // one per decoder stage, (n,1,size,size), in (0,1)
    Tensor final_map;               // (n,1,size,size), in (0,1)
    std::optional<Tensor> edge_map;
};

// Sum of BCE terms: every side map and the final map against the mask, plus
// the edge map against the edge target when present. All weights are 1.
double total_loss(const ForwardOutputs& outputs, const Tensor& mask, const Tensor& edge);

// Replaceable decoder-core parameter ratio: (fire [+SE]) / plain baseline,
// with identical per-level in/out channels. 1.0 for a plain decoder.
double decoder_param_ratio(const NetConfig& cfg);

// U-shape network: VGG-style micro encoder, compressed decoder with one block
// per level (coarsest skip first, the stage-1 skip is not used), a prediction
// head per decoder stage, a fusion head over all side maps, and an optional
// edge branch tapping encoder stage 2.
class SodNet {
public:
    explicit SodNet(const NetConfig& cfg, std::uint64_t seed = 0, bool init_params = true);

    const NetConfig& config() const { return cfg_; }
    int decoder_stage_count() const { return stages_ - 1; }

    ForwardOutputs forward(const Tensor& images);
    // Uses the activations retained by the last forward; accumulates gradients
    // of total_loss into every parameter and returns the loss value.
    double backward(const Tensor& mask, const Tensor& edge);

    void zero_grad();
    std::vector<Param*> params();
    std::vector<const Param*> params() const;

    BlockParamCount param_count() const;
    BlockParamCount encoder_param_count() const;
    BlockParamCount decoder_core_param_count() const;      // fire+SE (or plain) blocks only
    BlockParamCount decoder_plumbing_param_count() const;  // channel-matching convs
    BlockParamCount heads_param_count() const;             // side heads + fusion
    BlockParamCount edge_param_count() const;              // edge head + guidance convs

private:
    struct EncoderStage {
        Conv2dLayer conv1;
        Conv2dLayer conv2;
        Tensor act1;
        Tensor act2;
        std::vector<std::int64_t> pool_argmax;
    };

    void assign_param_ids();
    int decoder_channels(int k) const;  // channels of decoder stage k

    NetConfig cfg_;
    int stages_;
    std::vector<EncoderStage> encoder_;
    std::vector<DecoderBlock> decoder_;     // stages 1..L-1
    std::vector<Conv2dLayer> side_heads_;   // one per decoder stage
    Conv2dLayer fusion_;
    std::optional<Conv2dLayer> edge_head_;
    std::vector<Conv2dLayer> guides_;       // edge feature -> decoder channels

    // forward caches
    std::vector<Tensor> dec_feats_;
    std::vector<Tensor> side_logits_;  // upsampled to input resolution
    Tensor cat_;
    Tensor edge_sig_;
    ForwardOutputs outs_;
    bool has_forward_{false};
};

// Checkpoint file: magic "CSOD", u16 version, the serialized NetConfig, then
// one record per parameter (id, rank, dims, little-endian f64 payload).
inline constexpr std::uint16_t kCheckpointVersion = 1;
void save_checkpoint(const SodNet& net, const std::string& path);
std::unique_ptr<SodNet> load_checkpoint(const std::string& path);
std::int64_t projected_checkpoint_bytes(const NetConfig& cfg);

}  // namespace csod
