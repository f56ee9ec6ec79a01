#include "csod/net.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "csod/rng.hpp"

namespace csod {

namespace {

const char* decoder_name(NetConfig::Decoder d) {
    return d == NetConfig::Decoder::fire ? "fire" : "plain";
}

NetConfig::Decoder decoder_from(const std::string& s) {
    if (s == "fire") return NetConfig::Decoder::fire;
    if (s == "plain") return NetConfig::Decoder::plain;
    throw ConfigError(cat("unknown decoder kind '", s, "' (expected fire or plain)"));
}

bool parse_bool(const std::string& key, const std::string& s) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw ConfigError(cat("key ", key, ": expected a boolean (0/1/true/false), got '", s, "'"));
}

int parse_int(const std::string& key, const std::string& s) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(s, &pos);
        check<ConfigError>(pos == s.size(), "key ", key, ": trailing junk in '", s, "'");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError(cat("key ", key, ": expected an integer, got '", s, "'"));
    }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_int(key, item));
    check<ConfigError>(!out.empty(), "key ", key, ": empty list");
    return out;
}

void accumulate(Tensor& dst, const Tensor& src) {
    if (dst.empty()) {
        dst = src;
        return;
    }
    check(dst.shape() == src.shape(), "gradient accumulation shape mismatch: ",
          dst.shape().str(), " vs ", src.shape().str());
    for (std::int64_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

void NetConfig::validate() const {
    check<ConfigError>(stages >= 2, "net.stages must be >= 2, got ", stages);
    check<ConfigError>(static_cast<int>(stage_channels.size()) == stages,
                       "net.stage_channels needs ", stages, " entries, got ",
                       stage_channels.size());
    for (std::size_t i = 0; i < stage_channels.size(); ++i) {
        check<ConfigError>(stage_channels[i] >= 1, "net.stage_channels[", i, "] must be >= 1");
        if (i > 0) {
            check<ConfigError>(stage_channels[i] > stage_channels[i - 1],
                               "net.stage_channels must be strictly increasing");
        }
    }
    const int div = 1 << (stages - 1);
    check<ConfigError>(input_size >= div && input_size % div == 0, "net.input_size ",
                       input_size, " must be divisible by 2^(stages-1) = ", div);
    if (decoder == Decoder::fire) {
        for (std::size_t i = 0; i + 1 < stage_channels.size(); ++i) {
            check<ConfigError>(stage_channels[i] % 2 == 0,
                               "fire decoder needs even skip channels, got ",
                               stage_channels[i]);
        }
    }
    check<ConfigError>(fire_squeeze_div >= 1, "net.fire_squeeze_div must be >= 1");
    check<ConfigError>(se_reduction >= 1, "net.se_reduction must be >= 1");
}

std::string NetConfig::serialize() const {
    std::ostringstream os;
    os << "stages=" << stages << "\n";
    os << "stage_channels=";
    for (std::size_t i = 0; i < stage_channels.size(); ++i) {
        if (i) os << ",";
        os << stage_channels[i];
    }
    os << "\n";
    os << "decoder=" << decoder_name(decoder) << "\n";
    os << "se_enabled=" << (se_enabled ? 1 : 0) << "\n";
    os << "edge_branch=" << (edge_branch ? 1 : 0) << "\n";
    os << "input_size=" << input_size << "\n";
    os << "fire_squeeze_div=" << fire_squeeze_div << "\n";
    os << "se_reduction=" << se_reduction << "\n";
    os << "se_residual=" << (se_residual ? 1 : 0) << "\n";
    return os.str();
}

NetConfig NetConfig::deserialize(const std::string& text) {
    NetConfig cfg;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto eq = line.find('=');
        check<ConfigError>(eq != std::string::npos, "bad net config line '", line, "'");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        if (key == "stages") {
            cfg.stages = parse_int(key, val);
        } else if (key == "stage_channels") {
            cfg.stage_channels = parse_int_list(key, val);
        } else if (key == "decoder") {
            cfg.decoder = decoder_from(val);
        } else if (key == "se_enabled") {
            cfg.se_enabled = parse_bool(key, val);
        } else if (key == "edge_branch") {
            cfg.edge_branch = parse_bool(key, val);
        } else if (key == "input_size") {
            cfg.input_size = parse_int(key, val);
        } else if (key == "fire_squeeze_div") {
            cfg.fire_squeeze_div = parse_int(key, val);
        } else if (key == "se_reduction") {
            cfg.se_reduction = parse_int(key, val);
        } else if (key == "se_residual") {
            cfg.se_residual = parse_bool(key, val);
        } else {
            throw ConfigError(cat("unknown net config key '", key, "'"));
        }
    }
    cfg.validate();
    return cfg;
}

namespace {

FireConfig level_fire_config(const NetConfig& cfg, int skip_channels) {
    const int c_out = skip_channels;
    FireConfig fc;
    fc.c_in = skip_channels;
    fc.expand1 = c_out / 2;
    fc.expand3 = c_out / 2;
    fc.squeeze = std::max(1, c_out / cfg.fire_squeeze_div);
    return fc;
}

SEConfig level_se_config(const NetConfig& cfg, int channels) {
    SEConfig sc;
    sc.channels = channels;
    sc.reduction = std::min(cfg.se_reduction, channels);
    return sc;
}

}  // namespace

int SodNet::decoder_channels(int k) const {
    // stage 0 is the deepest encoder feature; stage k>=1 runs at the
    // resolution of skip E_{S-1-k}
    return k == 0 ? cfg_.stage_channels[stages_ - 1] : cfg_.stage_channels[stages_ - 1 - k];
}

SodNet::SodNet(const NetConfig& cfg, std::uint64_t seed, bool init_params)
    : cfg_(cfg), stages_(cfg.stages), fusion_(std::max(1, cfg.stages - 1), 1, 1) {
    cfg_.validate();
    const auto& ch = cfg_.stage_channels;
    encoder_.reserve(static_cast<std::size_t>(stages_));
    for (int j = 0; j < stages_; ++j) {
        const int c_in = j == 0 ? 3 : ch[j - 1];
        encoder_.push_back(EncoderStage{Conv2dLayer(c_in, ch[j], 3, 1, 1),
                                        Conv2dLayer(ch[j], ch[j], 3, 1, 1),
                                        {}, {}, {}});
    }
    encoder_[0].conv1.set_need_input_grad(false);

    const int levels = stages_ - 1;  // decoder stages
    for (int k = 1; k < levels; ++k) {
        const int skip_c = ch[stages_ - 1 - k];
        const int below_c = decoder_channels(k - 1);
        const FireConfig fc = level_fire_config(cfg_, skip_c);
        const SEConfig sc = level_se_config(cfg_, fc.c_out());
        DecoderBlock::Kind kind;
        if (cfg_.decoder == NetConfig::Decoder::plain) {
            kind = DecoderBlock::Kind::plain;
        } else {
            kind = cfg_.se_enabled ? DecoderBlock::Kind::fire_se : DecoderBlock::Kind::fire_only;
        }
        decoder_.emplace_back(kind, below_c, fc, sc,
                              cfg_.se_residual ? SEBlock::Fuse::scale_residual
                                               : SEBlock::Fuse::scale_only);
    }
    for (int k = 0; k < levels; ++k) {
        side_heads_.emplace_back(decoder_channels(k), 1, 1);
    }
    if (cfg_.edge_branch) {
        const int tap_c = ch[1];
        edge_head_.emplace(tap_c, 1, 1);
        for (int k = 0; k < levels; ++k) {
            guides_.emplace_back(tap_c, decoder_channels(k), 1);
        }
    }
    assign_param_ids();
    if (init_params) {
        Rng rng(seed);
        for (Param* p : params()) {
            if (p->is_bias) continue;
            for (std::int64_t i = 0; i < p->value.size(); ++i) {
                p->value[i] = rng.truncated_normal(0.01);
            }
        }
    }
}

void SodNet::assign_param_ids() {
    auto ps = params();
    for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->id = static_cast<int>(i);
}

std::vector<Param*> SodNet::params() {
    std::vector<Param*> ps;
    for (auto& st : encoder_) {
        st.conv1.collect_params(ps);
        st.conv2.collect_params(ps);
    }
    for (auto& d : decoder_) d.collect_params(ps);
    for (auto& h : side_heads_) h.collect_params(ps);
    fusion_.collect_params(ps);
    if (edge_head_) edge_head_->collect_params(ps);
    for (auto& g : guides_) g.collect_params(ps);
    return ps;
}

std::vector<const Param*> SodNet::params() const {
    std::vector<const Param*> ps;
    auto& self = const_cast<SodNet&>(*this);
    for (Param* p : self.params()) ps.push_back(p);
    return ps;
}

void SodNet::zero_grad() {
    for (Param* p : params()) p->zero_grad();
}

ForwardOutputs SodNet::forward(const Tensor& images) {
    check(images.shape().c == 3 && images.shape().h == cfg_.input_size &&
              images.shape().w == cfg_.input_size && images.n() >= 1,
          "forward: expected (n,3,", cfg_.input_size, ",", cfg_.input_size, ") input, got ",
          images.shape().str());
    for (std::int64_t i = 0; i < images.size(); ++i) {
        check(images[i] >= 0.0 && images[i] <= 1.0,
              "forward: image values must lie in [0,1], found ", images[i]);
    }
    const int levels = stages_ - 1;
    Tensor x = images;
    for (int j = 0; j < stages_; ++j) {
        auto& st = encoder_[j];
        st.act1 = pointwise_activation(Act::relu, st.conv1.forward(x));
        st.act2 = pointwise_activation(Act::relu, st.conv2.forward(st.act1));
        if (j < stages_ - 1) {
            MaxPoolOut p = maxpool2x2(st.act2);
            st.pool_argmax = std::move(p.argmax);
            x = std::move(p.out);
        }
    }

    dec_feats_.assign(static_cast<std::size_t>(levels), Tensor{});
    dec_feats_[0] = encoder_[stages_ - 1].act2;
    for (int k = 1; k < levels; ++k) {
        dec_feats_[static_cast<std::size_t>(k)] =
            decoder_[static_cast<std::size_t>(k - 1)].forward(
                encoder_[stages_ - 1 - k].act2, dec_feats_[static_cast<std::size_t>(k - 1)]);
    }

    outs_ = ForwardOutputs{};
    side_logits_.assign(static_cast<std::size_t>(levels), Tensor{});
    const Tensor* tap = cfg_.edge_branch ? &encoder_[1].act2 : nullptr;
    if (cfg_.edge_branch) {
        edge_sig_ = pointwise_activation(Act::sigmoid, edge_head_->forward(*tap));
        outs_.edge_map = upsample_to(edge_sig_, cfg_.input_size, cfg_.input_size);
    }
    for (int k = 0; k < levels; ++k) {
        Tensor feat;
        if (cfg_.edge_branch) {
            feat = add(upsample_to(dec_feats_[static_cast<std::size_t>(k)], tap->h(), tap->w()),
                       guides_[static_cast<std::size_t>(k)].forward(*tap));
        } else {
            feat = dec_feats_[static_cast<std::size_t>(k)];
        }
        // sigmoid and nearest upsampling commute, so taking the sigmoid at
        // full resolution yields the same side map while keeping the logits
        // around for the fusion head
        side_logits_[static_cast<std::size_t>(k)] =
            upsample_to(side_heads_[static_cast<std::size_t>(k)].forward(feat), cfg_.input_size,
                        cfg_.input_size);
        outs_.side_maps.push_back(
            pointwise_activation(Act::sigmoid, side_logits_[static_cast<std::size_t>(k)]));
    }

    // fuse the side logits into the final prediction
    const int n = images.n();
    const std::int64_t hw = static_cast<std::int64_t>(cfg_.input_size) * cfg_.input_size;
    cat_ = Tensor(Shape{n, levels, cfg_.input_size, cfg_.input_size});
    for (int in = 0; in < n; ++in) {
        for (int k = 0; k < levels; ++k) {
            std::memcpy(cat_.plane(in, k), side_logits_[static_cast<std::size_t>(k)].plane(in, 0),
                        static_cast<std::size_t>(hw) * sizeof(double));
        }
    }
    outs_.final_map = pointwise_activation(Act::sigmoid, fusion_.forward(cat_));
    has_forward_ = true;
    return outs_;
}

double total_loss(const ForwardOutputs& outputs, const Tensor& mask, const Tensor& edge) {
    check(!outputs.side_maps.empty(), "total_loss: no side maps");
    check(mask.shape() == outputs.final_map.shape(), "total_loss: mask shape ",
          mask.shape().str(), " does not match prediction resolution ",
          outputs.final_map.shape().str());
    double loss = 0.0;
    for (const Tensor& m : outputs.side_maps) loss += bce_loss(m, mask);
    loss += bce_loss(outputs.final_map, mask);
    if (outputs.edge_map) {
        check(edge.shape() == outputs.edge_map->shape(), "total_loss: edge shape ",
              edge.shape().str(), " does not match prediction resolution ",
              outputs.edge_map->shape().str());
        loss += bce_loss(*outputs.edge_map, edge);
    }
    return loss;
}

double SodNet::backward(const Tensor& mask, const Tensor& edge) {
    check(has_forward_, "backward called before forward");
    const double loss = total_loss(outs_, mask, edge);
    const int levels = stages_ - 1;

    Tensor d_final_logit = pointwise_activation_backward(
        Act::sigmoid, outs_.final_map, bce_loss_backward(outs_.final_map, mask));
    Tensor d_cat = fusion_.backward(d_final_logit);

    std::vector<Tensor> dE(static_cast<std::size_t>(stages_));
    std::vector<Tensor> dD(static_cast<std::size_t>(levels));
    Tensor d_tap;
    const std::int64_t hw = static_cast<std::int64_t>(cfg_.input_size) * cfg_.input_size;

    for (int k = 0; k < levels; ++k) {
        const Tensor& side = outs_.side_maps[static_cast<std::size_t>(k)];
        // the upsampled logit feeds both the side BCE (through its sigmoid)
        // and the fusion head (straight through the concat)
        Tensor d_up_logit =
            pointwise_activation_backward(Act::sigmoid, side, bce_loss_backward(side, mask));
        for (int in = 0; in < side.n(); ++in) {
            const double* src = d_cat.plane(in, k);
            double* dst = d_up_logit.plane(in, 0);
            for (std::int64_t i = 0; i < hw; ++i) dst[i] += src[i];
        }
        const int head_h = cfg_.edge_branch ? encoder_[1].act2.h()
                                            : dec_feats_[static_cast<std::size_t>(k)].h();
        Tensor d_logit = upsample_to_backward(d_up_logit, head_h, head_h);
        Tensor d_feat = side_heads_[static_cast<std::size_t>(k)].backward(d_logit);
        if (cfg_.edge_branch) {
            const Tensor& dk = dec_feats_[static_cast<std::size_t>(k)];
            accumulate(dD[static_cast<std::size_t>(k)],
                       upsample_to_backward(d_feat, dk.h(), dk.w()));
            accumulate(d_tap, guides_[static_cast<std::size_t>(k)].backward(d_feat));
        } else {
            accumulate(dD[static_cast<std::size_t>(k)], d_feat);
        }
    }

    if (cfg_.edge_branch) {
        Tensor d_edge = bce_loss_backward(*outs_.edge_map, edge);
        Tensor d_logit = pointwise_activation_backward(
            Act::sigmoid, edge_sig_, upsample_to_backward(d_edge, edge_sig_.h(), edge_sig_.w()));
        accumulate(d_tap, edge_head_->backward(d_logit));
    }

    for (int k = levels - 1; k >= 1; --k) {
        auto [d_skip, d_below] =
            decoder_[static_cast<std::size_t>(k - 1)].backward(dD[static_cast<std::size_t>(k)]);
        accumulate(dE[static_cast<std::size_t>(stages_ - 1 - k)], d_skip);
        accumulate(dD[static_cast<std::size_t>(k - 1)], d_below);
    }
    accumulate(dE[static_cast<std::size_t>(stages_ - 1)], dD[0]);
    if (cfg_.edge_branch) accumulate(dE[1], d_tap);

    for (int j = stages_ - 1; j >= 0; --j) {
        auto& st = encoder_[j];
        Tensor g = std::move(dE[static_cast<std::size_t>(j)]);
        check(!g.empty(), "internal: encoder stage ", j, " received no gradient");
        Tensor d_pre2 = pointwise_activation_backward(Act::relu, st.act2, g);
        Tensor d_act1 = st.conv2.backward(d_pre2);
        Tensor d_pre1 = pointwise_activation_backward(Act::relu, st.act1, d_act1);
        Tensor d_in = st.conv1.backward(d_pre1);
        if (j > 0) {
            accumulate(dE[static_cast<std::size_t>(j - 1)],
                       maxpool2x2_backward(d_in, encoder_[j - 1].pool_argmax,
                                           encoder_[j - 1].act2.shape()));
        }
    }
    return loss;
}

BlockParamCount SodNet::param_count() const { return count_params(params()); }

BlockParamCount SodNet::encoder_param_count() const {
    BlockParamCount c;
    for (const auto& st : encoder_) c += st.conv1.param_count() + st.conv2.param_count();
    return c;
}

BlockParamCount SodNet::decoder_core_param_count() const {
    BlockParamCount c;
    for (const auto& d : decoder_) c += d.core_param_count();
    return c;
}

BlockParamCount SodNet::decoder_plumbing_param_count() const {
    BlockParamCount c;
    for (const auto& d : decoder_) {
        c += d.param_count();
        BlockParamCount core = d.core_param_count();
        c.weights -= core.weights;
        c.biases -= core.biases;
    }
    return c;
}

BlockParamCount SodNet::heads_param_count() const {
    BlockParamCount c;
    for (const auto& h : side_heads_) c += h.param_count();
    c += fusion_.param_count();
    return c;
}

BlockParamCount SodNet::edge_param_count() const {
    BlockParamCount c;
    if (edge_head_) c += edge_head_->param_count();
    for (const auto& g : guides_) c += g.param_count();
    return c;
}

double decoder_param_ratio(const NetConfig& cfg) {
    cfg.validate();
    std::int64_t variant = 0;
    std::int64_t plain = 0;
    for (int k = 1; k < cfg.stages - 1; ++k) {
        const int skip_c = cfg.stage_channels[cfg.stages - 1 - k];
        const FireConfig fc = level_fire_config(cfg, skip_c);
        plain += plain_param_count(skip_c, skip_c).total();
        if (cfg.decoder == NetConfig::Decoder::plain) {
            variant += plain_param_count(skip_c, skip_c).total();
        } else {
            variant += fire_param_count(fc).total();
            if (cfg.se_enabled) variant += se_param_count(level_se_config(cfg, fc.c_out())).total();
        }
    }
    if (plain == 0) return 1.0;  // no decoder blocks (stages == 2)
    return static_cast<double>(variant) / static_cast<double>(plain);
}

// ---- checkpoint I/O ---------------------------------------------------------

namespace {

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, sizeof(v));
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Cursor {
    const unsigned char* p;
    std::size_t left;

    void need(std::size_t n) {
        check<IoError>(left >= n, "checkpoint truncated: needed ", n, " more bytes, have ", left);
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        p += 2;
        left -= 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        left -= 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        left -= 8;
        double d;
        std::memcpy(&d, &v, sizeof(d));
        return d;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        left -= n;
        return s;
    }
};

}  // namespace

void save_checkpoint(const SodNet& net, const std::string& path) {
    std::string buf;
    buf += "CSOD";
    put_u16(buf, kCheckpointVersion);
    const std::string cfg = net.config().serialize();
    put_u32(buf, static_cast<std::uint32_t>(cfg.size()));
    buf += cfg;
    auto ps = net.params();
    put_u32(buf, static_cast<std::uint32_t>(ps.size()));
    for (const Param* p : ps) {
        put_u32(buf, static_cast<std::uint32_t>(p->id));
        put_u32(buf, 4);
        const Shape& s = p->value.shape();
        put_u32(buf, static_cast<std::uint32_t>(s.n));
        put_u32(buf, static_cast<std::uint32_t>(s.c));
        put_u32(buf, static_cast<std::uint32_t>(s.h));
        put_u32(buf, static_cast<std::uint32_t>(s.w));
        for (std::int64_t i = 0; i < p->value.size(); ++i) put_f64(buf, p->value[i]);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    check<IoError>(f.good(), "cannot open checkpoint for writing: ", path);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    f.flush();
    check<IoError>(f.good(), "failed writing checkpoint: ", path);
}

std::unique_ptr<SodNet> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    check<IoError>(f.good(), "cannot open checkpoint: ", path);
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Cursor cur{reinterpret_cast<const unsigned char*>(data.data()), data.size()};

    const std::string magic = cur.bytes(4);
    check<IoError>(magic == "CSOD", "checkpoint magic mismatch in ", path,
                   ": not a CSOD checkpoint");
    const std::uint16_t version = cur.u16();
    check<IoError>(version == kCheckpointVersion, "unsupported checkpoint version ", version,
                   " in ", path, " (expected ", kCheckpointVersion, ")");
    const std::uint32_t cfg_len = cur.u32();
    NetConfig cfg = NetConfig::deserialize(cur.bytes(cfg_len));

    auto net = std::make_unique<SodNet>(cfg, 0, /*init_params=*/false);
    auto ps = net->params();
    const std::uint32_t count = cur.u32();
    check<IoError>(count == ps.size(), "checkpoint parameter count mismatch: file has ", count,
                   ", network expects ", ps.size());
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t id = cur.u32();
        check<IoError>(id < ps.size(), "checkpoint parameter id ", id, " out of range");
        const std::uint32_t rank = cur.u32();
        check<IoError>(rank == 4, "checkpoint parameter ", id, " has unsupported rank ", rank);
        Shape s;
        s.n = static_cast<int>(cur.u32());
        s.c = static_cast<int>(cur.u32());
        s.h = static_cast<int>(cur.u32());
        s.w = static_cast<int>(cur.u32());
        Param* p = ps[id];
        check<IoError>(s == p->value.shape(), "checkpoint parameter ", id, " shape mismatch: file says ",
                       s.str(), ", network expects ", p->value.shape().str());
        for (std::int64_t e = 0; e < p->value.size(); ++e) p->value[e] = cur.f64();
    }
    check<IoError>(cur.left == 0, "checkpoint has ", cur.left, " trailing bytes: ", path);
    return net;
}

std::int64_t projected_checkpoint_bytes(const NetConfig& cfg) {
    SodNet net(cfg, 0, /*init_params=*/false);
    std::int64_t bytes = 4 + 2 + 4 + static_cast<std::int64_t>(cfg.serialize().size()) + 4;
    for (const Param* p : net.params()) {
        bytes += 4 + 4 + 4 * 4 + 8 * p->value.size();
    }
    return bytes;
}

}  // namespace csod
