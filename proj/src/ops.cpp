#include "csod/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "csod/parallel.hpp"

namespace csod {

namespace {

// Fixed four-accumulator reduction order: deterministic and wide enough for
// the compiler to keep the partial sums in one vector register.
inline double dot_k(const double* a, const double* b, int k) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int i = 0;
    for (; i + 4 <= k; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double s = (s0 + s1) + (s2 + s3);
    for (; i < k; ++i) s += a[i] * b[i];
    return s;
}

inline void axpy_k(double* y, double a, const double* x, int k) {
    for (int i = 0; i < k; ++i) y[i] += a * x[i];
}

struct ConvDims {
    int ci, co, kh, kw, oh, ow, k;  // k = ci*kh*kw
};

ConvDims conv_dims(const Tensor& input, const Tensor& weight, int stride, int padding) {
    check(stride >= 1, "conv2d: stride must be >= 1, got ", stride);
    check(padding >= 0, "conv2d: padding must be >= 0, got ", padding);
    check(weight.c() == input.c(), "conv2d: weight expects c_in=", weight.c(),
          " but input has shape ", input.shape().str());
    ConvDims d;
    d.ci = input.c();
    d.co = weight.n();
    d.kh = weight.h();
    d.kw = weight.w();
    d.oh = (input.h() + 2 * padding - d.kh) / stride + 1;
    d.ow = (input.w() + 2 * padding - d.kw) / stride + 1;
    check(input.h() + 2 * padding >= d.kh && input.w() + 2 * padding >= d.kw &&
              d.oh >= 1 && d.ow >= 1,
          "conv2d: non-positive output size for input ", input.shape().str(), " kernel ",
          weight.shape().str(), " stride ", stride, " padding ", padding);
    d.k = d.ci * d.kh * d.kw;
    return d;
}

// Gathers the receptive field of every output pixel of one sample into
// rows of length k: colT[(oy*ow+ox)*k + (ci*kh+ky)*kw+kx].
void im2col_rows(const Tensor& x, int in, const ConvDims& d, int stride, int padding,
                 double* colT) {
    const int h = x.h(), w = x.w();
    for (int oy = 0; oy < d.oh; ++oy) {
        for (int ox = 0; ox < d.ow; ++ox) {
            double* row = colT + (static_cast<std::int64_t>(oy) * d.ow + ox) * d.k;
            for (int ic = 0; ic < d.ci; ++ic) {
                const double* plane = x.plane(in, ic);
                for (int ky = 0; ky < d.kh; ++ky) {
                    const int iy = oy * stride + ky - padding;
                    if (iy < 0 || iy >= h) {
                        for (int kx = 0; kx < d.kw; ++kx) *row++ = 0.0;
                        continue;
                    }
                    const double* src = plane + static_cast<std::int64_t>(iy) * w;
                    for (int kx = 0; kx < d.kw; ++kx) {
                        const int ix = ox * stride + kx - padding;
                        *row++ = (ix < 0 || ix >= w) ? 0.0 : src[ix];
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int padding) {
    const ConvDims d = conv_dims(input, weight, stride, padding);
    check(bias.shape() == Shape{1, d.co, 1, 1}, "conv2d: bias shape ", bias.shape().str(),
          " does not match (1,", d.co, ",1,1)");
    Tensor out(Shape{input.n(), d.co, d.oh, d.ow});
    const std::int64_t ohw = static_cast<std::int64_t>(d.oh) * d.ow;
    std::vector<double> colT(static_cast<std::size_t>(ohw * d.k));
    const double* wdat = weight.data();
    const double* bdat = bias.data();
    for (int in = 0; in < input.n(); ++in) {
        im2col_rows(input, in, d, stride, padding, colT.data());
        double* odat = out.plane(in, 0);
        parallel_for(0, ohw, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t j = lo; j < hi; ++j) {
                const double* col = colT.data() + j * d.k;
                for (int co = 0; co < d.co; ++co) {
                    odat[co * ohw + j] = bdat[co] + dot_k(wdat + static_cast<std::int64_t>(co) * d.k, col, d.k);
                }
            }
        });
    }
    return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& upstream,
                            int stride, int padding, bool need_input_grad) {
    const ConvDims d = conv_dims(input, weight, stride, padding);
    check(upstream.shape() == Shape{input.n(), d.co, d.oh, d.ow},
          "conv2d_backward: upstream shape ", upstream.shape().str(),
          " does not match forward output (", input.n(), ",", d.co, ",", d.oh, ",", d.ow, ")");
    Conv2dGrads g;
    g.input = Tensor(input.shape());
    g.weight = Tensor(weight.shape());
    g.bias = Tensor(Shape{1, d.co, 1, 1});
    const std::int64_t ohw = static_cast<std::int64_t>(d.oh) * d.ow;
    std::vector<double> colT(static_cast<std::size_t>(ohw * d.k));
    std::vector<double> dcol(static_cast<std::size_t>(d.k));
    const double* wdat = weight.data();
    const int h = input.h(), w = input.w();

    for (int in = 0; in < input.n(); ++in) {
        im2col_rows(input, in, d, stride, padding, colT.data());
        const double* up = upstream.plane(in, 0);

        // dW and dB, each output channel owned by one pass over the pixels
        parallel_for(0, d.co, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t co = lo; co < hi; ++co) {
                double* dwrow = g.weight.data() + co * d.k;
                double db = 0.0;
                const double* uprow = up + co * ohw;
                for (std::int64_t j = 0; j < ohw; ++j) {
                    const double u = uprow[j];
                    db += u;
                    axpy_k(dwrow, u, colT.data() + j * d.k, d.k);
                }
                g.bias[co] += db;
            }
        });

        if (!need_input_grad) continue;
        // dX: accumulate W^T * upstream row-by-row, scattered back through the
        // same gather pattern im2col used.
        for (std::int64_t j = 0; j < ohw; ++j) {
            std::fill(dcol.begin(), dcol.end(), 0.0);
            for (int co = 0; co < d.co; ++co) {
                axpy_k(dcol.data(), up[co * ohw + j], wdat + static_cast<std::int64_t>(co) * d.k, d.k);
            }
            const int oy = static_cast<int>(j / d.ow);
            const int ox = static_cast<int>(j % d.ow);
            const double* row = dcol.data();
            for (int ic = 0; ic < d.ci; ++ic) {
                double* plane = g.input.plane(in, ic);
                for (int ky = 0; ky < d.kh; ++ky) {
                    const int iy = oy * stride + ky - padding;
                    if (iy < 0 || iy >= h) {
                        row += d.kw;
                        continue;
                    }
                    double* dst = plane + static_cast<std::int64_t>(iy) * w;
                    for (int kx = 0; kx < d.kw; ++kx) {
                        const int ix = ox * stride + kx - padding;
                        if (ix >= 0 && ix < w) dst[ix] += row[kx];
                    }
                    row += d.kw;
                }
            }
        }
    }
    return g;
}

Tensor pointwise_activation(Act kind, const Tensor& input) {
    Tensor out(input.shape());
    const double* x = input.data();
    double* y = out.data();
    const std::int64_t n = input.size();
    if (kind == Act::relu) {
        for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    } else {
        for (std::int64_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
    }
    return out;
}

Tensor pointwise_activation_backward(Act kind, const Tensor& output, const Tensor& upstream) {
    check(output.shape() == upstream.shape(), "activation backward: output shape ",
          output.shape().str(), " != upstream shape ", upstream.shape().str());
    Tensor dx(output.shape());
    const double* y = output.data();
    const double* u = upstream.data();
    double* d = dx.data();
    const std::int64_t n = output.size();
    if (kind == Act::relu) {
        for (std::int64_t i = 0; i < n; ++i) d[i] = y[i] > 0.0 ? u[i] : 0.0;
    } else {
        for (std::int64_t i = 0; i < n; ++i) d[i] = u[i] * y[i] * (1.0 - y[i]);
    }
    return dx;
}

MaxPoolOut maxpool2x2(const Tensor& input) {
    check(input.h() % 2 == 0 && input.w() % 2 == 0,
          "maxpool2x2: spatial size must be even, got ", input.shape().str());
    MaxPoolOut r;
    r.out = Tensor(Shape{input.n(), input.c(), input.h() / 2, input.w() / 2});
    r.argmax.resize(static_cast<std::size_t>(r.out.size()));
    const int oh = r.out.h(), ow = r.out.w(), w = input.w();
    std::int64_t oi = 0;
    for (int in = 0; in < input.n(); ++in) {
        for (int ic = 0; ic < input.c(); ++ic) {
            const double* plane = input.plane(in, ic);
            const std::int64_t base = input.index(in, ic, 0, 0);
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    // ties go to the first occurrence in row-major order
                    std::int64_t best = static_cast<std::int64_t>(2 * oy) * w + 2 * ox;
                    double bv = plane[best];
                    const std::int64_t cand[3] = {best + 1, best + w, best + w + 1};
                    for (std::int64_t cidx : cand) {
                        if (plane[cidx] > bv) {
                            bv = plane[cidx];
                            best = cidx;
                        }
                    }
                    r.out[oi] = bv;
                    r.argmax[static_cast<std::size_t>(oi)] = base + best;
                    ++oi;
                }
            }
        }
    }
    return r;
}

Tensor maxpool2x2_backward(const Tensor& upstream, const std::vector<std::int64_t>& argmax,
                           const Shape& input_shape) {
    check(static_cast<std::int64_t>(argmax.size()) == upstream.size(),
          "maxpool2x2_backward: argmax size ", argmax.size(), " != upstream elements ",
          upstream.size());
    Tensor dx(input_shape);
    for (std::int64_t i = 0; i < upstream.size(); ++i) {
        dx[argmax[static_cast<std::size_t>(i)]] += upstream[i];
    }
    return dx;
}

Tensor upsample_nearest2x(const Tensor& input) {
    Tensor out(Shape{input.n(), input.c(), input.h() * 2, input.w() * 2});
    const int h = input.h(), w = input.w();
    for (int in = 0; in < input.n(); ++in) {
        for (int ic = 0; ic < input.c(); ++ic) {
            const double* src = input.plane(in, ic);
            double* dst = out.plane(in, ic);
            for (int y = 0; y < h; ++y) {
                double* r0 = dst + static_cast<std::int64_t>(2 * y) * 2 * w;
                double* r1 = r0 + 2 * w;
                for (int x = 0; x < w; ++x) {
                    const double v = src[static_cast<std::int64_t>(y) * w + x];
                    r0[2 * x] = v;
                    r0[2 * x + 1] = v;
                    r1[2 * x] = v;
                    r1[2 * x + 1] = v;
                }
            }
        }
    }
    return out;
}

Tensor upsample_nearest2x_backward(const Tensor& upstream) {
    check(upstream.h() % 2 == 0 && upstream.w() % 2 == 0,
          "upsample2x backward: upstream spatial size must be even, got ",
          upstream.shape().str());
    Tensor dx(Shape{upstream.n(), upstream.c(), upstream.h() / 2, upstream.w() / 2});
    const int h = dx.h(), w = dx.w();
    for (int in = 0; in < upstream.n(); ++in) {
        for (int ic = 0; ic < upstream.c(); ++ic) {
            const double* up = upstream.plane(in, ic);
            double* dst = dx.plane(in, ic);
            for (int y = 0; y < h; ++y) {
                const double* r0 = up + static_cast<std::int64_t>(2 * y) * 2 * w;
                const double* r1 = r0 + 2 * w;
                for (int x = 0; x < w; ++x) {
                    dst[static_cast<std::int64_t>(y) * w + x] =
                        (r0[2 * x] + r0[2 * x + 1]) + (r1[2 * x] + r1[2 * x + 1]);
                }
            }
        }
    }
    return dx;
}

Tensor upsample_to(const Tensor& input, int target_h, int target_w) {
    check(target_h >= input.h() && target_w >= input.w() && input.h() > 0 && input.w() > 0,
          "upsample_to: target ", target_h, "x", target_w, " smaller than input ",
          input.shape().str());
    Tensor cur = input;
    while (cur.h() < target_h || cur.w() < target_w) cur = upsample_nearest2x(cur);
    check(cur.h() == target_h && cur.w() == target_w, "upsample_to: target ", target_h, "x",
          target_w, " is not a power-of-two multiple of ", input.h(), "x", input.w());
    return cur;
}

Tensor upsample_to_backward(const Tensor& upstream, int src_h, int src_w) {
    Tensor cur = upstream;
    while (cur.h() > src_h || cur.w() > src_w) cur = upsample_nearest2x_backward(cur);
    check(cur.h() == src_h && cur.w() == src_w, "upsample_to_backward: source ", src_h, "x",
          src_w, " is not a power-of-two divisor of ", upstream.h(), "x", upstream.w());
    return cur;
}

Tensor global_avg_pool(const Tensor& input) {
    Tensor out(Shape{input.n(), input.c(), 1, 1});
    const std::int64_t hw = static_cast<std::int64_t>(input.h()) * input.w();
    check(hw > 0, "global_avg_pool: empty spatial plane ", input.shape().str());
    std::int64_t oi = 0;
    for (int in = 0; in < input.n(); ++in) {
        for (int ic = 0; ic < input.c(); ++ic) {
            const double* p = input.plane(in, ic);
            double s = 0.0;
            for (std::int64_t i = 0; i < hw; ++i) s += p[i];
            out[oi++] = s / static_cast<double>(hw);
        }
    }
    return out;
}

Tensor global_avg_pool_backward(const Tensor& upstream, const Shape& input_shape) {
    check(upstream.shape() == Shape{input_shape.n, input_shape.c, 1, 1},
          "global_avg_pool backward: upstream shape ", upstream.shape().str(),
          " does not match (", input_shape.n, ",", input_shape.c, ",1,1)");
    Tensor dx(input_shape);
    const std::int64_t hw = static_cast<std::int64_t>(input_shape.h) * input_shape.w;
    std::int64_t ui = 0;
    for (int in = 0; in < input_shape.n; ++in) {
        for (int ic = 0; ic < input_shape.c; ++ic) {
            const double v = upstream[ui++] / static_cast<double>(hw);
            double* p = dx.plane(in, ic);
            for (std::int64_t i = 0; i < hw; ++i) p[i] = v;
        }
    }
    return dx;
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    check(input.h() == 1 && input.w() == 1, "linear: input must be (n, features, 1, 1), got ",
          input.shape().str());
    const int f = input.c(), out_f = weight.n();
    check(weight.c() == f && weight.h() == 1 && weight.w() == 1,
          "linear: weight shape ", weight.shape().str(), " does not match input features ", f);
    check(bias.shape() == Shape{1, out_f, 1, 1}, "linear: bias shape ", bias.shape().str(),
          " does not match (1,", out_f, ",1,1)");
    Tensor out(Shape{input.n(), out_f, 1, 1});
    for (int in = 0; in < input.n(); ++in) {
        const double* x = input.plane(in, 0);
        double* y = out.plane(in, 0);
        for (int o = 0; o < out_f; ++o) {
            y[o] = bias[o] + dot_k(weight.data() + static_cast<std::int64_t>(o) * f, x, f);
        }
    }
    return out;
}

LinearGrads linear_backward(const Tensor& input, const Tensor& weight, const Tensor& upstream) {
    const int f = input.c(), out_f = weight.n();
    check(upstream.shape() == Shape{input.n(), out_f, 1, 1},
          "linear backward: upstream shape ", upstream.shape().str(), " does not match (",
          input.n(), ",", out_f, ",1,1)");
    LinearGrads g;
    g.input = Tensor(input.shape());
    g.weight = Tensor(weight.shape());
    g.bias = Tensor(Shape{1, out_f, 1, 1});
    for (int in = 0; in < input.n(); ++in) {
        const double* x = input.plane(in, 0);
        const double* u = upstream.plane(in, 0);
        double* dx = g.input.plane(in, 0);
        for (int o = 0; o < out_f; ++o) {
            const double uo = u[o];
            g.bias[o] += uo;
            axpy_k(g.weight.data() + static_cast<std::int64_t>(o) * f, uo, x, f);
            axpy_k(dx, uo, weight.data() + static_cast<std::int64_t>(o) * f, f);
        }
    }
    return g;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    check(a.n() == b.n() && a.h() == b.h() && a.w() == b.w(),
          "concat_channels: batch/spatial mismatch between ", a.shape().str(), " and ",
          b.shape().str());
    Tensor out(Shape{a.n(), a.c() + b.c(), a.h(), a.w()});
    const std::int64_t hw = static_cast<std::int64_t>(a.h()) * a.w();
    for (int in = 0; in < a.n(); ++in) {
        std::memcpy(out.plane(in, 0), a.plane(in, 0),
                    static_cast<std::size_t>(a.c() * hw) * sizeof(double));
        std::memcpy(out.plane(in, a.c()), b.plane(in, 0),
                    static_cast<std::size_t>(b.c() * hw) * sizeof(double));
    }
    return out;
}

std::pair<Tensor, Tensor> concat_channels_backward(const Tensor& upstream, int c_a) {
    check(c_a >= 0 && c_a <= upstream.c(), "concat backward: split point ", c_a,
          " outside upstream channels ", upstream.c());
    const int c_b = upstream.c() - c_a;
    Tensor da(Shape{upstream.n(), c_a, upstream.h(), upstream.w()});
    Tensor db(Shape{upstream.n(), c_b, upstream.h(), upstream.w()});
    const std::int64_t hw = static_cast<std::int64_t>(upstream.h()) * upstream.w();
    for (int in = 0; in < upstream.n(); ++in) {
        std::memcpy(da.plane(in, 0), upstream.plane(in, 0),
                    static_cast<std::size_t>(c_a * hw) * sizeof(double));
        std::memcpy(db.plane(in, 0), upstream.plane(in, c_a),
                    static_cast<std::size_t>(c_b * hw) * sizeof(double));
    }
    return {std::move(da), std::move(db)};
}

Tensor channel_scale(const Tensor& x, const Tensor& s) {
    check(s.shape() == Shape{x.n(), x.c(), 1, 1}, "channel_scale: scale shape ",
          s.shape().str(), " does not match (", x.n(), ",", x.c(), ",1,1)");
    Tensor out(x.shape());
    const std::int64_t hw = static_cast<std::int64_t>(x.h()) * x.w();
    std::int64_t si = 0;
    for (int in = 0; in < x.n(); ++in) {
        for (int ic = 0; ic < x.c(); ++ic) {
            const double sv = s[si++];
            const double* src = x.plane(in, ic);
            double* dst = out.plane(in, ic);
            for (std::int64_t i = 0; i < hw; ++i) dst[i] = src[i] * sv;
        }
    }
    return out;
}

ChannelScaleGrads channel_scale_backward(const Tensor& x, const Tensor& s, const Tensor& upstream) {
    check(upstream.shape() == x.shape(), "channel_scale backward: upstream shape ",
          upstream.shape().str(), " != input shape ", x.shape().str());
    ChannelScaleGrads g;
    g.x = Tensor(x.shape());
    g.s = Tensor(s.shape());
    const std::int64_t hw = static_cast<std::int64_t>(x.h()) * x.w();
    std::int64_t si = 0;
    for (int in = 0; in < x.n(); ++in) {
        for (int ic = 0; ic < x.c(); ++ic) {
            const double sv = s[si];
            const double* src = x.plane(in, ic);
            const double* up = upstream.plane(in, ic);
            double* dst = g.x.plane(in, ic);
            double acc = 0.0;
            for (std::int64_t i = 0; i < hw; ++i) {
                dst[i] = up[i] * sv;
                acc += up[i] * src[i];
            }
            g.s[si++] = acc;
        }
    }
    return g;
}

Tensor add(const Tensor& a, const Tensor& b) {
    check(a.shape() == b.shape(), "add: shape mismatch between ", a.shape().str(), " and ",
          b.shape().str());
    Tensor out(a.shape());
    const std::int64_t n = a.size();
    for (std::int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
    return out;
}

namespace {
inline double clamp_pred(double p) {
    return std::min(1.0 - kBceClamp, std::max(kBceClamp, p));
}
}  // namespace

double bce_loss(const Tensor& pred, const Tensor& target) {
    check(pred.shape() == target.shape(), "bce_loss: pred shape ", pred.shape().str(),
          " != target shape ", target.shape().str());
    check(pred.size() > 0, "bce_loss: empty tensors");
    const std::int64_t n = pred.size();
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double t = target[i];
        check(t >= 0.0 && t <= 1.0, "bce_loss: target value ", t, " outside [0,1] at index ", i);
        const double p = clamp_pred(pred[i]);
        acc += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
    }
    return acc / static_cast<double>(n);
}

Tensor bce_loss_backward(const Tensor& pred, const Tensor& target) {
    check(pred.shape() == target.shape(), "bce_loss backward: pred shape ", pred.shape().str(),
          " != target shape ", target.shape().str());
    Tensor dp(pred.shape());
    const std::int64_t n = pred.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::int64_t i = 0; i < n; ++i) {
        const double raw = pred[i];
        if (raw < kBceClamp || raw > 1.0 - kBceClamp) {
            dp[i] = 0.0;  // clamp region is flat
            continue;
        }
        const double t = target[i];
        dp[i] = (raw - t) / (raw * (1.0 - raw)) * inv_n;
    }
    return dp;
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace csod
