#include "csod/optim.hpp"

#include <cmath>

namespace csod {

const char* algo_name(Algo a) {
    switch (a) {
        case Algo::sgd_momentum: return "sgd_momentum";
        case Algo::adam: return "adam";
        case Algo::adax: return "adax";
        case Algo::adagrad: return "adagrad";
        case Algo::rmsprop: return "rmsprop";
        case Algo::adadelta: return "adadelta";
        case Algo::adamw: return "adamw";
    }
    return "?";
}

Algo algo_from_name(const std::string& name) {
    for (Algo a : {Algo::sgd_momentum, Algo::adam, Algo::adax, Algo::adagrad, Algo::rmsprop,
                   Algo::adadelta, Algo::adamw}) {
        if (name == algo_name(a)) return a;
    }
    throw ConfigError(cat("unknown optimizer algorithm '", name, "'"));
}

void OptimizerConfig::validate() const {
    check<ConfigError>(alpha > 0.0, "optimizer: alpha must be > 0, got ", alpha);
    check<ConfigError>(beta1 >= 0.0 && beta1 < 1.0, "optimizer: beta1 must lie in [0,1), got ",
                       beta1);
    check<ConfigError>(eps > 0.0, "optimizer: eps must be > 0, got ", eps);
    check<ConfigError>(weight_decay >= 0.0, "optimizer: weight_decay must be >= 0, got ",
                       weight_decay);
    if (algorithm == Algo::adax) {
        // beta2 is an accumulation rate here; (1+beta2)^t - 1 must not vanish
        check<ConfigError>(beta2 > 0.0, "adax: beta2 must be > 0 (got ", beta2,
                           "); the v-normalizer (1+beta2)^t - 1 would be zero");
    } else if (algorithm == Algo::adam || algorithm == Algo::adamw || algorithm == Algo::rmsprop ||
               algorithm == Algo::adadelta) {
        check<ConfigError>(beta2 >= 0.0 && beta2 < 1.0, algo_name(algorithm),
                           ": beta2 must lie in [0,1), got ", beta2);
    }
    if (algorithm == Algo::sgd_momentum) {
        check<ConfigError>(momentum >= 0.0 && momentum < 1.0,
                           "sgd_momentum: momentum must lie in [0,1), got ", momentum);
    }
}

OptimizerConfig OptimizerConfig::resolved() const {
    OptimizerConfig r = *this;
    if (beta2 < 0.0) {
        // unset: the adam-family decay default, or the adax accumulation rate
        r.beta2 = algorithm == Algo::adax ? kAdaxDefaultBeta2 : 0.999;
    }
    if (!r.eps_inside_sqrt.has_value()) {
        r.eps_inside_sqrt = (algorithm == Algo::adax);
    }
    r.validate();
    return r;
}

bool OptimizerConfig::eps_inside() const {
    return eps_inside_sqrt.value_or(algorithm == Algo::adax);
}

Optimizer::Optimizer(const OptimizerConfig& cfg, std::vector<Param*> params)
    : cfg_(cfg.resolved()) {
    attach(std::move(params));
}

void Optimizer::attach(std::vector<Param*> params) {
    cfg_ = cfg_.resolved();
    params_ = std::move(params);
    states_.clear();
    states_.reserve(params_.size());
    for (Param* p : params_) {
        MomentState s;
        s.m = Tensor(p->value.shape());
        s.v = Tensor(p->value.shape());
        states_.push_back(std::move(s));
    }
}

void Optimizer::zero_grad() {
    for (Param* p : params_) p->zero_grad();
}

void Optimizer::step() {
    check(!params_.empty() && states_.size() == params_.size(),
          "optimizer: step with uninitialized state (attach parameters first)");
    const double a = cfg_.alpha;
    const double b1 = cfg_.beta1;
    const double b2 = cfg_.beta2;
    const double eps = cfg_.eps;
    const double wd = cfg_.weight_decay;
    const bool eps_in = cfg_.eps_inside();

    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Param& p = *params_[pi];
        MomentState& st = states_[pi];
        st.t += 1;
        const long t = st.t;
        double* theta = p.value.data();
        const double* grad = p.grad.data();
        double* m = st.m.data();
        double* v = st.v.data();
        const std::int64_t n = p.value.size();

        switch (cfg_.algorithm) {
            case Algo::sgd_momentum: {
                for (std::int64_t i = 0; i < n; ++i) {
                    const double g = grad[i] + wd * theta[i];
                    m[i] = cfg_.momentum * m[i] + g;
                    theta[i] -= a * m[i];
                }
                break;
            }
            case Algo::adam:
            case Algo::adamw: {
                const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
                const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
                const bool decoupled = cfg_.algorithm == Algo::adamw;
                for (std::int64_t i = 0; i < n; ++i) {
                    if (decoupled) theta[i] *= 1.0 - a * wd;
                    const double g = decoupled ? grad[i] : grad[i] + wd * theta[i];
                    m[i] = b1 * m[i] + (1.0 - b1) * g;
                    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                    const double mhat = m[i] / c1;
                    const double vhat = v[i] / c2;
                    const double denom =
                        eps_in ? std::sqrt(vhat + eps) : std::sqrt(vhat) + eps;
                    theta[i] -= a * mhat / denom;
                }
                break;
            }
            case Algo::adax: {
                // v accumulates with growth factor (1+b2); the normalizer is
                // (1+b2)^t - 1, computed via expm1 to keep t=1 exact.
                const double norm = std::expm1(static_cast<double>(t) * std::log1p(b2));
                for (std::int64_t i = 0; i < n; ++i) {
                    const double g = grad[i] + wd * theta[i];
                    m[i] = b1 * m[i] + (1.0 - b1) * g;  // no bias correction
                    v[i] = (1.0 + b2) * v[i] + b2 * g * g;
                    const double vhat = v[i] / norm;
                    const double denom =
                        eps_in ? std::sqrt(vhat + eps) : std::sqrt(vhat) + eps;
                    theta[i] -= a * m[i] / denom;
                }
                break;
            }
            case Algo::adagrad: {
                for (std::int64_t i = 0; i < n; ++i) {
                    const double g = grad[i] + wd * theta[i];
                    v[i] += g * g;
                    theta[i] -= a * g / (std::sqrt(v[i]) + eps);
                }
                break;
            }
            case Algo::rmsprop: {
                for (std::int64_t i = 0; i < n; ++i) {
                    const double g = grad[i] + wd * theta[i];
                    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                    theta[i] -= a * g / (std::sqrt(v[i]) + eps);
                }
                break;
            }
            case Algo::adadelta: {
                // m doubles as the accumulator of squared updates
                for (std::int64_t i = 0; i < n; ++i) {
                    const double g = grad[i] + wd * theta[i];
                    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                    const double dx = -std::sqrt(m[i] + eps) / std::sqrt(v[i] + eps) * g;
                    m[i] = b2 * m[i] + (1.0 - b2) * dx * dx;
                    theta[i] += a * dx;
                }
                break;
            }
        }
    }
}

double schedule_lr(double base_alpha, int epoch, int total_epochs) {
    check(epoch >= 0 && epoch < total_epochs, "schedule_lr: epoch ", epoch,
          " outside [0,", total_epochs, ")");
    return epoch < total_epochs / 2.0 ? base_alpha : base_alpha / 10.0;
}

}  // namespace csod
