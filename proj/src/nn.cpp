#include "rib/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace rib::nn {

double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double activation_eval(Activation kind, double x) {
    switch (kind) {
        case Activation::Identity: return x;
        case Activation::Relu: return x > 0.0 ? x : 0.0;
        case Activation::LeakyRelu: return x > 0.0 ? x : kLeakyReluSlope * x;
        case Activation::Softplus: return softplus(x);
        case Activation::Sigmoid: return sigmoid(x);
    }
    throw std::logic_error("unknown activation");
}

double activation_deriv(Activation kind, double x) {
    switch (kind) {
        case Activation::Identity: return 1.0;
        case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::LeakyRelu: return x > 0.0 ? 1.0 : kLeakyReluSlope;
        case Activation::Softplus: return sigmoid(x);
        case Activation::Sigmoid: {
            const double s = sigmoid(x);
            return s * (1.0 - s);
        }
    }
    throw std::logic_error("unknown activation");
}

void MLPParams::validate() const {
    if (layers.empty()) throw std::invalid_argument("MLPParams: no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        if (l.bias.size() != l.out_dim()) {
            throw std::invalid_argument("MLPParams: bias width mismatch at layer " +
                                        std::to_string(i));
        }
        if (i > 0 && layers[i - 1].out_dim() != l.in_dim()) {
            throw std::invalid_argument("MLPParams: layer dimensions do not chain at layer " +
                                        std::to_string(i));
        }
    }
}

MLPParams init_mlp(const std::vector<std::size_t>& widths,
                   const std::vector<Activation>& activations, Rng& rng) {
    if (widths.size() < 2 || activations.size() != widths.size() - 1) {
        throw std::invalid_argument("init_mlp: need widths.size()-1 activations");
    }
    MLPParams params;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        Layer l;
        l.weight = Matrix(widths[i + 1], widths[i]);
        l.bias.assign(widths[i + 1], 0.0);
        l.activation = activations[i];
        const double bound = std::sqrt(6.0 / static_cast<double>(widths[i] + widths[i + 1]));
        for (double& w : l.weight.data) w = rng.uniform(-bound, bound);
        params.layers.push_back(std::move(l));
    }
    return params;
}

Matrix mlp_forward(const MLPParams& params, const Matrix& batch, ForwardCache* cache) {
    params.validate();
    if (batch.cols != params.input_dim()) {
        throw std::invalid_argument("mlp_forward: batch width " + std::to_string(batch.cols) +
                                    " != input width " + std::to_string(params.input_dim()));
    }
    if (cache) {
        cache->input = batch;
        cache->pre.clear();
        cache->post.clear();
    }
    Matrix cur = batch;
    for (const Layer& l : params.layers) {
        Matrix pre(cur.rows, l.out_dim());
        for (std::size_t r = 0; r < cur.rows; ++r) {
            for (std::size_t o = 0; o < l.out_dim(); ++o) {
                double acc = l.bias[o];
                for (std::size_t i = 0; i < l.in_dim(); ++i) {
                    acc += l.weight(o, i) * cur(r, i);
                }
                pre(r, o) = acc;
            }
        }
        Matrix post(pre.rows, pre.cols);
        for (std::size_t i = 0; i < pre.size(); ++i) {
            post.data[i] = activation_eval(l.activation, pre.data[i]);
        }
        if (cache) {
            cache->pre.push_back(pre);
            cache->post.push_back(post);
        }
        cur = std::move(post);
    }
    return cur;
}

MLPGrads zero_grads(const MLPParams& params) {
    MLPGrads g;
    for (const Layer& l : params.layers) {
        g.weight.emplace_back(l.weight.rows, l.weight.cols);
        g.bias.emplace_back(l.bias.size(), 0.0);
    }
    return g;
}

void accumulate(MLPGrads& into, const MLPGrads& from, double scale) {
    for (std::size_t l = 0; l < into.weight.size(); ++l) {
        for (std::size_t i = 0; i < into.weight[l].size(); ++i) {
            into.weight[l].data[i] += scale * from.weight[l].data[i];
        }
        for (std::size_t i = 0; i < into.bias[l].size(); ++i) {
            into.bias[l][i] += scale * from.bias[l][i];
        }
    }
}

Matrix mlp_backward(const MLPParams& params, const ForwardCache& cache,
                    const Matrix& output_grad, MLPGrads& grads) {
    const std::size_t depth = params.layers.size();
    if (cache.pre.size() != depth || cache.post.size() != depth) {
        throw std::invalid_argument("mlp_backward: cache does not match network depth");
    }
    if (!output_grad.same_shape(cache.post.back())) {
        throw std::invalid_argument("mlp_backward: output gradient shape mismatch");
    }
    if (grads.weight.size() != depth) grads = zero_grads(params);

    Matrix delta = output_grad;
    for (std::size_t li = depth; li-- > 0;) {
        const Layer& l = params.layers[li];
        const Matrix& pre = cache.pre[li];
        const Matrix& below = (li == 0) ? cache.input : cache.post[li - 1];
        if (below.cols != l.in_dim() || below.rows != delta.rows) {
            throw std::invalid_argument("mlp_backward: stale cache at layer " + std::to_string(li));
        }
        // d(post)/d(pre)
        for (std::size_t i = 0; i < delta.size(); ++i) {
            delta.data[i] *= activation_deriv(l.activation, pre.data[i]);
        }
        for (std::size_t r = 0; r < delta.rows; ++r) {
            for (std::size_t o = 0; o < l.out_dim(); ++o) {
                const double d = delta(r, o);
                grads.bias[li][o] += d;
                for (std::size_t i = 0; i < l.in_dim(); ++i) {
                    grads.weight[li](o, i) += d * below(r, i);
                }
            }
        }
        Matrix next(delta.rows, l.in_dim());
        for (std::size_t r = 0; r < delta.rows; ++r) {
            for (std::size_t i = 0; i < l.in_dim(); ++i) {
                double acc = 0.0;
                for (std::size_t o = 0; o < l.out_dim(); ++o) {
                    acc += l.weight(o, i) * delta(r, o);
                }
                next(r, i) = acc;
            }
        }
        delta = std::move(next);
    }
    return delta;
}

CrossEntropyResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
    if (labels.size() != logits.rows) {
        throw std::invalid_argument("softmax_cross_entropy: label count mismatch");
    }
    const std::size_t batch = logits.rows;
    const std::size_t classes = logits.cols;
    CrossEntropyResult out;
    out.logit_grad = Matrix(batch, classes);
    double total = 0.0;
    for (std::size_t r = 0; r < batch; ++r) {
        const int y = labels[r];
        if (y < 0 || static_cast<std::size_t>(y) >= classes) {
            throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(y) +
                                        " out of range at row " + std::to_string(r));
        }
        double mx = logits(r, 0);
        for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, logits(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < classes; ++c) sum += std::exp(logits(r, c) - mx);
        const double log_sum = mx + std::log(sum);
        total += log_sum - logits(r, static_cast<std::size_t>(y));
        for (std::size_t c = 0; c < classes; ++c) {
            const double p = std::exp(logits(r, c) - log_sum);
            out.logit_grad(r, c) =
                (p - (c == static_cast<std::size_t>(y) ? 1.0 : 0.0)) / static_cast<double>(batch);
        }
    }
    out.loss = total / static_cast<double>(batch);
    return out;
}

AdamState init_adam(const MLPParams& params, double beta1, double beta2, double eps) {
    AdamState s;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    for (const Layer& l : params.layers) {
        s.m_weight.emplace_back(l.weight.rows, l.weight.cols);
        s.v_weight.emplace_back(l.weight.rows, l.weight.cols);
        s.m_bias.emplace_back(l.bias.size(), 0.0);
        s.v_bias.emplace_back(l.bias.size(), 0.0);
    }
    return s;
}

void adam_step(AdamState& state, MLPParams& params, const MLPGrads& grads, double lr) {
    if (lr < 0.0) throw std::invalid_argument("adam_step: negative learning rate");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto update = [&](double& w, double& m, double& v, double g) {
            m = state.beta1 * m + (1.0 - state.beta1) * g;
            v = state.beta2 * v + (1.0 - state.beta2) * g * g;
            w -= lr * (m / bc1) / (std::sqrt(v / bc2) + state.eps);
        };
        Layer& layer = params.layers[l];
        for (std::size_t i = 0; i < layer.weight.size(); ++i) {
            update(layer.weight.data[i], state.m_weight[l].data[i], state.v_weight[l].data[i],
                   grads.weight[l].data[i]);
        }
        for (std::size_t i = 0; i < layer.bias.size(); ++i) {
            update(layer.bias[i], state.m_bias[l][i], state.v_bias[l][i], grads.bias[l][i]);
        }
    }
}

MomentumState init_momentum(const MLPParams& params, double momentum) {
    MomentumState s;
    s.momentum = momentum;
    for (const Layer& l : params.layers) {
        s.v_weight.emplace_back(l.weight.rows, l.weight.cols);
        s.v_bias.emplace_back(l.bias.size(), 0.0);
    }
    return s;
}

void momentum_step(MomentumState& state, MLPParams& params, const MLPGrads& grads, double lr) {
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        Layer& layer = params.layers[l];
        for (std::size_t i = 0; i < layer.weight.size(); ++i) {
            double& v = state.v_weight[l].data[i];
            v = state.momentum * v + grads.weight[l].data[i];
            layer.weight.data[i] -= lr * v;
        }
        for (std::size_t i = 0; i < layer.bias.size(); ++i) {
            double& v = state.v_bias[l][i];
            v = state.momentum * v + grads.bias[l][i];
            layer.bias[i] -= lr * v;
        }
    }
}

double cosine_lr(std::size_t epoch, std::size_t total_epochs, double base_lr) {
    if (epoch > total_epochs) {
        throw std::invalid_argument("cosine_lr: epoch " + std::to_string(epoch) +
                                    " past total " + std::to_string(total_epochs));
    }
    const double frac = static_cast<double>(epoch) / static_cast<double>(total_epochs);
    return base_lr * (1.0 + std::cos(3.141592653589793238462643383279 * frac)) / 2.0;
}

}  // namespace rib::nn
