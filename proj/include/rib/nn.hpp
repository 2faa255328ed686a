#pragma once

#include <cstdint>
#include <vector>

#include "rib/matrix.hpp"
#include "rib/rng.hpp"

namespace rib::nn {

enum class Activation { Identity, Relu, LeakyRelu, Softplus, Sigmoid };

constexpr double kLeakyReluSlope = 0.01;

// Scalar activation and its derivative at x. Softplus and sigmoid use
// overflow-safe forms.
double activation_eval(Activation kind, double x);
double activation_deriv(Activation kind, double x);

double softplus(double x);  // max(x,0) + log1p(exp(-|x|))
double sigmoid(double x);

struct Layer {
    Matrix weight;               // out x in
    std::vector<double> bias;    // out
    Activation activation = Activation::Identity;

    std::size_t in_dim() const { return weight.cols; }
    std::size_t out_dim() const { return weight.rows; }
};

struct MLPParams {
    std::vector<Layer> layers;

    std::size_t input_dim() const { return layers.front().in_dim(); }
    std::size_t output_dim() const { return layers.back().out_dim(); }

    void validate() const;  // throws if layer dimensions do not chain
};

// Glorot-uniform initialized MLP; `widths` = {in, h1, ..., out}.
MLPParams init_mlp(const std::vector<std::size_t>& widths,
                   const std::vector<Activation>& activations, Rng& rng);

// Forward-pass cache holding everything the backward pass needs.
struct ForwardCache {
    Matrix input;
    std::vector<Matrix> pre;    // pre-activation per layer
    std::vector<Matrix> post;   // post-activation per layer (post.back() = output)
};

Matrix mlp_forward(const MLPParams& params, const Matrix& batch, ForwardCache* cache = nullptr);

// Gradients mirror the parameter layout.
struct MLPGrads {
    std::vector<Matrix> weight;
    std::vector<std::vector<double>> bias;
};

MLPGrads zero_grads(const MLPParams& params);
void accumulate(MLPGrads& into, const MLPGrads& from, double scale = 1.0);

// Reverse-mode pass; returns gradient w.r.t. the input batch so losses on
// downstream networks can flow into upstream parameters.
Matrix mlp_backward(const MLPParams& params, const ForwardCache& cache,
                    const Matrix& output_grad, MLPGrads& grads);

// Mean negative log softmax likelihood plus gradient w.r.t. logits.
struct CrossEntropyResult {
    double loss = 0.0;
    Matrix logit_grad;
};
CrossEntropyResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels);

struct AdamState {
    std::vector<Matrix> m_weight, v_weight;
    std::vector<std::vector<double>> m_bias, v_bias;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState init_adam(const MLPParams& params, double beta1 = 0.9, double beta2 = 0.999,
                    double eps = 1e-8);
void adam_step(AdamState& state, MLPParams& params, const MLPGrads& grads, double lr);

struct MomentumState {
    std::vector<Matrix> v_weight;
    std::vector<std::vector<double>> v_bias;
    double momentum = 0.9;
};

MomentumState init_momentum(const MLPParams& params, double momentum = 0.9);
void momentum_step(MomentumState& state, MLPParams& params, const MLPGrads& grads, double lr);

// base_lr * (1 + cos(pi * epoch / total)) / 2
double cosine_lr(std::size_t epoch, std::size_t total_epochs, double base_lr);

}  // namespace rib::nn
