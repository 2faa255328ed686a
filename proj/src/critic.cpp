#include "rib/critic.hpp"

#include <cmath>
#include <stdexcept>

namespace rib::critic {

const char* to_string(BregmanKind kind) {
    switch (kind) {
        case BregmanKind::BKL: return "bkl";
        case BregmanKind::SQ: return "sq";
        case BregmanKind::UKL: return "ukl";
    }
    return "?";
}

BregmanKind bregman_from_string(const std::string& name) {
    if (name == "bkl") return BregmanKind::BKL;
    if (name == "sq") return BregmanKind::SQ;
    if (name == "ukl") return BregmanKind::UKL;
    throw std::invalid_argument("unknown bregman kind: " + name);
}

nn::MLPParams init_critic(std::size_t repr_dim, const std::vector<std::size_t>& hidden,
                          Rng& rng) {
    std::vector<std::size_t> widths;
    widths.push_back(2 * repr_dim);
    for (std::size_t h : hidden) widths.push_back(h);
    widths.push_back(1);
    std::vector<nn::Activation> acts(hidden.size(), nn::Activation::LeakyRelu);
    acts.push_back(nn::Activation::Identity);
    return nn::init_mlp(widths, acts, rng);
}

PairBatch arrange_pairs(const Matrix& t_train, const Matrix& t_ghost,
                        const data::SelectorMask& u) {
    if (!t_train.same_shape(t_ghost) || u.size() != t_train.rows) {
        throw std::invalid_argument("arrange_pairs: batch/selector size mismatch");
    }
    const std::size_t batch = t_train.rows;
    const std::size_t dim = t_train.cols;
    PairBatch out;
    out.joint = Matrix(batch, 2 * dim);
    out.marginal = Matrix(batch, 2 * dim);
    for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t c = 0; c < dim; ++c) {
            out.joint(i, c) = t_train(i, c);
            out.joint(i, dim + c) = t_ghost(i, c);
            if (u.bits[i]) {
                out.marginal(i, c) = t_ghost(i, c);
                out.marginal(i, dim + c) = t_train(i, c);
            } else {
                out.marginal(i, c) = t_train(i, c);
                out.marginal(i, dim + c) = t_ghost(i, c);
            }
        }
    }
    return out;
}

std::vector<double> critic_score(const nn::MLPParams& params, const Matrix& pairs) {
    if (params.output_dim() != 1) {
        throw std::invalid_argument("critic_score: critic must have scalar output");
    }
    const Matrix out = nn::mlp_forward(params, pairs);
    return out.data;
}

JsdLoss jsd_critic_loss(const std::vector<double>& joint_scores,
                        const std::vector<double>& marginal_scores) {
    if (joint_scores.empty() || marginal_scores.empty()) {
        throw std::invalid_argument("jsd_critic_loss: empty score vector");
    }
    JsdLoss out;
    const double nj = static_cast<double>(joint_scores.size());
    const double nm = static_cast<double>(marginal_scores.size());
    out.joint_grad.resize(joint_scores.size());
    out.marginal_grad.resize(marginal_scores.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < joint_scores.size(); ++i) {
        acc += nn::softplus(-joint_scores[i]) / nj;
        out.joint_grad[i] = -nn::sigmoid(-joint_scores[i]) / nj;
    }
    for (std::size_t i = 0; i < marginal_scores.size(); ++i) {
        acc += nn::softplus(marginal_scores[i]) / nm;
        out.marginal_grad[i] = nn::sigmoid(marginal_scores[i]) / nm;
    }
    out.loss = acc;
    return out;
}

double density_ratio(double score) { return std::exp(score); }

BregmanValue bregman_surrogate(double ratio, BregmanKind kind) {
    if (!(ratio > 0.0)) {
        throw std::domain_error("bregman_surrogate: ratio must be positive");
    }
    BregmanValue out;
    switch (kind) {
        case BregmanKind::BKL:
            out.value = (1.0 + ratio) * std::log((1.0 + ratio) / 2.0) - std::log(ratio);
            out.dvalue_dR = std::log((1.0 + ratio) / 2.0) + 1.0 - 1.0 / ratio;
            break;
        case BregmanKind::SQ:
            out.value = 0.5 * (1.0 - ratio) * (1.0 - ratio);
            out.dvalue_dR = ratio - 1.0;
            break;
        case BregmanKind::UKL:
            out.value = ratio - 1.0 - std::log(ratio);
            out.dvalue_dR = 1.0 - 1.0 / ratio;
            break;
    }
    return out;
}

BregmanScoreValue bregman_from_score(double score, BregmanKind kind) {
    constexpr double kLn2 = 0.6931471805599453094172321214582;
    BregmanScoreValue out;
    const double r = std::exp(score);
    switch (kind) {
        case BregmanKind::BKL:
            // (1+R) ln((1+R)/2) - ln R with ln(1+R) = softplus(V)
            out.value = (1.0 + r) * (nn::softplus(score) - kLn2) - score;
            out.dvalue_dV = r * (nn::softplus(score) - kLn2 + 1.0) - 1.0;
            break;
        case BregmanKind::SQ:
            out.value = 0.5 * (1.0 - r) * (1.0 - r);
            out.dvalue_dV = (r - 1.0) * r;
            break;
        case BregmanKind::UKL:
            // R - 1 - ln R = expm1(V) - V
            out.value = std::expm1(score) - score;
            out.dvalue_dV = std::expm1(score);
            break;
    }
    return out;
}

RegularizerGrad regularizer_grad_to_encoder(const nn::MLPParams& critic,
                                            const Matrix& joint_pairs, BregmanKind kind) {
    const std::size_t batch = joint_pairs.rows;
    const std::size_t dim = joint_pairs.cols / 2;
    nn::ForwardCache cache;
    const Matrix scores = nn::mlp_forward(critic, joint_pairs, &cache);

    Matrix score_grad(batch, 1);
    double total = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        const BregmanScoreValue b = bregman_from_score(scores(i, 0), kind);
        total += b.value;
        score_grad(i, 0) = b.dvalue_dV / static_cast<double>(batch);
    }

    nn::MLPGrads scratch = nn::zero_grads(critic);  // discarded: phi is frozen here
    const Matrix pair_grads = nn::mlp_backward(critic, cache, score_grad, scratch);

    RegularizerGrad out;
    out.mean_value = total / static_cast<double>(batch);
    out.train_grad = Matrix(batch, dim);
    out.ghost_grad = Matrix(batch, dim);
    for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t c = 0; c < dim; ++c) {
            out.train_grad(i, c) = pair_grads(i, c);
            out.ghost_grad(i, c) = pair_grads(i, dim + c);
        }
    }
    return out;
}

std::vector<double> decision_scores(const nn::MLPParams& critic, const Matrix& pairs) {
    std::vector<double> scores = critic_score(critic, pairs);
    for (double& v : scores) v = nn::sigmoid(std::exp(v));
    return scores;
}

}  // namespace rib::critic
