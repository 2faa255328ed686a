#pragma once

#include <vector>

#include "rib/data.hpp"
#include "rib/matrix.hpp"
#include "rib/nn.hpp"

namespace rib::critic {

// Which convex generator drives the density-ratio matching surrogate.
enum class BregmanKind { BKL, SQ, UKL };

const char* to_string(BregmanKind kind);
BregmanKind bregman_from_string(const std::string& name);

// Scalar-output MLP over concatenated representation pairs. Input width is
// twice the representation width; hidden layers LeakyReLU, final identity.
nn::MLPParams init_critic(std::size_t repr_dim, const std::vector<std::size_t>& hidden,
                          Rng& rng);

// Conditional (training-first) and selector-randomized pair arrangements
// built from the same representation pairs. The canonical ordering samples
// the membership-conditional distribution; randomizing the ordering by an
// independent fair selector samples the marginal.
struct PairBatch {
    Matrix joint;     // B x 2*dim(T), row i = (t_train_i, t_ghost_i)
    Matrix marginal;  // B x 2*dim(T), half-swapped where u_i = 1
};

PairBatch arrange_pairs(const Matrix& t_train, const Matrix& t_ghost,
                        const data::SelectorMask& u);

// V values, one per pair row.
std::vector<double> critic_score(const nn::MLPParams& params, const Matrix& pairs);

// loss = mean(sp(-V_joint)) + mean(sp(V_marginal)); minimizing it maximizes
// the Jensen-Shannon lower bound. Gradients are w.r.t. the score vectors.
struct JsdLoss {
    double loss = 0.0;
    std::vector<double> joint_grad;
    std::vector<double> marginal_grad;
};

JsdLoss jsd_critic_loss(const std::vector<double>& joint_scores,
                        const std::vector<double>& marginal_scores);

double density_ratio(double score);  // exp(V)

// Bregman divergence to the target ratio R* = 1, value and d/dR:
//   BKL: (1+R) ln((1+R)/2) - ln R
//   SQ:  (1-R)^2 / 2
//   UKL: R - 1 - ln R
struct BregmanValue {
    double value = 0.0;
    double dvalue_dR = 0.0;
};

BregmanValue bregman_surrogate(double ratio, BregmanKind kind);

// Same quantity parameterized by the raw critic score V = ln R, evaluated
// in log-space so large |V| cannot overflow. dvalue_dV = dvalue_dR * R.
struct BregmanScoreValue {
    double value = 0.0;
    double dvalue_dV = 0.0;
};

BregmanScoreValue bregman_from_score(double score, BregmanKind kind);

// Mean Bregman surrogate over the canonical pair rows and its gradient
// w.r.t. the pair inputs, with critic parameters held fixed. Gradient
// halves are split back into the training and ghost representations.
struct RegularizerGrad {
    double mean_value = 0.0;
    Matrix train_grad;  // B x dim(T)
    Matrix ghost_grad;  // B x dim(T)
};

RegularizerGrad regularizer_grad_to_encoder(const nn::MLPParams& critic,
                                            const Matrix& joint_pairs, BregmanKind kind);

// sigmoid(exp(V)) per row; strictly increasing in V, so rankings agree.
std::vector<double> decision_scores(const nn::MLPParams& critic, const Matrix& pairs);

}  // namespace rib::critic
