#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rib/critic.hpp"
#include "rib/data.hpp"
#include "rib/nn.hpp"

namespace rib::train {

enum class Objective { CE, CeL2, RIB, RibAdv };

const char* to_string(Objective o);
Objective objective_from_string(const std::string& name);

struct EncoderSpec {
    std::vector<std::size_t> hidden = {64, 64};
    std::size_t repr_dim = 16;
    nn::Activation hidden_activation = nn::Activation::Relu;
    nn::Activation output_activation = nn::Activation::Identity;
};

struct TrainConfig {
    EncoderSpec encoder;
    std::vector<std::size_t> critic_hidden = {256, 256, 256};
    Objective objective = Objective::CE;
    double beta = 0.0;
    critic::BregmanKind bregman_kind = critic::BregmanKind::BKL;
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    double base_lr = 1e-3;
    double weight_decay = 0.0;
    std::size_t critic_steps_per_encoder_step = 1;
    std::uint64_t seed = 0;
    // When false, inputs are consumed as-is (identity standardizer); used
    // when features were already standardized by a selector-independent fit.
    bool standardize = true;
    // 0 disables periodic recognizability evaluation during training.
    std::size_t eval_recognizability_every = 0;
    std::size_t recognizability_pairs = 2000;  // cap on eval pair count

    void validate() const;
    std::uint64_t digest() const;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_err = 0.0;
    double test_err = 0.0;
    double emp_risk = 0.0;
    double critic_loss = 0.0;
    double mean_bregman = 0.0;
};

struct RunRecord {
    std::uint64_t config_digest = 0;
    std::uint64_t seed = 0;
    std::vector<EpochMetrics> epochs;
    std::vector<std::pair<std::size_t, double>> recognizability_dynamics;  // (epoch, value)
    std::uint64_t encoder_digest = 0;
    double final_train_err = 0.0;
    double final_test_err = 0.0;
    double final_gap = 0.0;
    std::optional<double> final_recognizability;
    std::optional<double> fcmi_estimate;  // filled by the f-CMI protocol, if run
    double wall_time_sec = 0.0;
};

struct TrainResult {
    nn::MLPParams encoder;
    nn::MLPParams head;   // linear classifier on the representation
    nn::MLPParams critic;  // empty layers for CE runs
    data::Standardizer standardizer;
    RunRecord record;

    bool has_critic() const { return !critic.layers.empty(); }
};

struct DivergenceError : std::runtime_error {
    explicit DivergenceError(std::size_t epoch)
        : std::runtime_error("training diverged (non-finite loss) at epoch " +
                             std::to_string(epoch)),
          epoch(epoch) {}
    std::size_t epoch;
};

// Algorithm: per step, sample training and ghost mini-batches and selector
// bits; encode both; arrange pairs; one momentum step on the critic
// maximizing the JSD lower bound; one Adam step on the encoder and head
// minimizing CE + beta * Bregman surrogate with the critic frozen.
TrainResult train_rib(const TrainConfig& config, const data::LabeledDataset& train_set,
                      const data::GhostSet& ghost, const data::LabeledDataset* test_set);

// Same pipeline without a critic; weight_decay > 0 realizes the L2 baseline.
TrainResult train_ce(const TrainConfig& config, const data::LabeledDataset& train_set,
                     const data::LabeledDataset* test_set);

// Encoder step minimizes the JSD objective directly (gradient flows through
// both critic expectations), instead of the Bregman surrogate.
TrainResult train_rib_adv(const TrainConfig& config, const data::LabeledDataset& train_set,
                          const data::GhostSet& ghost, const data::LabeledDataset* test_set);

// 0-1 error and mean cross-entropy; no parameter mutation. The dataset is
// expected to be already standardized (see encode()).
std::pair<double, double> evaluate(const nn::MLPParams& encoder, const nn::MLPParams& head,
                                   const data::LabeledDataset& ds);

// Standardize + encode a feature matrix with a trained result.
Matrix encode(const TrainResult& result, const Matrix& features);

// Argmax class predictions for raw (unstandardized) features.
std::vector<int> predict(const TrainResult& result, const Matrix& features);

std::uint64_t params_digest(const nn::MLPParams& params);

// Critic scores on freshly drawn train/ghost pairs: first = conditional
// (canonical) arrangement scores (H1), second = selector-randomized
// arrangement scores (H0).
std::pair<std::vector<double>, std::vector<double>> recognizability_scores(
    const nn::MLPParams& encoder, const nn::MLPParams& critic_net,
    const data::Standardizer& standardizer, const Matrix& train_features,
    const Matrix& ghost_features, std::size_t max_pairs, std::uint64_t seed);

// Recognizability measured by a fresh critic fitted on the frozen encoder
// with a fixed optimization budget, so the estimate has the same power
// regardless of how long (or on how much data) the encoder itself trained.
// By default the critic fits and scores on the same rows (the empirical
// estimate; any test, including an overfit one, lower-bounds the true
// value). With held_out = true the rows are split in half and the critic
// scores only pairs it never fitted on.
struct ProbeConfig {
    std::vector<std::size_t> hidden = {64, 64};
    std::size_t steps = 1500;
    std::size_t batch_size = 128;
    double lr = 1e-3;
    std::size_t eval_pairs = 4000;
    bool held_out = false;
};

double recognizability_probe(const nn::MLPParams& encoder,
                             const data::Standardizer& standardizer,
                             const Matrix& train_features, const Matrix& ghost_features,
                             const ProbeConfig& probe, std::uint64_t seed);

// Recognizability of the representations behind `result` measured with its
// co-trained critic on up to `max_pairs` train/ghost pairs.
double measure_recognizability(const nn::MLPParams& encoder, const nn::MLPParams& critic_net,
                               const data::Standardizer& standardizer, const Matrix& train_features,
                               const Matrix& ghost_features, std::size_t max_pairs,
                               std::uint64_t seed);

}  // namespace rib::train
