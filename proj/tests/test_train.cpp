#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rib/data.hpp"
#include "rib/eval.hpp"
#include "rib/train.hpp"

using namespace rib;

namespace {

data::LabeledDataset mixture(std::size_t n, std::uint64_t seed, double noise = 0.0) {
    data::MixtureSpec spec;
    spec.dim = 5;
    spec.num_classes = 2;
    spec.means = {{-1.5, 0, 0, 0, 0}, {1.5, 0, 0, 0, 0}};
    spec.n = n;
    spec.label_noise_rate = noise;
    return data::gaussian_mixture(spec, seed);
}

train::TrainConfig small_config() {
    train::TrainConfig cfg;
    cfg.encoder.hidden = {16};
    cfg.encoder.repr_dim = 4;
    cfg.critic_hidden = {16, 16};
    cfg.epochs = 8;
    cfg.batch_size = 32;
    cfg.base_lr = 2e-3;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("ce training learns a separable task") {
    const data::LabeledDataset train_set = mixture(400, 1);
    const data::LabeledDataset test_set = mixture(400, 2);
    train::TrainConfig cfg = small_config();
    cfg.objective = train::Objective::CE;
    cfg.epochs = 20;
    const train::TrainResult r = train::train_ce(cfg, train_set, &test_set);
    CHECK(r.record.final_train_err < 0.12);
    CHECK(r.record.final_test_err < 0.12);
    CHECK(r.record.epochs.size() == cfg.epochs);
    // risk decreases substantially from the first epoch
    CHECK(r.record.epochs.back().emp_risk < r.record.epochs.front().emp_risk);
    CHECK_FALSE(r.has_critic());
}

TEST_CASE("training is deterministic per seed and sensitive to it") {
    const data::LabeledDataset train_set = mixture(200, 3);
    train::TrainConfig cfg = small_config();
    cfg.objective = train::Objective::CE;
    const auto a = train::train_ce(cfg, train_set, nullptr);
    const auto b = train::train_ce(cfg, train_set, nullptr);
    CHECK(a.record.encoder_digest == b.record.encoder_digest);
    CHECK(train::params_digest(a.head) == train::params_digest(b.head));
    cfg.seed = 6;
    const auto c = train::train_ce(cfg, train_set, nullptr);
    CHECK(a.record.encoder_digest != c.record.encoder_digest);
}

TEST_CASE("beta = 0 run with a critic reduces exactly to plain ce") {
    const data::LabeledDataset train_set = mixture(300, 4, 0.1);
    const data::LabeledDataset test_set = mixture(300, 5, 0.1);
    const data::GhostSet ghost = data::ghost_from(mixture(300, 6));

    train::TrainConfig cfg = small_config();
    cfg.objective = train::Objective::RIB;
    cfg.beta = 0.0;
    const train::TrainResult rib = train::train_rib(cfg, train_set, ghost, &test_set);

    cfg.objective = train::Objective::CE;
    const train::TrainResult ce = train::train_ce(cfg, train_set, &test_set);

    CHECK(rib.record.encoder_digest == ce.record.encoder_digest);
    CHECK(train::params_digest(rib.head) == train::params_digest(ce.head));
    REQUIRE(rib.record.epochs.size() == ce.record.epochs.size());
    for (std::size_t e = 0; e < ce.record.epochs.size(); ++e) {
        CHECK(rib.record.epochs[e].emp_risk == ce.record.epochs[e].emp_risk);  // bit-exact
        CHECK(rib.record.epochs[e].train_err == ce.record.epochs[e].train_err);
        CHECK(rib.record.epochs[e].test_err == ce.record.epochs[e].test_err);
        CHECK(rib.record.epochs[e].critic_loss == 0.0);
        CHECK(rib.record.epochs[e].mean_bregman == 0.0);
    }
    CHECK(rib.has_critic());  // the critic still exists and was trained
}

TEST_CASE("positive beta changes the encoder and reduces recognizability") {
    data::MixtureSpec spec;
    spec.dim = 10;
    spec.num_classes = 2;
    spec.means = {std::vector<double>(10, -0.6), std::vector<double>(10, 0.6)};
    spec.n = 1200;
    spec.label_noise_rate = 0.2;
    const data::LabeledDataset pool = data::gaussian_mixture(spec, 7);
    const data::LabeledDataset train_set = pool.rows([] {
        std::vector<std::size_t> v(300);
        for (std::size_t i = 0; i < 300; ++i) v[i] = i;
        return v;
    }());
    const data::LabeledDataset ghost_set = pool.rows([] {
        std::vector<std::size_t> v(300);
        for (std::size_t i = 0; i < 300; ++i) v[i] = 300 + i;
        return v;
    }());
    const data::GhostSet ghost = data::ghost_from(ghost_set);

    train::TrainConfig cfg = small_config();
    cfg.objective = train::Objective::RIB;
    cfg.epochs = 30;
    cfg.beta = 0.0;
    const train::TrainResult free = train::train_rib(cfg, train_set, ghost, nullptr);
    cfg.beta = 30.0;
    const train::TrainResult tight = train::train_rib(cfg, train_set, ghost, nullptr);

    CHECK(free.record.encoder_digest != tight.record.encoder_digest);
    REQUIRE(free.record.final_recognizability.has_value());
    REQUIRE(tight.record.final_recognizability.has_value());
    CHECK(*tight.record.final_recognizability < *free.record.final_recognizability + 0.05);
    // the regularized run logs a live (finite, non-negative) penalty while
    // the beta = 0 run logs exactly zero
    CHECK(tight.record.epochs.back().mean_bregman >= 0.0);
    CHECK(std::isfinite(tight.record.epochs.back().mean_bregman));
    CHECK(free.record.epochs.back().mean_bregman == 0.0);
}

TEST_CASE("weight decay shrinks parameter norms") {
    const data::LabeledDataset train_set = mixture(300, 8);
    train::TrainConfig cfg = small_config();
    cfg.objective = train::Objective::CE;
    const train::TrainResult plain = train::train_ce(cfg, train_set, nullptr);
    cfg.objective = train::Objective::CeL2;
    cfg.weight_decay = 0.05;
    const train::TrainResult decayed = train::train_ce(cfg, train_set, nullptr);

    auto norm = [](const nn::MLPParams& p) {
        double acc = 0.0;
        for (const auto& layer : p.layers) {
            for (double w : layer.weight.data) acc += w * w;
        }
        return acc;
    };
    CHECK(norm(decayed.encoder) < norm(plain.encoder));
}

TEST_CASE("adversarial objective runs and differs from the surrogate objective") {
    const data::LabeledDataset train_set = mixture(200, 9, 0.1);
    const data::GhostSet ghost = data::ghost_from(mixture(200, 10));
    train::TrainConfig cfg = small_config();
    cfg.beta = 1.0;
    cfg.objective = train::Objective::RibAdv;
    const train::TrainResult adv = train::train_rib_adv(cfg, train_set, ghost, nullptr);
    cfg.objective = train::Objective::RIB;
    const train::TrainResult rib = train::train_rib(cfg, train_set, ghost, nullptr);
    CHECK(adv.record.encoder_digest != rib.record.encoder_digest);
    CHECK(std::isfinite(adv.record.final_train_err));
}

TEST_CASE("evaluate and predict agree on the training set") {
    const data::LabeledDataset train_set = mixture(200, 11);
    train::TrainConfig cfg = small_config();
    cfg.objective = train::Objective::CE;
    const train::TrainResult r = train::train_ce(cfg, train_set, nullptr);
    const std::vector<int> preds = train::predict(r, train_set.features);
    REQUIRE(preds.size() == train_set.size());
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) wrong += (preds[i] != train_set.labels[i]);
    CHECK(static_cast<double>(wrong) / static_cast<double>(preds.size()) ==
          doctest::Approx(r.record.final_train_err).epsilon(1e-12));
}

TEST_CASE("recognizability measurement is deterministic and bounded") {
    const data::LabeledDataset train_set = mixture(150, 12, 0.1);
    const data::GhostSet ghost = data::ghost_from(mixture(150, 13));
    train::TrainConfig cfg = small_config();
    cfg.objective = train::Objective::RIB;
    cfg.beta = 1.0;
    const train::TrainResult r = train::train_rib(cfg, train_set, ghost, nullptr);
    const double a = train::measure_recognizability(r.encoder, r.critic, r.standardizer,
                                                    train_set.features, ghost.features, 500, 21);
    const double b = train::measure_recognizability(r.encoder, r.critic, r.standardizer,
                                                    train_set.features, ghost.features, 500, 21);
    CHECK(a == b);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    const auto [pos, neg] = train::recognizability_scores(
        r.encoder, r.critic, r.standardizer, train_set.features, ghost.features, 500, 21);
    CHECK(eval::recognizability(pos, neg) == a);
}

TEST_CASE("dynamics are recorded on the requested cadence") {
    const data::LabeledDataset train_set = mixture(150, 14);
    const data::GhostSet ghost = data::ghost_from(mixture(150, 15));
    train::TrainConfig cfg = small_config();
    cfg.objective = train::Objective::RIB;
    cfg.beta = 0.5;
    cfg.epochs = 10;
    cfg.eval_recognizability_every = 5;
    const train::TrainResult r = train::train_rib(cfg, train_set, ghost, nullptr);
    REQUIRE(r.record.recognizability_dynamics.size() == 2);
    CHECK(r.record.recognizability_dynamics[0].first == 5);
    CHECK(r.record.recognizability_dynamics[1].first == 10);
}

TEST_CASE("config validation rejects bad settings and digests are sensitive") {
    train::TrainConfig cfg = small_config();
    const std::uint64_t base = cfg.digest();
    cfg.beta = 2.0;
    CHECK(cfg.digest() != base);
    train::TrainConfig bad = small_config();
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = small_config();
    bad.base_lr = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = small_config();
    bad.beta = -0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("divergence raises a typed error") {
    const data::LabeledDataset train_set = mixture(100, 16);
    train::TrainConfig cfg = small_config();
    cfg.objective = train::Objective::CE;
    cfg.base_lr = 1e155;  // guaranteed overflow to non-finite logits
    cfg.epochs = 30;
    CHECK_THROWS_AS(train::train_ce(cfg, train_set, nullptr), train::DivergenceError);
}

TEST_CASE("objective names round-trip") {
    for (auto o : {train::Objective::CE, train::Objective::CeL2, train::Objective::RIB,
                   train::Objective::RibAdv}) {
        CHECK(train::objective_from_string(train::to_string(o)) == o);
    }
    CHECK_THROWS_AS(train::objective_from_string("sgd"), std::invalid_argument);
}
