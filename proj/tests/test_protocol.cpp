#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rib/protocol.hpp"

using namespace rib;

namespace {

data::LabeledDataset mixture_pool(std::size_t n, std::uint64_t seed, double noise = 0.1) {
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
    cfg.objective = train::Objective::CE;
    cfg.encoder.hidden = {16};
    cfg.encoder.repr_dim = 4;
    cfg.critic_hidden = {16, 16};
    cfg.epochs = 6;
    cfg.batch_size = 25;
    cfg.base_lr = 2e-3;
    return cfg;
}

}  // namespace

TEST_CASE("per-index mi of a membership-memorizing predictor is ln 2") {
    // k2 runs; the prediction pair encodes the selector bit exactly:
    // pair = (1, 0) when u = 0 and (0, 1) when u = 1.
    const std::size_t k2 = 8, n = 4;
    std::vector<std::vector<std::pair<int, int>>> run_pairs(k2);
    std::vector<std::vector<std::uint8_t>> run_bits(k2);
    for (std::size_t r = 0; r < k2; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint8_t u = static_cast<std::uint8_t>((r >> (i % 3)) & 1);
            run_bits[r].push_back(u);
            run_pairs[r].push_back(u ? std::make_pair(0, 1) : std::make_pair(1, 0));
        }
    }
    CHECK(protocol::per_index_mi(run_pairs, run_bits, 2) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("per-index mi of a constant predictor is zero") {
    const std::size_t k2 = 8, n = 5;
    std::vector<std::vector<std::pair<int, int>>> run_pairs(
        k2, std::vector<std::pair<int, int>>(n, {1, 1}));
    std::vector<std::vector<std::uint8_t>> run_bits(k2);
    for (std::size_t r = 0; r < k2; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            run_bits[r].push_back(static_cast<std::uint8_t>((r + i) & 1));
        }
    }
    CHECK(protocol::per_index_mi(run_pairs, run_bits, 2) ==
          doctest::Approx(0.0).epsilon(1).scale(1e-12));
}

TEST_CASE("per-index mi against a hand-computed mixed table") {
    // single index, k2 = 4 runs; symbols (pair quantized over 2 classes):
    // runs: (u=0, pair=(0,0)), (u=0, pair=(0,1)), (u=1, pair=(0,1)), (u=1, pair=(0,1))
    std::vector<std::vector<std::pair<int, int>>> run_pairs = {
        {{0, 0}}, {{0, 1}}, {{0, 1}}, {{0, 1}}};
    std::vector<std::vector<std::uint8_t>> run_bits = {{0}, {0}, {1}, {1}};
    // joint counts over 4: (s=0,u=0)=1/4, (s=1,u=0)=1/4, (s=1,u=1)=2/4
    // ps0=1/4, ps1=3/4, pu0=pu1=1/2
    const double want = 0.25 * std::log(0.25 / (0.25 * 0.5)) +
                        0.25 * std::log(0.25 / (0.75 * 0.5)) +
                        0.50 * std::log(0.50 / (0.75 * 0.5));
    CHECK(protocol::per_index_mi(run_pairs, run_bits, 2) ==
          doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("fcmi estimate is deterministic and satisfies its own bound formula") {
    const data::LabeledDataset pool = mixture_pool(600, 31);
    protocol::FcmiProtocol proto;
    proto.k1 = 2;
    proto.k2 = 3;
    proto.n = 60;
    proto.config = small_config();
    proto.seed = 17;
    const protocol::FcmiEstimate a = protocol::estimate_fcmi(proto, pool);
    const protocol::FcmiEstimate b = protocol::estimate_fcmi(proto, pool);
    REQUIRE(a.per_supersample.size() == 2);
    CHECK(a.per_supersample == b.per_supersample);
    double mean = 0.0;
    for (double v : a.per_supersample) {
        CHECK(v >= 0.0);
        CHECK(v <= std::log(2.0) + 1e-12);  // one selector bit per index
        mean += v;
    }
    mean /= static_cast<double>(a.per_supersample.size());
    CHECK(a.mean_mi == doctest::Approx(mean).epsilon(1e-12));
    CHECK(a.bound ==
          doctest::Approx(std::sqrt(2.0 * a.mean_mi / static_cast<double>(proto.n)))
              .epsilon(1e-12));
    CHECK(a.n == 60);
}

TEST_CASE("an untrained (frozen-random) predictor carries little membership information") {
    const data::LabeledDataset pool = mixture_pool(600, 37, 0.0);
    protocol::FcmiProtocol proto;
    proto.k1 = 2;
    proto.k2 = 5;
    proto.n = 50;
    proto.config = small_config();
    proto.config.epochs = 1;
    proto.config.base_lr = 1e-12;  // effectively frozen at the random init
    proto.seed = 97;
    const protocol::FcmiEstimate est = protocol::estimate_fcmi(proto, pool);
    CHECK(est.mean_mi <= 0.1);
}

TEST_CASE("gap report correlates hand-constructed series") {
    std::vector<train::RunRecord> records(4);
    std::vector<std::size_t> sizes = {100, 200, 400, 800};
    const double gaps[] = {0.4, 0.3, 0.2, 0.1};
    const double recogs[] = {0.8, 0.5, 0.4, 0.1};
    for (int i = 0; i < 4; ++i) {
        records[i].final_gap = gaps[i];
        records[i].final_recognizability = recogs[i];
        records[i].fcmi_estimate = 0.02;
    }
    const protocol::GapReport report = protocol::gap_report(records, sizes);
    REQUIRE(report.rows.size() == 4);
    REQUIRE(report.spearman.has_value());
    CHECK(*report.spearman == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < 4; ++i) {
        CHECK(report.rows[i].n == sizes[i]);
        CHECK(report.rows[i].fcmi_bound ==
              doctest::Approx(std::sqrt(2.0 * 0.02 / static_cast<double>(sizes[i])))
                  .epsilon(1e-12));
    }
    CHECK_FALSE(report.ties_flagged);
}

TEST_CASE("gap report flags an all-tied recognizability series") {
    std::vector<train::RunRecord> records(3);
    std::vector<std::size_t> sizes = {100, 200, 400};
    for (int i = 0; i < 3; ++i) {
        records[i].final_gap = 0.1 * (3 - i);
        records[i].final_recognizability = 0.5;
        records[i].fcmi_estimate = 0.01;
    }
    const protocol::GapReport report = protocol::gap_report(records, sizes);
    CHECK_FALSE(report.spearman.has_value());
    CHECK(report.ties_flagged);
}
