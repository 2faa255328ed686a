#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rib/data.hpp"
#include "rib/eval.hpp"
#include "rib/train.hpp"

namespace rib::protocol {

struct FcmiProtocol {
    std::size_t k1 = 5;  // supersample draws
    std::size_t k2 = 5;  // selector/training draws per supersample
    std::size_t n = 0;   // training set size
    train::TrainConfig config;
    std::uint64_t seed = 0;
};

struct FcmiEstimate {
    std::vector<double> per_supersample;  // plug-in MI per supersample (nats)
    double mean_mi = 0.0;                 // averaged over supersamples
    double bound = 0.0;                   // sqrt(2 * mean_mi / n)
    std::size_t k1 = 0, k2 = 0, n = 0;
};

// k1 supersamples from the pool; per supersample, k2 trainings with fresh
// selectors. Predictions are quantized to argmax labels on both supersample
// slots; per index i the plug-in MI between the prediction pair and the
// selector bit is estimated over the k2 runs and averaged.
FcmiEstimate estimate_fcmi(const FcmiProtocol& protocol, const data::LabeledDataset& pool);

// Plug-in MI for an externally supplied predictor, same per-index scheme.
// `predict` maps (supersample index, run index) to the (left, right)
// prediction pair; used by the estimator tests.
double per_index_mi(const std::vector<std::vector<std::pair<int, int>>>& run_pairs,
                    const std::vector<std::vector<std::uint8_t>>& run_bits, int num_classes);

struct GapRow {
    std::size_t n = 0;
    double gap = 0.0;
    double recognizability = 0.0;
    double fcmi_bound = 0.0;
};

struct GapReport {
    std::vector<GapRow> rows;
    std::optional<double> spearman;  // recognizability vs gap
    bool ties_flagged = false;       // absent because a series was all ties
};

GapReport gap_report(const std::vector<train::RunRecord>& records,
                     const std::vector<std::size_t>& sizes);

}  // namespace rib::protocol
