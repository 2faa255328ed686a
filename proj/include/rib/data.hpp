#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rib/matrix.hpp"
#include "rib/rng.hpp"

namespace rib::data {

struct LabeledDataset {
    Matrix features;           // n x d
    std::vector<int> labels;   // length n
    int num_classes = 0;

    std::size_t size() const { return features.rows; }
    std::size_t dim() const { return features.cols; }
    LabeledDataset rows(const std::vector<std::size_t>& idx) const;
};

// n pairs of instances; one element of each pair becomes training data.
struct Supersample {
    LabeledDataset left;
    LabeledDataset right;

    std::size_t size() const { return left.size(); }
};

struct SelectorMask {
    std::vector<std::uint8_t> bits;  // 0 or 1
    std::uint64_t seed = 0;

    std::size_t size() const { return bits.size(); }
};

// Held-out instances with no usable labels.
struct GhostSet {
    Matrix features;

    std::size_t size() const { return features.rows; }
    std::size_t dim() const { return features.cols; }
};

// IDX binary loader (big-endian; images magic 0x803, labels magic 0x801).
// Pixels scaled to [0,1]. Throws std::runtime_error naming the byte offset
// on malformed input.
LabeledDataset load_idx(const std::string& image_path, const std::string& label_path);
void save_idx(const LabeledDataset& ds, const std::string& image_path,
              const std::string& label_path);

// CSV with header f0..f<d-1>,label.
LabeledDataset load_csv(const std::string& path);
void save_csv(const LabeledDataset& ds, const std::string& path);

struct MixtureSpec {
    std::size_t dim = 2;
    int num_classes = 2;
    std::vector<std::vector<double>> means;  // one per class
    double covariance_scale = 1.0;
    std::size_t n = 100;
    double label_noise_rate = 0.0;
};

// Class-balanced i.i.d. isotropic Gaussian draws; a label_noise_rate
// fraction of labels is resampled uniformly over the classes.
LabeledDataset gaussian_mixture(const MixtureSpec& spec, std::uint64_t seed);

// n rows without replacement. Draws are nested: under the same seed a
// smaller-n draw is a prefix of a larger-n draw.
LabeledDataset subsample(const LabeledDataset& ds, std::size_t n, std::uint64_t seed);
std::vector<std::size_t> subsample_indices(std::size_t pool, std::size_t n, std::uint64_t seed);

Supersample make_supersample(const LabeledDataset& pool, std::size_t n, std::uint64_t seed);

SelectorMask draw_selector(std::size_t n, std::uint64_t seed);

// train row i = left_i if u_i = 0 else right_i; heldout gets the other.
std::pair<LabeledDataset, LabeledDataset> select_train(const Supersample& ss,
                                                       const SelectorMask& u);

GhostSet ghost_from(const LabeledDataset& ds);

// Per-dimension affine transform fitted on training data.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> inv_std;
};

Standardizer fit_standardizer(const Matrix& features);
Matrix apply_standardizer(const Standardizer& s, const Matrix& features);

}  // namespace rib::data
