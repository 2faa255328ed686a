#include "rib/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rib::data {

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path, std::size_t offset) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) {
        throw std::runtime_error(path + ": truncated at byte " + std::to_string(offset));
    }
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                            static_cast<unsigned char>(v >> 16),
                            static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(buf), 4);
}

}  // namespace

LabeledDataset LabeledDataset::rows(const std::vector<std::size_t>& idx) const {
    LabeledDataset out;
    out.num_classes = num_classes;
    out.features = Matrix(idx.size(), dim());
    out.labels.resize(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] >= size()) throw std::out_of_range("LabeledDataset::rows: index out of range");
        for (std::size_t c = 0; c < dim(); ++c) out.features(r, c) = features(idx[r], c);
        out.labels[r] = labels[idx[r]];
    }
    return out;
}

LabeledDataset load_idx(const std::string& image_path, const std::string& label_path) {
    std::ifstream img(image_path, std::ios::binary);
    if (!img) throw std::runtime_error(image_path + ": cannot open");
    const std::uint32_t img_magic = read_be32(img, image_path, 0);
    if (img_magic != 0x00000803u) {
        throw std::runtime_error(image_path + ": bad image magic at byte 0");
    }
    const std::uint32_t count = read_be32(img, image_path, 4);
    const std::uint32_t rows = read_be32(img, image_path, 8);
    const std::uint32_t cols = read_be32(img, image_path, 12);
    const std::size_t pixels = std::size_t(rows) * cols;

    std::ifstream lab(label_path, std::ios::binary);
    if (!lab) throw std::runtime_error(label_path + ": cannot open");
    const std::uint32_t lab_magic = read_be32(lab, label_path, 0);
    if (lab_magic != 0x00000801u) {
        throw std::runtime_error(label_path + ": bad label magic at byte 0");
    }
    const std::uint32_t lab_count = read_be32(lab, label_path, 4);
    if (lab_count != count) {
        throw std::runtime_error(label_path + ": label count " + std::to_string(lab_count) +
                                 " != image count " + std::to_string(count));
    }

    LabeledDataset ds;
    ds.features = Matrix(count, pixels);
    ds.labels.resize(count);
    std::vector<unsigned char> row(pixels);
    for (std::uint32_t i = 0; i < count; ++i) {
        img.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(pixels));
        if (!img) {
            throw std::runtime_error(image_path + ": truncated at byte " +
                                     std::to_string(16 + std::size_t(i) * pixels));
        }
        for (std::size_t p = 0; p < pixels; ++p) {
            ds.features(i, p) = static_cast<double>(row[p]) / 255.0;
        }
        char lb;
        lab.read(&lb, 1);
        if (!lab) {
            throw std::runtime_error(label_path + ": truncated at byte " + std::to_string(8 + i));
        }
        ds.labels[i] = static_cast<unsigned char>(lb);
    }
    int max_label = 0;
    for (int l : ds.labels) max_label = std::max(max_label, l);
    ds.num_classes = max_label + 1;
    return ds;
}

void save_idx(const LabeledDataset& ds, const std::string& image_path,
              const std::string& label_path) {
    std::ofstream img(image_path, std::ios::binary);
    if (!img) throw std::runtime_error(image_path + ": cannot open for write");
    write_be32(img, 0x00000803u);
    write_be32(img, static_cast<std::uint32_t>(ds.size()));
    write_be32(img, 1);
    write_be32(img, static_cast<std::uint32_t>(ds.dim()));
    for (double v : ds.features.data) {
        const auto byte = static_cast<unsigned char>(std::lround(v * 255.0));
        img.write(reinterpret_cast<const char*>(&byte), 1);
    }
    std::ofstream lab(label_path, std::ios::binary);
    if (!lab) throw std::runtime_error(label_path + ": cannot open for write");
    write_be32(lab, 0x00000801u);
    write_be32(lab, static_cast<std::uint32_t>(ds.size()));
    for (int l : ds.labels) {
        const auto byte = static_cast<unsigned char>(l);
        lab.write(reinterpret_cast<const char*>(&byte), 1);
    }
}

LabeledDataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    std::size_t dim = 0;
    {
        std::stringstream hdr(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(hdr, field, ',')) fields.push_back(field);
        if (fields.empty() || fields.back() != "label") {
            throw std::runtime_error(path + ": header must end with 'label'");
        }
        dim = fields.size() - 1;
    }
    std::vector<double> values;
    std::vector<int> labels;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<double> row;
        while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
        if (row.size() != dim + 1) {
            throw std::runtime_error(path + ": line " + std::to_string(lineno) + " has " +
                                     std::to_string(row.size()) + " fields, expected " +
                                     std::to_string(dim + 1));
        }
        for (std::size_t i = 0; i < dim; ++i) values.push_back(row[i]);
        labels.push_back(static_cast<int>(row[dim]));
    }
    LabeledDataset ds;
    ds.features = Matrix(labels.size(), dim);
    ds.features.data = std::move(values);
    ds.labels = std::move(labels);
    int max_label = 0;
    for (int l : ds.labels) max_label = std::max(max_label, l);
    ds.num_classes = max_label + 1;
    return ds;
}

void save_csv(const LabeledDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for write");
    for (std::size_t c = 0; c < ds.dim(); ++c) out << "f" << c << ",";
    out << "label\n";
    char buf[32];
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (std::size_t c = 0; c < ds.dim(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", ds.features(r, c));
            out << buf << ",";
        }
        out << ds.labels[r] << "\n";
    }
}

LabeledDataset gaussian_mixture(const MixtureSpec& spec, std::uint64_t seed) {
    if (spec.num_classes < 1 || spec.means.size() != static_cast<std::size_t>(spec.num_classes)) {
        throw std::invalid_argument("gaussian_mixture: need one mean per class");
    }
    if (spec.n < static_cast<std::size_t>(spec.num_classes)) {
        throw std::invalid_argument("gaussian_mixture: n smaller than class count");
    }
    for (const auto& m : spec.means) {
        if (m.size() != spec.dim) {
            throw std::invalid_argument("gaussian_mixture: mean dimension mismatch");
        }
    }
    Rng rng = Rng(seed).stream("gaussian-mixture");
    LabeledDataset ds;
    ds.num_classes = spec.num_classes;
    ds.features = Matrix(spec.n, spec.dim);
    ds.labels.resize(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const int cls = static_cast<int>(i % static_cast<std::size_t>(spec.num_classes));
        ds.labels[i] = cls;
        for (std::size_t d = 0; d < spec.dim; ++d) {
            ds.features(i, d) =
                spec.means[static_cast<std::size_t>(cls)][d] +
                spec.covariance_scale * rng.next_normal();
        }
    }
    // label noise after feature generation so noisy labels carry no signal
    Rng noise = Rng(seed).stream("label-noise");
    for (std::size_t i = 0; i < spec.n; ++i) {
        if (noise.next_double() < spec.label_noise_rate) {
            ds.labels[i] = static_cast<int>(
                noise.next_below(static_cast<std::uint64_t>(spec.num_classes)));
        }
    }
    return ds;
}

std::vector<std::size_t> subsample_indices(std::size_t pool, std::size_t n, std::uint64_t seed) {
    if (n > pool) {
        throw std::invalid_argument("subsample: n " + std::to_string(n) + " exceeds pool " +
                                    std::to_string(pool));
    }
    std::vector<std::size_t> perm = Rng(seed).stream("subsample").permutation(pool);
    perm.resize(n);
    return perm;
}

LabeledDataset subsample(const LabeledDataset& ds, std::size_t n, std::uint64_t seed) {
    return ds.rows(subsample_indices(ds.size(), n, seed));
}

Supersample make_supersample(const LabeledDataset& pool, std::size_t n, std::uint64_t seed) {
    if (pool.size() < 2 * n) {
        throw std::invalid_argument("make_supersample: pool of " + std::to_string(pool.size()) +
                                    " rows cannot yield 2n = " + std::to_string(2 * n));
    }
    std::vector<std::size_t> perm = Rng(seed).stream("supersample").permutation(pool.size());
    std::vector<std::size_t> left_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n));
    std::vector<std::size_t> right_idx(perm.begin() + static_cast<std::ptrdiff_t>(n),
                                       perm.begin() + static_cast<std::ptrdiff_t>(2 * n));
    return Supersample{pool.rows(left_idx), pool.rows(right_idx)};
}

SelectorMask draw_selector(std::size_t n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("draw_selector: n must be positive");
    Rng rng = Rng(seed).stream("selector");
    SelectorMask mask;
    mask.seed = seed;
    mask.bits.resize(n);
    for (std::size_t i = 0; i < n; ++i) mask.bits[i] = rng.fair_bit() ? 1 : 0;
    return mask;
}

std::pair<LabeledDataset, LabeledDataset> select_train(const Supersample& ss,
                                                       const SelectorMask& u) {
    if (u.size() != ss.size()) {
        throw std::invalid_argument("select_train: selector length " + std::to_string(u.size()) +
                                    " != supersample size " + std::to_string(ss.size()));
    }
    const std::size_t n = ss.size();
    LabeledDataset train, heldout;
    train.num_classes = heldout.num_classes = ss.left.num_classes;
    train.features = Matrix(n, ss.left.dim());
    heldout.features = Matrix(n, ss.left.dim());
    train.labels.resize(n);
    heldout.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const LabeledDataset& pick = u.bits[i] ? ss.right : ss.left;
        const LabeledDataset& other = u.bits[i] ? ss.left : ss.right;
        for (std::size_t c = 0; c < pick.dim(); ++c) {
            train.features(i, c) = pick.features(i, c);
            heldout.features(i, c) = other.features(i, c);
        }
        train.labels[i] = pick.labels[i];
        heldout.labels[i] = other.labels[i];
    }
    return {std::move(train), std::move(heldout)};
}

GhostSet ghost_from(const LabeledDataset& ds) { return GhostSet{ds.features}; }

Standardizer fit_standardizer(const Matrix& features) {
    Standardizer s;
    const std::size_t n = features.rows;
    const std::size_t d = features.cols;
    s.mean.assign(d, 0.0);
    s.inv_std.assign(d, 1.0);
    if (n == 0) return s;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) s.mean[c] += features(r, c);
    }
    for (double& m : s.mean) m /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            const double diff = features(r, c) - s.mean[c];
            var[c] += diff * diff;
        }
    }
    for (std::size_t c = 0; c < d; ++c) {
        const double sd = std::sqrt(var[c] / static_cast<double>(n));
        s.inv_std[c] = sd > 1e-12 ? 1.0 / sd : 1.0;
    }
    return s;
}

Matrix apply_standardizer(const Standardizer& s, const Matrix& features) {
    if (features.cols != s.mean.size()) {
        throw std::invalid_argument("apply_standardizer: dimension mismatch");
    }
    Matrix out(features.rows, features.cols);
    for (std::size_t r = 0; r < features.rows; ++r) {
        for (std::size_t c = 0; c < features.cols; ++c) {
            out(r, c) = (features(r, c) - s.mean[c]) * s.inv_std[c];
        }
    }
    return out;
}

}  // namespace rib::data
