#include "rib/protocol.hpp"

#include <cmath>
#include <stdexcept>

namespace rib::protocol {

double per_index_mi(const std::vector<std::vector<std::pair<int, int>>>& run_pairs,
                    const std::vector<std::vector<std::uint8_t>>& run_bits, int num_classes) {
    if (run_pairs.empty() || run_pairs.size() != run_bits.size()) {
        throw std::invalid_argument("per_index_mi: run count mismatch");
    }
    const std::size_t runs = run_pairs.size();
    const std::size_t n = run_pairs.front().size();
    double total = 0.0;
    std::vector<int> symbols(runs);
    std::vector<std::uint8_t> bits(runs);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < runs; ++r) {
            const auto& [left, right] = run_pairs[r][i];
            symbols[r] = left * num_classes + right;
            bits[r] = run_bits[r][i];
        }
        total += eval::plugin_mi(symbols, bits);
    }
    return total / static_cast<double>(n);
}

FcmiEstimate estimate_fcmi(const FcmiProtocol& protocol, const data::LabeledDataset& pool) {
    if (protocol.n == 0 || protocol.k1 == 0 || protocol.k2 == 0) {
        throw std::invalid_argument("estimate_fcmi: k1, k2 and n must be positive");
    }
    if (pool.size() < 2 * protocol.n) {
        throw std::invalid_argument("estimate_fcmi: pool too small for supersamples of size " +
                                    std::to_string(protocol.n));
    }
    FcmiEstimate out;
    out.k1 = protocol.k1;
    out.k2 = protocol.k2;
    out.n = protocol.n;

    const Rng master(protocol.seed);
    for (std::size_t s = 0; s < protocol.k1; ++s) {
        const std::uint64_t ss_seed = master.stream("fcmi-supersample", s).next_u64();
        data::Supersample ss = data::make_supersample(pool, protocol.n, ss_seed);

        // Standardize on the full supersample, which the selector cannot
        // influence; a per-run fit on the selected half would leak
        // membership through preprocessing alone.
        Matrix all(2 * protocol.n, ss.left.dim());
        for (std::size_t i = 0; i < protocol.n; ++i) {
            for (std::size_t c = 0; c < ss.left.dim(); ++c) {
                all(i, c) = ss.left.features(i, c);
                all(protocol.n + i, c) = ss.right.features(i, c);
            }
        }
        const data::Standardizer std_fit = data::fit_standardizer(all);
        ss.left.features = data::apply_standardizer(std_fit, ss.left.features);
        ss.right.features = data::apply_standardizer(std_fit, ss.right.features);

        std::vector<std::vector<std::pair<int, int>>> run_pairs;
        std::vector<std::vector<std::uint8_t>> run_bits;
        for (std::size_t r = 0; r < protocol.k2; ++r) {
            const std::uint64_t run_seed =
                master.stream("fcmi-run", s * protocol.k2 + r).next_u64();
            const data::SelectorMask u = data::draw_selector(protocol.n, run_seed);
            auto [train_set, heldout] = data::select_train(ss, u);

            train::TrainConfig cfg = protocol.config;
            // One training seed per supersample: across the k2 runs only the
            // selector varies, so the plug-in estimate measures selector
            // influence rather than initialization noise (which at small k2
            // would bias the estimate upward by a large constant).
            cfg.seed = master.stream("fcmi-train", s).next_u64();
            cfg.standardize = false;
            train::TrainResult result;
            if (cfg.objective == train::Objective::RIB ||
                cfg.objective == train::Objective::RibAdv) {
                const data::GhostSet ghost = data::ghost_from(heldout);
                result = cfg.objective == train::Objective::RIB
                             ? train::train_rib(cfg, train_set, ghost, nullptr)
                             : train::train_rib_adv(cfg, train_set, ghost, nullptr);
            } else {
                result = train::train_ce(cfg, train_set, nullptr);
            }

            const std::vector<int> left = train::predict(result, ss.left.features);
            const std::vector<int> right = train::predict(result, ss.right.features);
            std::vector<std::pair<int, int>> pairs(protocol.n);
            for (std::size_t i = 0; i < protocol.n; ++i) pairs[i] = {left[i], right[i]};
            run_pairs.push_back(std::move(pairs));
            run_bits.push_back(u.bits);
        }
        out.per_supersample.push_back(per_index_mi(run_pairs, run_bits, pool.num_classes));
    }

    double total = 0.0;
    for (double v : out.per_supersample) total += v;
    out.mean_mi = total / static_cast<double>(protocol.k1);
    out.bound = std::sqrt(2.0 * out.mean_mi / static_cast<double>(protocol.n));
    return out;
}

GapReport gap_report(const std::vector<train::RunRecord>& records,
                     const std::vector<std::size_t>& sizes) {
    if (records.size() != sizes.size()) {
        throw std::invalid_argument("gap_report: records and sizes must align");
    }
    GapReport report;
    std::vector<double> recogs, gaps;
    for (std::size_t i = 0; i < records.size(); ++i) {
        GapRow row;
        row.n = sizes[i];
        row.gap = records[i].final_gap;
        row.recognizability = records[i].final_recognizability.value_or(0.0);
        row.fcmi_bound =
            records[i].fcmi_estimate
                ? std::sqrt(2.0 * *records[i].fcmi_estimate / static_cast<double>(sizes[i]))
                : 0.0;
        report.rows.push_back(row);
        recogs.push_back(row.recognizability);
        gaps.push_back(row.gap);
    }
    report.spearman = eval::spearman(recogs, gaps);
    if (!report.spearman && records.size() >= 2) report.ties_flagged = true;
    return report;
}

}  // namespace rib::protocol
