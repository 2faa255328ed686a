#include "rib/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "rib/eval.hpp"

namespace rib::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a_bytes(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void reject_unknown(const json& obj, const std::vector<std::string>& allowed,
                    const std::string& path) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const auto& a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) throw std::invalid_argument("unknown field: " + path + key);
    }
}

nn::Activation activation_from_string(const std::string& name) {
    if (name == "identity") return nn::Activation::Identity;
    if (name == "relu") return nn::Activation::Relu;
    if (name == "leaky_relu") return nn::Activation::LeakyRelu;
    if (name == "softplus") return nn::Activation::Softplus;
    if (name == "sigmoid") return nn::Activation::Sigmoid;
    throw std::invalid_argument("unknown activation: " + name);
}

DatasetSpec parse_dataset(const json& j, const std::string& path) {
    reject_unknown(j,
                   {"type", "dim", "num_classes", "n", "label_noise_rate", "covariance_scale",
                    "mean_separation", "means", "seed", "images", "labels", "path"},
                   path);
    DatasetSpec spec;
    spec.type = j.value("type", std::string("gaussian_mixture"));
    if (spec.type == "gaussian_mixture") {
        spec.mixture.dim = j.value("dim", std::size_t{20});
        spec.mixture.num_classes = j.value("num_classes", 2);
        spec.mixture.n = j.value("n", std::size_t{1000});
        spec.mixture.label_noise_rate = j.value("label_noise_rate", 0.0);
        spec.mixture.covariance_scale = j.value("covariance_scale", 1.0);
        spec.mean_separation = j.value("mean_separation", 3.0);
        spec.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("means")) {
            spec.mean_separation = 0.0;
            for (const auto& m : j.at("means")) {
                spec.mixture.means.push_back(m.get<std::vector<double>>());
            }
        }
    } else if (spec.type == "idx") {
        spec.images = j.value("images", std::string());
        spec.labels = j.value("labels", std::string());
    } else if (spec.type == "csv") {
        spec.path = j.value("path", std::string());
    } else {
        throw std::invalid_argument(path + "type: unknown dataset type '" + spec.type + "'");
    }
    return spec;
}

train::TrainConfig parse_train(const json& j, const std::string& path) {
    reject_unknown(j,
                   {"objective", "beta", "bregman", "epochs", "batch_size", "base_lr",
                    "weight_decay", "critic_steps", "encoder_hidden", "repr_dim",
                    "hidden_activation", "output_activation", "critic_hidden", "eval_every",
                    "recognizability_pairs", "standardize"},
                   path);
    train::TrainConfig cfg;
    cfg.objective = train::objective_from_string(j.value("objective", std::string("ce")));
    cfg.beta = j.value("beta", 0.0);
    cfg.bregman_kind = critic::bregman_from_string(j.value("bregman", std::string("bkl")));
    cfg.epochs = j.value("epochs", std::size_t{50});
    cfg.batch_size = j.value("batch_size", std::size_t{128});
    cfg.base_lr = j.value("base_lr", 1e-3);
    cfg.weight_decay = j.value("weight_decay", 0.0);
    cfg.critic_steps_per_encoder_step = j.value("critic_steps", std::size_t{1});
    if (j.contains("encoder_hidden")) {
        cfg.encoder.hidden = j.at("encoder_hidden").get<std::vector<std::size_t>>();
    }
    cfg.encoder.repr_dim = j.value("repr_dim", std::size_t{16});
    cfg.encoder.hidden_activation =
        activation_from_string(j.value("hidden_activation", std::string("relu")));
    cfg.encoder.output_activation =
        activation_from_string(j.value("output_activation", std::string("identity")));
    if (j.contains("critic_hidden")) {
        cfg.critic_hidden = j.at("critic_hidden").get<std::vector<std::size_t>>();
    }
    cfg.eval_recognizability_every = j.value("eval_every", std::size_t{0});
    cfg.recognizability_pairs = j.value("recognizability_pairs", std::size_t{2000});
    // per-feature standardization amplifies rarely-active inputs (e.g. border
    // pixels); bounded inputs such as images train better without it
    cfg.standardize = j.value("standardize", true);
    return cfg;
}

// Run up to `jobs` tasks concurrently; tasks write results by index, so
// the merge order is deterministic regardless of scheduling.
void parallel_for(std::size_t count, std::size_t jobs,
                  const std::function<void(std::size_t)>& body) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(std::min(jobs, count));
    for (std::size_t t = 0; t < std::min(jobs, count); ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                    body(i);
                }
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

const char* to_string(Command c) {
    switch (c) {
        case Command::Train: return "train";
        case Command::SweepBeta: return "sweep-beta";
        case Command::EstimateFcmi: return "estimate-fcmi";
        case Command::GapStudy: return "gap-study";
        case Command::VerifyTheory: return "verify-theory";
        case Command::Dynamics: return "dynamics";
    }
    return "?";
}

Command command_from_string(const std::string& name) {
    if (name == "train") return Command::Train;
    if (name == "sweep-beta") return Command::SweepBeta;
    if (name == "estimate-fcmi") return Command::EstimateFcmi;
    if (name == "gap-study") return Command::GapStudy;
    if (name == "verify-theory") return Command::VerifyTheory;
    if (name == "dynamics") return Command::Dynamics;
    throw std::invalid_argument("unknown command: " + name);
}

ExperimentSpec parse_spec(const std::string& json_text) {
    const json j = json::parse(json_text);
    reject_unknown(j,
                   {"command", "output_dir", "seed", "jobs", "dataset", "ghost", "train",
                    "train_size", "ghost_size", "test_size", "beta_grid", "sizes", "seeds",
                    "k1", "k2", "theory_mu_max", "theory_mu_step", "lemma_mus", "lemma_grid",
                    "roc_points"},
                   "");
    ExperimentSpec spec;
    spec.command = command_from_string(j.value("command", std::string("train")));
    spec.output_dir = j.value("output_dir", std::string("out"));
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.jobs = j.value("jobs", std::size_t{1});
    if (j.contains("dataset")) spec.dataset = parse_dataset(j.at("dataset"), "dataset.");
    if (j.contains("ghost")) spec.ghost_dataset = parse_dataset(j.at("ghost"), "ghost.");
    if (j.contains("train")) spec.train = parse_train(j.at("train"), "train.");
    spec.train_size = j.value("train_size", std::size_t{0});
    spec.ghost_size = j.value("ghost_size", std::size_t{0});
    spec.test_size = j.value("test_size", std::size_t{0});
    if (j.contains("beta_grid")) spec.beta_grid = j.at("beta_grid").get<std::vector<double>>();
    if (j.contains("sizes")) spec.sizes = j.at("sizes").get<std::vector<std::size_t>>();
    spec.seeds = j.value("seeds", std::size_t{5});
    spec.k1 = j.value("k1", std::size_t{5});
    spec.k2 = j.value("k2", std::size_t{5});
    spec.theory_mu_max = j.value("theory_mu_max", 10.0);
    spec.theory_mu_step = j.value("theory_mu_step", 0.1);
    if (j.contains("lemma_mus")) spec.lemma_mus = j.at("lemma_mus").get<std::vector<double>>();
    spec.lemma_grid = j.value("lemma_grid", std::size_t{100000});
    spec.roc_points = j.value("roc_points", std::size_t{1000});
    return spec;
}

ExperimentSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open spec");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_spec(buf.str());
}

std::vector<std::string> validate(const ExperimentSpec& spec) {
    std::vector<std::string> diags;
    const bool needs_data = spec.command != Command::VerifyTheory;
    if (needs_data) {
        if (spec.dataset.type == "idx") {
            if (!fs::exists(spec.dataset.images)) {
                diags.push_back("dataset.images: file not found: " + spec.dataset.images);
            }
            if (!fs::exists(spec.dataset.labels)) {
                diags.push_back("dataset.labels: file not found: " + spec.dataset.labels);
            }
        } else if (spec.dataset.type == "csv") {
            if (!fs::exists(spec.dataset.path)) {
                diags.push_back("dataset.path: file not found: " + spec.dataset.path);
            }
        }
    }
    if (spec.train.beta < 0.0) diags.push_back("train.beta: must be >= 0");
    if (spec.train.batch_size < 2) diags.push_back("train.batch_size: must be >= 2");
    if (spec.train.epochs < 1) diags.push_back("train.epochs: must be >= 1");
    if (spec.train.base_lr <= 0.0) diags.push_back("train.base_lr: must be positive");
    for (double b : spec.beta_grid) {
        if (b < 0.0) diags.push_back("beta_grid: entries must be >= 0");
    }
    if (spec.command == Command::EstimateFcmi || spec.command == Command::GapStudy) {
        if (spec.k1 == 0 || spec.k2 == 0) diags.push_back("k1/k2: must be positive");
    }
    if ((spec.command == Command::Train || spec.command == Command::SweepBeta ||
         spec.command == Command::Dynamics || spec.command == Command::EstimateFcmi) &&
        spec.train_size == 0) {
        diags.push_back("train_size: must be positive for this command");
    }
    if (spec.command == Command::GapStudy && spec.sizes.empty()) {
        diags.push_back("sizes: must be non-empty for gap-study");
    }
    return diags;
}

namespace {

data::LabeledDataset materialize(const DatasetSpec& spec) {
    if (spec.type == "idx") return data::load_idx(spec.images, spec.labels);
    if (spec.type == "csv") return data::load_csv(spec.path);
    data::MixtureSpec mix = spec.mixture;
    if (mix.means.empty()) {
        // one random direction per class, scaled to the requested separation
        Rng rng = Rng(spec.seed).stream("class-means");
        for (int c = 0; c < mix.num_classes; ++c) {
            std::vector<double> dir(mix.dim);
            double norm = 0.0;
            for (double& v : dir) {
                v = rng.next_normal();
                norm += v * v;
            }
            norm = std::sqrt(norm);
            for (double& v : dir) v = v / norm * spec.mean_separation / 2.0;
            mix.means.push_back(std::move(dir));
        }
    }
    return data::gaussian_mixture(mix, spec.seed);
}

struct Splits {
    data::LabeledDataset train;
    data::LabeledDataset ghost;
    data::LabeledDataset test;
    std::vector<std::size_t> order;  // pool permutation used
};

// Deterministic pool partition: train = first train_size rows of the seeded
// permutation, ghost next, test after (or everything left).
Splits partition(const data::LabeledDataset& pool, std::size_t train_size, std::size_t ghost_size,
                 std::size_t test_size, std::uint64_t seed) {
    Splits s;
    s.order = Rng(seed).stream("split").permutation(pool.size());
    if (ghost_size == 0) ghost_size = train_size;
    if (train_size + ghost_size > pool.size()) {
        throw std::invalid_argument("partition: pool of " + std::to_string(pool.size()) +
                                    " rows too small for train " + std::to_string(train_size) +
                                    " + ghost " + std::to_string(ghost_size));
    }
    if (test_size == 0) test_size = pool.size() - train_size - ghost_size;
    if (train_size + ghost_size + test_size > pool.size()) {
        throw std::invalid_argument("partition: test_size too large");
    }
    auto seg = [&](std::size_t begin, std::size_t count) {
        std::vector<std::size_t> idx(s.order.begin() + static_cast<std::ptrdiff_t>(begin),
                                     s.order.begin() + static_cast<std::ptrdiff_t>(begin + count));
        return pool.rows(idx);
    };
    s.train = seg(0, train_size);
    s.ghost = seg(train_size, ghost_size);
    s.test = seg(train_size + ghost_size, test_size);
    return s;
}

class BundleWriter {
  public:
    BundleWriter(const ExperimentSpec& spec, std::string dir) : spec_(spec), dir_(std::move(dir)) {
        fs::create_directories(dir_);
    }

    void write(const std::string& name, const std::string& content) {
        const fs::path p = fs::path(dir_) / name;
        std::ofstream out(p, std::ios::binary);
        if (!out) throw std::runtime_error(p.string() + ": cannot write");
        out << content;
        out.close();
        digests_[name] = hex64(fnv1a_bytes(content));
    }

    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    ReportBundle finish(bool complete, bool checks_passed, const std::string& spec_text) {
        json manifest;
        manifest["schema_version"] = 1;
        manifest["command"] = to_string(spec_.command);
        manifest["spec_digest"] = hex64(fnv1a_bytes(spec_text));
        manifest["created"] = std::chrono::duration_cast<std::chrono::seconds>(
                                  std::chrono::system_clock::now().time_since_epoch())
                                  .count();
        manifest["complete"] = complete;
        manifest["checks_passed"] = checks_passed;
        json files = json::object();
        for (const auto& [name, digest] : digests_) files[name] = digest;
        manifest["files"] = files;
        manifest["csv_schemas"] = {
            {"metrics", "epoch,lr,train_err,test_err,emp_risk,critic_loss,mean_bregman"},
            {"roc", "fpr,tpr,threshold"},
            {"region", "x,y"},
        };
        const fs::path p = fs::path(dir_) / "manifest.json";
        std::ofstream out(p);
        out << manifest.dump(2) << "\n";

        ReportBundle bundle;
        bundle.directory = dir_;
        bundle.file_digests = digests_;
        bundle.complete = complete;
        bundle.checks_passed = checks_passed;
        return bundle;
    }

  private:
    const ExperimentSpec& spec_;
    std::string dir_;
    std::map<std::string, std::string> digests_;
};

std::string metrics_csv(const train::RunRecord& record) {
    std::string out = "epoch,lr,train_err,test_err,emp_risk,critic_loss,mean_bregman\n";
    for (const auto& m : record.epochs) {
        out += std::to_string(m.epoch) + "," + fmt(m.lr) + "," + fmt(m.train_err) + "," +
               fmt(m.test_err) + "," + fmt(m.emp_risk) + "," + fmt(m.critic_loss) + "," +
               fmt(m.mean_bregman) + "\n";
    }
    return out;
}

json record_json(const train::RunRecord& record) {
    json j;
    j["config_digest"] = hex64(record.config_digest);
    j["seed"] = record.seed;
    j["encoder_digest"] = hex64(record.encoder_digest);
    j["final_train_err"] = record.final_train_err;
    j["final_test_err"] = record.final_test_err;
    j["final_gap"] = record.final_gap;
    if (record.final_recognizability) j["recognizability"] = *record.final_recognizability;
    if (record.fcmi_estimate) j["fcmi_estimate"] = *record.fcmi_estimate;
    j["wall_time_sec"] = record.wall_time_sec;
    if (!record.recognizability_dynamics.empty()) {
        json dyn = json::array();
        for (const auto& [epoch, value] : record.recognizability_dynamics) {
            dyn.push_back({{"epoch", epoch}, {"recognizability", value}});
        }
        j["recognizability_dynamics"] = dyn;
    }
    return j;
}

std::string roc_csv(const eval::RocCurve& curve) {
    std::string out = "fpr,tpr,threshold\n";
    for (std::size_t i = 0; i < curve.size(); ++i) {
        out += fmt(curve.fpr[i]) + "," + fmt(curve.tpr[i]) + "," + fmt(curve.thresholds[i]) + "\n";
    }
    return out;
}

std::string region_csv(const eval::Polygon& poly) {
    std::string out = "x,y\n";
    for (std::size_t i = 0; i < poly.x.size(); ++i) {
        out += fmt(poly.x[i]) + "," + fmt(poly.y[i]) + "\n";
    }
    return out;
}

train::TrainResult dispatch_train(const train::TrainConfig& cfg,
                                  const data::LabeledDataset& train_set,
                                  const data::GhostSet& ghost,
                                  const data::LabeledDataset* test_set) {
    switch (cfg.objective) {
        case train::Objective::RIB: return train::train_rib(cfg, train_set, ghost, test_set);
        case train::Objective::RibAdv:
            return train::train_rib_adv(cfg, train_set, ghost, test_set);
        default: return train::train_ce(cfg, train_set, test_set);
    }
}

void emit_run(BundleWriter& writer, const std::string& tag, const train::TrainResult& result,
              const data::LabeledDataset& train_set, const data::LabeledDataset& ghost_set,
              std::size_t pairs_cap, std::uint64_t seed) {
    writer.write("metrics_" + tag + ".csv", metrics_csv(result.record));
    writer.write_json("run_" + tag + ".json", record_json(result.record));
    if (result.has_critic()) {
        const auto [pos, neg] = train::recognizability_scores(
            result.encoder, result.critic, result.standardizer, train_set.features,
            ghost_set.features, pairs_cap, seed);
        const eval::RocCurve curve = eval::roc_curve(pos, neg);
        writer.write("roc_" + tag + ".csv", roc_csv(curve));
        writer.write("region_" + tag + ".csv", region_csv(eval::achievable_region(curve)));
    }
}

bool run_train(const ExperimentSpec& spec, BundleWriter& writer) {
    const data::LabeledDataset pool = materialize(spec.dataset);
    const Splits splits =
        partition(pool, spec.train_size, spec.ghost_size, spec.test_size, spec.seed);
    data::LabeledDataset ghost_set =
        spec.ghost_dataset ? materialize(*spec.ghost_dataset) : splits.ghost;

    train::TrainConfig cfg = spec.train;
    cfg.seed = spec.seed;
    const train::TrainResult result =
        dispatch_train(cfg, splits.train, data::ghost_from(ghost_set), &splits.test);
    emit_run(writer, "run0", result, splits.train, ghost_set, cfg.recognizability_pairs,
             spec.seed);
    return true;
}

bool run_sweep_beta(const ExperimentSpec& spec, BundleWriter& writer) {
    const data::LabeledDataset pool = materialize(spec.dataset);

    struct Arm {
        double beta;  // < 0 encodes the CE baseline
        std::size_t seed_idx;
    };
    std::vector<Arm> arms;
    for (std::size_t s = 0; s < spec.seeds; ++s) arms.push_back({-1.0, s});
    for (double b : spec.beta_grid) {
        for (std::size_t s = 0; s < spec.seeds; ++s) arms.push_back({b, s});
    }
    std::vector<train::RunRecord> records(arms.size());

    parallel_for(arms.size(), spec.jobs, [&](std::size_t i) {
        const Arm& arm = arms[i];
        const std::uint64_t run_seed =
            Rng(spec.seed).stream("sweep-seed", arm.seed_idx).next_u64();
        const Splits splits =
            partition(pool, spec.train_size, spec.ghost_size, spec.test_size, run_seed);
        train::TrainConfig cfg = spec.train;
        cfg.seed = run_seed;
        if (arm.beta < 0.0) {
            cfg.objective = train::Objective::CE;
            cfg.beta = 0.0;
            records[i] = train::train_ce(cfg, splits.train, &splits.test).record;
        } else {
            cfg.objective = train::Objective::RIB;
            cfg.beta = arm.beta;
            records[i] =
                train::train_rib(cfg, splits.train, data::ghost_from(splits.ghost), &splits.test)
                    .record;
        }
    });

    std::string csv = "objective,beta,seed,train_err,test_err,gap\n";
    for (std::size_t i = 0; i < arms.size(); ++i) {
        const Arm& arm = arms[i];
        csv += std::string(arm.beta < 0.0 ? "ce" : "rib") + "," +
               fmt(arm.beta < 0.0 ? 0.0 : arm.beta) + "," + std::to_string(arm.seed_idx) + "," +
               fmt(records[i].final_train_err) + "," + fmt(records[i].final_test_err) + "," +
               fmt(records[i].final_gap) + "\n";
    }
    writer.write("sweep.csv", csv);

    auto mean_test = [&](double beta) {
        double total = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < arms.size(); ++i) {
            if (arms[i].beta == beta) {
                total += records[i].final_test_err;
                ++count;
            }
        }
        return total / static_cast<double>(count);
    };
    std::string summary = "objective,beta,mean_test_err\n";
    summary += "ce,0," + fmt(mean_test(-1.0)) + "\n";
    for (double b : spec.beta_grid) summary += "rib," + fmt(b) + "," + fmt(mean_test(b)) + "\n";
    writer.write("sweep_summary.csv", summary);
    return true;
}

bool run_estimate_fcmi(const ExperimentSpec& spec, BundleWriter& writer) {
    const data::LabeledDataset pool = materialize(spec.dataset);
    protocol::FcmiProtocol proto;
    proto.k1 = spec.k1;
    proto.k2 = spec.k2;
    proto.n = spec.train_size;
    proto.config = spec.train;
    proto.seed = spec.seed;
    const protocol::FcmiEstimate est = protocol::estimate_fcmi(proto, pool);

    json j;
    j["k1"] = est.k1;
    j["k2"] = est.k2;
    j["n"] = est.n;
    j["per_supersample_mi"] = est.per_supersample;
    j["mean_mi"] = est.mean_mi;
    j["bound"] = est.bound;
    writer.write_json("fcmi.json", j);

    std::string csv = "supersample,mi\n";
    for (std::size_t i = 0; i < est.per_supersample.size(); ++i) {
        csv += std::to_string(i) + "," + fmt(est.per_supersample[i]) + "\n";
    }
    writer.write("fcmi.csv", csv);
    return true;
}

bool run_gap_study(const ExperimentSpec& spec, BundleWriter& writer) {
    const data::LabeledDataset pool = materialize(spec.dataset);
    const std::size_t largest = *std::max_element(spec.sizes.begin(), spec.sizes.end());
    const std::size_t ghost_size = spec.ghost_size ? spec.ghost_size : spec.sizes.front();

    // per-n f-CMI estimates (shared across seeds at that n)
    std::vector<protocol::FcmiEstimate> fcmi(spec.sizes.size());
    parallel_for(spec.sizes.size(), spec.jobs, [&](std::size_t ni) {
        protocol::FcmiProtocol proto;
        proto.k1 = spec.k1;
        proto.k2 = spec.k2;
        proto.n = spec.sizes[ni];
        proto.config = spec.train;
        if (proto.config.beta == 0.0) {
            // at beta = 0 the classifier trajectory is identical to plain
            // cross-entropy (exact reduction), so skip the critic cost here
            proto.config.objective = train::Objective::CE;
        }
        proto.seed = Rng(spec.seed).stream("gap-fcmi", ni).next_u64();
        fcmi[ni] = protocol::estimate_fcmi(proto, pool);
    });

    struct Cell {
        train::RunRecord record;
        std::string tag;
    };
    std::vector<Cell> cells(spec.sizes.size() * spec.seeds);
    std::vector<std::size_t> cell_sizes(cells.size());

    parallel_for(cells.size(), spec.jobs, [&](std::size_t i) {
        const std::size_t ni = i / spec.seeds;
        const std::size_t si = i % spec.seeds;
        const std::size_t n = spec.sizes[ni];
        const std::uint64_t run_seed = Rng(spec.seed).stream("gap-run", si).next_u64();

        // same permutation for all n at one seed: smaller training sets are
        // prefixes of larger ones; ghost/test live beyond the largest n
        const std::vector<std::size_t> order =
            Rng(run_seed).stream("split").permutation(pool.size());
        auto seg = [&](std::size_t begin, std::size_t count) {
            std::vector<std::size_t> idx(
                order.begin() + static_cast<std::ptrdiff_t>(begin),
                order.begin() + static_cast<std::ptrdiff_t>(begin + count));
            return pool.rows(idx);
        };
        const data::LabeledDataset train_set = seg(0, n);
        const data::LabeledDataset ghost_set = seg(largest, ghost_size);
        const data::LabeledDataset test_set =
            seg(largest + ghost_size, pool.size() - largest - ghost_size);

        train::TrainConfig cfg = spec.train;
        cfg.objective = train::Objective::RIB;  // critic co-trains even at beta = 0
        cfg.seed = run_seed;
        train::TrainResult result =
            train::train_rib(cfg, train_set, data::ghost_from(ghost_set), &test_set);
        result.record.fcmi_estimate = fcmi[ni].mean_mi;
        // fixed-budget probe critic: estimator power is identical across n,
        // so the values are comparable between rows of the study
        train::ProbeConfig probe;
        probe.steps = 1000;
        result.record.final_recognizability = train::recognizability_probe(
            result.encoder, result.standardizer, train_set.features, ghost_set.features,
            probe, run_seed);

        cells[i].record = result.record;
        cells[i].tag = "n" + std::to_string(n) + "_s" + std::to_string(si);
        cell_sizes[i] = n;
        emit_run(writer, cells[i].tag, result, train_set, ghost_set, cfg.recognizability_pairs,
                 run_seed);
    });

    std::vector<train::RunRecord> records;
    for (const Cell& c : cells) records.push_back(c.record);
    const protocol::GapReport report = protocol::gap_report(records, cell_sizes);

    std::string csv = "n,seed,train_err,test_err,gap,recognizability,fcmi_mi,fcmi_bound\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& r = cells[i].record;
        csv += std::to_string(cell_sizes[i]) + "," + std::to_string(i % spec.seeds) + "," +
               fmt(r.final_train_err) + "," + fmt(r.final_test_err) + "," + fmt(r.final_gap) +
               "," + fmt(r.final_recognizability.value_or(0.0)) + "," +
               fmt(r.fcmi_estimate.value_or(0.0)) + "," + fmt(report.rows[i].fcmi_bound) + "\n";
    }
    writer.write("gap.csv", csv);

    json j;
    if (report.spearman) {
        j["spearman"] = *report.spearman;
    } else {
        j["spearman"] = nullptr;
        j["ties_flagged"] = report.ties_flagged;
    }
    json rows = json::array();
    for (const auto& row : report.rows) {
        rows.push_back({{"n", row.n},
                        {"gap", row.gap},
                        {"recognizability", row.recognizability},
                        {"fcmi_bound", row.fcmi_bound}});
    }
    j["rows"] = rows;
    writer.write_json("gap_report.json", j);
    return true;
}

bool run_verify_theory(const ExperimentSpec& spec, BundleWriter& writer) {
    bool all_pass = true;
    json j;

    std::vector<double> mu_grid;
    for (double mu = 0.0; mu <= spec.theory_mu_max + 1e-12; mu += spec.theory_mu_step) {
        mu_grid.push_back(mu);
    }
    const std::vector<eval::Theorem1Row> rows = eval::theorem1_gaussian_check(mu_grid);
    bool theorem1_pass = true;
    for (const auto& row : rows) theorem1_pass = theorem1_pass && row.pass;
    all_pass = all_pass && theorem1_pass;
    j["theorem1"] = {{"grid_points", rows.size()}, {"pass", theorem1_pass}};

    json lemma = json::array();
    for (double mu : spec.lemma_mus) {
        const eval::Lemma1Result res = eval::lemma1_numeric(mu, spec.lemma_grid);
        const bool pass = res.abs_err <= 1e-3;
        all_pass = all_pass && pass;
        lemma.push_back({{"mu", mu},
                         {"integral", res.integral},
                         {"analytic", res.analytic},
                         {"abs_err", res.abs_err},
                         {"pass", pass}});
    }
    j["lemma1"] = lemma;

    const eval::RocCurve curve = eval::gaussian_roc(1.0, spec.roc_points);
    const eval::RocConditions cond = eval::roc_conditions_check(curve);
    const bool cond_pass = cond.c1_err <= 1e-9 && cond.c2_ok && cond.c3_ok;
    all_pass = all_pass && cond_pass;
    j["roc_conditions"] = {{"c1_err", cond.c1_err},
                           {"c2_ok", cond.c2_ok},
                           {"c3_ok", cond.c3_ok},
                           {"pass", cond_pass}};

    j["all_pass"] = all_pass;
    writer.write_json("theory.json", j);
    return all_pass;
}

bool run_dynamics(const ExperimentSpec& spec, BundleWriter& writer) {
    const data::LabeledDataset pool = materialize(spec.dataset);
    const Splits splits =
        partition(pool, spec.train_size, spec.ghost_size, spec.test_size, spec.seed);

    train::TrainConfig cfg = spec.train;
    cfg.seed = spec.seed;
    if (cfg.objective != train::Objective::RibAdv) cfg.objective = train::Objective::RIB;
    if (cfg.eval_recognizability_every == 0) cfg.eval_recognizability_every = 5;

    const train::TrainResult result =
        dispatch_train(cfg, splits.train, data::ghost_from(splits.ghost), &splits.test);
    emit_run(writer, "dyn", result, splits.train, splits.ghost, cfg.recognizability_pairs,
             spec.seed);

    std::string csv = "epoch,recognizability\n";
    for (const auto& [epoch, value] : result.record.recognizability_dynamics) {
        csv += std::to_string(epoch) + "," + fmt(value) + "\n";
    }
    writer.write("dynamics.csv", csv);
    return true;
}

}  // namespace

ReportBundle run(const ExperimentSpec& spec) {
    const std::vector<std::string> diags = validate(spec);
    if (!diags.empty()) {
        std::string msg = "invalid spec:";
        for (const auto& d : diags) msg += "\n  " + d;
        throw std::invalid_argument(msg);
    }

    std::string out_dir = spec.output_dir;
    if (const char* root = std::getenv("RIB_OUT_ROOT");
        root != nullptr && !fs::path(out_dir).is_absolute()) {
        out_dir = (fs::path(root) / out_dir).string();
    }

    // spec digest covers the effective configuration
    json spec_echo;
    spec_echo["command"] = to_string(spec.command);
    spec_echo["seed"] = spec.seed;
    spec_echo["train_digest"] = hex64(spec.train.digest());
    const std::string spec_text = spec_echo.dump();

    BundleWriter writer(spec, out_dir);
    bool complete = false;
    bool checks_passed = true;
    try {
        switch (spec.command) {
            case Command::Train: checks_passed = run_train(spec, writer); break;
            case Command::SweepBeta: checks_passed = run_sweep_beta(spec, writer); break;
            case Command::EstimateFcmi: checks_passed = run_estimate_fcmi(spec, writer); break;
            case Command::GapStudy: checks_passed = run_gap_study(spec, writer); break;
            case Command::VerifyTheory: checks_passed = run_verify_theory(spec, writer); break;
            case Command::Dynamics: checks_passed = run_dynamics(spec, writer); break;
        }
        complete = true;
    } catch (...) {
        writer.finish(false, false, spec_text);
        throw;
    }
    return writer.finish(complete, checks_passed, spec_text);
}

}  // namespace rib::experiment
