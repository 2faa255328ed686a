#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rib/data.hpp"
#include "rib/protocol.hpp"
#include "rib/train.hpp"

namespace rib::experiment {

enum class Command { Train, SweepBeta, EstimateFcmi, GapStudy, VerifyTheory, Dynamics };

const char* to_string(Command c);
Command command_from_string(const std::string& name);

// How a dataset is materialized: synthetic mixture, IDX pair or CSV file.
struct DatasetSpec {
    std::string type;  // "gaussian_mixture" | "idx" | "csv"
    // gaussian_mixture
    data::MixtureSpec mixture;
    double mean_separation = 0.0;  // auto-generates means when set
    std::uint64_t seed = 0;
    // idx
    std::string images, labels;
    // csv
    std::string path;
};

struct ExperimentSpec {
    Command command = Command::Train;
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    std::size_t jobs = 1;

    DatasetSpec dataset;
    std::optional<DatasetSpec> ghost_dataset;  // cross-corpus ghosts; default heldout split

    train::TrainConfig train;
    std::size_t train_size = 0;  // 0 = use whole pool minus ghost/test
    std::size_t ghost_size = 0;  // 0 = same as train_size
    std::size_t test_size = 0;

    std::vector<double> beta_grid = {0.1, 1.0, 10.0, 100.0};
    std::vector<std::size_t> sizes = {200, 800, 3200};
    std::size_t seeds = 5;
    std::size_t k1 = 5, k2 = 5;

    double theory_mu_max = 10.0;
    double theory_mu_step = 0.1;
    std::vector<double> lemma_mus = {0.5, 1.0, 2.0};
    std::size_t lemma_grid = 100000;
    std::size_t roc_points = 1000;
};

// Parse a JSON document. Unknown fields are errors (fail-closed); every
// field has a default.
ExperimentSpec parse_spec(const std::string& json_text);
ExperimentSpec load_spec(const std::string& path);

// Schema and cross-field checks, no side effects.
std::vector<std::string> validate(const ExperimentSpec& spec);

struct ReportBundle {
    std::string directory;
    std::map<std::string, std::string> file_digests;  // name -> fnv64 hex
    bool complete = false;
    bool checks_passed = true;
};

// Executes the named study and writes metric CSVs, JSON records, curve
// point files and a manifest into spec.output_dir.
ReportBundle run(const ExperimentSpec& spec);

}  // namespace rib::experiment
