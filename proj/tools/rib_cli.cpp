#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rib/experiment.hpp"

namespace {

struct CommonOpts {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("-c,--config", opts.config, "JSON experiment spec")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("-o,--out", opts.out, "Output directory (overrides spec)");
    cmd->add_option("-s,--seed", opts.seed, "Master seed (overrides spec)");
    cmd->add_option("-j,--jobs", opts.jobs, "Worker threads (overrides spec)");
}

int execute(rib::experiment::Command command, const CommonOpts& opts) {
    rib::experiment::ExperimentSpec spec = rib::experiment::load_spec(opts.config);
    spec.command = command;
    if (!opts.out.empty()) spec.output_dir = opts.out;
    if (opts.seed) spec.seed = *opts.seed;
    if (opts.jobs) spec.jobs = *opts.jobs;

    const rib::experiment::ReportBundle bundle = rib::experiment::run(spec);
    std::cout << "wrote " << bundle.file_digests.size() + 1 << " files to " << bundle.directory
              << "\n";
    for (const auto& [name, digest] : bundle.file_digests) {
        std::cout << "  " << name << "  " << digest << "\n";
    }
    const bool ok = bundle.complete && bundle.checks_passed;
    std::cout << (ok ? "OK" : "FAILED") << "\n";
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recognizability-regularized representation learning toolkit"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        rib::experiment::Command command;
        CommonOpts opts;
        CLI::App* cli = nullptr;
    };
    Sub subs[] = {
        {"train", "Train a single model and report metrics", rib::experiment::Command::Train, {}},
        {"sweep-beta", "Train across a grid of regularization strengths",
         rib::experiment::Command::SweepBeta, {}},
        {"estimate-fcmi", "Estimate the information-theoretic generalization bound",
         rib::experiment::Command::EstimateFcmi, {}},
        {"gap-study", "Correlate recognizability with the generalization gap",
         rib::experiment::Command::GapStudy, {}},
        {"verify-theory", "Numeric checks of the analytic results",
         rib::experiment::Command::VerifyTheory, {}},
        {"dynamics", "Track recognizability across training epochs",
         rib::experiment::Command::Dynamics, {}},
    };
    for (auto& sub : subs) {
        sub.cli = app.add_subcommand(sub.name, sub.help);
        add_common(sub.cli, sub.opts);
    }

    CommonOpts validate_opts;
    CLI::App* validate_cmd = app.add_subcommand("validate", "Check a spec without running it");
    validate_cmd->add_option("-c,--config", validate_opts.config, "JSON experiment spec")
        ->required()
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate_cmd->parsed()) {
            const auto spec = rib::experiment::load_spec(validate_opts.config);
            const auto diags = rib::experiment::validate(spec);
            for (const auto& d : diags) std::cerr << "error: " << d << "\n";
            std::cout << (diags.empty() ? "valid" : "invalid") << "\n";
            return diags.empty() ? 0 : 1;
        }
        for (auto& sub : subs) {
            if (sub.cli->parsed()) return execute(sub.command, sub.opts);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
