#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedlora/comm.hpp"
#include "fedlora/config.hpp"
#include "fedlora/federation.hpp"
#include "fedlora/metrics.hpp"

namespace fs = std::filesystem;

namespace {

struct OutputGuard {
    std::vector<fs::path> paths;
    bool committed = false;
    ~OutputGuard() {
        if (committed) return;
        for (const fs::path& p : paths) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }
};

int cmd_run(const std::string& config_path, const std::string& output_path) {
    const fedlora::ExperimentConfig cfg = fedlora::parse_config(config_path);
    OutputGuard guard;
    guard.paths.push_back(output_path);
    const auto records = fedlora::run_experiment(cfg);
    fedlora::emit_metrics(records, cfg, output_path);
    guard.committed = true;
    std::cout << "wrote " << output_path << " (" << records.size() << " rounds incl. init, final "
              << "test accuracy " << records.back().global_acc << ")\n";
    return 0;
}

int cmd_comm_table(const std::string& preset_name) {
    const fedlora::CommPreset p = fedlora::comm_preset(preset_name);
    const auto entries =
        fedlora::comm_table(p.m, p.n, p.num_matrices, p.ranks, p.mixture, p.reference_total);
    std::cout << fedlora::format_comm_table(entries);
    return 0;
}

int cmd_sweep(const std::string& config_path, std::size_t num_seeds,
              const std::string& output_dir) {
    fedlora::ExperimentConfig cfg = fedlora::parse_config(config_path);
    fs::create_directories(output_dir);
    OutputGuard guard;
    std::vector<std::vector<fedlora::RoundRecord>> runs;
    std::vector<std::uint64_t> seeds;
    const std::uint64_t base_seed = cfg.fed.seed;
    for (std::size_t i = 0; i < num_seeds; ++i) {
        cfg.fed.seed = base_seed + i;
        seeds.push_back(cfg.fed.seed);
        runs.push_back(fedlora::run_experiment(cfg));
        const fs::path path = fs::path(output_dir) / ("metrics_seed" +
                                                      std::to_string(cfg.fed.seed) + ".csv");
        guard.paths.push_back(path);
        fedlora::emit_metrics(runs.back(), cfg, path.string());
    }
    const fs::path summary = fs::path(output_dir) / "summary.csv";
    guard.paths.push_back(summary);
    std::ofstream out(summary, std::ios::binary);
    if (!out) throw std::runtime_error("sweep: cannot open " + summary.string());
    out << fedlora::render_sweep_summary(runs, seeds);
    if (!out) throw std::runtime_error("sweep: write failed for " + summary.string());
    guard.committed = true;
    std::cout << "wrote " << num_seeds << " metric files + summary to " << output_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rank-heterogeneous federated LoRA simulator"};
    app.require_subcommand(1);

    std::string config_path, output_path = "metrics.csv";
    auto* run = app.add_subcommand("run", "Execute an experiment and write a metrics CSV");
    run->add_option("config", config_path, "Experiment config file")->required();
    run->add_option("-o,--output", output_path, "Metrics CSV path");

    std::string preset = "distilbert";
    auto* table = app.add_subcommand("comm-table", "Print the per-rank uplink cost ledger");
    table->add_option("preset", preset, "Ledger preset (distilbert)");

    std::string sweep_config, sweep_dir = "sweep";
    std::size_t num_seeds = 5;
    auto* sweep = app.add_subcommand("sweep", "Repeat an experiment over seed offsets");
    sweep->add_option("config", sweep_config, "Experiment config file")->required();
    sweep->add_option("--seeds", num_seeds, "Number of seeds")->check(CLI::PositiveNumber);
    sweep->add_option("--output-dir", sweep_dir, "Directory for per-seed files and summary");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, output_path);
        if (table->parsed()) return cmd_comm_table(preset);
        return cmd_sweep(sweep_config, num_seeds, sweep_dir);
    } catch (const fedlora::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}
