#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "fbmcsim/harness.hpp"
#include "fbmcsim/kernels.hpp"

namespace {

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 std::int64_t seed_override, int trials_override, int threads) {
    fbmcsim::ExperimentConfig config = fbmcsim::load_config(config_path);
    if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
    if (trials_override > 0) config.trials = trials_override;

    const auto errors = fbmcsim::validate_config(config);
    if (!errors.empty()) {
        std::cerr << config_path << ": invalid config\n";
        for (const auto& e : errors) std::cerr << "  " << e << '\n';
        return 1;
    }

    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;

    std::cerr << "running " << config.name << " (" << config.trials << " trials, seed "
              << config.seed << ", " << threads << " threads, " << fbmcsim::kernels::backend()
              << " kernels)\n";
    const fbmcsim::ExperimentResult result = fbmcsim::run_experiment(config, threads);

    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "cannot open output file: " << out_path << '\n';
        return 1;
    }
    fbmcsim::write_csv(result, out);
    std::cerr << "wrote " << result.rows.size() << " rows to " << out_path << '\n';
    return 0;
}

int cmd_validate(const std::string& config_path) {
    try {
        const fbmcsim::ExperimentConfig config = fbmcsim::load_config(config_path);
        const auto errors = fbmcsim::validate_config(config);
        if (errors.empty()) {
            std::cout << config_path << ": ok (" << config.name << ")\n";
            return 0;
        }
        std::cout << config_path << ": invalid\n";
        for (const auto& e : errors) std::cout << "  " << e << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cout << e.what() << '\n';
        return 1;
    }
}

int cmd_list(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        std::cerr << dir << ": not a directory\n";
        return 1;
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        try {
            const fbmcsim::ExperimentConfig config = fbmcsim::load_config(path.string());
            std::cout << path.string() << "  [" << config.name << "] " << config.scenario << ", "
                      << config.waveform << ", trials=" << config.trials << '\n';
        } catch (const std::exception& e) {
            std::cout << path.string() << "  (unreadable: " << e.what() << ")\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Filter-bank multicarrier massive-MIMO uplink simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::int64_t seed = -1;
    int trials = 0;
    int threads = 0;

    auto* sim = app.add_subcommand("simulate", "Run an experiment config and write a CSV");
    sim->add_option("--config", config_path, "Experiment config file (JSON)")->required();
    sim->add_option("--out", out_path, "Output CSV path")->required();
    sim->add_option("--seed", seed, "Override the config seed");
    sim->add_option("--trials", trials, "Override the config trial count");
    sim->add_option("--threads", threads, "Worker threads (default: hardware concurrency)");

    std::string validate_path;
    auto* val = app.add_subcommand("validate-config", "Check a config file and report errors");
    val->add_option("--config", validate_path, "Experiment config file (JSON)")->required();

    std::string list_dir = "experiments";
    auto* lst = app.add_subcommand("list-experiments", "List config files in a directory");
    lst->add_option("--dir", list_dir, "Directory to scan (default: experiments)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(config_path, out_path, seed, trials, threads);
        if (val->parsed()) return cmd_validate(validate_path);
        if (lst->parsed()) return cmd_list(list_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
