#include <fmt/format.h>

#include <CLI11.hpp>
#include <charconv>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "cidsim/experiment.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr const char* kWorkersEnv = "CIDSIM_WORKERS";

std::optional<int> workers_from_env() {
    const char* raw = std::getenv(kWorkersEnv);
    if (raw == nullptr || *raw == '\0') {
        return std::nullopt;
    }
    const std::string_view text(raw);
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || value < 1) {
        throw cidsim::ConfigError(fmt::format("{} must be a positive integer, got '{}'", kWorkersEnv, text));
    }
    return value;
}

struct RunOptions {
    std::string config;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> iterations;
    std::optional<int> workers;
    std::optional<std::string> out;
    std::optional<double> scale;
    bool quiet = false;
};

cidsim::ExperimentConfig resolve(const RunOptions& opt) {
    cidsim::ExperimentConfig config;
    if (!opt.config.empty()) {
        config = cidsim::load_config(opt.config);
        if (!opt.preset.empty()) {
            throw cidsim::ConfigError("use either --config or --preset, not both");
        }
    } else if (!opt.preset.empty()) {
        auto preset = cidsim::make_preset(opt.preset);
        if (!preset) {
            throw cidsim::ConfigError(fmt::format("unknown preset '{}' (see `cidsim presets`)", opt.preset));
        }
        config = *preset;
    } else {
        throw cidsim::ConfigError("one of --config or --preset is required");
    }
    if (auto env = workers_from_env()) {
        config.workers = *env;
    }
    if (opt.workers) {
        config.workers = *opt.workers;
    }
    if (opt.seed) {
        config.seed = *opt.seed;
    }
    if (opt.iterations) {
        config.iterations = *opt.iterations;
    }
    if (opt.scale) {
        config.scale = *opt.scale;
    }
    if (opt.out) {
        config.output_dir = *opt.out;
    }
    cidsim::validate(config);
    return config;
}

int run(const RunOptions& opt) {
    cidsim::ExperimentConfig config;
    try {
        config = resolve(opt);
    } catch (const cidsim::ConfigError& e) {
        std::cerr << "cidsim: invalid configuration: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        cidsim::CellCallback progress;
        if (!opt.quiet) {
            progress = [](std::string_view label, int index, int total) {
                std::cerr << fmt::format("[{}/{}] {}\n", index + 1, total, label);
            };
        }
        const auto output = cidsim::run_experiment(config, progress);
        for (const auto& file : output.files) {
            std::cout << file.string() << "\n";
        }
    } catch (const cidsim::ConfigError& e) {
        std::cerr << "cidsim: invalid configuration: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "cidsim: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Candidate incentive distribution simulations"};
    app.set_version_flag("--version", std::string(cidsim::version()));
    app.require_subcommand(1);

    RunOptions opt;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment from a preset or config file");
    run_cmd->add_option("--config", opt.config, "TOML config file");
    run_cmd->add_option("--preset", opt.preset, "Preset name, see `cidsim presets`");
    run_cmd->add_option("--seed", opt.seed, "Master seed");
    run_cmd->add_option("--iterations", opt.iterations, "Iterations per cell (before --scale)");
    run_cmd->add_option("--workers", opt.workers, fmt::format("Worker threads (default: ${} or 1)", kWorkersEnv));
    run_cmd->add_option("--out", opt.out, "Output directory");
    run_cmd->add_option("--scale", opt.scale, "Divide iteration counts by this factor");
    run_cmd->add_flag("-q,--quiet", opt.quiet, "No progress output");

    auto* presets_cmd = app.add_subcommand("presets", "List figure presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    if (presets_cmd->parsed()) {
        std::cout << cidsim::list_presets();
        return 0;
    }
    if (run_cmd->parsed()) {
        return run(opt);
    }
    return kExitConfig;
}
