#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cidsim/cid_engine.hpp"
#include "cidsim/election.hpp"
#include "cidsim/esif.hpp"
#include "cidsim/strategies.hpp"
#include "cidsim/voter_models.hpp"

namespace cidsim {

// Invalid configuration; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string_view version();

enum class ExperimentKind { cid, esif_sweep, esif_contour };

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);

// Fractions of the electorate using each strategy.
struct StrategyMix {
    double honest = 1.0;
    double viability_aware = 0.0;
    double bullet = 0.0;

    friend bool operator==(const StrategyMix&, const StrategyMix&) = default;
};

// Label used in CSV output, e.g. "honest" or "honest:0.71|bullet:0.29".
std::string describe(const StrategyMix& mix);

enum class MixParameter { viability_aware_fraction, bullet_fraction };

std::string_view to_string(MixParameter parameter);
std::optional<MixParameter> parse_mix_parameter(std::string_view name);

// Replaces honest voters by the swept strategy: value goes to that
// strategy, 1 - value stays honest.
StrategyMix mix_for(MixParameter parameter, double value);

struct MixSweep {
    MixParameter parameter = MixParameter::bullet_fraction;
    std::vector<double> values;
};

struct EsifSettings {
    StrategyParam parameter = StrategyParam::z;
    StrategySpec focal;
    StrategySpec baseline;
    std::vector<double> focal_grid;
    std::vector<double> electorate_grid;  // contour only
    FocalSelection focal_selection = FocalSelection::cycle;
};

struct ExperimentConfig {
    std::string name = "custom";
    std::string description;
    ExperimentKind kind = ExperimentKind::cid;
    std::vector<VotingMethod> methods{kAllMethods.begin(), kAllMethods.end()};
    StrategyMix mix;
    std::optional<MixSweep> sweep;
    std::vector<int> m_values{5};
    int n = 72;
    int K = 24;
    std::int64_t iterations = 1000;
    VoterModelSpec model;
    SortMode sort_mode = SortMode::normalized_mean;
    double noise_sd = 0.10;
    double epsilon_fraction = 0.11;
    int calibration_samples = 10000;
    int win_probability_draws = 1000;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "results";
    int workers = 1;
    // Divisor applied to `iterations` before running.
    double scale = 1.0;
    EsifSettings esif;
};

// Throws ConfigError.
void validate(const ExperimentConfig& config);

std::int64_t scaled_iterations(const ExperimentConfig& config);

// Strategy of each voter: the first ceil(f * n) indices of a seeded
// permutation are viability-aware, the next ceil(f * n) bullet voters,
// the rest honest. Empty when everyone is honest.
StrategyProfile assign_strategies(const StrategyMix& mix, int n, std::uint64_t seed);

// Presets reproducing the figures, in listing order.
std::vector<std::string> preset_names();
std::optional<ExperimentConfig> make_preset(std::string_view name);
std::string list_presets();

// Loads a TOML-style config file. A `preset` key starts from that preset;
// other keys override it.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::string_view text);

struct CidCell {
    VotingMethod method = VotingMethod::plurality;
    std::string profile;
    int m = 0;
    std::optional<double> sweep_value;
    double epsilon = 0.0;
    CidResult result;
    double emu_standard_error = 0.0;
};

struct EsifCurve {
    VotingMethod method = VotingMethod::approval;
    std::vector<SweepRow> rows;
};

struct EsifGrid {
    VotingMethod method = VotingMethod::approval;
    EsifContour contour;
};

struct ExperimentOutput {
    std::vector<CidCell> cid;
    std::vector<EsifCurve> sweeps;
    std::vector<EsifGrid> contours;
    std::vector<std::filesystem::path> files;
};

using CellCallback = std::function<void(std::string_view label, int index, int total)>;

// Runs every cell and writes CSV files plus a JSON sidecar for each.
ExperimentOutput run_experiment(const ExperimentConfig& config, const CellCallback& on_cell = {});

}  // namespace cidsim
