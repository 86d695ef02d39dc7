#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cidsim/election.hpp"
#include "cidsim/strategies.hpp"
#include "cidsim/voter_models.hpp"

namespace cidsim {

// Which voter is the focal one in each simulated election.
enum class FocalSelection {
    cycle,        // voter (iteration mod n)
    every_voter,  // each voter in turn, all sharing the iteration's electorate
};

struct EsifConfig {
    VotingMethod method = VotingMethod::approval;
    StrategySpec focal;     // strategy s
    StrategySpec baseline;  // strategy t, used by every other voter
    int n = 31;
    int m = 5;
    VoterModelSpec model;
    double noise_sd = 0.10;
    int win_probability_draws = 1000;
    std::int64_t iterations = 1000;
    std::uint64_t seed = 1;
    int workers = 1;
    FocalSelection focal_selection = FocalSelection::cycle;
};

void validate(const EsifConfig& config);

// Utility differences for one focal voter: numerator G[i][w_s] - G[i][w_a],
// denominator G[i][w] - G[i][w_a].
struct EsifSample {
    double numerator = 0.0;
    double denominator = 0.0;
};

struct EsifResult {
    double numerator_mean = 0.0;
    double denominator_mean = 0.0;
    // Ratio of means; absent when the denominator mean is not positive.
    std::optional<double> ratio;
    double standard_error = 0.0;
    std::int64_t samples = 0;
};

// Winner when `absent` (if any) is left out of the ballot list entirely.
WinnerSet tabulate_without(VotingMethod method, std::span<const Ballot> ballots, int m, std::optional<int> absent);

// One focal voter, several candidate focal strategies against one baseline
// strategy, all on the same electorate and polls.
std::vector<EsifSample> esif_samples(const Electorate& electorate, VotingMethod method, const StrategySpec& baseline,
                                     std::span<const StrategySpec> focal, int focal_voter, double noise_sd,
                                     int draws, std::uint64_t seed, std::uint64_t iteration);

EsifResult summarize_esif(std::span<const EsifSample> per_iteration);

EsifResult estimate_esif(const EsifConfig& config);

enum class StrategyParam { z, q, poll_threshold };

std::string_view to_string(StrategyParam param);
std::optional<StrategyParam> parse_strategy_param(std::string_view name);
void set_param(StrategySpec& spec, StrategyParam param, double value);

struct SweepRow {
    double param = 0.0;
    EsifResult result;
};

// Varies the focal strategy's parameter; the baseline stays fixed. All grid
// points share electorates and polls.
std::vector<SweepRow> sweep_grid(StrategyParam param, std::span<const double> grid, const EsifConfig& config);

// Index of the largest reportable ratio, if any.
std::optional<std::size_t> argmax_row(std::span<const SweepRow> rows);

struct EsifContour {
    std::vector<double> focal_grid;
    std::vector<double> electorate_grid;
    // cells[e][f]: focal value f against an electorate using value e.
    std::vector<std::vector<EsifResult>> cells;
    // Most incentivized focal value for each electorate value (NaN if none).
    std::vector<double> best_focal;
    // Where best_focal crosses the diagonal, by linear interpolation.
    std::optional<double> stable_point;
};

EsifContour sweep_contour(StrategyParam param, std::span<const double> focal_grid,
                          std::span<const double> electorate_grid, const EsifConfig& config);

// First crossing of best(x) - x from positive to non-positive.
std::optional<double> diagonal_crossing(std::span<const double> x, std::span<const double> best);

}  // namespace cidsim
