#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cidsim/election.hpp"
#include "cidsim/strategies.hpp"
#include "cidsim/voter_models.hpp"

namespace cidsim {

// How voters are ordered from least to most supportive of a candidate.
enum class SortMode { normalized_mean, unnormalized_mean, distance_from_top };

std::string_view to_string(SortMode mode);
std::optional<SortMode> parse_sort_mode(std::string_view name);

// Event counters for one bucket. Win/lose refers to the perturbed
// candidate, before -> after the perturbation.
struct BucketCounts {
    std::int64_t win_to_lose_minus = 0;  // adds to UCI
    std::int64_t lose_to_win_plus = 0;   // adds to UCI
    std::int64_t win_to_lose_plus = 0;   // subtracts
    std::int64_t lose_to_win_minus = 0;  // subtracts

    std::int64_t net() const { return win_to_lose_minus + lose_to_win_plus - win_to_lose_plus - lose_to_win_minus; }
    BucketCounts& operator+=(const BucketCounts& other);
    friend bool operator==(const BucketCounts&, const BucketCounts&) = default;
};

// Raw UCI events. Every (iteration, candidate) pair is one trial for each bucket.
struct UciTally {
    std::vector<BucketCounts> buckets;
    std::int64_t trials = 0;

    UciTally() = default;
    explicit UciTally(int K) : buckets(static_cast<std::size_t>(K)) {}

    int bucket_count() const { return static_cast<int>(buckets.size()); }
    double uci(int k) const;
    UciTally& operator+=(const UciTally& other);
    friend bool operator==(const UciTally&, const UciTally&) = default;
};

struct CidResult {
    std::vector<double> ci;
    std::vector<double> x;  // (k - 1) / (K - 1)
    double emu = 0.0;
    UciTally raw;
};

class DegenerateCid : public std::runtime_error {
public:
    DegenerateCid(const std::string& what, UciTally tally) : std::runtime_error(what), tally_(std::move(tally)) {}
    const UciTally& tally() const { return tally_; }

private:
    UciTally tally_;
};

struct CidConfig {
    VotingMethod method = VotingMethod::plurality;
    StrategyProfile profile;  // one entry per voter; empty means all honest
    int n = 72;
    int m = 5;
    int K = 24;
    double epsilon = 0.0;
    SortMode sort_mode = SortMode::normalized_mean;
    VoterModelSpec model;
    double noise_sd = 0.10;
    int win_probability_draws = 1000;
    std::int64_t iterations = 1000;
    std::uint64_t seed = 1;
    int workers = 1;
    // Iterations are grouped into this many contiguous batches for
    // jackknife error estimates.
    int batches = 20;
};

void validate(const CidConfig& config);

// Everything needed to cast ballots for one electorate: strategies and the
// win probabilities derived from this iteration's poll.
struct BallotSetup {
    VotingMethod method = VotingMethod::plurality;
    std::span<const StrategySpec> profile;
    std::optional<WinProbabilities> win_probabilities;
};

struct PerturbationSetup {
    int K = 24;
    double epsilon = 0.0;
    SortMode sort_mode = SortMode::normalized_mean;
};

// Voter indices ordered by increasing support for candidate c, ties by index.
std::vector<int> sort_permutation(const Electorate& electorate, CandidateIndex c, SortMode mode);

// Sorting key of voter i for candidate c.
double support_key(std::span<const double> u, CandidateIndex c, SortMode mode);

std::vector<Ballot> cast_ballots(const Electorate& electorate, const BallotSetup& setup);

// Ballots after adding `delta` to column c for `voters`, re-casting only them.
std::vector<Ballot> perturbed_ballots(const Electorate& electorate, const BallotSetup& setup,
                                      std::span<const Ballot> baseline, std::span<const int> voters,
                                      CandidateIndex c, double delta);

// All perturbation events for a single electorate under fixed polls.
UciTally tally_electorate(const Electorate& electorate, const BallotSetup& setup, const PerturbationSetup& perturbation);

// Per-iteration setup shared by CID and ESIF: the method's poll and the
// win probabilities its viability-aware voters see.
std::optional<WinProbabilities> iteration_win_probabilities(VotingMethod method, const StrategySpec& spec,
                                                            const Electorate& electorate, double noise_sd,
                                                            int draws, std::uint64_t seed,
                                                            std::uint64_t iteration);

struct CidRun {
    UciTally total;
    std::vector<UciTally> batches;
};

using ProgressCallback = std::function<void(std::int64_t done, std::int64_t total)>;

CidRun run_cid(const CidConfig& config, const ProgressCallback& progress = {});
UciTally estimate_uci(const CidConfig& config);

CidResult normalize_ci(const UciTally& tally);

// Earth mover's distance from the uniform CID on the 1-D bucket line:
// (1/K^2) * sum_k |sum_{j<=k} (ci_j - 1)|.
double emu(std::span<const double> ci);

// Delete-one-batch jackknife standard error of EMU, and of the EMU
// difference between two runs that share their random streams.
double emu_standard_error(std::span<const UciTally> batches);
double emu_difference_standard_error(std::span<const UciTally> a, std::span<const UciTally> b);

// target_fraction times the mean per-voter standard deviation of utilities.
double calibrate_epsilon(const VoterModelSpec& model, int m, double target_fraction, int samples,
                         std::uint64_t seed);

// Sample standard deviation (divisor m - 1) of one voter's utilities.
double utility_spread(std::span<const double> u);

}  // namespace cidsim
