#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cidsim/election.hpp"
#include "cidsim/polling.hpp"
#include "cidsim/random.hpp"

namespace cidsim {

enum class StrategyKind { honest, bullet, viability_aware, abstain };

std::string_view to_string(StrategyKind kind);
std::optional<StrategyKind> parse_strategy_kind(std::string_view name);

struct StrategySpec {
    StrategyKind kind = StrategyKind::honest;
    // Approval threshold on the favorite=1 / mean=0 scale.
    double z = 0.4;
    // Weight of the score-phase term in the viability-aware STAR objective.
    double q = 0.1;
    // Approval threshold used by the poll behind viability-aware
    // Plurality Top 2, Approval Top 2 and IRV.
    double poll_threshold = 0.1;

    friend bool operator==(const StrategySpec&, const StrategySpec&) = default;
};

// One strategy per voter index.
using StrategyProfile = std::vector<StrategySpec>;

struct WinProbabilities {
    std::vector<double> p;
};

// Affine rescale with favorite -> 1 and mean -> 0; nullopt for a constant vector.
std::optional<std::vector<double>> normalize_favorite_mean(std::span<const double> u);

ApprovalSet honest_approval(std::span<const double> u, double z = 0.4);
ScoreVector honest_score(std::span<const double> u);
Ranking honest_ranking(std::span<const double> u);
TwoRoundPlurality honest_top2_plurality(std::span<const double> u);
TwoRoundApproval honest_top2_approval(std::span<const double> u, double z = 0.4);

Ballot honest_ballot(VotingMethod method, std::span<const double> u, double z = 0.4);
Ballot dogmatic_bullet(std::span<const double> u, VotingMethod method);

double election_expected_value(std::span<const double> u, const WinProbabilities& p);

SingleMark va_single_mark(std::span<const double> u, const WinProbabilities& p);
ApprovalSet va_approval(std::span<const double> u, const WinProbabilities& p);
Ranking va_irv(std::span<const double> u, const WinProbabilities& p);
ScoreVector va_score(std::span<const double> u, const WinProbabilities& p);
ScoreVector va_star(std::span<const double> u, const WinProbabilities& p, double q = 0.1);

// The quantity va_star maximizes, exposed for oracle tests.
double va_star_objective(std::span<const double> u, const WinProbabilities& p, double q,
                         std::span<const int> scores);

Ballot viability_aware_ballot(VotingMethod method, std::span<const double> u, const WinProbabilities& p,
                              const StrategySpec& spec);

// Beta-distributed true support around each polled value, T = alpha + beta
// chosen so that Beta(T/2, T/2) has standard deviation moe / 2. Returns the
// Monte Carlo estimate of each candidate being the maximum.
WinProbabilities win_probabilities(const Poll& poll, double moe, int draws, Rng& rng);

// Poll a viability-aware voter consults for `method` (kind none for Minimax).
PollSpec strategy_poll(VotingMethod method, const StrategySpec& spec, double noise_sd);

// Top-2 and IRV strategies assume twice the polling noise.
double strategy_margin_of_error(VotingMethod method, double noise_sd);

// Ballot a voter with strategy `spec` casts. `p` is required for
// viability-aware strategies (except Minimax, which votes honestly).
Ballot cast_ballot(VotingMethod method, const StrategySpec& spec, std::span<const double> u,
                   const WinProbabilities* p);

}  // namespace cidsim
