#include "cidsim/strategies.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace cidsim {

namespace {

void check_size(std::span<const double> u) {
    if (u.empty() || u.size() > static_cast<std::size_t>(kMaxCandidates)) {
        throw std::invalid_argument("utility vector must hold 1..16 candidates");
    }
}

double mean_of(std::span<const double> u) {
    return std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(u.size());
}

CandidateIndex favorite(std::span<const double> u) {
    return static_cast<CandidateIndex>(std::max_element(u.begin(), u.end()) - u.begin());
}

bool is_constant(std::span<const double> u) {
    return std::all_of(u.begin(), u.end(), [&](double x) { return x == u.front(); });
}

int sign(double x) {
    return (x > 0) - (x < 0);
}

CandidateList index_order(int m) {
    CandidateList order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    return order;
}

// Canonical ballot for a voter who cannot tell the candidates apart.
Ballot indifferent_ballot(VotingMethod method, int m) {
    switch (method) {
        case VotingMethod::plurality: return SingleMark{0};
        case VotingMethod::approval: return ApprovalSet{};
        case VotingMethod::irv:
        case VotingMethod::minimax: return Ranking{index_order(m)};
        case VotingMethod::score:
        case VotingMethod::star: return ScoreVector{ScoreList(static_cast<std::size_t>(m), 0)};
        case VotingMethod::plurality_top2: return TwoRoundPlurality{0, index_order(m)};
        case VotingMethod::approval_top2: return TwoRoundApproval{{}, index_order(m)};
    }
    throw std::invalid_argument("unknown voting method");
}

void check_probabilities(std::span<const double> u, const WinProbabilities& p) {
    if (p.p.size() != u.size()) {
        throw std::invalid_argument("win probabilities and utilities differ in length");
    }
}

}  // namespace

std::string_view to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::honest: return "honest";
        case StrategyKind::bullet: return "bullet";
        case StrategyKind::viability_aware: return "viability_aware";
        case StrategyKind::abstain: return "abstain";
    }
    return "unknown";
}

std::optional<StrategyKind> parse_strategy_kind(std::string_view name) {
    for (auto kind : {StrategyKind::honest, StrategyKind::bullet, StrategyKind::viability_aware,
                      StrategyKind::abstain}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    return std::nullopt;
}

std::optional<std::vector<double>> normalize_favorite_mean(std::span<const double> u) {
    check_size(u);
    const double mean = mean_of(u);
    const double top = *std::max_element(u.begin(), u.end());
    if (is_constant(u)) {
        return std::nullopt;
    }
    std::vector<double> out(u.size());
    const double range = top - mean;
    std::transform(u.begin(), u.end(), out.begin(), [&](double x) { return (x - mean) / range; });
    return out;
}

ApprovalSet honest_approval(std::span<const double> u, double z) {
    check_size(u);
    ApprovalSet ballot;
    if (is_constant(u)) {
        return ballot;
    }
    const double mean = mean_of(u);
    const double range = *std::max_element(u.begin(), u.end()) - mean;
    for (std::size_t j = 0; j < u.size(); ++j) {
        if ((u[j] - mean) / range >= z) {
            ballot.approved.push_back(static_cast<CandidateIndex>(j));
        }
    }
    return ballot;
}

ScoreVector honest_score(std::span<const double> u) {
    check_size(u);
    ScoreVector ballot;
    ballot.scores.assign(u.size(), 0);
    if (is_constant(u)) {
        return ballot;
    }
    const double mean = mean_of(u);
    const double top = *std::max_element(u.begin(), u.end());
    const double bottom = *std::min_element(u.begin(), u.end());
    const double zero_point = std::min(bottom, 2.0 * mean - top);
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double scaled = std::clamp(kMaxScore * (u[j] - zero_point) / (top - zero_point), 0.0,
                                         static_cast<double>(kMaxScore));
        // std::round rounds halves away from zero.
        ballot.scores[j] = static_cast<int>(std::round(scaled));
    }
    return ballot;
}

Ranking honest_ranking(std::span<const double> u) {
    check_size(u);
    Ranking ballot{index_order(static_cast<int>(u.size()))};
    std::stable_sort(ballot.order.begin(), ballot.order.end(),
                     [&](CandidateIndex a, CandidateIndex b) { return u[a] > u[b]; });
    return ballot;
}

TwoRoundPlurality honest_top2_plurality(std::span<const double> u) {
    return {favorite(u), honest_ranking(u).order};
}

TwoRoundApproval honest_top2_approval(std::span<const double> u, double z) {
    return {honest_approval(u, z).approved, honest_ranking(u).order};
}

Ballot honest_ballot(VotingMethod method, std::span<const double> u, double z) {
    check_size(u);
    if (is_constant(u)) {
        return indifferent_ballot(method, static_cast<int>(u.size()));
    }
    switch (method) {
        case VotingMethod::plurality: return SingleMark{favorite(u)};
        case VotingMethod::approval: return honest_approval(u, z);
        case VotingMethod::irv:
        case VotingMethod::minimax: return honest_ranking(u);
        case VotingMethod::score:
        case VotingMethod::star: return honest_score(u);
        case VotingMethod::plurality_top2: return honest_top2_plurality(u);
        case VotingMethod::approval_top2: return honest_top2_approval(u, z);
    }
    throw std::invalid_argument("unknown voting method");
}

Ballot dogmatic_bullet(std::span<const double> u, VotingMethod method) {
    check_size(u);
    const CandidateIndex fav = favorite(u);
    const int m = static_cast<int>(u.size());
    // Ranked ballots stay complete: favorite first, the rest in honest order.
    auto favorite_first = [&] {
        Ranking ranking = honest_ranking(u);
        auto it = std::find(ranking.order.begin(), ranking.order.end(), fav);
        std::rotate(ranking.order.begin(), it, it + 1);
        return ranking.order;
    };
    switch (method) {
        case VotingMethod::plurality: return SingleMark{fav};
        case VotingMethod::approval: return ApprovalSet{{fav}};
        case VotingMethod::irv:
        case VotingMethod::minimax: return Ranking{favorite_first()};
        case VotingMethod::score:
        case VotingMethod::star: {
            ScoreVector ballot{ScoreList(static_cast<std::size_t>(m), 0)};
            ballot.scores[fav] = kMaxScore;
            return ballot;
        }
        case VotingMethod::plurality_top2: return TwoRoundPlurality{fav, favorite_first()};
        case VotingMethod::approval_top2: return TwoRoundApproval{{fav}, favorite_first()};
    }
    throw std::invalid_argument("unknown voting method");
}

double election_expected_value(std::span<const double> u, const WinProbabilities& p) {
    check_probabilities(u, p);
    return std::inner_product(u.begin(), u.end(), p.p.begin(), 0.0);
}

SingleMark va_single_mark(std::span<const double> u, const WinProbabilities& p) {
    const double ev = election_expected_value(u, p);
    CandidateIndex best = 0;
    double best_value = p.p[0] * (u[0] - ev);
    for (std::size_t j = 1; j < u.size(); ++j) {
        const double value = p.p[j] * (u[j] - ev);
        if (value > best_value) {
            best = static_cast<CandidateIndex>(j);
            best_value = value;
        }
    }
    return {best};
}

ApprovalSet va_approval(std::span<const double> u, const WinProbabilities& p) {
    const double ev = election_expected_value(u, p);
    ApprovalSet ballot;
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (u[j] >= ev) {
            ballot.approved.push_back(static_cast<CandidateIndex>(j));
        }
    }
    return ballot;
}

Ranking va_irv(std::span<const double> u, const WinProbabilities& p) {
    const double ev = election_expected_value(u, p);
    Ranking ballot{index_order(static_cast<int>(u.size()))};
    const auto back = std::stable_partition(ballot.order.begin(), ballot.order.end(),
                                            [&](CandidateIndex j) { return u[j] >= ev; });
    // Gains are measured from EV so the order does not depend on where zero
    // utility sits (spatial utilities are negative distances).
    std::stable_sort(ballot.order.begin(), back, [&](CandidateIndex a, CandidateIndex b) {
        const double pa = p.p[a] * (u[a] - ev);
        const double pb = p.p[b] * (u[b] - ev);
        if (pa != pb) {
            return pa > pb;
        }
        return u[a] > u[b];
    });
    std::stable_sort(back, ballot.order.end(), [&](CandidateIndex a, CandidateIndex b) { return u[a] > u[b]; });
    return ballot;
}

ScoreVector va_score(std::span<const double> u, const WinProbabilities& p) {
    const double ev = election_expected_value(u, p);
    ScoreVector ballot;
    for (double x : u) {
        ballot.scores.push_back(x >= ev ? kMaxScore : 0);
    }
    return ballot;
}

double va_star_objective(std::span<const double> u, const WinProbabilities& p, double q,
                         std::span<const int> scores) {
    check_probabilities(u, p);
    const std::size_t m = u.size();
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        double advance = 0.0;
        double runoff = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double pair = p.p[j] * p.p[k];
            const double gap = u[j] - u[k];
            advance += pair * (1.0 - p.p[j] - p.p[k]) * gap;
            runoff += sign(scores[j] - scores[k]) * pair * gap;
        }
        total += q * scores[j] * advance + runoff;
    }
    return total;
}

ScoreVector va_star(std::span<const double> u, const WinProbabilities& p, double q) {
    check_probabilities(u, p);
    ScoreVector ballot = honest_score(u);
    std::array<int, kMaxCandidates> scores{};
    std::copy(ballot.scores.begin(), ballot.scores.end(), scores.begin());
    const std::span<int> current(scores.data(), u.size());
    double value = va_star_objective(u, p, q, current);
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t j = 0; j < u.size(); ++j) {
            const int incumbent = current[j];
            int best = incumbent;
            for (int s = 0; s <= kMaxScore; ++s) {
                if (s == incumbent) {
                    continue;
                }
                current[j] = s;
                const double candidate = va_star_objective(u, p, q, current);
                if (candidate > value) {
                    value = candidate;
                    best = s;
                }
            }
            current[j] = best;
            improved = improved || best != incumbent;
        }
    }
    std::copy(current.begin(), current.end(), ballot.scores.begin());
    return ballot;
}

Ballot viability_aware_ballot(VotingMethod method, std::span<const double> u, const WinProbabilities& p,
                              const StrategySpec& spec) {
    switch (method) {
        case VotingMethod::plurality: return va_single_mark(u, p);
        case VotingMethod::plurality_top2: return TwoRoundPlurality{va_single_mark(u, p).choice, honest_ranking(u).order};
        case VotingMethod::approval: return va_approval(u, p);
        case VotingMethod::approval_top2: return TwoRoundApproval{va_approval(u, p).approved, honest_ranking(u).order};
        case VotingMethod::irv: return va_irv(u, p);
        case VotingMethod::score: return va_score(u, p);
        case VotingMethod::star: return va_star(u, p, spec.q);
        case VotingMethod::minimax: return honest_ranking(u);
    }
    throw std::invalid_argument("unknown voting method");
}

WinProbabilities win_probabilities(const Poll& poll, double moe, int draws, Rng& rng) {
    if (!(moe > 0.0 && moe < 1.0)) {
        throw std::invalid_argument("margin of error must lie in (0, 1)");
    }
    if (draws < 1) {
        throw std::invalid_argument("win probability estimate needs at least one draw");
    }
    const std::size_t m = poll.support.size();
    const double total = 1.0 / (moe * moe) - 1.0;
    std::vector<std::gamma_distribution<double>> alphas;
    std::vector<std::gamma_distribution<double>> betas;
    for (double s : poll.support) {
        const double a = std::clamp(s, 0.001, 0.999) * total;
        alphas.emplace_back(a, 1.0);
        betas.emplace_back(total - a, 1.0);
    }
    std::vector<long> wins(m, 0);
    for (int d = 0; d < draws; ++d) {
        std::size_t best = 0;
        double best_value = -1.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double x = alphas[j](rng);
            const double y = betas[j](rng);
            const double value = x / (x + y);
            if (value > best_value) {
                best = j;
                best_value = value;
            }
        }
        ++wins[best];
    }
    WinProbabilities result;
    result.p.reserve(m);
    for (long w : wins) {
        result.p.push_back(static_cast<double>(w) / draws);
    }
    return result;
}

PollSpec strategy_poll(VotingMethod method, const StrategySpec& spec, double noise_sd) {
    switch (method) {
        case VotingMethod::plurality: return {PollKind::plurality, spec.z, noise_sd};
        case VotingMethod::approval: return {PollKind::approval, spec.z, noise_sd};
        case VotingMethod::score:
        case VotingMethod::star: return {PollKind::score_fraction, spec.z, noise_sd};
        case VotingMethod::plurality_top2:
        case VotingMethod::approval_top2:
        case VotingMethod::irv: return {PollKind::approval, spec.poll_threshold, noise_sd};
        case VotingMethod::minimax: return {PollKind::none, spec.z, noise_sd};
    }
    throw std::invalid_argument("unknown voting method");
}

double strategy_margin_of_error(VotingMethod method, double noise_sd) {
    switch (method) {
        case VotingMethod::plurality_top2:
        case VotingMethod::approval_top2:
        case VotingMethod::irv: return 2.0 * noise_sd;
        default: return noise_sd;
    }
}

Ballot cast_ballot(VotingMethod method, const StrategySpec& spec, std::span<const double> u,
                   const WinProbabilities* p) {
    check_size(u);
    if (spec.kind == StrategyKind::abstain) {
        throw std::invalid_argument("an abstaining voter casts no ballot");
    }
    if (is_constant(u)) {
        return indifferent_ballot(method, static_cast<int>(u.size()));
    }
    switch (spec.kind) {
        case StrategyKind::honest: return honest_ballot(method, u, spec.z);
        case StrategyKind::bullet: return dogmatic_bullet(u, method);
        case StrategyKind::viability_aware:
            if (method == VotingMethod::minimax) {
                return honest_ranking(u);
            }
            if (p == nullptr) {
                throw std::invalid_argument("viability-aware strategy needs win probabilities");
            }
            return viability_aware_ballot(method, u, *p, spec);
        case StrategyKind::abstain: break;
    }
    throw std::invalid_argument("unknown strategy");
}

}  // namespace cidsim
