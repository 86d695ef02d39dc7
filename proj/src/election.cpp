#include "cidsim/election.hpp"

#include <algorithm>
#include <array>

namespace cidsim {

namespace {

// Lets one tabulation routine serve both typed ballot spans and spans of the
// Ballot variant without copying.
template <class T>
struct Typed {
    const T& operator()(const T& b) const { return b; }
};

template <class T>
struct FromVariant {
    const T& operator()(const Ballot& b) const {
        const T* typed = std::get_if<T>(&b);
        if (typed == nullptr) {
            throw ElectionError("ballot type does not match voting method");
        }
        return *typed;
    }
};

void require_candidates(int m, int at_least) {
    if (m < at_least) {
        throw ElectionError(at_least == 2 ? "need two candidates" : "need at least one candidate");
    }
    if (m > kMaxCandidates) {
        throw ElectionError("too many candidates");
    }
}

void require_ballots(std::size_t n) {
    if (n == 0) {
        throw ElectionError("empty election");
    }
}

void check_candidate(CandidateIndex c, int m) {
    if (c < 0 || c >= m) {
        throw ElectionError("candidate index out of range");
    }
}

void check_set(const CandidateList& set, int m) {
    std::array<bool, kMaxCandidates> seen{};
    for (CandidateIndex c : set) {
        check_candidate(c, m);
        if (seen[c]) {
            throw ElectionError("duplicate candidate in approval set");
        }
        seen[c] = true;
    }
}

void check_ranking(const CandidateList& order, int m) {
    if (static_cast<int>(order.size()) != m) {
        throw ElectionError("ranking must list every candidate");
    }
    std::array<bool, kMaxCandidates> seen{};
    for (CandidateIndex c : order) {
        check_candidate(c, m);
        if (seen[c]) {
            throw ElectionError("ranking lists a candidate twice");
        }
        seen[c] = true;
    }
}

void check_scores(const ScoreList& scores, int m) {
    if (static_cast<int>(scores.size()) != m) {
        throw ElectionError("score ballot must score every candidate");
    }
    for (int s : scores) {
        if (s < 0 || s > kMaxScore) {
            throw ElectionError("score out of range");
        }
    }
}

// Highest count wins; strict comparison keeps the lowest index on ties.
template <class Counts>
CandidateIndex argmax_lowest(const Counts& counts, int m) {
    CandidateIndex best = 0;
    for (CandidateIndex c = 1; c < m; ++c) {
        if (counts[c] > counts[best]) {
            best = c;
        }
    }
    return best;
}

// Indices of the two largest totals, ties to the lower index.
template <class Counts>
std::pair<CandidateIndex, CandidateIndex> top_two(const Counts& counts, int m) {
    const CandidateIndex first = argmax_lowest(counts, m);
    CandidateIndex second = first == 0 ? 1 : 0;
    for (CandidateIndex c = 0; c < m; ++c) {
        if (c != first && counts[c] > counts[second]) {
            second = c;
        }
    }
    return {first, second};
}

template <class Range, class Get>
WinnerSet plurality_impl(const Range& ballots, int m, Get get) {
    require_candidates(m, 1);
    require_ballots(ballots.size());
    std::array<long, kMaxCandidates> counts{};
    for (const auto& b : ballots) {
        const CandidateIndex c = get(b).choice;
        check_candidate(c, m);
        ++counts[c];
    }
    return WinnerSet::single(argmax_lowest(counts, m));
}

template <class Range, class Get>
WinnerSet approval_impl(const Range& ballots, int m, Get get) {
    require_candidates(m, 1);
    require_ballots(ballots.size());
    std::array<long, kMaxCandidates> counts{};
    for (const auto& b : ballots) {
        const auto& set = get(b).approved;
        check_set(set, m);
        for (CandidateIndex c : set) {
            ++counts[c];
        }
    }
    return WinnerSet::single(argmax_lowest(counts, m));
}

template <class Range, class Get>
IrvOutcome irv_impl(const Range& ballots, int m, Get get) {
    require_candidates(m, 1);
    require_ballots(ballots.size());
    const std::size_t n = ballots.size();
    for (const auto& b : ballots) {
        check_ranking(get(b).order, m);
    }
    std::array<bool, kMaxCandidates> eliminated{};
    // Position of each ballot's highest-ranked continuing candidate.
    std::vector<int> cursor(n, 0);
    IrvOutcome outcome;
    for (int remaining = m; remaining > 1; --remaining) {
        std::array<long, kMaxCandidates> counts{};
        for (std::size_t i = 0; i < n; ++i) {
            const auto& order = get(ballots[i]).order;
            int& pos = cursor[i];
            while (eliminated[order[pos]]) {
                ++pos;
            }
            ++counts[order[pos]];
        }
        // Ties for fewest votes eliminate the highest index, so the lowest
        // index survives as with every other tie in this file.
        CandidateIndex loser = -1;
        for (CandidateIndex c = 0; c < m; ++c) {
            if (!eliminated[c] && (loser < 0 || counts[c] <= counts[loser])) {
                loser = c;
            }
        }
        eliminated[loser] = true;
        outcome.elimination_order.push_back(loser);
    }
    for (CandidateIndex c = 0; c < m; ++c) {
        if (!eliminated[c]) {
            outcome.winners = WinnerSet::single(c);
        }
    }
    return outcome;
}

template <class Range, class Get>
PairwiseMatrix pairwise_impl(const Range& ballots, int m, Get get) {
    require_candidates(m, 1);
    PairwiseMatrix matrix(m);
    for (const auto& b : ballots) {
        const auto& order = get(b).order;
        check_ranking(order, m);
        for (int hi = 0; hi < m; ++hi) {
            for (int lo = hi + 1; lo < m; ++lo) {
                ++matrix(order[hi], order[lo]);
            }
        }
    }
    return matrix;
}

template <class Range, class Get>
WinnerSet minimax_impl(const Range& ballots, int m, Get get) {
    require_candidates(m, 1);
    require_ballots(ballots.size());
    const PairwiseMatrix matrix = pairwise_impl(ballots, m, get);
    // Worst defeat per candidate; an undefeated candidate scores 0, so a
    // Condorcet winner always attains the minimum.
    std::array<int, kMaxCandidates> worst{};
    for (CandidateIndex c = 0; c < m; ++c) {
        for (CandidateIndex other = 0; other < m; ++other) {
            if (other != c) {
                worst[c] = std::max(worst[c], matrix.margin(other, c));
            }
        }
    }
    CandidateIndex best = 0;
    for (CandidateIndex c = 1; c < m; ++c) {
        if (worst[c] < worst[best]) {
            best = c;
        }
    }
    return WinnerSet::single(best);
}

template <class Range, class Get>
std::array<long, kMaxCandidates> score_totals(const Range& ballots, int m, Get get) {
    std::array<long, kMaxCandidates> totals{};
    for (const auto& b : ballots) {
        const auto& scores = get(b).scores;
        check_scores(scores, m);
        for (CandidateIndex c = 0; c < m; ++c) {
            totals[c] += scores[c];
        }
    }
    return totals;
}

template <class Range, class Get>
WinnerSet score_impl(const Range& ballots, int m, Get get) {
    require_candidates(m, 1);
    require_ballots(ballots.size());
    return WinnerSet::single(argmax_lowest(score_totals(ballots, m, get), m));
}

template <class Range, class Get>
WinnerSet star_impl(const Range& ballots, int m, Get get) {
    require_candidates(m, 2);
    require_ballots(ballots.size());
    const auto totals = score_totals(ballots, m, get);
    const auto [a, b] = top_two(totals, m);
    long prefer_a = 0;
    long prefer_b = 0;
    for (const auto& ballot : ballots) {
        const auto& s = get(ballot).scores;
        if (s[a] > s[b]) {
            ++prefer_a;
        } else if (s[b] > s[a]) {
            ++prefer_b;
        }
    }
    if (prefer_a != prefer_b) {
        return WinnerSet::single(prefer_a > prefer_b ? a : b);
    }
    // Runoff tie: higher total, then lower index (top_two already orders a
    // before b when totals tie).
    return WinnerSet::single(totals[b] > totals[a] ? b : a);
}

template <class Ballot>
void add_first_round(const Ballot& b, std::array<long, kMaxCandidates>& counts, int m) {
    if constexpr (std::is_same_v<Ballot, TwoRoundPlurality>) {
        check_candidate(b.first_round, m);
        ++counts[b.first_round];
    } else {
        check_set(b.first_round, m);
        for (CandidateIndex c : b.first_round) {
            ++counts[c];
        }
    }
}

template <class Range, class Get>
WinnerSet top2_impl(const Range& ballots, int m, Get get) {
    require_candidates(m, 2);
    require_ballots(ballots.size());
    std::array<long, kMaxCandidates> counts{};
    for (const auto& b : ballots) {
        const auto& typed = get(b);
        add_first_round(typed, counts, m);
        check_ranking(typed.runoff_ranking, m);
    }
    const auto [a, b] = top_two(counts, m);
    long votes_a = 0;
    long votes_b = 0;
    for (const auto& ballot : ballots) {
        for (CandidateIndex c : get(ballot).runoff_ranking) {
            if (c == a) {
                ++votes_a;
                break;
            }
            if (c == b) {
                ++votes_b;
                break;
            }
        }
    }
    if (votes_a == votes_b) {
        return WinnerSet::single(std::min(a, b));
    }
    return WinnerSet::single(votes_a > votes_b ? a : b);
}

}  // namespace

bool WinnerSet::contains(CandidateIndex c) const {
    return std::find(winners.begin(), winners.end(), c) != winners.end();
}

std::string_view to_string(VotingMethod method) {
    switch (method) {
        case VotingMethod::plurality: return "plurality";
        case VotingMethod::plurality_top2: return "plurality_top2";
        case VotingMethod::irv: return "irv";
        case VotingMethod::approval: return "approval";
        case VotingMethod::approval_top2: return "approval_top2";
        case VotingMethod::score: return "score";
        case VotingMethod::star: return "star";
        case VotingMethod::minimax: return "minimax";
    }
    return "unknown";
}

std::optional<VotingMethod> parse_voting_method(std::string_view name) {
    for (VotingMethod method : kAllMethods) {
        if (to_string(method) == name) {
            return method;
        }
    }
    return std::nullopt;
}

std::size_t ballot_kind(VotingMethod method) {
    switch (method) {
        case VotingMethod::plurality: return Ballot(std::in_place_type<SingleMark>).index();
        case VotingMethod::approval: return Ballot(std::in_place_type<ApprovalSet>).index();
        case VotingMethod::irv:
        case VotingMethod::minimax: return Ballot(std::in_place_type<Ranking>).index();
        case VotingMethod::score:
        case VotingMethod::star: return Ballot(std::in_place_type<ScoreVector>).index();
        case VotingMethod::plurality_top2: return Ballot(std::in_place_type<TwoRoundPlurality>).index();
        case VotingMethod::approval_top2: return Ballot(std::in_place_type<TwoRoundApproval>).index();
    }
    return std::variant_npos;
}

WinnerSet tabulate_plurality(std::span<const SingleMark> ballots, int m) {
    return plurality_impl(ballots, m, Typed<SingleMark>{});
}

WinnerSet tabulate_approval(std::span<const ApprovalSet> ballots, int m) {
    return approval_impl(ballots, m, Typed<ApprovalSet>{});
}

IrvOutcome run_irv(std::span<const Ranking> ballots, int m) {
    return irv_impl(ballots, m, Typed<Ranking>{});
}

WinnerSet tabulate_irv(std::span<const Ranking> ballots, int m) {
    return run_irv(ballots, m).winners;
}

PairwiseMatrix pairwise_margins(std::span<const Ranking> ballots, int m) {
    return pairwise_impl(ballots, m, Typed<Ranking>{});
}

WinnerSet tabulate_minimax(std::span<const Ranking> ballots, int m) {
    return minimax_impl(ballots, m, Typed<Ranking>{});
}

WinnerSet tabulate_score(std::span<const ScoreVector> ballots, int m) {
    return score_impl(ballots, m, Typed<ScoreVector>{});
}

WinnerSet tabulate_star(std::span<const ScoreVector> ballots, int m) {
    return star_impl(ballots, m, Typed<ScoreVector>{});
}

WinnerSet tabulate_top2(std::span<const TwoRoundPlurality> ballots, int m) {
    return top2_impl(ballots, m, Typed<TwoRoundPlurality>{});
}

WinnerSet tabulate_top2(std::span<const TwoRoundApproval> ballots, int m) {
    return top2_impl(ballots, m, Typed<TwoRoundApproval>{});
}

WinnerSet tabulate(VotingMethod method, std::span<const Ballot> ballots, int m) {
    switch (method) {
        case VotingMethod::plurality: return plurality_impl(ballots, m, FromVariant<SingleMark>{});
        case VotingMethod::approval: return approval_impl(ballots, m, FromVariant<ApprovalSet>{});
        case VotingMethod::irv: return irv_impl(ballots, m, FromVariant<Ranking>{}).winners;
        case VotingMethod::minimax: return minimax_impl(ballots, m, FromVariant<Ranking>{});
        case VotingMethod::score: return score_impl(ballots, m, FromVariant<ScoreVector>{});
        case VotingMethod::star: return star_impl(ballots, m, FromVariant<ScoreVector>{});
        case VotingMethod::plurality_top2: return top2_impl(ballots, m, FromVariant<TwoRoundPlurality>{});
        case VotingMethod::approval_top2: return top2_impl(ballots, m, FromVariant<TwoRoundApproval>{});
    }
    throw ElectionError("unknown voting method");
}

void validate_ballot(const Ballot& ballot, int m) {
    std::visit(
        [m](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, SingleMark>) {
                check_candidate(b.choice, m);
            } else if constexpr (std::is_same_v<T, ApprovalSet>) {
                check_set(b.approved, m);
            } else if constexpr (std::is_same_v<T, Ranking>) {
                check_ranking(b.order, m);
            } else if constexpr (std::is_same_v<T, ScoreVector>) {
                check_scores(b.scores, m);
            } else if constexpr (std::is_same_v<T, TwoRoundPlurality>) {
                check_candidate(b.first_round, m);
                check_ranking(b.runoff_ranking, m);
            } else {
                check_set(b.first_round, m);
                check_ranking(b.runoff_ranking, m);
            }
        },
        ballot);
}

}  // namespace cidsim
