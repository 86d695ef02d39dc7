#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/container/static_vector.hpp>

namespace cidsim {

// Ballots live in fixed-capacity storage so that re-casting a handful of
// ballots inside the perturbation loop never touches the heap.
inline constexpr int kMaxCandidates = 16;

using CandidateIndex = int;
using CandidateList = boost::container::static_vector<CandidateIndex, kMaxCandidates>;
using ScoreList = boost::container::static_vector<int, kMaxCandidates>;

inline constexpr int kMaxScore = 5;

class ElectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SingleMark {
    CandidateIndex choice = 0;
    friend bool operator==(const SingleMark&, const SingleMark&) = default;
};

// Approved candidates in ascending index order.
struct ApprovalSet {
    CandidateList approved;
    friend bool operator==(const ApprovalSet&, const ApprovalSet&) = default;
};

// Complete ranking, most preferred first.
struct Ranking {
    CandidateList order;
    friend bool operator==(const Ranking&, const Ranking&) = default;
};

struct ScoreVector {
    ScoreList scores;
    friend bool operator==(const ScoreVector&, const ScoreVector&) = default;
};

// Two-round methods are cast as one composite ballot: a first-round vote and
// a complete ranking whose higher-placed finalist gets the runoff vote.
struct TwoRoundPlurality {
    CandidateIndex first_round = 0;
    CandidateList runoff_ranking;
    friend bool operator==(const TwoRoundPlurality&, const TwoRoundPlurality&) = default;
};

struct TwoRoundApproval {
    CandidateList first_round;
    CandidateList runoff_ranking;
    friend bool operator==(const TwoRoundApproval&, const TwoRoundApproval&) = default;
};

using Ballot = std::variant<SingleMark, ApprovalSet, Ranking, ScoreVector, TwoRoundPlurality, TwoRoundApproval>;

// Ordered set of winners. Every method here elects exactly one candidate.
struct WinnerSet {
    CandidateList winners;

    static WinnerSet single(CandidateIndex c) {
        WinnerSet w;
        w.winners.push_back(c);
        return w;
    }
    bool contains(CandidateIndex c) const;
    CandidateIndex winner() const { return winners.front(); }
    friend bool operator==(const WinnerSet&, const WinnerSet&) = default;
};

// counts(a, b) = number of ballots ranking a above b.
class PairwiseMatrix {
public:
    explicit PairwiseMatrix(int m) : m_(m), counts_(static_cast<std::size_t>(m) * m, 0) {}

    int candidates() const { return m_; }
    int operator()(CandidateIndex a, CandidateIndex b) const { return counts_[index(a, b)]; }
    int& operator()(CandidateIndex a, CandidateIndex b) { return counts_[index(a, b)]; }
    int margin(CandidateIndex a, CandidateIndex b) const { return (*this)(a, b) - (*this)(b, a); }

private:
    std::size_t index(CandidateIndex a, CandidateIndex b) const {
        return static_cast<std::size_t>(a) * m_ + b;
    }
    int m_;
    std::vector<int> counts_;
};

enum class VotingMethod {
    plurality,
    plurality_top2,
    irv,
    approval,
    approval_top2,
    score,
    star,
    minimax,
};

inline constexpr std::array kAllMethods = {
    VotingMethod::plurality, VotingMethod::plurality_top2, VotingMethod::irv,   VotingMethod::approval,
    VotingMethod::approval_top2, VotingMethod::score,      VotingMethod::star, VotingMethod::minimax,
};

std::string_view to_string(VotingMethod method);
std::optional<VotingMethod> parse_voting_method(std::string_view name);

// The ballot alternative a method consumes, as an index into Ballot.
std::size_t ballot_kind(VotingMethod method);

struct IrvOutcome {
    WinnerSet winners;
    CandidateList elimination_order;
};

// Tie rule shared by all tabulators: the lowest candidate index wins.
WinnerSet tabulate_plurality(std::span<const SingleMark> ballots, int m);
WinnerSet tabulate_approval(std::span<const ApprovalSet> ballots, int m);
IrvOutcome run_irv(std::span<const Ranking> ballots, int m);
WinnerSet tabulate_irv(std::span<const Ranking> ballots, int m);
PairwiseMatrix pairwise_margins(std::span<const Ranking> ballots, int m);
WinnerSet tabulate_minimax(std::span<const Ranking> ballots, int m);
WinnerSet tabulate_score(std::span<const ScoreVector> ballots, int m);
WinnerSet tabulate_star(std::span<const ScoreVector> ballots, int m);
WinnerSet tabulate_top2(std::span<const TwoRoundPlurality> ballots, int m);
WinnerSet tabulate_top2(std::span<const TwoRoundApproval> ballots, int m);

// Dispatches on `method`; every ballot must hold the method's alternative.
WinnerSet tabulate(VotingMethod method, std::span<const Ballot> ballots, int m);

// Throws ElectionError if `ballot` is malformed for m candidates.
void validate_ballot(const Ballot& ballot, int m);

}  // namespace cidsim
