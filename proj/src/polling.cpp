#include "cidsim/polling.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "cidsim/strategies.hpp"

namespace cidsim {

std::string_view to_string(PollKind kind) {
    switch (kind) {
        case PollKind::none: return "none";
        case PollKind::plurality: return "plurality";
        case PollKind::approval: return "approval";
        case PollKind::score_fraction: return "score_fraction";
    }
    return "unknown";
}

std::vector<double> poll_base_support(const PollSpec& spec, const Electorate& electorate) {
    const int n = electorate.voters();
    const int m = electorate.candidates();
    std::vector<double> support(static_cast<std::size_t>(m), 0.0);
    if (spec.kind == PollKind::none || n == 0) {
        return support;
    }
    for (int i = 0; i < n; ++i) {
        const auto u = electorate.row(i);
        switch (spec.kind) {
            case PollKind::plurality:
                support[std::get<SingleMark>(honest_ballot(VotingMethod::plurality, u)).choice] += 1.0;
                break;
            case PollKind::approval:
                for (CandidateIndex c : honest_approval(u, spec.approval_threshold).approved) {
                    support[c] += 1.0;
                }
                break;
            case PollKind::score_fraction: {
                const ScoreVector ballot = honest_score(u);
                for (int j = 0; j < m; ++j) {
                    support[j] += ballot.scores[j] / static_cast<double>(kMaxScore);
                }
                break;
            }
            case PollKind::none: break;
        }
    }
    for (double& s : support) {
        s /= n;
    }
    return support;
}

Poll run_poll(const PollSpec& spec, const Electorate& electorate, Rng& rng) {
    if (spec.noise_sd < 0) {
        throw std::invalid_argument("poll noise must be non-negative");
    }
    Poll poll{spec.kind, poll_base_support(spec, electorate)};
    if (spec.kind == PollKind::none) {
        return poll;
    }
    if (spec.noise_sd > 0) {
        std::normal_distribution<double> noise(0.0, spec.noise_sd);
        for (double& s : poll.support) {
            s += noise(rng);
        }
    }
    for (double& s : poll.support) {
        s = std::clamp(s, 0.0, 1.0);
    }
    return poll;
}

}  // namespace cidsim
