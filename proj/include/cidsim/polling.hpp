#pragma once

#include <string_view>
#include <vector>

#include "cidsim/election.hpp"
#include "cidsim/random.hpp"
#include "cidsim/voter_models.hpp"

namespace cidsim {

enum class PollKind { none, plurality, approval, score_fraction };

std::string_view to_string(PollKind kind);

struct PollSpec {
    PollKind kind = PollKind::none;
    // Approval threshold on the favorite=1 / mean=0 scale (approval polls only).
    double approval_threshold = 0.4;
    double noise_sd = 0.10;
};

// Per-candidate support in [0, 1].
struct Poll {
    PollKind kind = PollKind::none;
    std::vector<double> support;
};

// Honest respondents, then independent Gaussian noise per candidate,
// clipped to [0, 1].
Poll run_poll(const PollSpec& spec, const Electorate& electorate, Rng& rng);

// Noise-free support fractions.
std::vector<double> poll_base_support(const PollSpec& spec, const Electorate& electorate);

}  // namespace cidsim
