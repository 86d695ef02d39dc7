#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "cidsim/strategies.hpp"
#include "oracles.hpp"

using namespace cidsim;

namespace {

CandidateList list(std::initializer_list<int> xs) { return CandidateList(xs.begin(), xs.end()); }
ScoreList slist(std::initializer_list<int> xs) { return ScoreList(xs.begin(), xs.end()); }

const std::vector<double> kFive{10, 6, 2, 0, -3};

WinProbabilities probs(std::vector<double> p) { return WinProbabilities{std::move(p)}; }

std::vector<double> random_utilities(int m, Rng& rng) {
    std::normal_distribution<double> g;
    std::vector<double> u(m);
    for (double& x : u) {
        x = g(rng);
    }
    return u;
}

WinProbabilities random_probabilities(int m, Rng& rng) {
    std::gamma_distribution<double> g(0.7, 1.0);
    std::vector<double> p(m);
    for (double& x : p) {
        x = g(rng) + 1e-6;
    }
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& x : p) {
        x /= total;
    }
    return probs(p);
}

// Support level a ballot gives each candidate, for monotonicity checks.
std::vector<int> support_levels(const Ballot& b, int m) {
    std::vector<int> level(m, 0);
    if (const auto* s = std::get_if<ScoreVector>(&b)) {
        std::copy(s->scores.begin(), s->scores.end(), level.begin());
    } else if (const auto* a = std::get_if<ApprovalSet>(&b)) {
        for (int c : a->approved) {
            level[c] = 1;
        }
    } else if (const auto* r = std::get_if<Ranking>(&b)) {
        for (int pos = 0; pos < m; ++pos) {
            level[r->order[pos]] = m - pos;
        }
    }
    return level;
}

bool monotone(std::span<const double> u, const std::vector<int>& level) {
    for (std::size_t a = 0; a < u.size(); ++a) {
        for (std::size_t b = 0; b < u.size(); ++b) {
            if (u[a] > u[b] && level[b] > level[a]) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace

TEST_CASE("favorite/mean normalization") {
    const auto n = normalize_favorite_mean(kFive);
    REQUIRE(n.has_value());
    const std::vector<double> expected{1.0, 3.0 / 7, -1.0 / 7, -3.0 / 7, -6.0 / 7};
    for (std::size_t j = 0; j < expected.size(); ++j) {
        CHECK((*n)[j] == doctest::Approx(expected[j]));
    }
    const auto two = normalize_favorite_mean(std::vector{1.0, 0.0});
    CHECK((*two)[0] == doctest::Approx(1.0));
    CHECK((*two)[1] == doctest::Approx(-1.0));
    CHECK_FALSE(normalize_favorite_mean(std::vector{5.0, 5.0, 5.0}).has_value());
}

TEST_CASE("honest approval") {
    CHECK(honest_approval(kFive, 0.4).approved == list({0, 1}));
    CHECK(honest_approval(kFive, 1.0).approved == list({0}));
    CHECK(honest_approval(kFive, -10.0).approved == list({0, 1, 2, 3, 4}));
    CHECK(honest_approval(std::vector{2.0, 2.0}).approved.empty());
}

TEST_CASE("honest score") {
    CHECK(honest_score(std::vector{8.0, 5.0, 2.0}).scores == slist({5, 3, 0}));
    CHECK(honest_score(std::vector{1.0, 0.0}).scores == slist({5, 0}));
    CHECK(honest_score(std::vector{4.0, 3.0, 3.0, 3.0, 2.0}).scores == slist({5, 3, 3, 3, 0}));
    // Skewed voter: the zero point 2*mean - max sits below the minimum.
    CHECK(honest_score(std::vector{10.0, 0.0, 0.0, 0.0}).scores == slist({5, 2, 2, 2}));
    CHECK(honest_score(std::vector{1.0, 1.0}).scores == slist({0, 0}));
}

TEST_CASE("honest ranking and two-round ballots") {
    CHECK(honest_ranking(std::vector{0.2, 0.9, 0.5}).order == list({1, 2, 0}));
    CHECK(honest_ranking(std::vector{1.0, 1.0}).order == list({0, 1}));
    CHECK(honest_ranking(std::vector{-3.0, -1.0, -2.0}).order == list({1, 2, 0}));

    const auto p = honest_top2_plurality(std::vector{3.0, 2.0, 1.0});
    CHECK(p.first_round == 0);
    CHECK(p.runoff_ranking == list({0, 1, 2}));
    const auto a = honest_top2_approval(kFive);
    CHECK(a.first_round == list({0, 1}));
    CHECK(a.runoff_ranking == honest_ranking(kFive).order);
    CHECK(honest_top2_approval(kFive, 1.0).first_round == list({0}));
}

TEST_CASE("dogmatic bullet") {
    const std::vector<double> u{1, 3, 2};
    CHECK(std::get<ApprovalSet>(dogmatic_bullet(u, VotingMethod::approval)).approved == list({1}));
    CHECK(std::get<ScoreVector>(dogmatic_bullet(u, VotingMethod::score)).scores == slist({0, 5, 0}));
    CHECK(std::get<Ranking>(dogmatic_bullet(u, VotingMethod::irv)).order == list({1, 2, 0}));
    CHECK(std::get<SingleMark>(dogmatic_bullet(u, VotingMethod::plurality)).choice == 1);
    CHECK(std::get<TwoRoundApproval>(dogmatic_bullet(u, VotingMethod::approval_top2)).first_round == list({1}));
}

TEST_CASE("bullet reduction: z = 1 approval is the bullet ballot") {
    Rng rng = make_stream(11, 0, StreamPurpose::corpus);
    for (int t = 0; t < 500; ++t) {
        const auto u = random_utilities(2 + t % 6, rng);
        CHECK(Ballot{honest_approval(u, 1.0)} == dogmatic_bullet(u, VotingMethod::approval));
    }
}

TEST_CASE("honest strategies are invariant under positive affine maps") {
    Rng rng = make_stream(12, 0, StreamPurpose::corpus);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    std::uniform_real_distribution<double> shift(-50.0, 50.0);
    for (int t = 0; t < 500; ++t) {
        const auto u = random_utilities(2 + t % 7, rng);
        const double a = scale(rng);
        const double b = shift(rng);
        std::vector<double> v(u.size());
        std::transform(u.begin(), u.end(), v.begin(), [&](double x) { return a * x + b; });
        CHECK(honest_ranking(u) == honest_ranking(v));
        CHECK(honest_approval(u) == honest_approval(v));
        CHECK(honest_score(u) == honest_score(v));
    }
}

TEST_CASE("viability-aware worked example") {
    const std::vector<double> u{0, 5, 10};
    const auto p = probs({0.5, 0.3, 0.2});
    CHECK(election_expected_value(u, p) == doctest::Approx(3.5));
    CHECK(va_single_mark(u, p).choice == 2);
    CHECK(va_approval(u, p).approved == list({1, 2}));
    CHECK(va_irv(u, p).order == list({2, 1, 0}));
    CHECK(va_score(u, p).scores == slist({0, 5, 5}));

    CHECK(election_expected_value(u, probs({0, 1, 0})) == doctest::Approx(5.0));
    CHECK(election_expected_value(std::vector{4.0, 4.0, 4.0}, p) == doctest::Approx(4.0));
    CHECK(va_single_mark(std::vector{9.0, 0.0, 0.0}, probs({1, 0, 0})).choice == 0);
}

TEST_CASE("viability-aware edge cases") {
    const std::vector<double> u{1, 2, 3};
    // Expected value below every utility cannot happen with normalized p,
    // so emulate the extremes with unnormalized weights.
    CHECK(va_approval(u, probs({0.1, 0.1, 0.1})).approved == list({0, 1, 2}));
    CHECK(va_score(u, probs({0.1, 0.1, 0.1})).scores == slist({5, 5, 5}));
    CHECK(va_approval(u, probs({2, 2, 2})).approved.empty());
    CHECK(va_score(u, probs({2, 2, 2})).scores == slist({0, 0, 0}));
    // Single front-block member leads, the rest follow honestly. A likelier
    // compromise can lead a preferred long shot.
    CHECK(va_irv(u, probs({0.0, 0.0, 1.0})).order == list({2, 1, 0}));
    CHECK(va_irv(std::vector{3.0, 1.0, 2.0}, probs({0.0, 0.5, 0.5})).order == list({2, 0, 1}));
    // Same voter with every utility shifted below zero.
    CHECK(va_irv(std::vector{-1.0, -3.0, -2.0}, probs({0.0, 0.5, 0.5})).order == list({2, 0, 1}));
}

TEST_CASE("viability-aware ballots ignore the utility origin and scale") {
    // Integer utilities and dyadic probabilities keep every product exact.
    Rng rng = make_stream(15, 0, StreamPurpose::corpus);
    std::uniform_int_distribution<int> util(-20, 20);
    std::uniform_int_distribution<int> shift(-50, 50);
    for (int t = 0; t < 2000; ++t) {
        const int m = 2 + t % 5;
        std::vector<double> u(m);
        for (double& x : u) {
            x = util(rng);
        }
        std::vector<double> weights(m, 0.0);
        for (int k = 0; k < 8; ++k) {
            weights[rng() % m] += 0.125;
        }
        const auto p = probs(weights);
        const double a = t % 2 ? 4.0 : 0.5;
        const double b = shift(rng);
        std::vector<double> v(m);
        std::transform(u.begin(), u.end(), v.begin(), [&](double x) { return a * x + b; });
        CHECK(va_single_mark(u, p).choice == va_single_mark(v, p).choice);
        CHECK(va_approval(u, p) == va_approval(v, p));
        CHECK(va_irv(u, p) == va_irv(v, p));
        CHECK(va_score(u, p) == va_score(v, p));
    }
}

TEST_CASE("two-candidate single mark votes for the preferred one") {
    Rng rng = make_stream(13, 0, StreamPurpose::corpus);
    std::uniform_real_distribution<double> unit(0.01, 0.99);
    for (int t = 0; t < 500; ++t) {
        const auto u = random_utilities(2, rng);
        const double p0 = unit(rng);
        CHECK(va_single_mark(u, probs({p0, 1 - p0})).choice == (u[1] > u[0] ? 1 : 0));
    }
}

TEST_CASE("va_score is the two-level collapse of va_approval") {
    Rng rng = make_stream(14, 0, StreamPurpose::corpus);
    for (int t = 0; t < 500; ++t) {
        const int m = 2 + t % 6;
        const auto u = random_utilities(m, rng);
        const auto p = random_probabilities(m, rng);
        const auto approved = va_approval(u, p).approved;
        const auto scores = va_score(u, p).scores;
        for (int j = 0; j < m; ++j) {
            const bool in = std::find(approved.begin(), approved.end(), j) != approved.end();
            CHECK(scores[j] == (in ? kMaxScore : 0));
        }
    }
}

TEST_CASE("cardinal strategies never support a less preferred candidate more") {
    Rng rng = make_stream(15, 0, StreamPurpose::corpus);
    for (int t = 0; t < 1000; ++t) {
        const int m = 2 + t % 7;
        const auto u = random_utilities(m, rng);
        const auto p = random_probabilities(m, rng);
        CHECK(monotone(u, support_levels(honest_approval(u), m)));
        CHECK(monotone(u, support_levels(honest_score(u), m)));
        CHECK(monotone(u, support_levels(honest_ranking(u), m)));
        CHECK(monotone(u, support_levels(va_approval(u, p), m)));
        CHECK(monotone(u, support_levels(va_score(u, p), m)));
        CHECK(monotone(u, support_levels(va_star(u, p, 0.1), m)));
    }
}

TEST_CASE("exhaustive STAR optimum is monotone for up to three candidates") {
    Rng rng = make_stream(16, 0, StreamPurpose::corpus);
    std::uniform_real_distribution<double> qdist(0.0, 0.5);
    for (int t = 0; t < 300; ++t) {
        const int m = 2 + t % 2;
        const auto u = random_utilities(m, rng);
        const auto p = random_probabilities(m, rng);
        const double q = qdist(rng);
        const auto best = oracle::best_star_ballots(u, p.p, q);
        REQUIRE_FALSE(best.empty());
        for (const auto& s : best) {
            CHECK(monotone(u, s));
        }
    }
}

TEST_CASE("va_star against exhaustive search") {
    SUBCASE("two candidates: favorite 5, other 0") {
        Rng rng = make_stream(17, 0, StreamPurpose::corpus);
        for (int t = 0; t < 200; ++t) {
            const auto u = random_utilities(2, rng);
            const auto p = random_probabilities(2, rng);
            const auto s = va_star(u, p, 0.1).scores;
            const int fav = u[1] > u[0] ? 1 : 0;
            CHECK(s[fav] == 5);
            CHECK(s[1 - fav] == 0);
            CHECK(va_star_objective(u, p, 0.1, std::vector<int>(s.begin(), s.end())) ==
                  doctest::Approx(oracle::best_star_objective(u, p.p, 0.1)).epsilon(1e-12));
        }
    }
    SUBCASE("q = 0 and uniform p keep the honest order") {
        const std::vector<double> u{8, 5, 2};
        const auto p = probs({1.0 / 3, 1.0 / 3, 1.0 / 3});
        const auto s = va_star(u, p, 0.0).scores;
        CHECK(s == honest_score(u).scores);
        const auto best = oracle::best_star_ballots(u, p.p, 0.0);
        CHECK(std::find(best.begin(), best.end(), std::vector<int>(s.begin(), s.end())) != best.end());
    }
    SUBCASE("near-certain frontrunner is separated from the rest") {
        const std::vector<double> u{0.0, 1.0, 3.0};
        const auto p = probs({0.96, 0.02, 0.02});
        const auto s = va_star(u, p, 0.1).scores;
        CHECK(s[0] < s[1]);
        CHECK(s[0] < s[2]);
        CHECK(va_star_objective(u, p, 0.1, std::vector<int>(s.begin(), s.end())) ==
              doctest::Approx(oracle::best_star_objective(u, p.p, 0.1)));
    }
    SUBCASE("coordinate ascent ends at a point no single change improves") {
        Rng rng = make_stream(18, 0, StreamPurpose::corpus);
        int global = 0;
        const int trials = 300;
        for (int t = 0; t < trials; ++t) {
            const int m = 3 + t % 3;
            const auto u = random_utilities(m, rng);
            const auto p = random_probabilities(m, rng);
            const auto out = va_star(u, p, 0.1).scores;
            std::vector<int> s(out.begin(), out.end());
            const double value = va_star_objective(u, p, 0.1, s);
            for (int j = 0; j < m; ++j) {
                for (int level = 0; level <= kMaxScore; ++level) {
                    auto alt = s;
                    alt[j] = level;
                    CHECK(va_star_objective(u, p, 0.1, alt) <= value + 1e-15);
                }
            }
            if (value >= oracle::best_star_objective(u, p.p, 0.1) - 1e-12) {
                ++global;
            }
        }
        // Local search usually reaches the global optimum.
        CHECK(global >= trials * 8 / 10);
    }
}

TEST_CASE("cast_ballot dispatch") {
    const std::vector<double> u{1, 3, 2};
    StrategySpec honest;
    StrategySpec bullet{StrategyKind::bullet};
    StrategySpec va{StrategyKind::viability_aware};
    const auto p = probs({0.4, 0.2, 0.4});
    CHECK(cast_ballot(VotingMethod::approval, honest, u, nullptr) == honest_ballot(VotingMethod::approval, u));
    CHECK(cast_ballot(VotingMethod::score, bullet, u, nullptr) == dogmatic_bullet(u, VotingMethod::score));
    CHECK(cast_ballot(VotingMethod::score, va, u, &p) == Ballot{va_score(u, p)});
    CHECK(cast_ballot(VotingMethod::minimax, va, u, nullptr) == Ballot{honest_ranking(u)});
    CHECK_THROWS(cast_ballot(VotingMethod::score, va, u, nullptr));
    CHECK_THROWS(cast_ballot(VotingMethod::score, StrategySpec{StrategyKind::abstain}, u, nullptr));
    // A voter who cannot tell candidates apart casts the indifferent ballot.
    const std::vector<double> flat{2, 2, 2};
    CHECK(cast_ballot(VotingMethod::irv, honest, flat, nullptr) == Ballot{Ranking{list({0, 1, 2})}});
    CHECK(cast_ballot(VotingMethod::star, honest, flat, nullptr) == Ballot{ScoreVector{slist({0, 0, 0})}});
    CHECK(cast_ballot(VotingMethod::approval, honest, flat, nullptr) == Ballot{ApprovalSet{}});
}

TEST_CASE("strategy polls and margins") {
    StrategySpec s;
    CHECK(strategy_poll(VotingMethod::plurality, s, 0.1).kind == PollKind::plurality);
    CHECK(strategy_poll(VotingMethod::star, s, 0.1).kind == PollKind::score_fraction);
    CHECK(strategy_poll(VotingMethod::irv, s, 0.1).kind == PollKind::approval);
    CHECK(strategy_poll(VotingMethod::irv, s, 0.1).approval_threshold == 0.1);
    CHECK(strategy_poll(VotingMethod::approval, s, 0.1).approval_threshold == 0.4);
    CHECK(strategy_poll(VotingMethod::minimax, s, 0.1).kind == PollKind::none);
    CHECK(strategy_margin_of_error(VotingMethod::approval_top2, 0.1) == doctest::Approx(0.2));
    CHECK(strategy_margin_of_error(VotingMethod::score, 0.1) == doctest::Approx(0.1));
}

TEST_CASE("win probabilities") {
    Rng rng = make_stream(19, 0, StreamPurpose::win_probability);
    const auto even = win_probabilities(Poll{PollKind::plurality, {0.5, 0.5}}, 0.1, 20000, rng);
    CHECK(even.p[0] == doctest::Approx(0.5).epsilon(0.05));
    CHECK(even.p[0] + even.p[1] == doctest::Approx(1.0));

    const auto lopsided = win_probabilities(Poll{PollKind::plurality, {0.9, 0.1}}, 0.1, 20000, rng);
    CHECK(lopsided.p[0] > 0.99);

    const auto four = win_probabilities(Poll{PollKind::approval, {0.3, 0.3, 0.3, 0.3}}, 0.2, 40000, rng);
    for (double x : four.p) {
        CHECK(x == doctest::Approx(0.25).epsilon(0.06));
    }

    // Reordering the candidates reorders the probabilities.
    const auto a = win_probabilities(Poll{PollKind::approval, {0.5, 0.3, 0.45}}, 0.1, 40000, rng);
    const auto b = win_probabilities(Poll{PollKind::approval, {0.45, 0.5, 0.3}}, 0.1, 40000, rng);
    CHECK(std::accumulate(a.p.begin(), a.p.end(), 0.0) == doctest::Approx(1.0));
    CHECK(a.p[0] == doctest::Approx(b.p[1]).epsilon(0.03));
    CHECK(a.p[2] == doctest::Approx(b.p[0]).epsilon(0.05));

    CHECK_THROWS(win_probabilities(Poll{PollKind::approval, {0.5, 0.5}}, 0.0, 10, rng));
    CHECK_THROWS(win_probabilities(Poll{PollKind::approval, {0.5, 0.5}}, 1.0, 10, rng));
}
