#include <doctest.h>

#include <cmath>
#include <limits>

#include "cidsim/esif.hpp"

using namespace cidsim;

namespace {

EsifConfig small_config(VotingMethod method) {
    EsifConfig c;
    c.method = method;
    c.n = 11;
    c.m = 4;
    c.iterations = 40;
    c.win_probability_draws = 200;
    c.seed = 3;
    return c;
}

}  // namespace

TEST_CASE("baseline and abstention give exact identities on every sample") {
    const StrategySpec abstain{StrategyKind::abstain};
    for (VotingMethod method : kAllMethods) {
        for (StrategyKind kind : {StrategyKind::honest, StrategyKind::viability_aware, StrategyKind::bullet}) {
            StrategySpec baseline{kind};
            const std::vector<StrategySpec> focal{baseline, abstain};
            for (std::uint64_t it = 0; it < 15; ++it) {
                Rng rng = make_stream(4, it, StreamPurpose::electorate);
                const Electorate g = sample_electorate(VoterModelSpec{}, 11, 4, rng);
                const auto s = esif_samples(g, method, baseline, focal, static_cast<int>(it % 11), 0.1, 100, 4, it);
                REQUIRE(s.size() == 2);
                CHECK(s[0].numerator == s[0].denominator);
                CHECK(s[1].numerator == 0.0);
                CHECK(s[1].denominator == s[0].denominator);
            }
        }
    }
}

TEST_CASE("estimate_esif identities hold for both focal selections") {
    for (FocalSelection selection : {FocalSelection::cycle, FocalSelection::every_voter}) {
        auto config = small_config(VotingMethod::approval_top2);
        config.focal_selection = selection;
        const EsifResult same = estimate_esif(config);
        if (same.ratio) {
            CHECK(*same.ratio == 1.0);
        }
        CHECK(same.numerator_mean == same.denominator_mean);
        config.focal.kind = StrategyKind::abstain;
        const EsifResult none = estimate_esif(config);
        CHECK(none.numerator_mean == 0.0);
        if (none.ratio) {
            CHECK(*none.ratio == 0.0);
        }
    }
}

TEST_CASE("abstention drops the ballot from every round") {
    Rng rng = make_stream(5, 0, StreamPurpose::electorate);
    for (std::uint64_t it = 0; it < 30; ++it) {
        const Electorate g = sample_electorate(VoterModelSpec{}, 7, 4, rng);
        for (VotingMethod method : kAllMethods) {
            std::vector<Ballot> ballots;
            for (int i = 0; i < 7; ++i) {
                ballots.push_back(honest_ballot(method, g.row(i)));
            }
            CHECK(tabulate_without(method, ballots, 4, std::nullopt) == tabulate(method, ballots, 4));
            for (int i = 0; i < 7; ++i) {
                std::vector<Ballot> rest = ballots;
                rest.erase(rest.begin() + i);
                CHECK(tabulate_without(method, ballots, 4, i) == tabulate(method, rest, 4));
            }
        }
    }
}

TEST_CASE("ratio of means") {
    const std::vector<EsifSample> samples{{1.0, 1.0}, {3.0, 1.0}, {0.0, 2.0}};
    const EsifResult r = summarize_esif(samples);
    CHECK(r.samples == 3);
    CHECK(r.numerator_mean == doctest::Approx(4.0 / 3));
    CHECK(r.denominator_mean == doctest::Approx(4.0 / 3));
    REQUIRE(r.ratio.has_value());
    CHECK(*r.ratio == doctest::Approx(1.0));
    CHECK(r.standard_error > 0.0);

    const std::vector<EsifSample> flat{{1.0, 0.0}, {0.0, 0.0}};
    CHECK_FALSE(summarize_esif(flat).ratio.has_value());
}

TEST_CASE("sweeps and contours") {
    auto config = small_config(VotingMethod::approval);
    const std::vector<double> one{0.4};
    const auto single = sweep_grid(StrategyParam::z, one, config);
    REQUIRE(single.size() == 1);
    // Focal z equals the baseline's z, so the ratio is exactly 1.
    CHECK(single[0].result.ratio.value_or(-1.0) == 1.0);

    const std::vector<double> grid{0.2, 0.4, 0.6};
    const auto rows = sweep_grid(StrategyParam::z, grid, config);
    CHECK(rows.size() == 3);
    CHECK(rows[1].result.ratio.value_or(-1.0) == 1.0);
    CHECK(argmax_row(rows).has_value());
    CHECK_THROWS(sweep_grid(StrategyParam::z, std::vector<double>{}, config));

    config.iterations = 20;
    const auto contour = sweep_contour(StrategyParam::z, grid, grid, config);
    CHECK(contour.cells.size() == 3);
    CHECK(contour.cells[0].size() == 3);
    CHECK(contour.best_focal.size() == 3);
    for (std::size_t e = 0; e < 3; ++e) {
        // The diagonal cell compares a strategy with itself.
        if (contour.cells[e][e].ratio) {
            CHECK(*contour.cells[e][e].ratio == 1.0);
        }
    }
}

TEST_CASE("sweeps do not depend on the worker count") {
    auto config = small_config(VotingMethod::irv);
    config.focal.kind = StrategyKind::viability_aware;
    const std::vector<double> grid{0.05, 0.1, 0.2};
    const auto a = sweep_grid(StrategyParam::poll_threshold, grid, config);
    config.workers = 3;
    const auto b = sweep_grid(StrategyParam::poll_threshold, grid, config);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(a[i].result.numerator_mean == b[i].result.numerator_mean);
        CHECK(a[i].result.standard_error == b[i].result.standard_error);
    }
}

TEST_CASE("argmax skips unreportable rows") {
    std::vector<SweepRow> rows(3);
    rows[0].result.ratio = 1.1;
    rows[2].result.ratio = 1.3;
    CHECK(argmax_row(rows) == 2u);
    rows[2].result.ratio.reset();
    CHECK(argmax_row(rows) == 0u);
    rows[0].result.ratio.reset();
    CHECK_FALSE(argmax_row(rows).has_value());
}

TEST_CASE("diagonal crossing") {
    const std::vector<double> x{0.0, 0.25, 0.5, 0.75, 1.0};
    CHECK(diagonal_crossing(x, std::vector{0.5, 0.5, 0.5, 0.5, 0.5}) == doctest::Approx(0.5));
    // best - x goes 0.3 -> -0.1 between 0.25 and 0.5: crosses at 0.25 + 0.25 * 0.75.
    const auto c = diagonal_crossing(x, std::vector{0.4, 0.55, 0.4, 0.4, 0.4});
    REQUIRE(c.has_value());
    CHECK(*c == doctest::Approx(0.4375));
    CHECK(diagonal_crossing(x, std::vector{0.0, 0.0, 0.0, 0.0, 0.0}) == 0.0);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK(diagonal_crossing(x, std::vector{nan, 0.6, 0.4, nan, 0.2}) == doctest::Approx(0.25 + 0.25 * 0.35 / 0.45));
    CHECK_FALSE(diagonal_crossing(x, std::vector{1.0, 1.0, 1.0, 1.0, 1.1}).has_value());
}

TEST_CASE("ESIF config validation and names") {
    EsifConfig c;
    CHECK_NOTHROW(validate(c));
    c.n = 1;
    CHECK_THROWS(validate(c));
    c = EsifConfig{};
    c.baseline.kind = StrategyKind::abstain;
    CHECK_THROWS(validate(c));
    for (StrategyParam p : {StrategyParam::z, StrategyParam::q, StrategyParam::poll_threshold}) {
        CHECK(parse_strategy_param(to_string(p)) == p);
    }
    StrategySpec s;
    set_param(s, StrategyParam::q, 0.3);
    CHECK(s.q == 0.3);
}
