#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "cidsim/random.hpp"
#include "cidsim/voter_models.hpp"

using namespace cidsim;

TEST_CASE("philox known answers") {
    using C = Philox4x32::Counter;
    CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
    auto draw = [](Rng rng) {
        std::vector<std::uint32_t> out(8);
        std::generate(out.begin(), out.end(), rng);
        return out;
    };
    const auto a = draw(make_stream(5, 3, StreamPurpose::electorate));
    CHECK(a == draw(make_stream(5, 3, StreamPurpose::electorate)));
    CHECK(a != draw(make_stream(5, 4, StreamPurpose::electorate)));
    CHECK(a != draw(make_stream(6, 3, StreamPurpose::electorate)));
    CHECK(a != draw(make_stream(5, 3, StreamPurpose::poll_noise)));
    CHECK(a != draw(make_stream(5, 3, StreamPurpose::electorate, 1)));
    CHECK(a != draw(make_stream(5, 3 + (std::uint64_t{1} << 32), StreamPurpose::electorate)));
}

TEST_CASE("impartial culture") {
    Rng rng = make_stream(1, 0, StreamPurpose::electorate);
    const Electorate e = sample_impartial_culture(72, 5, rng);
    CHECK(e.voters() == 72);
    CHECK(e.candidates() == 5);
    CHECK(std::all_of(e.data().begin(), e.data().end(), [](double x) { return std::isfinite(x); }));

    const Electorate big = sample_impartial_culture(10000, 2, rng);
    for (int j = 0; j < 2; ++j) {
        double sum = 0.0;
        double sq = 0.0;
        for (int i = 0; i < 10000; ++i) {
            sum += big(i, j);
            sq += big(i, j) * big(i, j);
        }
        const double mean = sum / 10000;
        CHECK(std::abs(mean) < 0.1);
        CHECK(sq / 10000 - mean * mean == doctest::Approx(1.0).epsilon(0.05));
    }
    CHECK(sample_impartial_culture(1, 1, rng).data().size() == 1);
}

TEST_CASE("spatial utilities are negative weighted distances") {
    const Electorate e = utilities_from_positions({{0.0}}, {{1.0}, {-2.0}}, std::vector{1.0});
    CHECK(e(0, 0) == doctest::Approx(-1.0));
    CHECK(e(0, 1) == doctest::Approx(-2.0));

    const Electorate same = utilities_from_positions({{0.3, -0.2}}, {{0.3, -0.2}}, std::vector{1.0, 1.0});
    CHECK(same(0, 0) == 0.0);

    const Electorate weighted = utilities_from_positions({{0.0, 0.0}}, {{3.0, 4.0}}, std::vector{0.25, 1.0});
    CHECK(weighted(0, 0) == doctest::Approx(-std::sqrt(0.25 * 9 + 16)));

    Rng rng = make_stream(2, 0, StreamPurpose::electorate);
    const SpatialDraw d = sample_spatial_draw(10, 4, 3, rng);
    CHECK(d.voter_positions.size() == 10);
    CHECK(d.candidate_positions.size() == 4);
    CHECK(d.voter_positions[0].size() == 3);
    CHECK(d.electorate == utilities_from_positions(d.voter_positions, d.candidate_positions, d.dimension_weights));
    CHECK(std::all_of(d.electorate.data().begin(), d.electorate.data().end(), [](double x) { return x <= 0.0; }));
}

TEST_CASE("stick-breaking weights") {
    Rng rng = make_stream(3, 0, StreamPurpose::electorate);
    for (int rep = 0; rep < 200; ++rep) {
        const auto w = stick_breaking_weights(1.5, 0.01, rng);
        REQUIRE_FALSE(w.empty());
        CHECK(std::all_of(w.begin(), w.end(), [](double x) { return x > 0.0; }));
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        CHECK(total <= 1.0 + 1e-12);
        CHECK(total >= 0.99 - 1e-12);
    }
}

TEST_CASE("chinese restaurant seating") {
    Rng rng = make_stream(4, 0, StreamPurpose::electorate);
    std::vector<int> occupancy;
    const auto tables = chinese_restaurant_seating(50, 1e-12, occupancy, rng);
    CHECK(std::all_of(tables.begin(), tables.end(), [](int t) { return t == 0; }));
    CHECK(occupancy == std::vector<int>{50});

    std::vector<int> occ;
    const auto seats = chinese_restaurant_seating(200, 2.0, occ, rng);
    CHECK(std::accumulate(occ.begin(), occ.end(), 0) == 200);
    const int opened = static_cast<int>(occ.size());
    CHECK(*std::max_element(seats.begin(), seats.end()) == opened - 1);
    // Expected table count for alpha = 2, n = 200 is about 2 ln(101) = 9.2.
    CHECK(opened >= 3);
    CHECK(opened <= 20);

    // Continuing a restaurant keeps earlier tables.
    const auto more = chinese_restaurant_seating(10, 2.0, occ, rng);
    CHECK(std::accumulate(occ.begin(), occ.end(), 0) == 210);
    CHECK(more.size() == 10);
}

TEST_CASE("clustered model") {
    Rng rng = make_stream(5, 0, StreamPurpose::electorate);
    const SpatialDraw d = sample_clustered_draw(72, 5, ClusteredParams{}, rng);
    CHECK(d.electorate.voters() == 72);
    CHECK(d.electorate.candidates() == 5);
    CHECK(std::all_of(d.electorate.data().begin(), d.electorate.data().end(),
                      [](double x) { return std::isfinite(x) && x <= 0.0; }));
    CHECK(d.voter_positions[0].size() == d.dimension_weights.size());
    CHECK(d.electorate == utilities_from_positions(d.voter_positions, d.candidate_positions, d.dimension_weights));

    Rng r1(9, 1, 2);
    Rng r2(9, 1, 2);
    CHECK(sample_electorate(VoterModelSpec::clustered_spatial(), 72, 5, r1) ==
          sample_electorate(VoterModelSpec::clustered_spatial(), 72, 5, r2));
}

TEST_CASE("model validation") {
    CHECK_NOTHROW(validate(VoterModelSpec{}));
    CHECK_THROWS(validate(VoterModelSpec::spatial(0)));
    ClusteredParams bad;
    bad.cluster_concentration = 0.0;
    CHECK_THROWS(validate(VoterModelSpec::clustered_spatial(bad)));
    CHECK_FALSE(describe(VoterModelSpec::spatial(2)).empty());
}
