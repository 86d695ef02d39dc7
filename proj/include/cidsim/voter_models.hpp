#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cidsim/random.hpp"

namespace cidsim {

// n x m utility matrix, row-major: one row per voter, one column per candidate.
class Electorate {
public:
    Electorate() = default;
    Electorate(int voters, int candidates)
        : n_(voters), m_(candidates), utilities_(static_cast<std::size_t>(voters) * candidates, 0.0) {}
    Electorate(int voters, int candidates, std::vector<double> utilities);

    int voters() const { return n_; }
    int candidates() const { return m_; }

    double operator()(int voter, int candidate) const { return utilities_[offset(voter) + candidate]; }
    double& operator()(int voter, int candidate) { return utilities_[offset(voter) + candidate]; }

    std::span<const double> row(int voter) const { return {utilities_.data() + offset(voter), static_cast<std::size_t>(m_)}; }
    std::span<double> row(int voter) { return {utilities_.data() + offset(voter), static_cast<std::size_t>(m_)}; }

    const std::vector<double>& data() const { return utilities_; }

    friend bool operator==(const Electorate&, const Electorate&) = default;

private:
    std::size_t offset(int voter) const { return static_cast<std::size_t>(voter) * m_; }

    int n_ = 0;
    int m_ = 0;
    std::vector<double> utilities_;
};

enum class VoterModelKind { impartial_culture, spatial, clustered_spatial };

// Hyperparameters of the clustered spatial model. Dimensions and their
// weights come from stick-breaking; voters and candidates are seated in
// clusters by a Chinese restaurant process.
struct ClusteredParams {
    double dimension_concentration = 1.5;
    double cluster_concentration = 0.5;
    // Scatter of members around their cluster center, relative to the
    // unit scatter of cluster centers.
    double cluster_spread = 0.5;
    // Stick-breaking stops once the unassigned stick is below this mass.
    double stick_tolerance = 0.01;

    friend bool operator==(const ClusteredParams&, const ClusteredParams&) = default;
};

struct VoterModelSpec {
    VoterModelKind kind = VoterModelKind::clustered_spatial;
    int dimensions = 2;  // spatial only
    ClusteredParams clustered;

    static VoterModelSpec impartial_culture() { return {VoterModelKind::impartial_culture, 1, {}}; }
    static VoterModelSpec spatial(int d) { return {VoterModelKind::spatial, d, {}}; }
    static VoterModelSpec clustered_spatial(ClusteredParams p = {}) { return {VoterModelKind::clustered_spatial, 1, p}; }

    friend bool operator==(const VoterModelSpec&, const VoterModelSpec&) = default;
};

std::string describe(const VoterModelSpec& spec);
void validate(const VoterModelSpec& spec);

// Positions behind a spatial draw, kept so tests can check geometry.
struct SpatialDraw {
    Electorate electorate;
    std::vector<std::vector<double>> voter_positions;
    std::vector<std::vector<double>> candidate_positions;
    std::vector<double> dimension_weights;  // all ones for the plain spatial model
};

Electorate sample_impartial_culture(int n, int m, Rng& rng);
SpatialDraw sample_spatial_draw(int n, int m, int dimensions, Rng& rng);
Electorate sample_spatial(int n, int m, int dimensions, Rng& rng);

// u[i][j] = -sqrt(sum_t w_t (x_it - y_jt)^2)
Electorate utilities_from_positions(const std::vector<std::vector<double>>& voters,
                                    const std::vector<std::vector<double>>& candidates,
                                    std::span<const double> weights);

// Stick-breaking weights w_t = beta_t * prod_{s<t}(1 - beta_s), beta ~ Beta(1, alpha).
std::vector<double> stick_breaking_weights(double concentration, double tolerance, Rng& rng);

// Seats `customers` in a Chinese restaurant with the given concentration,
// continuing from existing table occupancy. Returns the table of each new
// customer; `occupancy` is updated in place.
std::vector<int> chinese_restaurant_seating(int customers, double concentration, std::vector<int>& occupancy,
                                            Rng& rng);

SpatialDraw sample_clustered_draw(int n, int m, const ClusteredParams& params, Rng& rng);
Electorate sample_clustered(int n, int m, const ClusteredParams& params, Rng& rng);

Electorate sample_electorate(const VoterModelSpec& spec, int n, int m, Rng& rng);

}  // namespace cidsim
