#include "cidsim/voter_models.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace cidsim {

namespace {

constexpr int kMaxDimensions = 64;

std::vector<double> standard_normal_vector(int size, std::normal_distribution<double>& normal, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(size));
    for (double& x : v) {
        x = normal(rng);
    }
    return v;
}

}  // namespace

Electorate::Electorate(int voters, int candidates, std::vector<double> utilities)
    : n_(voters), m_(candidates), utilities_(std::move(utilities)) {
    if (utilities_.size() != static_cast<std::size_t>(voters) * candidates) {
        throw std::invalid_argument("utility matrix size does not match n x m");
    }
}

std::string describe(const VoterModelSpec& spec) {
    switch (spec.kind) {
        case VoterModelKind::impartial_culture: return "impartial_culture";
        case VoterModelKind::spatial: return fmt::format("spatial(d={})", spec.dimensions);
        case VoterModelKind::clustered_spatial:
            return fmt::format("clustered_spatial(dimension_concentration={}, cluster_concentration={}, "
                               "cluster_spread={}, stick_tolerance={})",
                               spec.clustered.dimension_concentration, spec.clustered.cluster_concentration,
                               spec.clustered.cluster_spread, spec.clustered.stick_tolerance);
    }
    return "unknown";
}

void validate(const VoterModelSpec& spec) {
    if (spec.kind == VoterModelKind::spatial && spec.dimensions < 1) {
        throw std::invalid_argument("spatial model needs at least one dimension");
    }
    if (spec.kind == VoterModelKind::clustered_spatial) {
        const auto& p = spec.clustered;
        if (!(p.dimension_concentration > 0) || !(p.cluster_concentration > 0)) {
            throw std::invalid_argument("clustered model concentrations must be positive");
        }
        if (!(p.cluster_spread >= 0)) {
            throw std::invalid_argument("cluster spread must be non-negative");
        }
        if (!(p.stick_tolerance > 0 && p.stick_tolerance < 1)) {
            throw std::invalid_argument("stick tolerance must lie in (0, 1)");
        }
    }
}

Electorate sample_impartial_culture(int n, int m, Rng& rng) {
    Electorate g(n, m);
    std::normal_distribution<double> normal;
    for (int i = 0; i < n; ++i) {
        for (double& u : g.row(i)) {
            u = normal(rng);
        }
    }
    return g;
}

Electorate utilities_from_positions(const std::vector<std::vector<double>>& voters,
                                    const std::vector<std::vector<double>>& candidates,
                                    std::span<const double> weights) {
    const int n = static_cast<int>(voters.size());
    const int m = static_cast<int>(candidates.size());
    Electorate g(n, m);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            double sq = 0.0;
            for (std::size_t t = 0; t < weights.size(); ++t) {
                const double d = voters[i][t] - candidates[j][t];
                sq += weights[t] * d * d;
            }
            g(i, j) = -std::sqrt(sq);
        }
    }
    return g;
}

SpatialDraw sample_spatial_draw(int n, int m, int dimensions, Rng& rng) {
    if (dimensions < 1) {
        throw std::invalid_argument("spatial model needs at least one dimension");
    }
    std::normal_distribution<double> normal;
    SpatialDraw draw;
    draw.dimension_weights.assign(static_cast<std::size_t>(dimensions), 1.0);
    for (int i = 0; i < n; ++i) {
        draw.voter_positions.push_back(standard_normal_vector(dimensions, normal, rng));
    }
    for (int j = 0; j < m; ++j) {
        draw.candidate_positions.push_back(standard_normal_vector(dimensions, normal, rng));
    }
    draw.electorate = utilities_from_positions(draw.voter_positions, draw.candidate_positions, draw.dimension_weights);
    return draw;
}

Electorate sample_spatial(int n, int m, int dimensions, Rng& rng) {
    return sample_spatial_draw(n, m, dimensions, rng).electorate;
}

std::vector<double> stick_breaking_weights(double concentration, double tolerance, Rng& rng) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<double> weights;
    double remaining = 1.0;
    while (remaining >= tolerance && static_cast<int>(weights.size()) < kMaxDimensions) {
        // Beta(1, a) by inversion: 1 - U^(1/a).
        const double beta = 1.0 - std::pow(uniform(rng), 1.0 / concentration);
        const double w = beta * remaining;
        weights.push_back(w);
        remaining -= w;
    }
    return weights;
}

std::vector<int> chinese_restaurant_seating(int customers, double concentration, std::vector<int>& occupancy,
                                            Rng& rng) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    long seated = 0;
    for (int count : occupancy) {
        seated += count;
    }
    std::vector<int> tables;
    tables.reserve(static_cast<std::size_t>(customers));
    for (int c = 0; c < customers; ++c) {
        double r = uniform(rng) * (static_cast<double>(seated) + concentration);
        int table = static_cast<int>(occupancy.size());
        for (std::size_t t = 0; t < occupancy.size(); ++t) {
            r -= occupancy[t];
            if (r < 0) {
                table = static_cast<int>(t);
                break;
            }
        }
        if (table == static_cast<int>(occupancy.size())) {
            occupancy.push_back(0);
        }
        ++occupancy[table];
        ++seated;
        tables.push_back(table);
    }
    return tables;
}

SpatialDraw sample_clustered_draw(int n, int m, const ClusteredParams& params, Rng& rng) {
    std::normal_distribution<double> normal;
    SpatialDraw draw;
    draw.dimension_weights = stick_breaking_weights(params.dimension_concentration, params.stick_tolerance, rng);
    const int dims = static_cast<int>(draw.dimension_weights.size());

    std::vector<int> occupancy;
    const std::vector<int> voter_tables = chinese_restaurant_seating(n, params.cluster_concentration, occupancy, rng);
    const std::vector<int> candidate_tables =
        chinese_restaurant_seating(m, params.cluster_concentration, occupancy, rng);

    std::vector<std::vector<double>> centers;
    for (std::size_t t = 0; t < occupancy.size(); ++t) {
        centers.push_back(standard_normal_vector(dims, normal, rng));
    }
    auto member = [&](int table) {
        std::vector<double> x = centers[table];
        for (double& coord : x) {
            coord += params.cluster_spread * normal(rng);
        }
        return x;
    };
    for (int table : voter_tables) {
        draw.voter_positions.push_back(member(table));
    }
    for (int table : candidate_tables) {
        draw.candidate_positions.push_back(member(table));
    }
    draw.electorate = utilities_from_positions(draw.voter_positions, draw.candidate_positions, draw.dimension_weights);
    return draw;
}

Electorate sample_clustered(int n, int m, const ClusteredParams& params, Rng& rng) {
    return sample_clustered_draw(n, m, params, rng).electorate;
}

Electorate sample_electorate(const VoterModelSpec& spec, int n, int m, Rng& rng) {
    switch (spec.kind) {
        case VoterModelKind::impartial_culture: return sample_impartial_culture(n, m, rng);
        case VoterModelKind::spatial: return sample_spatial(n, m, spec.dimensions, rng);
        case VoterModelKind::clustered_spatial: return sample_clustered(n, m, spec.clustered, rng);
    }
    throw std::invalid_argument("unknown voter model");
}

}  // namespace cidsim
