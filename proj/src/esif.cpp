#include "cidsim/esif.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "cidsim/cid_engine.hpp"

namespace cidsim {

namespace {

// Per focal strategy, the sample averaged over the focal voters of one
// electorate.
std::vector<EsifSample> evaluate_electorate(const Electorate& g, VotingMethod method, const StrategySpec& baseline,
                                            std::span<const StrategySpec> focal, std::span<const int> focal_voters,
                                            double noise_sd, int draws, std::uint64_t seed,
                                            std::uint64_t iteration) {
    const int m = g.candidates();
    const auto base_p = iteration_win_probabilities(method, baseline, g, noise_sd, draws, seed, iteration);
    std::vector<std::optional<WinProbabilities>> focal_p;
    focal_p.reserve(focal.size());
    for (const StrategySpec& s : focal) {
        if (s == baseline) {
            focal_p.push_back(base_p);
        } else if (s.kind == StrategyKind::abstain) {
            focal_p.emplace_back();
        } else {
            focal_p.push_back(iteration_win_probabilities(method, s, g, noise_sd, draws, seed, iteration));
        }
    }

    std::vector<Ballot> ballots;
    ballots.reserve(static_cast<std::size_t>(g.voters()));
    for (int i = 0; i < g.voters(); ++i) {
        ballots.push_back(cast_ballot(method, baseline, g.row(i), base_p ? &*base_p : nullptr));
    }
    const CandidateIndex w = tabulate(method, ballots, m).winner();

    std::vector<EsifSample> out(focal.size());
    for (int voter : focal_voters) {
        const CandidateIndex w_abstain = tabulate_without(method, ballots, m, voter).winner();
        const auto u = g.row(voter);
        const Ballot original = ballots[voter];
        for (std::size_t f = 0; f < focal.size(); ++f) {
            CandidateIndex w_strategy = w_abstain;
            if (focal[f].kind != StrategyKind::abstain) {
                Ballot b = cast_ballot(method, focal[f], u, focal_p[f] ? &*focal_p[f] : nullptr);
                if (b == original) {
                    w_strategy = w;
                } else {
                    ballots[voter] = std::move(b);
                    w_strategy = tabulate(method, ballots, m).winner();
                    ballots[voter] = original;
                }
            }
            out[f].numerator += u[w_strategy] - u[w_abstain];
            out[f].denominator += u[w] - u[w_abstain];
        }
    }
    const auto count = static_cast<double>(focal_voters.size());
    for (EsifSample& s : out) {
        s.numerator /= count;
        s.denominator /= count;
    }
    return out;
}

// Runs `iterations` electorates and returns samples[iteration][focal].
std::vector<std::vector<EsifSample>> run_iterations(const EsifConfig& config, const StrategySpec& baseline,
                                                    std::span<const StrategySpec> focal) {
    std::vector<std::vector<EsifSample>> samples(static_cast<std::size_t>(config.iterations));
    std::atomic<std::int64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto work = [&] {
        try {
            std::vector<int> voters;
            while (!failed) {
                const std::int64_t it = next.fetch_add(1);
                if (it >= config.iterations) {
                    break;
                }
                const auto iteration = static_cast<std::uint64_t>(it);
                Rng rng = make_stream(config.seed, iteration, StreamPurpose::electorate);
                const Electorate g = sample_electorate(config.model, config.n, config.m, rng);
                voters.clear();
                if (config.focal_selection == FocalSelection::cycle) {
                    voters.push_back(static_cast<int>(it % config.n));
                } else {
                    for (int i = 0; i < config.n; ++i) {
                        voters.push_back(i);
                    }
                }
                samples[it] = evaluate_electorate(g, config.method, baseline, focal, voters, config.noise_sd,
                                                  config.win_probability_draws, config.seed, iteration);
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) {
                error = std::current_exception();
            }
            failed = true;
        }
    };

    const int workers = static_cast<int>(std::min<std::int64_t>(config.workers, config.iterations));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
    return samples;
}

std::vector<EsifResult> summarize_columns(const std::vector<std::vector<EsifSample>>& samples, std::size_t columns) {
    std::vector<EsifResult> results;
    std::vector<EsifSample> column(samples.size());
    for (std::size_t f = 0; f < columns; ++f) {
        for (std::size_t it = 0; it < samples.size(); ++it) {
            column[it] = samples[it][f];
        }
        results.push_back(summarize_esif(column));
    }
    return results;
}

}  // namespace

void validate(const EsifConfig& config) {
    if (config.n < 2) {
        throw std::invalid_argument("ESIF needs at least two voters");
    }
    if (config.m < 2 || config.m > kMaxCandidates) {
        throw std::invalid_argument("ESIF needs 2..16 candidates");
    }
    if (config.iterations < 1) {
        throw std::invalid_argument("iterations must be at least 1");
    }
    if (config.baseline.kind == StrategyKind::abstain) {
        throw std::invalid_argument("the baseline strategy cannot be abstention");
    }
    if (config.workers < 1) {
        throw std::invalid_argument("workers must be positive");
    }
    validate(config.model);
}

WinnerSet tabulate_without(VotingMethod method, std::span<const Ballot> ballots, int m, std::optional<int> absent) {
    if (!absent) {
        return tabulate(method, ballots, m);
    }
    std::vector<Ballot> remaining;
    remaining.reserve(ballots.size());
    for (std::size_t i = 0; i < ballots.size(); ++i) {
        if (static_cast<int>(i) != *absent) {
            remaining.push_back(ballots[i]);
        }
    }
    return tabulate(method, remaining, m);
}

std::vector<EsifSample> esif_samples(const Electorate& electorate, VotingMethod method, const StrategySpec& baseline,
                                     std::span<const StrategySpec> focal, int focal_voter, double noise_sd,
                                     int draws, std::uint64_t seed, std::uint64_t iteration) {
    const int voters[] = {focal_voter};
    return evaluate_electorate(electorate, method, baseline, focal, voters, noise_sd, draws, seed, iteration);
}

EsifResult summarize_esif(std::span<const EsifSample> per_iteration) {
    EsifResult result;
    result.samples = static_cast<std::int64_t>(per_iteration.size());
    if (per_iteration.empty()) {
        return result;
    }
    double numerator = 0.0;
    double denominator = 0.0;
    for (const EsifSample& s : per_iteration) {
        numerator += s.numerator;
        denominator += s.denominator;
    }
    const auto count = static_cast<double>(per_iteration.size());
    result.numerator_mean = numerator / count;
    result.denominator_mean = denominator / count;
    if (!(result.denominator_mean > 0.0)) {
        return result;
    }
    const double ratio = numerator / denominator;
    result.ratio = ratio;
    if (per_iteration.size() > 1) {
        // Delta method for a ratio of means.
        double ss = 0.0;
        for (const EsifSample& s : per_iteration) {
            const double d = s.numerator - ratio * s.denominator;
            ss += d * d;
        }
        result.standard_error = std::sqrt(ss / (count * (count - 1.0))) / result.denominator_mean;
    }
    return result;
}

EsifResult estimate_esif(const EsifConfig& config) {
    validate(config);
    const StrategySpec focal[] = {config.focal};
    return summarize_columns(run_iterations(config, config.baseline, focal), 1).front();
}

std::string_view to_string(StrategyParam param) {
    switch (param) {
        case StrategyParam::z: return "z";
        case StrategyParam::q: return "q";
        case StrategyParam::poll_threshold: return "poll_threshold";
    }
    return "unknown";
}

std::optional<StrategyParam> parse_strategy_param(std::string_view name) {
    for (auto p : {StrategyParam::z, StrategyParam::q, StrategyParam::poll_threshold}) {
        if (to_string(p) == name) {
            return p;
        }
    }
    return std::nullopt;
}

void set_param(StrategySpec& spec, StrategyParam param, double value) {
    switch (param) {
        case StrategyParam::z: spec.z = value; break;
        case StrategyParam::q: spec.q = value; break;
        case StrategyParam::poll_threshold: spec.poll_threshold = value; break;
    }
}

std::vector<SweepRow> sweep_grid(StrategyParam param, std::span<const double> grid, const EsifConfig& config) {
    validate(config);
    if (grid.empty()) {
        throw std::invalid_argument("sweep grid is empty");
    }
    std::vector<StrategySpec> focal;
    for (double value : grid) {
        StrategySpec s = config.focal;
        set_param(s, param, value);
        focal.push_back(s);
    }
    const auto results = summarize_columns(run_iterations(config, config.baseline, focal), focal.size());
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        rows.push_back({grid[i], results[i]});
    }
    return rows;
}

std::optional<std::size_t> argmax_row(std::span<const SweepRow> rows) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].result.ratio && (!best || *rows[i].result.ratio > *rows[*best].result.ratio)) {
            best = i;
        }
    }
    return best;
}

std::optional<double> diagonal_crossing(std::span<const double> x, std::span<const double> best) {
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double d0 = best[i] - x[i];
        const double d1 = best[i + 1] - x[i + 1];
        if (std::isnan(d0) || std::isnan(d1)) {
            continue;
        }
        if (d0 == 0.0) {
            return x[i];
        }
        if (d0 > 0.0 && d1 <= 0.0) {
            return x[i] + (x[i + 1] - x[i]) * d0 / (d0 - d1);
        }
    }
    if (!x.empty() && best.back() == x.back()) {
        return x.back();
    }
    return std::nullopt;
}

EsifContour sweep_contour(StrategyParam param, std::span<const double> focal_grid,
                          std::span<const double> electorate_grid, const EsifConfig& config) {
    validate(config);
    if (focal_grid.empty() || electorate_grid.empty()) {
        throw std::invalid_argument("sweep grid is empty");
    }
    EsifContour contour;
    contour.focal_grid.assign(focal_grid.begin(), focal_grid.end());
    contour.electorate_grid.assign(electorate_grid.begin(), electorate_grid.end());
    for (double e : electorate_grid) {
        EsifConfig column = config;
        set_param(column.baseline, param, e);
        set_param(column.focal, param, e);
        const auto rows = sweep_grid(param, focal_grid, column);
        std::vector<EsifResult> cells;
        for (const SweepRow& row : rows) {
            cells.push_back(row.result);
        }
        contour.cells.push_back(std::move(cells));
        const auto best = argmax_row(rows);
        contour.best_focal.push_back(best ? rows[*best].param : std::numeric_limits<double>::quiet_NaN());
    }
    contour.stable_point = diagonal_crossing(contour.electorate_grid, contour.best_focal);
    return contour;
}

}  // namespace cidsim
