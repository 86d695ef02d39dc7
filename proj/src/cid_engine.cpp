#include "cidsim/cid_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace cidsim {

namespace {

std::uint32_t method_stream(VotingMethod method) {
    return static_cast<std::uint32_t>(method);
}

const StrategySpec* first_viability_aware(std::span<const StrategySpec> profile) {
    for (const StrategySpec& spec : profile) {
        if (spec.kind == StrategyKind::viability_aware) {
            return &spec;
        }
    }
    return nullptr;
}

UciTally difference(const UciTally& total, const UciTally& part) {
    UciTally out = total;
    for (std::size_t k = 0; k < out.buckets.size(); ++k) {
        auto& b = out.buckets[k];
        const auto& p = part.buckets[k];
        b.win_to_lose_minus -= p.win_to_lose_minus;
        b.lose_to_win_plus -= p.lose_to_win_plus;
        b.win_to_lose_plus -= p.win_to_lose_plus;
        b.lose_to_win_minus -= p.lose_to_win_minus;
    }
    out.trials -= part.trials;
    return out;
}

std::vector<double> jackknife_replicates(std::span<const UciTally> batches) {
    UciTally total(batches.front().bucket_count());
    for (const UciTally& b : batches) {
        total += b;
    }
    std::vector<double> replicates;
    replicates.reserve(batches.size());
    for (const UciTally& b : batches) {
        replicates.push_back(normalize_ci(difference(total, b)).emu);
    }
    return replicates;
}

double jackknife_error(std::span<const double> replicates) {
    const auto count = static_cast<double>(replicates.size());
    if (replicates.size() < 2) {
        return 0.0;
    }
    const double mean = std::accumulate(replicates.begin(), replicates.end(), 0.0) / count;
    double ss = 0.0;
    for (double r : replicates) {
        ss += (r - mean) * (r - mean);
    }
    return std::sqrt((count - 1.0) / count * ss);
}

}  // namespace

std::string_view to_string(SortMode mode) {
    switch (mode) {
        case SortMode::normalized_mean: return "normalized_mean";
        case SortMode::unnormalized_mean: return "unnormalized_mean";
        case SortMode::distance_from_top: return "distance_from_top";
    }
    return "unknown";
}

std::optional<SortMode> parse_sort_mode(std::string_view name) {
    for (auto mode : {SortMode::normalized_mean, SortMode::unnormalized_mean, SortMode::distance_from_top}) {
        if (to_string(mode) == name) {
            return mode;
        }
    }
    return std::nullopt;
}

BucketCounts& BucketCounts::operator+=(const BucketCounts& other) {
    win_to_lose_minus += other.win_to_lose_minus;
    lose_to_win_plus += other.lose_to_win_plus;
    win_to_lose_plus += other.win_to_lose_plus;
    lose_to_win_minus += other.lose_to_win_minus;
    return *this;
}

double UciTally::uci(int k) const {
    if (trials == 0) {
        return 0.0;
    }
    return static_cast<double>(buckets[k].net()) / static_cast<double>(trials);
}

UciTally& UciTally::operator+=(const UciTally& other) {
    if (buckets.size() != other.buckets.size()) {
        throw std::invalid_argument("cannot merge tallies with different bucket counts");
    }
    for (std::size_t k = 0; k < buckets.size(); ++k) {
        buckets[k] += other.buckets[k];
    }
    trials += other.trials;
    return *this;
}

void validate(const CidConfig& config) {
    if (config.n < 1 || config.m < 1 || config.m > kMaxCandidates) {
        throw std::invalid_argument("need n >= 1 and 1 <= m <= 16");
    }
    if (config.K < 1 || config.n % config.K != 0) {
        throw std::invalid_argument("K must divide n");
    }
    if (!(config.epsilon > 0.0) || !std::isfinite(config.epsilon)) {
        throw std::invalid_argument("epsilon must be positive");
    }
    if (config.iterations < 1) {
        throw std::invalid_argument("iterations must be at least 1");
    }
    if (!config.profile.empty() && static_cast<int>(config.profile.size()) != config.n) {
        throw std::invalid_argument("strategy profile must have one entry per voter");
    }
    for (const StrategySpec& spec : config.profile) {
        if (spec.kind == StrategyKind::abstain) {
            throw std::invalid_argument("abstention is not a CID strategy");
        }
    }
    if (const StrategySpec* va = first_viability_aware(config.profile);
        va != nullptr && config.method != VotingMethod::minimax) {
        const double moe = strategy_margin_of_error(config.method, config.noise_sd);
        if (!(moe > 0.0 && moe < 1.0)) {
            throw std::invalid_argument("viability-aware voters need poll noise with margin of error in (0, 1)");
        }
        for (const StrategySpec& spec : config.profile) {
            if (spec.kind == StrategyKind::viability_aware && !(spec == *va)) {
                throw std::invalid_argument("viability-aware voters in one run must share parameters");
            }
        }
    }
    if (config.workers < 1 || config.batches < 1) {
        throw std::invalid_argument("workers and batches must be positive");
    }
    validate(config.model);
}

double utility_spread(std::span<const double> u) {
    const double mean = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(u.size());
    double ss = 0.0;
    for (double x : u) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(u.size() - (u.size() > 1 ? 1 : 0)));
}

double support_key(std::span<const double> u, CandidateIndex c, SortMode mode) {
    switch (mode) {
        case SortMode::normalized_mean: {
            const double sd = utility_spread(u);
            if (sd == 0.0) {
                return 0.0;
            }
            const double mean = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(u.size());
            return (u[c] - mean) / sd;
        }
        case SortMode::unnormalized_mean: {
            const double mean = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(u.size());
            return u[c] - mean;
        }
        case SortMode::distance_from_top: {
            if (u.size() < 2) {
                return 0.0;
            }
            double best_other = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < u.size(); ++j) {
                if (static_cast<CandidateIndex>(j) != c) {
                    best_other = std::max(best_other, u[j]);
                }
            }
            return u[c] - best_other;
        }
    }
    throw std::invalid_argument("unknown sort mode");
}

std::vector<int> sort_permutation(const Electorate& electorate, CandidateIndex c, SortMode mode) {
    if (c < 0 || c >= electorate.candidates()) {
        throw std::invalid_argument("candidate index out of range");
    }
    const int n = electorate.voters();
    std::vector<double> keys(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        keys[i] = support_key(electorate.row(i), c, mode);
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return keys[a] < keys[b]; });
    return order;
}

std::vector<Ballot> cast_ballots(const Electorate& electorate, const BallotSetup& setup) {
    const int n = electorate.voters();
    const WinProbabilities* p = setup.win_probabilities ? &*setup.win_probabilities : nullptr;
    std::vector<Ballot> ballots;
    ballots.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const StrategySpec spec = setup.profile.empty() ? StrategySpec{} : setup.profile[i];
        ballots.push_back(cast_ballot(setup.method, spec, electorate.row(i), p));
    }
    return ballots;
}

namespace {

Ballot recast(const Electorate& electorate, const BallotSetup& setup, int voter, CandidateIndex c, double delta) {
    std::array<double, kMaxCandidates> row{};
    const auto u = electorate.row(voter);
    std::copy(u.begin(), u.end(), row.begin());
    row[c] += delta;
    const StrategySpec spec = setup.profile.empty() ? StrategySpec{} : setup.profile[voter];
    const WinProbabilities* p = setup.win_probabilities ? &*setup.win_probabilities : nullptr;
    return cast_ballot(setup.method, spec, std::span<const double>(row.data(), u.size()), p);
}

}  // namespace

std::vector<Ballot> perturbed_ballots(const Electorate& electorate, const BallotSetup& setup,
                                      std::span<const Ballot> baseline, std::span<const int> voters,
                                      CandidateIndex c, double delta) {
    std::vector<Ballot> ballots(baseline.begin(), baseline.end());
    for (int voter : voters) {
        ballots[voter] = recast(electorate, setup, voter, c, delta);
    }
    return ballots;
}

UciTally tally_electorate(const Electorate& electorate, const BallotSetup& setup,
                          const PerturbationSetup& perturbation) {
    const int n = electorate.voters();
    const int m = electorate.candidates();
    const int K = perturbation.K;
    if (K < 1 || n % K != 0) {
        throw std::invalid_argument("K must divide n");
    }
    const int bucket_size = n / K;
    const std::vector<Ballot> baseline = cast_ballots(electorate, setup);
    const WinnerSet base_winners = tabulate(setup.method, baseline, m);

    UciTally tally(K);
    tally.trials = m;
    std::vector<Ballot> work = baseline;
    for (CandidateIndex c = 0; c < m; ++c) {
        const bool base_wins = base_winners.contains(c);
        const std::vector<int> order = sort_permutation(electorate, c, perturbation.sort_mode);
        for (int k = 0; k < K; ++k) {
            const std::span<const int> bucket(order.data() + static_cast<std::ptrdiff_t>(k) * bucket_size,
                                              static_cast<std::size_t>(bucket_size));
            for (const double delta : {-perturbation.epsilon, perturbation.epsilon}) {
                bool changed = false;
                for (int voter : bucket) {
                    Ballot b = recast(electorate, setup, voter, c, delta);
                    if (!(b == baseline[voter])) {
                        work[voter] = std::move(b);
                        changed = true;
                    }
                }
                if (!changed) {
                    continue;
                }
                const bool wins = tabulate(setup.method, work, m).contains(c);
                for (int voter : bucket) {
                    work[voter] = baseline[voter];
                }
                BucketCounts& counts = tally.buckets[k];
                if (delta < 0) {
                    counts.win_to_lose_minus += base_wins && !wins;
                    counts.lose_to_win_minus += !base_wins && wins;
                } else {
                    counts.lose_to_win_plus += !base_wins && wins;
                    counts.win_to_lose_plus += base_wins && !wins;
                }
            }
        }
    }
    return tally;
}

std::optional<WinProbabilities> iteration_win_probabilities(VotingMethod method, const StrategySpec& spec,
                                                            const Electorate& electorate, double noise_sd,
                                                            int draws, std::uint64_t seed,
                                                            std::uint64_t iteration) {
    if (spec.kind != StrategyKind::viability_aware || method == VotingMethod::minimax) {
        return std::nullopt;
    }
    const PollSpec poll_spec = strategy_poll(method, spec, noise_sd);
    Rng poll_rng = make_stream(seed, iteration, StreamPurpose::poll_noise, method_stream(method));
    const Poll poll = run_poll(poll_spec, electorate, poll_rng);
    Rng draw_rng = make_stream(seed, iteration, StreamPurpose::win_probability, method_stream(method));
    return win_probabilities(poll, strategy_margin_of_error(method, noise_sd), draws, draw_rng);
}

CidRun run_cid(const CidConfig& config, const ProgressCallback& progress) {
    validate(config);
    const StrategySpec* va = first_viability_aware(config.profile);
    const PerturbationSetup perturbation{config.K, config.epsilon, config.sort_mode};
    const int batches = static_cast<int>(std::min<std::int64_t>(config.batches, config.iterations));
    const int workers = static_cast<int>(std::min<std::int64_t>(config.workers, config.iterations));

    std::vector<std::vector<UciTally>> partial(static_cast<std::size_t>(workers),
                                               std::vector<UciTally>(static_cast<std::size_t>(batches),
                                                                     UciTally(config.K)));
    std::atomic<std::int64_t> next{0};
    std::atomic<std::int64_t> done{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::mutex progress_mutex;

    auto work = [&](int worker) {
        try {
            while (!failed) {
                const std::int64_t it = next.fetch_add(1);
                if (it >= config.iterations) {
                    break;
                }
                Rng rng = make_stream(config.seed, static_cast<std::uint64_t>(it), StreamPurpose::electorate);
                const Electorate electorate = sample_electorate(config.model, config.n, config.m, rng);
                BallotSetup setup{config.method, config.profile, std::nullopt};
                if (va != nullptr) {
                    setup.win_probabilities =
                        iteration_win_probabilities(config.method, *va, electorate, config.noise_sd,
                                                    config.win_probability_draws, config.seed,
                                                    static_cast<std::uint64_t>(it));
                }
                const auto batch = static_cast<std::size_t>(it * batches / config.iterations);
                partial[worker][batch] += tally_electorate(electorate, setup, perturbation);
                const std::int64_t finished = ++done;
                if (progress) {
                    std::lock_guard lock(progress_mutex);
                    progress(finished, config.iterations);
                }
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) {
                error = std::current_exception();
            }
            failed = true;
        }
    };

    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(work, w);
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }

    CidRun run{UciTally(config.K), std::vector<UciTally>(static_cast<std::size_t>(batches), UciTally(config.K))};
    for (const auto& worker_batches : partial) {
        for (int b = 0; b < batches; ++b) {
            run.batches[b] += worker_batches[b];
        }
    }
    for (const UciTally& b : run.batches) {
        run.total += b;
    }
    return run;
}

UciTally estimate_uci(const CidConfig& config) {
    return run_cid(config).total;
}

CidResult normalize_ci(const UciTally& tally) {
    const int K = tally.bucket_count();
    double total = 0.0;
    for (int k = 0; k < K; ++k) {
        total += tally.uci(k);
    }
    if (!(total > 0.0)) {
        throw DegenerateCid("degenerate CID: total UCI is not positive", tally);
    }
    CidResult result;
    result.raw = tally;
    for (int k = 0; k < K; ++k) {
        result.ci.push_back(K * tally.uci(k) / total);
        result.x.push_back(K == 1 ? 0.0 : static_cast<double>(k) / (K - 1));
    }
    result.emu = emu(result.ci);
    return result;
}

double emu(std::span<const double> ci) {
    const auto K = static_cast<double>(ci.size());
    double carried = 0.0;
    double cost = 0.0;
    for (double c : ci) {
        carried += c - 1.0;
        cost += std::abs(carried);
    }
    return cost / (K * K);
}

double emu_standard_error(std::span<const UciTally> batches) {
    if (batches.size() < 2) {
        return 0.0;
    }
    const std::vector<double> replicates = jackknife_replicates(batches);
    return jackknife_error(replicates);
}

double emu_difference_standard_error(std::span<const UciTally> a, std::span<const UciTally> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("paired runs must use the same batches");
    }
    if (a.size() < 2) {
        return 0.0;
    }
    const std::vector<double> ra = jackknife_replicates(a);
    const std::vector<double> rb = jackknife_replicates(b);
    std::vector<double> diff(ra.size());
    std::transform(ra.begin(), ra.end(), rb.begin(), diff.begin(), std::minus<>());
    return jackknife_error(diff);
}

double calibrate_epsilon(const VoterModelSpec& model, int m, double target_fraction, int samples,
                         std::uint64_t seed) {
    if (samples < 1000) {
        throw std::invalid_argument("epsilon calibration needs at least 1000 sampled voters");
    }
    constexpr int kVotersPerElectorate = 72;
    double total = 0.0;
    int counted = 0;
    for (std::uint64_t draw = 0; counted < samples; ++draw) {
        Rng rng = make_stream(seed, draw, StreamPurpose::calibration);
        const Electorate g = sample_electorate(model, kVotersPerElectorate, m, rng);
        for (int i = 0; i < g.voters() && counted < samples; ++i, ++counted) {
            total += utility_spread(g.row(i));
        }
    }
    const double mean_spread = total / counted;
    if (!(mean_spread > 0.0)) {
        throw std::invalid_argument("voter model has zero utility variance");
    }
    return target_fraction * mean_spread;
}

}  // namespace cidsim
