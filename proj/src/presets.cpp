#include <fmt/format.h>

#include <array>
#include <cmath>
#include <string>

#include "cidsim/experiment.hpp"

namespace cidsim {

namespace {

std::vector<double> grid(double first, double last, double step) {
    std::vector<double> out;
    const auto count = static_cast<int>(std::lround((last - first) / step));
    for (int i = 0; i <= count; ++i) {
        // Snap to 1e-9 so 0.1 * 3 prints as 0.3.
        out.push_back(std::round((first + step * i) * 1e9) / 1e9);
    }
    return out;
}

ExperimentConfig honest_cid(std::string name, std::string description, std::int64_t iterations) {
    ExperimentConfig c;
    c.name = std::move(name);
    c.description = std::move(description);
    c.iterations = iterations;
    return c;
}

ExperimentConfig esif_base(std::string name, std::string description, std::int64_t iterations) {
    ExperimentConfig c;
    c.name = std::move(name);
    c.description = std::move(description);
    c.n = 31;
    c.K = 1;
    c.iterations = iterations;
    return c;
}

ExperimentConfig build(std::string_view name) {
    if (name == "fig4.1") {
        return honest_cid("fig4.1", "honest voters, 5 candidates, 100,000 iterations", 100000);
    }
    if (name == "fig4.2") {
        auto c = honest_cid("fig4.2", "honest voters, 3 candidates, 50,000 iterations", 50000);
        c.m_values = {3};
        return c;
    }
    if (name == "fig4.3") {
        auto c = honest_cid("fig4.3", "honest voters, 10 candidates, 50,000 iterations", 50000);
        c.m_values = {10};
        return c;
    }
    if (name == "fig4.4") {
        auto c = honest_cid("fig4.4", "EMU vs m ∈ {3..10}, 25,000 iterations", 25000);
        c.m_values = {3, 4, 5, 6, 7, 8, 9, 10};
        return c;
    }
    if (name == "fig5.1") {
        auto c = honest_cid("fig5.1", "viability-aware voters, 5 candidates, 50,000 iterations", 50000);
        c.mix = {0.0, 1.0, 0.0};
        return c;
    }
    if (name == "fig5.2") {
        auto c = honest_cid("fig5.2", "EMU vs % viability-aware voters {0, 10, ..., 100}, 5 candidates, 10,000 iterations",
                            10000);
        c.sweep = MixSweep{MixParameter::viability_aware_fraction, grid(0.0, 1.0, 0.1)};
        return c;
    }
    if (name == "fig6.1") {
        auto c = honest_cid("fig6.1", "71% honest, 29% dogmatic bullet voters, 5 candidates, 100,000 iterations",
                            100000);
        c.mix = {0.71, 0.0, 0.29};
        return c;
    }
    if (name == "fig6.2") {
        auto c = honest_cid("fig6.2", "EMU vs % bullet voters {0, 10, ..., 100}, 5 candidates, 25,000 iterations",
                            25000);
        c.sweep = MixSweep{MixParameter::bullet_fraction, grid(0.0, 1.0, 0.1)};
        return c;
    }
    if (name == "figA.1" || name == "figA.2") {
        const bool top2 = name == "figA.2";
        auto c = esif_base(std::string(name),
                           top2 ? "ESIF contour of approval threshold z, Approval Top 2, 5 candidates, 31 voters, "
                                  "15,000 iterations"
                                : "ESIF contour of approval threshold z, Approval, 5 candidates, 31 voters, "
                                  "15,000 iterations",
                           15000);
        c.kind = ExperimentKind::esif_contour;
        c.methods = {top2 ? VotingMethod::approval_top2 : VotingMethod::approval};
        c.esif.parameter = StrategyParam::z;
        c.esif.focal_grid = grid(0.0, 1.0, 0.05);
        c.esif.electorate_grid = grid(0.0, 1.0, 0.05);
        return c;
    }
    if (name == "figA.3") {
        auto c = esif_base("figA.3", "ESIF of viability-aware STAR q against honest voters, 31 voters, 250,000 iterations",
                           250000);
        c.kind = ExperimentKind::esif_sweep;
        c.methods = {VotingMethod::star};
        c.esif.parameter = StrategyParam::q;
        c.esif.focal.kind = StrategyKind::viability_aware;
        c.esif.focal_grid = grid(0.0, 0.5, 0.05);
        return c;
    }
    if (name == "figA.4") {
        auto c = esif_base("figA.4",
                           "ESIF of viability-aware poll threshold for Plurality Top 2, Approval Top 2, IRV, "
                           "31 voters, 100,000 iterations",
                           100000);
        c.kind = ExperimentKind::esif_sweep;
        c.methods = {VotingMethod::plurality_top2, VotingMethod::approval_top2, VotingMethod::irv};
        c.esif.parameter = StrategyParam::poll_threshold;
        c.esif.focal.kind = StrategyKind::viability_aware;
        c.esif.focal_grid = grid(0.0, 0.4, 0.025);
        return c;
    }
    if (name == "figB.1") {
        auto c = honest_cid("figB.1", "impartial culture, 5 candidates, honest voters, 50,000 iterations", 50000);
        c.model = VoterModelSpec::impartial_culture();
        return c;
    }
    if (name == "figB.2" || name == "figB.3" || name == "figB.4") {
        const int d = name.back() - '1';
        static constexpr std::array words = {"one", "two", "three"};
        auto c = honest_cid(std::string(name),
                            fmt::format("{}-dimensional spatial model, 5 candidates, honest voters, 50,000 iterations",
                                        words[d - 1]),
                            50000);
        c.model = VoterModelSpec::spatial(d);
        return c;
    }
    if (name == "figB.5") {
        auto c = honest_cid("figB.5", "unnormalized mean sorting, 5 candidates, honest voters, 50,000 iterations", 50000);
        c.sort_mode = SortMode::unnormalized_mean;
        return c;
    }
    if (name == "figB.6") {
        auto c = honest_cid("figB.6", "distance from top sorting, 5 candidates, honest voters, 50,000 iterations", 50000);
        c.sort_mode = SortMode::distance_from_top;
        return c;
    }
    if (name == "figB.7") {
        auto c = honest_cid("figB.7", "720 honest voters, 5 candidates, 25,000 iterations", 25000);
        c.n = 720;
        return c;
    }
    throw ConfigError(fmt::format("unknown preset '{}'", name));
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"fig4.1", "fig4.2", "fig4.3", "fig4.4", "fig5.1", "fig5.2", "fig6.1", "fig6.2", "figA.1", "figA.2",
            "figA.3", "figA.4", "figB.1", "figB.2", "figB.3", "figB.4", "figB.5", "figB.6", "figB.7"};
}

std::optional<ExperimentConfig> make_preset(std::string_view name) {
    for (const std::string& known : preset_names()) {
        if (known == name) {
            ExperimentConfig c = build(name);
            c.output_dir = std::filesystem::path("results") / c.name;
            return c;
        }
    }
    return std::nullopt;
}

std::string list_presets() {
    std::string out;
    for (const std::string& name : preset_names()) {
        out += fmt::format("{}: {}\n", name, build(name).description);
    }
    return out;
}

}  // namespace cidsim
