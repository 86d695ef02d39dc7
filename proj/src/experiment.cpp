#include "cidsim/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>

namespace cidsim {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    return fmt::format("{:.10g}", v);
}

std::string grid_value(double v) { return fmt::format("{:g}", v); }

int count_for(double fraction, int n) {
    // Tolerance keeps e.g. 0.3 * 70 from rounding up past 21.
    return static_cast<int>(std::ceil(fraction * n - 1e-9));
}

json model_json(const VoterModelSpec& model) {
    json j{{"description", describe(model)}};
    switch (model.kind) {
        case VoterModelKind::impartial_culture: j["kind"] = "impartial_culture"; break;
        case VoterModelKind::spatial:
            j["kind"] = "spatial";
            j["dimensions"] = model.dimensions;
            break;
        case VoterModelKind::clustered_spatial:
            j["kind"] = "clustered_spatial";
            j["dimension_concentration"] = model.clustered.dimension_concentration;
            j["cluster_concentration"] = model.clustered.cluster_concentration;
            j["cluster_spread"] = model.clustered.cluster_spread;
            j["stick_tolerance"] = model.clustered.stick_tolerance;
            break;
    }
    return j;
}

json strategy_json(const StrategySpec& s) {
    return {{"kind", to_string(s.kind)}, {"z", s.z}, {"q", s.q}, {"poll_threshold", s.poll_threshold}};
}

json base_metadata(const ExperimentConfig& c) {
    json methods = json::array();
    for (VotingMethod m : c.methods) {
        methods.push_back(to_string(m));
    }
    json j{{"experiment", c.name},
           {"description", c.description},
           {"kind", to_string(c.kind)},
           {"version", std::string(version())},
           {"seed", c.seed},
           {"iterations", scaled_iterations(c)},
           {"configured_iterations", c.iterations},
           {"scale", c.scale},
           {"n", c.n},
           {"m", c.m_values},
           {"methods", methods},
           {"model", model_json(c.model)},
           {"noise_sd", c.noise_sd},
           {"win_probability_draws", c.win_probability_draws}};
    if (c.kind == ExperimentKind::cid) {
        j["K"] = c.K;
        j["sort_mode"] = to_string(c.sort_mode);
        j["epsilon_fraction"] = c.epsilon_fraction;
        j["calibration_samples"] = c.calibration_samples;
        j["strategy_mix"] = {{"honest", c.mix.honest},
                             {"viability_aware", c.mix.viability_aware},
                             {"bullet", c.mix.bullet}};
        if (c.sweep) {
            j["sweep"] = {{"parameter", to_string(c.sweep->parameter)}, {"values", c.sweep->values}};
        }
    } else {
        j["esif"] = {{"parameter", to_string(c.esif.parameter)},
                     {"focal", strategy_json(c.esif.focal)},
                     {"baseline", strategy_json(c.esif.baseline)},
                     {"focal_grid", c.esif.focal_grid},
                     {"focal_selection", c.esif.focal_selection == FocalSelection::cycle ? "cycle" : "every_voter"}};
        if (c.kind == ExperimentKind::esif_contour) {
            j["esif"]["electorate_grid"] = c.esif.electorate_grid;
        }
    }
    return j;
}

class OutputWriter {
public:
    explicit OutputWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) {
            throw std::runtime_error(fmt::format("cannot create output directory '{}': {}", dir_.string(), ec.message()));
        }
    }

    void csv(const std::string& name, const std::string& content, json extra = json::object()) {
        const auto path = dir_ / name;
        write(path, content);
        pending_.push_back({path, std::move(extra)});
    }

    // Sidecars are written last so they can carry the total wall time.
    std::vector<std::filesystem::path> finish(const json& metadata, double wall_time) {
        std::vector<std::filesystem::path> files;
        for (auto& [path, extra] : pending_) {
            json j = metadata;
            j["file"] = path.filename().string();
            j["wall_time_seconds"] = wall_time;
            j.update(extra);
            auto sidecar = path;
            sidecar.replace_extension(".json");
            write(sidecar, j.dump(2) + "\n");
            files.push_back(path);
            files.push_back(sidecar);
        }
        return files;
    }

private:
    static void write(const std::filesystem::path& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary);
        out << content;
        if (!out.flush()) {
            throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
        }
    }

    std::filesystem::path dir_;
    std::vector<std::pair<std::filesystem::path, json>> pending_;
};

CidConfig cid_config(const ExperimentConfig& c, VotingMethod method, int m, double epsilon,
                     const StrategyProfile& profile) {
    CidConfig cfg;
    cfg.method = method;
    cfg.profile = profile;
    cfg.n = c.n;
    cfg.m = m;
    cfg.K = c.K;
    cfg.epsilon = epsilon;
    cfg.sort_mode = c.sort_mode;
    cfg.model = c.model;
    cfg.noise_sd = c.noise_sd;
    cfg.win_probability_draws = c.win_probability_draws;
    cfg.iterations = scaled_iterations(c);
    cfg.seed = c.seed;
    cfg.workers = c.workers;
    return cfg;
}

EsifConfig esif_config(const ExperimentConfig& c, VotingMethod method) {
    EsifConfig cfg;
    cfg.method = method;
    cfg.focal = c.esif.focal;
    cfg.baseline = c.esif.baseline;
    cfg.n = c.n;
    cfg.m = c.m_values.front();
    cfg.model = c.model;
    cfg.noise_sd = c.noise_sd;
    cfg.win_probability_draws = c.win_probability_draws;
    cfg.iterations = scaled_iterations(c);
    cfg.seed = c.seed;
    cfg.workers = c.workers;
    cfg.focal_selection = c.esif.focal_selection;
    return cfg;
}

struct PlannedCell {
    VotingMethod method;
    int m;
    std::optional<double> sweep_value;
    StrategyMix mix;
    CidConfig config;
};

void run_cid_experiment(const ExperimentConfig& c, const CellCallback& on_cell, ExperimentOutput& out,
                        OutputWriter& writer, json& metadata) {
    std::map<int, double> epsilon;
    for (int m : c.m_values) {
        if (!epsilon.contains(m)) {
            epsilon[m] = calibrate_epsilon(c.model, m, c.epsilon_fraction, c.calibration_samples, c.seed);
        }
    }

    std::vector<std::pair<std::optional<double>, StrategyMix>> mixes;
    if (c.sweep) {
        for (double v : c.sweep->values) {
            mixes.emplace_back(v, mix_for(c.sweep->parameter, v));
        }
    } else {
        mixes.emplace_back(std::nullopt, c.mix);
    }

    std::vector<PlannedCell> plan;
    for (const auto& [value, mix] : mixes) {
        const StrategyProfile profile = assign_strategies(mix, c.n, c.seed);
        for (int m : c.m_values) {
            for (VotingMethod method : c.methods) {
                PlannedCell cell{method, m, value, mix, cid_config(c, method, m, epsilon[m], profile)};
                try {
                    validate(cell.config);
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(e.what());
                }
                plan.push_back(std::move(cell));
            }
        }
    }

    std::string cid_csv = "method,strategy_profile,m,K,bucket,x_percent,ci\n";
    std::string emu_csv = "method,strategy_profile,m,parameter,value,emu,stderr\n";
    json degenerate = json::array();
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const PlannedCell& p = plan[i];
        const std::string label = describe(p.mix);
        if (on_cell) {
            on_cell(fmt::format("{} m={} {}", to_string(p.method), p.m, label), static_cast<int>(i),
                    static_cast<int>(plan.size()));
        }
        const CidRun run = run_cid(p.config);
        CidCell cell{p.method, label, p.m, p.sweep_value, p.config.epsilon, {}, kNaN};
        try {
            cell.result = normalize_ci(run.total);
            cell.emu_standard_error = emu_standard_error(run.batches);
        } catch (const DegenerateCid&) {
            if (cell.result.ci.empty()) {
                cell.result.raw = run.total;
                cell.result.ci.assign(static_cast<std::size_t>(c.K), kNaN);
                for (int k = 0; k < c.K; ++k) {
                    cell.result.x.push_back(c.K == 1 ? 0.0 : static_cast<double>(k) / (c.K - 1));
                }
                cell.result.emu = kNaN;
                degenerate.push_back(fmt::format("{} m={} {}", to_string(p.method), p.m, label));
            }
        }

        const auto method = to_string(p.method);
        for (int k = 0; k < c.K; ++k) {
            cid_csv += fmt::format("{},{},{},{},{},{},{}\n", method, label, p.m, c.K, k + 1,
                                   number(100.0 * cell.result.x[k]), number(cell.result.ci[k]));
        }
        cid_csv += fmt::format("{},{},{},{},emu,,{}\n", method, label, p.m, c.K, number(cell.result.emu));
        const std::string parameter = c.sweep ? std::string(to_string(c.sweep->parameter)) : "m";
        const double value = p.sweep_value ? *p.sweep_value : static_cast<double>(p.m);
        emu_csv += fmt::format("{},{},{},{},{},{},{}\n", method, label, p.m, parameter, grid_value(value),
                               number(cell.result.emu), number(cell.emu_standard_error));
        out.cid.push_back(std::move(cell));
    }

    json eps = json::object();
    for (const auto& [m, value] : epsilon) {
        eps[std::to_string(m)] = value;
    }
    metadata["epsilon"] = eps;
    if (!degenerate.empty()) {
        metadata["degenerate_cells"] = degenerate;
    }
    writer.csv("cid.csv", cid_csv);
    writer.csv("emu.csv", emu_csv);
}

void run_esif_sweeps(const ExperimentConfig& c, const CellCallback& on_cell, ExperimentOutput& out,
                     OutputWriter& writer) {
    std::string csv = "method,parameter,value,esif,stderr\n";
    json argmax = json::object();
    const auto param = to_string(c.esif.parameter);
    for (std::size_t i = 0; i < c.methods.size(); ++i) {
        const VotingMethod method = c.methods[i];
        if (on_cell) {
            on_cell(fmt::format("{} {} sweep", to_string(method), param), static_cast<int>(i),
                    static_cast<int>(c.methods.size()));
        }
        EsifCurve curve{method, sweep_grid(c.esif.parameter, c.esif.focal_grid, esif_config(c, method))};
        for (const SweepRow& row : curve.rows) {
            csv += fmt::format("{},{},{},{},{}\n", to_string(method), param, grid_value(row.param),
                               number(row.result.ratio.value_or(kNaN)), number(row.result.standard_error));
        }
        const auto best = argmax_row(curve.rows);
        argmax[std::string(to_string(method))] = best ? json(curve.rows[*best].param) : json(nullptr);
        out.sweeps.push_back(std::move(curve));
    }
    writer.csv("esif.csv", csv, {{"argmax", argmax}});
}

void run_esif_contours(const ExperimentConfig& c, const CellCallback& on_cell, ExperimentOutput& out,
                       OutputWriter& writer) {
    const auto param = std::string(to_string(c.esif.parameter));
    for (std::size_t i = 0; i < c.methods.size(); ++i) {
        const VotingMethod method = c.methods[i];
        const auto name = std::string(to_string(method));
        if (on_cell) {
            on_cell(fmt::format("{} {} contour", name, param), static_cast<int>(i),
                    static_cast<int>(c.methods.size()));
        }
        EsifGrid grid{method, sweep_contour(c.esif.parameter, c.esif.focal_grid, c.esif.electorate_grid,
                                            esif_config(c, method))};
        const EsifContour& contour = grid.contour;

        // Rows: the focal voter's value. Columns: the electorate's value.
        std::string header = fmt::format("focal_{}", param);
        for (double e : contour.electorate_grid) {
            header += "," + grid_value(e);
        }
        std::string esif_csv = header + "\n";
        std::string stderr_csv = header + "\n";
        for (std::size_t f = 0; f < contour.focal_grid.size(); ++f) {
            esif_csv += grid_value(contour.focal_grid[f]);
            stderr_csv += grid_value(contour.focal_grid[f]);
            for (std::size_t e = 0; e < contour.electorate_grid.size(); ++e) {
                const EsifResult& r = contour.cells[e][f];
                esif_csv += "," + number(r.ratio.value_or(kNaN));
                stderr_csv += "," + number(r.standard_error);
            }
            esif_csv += "\n";
            stderr_csv += "\n";
        }
        std::string argmax_csv = fmt::format("electorate_{},best_focal_{}\n", param, param);
        for (std::size_t e = 0; e < contour.electorate_grid.size(); ++e) {
            argmax_csv += fmt::format("{},{}\n", grid_value(contour.electorate_grid[e]),
                                      number(contour.best_focal[e]));
        }
        const json stable = contour.stable_point ? json(*contour.stable_point) : json(nullptr);
        writer.csv(fmt::format("esif_contour_{}.csv", name), esif_csv, {{"stable_point", stable}});
        writer.csv(fmt::format("esif_contour_{}_stderr.csv", name), stderr_csv);
        writer.csv(fmt::format("esif_argmax_{}.csv", name), argmax_csv, {{"stable_point", stable}});
        out.contours.push_back(std::move(grid));
    }
}

}  // namespace

std::string_view version() {
#ifdef CIDSIM_VERSION
    return CIDSIM_VERSION;
#else
    return "unknown";
#endif
}

std::string describe(const StrategyMix& mix) {
    const std::pair<std::string_view, double> parts[] = {
        {"honest", mix.honest}, {"viability_aware", mix.viability_aware}, {"bullet", mix.bullet}};
    std::string out;
    int nonzero = 0;
    for (const auto& [name, f] : parts) {
        nonzero += f > 0.0 ? 1 : 0;
    }
    for (const auto& [name, f] : parts) {
        if (f <= 0.0) {
            continue;
        }
        if (!out.empty()) {
            out += '|';
        }
        out += nonzero == 1 ? std::string(name) : fmt::format("{}:{:g}", name, f);
    }
    return out;
}

StrategyMix mix_for(MixParameter parameter, double value) {
    switch (parameter) {
        case MixParameter::viability_aware_fraction: return {1.0 - value, value, 0.0};
        case MixParameter::bullet_fraction: return {1.0 - value, 0.0, value};
    }
    return {};
}

StrategyProfile assign_strategies(const StrategyMix& mix, int n, std::uint64_t seed) {
    const int va = std::min(n, count_for(mix.viability_aware, n));
    const int bullet = std::min(n - va, count_for(mix.bullet, n));
    if (va == 0 && bullet == 0) {
        return {};
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_stream(seed, 0, StreamPurpose::assignment);
    std::shuffle(order.begin(), order.end(), rng);
    StrategyProfile profile(static_cast<std::size_t>(n));
    for (int r = 0; r < va; ++r) {
        profile[order[r]].kind = StrategyKind::viability_aware;
    }
    for (int r = va; r < va + bullet; ++r) {
        profile[order[r]].kind = StrategyKind::bullet;
    }
    return profile;
}

ExperimentOutput run_experiment(const ExperimentConfig& config, const CellCallback& on_cell) {
    validate(config);
    const auto start = std::chrono::steady_clock::now();
    ExperimentOutput out;
    OutputWriter writer(config.output_dir);
    json metadata = base_metadata(config);
    switch (config.kind) {
        case ExperimentKind::cid: run_cid_experiment(config, on_cell, out, writer, metadata); break;
        case ExperimentKind::esif_sweep: run_esif_sweeps(config, on_cell, out, writer); break;
        case ExperimentKind::esif_contour: run_esif_contours(config, on_cell, out, writer); break;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.files = writer.finish(metadata, wall);
    return out;
}

}  // namespace cidsim
