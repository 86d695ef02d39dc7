#include <fmt/format.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "cidsim/experiment.hpp"

namespace cidsim {

namespace {

using boost::property_tree::ptree;

// Decoded right-hand side of `key = value`.
struct Value {
    enum class Type { string, number, boolean, array } type = Type::string;
    std::string text;
    std::vector<Value> items;
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// Drops a trailing `# comment` that is not inside a string.
std::string_view strip_comment(std::string_view s) {
    char quote = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char ch = s[i];
        if (quote != 0) {
            if (ch == '\\' && quote == '"') {
                ++i;
            } else if (ch == quote) {
                quote = 0;
            }
        } else if (ch == '"' || ch == '\'') {
            quote = ch;
        } else if (ch == '#') {
            return s.substr(0, i);
        }
    }
    return s;
}

Value decode(std::string_view raw, const std::string& key);

std::vector<std::string_view> split_items(std::string_view body, const std::string& key) {
    std::vector<std::string_view> items;
    char quote = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < body.size(); ++i) {
        const char ch = body[i];
        if (quote != 0) {
            if (ch == '\\' && quote == '"') {
                ++i;
            } else if (ch == quote) {
                quote = 0;
            }
        } else if (ch == '"' || ch == '\'') {
            quote = ch;
        } else if (ch == '[' || ch == ']') {
            throw ConfigError(fmt::format("{}: nested arrays are not supported", key));
        } else if (ch == ',') {
            items.push_back(trim(body.substr(start, i - start)));
            start = i + 1;
        }
    }
    if (quote != 0) {
        throw ConfigError(fmt::format("{}: unterminated string", key));
    }
    const auto last = trim(body.substr(start));
    if (!last.empty()) {
        items.push_back(last);
    }
    for (std::string_view item : items) {
        if (item.empty()) {
            throw ConfigError(fmt::format("{}: empty array element", key));
        }
    }
    return items;
}

std::string unescape(std::string_view body, const std::string& key) {
    std::string out;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] != '\\') {
            out += body[i];
            continue;
        }
        if (++i == body.size()) {
            throw ConfigError(fmt::format("{}: dangling escape", key));
        }
        switch (body[i]) {
            case '"': out += '"'; break;
            case '\\': out += '\\'; break;
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            default: throw ConfigError(fmt::format("{}: unsupported escape \\{}", key, body[i]));
        }
    }
    return out;
}

Value decode(std::string_view raw, const std::string& key) {
    const std::string_view s = trim(raw);
    if (s.empty()) {
        throw ConfigError(fmt::format("{}: missing value", key));
    }
    Value v;
    if (s.front() == '[') {
        if (s.back() != ']') {
            throw ConfigError(fmt::format("{}: arrays must be on one line", key));
        }
        v.type = Value::Type::array;
        for (std::string_view item : split_items(s.substr(1, s.size() - 2), key)) {
            v.items.push_back(decode(item, key));
        }
        return v;
    }
    if (s.front() == '"' || s.front() == '\'') {
        if (s.size() < 2 || s.back() != s.front()) {
            throw ConfigError(fmt::format("{}: unterminated string", key));
        }
        const auto body = s.substr(1, s.size() - 2);
        v.text = s.front() == '"' ? unescape(body, key) : std::string(body);
        return v;
    }
    if (s == "true" || s == "false") {
        v.type = Value::Type::boolean;
        v.text = s;
        return v;
    }
    v.type = Value::Type::number;
    for (char ch : s) {
        if (ch != '_') {
            v.text += ch;
        }
    }
    return v;
}

class Table {
public:
    Table(const ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

    bool has(const std::string& key) const { return tree_ != nullptr && tree_->find(key) != tree_->not_found(); }

    std::optional<Value> get(const std::string& key) {
        used_.insert(key);
        if (!has(key)) {
            return std::nullopt;
        }
        return decode(strip_comment(tree_->get<std::string>(key)), qualified(key));
    }

    std::optional<std::string> string(const std::string& key) {
        auto v = get(key);
        if (!v) {
            return std::nullopt;
        }
        if (v->type != Value::Type::string) {
            throw ConfigError(fmt::format("{}: expected a quoted string", qualified(key)));
        }
        return v->text;
    }

    std::optional<double> number(const std::string& key) {
        auto v = get(key);
        return v ? std::optional(to_double(*v, qualified(key))) : std::nullopt;
    }

    std::optional<std::int64_t> integer(const std::string& key) {
        auto v = get(key);
        return v ? std::optional(to_integer(*v, qualified(key))) : std::nullopt;
    }

    std::optional<std::vector<double>> numbers(const std::string& key) {
        auto v = get(key);
        if (!v) {
            return std::nullopt;
        }
        std::vector<double> out;
        for (const Value& item : as_array(*v, qualified(key))) {
            out.push_back(to_double(item, qualified(key)));
        }
        return out;
    }

    std::optional<std::vector<std::int64_t>> integers(const std::string& key) {
        auto v = get(key);
        if (!v) {
            return std::nullopt;
        }
        std::vector<std::int64_t> out;
        for (const Value& item : as_array(*v, qualified(key))) {
            out.push_back(to_integer(item, qualified(key)));
        }
        return out;
    }

    std::optional<std::vector<std::string>> strings(const std::string& key) {
        auto v = get(key);
        if (!v) {
            return std::nullopt;
        }
        std::vector<std::string> out;
        for (const Value& item : as_array(*v, qualified(key))) {
            if (item.type != Value::Type::string) {
                throw ConfigError(fmt::format("{}: expected quoted strings", qualified(key)));
            }
            out.push_back(item.text);
        }
        return out;
    }

    void reject_unknown() const {
        if (tree_ == nullptr) {
            return;
        }
        for (const auto& [key, child] : *tree_) {
            if (!child.empty()) {
                continue;  // sections are checked separately
            }
            if (!used_.contains(key)) {
                throw ConfigError(fmt::format("unknown key '{}'", qualified(key)));
            }
        }
    }

private:
    std::string qualified(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

    static const std::vector<Value>& as_array(const Value& v, const std::string& key) {
        if (v.type != Value::Type::array) {
            throw ConfigError(fmt::format("{}: expected an array", key));
        }
        return v.items;
    }

    static double to_double(const Value& v, const std::string& key) {
        if (v.type != Value::Type::number) {
            throw ConfigError(fmt::format("{}: expected a number", key));
        }
        double out = 0.0;
        const char* end = v.text.data() + v.text.size();
        auto [ptr, ec] = std::from_chars(v.text.data(), end, out);
        if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
            throw ConfigError(fmt::format("{}: '{}' is not a number", key, v.text));
        }
        return out;
    }

    static std::int64_t to_integer(const Value& v, const std::string& key) {
        if (v.type != Value::Type::number) {
            throw ConfigError(fmt::format("{}: expected an integer", key));
        }
        std::int64_t out = 0;
        const char* end = v.text.data() + v.text.size();
        auto [ptr, ec] = std::from_chars(v.text.data(), end, out);
        if (ec != std::errc() || ptr != end) {
            throw ConfigError(fmt::format("{}: '{}' is not an integer", key, v.text));
        }
        return out;
    }

    const ptree* tree_;
    std::string name_;
    std::set<std::string> used_;
};

int to_int(std::int64_t v, std::string_view key) {
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw ConfigError(fmt::format("{}: value out of range", key));
    }
    return static_cast<int>(v);
}

VotingMethod method_named(const std::string& name) {
    if (auto m = parse_voting_method(name)) {
        return *m;
    }
    throw ConfigError(fmt::format("unknown voting method '{}'", name));
}

StrategyKind strategy_named(const std::string& name) {
    if (auto s = parse_strategy_kind(name)) {
        return *s;
    }
    throw ConfigError(fmt::format("unknown strategy '{}'", name));
}

void apply_model(Table& t, VoterModelSpec& model) {
    if (auto kind = t.string("kind")) {
        if (*kind == "impartial_culture") {
            model.kind = VoterModelKind::impartial_culture;
        } else if (*kind == "spatial") {
            model.kind = VoterModelKind::spatial;
        } else if (*kind == "clustered_spatial") {
            model.kind = VoterModelKind::clustered_spatial;
        } else {
            throw ConfigError(fmt::format("unknown voter model '{}'", *kind));
        }
    }
    if (auto d = t.integer("dimensions")) {
        model.dimensions = to_int(*d, "model.dimensions");
    }
    if (auto v = t.number("dimension_concentration")) {
        model.clustered.dimension_concentration = *v;
    }
    if (auto v = t.number("cluster_concentration")) {
        model.clustered.cluster_concentration = *v;
    }
    if (auto v = t.number("cluster_spread")) {
        model.clustered.cluster_spread = *v;
    }
    if (auto v = t.number("stick_tolerance")) {
        model.clustered.stick_tolerance = *v;
    }
}

void apply_strategy_params(Table& t, StrategySpec& spec) {
    if (auto v = t.number("z")) {
        spec.z = *v;
    }
    if (auto v = t.number("q")) {
        spec.q = *v;
    }
    if (auto v = t.number("poll_threshold")) {
        spec.poll_threshold = *v;
    }
}

void apply_esif(Table& t, EsifSettings& esif) {
    if (auto p = t.string("parameter")) {
        auto parsed = parse_strategy_param(*p);
        if (!parsed) {
            throw ConfigError(fmt::format("unknown strategy parameter '{}'", *p));
        }
        esif.parameter = *parsed;
    }
    if (auto s = t.string("focal")) {
        esif.focal.kind = strategy_named(*s);
    }
    if (auto s = t.string("baseline")) {
        esif.baseline.kind = strategy_named(*s);
    }
    StrategySpec params;
    const bool any = t.has("z") || t.has("q") || t.has("poll_threshold");
    apply_strategy_params(t, params);
    if (any) {
        for (StrategySpec* spec : {&esif.focal, &esif.baseline}) {
            spec->z = params.z;
            spec->q = params.q;
            spec->poll_threshold = params.poll_threshold;
        }
    }
    if (auto g = t.numbers("focal_grid")) {
        esif.focal_grid = *g;
    }
    if (auto g = t.numbers("electorate_grid")) {
        esif.electorate_grid = *g;
    }
    if (auto s = t.string("focal_selection")) {
        if (*s == "cycle") {
            esif.focal_selection = FocalSelection::cycle;
        } else if (*s == "every_voter") {
            esif.focal_selection = FocalSelection::every_voter;
        } else {
            throw ConfigError(fmt::format("unknown focal selection '{}'", *s));
        }
    }
}

const ptree* section(const ptree& root, const std::string& name) {
    auto it = root.find(name);
    if (it == root.not_found()) {
        return nullptr;
    }
    if (it->second.empty()) {
        throw ConfigError(fmt::format("'{}' must be a [{}] table", name, name));
    }
    return &it->second;
}

ExperimentConfig from_tree(const ptree& root) {
    static const std::set<std::string> sections = {"strategy", "sweep", "model", "esif"};
    for (const auto& [key, child] : root) {
        if (!child.empty() && !sections.contains(key)) {
            throw ConfigError(fmt::format("unknown table [{}]", key));
        }
    }

    Table top(&root, "");
    ExperimentConfig c;
    if (auto preset = top.string("preset")) {
        auto p = make_preset(*preset);
        if (!p) {
            throw ConfigError(fmt::format("unknown preset '{}'", *preset));
        }
        c = *p;
    }
    if (auto v = top.string("name")) {
        c.name = *v;
    }
    if (auto v = top.string("description")) {
        c.description = *v;
    }
    if (auto v = top.string("kind")) {
        auto k = parse_experiment_kind(*v);
        if (!k) {
            throw ConfigError(fmt::format("unknown experiment kind '{}'", *v));
        }
        c.kind = *k;
    }
    if (auto v = top.strings("methods")) {
        c.methods.clear();
        for (const std::string& name : *v) {
            c.methods.push_back(method_named(name));
        }
    }
    if (auto v = top.integers("m")) {
        c.m_values.clear();
        for (std::int64_t m : *v) {
            c.m_values.push_back(to_int(m, "m"));
        }
    }
    if (auto v = top.integer("n")) {
        c.n = to_int(*v, "n");
    }
    if (auto v = top.integer("K")) {
        c.K = to_int(*v, "K");
    }
    if (auto v = top.integer("iterations")) {
        c.iterations = *v;
    }
    if (auto v = top.integer("seed")) {
        if (*v < 0) {
            throw ConfigError("seed must be non-negative");
        }
        c.seed = static_cast<std::uint64_t>(*v);
    }
    if (auto v = top.string("sort_mode")) {
        auto s = parse_sort_mode(*v);
        if (!s) {
            throw ConfigError(fmt::format("unknown sort mode '{}'", *v));
        }
        c.sort_mode = *s;
    }
    if (auto v = top.number("noise_sd")) {
        c.noise_sd = *v;
    }
    if (auto v = top.number("epsilon_fraction")) {
        c.epsilon_fraction = *v;
    }
    if (auto v = top.integer("calibration_samples")) {
        c.calibration_samples = to_int(*v, "calibration_samples");
    }
    if (auto v = top.integer("win_probability_draws")) {
        c.win_probability_draws = to_int(*v, "win_probability_draws");
    }
    if (auto v = top.string("output")) {
        c.output_dir = *v;
    }
    if (auto v = top.integer("workers")) {
        c.workers = to_int(*v, "workers");
    }
    if (auto v = top.number("scale")) {
        c.scale = *v;
    }
    top.reject_unknown();

    if (const ptree* s = section(root, "strategy")) {
        Table t(s, "strategy");
        StrategyMix mix{0.0, 0.0, 0.0};
        mix.honest = t.number("honest").value_or(0.0);
        mix.viability_aware = t.number("viability_aware").value_or(0.0);
        mix.bullet = t.number("bullet").value_or(0.0);
        t.reject_unknown();
        c.mix = mix;
    }
    if (const ptree* s = section(root, "sweep")) {
        Table t(s, "sweep");
        MixSweep sweep;
        auto p = t.string("parameter");
        if (!p) {
            throw ConfigError("sweep.parameter is required");
        }
        auto parsed = parse_mix_parameter(*p);
        if (!parsed) {
            throw ConfigError(fmt::format("unknown sweep parameter '{}'", *p));
        }
        sweep.parameter = *parsed;
        sweep.values = t.numbers("values").value_or(std::vector<double>{});
        t.reject_unknown();
        c.sweep = sweep;
    }
    if (const ptree* s = section(root, "model")) {
        Table t(s, "model");
        apply_model(t, c.model);
        t.reject_unknown();
    }
    if (const ptree* s = section(root, "esif")) {
        Table t(s, "esif");
        apply_esif(t, c.esif);
        t.reject_unknown();
    }
    return c;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::cid: return "cid";
        case ExperimentKind::esif_sweep: return "esif_sweep";
        case ExperimentKind::esif_contour: return "esif_contour";
    }
    return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
    for (auto k : {ExperimentKind::cid, ExperimentKind::esif_sweep, ExperimentKind::esif_contour}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    return std::nullopt;
}

std::string_view to_string(MixParameter parameter) {
    switch (parameter) {
        case MixParameter::viability_aware_fraction: return "viability_aware_fraction";
        case MixParameter::bullet_fraction: return "bullet_fraction";
    }
    return "unknown";
}

std::optional<MixParameter> parse_mix_parameter(std::string_view name) {
    for (auto p : {MixParameter::viability_aware_fraction, MixParameter::bullet_fraction}) {
        if (to_string(p) == name) {
            return p;
        }
    }
    return std::nullopt;
}

ExperimentConfig parse_config(std::string_view text) {
    ptree root;
    std::istringstream in{std::string(text)};
    try {
        boost::property_tree::read_ini(in, root);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
    }
    return from_tree(root);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("cannot read config file '{}'", path.string()));
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

void validate(const ExperimentConfig& c) {
    auto fail = [](std::string message) { throw ConfigError(std::move(message)); };
    if (c.methods.empty()) {
        fail("at least one voting method is required");
    }
    if (c.iterations < 1) {
        fail("iterations must be at least 1");
    }
    if (!(c.scale >= 1.0) || !std::isfinite(c.scale)) {
        fail("scale must be a finite number >= 1");
    }
    if (c.workers < 1) {
        fail("workers must be positive");
    }
    if (!(c.noise_sd >= 0.0) || !std::isfinite(c.noise_sd)) {
        fail("noise_sd must be non-negative");
    }
    if (c.win_probability_draws < 1) {
        fail("win_probability_draws must be positive");
    }
    try {
        validate(c.model);
    } catch (const std::invalid_argument& e) {
        fail(fmt::format("voter model: {}", e.what()));
    }

    if (c.kind == ExperimentKind::cid) {
        if (c.m_values.empty()) {
            fail("at least one candidate count is required");
        }
        for (int m : c.m_values) {
            if (m < 2 || m > kMaxCandidates) {
                fail(fmt::format("candidate count {} outside 2..{}", m, kMaxCandidates));
            }
        }
        if (c.n < 1 || c.K < 1 || c.n % c.K != 0) {
            fail(fmt::format("K = {} must divide n = {}", c.K, c.n));
        }
        const double fractions[] = {c.mix.honest, c.mix.viability_aware, c.mix.bullet};
        for (double f : fractions) {
            if (!(f >= 0.0 && f <= 1.0)) {
                fail("strategy fractions must lie in [0, 1]");
            }
        }
        if (std::abs(c.mix.honest + c.mix.viability_aware + c.mix.bullet - 1.0) > 1e-9) {
            fail("strategy fractions must sum to 1");
        }
        if (!(c.epsilon_fraction > 0.0) || !std::isfinite(c.epsilon_fraction)) {
            fail("epsilon_fraction must be positive");
        }
        if (c.calibration_samples < 1000) {
            fail("calibration_samples must be at least 1000");
        }
        if (c.sweep) {
            if (c.sweep->values.empty()) {
                fail("sweep.values must not be empty");
            }
            for (double v : c.sweep->values) {
                if (!(v >= 0.0 && v <= 1.0)) {
                    fail("sweep values must lie in [0, 1]");
                }
            }
        }
        const bool viability_aware = c.mix.viability_aware > 0.0 ||
                                     (c.sweep && c.sweep->parameter == MixParameter::viability_aware_fraction);
        if (viability_aware && !(c.noise_sd > 0.0 && 2.0 * c.noise_sd < 1.0)) {
            fail("viability-aware voters need 0 < noise_sd < 0.5");
        }
        return;
    }

    if (c.m_values.size() != 1) {
        fail("ESIF experiments take exactly one candidate count");
    }
    if (c.m_values.front() < 2 || c.m_values.front() > kMaxCandidates) {
        fail(fmt::format("candidate count {} outside 2..{}", c.m_values.front(), kMaxCandidates));
    }
    if (c.n < 2) {
        fail("ESIF needs at least two voters");
    }
    if (c.esif.focal_grid.empty()) {
        fail("esif.focal_grid must not be empty");
    }
    if (c.kind == ExperimentKind::esif_contour && c.esif.electorate_grid.empty()) {
        fail("esif.electorate_grid must not be empty");
    }
    if (c.esif.baseline.kind == StrategyKind::abstain) {
        fail("the ESIF baseline cannot be abstention");
    }
    const bool viability_aware = c.esif.focal.kind == StrategyKind::viability_aware ||
                                 c.esif.baseline.kind == StrategyKind::viability_aware;
    if (viability_aware && !(c.noise_sd > 0.0 && 2.0 * c.noise_sd < 1.0)) {
        fail("viability-aware voters need 0 < noise_sd < 0.5");
    }
}

std::int64_t scaled_iterations(const ExperimentConfig& config) {
    return std::max<std::int64_t>(1, std::llround(static_cast<double>(config.iterations) / config.scale));
}

}  // namespace cidsim
