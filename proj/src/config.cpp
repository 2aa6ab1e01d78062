#include "nlk/config.hpp"

#include "nlk/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace nlk {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const char* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end || !std::isfinite(out))
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    return out;
}

long to_long(const std::string& key, const std::string& value) {
    const double x = to_double(key, value);
    if (x != std::floor(x) || std::abs(x) > 9e15)
        throw ConfigError(key + ": expected an integer, got '" + value + "'");
    return static_cast<long>(x);
}

std::size_t to_count(const std::string& key, const std::string& value) {
    const long x = to_long(key, value);
    if (x < 0)
        throw ConfigError(key + ": must be non-negative, got '" + value + "'");
    return static_cast<std::size_t>(x);
}

bool to_bool(const std::string& key, std::string value) {
    std::transform(value.begin(), value.end(), value.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (value == "1" || value == "true" || value == "yes" || value == "on")
        return true;
    if (value == "0" || value == "false" || value == "no" || value == "off")
        return false;
    throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

std::vector<std::string> to_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
        if (auto t = trim(item); !t.empty())
            out.push_back(t);
    return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& item : to_list(value))
        out.push_back(to_double(key, item));
    if (out.empty())
        throw ConfigError(key + ": expected a comma-separated list of numbers");
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"model.A", [](RunConfig& c, auto& k, auto& v) { c.params.A = to_double(k, v); }},
        {"model.B", [](RunConfig& c, auto& k, auto& v) { c.params.B = to_double(k, v); }},
        {"model.d_v", [](RunConfig& c, auto& k, auto& v) { c.params.d_v = to_double(k, v); }},
        {"model.d_w", [](RunConfig& c, auto& k, auto& v) { c.params.d_w = to_double(k, v); }},
        {"model.models", [](RunConfig& c, auto& k, auto& v) {
             c.models = to_list(v);
             if (c.models.empty())
                 throw ConfigError(k + ": expected at least one model");
         }},
        {"model.kernel_table", [](RunConfig& c, auto&, auto& v) { c.kernel_table = v; }},
        {"grid.L", [](RunConfig& c, auto& k, auto& v) { c.L = to_double(k, v); }},
        {"grid.N", [](RunConfig& c, auto& k, auto& v) { c.N = to_count(k, v); }},
        {"grid.min_nodes",
         [](RunConfig& c, auto& k, auto& v) { c.grid_policy.min_nodes = to_count(k, v); }},
        {"grid.nodes_per_unit",
         [](RunConfig& c, auto& k, auto& v) { c.grid_policy.nodes_per_unit = to_double(k, v); }},
        {"grid.quadrature", [](RunConfig& c, auto&, auto& v) { c.quadrature = parse_quadrature(v); }},
        {"integrator.h_t", [](RunConfig& c, auto& k, auto& v) { c.h_t = to_double(k, v); }},
        {"integrator.tol", [](RunConfig& c, auto& k, auto& v) { c.tol = to_double(k, v); }},
        {"integrator.max_steps", [](RunConfig& c, auto& k, auto& v) { c.max_steps = to_long(k, v); }},
        {"integrator.normalized", [](RunConfig& c, auto& k, auto& v) { c.normalized = to_bool(k, v); }},
        {"integrator.t_end", [](RunConfig& c, auto& k, auto& v) { c.t_end = to_double(k, v); }},
        {"integrator.sample_dt", [](RunConfig& c, auto& k, auto& v) { c.sample_dt = to_double(k, v); }},
        {"integrator.perturbation",
         [](RunConfig& c, auto& k, auto& v) { c.perturbation = to_double(k, v); }},
        {"sweep.L_min", [](RunConfig& c, auto& k, auto& v) { c.L_min = to_double(k, v); }},
        {"sweep.L_max", [](RunConfig& c, auto& k, auto& v) { c.L_max = to_double(k, v); }},
        {"sweep.n_L", [](RunConfig& c, auto& k, auto& v) { c.n_L = static_cast<int>(to_long(k, v)); }},
        {"sweep.threshold", [](RunConfig& c, auto& k, auto& v) { c.threshold = to_double(k, v); }},
        {"continuation.ds0", [](RunConfig& c, auto& k, auto& v) { c.controls.ds0 = to_double(k, v); }},
        {"continuation.ds_min",
         [](RunConfig& c, auto& k, auto& v) { c.controls.ds_min = to_double(k, v); }},
        {"continuation.ds_max",
         [](RunConfig& c, auto& k, auto& v) { c.controls.ds_max = to_double(k, v); }},
        {"continuation.max_points",
         [](RunConfig& c, auto& k, auto& v) { c.controls.max_points = to_count(k, v); }},
        {"continuation.max_folds",
         [](RunConfig& c, auto& k, auto& v) { c.controls.max_folds = to_count(k, v); }},
        {"continuation.A_min", [](RunConfig& c, auto& k, auto& v) { c.controls.A_min = to_double(k, v); }},
        {"continuation.A_max", [](RunConfig& c, auto& k, auto& v) { c.controls.A_max = to_double(k, v); }},
        {"continuation.A_start", [](RunConfig& c, auto& k, auto& v) { c.A_start = to_double(k, v); }},
        {"continuation.d_w", [](RunConfig& c, auto& k, auto& v) { c.d_w_values = to_doubles(k, v); }},
        {"continuation.gallery_A",
         [](RunConfig& c, auto& k, auto& v) { c.gallery_A = to_doubles(k, v); }},
        {"continuation.gallery_d_w",
         [](RunConfig& c, auto& k, auto& v) { c.gallery_d_w = to_double(k, v); }},
        {"run.out", [](RunConfig& c, auto&, auto& v) { c.out_dir = v; }},
        {"run.threads", [](RunConfig& c, auto& k, auto& v) {
             c.threads = static_cast<unsigned>(to_count(k, v));
         }},
    };
    return table;
}

} // namespace

std::size_t RunConfig::nodes() const {
    return N.value_or(grid_policy.nodes_for(L));
}

std::vector<ModelSpec> RunConfig::model_specs() const {
    std::vector<ModelSpec> out;
    for (const auto& name : models) {
        if (name == "custom" || name == "table") {
            if (!kernel_table)
                throw ConfigError("model.models: 'custom' needs model.kernel_table");
            out.push_back(ModelSpec::nonlocal(Kernel::from_table(*kernel_table)));
        } else {
            out.push_back(ModelSpec::parse(name));
        }
    }
    return out;
}

void RunConfig::validate() const {
    params.validate();
    auto positive = [](double x, const char* name) {
        if (!(x > 0.0) || !std::isfinite(x))
            throw ConfigError(std::string(name) + " must be strictly positive");
    };
    positive(L, "grid.L");
    positive(h_t, "integrator.h_t");
    positive(tol, "integrator.tol");
    positive(t_end, "integrator.t_end");
    positive(sample_dt, "integrator.sample_dt");
    positive(threshold, "sweep.threshold");
    positive(L_min, "sweep.L_min");
    positive(controls.ds0, "continuation.ds0");
    positive(controls.ds_min, "continuation.ds_min");
    positive(controls.ds_max, "continuation.ds_max");
    positive(grid_policy.nodes_per_unit, "grid.nodes_per_unit");
    if (max_steps < 1)
        throw ConfigError("integrator.max_steps must be at least 1");
    if (perturbation < 0.0)
        throw ConfigError("integrator.perturbation must be non-negative");
    if (L_max < L_min)
        throw ConfigError("sweep.L_max must be >= sweep.L_min");
    if (n_L < 1)
        throw ConfigError("sweep.n_L must be at least 1");
    if (N && *N < 3)
        throw ConfigError("grid.N must be at least 3");
    if (controls.ds_min > controls.ds_max)
        throw ConfigError("continuation.ds_min must not exceed continuation.ds_max");
    if (!(controls.A_min < controls.A_max))
        throw ConfigError("continuation.A_min must be below continuation.A_max");
    for (double d : d_w_values)
        positive(d, "continuation.d_w");
    for (const auto& name : models)
        if (name != "local" && name != "custom" && name != "table")
            (void)Kernel::builtin(name);
}

Settings parse_settings(const std::string& text) {
    Settings out;
    std::stringstream in(text);
    std::string line, section;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto c = line.find_first_of("#;"); c != std::string::npos)
            line.erase(c);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(number) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(number) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw ConfigError("line " + std::to_string(number) + ": empty key");
        if (section.empty())
            throw ConfigError("line " + std::to_string(number) + ": key '" + key +
                              "' outside any [section]");
        out[section + "." + key] = trim(line.substr(eq + 1));
    }
    return out;
}

Settings read_settings_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_settings(buffer.str());
}

RunConfig default_config(const std::string& experiment) {
    RunConfig c;
    c.experiment = experiment;
    if (experiment == "bifurcate") {
        c.L = 25.0;
        c.N = static_cast<std::size_t>(std::floor(3.0 * c.L));
    }
    for (const auto& [key, setter] : setters())
        c.provenance[key] = "default";
    return c;
}

void apply_settings(RunConfig& config, const Settings& settings, const std::string& source) {
    const auto& table = setters();
    for (const auto& [key, value] : settings) {
        const auto it = table.find(key);
        if (it == table.end())
            throw ConfigError("unknown setting '" + key + "'");
        it->second(config, key, value);
        config.provenance[key] = source;
    }
    // L without an explicit N re-derives the bifurcation grid.
    if (config.experiment == "bifurcate" && settings.count("grid.L") && !settings.count("grid.N") &&
        config.provenance["grid.N"] == "default")
        config.N = static_cast<std::size_t>(std::floor(3.0 * config.L));
}

RunConfig resolve_config(const std::string& experiment,
                         const std::optional<std::filesystem::path>& file, const Settings& flags) {
    RunConfig c = default_config(experiment);
    if (file)
        apply_settings(c, read_settings_file(*file), "file");
    apply_settings(c, flags, "flag");
    if (c.out_dir.empty())
        c.out_dir = output_root() / experiment;
    c.validate();
    return c;
}

nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["experiment"] = c.experiment;
    j["model"] = {{"A", c.params.A},       {"B", c.params.B},
                  {"d_v", c.params.d_v},   {"d_w", c.params.d_w},
                  {"models", c.models},    {"kernel_table", c.kernel_table ? c.kernel_table->string() : ""}};
    j["grid"] = {{"L", c.L},
                 {"N", c.N ? nlohmann::json(*c.N) : nlohmann::json(nullptr)},
                 {"min_nodes", c.grid_policy.min_nodes},
                 {"nodes_per_unit", c.grid_policy.nodes_per_unit},
                 {"quadrature", to_string(c.quadrature)}};
    j["integrator"] = {{"h_t", c.h_t},
                       {"tol", c.tol},
                       {"max_steps", c.max_steps},
                       {"normalized", c.normalized},
                       {"step_criterion", c.normalized ? "normalized_rms_rate" : "raw_l2_step"},
                       {"t_end", c.t_end},
                       {"sample_dt", c.sample_dt},
                       {"perturbation", c.perturbation}};
    j["sweep"] = {{"L_min", c.L_min}, {"L_max", c.L_max}, {"n_L", c.n_L}, {"threshold", c.threshold}};
    j["continuation"] = {{"ds0", c.controls.ds0},
                         {"ds_min", c.controls.ds_min},
                         {"ds_max", c.controls.ds_max},
                         {"grow", c.controls.grow},
                         {"max_corrector_iter", c.controls.max_corrector_iter},
                         {"newton_tol", c.controls.newton_tol},
                         {"max_points", c.controls.max_points},
                         {"max_folds", c.controls.max_folds},
                         {"A_min", c.controls.A_min},
                         {"A_max", c.controls.A_max},
                         {"A_start", c.A_start},
                         {"d_w", c.d_w_values},
                         {"gallery_A", c.gallery_A},
                         {"gallery_d_w", c.gallery_d_w}};
    j["run"] = {{"out", c.out_dir.string()}, {"threads", c.threads}};
    j["provenance"] = c.provenance;
    return j;
}

std::filesystem::path output_root() {
    if (const char* env = std::getenv("NLK_OUTPUT_ROOT"); env && *env)
        return env;
    return "runs";
}

} // namespace nlk
