#pragma once

#include "nlk/experiments.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nlk {

/// Settings are addressed as "section.key", e.g. "model.A" or "sweep.n_L".
/// Each value remembers where it came from: "default", "file" or "flag".
using Settings = std::map<std::string, std::string>;

/// Fully resolved configuration for one subcommand.
struct RunConfig {
    std::string experiment = "sweep";

    ModelParams params;  ///< [model] A, B, d_v, d_w
    std::vector<std::string> models{"laplace", "super_gaussian", "local"};  ///< [model] models
    std::optional<std::filesystem::path> kernel_table;                      ///< [model] kernel_table

    double L = 25.0;                  ///< [grid] L
    std::optional<std::size_t> N;     ///< [grid] N
    GridPolicy grid_policy;           ///< [grid] min_nodes, nodes_per_unit
    Quadrature quadrature = Quadrature::mass_corrected;  ///< [grid] quadrature

    double h_t = 1e-4;                ///< [integrator] h_t, tol, max_steps, normalized
    double tol = 1e-5;
    long max_steps = 2'000'000;
    bool normalized = false;
    double t_end = 50.0;              ///< [integrator] t_end, sample_dt (simulate only)
    double sample_dt = 0.5;
    double perturbation = 0.01;       ///< [integrator] perturbation

    double L_min = 1.0;               ///< [sweep] L_min, L_max, n_L, threshold
    double L_max = 100.0;
    int n_L = 50;
    double threshold = 0.1;

    PalcControls controls;            ///< [continuation] ds0 ... A_max
    double A_start = 3.0;
    std::vector<double> d_w_values{0.1, 80.0};
    std::vector<double> gallery_A{1.2, 1.5, 2.0, 2.5};
    double gallery_d_w = 80.0;

    std::filesystem::path out_dir;    ///< [run] out
    unsigned threads = 0;             ///< [run] threads, 0 = all cores

    std::map<std::string, std::string> provenance;  ///< "section.key" -> source

    /// Grid node count for a single-domain run: N, or the grid policy at L.
    std::size_t nodes() const;
    std::vector<ModelSpec> model_specs() const;

    /// Positivity and explicit-step guards. Throws ConfigError naming the field.
    void validate() const;
};

/// Parses "[section]" headers and "key = value" lines. '#' and ';' start
/// comments. Throws ConfigError with the line number on malformed input.
Settings parse_settings(const std::string& text);
Settings read_settings_file(const std::filesystem::path& path);

/// Defaults for a subcommand: the sweep uses the critical patch setup, the
/// bifurcation suite L = 25 with N = floor(3L).
RunConfig default_config(const std::string& experiment);

/// Applies settings on top of `config`, tagging each touched field with
/// `source`. Unknown keys and unparsable values throw ConfigError.
void apply_settings(RunConfig& config, const Settings& settings, const std::string& source);

/// default_config(experiment), then the file (if any), then the flags.
RunConfig resolve_config(const std::string& experiment,
                         const std::optional<std::filesystem::path>& file, const Settings& flags);

/// Every field of the config, with provenance, for manifest.json.
nlohmann::json to_json(const RunConfig& config);

/// Output root: $NLK_OUTPUT_ROOT if set, otherwise "runs".
std::filesystem::path output_root();

} // namespace nlk
