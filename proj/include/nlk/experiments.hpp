#pragma once

#include "nlk/continuation.hpp"
#include "nlk/dynamics.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nlk {

/// One dispersal model: the local variant or a non-local kernel.
struct ModelSpec {
    Variant variant = Variant::nonlocal;
    std::optional<Kernel> kernel;

    static ModelSpec local();
    static ModelSpec nonlocal(Kernel kernel);
    /// "local", "laplace", "super_gaussian".
    static ModelSpec parse(const std::string& name);

    std::string label() const;       ///< "local" or the kernel label
    std::string tail_label() const;  ///< "local", "fat", "thin", "custom"
    std::string gaussian_label() const;
    Model build(ModelParams params, const Grid1D& grid, Quadrature quadrature) const;
};

/// The three models compared throughout: fat tail, thin tail, local.
std::vector<ModelSpec> default_model_specs();

/// Runs fn(0..count-1) on up to `threads` workers (0 = hardware concurrency).
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Critical patch size sweep

struct GridPolicy {
    std::size_t min_nodes = 128;
    double nodes_per_unit = 8.0;  ///< N = max(min_nodes, ceil(nodes_per_unit * L))
    std::size_t nodes_for(double L) const;
};

struct SweepConfig {
    ModelParams params;  ///< A, B, d_v, d_w (variant is taken from each model)
    double L_min = 1.0;
    double L_max = 100.0;
    int n_L = 50;
    std::vector<ModelSpec> models = default_model_specs();
    GridPolicy grid;
    Quadrature quadrature = Quadrature::mass_corrected;
    SteadyOptions integrator;
    double perturbation = 0.01;
    unsigned threads = 0;
    bool keep_profiles = false;
};

/// L_min * (L_max / L_min)^{k / (n - 1)}, k = 0..n-1.
std::vector<double> log_spaced(double lo, double hi, int n);

struct SweepRow {
    std::string model;   ///< "local" / kernel label
    std::string tail;    ///< "local" / "fat" / "thin"
    double L = 0.0;
    std::size_t N = 0;
    double avg_biomass = 0.0;  ///< trapezoid mean of the final v
    double max_biomass = 0.0;
    long steps = 0;
    bool converged = false;
    double last_step_delta = 0.0;
    double wall_seconds = 0.0;    ///< not written to sweep.csv (kept deterministic)
    std::string error;            ///< numerical failure, empty if none
    std::vector<double> profile;  ///< final v, only with keep_profiles
};

/// Simulates every (model, L) cell from the cosine-perturbed upper
/// equilibrium. Rows come back ordered by model (config order), then L.
std::vector<SweepRow> run_patch_sweep(const SweepConfig& config,
                                      const std::function<void(const SweepRow&)>& progress = {});

struct CriticalPatchResult {
    std::string model;
    std::optional<double> L_crit;  ///< empty: no collapse in the swept range
    bool below_range = false;
    std::string rule = "largest_L_with_avg_below_threshold";
    double threshold = 0.1;
};

/// Per model: the largest swept L whose average biomass is below `threshold`.
/// Only converged rows take part. Models without any collapse are reported as below range.
std::vector<CriticalPatchResult> detect_critical_L(const std::vector<SweepRow>& rows,
                                                   double threshold = 0.1);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_lcrit_csv(std::ostream& out, const std::vector<CriticalPatchResult>& results);

// ---------------------------------------------------------------------------
// Bifurcation diagrams

struct BifurcationConfig {
    ModelParams params;       ///< B, d_v used; A is the continuation parameter
    std::vector<double> d_w_values{0.1, 80.0};
    double L = 25.0;
    std::optional<std::size_t> N;  ///< default floor(3L)
    std::vector<ModelSpec> models = default_model_specs();
    Quadrature quadrature = Quadrature::mass_corrected;
    PalcControls controls;
    double A_start = 3.0;
    double perturbation = 0.01;
    std::vector<double> gallery_A{1.2, 1.5, 2.0, 2.5};
    double gallery_d_w = 80.0;
    bool include_desert = true;
    unsigned threads = 0;
};

struct BranchRecord {
    std::string model;
    std::string branch_id;  ///< "vegetated" / "desert"
    double d_w = 0.0;
    Branch branch;
    std::optional<std::string> error;  ///< seeding failure; branch empty
};

struct GalleryEntry {
    std::string model;
    double d_w = 0.0;
    double A = 0.0;
    std::vector<double> u;  ///< (v, w)
};

struct BifurcationSuite {
    Grid1D grid;
    std::vector<BranchRecord> branches;
    std::vector<GalleryEntry> gallery;
};

/// Vegetated seed at rainfall A: Newton from the cosine-perturbed upper
/// equilibrium, falling back to relaxing the dynamics first if Newton fails.
std::vector<double> seed_vegetated(const StationaryResidual& residual, double A,
                                   double perturbation = 0.01);

/// Desert seed (v = 0, w = W0) at rainfall A.
std::vector<double> seed_desert(const StationaryResidual& residual, double A);

BifurcationSuite run_bifurcation_suite(const BifurcationConfig& config);

/// Solution on `branch` at exactly A, taken at the first crossing from the
/// start of the branch (the upper part when continuing downward from large A)
/// and polished with Newton. Empty if the branch never crosses A.
std::optional<std::vector<double>> branch_profile_at(const StationaryResidual& residual,
                                                     const Branch& branch, double A);

/// Smallest fold A of a branch: where the vegetated branch finally turns back.
std::optional<double> lowest_fold(const Branch& branch);

/// v at the outermost vegetated node (first node from each end with
/// v > 1e-12 max v, averaged over both ends) divided by max v. 0 for a desert
/// profile.
double boundary_sharpness(std::span<const double> v, const Grid1D& grid);

// ---------------------------------------------------------------------------
// Perturbation decay (linear stability by simulation)

struct PerturbationDecay {
    std::vector<double> times;
    std::vector<double> distances;  ///< ||v - V||_{L2(Omega)}
    double slope = 0.0;             ///< least-squares slope of log distance vs t
    double r_squared = 0.0;
    double final_distance_inf = 0.0;
};

/// Perturbs the stationary state u = (V, W) by `amplitude` (relative, cosine
/// profile on v), integrates with forward Euler and fits log ||v - V|| vs t.
PerturbationDecay perturbation_decay(const Model& model, std::span<const double> stationary,
                                     double amplitude, double t_end, double sample_dt,
                                     double h_t = 1e-4);

} // namespace nlk
