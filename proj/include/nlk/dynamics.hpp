#pragma once

#include "nlk/model.hpp"

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace nlk {

struct State {
    std::vector<double> v;  ///< biomass at every node
    std::vector<double> w;  ///< water at every node (boundary nodes hold 0)
    double t = 0.0;
    long step_count = 0;
};

/// Enforces the Dirichlet data carried by the model: w = 0 at both end
/// nodes, and v = 0 there too for the local variant.
void apply_boundary_conditions(const Model& model, State& state);

/// v0 = v* (1 + amplitude cos(pi x / (2L))), w0 = w* with boundary data imposed.
State perturbed_uniform_state(const Model& model, double v_star, double w_star,
                              double amplitude = 0.01);

/// Throws ConfigError if forward Euler with step h_t is outside the
/// explicit stability region for this model.
void check_step_stability(const Model& model, double h_t);

/// One forward Euler step:
///   v <- v + h_t (dispersal(v) + v^2 w - B v)
///   w <- w + h_t (d_w Lap w - v^2 w - w + A)
/// then boundary data are re-imposed. Throws Blowup on non-finite values or
/// entries above 1e6.
State euler_step(const State& state, const Model& model, double h_t);

struct TrajectorySample {
    double t = 0.0;
    double min_v = 0.0;
    double max_v = 0.0;
    double avg_v = 0.0;
    double max_w = 0.0;
};

struct SteadyOptions {
    double h_t = 1e-4;
    double tol = 1e-5;
    long max_steps = 2'000'000;
    /// Divide the step difference by h_t * sqrt(2N) (an RMS time derivative)
    /// instead of using the raw l2 norm of u^{n+1} - u^n.
    bool normalized_criterion = false;
    /// Call `observer` every `sample_every` steps (0 disables).
    long sample_every = 0;
    std::function<void(const TrajectorySample&)> observer;
};

struct SteadyResult {
    State state;
    bool converged = false;
    long steps = 0;
    double last_step_delta = 0.0;
    bool normalized_criterion = false;
    double min_v_seen = 0.0;
    double max_v_seen = 0.0;
    double max_w_seen = 0.0;
    /// Steps at which max v exceeded B / R1 although v0 started inside [0, B / R1].
    long invariant_region_violations = 0;
    /// Steps at which min v or min w dropped below -1e-12, or max w exceeded
    /// max(||w0||, A) + 1e-8.
    long negativity_violations = 0;
};

/// Steps until the step difference drops below tol or max_steps is reached.
/// Non-convergence is reported through `converged`, never thrown.
SteadyResult run_to_steady(const State& initial, const Model& model, const SteadyOptions& opts);

TrajectorySample summarize(const State& state, const Model& model);
void write_trajectory_csv_header(std::ostream& out);
void write_trajectory_csv_row(std::ostream& out, const TrajectorySample& s);

struct DecaySample {
    double t = 0.0;
    double max_v = 0.0;
    double envelope = 0.0;
    double water_gap = 0.0;  ///< ||w - W0||_inf
};

struct DecayReport {
    double threshold = 0.0;  ///< B / M
    double M = 0.0;
    std::vector<DecaySample> samples;
    double final_max_v = 0.0;
    double final_water_gap = 0.0;
    bool monotone = true;  ///< max v non-increasing over the samples
};

struct DecayOptions {
    double t_end = 40.0;
    double h_t = 1e-4;
    double sample_dt = 0.5;
};

/// Runs from v0 = v0_level (uniform), w0 = A on interior nodes and checks
/// max v against B nu0 / (M nu0 + (B - M nu0) e^{Bt}) with
/// M = max(nu0, ||w0||, A) at every sample. Throws EnvelopeViolated with the
/// first offending time and margin.
DecayReport extinction_decay_check(const Model& model, double v0_level,
                                   const DecayOptions& opts = {});

} // namespace nlk
