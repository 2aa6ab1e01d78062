#include "nlk/dynamics.hpp"

#include "nlk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

namespace nlk {

void apply_boundary_conditions(const Model& model, State& state) {
    const std::size_t n = model.size();
    state.w[0] = 0.0;
    state.w[n - 1] = 0.0;
    if (model.is_local()) {
        state.v[0] = 0.0;
        state.v[n - 1] = 0.0;
    }
}

State perturbed_uniform_state(const Model& model, double v_star, double w_star,
                              double amplitude) {
    const Grid1D& g = model.grid;
    State s;
    s.v.resize(g.n_nodes);
    s.w.assign(g.n_nodes, w_star);
    for (std::size_t i = 0; i < g.n_nodes; ++i)
        s.v[i] = v_star *
                 (1.0 + amplitude * std::cos(std::numbers::pi * g.nodes[i] / (2.0 * g.half_width)));
    apply_boundary_conditions(model, s);
    return s;
}

void check_step_stability(const Model& model, double h_t) {
    if (!(h_t > 0.0))
        throw ConfigError("time step must be positive");
    const double inv_h2 = model.laplacian.inv_h2();
    const double water = model.params.d_w * h_t * inv_h2;
    if (water > 0.5)
        throw ConfigError("forward Euler unstable for water diffusion: d_w*h_t/h^2 = " +
                          std::to_string(water) + " > 0.5");
    if (model.dispersal) {
        const double disp = model.params.d_v * h_t * (1.0 + model.dispersal->inf_norm());
        if (disp > 0.5)
            throw ConfigError("forward Euler unstable for dispersal: d_v*h_t*(1+|K|) = " +
                              std::to_string(disp) + " > 0.5");
    } else {
        const double disp = 0.5 * model.params.d_v * h_t * inv_h2;
        if (disp > 0.5)
            throw ConfigError("forward Euler unstable for local dispersal: (d_v/2)*h_t/h^2 = " +
                              std::to_string(disp) + " > 0.5");
    }
}

namespace {

constexpr double blowup_limit = 1e6;

/// Reusable scratch space for repeated Euler steps.
class Stepper {
public:
    Stepper(const Model& model, double h_t)
        : model_(model), h_t_(h_t), disp_(model.size()), lap_(model.size()) {}

    void advance(State& s) {
        const std::size_t n = model_.size();
        const auto& p = model_.params;
        model_.dispersal_term(s.v, disp_);
        model_.laplacian.apply(s.w, lap_);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = s.v[i];
            const double w = s.w[i];
            const double uptake = v * v * w;
            s.v[i] = v + h_t_ * (disp_[i] + uptake - p.B * v);
            s.w[i] = w + h_t_ * (p.d_w * lap_[i] - uptake - w + p.A);
        }
        apply_boundary_conditions(model_, s);
        s.t += h_t_;
        ++s.step_count;
    }

private:
    const Model& model_;
    double h_t_;
    std::vector<double> disp_;
    std::vector<double> lap_;
};

void check_finite(const State& s, long step) {
    for (std::size_t i = 0; i < s.v.size(); ++i) {
        if (!std::isfinite(s.v[i]) || std::abs(s.v[i]) > blowup_limit)
            throw Blowup("biomass blew up at step " + std::to_string(step) + ", node " +
                             std::to_string(i),
                         step, i);
        if (!std::isfinite(s.w[i]) || std::abs(s.w[i]) > blowup_limit)
            throw Blowup("water blew up at step " + std::to_string(step) + ", node " +
                             std::to_string(i),
                         step, i);
    }
}

} // namespace

State euler_step(const State& state, const Model& model, double h_t) {
    check_step_stability(model, h_t);
    State next = state;
    Stepper(model, h_t).advance(next);
    check_finite(next, next.step_count);
    return next;
}

TrajectorySample summarize(const State& state, const Model& model) {
    TrajectorySample s;
    s.t = state.t;
    s.min_v = *std::min_element(state.v.begin(), state.v.end());
    s.max_v = *std::max_element(state.v.begin(), state.v.end());
    s.max_w = *std::max_element(state.w.begin(), state.w.end());
    s.avg_v = model.grid.integral_mean(state.v);
    return s;
}

SteadyResult run_to_steady(const State& initial, const Model& model, const SteadyOptions& opts) {
    if (!(opts.tol > 0.0))
        throw ConfigError("steady-state tolerance must be positive");
    check_step_stability(model, opts.h_t);

    const std::size_t n = model.size();
    const auto& p = model.params;

    SteadyResult result;
    result.normalized_criterion = opts.normalized_criterion;
    result.state = initial;
    State& s = result.state;
    apply_boundary_conditions(model, s);

    const double r1 = std::max(*std::max_element(s.w.begin(), s.w.end()), p.A);
    const double region_top = p.B / r1;
    const bool inside_region = *std::max_element(s.v.begin(), s.v.end()) <= region_top;
    const double water_top = r1 + 1e-8;
    const double scale = opts.normalized_criterion ? opts.h_t * std::sqrt(2.0 * n) : 1.0;

    result.min_v_seen = *std::min_element(s.v.begin(), s.v.end());
    result.max_v_seen = *std::max_element(s.v.begin(), s.v.end());
    result.max_w_seen = *std::max_element(s.w.begin(), s.w.end());

    std::vector<double> disp(n), lap(n);
    for (long step = 1; step <= opts.max_steps; ++step) {
        model.dispersal_term(s.v, disp);
        model.laplacian.apply(s.w, lap);

        double diff2 = 0.0;
        double vmin = std::numeric_limits<double>::infinity();
        double vmax = -vmin, wmin = vmin, wmax = -vmin;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = s.v[i];
            const double w = s.w[i];
            const double uptake = v * v * w;
            double nv = v + opts.h_t * (disp[i] + uptake - p.B * v);
            double nw = w + opts.h_t * (p.d_w * lap[i] - uptake - w + p.A);
            if (i == 0 || i + 1 == n) {
                nw = 0.0;
                if (model.is_local())
                    nv = 0.0;
            }
            diff2 += (nv - v) * (nv - v) + (nw - w) * (nw - w);
            s.v[i] = nv;
            s.w[i] = nw;
            vmin = std::min(vmin, nv);
            vmax = std::max(vmax, nv);
            wmin = std::min(wmin, nw);
            wmax = std::max(wmax, nw);
        }
        s.t += opts.h_t;
        ++s.step_count;

        if (!std::isfinite(diff2) || vmax > blowup_limit || wmax > blowup_limit ||
            vmin < -blowup_limit || wmin < -blowup_limit)
            check_finite(s, s.step_count);

        result.min_v_seen = std::min(result.min_v_seen, vmin);
        result.max_v_seen = std::max(result.max_v_seen, vmax);
        result.max_w_seen = std::max(result.max_w_seen, wmax);
        if (inside_region && vmax > region_top + 1e-8)
            ++result.invariant_region_violations;
        if (vmin < -1e-12 || wmin < -1e-12 || wmax > water_top)
            ++result.negativity_violations;

        result.steps = step;
        result.last_step_delta = std::sqrt(diff2) / scale;

        if (opts.sample_every > 0 && opts.observer && step % opts.sample_every == 0)
            opts.observer(summarize(s, model));

        if (result.last_step_delta < opts.tol) {
            result.converged = true;
            break;
        }
    }
    return result;
}

void write_trajectory_csv_header(std::ostream& out) { out << "t,min_v,max_v,avg_v,max_w\n"; }

void write_trajectory_csv_row(std::ostream& out, const TrajectorySample& s) {
    const auto precision = out.precision();
    out << std::setprecision(17) << s.t << ',' << s.min_v << ',' << s.max_v << ',' << s.avg_v
        << ',' << s.max_w << '\n';
    out.precision(precision);
}

DecayReport extinction_decay_check(const Model& model, double v0_level, const DecayOptions& opts) {
    const auto& p = model.params;
    if (v0_level < 0.0)
        throw ConfigError("v0_level must be non-negative");
    check_step_stability(model, opts.h_t);

    State s;
    s.v.assign(model.size(), v0_level);
    s.w.assign(model.size(), p.A);
    apply_boundary_conditions(model, s);

    DecayReport report;
    report.M = std::max({v0_level, p.A, *std::max_element(s.w.begin(), s.w.end())});
    report.threshold = p.B / report.M;
    if (v0_level > report.threshold)
        throw ConfigError("v0_level " + std::to_string(v0_level) + " lies outside [0, B/M] = [0, " +
                          std::to_string(report.threshold) + "]");

    const auto W0 = solve_water_stationary(std::vector<double>(model.size(), 0.0), p, model.grid);
    const double nu0 = *std::max_element(s.v.begin(), s.v.end());
    auto envelope = [&](double t) {
        if (nu0 == 0.0)
            return 0.0;
        return p.B * nu0 / (report.M * nu0 + (p.B - report.M * nu0) * std::exp(p.B * t));
    };
    auto water_gap = [&] {
        double gap = 0.0;
        for (std::size_t i = 0; i < model.size(); ++i)
            gap = std::max(gap, std::abs(s.w[i] - W0[i]));
        return gap;
    };

    Stepper stepper(model, opts.h_t);
    const long total = std::lround(opts.t_end / opts.h_t);
    const long every = std::max(1L, std::lround(opts.sample_dt / opts.h_t));
    double previous_max = nu0;
    report.samples.push_back({0.0, nu0, envelope(0.0), water_gap()});
    for (long step = 1; step <= total; ++step) {
        stepper.advance(s);
        if (step % every != 0 && step != total)
            continue;
        check_finite(s, step);
        const double max_v = *std::max_element(s.v.begin(), s.v.end());
        const double bound = envelope(s.t);
        const double margin = bound - max_v;
        if (margin < -(1e-8 + 1e-6 * bound))
            throw EnvelopeViolated("biomass exceeded the extinction envelope at t = " +
                                       std::to_string(s.t),
                                   s.t, margin);
        if (max_v > previous_max + 1e-15)
            report.monotone = false;
        previous_max = max_v;
        report.samples.push_back({s.t, max_v, bound, water_gap()});
    }
    report.final_max_v = report.samples.back().max_v;
    report.final_water_gap = report.samples.back().water_gap;
    return report;
}

} // namespace nlk
