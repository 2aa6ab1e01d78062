#include "nlk/experiments.hpp"

#include "nlk/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <ostream>
#include <thread>

namespace nlk {

ModelSpec ModelSpec::local() {
    return ModelSpec{Variant::local, std::nullopt};
}

ModelSpec ModelSpec::nonlocal(Kernel kernel) {
    return ModelSpec{Variant::nonlocal, std::move(kernel)};
}

ModelSpec ModelSpec::parse(const std::string& name) {
    if (name == "local")
        return local();
    return nonlocal(Kernel::builtin(name));
}

std::string ModelSpec::label() const {
    return kernel && variant == Variant::nonlocal ? kernel->label() : "local";
}

std::string ModelSpec::tail_label() const {
    return kernel && variant == Variant::nonlocal ? kernel->tail_label() : "local";
}

std::string ModelSpec::gaussian_label() const {
    return kernel && variant == Variant::nonlocal ? kernel->gaussian_label() : "local";
}

Model ModelSpec::build(ModelParams params, const Grid1D& grid, Quadrature quadrature) const {
    params.variant = variant;
    return make_model(params, grid, kernel, quadrature);
}

std::vector<ModelSpec> default_model_specs() {
    return {ModelSpec::nonlocal(Kernel::laplace()), ModelSpec::nonlocal(Kernel::super_gaussian()),
            ModelSpec::local()};
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            }
        });
    for (auto& worker : pool)
        worker.join();
    if (failure)
        std::rethrow_exception(failure);
}

std::size_t GridPolicy::nodes_for(double L) const {
    const auto scaled = static_cast<std::size_t>(std::ceil(nodes_per_unit * L));
    return std::max(min_nodes, scaled);
}

std::vector<double> log_spaced(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi >= lo) || n < 1)
        throw ConfigError("log_spaced needs 0 < lo <= hi and n >= 1");
    std::vector<double> out(static_cast<std::size_t>(n));
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    const double ratio = std::log(hi / lo);
    for (int k = 0; k < n; ++k)
        out[static_cast<std::size_t>(k)] = lo * std::exp(ratio * k / (n - 1));
    out.back() = hi;
    return out;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

SweepRow sweep_cell(const SweepConfig& config, const ModelSpec& spec, double L) {
    const auto start = std::chrono::steady_clock::now();
    SweepRow row;
    row.model = spec.label();
    row.tail = spec.tail_label();
    row.L = L;
    row.N = config.grid.nodes_for(L);

    const Model model = spec.build(config.params, make_grid(L, row.N), config.quadrature);
    check_step_stability(model, config.integrator.h_t);
    const auto eq = upper_equilibrium(config.params.A, config.params.B);
    try {
        const auto result = run_to_steady(
            perturbed_uniform_state(model, eq.v_star, eq.w_star, config.perturbation), model,
            config.integrator);
        const auto& v = result.state.v;
        row.avg_biomass = model.grid.integral_mean(v);
        row.max_biomass = *std::max_element(v.begin(), v.end());
        row.steps = result.steps;
        row.converged = result.converged;
        row.last_step_delta = result.last_step_delta;
        if (config.keep_profiles)
            row.profile = v;
    } catch (const NumericalError& e) {
        row.error = e.what();
    }
    row.wall_seconds = seconds_since(start);
    return row;
}

} // namespace

std::vector<SweepRow> run_patch_sweep(const SweepConfig& config,
                                      const std::function<void(const SweepRow&)>& progress) {
    config.params.validate();
    if (config.models.empty())
        throw ConfigError("sweep needs at least one model");
    const auto Ls = log_spaced(config.L_min, config.L_max, config.n_L);

    // Validate every cell up front so a bad grid aborts before any compute.
    for (const auto& spec : config.models)
        for (double L : {Ls.front(), Ls.back()})
            check_step_stability(
                spec.build(config.params, make_grid(L, config.grid.nodes_for(L)), config.quadrature),
                config.integrator.h_t);

    const std::size_t cells = config.models.size() * Ls.size();
    std::vector<SweepRow> rows(cells);
    std::mutex progress_mutex;
    // Largest L first: those cells are the slowest, so they start early.
    parallel_for(cells, config.threads, [&](std::size_t k) {
        const std::size_t idx = cells - 1 - k;
        const std::size_t m = idx / Ls.size();
        const std::size_t l = idx % Ls.size();
        rows[idx] = sweep_cell(config, config.models[m], Ls[l]);
        if (progress) {
            std::lock_guard lock(progress_mutex);
            progress(rows[idx]);
        }
    });
    return rows;
}

std::vector<CriticalPatchResult> detect_critical_L(const std::vector<SweepRow>& rows,
                                                   double threshold) {
    std::vector<CriticalPatchResult> out;
    for (const auto& row : rows) {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const CriticalPatchResult& r) { return r.model == row.model; });
        if (it == out.end()) {
            out.push_back({row.model, std::nullopt, true, "largest_L_with_avg_below_threshold",
                           threshold});
            it = out.end() - 1;
        }
        if (row.converged && row.error.empty() && row.avg_biomass < threshold &&
            (!it->L_crit || row.L > *it->L_crit)) {
            it->L_crit = row.L;
            it->below_range = false;
        }
    }
    return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    const auto precision = out.precision();
    out << std::setprecision(17)
        << "model,tail,L,N,avg_biomass,max_biomass,steps,converged,last_step_delta,error\n";
    for (const auto& r : rows)
        out << r.model << ',' << r.tail << ',' << r.L << ',' << r.N << ',' << r.avg_biomass << ','
            << r.max_biomass << ',' << r.steps << ',' << (r.converged ? 1 : 0) << ','
            << r.last_step_delta << ",\"" << r.error << "\"\n";
    out.precision(precision);
}

void write_lcrit_csv(std::ostream& out, const std::vector<CriticalPatchResult>& results) {
    const auto precision = out.precision();
    out << std::setprecision(17) << "model,L_crit,below_range,threshold,rule\n";
    for (const auto& r : results) {
        out << r.model << ',';
        if (r.L_crit)
            out << *r.L_crit;
        out << ',' << (r.below_range ? 1 : 0) << ',' << r.threshold << ',' << r.rule << '\n';
    }
    out.precision(precision);
}

// ---------------------------------------------------------------------------

std::vector<double> seed_desert(const StationaryResidual& residual, double A) {
    ModelParams params = residual.model().params;
    params.A = A;
    const std::vector<double> v(residual.nodes(), 0.0);
    const auto w = solve_water_stationary(v, params, residual.model().grid);
    return StationaryResidual::pack(v, w);
}

std::vector<double> seed_vegetated(const StationaryResidual& residual, double A,
                                   double perturbation) {
    const Model model = residual.model().with_rainfall(A);
    const auto eq = upper_equilibrium(A, model.params.B);
    const State start = perturbed_uniform_state(model, eq.v_star, eq.w_star, perturbation);
    const auto guess = StationaryResidual::pack(start.v, start.w);
    try {
        return newton_solve(residual, A, guess).u;
    } catch (const NumericalError&) {
    }

    // Relax with the dynamics first; pick the largest stable step.
    double h_t = 1e-3;
    for (;; h_t *= 0.5) {
        try {
            check_step_stability(model, h_t);
            break;
        } catch (const ConfigError&) {
            if (h_t < 1e-9)
                throw;
        }
    }
    SteadyOptions opts;
    opts.h_t = h_t;
    opts.normalized_criterion = true;
    opts.tol = 1e-3;
    opts.max_steps = static_cast<long>(std::ceil(500.0 / h_t));
    const auto relaxed = run_to_steady(start, model, opts);
    return newton_solve(residual, A,
                        StationaryResidual::pack(relaxed.state.v, relaxed.state.w))
        .u;
}

std::optional<std::vector<double>> branch_profile_at(const StationaryResidual& residual,
                                                     const Branch& branch, double A) {
    const auto& pts = branch.points;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double a0 = pts[k].A, a1 = pts[k + 1].A;
        if ((a0 - A) * (a1 - A) > 0.0)
            continue;
        const auto& u0 = branch.snapshots[pts[k].snapshot];
        const auto& u1 = branch.snapshots[pts[k + 1].snapshot];
        const double t = a1 == a0 ? 0.0 : (A - a0) / (a1 - a0);
        std::vector<double> guess(u0.size());
        for (std::size_t i = 0; i < guess.size(); ++i)
            guess[i] = (1.0 - t) * u0[i] + t * u1[i];
        try {
            return newton_solve(residual, A, guess).u;
        } catch (const NumericalError&) {
            return std::nullopt;
        }
    }
    return std::nullopt;
}

std::optional<double> lowest_fold(const Branch& branch) {
    std::optional<double> best;
    for (const auto& f : branch.folds)
        if (!best || f.A < *best)
            best = f.A;
    return best;
}

BifurcationSuite run_bifurcation_suite(const BifurcationConfig& config) {
    const std::size_t N =
        config.N.value_or(static_cast<std::size_t>(std::floor(3.0 * config.L)));
    BifurcationSuite suite{make_grid(config.L, N), {}, {}};

    struct Job {
        const ModelSpec* spec;
        double d_w;
        bool vegetated;
    };
    std::vector<Job> jobs;
    for (double d_w : config.d_w_values)
        for (const auto& spec : config.models) {
            jobs.push_back({&spec, d_w, true});
            if (config.include_desert)
                jobs.push_back({&spec, d_w, false});
        }

    struct Outcome {
        BranchRecord record;
        std::vector<GalleryEntry> gallery;
    };
    std::vector<Outcome> outcomes(jobs.size());

    parallel_for(jobs.size(), config.threads, [&](std::size_t k) {
        const Job& job = jobs[k];
        ModelParams params = config.params;
        params.A = config.A_start;
        params.d_w = job.d_w;
        params.validate();
        const StationaryResidual residual(job.spec->build(params, suite.grid, config.quadrature));

        Outcome& out = outcomes[k];
        out.record.model = job.spec->label();
        out.record.branch_id = job.vegetated ? "vegetated" : "desert";
        out.record.d_w = job.d_w;
        try {
            const auto seed = job.vegetated
                                  ? seed_vegetated(residual, config.A_start, config.perturbation)
                                  : seed_desert(residual, config.A_start);
            out.record.branch = palc_continue(residual, config.A_start, seed, config.controls,
                                              biomass_summary(residual));
        } catch (const NumericalError& e) {
            out.record.error = e.what();
            return;
        }
        if (!job.vegetated || job.d_w != config.gallery_d_w)
            return;
        for (double A : config.gallery_A)
            if (auto u = branch_profile_at(residual, out.record.branch, A))
                out.gallery.push_back({out.record.model, job.d_w, A, std::move(*u)});
    });

    for (auto& o : outcomes) {
        suite.branches.push_back(std::move(o.record));
        for (auto& g : o.gallery)
            suite.gallery.push_back(std::move(g));
    }
    return suite;
}

double boundary_sharpness(std::span<const double> v, const Grid1D& grid) {
    if (v.size() != grid.n_nodes)
        throw ConfigError("profile does not match the grid");
    const double peak = *std::max_element(v.begin(), v.end());
    if (!(peak > 1e-8))
        return 0.0;
    const double floor = 1e-12 * peak;
    std::size_t left = 0, right = v.size() - 1;
    while (left < right && !(v[left] > floor))
        ++left;
    while (right > left && !(v[right] > floor))
        --right;
    return 0.5 * (v[left] + v[right]) / peak;
}

// ---------------------------------------------------------------------------

PerturbationDecay perturbation_decay(const Model& model, std::span<const double> stationary,
                                     double amplitude, double t_end, double sample_dt,
                                     double h_t) {
    const std::size_t n = model.size();
    if (stationary.size() != 2 * n)
        throw ConfigError("stationary state has the wrong size");
    if (!(sample_dt > 0.0) || !(t_end > 0.0))
        throw ConfigError("perturbation decay needs positive t_end and sample_dt");
    check_step_stability(model, h_t);

    const auto V = stationary.first(n);
    State state;
    state.v.resize(n);
    state.w.assign(stationary.begin() + static_cast<std::ptrdiff_t>(n), stationary.end());
    const double L = model.grid.half_width;
    for (std::size_t i = 0; i < n; ++i)
        state.v[i] =
            V[i] * (1.0 + amplitude * std::cos(std::numbers::pi * model.grid.nodes[i] / (2.0 * L)));
    apply_boundary_conditions(model, state);

    PerturbationDecay out;
    std::vector<double> diff2(n);
    auto record = [&] {
        double inf = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = state.v[i] - V[i];
            diff2[i] = d * d;
            inf = std::max(inf, std::abs(d));
        }
        out.times.push_back(state.t);
        out.distances.push_back(std::sqrt(model.grid.integrate(diff2)));
        out.final_distance_inf = inf;
    };

    record();
    const auto steps_per_sample = std::max<long>(1, std::lround(sample_dt / h_t));
    const auto total = std::lround(t_end / h_t);
    for (long k = 1; k <= total; ++k) {
        state = euler_step(state, model, h_t);
        state.t = static_cast<double>(k) * h_t;
        if (k % steps_per_sample == 0)
            record();
    }

    // Fit only above round-off so the floor does not flatten the slope.
    double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
    int m = 0;
    for (std::size_t k = 0; k < out.times.size(); ++k) {
        if (!(out.distances[k] > 1e-11))
            continue;
        const double t = out.times[k], y = std::log(out.distances[k]);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        syy += y * y;
        ++m;
    }
    if (m >= 2) {
        const double var_t = stt - st * st / m;
        const double cov = sty - st * sy / m;
        const double var_y = syy - sy * sy / m;
        if (var_t > 0.0) {
            out.slope = cov / var_t;
            out.r_squared = var_y > 0.0 ? cov * cov / (var_t * var_y) : 1.0;
        }
    }
    return out;
}

} // namespace nlk
