// nlk: command-line front end for the non-local Klausmeier lab.

#include "nlk/config.hpp"
#include "nlk/errors.hpp"
#include "nlk/spectral.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nlk;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_numerical = 3;
constexpr int exit_regression = 4;

constexpr const char* version = "1.0.0";

const char* kernel_table_help =
    "Two-column text file 'z J(z)' (whitespace or comma separated, '#' comments). "
    "Values are linearly interpolated and J = 0 beyond the last |z|; "
    "select it with --models custom";

/// Flags collected as "section.key" settings so they override the config file.
struct FlagSink {
    Settings settings;
    std::optional<fs::path> config_file;

    void value(CLI::App* app, const std::string& name, const std::string& key,
               const std::string& help) {
        app->add_option_function<std::string>(
            name, [this, key](const std::string& v) { settings[key] = v; }, help);
    }
    void list(CLI::App* app, const std::string& name, const std::string& key,
              const std::string& help) {
        app->add_option_function<std::vector<std::string>>(
            name,
            [this, key](const std::vector<std::string>& v) {
                std::string joined;
                for (const auto& item : v)
                    joined += (joined.empty() ? "" : ",") + item;
                settings[key] = joined;
            },
            help);
    }
    void toggle(CLI::App* app, const std::string& name, const std::string& key,
                const std::string& help) {
        app->add_flag_callback(name, [this, key] { settings[key] = "true"; }, help);
    }
    void common(CLI::App* app) {
        app->add_option("--config", config_file, "Config file ([section] / key = value)")
            ->check(CLI::ExistingFile);
        value(app, "--out", "run.out", "Output directory (default $NLK_OUTPUT_ROOT/<command>)");
        value(app, "--threads", "run.threads", "Worker threads, 0 = all cores");
    }
    void model(CLI::App* app) {
        value(app, "--A", "model.A", "Rainfall");
        value(app, "--B", "model.B", "Plant mortality");
        value(app, "--dv", "model.d_v", "Plant dispersal rate");
        value(app, "--dw", "model.d_w", "Water diffusion rate");
        value(app, "--kernel-table", "model.kernel_table", kernel_table_help);
        value(app, "--quadrature", "grid.quadrature", "mass_corrected (default) or trapezoid");
    }
    void integrator(CLI::App* app) {
        value(app, "--ht", "integrator.h_t", "Forward Euler step");
        value(app, "--tol", "integrator.tol", "Steady-state step-difference tolerance");
        value(app, "--max-steps", "integrator.max_steps", "Step cap");
        toggle(app, "--normalized", "integrator.normalized",
               "Divide the step difference by h_t sqrt(2N)");
        value(app, "--perturbation", "integrator.perturbation", "Relative cosine perturbation");
    }
};

void write_manifest(const RunConfig& config, const json& extra, double wall) {
    json m;
    m["tool"] = "nlk";
    m["version"] = version;
    m["config"] = to_json(config);
    m["wall_seconds"] = wall;
    m["seeds"] = json::array();  // every run is deterministic
    for (const auto& [k, v] : extra.items())
        m[k] = v;
    std::ofstream out(config.out_dir / "manifest.json");
    out << std::setw(2) << m << '\n';
}

std::ofstream open_output(const fs::path& path) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double x) {
    std::ostringstream s;
    s << x;
    return s.str();
}

// ---------------------------------------------------------------------------

int cmd_kernels_check(const std::string& family, const std::optional<fs::path>& table, bool check) {
    std::vector<Kernel> kernels;
    if (table)
        kernels.push_back(Kernel::from_table(*table));
    else if (family == "all")
        kernels = {Kernel::laplace(), Kernel::super_gaussian()};
    else
        kernels.push_back(Kernel::builtin(family));

    bool ok = true;
    for (const auto& k : kernels) {
        const auto report = check_assumptions(k);
        std::cout << "kernel " << k.label() << " (" << k.tail_label() << " tail, "
                  << k.gaussian_label() << ", cutoff " << k.support_cutoff() << ")\n";
        std::cout << "  id  check                      result  discrepancy\n";
        for (const auto& c : report.checks)
            std::cout << "  " << std::left << std::setw(4) << c.id << std::setw(27) << c.name
                      << std::setw(8) << (c.pass ? "PASS" : "FAIL") << std::scientific
                      << std::setprecision(3) << c.discrepancy << std::defaultfloat << '\n';
        const auto m = kernel_moments(k);
        std::cout << std::setprecision(12) << "  mass " << m.mass << "  variance "
                  << m.second_moment << "  fourth moment " << m.fourth_moment << '\n';
        ok = ok && report.all_pass();
    }
    return check && !ok ? exit_regression : exit_ok;
}

int cmd_kernels_operator(const RunConfig& c) {
    const auto specs = c.model_specs();
    const Grid1D grid = make_grid(c.L, c.nodes());
    fs::create_directories(c.out_dir);
    for (const auto& spec : specs) {
        const Model model = spec.build(c.params, grid, c.quadrature);
        auto out = open_output(c.out_dir / ("operator_" + spec.label() + ".csv"));
        if (model.dispersal)
            model.dispersal->write_csv(out);
        else
            model.laplacian.write_csv(out);
        std::cout << "wrote " << (c.out_dir / ("operator_" + spec.label() + ".csv")).string() << '\n';
    }
    return exit_ok;
}

int cmd_simulate(const RunConfig& c) {
    const auto start = std::chrono::steady_clock::now();
    const auto specs = c.model_specs();
    const Grid1D grid = make_grid(c.L, c.nodes());
    fs::create_directories(c.out_dir);
    json runs = json::array();
    for (const auto& spec : specs) {
        const Model model = spec.build(c.params, grid, c.quadrature);
        check_step_stability(model, c.h_t);
        const auto eq = upper_equilibrium(c.params.A, c.params.B);

        auto traj = open_output(c.out_dir / ("trajectory_" + spec.label() + ".csv"));
        write_trajectory_csv_header(traj);
        SteadyOptions opts;
        opts.h_t = c.h_t;
        opts.tol = c.tol;
        opts.normalized_criterion = c.normalized;
        opts.max_steps = std::min<long>(c.max_steps, std::lround(c.t_end / c.h_t));
        opts.sample_every = std::max<long>(1, std::lround(c.sample_dt / c.h_t));
        opts.observer = [&](const TrajectorySample& s) { write_trajectory_csv_row(traj, s); };
        const auto result =
            run_to_steady(perturbed_uniform_state(model, eq.v_star, eq.w_star, c.perturbation),
                          model, opts);
        write_trajectory_csv_row(traj, summarize(result.state, model));

        auto prof = open_output(c.out_dir / ("profile_" + spec.label() + ".csv"));
        write_profile_csv(prof, grid, StationaryResidual::pack(result.state.v, result.state.w));

        const auto s = summarize(result.state, model);
        std::cout << spec.label() << ": t=" << result.state.t << " steps=" << result.steps
                  << " converged=" << (result.converged ? "yes" : "no") << " avg_v=" << s.avg_v
                  << " max_v=" << s.max_v << " invariant_violations="
                  << result.invariant_region_violations << '\n';
        runs.push_back({{"model", spec.label()},
                        {"steps", result.steps},
                        {"t", result.state.t},
                        {"converged", result.converged},
                        {"last_step_delta", result.last_step_delta},
                        {"avg_v", s.avg_v},
                        {"max_v", s.max_v},
                        {"invariant_region_violations", result.invariant_region_violations},
                        {"negativity_violations", result.negativity_violations}});
    }
    write_manifest(c, {{"grid", {{"L", grid.half_width}, {"N", grid.n_nodes}, {"h", grid.spacing}}},
                       {"runs", runs}},
                   seconds_since(start));
    return exit_ok;
}

int cmd_steady(const RunConfig& c, bool desert) {
    const auto start = std::chrono::steady_clock::now();
    const Grid1D grid = make_grid(c.L, c.nodes());
    fs::create_directories(c.out_dir);
    json runs = json::array();
    for (const auto& spec : c.model_specs()) {
        const StationaryResidual residual(spec.build(c.params, grid, c.quadrature));
        const auto u = desert ? newton_solve(residual, c.params.A, seed_desert(residual, c.params.A)).u
                              : seed_vegetated(residual, c.params.A, c.perturbation);
        const auto v = residual.v_of(u);
        const auto stab = stability_flag(residual, u, c.params.A);
        const double peak = *std::max_element(v.begin(), v.end());
        const double avg = grid.integral_mean(v);
        const double ratio = boundary_sharpness(v, grid);
        auto prof = open_output(c.out_dir / ("steady_" + spec.label() + ".csv"));
        write_profile_csv(prof, grid, u);
        std::cout << spec.label() << ": max_v=" << peak << " avg_v=" << avg
                  << " boundary_ratio=" << ratio << " stability=" << to_string(stab.flag)
                  << " (max Re " << stab.max_real_part << ")\n";
        runs.push_back({{"model", spec.label()},
                        {"max_v", peak},
                        {"avg_v", avg},
                        {"boundary_ratio", ratio},
                        {"stability", to_string(stab.flag)},
                        {"max_real_part", stab.max_real_part},
                        {"residual_norm", residual.residual_norm(u, c.params.A)}});
    }
    write_manifest(c, {{"grid", {{"L", grid.half_width}, {"N", grid.n_nodes}}}, {"runs", runs}},
                   seconds_since(start));
    return exit_ok;
}

void write_sweep_plot(const fs::path& dir) {
    std::ofstream gp(dir / "fig1.gp");
    gp << "set datafile separator ','\n"
          "set logscale x\n"
          "set xlabel 'L'\nset ylabel 'average biomass'\n"
          "set key left top\n"
          "set term pngcairo size 800,500\nset output 'fig1.png'\n"
          "plot for [m in 'laplace super_gaussian local'] \\\n"
          "  '< grep ^'.m.', sweep.csv' using 3:5 with linespoints title m\n";
}

int cmd_sweep(const RunConfig& c, bool check) {
    const auto start = std::chrono::steady_clock::now();
    SweepConfig sc;
    sc.params = c.params;
    sc.L_min = c.L_min;
    sc.L_max = c.L_max;
    sc.n_L = c.n_L;
    sc.models = c.model_specs();
    sc.grid = c.grid_policy;
    sc.quadrature = c.quadrature;
    sc.integrator.h_t = c.h_t;
    sc.integrator.tol = c.tol;
    sc.integrator.max_steps = c.max_steps;
    sc.integrator.normalized_criterion = c.normalized;
    sc.perturbation = c.perturbation;
    sc.threads = c.threads;

    const auto rows = run_patch_sweep(sc, [](const SweepRow& r) {
        std::cerr << std::setprecision(5) << r.model << " L=" << r.L << " avg=" << r.avg_biomass
                  << (r.converged ? "" : " (not converged)") << " " << r.wall_seconds << "s\n";
    });
    const auto lcrit = detect_critical_L(rows, c.threshold);

    fs::create_directories(c.out_dir);
    {
        std::ofstream out(c.out_dir / "sweep.csv");
        write_sweep_csv(out, rows);
        std::ofstream lc(c.out_dir / "lcrit.csv");
        write_lcrit_csv(lc, lcrit);
    }
    write_sweep_plot(c.out_dir);

    json lj = json::array();
    for (const auto& r : lcrit) {
        std::cout << r.model << ": L_crit = " << (r.L_crit ? fmt(*r.L_crit) : "below range") << '\n';
        lj.push_back({{"model", r.model},
                      {"L_crit", r.L_crit ? json(*r.L_crit) : json(nullptr)},
                      {"below_range", r.below_range},
                      {"rule", r.rule}});
    }
    std::size_t unconverged = 0;
    for (const auto& r : rows)
        unconverged += r.converged ? 0 : 1;
    write_manifest(c, {{"L_values", log_spaced(c.L_min, c.L_max, c.n_L)},
                       {"lcrit", lj},
                       {"unconverged_rows", unconverged},
                       {"outputs", {"sweep.csv", "lcrit.csv", "fig1.gp"}}},
                   seconds_since(start));

    if (!check)
        return exit_ok;
    // Fat tail < thin tail < local, each within 20% of the reference values.
    const std::map<std::string, double> reference{
        {"laplace", 1.46}, {"super_gaussian", 1.76}, {"local", 2.33}};
    bool ok = true;
    std::map<std::string, double> found;
    for (const auto& r : lcrit) {
        const auto ref = reference.find(r.model);
        if (ref == reference.end())
            continue;
        const bool in_band = r.L_crit && std::abs(*r.L_crit / ref->second - 1.0) <= 0.2;
        std::cout << "check " << r.model << " within 20% of " << ref->second << ": "
                  << (in_band ? "PASS" : "FAIL") << '\n';
        ok = ok && in_band;
        if (r.L_crit)
            found[r.model] = *r.L_crit;
    }
    if (found.size() == 3) {
        const bool ordered = found["laplace"] < found["super_gaussian"] &&
                             found["super_gaussian"] < found["local"];
        std::cout << "check ordering laplace < super_gaussian < local: "
                  << (ordered ? "PASS" : "FAIL") << '\n';
        ok = ok && ordered;
    }
    return ok ? exit_ok : exit_regression;
}

void write_bifurcation_plots(const fs::path& dir) {
    for (const auto& [name, dw] : {std::pair{"fig2", "0.1"}, std::pair{"fig3", "80"}}) {
        std::ofstream gp(dir / (std::string(name) + ".gp"));
        gp << "set datafile separator ','\n"
              "set xlabel 'A'\nset ylabel 'max v'\n"
              "set term pngcairo size 800,500\nset output '"
           << name << ".png'\n"
           << "set arrow from 0.9, graph 0 to 0.9, graph 1 nohead dt 2\n"
              "plot for [m in 'laplace super_gaussian local'] \\\n"
              "  \"< awk -F, '$1==\\\"\".m.\"\\\" && $3==\\\"vegetated\\\" && $11+0==" << dw
           << "' branch.csv\" using 6:7 with lines title m\n";
    }
    std::ofstream gp(dir / "fig4.gp");
    gp << "set datafile separator ','\n"
          "set xlabel 'x'\nset ylabel 'v'\n"
          "set term pngcairo size 800,500\nset output 'fig4.png'\n"
          "files = system('ls profiles/*.csv')\n"
          "plot for [f in files] f using 1:2 every ::1 with lines title f\n";
}

int cmd_bifurcate(const RunConfig& c, bool check) {
    const auto start = std::chrono::steady_clock::now();
    BifurcationConfig bc;
    bc.params = c.params;
    bc.d_w_values = c.d_w_values;
    bc.L = c.L;
    bc.N = c.N;
    bc.models = c.model_specs();
    bc.quadrature = c.quadrature;
    bc.controls = c.controls;
    bc.A_start = c.A_start;
    bc.perturbation = c.perturbation;
    bc.gallery_A = c.gallery_A;
    bc.gallery_d_w = c.gallery_d_w;
    bc.threads = c.threads;

    const auto suite = run_bifurcation_suite(bc);
    fs::create_directories(c.out_dir / "profiles");

    std::ofstream branch_csv(c.out_dir / "branch.csv");
    write_branch_csv_header(branch_csv);
    std::ofstream folds_csv(c.out_dir / "folds.csv");
    folds_csv << std::setprecision(17) << "model,d_w,branch_id,fold_index,A,arclength\n";
    json branches = json::array();
    bool floor_ok = true, fold_ok = true, below_ok = false, any_slow = false, any_fast = false;
    for (const auto& rec : suite.branches) {
        const ModelSpec spec = ModelSpec::parse(rec.model == "local" ? "local" : rec.model);
        write_branch_csv(branch_csv, rec.branch, rec.model, spec.gaussian_label(), rec.d_w,
                         rec.branch_id);
        for (std::size_t k = 0; k < rec.branch.folds.size(); ++k)
            folds_csv << rec.model << ',' << rec.d_w << ',' << rec.branch_id << ',' << k << ','
                      << rec.branch.folds[k].A << ',' << rec.branch.folds[k].arclength << '\n';

        std::size_t floor_violations = 0;
        for (const auto& p : rec.branch.points)
            if (p.max_v > 0.01 && p.max_v < c.params.B / p.A)
                ++floor_violations;
        floor_ok = floor_ok && floor_violations == 0 && !rec.error;
        const auto low = lowest_fold(rec.branch);
        if (rec.branch_id == "vegetated" && rec.d_w == 0.1) {
            any_slow = true;
            fold_ok = fold_ok && low && *low >= 0.85 && *low <= 1.0;
        }
        if (rec.branch_id == "vegetated" && rec.d_w == 80.0 && rec.model != "local") {
            any_fast = true;
            for (const auto& p : rec.branch.points)
                below_ok = below_ok || (p.A < 0.9 && p.max_v > 0.1);
        }

        std::cout << rec.model << " d_w=" << rec.d_w << " " << rec.branch_id << ": "
                  << rec.branch.points.size() << " points, " << rec.branch.folds.size()
                  << " folds, " << to_string(rec.branch.termination);
        if (low)
            std::cout << ", lowest fold A=" << *low;
        if (rec.error)
            std::cout << ", error: " << *rec.error;
        std::cout << '\n';
        json folds = json::array();
        for (const auto& f : rec.branch.folds)
            folds.push_back(f.A);
        branches.push_back({{"model", rec.model},
                            {"d_w", rec.d_w},
                            {"branch_id", rec.branch_id},
                            {"points", rec.branch.points.size()},
                            {"folds", folds},
                            {"termination", to_string(rec.branch.termination)},
                            {"message", rec.branch.message},
                            {"floor_violations", floor_violations},
                            {"error", rec.error ? json(*rec.error) : json(nullptr)}});
    }

    json gallery = json::array();
    for (const auto& g : suite.gallery) {
        const std::string name = "profiles/" + g.model + "_dw" + fmt(g.d_w) + "_A" + fmt(g.A) + ".csv";
        std::ofstream out(c.out_dir / name);
        write_profile_csv(out, suite.grid, g.u);
        gallery.push_back({{"model", g.model}, {"d_w", g.d_w}, {"A", g.A}, {"file", name}});
    }
    write_bifurcation_plots(c.out_dir);
    write_manifest(c, {{"grid", {{"L", suite.grid.half_width}, {"N", suite.grid.n_nodes}}},
                       {"branches", branches},
                       {"gallery", gallery}},
                   seconds_since(start));

    if (!check)
        return exit_ok;
    bool ok = true;
    auto report = [&](const std::string& what, bool pass) {
        std::cout << "check " << what << ": " << (pass ? "PASS" : "FAIL") << '\n';
        ok = ok && pass;
    };
    report("max_v >= B/A on every vegetated point", floor_ok);
    if (any_slow)
        report("d_w=0.1 folds in [0.85, 1.00]", fold_ok);
    if (any_fast)
        report("d_w=80 pattern below A=0.9", below_ok);
    return ok ? exit_ok : exit_regression;
}

int cmd_spectral(const RunConfig& c, const std::vector<double>& Ls, std::optional<double> M_user,
                 std::optional<double> v_range, bool check) {
    // Default sampling range: up to the upper equilibrium, or 1 without one.
    const double range = v_range.value_or(
        c.params.A > 2.0 * c.params.B ? upper_equilibrium(c.params.A, c.params.B).v_star : 1.0);
    const auto start = std::chrono::steady_clock::now();
    fs::create_directories(c.out_dir);
    std::ofstream csv(c.out_dir / "spectral.csv");
    const std::string header = "model,L,N,beta1,lambda1,M,extinction_guaranteed,margin,polished\n";
    csv << header;
    std::cout << header;
    bool ok = true;
    json rows = json::array();
    for (const auto& spec : c.model_specs()) {
        double previous = std::numeric_limits<double>::infinity();
        for (double L : Ls) {
            const std::size_t N = c.N.value_or(c.grid_policy.nodes_for(L));
            const Grid1D grid = make_grid(L, N);
            const LaplacianOperator lap(grid);
            const auto lambda = principal_eigenvalue_laplacian(lap, 1.0);
            double beta = std::nan("");
            bool polished = false;
            if (spec.kernel) {
                const DispersalOperator op(grid, *spec.kernel, c.quadrature);
                const auto est = principal_eigenvalue_nonlocal(op);
                beta = est.value;
                polished = est.polished;
            } else {
                beta = 0.5 * lambda.value;  // (1/2) lambda1 for the local comparison model
            }
            LipschitzEstimate M;
            if (M_user) {
                M.M = *M_user;
                M.lower_bound = false;
            } else {
                M = estimate_lipschitz_M(c.params, grid, range);
            }
            const auto verdict = extinction_criterion(beta, c.params.d_v, M.M);
            std::ostringstream line;
            line << std::setprecision(17) << spec.label() << ',' << L << ',' << N << ',' << beta
                 << ',' << lambda.value << ',' << M.M << ',' << verdict.extinction_guaranteed << ','
                 << verdict.margin << ',' << polished << '\n';
            csv << line.str();
            std::cout << line.str();
            ok = ok && beta < previous;
            previous = beta;
            rows.push_back({{"model", spec.label()}, {"L", L}, {"N", N}, {"beta1", beta},
                            {"lambda1", lambda.value}, {"M", M.M}, {"M_is_lower_bound", M.lower_bound},
                            {"v_range", range}});
        }
    }
    write_manifest(c, {{"rows", rows}}, seconds_since(start));
    if (check)
        std::cout << "check beta1 decreasing in L: " << (ok ? "PASS" : "FAIL") << '\n';
    return check && !ok ? exit_regression : exit_ok;
}

int fail(const char* kind, const std::string& message, int code) {
    std::cerr << json{{"status", "error"}, {"kind", kind}, {"message", message}, {"exit_code", code}}
              << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical lab for the non-local Klausmeier vegetation model"};
    app.set_version_flag("--version", version);
    app.require_subcommand(1);

    FlagSink sink;
    bool check = false;

    auto* kernels = app.add_subcommand("kernels", "Kernel diagnostics");
    kernels->require_subcommand(1);
    auto* kcheck = kernels->add_subcommand("check", "Check positivity, symmetry, decay, moments, mass");
    std::string family = "all";
    std::optional<fs::path> table;
    kcheck->add_option("--family", family, "laplace, super_gaussian or all")
        ->check(CLI::IsMember({"laplace", "super_gaussian", "all"}));
    kcheck->add_option("--table", table, kernel_table_help)->check(CLI::ExistingFile);
    kcheck->add_flag("--check", check, "Exit 4 if any assumption fails");

    auto* kop = kernels->add_subcommand("operator", "Export the assembled dispersal matrix as CSV");
    sink.common(kop);
    sink.model(kop);
    sink.list(kop, "--models", "model.models", "laplace, super_gaussian, local, custom");
    sink.value(kop, "--L", "grid.L", "Half-width");
    sink.value(kop, "--N", "grid.N", "Nodes");

    auto* simulate = app.add_subcommand("simulate", "Forward Euler run from the perturbed upper equilibrium");
    sink.common(simulate);
    sink.model(simulate);
    sink.integrator(simulate);
    sink.list(simulate, "--models", "model.models", "laplace, super_gaussian, local, custom");
    sink.value(simulate, "--L", "grid.L", "Half-width");
    sink.value(simulate, "--N", "grid.N", "Nodes (default max(128, ceil(8L)))");
    sink.value(simulate, "--t-end", "integrator.t_end", "Final time");
    sink.value(simulate, "--sample-dt", "integrator.sample_dt", "Trajectory sampling interval");

    auto* steady = app.add_subcommand("steady", "Newton solve for a stationary state");
    bool desert = false;
    sink.common(steady);
    sink.model(steady);
    sink.list(steady, "--models", "model.models", "laplace, super_gaussian, local, custom");
    sink.value(steady, "--L", "grid.L", "Half-width");
    sink.value(steady, "--N", "grid.N", "Nodes");
    sink.value(steady, "--perturbation", "integrator.perturbation", "Relative cosine perturbation");
    steady->add_flag("--desert", desert, "Solve for the desert state instead");

    auto* sweep = app.add_subcommand("sweep", "Critical patch size sweep");
    bool fast = false;
    sink.common(sweep);
    sink.model(sweep);
    sink.integrator(sweep);
    sink.list(sweep, "--models", "model.models", "laplace, super_gaussian, local, custom");
    sink.value(sweep, "--L-min", "sweep.L_min", "Smallest half-width");
    sink.value(sweep, "--L-max", "sweep.L_max", "Largest half-width");
    sink.value(sweep, "--n-L", "sweep.n_L", "Number of log-spaced half-widths");
    sink.value(sweep, "--threshold", "sweep.threshold", "Collapse threshold on average biomass");
    sweep->add_flag("--fast", fast, "20 half-widths on [1, 10]");
    sweep->add_flag("--check", check, "Exit 4 unless ordering and 20% bands hold");

    auto* bifurcate = app.add_subcommand("bifurcate", "Pseudo-arclength continuation in A");
    sink.common(bifurcate);
    sink.list(bifurcate, "--dw", "continuation.d_w", "Water diffusion rate(s)");
    sink.value(bifurcate, "--B", "model.B", "Plant mortality");
    sink.value(bifurcate, "--dv", "model.d_v", "Plant dispersal rate");
    sink.value(bifurcate, "--kernel-table", "model.kernel_table", kernel_table_help);
    sink.value(bifurcate, "--quadrature", "grid.quadrature", "mass_corrected or trapezoid");
    sink.list(bifurcate, "--models", "model.models", "laplace, super_gaussian, local, custom");
    sink.value(bifurcate, "--L", "grid.L", "Half-width (N defaults to floor(3L))");
    sink.value(bifurcate, "--N", "grid.N", "Nodes");
    sink.value(bifurcate, "--ds0", "continuation.ds0", "Initial arclength step");
    sink.value(bifurcate, "--ds-max", "continuation.ds_max", "Largest arclength step");
    sink.value(bifurcate, "--max-points", "continuation.max_points", "Point cap per branch");
    sink.list(bifurcate, "--gallery-A", "continuation.gallery_A", "Profile gallery rainfall values");
    sink.value(bifurcate, "--gallery-dw", "continuation.gallery_d_w", "d_w of the gallery");
    bifurcate->add_flag("--check", check, "Exit 4 unless the floor, fold and pattern checks hold");

    auto* spectral = app.add_subcommand("spectral", "Principal eigenvalues and extinction criterion");
    std::vector<double> Ls;
    sink.common(spectral);
    sink.model(spectral);
    spectral->add_option("--L", Ls, "Half-width (repeatable)")->required();
    sink.list(spectral, "--kernel", "model.models", "laplace, super_gaussian, local, custom");
    sink.value(spectral, "--N", "grid.N", "Nodes (default max(128, ceil(8L)))");
    std::optional<double> M_user, v_range;
    spectral->add_option("--M", M_user, "Lipschitz constant (default: sampled estimate, a lower bound)");
    spectral->add_option("--v-range", v_range, "Sampling range for the Lipschitz estimate");
    spectral->add_flag("--check", check, "Exit 4 unless beta1 decreases in L");

    for (auto* sub : {kop, simulate, steady, sweep, bifurcate, spectral})
        sub->footer("Flags override values from --config; run.out defaults to "
                    "$NLK_OUTPUT_ROOT/<command> (NLK_OUTPUT_ROOT defaults to ./runs).");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        if (kcheck->parsed())
            return cmd_kernels_check(family, table, check);
        if (kop->parsed())
            return cmd_kernels_operator(resolve_config("operator", sink.config_file, sink.settings));
        if (simulate->parsed())
            return cmd_simulate(resolve_config("simulate", sink.config_file, sink.settings));
        if (steady->parsed())
            return cmd_steady(resolve_config("steady", sink.config_file, sink.settings), desert);
        if (sweep->parsed()) {
            if (fast) {
                sink.settings.try_emplace("sweep.L_max", "10");
                sink.settings.try_emplace("sweep.n_L", "20");
            }
            return cmd_sweep(resolve_config("sweep", sink.config_file, sink.settings), check);
        }
        if (bifurcate->parsed())
            return cmd_bifurcate(resolve_config("bifurcate", sink.config_file, sink.settings), check);
        if (spectral->parsed())
            return cmd_spectral(resolve_config("spectral", sink.config_file, sink.settings), Ls,
                                M_user, v_range, check);
    } catch (const ConfigError& e) {
        return fail("config", e.what(), exit_config);
    } catch (const NumericalError& e) {
        return fail("numerical", e.what(), exit_numerical);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), exit_numerical);
    }
    return exit_ok;
}
