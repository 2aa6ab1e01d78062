#include "nlk/dynamics.hpp"
#include "nlk/errors.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace nlk;

namespace {

Model nonlocal_model(double L, std::size_t n, Kernel kernel = Kernel::super_gaussian(),
                     double A = 1.8) {
    ModelParams p;
    p.A = A;
    return make_model(p, make_grid(L, n), kernel);
}

Model local_model(double L, std::size_t n) {
    ModelParams p;
    p.variant = Variant::local;
    return make_model(p, make_grid(L, n), std::nullopt);
}

} // namespace

TEST_CASE("one step from the empty state") {
    const Model m = nonlocal_model(5.0, 51);
    State s;
    s.v.assign(51, 0.0);
    s.w.assign(51, 0.0);
    const State next = euler_step(s, m, 1e-4);
    CHECK(testing::sup_norm(next.v) == 0.0);
    for (std::size_t i = 1; i + 1 < 51; ++i)
        CHECK(next.w[i] == doctest::Approx(1.8e-4).epsilon(1e-14));
    CHECK(next.w.front() == 0.0);
    CHECK(next.w.back() == 0.0);
    CHECK(next.t == doctest::Approx(1e-4));
    CHECK(next.step_count == 1);
}

TEST_CASE("uniform equilibrium barely moves in the deep interior") {
    const Model m = nonlocal_model(40.0, 801);
    const auto e = upper_equilibrium(1.8, 0.45);
    State s;
    s.v.assign(801, e.v_star);
    s.w.assign(801, e.w_star);
    apply_boundary_conditions(m, s);
    const State next = euler_step(s, m, 1e-4);
    CHECK(std::abs(next.v[400] - e.v_star) < 1e-12);
    CHECK(std::abs(next.w[400] - e.w_star) < 1e-12);
}

TEST_CASE("explicit step guard") {
    CHECK_NOTHROW(check_step_stability(nonlocal_model(25.0, 75), 1e-4));
    ModelParams p;
    p.d_w = 80.0;
    // Fine enough that d_w h_t / h^2 exceeds 1/2.
    const Model fast_water = make_model(p, make_grid(25.0, 501), Kernel::laplace());
    CHECK_THROWS_AS(check_step_stability(fast_water, 1e-4), ConfigError);
    CHECK_THROWS_AS(check_step_stability(nonlocal_model(25.0, 75), 0.3), ConfigError);
    CHECK_THROWS_AS(check_step_stability(local_model(1.0, 2001), 1e-4), ConfigError);
}

TEST_CASE("blowup is reported") {
    const Model m = nonlocal_model(5.0, 51);
    State s;
    s.v.assign(51, 2e6);
    s.w.assign(51, 1.0);
    CHECK_THROWS_AS(euler_step(s, m, 1e-4), Blowup);
    s.v[7] = std::nan("");
    CHECK_THROWS_AS(euler_step(s, m, 1e-4), NumericalError);
}

TEST_CASE("perturbed initial state") {
    const Model m = local_model(3.0, 31);
    const auto s = perturbed_uniform_state(m, 2.0, 0.5, 0.01);
    CHECK(s.v.front() == 0.0);
    CHECK(s.v.back() == 0.0);
    CHECK(s.v[15] == doctest::Approx(2.02));
    CHECK(s.w[15] == 0.5);
    CHECK(s.w.front() == 0.0);
    const Model nl = nonlocal_model(3.0, 31);
    // cos(pi x / 2L) vanishes at the ends, so the non-local v keeps v* there.
    CHECK(perturbed_uniform_state(nl, 2.0, 0.5).v.front() == doctest::Approx(2.0));
}

TEST_CASE("large patch converges to the uniform vegetated state") {
    const Model m = nonlocal_model(50.0, 400, Kernel::laplace());
    const auto e = upper_equilibrium(1.8, 0.45);
    const auto r = run_to_steady(perturbed_uniform_state(m, e.v_star, e.w_star), m, {});
    CHECK(r.converged);
    CHECK(r.last_step_delta < 1e-5);
    CHECK(m.grid.integral_mean(r.state.v) == doctest::Approx(e.v_star).epsilon(0.05));
    CHECK(r.negativity_violations == 0);
    CHECK(r.min_v_seen >= -1e-12);
}

TEST_CASE("small local patch collapses") {
    const Model m = local_model(1.0, 128);
    const auto e = upper_equilibrium(1.8, 0.45);
    const auto r = run_to_steady(perturbed_uniform_state(m, e.v_star, e.w_star), m, {});
    CHECK(r.converged);
    CHECK(m.grid.integral_mean(r.state.v) < 0.1);
    CHECK(r.negativity_violations == 0);
}

TEST_CASE("desert steady state is recognised at once") {
    const Model m = nonlocal_model(10.0, 101);
    State s;
    s.v.assign(101, 0.0);
    s.w = solve_water_stationary(s.v, m.params, m.grid);
    const auto r = run_to_steady(s, m, {});
    CHECK(r.converged);
    CHECK(r.steps == 1);
}

TEST_CASE("normalized step criterion") {
    const Model m = nonlocal_model(10.0, 101);
    const auto e = upper_equilibrium(1.8, 0.45);
    SteadyOptions raw, normalized;
    raw.max_steps = normalized.max_steps = 10;
    raw.tol = normalized.tol = 1e-30;
    normalized.normalized_criterion = true;
    const auto init = perturbed_uniform_state(m, e.v_star, e.w_star);
    const auto a = run_to_steady(init, m, raw), b = run_to_steady(init, m, normalized);
    CHECK(b.normalized_criterion);
    CHECK(b.last_step_delta == doctest::Approx(a.last_step_delta / (1e-4 * std::sqrt(202.0))));
}

TEST_CASE("invariant region holds for random small initial data") {
    testing::Gen gen(5);
    for (int trial = 0; trial < 6; ++trial) {
        const Model m = trial % 2 ? nonlocal_model(gen.uniform(1.0, 6.0), 61, Kernel::laplace())
                                  : nonlocal_model(gen.uniform(1.0, 6.0), 61);
        State s;
        s.w = gen.vector(61, 0.0, 1.8);
        s.v = gen.vector(61, 0.0, 0.45 / 1.8);
        apply_boundary_conditions(m, s);
        SteadyOptions opts;
        opts.max_steps = 20000;
        const auto r = run_to_steady(s, m, opts);
        CHECK(r.invariant_region_violations == 0);
        CHECK(r.negativity_violations == 0);
        CHECK(r.max_v_seen <= 0.25 + 1e-8);
        CHECK(r.max_w_seen <= 1.8 + 1e-8);
    }
}

TEST_CASE("extinction envelope") {
    const Model m = nonlocal_model(5.0, 51);
    const auto report = extinction_decay_check(m, 0.2);
    CHECK(report.threshold == doctest::Approx(0.25));
    CHECK(report.M == 1.8);
    CHECK(report.monotone);
    CHECK(report.final_max_v < 1e-3);
    CHECK(report.final_water_gap < 1e-3);
    for (const auto& s : report.samples)
        CHECK(s.max_v <= s.envelope + 1e-8);

    DecayOptions short_run;
    short_run.t_end = 5.0;
    const auto edge = extinction_decay_check(m, 0.25, short_run);
    for (const auto& s : edge.samples)
        CHECK(s.max_v <= 0.25 + 1e-12);

    const auto zero = extinction_decay_check(m, 0.0, short_run);
    for (const auto& s : zero.samples)
        CHECK(s.max_v == 0.0);

    CHECK_THROWS_AS(extinction_decay_check(m, 0.3, short_run), ConfigError);
}

TEST_CASE("trajectory csv") {
    std::ostringstream out;
    write_trajectory_csv_header(out);
    write_trajectory_csv_row(out, {0.5, 0.1, 0.2, 0.15, 1.0});
    CHECK(out.str() == "t,min_v,max_v,avg_v,max_w\n0.5,0.10000000000000001,0.20000000000000001,"
                       "0.14999999999999999,1\n");
}
