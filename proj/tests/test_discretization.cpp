#include "nlk/discretization.hpp"
#include "nlk/errors.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

using namespace nlk;

TEST_CASE("grid geometry") {
    const Grid1D g = make_grid(25.0, 75);
    CHECK(g.spacing == doctest::Approx(50.0 / 74.0));
    CHECK(g.nodes.front() == -25.0);
    CHECK(g.nodes.back() == 25.0);

    const Grid1D tiny = make_grid(1.0, 3);
    CHECK(tiny.nodes == std::vector<double>{-1.0, 0.0, 1.0});
    CHECK(tiny.quad_weights == std::vector<double>{0.5, 1.0, 0.5});

    const Grid1D g10 = make_grid(10.0, 301);
    CHECK(std::accumulate(g10.quad_weights.begin(), g10.quad_weights.end(), 0.0) ==
          doctest::Approx(20.0).epsilon(1e-14));
}

TEST_CASE("bad grids") {
    CHECK_THROWS_AS(make_grid(1.0, 2), BadGrid);
    CHECK_THROWS_AS(make_grid(0.0, 10), BadGrid);
    CHECK_THROWS_AS(make_grid(-3.0, 10), BadGrid);
    CHECK_THROWS_AS(make_grid(1.0, 2), ConfigError);
}

TEST_CASE("trapezoid integral is exact on linears and second order on quadratics") {
    const Grid1D g = make_grid(2.0, 41);
    CHECK(g.integrate(sample(g, [](double x) { return 3.0 * x + 1.0; })) == doctest::Approx(4.0));
    double previous = 0.0;
    for (std::size_t n : {21u, 41u, 81u}) {
        const Grid1D gn = make_grid(2.0, n);
        const double err =
            std::abs(gn.integrate(sample(gn, [](double x) { return x * x; })) - 16.0 / 3.0);
        if (previous > 0.0)
            CHECK(previous / err == doctest::Approx(4.0).epsilon(0.01));
        previous = err;
    }
}

TEST_CASE("laplacian on polynomials") {
    const Grid1D g = make_grid(3.0, 61);
    const LaplacianOperator lap(g);
    const auto quad = lap.apply(sample(g, [](double x) { return x * x; }));
    const auto lin = lap.apply(sample(g, [](double x) { return 5.0 * x - 2.0; }));
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        CHECK(quad[i] == doctest::Approx(2.0).epsilon(1e-8));
        CHECK(std::abs(lin[i]) <= 1e-10 * lap.inv_h2() * 17.0);
    }
    CHECK(quad.front() == 0.0);
    CHECK(quad.back() == 0.0);
}

TEST_CASE("laplacian Dirichlet eigenpair converges at second order") {
    const double L = 4.0;
    const double k = std::numbers::pi / (2.0 * L);
    double previous = 0.0;
    for (std::size_t n : {41u, 81u, 161u}) {
        const Grid1D g = make_grid(L, n);
        const auto phi = sample(g, [&](double x) { return std::sin(k * (x + L)); });
        const auto out = LaplacianOperator(g).apply(phi);
        double err = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i)
            err = std::max(err, std::abs(out[i] + k * k * phi[i]));
        CHECK(err < 1e-3);
        if (previous > 0.0)
            CHECK(previous / err == doctest::Approx(4.0).epsilon(0.02));
        previous = err;
    }
}

TEST_CASE("dispersal operator on constants") {
    const Grid1D g = make_grid(50.0, 1001);
    for (const Kernel& kernel : {Kernel::laplace(), Kernel::super_gaussian()}) {
        const DispersalOperator op(g, kernel);
        const auto out = op.apply(std::vector<double>(g.size(), 1.0));
        CHECK(std::abs(out[g.size() / 2]) < 1e-6);
        CHECK(out.back() == doctest::Approx(-0.5).epsilon(5e-3));
        CHECK(out.front() == doctest::Approx(-0.5).epsilon(5e-3));
        for (double x : out)
            CHECK(x <= 1e-8);
    }
    const DispersalOperator op(g, Kernel::laplace());
    CHECK(testing::sup_norm(op.apply(std::vector<double>(g.size(), 0.0))) == 0.0);
}

TEST_CASE("plain trapezoid over-counts the laplace cusp; the default corrects it") {
    const Grid1D g = make_grid(20.0, 161);
    const DispersalOperator plain(g, Kernel::laplace(), Quadrature::trapezoid);
    const DispersalOperator corrected(g, Kernel::laplace());
    CHECK(plain.row_sums()[80] > 1.0 + 1e-3);
    CHECK(corrected.row_sums()[80] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(plain.diagonal_correction() == 0.0);
    CHECK(corrected.diagonal_correction() < 0.0);
}

TEST_CASE("operator invariants on random grids") {
    testing::Gen gen(2024);
    for (int trial = 0; trial < 12; ++trial) {
        const double L = gen.uniform(0.5, 12.0);
        const auto n = static_cast<std::size_t>(gen.integer(5, 160));
        const Grid1D g = make_grid(L, n);
        const Kernel kernel = trial % 2 ? Kernel::laplace() : Kernel::super_gaussian();
        const DispersalOperator op(g, kernel);
        CAPTURE(L);
        CAPTURE(n);

        // Row sums bounded by the kernel mass, entries non-negative.
        for (double s : op.row_sums())
            CHECK(s <= 1.0 + 1e-8);
        const auto K = op.dense();
        for (double x : K)
            CHECK(x >= 0.0);

        // D K symmetric.
        double asym = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                asym = std::max(asym, std::abs(g.quad_weights[i] * K[i * n + j] -
                                               g.quad_weights[j] * K[j * n + i]));
        CHECK(asym <= 1e-12);

        // Boundary loss shrinks with the distance to the nearest boundary.
        const auto loss = op.apply(std::vector<double>(n, 1.0));
        for (std::size_t i = 0; i + 1 < n / 2; ++i) {
            CHECK(loss[i + 1] >= loss[i] - 1e-13);
            CHECK(loss[n - 2 - i] >= loss[n - 1 - i] - 1e-13);
        }

        // Linearity.
        const auto u = gen.vector(n, -1.0, 1.0), v = gen.vector(n, -1.0, 1.0);
        const double a = gen.uniform(-3.0, 3.0), b = gen.uniform(-3.0, 3.0);
        std::vector<double> mix(n);
        for (std::size_t i = 0; i < n; ++i)
            mix[i] = a * u[i] + b * v[i];
        const auto lu = op.apply(u), lv = op.apply(v), lmix = op.apply(mix);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(lmix[i] == doctest::Approx(a * lu[i] + b * lv[i]).epsilon(1e-12).scale(1.0));

        // Banded apply agrees with the dense matrix.
        std::vector<double> ku(n);
        op.apply_kernel(u, ku);
        for (std::size_t i = 0; i < n; ++i) {
            double dense = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                dense += K[i * n + j] * u[j];
            CHECK(ku[i] == doctest::Approx(dense).epsilon(1e-13).scale(1.0));
        }
    }
}

TEST_CASE("coarse grids are flagged as under-resolved") {
    CHECK(DispersalOperator(make_grid(25.0, 75), Kernel::laplace()).under_resolved());
    CHECK_FALSE(DispersalOperator(make_grid(25.0, 201), Kernel::laplace()).under_resolved());
}

TEST_CASE("operator csv export") {
    const DispersalOperator op(make_grid(1.0, 5), Kernel::super_gaussian());
    std::ostringstream out;
    op.write_csv(out);
    const std::string text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);
    CHECK(std::count(text.begin(), text.end(), ',') == 20);
}

namespace {

/// Brute-force L v(x) = int J(z) v(x - z) dz - v(x) for a smooth v, split at
/// the kink of J.
template <class F>
double nonlocal_oracle(const Kernel& J, F&& v, double x) {
    const double c = J.support_cutoff();
    auto f = [&](double z) { return J(z) * v(x - z); };
    return testing::simpson(f, -c, 0.0, 60000) + testing::simpson(f, 0.0, c, 60000) - v(x);
}

} // namespace

TEST_CASE("taylor consistency against a brute-force oracle") {
    const Grid1D g = make_grid(40.0, 801);
    auto bump = [](double x) { return std::exp(-x * x / 8.0); };
    auto bump_dd = [](double x) { return (x * x / 16.0 - 0.25) * std::exp(-x * x / 8.0); };
    const auto profile = sample(g, bump);

    for (const Kernel& kernel : {Kernel::laplace(), Kernel::super_gaussian()}) {
        const DispersalOperator op(g, kernel);
        const double gap = taylor_consistency(op, profile);

        // Continuum gap sup |L v - v''/2| over the same interior nodes.
        double oracle = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = g.nodes[i];
            if (std::abs(x) > 40.0 - kernel.support_cutoff())
                continue;
            oracle = std::max(oracle, std::abs(nonlocal_oracle(kernel, bump, x) - 0.5 * bump_dd(x)));
        }
        CAPTURE(kernel.label());
        CHECK(gap == doctest::Approx(oracle).epsilon(0.02));
        // Leading neglected term m4/24 v''''(0) with v''''(0) = 3/16.
        const double m4 = kernel_moments(kernel).fourth_moment;
        CHECK(gap == doctest::Approx(m4 / 24.0 * 3.0 / 16.0).epsilon(0.25));
        if (kernel.family() == KernelFamily::super_gaussian)
            CHECK(gap < 0.02);
    }
}

TEST_CASE("taylor consistency trivial profiles") {
    const Grid1D g = make_grid(12.0, 241);
    const DispersalOperator op(g, Kernel::super_gaussian());
    CHECK(taylor_consistency(op, std::vector<double>(g.size(), 0.0)) == 0.0);
    CHECK(taylor_consistency(op, sample(g, [](double x) { return 0.3 * x + 1.0; })) < 1e-12);
    CHECK_THROWS_AS(taylor_consistency(DispersalOperator(make_grid(3.0, 61), Kernel::super_gaussian()),
                                       std::vector<double>(61, 1.0)),
                    DomainTooSmall);
}
