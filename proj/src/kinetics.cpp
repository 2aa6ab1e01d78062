#include "nlk/kinetics.hpp"

#include "nlk/errors.hpp"

#include <algorithm>
#include <cmath>

namespace nlk {

std::string to_string(Variant variant) {
    return variant == Variant::local ? "local" : "nonlocal";
}

void ModelParams::validate() const {
    auto require = [](double value, const char* name) {
        if (!(value > 0.0) || !std::isfinite(value))
            throw ConfigError(std::string(name) + " must be strictly positive, got " +
                              std::to_string(value));
    };
    require(A, "A");
    require(B, "B");
    require(d_v, "d_v");
    require(d_w, "d_w");
}

std::vector<KineticEquilibrium> constant_steady_states(double A, double B) {
    if (!(A > 0.0) || !(B > 0.0))
        throw ConfigError("constant_steady_states requires A > 0 and B > 0");

    std::vector<KineticEquilibrium> out{{0.0, A, EquilibriumIndex::desert}};
    const double disc = A * A - 4.0 * B * B;
    if (disc > 0.0) {
        const double root = std::sqrt(disc);
        // Lower root via the product v2 * v3 = 1 to avoid cancellation when A >> B.
        const double v3 = (A + root) / (2.0 * B);
        const double v2 = 1.0 / v3;
        out.push_back({v2, A / (v2 * v2 + 1.0), EquilibriumIndex::lower});
        out.push_back({v3, A / (v3 * v3 + 1.0), EquilibriumIndex::upper});
    } else if (disc == 0.0) {
        out.push_back({1.0, B, EquilibriumIndex::merged});
    }
    return out;
}

KineticEquilibrium upper_equilibrium(double A, double B) {
    const auto states = constant_steady_states(A, B);
    if (states.size() < 2)
        throw ConfigError("no vegetated equilibrium: A < 2B");
    return states.back();
}

void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs) {
    const std::size_t n = diag.size();
    std::vector<double> c(n);
    double pivot = diag[0];
    if (pivot == 0.0)
        throw SingularSystem("zero pivot in tridiagonal solve at row 0");
    c[0] = upper[0] / pivot;
    rhs[0] /= pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = diag[i] - lower[i] * c[i - 1];
        if (pivot == 0.0 || !std::isfinite(pivot))
            throw SingularSystem("zero pivot in tridiagonal solve at row " + std::to_string(i));
        c[i] = i + 1 < n ? upper[i] / pivot : 0.0;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / pivot;
    }
    for (std::size_t i = n - 1; i-- > 0;)
        rhs[i] -= c[i] * rhs[i + 1];
}

std::vector<double> solve_water_stationary(std::span<const double> v, const ModelParams& params,
                                           const Grid1D& grid) {
    const std::size_t n = grid.n_nodes;
    std::vector<double> W(n, 0.0);
    if (n < 3)
        return W;
    const std::size_t m = n - 2;
    const double k = params.d_w / (grid.spacing * grid.spacing);

    // Interior unknowns W_1 .. W_{N-2}; the boundary values are zero.
    std::vector<double> lower(m, -k), diag(m), upper(m, -k), rhs(m, params.A);
    for (std::size_t i = 0; i < m; ++i) {
        const double vi = v[i + 1];
        if (vi < 0.0)
            throw ConfigError("solve_water_stationary requires v >= 0");
        diag[i] = 2.0 * k + vi * vi + 1.0;
    }
    solve_tridiagonal(lower, diag, upper, rhs);
    std::copy(rhs.begin(), rhs.end(), W.begin() + 1);

    const double ceiling = params.A + 1e-10 * std::max(1.0, params.A);
    for (double value : W)
        if (!(value >= -1e-14) || value > ceiling)
            throw NumericalError("stationary water left [0, A]: " + std::to_string(value));
    return W;
}

ReactionTerms reaction_rhs(std::span<const double> v, std::span<const double> w,
                           const ModelParams& params) {
    ReactionTerms r{std::vector<double>(v.size()), std::vector<double>(v.size())};
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double uptake = v[i] * v[i] * w[i];
        r.dv[i] = uptake - params.B * v[i];
        r.dw[i] = -uptake - w[i] + params.A;
    }
    return r;
}

std::vector<double> scalar_f(std::span<const double> v, const ModelParams& params,
                             const Grid1D& grid) {
    const auto W = solve_water_stationary(v, params, grid);
    std::vector<double> f(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        f[i] = v[i] * v[i] * W[i] - params.B * v[i];
    return f;
}

} // namespace nlk
