#pragma once

#include "nlk/discretization.hpp"

#include <span>
#include <string>
#include <vector>

namespace nlk {

/// Dispersal model for the biomass equation.
///   nonlocal: v_t = d_v L v + ...         (kernel dispersal, mass lost outside)
///   local:    v_t = (d_v / 2) Lap v + ... (Dirichlet v = 0 on the boundary)
enum class Variant { nonlocal, local };

std::string to_string(Variant variant);

struct ModelParams {
    double A = 1.8;    ///< rainfall
    double B = 0.45;   ///< mortality
    double d_v = 2.0;  ///< dispersal rate
    double d_w = 0.1;  ///< water diffusion rate
    Variant variant = Variant::nonlocal;

    /// Throws ConfigError unless all four rates are strictly positive.
    void validate() const;
};

enum class EquilibriumIndex { desert = 1, lower = 2, upper = 3, merged = 4 };

struct KineticEquilibrium {
    double v_star = 0.0;
    double w_star = 0.0;
    EquilibriumIndex index = EquilibriumIndex::desert;
};

/// Spatially uniform equilibria of the kinetic system, sorted by v.
/// Always contains the desert state (0, A); two vegetated states when A > 2B,
/// one merged state (1, B) when A == 2B.
std::vector<KineticEquilibrium> constant_steady_states(double A, double B);

/// Upper vegetated equilibrium (A + sqrt(A^2 - 4B^2)) / (2B). Throws ConfigError if A < 2B.
KineticEquilibrium upper_equilibrium(double A, double B);

/// Stationary water profile: solves d_w Lap W - (v^2 + 1) W + A = 0 with
/// W = 0 on both boundary nodes. Tridiagonal elimination, no pivoting (the
/// system is strictly diagonally dominant). Checks 0 <= W <= A afterwards.
std::vector<double> solve_water_stationary(std::span<const double> v, const ModelParams& params,
                                           const Grid1D& grid);

struct ReactionTerms {
    std::vector<double> dv;
    std::vector<double> dw;
};

/// Pointwise (v^2 w - B v, -v^2 w - w + A).
ReactionTerms reaction_rhs(std::span<const double> v, std::span<const double> w,
                           const ModelParams& params);

/// f(v) = v^2 W(v) - B v with W from solve_water_stationary.
std::vector<double> scalar_f(std::span<const double> v, const ModelParams& params,
                             const Grid1D& grid);

/// Solves a tridiagonal system in place (Thomas algorithm). `lower[0]` and
/// `upper[n-1]` are ignored. Throws SingularSystem on a zero pivot.
void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs);

} // namespace nlk
