#pragma once

#include "nlk/discretization.hpp"
#include "nlk/kinetics.hpp"

#include <vector>

namespace nlk {

struct EigenEstimate {
    double value = 0.0;
    std::vector<double> vector;  ///< unit l2 norm
    double residual = 0.0;       ///< ||A phi - value phi||_2 / ||phi||_2
    int iterations = 0;
    bool converged = false;
    bool polished = false;       ///< finished by shifted inverse iteration
};

struct SpectralReport {
    double beta1 = 0.0;    ///< principal eigenvalue of -L (non-local)
    double lambda1 = 0.0;  ///< principal eigenvalue of -Lap (Dirichlet)
    double eigvec_residual = 0.0;
    int iterations = 0;
};

struct PowerIterationOptions {
    double rq_tol = 1e-12;      ///< relative change of the Rayleigh quotient
    double residual_tol = 1e-10;
    int max_iterations = 50'000;
};

/// beta1 = 1 - mu_max(K), with mu_max taken from power iteration on the
/// symmetric similarity transform D^{1/2} K D^{-1/2} (D = quadrature
/// weights). When the plain iteration stalls above residual_tol (small
/// spectral gap on large domains) the estimate is finished with shifted
/// inverse iteration. The returned vector is the eigenvector of the
/// symmetrized matrix. Throws NoConvergence if neither stage reaches
/// residual_tol.
EigenEstimate principal_eigenvalue_nonlocal(const DispersalOperator& op,
                                            const PowerIterationOptions& opts = {});

/// Smallest eigenvalue of -d Lap on interior nodes (Dirichlet), by inverse
/// power iteration with tridiagonal solves.
EigenEstimate principal_eigenvalue_laplacian(const LaplacianOperator& op, double d = 1.0,
                                             const PowerIterationOptions& opts = {});

struct ExtinctionVerdict {
    bool extinction_guaranteed = false;
    double margin = 0.0;  ///< d_v beta1 - M
};

/// Sufficient condition d_v beta1 > M for the desert state to be the only
/// stationary solution.
ExtinctionVerdict extinction_criterion(double beta1, double d_v, double M_lipschitz);

struct LipschitzEstimate {
    double M = 0.0;
    int samples = 0;
    /// Always true: sampling can only under-estimate the supremum.
    bool lower_bound = true;
};

/// max |f(c2) - f(c1)|_inf / |c2 - c1| over uniform profiles c in [0, v_range]
/// sampled at `samples` equally spaced levels.
LipschitzEstimate estimate_lipschitz_M(const ModelParams& params, const Grid1D& grid,
                                       double v_range, int samples = 400);

} // namespace nlk
