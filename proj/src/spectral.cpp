#include "nlk/spectral.hpp"

#include "nlk/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nlk {

namespace {

double norm2(const std::vector<double>& x) {
    return std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
}

void normalize(std::vector<double>& x) {
    const double n = norm2(x);
    for (double& value : x)
        value /= n;
}

/// y = S x with S = D^{1/2} K D^{-1/2}.
void apply_symmetrized(const DispersalOperator& op, const std::vector<double>& sqrt_w,
                       const std::vector<double>& x, std::vector<double>& scratch,
                       std::vector<double>& y) {
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i)
        scratch[i] = x[i] / sqrt_w[i];
    op.apply_kernel(scratch, y);
    for (std::size_t i = 0; i < n; ++i)
        y[i] *= sqrt_w[i];
}

double residual_of(const std::vector<double>& Sx, const std::vector<double>& x, double mu) {
    double r = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        r += (Sx[i] - mu * x[i]) * (Sx[i] - mu * x[i]);
    return std::sqrt(r);
}

} // namespace

EigenEstimate principal_eigenvalue_nonlocal(const DispersalOperator& op,
                                            const PowerIterationOptions& opts) {
    const std::size_t n = op.size();
    std::vector<double> sqrt_w(n);
    for (std::size_t i = 0; i < n; ++i)
        sqrt_w[i] = std::sqrt(op.grid().quad_weights[i]);

    // Positive start vector: the Perron vector is positive, so no component is missed.
    std::vector<double> x(n, 1.0), y(n), scratch(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = 1.0 + 0.5 * std::cos(3.14159 * op.grid().nodes[i] / (2.0 * op.grid().half_width));
    normalize(x);

    EigenEstimate est;
    double mu = 0.0;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        apply_symmetrized(op, sqrt_w, x, scratch, y);
        const double next_mu = std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
        est.iterations = it;
        const bool settled = std::abs(next_mu - mu) <= opts.rq_tol * std::abs(next_mu);
        mu = next_mu;
        if (settled || it % 50 == 0) {
            est.residual = residual_of(y, x, mu);
            if (est.residual <= opts.residual_tol) {
                est.converged = true;
                break;
            }
        }
        x = y;
        normalize(x);
    }

    if (!est.converged) {
        // Small spectral gap: finish with inverse iteration shifted to the Rayleigh quotient.
        Eigen::MatrixXd S(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                S(i, j) = sqrt_w[i] * op.entry(i, j) / sqrt_w[j];
        for (int pass = 0; pass < 8 && !est.converged; ++pass) {
            Eigen::MatrixXd shifted = S;
            shifted.diagonal().array() -= mu * (1.0 + 1e-13);
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(shifted);
            Eigen::Map<Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(n));
            Eigen::VectorXd z = lu.solve(xv);
            if (!z.allFinite())
                break;
            z.normalize();
            if (z.sum() < 0.0)
                z = -z;
            xv = z;
            apply_symmetrized(op, sqrt_w, x, scratch, y);
            mu = std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
            est.residual = residual_of(y, x, mu);
            est.polished = true;
            ++est.iterations;
            est.converged = est.residual <= opts.residual_tol;
        }
    }

    if (std::accumulate(x.begin(), x.end(), 0.0) < 0.0)
        for (double& value : x)
            value = -value;
    est.value = 1.0 - mu;
    est.vector = std::move(x);
    if (!est.converged)
        throw NoConvergence("principal eigenvalue of -L did not converge (residual " +
                            std::to_string(est.residual) + ")");
    return est;
}

EigenEstimate principal_eigenvalue_laplacian(const LaplacianOperator& op, double d,
                                             const PowerIterationOptions& opts) {
    const std::size_t n = op.size();
    if (n < 3)
        throw BadGrid("need at least one interior node");
    const std::size_t m = n - 2;
    const double k = d * op.inv_h2();

    // T = -d Lap restricted to interior nodes: tridiag(-k, 2k, -k).
    auto apply_T = [&](const std::vector<double>& x, std::vector<double>& y) {
        for (std::size_t i = 0; i < m; ++i) {
            const double left = i > 0 ? x[i - 1] : 0.0;
            const double right = i + 1 < m ? x[i + 1] : 0.0;
            y[i] = k * (2.0 * x[i] - left - right);
        }
    };

    const Grid1D& g = op.grid();
    std::vector<double> x(m), y(m);
    for (std::size_t i = 0; i < m; ++i)
        x[i] = 1.0 + 0.25 * std::cos(3.0 * g.nodes[i + 1] / g.half_width);
    normalize(x);

    EigenEstimate est;
    double lambda = 0.0;
    const std::vector<double> lower(m, -k), upper(m, -k), diag(m, 2.0 * k);
    for (int it = 1; it <= opts.max_iterations; ++it) {
        std::vector<double> z = x;
        solve_tridiagonal(lower, diag, upper, z);
        normalize(z);
        x = std::move(z);
        apply_T(x, y);
        const double next = std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
        est.iterations = it;
        const bool settled = std::abs(next - lambda) <= opts.rq_tol * std::abs(next);
        lambda = next;
        est.residual = residual_of(y, x, lambda);
        // The operator norm is ~4k; judge the residual relative to it.
        if (settled && est.residual <= opts.residual_tol * std::max(1.0, 4.0 * k)) {
            est.converged = true;
            break;
        }
    }
    if (!est.converged)
        throw NoConvergence("principal eigenvalue of -Lap did not converge");
    est.value = lambda;
    est.vector.assign(n, 0.0);
    std::copy(x.begin(), x.end(), est.vector.begin() + 1);
    return est;
}

ExtinctionVerdict extinction_criterion(double beta1, double d_v, double M_lipschitz) {
    if (!(beta1 > 0.0))
        throw ConfigError("beta1 must be positive");
    if (M_lipschitz < 0.0)
        throw ConfigError("Lipschitz constant must be non-negative");
    const double margin = d_v * beta1 - M_lipschitz;
    return {margin > 0.0, margin};
}

LipschitzEstimate estimate_lipschitz_M(const ModelParams& params, const Grid1D& grid,
                                       double v_range, int samples) {
    if (!(v_range > 0.0))
        throw ConfigError("v_range must be positive");
    if (samples < 1)
        throw ConfigError("need at least one sample interval");

    const std::size_t n = grid.n_nodes;
    const double dc = v_range / samples;
    auto f_at = [&](double level) { return scalar_f(std::vector<double>(n, level), params, grid); };

    LipschitzEstimate est;
    est.samples = samples;
    auto previous = f_at(0.0);
    for (int k = 1; k <= samples; ++k) {
        auto current = f_at(dc * k);
        double jump = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            jump = std::max(jump, std::abs(current[i] - previous[i]));
        est.M = std::max(est.M, jump / dc);
        previous = std::move(current);
    }
    return est;
}

} // namespace nlk
