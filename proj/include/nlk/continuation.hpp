#pragma once

#include "nlk/model.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nlk {

/// A square system R(u; A) = 0 depending on one scalar parameter.
class ParametricSystem {
public:
    virtual ~ParametricSystem() = default;

    virtual std::size_t dim() const = 0;
    virtual void residual(std::span<const double> u, double A, std::span<double> out) const = 0;
    virtual Eigen::MatrixXd jacobian(std::span<const double> u, double A) const = 0;
    /// dR/dA at (u, A).
    virtual Eigen::VectorXd parameter_derivative(std::span<const double> u, double A) const = 0;

    /// Indices whose rows are time-dependent (excludes pinned Dirichlet
    /// unknowns). Used to restrict the linearisation for stability.
    virtual std::vector<std::size_t> dynamic_indices() const;

    /// Weight of the state in the arclength norm (the parameter has weight 1).
    virtual double state_weight() const { return 1.0 / static_cast<double>(dim()); }

    std::vector<double> residual(std::span<const double> u, double A) const;
    double residual_norm(std::span<const double> u, double A) const;
};

/// Small systems given by callables; used for self-tests and toy problems.
class LambdaSystem final : public ParametricSystem {
public:
    using ResidualFn = std::function<void(std::span<const double>, double, std::span<double>)>;
    using JacobianFn = std::function<Eigen::MatrixXd(std::span<const double>, double)>;
    using ParamFn = std::function<Eigen::VectorXd(std::span<const double>, double)>;

    LambdaSystem(std::size_t dim, ResidualFn r, JacobianFn j, ParamFn p);

    std::size_t dim() const override { return dim_; }
    void residual(std::span<const double> u, double A, std::span<double> out) const override {
        r_(u, A, out);
    }
    Eigen::MatrixXd jacobian(std::span<const double> u, double A) const override {
        return j_(u, A);
    }
    Eigen::VectorXd parameter_derivative(std::span<const double> u, double A) const override {
        return p_(u, A);
    }
    using ParametricSystem::residual;

private:
    std::size_t dim_;
    ResidualFn r_;
    JacobianFn j_;
    ParamFn p_;
};

/// Stationary problem of the coupled model with the rainfall A as parameter.
///
/// Unknowns are u = (v_0..v_{N-1}, w_0..w_{N-1}).
///   R_v = d_v L v + v^2 w - B v     (local: (d_v/2) Lap v on interior nodes, v = 0 at the ends)
///   R_w = d_w Lap w - v^2 w - w + A (interior), w = 0 at the ends
/// Pinned boundary unknowns contribute identity rows.
class StationaryResidual final : public ParametricSystem {
public:
    explicit StationaryResidual(Model model);

    const Model& model() const noexcept { return model_; }
    std::size_t nodes() const noexcept { return model_.size(); }

    std::size_t dim() const override { return 2 * model_.size(); }
    void residual(std::span<const double> u, double A, std::span<double> out) const override;
    Eigen::MatrixXd jacobian(std::span<const double> u, double A) const override;
    Eigen::VectorXd parameter_derivative(std::span<const double> u, double A) const override;
    std::vector<std::size_t> dynamic_indices() const override;
    using ParametricSystem::residual;

    /// Analytic J(u) * direction without forming J.
    std::vector<double> jacobian_vector(std::span<const double> u, double A,
                                        std::span<const double> direction) const;

    /// Concatenates v and w.
    static std::vector<double> pack(std::span<const double> v, std::span<const double> w);
    std::span<const double> v_of(std::span<const double> u) const { return u.first(nodes()); }
    std::span<const double> w_of(std::span<const double> u) const { return u.subspan(nodes()); }

private:
    Model model_;
};

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 50;
    /// Backtrack on the residual norm when a full step increases it.
    bool line_search = true;
};

struct NewtonResult {
    std::vector<double> u;
    int iterations = 0;
    double residual_norm = 0.0;
};

/// Solves R(u; A) = 0 from `guess`. Throws NewtonDiverged (cap reached or
/// non-finite iterate) or SingularJacobian.
NewtonResult newton_solve(const ParametricSystem& system, double A, std::span<const double> guess,
                          const NewtonOptions& opts = {});

enum class Stability { stable, unstable, unknown };
std::string to_string(Stability s);

struct StabilityEstimate {
    Stability flag = Stability::unknown;
    double max_real_part = 0.0;
};

/// Sign of the rightmost eigenvalue of the Jacobian restricted to the
/// dynamic unknowns. Stable iff the real part is below -1e-8. Reports
/// `unknown` when the eigenvalue iteration fails.
StabilityEstimate stability_flag(const ParametricSystem& system, std::span<const double> u,
                                 double A);

enum class Termination { parameter_exit, fold_count_cap, step_failure, point_cap };
std::string to_string(Termination t);

struct BranchPoint {
    double A = 0.0;
    std::size_t snapshot = 0;   ///< index into Branch::snapshots
    double max_v = 0.0;
    double avg_v = 0.0;         ///< trapezoid mean over the domain
    double avg_v_nodes = 0.0;   ///< arithmetic mean over nodes
    Stability stable = Stability::unknown;
    double arclength = 0.0;
    double tangent_A = 0.0;     ///< dA/ds at the point
    double residual_norm = 0.0; ///< independently re-evaluated ||R||_2
    int corrector_iterations = 0;
};

struct Fold {
    double A = 0.0;
    double arclength = 0.0;
    std::size_t after_point = 0;  ///< index of the last point before the turn
    std::vector<double> u;
};

struct Branch {
    std::vector<BranchPoint> points;
    std::vector<std::vector<double>> snapshots;
    std::vector<Fold> folds;
    Termination termination = Termination::point_cap;
    std::string message;
};

struct PalcControls {
    double ds0 = 0.01;
    double ds_min = 1e-6;
    double ds_max = 0.1;
    double grow = 1.3;
    int fast_iterations = 3;      ///< grow ds when the corrector needs at most this many
    int max_corrector_iter = 10;
    std::size_t max_points = 20'000;
    std::size_t max_folds = 200;
    double A_min = 0.1;
    double A_max = 3.0;
    double newton_tol = 1e-10;
    /// Sign of dA/ds for the first step.
    int initial_direction = -1;
    bool compute_stability = true;
    bool locate_folds = true;
};

/// Maps a converged state to (max_v, avg_v, avg_v_nodes) for a branch point.
using PointSummary = std::function<std::array<double, 3>(std::span<const double>)>;

/// Pseudo-arclength continuation from a solution at A_start. Tangent
/// predictor, Newton corrector on the bordered system, adaptive step size.
/// The branch ends when A leaves [A_min, A_max], a cap is reached, or the
/// step size underflows (termination = step_failure, not thrown).
/// Throws StepFailure only if the initial point cannot be corrected.
Branch palc_continue(const ParametricSystem& system, double A_start,
                     std::span<const double> initial, const PalcControls& controls,
                     const PointSummary& summary = {});

/// Max / trapezoid-mean / node-mean of the biomass part of a state.
PointSummary biomass_summary(const StationaryResidual& residual);

/// branch.csv header and rows.
void write_branch_csv_header(std::ostream& out);
void write_branch_csv(std::ostream& out, const Branch& branch, const std::string& model,
                      const std::string& kernel, double d_w, const std::string& branch_id);

/// Biomass and water profile of one snapshot: columns x, v, w.
void write_profile_csv(std::ostream& out, const Grid1D& grid, std::span<const double> u);

} // namespace nlk
