#include "nlk/continuation.hpp"

#include "nlk/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace nlk {

// ---------------------------------------------------------------------------
// ParametricSystem

std::vector<std::size_t> ParametricSystem::dynamic_indices() const {
    std::vector<std::size_t> idx(dim());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

std::vector<double> ParametricSystem::residual(std::span<const double> u, double A) const {
    std::vector<double> out(dim());
    residual(u, A, out);
    return out;
}

double ParametricSystem::residual_norm(std::span<const double> u, double A) const {
    const auto r = residual(u, A);
    return std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
}

LambdaSystem::LambdaSystem(std::size_t dim, ResidualFn r, JacobianFn j, ParamFn p)
    : dim_(dim), r_(std::move(r)), j_(std::move(j)), p_(std::move(p)) {}

// ---------------------------------------------------------------------------
// StationaryResidual

StationaryResidual::StationaryResidual(Model model) : model_(std::move(model)) {}

std::vector<double> StationaryResidual::pack(std::span<const double> v,
                                             std::span<const double> w) {
    std::vector<double> u(v.begin(), v.end());
    u.insert(u.end(), w.begin(), w.end());
    return u;
}

void StationaryResidual::residual(std::span<const double> u, double A,
                                  std::span<double> out) const {
    const std::size_t n = nodes();
    const auto& p = model_.params;
    const auto v = v_of(u);
    const auto w = w_of(u);
    auto rv = out.first(n);
    auto rw = out.subspan(n);

    model_.dispersal_term(v, rv);
    model_.laplacian.apply(w, rw);
    for (std::size_t i = 0; i < n; ++i) {
        const double uptake = v[i] * v[i] * w[i];
        rv[i] += uptake - p.B * v[i];
        rw[i] = p.d_w * rw[i] - uptake - w[i] + A;
    }
    rw[0] = w[0];
    rw[n - 1] = w[n - 1];
    if (model_.is_local()) {
        rv[0] = v[0];
        rv[n - 1] = v[n - 1];
    }
}

Eigen::MatrixXd StationaryResidual::jacobian(std::span<const double> u, double /*A*/) const {
    const std::size_t n = nodes();
    const auto& p = model_.params;
    const auto v = v_of(u);
    const auto w = w_of(u);
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * N, 2 * N);
    const double inv_h2 = model_.laplacian.inv_h2();

    // Dispersal block.
    if (model_.dispersal) {
        const auto& op = *model_.dispersal;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = op.band_first(i); j < op.band_last(i); ++j)
                J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    p.d_v * op.entry(i, j);
            J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) -= p.d_v;
        }
    } else {
        const double c = 0.5 * p.d_v * inv_h2;
        for (Eigen::Index i = 1; i + 1 < N; ++i) {
            J(i, i - 1) = c;
            J(i, i) = -2.0 * c;
            J(i, i + 1) = c;
        }
    }
    // Water diffusion block.
    const double k = p.d_w * inv_h2;
    for (Eigen::Index i = 1; i + 1 < N; ++i) {
        J(N + i, N + i - 1) = k;
        J(N + i, N + i) = -2.0 * k;
        J(N + i, N + i + 1) = k;
    }
    // Reaction terms.
    for (Eigen::Index i = 0; i < N; ++i) {
        const double vi = v[static_cast<std::size_t>(i)];
        const double wi = w[static_cast<std::size_t>(i)];
        J(i, i) += 2.0 * vi * wi - p.B;
        J(i, N + i) = vi * vi;
        J(N + i, i) = -2.0 * vi * wi;
        J(N + i, N + i) += -(vi * vi) - 1.0;
    }
    // Pinned rows.
    for (Eigen::Index b : {Eigen::Index{0}, N - 1}) {
        J.row(N + b).setZero();
        J(N + b, N + b) = 1.0;
        if (model_.is_local()) {
            J.row(b).setZero();
            J(b, b) = 1.0;
        }
    }
    return J;
}

Eigen::VectorXd StationaryResidual::parameter_derivative(std::span<const double> /*u*/,
                                                         double /*A*/) const {
    const auto N = static_cast<Eigen::Index>(nodes());
    Eigen::VectorXd d = Eigen::VectorXd::Zero(2 * N);
    for (Eigen::Index i = 1; i + 1 < N; ++i)
        d(N + i) = 1.0;
    return d;
}

std::vector<std::size_t> StationaryResidual::dynamic_indices() const {
    const std::size_t n = nodes();
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < 2 * n; ++i) {
        const bool w_boundary = i == n || i == 2 * n - 1;
        const bool v_boundary = model_.is_local() && (i == 0 || i == n - 1);
        if (!w_boundary && !v_boundary)
            idx.push_back(i);
    }
    return idx;
}

std::vector<double> StationaryResidual::jacobian_vector(std::span<const double> u, double /*A*/,
                                                        std::span<const double> direction) const {
    const std::size_t n = nodes();
    const auto& p = model_.params;
    const auto v = v_of(u);
    const auto w = w_of(u);
    const auto dv = direction.first(n);
    const auto dw = direction.subspan(n);

    std::vector<double> out(2 * n);
    std::span<double> ov(out.data(), n), ow(out.data() + n, n);
    model_.dispersal_term(dv, ov);
    model_.laplacian.apply(dw, ow);
    for (std::size_t i = 0; i < n; ++i) {
        const double cross = 2.0 * v[i] * w[i] * dv[i] + v[i] * v[i] * dw[i];
        ov[i] += cross - p.B * dv[i];
        ow[i] = p.d_w * ow[i] - cross - dw[i];
    }
    ow[0] = dw[0];
    ow[n - 1] = dw[n - 1];
    if (model_.is_local()) {
        ov[0] = dv[0];
        ov[n - 1] = dv[n - 1];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Newton

namespace {

double norm2(std::span<const double> x) {
    return std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
}

Eigen::Map<const Eigen::VectorXd> as_eigen(std::span<const double> x) {
    return {x.data(), static_cast<Eigen::Index>(x.size())};
}

bool all_finite(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

} // namespace

NewtonResult newton_solve(const ParametricSystem& system, double A, std::span<const double> guess,
                          const NewtonOptions& opts) {
    if (guess.size() != system.dim())
        throw ConfigError("Newton guess has the wrong dimension");
    if (!all_finite(guess))
        throw NewtonDiverged("Newton guess is not finite");

    NewtonResult res;
    res.u.assign(guess.begin(), guess.end());
    std::vector<double> r = system.residual(res.u, A);
    res.residual_norm = norm2(r);

    for (int it = 0; it < opts.max_iter; ++it) {
        if (res.residual_norm <= opts.tol)
            return res;
        const Eigen::MatrixXd J = system.jacobian(res.u, A);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (!lu.isInvertible())
            throw SingularJacobian("Jacobian is singular at Newton iteration " +
                                   std::to_string(it));
        const Eigen::VectorXd step = lu.solve(as_eigen(r));
        if (!step.allFinite())
            throw NewtonDiverged("non-finite Newton step");

        double lambda = 1.0;
        std::vector<double> trial(res.u.size());
        double trial_norm = 0.0;
        for (int back = 0; back < 12; ++back) {
            for (std::size_t i = 0; i < trial.size(); ++i)
                trial[i] = res.u[i] - lambda * step(static_cast<Eigen::Index>(i));
            r = system.residual(trial, A);
            trial_norm = norm2(r);
            if (!opts.line_search || (std::isfinite(trial_norm) && trial_norm < res.residual_norm))
                break;
            lambda *= 0.5;
        }
        if (!std::isfinite(trial_norm) || !all_finite(trial))
            throw NewtonDiverged("Newton iterate became non-finite");
        res.u = trial;
        res.residual_norm = trial_norm;
        res.iterations = it + 1;
    }
    if (res.residual_norm <= opts.tol)
        return res;
    throw NewtonDiverged("Newton did not converge in " + std::to_string(opts.max_iter) +
                         " iterations (|R| = " + std::to_string(res.residual_norm) + ")");
}

// ---------------------------------------------------------------------------
// Stability

std::string to_string(Stability s) {
    switch (s) {
    case Stability::stable:
        return "stable";
    case Stability::unstable:
        return "unstable";
    default:
        return "unknown";
    }
}

StabilityEstimate stability_flag(const ParametricSystem& system, std::span<const double> u,
                                 double A) {
    const Eigen::MatrixXd J = system.jacobian(u, A);
    const auto idx = system.dynamic_indices();
    const auto m = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd reduced(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            reduced(i, j) = J(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]),
                              static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]));

    StabilityEstimate est;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(reduced, false);
    if (solver.info() != Eigen::Success)
        return est;
    est.max_real_part = solver.eigenvalues().real().maxCoeff();
    if (!std::isfinite(est.max_real_part))
        return est;
    est.flag = est.max_real_part < -1e-8 ? Stability::stable : Stability::unstable;
    return est;
}

// ---------------------------------------------------------------------------
// Pseudo-arclength continuation

std::string to_string(Termination t) {
    switch (t) {
    case Termination::parameter_exit:
        return "parameter_exit";
    case Termination::fold_count_cap:
        return "fold_count_cap";
    case Termination::step_failure:
        return "step_failure";
    default:
        return "point_cap";
    }
}

namespace {

struct Point {
    Eigen::VectorXd u;
    double A = 0.0;
};

struct Tangent {
    Eigen::VectorXd u;
    double A = 0.0;
};

class Palc {
public:
    Palc(const ParametricSystem& system, const PalcControls& c)
        : sys_(system), c_(c), n_(static_cast<Eigen::Index>(system.dim())),
          theta_(system.state_weight()) {}

    double weighted_norm(const Eigen::VectorXd& du, double dA) const {
        return std::sqrt(theta_ * du.squaredNorm() + dA * dA);
    }

    std::vector<double> residual(const Point& p) const {
        return sys_.residual(std::span<const double>(p.u.data(), static_cast<std::size_t>(n_)),
                             p.A);
    }

    Eigen::MatrixXd bordered(const Point& p, const Tangent& t) const {
        const std::span<const double> u(p.u.data(), static_cast<std::size_t>(n_));
        Eigen::MatrixXd M(n_ + 1, n_ + 1);
        M.topLeftCorner(n_, n_) = sys_.jacobian(u, p.A);
        M.topRightCorner(n_, 1) = sys_.parameter_derivative(u, p.A);
        M.bottomLeftCorner(1, n_) = theta_ * t.u.transpose();
        M(n_, n_) = t.A;
        return M;
    }

    /// Tangent at p oriented so that <tau, reference>_w > 0.
    std::optional<Tangent> tangent(const Point& p, const Tangent& reference) const {
        const Eigen::MatrixXd M = bordered(p, reference);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_ + 1);
        rhs(n_) = 1.0;
        const Eigen::VectorXd z = lu.solve(rhs);
        if (!z.allFinite())
            return std::nullopt;
        Tangent t{z.head(n_), z(n_)};
        const double nrm = weighted_norm(t.u, t.A);
        if (!(nrm > 0.0) || !std::isfinite(nrm))
            return std::nullopt;
        t.u /= nrm;
        t.A /= nrm;
        return t;
    }

    std::optional<Tangent> initial_tangent(const Point& p, int direction) const {
        const std::span<const double> u(p.u.data(), static_cast<std::size_t>(n_));
        Eigen::FullPivLU<Eigen::MatrixXd> lu(sys_.jacobian(u, p.A));
        if (!lu.isInvertible())
            return std::nullopt;
        Tangent t{-lu.solve(sys_.parameter_derivative(u, p.A)), 1.0};
        const double nrm = weighted_norm(t.u, t.A);
        const double sign = direction < 0 ? -1.0 : 1.0;
        t.u *= sign / nrm;
        t.A *= sign / nrm;
        return t;
    }

    struct Corrected {
        Point point;
        int iterations = 0;
    };

    /// Newton on [R(u, A) = 0; <t, (u, A) - base>_w = ds] from the predictor.
    std::optional<Corrected> correct(const Point& base, const Tangent& t, double ds) const {
        Point p{base.u + ds * t.u, base.A + ds * t.A};
        double previous = std::numeric_limits<double>::infinity();
        for (int it = 0; it <= c_.max_corrector_iter; ++it) {
            const auto r = residual(p);
            const double arc = theta_ * t.u.dot(p.u - base.u) + t.A * (p.A - base.A) - ds;
            const double rn = norm2(r);
            if (!std::isfinite(rn))
                return std::nullopt;
            if (rn <= c_.newton_tol && std::abs(arc) <= c_.newton_tol)
                return Corrected{p, it};
            if (it == c_.max_corrector_iter || (it > 2 && rn > 2.0 * previous))
                return std::nullopt;
            previous = rn;

            Eigen::VectorXd F(n_ + 1);
            F.head(n_) = as_eigen(r);
            F(n_) = arc;
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(bordered(p, t));
            const Eigen::VectorXd delta = lu.solve(F);
            if (!delta.allFinite())
                return std::nullopt;
            p.u -= delta.head(n_);
            p.A -= delta(n_);
        }
        return std::nullopt;
    }

    /// Secant iteration on dA/ds along the step from `base` to locate the turning point.
    std::optional<Point> locate_fold(const Point& base, const Tangent& t, double ds,
                                     double tA_base, double tA_end) const {
        double s0 = 0.0, g0 = tA_base;
        double s1 = ds, g1 = tA_end;
        std::optional<Point> best;
        double best_g = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 40; ++it) {
            if (g1 == g0)
                break;
            double s = s1 - g1 * (s1 - s0) / (g1 - g0);
            // Stay inside the bracket; fall back to bisection otherwise.
            const double lo = std::min(s0, s1), hi = std::max(s0, s1);
            if (!(s > lo && s < hi) || (g0 * g1 > 0.0))
                s = 0.5 * (s0 + s1);
            const auto corrected = correct(base, t, s);
            if (!corrected)
                break;
            const auto tau = tangent(corrected->point, t);
            if (!tau)
                break;
            const double g = tau->A;
            if (std::abs(g) < best_g) {
                best_g = std::abs(g);
                best = corrected->point;
            }
            if (std::abs(g) < 1e-12 || std::abs(s1 - s0) < 1e-14)
                break;
            // Illinois-style bracket update keeps the root enclosed.
            if (g * g1 < 0.0) {
                s0 = s1;
                g0 = g1;
            } else {
                g0 *= 0.5;
            }
            s1 = s;
            g1 = g;
        }
        return best;
    }

private:
    static Eigen::Map<const Eigen::VectorXd> as_eigen(const std::vector<double>& r) {
        return {r.data(), static_cast<Eigen::Index>(r.size())};
    }
    static double norm2(const std::vector<double>& r) {
        return std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
    }

    const ParametricSystem& sys_;
    const PalcControls& c_;
    Eigen::Index n_;
    double theta_;
};

} // namespace

Branch palc_continue(const ParametricSystem& system, double A_start,
                     std::span<const double> initial, const PalcControls& controls,
                     const PointSummary& summary) {
    if (initial.size() != system.dim())
        throw ConfigError("continuation start has the wrong dimension");
    if (!(controls.ds_min > 0.0) || controls.ds_min > controls.ds_max)
        throw ConfigError("continuation needs 0 < ds_min <= ds_max");

    Branch branch;
    Palc palc(system, controls);

    NewtonResult start;
    try {
        start = newton_solve(system, A_start, initial, {controls.newton_tol, 50, true});
    } catch (const NumericalError& e) {
        throw StepFailure(std::string("cannot converge the starting point: ") + e.what());
    }

    auto summarize = [&](const std::vector<double>& u) -> std::array<double, 3> {
        if (summary)
            return summary(u);
        const double mx = *std::max_element(u.begin(), u.end());
        const double mean = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(u.size());
        return {mx, mean, mean};
    };

    auto record = [&](const Point& p, double s, double tA, int iterations) {
        std::vector<double> u(p.u.data(), p.u.data() + p.u.size());
        BranchPoint bp;
        bp.A = p.A;
        bp.arclength = s;
        bp.tangent_A = tA;
        bp.corrector_iterations = iterations;
        bp.residual_norm = system.residual_norm(u, p.A);
        const auto stats = summarize(u);
        bp.max_v = stats[0];
        bp.avg_v = stats[1];
        bp.avg_v_nodes = stats[2];
        if (controls.compute_stability)
            bp.stable = stability_flag(system, u, p.A).flag;
        bp.snapshot = branch.snapshots.size();
        branch.snapshots.push_back(std::move(u));
        branch.points.push_back(bp);
    };

    Point current{Eigen::Map<const Eigen::VectorXd>(start.u.data(),
                                                    static_cast<Eigen::Index>(start.u.size())),
                  A_start};
    auto tangent = palc.initial_tangent(current, controls.initial_direction);
    if (!tangent)
        throw StepFailure("singular Jacobian at the starting point; cannot form a tangent");
    record(current, 0.0, tangent->A, start.iterations);

    double ds = controls.ds0;
    double s = 0.0;
    while (true) {
        if (branch.points.size() >= controls.max_points) {
            branch.termination = Termination::point_cap;
            break;
        }
        std::optional<Palc::Corrected> next;
        std::optional<Tangent> next_tangent;
        while (ds >= controls.ds_min) {
            next = palc.correct(current, *tangent, ds);
            if (next)
                next_tangent = palc.tangent(next->point, *tangent);
            if (next && next_tangent)
                break;
            next.reset();
            ds *= 0.5;
        }
        if (!next) {
            branch.termination = Termination::step_failure;
            branch.message = "step size fell below ds_min at A = " + std::to_string(current.A);
            break;
        }
        const double A_new = next->point.A;
        if (A_new < controls.A_min || A_new > controls.A_max) {
            branch.termination = Termination::parameter_exit;
            break;
        }

        if (controls.locate_folds && (tangent->A > 0.0) != (next_tangent->A > 0.0)) {
            Fold fold;
            fold.after_point = branch.points.size() - 1;
            const auto located = palc.locate_fold(current, *tangent, ds, tangent->A, next_tangent->A);
            const Point& at = located ? *located : next->point;
            fold.A = at.A;
            fold.arclength = s + std::sqrt(system.state_weight() * (at.u - current.u).squaredNorm() +
                                           (at.A - current.A) * (at.A - current.A));
            fold.u.assign(at.u.data(), at.u.data() + at.u.size());
            branch.folds.push_back(std::move(fold));
        }

        s += ds;
        current = next->point;
        tangent = next_tangent;
        record(current, s, tangent->A, next->iterations);

        if (branch.folds.size() >= controls.max_folds) {
            branch.termination = Termination::fold_count_cap;
            break;
        }
        if (next->iterations <= controls.fast_iterations)
            ds = std::min(ds * controls.grow, controls.ds_max);
    }
    return branch;
}

PointSummary biomass_summary(const StationaryResidual& residual) {
    const Model* model = &residual.model();
    return [model](std::span<const double> u) -> std::array<double, 3> {
        const auto v = u.first(model->size());
        const double mx = *std::max_element(v.begin(), v.end());
        const double node_mean =
            std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        return {mx, model->grid.integral_mean(v), node_mean};
    };
}

void write_branch_csv_header(std::ostream& out) {
    out << "model,kernel,branch_id,point_index,arclength,A,max_v,avg_v,stable,avg_v_nodes,d_w\n";
}

void write_branch_csv(std::ostream& out, const Branch& branch, const std::string& model,
                      const std::string& kernel, double d_w, const std::string& branch_id) {
    const auto precision = out.precision();
    out << std::setprecision(17);
    for (std::size_t k = 0; k < branch.points.size(); ++k) {
        const auto& p = branch.points[k];
        out << model << ',' << kernel << ',' << branch_id << ',' << k << ',' << p.arclength << ','
            << p.A << ',' << p.max_v << ',' << p.avg_v << ',' << to_string(p.stable) << ','
            << p.avg_v_nodes << ',' << d_w << '\n';
    }
    out.precision(precision);
}

void write_profile_csv(std::ostream& out, const Grid1D& grid, std::span<const double> u) {
    const std::size_t n = grid.n_nodes;
    const auto precision = out.precision();
    out << std::setprecision(17) << "x,v,w\n";
    for (std::size_t i = 0; i < n; ++i)
        out << grid.nodes[i] << ',' << u[i] << ',' << u[n + i] << '\n';
    out.precision(precision);
}

} // namespace nlk
