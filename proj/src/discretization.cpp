#include "nlk/discretization.hpp"

#include "nlk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace nlk {

double Grid1D::integrate(std::span<const double> values) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < n_nodes; ++i)
        sum += quad_weights[i] * values[i];
    return sum;
}

double Grid1D::integral_mean(std::span<const double> values) const {
    return integrate(values) / (2.0 * half_width);
}

Grid1D make_grid(double half_width, std::size_t n_nodes) {
    if (!(half_width > 0.0) || !std::isfinite(half_width))
        throw BadGrid("grid half-width must be positive, got " + std::to_string(half_width));
    if (n_nodes < 3)
        throw BadGrid("grid needs at least 3 nodes, got " + std::to_string(n_nodes));

    Grid1D g;
    g.half_width = half_width;
    g.n_nodes = n_nodes;
    g.spacing = 2.0 * half_width / static_cast<double>(n_nodes - 1);
    g.nodes.resize(n_nodes);
    g.quad_weights.assign(n_nodes, g.spacing);
    for (std::size_t i = 0; i < n_nodes; ++i)
        g.nodes[i] = -half_width + static_cast<double>(i) * g.spacing;
    g.nodes.back() = half_width;
    g.quad_weights.front() = 0.5 * g.spacing;
    g.quad_weights.back() = 0.5 * g.spacing;
    return g;
}

std::vector<double> sample(const Grid1D& grid, const std::function<double(double)>& f) {
    std::vector<double> out(grid.n_nodes);
    std::transform(grid.nodes.begin(), grid.nodes.end(), out.begin(), f);
    return out;
}

std::string to_string(Quadrature q) {
    return q == Quadrature::trapezoid ? "trapezoid" : "mass_corrected";
}

Quadrature parse_quadrature(const std::string& name) {
    if (name == "trapezoid")
        return Quadrature::trapezoid;
    if (name == "mass_corrected" || name == "mass-corrected")
        return Quadrature::mass_corrected;
    throw ConfigError("unknown quadrature '" + name + "'");
}

// ---------------------------------------------------------------------------
// DispersalOperator

DispersalOperator::DispersalOperator(const Grid1D& grid, const Kernel& kernel,
                                     Quadrature quadrature)
    : grid_(grid),
      kernel_label_(kernel.label()),
      kernel_family_(kernel.family()),
      cutoff_(kernel.support_cutoff()),
      quadrature_(quadrature),
      under_resolved_(grid.spacing > 0.5) {
    const std::size_t n = grid_.n_nodes;
    const double h = grid_.spacing;

    // Band half-width in nodes; J vanishes beyond the cutoff.
    const auto reach = static_cast<std::size_t>(std::floor(cutoff_ / h * (1.0 + 1e-12)));

    if (quadrature_ == Quadrature::mass_corrected) {
        double full_line = kernel(0.0);
        for (std::size_t k = 1; k <= reach; ++k)
            full_line += 2.0 * kernel(static_cast<double>(k) * h);
        diag_correction_ = 1.0 - h * full_line;
    }

    // Offsets are translation invariant; tabulate J(kh) once.
    std::vector<double> table(reach + 1);
    for (std::size_t k = 0; k <= reach; ++k)
        table[k] = kernel(static_cast<double>(k) * h);

    first_.resize(n);
    width_.resize(n);
    offset_.resize(n);
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        first_[i] = i > reach ? i - reach : 0;
        const std::size_t last = std::min(n, i + reach + 1);
        width_[i] = last - first_[i];
        offset_[i] = total;
        total += width_[i];
    }
    values_.resize(total);
    for (std::size_t i = 0; i < n; ++i) {
        double* row = values_.data() + offset_[i];
        for (std::size_t j = first_[i]; j < first_[i] + width_[i]; ++j) {
            const std::size_t k = i > j ? i - j : j - i;
            row[j - first_[i]] = grid_.quad_weights[j] * table[k];
        }
        row[i - first_[i]] += diag_correction_;
    }
}

DispersalOperator assemble_nonlocal(const Grid1D& grid, const Kernel& kernel,
                                    Quadrature quadrature) {
    return DispersalOperator(grid, kernel, quadrature);
}

double DispersalOperator::entry(std::size_t i, std::size_t j) const {
    if (j < first_[i] || j >= first_[i] + width_[i])
        return 0.0;
    return values_[offset_[i] + (j - first_[i])];
}

void DispersalOperator::apply_kernel(std::span<const double> v, std::span<double> out) const {
    const std::size_t n = grid_.n_nodes;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = values_.data() + offset_[i];
        const double* x = v.data() + first_[i];
        double sum = 0.0;
        for (std::size_t k = 0; k < width_[i]; ++k)
            sum += row[k] * x[k];
        out[i] = sum;
    }
}

void DispersalOperator::apply(std::span<const double> v, std::span<double> out) const {
    apply_kernel(v, out);
    for (std::size_t i = 0; i < grid_.n_nodes; ++i)
        out[i] -= v[i];
}

std::vector<double> DispersalOperator::apply(std::span<const double> v) const {
    std::vector<double> out(grid_.n_nodes);
    apply(v, out);
    return out;
}

std::vector<double> DispersalOperator::row_sums() const {
    std::vector<double> sums(grid_.n_nodes);
    for (std::size_t i = 0; i < grid_.n_nodes; ++i) {
        const double* row = values_.data() + offset_[i];
        double s = 0.0;
        for (std::size_t k = 0; k < width_[i]; ++k)
            s += row[k];
        sums[i] = s;
    }
    return sums;
}

double DispersalOperator::inf_norm() const {
    double best = 0.0;
    for (std::size_t i = 0; i < grid_.n_nodes; ++i) {
        const double* row = values_.data() + offset_[i];
        double s = 0.0;
        for (std::size_t k = 0; k < width_[i]; ++k)
            s += std::abs(row[k]);
        best = std::max(best, s);
    }
    return best;
}

std::vector<double> DispersalOperator::dense() const {
    const std::size_t n = grid_.n_nodes;
    std::vector<double> m(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = first_[i]; j < first_[i] + width_[i]; ++j)
            m[i * n + j] = values_[offset_[i] + (j - first_[i])];
    return m;
}

namespace {

void write_dense(std::ostream& out, std::size_t n, const std::function<double(std::size_t, std::size_t)>& at) {
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << std::setprecision(17);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j)
                out << ',';
            out << at(i, j);
        }
        out << '\n';
    }
    out.flags(flags);
    out.precision(precision);
}

} // namespace

void DispersalOperator::write_csv(std::ostream& out) const {
    write_dense(out, grid_.n_nodes, [this](std::size_t i, std::size_t j) { return entry(i, j); });
}

// ---------------------------------------------------------------------------
// LaplacianOperator

LaplacianOperator::LaplacianOperator(const Grid1D& grid)
    : grid_(grid), inv_h2_(1.0 / (grid.spacing * grid.spacing)) {
    if (grid.n_nodes < 3)
        throw BadGrid("Laplacian needs at least 3 nodes");
}

LaplacianOperator assemble_laplacian(const Grid1D& grid) { return LaplacianOperator(grid); }

void LaplacianOperator::apply(std::span<const double> v, std::span<double> out) const {
    const std::size_t n = grid_.n_nodes;
    out[0] = 0.0;
    out[n - 1] = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i)
        out[i] = (v[i - 1] - 2.0 * v[i] + v[i + 1]) * inv_h2_;
}

std::vector<double> LaplacianOperator::apply(std::span<const double> v) const {
    std::vector<double> out(grid_.n_nodes);
    apply(v, out);
    return out;
}

void LaplacianOperator::write_csv(std::ostream& out) const {
    const std::size_t n = grid_.n_nodes;
    write_dense(out, n, [this, n](std::size_t i, std::size_t j) {
        if (i == 0 || i + 1 == n)
            return 0.0;
        if (i == j)
            return -2.0 * inv_h2_;
        if (i == j + 1 || j == i + 1)
            return inv_h2_;
        return 0.0;
    });
}

// ---------------------------------------------------------------------------

double taylor_consistency(const DispersalOperator& op, std::span<const double> profile) {
    const Grid1D& g = op.grid();
    const double margin = op.support_cutoff();
    const auto nonlocal = op.apply(profile);
    const auto lap = LaplacianOperator(g).apply(profile);

    bool any = false;
    double gap = 0.0;
    for (std::size_t i = 1; i + 1 < g.n_nodes; ++i) {
        const double to_boundary = g.half_width - std::abs(g.nodes[i]);
        if (to_boundary < margin)
            continue;
        any = true;
        gap = std::max(gap, std::abs(nonlocal[i] - 0.5 * lap[i]));
    }
    if (!any)
        throw DomainTooSmall("no node lies a full kernel cutoff away from the boundary");
    return gap;
}

} // namespace nlk
