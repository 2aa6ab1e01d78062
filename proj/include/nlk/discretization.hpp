#pragma once

#include "nlk/kernels.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace nlk {

/// Uniform node set on [-L, L] with trapezoid weights.
struct Grid1D {
    double half_width = 0.0;
    std::size_t n_nodes = 0;
    double spacing = 0.0;
    std::vector<double> nodes;
    std::vector<double> quad_weights;

    std::size_t size() const noexcept { return n_nodes; }
    /// Trapezoid integral of node samples over the domain.
    double integrate(std::span<const double> values) const;
    /// Trapezoid mean: integrate(values) / (2L).
    double integral_mean(std::span<const double> values) const;
};

/// Throws BadGrid for L <= 0 or N < 3.
Grid1D make_grid(double half_width, std::size_t n_nodes);

/// Quadrature used for the dispersal integral.
///
/// `trapezoid` is the plain composite rule. On kernels with a cusp at the
/// origin (Laplace) it over-counts the local mass by O(h^2), so interior row
/// sums exceed 1. `mass_corrected` adds 1 - h*sum_k J(kh) to the diagonal so
/// that a row far from the boundary carries exactly unit mass.
enum class Quadrature { trapezoid, mass_corrected };

std::string to_string(Quadrature q);
Quadrature parse_quadrature(const std::string& name);

/// Discrete non-local dispersal operator (Lv)_i = sum_j K_ij v_j - v_i with
/// K_ij = quad_weights_j J(x_i - x_j), truncated to the domain.
///
/// K is stored row-banded: row i keeps columns within the kernel cutoff of
/// x_i. Mass landing outside the domain is simply lost, which realises the
/// non-local Dirichlet condition.
class DispersalOperator {
public:
    DispersalOperator(const Grid1D& grid, const Kernel& kernel,
                      Quadrature quadrature = Quadrature::mass_corrected);

    const Grid1D& grid() const noexcept { return grid_; }
    const std::string& kernel_label() const noexcept { return kernel_label_; }
    KernelFamily kernel_family() const noexcept { return kernel_family_; }
    double support_cutoff() const noexcept { return cutoff_; }
    Quadrature quadrature() const noexcept { return quadrature_; }
    /// Diagonal mass correction (0 for the plain trapezoid rule).
    double diagonal_correction() const noexcept { return diag_correction_; }
    std::size_t size() const noexcept { return grid_.n_nodes; }

    /// True when the grid spacing exceeds 0.5, i.e. the unit-variance kernel
    /// is resolved by fewer than ~2 nodes per standard deviation.
    bool under_resolved() const noexcept { return under_resolved_; }

    /// K_ij (zero outside the band).
    double entry(std::size_t i, std::size_t j) const;
    /// Columns [first, last) stored for row i.
    std::size_t band_first(std::size_t i) const noexcept { return first_[i]; }
    std::size_t band_last(std::size_t i) const noexcept { return first_[i] + width_[i]; }

    /// out = K v
    void apply_kernel(std::span<const double> v, std::span<double> out) const;
    /// out = K v - v
    void apply(std::span<const double> v, std::span<double> out) const;
    std::vector<double> apply(std::span<const double> v) const;

    /// Row sums of K (the fraction of kernel mass that stays in the domain).
    std::vector<double> row_sums() const;
    /// max_i sum_j |K_ij|
    double inf_norm() const;

    /// Dense row-major copy of K.
    std::vector<double> dense() const;
    void write_csv(std::ostream& out) const;

private:
    Grid1D grid_;
    std::string kernel_label_;
    KernelFamily kernel_family_;
    double cutoff_;
    Quadrature quadrature_;
    double diag_correction_ = 0.0;
    bool under_resolved_ = false;
    std::vector<std::size_t> first_;
    std::vector<std::size_t> width_;
    std::vector<std::size_t> offset_;
    std::vector<double> values_;
};

DispersalOperator assemble_nonlocal(const Grid1D& grid, const Kernel& kernel,
                                    Quadrature quadrature = Quadrature::mass_corrected);

/// Second-order centred Laplacian (1, -2, 1)/h^2.
///
/// Nodes 0 and N-1 sit on the boundary and hold Dirichlet data; the stencil
/// is evaluated on interior nodes only and the boundary outputs are 0.
class LaplacianOperator {
public:
    explicit LaplacianOperator(const Grid1D& grid);

    const Grid1D& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return grid_.n_nodes; }
    double inv_h2() const noexcept { return inv_h2_; }

    void apply(std::span<const double> v, std::span<double> out) const;
    std::vector<double> apply(std::span<const double> v) const;
    void write_csv(std::ostream& out) const;

private:
    Grid1D grid_;
    double inv_h2_;
};

LaplacianOperator assemble_laplacian(const Grid1D& grid);

/// Sup-norm of L v - (1/2) Lap v over nodes at least one kernel cutoff away
/// from the boundary. Throws DomainTooSmall if there are no such nodes.
double taylor_consistency(const DispersalOperator& op, std::span<const double> profile);

/// Samples f at the grid nodes.
std::vector<double> sample(const Grid1D& grid, const std::function<double(double)>& f);

} // namespace nlk
