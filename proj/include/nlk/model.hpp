#pragma once

#include "nlk/discretization.hpp"
#include "nlk/kinetics.hpp"

#include <optional>
#include <span>
#include <string>

namespace nlk {

/// Parameters plus the assembled spatial operators for one configuration.
/// Immutable after construction and safe to share between threads.
struct Model {
    ModelParams params;
    Grid1D grid;
    std::optional<DispersalOperator> dispersal;  ///< set for the non-local variant
    LaplacianOperator laplacian;

    std::size_t size() const noexcept { return grid.n_nodes; }
    bool is_local() const noexcept { return params.variant == Variant::local; }

    /// "local" or the kernel label.
    std::string label() const;

    /// out = d_v L v (non-local) or (d_v / 2) Lap v (local).
    void dispersal_term(std::span<const double> v, std::span<double> out) const;

    /// Same model with a different rainfall.
    Model with_rainfall(double A) const;
};

/// Builds the operators for `params`. A kernel is required for the non-local
/// variant and ignored for the local one.
Model make_model(const ModelParams& params, const Grid1D& grid,
                 const std::optional<Kernel>& kernel,
                 Quadrature quadrature = Quadrature::mass_corrected);

} // namespace nlk
