#include "nlk/model.hpp"

#include "nlk/errors.hpp"

namespace nlk {

std::string Model::label() const { return dispersal ? dispersal->kernel_label() : "local"; }

void Model::dispersal_term(std::span<const double> v, std::span<double> out) const {
    if (dispersal) {
        dispersal->apply(v, out);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] *= params.d_v;
    } else {
        laplacian.apply(v, out);
        const double coeff = 0.5 * params.d_v;
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] *= coeff;
    }
}

Model Model::with_rainfall(double A) const {
    Model copy = *this;
    copy.params.A = A;
    return copy;
}

Model make_model(const ModelParams& params, const Grid1D& grid,
                 const std::optional<Kernel>& kernel, Quadrature quadrature) {
    params.validate();
    if (params.variant == Variant::nonlocal) {
        if (!kernel)
            throw ConfigError("the non-local variant needs a dispersal kernel");
        return Model{params, grid, DispersalOperator(grid, *kernel, quadrature),
                     LaplacianOperator(grid)};
    }
    return Model{params, grid, std::nullopt, LaplacianOperator(grid)};
}

} // namespace nlk
