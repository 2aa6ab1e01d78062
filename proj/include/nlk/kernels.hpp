#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace nlk {

enum class KernelFamily { laplace, super_gaussian, custom };

std::string to_string(KernelFamily family);

/// Symmetric dispersal density J on the real line.
///
/// Built-in families are evaluated through |z| so that J(z) == J(-z) holds
/// bit-for-bit. Every kernel returns exactly 0 beyond its support cutoff.
/// Instances are immutable once constructed.
class Kernel {
public:
    /// J(z) = (1/sqrt 2) exp(-sqrt 2 |z|). Fat-tailed, unit variance.
    static Kernel laplace(double support_cutoff = 30.0);

    /// J(z) = a exp(-c z^4) with c = (G(3/4)/G(1/4))^2 and
    /// a = 2 G(3/4)^{1/2} / G(1/4)^{3/2}. Thin-tailed, unit variance.
    static Kernel super_gaussian(double support_cutoff = 4.0);

    /// Arbitrary density supplied as a callable. No assumptions are enforced
    /// here; use check_assumptions() to validate.
    static Kernel custom(std::function<double(double)> density, double support_cutoff,
                         std::string label = "custom");

    /// Two-column text table (z J(z)) with whitespace or comma separators and
    /// '#' comments. Linear interpolation between rows, zero outside the
    /// tabulated range. Rows must be sorted by z.
    static Kernel from_table(const std::filesystem::path& path);

    /// Parses "laplace", "super_gaussian" (also "super-gaussian", "supergaussian").
    static Kernel builtin(const std::string& name);

    KernelFamily family() const noexcept { return family_; }
    double support_cutoff() const noexcept { return cutoff_; }
    const std::string& label() const noexcept { return label_; }

    /// Tail-shape description used in run metadata ("fat" / "thin" / "custom").
    std::string tail_label() const;
    /// Historical distribution label ("sub-Gaussian" / "super-Gaussian" / "custom").
    std::string gaussian_label() const;

    double operator()(double z) const;

private:
    Kernel(KernelFamily family, std::function<double(double)> density, double cutoff,
           std::string label);

    KernelFamily family_;
    std::function<double(double)> density_;
    double cutoff_;
    std::string label_;
};

inline double kernel_eval(const Kernel& kernel, double z) { return kernel(z); }

struct KernelMoments {
    double mass = 0.0;
    double second_moment = 0.0;
    double fourth_moment = 0.0;
};

/// Zeroth, second and fourth moments over [-cutoff, cutoff] by composite
/// Simpson with separate panels on each side of z = 0, doubled until the
/// Richardson error estimate drops below quad_tol. Throws NonIntegrable when
/// the panel budget is exhausted.
KernelMoments kernel_moments(const Kernel& kernel, double quad_tol = 1e-10);

struct AssumptionCheck {
    std::string id;    // "J1" .. "J5"
    std::string name;
    bool pass = false;
    double discrepancy = 0.0;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    bool all_pass() const;
};

/// Numerical check of positivity, symmetry, decay, finite second moment and
/// normalization on a dense sample of [-cutoff, cutoff].
AssumptionReport check_assumptions(const Kernel& kernel);

} // namespace nlk
