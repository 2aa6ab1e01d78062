#include "nlk/kernels.hpp"

#include "nlk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

namespace nlk {

std::string to_string(KernelFamily family) {
    switch (family) {
    case KernelFamily::laplace:
        return "laplace";
    case KernelFamily::super_gaussian:
        return "super_gaussian";
    case KernelFamily::custom:
        return "custom";
    }
    return "custom";
}

Kernel::Kernel(KernelFamily family, std::function<double(double)> density, double cutoff,
               std::string label)
    : family_(family), density_(std::move(density)), cutoff_(cutoff), label_(std::move(label)) {
    if (!(cutoff_ > 0.0) || !std::isfinite(cutoff_))
        throw ConfigError("kernel support cutoff must be positive and finite");
}

Kernel Kernel::laplace(double support_cutoff) {
    const double rate = std::numbers::sqrt2;
    const double amplitude = 1.0 / std::numbers::sqrt2;
    return Kernel(
        KernelFamily::laplace,
        [=](double z) { return amplitude * std::exp(-rate * std::abs(z)); },
        support_cutoff, "laplace");
}

Kernel Kernel::super_gaussian(double support_cutoff) {
    const double g14 = std::tgamma(0.25);
    const double g34 = std::tgamma(0.75);
    const double amplitude = 2.0 * std::sqrt(g34) / std::pow(g14, 1.5);
    const double rate = (g34 / g14) * (g34 / g14);
    return Kernel(
        KernelFamily::super_gaussian,
        [=](double z) {
            const double z2 = z * z;
            return amplitude * std::exp(-rate * z2 * z2);
        },
        support_cutoff, "super_gaussian");
}

Kernel Kernel::custom(std::function<double(double)> density, double support_cutoff,
                      std::string label) {
    if (!density)
        throw ConfigError("custom kernel requires a density");
    return Kernel(KernelFamily::custom, std::move(density), support_cutoff, std::move(label));
}

Kernel Kernel::from_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open kernel table: " + path.string());

    auto zs = std::make_shared<std::vector<double>>();
    auto js = std::make_shared<std::vector<double>>();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        double z = 0.0, j = 0.0;
        if (!(fields >> z)) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                                  ": not a number");
            continue;
        }
        if (!(fields >> j))
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected two columns");
        if (!zs->empty() && z <= zs->back())
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": z values must be strictly increasing");
        zs->push_back(z);
        js->push_back(j);
    }
    if (zs->size() < 2)
        throw ConfigError("kernel table needs at least two rows: " + path.string());

    const double cutoff = std::max(std::abs(zs->front()), std::abs(zs->back()));
    auto density = [zs, js](double z) {
        const auto& x = *zs;
        if (z < x.front() || z > x.back())
            return 0.0;
        auto it = std::upper_bound(x.begin(), x.end(), z);
        if (it == x.end())
            return js->back();
        const auto k = static_cast<std::size_t>(it - x.begin());
        const double t = (z - x[k - 1]) / (x[k] - x[k - 1]);
        return (1.0 - t) * (*js)[k - 1] + t * (*js)[k];
    };
    return Kernel(KernelFamily::custom, density, cutoff, path.stem().string());
}

Kernel Kernel::builtin(const std::string& name) {
    if (name == "laplace")
        return laplace();
    if (name == "super_gaussian" || name == "super-gaussian" || name == "supergaussian")
        return super_gaussian();
    throw ConfigError("unknown kernel family '" + name + "'");
}

std::string Kernel::tail_label() const {
    switch (family_) {
    case KernelFamily::laplace:
        return "fat";
    case KernelFamily::super_gaussian:
        return "thin";
    default:
        return "custom";
    }
}

std::string Kernel::gaussian_label() const {
    switch (family_) {
    case KernelFamily::laplace:
        return "sub-Gaussian";
    case KernelFamily::super_gaussian:
        return "super-Gaussian";
    default:
        return "custom";
    }
}

double Kernel::operator()(double z) const {
    if (std::abs(z) > cutoff_)
        return 0.0;
    return density_(z);
}

namespace {

struct MomentSums {
    double m0 = 0.0, m2 = 0.0, m4 = 0.0;
};

// Composite Simpson for z^0, z^2, z^4 against J on [a, b] with `panels` (even) subintervals.
MomentSums simpson_moments(const Kernel& kernel, double a, double b, long panels) {
    const double h = (b - a) / static_cast<double>(panels);
    MomentSums s;
    for (long k = 0; k <= panels; ++k) {
        const double z = a + h * static_cast<double>(k);
        const double weight = (k == 0 || k == panels) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        const double j = kernel(z) * weight;
        const double z2 = z * z;
        s.m0 += j;
        s.m2 += j * z2;
        s.m4 += j * z2 * z2;
    }
    s.m0 *= h / 3.0;
    s.m2 *= h / 3.0;
    s.m4 *= h / 3.0;
    return s;
}

MomentSums both_sides(const Kernel& kernel, long panels) {
    const double c = kernel.support_cutoff();
    const auto left = simpson_moments(kernel, -c, 0.0, panels);
    const auto right = simpson_moments(kernel, 0.0, c, panels);
    return {left.m0 + right.m0, left.m2 + right.m2, left.m4 + right.m4};
}

} // namespace

KernelMoments kernel_moments(const Kernel& kernel, double quad_tol) {
    if (!(quad_tol > 0.0))
        throw ConfigError("quad_tol must be positive");

    constexpr long max_panels = 1L << 22;
    long panels = 64;
    MomentSums coarse = both_sides(kernel, panels);
    while (panels < max_panels) {
        panels *= 2;
        const MomentSums fine = both_sides(kernel, panels);
        // Simpson is fourth order: error(fine) ~ (fine - coarse) / 15.
        const double e0 = std::abs(fine.m0 - coarse.m0) / 15.0;
        const double e2 = std::abs(fine.m2 - coarse.m2) / 15.0;
        const double e4 = std::abs(fine.m4 - coarse.m4) / 15.0;
        if (!std::isfinite(fine.m0) || !std::isfinite(fine.m2) || !std::isfinite(fine.m4))
            break;
        if (std::max({e0, e2, e4}) < quad_tol)
            return {fine.m0, fine.m2, fine.m4};
        coarse = fine;
    }
    throw NonIntegrable("kernel moments did not converge for '" + kernel.label() + "'");
}

bool AssumptionReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

AssumptionReport check_assumptions(const Kernel& kernel) {
    constexpr int samples = 20001;
    const double c = kernel.support_cutoff();

    double most_negative = 0.0;
    double worst_asymmetry = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double z = -c + 2.0 * c * static_cast<double>(k) / (samples - 1);
        const double j = kernel(z);
        if (!std::isfinite(j)) {
            most_negative = -std::numeric_limits<double>::infinity();
            continue;
        }
        most_negative = std::min(most_negative, j);
        worst_asymmetry = std::max(worst_asymmetry, std::abs(j - kernel(-z)));
    }
    const double at_zero = kernel(0.0);
    const double tail = std::max(std::abs(kernel(c)), std::abs(kernel(-c)));

    AssumptionReport report;
    report.checks.push_back({"J1", "positivity", most_negative >= 0.0 && at_zero > 0.0,
                             std::min(most_negative, at_zero)});
    report.checks.push_back({"J2", "symmetry", worst_asymmetry <= 1e-12, worst_asymmetry});
    report.checks.push_back({"J3", "decay", tail < 1e-8, tail});

    bool moments_ok = true;
    KernelMoments m;
    try {
        m = kernel_moments(kernel, 1e-9);
    } catch (const NonIntegrable&) {
        moments_ok = false;
    }
    report.checks.push_back({"J4", "finite second moment",
                             moments_ok && std::isfinite(m.second_moment) &&
                                 m.second_moment >= 0.0,
                             moments_ok ? m.second_moment
                                        : std::numeric_limits<double>::infinity()});
    // Mass inside the cutoff may not exceed 1 beyond the quadrature tolerance.
    const double mass_gap = moments_ok ? m.mass - 1.0 : std::numeric_limits<double>::infinity();
    report.checks.push_back(
        {"J5", "normalization", moments_ok && mass_gap <= 1e-9 && mass_gap >= -1e-6, mass_gap});
    return report;
}

} // namespace nlk
