#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace testing {

/// Seeded generator for property tests; every case gets its own fixed seed.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    std::vector<double> vector(std::size_t n, double lo, double hi) {
        std::vector<double> out(n);
        for (double& x : out)
            x = uniform(lo, hi);
        return out;
    }

private:
    std::mt19937_64 rng_;
};

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double out = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        out = std::max(out, std::abs(a[i] - b[i]));
    return out;
}

inline double sup_norm(std::span<const double> a) {
    double out = 0.0;
    for (double x : a)
        out = std::max(out, std::abs(x));
    return out;
}

/// Composite Simpson on [a, b] with n (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int k = 1; k < n; ++k)
        s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
    return s * h / 3.0;
}

} // namespace testing
