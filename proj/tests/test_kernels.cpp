#include "nlk/errors.hpp"
#include "nlk/kernels.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace nlk;

namespace {

// Gamma(1/4) to 20 digits; the rest follows from the reflection formula
// Gamma(1/4) Gamma(3/4) = pi sqrt(2) and Gamma(5/4) = Gamma(1/4) / 4.
constexpr double gamma_quarter = 3.6256099082219083119;
const double gamma_three_quarters = std::numbers::pi * std::numbers::sqrt2 / gamma_quarter;
const double gamma_five_quarters = gamma_quarter / 4.0;

double find_check(const AssumptionReport& r, const std::string& id, bool* pass) {
    for (const auto& c : r.checks)
        if (c.id == id) {
            *pass = c.pass;
            return c.discrepancy;
        }
    FAIL("missing check " << id);
    return 0.0;
}

} // namespace

TEST_CASE("gamma oracle agrees with the library gamma") {
    CHECK(std::tgamma(0.25) == doctest::Approx(gamma_quarter).epsilon(1e-15));
    CHECK(std::tgamma(0.75) == doctest::Approx(gamma_three_quarters).epsilon(1e-15));
}

TEST_CASE("laplace kernel values") {
    const Kernel k = Kernel::laplace();
    CHECK(k(0.0) == doctest::Approx(1.0 / std::numbers::sqrt2).epsilon(1e-15));
    CHECK(k(1.0) == doctest::Approx(std::exp(-std::numbers::sqrt2) / std::numbers::sqrt2));
    CHECK(k(-1.0) == k(1.0));
    CHECK(k(30.5) == 0.0);
    CHECK(k.family() == KernelFamily::laplace);
    CHECK(k.support_cutoff() == 30.0);
    CHECK(k.tail_label() == "fat");
}

TEST_CASE("super-gaussian amplitude from the gamma oracle") {
    const Kernel k = Kernel::super_gaussian();
    const double a = 2.0 * std::sqrt(gamma_three_quarters) / std::pow(gamma_quarter, 1.5);
    CHECK(a == doctest::Approx(0.3207).epsilon(1e-3));
    CHECK(k(0.0) == doctest::Approx(a).epsilon(1e-13));
    CHECK(kernel_eval(k, 4.01) == 0.0);
    CHECK(k.tail_label() == "thin");
    CHECK(k.gaussian_label() == "super-Gaussian");
}

TEST_CASE("kernels are even and vanish beyond the cutoff") {
    testing::Gen gen(11);
    for (const Kernel& k : {Kernel::laplace(), Kernel::super_gaussian()}) {
        for (int trial = 0; trial < 500; ++trial) {
            const double z = gen.uniform(-2.0 * k.support_cutoff(), 2.0 * k.support_cutoff());
            CHECK(k(z) == k(-z));
            CHECK(k(z) >= 0.0);
            if (std::abs(z) > k.support_cutoff())
                CHECK(k(z) == 0.0);
        }
    }
}

TEST_CASE("laplace moments match closed form 2/l^2 and 24/l^4") {
    const auto m = kernel_moments(Kernel::laplace());
    CHECK(m.mass == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m.second_moment == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(m.fourth_moment == doctest::Approx(6.0).epsilon(1e-8));
}

TEST_CASE("super-gaussian moments match the gamma identity") {
    const auto m = kernel_moments(Kernel::super_gaussian());
    const double m4 = gamma_five_quarters * gamma_quarter / (gamma_three_quarters * gamma_three_quarters);
    CHECK(m4 == doctest::Approx(2.18842).epsilon(1e-5));
    CHECK(m.mass == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m.second_moment == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m.fourth_moment == doctest::Approx(m4).epsilon(1e-9));
}

TEST_CASE("fat tail has the larger fourth moment") {
    CHECK(kernel_moments(Kernel::laplace()).fourth_moment >
          kernel_moments(Kernel::super_gaussian()).fourth_moment);
}

TEST_CASE("uniform custom kernel moments") {
    const Kernel box = Kernel::custom([](double z) { return std::abs(z) <= 1.0 ? 0.5 : 0.0; }, 1.0, "box");
    const auto m = kernel_moments(box);
    CHECK(m.mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(m.second_moment == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    CHECK(m.fourth_moment == doctest::Approx(1.0 / 5.0).epsilon(1e-10));
}

TEST_CASE("built-in kernels satisfy all assumptions") {
    for (const Kernel& k : {Kernel::laplace(), Kernel::super_gaussian()}) {
        const auto report = check_assumptions(k);
        CHECK(report.checks.size() == 5);
        CHECK(report.all_pass());
    }
}

TEST_CASE("assumption checks catch broken kernels") {
    bool pass = true;

    const auto signed_kernel = check_assumptions(Kernel::custom([](double z) { return z; }, 1.0));
    find_check(signed_kernel, "J1", &pass);
    CHECK_FALSE(pass);

    const auto skewed = check_assumptions(Kernel::custom(
        [](double z) { return z > 0 ? 0.75 * std::exp(-z) : 0.25 * std::exp(z); }, 40.0));
    find_check(skewed, "J2", &pass);
    CHECK_FALSE(pass);

    const auto heavy = check_assumptions(Kernel::custom([](double) { return 0.25; }, 2.0));
    find_check(heavy, "J3", &pass);
    CHECK_FALSE(pass);

    const auto twice = check_assumptions(
        Kernel::custom([](double z) { return std::numbers::sqrt2 * std::exp(-std::numbers::sqrt2 * std::abs(z)); },
                       30.0));
    const double excess = find_check(twice, "J5", &pass);
    CHECK_FALSE(pass);
    CHECK(excess == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("kernel table round trip") {
    const auto path = std::filesystem::temp_directory_path() / "nlk_kernel_table.txt";
    {
        std::ofstream out(path);
        out << "# z J(z)\n";
        for (int k = -400; k <= 400; ++k) {
            const double z = k * 0.01;
            out << z << ", " << Kernel::super_gaussian()(z) << '\n';
        }
    }
    const Kernel table = Kernel::from_table(path);
    CHECK(table.family() == KernelFamily::custom);
    CHECK(table.support_cutoff() == doctest::Approx(4.0));
    CHECK(table(0.005) == doctest::Approx(0.5 * (table(0.0) + table(0.01))));
    CHECK(table(1.3) == doctest::Approx(Kernel::super_gaussian()(1.3)).epsilon(1e-4));
    CHECK(kernel_moments(table).mass == doctest::Approx(1.0).epsilon(1e-4));
    std::filesystem::remove(path);
}

TEST_CASE("bad kernel inputs") {
    CHECK_THROWS_AS(Kernel::builtin("cauchy"), ConfigError);
    CHECK_THROWS_AS(Kernel::from_table("/nonexistent/table.txt"), ConfigError);

    const auto path = std::filesystem::temp_directory_path() / "nlk_bad_table.txt";
    {
        std::ofstream out(path);
        out << "0 1\nnot a number\n";
    }
    CHECK_THROWS_AS(Kernel::from_table(path), ConfigError);
    std::filesystem::remove(path);
}
