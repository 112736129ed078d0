#include <cmath>
#include <stdexcept>

#include <doctest.h>

#include "nof1/special_functions.hpp"
#include "oracles.hpp"

using namespace nof1::special;

TEST_CASE("log_gamma matches known values and the recurrence")
{
    CHECK(log_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(log_gamma(2.0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(std::fabs(log_gamma(0.5) - 0.5 * std::log(M_PI)) < 1e-13);
    CHECK(std::fabs(log_gamma(10.0) - std::log(362880.0)) < 1e-12);
    for (double x : {0.1, 0.7, 3.3, 17.5, 250.0, 1e4}) {
        CHECK(std::fabs(log_gamma(x + 1.0) - log_gamma(x) - std::log(x)) < 1e-10 * std::max(1.0, std::fabs(log_gamma(x))));
        CHECK(std::fabs(log_gamma(x) - std::lgamma(x)) < 1e-11 * std::max(1.0, std::fabs(std::lgamma(x))));
    }
}

TEST_CASE("incomplete_beta limits, symmetry and closed forms")
{
    CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
    for (double x : {0.05, 0.3, 0.5, 0.77, 0.99}) {
        CHECK(std::fabs(incomplete_beta(1.0, 1.0, x) - x) < 1e-14);
        CHECK(std::fabs(incomplete_beta(2.0, 1.0, x) - x * x) < 1e-14);
        CHECK(std::fabs(incomplete_beta(1.0, 3.0, x) - (1.0 - std::pow(1.0 - x, 3))) < 1e-14);
        CHECK(std::fabs(incomplete_beta(2.5, 4.0, x) + incomplete_beta(4.0, 2.5, 1.0 - x) - 1.0) < 1e-13);
    }
}

TEST_CASE("student_t_cdf against quadrature")
{
    CHECK(student_t_cdf(0.0, 1.0) == 0.5);
    CHECK(student_t_cdf(0.0, 7.3) == 0.5);
    CHECK(std::fabs(student_t_cdf(2.0, 5.0) - oracle::t_cdf(2.0, 5.0)) < 1e-9);
    CHECK(std::fabs(student_t_cdf(2.0, 5.0) - 0.9490302605850709) < 1e-12);
    CHECK(std::fabs(student_t_cdf(1.0, 1e9) - 0.84134474606854293) < 1e-4);
    CHECK(std::fabs(student_t_cdf(1.0, 1.0) - 0.75) < 1e-14);
    for (double nu : {0.5, 1.0, 2.5, 4.0, 11.0, 30.0, 1000.0})
        for (double x : {-6.0, -1.5, -0.2, 0.4, 1.0, 3.7, 12.0}) {
            CHECK(std::fabs(student_t_cdf(x, nu) - oracle::t_cdf(x, nu)) < 1e-9);
            CHECK(std::fabs(student_t_cdf(-x, nu) - (1.0 - student_t_cdf(x, nu))) < 1e-15);
        }
    CHECK_THROWS_AS(student_t_cdf(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(student_t_cdf(1.0, -2.0), std::invalid_argument);
}

TEST_CASE("student_t_cdf is monotone in x")
{
    for (double nu : {1.0, 4.0, 50.0}) {
        double prev = 0.0;
        for (double x = -20.0; x <= 20.0; x += 0.25) {
            const double c = student_t_cdf(x, nu);
            CHECK(c >= prev);
            prev = c;
        }
    }
}

TEST_CASE("student_t_pdf matches the density formula")
{
    for (double nu : {1.0, 4.0, 30.0})
        for (double x : {-3.0, 0.0, 0.5, 2.0}) CHECK(std::fabs(student_t_pdf(x, nu) - oracle::t_density(x, nu)) < 1e-13);
}

TEST_CASE("student_t_quantile inverts the cdf")
{
    const double q = student_t_quantile(0.975, 4.0);
    const double by_bisection = oracle::bisect([](double x) { return oracle::t_cdf(x, 4.0); }, 0.975, 0.0, 50.0);
    CHECK(std::fabs(q - by_bisection) < 1e-8);
    CHECK(std::fabs(q - 2.776445105197793) < 1e-9);
    CHECK(std::fabs(student_t_quantile(0.975, 1e7) - 1.959963984540054) < 1e-5);
    CHECK(student_t_quantile(0.5, 3.0) == 0.0);
    for (double nu : {1.0, 2.0, 6.5, 200.0})
        for (double p : {1e-6, 0.01, 0.2, 0.6, 0.9, 0.999}) {
            const double x = student_t_quantile(p, nu);
            CHECK(std::fabs(student_t_cdf(x, nu) - p) < 1e-10 * std::max(1.0, p / (1.0 - p)));
        }
}

TEST_CASE("kolmogorov_survival")
{
    CHECK(kolmogorov_survival(0.0) == 1.0);
    CHECK(std::fabs(kolmogorov_survival(1.36) - 0.0494) < 5e-4);
    CHECK(std::fabs(kolmogorov_survival(1.628) - 0.0100) < 2e-4);
    // Direct alternating series at moderate lambda
    const double lambda = 0.9;
    double series = 0.0;
    for (int k = 1; k < 200; ++k) series += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    CHECK(std::fabs(kolmogorov_survival(lambda) - series) < 1e-12);
    CHECK(kolmogorov_survival(5.0) < 1e-20);
    CHECK(std::fabs(kolmogorov_survival(0.2) - 1.0) < 1e-12);
}
