#include <doctest.h>

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "newsent/distributions.hpp"

using namespace newsent::dist;

namespace {

bool close(double a, double b, double rel = 1e-12, double abs = 1e-300) {
    return std::abs(a - b) <= std::max(abs, rel * std::max(std::abs(a), std::abs(b)));
}

}  // namespace

TEST_CASE("incomplete beta matches boost") {
    for (double a : {0.5, 1.0, 2.5, 10.0, 150.0})
        for (double b : {0.5, 1.0, 3.0, 40.0})
            for (double x : {0.0, 1e-6, 0.1, 0.5, 0.9, 0.999, 1.0}) {
                INFO(a << " " << b << " " << x);
                CHECK(close(incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-11));
            }
}

TEST_CASE("incomplete gamma matches boost") {
    for (double a : {0.5, 1.0, 2.0, 7.5, 60.0})
        for (double x : {0.0, 0.01, 0.7, 3.0, 12.0, 80.0, 200.0}) {
            INFO(a << " " << x);
            CHECK(close(gamma_p(a, x), boost::math::gamma_p(a, x), 1e-11));
            CHECK(close(gamma_q(a, x), boost::math::gamma_q(a, x), 1e-10, 1e-300));
        }
}

TEST_CASE("t, chi-square and normal tails match boost") {
    for (double df : {1.0, 3.0, 10.0, 57.0, 500.0})
        for (double t : {0.0, 0.3, 1.96, 4.0, -2.5, 12.0}) {
            boost::math::students_t dist(df);
            CHECK(close(student_t_two_sided_p(t, df), 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 1e-10));
        }
    for (double df : {1.0, 2.0, 4.0, 12.0, 36.0})
        for (double x : {0.0, 0.5, 3.84, 13.879, 60.0}) {
            boost::math::chi_squared dist(df);
            CHECK(close(chi_square_upper_p(x, df), boost::math::cdf(boost::math::complement(dist, x)), 1e-10));
        }
    boost::math::normal n;
    for (double x : {-8.0, -1.5, 0.0, 0.4, 3.0}) CHECK(close(normal_cdf(x), boost::math::cdf(n, x), 1e-13));
}
