#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "newsent/errors.hpp"
#include "newsent/series.hpp"
#include "newsent/tsprep.hpp"
#include "oracles.hpp"

using namespace newsent;

namespace {

const Month kStart{std::chrono::year{2010}, std::chrono::month{1}};

MonthlySeries ms(std::vector<double> v) { return {kStart, std::move(v)}; }

std::vector<double> noise(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = z(rng);
    return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("hp: linear input has zero cycle, lambda 0 is the identity") {
    std::vector<double> line(40);
    for (std::size_t i = 0; i < line.size(); ++i) line[i] = 3.0 - 0.7 * static_cast<double>(i);
    for (double lambda : {1.0, 100.0, 14400.0, 1e6}) {
        const auto r = hp_filter(ms(line), lambda);
        CHECK(max_abs_diff(r.cycle.values, std::vector<double>(40, 0.0)) < 1e-8);
    }
    const auto y = noise(25, 3);
    CHECK(hp_trend(y, 0.0) == y);
}

TEST_CASE("hp trend matches a dense solve") {
    const auto y = noise(30, 4, 10.0);
    CHECK(max_abs_diff(hp_trend(y, 14400.0), oracle::hp_dense(y, 14400.0)) < 1e-8);
}

TEST_CASE("hp identity and linearity") {
    const auto x = noise(80, 5), y = noise(80, 6);
    const double a = 2.5, b = -0.75;
    std::vector<double> mix(80);
    for (std::size_t i = 0; i < 80; ++i) mix[i] = a * x[i] + b * y[i];
    const auto tx = hp_trend(x, 14400.0), ty = hp_trend(y, 14400.0), tm = hp_trend(mix, 14400.0);
    for (std::size_t i = 0; i < 80; ++i) CHECK(std::abs(tm[i] - (a * tx[i] + b * ty[i])) < 1e-8);
    const auto r = hp_filter(ms(x));
    for (std::size_t i = 0; i < 80; ++i) CHECK(std::abs(r.trend.values[i] + r.cycle.values[i] - x[i]) < 1e-10);
}

TEST_CASE("hp input errors") {
    CHECK_THROWS_AS(hp_trend(std::vector<double>{1, 2, 3}, 10.0), DomainError);
    CHECK_THROWS_AS(hp_trend(std::vector<double>{1, 2, 3, 4}, -1.0), DomainError);
}

TEST_CASE("minmax") {
    CHECK(minmax_normalize(ms({2, 4, 6})).values == std::vector<double>{0, 0.5, 1});
    const auto fixed = minmax_normalize(ms({0, 0.3, 1, 0.6}));
    CHECK(fixed.values[0] == 0.0);
    CHECK(fixed.values[2] == 1.0);
    CHECK_THROWS_AS(minmax_normalize(ms({5, 5, 5})), DomainError);

    const auto v = noise(200, 7);
    const auto n = minmax_normalize(ms(v)).values;
    CHECK(*std::min_element(n.begin(), n.end()) == 0.0);
    CHECK(*std::max_element(n.begin(), n.end()) == 1.0);
    std::vector<std::size_t> ra(200), rb(200);
    std::iota(ra.begin(), ra.end(), 0);
    std::iota(rb.begin(), rb.end(), 0);
    std::sort(ra.begin(), ra.end(), [&](auto i, auto j) { return v[i] < v[j]; });
    std::sort(rb.begin(), rb.end(), [&](auto i, auto j) { return n[i] < n[j]; });
    CHECK(ra == rb);
}

TEST_CASE("centred moving averages") {
    const auto three = centered_ma(ms({1, 2, 3, 4, 5}), 3);
    CHECK(three.series.values == std::vector<double>{2, 3, 4});
    CHECK(three.trimmed_each_side == 1);
    CHECK(format_month(three.series.start) == "2010-02");

    const auto one = centered_ma(ms({4, 1, 7}), 1);
    CHECK(one.series.values == std::vector<double>{4, 1, 7});
    CHECK(one.trimmed_each_side == 0);

    const std::vector<double> x{1, 2, 3, 4};
    const auto two = centered_ma(ms(x), 2);
    REQUIRE(two.series.size() == 2);
    for (std::size_t t = 1; t < 3; ++t) CHECK(two.series.values[t - 1] == (0.5 * x[t - 1] + x[t] + 0.5 * x[t + 1]) / 2.0);

    const auto v = noise(60, 9);
    const auto twelve = centered_ma(ms(v), 12);
    REQUIRE(twelve.series.size() == 48);
    for (std::size_t t = 6; t < 54; ++t) {
        double s = 0.5 * v[t - 6] + 0.5 * v[t + 6];
        for (std::size_t j = t - 5; j <= t + 5; ++j) s += v[j];
        CHECK(std::abs(twelve.series.values[t - 6] - s / 12.0) < 1e-14);
    }

    const auto flat = centered_ma(ms(std::vector<double>(20, 3.25)), 4);
    for (double y : flat.series.values) CHECK(y == doctest::Approx(3.25).epsilon(1e-15));
    CHECK_THROWS_AS(centered_ma(ms({1, 2, 3}), 3), DomainError);
    CHECK_THROWS_AS(centered_ma(ms({1, 2, 3}), 0), DomainError);
}

TEST_CASE("adf rejects for stationary series") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    std::vector<double> ar(500);
    for (std::size_t t = 1; t < ar.size(); ++t) ar[t] = 0.5 * ar[t - 1] + z(rng);
    CHECK(adf_test(ar, 12).reject_unit_root_at_5pct);

    const auto wn = adf_test(noise(500, 8), 12);
    CHECK(wn.reject_unit_root_at_5pct);
    CHECK(wn.statistic < -8.0);
    CHECK(wn.approx_p < 0.001);
}

TEST_CASE("adf keeps the unit root for random walks") {
    int kept = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto steps = noise(500, 1000 + seed);
        std::partial_sum(steps.begin(), steps.end(), steps.begin());
        kept += !adf_test(steps, 12).reject_unit_root_at_5pct;
    }
    CHECK(kept >= 90);
}

TEST_CASE("adf agrees with a statsmodels reference fixture") {
    std::ifstream in(NEWSENT_FIXTURES "/adf_reference.json");
    REQUIRE(in);
    const auto doc = nlohmann::json::parse(in);
    for (const auto& c : doc) {
        const auto y = c.at("series").get<std::vector<double>>();
        const auto r = adf_test(y, c.at("max_lags").get<int>());
        CHECK(r.lags_used == c.at("lags").get<int>());
        CHECK(r.nobs == c.at("nobs").get<std::size_t>());
        CHECK(r.statistic == doctest::Approx(c.at("statistic").get<double>()).epsilon(1e-9));
        CHECK(r.approx_p == doctest::Approx(c.at("p_value").get<double>()).epsilon(1e-9));
    }
}

TEST_CASE("adf critical values interpolate the table") {
    CHECK(adf_critical_value_5pct(10) == -3.00);
    CHECK(adf_critical_value_5pct(100) == -2.89);
    CHECK(adf_critical_value_5pct(75) == doctest::Approx(-2.91));
    CHECK(adf_critical_value_5pct(1000000) == -2.86);
    CHECK(adf_approx_p(5.0) == 1.0);
    CHECK(adf_approx_p(-30.0) == 0.0);
    CHECK_THROWS_AS(adf_test(std::vector<double>(15, 1.0), 12), DomainError);
}

TEST_CASE("describe") {
    const auto c = describe(std::vector<double>{5, 5, 5});
    CHECK(c.std_dev == 0.0);
    CHECK(c.skewness == 0.0);
    CHECK(c.degenerate);

    std::vector<double> alt(100);
    for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? 1.0 : -1.0;
    CHECK(describe(alt).kurtosis == 1.0);

    const auto v = noise(1000, 10, 3.0);
    long double sum = 0;
    for (double x : v) sum += x;
    const double mean = static_cast<double>(sum / 1000.0L);
    long double m2 = 0, m3 = 0, m4 = 0;
    for (double x : v) {
        const long double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= 1000;
    m3 /= 1000;
    m4 /= 1000;
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const auto s = describe(v);
    CHECK(std::abs(s.mean - mean) < 1e-12);
    CHECK(std::abs(s.std_dev - static_cast<double>(std::sqrt(m2))) < 1e-12);
    CHECK(std::abs(s.skewness - static_cast<double>(m3 / std::pow(m2, 1.5L))) < 1e-12);
    CHECK(std::abs(s.kurtosis - static_cast<double>(m4 / (m2 * m2))) < 1e-12);
    CHECK(s.median == 0.5 * (sorted[499] + sorted[500]));
    CHECK(s.minimum == sorted.front());
    CHECK(s.maximum == sorted.back());
    CHECK(s.n == 1000);
}

TEST_CASE("prepare_series composes the steps in the given order") {
    const auto raw = ms(noise(60, 12, 5.0));
    PrepChain chain;
    chain.period = 3;
    const auto p = prepare_series(raw, chain);
    const auto manual = centered_ma(minmax_normalize(hp_filter(raw, chain.lambda).cycle), 3).series;
    CHECK(p.series.values == manual.values);
    CHECK(p.series.start == manual.start);
    CHECK(p.trimmed_each_side == 1);
    CHECK(p.chain.size() == 3);
    CHECK(p.chain[0]["step"] == "hp");

    chain.steps = {PrepStep::MovingAverage, PrepStep::Minmax};
    const auto q = prepare_series(raw, chain);
    CHECK(q.series.values == minmax_normalize(centered_ma(raw, 3).series).values);
    CHECK_THROWS_AS(parse_prep_step("log"), ConfigError);
}

TEST_CASE("series csv round trip and alignment") {
    const MonthlySeries a{kStart, {0.1, 1e-300, -3.5, 1.0 / 3.0}};
    std::stringstream buf;
    write_series_csv(a, buf);
    const auto back = read_series_csv(buf, "buf");
    CHECK(back.start == a.start);
    CHECK(back.values == a.values);

    std::stringstream gap("month,value\n2010-01,1\n2010-03,2\n");
    CHECK_THROWS_AS(read_series_csv(gap, "gap"), ConfigError);

    const MonthlySeries b{add_months(kStart, 2), {7, 8, 9, 10}};
    const auto al = align_common({a, b});
    CHECK(al[0].values == std::vector<double>{-3.5, 1.0 / 3.0});
    CHECK(al[1].values == std::vector<double>{7, 8});
    const MonthlySeries far{add_months(kStart, 50), {1}};
    CHECK_THROWS_AS(align_common({a, far}), DomainError);
    CHECK(parse_number("+2.5") == 2.5);
}
