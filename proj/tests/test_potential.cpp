#include <doctest.h>

#include "dshell/errors.hpp"
#include "dshell/potential.hpp"
#include "dshell/quadrature.hpp"

#include <cmath>
#include <random>

using namespace dshell;

namespace {

// Gauss-Legendre on each piece between the given breaks of [-1, 1]
double integrate_t(const std::function<double(double)>& f, std::vector<double> breaks = {})
{
    breaks.insert(breaks.begin(), -1.0);
    breaks.push_back(1.0);
    double s = 0.0;
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const Rule r = gauss_legendre(40, breaks[p], breaks[p + 1]);
        for (std::size_t i = 0; i < r.size(); ++i) s += r.w[i] * f(r.x[i]);
    }
    return s;
}

}  // namespace

TEST_CASE("smallness examples")
{
    CHECK(is_delta_eta_small(PotentialProfile::square(1.0, 0.1), 0.1));
    CHECK_FALSE(is_delta_eta_small(PotentialProfile::square(30.0, 0.1), 0.1));
    CHECK(PotentialProfile::square(1.0, 0.1).sup_norm() == doctest::Approx(0.5));

    // when small, int |V| <= 2 delta
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const double eta = 0.05 + 0.5 * std::abs(ud(rng));
        std::vector<double> ts, vs;
        for (int k = 0; k <= 8; ++k) {
            ts.push_back(-eta + 2.0 * eta * k / 8.0);
            vs.push_back(ud(rng) / eta);
        }
        const auto p = PotentialProfile::piecewise_linear(ts, vs, eta);
        const double delta = 1.0;
        if (is_delta_eta_small(p, delta)) CHECK(p.l1_norm() <= 2.0 * delta + 1e-12);
    }
}

TEST_CASE("table sup uses the sampling grid")
{
    const auto p = PotentialProfile::table({-0.5, 0.0, 0.5}, {0.0, 2.0, 0.0}, 0.5);
    CHECK_FALSE(p.declared_sup().has_value());
    CHECK(p.sup_norm(10001) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("factorization")
{
    SUBCASE("zero profile")
    {
        const auto f = factorize(PotentialProfile::square(0.0, 0.3));
        for (double t : {-0.9, 0.0, 0.4}) {
            CHECK(f.u(t) == 0.0);
            CHECK(f.v(t) == 0.0);
        }
    }
    SUBCASE("square well")
    {
        const double tau = 3.0, eta = 0.2;
        const auto f = factorize(PotentialProfile::square(tau, eta));
        for (double t : {-0.99, -0.3, 0.0, 0.7}) {
            CHECK(f.u(t) == doctest::Approx(std::sqrt(eta * tau / 2.0)).epsilon(1e-15));
            CHECK(f.v(t) == doctest::Approx(std::sqrt(eta * tau / 2.0)).epsilon(1e-15));
        }
        CHECK(f.u(1.5) == 0.0);
        const auto g = factorize(PotentialProfile::square(-3.0, eta));
        CHECK(g.v(0.1) == doctest::Approx(-std::sqrt(eta * 3.0 / 2.0)));
        CHECK(g.u(0.1) > 0.0);
    }
    SUBCASE("uv = eta V(eta t) and |u|_2 |v|_2 = |V|_1")
    {
        const double eta = 0.4;
        const auto p = PotentialProfile::piecewise_linear({-0.4, -0.1, 0.2, 0.4}, {0.0, 3.0, -1.0, 0.0}, eta);
        const auto f = factorize(p);
        for (int i = 0; i <= 200; ++i) {
            const double t = -1.0 + 2.0 * i / 200.0;
            CHECK(f.u(t) * f.v(t) == doctest::Approx(eta * p(eta * t)).epsilon(1e-14));
            CHECK(f.u(t) >= 0.0);
        }
        // the zero crossing of V at t = eta^{-1} * 0.125 is a kink of |V|
        const double zc = (-0.1 + 0.3 * 3.0 / 4.0) / eta;
        std::vector<double> br = f.breakpoints();
        br.push_back(zc);
        std::sort(br.begin(), br.end());
        const double u2 = integrate_t([&](double t) { return f.u(t) * f.u(t); }, br);
        const double v2 = integrate_t([&](double t) { return f.v(t) * f.v(t); }, br);
        // |V|_1 by hand: triangles and trapezoids of the polygon
        const double l1 = 0.5 * 0.3 * 3.0 + 0.5 * 0.225 * 3.0 + 0.5 * 0.075 * 1.0 + 0.5 * 0.2 * 1.0;
        CHECK(std::sqrt(u2) * std::sqrt(v2) == doctest::Approx(l1).epsilon(1e-10));
        CHECK(u2 == doctest::Approx(l1).epsilon(1e-10));
    }
    SUBCASE("gaussian")
    {
        const double eta = 0.5;
        const auto p = PotentialProfile::truncated_gaussian(2.0, 0.2, eta);
        const auto f = factorize(p);
        const double u2 = integrate_t([&](double t) { return f.u(t) * f.u(t); });
        const double l1 = 2.0 * 0.2 * std::sqrt(2.0 * M_PI) * std::erf(eta / (0.2 * std::sqrt(2.0)));
        CHECK(u2 == doctest::Approx(l1).epsilon(1e-10));
        CHECK(p.l1_norm() == doctest::Approx(l1).epsilon(1e-10));
    }
}

TEST_CASE("squeezing")
{
    const auto p = PotentialProfile::square(1.0, 0.1);
    const auto s = squeeze(p, 0.01);
    CHECK(s(0.0) == doctest::Approx(5.0));
    CHECK(s(0.0099) == doctest::Approx(5.0));
    CHECK(s(0.0101) == 0.0);
    CHECK(s.integral() == doctest::Approx(0.1).epsilon(1e-14));

    const auto same = squeeze(p, 0.1);
    for (double t : {-0.09, 0.0, 0.05, 0.2}) CHECK(same(t) == p(t));

    const auto lin = PotentialProfile::piecewise_linear({-0.3, 0.0, 0.3}, {0.0, 2.0, 0.0}, 0.3);
    for (double e : {0.3, 0.15, 0.03}) {
        const auto q = squeeze(lin, e);
        CHECK(q.integral() == doctest::Approx(lin.integral()).epsilon(1e-12));
        CHECK(q(1.0001 * e) == 0.0);
        CHECK(q(-1.0001 * e) == 0.0);
    }
    CHECK(lin.integral() == doctest::Approx(0.6).epsilon(1e-14));

    CHECK_THROWS_AS(squeeze(p, 0.2), Error);
    CHECK_THROWS_AS(squeeze(p, 0.0), Error);
}

TEST_CASE("profile construction and json")
{
    CHECK_THROWS_AS(PotentialProfile::square(1.0, -1.0), Error);
    CHECK_THROWS_AS(PotentialProfile::table({0.0, 1.0}, {1.0, 1.0}, 0.5), Error);
    CHECK_THROWS_AS(PotentialProfile::table({0.1, 0.0}, {1.0, 1.0}, 0.5), Error);

    // repeated abscissae encode a jump, evaluated right-continuously
    const auto step = PotentialProfile::table({-0.5, 0.0, 0.0, 0.5}, {1.0, 1.0, 3.0, 3.0}, 0.5);
    CHECK(step(-0.1) == doctest::Approx(1.0));
    CHECK(step(0.0) == doctest::Approx(3.0));
    CHECK(step(0.2) == doctest::Approx(3.0));
    CHECK(step.integral() == doctest::Approx(2.0).epsilon(1e-12));

    const nlohmann::json js = {{"kind", "square"}, {"tau", 2.5}, {"eta", 0.3}};
    const auto sq = PotentialProfile::from_json(js);
    CHECK(sq.kind() == ProfileKind::square);
    CHECK(*sq.tau() == 2.5);
    CHECK(sq.to_json() == js);

    const nlohmann::json jt = {{"kind", "table"}, {"ts", {-0.2, 0.0, 0.2}}, {"vs", {0.0, 1.0, 0.0}}, {"eta", 0.2}};
    const auto tb = PotentialProfile::from_json(jt);
    CHECK(tb.kind() == ProfileKind::table);
    CHECK(tb(0.1) == doctest::Approx(0.5));
    CHECK(PotentialProfile::from_json(tb.to_json()).to_json() == tb.to_json());

    CHECK_THROWS_AS(PotentialProfile::from_json({{"kind", "cubic"}, {"eta", 1.0}}), Error);
    CHECK_THROWS_AS(PotentialProfile::from_json({{"tau", 1.0}}), Error);
}

TEST_CASE("sign convention")
{
    CHECK(sign_of(2.0) == 1.0);
    CHECK(sign_of(-0.1) == -1.0);
    CHECK(sign_of(0.0) == 0.0);
}
