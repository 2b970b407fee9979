#include <doctest.h>

#include "dshell/dirac_algebra.hpp"
#include "dshell/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace dshell;

namespace {

constexpr double pi = std::numbers::pi;

double max_abs(const Matrix4c& m) { return m.cwiseAbs().maxCoeff(); }

Vec3 random_point(std::mt19937& rng, double rmin, double rmax)
{
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(rmin, rmax);
    Vec3 d(nd(rng), nd(rng), nd(rng));
    return ud(rng) * d.normalized();
}

// (-i alpha.grad + m beta - a) applied to phi by central differences
Matrix4c dirac_residual(const SpectralParameter& sp, const Vec3& x, double h)
{
    Matrix4c out = (sp.mass() * dirac::beta() - sp.energy() * dirac::identity()) * phi_a(sp, x);
    for (int j = 0; j < 3; ++j) {
        Vec3 e = Vec3::Zero();
        e[j] = h;
        const Matrix4c d = (phi_a(sp, x + e) - phi_a(sp, x - e)) / (2.0 * h);
        out += -I_unit * dirac::alpha(j + 1) * d;
    }
    return out;
}

}  // namespace

TEST_CASE("anticommutation table is exact")
{
    const Matrix4c I = dirac::identity();
    for (int j = 1; j <= 3; ++j) {
        CHECK(dirac::alpha(j).isApprox(dirac::alpha(j).adjoint(), 0.0));
        for (int k = 1; k <= 3; ++k) {
            const Matrix4c ac = dirac::alpha(j) * dirac::alpha(k) + dirac::alpha(k) * dirac::alpha(j);
            const Matrix4c expect = (j == k ? 2.0 : 0.0) * I;
            CHECK(max_abs(ac - expect) == 0.0);
        }
        CHECK(max_abs(dirac::alpha(j) * dirac::beta() + dirac::beta() * dirac::alpha(j)) == 0.0);
    }
    CHECK(max_abs(dirac::beta() * dirac::beta() - I) == 0.0);
    CHECK(dirac::beta().isApprox(dirac::beta().adjoint(), 0.0));
}

TEST_CASE("alpha_dot is the linear combination")
{
    const Vec3 v(0.3, -1.2, 2.0);
    const Matrix4c expect = 0.3 * dirac::alpha(1) - 1.2 * dirac::alpha(2) + 2.0 * dirac::alpha(3);
    CHECK(max_abs(dirac::alpha_dot(v) - expect) < 1e-15);
    CHECK_THROWS_AS(dirac::alpha(0), Error);
    CHECK_THROWS_AS(dirac::pauli(4), Error);
}

TEST_CASE("spectral parameter validity and branch")
{
    const SpectralParameter sp(I_unit, 1.0);
    CHECK(std::abs(sp.decay_rate() - std::sqrt(2.0)) < 1e-15);
    CHECK(sp.decay_rate().real() > 0.0);

    // inside the gap
    const SpectralParameter gap(0.5, 1.0);
    CHECK(std::abs(sp.decay_rate().imag()) < 1e-15);
    CHECK(std::abs(gap.decay_rate() - std::sqrt(0.75)) < 1e-15);

    // the real axis outside (-m, m) is spectrum
    CHECK_THROWS_AS(SpectralParameter(1.5, 1.0), Error);
    CHECK_THROWS_AS(SpectralParameter(1.0, 1.0), Error);
    CHECK_THROWS_AS(SpectralParameter(I_unit, -1.0), Error);
    try {
        SpectralParameter(2.0, 1.0);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_argument);
    }

    // massless zero energy is the degenerate decay-free point
    const SpectralParameter zero(0.0, 0.0);
    CHECK(std::abs(zero.decay_rate()) == 0.0);

    // Re sqrt > 0 for many off-axis energies
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> ud(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        const cplx a(ud(rng), ud(rng));
        if (std::abs(a.imag()) < 1e-3) continue;
        const SpectralParameter p(a, 1.0);
        CHECK(p.decay_rate().real() > 0.0);
        CHECK(std::abs(p.decay_rate() * p.decay_rate() - (1.0 - a * a)) < 1e-12 * (1.0 + std::abs(a * a)));
    }
}

TEST_CASE("branch symmetry under conjugation")
{
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> ud(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        const cplx a(ud(rng), ud(rng) + (i % 2 ? 0.1 : -0.1));
        const SpectralParameter p(a, 0.7);
        const SpectralParameter q(std::conj(a), 0.7);
        CHECK(std::abs(std::conj(p.decay_rate()) - q.decay_rate()) < 1e-14);
        CHECK(std::abs(p.conjugate().decay_rate() - q.decay_rate()) < 1e-14);
    }
}

TEST_CASE("decay_branch")
{
    CHECK(decay_branch(cplx(4.0, 0.0)) == cplx(2.0, 0.0));
    CHECK(decay_branch(cplx(-4.0, 1e-300)).real() >= 0.0);
    const cplx z(-3.0, -4.0);
    const cplx r = decay_branch(z);
    CHECK(r.real() > 0.0);
    CHECK(std::abs(r * r - z) < 1e-14);
    CHECK_THROWS_AS(decay_branch(cplx(-4.0, 0.0)), Error);
}

TEST_CASE("phi_a entry from the m beta term")
{
    // a = 0, m = 1, x = (1,0,0): kappa = 1, entry (1,1) = e^{-1}/(4 pi) (the alpha_1 part is off-diagonal)
    const SpectralParameter sp(0.0, 1.0);
    const Matrix4c phi = phi_a(sp, Vec3(1.0, 0.0, 0.0));
    const double expect = std::exp(-1.0) / (4.0 * pi);
    CHECK(std::abs(phi(0, 0) - expect) < 1e-15);
    CHECK(std::abs(phi(2, 2) + expect) < 1e-15);
    // off-diagonal alpha_1 entries carry (1 + kr) i e^{-1}/(4pi)
    CHECK(std::abs(phi(0, 3) - 2.0 * I_unit * expect) < 1e-15);
}

TEST_CASE("phi_a solves the Dirac equation away from 0")
{
    const SpectralParameter sp(I_unit, 1.0);
    std::mt19937 rng(3);
    for (int i = 0; i < 20; ++i) {
        const Vec3 x = random_point(rng, 0.5, 2.0);
        CHECK(max_abs(dirac_residual(sp, x, 1e-4)) <= 1e-6);
    }
}

TEST_CASE("phi_a rejects the singular point and matches phi_apply")
{
    const SpectralParameter sp(I_unit, 1.0);
    CHECK_THROWS_AS(phi_a(sp, Vec3::Zero()), Error);
    CHECK_THROWS_AS(phi_a(sp, Vec3(1e-13, 0.0, 0.0)), Error);
    try {
        phi_a(sp, Vec3::Zero());
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::singular_point);
    }
    std::mt19937 rng(5);
    Spinor g;
    g << 1.0, cplx(0.2, -0.3), cplx(0.0, 1.0), -0.5;
    for (int i = 0; i < 20; ++i) {
        const Vec3 x = random_point(rng, 0.1, 3.0);
        CHECK((phi_a(sp, x) * g - phi_apply(sp, x, g)).norm() < 1e-14 * (phi_a(sp, x) * g).norm());
    }
}

TEST_CASE("massless zero-energy kernel is odd")
{
    const SpectralParameter sp(0.0, 0.0);
    std::mt19937 rng(9);
    for (int i = 0; i < 20; ++i) {
        const Vec3 x = random_point(rng, 0.2, 2.0);
        CHECK(max_abs(phi_a(sp, x) + phi_a(sp, -x)) < 1e-15);
    }
}

TEST_CASE("kernel symmetry conj(phi^t)(x) = phi_{conj a}(-x)")
{
    const SpectralParameter sp(cplx(0.3, 0.8), 1.0);
    const SpectralParameter sc = sp.conjugate();
    std::mt19937 rng(13);
    for (int i = 0; i < 50; ++i) {
        const Vec3 x = random_point(rng, 0.1, 4.0);
        const Matrix4c lhs = phi_a(sp, x).adjoint();
        const Matrix4c rhs = phi_a(sc, -x);
        CHECK(max_abs(lhs - rhs) <= 1e-13 * max_abs(rhs));
    }
}

TEST_CASE("exponential decay with rate Re kappa")
{
    const SpectralParameter sp(I_unit, 1.0);
    std::vector<double> r, logn;
    for (double t = 1.0; t <= 20.0; t += 1.0) {
        r.push_back(t);
        logn.push_back(std::log(max_abs(phi_a(sp, Vec3(t, 0.0, 0.0)))));
    }
    // slope of log|phi| over r, corrected for the algebraic 1/r prefactor
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double y = logn[i] + std::log(r[i]);
        sx += r[i];
        sy += y;
        sxx += r[i] * r[i];
        sxy += r[i] * y;
    }
    const double rate = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(rate > 0.0);
    CHECK(rate == doctest::Approx(std::sqrt(2.0)).epsilon(0.05));
}

TEST_CASE("kernel split")
{
    const SpectralParameter sp(I_unit, 1.0);
    const KernelSplit ks = kernel_split(sp);

    const Vec3 x(0.3, -0.2, 0.7);
    CHECK(max_abs(ks.sum(x) - phi_a(sp, x)) <= 1e-13 * max_abs(phi_a(sp, x)));

    // omega3 at (0,0,2) = (i/16 pi) alpha_3
    const Matrix4c w3 = ks.omega3(Vec3(0.0, 0.0, 2.0));
    CHECK(max_abs(w3 - (I_unit / (16.0 * pi)) * dirac::alpha(3)) < 1e-16);

    std::mt19937 rng(17);
    for (int i = 0; i < 100; ++i) {
        const Vec3 y = random_point(rng, 0.01, 5.0);
        const Matrix4c p = phi_a(sp, y);
        CHECK(max_abs(ks.sum(y) - p) <= 1e-13 * max_abs(p));
    }

    // omega2 is one order less singular than omega3: |omega2| |x| -> |kappa| / (4 pi)
    const double lim = std::abs(sp.decay_rate()) / (4.0 * pi);
    for (double r : {1e-3, 1e-4, 1e-5}) {
        const Vec3 y(r / std::sqrt(3.0), r / std::sqrt(3.0), r / std::sqrt(3.0));
        // operator norm of i alpha.xhat is 1
        const double n2 = ks.omega2(y).operatorNorm();
        CHECK(n2 * r == doctest::Approx(lim).epsilon(2.0 * std::abs(sp.decay_rate()) * r));
    }
}

TEST_CASE("riesz kernel")
{
    const Vec3 k = riesz_kernel(Vec3(1.0, 0.0, 0.0));
    CHECK(k[0] == doctest::Approx(1.0 / (4.0 * pi)).epsilon(1e-15));
    CHECK(k[1] == 0.0);
    CHECK(k[2] == 0.0);
    CHECK_THROWS_AS(riesz_kernel(Vec3::Zero()), Error);

    std::mt19937 rng(19);
    for (int i = 0; i < 100; ++i) {
        const Vec3 x = random_point(rng, 0.1, 3.0);
        CHECK((riesz_kernel(-x) + riesz_kernel(x)).norm() == 0.0);
    }

    // Calderon-Zygmund smoothness with C = 10
    std::uniform_real_distribution<double> ud(0.0, 0.5);
    for (int i = 0; i < 200; ++i) {
        const Vec3 x = random_point(rng, 0.5, 2.0), y = random_point(rng, 0.1, 2.0);
        const double d = (x - y).norm();
        if (d < 1e-3) continue;
        const Vec3 z = x + ud(rng) * d * random_point(rng, 1.0, 1.0);
        const double lhs = (riesz_kernel(z - y) - riesz_kernel(x - y)).norm();
        CHECK(lhs <= 10.0 * (z - x).norm() / (d * d * d));
    }
}
