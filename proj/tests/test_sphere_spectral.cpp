#include <doctest.h>

#include "dshell/dirac_algebra.hpp"
#include "dshell/errors.hpp"
#include "dshell/sphere_spectral.hpp"

#include <cmath>
#include <random>

using namespace dshell;

namespace {

ChannelSystem channel(int kappa, double a = 0.0)
{
    ChannelSystem ch;
    ch.kappa = kappa;
    ch.energy = a;
    return ch;
}

// Independent shooting oracle: RK4 from a power-law seed at r0 to R, matching
// by the Cayley transform of J, RK4 inward from r_max with the decaying seed.
struct ShootingOracle {
    int kappa;
    double m = 1.0, R = 1.0;
    Matrix2d M;

    Vector2d rhs(double r, const Vector2d& y, double a) const
    {
        return {-kappa * y[0] / r + (a + m) * y[1], kappa * y[1] / r - (a - m) * y[0]};
    }
    Vector2d rk4(Vector2d y, double r0, double r1, int n, double a) const
    {
        const double h = (r1 - r0) / n;
        for (int i = 0; i < n; ++i) {
            const double r = r0 + i * h;
            const Vector2d k1 = rhs(r, y, a), k2 = rhs(r + h / 2, y + h / 2 * k1, a),
                           k3 = rhs(r + h / 2, y + h / 2 * k2, a), k4 = rhs(r + h, y + h * k3, a);
            y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        return y;
    }
    double det(double a) const
    {
        const double r0 = 1e-3;
        // leading terms of the regular solution
        const Vector2d seed = kappa < 0 ? Vector2d(r0, -(a - m) * r0 * r0 / 3) : Vector2d((a + m) * r0 * r0 / 3, r0);
        const Vector2d in = M * rk4(seed, r0, R, 20000, a);
        const double k = std::sqrt(m * m - a * a), rmax = R + 30 / k;
        const Vector2d far(1.0, -k / (a + m));
        const Vector2d out = rk4(far, rmax, R, 40000, a);
        return (in[0] * out[1] - in[1] * out[0]) / (in.norm() * out.norm());
    }
    double root(double lo, double hi) const
    {
        double flo = det(lo);
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (lo + hi), fm = det(mid);
            if ((fm < 0) == (flo < 0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    }
};

Matrix2d cayley(double lambda, const Matrix2d& J)
{
    const Matrix2d I = Matrix2d::Identity();
    return (I - lambda / 2 * J).inverse() * (I + lambda / 2 * J);
}

const Matrix2d J_e = (Matrix2d() << 0, -1, 1, 0).finished();
const Matrix2d J_s = (Matrix2d() << 0, 1, 1, 0).finished();

// psi = (f/r Omega_kappa, i g/r Omega_-kappa) for j = 1/2, m_j = 1/2, with
// Omega_-1 = chi and Omega_+1 = -(sigma.x^) chi, chi = (1, 0)
Spinor channel_spinor(int kappa, const Vector2d& fg, const Vec3& x)
{
    const double r = x.norm();
    const Vec3 xh = x / r;
    Eigen::Vector2cd chi(1.0, 0.0);
    Matrix2c sx = xh.x() * dirac::pauli(1) + xh.y() * dirac::pauli(2) + xh.z() * dirac::pauli(3);
    const Eigen::Vector2cd om_m = chi, om_p = -(sx * chi);
    Spinor s;
    s.head<2>() = fg[0] / r * (kappa < 0 ? om_m : om_p);
    s.tail<2>() = I_unit * fg[1] / r * (kappa < 0 ? om_p : om_m);
    return s;
}

}  // namespace

TEST_CASE("channel convention solves the 3D Dirac equation")
{
    for (int kappa : {-1, 1})
        for (double a : {-0.4, 0.3}) {
            const auto ch = channel(kappa, a);
            auto psi = [&](const Vec3& x) { return channel_spinor(kappa, regular_solution(ch, x.norm()), x); };
            auto psi_out = [&](const Vec3& x) { return channel_spinor(kappa, decaying_solution(ch, x.norm()), x); };
            for (const auto& field : {std::function<Spinor(const Vec3&)>(psi), std::function<Spinor(const Vec3&)>(psi_out)}) {
                const Vec3 x(0.3, -0.4, 0.5);
                const double h = 1e-4;
                Spinor res = (ch.mass * dirac::beta() - a * dirac::identity()) * field(x);
                for (int j = 0; j < 3; ++j) {
                    Vec3 e = Vec3::Zero();
                    e[j] = h;
                    res += -I_unit * dirac::alpha(j + 1) * ((field(x + e) - field(x - e)) / (2 * h));
                }
                CHECK(res.norm() <= 1e-6 * field(x).norm());
            }
        }

    // the radial generator is the system written in the header
    const auto ch = channel(-1, 0.2);
    const Matrix2d G = radial_generator(ch, 0.5, 0.3, 0.1);
    CHECK(G(0, 0) == doctest::Approx(2.0));
    CHECK(G(0, 1) == doctest::Approx(0.2 - 0.3 + 1.0 + 0.1));
    CHECK(G(1, 0) == doctest::Approx(-(0.2 - 0.3 - 1.0 - 0.1)));
    CHECK(G(1, 1) == doctest::Approx(-2.0));
}

TEST_CASE("shell matching")
{
    CHECK(shell_matching(0.0, CouplingKind::electrostatic).matrix == Matrix2d::Identity());
    CHECK(shell_matching(0.0, CouplingKind::scalar).matrix == Matrix2d::Identity());

    const Matrix2d M = shell_matching(2 * std::tan(0.4), CouplingKind::electrostatic).matrix;
    CHECK(M(0, 0) == doctest::Approx(std::cos(0.8)).epsilon(1e-14));
    CHECK(M(1, 1) == doctest::Approx(std::cos(0.8)).epsilon(1e-14));
    CHECK(std::abs(M(0, 1)) == doctest::Approx(std::sin(0.8)).epsilon(1e-14));
    CHECK(M(1, 0) == doctest::Approx(-M(0, 1)).epsilon(1e-14));
    CHECK((M - rotation(0.8)).norm() <= 1e-15);
    CHECK(rotation(0.8)(0, 1) == doctest::Approx(-std::sin(0.8)));

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> ud(-1.95, 1.95);
    for (int i = 0; i < 100; ++i) {
        const double lam = ud(rng);
        for (auto kind : {CouplingKind::electrostatic, CouplingKind::scalar}) {
            const auto t = shell_matching(lam, kind);
            CHECK(std::abs(t.matrix.determinant() - 1.0) <= 1e-12);
            CHECK((t.matrix - cayley(lam, kind == CouplingKind::electrostatic ? J_e : J_s)).norm() <= 1e-13);
        }
    }
    CHECK(coupling_generator(CouplingKind::electrostatic) * coupling_generator(CouplingKind::electrostatic) ==
          -Matrix2d::Identity());
    CHECK(coupling_generator(CouplingKind::scalar) * coupling_generator(CouplingKind::scalar) == Matrix2d::Identity());

    for (double lam : {2.0, -2.0})
        for (auto kind : {CouplingKind::electrostatic, CouplingKind::scalar}) {
            CHECK_THROWS_AS(shell_matching(lam, kind), Error);
            try {
                shell_matching(lam, kind);
            } catch (const Error& e) {
                CHECK(e.code() == ErrorCode::critical_coupling);
            }
        }
}

TEST_CASE("transfer through the squeezed well")
{
    const auto ch = channel(-1, -0.3);
    const Matrix2d A = radial_generator(ch, 1.0);
    Matrix2d taylor = Matrix2d::Identity(), term = Matrix2d::Identity();
    for (int n = 1; n < 30; ++n) {
        term = term * (0.1 * A) / n;
        taylor += term;
    }
    CHECK((expm2(0.1 * A) - taylor).norm() <= 1e-14);

    // zero potential: free propagation
    const auto zero = squeeze(PotentialProfile::square(0.0, 1.0), 0.2);
    CHECK((transfer_through_squeezed(ch, zero, CouplingKind::electrostatic) - free_transfer(ch, 0.8, 1.2, 64)).norm() <=
          1e-12);
    // free transfer carries the regular solution
    const Vector2d y0 = regular_solution(ch, 0.6), y1 = regular_solution(ch, 1.4);
    const Vector2d prop = free_transfer(ch, 0.6, 1.4, 200) * y0;
    CHECK(std::abs(prop[0] * y1[1] - prop[1] * y1[0]) <= 1e-10 * prop.norm() * y1.norm());

    for (auto kind : {CouplingKind::electrostatic, CouplingKind::scalar}) {
        const double te = 1.0;
        const auto p = PotentialProfile::square(te, 1.0);
        const Matrix2d limit = kind == CouplingKind::electrostatic
                                   ? rotation(te)
                                   : Matrix2d((Matrix2d() << std::cosh(te), std::sinh(te), std::sinh(te), std::cosh(te)).finished());
        const double lam = kind == CouplingKind::electrostatic ? 2 * std::tan(te / 2) : 2 * std::tanh(te / 2);
        // the Klein identity, exact
        CHECK((shell_matching(lam, kind).matrix - limit).norm() <= 1e-14);

        std::vector<double> eps{0.04, 0.02, 0.01, 0.005}, err;
        for (double e : eps) {
            const Matrix2d T = transfer_through_squeezed(ch, squeeze(p, e), kind);
            CHECK(std::abs(T.determinant() - 1.0) <= 1e-12);
            err.push_back((T - limit).norm());
        }
        const double slope = loglog_slope(eps, err);
        CHECK(slope == doctest::Approx(1.0).epsilon(0.1));
        CHECK(err.back() < err.front());
    }
}

TEST_CASE("gap eigenvalues")
{
    const auto scan = gap_window(1.0);
    CHECK(scan.a_min == doctest::Approx(-1.0 + 1e-8));
    CHECK(scan.a_max == doctest::Approx(1.0 - 1e-8));

    for (int kappa : {-1, 1, -2, 2})
        CHECK(find_gap_eigenvalues(channel(kappa), shell_matching(0.0, CouplingKind::electrostatic), scan)
                  .eigenvalues.empty());

    struct Case {
        int kappa;
        double lambda;
        double reference;  // independent Bessel/brentq oracle
    };
    const double lt = 2 * std::tan(0.5);
    for (const Case& c : {Case{1, 1.0, -0.652657938565}, Case{1, lt, -0.564883467419}, Case{-1, lt, -0.984969126959}}) {
        const auto tm = shell_matching(c.lambda, CouplingKind::electrostatic);
        const auto res = find_gap_eigenvalues(channel(c.kappa), tm, scan);
        REQUIRE(res.eigenvalues.size() == 1);
        const double a = res.eigenvalues[0];
        CHECK(std::abs(a - c.reference) <= 1e-9);
        const auto [lo, hi] = res.brackets[0];
        CHECK(matching_determinant(channel(c.kappa), tm, lo) * matching_determinant(channel(c.kappa), tm, hi) < 0.0);
        CHECK((lo <= a && a <= hi));

        ShootingOracle so{c.kappa, 1.0, 1.0, cayley(c.lambda, J_e)};
        CHECK(std::abs(so.root(a - 1e-3, std::min(a + 1e-3, 1.0 - 1e-9)) - a) <= 1e-8);

        // integrated basis, doubled resolution
        SolverOptions opt;
        opt.basis = ChannelBasis::integrated;
        const double a1 = find_gap_eigenvalues(channel(c.kappa), tm, scan, opt).eigenvalues.at(0);
        opt.interior_panels *= 2;
        opt.r_max_factor *= 2;
        opt.exterior_step /= 2;
        const double a2 = find_gap_eigenvalues(channel(c.kappa), tm, scan, opt).eigenvalues.at(0);
        CHECK(std::abs(a1 - a2) <= 1e-8);
        CHECK(std::abs(a1 - a) <= 1e-8);
    }
    // no eigenvalue for kappa = -1 at lambda = 1
    CHECK(find_gap_eigenvalues(channel(-1), shell_matching(1.0, CouplingKind::electrostatic), scan).eigenvalues.empty());

    // charge conjugation: (a, lambda, kappa) -> (-a, -lambda, -kappa)
    for (double lam : {0.5, 1.0, 1.5})
        for (int kappa : {-1, 1, 2}) {
            const auto p = find_gap_eigenvalues(channel(kappa), shell_matching(lam, CouplingKind::electrostatic), scan);
            const auto q = find_gap_eigenvalues(channel(-kappa), shell_matching(-lam, CouplingKind::electrostatic), scan);
            REQUIRE(p.eigenvalues.size() == q.eigenvalues.size());
            for (std::size_t i = 0; i < p.eigenvalues.size(); ++i)
                CHECK(std::abs(p.eigenvalues[i] + q.eigenvalues[q.eigenvalues.size() - 1 - i]) <= 1e-9);
        }

    // squeezed coupling: sub-panel doubling
    const SqueezedCoupling sq{squeeze(PotentialProfile::square(1.0, 1.0), 0.05), CouplingKind::electrostatic};
    SolverOptions o1, o2;
    o2.sub_panels = 2 * o1.sub_panels;
    const auto e1 = find_gap_eigenvalues(channel(1), sq, scan, o1), e2 = find_gap_eigenvalues(channel(1), sq, scan, o2);
    REQUIRE(e1.eigenvalues.size() == 1);
    REQUIRE(e2.eigenvalues.size() == 1);
    CHECK(std::abs(e1.eigenvalues[0] - e2.eigenvalues[0]) <= 1e-8);
}

TEST_CASE("Klein convergence study")
{
    const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};

    // weak coupling: the two targets coincide
    const auto weak = klein_convergence_study(PotentialProfile::square(1e-3, 1.0), channel(-1), eps,
                                              CouplingKind::electrostatic);
    CHECK(std::abs(weak.lambda_nonlinear - weak.lambda_linear) <= 1e-10);
    CHECK(weak.a_nonlinear.has_value() == weak.a_linear.has_value());

    // electrostatic kappa = +1: converges to the nonlinear target at first order
    const auto st = klein_convergence_study(PotentialProfile::square(1.0, 1.0), channel(1), eps,
                                            CouplingKind::electrostatic);
    CHECK(st.lambda_nonlinear == doctest::Approx(2 * std::tan(0.5)).epsilon(1e-14));
    REQUIRE(st.a_nonlinear.has_value());
    REQUIRE(st.a_linear.has_value());
    CHECK(std::abs(*st.a_nonlinear + 0.564883467419) <= 1e-9);
    CHECK(std::abs(*st.a_linear + 0.652657938565) <= 1e-9);
    CHECK(st.all_found);
    CHECK(st.monotone);
    CHECK(st.slope >= 0.8);
    CHECK(st.rows.back().err_nonlinear < st.rows.back().gap_linear);

    // scalar protocol, attractive well
    for (int kappa : {-1, 1}) {
        const auto sc = klein_convergence_study(PotentialProfile::square(-1.0, 1.0), channel(kappa), eps,
                                                CouplingKind::scalar);
        CHECK(sc.lambda_nonlinear == doctest::Approx(-2 * std::tanh(0.5)).epsilon(1e-14));
        CHECK(sc.passed());
        CHECK(sc.slope >= 0.8);
        REQUIRE(sc.a_nonlinear.has_value());
        ShootingOracle so{kappa, 1.0, 1.0, cayley(sc.lambda_nonlinear, J_s)};
        CHECK(std::abs(so.root(*sc.a_nonlinear - 1e-3, *sc.a_nonlinear + 1e-3) - *sc.a_nonlinear) <= 1e-8);
    }

    CHECK_THROWS_AS(klein_convergence_study(PotentialProfile::square(4.0, 1.0), channel(-1), eps,
                                            CouplingKind::electrostatic),
                    Error);
    CHECK(loglog_slope({1, 2, 4}, {3, 12, 48}) == doctest::Approx(2.0));
}
