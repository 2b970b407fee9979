#include "dshell/dirac_algebra.hpp"

#include "dshell/errors.hpp"

#include <cmath>
#include <numbers>

namespace dshell {

namespace {

constexpr double four_pi = 4.0 * std::numbers::pi;
constexpr double min_radius = 1e-12;

double checked_norm(const Vec3& x, const char* who)
{
    const double r = x.norm();
    if (!(r >= min_radius))
        throw Error(ErrorCode::singular_point, std::string(who) + ": |x| below 1e-12");
    return r;
}

Matrix4c block_form(const Matrix2c& a, const Matrix2c& b, const Matrix2c& c, const Matrix2c& d)
{
    Matrix4c m;
    m << a, b, c, d;
    return m;
}

}  // namespace

namespace dirac {

const Matrix2c& pauli(int j)
{
    static const Matrix2c s[3] = {
        (Matrix2c() << 0, 1, 1, 0).finished(),
        (Matrix2c() << 0, -I_unit, I_unit, 0).finished(),
        (Matrix2c() << 1, 0, 0, -1).finished(),
    };
    if (j < 1 || j > 3) throw Error(ErrorCode::invalid_argument, "pauli index");
    return s[j - 1];
}

const Matrix4c& alpha(int j)
{
    static const Matrix4c a[3] = {
        block_form(Matrix2c::Zero(), pauli(1), pauli(1), Matrix2c::Zero()),
        block_form(Matrix2c::Zero(), pauli(2), pauli(2), Matrix2c::Zero()),
        block_form(Matrix2c::Zero(), pauli(3), pauli(3), Matrix2c::Zero()),
    };
    if (j < 1 || j > 3) throw Error(ErrorCode::invalid_argument, "alpha index");
    return a[j - 1];
}

const Matrix4c& beta()
{
    static const Matrix4c b =
        block_form(Matrix2c::Identity(), Matrix2c::Zero(), Matrix2c::Zero(), -Matrix2c::Identity());
    return b;
}

Matrix4c identity() { return Matrix4c::Identity(); }

Matrix4c alpha_dot(const Vec3& v)
{
    Matrix2c s;
    s << v[2], cplx(v[0], -v[1]), cplx(v[0], v[1]), -v[2];
    return block_form(Matrix2c::Zero(), s, s, Matrix2c::Zero());
}

}  // namespace dirac

cplx decay_branch(cplx z)
{
    cplx k = std::sqrt(z);
    if (k.real() < 0) k = -k;
    if (k.real() == 0.0 && k != cplx(0.0))
        throw Error(ErrorCode::invalid_argument, "sqrt(m^2-a^2) has zero real part");
    return k;
}

SpectralParameter::SpectralParameter(cplx a, double m) : a_(a), m_(m)
{
    require(std::isfinite(a.real()) && std::isfinite(a.imag()) && std::isfinite(m), "non-finite spectral parameter");
    require(m >= 0.0, "mass must be non-negative");
    const bool degenerate = (a == cplx(0.0) && m == 0.0);
    require(degenerate || a.imag() != 0.0 || std::abs(a.real()) < m,
            "energy must lie off the real axis or inside (-m, m)");
    kappa_ = decay_branch(m * m - a * a);
}

Matrix4c phi_a(const SpectralParameter& sp, const Vec3& x)
{
    const double r = checked_norm(x, "phi_a");
    const cplx k = sp.decay_rate();
    const cplx s = std::exp(-k * r) / (four_pi * r);
    Matrix4c out = (I_unit * s * (1.0 + k * r) / (r * r)) * dirac::alpha_dot(x);
    const cplx d1 = s * (sp.energy() + sp.mass()), d2 = s * (sp.energy() - sp.mass());
    out(0, 0) += d1;
    out(1, 1) += d1;
    out(2, 2) += d2;
    out(3, 3) += d2;
    return out;
}

Spinor phi_apply(const SpectralParameter& sp, const Vec3& x, const Spinor& g)
{
    const double r2 = x.squaredNorm();
    const double r = std::sqrt(r2);
    const cplx k = sp.decay_rate();
    const cplx s = std::exp(-k * r) / (four_pi * r);
    const cplx d1 = s * (sp.energy() + sp.mass()), d2 = s * (sp.energy() - sp.mass());
    const cplx c = I_unit * s * (1.0 + k * r) / r2;
    // sigma.x acting on upper / lower halves
    const cplx xm(x[0], -x[1]), xp(x[0], x[1]);
    Spinor out;
    out[0] = d1 * g[0] + c * (x[2] * g[2] + xm * g[3]);
    out[1] = d1 * g[1] + c * (xp * g[2] - x[2] * g[3]);
    out[2] = d2 * g[2] + c * (x[2] * g[0] + xm * g[1]);
    out[3] = d2 * g[3] + c * (xp * g[0] - x[2] * g[1]);
    return out;
}

Matrix4c KernelSplit::omega1(const Vec3& x) const
{
    const double r = checked_norm(x, "omega1");
    const cplx k = sp.decay_rate();
    const cplx s = std::exp(-k * r) / (four_pi * r);
    Matrix4c out = (I_unit * s * k / r) * dirac::alpha_dot(x);
    out += s * sp.energy() * Matrix4c::Identity() + s * sp.mass() * dirac::beta();
    return out;
}

Matrix4c KernelSplit::omega2(const Vec3& x) const
{
    const double r = checked_norm(x, "omega2");
    const cplx k = sp.decay_rate();
    const cplx c = (std::exp(-k * r) - 1.0) / (four_pi * r * r * r);
    return (I_unit * c) * dirac::alpha_dot(x);
}

Matrix4c KernelSplit::omega3(const Vec3& x) const
{
    const double r = checked_norm(x, "omega3");
    return (I_unit / (four_pi * r * r * r)) * dirac::alpha_dot(x);
}

KernelSplit kernel_split(const SpectralParameter& sp) { return KernelSplit{sp}; }

Vec3 riesz_kernel(const Vec3& x)
{
    const double r = checked_norm(x, "riesz_kernel");
    return x / (four_pi * r * r * r);
}

}  // namespace dshell
