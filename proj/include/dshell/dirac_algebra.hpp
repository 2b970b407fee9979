#pragma once

#include <Eigen/Dense>
#include <complex>

namespace dshell {

using cplx = std::complex<double>;
using Matrix4c = Eigen::Matrix<cplx, 4, 4>;
using Matrix2c = Eigen::Matrix<cplx, 2, 2>;
using Spinor = Eigen::Matrix<cplx, 4, 1>;
using Vec3 = Eigen::Vector3d;

inline constexpr cplx I_unit{0.0, 1.0};

namespace dirac {

const Matrix2c& pauli(int j);  // j = 1,2,3
const Matrix4c& alpha(int j);  // j = 1,2,3
const Matrix4c& beta();
Matrix4c identity();

// alpha . v for a real 3-vector
Matrix4c alpha_dot(const Vec3& v);

}  // namespace dirac

// Energy a and mass m for the resolvent (H - a)^{-1}. Valid for a off the
// real axis or a in (-m, m); stores sqrt(m^2 - a^2) on the branch Re > 0.
class SpectralParameter {
public:
    SpectralParameter(cplx a, double m);

    cplx energy() const { return a_; }
    double mass() const { return m_; }
    cplx decay_rate() const { return kappa_; }
    SpectralParameter conjugate() const { return {std::conj(a_), m_}; }

private:
    cplx a_;
    double m_;
    cplx kappa_;
};

// Principal root flipped to Re > 0; throws on Re == 0 unless z == 0.
cplx decay_branch(cplx z);

// Fundamental solution of H - a, H = -i alpha.grad + m beta.
Matrix4c phi_a(const SpectralParameter& sp, const Vec3& x);

// phi_a(x) * g without forming the matrix. No singular-point check.
Spinor phi_apply(const SpectralParameter& sp, const Vec3& x, const Spinor& g);

struct KernelSplit {
    SpectralParameter sp;

    Matrix4c omega1(const Vec3& x) const;  // exp-weighted, O(1/r)
    Matrix4c omega2(const Vec3& x) const;  // (e^{-kr}-1)/(4pi) i alpha.x/r^3
    Matrix4c omega3(const Vec3& x) const;  // (i/4pi) alpha.x/r^3, a-independent
    Matrix4c sum(const Vec3& x) const { return omega1(x) + omega2(x) + omega3(x); }
};

KernelSplit kernel_split(const SpectralParameter& sp);

// x / (4 pi |x|^3)
Vec3 riesz_kernel(const Vec3& x);

}  // namespace dshell
