#pragma once

#include "dshell/coupling.hpp"
#include "dshell/dirac_algebra.hpp"
#include "dshell/geometry.hpp"
#include "dshell/potential.hpp"
#include "dshell/quadrature.hpp"

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace dshell {

// Spinor fields are stored as stacked 4-vectors: block b occupies [4b, 4b+4).
using Field = Eigen::VectorXcd;

inline Spinor block_of(const Field& f, std::size_t b) { return f.segment<4>(4 * b); }

// Integral of phi over the sphere |z| = Rs against a constant density, at the
// point rho * dir (|dir| = 1). At rho == Rs this is the principal value.
Matrix4c sphere_constant_potential(const SpectralParameter& sp, double Rs, double rho, const Vec3& dir);

// How the singular self-interaction on the surface is discretized.
//  punctured: drop the coincident node (first order)
//  sphere_subtraction: subtract the density value at the nearest node and add
//    back the exact constant-density integral (sphere only, first order)
//  sphere_affine: also subtract a stencil-gradient linear part, whose exact
//    integral is known too (sphere only, the default there)
enum class PVRule { punctured, sphere_subtraction, sphere_affine };

PVRule default_pv_rule(const SurfaceMesh& mesh);

// Quadrature points and weights in R^3.
struct AmbientRule {
    std::vector<Vec3> x;
    std::vector<double> w;
    std::size_t size() const { return x.size(); }
};

// Gauss in r on [0, radius], Gauss in cos(theta), uniform phi
AmbientRule ball_rule(const Vec3& center, double radius, int n_r, int n_theta, int n_phi);
// spherical shell r0 < |x| < r1 about the origin
AmbientRule shell_rule(double r0, double r1, int n_r, int n_theta, int n_phi);

struct VolumeRule {
    int radial = 32;
    int polar = 16;
    int azimuthal = 32;
};

// Compactly supported ambient spinor density.
struct AmbientDensity {
    Vec3 center = Vec3::Zero();
    double radius = 1.0;
    std::function<Spinor(const Vec3&)> f;

    Spinor operator()(const Vec3& y) const;
    // amplitude * exp(1 - 1/(1 - |y-c|^2/r^2)) inside the ball
    static AmbientDensity smooth_bump(const Vec3& center, double radius, const Spinor& amplitude);
};

// (H - a)^{-1} G at x by quadrature: a ball rule when x is well outside the
// support, otherwise spherical coordinates centred at x (which absorb 1/r^2).
Spinor volume_potential(const SpectralParameter& sp, const AmbientDensity& G, const Vec3& x,
                        const VolumeRule& rule = {});

// distance from x to the surface
double surface_distance(const Surface& s, const Vec3& x);

// Phi(G, g)(x) for x off the surface; G may be null.
Spinor layer_potential(const SpectralParameter& sp, const SurfaceMesh& mesh, const AmbientDensity* G,
                       const Field& g, const Vec3& x, const VolumeRule& rule = {});

enum class OperatorLabel { A_eps, B_eps, C_eps, A_0, B_0, B_prime, B_0_plus_B_prime, C_0, C_sigma };

const char* to_string(OperatorLabel label);

// Block operator between weighted spaces of stacked spinors. Weights define
// the discrete L^2 inner products on both sides.
class ShellOperator {
public:
    using BlockFn = std::function<Matrix4c(std::size_t, std::size_t)>;
    using ApplyFn = std::function<Field(const Field&)>;

    static constexpr std::size_t dense_cap = 16384;

    ShellOperator(OperatorLabel label, SpectralParameter sp, std::vector<double> row_weights,
                  std::vector<double> col_weights, BlockFn block, ApplyFn apply = {});

    OperatorLabel label() const { return label_; }
    const SpectralParameter& spectral_parameter() const { return sp_; }
    std::size_t row_blocks() const { return row_w_.size(); }
    std::size_t col_blocks() const { return col_w_.size(); }
    const std::vector<double>& row_weights() const { return row_w_; }
    const std::vector<double>& col_weights() const { return col_w_; }

    Matrix4c block(std::size_t r, std::size_t c) const { return block_(r, c); }
    Field apply(const Field& x) const;
    // adjoint for the weighted inner products: W_c^{-1} B^* W_r
    Field apply_adjoint(const Field& y) const;
    // 4 rows x 4 cols; throws DenseCapExceeded beyond 16384 unknowns per side
    Eigen::MatrixXcd dense() const;
    const Eigen::MatrixXcd& dense_ref() const;  // cached, no copy
    // weighted operator norm (largest singular value), Lanczos on B^dagger B
    double norm(int max_iter = 200, double tol = 1e-12) const;

    double row_norm(const Field& y) const;
    double col_norm(const Field& x) const;

private:
    OperatorLabel label_;
    SpectralParameter sp_;
    std::vector<double> row_w_, col_w_;
    BlockFn block_;
    ApplyFn apply_;
    mutable std::shared_ptr<Eigen::MatrixXcd> dense_cache_;
};

ShellOperator cauchy_sigma(const SpectralParameter& sp, std::shared_ptr<const SurfaceMesh> mesh);
ShellOperator cauchy_sigma(const SpectralParameter& sp, std::shared_ptr<const SurfaceMesh> mesh, PVRule rule);

struct PlemeljReport {
    std::vector<double> offsets;
    double rel_error_interior = 0.0;  // vs -(i/2)(alpha.nu) g + C_sigma g
    double rel_error_exterior = 0.0;  // vs +(i/2)(alpha.nu) g + C_sigma g
    double rel_error_jump = 0.0;      // C+ - C- vs -i (alpha.nu) g
    double rel_error_sum = 0.0;       // C+ + C- vs 2 C_sigma g
    double max_rel_error() const { return std::max(rel_error_interior, rel_error_exterior); }
};

// default offsets {1, 1.1, 1.2, 1.3} * mesh resolution (cubic extrapolation)
std::vector<double> default_plemelj_offsets(const SurfaceMesh& mesh);

PlemeljReport plemelj_check(const SpectralParameter& sp, std::shared_ptr<const SurfaceMesh> mesh, const Field& g,
                            std::vector<double> offsets = {});

// Tensor grid on Sigma x (-1, 1): block (k, i) = k * M + i.
struct OperatorGrid {
    std::shared_ptr<const SurfaceMesh> mesh;
    Rule t;  // Gauss-Legendre on (-1, 1)
    std::shared_ptr<const UVFactorization> uv;
    std::vector<double> u, v;
    double eta = 0.0;
    PVRule pv = PVRule::sphere_affine;

    std::size_t N() const { return mesh->size(); }
    std::size_t M() const { return t.size(); }
    std::size_t blocks() const { return N() * M(); }
    std::size_t index(std::size_t k, std::size_t i) const { return k * M() + i; }
    std::vector<double> weights() const;
    double total_weight() const;
};

OperatorGrid make_operator_grid(std::shared_ptr<const SurfaceMesh> mesh, int M, const UVFactorization& uv,
                                double eta);

// Far-field targets for A and ambient sources for C.
struct FamilyOptions {
    AmbientRule a_targets;  // points where A g is sampled (outside Omega_eta)
    AmbientRule c_sources;  // quadrature rule for the ambient density fed to C
};

FamilyOptions default_family_options(const OperatorGrid& grid);

struct OperatorFamily {
    ShellOperator A, B, C;
};

OperatorFamily assemble_family(const OperatorGrid& grid, const SpectralParameter& sp, double epsilon,
                               const FamilyOptions& opt);

struct OperatorLimits {
    ShellOperator A0, B0, B_prime, B0_plus_B_prime, C0;
};

OperatorLimits assemble_limits(const OperatorGrid& grid, const SpectralParameter& sp, const FamilyOptions& opt);

// direct kernel assembly of B at epsilon = 0 (no separable reduction), for cross-checks
ShellOperator assemble_b0_direct(const OperatorGrid& grid, const SpectralParameter& sp);
// B' assembled as (alpha.nu) (x) K_sampled, the Kronecker form
Eigen::MatrixXcd b_prime_kronecker(const OperatorGrid& grid);

struct ConvergenceRow {
    double epsilon = 0.0;
    double norm_B = 0.0, norm_A = 0.0, norm_C = 0.0;
    bool floor_flag = false;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double floor_B = 0.0, floor_A = 0.0, floor_C = 0.0;
    double min_ratio_B = 0.0, min_ratio_A = 0.0, min_ratio_C = 0.0;  // over consecutive unfloored rows
    double slope_A = 0.0;
    bool decays(double factor) const;
};

ConvergenceTable strong_convergence_experiment(const OperatorGrid& grid, const SpectralParameter& sp, const Field& g,
                                               const AmbientDensity& G, const std::vector<double>& eps,
                                               const FamilyOptions& opt);

// (H + lambda delta - a)^{-1} F (electrostatic) or (H + lambda beta delta - a)^{-1} F (scalar)
class ShellResolvent {
public:
    ShellResolvent(const SpectralParameter& sp, std::shared_ptr<const SurfaceMesh> mesh, double lambda,
                   CouplingKind kind, AmbientDensity F, VolumeRule rule = {});

    Spinor operator()(const Vec3& x) const;
    const Field& boundary_density() const { return h_; }
    double condition_estimate() const { return cond_; }

private:
    SpectralParameter sp_;
    std::shared_ptr<const SurfaceMesh> mesh_;
    double lambda_;
    AmbientDensity F_;
    VolumeRule rule_;
    Field h_;
    double cond_ = 1.0;
};

std::vector<Spinor> shell_resolvent_apply(const SpectralParameter& sp, std::shared_ptr<const SurfaceMesh> mesh,
                                          double lambda, CouplingKind kind, const AmbientDensity& F,
                                          const std::vector<Vec3>& points, const VolumeRule& rule = {});

}  // namespace dshell
