#pragma once

#include "dshell/coupling.hpp"
#include "dshell/potential.hpp"

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace dshell {

// Radial channel of the Dirac operator on a sphere of radius R. Spinors
// are psi = (f(r)/r Omega_{kappa}, i g(r)/r Omega_{-kappa}); kappa = -1 is
// the channel whose upper component is an s-wave.
//   f' = -kappa f / r + (a - V + m + S) g
//   g' =  kappa g / r - (a - V - m - S) f
struct ChannelSystem {
    int kappa = -1;
    double mass = 1.0;
    double radius = 1.0;
    double energy = 0.0;  // trial energy in (-m, m)
};

using Matrix2d = Eigen::Matrix2d;
using Vector2d = Eigen::Vector2d;

// Coefficient matrix of the radial system at r with electrostatic V and scalar S.
Matrix2d radial_generator(const ChannelSystem& ch, double r, double V = 0.0, double S = 0.0);

// exp of a real 2x2 matrix
Matrix2d expm2(const Matrix2d& A);

// Channel image of the coupling: J^2 = -I (electrostatic) or +I (scalar).
Matrix2d coupling_generator(CouplingKind kind);

// (f,g)(R+) = matrix (f,g)(R-)
struct TransmissionMatrix {
    Matrix2d matrix = Matrix2d::Identity();
    CouplingKind kind = CouplingKind::electrostatic;
    double lambda = 0.0;
};

// Cayley transform (I - (lambda/2) J)^{-1} (I + (lambda/2) J); throws
// CriticalCoupling at |lambda| = 2.
TransmissionMatrix shell_matching(double lambda, CouplingKind kind);

Matrix2d rotation(double theta);

// Transfer of the radial system across [R - eps, R + eps] carrying V_eps(r - R)
// as an electrostatic or scalar term; fourth-order Magnus on sub_panels panels.
Matrix2d transfer_through_squeezed(const ChannelSystem& ch, const SqueezedFamily& family, CouplingKind kind,
                                   int sub_panels = 64);

// Fourth-order Magnus propagator of the free system (V = S = 0) over [r0, r1].
Matrix2d free_transfer(const ChannelSystem& ch, double r0, double r1, int panels);

enum class ChannelBasis { closed_form, integrated };

struct SolverOptions {
    ChannelBasis basis = ChannelBasis::closed_form;
    int sub_panels = 64;         // squeezed transfer
    int interior_panels = 200;   // integrated basis, [r0, R]
    double r_max_factor = 30.0;  // r_max = R + factor / k
    double exterior_step = 0.05; // integrated basis, max panel length outside
    double series_radius = 0.05; // power-series seed radius, fraction of R
    double tol = 1e-10;
};

// Solution regular at 0 and solution decaying at infinity, evaluated at r.
Vector2d regular_solution(const ChannelSystem& ch, double r, const SolverOptions& opt = {});
Vector2d decaying_solution(const ChannelSystem& ch, double r, const SolverOptions& opt = {});

struct SqueezedCoupling {
    SqueezedFamily family;
    CouplingKind kind = CouplingKind::electrostatic;
};

using ShellCoupling = std::variant<TransmissionMatrix, SqueezedCoupling>;

struct ScanWindow {
    double a_min = 0.0, a_max = 0.0;
    int steps = 2000;
};

// Default window (-m, m) pulled in by 1e-8 m.
ScanWindow gap_window(double mass, int steps = 2000);

// Normalized matching determinant; zero exactly at eigenvalues.
double matching_determinant(const ChannelSystem& ch, const ShellCoupling& c, double a, const SolverOptions& opt = {});

struct SpectralResult {
    int kappa = 0;
    std::vector<double> eigenvalues;
    std::vector<double> residuals;
    std::vector<std::pair<double, double>> brackets;
};

SpectralResult find_gap_eigenvalues(const ChannelSystem& ch, const ShellCoupling& c, const ScanWindow& scan,
                                    const SolverOptions& opt = {});

struct KleinRow {
    double epsilon = 0.0;
    std::optional<double> a_eps;
    double err_nonlinear = 0.0;  // |a_eps - a*(lambda)|, NaN if undefined
    double gap_linear = 0.0;     // |a_eps - a*(tau eta)|, NaN if undefined
};

struct KleinStudy {
    CouplingKind kind = CouplingKind::electrostatic;
    ChannelSystem channel;
    double tau_eta = 0.0;
    double lambda_nonlinear = 0.0;  // 2tan(tau eta/2) or 2tanh(tau eta/2)
    double lambda_linear = 0.0;     // tau eta
    std::optional<double> a_nonlinear, a_linear;
    std::vector<KleinRow> rows;
    bool all_found = false;
    bool monotone = false;       // err_nonlinear strictly decreasing
    bool bounded_away = false;   // final gap_linear > final err_nonlinear (vacuous if |lambda - tau eta| <= 0.05)
    double slope = 0.0;          // log-log fit of err_nonlinear vs eps
    bool passed() const { return all_found && monotone && bounded_away; }
};

KleinStudy klein_convergence_study(const PotentialProfile& square_well, const ChannelSystem& ch,
                                   const std::vector<double>& eps, CouplingKind kind, const SolverOptions& opt = {},
                                   int scan_steps = 2000);

// least-squares slope of log y against log x
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace dshell
