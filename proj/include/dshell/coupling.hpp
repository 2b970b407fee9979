#pragma once

#include "dshell/dirac_algebra.hpp"
#include "dshell/potential.hpp"

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace dshell {

// How the sign(t - s) kernel is discretized.
//  product_integration: the kernel is integrated exactly against the
//    panel-wise Lagrange basis (spectrally accurate, default).
//  sampled: plain Nystrom, entries (i/2) u_i sign(t_i - t_j) v_j w_j.
enum class KVScheme { product_integration, sampled };

struct KVOperator {
    KVScheme scheme = KVScheme::product_integration;
    std::vector<double> nodes, weights, u, v;
    Eigen::MatrixXcd matrix;
    double hs_norm = 0.0;        // (1/2) |u|_2 |v|_2, continuum
    double discrete_hs = 0.0;    // weighted Frobenius norm of the matrix
    double u_norm = 0.0, v_norm = 0.0;  // node-sum norms

    std::size_t size() const { return nodes.size(); }
};

KVOperator build_kv(const UVFactorization& f, int n, KVScheme scheme = KVScheme::product_integration);

// (i/2) u_i sign(t_i - s_j) v_j w_j on arbitrary rules
Eigen::MatrixXcd sampled_sign_matrix(const std::vector<double>& t, const std::vector<double>& s,
                                     const std::vector<double>& w, const std::vector<double>& u,
                                     const std::vector<double>& v);

enum class CouplingKind { electrostatic, scalar };
enum class CouplingMethod { direct_solve, neumann, closed_form };

const char* to_string(CouplingKind kind);
const char* to_string(CouplingMethod method);

struct CouplingResult {
    CouplingKind kind = CouplingKind::electrostatic;
    CouplingMethod method = CouplingMethod::direct_solve;
    double value = 0.0;
    double imaginary_residue = 0.0;
    double condition_estimate = 1.0;
    double error_bound = 0.0;  // Neumann truncation bound
    int terms = 0;
};

struct CouplingConstants {
    double lambda_e = 0.0;
    double lambda_s = 0.0;
    CouplingMethod method = CouplingMethod::direct_solve;
    CouplingResult electrostatic, scalar;
};

// int v (1 - K^2)^{-1} u
CouplingResult lambda_electrostatic(const KVOperator& k);
// int v (1 + K^2)^{-1} u
CouplingResult lambda_scalar(const KVOperator& k);
// sum_{n <= terms} s^n int v K^{2n} u with s = +1 (electrostatic) or -1 (scalar)
CouplingResult lambda_neumann(const KVOperator& k, CouplingKind kind, int terms);
// 2 tan(tau eta / 2), 2 tanh(tau eta / 2); square wells only
std::optional<CouplingResult> lambda_closed_form(const PotentialProfile& p, CouplingKind kind);

CouplingConstants coupling_constants(const KVOperator& k, CouplingMethod method = CouplingMethod::direct_solve,
                                     int neumann_terms = 20);

// int v (1 - K^2)^{-1} K u, zero in exact arithmetic
std::complex<double> odd_coupling_residue(const KVOperator& k);

}  // namespace dshell
