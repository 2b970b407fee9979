#include "dshell/coupling.hpp"

#include "dshell/errors.hpp"
#include "dshell/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace dshell {

const char* to_string(CouplingKind kind)
{
    return kind == CouplingKind::electrostatic ? "electrostatic" : "scalar";
}

const char* to_string(CouplingMethod method)
{
    switch (method) {
    case CouplingMethod::direct_solve: return "direct_solve";
    case CouplingMethod::neumann: return "neumann";
    case CouplingMethod::closed_form: return "closed_form";
    }
    return "unknown";
}

Eigen::MatrixXcd sampled_sign_matrix(const std::vector<double>& t, const std::vector<double>& s,
                                     const std::vector<double>& w, const std::vector<double>& u,
                                     const std::vector<double>& v)
{
    Eigen::MatrixXcd K(t.size(), s.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            K(i, j) = cplx(0.0, 0.5 * u[i] * sign_of(t[i] - s[j]) * v[j] * w[j]);
    return K;
}

KVOperator build_kv(const UVFactorization& f, int n, KVScheme scheme)
{
    require(n >= 8, "build_kv: need at least 8 nodes");
    const PanelRule rule = dyadic_panel_rule(n);

    KVOperator k;
    k.scheme = scheme;
    k.nodes = rule.x;
    k.weights = rule.w;
    k.u.resize(n);
    k.v.resize(n);
    double uu = 0.0, vv = 0.0;
    for (int i = 0; i < n; ++i) {
        k.u[i] = f.u(rule.x[i]);
        k.v[i] = f.v(rule.x[i]);
        uu += rule.w[i] * k.u[i] * k.u[i];
        vv += rule.w[i] * k.v[i] * k.v[i];
    }
    k.u_norm = std::sqrt(uu);
    k.v_norm = std::sqrt(vv);
    // continuum norms on the kink-aware breaks; the node sums above stay discrete for the Neumann bound
    const auto br = f.breakpoints();
    const double uc = integrate_piecewise([&](double t) { return f.u(t) * f.u(t); }, -1.0, 1.0, br);
    const double vc = integrate_piecewise([&](double t) { return f.v(t) * f.v(t); }, -1.0, 1.0, br);
    k.hs_norm = 0.5 * std::sqrt(uc * vc);

    if (scheme == KVScheme::sampled) {
        k.matrix = sampled_sign_matrix(rule.x, rule.x, rule.w, k.u, k.v);
    } else {
        // int sign(t_i - s) l_j(s) ds = 2 C_ij - w_j
        const Eigen::MatrixXd C = cumulative_matrix(rule);
        k.matrix.resize(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                k.matrix(i, j) = cplx(0.0, 0.5 * k.u[i] * (2.0 * C(i, j) - rule.w[j]) * k.v[j]);
    }

    double fro = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) fro += rule.w[i] * std::norm(k.matrix(i, j)) / rule.w[j];
    k.discrete_hs = std::sqrt(fro);
    return k;
}

namespace {

Eigen::VectorXcd as_complex(const std::vector<double>& x)
{
    Eigen::VectorXcd out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i];
    return out;
}

cplx weighted_dot(const KVOperator& k, const Eigen::VectorXcd& x)
{
    cplx s = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) s += k.weights[i] * k.v[i] * x[i];
    return s;
}

void check_real(CouplingResult& r, cplx value)
{
    r.value = value.real();
    r.imaginary_residue = std::abs(value.imag());
    if (r.imaginary_residue > 1e-10 * std::max(1.0, std::abs(r.value)))
        throw Error(ErrorCode::numerical_failure, "coupling constant has a non-negligible imaginary part");
}

CouplingResult direct(const KVOperator& k, CouplingKind kind)
{
    const Eigen::Index n = static_cast<Eigen::Index>(k.size());
    const double s = kind == CouplingKind::electrostatic ? -1.0 : 1.0;
    const Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(n, n) + s * k.matrix * k.matrix;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    CouplingResult r;
    r.kind = kind;
    r.method = CouplingMethod::direct_solve;
    const double rc = lu.rcond();
    r.condition_estimate = rc > 0 ? 1.0 / rc : INFINITY;
    if (std::max(k.hs_norm, k.discrete_hs) >= 1.0 && r.condition_estimate > 1e12)
        throw Error(ErrorCode::non_contractive, "K_V is not contractive and 1 -/+ K^2 is ill-conditioned");
    check_real(r, weighted_dot(k, lu.solve(as_complex(k.u))));
    return r;
}

}  // namespace

CouplingResult lambda_electrostatic(const KVOperator& k) { return direct(k, CouplingKind::electrostatic); }

CouplingResult lambda_scalar(const KVOperator& k) { return direct(k, CouplingKind::scalar); }

CouplingResult lambda_neumann(const KVOperator& k, CouplingKind kind, int terms)
{
    require(terms >= 0, "lambda_neumann: terms must be non-negative");
    if (k.hs_norm >= 1.0)
        throw Error(ErrorCode::non_contractive, "Neumann series requires HS norm below 1");
    const double s = kind == CouplingKind::electrostatic ? 1.0 : -1.0;
    Eigen::VectorXcd x = as_complex(k.u);
    cplx sum = weighted_dot(k, x);
    double sn = 1.0;
    for (int n = 1; n <= terms; ++n) {
        x = k.matrix * (k.matrix * x);
        sn *= s;
        sum += sn * weighted_dot(k, x);
    }
    CouplingResult r;
    r.kind = kind;
    r.method = CouplingMethod::neumann;
    r.terms = terms;
    const double c = std::max(k.hs_norm, k.discrete_hs);
    r.error_bound = c < 1.0 ? std::pow(c, 2.0 * (terms + 1)) / (1.0 - c * c) * k.u_norm * k.v_norm : INFINITY;
    check_real(r, sum);
    return r;
}

std::optional<CouplingResult> lambda_closed_form(const PotentialProfile& p, CouplingKind kind)
{
    if (p.kind() != ProfileKind::square) return std::nullopt;
    const double te = *p.tau() * p.eta();
    CouplingResult r;
    r.kind = kind;
    r.method = CouplingMethod::closed_form;
    if (kind == CouplingKind::electrostatic) {
        require(std::abs(te) < std::numbers::pi, "closed form needs |tau eta| < pi");
        r.value = 2.0 * std::tan(0.5 * te);
    } else {
        r.value = 2.0 * std::tanh(0.5 * te);
    }
    return r;
}

CouplingConstants coupling_constants(const KVOperator& k, CouplingMethod method, int neumann_terms)
{
    CouplingConstants c;
    c.method = method;
    switch (method) {
    case CouplingMethod::direct_solve:
        c.electrostatic = lambda_electrostatic(k);
        c.scalar = lambda_scalar(k);
        break;
    case CouplingMethod::neumann:
        c.electrostatic = lambda_neumann(k, CouplingKind::electrostatic, neumann_terms);
        c.scalar = lambda_neumann(k, CouplingKind::scalar, neumann_terms);
        break;
    case CouplingMethod::closed_form:
        throw Error(ErrorCode::invalid_argument, "closed form needs the profile; use lambda_closed_form");
    }
    c.lambda_e = c.electrostatic.value;
    c.lambda_s = c.scalar.value;
    return c;
}

cplx odd_coupling_residue(const KVOperator& k)
{
    const Eigen::Index n = static_cast<Eigen::Index>(k.size());
    const Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(n, n) - k.matrix * k.matrix;
    const Eigen::VectorXcd Ku = k.matrix * as_complex(k.u);
    return weighted_dot(k, A.partialPivLu().solve(Ku));
}

}  // namespace dshell
