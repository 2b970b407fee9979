#pragma once

#include <json.hpp>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dshell {

enum class ProfileKind { square, gaussian, piecewise_linear, table };

const char* to_string(ProfileKind kind);

// Real profile V supported in [-eta, eta].
class PotentialProfile {
public:
    // V = tau/2 on (-eta, eta), so that int V = tau * eta
    static PotentialProfile square(double tau, double eta);
    // amplitude * exp(-t^2 / (2 width^2)) truncated to [-eta, eta]
    static PotentialProfile truncated_gaussian(double amplitude, double width, double eta);
    // closed-form polygon through (ts, vs), zero outside [ts.front(), ts.back()]
    static PotentialProfile piecewise_linear(std::vector<double> ts, std::vector<double> vs, double eta);
    // tabulated samples, linear interpolation; repeated abscissae encode jumps
    static PotentialProfile table(std::vector<double> ts, std::vector<double> vs, double eta);

    static PotentialProfile from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    double operator()(double t) const;
    double eta() const { return eta_; }
    ProfileKind kind() const { return kind_; }
    std::optional<double> tau() const { return tau_; }

    // analytic sup |V| when known
    std::optional<double> declared_sup() const;
    // declared sup, else max over a uniform grid of grid_points on [-eta, eta]
    double sup_norm(int grid_points = 10000) const;
    // int |V| over [-eta, eta]
    double l1_norm() const;
    double integral() const;

    // points inside (-eta, eta) where V may be discontinuous or kinked
    std::vector<double> breakpoints() const;

private:
    PotentialProfile() = default;

    ProfileKind kind_ = ProfileKind::square;
    double eta_ = 0.0;
    std::optional<double> tau_;
    double amplitude_ = 0.0, width_ = 0.0;
    std::vector<double> ts_, vs_;
};

double sign_of(double x);

bool is_delta_eta_small(const PotentialProfile& p, double delta, int grid_points = 10000);

// u(t) = |eta V(eta t)|^{1/2}, v(t) = sign(V(eta t)) u(t), t in [-1, 1]
class UVFactorization {
public:
    explicit UVFactorization(PotentialProfile p) : profile_(std::move(p)) {}

    double u(double t) const;
    double v(double t) const;
    const PotentialProfile& profile() const { return profile_; }

    // breakpoints of u, v in (-1, 1)
    std::vector<double> breakpoints() const;

private:
    PotentialProfile profile_;
};

UVFactorization factorize(const PotentialProfile& p);

// V_eps(t) = (eta/eps) V(eta t / eps), supported in [-eps, eps]
class SqueezedFamily {
public:
    SqueezedFamily(PotentialProfile p, double epsilon);

    double operator()(double t) const;
    double epsilon() const { return epsilon_; }
    const PotentialProfile& profile() const { return profile_; }
    double integral() const;

private:
    PotentialProfile profile_;
    double epsilon_;
};

SqueezedFamily squeeze(const PotentialProfile& p, double epsilon);

// Integral of f over [a, b] by composite Gauss-Legendre with extra breaks.
double integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                           std::vector<double> breaks, int per_piece = 32, int pieces = 8);

}  // namespace dshell
