#include "dshell/quadrature.hpp"

#include "dshell/errors.hpp"

#include <cmath>
#include <numbers>

namespace dshell {

std::pair<double, double> legendre(int n, double x)
{
    if (n == 0) return {1.0, 0.0};
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    // derivative from the standard identity; fine away from |x| = 1
    double dp;
    if (std::abs(std::abs(x) - 1.0) < 1e-14)
        dp = 0.5 * n * (n + 1.0) * (x > 0 ? 1.0 : ((n % 2) ? 1.0 : -1.0));
    else
        dp = n * (x * p1 - p0) / (x * x - 1.0);
    return {p1, dp};
}

Rule gauss_legendre(int n)
{
    require(n >= 1, "gauss_legendre: n must be positive");
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = legendre(n, x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const auto [p, dp] = legendre(n, x);
        (void)p;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        r.w[i] = w;
        r.w[n - 1 - i] = w;
    }
    if (n % 2) r.x[n / 2] = 0.0;
    return r;
}

Rule gauss_legendre(int n, double a, double b)
{
    Rule r = gauss_legendre(n);
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (std::size_t i = 0; i < r.size(); ++i) {
        r.x[i] = c + h * r.x[i];
        r.w[i] *= h;
    }
    return r;
}

PanelRule composite_gauss(int panels, int per_panel, double a, double b)
{
    require(panels >= 1 && per_panel >= 1, "composite_gauss: bad sizes");
    const Rule ref = gauss_legendre(per_panel);
    PanelRule r;
    r.per_panel = per_panel;
    r.breaks.resize(panels + 1);
    for (int p = 0; p <= panels; ++p) r.breaks[p] = a + (b - a) * p / panels;
    for (int p = 0; p < panels; ++p) {
        const double c = 0.5 * (r.breaks[p] + r.breaks[p + 1]);
        const double h = 0.5 * (r.breaks[p + 1] - r.breaks[p]);
        for (int i = 0; i < per_panel; ++i) {
            r.x.push_back(c + h * ref.x[i]);
            r.w.push_back(h * ref.w[i]);
            r.panel.push_back(p);
        }
    }
    return r;
}

PanelRule dyadic_panel_rule(int n)
{
    require(n >= 1, "dyadic_panel_rule: n must be positive");
    int panels = 1;
    while (n % (2 * panels) == 0 && n / panels > 16) panels *= 2;
    return composite_gauss(panels, n / panels);
}

Eigen::MatrixXd cumulative_matrix(const PanelRule& rule)
{
    const int q = rule.per_panel;
    const Rule ref = gauss_legendre(q);

    // S(i,j) = int_{-1}^{x_i} l_j on the reference panel, through the
    // Legendre expansion l_j = sum_k (2k+1)/2 w_j P_k(x_j) P_k.
    Eigen::MatrixXd P(q + 1, q), Pj(q, q);
    for (int i = 0; i < q; ++i)
        for (int k = 0; k <= q; ++k) P(k, i) = legendre(k, ref.x[i]).first;
    Eigen::MatrixXd S(q, q);
    for (int i = 0; i < q; ++i) {
        for (int j = 0; j < q; ++j) {
            double s = 0.5 * (ref.x[i] + 1.0);
            for (int k = 1; k < q; ++k) s += 0.5 * P(k, j) * (P(k + 1, i) - P(k - 1, i));
            S(i, j) = ref.w[j] * s;
        }
    }

    const std::size_t n = rule.size();
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const int pi = rule.panel[i];
        const double h = 0.5 * (rule.breaks[pi + 1] - rule.breaks[pi]);
        for (std::size_t j = 0; j < n; ++j) {
            const int pj = rule.panel[j];
            if (pj < pi)
                C(i, j) = rule.w[j];
            else if (pj == pi)
                C(i, j) = h * S(i % q, j % q);
        }
    }
    return C;
}

}  // namespace dshell
