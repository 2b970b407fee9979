#pragma once

#include <Eigen/Dense>
#include <vector>

namespace dshell {

struct Rule {
    std::vector<double> x;
    std::vector<double> w;
    std::size_t size() const { return x.size(); }
};

// Gauss-Legendre on [-1,1]; n >= 1
Rule gauss_legendre(int n);
Rule gauss_legendre(int n, double a, double b);

// P_n(x) and P_n'(x)
std::pair<double, double> legendre(int n, double x);

// Composite Gauss-Legendre on [a,b] with equal panels.
struct PanelRule {
    std::vector<double> x, w;
    std::vector<int> panel;       // panel index of each node
    std::vector<double> breaks;   // panel endpoints, size panels+1
    int per_panel = 0;
    int panels() const { return static_cast<int>(breaks.size()) - 1; }
    std::size_t size() const { return x.size(); }
};

PanelRule composite_gauss(int panels, int per_panel, double a = -1.0, double b = 1.0);

// Dyadic split of (-1,1) for n nodes: panels are doubled while they divide n
// and keep more than 16 nodes each. 128 -> 8 panels of 16.
PanelRule dyadic_panel_rule(int n);

// C(i,j) = integral from a to x_i of the piecewise Lagrange basis function of
// node j. Exact for piecewise polynomials of degree < per_panel.
Eigen::MatrixXd cumulative_matrix(const PanelRule& rule);

}  // namespace dshell
