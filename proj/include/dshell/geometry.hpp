#pragma once

#include "dshell/dirac_algebra.hpp"

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace dshell {

enum class SurfaceKind { sphere, ellipsoid };

// Closed surface x^2/a^2 + y^2/b^2 + z^2/c^2 = 1 centred at the origin.
class Surface {
public:
    static Surface sphere(double R);
    static Surface ellipsoid(double a, double b, double c);

    SurfaceKind kind() const { return kind_; }
    bool is_sphere() const { return kind_ == SurfaceKind::sphere; }
    double radius() const;  // sphere only
    const Vec3& axes() const { return axes_; }

    // (theta, phi) -> (a sin cos, b sin sin, c cos)
    Vec3 chart(double theta, double phi) const;
    double implicit(const Vec3& x) const;
    bool on_surface(const Vec3& x, double tol = 1e-9) const;
    Vec3 normal(const Vec3& x) const;   // outward unit normal
    Vec3 project(const Vec3& x) const;  // closest point on the surface
    double area() const;
    double max_abs_curvature() const;
    // 0.25 / max |principal curvature|
    double default_eta() const { return 0.25 / max_abs_curvature(); }

private:
    SurfaceKind kind_ = SurfaceKind::sphere;
    Vec3 axes_{1.0, 1.0, 1.0};
};

// W = -d nu on an orthonormal tangent basis at x. Sphere: -1/R twice.
struct WeingartenMap {
    Eigen::Matrix2d matrix;
    std::array<Vec3, 2> basis;
    std::array<double, 2> eigenvalues;  // ascending

    double det_factor(double t) const { return (1.0 - t * eigenvalues[0]) * (1.0 - t * eigenvalues[1]); }
};

WeingartenMap weingarten(const Surface& s, const Vec3& x);

struct SurfaceNode {
    Vec3 x;
    Vec3 nu;
    double weight = 0.0;
    std::array<double, 2> curvature{0.0, 0.0};  // Weingarten eigenvalues

    double det_factor(double t) const { return (1.0 - t * curvature[0]) * (1.0 - t * curvature[1]); }
};

class SurfaceMesh {
public:
    // Gauss-Legendre in cos(theta) times uniform phi.
    static SurfaceMesh product(const Surface& s, int n_theta, int n_phi);
    // product grid with n_theta * n_phi = N and n_phi / n_theta closest to 2
    static SurfaceMesh with_nodes(const Surface& s, int N);
    // geodesic refinement of the icosahedron (sphere only); 10*4^level + 2 nodes
    static SurfaceMesh icosahedral(const Surface& s, int level);

    const Surface& surface() const { return surface_; }
    const std::vector<SurfaceNode>& nodes() const { return nodes_; }
    const SurfaceNode& node(std::size_t k) const { return nodes_[k]; }
    std::size_t size() const { return nodes_.size(); }
    double total_weight() const;
    // typical node spacing sqrt(area / N)
    double resolution() const;
    const std::string& description() const { return description_; }

    // node, x, y, z, nu_x, nu_y, nu_z, weight, lambda1, lambda2
    void write_csv(std::ostream& os) const;

private:
    Surface surface_;
    std::vector<SurfaceNode> nodes_;
    std::string description_;
};

std::pair<int, int> product_factorization(int N);

class TubularMap {
public:
    TubularMap(std::shared_ptr<const SurfaceMesh> mesh, double eta);

    const SurfaceMesh& mesh() const { return *mesh_; }
    std::shared_ptr<const SurfaceMesh> mesh_ptr() const { return mesh_; }
    double eta() const { return eta_; }

    // i(x_k, t) = x_k + t nu_k
    Vec3 map(std::size_t k, double t) const;
    // min pairwise distance of the images at every t, and min det(1 - tW)
    struct Injectivity {
        double min_distance = 0.0;
        double min_det = 0.0;
        bool injective = false;
    };
    Injectivity check_injective(const std::vector<double>& ts) const;
    // max |P(i(x_k, t)) - x_k| over nodes
    double projection_error(double t) const;

private:
    std::shared_ptr<const SurfaceMesh> mesh_;
    double eta_;
};

// Volume integral of f over Omega_eps via det(1 - tW) dsigma dt.
double coarea_integrate(const TubularMap& tm, const std::function<double(const Vec3&)>& f, double eps, int t_nodes);

struct GrowthRow {
    double radius = 0.0;
    bool computed = false;
    double min_ratio = 0.0, max_ratio = 0.0;  // sigma_t(B_r(x)) / r^2 over centres
    double exact_ratio = 0.0;                 // sphere only, NaN otherwise
};

struct GrowthReport {
    double t = 0.0;
    double resolution = 0.0;
    int centers = 0;
    std::vector<GrowthRow> rows;
};

GrowthReport measure_growth_audit(const TubularMap& tm, double t, const std::vector<double>& radii, int centers = 32);

}  // namespace dshell
