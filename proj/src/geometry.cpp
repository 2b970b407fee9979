#include "dshell/geometry.hpp"

#include "dshell/errors.hpp"
#include "dshell/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>

namespace dshell {

namespace {

constexpr double pi = std::numbers::pi;

}  // namespace

Surface Surface::sphere(double R)
{
    require(R > 0.0 && std::isfinite(R), "sphere radius must be positive");
    Surface s;
    s.kind_ = SurfaceKind::sphere;
    s.axes_ = Vec3(R, R, R);
    return s;
}

Surface Surface::ellipsoid(double a, double b, double c)
{
    require(a > 0.0 && b > 0.0 && c > 0.0, "ellipsoid axes must be positive");
    Surface s;
    s.kind_ = SurfaceKind::ellipsoid;
    s.axes_ = Vec3(a, b, c);
    return s;
}

double Surface::radius() const
{
    require(is_sphere(), "radius() is only defined for spheres");
    return axes_[0];
}

Vec3 Surface::chart(double theta, double phi) const
{
    return Vec3(axes_[0] * std::sin(theta) * std::cos(phi), axes_[1] * std::sin(theta) * std::sin(phi),
                axes_[2] * std::cos(theta));
}

double Surface::implicit(const Vec3& x) const { return x.cwiseQuotient(axes_).squaredNorm() - 1.0; }

bool Surface::on_surface(const Vec3& x, double tol) const { return std::abs(implicit(x)) <= tol; }

Vec3 Surface::normal(const Vec3& x) const
{
    return x.cwiseQuotient(axes_.cwiseProduct(axes_)).normalized();
}

Vec3 Surface::project(const Vec3& p) const
{
    if (is_sphere()) {
        require(p.norm() > 0.0, "cannot project the centre");
        return radius() * p.normalized();
    }
    // y_i = p_i a_i^2 / (a_i^2 + mu), with sum (y_i / a_i)^2 = 1
    const Vec3 a2 = axes_.cwiseProduct(axes_);
    auto g = [&](double mu) {
        double s = 0.0, ds = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double q = p[i] * axes_[i] / (a2[i] + mu);
            s += q * q;
            ds += -2.0 * q * q / (a2[i] + mu);
        }
        return std::pair{s - 1.0, ds};
    };
    double lo = -a2.minCoeff() * (1.0 - 1e-12), hi = 0.0;
    while (g(hi).first > 0.0) hi = 2.0 * hi + a2.maxCoeff();
    double mu = std::clamp(0.0, lo, hi);
    for (int it = 0; it < 200; ++it) {
        const auto [f, df] = g(mu);
        if (f > 0) lo = mu; else hi = mu;
        double next = mu - f / df;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - mu) < 1e-15 * (1.0 + std::abs(mu))) {
            mu = next;
            break;
        }
        mu = next;
    }
    Vec3 y;
    for (int i = 0; i < 3; ++i) y[i] = p[i] * a2[i] / (a2[i] + mu);
    return y;
}

double Surface::area() const
{
    const double a = axes_[0], b = axes_[1], c = axes_[2];
    if (is_sphere() || (a == b && b == c)) return 4.0 * pi * a * a;
    auto spheroid = [](double pole, double eq) {
        if (pole > eq) {
            const double e = std::sqrt(1.0 - eq * eq / (pole * pole));
            return 2.0 * pi * eq * eq * (1.0 + pole / (eq * e) * std::asin(e));
        }
        const double e = std::sqrt(1.0 - pole * pole / (eq * eq));
        return 2.0 * pi * eq * eq * (1.0 + (1.0 - e * e) / e * std::atanh(e));
    };
    if (b == c) return spheroid(a, b);
    if (a == c) return spheroid(b, a);
    if (a == b) return spheroid(c, a);
    return SurfaceMesh::product(*this, 128, 256).total_weight();
}

double Surface::max_abs_curvature() const
{
    return axes_.maxCoeff() / (axes_.minCoeff() * axes_.minCoeff());
}

WeingartenMap weingarten(const Surface& s, const Vec3& x)
{
    if (!s.on_surface(x))
        throw Error(ErrorCode::off_surface, "weingarten: point is not on the surface (tol 1e-9)");
    const Vec3& ax = s.axes();
    const Vec3 grad = 2.0 * x.cwiseQuotient(ax.cwiseProduct(ax));
    const Vec3 nu = grad.normalized();
    const Vec3 hess = 2.0 * Vec3(1.0, 1.0, 1.0).cwiseQuotient(ax.cwiseProduct(ax));

    int axis = 0;
    nu.cwiseAbs().minCoeff(&axis);
    const Vec3 e1 = nu.cross(Vec3::Unit(axis)).normalized();
    const Vec3 e2 = nu.cross(e1);

    WeingartenMap w;
    w.basis = {e1, e2};
    const double g = grad.norm();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) w.matrix(i, j) = -w.basis[i].dot(hess.cwiseProduct(w.basis[j])) / g;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(w.matrix);
    w.eigenvalues = {es.eigenvalues()[0], es.eigenvalues()[1]};
    return w;
}

std::pair<int, int> product_factorization(int N)
{
    require(N >= 2, "mesh needs at least 2 nodes");
    int best_t = 0;
    double best = INFINITY;
    for (int nt = 1; nt <= N; ++nt) {
        if (N % nt) continue;
        const double score = std::abs(std::log(static_cast<double>(N / nt) / nt / 2.0));
        if (score <= best + 1e-12) {
            best = score;
            best_t = nt;
        }
    }
    return {best_t, N / best_t};
}

SurfaceMesh SurfaceMesh::product(const Surface& s, int n_theta, int n_phi)
{
    require(n_theta >= 1 && n_phi >= 1, "product mesh: bad sizes");
    const Rule gl = gauss_legendre(n_theta);
    const Vec3& ax = s.axes();
    SurfaceMesh m;
    m.surface_ = s;
    m.description_ = "product " + std::to_string(n_theta) + "x" + std::to_string(n_phi);
    m.nodes_.reserve(static_cast<std::size_t>(n_theta) * n_phi);
    const double wphi = 2.0 * pi / n_phi;
    for (int i = 0; i < n_theta; ++i) {
        const double ct = gl.x[i], st = std::sqrt(1.0 - ct * ct);
        const double th = std::acos(ct);
        for (int j = 0; j < n_phi; ++j) {
            const double ph = 2.0 * pi * (j + 0.5) / n_phi;
            SurfaceNode nd;
            nd.x = s.chart(th, ph);
            nd.nu = s.normal(nd.x);
            const Vec3 jac(ax[1] * ax[2] * st * std::cos(ph), ax[0] * ax[2] * st * std::sin(ph), ax[0] * ax[1] * ct);
            nd.weight = gl.w[i] * wphi * jac.norm();
            // chart points satisfy the implicit equation to roundoff
            nd.curvature = weingarten(s, nd.x).eigenvalues;
            m.nodes_.push_back(nd);
        }
    }
    return m;
}

SurfaceMesh SurfaceMesh::with_nodes(const Surface& s, int N)
{
    const auto [nt, np] = product_factorization(N);
    return product(s, nt, np);
}

SurfaceMesh SurfaceMesh::icosahedral(const Surface& s, int level)
{
    require(s.is_sphere(), "icosahedral mesh is only available for spheres");
    require(level >= 0 && level <= 7, "icosahedral level must be in [0, 7]");
    const double g = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, g, 0}, {1, g, 0}, {-1, -g, 0}, {1, -g, 0}, {0, -1, g}, {0, 1, g},
                           {0, -1, -g}, {0, 1, -g}, {g, 0, -1}, {g, 0, 1}, {-g, 0, -1}, {-g, 0, 1}};
    for (auto& p : v) p.normalize();
    std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
                                         {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                         {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
                                         {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            v.push_back((v[a] + v[b]).normalized());
            const int idx = static_cast<int>(v.size()) - 1;
            mid.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> nf;
        nf.reserve(4 * f.size());
        for (const auto& t : f) {
            const int a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
            nf.push_back({t[0], a, c});
            nf.push_back({t[1], b, a});
            nf.push_back({t[2], c, b});
            nf.push_back({a, b, c});
        }
        f = std::move(nf);
    }
    const double R = s.radius();
    std::vector<double> w(v.size(), 0.0);
    for (const auto& t : f) {
        const Vec3 &a = v[t[0]], &b = v[t[1]], &c = v[t[2]];
        // spherical excess (Van Oosterom - Strackee)
        const double num = std::abs(a.dot(b.cross(c)));
        const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
        const double area = 2.0 * std::atan2(num, den) * R * R;
        for (int k : t) w[k] += area / 3.0;
    }
    SurfaceMesh m;
    m.surface_ = s;
    m.description_ = "icosahedral level " + std::to_string(level);
    for (std::size_t k = 0; k < v.size(); ++k) {
        SurfaceNode nd;
        nd.x = R * v[k];
        nd.nu = v[k];
        nd.weight = w[k];
        nd.curvature = {-1.0 / R, -1.0 / R};
        m.nodes_.push_back(nd);
    }
    return m;
}

double SurfaceMesh::total_weight() const
{
    double s = 0.0;
    for (const auto& n : nodes_) s += n.weight;
    return s;
}

double SurfaceMesh::resolution() const { return std::sqrt(total_weight() / static_cast<double>(size())); }

void SurfaceMesh::write_csv(std::ostream& os) const
{
    os << "node,x,y,z,nu_x,nu_y,nu_z,weight,lambda1,lambda2\n";
    char buf[512];
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        const auto& n = nodes_[k];
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", k, n.x[0],
                      n.x[1], n.x[2], n.nu[0], n.nu[1], n.nu[2], n.weight, n.curvature[0], n.curvature[1]);
        os << buf;
    }
}

TubularMap::TubularMap(std::shared_ptr<const SurfaceMesh> mesh, double eta) : mesh_(std::move(mesh)), eta_(eta)
{
    require(mesh_ != nullptr, "tubular map needs a mesh");
    require(eta > 0.0, "eta must be positive");
}

Vec3 TubularMap::map(std::size_t k, double t) const
{
    const auto& n = mesh_->node(k);
    return n.x + t * n.nu;
}

TubularMap::Injectivity TubularMap::check_injective(const std::vector<double>& ts) const
{
    Injectivity r;
    r.min_distance = INFINITY;
    r.min_det = INFINITY;
    const std::size_t N = mesh_->size();
    for (double t : ts) {
        std::vector<Vec3> img(N);
        for (std::size_t k = 0; k < N; ++k) {
            img[k] = map(k, t);
            r.min_det = std::min(r.min_det, mesh_->node(k).det_factor(t));
        }
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = i + 1; j < N; ++j) r.min_distance = std::min(r.min_distance, (img[i] - img[j]).norm());
    }
    r.injective = r.min_distance > 0.0 && r.min_det > 0.0;
    return r;
}

double TubularMap::projection_error(double t) const
{
    double e = 0.0;
    for (std::size_t k = 0; k < mesh_->size(); ++k)
        e = std::max(e, (mesh_->surface().project(map(k, t)) - mesh_->node(k).x).norm());
    return e;
}

double coarea_integrate(const TubularMap& tm, const std::function<double(const Vec3&)>& f, double eps, int t_nodes)
{
    require(eps > 0.0 && eps <= tm.eta() * (1.0 + 1e-12), "coarea_integrate: need 0 < eps <= eta");
    require(t_nodes >= 1, "coarea_integrate: need t nodes");
    const Rule gt = gauss_legendre(t_nodes, -eps, eps);
    double total = 0.0;
    for (std::size_t k = 0; k < tm.mesh().size(); ++k) {
        const auto& n = tm.mesh().node(k);
        double s = 0.0;
        for (std::size_t i = 0; i < gt.size(); ++i) s += gt.w[i] * n.det_factor(gt.x[i]) * f(n.x + gt.x[i] * n.nu);
        total += n.weight * s;
    }
    return total;
}

GrowthReport measure_growth_audit(const TubularMap& tm, double t, const std::vector<double>& radii, int centers)
{
    require(std::abs(t) <= tm.eta() * (1.0 + 1e-12), "measure_growth_audit: |t| must not exceed eta");
    require(centers >= 1, "measure_growth_audit: need centres");
    const SurfaceMesh& mesh = tm.mesh();
    const std::size_t N = mesh.size();
    GrowthReport rep;
    rep.t = t;
    rep.resolution = mesh.resolution();
    rep.centers = static_cast<int>(std::min<std::size_t>(centers, N));

    std::vector<Vec3> img(N);
    std::vector<double> w(N);
    for (std::size_t k = 0; k < N; ++k) {
        img[k] = tm.map(k, t);
        w[k] = mesh.node(k).weight * mesh.node(k).det_factor(t);
    }
    for (double r : radii) {
        GrowthRow row;
        row.radius = r;
        row.exact_ratio = std::numeric_limits<double>::quiet_NaN();
        if (mesh.surface().is_sphere()) {
            // Archimedes: a ball of radius r <= 2R' centred on a sphere of radius R' cuts area pi r^2
            const double Rt = mesh.surface().radius() + t;
            row.exact_ratio = r <= 2.0 * Rt ? pi : 4.0 * pi * Rt * Rt / (r * r);
        }
        if (r < rep.resolution) {
            rep.rows.push_back(row);
            continue;
        }
        row.computed = true;
        row.min_ratio = INFINITY;
        row.max_ratio = 0.0;
        for (int c = 0; c < rep.centers; ++c) {
            const std::size_t kc = static_cast<std::size_t>(c) * N / rep.centers;
            double s = 0.0;
            for (std::size_t k = 0; k < N; ++k)
                if ((img[k] - img[kc]).norm() < r) s += w[k];
            row.min_ratio = std::min(row.min_ratio, s / (r * r));
            row.max_ratio = std::max(row.max_ratio, s / (r * r));
        }
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace dshell
