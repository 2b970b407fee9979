#include "dshell/shell_ops.hpp"

#include "dshell/errors.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <cmath>
#include <numbers>
#include <random>

namespace dshell {

namespace {

constexpr double pi = std::numbers::pi;

// (a + m beta) s + (i alpha.dir) c
Matrix4c scalar_vector_form(const SpectralParameter& sp, cplx s, cplx c, const Vec3& dir)
{
    Matrix4c out = (I_unit * c) * dirac::alpha_dot(dir);
    const cplx d1 = s * (sp.energy() + sp.mass()), d2 = s * (sp.energy() - sp.mass());
    out(0, 0) += d1;
    out(1, 1) += d1;
    out(2, 2) += d2;
    out(3, 3) += d2;
    return out;
}

Spinor alpha_dot_apply(const Vec3& n, const Spinor& g)
{
    const cplx xm(n[0], -n[1]), xp(n[0], n[1]);
    Spinor out;
    out[0] = n[2] * g[2] + xm * g[3];
    out[1] = xp * g[2] - n[2] * g[3];
    out[2] = n[2] * g[0] + xm * g[1];
    out[3] = xp * g[0] - n[2] * g[1];
    return out;
}

std::size_t nearest_node(const SurfaceMesh& mesh, const Vec3& x)
{
    const Vec3 d = x.normalized();
    std::size_t best = 0;
    double bd = -INFINITY;
    for (std::size_t j = 0; j < mesh.size(); ++j) {
        const double c = mesh.node(j).nu.dot(d);
        if (c > bd) {
            bd = c;
            best = j;
        }
    }
    return best;
}

// modified spherical Bessel functions of complex argument, l = 0, 1
struct Bessel01 {
    cplx i0, i1, di1, k1, dk1;
};

Bessel01 bessel01(cplx z)
{
    Bessel01 b;
    if (std::abs(z) < 0.1) {
        const cplx z2 = z * z;
        b.i0 = 1.0 + z2 / 6.0 + z2 * z2 / 120.0 + z2 * z2 * z2 / 5040.0;
        b.i1 = z * (1.0 / 3.0 + z2 / 30.0 + z2 * z2 / 840.0 + z2 * z2 * z2 / 45360.0);
    } else {
        b.i0 = std::sinh(z) / z;
        b.i1 = std::cosh(z) / z - std::sinh(z) / (z * z);
    }
    b.di1 = b.i0 - 2.0 * b.i1 / z;
    const cplx e = std::exp(-z);
    b.k1 = e * (1.0 / z + 1.0 / (z * z));
    b.dk1 = -e / z - 2.0 * b.k1 / z;
    return b;
}

// Exact potentials of the densities y_1, y_2, y_3 (times the identity) on the
// sphere |y| = Rs, at x != 0. On the sphere the radial derivative is averaged
// over both sides, which is the principal value.
std::array<Matrix4c, 3> sphere_linear_potential(const SpectralParameter& sp, double Rs, const Vec3& x)
{
    const double r = x.norm();
    const Vec3 xh = x / r;
    const cplx k = sp.decay_rate();
    const double R3 = Rs * Rs * Rs;
    cplx f, fp;
    if (std::abs(k) < 1e-12) {
        const double lo = std::min(r, Rs), hi = std::max(r, Rs);
        f = R3 * lo / (3.0 * hi * hi);
        const double fin = R3 / (3.0 * Rs * Rs), fout = -2.0 * R3 * Rs / (3.0 * r * r * r);
        fp = std::abs(r - Rs) <= 1e-15 * Rs ? 0.5 * (fin + fout) : (r < Rs ? fin : fout);
    } else {
        const Bessel01 bs = bessel01(k * Rs), br = bessel01(k * r);
        const cplx fin_d = R3 * k * k * br.di1 * bs.k1, fout_d = R3 * k * k * bs.i1 * br.dk1;
        if (std::abs(r - Rs) <= 1e-15 * Rs) {
            f = R3 * k * bs.i1 * bs.k1;
            fp = 0.5 * (R3 * k * k * bs.di1 * bs.k1 + R3 * k * k * bs.i1 * bs.dk1);
        } else if (r < Rs) {
            f = R3 * k * br.i1 * bs.k1;
            fp = fin_d;
        } else {
            f = R3 * k * bs.i1 * br.k1;
            fp = fout_d;
        }
    }
    std::array<Matrix4c, 3> T;
    const Matrix4c ax = dirac::alpha_dot(xh);
    for (int i = 0; i < 3; ++i) {
        Matrix4c m = (-I_unit * (fp * xh[i] - f * xh[i] / r)) * ax;
        m += (-I_unit * f / r) * dirac::alpha(i + 1);
        const cplx s = f * xh[i];
        m(0, 0) += s * (sp.energy() + sp.mass());
        m(1, 1) += s * (sp.energy() + sp.mass());
        m(2, 2) += s * (sp.energy() - sp.mass());
        m(3, 3) += s * (sp.energy() - sp.mass());
        T[i] = m;
    }
    return T;
}

// Tangential gradient stencil at a node: weights Gamma_n (3-vectors) with
// grad g(y_a) ~ sum_n Gamma_n (g_n - g_a), from a local quadratic fit.
struct Stencil {
    std::vector<std::size_t> idx;
    std::vector<Vec3> gamma;
};

Stencil gradient_stencil(const SurfaceMesh& mesh, std::size_t a)
{
    // two nearest nodes per tangent-plane octant: product grids are very
    // anisotropic near the poles, where plain nearest neighbours sit on one ring
    constexpr int sectors = 8, per_sector = 2;
    const Vec3 ya = mesh.node(a).x, nu = mesh.node(a).nu;
    const Vec3 e1 = nu.unitOrthogonal(), e2 = nu.cross(e1);
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(mesh.size());
    for (std::size_t j = 0; j < mesh.size(); ++j)
        if (j != a) d.emplace_back((mesh.node(j).x - ya).squaredNorm(), j);
    std::sort(d.begin(), d.end());

    std::vector<std::size_t> pick;
    int count[sectors] = {};
    for (const auto& [dist, j] : d) {
        const Vec3 dy = mesh.node(j).x - ya;
        const double ang = std::atan2(dy.dot(e2), dy.dot(e1)) + pi;
        const int sct = std::min(sectors - 1, static_cast<int>(ang / (2.0 * pi) * sectors));
        if (count[sct] >= per_sector) continue;
        ++count[sct];
        pick.push_back(j);
        if (pick.size() == static_cast<std::size_t>(sectors * per_sector)) break;
    }

    double h = 0.0;
    for (std::size_t j : pick) h = std::max(h, (mesh.node(j).x - ya).norm());
    Eigen::MatrixXd A(pick.size(), 5);
    for (std::size_t n = 0; n < pick.size(); ++n) {
        const Vec3 dy = (mesh.node(pick[n]).x - ya) / h;
        const double u = dy.dot(e1), v = dy.dot(e2);
        A.row(n) << u, v, u * u, u * v, v * v;
    }
    const Eigen::MatrixXd P = A.completeOrthogonalDecomposition().pseudoInverse();
    Stencil s;
    for (std::size_t n = 0; n < pick.size(); ++n) {
        s.idx.push_back(pick[n]);
        s.gamma.push_back((P(0, n) * e1 + P(1, n) * e2) / h);
    }
    return s;
}

// Sources of a stack of parallel layers y_j + offset_l nu_j, with the
// coarea weight w_j det(1 - offset_l W_j) and a per-layer coefficient.
//
// With an anchor node a (sphere rules) the density is split as
//   g = (g - l_a) + l_a,  l_a(y) = g_a + D_a (y - y_a)
// where D_a is the stencil gradient (affine rule) or zero (constant rule). The
// smooth remainder goes through the quadrature, l_a is integrated exactly.
// Layer l is the sphere of radius R + offset_l, on which D scales by R / R_l.
struct LayerStack {
    SpectralParameter sp;
    std::shared_ptr<const SurfaceMesh> mesh;
    PVRule rule = PVRule::punctured;
    std::vector<double> offset, coef;
    std::vector<std::vector<Vec3>> z;
    std::vector<std::vector<double>> w;

    // targets
    std::vector<Vec3> x;
    std::vector<long> anchor;  // -1: none
    std::vector<double> row_coef;

    mutable std::vector<std::optional<Stencil>> stencils;
    // per (p, l): [A0, Q1, Q2, Q3], see block()
    mutable std::vector<std::array<Matrix4c, 4>> anchor_blocks;

    LayerStack(const SpectralParameter& sp_, std::shared_ptr<const SurfaceMesh> m, PVRule r)
        : sp(sp_), mesh(std::move(m)), rule(r)
    {
        require(rule == PVRule::punctured || mesh->surface().is_sphere(), "sphere rules need a sphere");
    }

    std::size_t L() const { return offset.size(); }
    std::size_t N() const { return mesh->size(); }
    bool affine() const { return rule == PVRule::sphere_affine; }

    void init_sources()
    {
        z.assign(L(), std::vector<Vec3>(N()));
        w.assign(L(), std::vector<double>(N()));
        for (std::size_t l = 0; l < L(); ++l)
            for (std::size_t j = 0; j < N(); ++j) {
                const auto& n = mesh->node(j);
                z[l][j] = n.x + offset[l] * n.nu;
                w[l][j] = n.weight * n.det_factor(offset[l]);
            }
    }

    void add_target(const Vec3& p, long a, double c)
    {
        x.push_back(p);
        anchor.push_back(rule == PVRule::punctured ? -1 : a);
        row_coef.push_back(c);
    }

    const Stencil& stencil(std::size_t a) const
    {
        if (stencils.empty()) stencils.resize(N());
        if (!stencils[a]) stencils[a] = gradient_stencil(*mesh, a);
        return *stencils[a];
    }

    double layer_radius(std::size_t l) const { return mesh->surface().radius() + offset[l]; }

    // coincident (punctured) pairs are skipped, near collisions are an error
    static bool separated(const Vec3& d)
    {
        const double r = d.norm();
        if (r < 1e-14) return false;
        if (r < 1e-10) throw Error(ErrorCode::degenerate_quadrature, "shifted quadrature points nearly collide");
        return true;
    }

    Matrix4c constant_layer(std::size_t p, std::size_t l) const
    {
        const double rho = x[p].norm();
        return sphere_constant_potential(sp, layer_radius(l), rho, x[p] / rho);
    }

    // exact potential of (y - y_a)_i on layer l, i = 1..3
    std::array<Matrix4c, 3> linear_layer(std::size_t p, std::size_t l, const Matrix4c& S0) const
    {
        auto T = sphere_linear_potential(sp, layer_radius(l), x[p]);
        const Vec3& za = z[l][anchor[p]];
        for (int i = 0; i < 3; ++i) T[i] -= za[i] * S0;
        return T;
    }

    Spinor apply_target(std::size_t p, const Field& g) const
    {
        Spinor acc = Spinor::Zero();
        const long a = anchor[p];
        for (std::size_t l = 0; l < L(); ++l) {
            Spinor s = Spinor::Zero();
            if (a < 0) {
                for (std::size_t j = 0; j < N(); ++j) {
                    const Vec3 d = x[p] - z[l][j];
                    if (!separated(d)) continue;
                    s += w[l][j] * phi_apply(sp, d, block_of(g, j * L() + l));
                }
                acc += coef[l] * s;
                continue;
            }
            const Spinor ga = block_of(g, a * L() + l);
            // base-mesh gradient; the (z_j - z_a) products are layer independent
            std::array<Spinor, 3> D{Spinor::Zero(), Spinor::Zero(), Spinor::Zero()};
            if (affine()) {
                const Stencil& st = stencil(a);
                for (std::size_t n = 0; n < st.idx.size(); ++n) {
                    const Spinor dg = block_of(g, st.idx[n] * L() + l) - ga;
                    for (int i = 0; i < 3; ++i) D[i] += st.gamma[n][i] * dg;
                }
            }
            const Vec3 ya = mesh->node(a).x;
            for (std::size_t j = 0; j < N(); ++j) {
                if (static_cast<long>(j) == a) continue;
                const Vec3 d = x[p] - z[l][j];
                separated(d);
                Spinor h = block_of(g, j * L() + l) - ga;
                if (affine()) {
                    const Vec3 dy = mesh->node(j).x - ya;
                    h -= dy[0] * D[0] + dy[1] * D[1] + dy[2] * D[2];
                }
                s += w[l][j] * phi_apply(sp, d, h);
            }
            const Matrix4c S0 = constant_layer(p, l);
            s += S0 * ga;
            if (affine()) {
                const auto T = linear_layer(p, l, S0);
                const double sc = mesh->surface().radius() / layer_radius(l);
                for (int i = 0; i < 3; ++i) s += sc * (T[i] * D[i]);
            }
            acc += coef[l] * s;
        }
        return row_coef[p] * acc;
    }

    Field apply(const Field& g) const
    {
        Field out(4 * x.size());
        for (std::size_t p = 0; p < x.size(); ++p) out.segment<4>(4 * p) = apply_target(p, g);
        return out;
    }

    // As a linear map of g, target p and layer l receive
    //   sum_{j != a} phi_j W_j g_j + A0 g_a + sum_i Q_i D_i,
    //   A0 = S0 - sum_{j != a} phi_j W_j,
    //   Q_i = sc T_i - sum_{j != a} phi_j W_j (y_j - y_a)_i,
    // with D_i = sum_n Gamma_ni (g_n - g_a).
    void build_anchor_blocks() const
    {
        if (!anchor_blocks.empty()) return;
        anchor_blocks.assign(x.size() * L(), {Matrix4c::Zero(), Matrix4c::Zero(), Matrix4c::Zero(), Matrix4c::Zero()});
        for (std::size_t p = 0; p < x.size(); ++p) {
            const long a = anchor[p];
            if (a < 0) continue;
            const Vec3 ya = mesh->node(a).x;
            for (std::size_t l = 0; l < L(); ++l) {
                auto& B = anchor_blocks[p * L() + l];
                const Matrix4c S0 = constant_layer(p, l);
                B[0] = S0;
                if (affine()) {
                    const auto T = linear_layer(p, l, S0);
                    const double sc = mesh->surface().radius() / layer_radius(l);
                    for (int i = 0; i < 3; ++i) B[i + 1] = sc * T[i];
                }
                for (std::size_t j = 0; j < N(); ++j) {
                    if (static_cast<long>(j) == a) continue;
                    const Vec3 d = x[p] - z[l][j];
                    separated(d);
                    const Matrix4c k = w[l][j] * phi_a(sp, d);
                    B[0] -= k;
                    if (affine()) {
                        const Vec3 dy = mesh->node(j).x - ya;
                        for (int i = 0; i < 3; ++i) B[i + 1] -= dy[i] * k;
                    }
                }
            }
        }
    }

    Matrix4c block(std::size_t p, std::size_t c) const
    {
        const std::size_t j = c / L(), l = c % L();
        const double scale = row_coef[p] * coef[l];
        if (scale == 0.0) return Matrix4c::Zero();
        const long a = anchor[p];
        Matrix4c out = Matrix4c::Zero();
        if (static_cast<long>(j) != a) {
            const Vec3 d = x[p] - z[l][j];
            if (separated(d)) out = w[l][j] * phi_a(sp, d);
        }
        if (a < 0) return scale * out;
        build_anchor_blocks();
        const auto& B = anchor_blocks[p * L() + l];
        if (static_cast<long>(j) == a) out += B[0];
        if (affine()) {
            const Stencil& st = stencil(a);
            for (std::size_t n = 0; n < st.idx.size(); ++n) {
                const Vec3& G = st.gamma[n];
                const Matrix4c q = G[0] * B[1] + G[1] * B[2] + G[2] * B[3];
                if (st.idx[n] == j) out += q;
                if (static_cast<long>(j) == a) out -= q;
            }
        }
        return scale * out;
    }
};

ShellOperator stack_operator(OperatorLabel label, std::shared_ptr<LayerStack> st, std::vector<double> row_w,
                             std::vector<double> col_w)
{
    const SpectralParameter sp = st->sp;
    return ShellOperator(
        label, sp, std::move(row_w), std::move(col_w),
        [st](std::size_t r, std::size_t c) { return st->block(r, c); },
        [st](const Field& g) { return st->apply(g); });
}

double dense_dim_ok(std::size_t blocks) { return 4 * blocks <= ShellOperator::dense_cap; }

std::shared_ptr<LayerStack> single_layer(const SpectralParameter& sp, std::shared_ptr<const SurfaceMesh> mesh,
                                         PVRule rule)
{
    auto st = std::make_shared<LayerStack>(sp, std::move(mesh), rule);
    st->offset = {0.0};
    st->coef = {1.0};
    st->init_sources();
    return st;
}

std::shared_ptr<LayerStack> surface_stack(const SpectralParameter& sp, std::shared_ptr<const SurfaceMesh> mesh,
                                          PVRule rule)
{
    auto st = single_layer(sp, mesh, rule);
    for (std::size_t k = 0; k < mesh->size(); ++k) st->add_target(mesh->node(k).x, static_cast<long>(k), 1.0);
    return st;
}

void check_off_surface(const SurfaceMesh& mesh, PVRule pv, const Vec3& x)
{
    const double dist = surface_distance(mesh.surface(), x);
    const double guard = pv == PVRule::punctured ? 0.5 * mesh.resolution() : 1e-10 * mesh.surface().radius();
    if (dist < guard)
        throw Error(ErrorCode::point_too_close_to_surface, "evaluation point within the surface guard distance");
}

}  // namespace

Matrix4c sphere_constant_potential(const SpectralParameter& sp, double Rs, double rho, const Vec3& dir)
{
    require(Rs > 0.0 && rho > 0.0, "sphere_constant_potential: radii must be positive");
    const cplx k = sp.decay_rate();
    const double r0 = std::abs(rho - Rs), r1 = rho + Rs;
    const bool pv = r0 <= 1e-15 * Rs;
    cplx I1, I2, I3 = 0.0;
    if (std::abs(k) < 1e-8) {
        I1 = r1 - r0;
        I2 = r1 - r0;
        if (!pv) I3 = 1.0 / r0 - 1.0 / r1;
    } else {
        const cplx e0 = std::exp(-k * r0), e1 = std::exp(-k * r1);
        I1 = (e0 - e1) / k;
        I2 = ((2.0 + k * r0) * e0 - (2.0 + k * r1) * e1) / k;
        if (!pv) I3 = e0 / r0 - e1 / r1;
    }
    const cplx s = Rs / (2.0 * rho) * I1;
    const cplx c = Rs / (4.0 * rho * rho) * ((rho * rho - Rs * Rs) * I3 + I2);
    return scalar_vector_form(sp, s, c, dir);
}

PVRule default_pv_rule(const SurfaceMesh& mesh)
{
    return mesh.surface().is_sphere() ? PVRule::sphere_affine : PVRule::punctured;
}

AmbientRule ball_rule(const Vec3& center, double radius, int n_r, int n_theta, int n_phi)
{
    require(radius > 0.0 && n_r > 0 && n_theta > 0 && n_phi > 0, "ball_rule: bad parameters");
    const Rule gr = gauss_legendre(n_r, 0.0, radius), gt = gauss_legendre(n_theta);
    AmbientRule out;
    for (int a = 0; a < n_r; ++a)
        for (int b = 0; b < n_theta; ++b) {
            const double ct = gt.x[b], st = std::sqrt(1.0 - ct * ct);
            for (int c = 0; c < n_phi; ++c) {
                const double ph = 2.0 * pi * (c + 0.5) / n_phi;
                out.x.push_back(center + gr.x[a] * Vec3(st * std::cos(ph), st * std::sin(ph), ct));
                out.w.push_back(gr.w[a] * gr.x[a] * gr.x[a] * gt.w[b] * 2.0 * pi / n_phi);
            }
        }
    return out;
}

AmbientRule shell_rule(double r0, double r1, int n_r, int n_theta, int n_phi)
{
    require(0.0 <= r0 && r0 < r1, "shell_rule: need 0 <= r0 < r1");
    const Rule gr = gauss_legendre(n_r, r0, r1), gt = gauss_legendre(n_theta);
    AmbientRule out;
    for (int a = 0; a < n_r; ++a)
        for (int b = 0; b < n_theta; ++b) {
            const double ct = gt.x[b], st = std::sqrt(1.0 - ct * ct);
            for (int c = 0; c < n_phi; ++c) {
                const double ph = 2.0 * pi * (c + 0.5) / n_phi;
                out.x.push_back(gr.x[a] * Vec3(st * std::cos(ph), st * std::sin(ph), ct));
                out.w.push_back(gr.w[a] * gr.x[a] * gr.x[a] * gt.w[b] * 2.0 * pi / n_phi);
            }
        }
    return out;
}

Spinor AmbientDensity::operator()(const Vec3& y) const
{
    if ((y - center).norm() >= radius) return Spinor::Zero();
    return f(y);
}

AmbientDensity AmbientDensity::smooth_bump(const Vec3& center, double radius, const Spinor& amplitude)
{
    AmbientDensity d;
    d.center = center;
    d.radius = radius;
    d.f = [center, radius, amplitude](const Vec3& y) -> Spinor {
        const double s = (y - center).squaredNorm() / (radius * radius);
        if (s >= 1.0) return Spinor::Zero();
        return std::exp(1.0 - 1.0 / (1.0 - s)) * amplitude;
    };
    return d;
}

Spinor volume_potential(const SpectralParameter& sp, const AmbientDensity& G, const Vec3& x, const VolumeRule& rule)
{
    const double dc = (x - G.center).norm();
    Spinor acc = Spinor::Zero();
    if (dc > 1.5 * G.radius) {
        const AmbientRule br = ball_rule(G.center, G.radius, rule.radial, rule.polar, rule.azimuthal);
        for (std::size_t q = 0; q < br.size(); ++q) acc += br.w[q] * phi_apply(sp, x - br.x[q], G(br.x[q]));
        return acc;
    }
    // y = x + r omega: phi(-r omega) r^2 is bounded, so the 1/r singularity is absorbed
    const double rmax = dc + G.radius;
    const Rule gr = gauss_legendre(2 * rule.radial, 0.0, rmax), gt = gauss_legendre(rule.polar);
    const cplx k = sp.decay_rate();
    for (std::size_t a = 0; a < gr.size(); ++a) {
        const double r = gr.x[a];
        const cplx e = std::exp(-k * r) / (4.0 * pi);
        for (std::size_t b = 0; b < gt.size(); ++b) {
            const double ct = gt.x[b], st = std::sqrt(1.0 - ct * ct);
            for (int c = 0; c < rule.azimuthal; ++c) {
                const double ph = 2.0 * pi * (c + 0.5) / rule.azimuthal;
                const Vec3 om(st * std::cos(ph), st * std::sin(ph), ct);
                const Spinor gy = G(x + r * om);
                if (gy.isZero(0.0)) continue;
                const double wq = gr.w[a] * gt.w[b] * 2.0 * pi / rule.azimuthal;
                // phi(-r om) r^2 = e [ (a + m beta) r - (1 + k r) i alpha.om ]
                Spinor t = r * gy;
                t.head<2>() *= (sp.energy() + sp.mass());
                t.tail<2>() *= (sp.energy() - sp.mass());
                t -= (1.0 + k * r) * I_unit * alpha_dot_apply(om, gy);
                acc += wq * e * t;
            }
        }
    }
    return acc;
}

double surface_distance(const Surface& s, const Vec3& x)
{
    if (s.is_sphere()) return std::abs(x.norm() - s.radius());
    return (x - s.project(x)).norm();
}

Spinor layer_potential(const SpectralParameter& sp, const SurfaceMesh& mesh, const AmbientDensity* G,
                       const Field& g, const Vec3& x, const VolumeRule& rule)
{
    require(static_cast<std::size_t>(g.size()) == 4 * mesh.size(), "layer_potential: density size mismatch");
    const PVRule pv = default_pv_rule(mesh);
    check_off_surface(mesh, pv, x);
    // non-owning handle, the stack does not outlive this call
    auto st = single_layer(sp, std::shared_ptr<const SurfaceMesh>(std::shared_ptr<void>(), &mesh), pv);
    st->add_target(x, static_cast<long>(nearest_node(mesh, x)), 1.0);
    Spinor acc = st->apply_target(0, g);
    if (G) acc += volume_potential(sp, *G, x, rule);
    return acc;
}

const char* to_string(OperatorLabel label)
{
    switch (label) {
    case OperatorLabel::A_eps: return "A_eps";
    case OperatorLabel::B_eps: return "B_eps";
    case OperatorLabel::C_eps: return "C_eps";
    case OperatorLabel::A_0: return "A_0";
    case OperatorLabel::B_0: return "B_0";
    case OperatorLabel::B_prime: return "B_prime";
    case OperatorLabel::B_0_plus_B_prime: return "B_0+B_prime";
    case OperatorLabel::C_0: return "C_0";
    case OperatorLabel::C_sigma: return "C_sigma";
    }
    return "unknown";
}

ShellOperator::ShellOperator(OperatorLabel label, SpectralParameter sp, std::vector<double> row_weights,
                             std::vector<double> col_weights, BlockFn block, ApplyFn apply)
    : label_(label), sp_(sp), row_w_(std::move(row_weights)), col_w_(std::move(col_weights)),
      block_(std::move(block)), apply_(std::move(apply))
{
    for (double w : row_w_) require(w > 0.0, "operator row weights must be positive");
    for (double w : col_w_) require(w > 0.0, "operator column weights must be positive");
}

Field ShellOperator::apply(const Field& x) const
{
    require(static_cast<std::size_t>(x.size()) == 4 * col_blocks(), "apply: size mismatch");
    if (dense_cache_) return *dense_cache_ * x;
    if (apply_) return apply_(x);
    Field out = Field::Zero(4 * row_blocks());
    for (std::size_t r = 0; r < row_blocks(); ++r)
        for (std::size_t c = 0; c < col_blocks(); ++c) out.segment<4>(4 * r) += block_(r, c) * x.segment<4>(4 * c);
    return out;
}

Field ShellOperator::apply_adjoint(const Field& y) const
{
    require(static_cast<std::size_t>(y.size()) == 4 * row_blocks(), "apply_adjoint: size mismatch");
    Field wy(y.size());
    for (std::size_t r = 0; r < row_blocks(); ++r) wy.segment<4>(4 * r) = row_w_[r] * y.segment<4>(4 * r);
    Field out;
    if (dense_cache_) {
        out = dense_cache_->adjoint() * wy;
    } else {
        out = Field::Zero(4 * col_blocks());
        for (std::size_t r = 0; r < row_blocks(); ++r)
            for (std::size_t c = 0; c < col_blocks(); ++c)
                out.segment<4>(4 * c) += block_(r, c).adjoint() * wy.segment<4>(4 * r);
    }
    for (std::size_t c = 0; c < col_blocks(); ++c) out.segment<4>(4 * c) /= col_w_[c];
    return out;
}

Eigen::MatrixXcd ShellOperator::dense() const { return dense_ref(); }

const Eigen::MatrixXcd& ShellOperator::dense_ref() const
{
    if (dense_cache_) return *dense_cache_;
    if (!dense_dim_ok(row_blocks()) || !dense_dim_ok(col_blocks()))
        throw Error(ErrorCode::dense_cap_exceeded,
                    "dense operators are limited to 4NM <= 16384 unknowns; lower N or M");
    auto D = std::make_shared<Eigen::MatrixXcd>(4 * row_blocks(), 4 * col_blocks());
    for (std::size_t r = 0; r < row_blocks(); ++r)
        for (std::size_t c = 0; c < col_blocks(); ++c) D->block<4, 4>(4 * r, 4 * c) = block_(r, c);
    dense_cache_ = D;
    return *dense_cache_;
}

double ShellOperator::row_norm(const Field& y) const
{
    double s = 0.0;
    for (std::size_t r = 0; r < row_blocks(); ++r) s += row_w_[r] * y.segment<4>(4 * r).squaredNorm();
    return std::sqrt(s);
}

double ShellOperator::col_norm(const Field& x) const
{
    double s = 0.0;
    for (std::size_t c = 0; c < col_blocks(); ++c) s += col_w_[c] * x.segment<4>(4 * c).squaredNorm();
    return std::sqrt(s);
}

double ShellOperator::norm(int max_iter, double tol) const
{
    // Lanczos with full reorthogonalization on W_c^{1/2} B^dagger B W_c^{-1/2},
    // whose top eigenvalue is the squared weighted norm
    if (dense_dim_ok(row_blocks()) && dense_dim_ok(col_blocks())) dense_ref();
    const Eigen::Index n = static_cast<Eigen::Index>(4 * col_blocks());
    Eigen::VectorXd sc(n);
    for (std::size_t c = 0; c < col_blocks(); ++c) sc.segment<4>(4 * c).setConstant(std::sqrt(col_w_[c]));
    auto op = [&](const Field& x) -> Field {
        const Field y = apply(Field(sc.cwiseInverse().asDiagonal() * x));
        return sc.asDiagonal() * apply_adjoint(y);
    };

    std::mt19937 rng(20240611);
    std::normal_distribution<double> nd;
    Field q(n);
    for (Eigen::Index i = 0; i < n; ++i) q[i] = cplx(nd(rng), nd(rng));
    q.normalize();

    const int steps = static_cast<int>(std::min<Eigen::Index>(n, max_iter));
    Eigen::MatrixXcd Q(n, steps);
    std::vector<double> alpha, beta;
    double last = -1.0;
    for (int k = 0; k < steps; ++k) {
        Q.col(k) = q;
        Field w = op(q);
        const double a = std::real(q.dot(w));
        alpha.push_back(a);
        // twice is enough
        for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(k + 1) * (Q.leftCols(k + 1).adjoint() * w);
        const double b = w.norm();

        const int m = k + 1;
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            T(i, i) = alpha[i];
            if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(T, Eigen::EigenvaluesOnly).eigenvalues()(m - 1);
        const bool converged = last >= 0.0 && std::abs(top - last) <= tol * std::max(top, 1e-300);
        last = top;
        if (b <= 1e-14 * std::max(std::abs(top), 1e-300) || (converged && k >= 4)) break;
        beta.push_back(b);
        q = w / b;
    }
    return std::sqrt(std::max(last, 0.0));
}

namespace {

std::vector<double> node_weights(const SurfaceMesh& mesh)
{
    std::vector<double> w(mesh.size());
    for (std::size_t k = 0; k < mesh.size(); ++k) w[k] = mesh.node(k).weight;
    return w;
}

}  // namespace

ShellOperator cauchy_sigma(const SpectralParameter& sp, std::shared_ptr<const SurfaceMesh> mesh)
{
    return cauchy_sigma(sp, mesh, default_pv_rule(*mesh));
}

ShellOperator cauchy_sigma(const SpectralParameter& sp, std::shared_ptr<const SurfaceMesh> mesh, PVRule rule)
{
    require(mesh->size() >= 2, "cauchy_sigma: mesh too small");
    auto st = surface_stack(sp, mesh, rule);
    const auto w = node_weights(*mesh);
    return stack_operator(OperatorLabel::C_sigma, st, w, w);
}

std::vector<double> default_plemelj_offsets(const SurfaceMesh& mesh)
{
    const double h = mesh.resolution();
    return {1.0 * h, 1.1 * h, 1.2 * h, 1.3 * h};
}

PlemeljReport plemelj_check(const SpectralParameter& sp, std::shared_ptr<const SurfaceMesh> mesh, const Field& g,
                            std::vector<double> offsets)
{
    if (offsets.empty()) offsets = default_plemelj_offsets(*mesh);
    require(offsets.size() >= 2, "plemelj_check: need at least two offsets");
    for (double h : offsets) require(h > 0.0, "plemelj_check: offsets must be positive");
    const std::size_t N = mesh->size();
    require(static_cast<std::size_t>(g.size()) == 4 * N, "plemelj_check: density size mismatch");

    const Field Cg = cauchy_sigma(sp, mesh).apply(g);

    // Lagrange weights for extrapolation to h = 0
    std::vector<double> lw(offsets.size(), 1.0);
    for (std::size_t i = 0; i < offsets.size(); ++i)
        for (std::size_t j = 0; j < offsets.size(); ++j)
            if (i != j) lw[i] *= offsets[j] / (offsets[j] - offsets[i]);

    // all off-surface traces in one pass, anchored at their base node
    const PVRule pv = default_pv_rule(*mesh);
    auto st = single_layer(sp, mesh, pv);
    for (std::size_t k = 0; k < N; ++k)
        for (double h : offsets)
            for (double side : {-1.0, 1.0}) {
                const Vec3 x = mesh->node(k).x + side * h * mesh->node(k).nu;
                check_off_surface(*mesh, pv, x);
                st->add_target(x, static_cast<long>(k), 1.0);
            }
    const Field traces = st->apply(g);

    PlemeljReport rep;
    rep.offsets = offsets;
    double e_in = 0, e_out = 0, e_jump = 0, e_sum = 0, p_in = 0, p_out = 0, p_jump = 0, p_sum = 0;
    for (std::size_t k = 0; k < N; ++k) {
        const auto& n = mesh->node(k);
        Spinor in = Spinor::Zero(), out = Spinor::Zero();
        for (std::size_t i = 0; i < offsets.size(); ++i) {
            const std::size_t p = 2 * (k * offsets.size() + i);
            in += lw[i] * block_of(traces, p);
            out += lw[i] * block_of(traces, p + 1);
        }
        const Spinor half_jump = 0.5 * I_unit * alpha_dot_apply(n.nu, block_of(g, k));
        const Spinor c = block_of(Cg, k);
        const Spinor pin = c - half_jump, pout = c + half_jump;
        e_in = std::max(e_in, (in - pin).norm());
        e_out = std::max(e_out, (out - pout).norm());
        e_jump = std::max(e_jump, ((in - out) - (pin - pout)).norm());
        e_sum = std::max(e_sum, ((in + out) - 2.0 * c).norm());
        p_in = std::max(p_in, pin.norm());
        p_out = std::max(p_out, pout.norm());
        p_jump = std::max(p_jump, (pin - pout).norm());
        p_sum = std::max(p_sum, (2.0 * c).norm());
    }
    auto rel = [](double e, double p) { return p > 0 ? e / p : e; };
    rep.rel_error_interior = rel(e_in, p_in);
    rep.rel_error_exterior = rel(e_out, p_out);
    rep.rel_error_jump = rel(e_jump, p_jump);
    rep.rel_error_sum = rel(e_sum, p_sum);
    return rep;
}

std::vector<double> OperatorGrid::weights() const
{
    std::vector<double> w(blocks());
    for (std::size_t k = 0; k < N(); ++k)
        for (std::size_t i = 0; i < M(); ++i) w[index(k, i)] = mesh->node(k).weight * t.w[i];
    return w;
}

double OperatorGrid::total_weight() const
{
    double s = 0.0;
    for (double w : weights()) s += w;
    return s;
}

OperatorGrid make_operator_grid(std::shared_ptr<const SurfaceMesh> mesh, int M, const UVFactorization& uv, double eta)
{
    require(mesh && mesh->size() >= 2, "operator grid needs a mesh");
    require(M >= 1, "operator grid needs t nodes");
    require(eta > 0.0, "operator grid needs eta > 0");
    OperatorGrid g;
    g.mesh = mesh;
    g.t = gauss_legendre(M);
    g.uv = std::make_shared<UVFactorization>(uv);
    g.eta = eta;
    g.pv = default_pv_rule(*mesh);
    for (double t : g.t.x) {
        g.u.push_back(uv.u(t));
        g.v.push_back(uv.v(t));
    }
    return g;
}

FamilyOptions default_family_options(const OperatorGrid& grid)
{
    // sample A outside the collar; feed C a density supported well inside it
    const Surface& s = grid.mesh->surface();
    const double Rmin = s.axes().minCoeff(), Rmax = s.axes().maxCoeff();
    FamilyOptions opt;
    opt.a_targets = shell_rule(Rmax + grid.eta + 0.25, Rmax + grid.eta + 1.25, 6, 8, 16);
    const double rc = std::max(0.1, Rmin - grid.eta - 0.35);
    opt.c_sources = ball_rule(Vec3::Zero(), rc, 16, 12, 24);
    return opt;
}

namespace {

std::shared_ptr<LayerStack> grid_stack(const OperatorGrid& grid, const SpectralParameter& sp, double eps)
{
    auto st = std::make_shared<LayerStack>(sp, grid.mesh, grid.pv);
    for (std::size_t l = 0; l < grid.M(); ++l) {
        st->offset.push_back(eps * grid.t.x[l]);
        st->coef.push_back(grid.v[l] * grid.t.w[l]);
    }
    st->init_sources();
    return st;
}

ShellOperator make_A(const OperatorGrid& grid, const SpectralParameter& sp, double eps, const AmbientRule& targets)
{
    auto st = grid_stack(grid, sp, eps);
    for (const Vec3& x : targets.x) {
        st->add_target(x, static_cast<long>(nearest_node(*grid.mesh, x)), 1.0);
    }
    return stack_operator(eps > 0 ? OperatorLabel::A_eps : OperatorLabel::A_0, st, targets.w, grid.weights());
}

ShellOperator make_B(const OperatorGrid& grid, const SpectralParameter& sp, double eps, OperatorLabel label)
{
    auto st = grid_stack(grid, sp, eps);
    for (std::size_t k = 0; k < grid.N(); ++k)
        for (std::size_t i = 0; i < grid.M(); ++i) {
            const auto& n = grid.mesh->node(k);
            st->add_target(n.x + eps * grid.t.x[i] * n.nu, static_cast<long>(k), grid.u[i]);
        }
    const auto w = grid.weights();
    return stack_operator(label, st, w, w);
}

ShellOperator make_C(const OperatorGrid& grid, const SpectralParameter& sp, double eps, const AmbientRule& sources)
{
    struct Data {
        std::vector<Vec3> x;
        std::vector<double> uc;
        AmbientRule src;
        SpectralParameter sp;
    };
    auto d = std::make_shared<Data>(Data{{}, {}, sources, sp});
    for (std::size_t k = 0; k < grid.N(); ++k)
        for (std::size_t i = 0; i < grid.M(); ++i) {
            const auto& n = grid.mesh->node(k);
            d->x.push_back(n.x + eps * grid.t.x[i] * n.nu);
            d->uc.push_back(grid.u[i]);
        }
    auto block = [d](std::size_t r, std::size_t q) -> Matrix4c {
        if (d->uc[r] == 0.0) return Matrix4c::Zero();
        return (d->uc[r] * d->src.w[q]) * phi_a(d->sp, d->x[r] - d->src.x[q]);
    };
    auto apply = [d](const Field& G) {
        Field out(4 * d->x.size());
        for (std::size_t r = 0; r < d->x.size(); ++r) {
            Spinor acc = Spinor::Zero();
            if (d->uc[r] != 0.0)
                for (std::size_t q = 0; q < d->src.size(); ++q)
                    acc += d->src.w[q] * phi_apply(d->sp, d->x[r] - d->src.x[q], block_of(G, q));
            out.segment<4>(4 * r) = d->uc[r] * acc;
        }
        return out;
    };
    return ShellOperator(eps > 0 ? OperatorLabel::C_eps : OperatorLabel::C_0, sp, grid.weights(), sources.w, block,
                         apply);
}

ShellOperator make_b_prime(const OperatorGrid& grid, const SpectralParameter& sp)
{
    const Eigen::MatrixXcd K = sampled_sign_matrix(grid.t.x, grid.t.x, grid.t.w, grid.u, grid.v);
    auto mesh = grid.mesh;
    const std::size_t M = grid.M();
    auto block = [K, mesh, M](std::size_t r, std::size_t c) -> Matrix4c {
        const std::size_t k = r / M, j = c / M;
        if (k != j) return Matrix4c::Zero();
        return K(r % M, c % M) * dirac::alpha_dot(mesh->node(k).nu);
    };
    auto apply = [K, mesh, M](const Field& g) {
        const std::size_t N = mesh->size();
        Field out = Field::Zero(4 * N * M);
        for (std::size_t k = 0; k < N; ++k) {
            const Vec3& nu = mesh->node(k).nu;
            for (std::size_t i = 0; i < M; ++i) {
                Spinor s = Spinor::Zero();
                for (std::size_t l = 0; l < M; ++l) s += K(i, l) * block_of(g, k * M + l);
                out.segment<4>(4 * (k * M + i)) = alpha_dot_apply(nu, s);
            }
        }
        return out;
    };
    const auto w = grid.weights();
    return ShellOperator(OperatorLabel::B_prime, sp, w, w, block, apply);
}

ShellOperator make_b0_separable(const OperatorGrid& grid, const SpectralParameter& sp)
{
    auto C = std::make_shared<ShellOperator>(cauchy_sigma(sp, grid.mesh, grid.pv));
    const std::size_t M = grid.M(), N = grid.N();
    auto u = grid.u;
    std::vector<double> vw(M);
    for (std::size_t l = 0; l < M; ++l) vw[l] = grid.v[l] * grid.t.w[l];
    auto block = [C, u, vw, M](std::size_t r, std::size_t c) -> Matrix4c {
        const double s = u[r % M] * vw[c % M];
        if (s == 0.0) return Matrix4c::Zero();
        return s * C->block(r / M, c / M);
    };
    auto apply = [C, u, vw, M, N](const Field& g) {
        Field h = Field::Zero(4 * N);
        for (std::size_t j = 0; j < N; ++j)
            for (std::size_t l = 0; l < M; ++l) h.segment<4>(4 * j) += vw[l] * block_of(g, j * M + l);
        const Field Ch = C->apply(h);
        Field out(4 * N * M);
        for (std::size_t k = 0; k < N; ++k)
            for (std::size_t i = 0; i < M; ++i) out.segment<4>(4 * (k * M + i)) = u[i] * block_of(Ch, k);
        return out;
    };
    const auto w = grid.weights();
    return ShellOperator(OperatorLabel::B_0, sp, w, w, block, apply);
}

ShellOperator sum_operator(OperatorLabel label, const ShellOperator& a, const ShellOperator& b)
{
    auto pa = std::make_shared<ShellOperator>(a), pb = std::make_shared<ShellOperator>(b);
    return ShellOperator(
        label, a.spectral_parameter(), a.row_weights(), a.col_weights(),
        [pa, pb](std::size_t r, std::size_t c) { return Matrix4c(pa->block(r, c) + pb->block(r, c)); },
        [pa, pb](const Field& g) { return Field(pa->apply(g) + pb->apply(g)); });
}

}  // namespace

OperatorFamily assemble_family(const OperatorGrid& grid, const SpectralParameter& sp, double epsilon,
                               const FamilyOptions& opt)
{
    require(epsilon > 0.0 && epsilon <= grid.eta * (1.0 + 1e-12), "assemble_family: need 0 < eps <= eta");
    return OperatorFamily{make_A(grid, sp, epsilon, opt.a_targets), make_B(grid, sp, epsilon, OperatorLabel::B_eps),
                          make_C(grid, sp, epsilon, opt.c_sources)};
}

OperatorLimits assemble_limits(const OperatorGrid& grid, const SpectralParameter& sp, const FamilyOptions& opt)
{
    ShellOperator B0 = make_b0_separable(grid, sp);
    ShellOperator Bp = make_b_prime(grid, sp);
    ShellOperator sum = sum_operator(OperatorLabel::B_0_plus_B_prime, B0, Bp);
    return OperatorLimits{make_A(grid, sp, 0.0, opt.a_targets), B0, Bp, sum, make_C(grid, sp, 0.0, opt.c_sources)};
}

ShellOperator assemble_b0_direct(const OperatorGrid& grid, const SpectralParameter& sp)
{
    return make_B(grid, sp, 0.0, OperatorLabel::B_0);
}

Eigen::MatrixXcd b_prime_kronecker(const OperatorGrid& grid)
{
    const Eigen::MatrixXcd K = sampled_sign_matrix(grid.t.x, grid.t.x, grid.t.w, grid.u, grid.v);
    const std::size_t N = grid.N(), M = grid.M();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(4 * N * M, 4 * N * M);
    for (std::size_t k = 0; k < N; ++k) {
        const Matrix4c a = dirac::alpha_dot(grid.mesh->node(k).nu);
        for (std::size_t i = 0; i < M; ++i)
            for (std::size_t l = 0; l < M; ++l)
                out.block<4, 4>(4 * (k * M + i), 4 * (k * M + l)) = K(i, l) * a;
    }
    return out;
}

bool ConvergenceTable::decays(double factor) const
{
    return min_ratio_A >= factor && min_ratio_B >= factor && min_ratio_C >= factor;
}

ConvergenceTable strong_convergence_experiment(const OperatorGrid& grid, const SpectralParameter& sp, const Field& g,
                                               const AmbientDensity& G, const std::vector<double>& eps,
                                               const FamilyOptions& opt)
{
    require(!eps.empty(), "strong_convergence_experiment: empty epsilon list");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        require(eps[i] > 0.0 && eps[i] <= grid.eta * (1.0 + 1e-12), "epsilon values must lie in (0, eta]");
        if (i) require(eps[i] < eps[i - 1], "epsilon list must be decreasing");
    }
    require(static_cast<std::size_t>(g.size()) == 4 * grid.blocks(), "density size mismatch");

    Field Gq(4 * opt.c_sources.size());
    for (std::size_t q = 0; q < opt.c_sources.size(); ++q) Gq.segment<4>(4 * q) = G(opt.c_sources.x[q]);

    const OperatorLimits lim = assemble_limits(grid, sp, opt);
    const Field b_ref = lim.B0_plus_B_prime.apply(g);
    const Field a_ref = lim.A0.apply(g);
    const Field c_ref = lim.C0.apply(Gq);

    ConvergenceTable tab;
    tab.floor_B = 1e-12 * lim.B0_plus_B_prime.row_norm(b_ref);
    tab.floor_A = 1e-12 * lim.A0.row_norm(a_ref);
    tab.floor_C = 1e-12 * lim.C0.row_norm(c_ref);
    for (double e : eps) {
        const OperatorFamily fam = assemble_family(grid, sp, e, opt);
        ConvergenceRow row;
        row.epsilon = e;
        row.norm_B = fam.B.row_norm(fam.B.apply(g) - b_ref);
        row.norm_A = fam.A.row_norm(fam.A.apply(g) - a_ref);
        row.norm_C = fam.C.row_norm(fam.C.apply(Gq) - c_ref);
        row.floor_flag = row.norm_B <= tab.floor_B || row.norm_A <= tab.floor_A || row.norm_C <= tab.floor_C;
        tab.rows.push_back(row);
    }
    auto min_ratio = [&](auto get, double floor) {
        double m = INFINITY;
        for (std::size_t i = 1; i < tab.rows.size(); ++i) {
            const double a = get(tab.rows[i - 1]), b = get(tab.rows[i]);
            if (a <= floor || b <= floor) break;
            m = std::min(m, a / b);
        }
        return m;
    };
    tab.min_ratio_B = min_ratio([](const ConvergenceRow& r) { return r.norm_B; }, tab.floor_B);
    tab.min_ratio_A = min_ratio([](const ConvergenceRow& r) { return r.norm_A; }, tab.floor_A);
    tab.min_ratio_C = min_ratio([](const ConvergenceRow& r) { return r.norm_C; }, tab.floor_C);
    tab.slope_A = NAN;
    if (tab.rows.size() >= 2 && std::all_of(tab.rows.begin(), tab.rows.end(), [](auto& r) { return r.norm_A > 0; })) {
        std::vector<double> x, y;
        for (const auto& r : tab.rows) {
            x.push_back(r.epsilon);
            y.push_back(r.norm_A);
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double lx = std::log(x[i]), ly = std::log(y[i]);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        tab.slope_A = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    return tab;
}

ShellResolvent::ShellResolvent(const SpectralParameter& sp, std::shared_ptr<const SurfaceMesh> mesh, double lambda,
                               CouplingKind kind, AmbientDensity F, VolumeRule rule)
    : sp_(sp), mesh_(std::move(mesh)), lambda_(lambda), F_(std::move(F)), rule_(rule)
{
    require(std::isfinite(lambda), "lambda must be finite");
    if (kind == CouplingKind::electrostatic && std::abs(std::abs(lambda) - 2.0) < 1e-8)
        throw Error(ErrorCode::near_critical_coupling, "electrostatic coupling too close to +-2");
    const std::size_t N = mesh_->size();
    Field rhs(4 * N);
    for (std::size_t k = 0; k < N; ++k) rhs.segment<4>(4 * k) = volume_potential(sp_, F_, mesh_->node(k).x, rule_);
    if (lambda == 0.0) {
        h_ = rhs;
        return;
    }
    Eigen::MatrixXcd A = lambda * cauchy_sigma(sp_, mesh_).dense();
    for (std::size_t k = 0; k < N; ++k) {
        const Matrix4c d = kind == CouplingKind::electrostatic ? dirac::identity() : dirac::beta();
        A.block<4, 4>(4 * k, 4 * k) += d;
    }
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    const double rc = lu.rcond();
    cond_ = rc > 0 ? 1.0 / rc : INFINITY;
    if (cond_ > 1e10) throw Error(ErrorCode::singular_boundary_inverse, "boundary operator is numerically singular");
    h_ = lu.solve(rhs);
}

Spinor ShellResolvent::operator()(const Vec3& x) const
{
    Spinor out = volume_potential(sp_, F_, x, rule_);
    if (lambda_ != 0.0) out -= lambda_ * layer_potential(sp_, *mesh_, nullptr, h_, x, rule_);
    return out;
}

std::vector<Spinor> shell_resolvent_apply(const SpectralParameter& sp, std::shared_ptr<const SurfaceMesh> mesh,
                                          double lambda, CouplingKind kind, const AmbientDensity& F,
                                          const std::vector<Vec3>& points, const VolumeRule& rule)
{
    ShellResolvent R(sp, std::move(mesh), lambda, kind, F, rule);
    std::vector<Spinor> out;
    out.reserve(points.size());
    for (const auto& x : points) out.push_back(R(x));
    return out;
}

}  // namespace dshell
