// Acceptance run: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion ...]   (no arguments runs all nine)

#include "dshell/coupling.hpp"
#include "dshell/geometry.hpp"
#include "dshell/potential.hpp"
#include "dshell/shell_ops.hpp"
#include "dshell/sphere_spectral.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>

using namespace dshell;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... xs)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, xs...);
    return buf;
}

Spinor ref_spinor()
{
    Spinor c;
    c << 1.0, cplx(0.5, 0.2), cplx(-0.3, 0.1), 0.7;
    return c;
}

std::shared_ptr<const SurfaceMesh> sphere_mesh(int N)
{
    return std::make_shared<const SurfaceMesh>(SurfaceMesh::with_nodes(Surface::sphere(1.0), N));
}

double coupling_value(const KVOperator& k, CouplingKind kind)
{
    return kind == CouplingKind::electrostatic ? lambda_electrostatic(k).value : lambda_scalar(k).value;
}

// ---- 1: closed forms at n = 128
Outcome klein_closed_forms()
{
    double worst = 0.0;
    for (double te : {0.1, 0.5, 1.0, pi / 2 - 0.1}) {
        const double eta = 0.5;
        const auto k = build_kv(factorize(PotentialProfile::square(te / eta, eta)), 128);
        worst = std::max(worst, std::abs(lambda_electrostatic(k).value - 2 * std::tan(te / 2)));
        worst = std::max(worst, std::abs(lambda_scalar(k).value - 2 * std::tanh(te / 2)));
    }
    return {worst <= 1e-9, fmt("max |lambda - closed form| = %.2e over tau*eta in {0.1, 0.5, 1, pi/2-0.1}", worst)};
}

// ---- 2: direct / Neumann / closed form
Outcome method_triangle()
{
    std::vector<PotentialProfile> ps;
    for (double te : {0.05, 0.2, 0.35, 0.5}) ps.push_back(PotentialProfile::square(te / 0.3, 0.3));
    {
        auto g = PotentialProfile::truncated_gaussian(1.0, 0.15, 0.4);
        ps.push_back(PotentialProfile::truncated_gaussian(0.5 / g.l1_norm(), 0.15, 0.4));
        ps.push_back(PotentialProfile::truncated_gaussian(-0.3 / g.l1_norm(), 0.15, 0.4));
    }
    ps.push_back(PotentialProfile::piecewise_linear({-0.5, -0.2, 0.1, 0.5}, {0.0, 0.9, -0.4, 0.0}, 0.5));

    double worst = 0.0, max_l1 = 0.0;
    int pairs = 0;
    for (const auto& p : ps) {
        if (p.l1_norm() > 0.5 + 1e-12) continue;
        max_l1 = std::max(max_l1, p.l1_norm());
        const auto k = build_kv(factorize(p), 128);
        for (auto kind : {CouplingKind::electrostatic, CouplingKind::scalar}) {
            std::vector<double> v{coupling_value(k, kind), lambda_neumann(k, kind, 20).value};
            if (auto cf = lambda_closed_form(p, kind)) v.push_back(cf->value);
            for (std::size_t i = 0; i < v.size(); ++i)
                for (std::size_t j = i + 1; j < v.size(); ++j, ++pairs) worst = std::max(worst, std::abs(v[i] - v[j]));
        }
    }
    return {worst <= 1e-9 && pairs > 0,
            fmt("max pairwise difference %.2e over %d pairs, max ||V||_1 = %.3f", worst, pairs, max_l1)};
}

// ---- 3: HS identity and contraction
Outcome hs_identity()
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    double worst = 0.0, worst_hs = 0.0;
    bool contract = true;
    int small = 0;
    for (int n = 0; n < 40; ++n) {
        const double eta = 0.2 + 0.8 * std::abs(ud(rng));
        const int segs = 3 + n % 5;
        std::vector<double> ts, vs;
        for (int i = 0; i <= segs; ++i) {
            ts.push_back(-eta + 2 * eta * i / segs);
            vs.push_back(i == 0 || i == segs ? 0.0 : ud(rng));
        }
        // scale to a random delta in (0, 1/2)
        auto p = PotentialProfile::piecewise_linear(ts, vs, eta);
        const double delta = 0.05 + 0.44 * std::abs(ud(rng));
        const double s = delta / (eta * p.sup_norm());
        for (double& v : vs) v *= s;
        p = PotentialProfile::piecewise_linear(ts, vs, eta);

        const auto k = build_kv(factorize(p), 128);
        worst = std::max(worst, std::abs(k.hs_norm - 0.5 * p.l1_norm()));
        if (is_delta_eta_small(p, 0.5)) {
            ++small;
            worst_hs = std::max(worst_hs, k.hs_norm);
            // contraction of the discrete operator: its HS norm bounds the spectral norm
            contract = contract && k.hs_norm < 0.5 && k.discrete_hs < 1.0;
        }
    }
    for (double te : {0.1, 0.5, 0.9}) {
        const auto p = PotentialProfile::square(te / 0.25, 0.25);
        worst = std::max(worst, std::abs(build_kv(factorize(p), 128).hs_norm - 0.5 * p.l1_norm()));
    }
    return {worst <= 1e-10 && contract && small == 40,
            fmt("max |HS - ||V||_1/2| = %.2e; %d (delta,eta)-small profiles, max HS = %.3f < 1/2", worst, small,
                worst_hs)};
}

// ---- 4: Plemelj jump
Outcome plemelj()
{
    const SpectralParameter sp(cplx(0, 1), 1.0);
    const Spinor c = ref_spinor();
    using Dens = std::function<Spinor(const SurfaceNode&)>;
    const std::vector<std::pair<std::string, Dens>> dens{
        {"constant", [&](const SurfaceNode&) { return Spinor(c); }},
        {"linear", [&](const SurfaceNode& n) { return Spinor((1.0 + 0.5 * n.x.z() - 0.3 * n.x.x()) * c); }},
        {"exp(y/2)(x^2 - z)", [&](const SurfaceNode& n) {
             return Spinor(std::exp(0.5 * n.x.y()) * (n.x.x() * n.x.x() - n.x.z()) * c);
         }}};
    bool ok = true;
    std::string d;
    for (const auto& [name, f] : dens) {
        double e[2];
        int i = 0;
        for (int N : {512, 2048}) {
            auto mesh = sphere_mesh(N);
            Field g(4 * mesh->size());
            for (std::size_t k = 0; k < mesh->size(); ++k) g.segment<4>(4 * k) = f(mesh->node(k));
            e[i++] = plemelj_check(sp, mesh, g).max_rel_error();
        }
        ok = ok && e[0] <= 5e-2 && e[1] < e[0];
        d += fmt("%s%s %.2e -> %.2e", d.empty() ? "" : "; ", name.c_str(), e[0], e[1]);
    }
    return {ok, d + " (N = 512 -> 2048)"};
}

// ---- 5: coarea
Outcome coarea()
{
    TubularMap tm(sphere_mesh(2048), 0.25);
    const double vol = coarea_integrate(tm, [](const Vec3&) { return 1.0; }, 0.1, 16);
    const double vex = 4 * pi / 3 * (std::pow(1.1, 3) - std::pow(0.9, 3));
    const double mom = coarea_integrate(tm, [](const Vec3& x) { return x.squaredNorm(); }, 0.1, 16);
    const double mex = 4 * pi * (std::pow(1.1, 5) - std::pow(0.9, 5)) / 5;
    const double ev = std::abs(vol - vex) / vex, em = std::abs(mom - mex) / mex;
    return {ev <= 1e-6 && em <= 1e-6, fmt("volume rel err %.2e, r^2 moment rel err %.2e", ev, em)};
}

// ---- 6: transfer vs rotation
Outcome transfer()
{
    ChannelSystem ch;
    ch.kappa = -1;
    ch.energy = -0.3;
    const std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4};
    bool ok = true;
    std::string d;
    for (double te : {0.3, 0.8, 1.2}) {
        const auto p = PotentialProfile::square(te, 1.0);
        const double match = (shell_matching(2 * std::tan(te / 2), CouplingKind::electrostatic).matrix - rotation(te)).norm();
        std::vector<double> err;
        double C = 0.0;
        for (double e : eps) {
            err.push_back((transfer_through_squeezed(ch, squeeze(p, e), CouplingKind::electrostatic) - rotation(te)).norm());
            C = std::max(C, err.back() / e);
        }
        const double slope = loglog_slope(eps, err);
        ok = ok && slope >= 0.8 && match <= 1e-12;
        d += fmt("%stau*eta=%.1f slope %.3f C %.3f match %.1e", d.empty() ? "" : "; ", te, slope, C, match);
    }
    return {ok, d};
}

// ---- 7: spectral witness
Outcome spectral_witness()
{
    const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
    auto run = [&](int kappa) {
        ChannelSystem ch;
        ch.kappa = kappa;
        return klein_convergence_study(PotentialProfile::square(1.0, 1.0), ch, eps, CouplingKind::electrostatic);
    };
    auto criterion = [](const KleinStudy& st) {
        if (!st.all_found || !st.monotone) return false;
        if (!st.a_linear) return true;
        return st.rows.back().gap_linear > 5 * st.rows.back().err_nonlinear;
    };
    auto describe = [&](const KleinStudy& st) {
        std::string s = fmt("kappa=%+d a*(2tan 0.5)=", st.channel.kappa);
        s += st.a_nonlinear ? fmt("%.6f", *st.a_nonlinear) : std::string("none");
        s += " a*(1.0)=";
        s += st.a_linear ? fmt("%.6f", *st.a_linear) : std::string("none");
        s += " a(eps)=[";
        for (std::size_t i = 0; i < st.rows.size(); ++i)
            s += (i ? " " : "") + (st.rows[i].a_eps ? fmt("%.5f", *st.rows[i].a_eps) : std::string("none"));
        s += "]";
        if (st.all_found && st.a_linear && st.a_nonlinear)
            s += fmt(" final err %.4f gap %.4f ratio %.2f", st.rows.back().err_nonlinear, st.rows.back().gap_linear,
                     st.rows.back().gap_linear / st.rows.back().err_nonlinear);
        return s;
    };
    const auto main = run(-1);
    const auto supp = run(1);
    return {criterion(main), describe(main) + " | supplementary " + describe(supp)};
}

// ---- 8: strong convergence tables
Outcome strong_convergence()
{
    const double eta = 0.25;
    auto mesh = sphere_mesh(256);
    const auto f = factorize(PotentialProfile::square(1.0, eta));
    const auto grid = make_operator_grid(mesh, 8, f, eta);
    const Spinor c = ref_spinor();
    Field g(4 * grid.blocks());
    for (std::size_t k = 0; k < grid.N(); ++k) {
        const Vec3& y = mesh->node(k).x;
        for (std::size_t i = 0; i < grid.M(); ++i)
            g.segment<4>(4 * grid.index(k, i)) = (1.0 + 0.5 * y.z() + 0.3 * y.x() * y.y()) * (1.0 + 0.8 * grid.t.x[i]) * c;
    }
    std::vector<double> eps;
    for (int j = 0; j <= 6; ++j) eps.push_back(eta / (1 << j));
    const auto tab = strong_convergence_experiment(grid, SpectralParameter(cplx(0, 1), 1.0), g,
                                                   AmbientDensity::smooth_bump(Vec3::Zero(), 0.4, c), eps,
                                                   default_family_options(grid));
    int floored = 0;
    for (const auto& r : tab.rows) floored += r.floor_flag;
    const bool ok = tab.decays(1.5);
    return {ok, fmt("min ratio per halving B %.3f A %.3f C %.3f (need 1.5); slope_A %.3f; %d floored rows; "
                    "floors %.1e/%.1e/%.1e",
                    tab.min_ratio_B, tab.min_ratio_A, tab.min_ratio_C, tab.slope_A, floored, tab.floor_B, tab.floor_A,
                    tab.floor_C)};
}

// ---- 9: uniform bound on B_eps
Outcome uniform_bound()
{
    const double eta = 0.25, delta = 0.05;
    const auto p = PotentialProfile::square(2 * delta / eta, eta);  // V = delta / eta
    const bool small = is_delta_eta_small(p, delta);
    const auto f = factorize(p);
    const auto grid = make_operator_grid(sphere_mesh(128), 8, f, eta);
    const auto opt = default_family_options(grid);
    const SpectralParameter sp(cplx(0, 1), 1.0);
    double lo = INFINITY, hi = 0.0;
    for (int j = 0; j <= 6; ++j) {
        const auto B = assemble_family(grid, sp, eta / (1 << j), opt).B;
        B.dense_ref();  // 4096 unknowns, inside the dense cap
        const double n = B.norm();
        lo = std::min(lo, n);
        hi = std::max(hi, n);
    }
    return {small && hi <= 1.0 / 3.0, fmt("||B_eps|| in [%.4f, %.4f] over eps = eta ... eta/64 (bound 1/3)", lo, hi)};
}

}  // namespace

int main(int argc, char** argv)
{
    const std::map<int, std::pair<const char*, std::pair<double, Outcome (*)()>>> crit{
        {1, {"Klein closed forms", {1.0, klein_closed_forms}}},
        {2, {"method triangle", {1.0, method_triangle}}},
        {3, {"Hilbert-Schmidt identity", {1.0, hs_identity}}},
        {4, {"Plemelj jump", {120.0, plemelj}}},
        {5, {"coarea exactness", {10.0, coarea}}},
        {6, {"transfer/matching identity", {5.0, transfer}}},
        {7, {"spectral witness", {60.0, spectral_witness}}},
        {8, {"strong-convergence tables", {300.0, strong_convergence}}},
        {9, {"uniform norm bound", {120.0, uniform_bound}}},
    };
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
    if (which.empty())
        for (const auto& [k, v] : crit) which.push_back(k);

    int failed = 0;
    for (int k : which) {
        const auto it = crit.find(k);
        if (it == crit.end()) {
            std::printf("criterion %d: unknown\n", k);
            return 2;
        }
        const auto& [name, entry] = it->second;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = entry.second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool pass = o.pass && sec <= entry.first;
        failed += !pass;
        std::printf("criterion %d %s: %s | %s | %.2f s (limit %.0f s)\n", k, pass ? "PASS" : "FAIL", name,
                    o.detail.c_str(), sec, entry.first);
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
