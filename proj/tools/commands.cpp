#include "commands.hpp"

#include "dshell/coupling.hpp"
#include "dshell/errors.hpp"
#include "dshell/geometry.hpp"
#include "dshell/potential.hpp"
#include "dshell/shell_ops.hpp"
#include "dshell/sphere_spectral.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numbers>

#ifndef DSHELL_VERSION
#define DSHELL_VERSION "unknown"
#endif

namespace dshell::cli {

using nlohmann::json;

namespace {

constexpr double pi = std::numbers::pi;

// ordered key/value metadata, echoed as "# key: value" under CSVs and as an object in JSON
using Meta = std::vector<std::pair<std::string, std::string>>;

Meta base_meta(const std::string& command)
{
    return {{"command", command}, {"version", DSHELL_VERSION}};
}

std::string join(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
    return s;
}

json meta_json(const Meta& m)
{
    json j = json::object();
    for (const auto& [k, v] : m) j[k] = v;
    return j;
}

// stdout unless a path is given
class Output {
public:
    explicit Output(const std::string& path)
    {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw UsageError("cannot open output file " + path);
        }
    }
    std::ostream& os() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

void write_meta(std::ostream& os, const Meta& m)
{
    for (const auto& [k, v] : m) os << "# " << k << ": " << v << "\n";
}

SpectralParameter spectral(const SpectralArgs& s) { return SpectralParameter(cplx(s.a_re, s.a_im), s.m); }

void add_spectral(Meta& m, const SpectralArgs& s)
{
    m.emplace_back("a", num(s.a_re) + (s.a_im < 0 ? "" : "+") + num(s.a_im) + "i");
    m.emplace_back("m", num(s.m));
}

CouplingKind parse_kind(const std::string& k)
{
    if (k == "electrostatic") return CouplingKind::electrostatic;
    if (k == "scalar") return CouplingKind::scalar;
    throw UsageError("unknown coupling kind: " + k);
}

void require_eps(const std::vector<double>& eps, double eta)
{
    if (eps.empty()) throw UsageError("the epsilon list is empty");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] > 0.0) || eps[i] > eta * (1.0 + 1e-12))
            throw UsageError("epsilon values must lie in (0, eta], got " + num(eps[i]));
        if (i && eps[i] >= eps[i - 1]) throw UsageError("the epsilon list must be decreasing");
    }
}

Spinor reference_spinor()
{
    Spinor c;
    c << 1.0, cplx(0.5, 0.2), cplx(-0.3, 0.1), 0.7;
    return c;
}

PotentialProfile load_profile(const CouplingArgs& a)
{
    if (a.potential == "square") return PotentialProfile::square(a.tau, a.eta);
    if (a.potential == "gaussian") return PotentialProfile::truncated_gaussian(a.tau, a.sigma, a.eta);
    if (a.potential != "table" && a.potential != "piecewise_linear")
        throw UsageError("unknown potential kind: " + a.potential);
    if (a.file.empty()) throw UsageError("--potential " + a.potential + " needs --file");
    std::ifstream in(a.file);
    if (!in) throw UsageError("cannot read " + a.file);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw UsageError(a.file + ": " + e.what());
    }
    if (!j.contains("kind")) j["kind"] = a.potential;
    if (!j.contains("eta")) j["eta"] = a.eta;
    return PotentialProfile::from_json(j);
}

}  // namespace

std::string num(double x)
{
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ---- config ---------------------------------------------------------------

std::string JsonConfig::to_config(const CLI::App* app, bool default_also, bool, std::string) const
{
    json j = json::object();
    for (const CLI::Option* opt : app->get_options()) {
        if (opt->get_lnames().empty() || opt->get_lnames()[0] == "help" || opt->get_lnames()[0] == "config") continue;
        const auto& res = opt->results();
        if (res.empty() && !default_also) continue;
        const std::string key = opt->get_lnames()[0];
        if (res.empty()) {
            j[key] = opt->get_default_str();
        } else if (res.size() == 1) {
            j[key] = res[0];
        } else {
            j[key] = res;
        }
    }
    return j.dump(2) + "\n";
}

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const
{
    json j;
    try {
        j = json::parse(input);
    } catch (const json::exception& e) {
        throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");

    std::vector<CLI::ConfigItem> items;
    auto emit = [&items](std::string key, const json& v) {
        for (char& ch : key)
            if (ch == '_') ch = '-';
        CLI::ConfigItem it;
        it.name = key;
        auto str = [](const json& x) -> std::string {
            if (x.is_string()) return x.get<std::string>();
            if (x.is_boolean()) return x.get<bool>() ? "true" : "false";
            return x.dump();
        };
        if (v.is_array()) {
            for (const auto& x : v) it.inputs.push_back(str(x));
        } else {
            it.inputs.push_back(str(v));
        }
        items.push_back(std::move(it));
    };
    for (const auto& [k, v] : j.items()) {
        if (v.is_object()) {
            // only the section of the running subcommand applies
            if (k == section_)
                for (const auto& [k2, v2] : v.items()) emit(k2, v2);
            continue;
        }
        emit(k, v);
    }
    return items;
}

void apply_config(CLI::App* sub, const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path);
    std::vector<CLI::ConfigItem> items;
    try {
        items = JsonConfig(sub->get_name()).from_config(in);
    } catch (const CLI::Error& e) {
        throw UsageError(path + ": " + e.what());
    }
    for (const auto& it : items) {
        CLI::Option* opt = sub->get_option_no_throw("--" + it.name);
        if (opt == nullptr || it.name == "config") throw UsageError("unknown config key: " + it.name);
        if (opt->count() > 0) continue;  // the command line wins
        try {
            opt->add_result(it.inputs);
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw UsageError("config key " + it.name + ": " + e.what());
        }
    }
}

// ---- coupling -------------------------------------------------------------

int run_coupling(const CouplingArgs& a, const Common& c)
{
    if (a.nodes < 8) throw UsageError("--nodes must be at least 8");
    const PotentialProfile p = load_profile(a);
    const KVOperator k = build_kv(factorize(p), a.nodes);

    json out;
    out["potential"] = p.to_json();
    out["hs_norm"] = k.hs_norm;
    out["nodes"] = a.nodes;
    double worst = 0.0;
    bool agree = true;
    json errors = json::array();

    for (auto kind : {CouplingKind::electrostatic, CouplingKind::scalar}) {
        json r = json::object();
        std::map<std::string, std::pair<double, double>> vals;  // value, own tolerance
        try {
            const auto d = kind == CouplingKind::electrostatic ? lambda_electrostatic(k) : lambda_scalar(k);
            r["direct_solve"] = d.value;
            r["condition_estimate"] = d.condition_estimate;
            vals["direct_solve"] = {d.value, 0.0};
        } catch (const Error& e) {
            errors.push_back({{"kind", to_string(kind)}, {"method", "direct_solve"}, {"code", to_string(e.code())},
                              {"message", e.what()}});
        }
        if (k.hs_norm < 1.0) {
            const auto n = lambda_neumann(k, kind, a.neumann_terms);
            r["neumann"] = n.value;
            r["neumann_terms"] = n.terms;
            r["neumann_error_bound"] = n.error_bound;
            vals["neumann"] = {n.value, n.error_bound};
        }
        try {
            if (auto cf = lambda_closed_form(p, kind)) {
                r["closed_form"] = cf->value;
                vals["closed_form"] = {cf->value, 0.0};
            }
        } catch (const Error& e) {
            errors.push_back({{"kind", to_string(kind)}, {"method", "closed_form"}, {"code", to_string(e.code())},
                              {"message", e.what()}});
        }
        // pairwise agreement; the Neumann value carries its truncation bound
        for (auto i = vals.begin(); i != vals.end(); ++i)
            for (auto j = std::next(i); j != vals.end(); ++j) {
                const double d = std::abs(i->second.first - j->second.first);
                const double allowed = a.tol + i->second.second + j->second.second;
                worst = std::max(worst, d);
                if (d > allowed) {
                    agree = false;
                    errors.push_back({{"kind", to_string(kind)},
                                      {"code", "methods_disagree"},
                                      {"methods", {i->first, j->first}},
                                      {"difference", d},
                                      {"allowed", allowed}});
                }
            }
        if (vals.empty()) agree = false;
        out[kind == CouplingKind::electrostatic ? "lambda_e" : "lambda_s"] = r;
    }
    out["max_disagreement"] = worst;
    out["agree"] = agree && errors.empty();
    if (!errors.empty()) out["errors"] = errors;

    Meta m = base_meta("coupling");
    m.emplace_back("potential", a.potential);
    m.emplace_back("tau", num(a.tau));
    m.emplace_back("eta", num(a.eta));
    if (a.potential == "gaussian") m.emplace_back("sigma", num(a.sigma));
    if (!a.file.empty()) m.emplace_back("file", a.file);
    m.emplace_back("nodes", std::to_string(a.nodes));
    m.emplace_back("neumann_terms", std::to_string(a.neumann_terms));
    m.emplace_back("tol", num(a.tol));
    m.emplace_back("kv_scheme", "product_integration");
    out["metadata"] = meta_json(m);

    Output o(c.out);
    o.os() << out.dump(2) << "\n";
    if (!out["agree"].get<bool>()) {
        std::cerr << json{{"error", errors}}.dump() << "\n";
        return exit_failure;
    }
    return exit_ok;
}

// ---- jump-check -----------------------------------------------------------

int run_jump_check(const JumpArgs& a, const Common& c)
{
    const SpectralParameter sp = spectral(a.sp);
    auto mesh = std::make_shared<const SurfaceMesh>(SurfaceMesh::with_nodes(Surface::sphere(a.R), a.N));
    const Spinor s = reference_spinor();
    Field g(4 * mesh->size());
    for (std::size_t k = 0; k < mesh->size(); ++k) {
        const auto& n = mesh->node(k);
        if (a.density == "constant")
            g.segment<4>(4 * k) = s;
        else if (a.density == "linear")
            g.segment<4>(4 * k) = (n.x.z() / a.R) * s;
        else if (a.density == "eigen")
            g.segment<4>(4 * k) = 0.5 * (dirac::identity() + dirac::alpha_dot(n.nu)) * s;
        else
            throw UsageError("unknown density: " + a.density + " (constant, linear, eigen)");
    }
    const auto rep = plemelj_check(sp, mesh, g, a.offsets);
    const bool ok = rep.max_rel_error() <= a.tol && rep.rel_error_jump <= a.tol && rep.rel_error_sum <= a.tol;

    Meta m = base_meta("jump-check");
    add_spectral(m, a.sp);
    m.emplace_back("N", std::to_string(a.N));
    m.emplace_back("R", num(a.R));
    m.emplace_back("density", a.density);
    m.emplace_back("mesh", mesh->description());
    m.emplace_back("pv_rule", "sphere_affine");
    m.emplace_back("tol", num(a.tol));
    json out{{"offsets", rep.offsets},
             {"rel_error_interior", rep.rel_error_interior},
             {"rel_error_exterior", rep.rel_error_exterior},
             {"rel_error_jump", rep.rel_error_jump},
             {"rel_error_sum", rep.rel_error_sum},
             {"max_rel_error", rep.max_rel_error()},
             {"passed", ok},
             {"metadata", meta_json(m)}};
    Output o(c.out);
    o.os() << out.dump(2) << "\n";
    return ok ? exit_ok : exit_failure;
}

// ---- geometry-audit -------------------------------------------------------

int run_geometry_audit(const GeometryArgs& a, const Common& c)
{
    Surface s = Surface::sphere(1.0);
    if (a.surface == "sphere") {
        s = Surface::sphere(a.R);
    } else if (a.surface == "ellipsoid") {
        if (a.axes.size() != 3) throw UsageError("--axes needs three values");
        s = Surface::ellipsoid(a.axes[0], a.axes[1], a.axes[2]);
    } else {
        throw UsageError("unknown surface: " + a.surface);
    }
    const double eta = a.eta > 0.0 ? a.eta : s.default_eta();
    if (!(a.eps > 0.0) || a.eps > eta) throw UsageError("--eps must lie in (0, eta]");
    auto mesh = std::make_shared<const SurfaceMesh>(SurfaceMesh::with_nodes(s, a.N));
    const TubularMap tm(mesh, eta);

    json out;
    const double vol = coarea_integrate(tm, [](const Vec3&) { return 1.0; }, a.eps, a.t_nodes);
    double exact;
    if (s.is_sphere()) {
        exact = 4.0 * pi / 3.0 * (std::pow(a.R + a.eps, 3) - std::pow(a.R - a.eps, 3));
    } else {
        // Steiner: det(1 - tW) = 1 - tH + t^2 K and the Gauss curvature integrates to 4 pi
        exact = 2.0 * a.eps * s.area() + 8.0 * pi * std::pow(a.eps, 3) / 3.0;
    }
    const double vol_err = std::abs(vol - exact) / exact;
    out["coarea"] = {{"volume", vol}, {"exact", exact}, {"rel_error", vol_err}};
    bool ok = vol_err <= a.tol;
    if (s.is_sphere()) {
        const double mom = coarea_integrate(tm, [](const Vec3& x) { return x.squaredNorm(); }, a.eps, a.t_nodes);
        const double mex = 4.0 * pi * (std::pow(a.R + a.eps, 5) - std::pow(a.R - a.eps, 5)) / 5.0;
        out["coarea"]["r2_moment"] = mom;
        out["coarea"]["r2_moment_exact"] = mex;
        out["coarea"]["r2_moment_rel_error"] = std::abs(mom - mex) / mex;
        ok = ok && std::abs(mom - mex) / mex <= a.tol;
    }

    const auto inj = tm.check_injective({-eta, -0.5 * eta, 0.0, 0.5 * eta, eta});
    out["injectivity"] = {{"injective", inj.injective}, {"min_distance", inj.min_distance}, {"min_det", inj.min_det}};
    out["projection_error"] = std::max(tm.projection_error(-eta), tm.projection_error(eta));
    ok = ok && inj.injective;

    json growth = json::array();
    for (double t : {-eta, 0.0, eta}) {
        const auto rep = measure_growth_audit(tm, t, a.radii, a.centers);
        json rows = json::array();
        for (const auto& r : rep.rows) {
            json row{{"radius", r.radius}, {"computed", r.computed}};
            if (r.computed) {
                row["min_ratio"] = r.min_ratio;
                row["max_ratio"] = r.max_ratio;
            }
            if (!std::isnan(r.exact_ratio)) row["exact_ratio"] = r.exact_ratio;
            rows.push_back(row);
        }
        growth.push_back({{"t", t}, {"resolution", rep.resolution}, {"centers", rep.centers}, {"rows", rows}});
    }
    out["growth"] = growth;
    out["passed"] = ok;

    if (!a.mesh_csv.empty()) {
        std::ofstream f(a.mesh_csv);
        if (!f) throw UsageError("cannot open " + a.mesh_csv);
        mesh->write_csv(f);
    }

    Meta m = base_meta("geometry-audit");
    m.emplace_back("surface", a.surface);
    m.emplace_back("N", std::to_string(mesh->size()));
    m.emplace_back("mesh", mesh->description());
    m.emplace_back("eta", num(eta));
    m.emplace_back("eps", num(a.eps));
    m.emplace_back("t_nodes", std::to_string(a.t_nodes));
    m.emplace_back("radii", join(a.radii));
    m.emplace_back("tol", num(a.tol));
    out["metadata"] = meta_json(m);
    Output o(c.out);
    o.os() << out.dump(2) << "\n";
    return ok ? exit_ok : exit_failure;
}

// ---- converge -------------------------------------------------------------

int run_converge(const ConvergeArgs& a, const Common& c)
{
    require_eps(a.eps, a.eta);
    const SpectralParameter sp = spectral(a.sp);
    auto mesh = std::make_shared<const SurfaceMesh>(SurfaceMesh::with_nodes(Surface::sphere(a.R), a.N));
    const auto f = factorize(PotentialProfile::square(a.tau, a.eta));
    const OperatorGrid grid = make_operator_grid(mesh, a.M, f, a.eta);
    const FamilyOptions opt = default_family_options(grid);

    // smooth separable density and an ambient bump inside the shell
    const Spinor s = reference_spinor();
    Field g(4 * grid.blocks());
    for (std::size_t k = 0; k < grid.N(); ++k) {
        const Vec3 y = mesh->node(k).x / a.R;
        for (std::size_t i = 0; i < grid.M(); ++i)
            g.segment<4>(4 * grid.index(k, i)) =
                (1.0 + 0.5 * y.z() + 0.3 * y.x() * y.y()) * (1.0 + 0.8 * grid.t.x[i]) * s;
    }
    const double rb = std::max(0.1, a.R - a.eta - 0.35);
    const auto G = AmbientDensity::smooth_bump(Vec3::Zero(), rb, s);
    const auto tab = strong_convergence_experiment(grid, sp, g, G, a.eps, opt);
    const bool ok = tab.min_ratio_A > a.min_ratio && tab.min_ratio_B > a.min_ratio && tab.min_ratio_C > a.min_ratio;

    Output o(c.out);
    auto& os = o.os();
    os << "epsilon,norm_B,norm_A,norm_C,floor_flag\n";
    for (const auto& r : tab.rows)
        os << num(r.epsilon) << "," << num(r.norm_B) << "," << num(r.norm_A) << "," << num(r.norm_C) << ","
           << (r.floor_flag ? 1 : 0) << "\n";
    Meta m = base_meta("converge");
    add_spectral(m, a.sp);
    m.emplace_back("N", std::to_string(grid.N()));
    m.emplace_back("M", std::to_string(grid.M()));
    m.emplace_back("R", num(a.R));
    m.emplace_back("potential", "square tau=" + num(a.tau) + " eta=" + num(a.eta));
    m.emplace_back("mesh", mesh->description());
    m.emplace_back("density_g", "(1 + 0.5 y_z + 0.3 y_x y_y)(1 + 0.8 t) c");
    m.emplace_back("density_G", "smooth bump radius " + num(rb));
    m.emplace_back("floor_B", num(tab.floor_B));
    m.emplace_back("floor_A", num(tab.floor_A));
    m.emplace_back("floor_C", num(tab.floor_C));
    m.emplace_back("min_ratio_B", num(tab.min_ratio_B));
    m.emplace_back("min_ratio_A", num(tab.min_ratio_A));
    m.emplace_back("min_ratio_C", num(tab.min_ratio_C));
    m.emplace_back("slope_A", num(tab.slope_A));
    m.emplace_back("required_ratio", num(a.min_ratio));
    m.emplace_back("decaying", ok ? "true" : "false");
    write_meta(os, m);
    return ok ? exit_ok : exit_failure;
}

// ---- spectrum -------------------------------------------------------------

int run_spectrum(const SpectrumArgs& a, const Common& c)
{
    if (a.kappa.empty()) throw UsageError("the kappa list is empty");
    for (int k : a.kappa)
        if (k == 0) throw UsageError("kappa must be nonzero");
    const CouplingKind kind = parse_kind(a.kind);
    SolverOptions opt;
    if (a.basis == "integrated")
        opt.basis = ChannelBasis::integrated;
    else if (a.basis != "closed_form")
        throw UsageError("unknown basis: " + a.basis);
    const auto tm = shell_matching(a.lambda, kind);

    Output o(c.out);
    auto& os = o.os();
    os << "kappa,eigenvalue,residual,bracket_lo,bracket_hi\n";
    int count = 0;
    for (int k : a.kappa) {
        ChannelSystem ch;
        ch.kappa = k;
        ch.mass = a.m;
        ch.radius = a.R;
        const auto res = find_gap_eigenvalues(ch, tm, gap_window(a.m, a.steps), opt);
        for (std::size_t i = 0; i < res.eigenvalues.size(); ++i, ++count)
            os << k << "," << num(res.eigenvalues[i]) << "," << num(res.residuals[i]) << ","
               << num(res.brackets[i].first) << "," << num(res.brackets[i].second) << "\n";
    }
    Meta m = base_meta("spectrum");
    m.emplace_back("kind", a.kind);
    m.emplace_back("lambda", num(a.lambda));
    m.emplace_back("m", num(a.m));
    m.emplace_back("R", num(a.R));
    std::string ks;
    for (std::size_t i = 0; i < a.kappa.size(); ++i) ks += (i ? "," : "") + std::to_string(a.kappa[i]);
    m.emplace_back("kappa", ks);
    m.emplace_back("scan_steps", std::to_string(a.steps));
    m.emplace_back("basis", a.basis);
    m.emplace_back("eigenvalues_found", std::to_string(count));
    write_meta(os, m);
    return exit_ok;
}

// ---- klein ----------------------------------------------------------------

int run_klein(const KleinArgs& a, const Common& c)
{
    require_eps(a.eps, a.eta);
    if (a.kappa == 0) throw UsageError("kappa must be nonzero");
    const CouplingKind kind = parse_kind(a.kind);
    ChannelSystem ch;
    ch.kappa = a.kappa;
    ch.mass = a.m;
    ch.radius = a.R;
    const auto st = klein_convergence_study(PotentialProfile::square(a.tau, a.eta), ch, a.eps, kind, {}, a.steps);

    auto opt_num = [](const std::optional<double>& x) { return x ? num(*x) : std::string(); };
    auto opt_json = [](const std::optional<double>& x) { return x ? json(*x) : json(nullptr); };

    Meta m = base_meta("klein");
    m.emplace_back("kind", a.kind);
    m.emplace_back("kappa", std::to_string(a.kappa));
    m.emplace_back("tau", num(a.tau));
    m.emplace_back("eta", num(a.eta));
    m.emplace_back("m", num(a.m));
    m.emplace_back("R", num(a.R));
    m.emplace_back("eps", join(a.eps));
    m.emplace_back("scan_steps", std::to_string(a.steps));

    json summary{{"kind", a.kind},
                 {"kappa", a.kappa},
                 {"tau_eta", st.tau_eta},
                 {"lambda_nonlinear", st.lambda_nonlinear},
                 {"lambda_linear", st.lambda_linear},
                 {"a_nonlinear", opt_json(st.a_nonlinear)},
                 {"a_linear", opt_json(st.a_linear)},
                 {"slope", std::isnan(st.slope) ? json(nullptr) : json(st.slope)},
                 {"all_found", st.all_found},
                 {"monotone", st.monotone},
                 {"bounded_away", st.bounded_away},
                 {"passed", st.passed()},
                 {"metadata", meta_json(m)}};

    Output o(c.out);
    auto& os = o.os();
    os << "epsilon,a_eps,a_nonlinear,a_linear,gap,err_nonlinear\n";
    for (const auto& r : st.rows) {
        const bool have = r.a_eps.has_value();
        os << num(r.epsilon) << "," << opt_num(r.a_eps) << "," << opt_num(st.a_nonlinear) << ","
           << opt_num(st.a_linear) << "," << (have && st.a_linear ? num(r.gap_linear) : "") << ","
           << (have && st.a_nonlinear ? num(r.err_nonlinear) : "") << "\n";
    }
    if (a.summary.empty()) {
        m.emplace_back("summary", summary.dump());
    } else {
        std::ofstream f(a.summary);
        if (!f) throw UsageError("cannot open " + a.summary);
        f << summary.dump(2) << "\n";
    }
    write_meta(os, m);
    return st.passed() ? exit_ok : exit_failure;
}

}  // namespace dshell::cli
