#include "commands.hpp"

#include "dshell/errors.hpp"

#include <iostream>

#ifndef DSHELL_VERSION
#define DSHELL_VERSION "unknown"
#endif

using namespace dshell::cli;

namespace {

CLI::App* command(CLI::App& app, const std::string& name, const std::string& help, Common& common)
{
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", common.config, "JSON file with option values; flags on the command line win");
    sub->add_option("--out", common.out, "output file (default stdout)");
    return sub;
}

void spectral_options(CLI::App* sub, SpectralArgs& s)
{
    sub->add_option("--a-re", s.a_re, "real part of the spectral parameter")->capture_default_str();
    sub->add_option("--a-im", s.a_im, "imaginary part of the spectral parameter")->capture_default_str();
    sub->add_option("--m", s.m, "mass")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Dirac operators with squeezed shell potentials"};
    app.set_version_flag("--version", DSHELL_VERSION);
    app.require_subcommand(1);

    Common common;
    CouplingArgs ca;
    JumpArgs ja;
    GeometryArgs ga;
    ConvergeArgs va;
    SpectrumArgs sa;
    KleinArgs ka;

    auto* coupling = command(app, "coupling", "renormalized coupling constants by three methods", common);
    coupling->add_option("--potential", ca.potential, "square, gaussian, table or piecewise_linear")
        ->capture_default_str();
    coupling->add_option("--tau", ca.tau, "amplitude")->capture_default_str();
    coupling->add_option("--eta", ca.eta, "half-width of the support")->capture_default_str();
    coupling->add_option("--sigma", ca.sigma, "gaussian width")->capture_default_str();
    coupling->add_option("--file", ca.file, "JSON profile (table / piecewise_linear)");
    coupling->add_option("--nodes", ca.nodes, "K_V discretization nodes")->capture_default_str();
    coupling->add_option("--neumann-terms", ca.neumann_terms, "Neumann series length")->capture_default_str();
    coupling->add_option("--tol", ca.tol, "agreement tolerance")->capture_default_str();

    auto* jump = command(app, "jump-check", "Plemelj jump relations on a sphere", common);
    spectral_options(jump, ja.sp);
    jump->add_option("--N", ja.N, "mesh nodes")->capture_default_str();
    jump->add_option("--R", ja.R, "sphere radius")->capture_default_str();
    jump->add_option("--density", ja.density, "constant, linear or eigen")->capture_default_str();
    jump->add_option("--offsets", ja.offsets, "normal offsets (default from the mesh resolution)")->delimiter(',');
    jump->add_option("--tol", ja.tol, "relative error tolerance")->capture_default_str();

    auto* geo = command(app, "geometry-audit", "tubular neighbourhood and measure audit", common);
    geo->add_option("--surface", ga.surface, "sphere or ellipsoid")->capture_default_str();
    geo->add_option("--R", ga.R, "sphere radius")->capture_default_str();
    geo->add_option("--axes", ga.axes, "ellipsoid semi-axes a,b,c")->delimiter(',')->capture_default_str();
    geo->add_option("--N", ga.N, "mesh nodes")->capture_default_str();
    geo->add_option("--t-nodes", ga.t_nodes, "Gauss nodes in the normal direction")->capture_default_str();
    geo->add_option("--eps", ga.eps, "coarea half-thickness")->capture_default_str();
    geo->add_option("--eta", ga.eta, "tubular half-width (0: surface default)")->capture_default_str();
    geo->add_option("--radii", ga.radii, "growth audit radii")->delimiter(',')->capture_default_str();
    geo->add_option("--centers", ga.centers, "growth audit centres")->capture_default_str();
    geo->add_option("--mesh-csv", ga.mesh_csv, "write the mesh as CSV");
    geo->add_option("--tol", ga.tol, "coarea relative tolerance")->capture_default_str();

    auto* conv = command(app, "converge", "strong convergence of A, B, C", common);
    spectral_options(conv, va.sp);
    conv->add_option("--N", va.N, "mesh nodes")->capture_default_str();
    conv->add_option("--M", va.M, "Gauss nodes in t")->capture_default_str();
    conv->add_option("--tau", va.tau, "square well amplitude")->capture_default_str();
    conv->add_option("--eta", va.eta, "square well half-width")->capture_default_str();
    conv->add_option("--R", va.R, "sphere radius")->capture_default_str();
    conv->add_option("--eps", va.eps, "decreasing epsilon values")->delimiter(',');
    conv->add_option("--min-ratio", va.min_ratio, "required consecutive decay ratio")->capture_default_str();

    auto* spectrum = command(app, "spectrum", "gap eigenvalues of the sphere shell", common);
    spectrum->add_option("--kappa", sa.kappa, "spin-orbit channels")->delimiter(',')->capture_default_str();
    spectrum->add_option("--lambda", sa.lambda, "shell coupling")->capture_default_str();
    spectrum->add_option("--kind", sa.kind, "electrostatic or scalar")->capture_default_str();
    spectrum->add_option("--m", sa.m, "mass")->capture_default_str();
    spectrum->add_option("--R", sa.R, "sphere radius")->capture_default_str();
    spectrum->add_option("--steps", sa.steps, "scan steps")->capture_default_str();
    spectrum->add_option("--basis", sa.basis, "closed_form or integrated")->capture_default_str();

    auto* klein = command(app, "klein", "squeezed eigenvalues against both limits", common);
    klein->add_option("--tau", ka.tau, "square well amplitude")->capture_default_str();
    klein->add_option("--eta", ka.eta, "square well half-width")->capture_default_str();
    klein->add_option("--eps", ka.eps, "decreasing epsilon values")->delimiter(',');
    klein->add_option("--kappa", ka.kappa, "spin-orbit channel")->capture_default_str();
    klein->add_option("--kind", ka.kind, "electrostatic or scalar")->capture_default_str();
    klein->add_option("--m", ka.m, "mass")->capture_default_str();
    klein->add_option("--R", ka.R, "sphere radius")->capture_default_str();
    klein->add_option("--steps", ka.steps, "scan steps")->capture_default_str();
    klein->add_option("--summary", ka.summary, "write the JSON summary here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    try {
        if (!common.config.empty()) apply_config(app.get_subcommands().front(), common.config);
        if (*coupling) return run_coupling(ca, common);
        if (*jump) return run_jump_check(ja, common);
        if (*geo) return run_geometry_audit(ga, common);
        if (*conv) return run_converge(va, common);
        if (*spectrum) return run_spectrum(sa, common);
        if (*klein) return run_klein(ka, common);
    } catch (const UsageError& e) {
        std::cerr << nlohmann::json{{"error", {{"code", "usage"}, {"message", e.what()}}}}.dump() << "\n";
        return exit_usage;
    } catch (const dshell::Error& e) {
        std::cerr << nlohmann::json{{"error", {{"code", dshell::to_string(e.code())}, {"message", e.what()}}}}.dump()
                  << "\n";
        return e.code() == dshell::ErrorCode::invalid_argument ? exit_usage : exit_failure;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << "\n";
        return exit_failure;
    }
    return exit_usage;
}
