#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace dshell::cli {

// Exit codes
inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;  // assertion or numerical failure
inline constexpr int exit_usage = 2;

// Thrown for semantic usage errors found after parsing (e.g. empty eps list).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// JSON config files: top-level keys are option long names without dashes.
// Keys may also sit under an object named after the subcommand.
// CLI11 only reads config for the root app, so subcommands go through apply_config.
class JsonConfig : public CLI::Config {
public:
    explicit JsonConfig(std::string section) : section_(std::move(section)) {}
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override;
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;

private:
    std::string section_;
};

// Parameters shared by every command.
struct Common {
    std::string out;  // empty: stdout
    std::string config;
};

struct CouplingArgs {
    std::string potential = "square";
    double tau = 1.0, eta = 1.0, sigma = 0.3;
    std::string file;
    int nodes = 128;
    int neumann_terms = 20;
    double tol = 1e-9;
};

struct SpectralArgs {
    double a_re = 0.0, a_im = 1.0, m = 1.0;
};

struct JumpArgs {
    SpectralArgs sp;
    int N = 512;
    double R = 1.0;
    std::string density = "linear";
    std::vector<double> offsets;
    double tol = 5e-2;
};

struct GeometryArgs {
    std::string surface = "sphere";
    double R = 1.0;
    std::vector<double> axes{2.0, 1.0, 1.0};
    int N = 2048;
    int t_nodes = 16;
    double eps = 0.1;
    double eta = 0.0;  // 0: default
    std::vector<double> radii{0.2, 0.5, 1.0};
    int centers = 32;
    std::string mesh_csv;
    double tol = 1e-6;
};

struct ConvergeArgs {
    SpectralArgs sp;
    int N = 256, M = 8;
    double tau = 1.0, eta = 0.25, R = 1.0;
    std::vector<double> eps;
    double min_ratio = 1.0;
};

struct SpectrumArgs {
    std::vector<int> kappa{-1, 1};
    double lambda = 1.0;
    std::string kind = "electrostatic";
    double m = 1.0, R = 1.0;
    int steps = 2000;
    std::string basis = "closed_form";
};

struct KleinArgs {
    double tau = 1.0, eta = 1.0;
    std::vector<double> eps;
    int kappa = -1;
    std::string kind = "electrostatic";
    double m = 1.0, R = 1.0;
    int steps = 2000;
    std::string summary;
};

// Fill options of sub that were not given on the command line from a JSON config file.
void apply_config(CLI::App* sub, const std::string& path);

int run_coupling(const CouplingArgs& a, const Common& c);
int run_jump_check(const JumpArgs& a, const Common& c);
int run_geometry_audit(const GeometryArgs& a, const Common& c);
int run_converge(const ConvergeArgs& a, const Common& c);
int run_spectrum(const SpectrumArgs& a, const Common& c);
int run_klein(const KleinArgs& a, const Common& c);

// %.17g
std::string num(double x);

}  // namespace dshell::cli
