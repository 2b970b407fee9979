#include "dshell/potential.hpp"

#include "dshell/errors.hpp"
#include "dshell/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace dshell {

const char* to_string(ProfileKind kind)
{
    switch (kind) {
    case ProfileKind::square: return "square";
    case ProfileKind::gaussian: return "gaussian";
    case ProfileKind::piecewise_linear: return "piecewise_linear";
    case ProfileKind::table: return "table";
    }
    return "unknown";
}

double sign_of(double x) { return (x > 0.0) - (x < 0.0); }

namespace {

void check_samples(const std::vector<double>& ts, const std::vector<double>& vs, double eta)
{
    require(eta > 0.0 && std::isfinite(eta), "profile: eta must be positive");
    require(ts.size() >= 2 && ts.size() == vs.size(), "profile: need >= 2 matching samples");
    for (std::size_t i = 0; i < ts.size(); ++i) {
        require(std::isfinite(ts[i]) && std::isfinite(vs[i]), "profile: non-finite sample");
        if (i > 0) require(ts[i] >= ts[i - 1], "profile: abscissae must be non-decreasing");
    }
    require(ts.front() >= -eta * (1 + 1e-12) && ts.back() <= eta * (1 + 1e-12),
            "profile: samples outside [-eta, eta]");
}

// right-continuous linear interpolation, zero outside the table
double interpolate(const std::vector<double>& ts, const std::vector<double>& vs, double t)
{
    if (t < ts.front() || t > ts.back()) return 0.0;
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    if (it == ts.end()) return vs.back();
    const std::size_t j = it - ts.begin();
    if (j == 0) return vs.front();
    const double t0 = ts[j - 1], t1 = ts[j];
    if (t1 == t0) return vs[j];
    const double s = (t - t0) / (t1 - t0);
    return (1.0 - s) * vs[j - 1] + s * vs[j];
}

}  // namespace

PotentialProfile PotentialProfile::square(double tau, double eta)
{
    require(eta > 0.0 && std::isfinite(eta), "square well: eta must be positive");
    require(std::isfinite(tau), "square well: tau must be finite");
    PotentialProfile p;
    p.kind_ = ProfileKind::square;
    p.eta_ = eta;
    p.tau_ = tau;
    return p;
}

PotentialProfile PotentialProfile::truncated_gaussian(double amplitude, double width, double eta)
{
    require(eta > 0.0 && width > 0.0 && std::isfinite(amplitude), "gaussian: bad parameters");
    PotentialProfile p;
    p.kind_ = ProfileKind::gaussian;
    p.eta_ = eta;
    p.amplitude_ = amplitude;
    p.width_ = width;
    return p;
}

PotentialProfile PotentialProfile::piecewise_linear(std::vector<double> ts, std::vector<double> vs, double eta)
{
    check_samples(ts, vs, eta);
    PotentialProfile p;
    p.kind_ = ProfileKind::piecewise_linear;
    p.eta_ = eta;
    p.ts_ = std::move(ts);
    p.vs_ = std::move(vs);
    return p;
}

PotentialProfile PotentialProfile::table(std::vector<double> ts, std::vector<double> vs, double eta)
{
    PotentialProfile p = piecewise_linear(std::move(ts), std::move(vs), eta);
    p.kind_ = ProfileKind::table;
    return p;
}

PotentialProfile PotentialProfile::from_json(const nlohmann::json& j)
{
    require(j.is_object() && j.contains("kind"), "profile json: missing kind");
    const std::string kind = j.at("kind").get<std::string>();
    require(j.contains("eta"), "profile json: missing eta");
    const double eta = j.at("eta").get<double>();
    if (kind == "square") return square(j.at("tau").get<double>(), eta);
    if (kind == "gaussian")
        return truncated_gaussian(j.at("amplitude").get<double>(), j.at("width").get<double>(), eta);
    if (kind == "table" || kind == "piecewise_linear") {
        auto ts = j.at("ts").get<std::vector<double>>();
        auto vs = j.at("vs").get<std::vector<double>>();
        return kind == "table" ? table(ts, vs, eta) : piecewise_linear(ts, vs, eta);
    }
    throw Error(ErrorCode::invalid_argument, "profile json: unknown kind '" + kind + "'");
}

nlohmann::json PotentialProfile::to_json() const
{
    nlohmann::json j;
    j["kind"] = to_string(kind_);
    j["eta"] = eta_;
    switch (kind_) {
    case ProfileKind::square: j["tau"] = *tau_; break;
    case ProfileKind::gaussian:
        j["amplitude"] = amplitude_;
        j["width"] = width_;
        break;
    case ProfileKind::piecewise_linear:
    case ProfileKind::table:
        j["ts"] = ts_;
        j["vs"] = vs_;
        break;
    }
    return j;
}

double PotentialProfile::operator()(double t) const
{
    switch (kind_) {
    case ProfileKind::square: return std::abs(t) < eta_ ? 0.5 * *tau_ : 0.0;
    case ProfileKind::gaussian:
        return std::abs(t) <= eta_ ? amplitude_ * std::exp(-t * t / (2 * width_ * width_)) : 0.0;
    case ProfileKind::piecewise_linear:
    case ProfileKind::table: return std::abs(t) <= eta_ ? interpolate(ts_, vs_, t) : 0.0;
    }
    return 0.0;
}

std::optional<double> PotentialProfile::declared_sup() const
{
    switch (kind_) {
    case ProfileKind::square: return 0.5 * std::abs(*tau_);
    case ProfileKind::gaussian: return std::abs(amplitude_);
    case ProfileKind::piecewise_linear: {
        double s = 0.0;
        for (double v : vs_) s = std::max(s, std::abs(v));
        return s;
    }
    case ProfileKind::table: return std::nullopt;
    }
    return std::nullopt;
}

double PotentialProfile::sup_norm(int grid_points) const
{
    if (auto s = declared_sup()) return *s;
    double s = 0.0;
    for (int i = 0; i < grid_points; ++i) {
        const double t = -eta_ + 2.0 * eta_ * i / (grid_points - 1);
        s = std::max(s, std::abs((*this)(t)));
    }
    return s;
}

std::vector<double> PotentialProfile::breakpoints() const
{
    std::vector<double> b;
    if (kind_ == ProfileKind::piecewise_linear || kind_ == ProfileKind::table)
        for (std::size_t i = 0; i < ts_.size(); ++i) {
            if (ts_[i] > -eta_ && ts_[i] < eta_) b.push_back(ts_[i]);
            // sign changes inside a segment are kinks of |V|
            if (i + 1 < ts_.size() && ts_[i + 1] > ts_[i] && vs_[i] * vs_[i + 1] < 0.0)
                b.push_back(ts_[i] + (ts_[i + 1] - ts_[i]) * vs_[i] / (vs_[i] - vs_[i + 1]));
        }
    return b;
}

double PotentialProfile::integral() const
{
    if (kind_ == ProfileKind::square) return *tau_ * eta_;
    return integrate_piecewise([this](double t) { return (*this)(t); }, -eta_, eta_, breakpoints());
}

double PotentialProfile::l1_norm() const
{
    if (kind_ == ProfileKind::square) return std::abs(*tau_) * eta_;
    return integrate_piecewise([this](double t) { return std::abs((*this)(t)); }, -eta_, eta_, breakpoints());
}

bool is_delta_eta_small(const PotentialProfile& p, double delta, int grid_points)
{
    require(delta > 0.0, "delta must be positive");
    // support is inside [-eta, eta] by construction of every profile kind
    return p.sup_norm(grid_points) <= delta / p.eta();
}

double UVFactorization::u(double t) const
{
    const double eta = profile_.eta();
    return std::sqrt(std::abs(eta * profile_(eta * t)));
}

double UVFactorization::v(double t) const
{
    const double eta = profile_.eta();
    const double val = profile_(eta * t);
    return sign_of(val) * std::sqrt(std::abs(eta * val));
}

std::vector<double> UVFactorization::breakpoints() const
{
    std::vector<double> b = profile_.breakpoints();
    for (double& t : b) t /= profile_.eta();
    return b;
}

UVFactorization factorize(const PotentialProfile& p) { return UVFactorization(p); }

SqueezedFamily::SqueezedFamily(PotentialProfile p, double epsilon) : profile_(std::move(p)), epsilon_(epsilon)
{
    require(epsilon > 0.0, "squeeze: epsilon must be positive");
    require(epsilon <= profile_.eta(), "squeeze: epsilon must not exceed eta");
}

double SqueezedFamily::operator()(double t) const
{
    const double eta = profile_.eta();
    return eta / epsilon_ * profile_(eta * t / epsilon_);
}

double SqueezedFamily::integral() const
{
    std::vector<double> b = profile_.breakpoints();
    for (double& t : b) t *= epsilon_ / profile_.eta();
    if (profile_.kind() == ProfileKind::square) return *profile_.tau() * profile_.eta();
    return integrate_piecewise([this](double t) { return (*this)(t); }, -epsilon_, epsilon_, b);
}

SqueezedFamily squeeze(const PotentialProfile& p, double epsilon) { return SqueezedFamily(p, epsilon); }

double integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                           std::vector<double> breaks, int per_piece, int pieces)
{
    std::vector<double> pts{a, b};
    for (int i = 1; i < pieces; ++i) pts.push_back(a + (b - a) * i / pieces);
    for (double t : breaks)
        if (t > a && t < b) pts.push_back(t);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const Rule ref = gauss_legendre(per_piece);
    double s = 0.0;
    for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
        const double c = 0.5 * (pts[p] + pts[p + 1]), h = 0.5 * (pts[p + 1] - pts[p]);
        for (std::size_t i = 0; i < ref.size(); ++i) s += h * ref.w[i] * f(c + h * ref.x[i]);
    }
    return s;
}

}  // namespace dshell
