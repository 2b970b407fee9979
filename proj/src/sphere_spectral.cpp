#include "dshell/sphere_spectral.hpp"

#include "dshell/errors.hpp"
#include "dshell/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dshell {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

double cross(const Vector2d& x, const Vector2d& y) { return x[0] * y[1] - x[1] * y[0]; }

int orbital(int kappa) { return kappa > 0 ? kappa : -kappa - 1; }

double gap_rate(const ChannelSystem& ch)
{
    const double a = ch.energy, m = ch.mass;
    require(std::abs(a) < m, "channel energy must lie in (-m, m)");
    return std::sqrt((m - a) * (m + a));
}

void check_channel(const ChannelSystem& ch)
{
    require(ch.kappa != 0, "kappa must be nonzero");
    require(ch.mass > 0.0 && ch.radius > 0.0, "mass and radius must be positive");
}

template <class Gen>
Matrix2d magnus4(const Gen& A, double r0, double r1, int panels)
{
    static const double c = std::sqrt(3.0) / 6.0;
    Matrix2d T = Matrix2d::Identity();
    const double h = (r1 - r0) / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = r0 + (p + 0.5) * h;
        const Matrix2d A1 = A(mid - c * h), A2 = A(mid + c * h);
        const Matrix2d omega = 0.5 * h * (A1 + A2) + (std::sqrt(3.0) / 12.0) * h * h * (A2 * A1 - A1 * A2);
        T = expm2(omega) * T;
    }
    return T;
}

// geometric panels for the interior, where kappa/r varies fastest
Matrix2d graded_free_transfer(const ChannelSystem& ch, double r0, double r1, int panels)
{
    Matrix2d T = Matrix2d::Identity();
    const double q = std::pow(r1 / r0, 1.0 / panels);
    double a = r0;
    for (int p = 0; p < panels; ++p) {
        const double b = (p + 1 == panels) ? r1 : a * q;
        T = free_transfer(ch, a, b, 1) * T;
        a = b;
    }
    return T;
}

}  // namespace

Matrix2d radial_generator(const ChannelSystem& ch, double r, double V, double S)
{
    const double a = ch.energy, m = ch.mass, k = ch.kappa / r;
    Matrix2d A;
    A << -k, a - V + m + S, -(a - V - m - S), k;
    return A;
}

Matrix2d expm2(const Matrix2d& A)
{
    const double mu = 0.5 * A.trace();
    Matrix2d B = A - mu * Matrix2d::Identity();
    const double d = B(0, 0) * B(0, 0) + B(0, 1) * B(1, 0);  // B^2 = d I
    double ch, sh;
    if (std::abs(d) < 1e-10) {
        ch = 1.0 + d / 2.0 + d * d / 24.0;
        sh = 1.0 + d / 6.0 + d * d / 120.0;
    } else if (d > 0) {
        const double s = std::sqrt(d);
        ch = std::cosh(s);
        sh = std::sinh(s) / s;
    } else {
        const double s = std::sqrt(-d);
        ch = std::cos(s);
        sh = std::sin(s) / s;
    }
    return std::exp(mu) * (ch * Matrix2d::Identity() + sh * B);
}

Matrix2d coupling_generator(CouplingKind kind)
{
    Matrix2d J;
    if (kind == CouplingKind::electrostatic)
        J << 0, -1, 1, 0;
    else
        J << 0, 1, 1, 0;
    return J;
}

Matrix2d rotation(double theta)
{
    Matrix2d R;
    R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return R;
}

TransmissionMatrix shell_matching(double lambda, CouplingKind kind)
{
    require(std::isfinite(lambda), "lambda must be finite");
    if (std::abs(std::abs(lambda) - 2.0) < 1e-12)
        throw Error(ErrorCode::critical_coupling, "coupling constant at the excluded values +-2");
    const Matrix2d J = coupling_generator(kind);
    const Matrix2d I = Matrix2d::Identity();
    TransmissionMatrix t;
    t.kind = kind;
    t.lambda = lambda;
    t.matrix = (I - 0.5 * lambda * J).inverse() * (I + 0.5 * lambda * J);
    return t;
}

Matrix2d free_transfer(const ChannelSystem& ch, double r0, double r1, int panels)
{
    require(panels >= 1 && r0 > 0.0 && r1 > 0.0, "free_transfer: bad interval");
    return magnus4([&](double r) { return radial_generator(ch, r); }, r0, r1, panels);
}

Matrix2d transfer_through_squeezed(const ChannelSystem& ch, const SqueezedFamily& family, CouplingKind kind,
                                   int sub_panels)
{
    check_channel(ch);
    const double eps = family.epsilon(), R = ch.radius;
    require(R - eps > 0.0, "squeezed well must not reach the origin");
    const int n = std::max(16, sub_panels);

    // panel breaks at the profile's own breakpoints so every panel is smooth
    std::vector<double> cuts{-eps, eps};
    for (double t : family.profile().breakpoints()) cuts.push_back(t * eps / family.profile().eta());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    auto gen = [&](double r) {
        const double V = family(r - R);
        return kind == CouplingKind::electrostatic ? radial_generator(ch, r, V, 0.0)
                                                   : radial_generator(ch, r, 0.0, V);
    };
    Matrix2d T = Matrix2d::Identity();
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
        const double len = cuts[p + 1] - cuts[p];
        const int np = std::max(1, static_cast<int>(std::ceil(n * len / (2.0 * eps))));
        T = magnus4(gen, R + cuts[p], R + cuts[p + 1], np) * T;
    }
    return T;
}

Vector2d regular_solution(const ChannelSystem& ch, double r, const SolverOptions& opt)
{
    check_channel(ch);
    const double k = gap_rate(ch);
    const int l = orbital(ch.kappa), lb = orbital(-ch.kappa);
    const double am = ch.energy + ch.mass;
    if (opt.basis == ChannelBasis::closed_form) return r * Vector2d(am * bessel_i(l, k * r), k * bessel_i(lb, k * r));

    const double r0 = opt.series_radius * ch.radius;
    require(r > r0, "regular_solution: r inside the series seed radius");
    const Vector2d seed = r0 * Vector2d(am * bessel_i_series(l, k * r0, 6), k * bessel_i_series(lb, k * r0, 6));
    return graded_free_transfer(ch, r0, r, opt.interior_panels) * seed;
}

Vector2d decaying_solution(const ChannelSystem& ch, double r, const SolverOptions& opt)
{
    check_channel(ch);
    const double k = gap_rate(ch);
    const int l = orbital(ch.kappa), lb = orbital(-ch.kappa);
    const double am = ch.energy + ch.mass;
    if (opt.basis == ChannelBasis::closed_form) return r * Vector2d(am * bessel_k(l, k * r), -k * bessel_k(lb, k * r));

    // leading asymptotics; the growing admixture dies off inward like exp(-2k(r_max - r))
    const double r_max = ch.radius + opt.r_max_factor / k;
    require(r < r_max, "decaying_solution: r beyond r_max");
    const Vector2d seed = Vector2d(am, -k).normalized();
    const int panels = std::max(1, static_cast<int>(std::ceil((r_max - r) / opt.exterior_step)));
    return free_transfer(ch, r_max, r, panels) * seed;
}

ScanWindow gap_window(double mass, int steps)
{
    return ScanWindow{-mass * (1.0 - 1e-8), mass * (1.0 - 1e-8), steps};
}

double matching_determinant(const ChannelSystem& ch0, const ShellCoupling& c, double a, const SolverOptions& opt)
{
    ChannelSystem ch = ch0;
    ch.energy = a;
    if (const auto* t = std::get_if<TransmissionMatrix>(&c)) {
        const Vector2d in = regular_solution(ch, ch.radius, opt).normalized();
        const Vector2d out = decaying_solution(ch, ch.radius, opt).normalized();
        return cross(out, t->matrix * in);
    }
    const auto& sq = std::get<SqueezedCoupling>(c);
    const double eps = sq.family.epsilon();
    const Matrix2d T = transfer_through_squeezed(ch, sq.family, sq.kind, opt.sub_panels);
    const Vector2d in = regular_solution(ch, ch.radius - eps, opt).normalized();
    const Vector2d out = decaying_solution(ch, ch.radius + eps, opt).normalized();
    return cross(out, T * in);
}

SpectralResult find_gap_eigenvalues(const ChannelSystem& ch, const ShellCoupling& c, const ScanWindow& scan,
                                    const SolverOptions& opt)
{
    check_channel(ch);
    require(scan.steps >= 2, "scan needs at least 2 steps");
    require(scan.a_min < scan.a_max && scan.a_min > -ch.mass && scan.a_max < ch.mass,
            "scan window must lie inside (-m, m)");
    SpectralResult res;
    res.kappa = ch.kappa;
    auto D = [&](double a) { return matching_determinant(ch, c, a, opt); };

    double a0 = scan.a_min, d0 = D(a0);
    for (int s = 1; s <= scan.steps; ++s) {
        const double a1 = scan.a_min + (scan.a_max - scan.a_min) * s / scan.steps;
        const double d1 = D(a1);
        if (d0 == 0.0) {
            res.eigenvalues.push_back(a0);
            res.residuals.push_back(0.0);
            res.brackets.emplace_back(a0, a0);
        } else if (d0 * d1 < 0.0) {
            double lo = a0, hi = a1, dlo = d0;
            while (hi - lo > opt.tol) {
                const double mid = 0.5 * (lo + hi), dm = D(mid);
                if (dm == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if ((dm < 0) == (dlo < 0)) {
                    lo = mid;
                    dlo = dm;
                } else {
                    hi = mid;
                }
            }
            const double root = 0.5 * (lo + hi);
            res.eigenvalues.push_back(root);
            res.residuals.push_back(std::abs(D(root)));
            res.brackets.emplace_back(a0, a1);
        }
        a0 = a1;
        d0 = d1;
    }
    return res;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    require(x.size() == y.size() && x.size() >= 2, "loglog_slope: need >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

std::optional<double> nearest(const std::vector<double>& v, double target)
{
    std::optional<double> best;
    for (double a : v)
        if (!best || std::abs(a - target) < std::abs(*best - target)) best = a;
    return best;
}

}  // namespace

KleinStudy klein_convergence_study(const PotentialProfile& well, const ChannelSystem& ch,
                                   const std::vector<double>& eps, CouplingKind kind, const SolverOptions& opt,
                                   int scan_steps)
{
    require(well.kind() == ProfileKind::square, "klein study needs a square well");
    require(!eps.empty(), "klein study needs at least one epsilon");
    for (std::size_t i = 1; i < eps.size(); ++i) require(eps[i] < eps[i - 1], "epsilon list must be decreasing");
    const double te = *well.tau() * well.eta();
    require(std::abs(te) < 3.141592653589793, "tau eta must stay below pi");

    KleinStudy st;
    st.kind = kind;
    st.channel = ch;
    st.tau_eta = te;
    st.lambda_nonlinear = lambda_closed_form(well, kind)->value;
    st.lambda_linear = te;
    const ScanWindow win = gap_window(ch.mass, scan_steps);

    const auto nl = find_gap_eigenvalues(ch, shell_matching(st.lambda_nonlinear, kind), win, opt).eigenvalues;
    const auto lin = find_gap_eigenvalues(ch, shell_matching(st.lambda_linear, kind), win, opt).eigenvalues;

    std::vector<std::vector<double>> sq;
    for (double e : eps)
        sq.push_back(find_gap_eigenvalues(ch, SqueezedCoupling{squeeze(well, e), kind}, win, opt).eigenvalues);

    if (nl.size() == 1) {
        st.a_nonlinear = nl.front();
    } else if (!nl.empty()) {
        // several shell roots: keep the one the finest squeezed problem approaches
        double best = INFINITY;
        for (double a : nl)
            if (auto s = nearest(sq.back(), a); s && std::abs(*s - a) < best) {
                best = std::abs(*s - a);
                st.a_nonlinear = a;
            }
        if (!st.a_nonlinear) st.a_nonlinear = nl.front();
    }
    if (st.a_nonlinear)
        st.a_linear = nearest(lin, *st.a_nonlinear);
    else if (!lin.empty())
        st.a_linear = nearest(lin, sq.back().empty() ? lin.front() : sq.back().front());

    st.all_found = static_cast<bool>(st.a_nonlinear);
    for (std::size_t i = 0; i < eps.size(); ++i) {
        KleinRow row;
        row.epsilon = eps[i];
        if (st.a_nonlinear)
            row.a_eps = nearest(sq[i], *st.a_nonlinear);
        else if (st.a_linear)
            row.a_eps = nearest(sq[i], *st.a_linear);
        else if (!sq[i].empty())
            row.a_eps = sq[i].front();
        row.err_nonlinear = (row.a_eps && st.a_nonlinear) ? std::abs(*row.a_eps - *st.a_nonlinear) : nan;
        row.gap_linear = (row.a_eps && st.a_linear) ? std::abs(*row.a_eps - *st.a_linear) : nan;
        st.all_found = st.all_found && row.a_eps.has_value();
        st.rows.push_back(row);
    }

    if (st.all_found) {
        st.monotone = true;
        for (std::size_t i = 1; i < st.rows.size(); ++i)
            st.monotone = st.monotone && st.rows[i].err_nonlinear < st.rows[i - 1].err_nonlinear;
        const KleinRow& last = st.rows.back();
        if (std::abs(st.lambda_nonlinear - st.lambda_linear) <= 0.05 || !st.a_linear)
            st.bounded_away = true;
        else
            st.bounded_away = last.gap_linear > last.err_nonlinear;
        std::vector<double> xs, ys;
        for (const auto& r : st.rows)
            if (r.err_nonlinear > 0) {
                xs.push_back(r.epsilon);
                ys.push_back(r.err_nonlinear);
            }
        st.slope = xs.size() >= 2 ? loglog_slope(xs, ys) : nan;
    } else {
        st.slope = nan;
    }
    return st;
}

}  // namespace dshell
