#include "canop/cli/verify.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "canop/caustics.hpp"
#include "canop/cli/commands.hpp"
#include "canop/families.hpp"
#include "canop/quadrature.hpp"
#include "canop/specfn.hpp"

namespace canop::cli {

namespace {

std::string num(double v, int digits = 3) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

// (2 pi h / i)^{1/2}: strips the chart prefactor off a singular-chart field.
Complex strip(double h) { return std::polar(std::sqrt(kTwoPi * h), -0.25 * kPi); }

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
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

SingularChart whole_chart(const ManifoldPatch& patch, int index) {
    SingularChart sc;
    sc.psi = patch.domain().psi;
    sc.cutoff = [](double, double) { return 1.0; };
    sc.index = index;
    return sc;
}

Complex integral(const ManifoldPatch& p, const Amplitude& A, const SingularChart& c, Vec2 x, double h) {
    IntegralOptions opt;
    opt.abs_tol = 1e-12;
    opt.rel_tol = 1e-12;
    return singular_integral_eval(p, A, c, x, h, opt).u;
}

std::vector<Vec2> annulus_points(double r0, double r1, int nr, int na) {
    std::vector<Vec2> pts;
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < na; ++j)
            pts.push_back((r0 + (r1 - r0) * i / (nr - 1)) * unit_dir(0.3 + kTwoPi * j / na));
    return pts;
}

// 1. 2 pi J0 identity over the 41 x 41 grid inside |x| <= 3
CheckReport flat_bessel(unsigned threads) {
    CheckReport r;
    r.title = "Bessel identity on the flat cylinder";
    const ManifoldPatch flat = flat_cylinder();
    GridSpec g;
    g.x1 = g.x2 = {-3.0, 3.0};
    g.n1 = g.n2 = 41;
    std::vector<Vec2> pts;
    for (Vec2 x : g.points())
        if (norm(x) <= 3.0) pts.push_back(x);
    double worst = 0.0;
    bool ok = true;
    for (double h : {0.1, 0.05}) {
        GridOptions opt;
        opt.threads = threads;
        opt.global.integral.abs_tol = opt.global.integral.rel_tol = 1e-12;
        const auto t0 = std::chrono::steady_clock::now();
        const auto s = grid_eval(flat, Amplitude::constant(1.0), ChartCover(), pts, h, DispatchMethod::ForceIntegral, opt);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        double dev = 0.0;
        for (const FieldSample& f : s) {
            const double d = f.ok ? std::abs(f.u * strip(h) - kTwoPi * bessel_j0(norm(f.x) / h)) : INFINITY;
            dev = std::max(dev, d);
        }
        worst = std::max(worst, dev);
        ok = ok && dev <= 1e-6;
        r.details.push_back("h = " + num(h) + ": " + std::to_string(pts.size()) + " points, max |dev| = " + num(dev) +
                            ", " + num(secs, 2) + " s");
    }
    r.passed = ok;
    r.summary = "max |u (2 pi h / i)^{1/2} - 2 pi J0(|x|/h)| = " + num(worst) + " (tol 1e-6)";
    return r;
}

// 2. a(tau) = tau^2 against 2 pi |x|^2 J0 - 2 pi |x| h J1, and the two representations
CheckReport flat_j0j1(unsigned) {
    CheckReport r;
    r.title = "J0/J1 decomposition for a(tau) = tau^2";
    const ManifoldPatch flat = flat_cylinder();
    const SingularChart c = whole_chart(flat, 0);
    const double h = 0.1;
    const Amplitude tau2 = Amplitude::of([](double tau, double) { return Complex(tau * tau); });
    const Amplitude x2 = Amplitude::of_x([](Vec2 x, double, double) { return Complex(dot(x, x)); });
    double d1 = 0.0, d2 = 0.0;
    for (int k = 0; k < 10; ++k) {
        const double rr = 0.25 + 0.25 * k;
        const Vec2 x = rr * unit_dir(0.7 * k);
        const Complex a = integral(flat, tau2, c, x, h) * strip(h);
        const Complex b = integral(flat, x2, c, x, h) * strip(h);
        const double j0 = bessel_j0(rr / h), j1 = bessel_j1(rr / h);
        d1 = std::max(d1, std::abs(a - (kTwoPi * rr * rr * j0 - kTwoPi * rr * h * j1)));
        d2 = std::max(d2, std::abs((a - b) - (-kTwoPi * rr * h * j1)));
    }
    r.passed = d1 <= 1e-6 && d2 <= 1e-6;
    r.summary = "closed-form dev " + num(d1) + ", representation-difference dev " + num(d2) + " (tol 1e-6)";
    r.details.push_back("h = 0.1, radii 0.25 .. 2.5");
    return r;
}

std::vector<EikonalCoord> refined_path(EikonalCoord from, EikonalCoord to, int n) {
    // along psi at the starting tau, then along tau
    std::vector<EikonalCoord> p;
    for (int k = 0; k <= n; ++k) p.push_back({from.tau, from.psi + (to.psi - from.psi) * k / n});
    for (int k = 1; k <= n; ++k) p.push_back({from.tau + (to.tau - from.tau) * k / n, to.psi});
    return p;
}

// 3. m = 0 for tau > 0, m = -1 for tau < 0, singular chart index 0
CheckReport maslov(unsigned) {
    CheckReport r;
    r.title = "Maslov indices on the flat cylinder";
    const ManifoldPatch flat = flat_cylinder();
    const EikonalCoord c = flat.central_point();
    int tested = 0, wrong = 0;
    for (double tau : {0.3, 1.0, 4.0, -0.3, -1.0, -4.0}) {
        for (double psi : {0.0, 1.0, 3.0, 5.5}) {
            for (int n : {1, 3, 17, 100}) {
                ++tested;
                try {
                    const int m = maslov_index_point(flat, refined_path(c, {tau, psi}, n));
                    if (m != (tau > 0 ? 0 : -1)) ++wrong;
                } catch (const Error&) {
                    ++wrong;
                }
            }
        }
    }
    const int s_plus = singular_chart_index(flat, {1.0, 0.5}, 0);
    const int s_minus = singular_chart_index(flat, {-1.0, 0.5}, -1);
    r.passed = wrong == 0 && s_plus == 0 && s_minus == 0;
    r.summary = std::to_string(tested - wrong) + "/" + std::to_string(tested) +
                " paths give (0, -1); singular chart index " + std::to_string(s_plus) + " / " + std::to_string(s_minus);
    return r;
}

// 4. Bohr-Sommerfeld for the psi cycle
CheckReport quantization(unsigned) {
    CheckReport r;
    r.title = "Quantization of the flat cylinder cycle";
    const ManifoldPatch flat = flat_cylinder();
    bool ok = true;
    double worst_action = 0.0;
    int idx = 0;
    for (double tau : {0.5, 2.0, -1.5}) {
        std::vector<EikonalCoord> cyc;
        for (int k = 0; k <= 512; ++k) cyc.push_back({tau, kTwoPi * k / 512.0});
        for (double h : {0.1, 0.05, 0.01, 1e-3}) {
            const QuantizationReport q = check_quantization(flat, {cyc}, h).front();
            worst_action = std::max(worst_action, std::abs(q.action));
            idx = q.index;
            ok = ok && q.satisfied && q.index == 0 && std::abs(q.action) <= 1e-10;
        }
    }
    r.passed = ok;
    r.summary = "max |action| = " + num(worst_action) + " (tol 1e-10), ind = " + std::to_string(idx) +
                ", satisfied for every h";
    return r;
}

// 5. integral against WKB away from the caustic
CheckReport overlap(unsigned) {
    CheckReport r;
    r.title = "Singular-chart integral vs WKB overlap";
    const ManifoldPatch flat = flat_cylinder();
    const SingularChart c = whole_chart(flat, 0);
    const IndexTable indices(flat);
    // radial step well below the oscillation period 2 pi h, so the max is not a sampling accident
    const auto pts = annulus_points(1.0, 3.0, 241, 3);
    std::vector<double> hs{0.1, 0.05, 0.025}, devs;
    for (double h : hs) {
        double dev = 0.0, mag = 0.0;
        for (Vec2 x : pts) {
            const Complex a = integral(flat, Amplitude::constant(1.0), c, x, h);
            const Complex b = wkb_eval(flat, Amplitude::constant(1.0), x, h, indices).u;
            dev = std::max(dev, std::abs(a - b));
            mag = std::max(mag, std::abs(a));
        }
        devs.push_back(dev / mag);
        r.details.push_back("h = " + num(h) + ": max dev / max |u| = " + num(dev / mag));
    }
    const double s = loglog_slope(hs, devs);
    r.passed = std::abs(s - 1.0) <= 0.3;
    r.summary = "log-log slope " + num(s) + " (want 1.0 +- 0.3)";
    return r;
}

// 6. amplitudes equal on the Lagrangian set give O(h) differences
CheckReport gauge(unsigned) {
    CheckReport r;
    r.title = "Amplitude gauge invariance";
    const ManifoldPatch flat = flat_cylinder();
    const SingularChart c = whole_chart(flat, 0);
    const Amplitude tau2 = Amplitude::of([](double tau, double) { return Complex(tau * tau); });
    const Amplitude x2 = Amplitude::of_x([](Vec2 x, double, double) { return Complex(dot(x, x)); });
    // radial step well below the oscillation period 2 pi h, so the max is not a sampling accident
    const auto pts = annulus_points(1.0, 3.0, 241, 3);
    std::vector<double> hs{0.1, 0.05, 0.025}, devs;
    double cmax = 0.0;
    for (double h : hs) {
        double dev = 0.0, mag = 0.0;
        for (Vec2 x : pts) {
            const Complex a = integral(flat, tau2, c, x, h);
            const Complex b = integral(flat, x2, c, x, h);
            dev = std::max(dev, std::abs(a - b));
            mag = std::max(mag, std::abs(b));
        }
        devs.push_back(dev / mag);
        cmax = std::max(cmax, dev / mag / h);
        r.details.push_back("h = " + num(h) + ": max |u_tau2 - u_x2| / max |u| = " + num(dev / mag));
    }
    const double s = loglog_slope(hs, devs);
    r.passed = std::abs(s - 1.0) <= 0.3;
    r.summary = "difference <= " + num(cmax) + " h, log-log slope " + num(s) + " (want 1.0 +- 0.3)";
    return r;
}

/// Least-squares fit v = alpha H0(1)(r/h) + beta H0(2)(r/h); returns (alpha, beta).
std::pair<Complex, Complex> hankel_fit(const std::vector<double>& rs, const std::vector<Complex>& v, double h) {
    Eigen::MatrixXcd M(rs.size(), 2);
    Eigen::VectorXcd b(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
        const double j = bessel_j0(rs[i] / h), y = bessel_y(0, rs[i] / h);
        M(i, 0) = Complex(j, y);
        M(i, 1) = Complex(j, -y);
        b(i) = v[i];
    }
    const Eigen::VectorXcd c = M.colPivHouseholderQr().solve(b);
    return {c(0), c(1)};
}

// 7. distorted Bessel function and phase shift in the radial medium
CheckReport radial(unsigned) {
    CheckReport r;
    r.title = "Radial medium: distorted Bessel field and phase shift";
    const auto prof = std::make_shared<RadialProfile>(RadialProfile::bump_profile(0.3, 2.0));
    const ManifoldPatch patch = radial_medium(prof, 7.0);
    IndexTable indices(patch);
    ChartCover cover = ChartCover::single_singular(patch);
    cover.prepare(patch, indices);
    const SingularChart c = whole_chart(patch, cover.charts()[0].index);
    const Amplitude one = Amplitude::constant(1.0);

    // field shape
    const double h = 0.05;
    double worst = 0.0;
    for (int k = 0; k <= 70; ++k) {
        const double rr = 0.5 + 3.5 * k / 70.0;
        const Vec2 x = rr * unit_dir(0.4 + 0.1 * k);
        const Complex u = integral(patch, one, c, x, h) * strip(h);
        const double T = prof->T(rr), a = kTwoPi * std::sqrt(T / (rr * prof->n(rr)));
        const double model = a * bessel_j0(T / h);
        const double envelope = a * std::min(1.0, std::sqrt(2.0 * h / (kPi * T)));
        worst = std::max(worst, std::abs(u - model) / envelope);
    }
    r.details.push_back("h = 0.05, |x| in [0.5, 4]: max |u - a J0(T/h)| / envelope = " + num(worst));

    // phase shift from the H0(1)/H0(2) decomposition over the exterior r0 < r <= 6.5 (the tau range
    // reaches r ~ 6.8). delta/h exceeds pi below h ~ 0.12, so arg(alpha) is followed down a ladder
    // that starts where it is unambiguous.
    const double oracle = integrate_real([&](double s) { return prof->n(s) - 1.0; }, 0.0, prof->r0(), 1e-14);
    auto fit_delta = [&](double hh, double lo, double hi, int n, double guess) {
        std::vector<double> rs;
        std::vector<Complex> v;
        for (int k = 0; k <= n; ++k) {
            const double rr = lo + (hi - lo) * k / n;
            rs.push_back(rr);
            v.push_back(integral(patch, one, c, rr * unit_dir(1.1), hh) * strip(hh) / kPi);
        }
        const Complex alpha = hankel_fit(rs, v, hh).first;
        const double ph = std::arg(alpha);
        return std::make_pair(hh * (ph + kTwoPi * std::round((guess / hh - ph) / kTwoPi)), std::abs(alpha));
    };
    double delta = 0.0;
    for (double hh : {0.8, 0.4, 0.2, 0.1, 0.05}) {
        const auto [d, mag] = fit_delta(hh, 2.2, 6.5, 80, delta);
        delta = d;
        r.details.push_back("h = " + num(hh) + ": |alpha| = " + num(mag, 8) + ", delta = " + num(delta, 12) +
                            ", delta - oracle = " + num(delta - oracle));
    }
    // how much the h = 0.05 value depends on the part of the exterior used
    const double d_inner = fit_delta(0.05, 2.2, 4.3, 40, delta).first;
    const double d_outer = fit_delta(0.05, 4.3, 6.5, 40, delta).first;
    r.details.push_back("h = 0.05 sub-windows: r in [2.2, 4.3] gives " + num(d_inner - oracle) + ", r in [4.3, 6.5] gives " +
                        num(d_outer - oracle));
    const double derr = std::abs(delta - oracle);
    r.details.push_back("integral of (n - 1) over [0, r0] = " + num(oracle, 12));
    r.passed = worst <= 0.05 && derr <= 1e-6;
    r.summary = "field dev " + num(worst) + " (tol 0.05), phase shift dev " + num(derr) + " (tol 1e-6)";
    return r;
}

FocalPoint parabola_point(const ManifoldPatch& par, double psi) {
    FocalPoint f;
    f.coord = {std::pow(1 + psi * psi, 1.5), psi};
    return classify_focal_point(par, f);
}

double local_deviation(const ManifoldPatch& par, const FocalPoint& f, double h, double half_width) {
    const Interval win{f.coord.psi - half_width, f.coord.psi + half_width};
    SingularChart sc;
    sc.psi = win;
    sc.cutoff = [win](double, double psi) { return window_weight(psi, win, 0.5); };
    sc.index = 0;
    const Vec2 n = par.eval_jet(f.coord).P_psi / norm(par.eval_jet(f.coord).P_psi);
    const double half = std::pow(h, 2.0 / 3.0) * par.length_scale();
    LocalOptions lo;
    lo.radius_factor = 10.0;   // the segment reaches h^{2/3}, past the default h^{5/6} radius
    const Amplitude one = Amplitude::constant(1.0);
    double dev = 0.0, mag = 0.0;
    for (int i = 0; i <= 20; ++i) {
        const Vec2 x = f.x_star + (-half + 2.0 * half * i / 20.0) * n;
        const Complex a = f.kind == FocalKind::Fold ? airy_local_field(par, one, f, x, h, lo).u
                                                     : pearcey_local_field(par, one, f, x, h, lo).u;
        const Complex b = integral(par, one, sc, x, h);
        dev = std::max(dev, std::abs(a - b));
        mag = std::max(mag, std::abs(b));
    }
    return dev / mag;
}

CheckReport local_matching(bool fold) {
    CheckReport r;
    r.title = fold ? "Airy fold matching at psi* = 0.5" : "Pearcey cusp matching at psi* = 0";
    const ManifoldPatch par = parabola_family();
    const FocalPoint f = parabola_point(par, fold ? 0.5 : 0.0);
    if (f.kind != (fold ? FocalKind::Fold : FocalKind::Cusp)) {
        r.summary = "focal point classified as " + to_string(f.kind);
        return r;
    }
    std::vector<double> hs{0.02, 0.01, 0.005}, devs;
    for (double h : hs) {
        devs.push_back(local_deviation(par, f, h, fold ? 0.4 : 1.0));
        r.details.push_back("h = " + num(h) + ": max relative deviation " + num(devs.back()));
    }
    const double s = loglog_slope(hs, devs);
    const double want = fold ? 0.25 : 0.15;
    r.passed = s >= want;
    r.summary = "log-log slope " + num(s) + " (want >= " + num(want) + ")";
    return r;
}

// 10. special function values and symmetries
CheckReport specfn_check(unsigned) {
    CheckReport r;
    r.title = "Special functions";
    const double ai = std::abs(airy_ai(0.0) - 0.3550280538878172);
    const Complex p0 = std::tgamma(0.25) * std::polar(1.0, kPi / 8) / (4 * kPi);
    const double pe = std::abs(pearcey(0, 0, PearceySign::Plus) - p0);
    const double jz = std::abs(bessel_j0(2.404825557695773));
    double sym = 0.0;
    for (double v : {-2.0, -1.0, 0.0, 1.0, 2.0})
        for (double y : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
            for (PearceySign sg : {PearceySign::Plus, PearceySign::Minus})
                sym = std::max(sym, std::abs(pearcey(v, -y, sg) - pearcey(v, y, sg)));
            sym = std::max(sym, std::abs(pearcey(v, y, PearceySign::Minus) - std::conj(pearcey(-v, -y, PearceySign::Plus))));
        }
    r.passed = ai <= 1e-10 && pe <= 1e-8 && jz <= 1e-10 && sym <= 1e-8;
    r.summary = "Ai(0) " + num(ai) + ", P+(0,0) " + num(pe) + ", J0 zero " + num(jz) + ", symmetries " + num(sym);
    return r;
}

// 11. Taylor coefficients at every focal point of the parabola family
CheckReport coefficients(unsigned) {
    CheckReport r;
    r.title = "Phase Taylor coefficients at parabola focal points";
    const ManifoldPatch par = parabola_family();
    const auto pts = find_focal_points(par);
    // zero closed forms (a1, a2, a3 at the cusp) are compared on the unit scale
    auto rel = [](double fit, double closed) { return std::abs(fit - closed) / std::max(std::abs(closed), 1.0); };
    double worst = 0.0, det = 0.0;
    int folds = 0, cusps = 0, bad = 0;
    for (const FocalPoint& p : pts) {
        const FocalPoint f = p.kind == FocalKind::Unclassified ? classify_focal_point(par, p) : p;
        if (f.kind != FocalKind::Fold && f.kind != FocalKind::Cusp) {
            ++bad;
            continue;
        }
        const TaylorCheckReport t = taylor_phase_check(par, f);
        double d = std::max({rel(t.fitted.a0, t.closed.a0), rel(t.fitted.a1, t.closed.a1),
                             rel(t.fitted.a2, t.closed.a2)});
        if (f.kind == FocalKind::Fold) {
            ++folds;
            d = std::max(d, rel(t.fitted.a3, t.closed.a3));
        } else {
            ++cusps;
            d = std::max(d, rel(t.fitted.a4, t.closed.a4));
        }
        if (t.flagged) ++bad;
        worst = std::max(worst, d);
        det = std::max(det, f.det_identity);
    }
    r.passed = !pts.empty() && bad == 0 && worst <= 1e-4 && det <= 1e-8;
    r.summary = std::to_string(folds) + " folds, " + std::to_string(cusps) + " cusp(s): max coefficient dev " +
                num(worst) + " (tol 1e-4), det identity " + num(det) + " (tol 1e-8)";
    if (bad) r.details.push_back(std::to_string(bad) + " focal point(s) unclassified or ill-conditioned");
    return r;
}

// 12. byte-identical CSV from repeated runs
CheckReport determinism(unsigned threads) {
    CheckReport r;
    r.title = "Deterministic run output";
    int same = 0, total = 0;
    for (const std::string& name : builtin_scenarios()) {
        Scenario sc = parse_scenario(builtin_scenario_text(name), name);
        Overrides ov;
        GridSpec g = sc.grid;
        g.n1 = std::min<std::size_t>(g.n1, 9);
        g.n2 = std::min<std::size_t>(g.n2, 9);
        ov.grid = g;
        std::string first;
        bool eq = true;
        for (unsigned t : {std::max(threads, 2u), std::max(threads, 2u), 1u}) {
            ov.threads = t;
            apply_overrides(sc, ov);
            std::ostringstream os;
            write_field_csv(os, evaluate_scenario(sc).samples);
            if (first.empty()) first = os.str();
            else eq = eq && os.str() == first;
        }
        ++total;
        if (eq) ++same;
        else r.details.push_back(name + ": outputs differ");
    }
    r.passed = same == total;
    r.summary = std::to_string(same) + "/" + std::to_string(total) + " built-in scenarios byte-identical across runs";
    return r;
}

struct Entry {
    int id;
    const char* name;
    std::function<CheckReport(unsigned)> fn;
};

const std::vector<Entry>& entries() {
    static const std::vector<Entry> e = {
        {1, "flat-bessel", flat_bessel},
        {2, "flat-j0j1", flat_j0j1},
        {3, "maslov", maslov},
        {4, "quantization", quantization},
        {5, "overlap", overlap},
        {6, "gauge", gauge},
        {7, "radial", radial},
        {8, "airy-fold", [](unsigned) { return local_matching(true); }},
        {9, "pearcey-cusp", [](unsigned) { return local_matching(false); }},
        {10, "specfn", specfn_check},
        {11, "coefficients", coefficients},
        {12, "determinism", determinism},
    };
    return e;
}

}  // namespace

std::vector<std::string> verify_names() {
    std::vector<std::string> out;
    for (const Entry& e : entries()) out.emplace_back(e.name);
    return out;
}

std::vector<CheckReport> run_verify(const std::string& name, unsigned threads) {
    std::vector<CheckReport> out;
    for (const Entry& e : entries()) {
        if (name != "all" && name != e.name) continue;
        const auto t0 = std::chrono::steady_clock::now();
        CheckReport r;
        try {
            r = e.fn(threads);
        } catch (const Error& err) {
            r.passed = false;
            r.summary = std::string("error: ") + err.what();
        }
        r.id = e.id;
        r.name = e.name;
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(r));
    }
    if (out.empty()) {
        std::string list;
        for (const Entry& e : entries()) list += std::string(list.empty() ? "" : ", ") + e.name;
        throw ConfigError("unknown check '" + name + "' (all, " + list + ")");
    }
    return out;
}

std::string format_report_line(const CheckReport& r) {
    char head[64];
    std::snprintf(head, sizeof head, "%s %2d %-13s ", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str());
    return head + r.title + ": " + r.summary + " [" + num(r.seconds, 2) + " s]";
}

}  // namespace canop::cli
