#include "canop/families.hpp"

#include <cmath>

#include "canop/quadrature.hpp"

namespace canop {

double bump(double s) {
    const double q = 1.0 - s * s;
    if (q <= 0.0) return 0.0;
    return std::exp(1.0 - 1.0 / q);
}

double bump_derivative(double s) {
    const double q = 1.0 - s * s;
    if (q <= 0.0) return 0.0;
    const double b = bump(s);
    return b == 0.0 ? 0.0 : b * (-2.0 * s / (q * q));
}

double bump_second_derivative(double s) {
    const double q = 1.0 - s * s;
    if (q <= 0.0) return 0.0;
    const double b = bump(s);
    if (b == 0.0) return 0.0;   // q so small that 1/q^4 would overflow
    const double g = -2.0 * s / (q * q);
    return b * (g * g - 2.0 / (q * q) - 8.0 * s * s / (q * q * q));
}

ManifoldPatch flat_cylinder(double tau_max, double central_tau) {
    return flat_cylinder(Interval{-tau_max, tau_max}, central_tau);
}

ManifoldPatch flat_cylinder(Interval tau, double central_tau) {
    ManifoldPatch::Spec s;
    s.name = "flat-cylinder";
    s.domain = {tau, {0.0, kTwoPi}};
    s.periodic_psi = true;
    s.central_point = {central_tau, 0.0};
    s.length_scale = 1.0;
    s.jet = [](double tau, double psi, JetOrder order) {
        const Vec2 n = unit_dir(psi), np = perp(n);
        PhaseJet j;
        j.X = tau * n;
        j.P = n;
        j.X_tau = n;
        j.X_psi = tau * np;
        j.P_psi = np;
        if (order == JetOrder::Full) {
            j.X_psipsi = -tau * n;
            j.X_psipsipsi = -tau * np;
            j.P_psipsi = -n;
        }
        return j;
    };
    return ManifoldPatch(std::move(s));
}

ManifoldPatch parabola_family(double a, Interval tau, Interval psi) {
    if (!(a > 0.0)) throw ConfigError("parabola family needs a > 0");
    ManifoldPatch::Spec s;
    s.name = "parabola-family";
    s.domain = {tau, psi};
    s.periodic_psi = false;
    s.central_point = {tau.contains(0.0) ? 0.0 : tau.lo, psi.contains(0.0) ? 0.0 : psi.mid()};
    s.length_scale = 1.0 / (2.0 * a);
    s.jet = [a](double t, double p, JetOrder order) {
        const double c = 4.0 * a * a;
        const double w = 1.0 + c * p * p;
        const double g = 1.0 / std::sqrt(w);
        const double g1 = -c * p * std::pow(w, -1.5);
        const double g2 = -c * std::pow(w, -1.5) + 3.0 * c * c * p * p * std::pow(w, -2.5);
        const double g3 = 9.0 * c * c * p * std::pow(w, -2.5) - 15.0 * c * c * c * p * p * p * std::pow(w, -3.5);
        const Vec2 u{-2.0 * a * p, 1.0};
        const Vec2 u1{-2.0 * a, 0.0};
        const Vec2 nu = g * u;
        const Vec2 nu1 = g * u1 + g1 * u;
        const Vec2 gamma{p, a * p * p};
        const Vec2 gamma1{1.0, 2.0 * a * p};
        PhaseJet j;
        j.X = gamma + t * nu;
        j.P = nu;
        j.X_tau = nu;
        j.X_psi = gamma1 + t * nu1;
        j.P_psi = nu1;
        if (order == JetOrder::Full) {
            const Vec2 nu2 = 2.0 * g1 * u1 + g2 * u;
            const Vec2 nu3 = 3.0 * g2 * u1 + g3 * u;
            j.X_psipsi = Vec2{0.0, 2.0 * a} + t * nu2;
            j.X_psipsipsi = t * nu3;
            j.P_psipsi = nu2;
        }
        return j;
    };
    return ManifoldPatch(std::move(s));
}

namespace {

const GaussRule& gl10() {
    static const GaussRule rule = gauss_legendre(10);
    return rule;
}

double gl_integrate(const std::function<double(double)>& f, double a, double b) {
    const GaussRule& r = gl10();
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(c + hw * r.nodes[i]);
    return s * hw;
}

}  // namespace

RadialProfile::RadialProfile(std::function<double(double)> n, std::function<double(double)> dn, double r0,
                             std::size_t table_size)
    : n_(std::move(n)), dn_(std::move(dn)), r0_(r0) {
    if (!(r0 > 0.0)) throw ConfigError("radial profile needs r0 > 0");
    if (table_size < 16) table_size = 16;
    dr_ = r0 / static_cast<double>(table_size);
    table_.resize(table_size + 1);
    table_[0] = 0.0;
    for (std::size_t k = 0; k < table_size; ++k) {
        const double a = k * dr_, b = (k + 1) * dr_;
        table_[k + 1] = table_[k] + gl_integrate(n_, a, 0.5 * (a + b)) + gl_integrate(n_, 0.5 * (a + b), b);
    }
    for (std::size_t k = 0; k <= 64; ++k) {
        const double r = r0 * k / 64.0;
        if (!(n_(r) > 0.0)) throw ConfigError("radial profile must be positive");
    }
    if (std::abs(n_(r0) - 1.0) > 1e-12 || std::abs(n_(1.5 * r0) - 1.0) > 1e-12)
        throw ConfigError("radial profile must equal 1 for r >= r0");
}

RadialProfile RadialProfile::bump_profile(double amplitude, double r0) {
    if (!(amplitude > -1.0)) throw ConfigError("bump profile amplitude must exceed -1");
    return RadialProfile([amplitude, r0](double r) { return 1.0 + amplitude * bump(r / r0); },
                         [amplitude, r0](double r) { return amplitude * bump_derivative(r / r0) / r0; }, r0);
}

double RadialProfile::T(double r) const {
    if (r < 0) return -T(-r);
    if (r >= r0_) return table_.back() + (r - r0_);
    std::size_t k = static_cast<std::size_t>(r / dr_);
    if (k >= table_.size() - 1) k = table_.size() - 2;
    const double a = k * dr_;
    if (r == a) return table_[k];
    return table_[k] + gl_integrate(n_, a, r);
}

double RadialProfile::rho(double tau) const {
    if (tau < 0) return -rho(-tau);
    const double T0 = table_.back();
    if (tau >= T0) return r0_ + (tau - T0);
    double lo = 0.0, hi = r0_;
    double r = tau / n_(0.0);
    for (int it = 0; it < 100; ++it) {
        const double f = T(r) - tau;
        if (f > 0) hi = std::min(hi, r);
        else lo = std::max(lo, r);
        double next = r - f / n_(r);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - r) < 1e-15 * std::max(1.0, r)) return next;
        r = next;
    }
    return r;
}

ManifoldPatch radial_medium(std::shared_ptr<const RadialProfile> profile, double tau_max, double central_tau) {
    ManifoldPatch::Spec s;
    s.name = "radial-medium";
    s.domain = {{-tau_max, tau_max}, {0.0, kTwoPi}};
    s.periodic_psi = true;
    s.central_point = {central_tau, 0.0};
    s.length_scale = 1.0;
    s.mu = [profile](double tau, double) {
        const double n = profile->n(profile->rho(tau));
        return 1.0 / (n * n);
    };
    s.jet = [profile](double tau, double psi, JetOrder order) {
        const double r = profile->rho(tau);
        const double n = profile->n(r);
        const double dn = profile->dn(r);
        const Vec2 e = unit_dir(psi), ep = perp(e);
        PhaseJet j;
        j.X = r * e;
        j.P = n * e;
        j.X_tau = e / n;
        j.P_tau = (dn / n) * e;
        j.X_psi = r * ep;
        j.P_psi = n * ep;
        if (order == JetOrder::Full) {
            j.X_psipsi = -r * e;
            j.X_psipsipsi = -r * ep;
            j.P_psipsi = -n * e;
        }
        return j;
    };
    return ManifoldPatch(std::move(s));
}

ManifoldPatch paraxial_beam(double lambda, double t, double m_mass, double tau_max) {
    if (!(lambda > 0.0) || !(m_mass > 0.0)) throw ConfigError("paraxial beam needs lambda > 0 and m > 0");
    ManifoldPatch::Spec s;
    s.name = "paraxial-beam";
    s.domain = {{-tau_max, tau_max}, {0.0, kTwoPi}};
    s.periodic_psi = true;
    const double focal_tau = -t * lambda * lambda / m_mass;
    s.central_point = {focal_tau + 0.05 * lambda, 0.0};
    s.length_scale = 1.0;
    s.jet = [lambda, t, m_mass](double tau, double psi, JetOrder order) {
        const double r = tau / lambda + t * lambda / m_mass;
        const Vec2 e = unit_dir(psi), ep = perp(e);
        PhaseJet j;
        j.X = r * e;
        j.P = lambda * e;
        j.X_tau = e / lambda;
        j.X_psi = r * ep;
        j.P_psi = lambda * ep;
        if (order == JetOrder::Full) {
            j.X_psipsi = -r * e;
            j.X_psipsipsi = -r * ep;
            j.P_psipsi = -lambda * e;
        }
        return j;
    };
    return ManifoldPatch(std::move(s));
}

}  // namespace canop
