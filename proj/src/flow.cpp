#include "canop/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "canop/parallel.hpp"
#include "canop/quadrature.hpp"

namespace canop {

double Hamiltonian::operator()(Vec2 x, Vec2 p) const {
    if (kind == Kind::Homogeneous1) return norm(p) * C(x);
    return dot(p, p) / (2.0 * m_mass) + v(x);
}

Vec2 Hamiltonian::gradC(Vec2 x) const { return grad_C ? grad_C(x) : fd_gradient(C, x); }
Mat2 Hamiltonian::hessC(Vec2 x) const { return hess_C ? hess_C(x) : fd_hessian(C, x); }

Hamiltonian homogeneous(ScalarField C, GradientField grad_C, HessianField hess_C) {
    Hamiltonian h;
    h.kind = Hamiltonian::Kind::Homogeneous1;
    h.C = std::move(C);
    h.grad_C = std::move(grad_C);
    h.hess_C = std::move(hess_C);
    return h;
}

Hamiltonian mechanical(ScalarField v, double E, double m_mass, GradientField grad_v, HessianField hess_v) {
    if (!(m_mass > 0.0)) throw ConfigError("mechanical Hamiltonian needs a positive mass");
    Hamiltonian h;
    h.kind = Hamiltonian::Kind::Mechanical;
    h.v = std::move(v);
    h.grad_v = std::move(grad_v);
    h.hess_v = std::move(hess_v);
    h.E = E;
    h.m_mass = m_mass;
    return h;
}

Vec2 fd_gradient(const ScalarField& f, Vec2 x, double step) {
    return {(f({x.x + step, x.y}) - f({x.x - step, x.y})) / (2 * step),
            (f({x.x, x.y + step}) - f({x.x, x.y - step})) / (2 * step)};
}

Mat2 fd_hessian(const ScalarField& f, Vec2 x, double step) {
    const double h = step;
    const double f0 = f(x);
    const double fxx = (f({x.x + h, x.y}) - 2 * f0 + f({x.x - h, x.y})) / (h * h);
    const double fyy = (f({x.x, x.y + h}) - 2 * f0 + f({x.x, x.y - h})) / (h * h);
    const double fxy = (f({x.x + h, x.y + h}) - f({x.x + h, x.y - h}) - f({x.x - h, x.y + h}) +
                        f({x.x - h, x.y - h})) / (4 * h * h);
    return {fxx, fxy, fxy, fyy};
}

Hamiltonian maupertuis(const Hamiltonian& mech, const Box& box) {
    if (mech.kind != Hamiltonian::Kind::Mechanical) throw ConfigError("maupertuis expects a mechanical Hamiltonian");
    for (int i = 0; i <= 100; ++i)
        for (int k = 0; k <= 100; ++k) {
            const Vec2 x{box.x1.lo + box.x1.length() * i / 100.0, box.x2.lo + box.x2.length() * k / 100.0};
            if (!(mech.E > mech.v(x))) {
                std::ostringstream os;
                os << "maupertuis: E <= v(x) at x = (" << x.x << ", " << x.y << "); the box ["
                   << box.x1.lo << ", " << box.x1.hi << "] x [" << box.x2.lo << ", " << box.x2.hi
                   << "] must lie in the unbound region";
                throw DomainError(os.str());
            }
        }
    const double m = mech.m_mass, E = mech.E;
    ScalarField v = mech.v;
    GradientField gv = mech.grad_v ? mech.grad_v : GradientField([v](Vec2 x) { return fd_gradient(v, x); });
    HessianField hv = mech.hess_v ? mech.hess_v : HessianField([v](Vec2 x) { return fd_hessian(v, x); });
    Hamiltonian h;
    h.kind = Hamiltonian::Kind::Homogeneous1;
    h.C = [v, m, E](Vec2 x) { return 1.0 / std::sqrt(2.0 * m * (E - v(x))); };
    h.grad_C = [v, gv, m, E](Vec2 x) {
        const double w = 2.0 * m * (E - v(x));
        return (m * std::pow(w, -1.5)) * gv(x);
    };
    h.hess_C = [v, gv, hv, m, E](Vec2 x) {
        const double w = 2.0 * m * (E - v(x));
        const Vec2 g = gv(x);
        const Mat2 H = hv(x);
        const double a = m * std::pow(w, -1.5), b = 3.0 * m * m * std::pow(w, -2.5);
        const Mat2 o = outer(g, g);
        return Mat2{a * H.a11 + b * o.a11, a * H.a12 + b * o.a12, a * H.a21 + b * o.a21, a * H.a22 + b * o.a22};
    };
    h.v = mech.v;
    h.E = E;
    h.m_mass = m;
    return h;
}

namespace {

// x, p and their psi-variations
struct Aug {
    Vec2 x, p, dx, dp;
};

Aug operator+(const Aug& a, const Aug& b) { return {a.x + b.x, a.p + b.p, a.dx + b.dx, a.dp + b.dp}; }
Aug operator*(double s, const Aug& a) { return {s * a.x, s * a.p, s * a.dx, s * a.dp}; }

double safe_norm(Vec2 p) {
    const double r = norm(p);
    if (!(r > 1e-12)) throw DomainError("singular ray: |p| vanished during integration");
    return r;
}

Aug rhs(const Hamiltonian& H, const Aug& s, bool variational) {
    const double r = safe_norm(s.p);
    const Vec2 u = s.p / r;
    const double c = H.C(s.x);
    const Vec2 g = H.gradC(s.x);
    Aug d;
    d.x = c * u;
    d.p = -r * g;
    if (variational) {
        const Mat2 hc = H.hessC(s.x);
        d.dx = dot(g, s.dx) * u + (c / r) * (s.dp - dot(u, s.dp) * u);
        d.dp = -r * (hc * s.dx) - dot(u, s.dp) * g;
    }
    return d;
}

Aug rk4(const Hamiltonian& H, const Aug& s, double dt, bool variational) {
    const Aug k1 = rhs(H, s, variational);
    const Aug k2 = rhs(H, s + (0.5 * dt) * k1, variational);
    const Aug k3 = rhs(H, s + (0.5 * dt) * k2, variational);
    const Aug k4 = rhs(H, s + dt * k3, variational);
    return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Aug advance(const Hamiltonian& H, Aug s, double span, double step, bool variational) {
    if (span == 0.0) return s;
    const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::abs(span) / step - 1e-9)));
    const double dt = span / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) s = rk4(H, s, dt, variational);
    return s;
}

struct CurveData {
    PhasePoint pt, d;
};

CurveData curve_at(const InitialCurve& c, double psi) {
    CurveData out;
    out.pt = c.gamma(psi);
    if (c.dgamma) {
        out.d = c.dgamma(psi);
    } else {
        const double e = 1e-6;
        const PhasePoint a = c.gamma(psi + e), b = c.gamma(psi - e);
        out.d = {(a.x - b.x) / (2 * e), (a.p - b.p) / (2 * e)};
    }
    return out;
}


}  // namespace

std::vector<RayState> integrate_ray(const Hamiltonian& H, PhasePoint start, Interval tau_span, double step) {
    if (H.kind != Hamiltonian::Kind::Homogeneous1) throw ConfigError("integrate_ray expects H = |p| C(x)");
    if (!(step > 0.0)) throw DomainError("integrate_ray: step must be positive");
    safe_norm(start.p);
    std::vector<RayState> out;
    Aug s{start.x, start.p, {}, {}};
    double tau = tau_span.lo;
    out.push_back({tau, start});
    const double dir = tau_span.hi >= tau_span.lo ? 1.0 : -1.0;
    const double total = std::abs(tau_span.hi - tau_span.lo);
    const std::size_t n = static_cast<std::size_t>(std::floor(total / step + 1e-9));
    for (std::size_t i = 0; i < n; ++i) {
        s = rk4(H, s, dir * step, false);
        tau = tau_span.lo + dir * step * (i + 1);
        out.push_back({tau, {s.x, s.p}});
    }
    const double rest = tau_span.hi - tau;
    if (std::abs(rest) > 1e-12 * std::max(1.0, total)) {
        s = rk4(H, s, rest, false);
        out.push_back({tau_span.hi, {s.x, s.p}});
    }
    return out;
}

ManifoldPatch build_manifold(const Hamiltonian& H_in, const InitialCurve& curve, Interval tau_span,
                             const FlowOptions& opt) {
    const Hamiltonian H = H_in.kind == Hamiltonian::Kind::Mechanical ? maupertuis(H_in) : H_in;
    if (!curve.gamma) throw ConfigError("initial curve has no parametrization");
    if (!(tau_span.hi > tau_span.lo)) throw ConfigError("empty tau span");
    if (opt.steps < 1 || opt.psi_samples < 4) throw ConfigError("flow sampling too coarse");

    const Interval& pr = curve.psi_range;
    for (std::size_t k = 0; k < opt.psi_samples; ++k) {
        const double psi = curve.periodic ? pr.lo + pr.length() * k / opt.psi_samples
                                          : pr.lo + pr.length() * k / (opt.psi_samples - 1);
        const CurveData c = curve_at(curve, psi);
        const double level = H(c.pt.x, c.pt.p);
        if (!(std::abs(level - 1.0) <= opt.level_tol)) {
            std::ostringstream os;
            os << "initial curve leaves the level H = 1 at psi = " << psi << " (H = " << level << ")";
            throw ConstructionError(os.str());
        }
        const double r = norm(c.pt.p);
        const std::array<double, 4> v1{H.C(c.pt.x) * c.pt.p.x / r, H.C(c.pt.x) * c.pt.p.y / r,
                                       -r * H.gradC(c.pt.x).x, -r * H.gradC(c.pt.x).y};
        const std::array<double, 4> v2{c.d.x.x, c.d.x.y, c.d.p.x, c.d.p.y};
        double n1 = 0, n2 = 0, d12 = 0;
        for (int i = 0; i < 4; ++i) {
            n1 += v1[i] * v1[i];
            n2 += v2[i] * v2[i];
            d12 += v1[i] * v2[i];
        }
        if (!(n1 * n2 - d12 * d12 > opt.transversality_tol * n1 * n2) || !(n2 > 0.0)) {
            std::ostringstream os;
            os << "ray field is tangent to the initial curve at psi = " << psi;
            throw ConstructionError(os.str());
        }
    }

    const double step = tau_span.length() / static_cast<double>(opt.steps);
    const double kpsi = pr.length() / static_cast<double>(opt.psi_samples);

    auto first_order = [H, curve, step](double tau, double psi) {
        const CurveData c = curve_at(curve, psi);
        return advance(H, {c.pt.x, c.pt.p, c.d.x, c.d.p}, tau, step, true);
    };

    ManifoldPatch::Spec spec;
    spec.name = "flow";
    spec.domain = {tau_span, pr};
    spec.periodic_psi = curve.periodic;
    spec.central_point = opt.central_point;
    spec.analytic_jets = false;
    spec.fd_step = kpsi;
    if (opt.measure == FlowMeasure::Invariant) {
        spec.mu = [first_order](double tau, double psi) {
            const Vec2 p = first_order(tau, psi).p;
            return 1.0 / dot(p, p);
        };
    }
    spec.jet = [H, first_order, kpsi](double tau, double psi, JetOrder order) {
        const Aug s = first_order(tau, psi);
        const double r = norm(s.p);
        PhaseJet j;
        j.X = s.x;
        j.P = s.p;
        j.X_tau = (H.C(s.x) / r) * s.p;
        j.P_tau = -r * H.gradC(s.x);
        j.X_psi = s.dx;
        j.P_psi = s.dp;
        if (order == JetOrder::Full) {
            const Aug a = first_order(tau, psi + kpsi), b = first_order(tau, psi - kpsi);
            j.X_psipsi = (a.dx - b.dx) / (2 * kpsi);
            j.P_psipsi = (a.dp - b.dp) / (2 * kpsi);
            j.X_psipsipsi = (a.dx - 2.0 * s.dx + b.dx) / (kpsi * kpsi);
        }
        return j;
    };
    const FlowMeasure measure = opt.measure;
    const unsigned threads = opt.threads;
    spec.grid_builder = [H, curve, step, measure, threads](const ManifoldPatch& patch, std::size_t n_tau,
                                                           std::size_t n_psi) {
        SampleGrid g;
        const Interval& t = patch.domain().tau;
        const Interval& p = patch.domain().psi;
        g.taus.resize(n_tau);
        g.psis.resize(n_psi);
        for (std::size_t i = 0; i < n_tau; ++i) g.taus[i] = t.lo + t.length() * i / (n_tau - 1);
        for (std::size_t k = 0; k < n_psi; ++k)
            g.psis[k] = patch.periodic_psi() ? p.lo + p.length() * k / n_psi : p.lo + p.length() * k / (n_psi - 1);
        g.X.resize(n_tau * n_psi);
        g.J.resize(n_tau * n_psi);
        g.J_tilde.resize(n_tau * n_psi);
        parallel_for(n_psi, threads, [&](std::size_t k) {
            const CurveData c = curve_at(curve, g.psis[k]);
            const Aug s0{c.pt.x, c.pt.p, c.d.x, c.d.p};
            auto store = [&](std::size_t i, const Aug& s) {
                const double r = norm(s.p);
                const Vec2 xt = (H.C(s.x) / r) * s.p;
                const double mu = measure == FlowMeasure::Invariant ? 1.0 / (r * r) : 1.0;
                const std::size_t idx = g.at(k, i);
                g.X[idx] = s.x;
                g.J[idx] = det(xt, s.dx) / mu;
                g.J_tilde[idx] = mu * det(s.p, s.dp);
            };
            // sweep outward from tau = 0 in both directions
            std::size_t first_pos = 0;
            while (first_pos < n_tau && g.taus[first_pos] < 0.0) ++first_pos;
            Aug s = s0;
            double at = 0.0;
            for (std::size_t i = first_pos; i < n_tau; ++i) {
                s = advance(H, s, g.taus[i] - at, step, true);
                at = g.taus[i];
                store(i, s);
            }
            s = s0;
            at = 0.0;
            for (std::size_t i = first_pos; i-- > 0;) {
                s = advance(H, s, g.taus[i] - at, step, true);
                at = g.taus[i];
                store(i, s);
            }
        });
        return g;
    };
    return ManifoldPatch(std::move(spec));
}

double TimeMap::t_of_tau(double tau, double psi) const {
    return integrate_real([&](double s) { return norm(patch_.eval_jet({s, psi}, JetOrder::First).P); }, 0.0, tau,
                          tol_);
}

double TimeMap::jacobian(double tau, double psi) const {
    return 1.0 / norm(patch_.eval_jet({tau, psi}, JetOrder::First).P);
}

double TimeMap::tau_of_t(double t, double psi) const {
    double tau = t * jacobian(0.0, psi);
    const Interval& dom = patch_.domain().tau;
    for (int it = 0; it < 60; ++it) {
        const double f = t_of_tau(tau, psi) - t;
        double next = tau - f * jacobian(tau, psi);
        next = std::clamp(next, dom.lo, dom.hi);
        if (std::abs(next - tau) <= 1e-14 * std::max(1.0, std::abs(tau))) return next;
        tau = next;
    }
    throw ConvergenceError("tau_of_t: Newton iteration did not converge");
}

std::function<Complex(double, double)> transport_amplitude(const ManifoldPatch& patch,
                                                           std::function<Complex(double)> A0) {
    return [patch, A0 = std::move(A0)](double tau, double psi) {
        return A0(psi) / norm(patch.eval_jet({tau, psi}, JetOrder::First).P);
    };
}

}  // namespace canop
