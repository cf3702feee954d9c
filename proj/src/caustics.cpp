#include "canop/caustics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace canop {

double valid_radius(const ManifoldPatch& patch, double h, double radius_factor) {
    return radius_factor * std::pow(h, 5.0 / 6.0) * patch.length_scale();
}

double LocalExpansion::phase_linear(Vec2 x) const {
    return (focal.coord.tau + dot(focal.coeffs.b0, x - focal.x_star)) / h;
}

double LocalExpansion::airy_argument(Vec2 x) const {
    const double q1 = dot(focal.coeffs.b1, x - focal.x_star);
    return q1 * std::cbrt(2.0 / focal.coeffs.a3) * std::pow(h, -2.0 / 3.0);
}

std::pair<double, double> LocalExpansion::pearcey_arguments(Vec2 x) const {
    const Vec2 z = x - focal.x_star;
    const double q1 = dot(focal.coeffs.b1, z), q2 = dot(focal.coeffs.b2, z);
    return {q2 * scale * scale / (2.0 * h), q1 * scale / h};
}

Complex LocalExpansion::evaluate(Vec2 x) const {
    const Complex osc = std::polar(1.0, phase_linear(x));
    if (focal.kind == FocalKind::Fold) return prefactor * osc * airy_ai(airy_argument(x));
    const auto [v, y] = pearcey_arguments(x);
    return prefactor * osc * pearcey(v, y, sign);
}

LocalExpansion local_expansion(const ManifoldPatch& patch, const Amplitude& A, const FocalPoint& focal, double h,
                               const LocalOptions& opt) {
    if (!(h > 0)) throw DomainError("local expansion needs h > 0");
    LocalExpansion e;
    e.focal = focal.kind == FocalKind::Unclassified ? classify_focal_point(patch, focal) : focal;
    e.h = h;
    e.valid_radius = valid_radius(patch, h, opt.radius_factor);
    const FocalPoint& f = e.focal;
    if (f.kind != FocalKind::Fold && f.kind != FocalKind::Cusp)
        throw MethodError("local expansion needs a fold or cusp point, got " + to_string(f.kind));

    const PhaseJet j = patch.eval_jet(f.coord, JetOrder::First);
    const double dens = std::sqrt(patch.mu(f.coord) * std::abs(det(j.P, j.P_psi)));
    const Complex amp = A(f.x_star, f.coord.tau, f.coord.psi);
    // (i / (2 pi h))^{1/2} e^{-i pi m / 2}
    const Complex chart = std::polar(1.0 / std::sqrt(kTwoPi * h), 0.25 * kPi - 0.5 * kPi * opt.chart_index);
    if (f.kind == FocalKind::Fold) {
        e.scale = std::cbrt(std::abs(2.0 * h / f.coeffs.a3));
    } else {
        e.scale = std::pow(24.0 * h / std::abs(f.coeffs.a4), 0.25);
        e.sign = f.coeffs.a4 > 0 ? PearceySign::Plus : PearceySign::Minus;
    }
    e.prefactor = chart * amp * dens * kTwoPi * e.scale;
    return e;
}

namespace {

FieldSample local_field(const ManifoldPatch& patch, const Amplitude& A, const FocalPoint& focal, Vec2 x, double h,
                        const LocalOptions& opt, FocalKind want) {
    const LocalExpansion e = local_expansion(patch, A, focal, h, opt);
    if (e.focal.kind != want) {
        std::ostringstream os;
        os << (want == FocalKind::Fold ? "airy" : "pearcey") << " local field needs a "
           << (want == FocalKind::Fold ? "fold" : "cusp") << " point, got " << to_string(e.focal.kind);
        throw MethodError(os.str());
    }
    const double d = norm(x - e.focal.x_star);
    if (d > e.valid_radius) {
        std::ostringstream os;
        os << "x is " << d << " from the focal point, beyond the valid radius " << e.valid_radius
           << "; use the singular-chart integral";
        throw RangeError(os.str());
    }
    FieldSample s;
    s.x = x;
    s.h = h;
    s.method = want == FocalKind::Fold ? FieldMethod::Airy : FieldMethod::Pearcey;
    s.nearest_caustic_distance = d;
    s.u = e.evaluate(x);
    return s;
}

}  // namespace

FieldSample airy_local_field(const ManifoldPatch& patch, const Amplitude& A, const FocalPoint& focal, Vec2 x,
                             double h, const LocalOptions& opt) {
    return local_field(patch, A, focal, x, h, opt, FocalKind::Fold);
}

FieldSample pearcey_local_field(const ManifoldPatch& patch, const Amplitude& A, const FocalPoint& focal, Vec2 x,
                                double h, const LocalOptions& opt) {
    return local_field(patch, A, focal, x, h, opt, FocalKind::Cusp);
}

namespace {

struct PolyFit {
    std::vector<double> q;   // derivatives q_k = d^k Delta / d beta^k at beta = 0
    double condition = 0.0;
};

PolyFit fit_phase(const ManifoldPatch& patch, Vec2 x, const FocalPoint& f, double w, int degree, int samples) {
    Eigen::MatrixXd V(samples, degree + 1);
    Eigen::VectorXd rhs(samples);
    // continuation outwards from psi* in both directions
    std::vector<double> ts(samples);
    for (int i = 0; i < samples; ++i) ts[i] = -std::cos(kPi * (i + 0.5) / samples);
    std::vector<double> taus(samples);
    const int mid = samples / 2;
    double seed = f.coord.tau;
    for (int i = mid; i < samples; ++i) seed = taus[i] = solve_tau(patch, x, f.coord.psi + w * ts[i], seed);
    seed = taus[mid];
    for (int i = mid - 1; i >= 0; --i) seed = taus[i] = solve_tau(patch, x, f.coord.psi + w * ts[i], seed);
    for (int i = 0; i < samples; ++i) {
        double p = 1.0;
        for (int k = 0; k <= degree; ++k, p *= ts[i]) V(i, k) = p;
        rhs(i) = taus[i] - f.coord.tau;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd c = svd.solve(rhs);
    PolyFit r;
    const auto& sv = svd.singularValues();
    r.condition = sv(0) / sv(sv.size() - 1);
    double fact = 1.0, wk = 1.0;
    for (int k = 0; k <= degree; ++k) {
        if (k > 0) {
            fact *= k;
            wk *= w;
        }
        r.q.push_back(c(k) * fact / wk);
    }
    return r;
}

}  // namespace

TaylorCheckReport taylor_phase_check(const ManifoldPatch& patch, const FocalPoint& focal,
                                     const TaylorCheckOptions& opt) {
    if (opt.degree < 4 || opt.samples <= opt.degree) throw ConfigError("taylor check needs degree >= 4 and more samples");
    TaylorCheckReport rep;
    const FocalPoint f = focal.kind == FocalKind::Unclassified ? classify_focal_point(patch, focal) : focal;
    rep.closed = f.coeffs;

    double w = opt.window;
    if (!patch.periodic_psi()) {
        const Interval p = patch.domain().psi;
        w = std::min({w, f.coord.psi - p.lo, p.hi - f.coord.psi});
        if (!(w > 0)) throw DomainError("taylor check: focal point on the psi boundary");
    }
    const PolyFit base = fit_phase(patch, f.x_star, f, w, opt.degree, opt.samples);
    rep.condition = base.condition;
    rep.fitted.a0 = f.coord.tau + base.q[0];
    rep.fitted.a1 = base.q[1];
    rep.fitted.a2 = base.q[2];
    rep.fitted.a3 = base.q[3];
    rep.fitted.a4 = base.q[4];

    const double dz = opt.z_step * patch.length_scale();
    Vec2 grad[3];
    for (int axis = 0; axis < 2; ++axis) {
        const Vec2 e = axis == 0 ? Vec2{dz, 0.0} : Vec2{0.0, dz};
        const PolyFit plus = fit_phase(patch, f.x_star + e, f, w, opt.degree, opt.samples);
        const PolyFit minus = fit_phase(patch, f.x_star - e, f, w, opt.degree, opt.samples);
        rep.condition = std::max({rep.condition, plus.condition, minus.condition});
        for (int k = 0; k < 3; ++k) {
            const double d = (plus.q[k] - minus.q[k]) / (2.0 * dz);
            (axis == 0 ? grad[k].x : grad[k].y) = d;
        }
    }
    rep.fitted.b0 = grad[0];
    rep.fitted.b1 = grad[1];
    rep.fitted.b2 = grad[2];

    const TaylorCoeffs& c = rep.closed;
    rep.a0_dev = std::abs(rep.fitted.a0 - c.a0);
    rep.a1_dev = std::abs(rep.fitted.a1 - c.a1);
    rep.a2_dev = std::abs(rep.fitted.a2 - c.a2);
    rep.a3_rel = std::abs(rep.fitted.a3 - c.a3) / std::max(std::abs(c.a3), 1e-300);
    rep.a4_rel = std::abs(rep.fitted.a4 - c.a4) / std::max(std::abs(c.a4), 1e-300);
    rep.b0_dev = norm(rep.fitted.b0 - c.b0);
    rep.b1_dev = norm(rep.fitted.b1 - c.b1);
    rep.b2_dev = norm(rep.fitted.b2 - c.b2);
    if (rep.condition > opt.max_condition) {
        rep.flagged = true;
        std::ostringstream os;
        os << "fit condition number " << rep.condition << " exceeds " << opt.max_condition;
        rep.message = os.str();
    }
    return rep;
}

}  // namespace canop
