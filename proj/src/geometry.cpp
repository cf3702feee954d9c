#include "canop/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace canop {

Complex jacobian_eps(const PhaseJet& j, double mu, double eps) {
    const Complex a1(j.X_tau.x, -eps * j.P_tau.x), a2(j.X_tau.y, -eps * j.P_tau.y);
    const Complex b1(j.X_psi.x, -eps * j.P_psi.x), b2(j.X_psi.y, -eps * j.P_psi.y);
    return (a1 * b2 - a2 * b1) / mu;
}

JacobianTriple jacobians(const ManifoldPatch& patch, EikonalCoord at, double eps) {
    if (eps < 0) throw DomainError("jacobians: eps must be non-negative");
    const PhaseJet j = patch.eval_jet(at, JetOrder::First);
    const double mu = patch.mu(at);
    return {det(j.X_tau, j.X_psi) / mu, mu * det(j.P, j.P_psi), jacobian_eps(j, mu, eps)};
}

double arg_increment(const ManifoldPatch& patch, const std::vector<EikonalCoord>& path, double eps,
                     const IndexOptions& opt) {
    auto Jeps = [&](EikonalCoord c) {
        const Complex v = jacobians(patch, c, eps).J_eps;
        if (v == Complex(0.0, 0.0)) throw ConvergenceError("J^eps vanishes on the path; refine or move it");
        return v;
    };
    double total = 0.0;
    for (std::size_t seg = 0; seg + 1 < path.size(); ++seg) {
        const EikonalCoord a = path[seg], b = path[seg + 1];
        auto at = [&](double s) { return EikonalCoord{a.tau + s * (b.tau - a.tau), a.psi + s * (b.psi - a.psi)}; };
        double s = 0.0, ds = 1.0 / 64.0;
        Complex cur = Jeps(a);
        while (s < 1.0) {
            const double s1 = std::min(1.0, s + ds);
            const double sm = 0.5 * (s + s1);
            const Complex mid = Jeps(at(sm)), nxt = Jeps(at(s1));
            const double d1 = std::arg(mid / cur), d2 = std::arg(nxt / mid), d = std::arg(nxt / cur);
            const bool ok = std::abs(d1) + std::abs(d2) <= opt.max_phase_step && std::abs(d1 + d2 - d) < 1e-9;
            if (ok) {
                total += d1 + d2;
                s = s1;
                cur = nxt;
                ds *= 1.5;
            } else {
                ds *= 0.5;
                if (ds < opt.min_step) throw ConvergenceError("J^eps passes too close to zero; refine the path");
            }
        }
    }
    return total;
}

IndexResult maslov_index_point_detail(const ManifoldPatch& patch, const std::vector<EikonalCoord>& path,
                                      const IndexOptions& opt) {
    if (opt.eps.empty()) throw ConfigError("index computation needs at least one eps");
    IndexResult r;
    if (path.size() < 2) return r;
    const JacobianTriple end = jacobians(patch, path.back(), 0.0);
    if (std::abs(end.J) < 1e-12) throw ConvergenceError("index endpoint is a focal point");
    for (double e : opt.eps) r.per_eps.push_back(arg_increment(patch, path, e, opt) / kPi);
    const std::size_t n = r.per_eps.size();
    r.value = r.per_eps.back();
    if (n >= 2) {
        // the arg increment is smooth in eps; linear extrapolation from the two smallest
        const double ea = opt.eps[n - 2], eb = opt.eps[n - 1];
        const double va = r.per_eps[n - 2], vb = r.per_eps[n - 1];
        r.value = vb + (vb - va) * eb / (ea - eb);
    }
    r.index = static_cast<int>(std::lround(r.value));
    r.residual = std::abs(r.value - r.index);
    if (r.residual > opt.integrality_tol) {
        std::ostringstream os;
        os << "Maslov index not integral: extrapolated value " << r.value << " (residual " << r.residual << ")";
        throw ConvergenceError(os.str());
    }
    return r;
}

int maslov_index_point(const ManifoldPatch& patch, const std::vector<EikonalCoord>& path, const IndexOptions& opt) {
    return maslov_index_point_detail(patch, path, opt).index;
}

std::vector<EikonalCoord> default_index_path(const ManifoldPatch& patch, EikonalCoord target) {
    const EikonalCoord c = patch.central_point();
    double psi = target.psi;
    if (patch.periodic_psi()) {
        const double L = patch.domain().psi.length();
        psi = c.psi + std::remainder(target.psi - c.psi, L);
    }
    std::vector<EikonalCoord> path{c};
    if (psi != c.psi) path.push_back({c.tau, psi});
    if (target.tau != c.tau) path.push_back({target.tau, psi});
    if (path.size() == 1) path.push_back(c);
    return path;
}

int maslov_index_cycle(const ManifoldPatch& patch, const std::vector<EikonalCoord>& cycle, double eps) {
    if (!(eps > 0)) throw DomainError("cycle index needs eps > 0");
    const double v = arg_increment(patch, cycle, eps) / kPi;
    const double winding = v / 2.0;
    const long w = std::lround(winding);
    if (std::abs(winding - w) > 0.05) throw ConvergenceError("cycle is not closed or J^eps winding is not integral");
    return static_cast<int>(2 * w);
}

int singular_chart_index(const ManifoldPatch& patch, EikonalCoord chart_point, int central_index) {
    const PhaseJet j = patch.eval_jet(chart_point, JetOrder::First);
    const JacobianTriple t = jacobians(patch, chart_point, 0.0);
    const double jt_scale = norm(j.P) * norm(j.P_psi) * patch.mu(chart_point);
    if (!(std::abs(t.J_tilde) > 1e-12 * std::max(jt_scale, 1e-300)))
        throw DomainError("invalid singular chart: det(P, P_psi) vanishes at the chart point");
    if (std::abs(t.J) < 1e-12) throw DomainError("singular chart point must be regular (J != 0)");
    return ((t.J > 0) == (t.J_tilde > 0)) ? central_index : central_index + 1;
}

std::vector<QuantizationReport> check_quantization(const ManifoldPatch& patch,
                                                   const std::vector<std::vector<EikonalCoord>>& cycles, double h,
                                                   double tol) {
    if (!(h > 0)) throw DomainError("quantization check needs h > 0");
    std::vector<QuantizationReport> out;
    for (const auto& cyc : cycles) {
        QuantizationReport r;
        r.action = action_integral(patch, cyc);
        r.lhs = 2.0 / (kPi * h) * r.action;
        r.index = maslov_index_cycle(patch, cyc);
        const double d = r.lhs - r.index;
        r.residual = std::abs(d - 4.0 * std::round(d / 4.0));
        r.satisfied = r.residual <= tol;
        out.push_back(r);
    }
    return out;
}

std::string to_string(FocalKind k) {
    switch (k) {
        case FocalKind::Fold: return "Fold";
        case FocalKind::Cusp: return "Cusp";
        case FocalKind::Degenerate: return "Degenerate";
        default: return "Unclassified";
    }
}

namespace {

double J_at(const ManifoldPatch& patch, double tau, double psi) {
    const EikonalCoord c{tau, psi};
    const PhaseJet j = patch.eval_jet(c, JetOrder::First);
    return det(j.X_tau, j.X_psi) / patch.mu(c);
}

double a3_at(const ManifoldPatch& patch, EikonalCoord c) {
    const PhaseJet j = patch.eval_jet(c, JetOrder::Full);
    return -dot(j.P_psi, j.X_psipsi);
}

FocalPoint make_point(const ManifoldPatch& patch, double tau, double psi) {
    FocalPoint f;
    f.coord = {tau, psi};
    f.x_star = patch.eval_jet(f.coord, JetOrder::First).X;
    return f;
}

}  // namespace

double polish_focal_tau(const ManifoldPatch& patch, double psi, double lo, double hi, double tol) {
    double flo = J_at(patch, lo, psi), fhi = J_at(patch, hi, psi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0)) throw ConvergenceError("polish_focal_tau: no sign change in bracket");
    // Illinois false position
    int side = 0;
    for (int it = 0; it < 200; ++it) {
        const double m = (lo * fhi - hi * flo) / (fhi - flo);
        const double fm = J_at(patch, m, psi);
        if (fm == 0.0 || hi - lo < tol) return m;
        if ((fm > 0) == (fhi > 0)) {
            hi = m;
            fhi = fm;
            if (side == -1) flo *= 0.5;
            side = -1;
        } else {
            lo = m;
            flo = fm;
            if (side == 1) fhi *= 0.5;
            side = 1;
        }
        if (std::abs(hi - lo) < tol) break;
    }
    return 0.5 * (lo + hi);
}

std::vector<std::vector<FocalPoint>> find_focal_curves(const ManifoldPatch& patch, const FocalOptions& opt) {
    const SampleGrid& g = patch.grid();
    const std::size_t nt = g.taus.size(), np = g.psis.size();
    const double dtau = g.taus[1] - g.taus[0];
    double jmax = 0.0;
    for (double v : g.J) jmax = std::max(jmax, std::abs(v));
    const double zero = 1e-14 * std::max(jmax, 1e-300);

    struct Open {
        std::vector<FocalPoint> pts;
        std::size_t last_row;
    };
    std::vector<Open> curves;
    for (std::size_t k = 0; k < np; ++k) {
        const double psi = g.psis[k];
        std::vector<double> roots;
        std::size_t run = 0;
        for (std::size_t i = 0; i < nt; ++i) {
            const double v = g.J[g.at(k, i)];
            if (std::abs(v) <= zero) {
                if (++run >= 3) {
                    std::ostringstream os;
                    os << "degenerate patch: J vanishes identically near psi = " << psi;
                    throw DomainError(os.str());
                }
                if (v == 0.0) roots.push_back(g.taus[i]);
            } else {
                run = 0;
            }
            if (i + 1 < nt) {
                const double w = g.J[g.at(k, i + 1)];
                if (v != 0.0 && w != 0.0 && (v > 0) != (w > 0))
                    roots.push_back(polish_focal_tau(patch, psi, g.taus[i], g.taus[i + 1], opt.root_tol));
            }
        }
        std::vector<bool> used(curves.size(), false);
        for (double r : roots) {
            int best = -1;
            double bestd = 8.0 * dtau;
            for (std::size_t c = 0; c < curves.size(); ++c) {
                if (used[c] || curves[c].last_row + 1 != k) continue;
                const double d = std::abs(curves[c].pts.back().coord.tau - r);
                if (d < bestd) {
                    bestd = d;
                    best = static_cast<int>(c);
                }
            }
            if (best < 0) {
                curves.push_back({{}, k});
                used.push_back(true);
                best = static_cast<int>(curves.size() - 1);
            }
            used[best] = true;
            curves[best].pts.push_back(make_point(patch, r, psi));
            curves[best].last_row = k;
        }
    }

    std::vector<std::vector<FocalPoint>> out;
    for (Open& c : curves) {
        std::vector<FocalPoint> pts = std::move(c.pts);
        if (opt.locate_cusps && pts.size() >= 2) {
            std::vector<FocalPoint> refined;
            std::vector<double> a3(pts.size());
            for (std::size_t i = 0; i < pts.size(); ++i) a3[i] = a3_at(patch, pts[i].coord);
            for (std::size_t i = 0; i < pts.size(); ++i) {
                refined.push_back(pts[i]);
                if (i + 1 == pts.size()) break;
                if (a3[i] == 0.0 || a3[i + 1] == 0.0 || (a3[i] > 0) == (a3[i + 1] > 0)) continue;
                // root of a3 along the curve, with tau*(psi) re-polished at each trial psi
                const double tlo = std::min(pts[i].coord.tau, pts[i + 1].coord.tau) - 2.0 * dtau;
                const double thi = std::max(pts[i].coord.tau, pts[i + 1].coord.tau) + 2.0 * dtau;
                auto on_curve = [&](double psi) {
                    const double lo = std::max(tlo, patch.domain().tau.lo), hi = std::min(thi, patch.domain().tau.hi);
                    return EikonalCoord{polish_focal_tau(patch, psi, lo, hi, opt.root_tol), psi};
                };
                double plo = pts[i].coord.psi, phi = pts[i + 1].coord.psi;
                double flo = a3[i];
                try {
                    for (int it = 0; it < 80 && phi - plo > 1e-14; ++it) {
                        const double pm = 0.5 * (plo + phi);
                        const double fm = a3_at(patch, on_curve(pm));
                        if (fm == 0.0) { plo = phi = pm; break; }
                        if ((fm > 0) == (flo > 0)) { plo = pm; flo = fm; }
                        else phi = pm;
                    }
                    const EikonalCoord c0 = on_curve(0.5 * (plo + phi));
                    refined.push_back(make_point(patch, c0.tau, c0.psi));
                } catch (const ConvergenceError&) {
                    // J has no clean bracket between the rows; keep the grid points only
                }
            }
            pts = std::move(refined);
        }
        out.push_back(std::move(pts));
    }
    return out;
}

std::vector<FocalPoint> find_focal_points(const ManifoldPatch& patch, const FocalOptions& opt) {
    std::vector<FocalPoint> all;
    for (auto& c : find_focal_curves(patch, opt)) all.insert(all.end(), c.begin(), c.end());
    return all;
}

FocalPoint classify_focal_point(const ManifoldPatch& patch, const FocalPoint& at, const ClassifyOptions& opt) {
    FocalPoint f = at;
    const PhaseJet j = patch.eval_jet(f.coord, JetOrder::Full);
    f.x_star = j.X;
    TaylorCoeffs& c = f.coeffs;
    c.a0 = f.coord.tau;
    c.a1 = 0.0;
    c.a2 = 0.0;
    c.a3 = -dot(j.P_psi, j.X_psipsi);
    c.a4 = -dot(j.P_psi, j.X_psipsipsi);
    c.b0 = j.P;
    c.b1 = j.P_psi;
    f.scale = norm(j.P_psi) * std::max({norm(j.X_tau), norm(j.X_psipsi), norm(j.X_psipsipsi)});
    const double thr = opt.threshold * f.scale;
    if (std::abs(c.a3) > thr) f.kind = FocalKind::Fold;
    else if (std::abs(c.a4) > thr) f.kind = FocalKind::Cusp;
    else f.kind = FocalKind::Degenerate;
    c.b2 = f.kind == FocalKind::Fold ? j.P_psipsi - dot(j.P_tau, j.X_psipsi) * j.P : j.P_psipsi;
    f.x_psi_norm = norm(j.X_psi);
    f.fold_second = std::abs(dot(j.P, j.X_psipsi));
    f.fold_third = std::abs(dot(j.P, j.X_psipsipsi) + 2.0 * dot(j.P_psi, j.X_psipsi));
    f.det_identity = std::abs(std::abs(det(j.P, j.P_psi)) - norm(j.P) * norm(j.P_psi));
    return f;
}

}  // namespace canop
