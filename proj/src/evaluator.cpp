#include "canop/evaluator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "canop/parallel.hpp"
#include "canop/quadrature.hpp"

namespace canop {

std::string to_string(FieldMethod m) {
    switch (m) {
        case FieldMethod::WKB: return "wkb";
        case FieldMethod::SingularIntegral: return "integral";
        case FieldMethod::Airy: return "airy";
        case FieldMethod::Pearcey: return "pearcey";
        case FieldMethod::Blend: return "blend";
    }
    return "unknown";
}

namespace {

double wrap_psi(const ManifoldPatch& patch, double psi) {
    return patch.periodic_psi() ? patch.normalize({0.0, psi}).psi : psi;
}

double psi_distance(const ManifoldPatch& patch, double a, double b) {
    if (!patch.periodic_psi()) return std::abs(a - b);
    return std::abs(std::remainder(a - b, patch.domain().psi.length()));
}

double length_scale(const ManifoldPatch& patch) { return std::max(1.0, patch.length_scale()); }

}  // namespace

// ---------------------------------------------------------------------------
// Branches

std::vector<Branch> branch_solve(const ManifoldPatch& patch, Vec2 x, const BranchOptions& opt) {
    const SampleGrid& g = patch.grid();
    const std::size_t nt = g.taus.size(), np = g.psis.size();
    const bool periodic = patch.periodic_psi();
    const double period = patch.domain().psi.length();
    const Interval tdom = patch.domain().tau, pdom = patch.domain().psi;
    const double scale = length_scale(patch);
    const double tol = opt.residual_tol * scale;

    std::vector<EikonalCoord> seeds;
    const std::size_t rows = periodic ? np : np - 1;
    for (std::size_t k = 0; k < rows; ++k) {
        const std::size_t k1 = (k + 1) % np;
        const double psi0 = g.psis[k];
        const double psi1 = (k1 == 0) ? g.psis[0] + period : g.psis[k1];
        for (std::size_t i = 0; i + 1 < nt; ++i) {
            const Vec2 c[4] = {g.X[g.at(k, i)], g.X[g.at(k, i + 1)], g.X[g.at(k1, i)], g.X[g.at(k1, i + 1)]};
            double x0 = c[0].x, x1 = c[0].x, y0 = c[0].y, y1 = c[0].y;
            for (const Vec2& v : c) {
                x0 = std::min(x0, v.x);
                x1 = std::max(x1, v.x);
                y0 = std::min(y0, v.y);
                y1 = std::max(y1, v.y);
            }
            const double pad = 0.25 * std::max(x1 - x0, y1 - y0) + 1e-12 * scale;
            if (x.x < x0 - pad || x.x > x1 + pad || x.y < y0 - pad || x.y > y1 + pad) continue;
            seeds.push_back({0.5 * (g.taus[i] + g.taus[i + 1]), 0.5 * (psi0 + psi1)});
        }
    }

    std::vector<Branch> roots;
    for (EikonalCoord c : seeds) {
        c.psi = wrap_psi(patch, c.psi);
        bool converged = false;
        double res = 0.0;
        for (int it = 0; it < opt.max_iterations; ++it) {
            const PhaseJet j = patch.eval_jet(c, JetOrder::First);
            const Vec2 r = x - j.X;
            res = norm(r);
            if (res <= tol) {
                converged = true;
                break;
            }
            Eigen::Matrix2d M;
            M << j.X_tau.x, j.X_psi.x, j.X_tau.y, j.X_psi.y;
            Eigen::JacobiSVD<Eigen::Matrix2d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
            svd.setThreshold(1e-10);
            const Eigen::Vector2d d = svd.solve(Eigen::Vector2d(r.x, r.y));
            c.tau = std::clamp(c.tau + d(0), tdom.lo, tdom.hi);
            c.psi = periodic ? wrap_psi(patch, c.psi + d(1)) : std::clamp(c.psi + d(1), pdom.lo, pdom.hi);
        }
        if (!converged) continue;
        bool dup = false;
        for (const Branch& b : roots)
            if (std::abs(b.coord.tau - c.tau) <= 1e-7 * scale && psi_distance(patch, b.coord.psi, c.psi) <= 1e-7) {
                dup = true;
                break;
            }
        if (dup) continue;
        Branch b;
        b.coord = c;
        b.J = jacobians(patch, c, 0.0).J;
        b.residual = res;
        b.focal = std::abs(b.J) <= opt.focal_tol * scale;
        roots.push_back(b);
    }
    std::sort(roots.begin(), roots.end(), [](const Branch& a, const Branch& b) {
        return a.coord.psi != b.coord.psi ? a.coord.psi < b.coord.psi : a.coord.tau < b.coord.tau;
    });
    return roots;
}

IndexTable::IndexTable(ManifoldPatch patch, IndexOptions opt) : patch_(std::move(patch)), opt_(std::move(opt)) {}

int IndexTable::index(EikonalCoord at) const {
    at = patch_.normalize(at);
    const SampleGrid& g = patch_.grid();
    const std::size_t nt = g.taus.size(), np = g.psis.size();
    const double dtau = g.taus[1] - g.taus[0], dpsi = g.psis[1] - g.psis[0];
    const long i = std::clamp(static_cast<long>(std::floor((at.tau - g.taus[0]) / dtau)), 0L, static_cast<long>(nt) - 2);
    long k = static_cast<long>(std::floor((at.psi - g.psis[0]) / dpsi));
    long k1;
    if (patch_.periodic_psi()) {
        k = ((k % static_cast<long>(np)) + static_cast<long>(np)) % static_cast<long>(np);
        k1 = (k + 1) % static_cast<long>(np);
    } else {
        k = std::clamp(k, 0L, static_cast<long>(np) - 2);
        k1 = k + 1;
    }
    const double J = jacobians(patch_, at, 0.0).J;
    bool uniform = J != 0.0;
    for (long kk : {k, k1})
        for (long ii : {i, i + 1}) {
            const double v = g.J[g.at(static_cast<std::size_t>(kk), static_cast<std::size_t>(ii))];
            if (!(v != 0.0 && (v > 0) == (J > 0))) uniform = false;
        }
    const auto key = std::make_pair(k, i);
    if (uniform) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    const int m = maslov_index_point(patch_, default_index_path(patch_, at), opt_);
    if (uniform) {
        std::lock_guard<std::mutex> lock(mutex_);
        cache_.emplace(key, m);
    }
    return m;
}

namespace {

Complex wkb_term(const ManifoldPatch& patch, const Amplitude& A, Vec2 x, double h, EikonalCoord c, int m) {
    const PhaseJet j = patch.eval_jet(c, JetOrder::First);
    const double w = std::sqrt(patch.mu(c) * norm(j.P) / norm(j.X_psi));
    return std::polar(1.0, c.tau / h - 0.5 * kPi * m) * A(x, c.tau, c.psi) * w;
}

}  // namespace

FieldSample wkb_eval(const ManifoldPatch& patch, const Amplitude& A, Vec2 x, double h, const IndexTable& indices,
                     const BranchOptions& opt) {
    if (!(h > 0)) throw DomainError("wkb_eval: h must be positive");
    FieldSample s;
    s.x = x;
    s.h = h;
    s.method = FieldMethod::WKB;
    const auto roots = branch_solve(patch, x, opt);
    s.branch_count = static_cast<int>(roots.size());
    for (const Branch& b : roots) {
        if (b.focal) {
            std::ostringstream os;
            os << "WKB used at a focal branch (tau=" << b.coord.tau << ", psi=" << b.coord.psi
               << "); use the singular-chart or local caustic evaluators";
            throw MethodError(os.str());
        }
        s.u += wkb_term(patch, A, x, h, b.coord, indices.index(b.coord));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Singular charts

double solve_tau(const ManifoldPatch& patch, Vec2 x, double psi, double seed) {
    double tau = seed;
    for (int it = 0; it < 60; ++it) {
        const EikonalCoord c{tau, psi};
        if (!patch.contains(c)) {
            std::ostringstream os;
            os << "solve_tau: Newton left the patch at tau=" << tau << ", psi=" << psi
               << "; x is too far from the chart window";
            throw DomainError(os.str());
        }
        const PhaseJet j = patch.eval_jet(c, JetOrder::First);
        const Vec2 d = x - j.X;
        const double g = dot(j.P, d);
        const double gp = dot(j.P_tau, d) - dot(j.P, j.X_tau);
        const double gscale = norm(j.P) * std::max({1.0, norm(x), norm(j.X)});
        if (std::abs(g) <= 1e-13 * gscale) return tau;
        if (gp == 0.0) break;
        tau -= g / gp;
    }
    std::ostringstream os;
    os << "solve_tau: Newton did not converge at psi=" << psi << "; x is too far from the chart window";
    throw DomainError(os.str());
}

namespace {

const GaussRule& gl_rule(int n) {
    static const GaussRule r10 = gauss_legendre(10);
    static const GaussRule r20 = gauss_legendre(20);
    return n == 10 ? r10 : r20;
}

// Continuation state for tau(x, psi) along increasing psi.
class TauTracker {
public:
    TauTracker(const ManifoldPatch& patch, Vec2 x, const SingularChart& chart)
        : patch_(patch), x_(x), chart_(chart) {}

    // Returns false when the root is unavailable but the cutoff vanishes there.
    bool solve(double psi, double& tau) {
        if (!have_) {
            tau = first_root(psi);
            prev_ = tau;
            have_ = true;
            return true;
        }
        try {
            tau = solve_tau(patch_, x_, psi, prev_);
        } catch (const DomainError&) {
            if (chart_.cutoff && chart_.cutoff(clamped(prev_), psi) == 0.0) return false;
            // retry from the seed function or a grid search before giving up
            tau = first_root(psi);
        }
        prev_ = tau;
        return true;
    }

private:
    double clamped(double t) const { return std::clamp(t, patch_.domain().tau.lo, patch_.domain().tau.hi); }

    double first_root(double psi) {
        std::vector<double> seeds;
        if (chart_.tau_seed) seeds.push_back(chart_.tau_seed(psi));
        seeds.push_back(patch_.central_point().tau);
        const SampleGrid& g = patch_.grid();
        std::vector<double> grid = g.taus;
        const double c = patch_.central_point().tau;
        std::stable_sort(grid.begin(), grid.end(),
                         [c](double a, double b) { return std::abs(a - c) < std::abs(b - c); });
        seeds.insert(seeds.end(), grid.begin(), grid.end());
        for (double s : seeds) {
            try {
                return solve_tau(patch_, x_, psi, s);
            } catch (const DomainError&) {
            }
        }
        std::ostringstream os;
        os << "singular chart: no root of <P, x - X> = 0 at psi=" << psi;
        throw DomainError(os.str());
    }

    const ManifoldPatch& patch_;
    Vec2 x_;
    const SingularChart& chart_;
    double prev_ = 0.0;
    bool have_ = false;
};

}  // namespace

FieldSample singular_integral_eval(const ManifoldPatch& patch, const Amplitude& A, const SingularChart& chart,
                                   Vec2 x, double h, const IntegralOptions& opt) {
    if (!(h > 0)) throw DomainError("singular_integral_eval: h must be positive");
    Interval win = chart.psi;
    if (!win.bounded()) win = patch.domain().psi;
    if (!(win.length() > 0)) throw ConfigError("singular chart needs a nonempty psi window");

    FieldSample s;
    s.x = x;
    s.h = h;
    s.method = FieldMethod::SingularIntegral;

    auto integrand = [&](double tau, double psi) -> Complex {
        const double w = chart.cutoff ? chart.cutoff(tau, psi) : 1.0;
        if (w == 0.0) return {};
        const EikonalCoord c{tau, psi};
        const PhaseJet j = patch.eval_jet(c, JetOrder::First);
        const double dens = std::sqrt(patch.mu(c) * std::abs(det(j.P, j.P_psi)));
        return std::polar(w * dens, tau / h) * A(x, tau, psi);
    };

    // coarse pass: continuation seeds and the largest phase derivative <P_psi, x - X>
    const std::size_t ns = std::max<std::size_t>(opt.seed_samples, 3);
    double fmax = 0.0;
    {
        TauTracker tr(patch, x, chart);
        for (std::size_t k = 0; k < ns; ++k) {
            const double psi = win.lo + win.length() * k / (ns - 1);
            double tau;
            if (!tr.solve(psi, tau)) continue;
            const PhaseJet j = patch.eval_jet({tau, psi}, JetOrder::First);
            fmax = std::max(fmax, std::abs(dot(j.P_psi, x - j.X)));
        }
    }
    std::size_t panels = std::max<std::size_t>(
        16, static_cast<std::size_t>(std::ceil(2.0 * win.length() * fmax / (kPi * h))));

    const GaussRule& r10 = gl_rule(10);
    const GaussRule& r20 = gl_rule(20);
    struct Node {
        double psi;
        double w10, w20;
        std::size_t panel;
    };
    for (;;) {
        if (30 * panels > opt.node_budget) {
            throw AccuracyError("singular integral: node budget exhausted before reaching tolerance",
                                std::numeric_limits<double>::infinity());
        }
        std::vector<Node> nodes;
        nodes.reserve(30 * panels);
        const double hw = 0.5 * win.length() / panels;
        for (std::size_t p = 0; p < panels; ++p) {
            const double c = win.lo + (2 * p + 1) * hw;
            const std::size_t first = nodes.size();
            for (std::size_t i = 0; i < r10.nodes.size(); ++i) nodes.push_back({c + hw * r10.nodes[i], hw * r10.weights[i], 0.0, p});
            for (std::size_t i = 0; i < r20.nodes.size(); ++i) nodes.push_back({c + hw * r20.nodes[i], 0.0, hw * r20.weights[i], p});
            std::sort(nodes.begin() + first, nodes.end(), [](const Node& a, const Node& b) { return a.psi < b.psi; });
        }
        TauTracker tr(patch, x, chart);
        std::vector<Complex> p10(panels), p20(panels);
        for (const Node& n : nodes) {
            double tau;
            if (!tr.solve(n.psi, tau)) continue;
            const Complex f = integrand(tau, n.psi);
            p10[n.panel] += n.w10 * f;
            p20[n.panel] += n.w20 * f;
        }
        Complex I{};
        double err = 0.0;
        for (std::size_t p = 0; p < panels; ++p) {
            I += p20[p];
            err += std::abs(p20[p] - p10[p]);
        }
        const double target = std::max(opt.abs_tol, opt.rel_tol * std::abs(I));
        if (err <= target) {
            const Complex pref = std::polar(1.0 / std::sqrt(kTwoPi * h), 0.25 * kPi - 0.5 * kPi * chart.index);
            s.u = pref * I;
            s.quad_error = err * std::abs(pref);
            return s;
        }
        if (60 * panels > opt.node_budget) {
            std::ostringstream os;
            os << "singular integral: tolerance " << target << " not reached within " << opt.node_budget
               << " nodes (estimate " << err << ")";
            throw AccuracyError(os.str(), err);
        }
        panels *= 2;
    }
}

// ---------------------------------------------------------------------------
// Chart covers

double smooth_step(double u) {
    if (u <= 0.0) return 1.0;
    if (u >= 1.0) return 0.0;
    const double a = std::exp(-1.0 / (1.0 - u)), b = std::exp(-1.0 / u);
    return a / (a + b);
}

double window_weight(double t, Interval w, double plateau) {
    const double half = 0.5 * w.length();
    if (!(half > 0)) return 0.0;
    const double s = std::abs(t - w.mid()) / half;
    if (s <= plateau) return 1.0;
    if (s >= 1.0) return 0.0;
    return smooth_step((s - plateau) / (1.0 - plateau));
}

double ChartCover::raw_weight(std::size_t j, const ManifoldPatch& patch, EikonalCoord at) const {
    const Chart& c = charts_.at(j);
    double w = 1.0;
    if (c.tau.bounded()) {
        if (c.taper_tau) w *= window_weight(at.tau, c.tau, c.plateau);
        else if (!c.tau.contains(at.tau)) return 0.0;
    }
    if (c.psi.bounded()) {
        double psi = at.psi;
        if (patch.periodic_psi()) {
            const double period = patch.domain().psi.length();
            if (c.psi.length() >= period) psi = c.psi.mid();   // full turn
            else psi = c.psi.mid() + std::remainder(psi - c.psi.mid(), period);
        }
        if (c.taper_psi) w *= window_weight(psi, c.psi, c.plateau);
        else if (!c.psi.contains(psi)) return 0.0;
    }
    return w;
}

double ChartCover::cutoff(std::size_t j, const ManifoldPatch& patch, EikonalCoord at) const {
    double sum = 0.0, wj = 0.0;
    for (std::size_t k = 0; k < charts_.size(); ++k) {
        const double w = raw_weight(k, patch, at);
        if (k == j) wj = w;
        sum += w;
    }
    return sum > 0.0 ? wj / sum : 0.0;
}

ChartCover ChartCover::single_singular(const ManifoldPatch& patch) {
    const SampleGrid& g = patch.grid();
    double jmax = 0.0;
    for (double v : g.J_tilde) jmax = std::max(jmax, std::abs(v));
    for (std::size_t k = 0; k < g.J_tilde.size(); ++k)
        if (!(std::abs(g.J_tilde[k]) > 1e-12 * jmax)) {
            std::ostringstream os;
            os << "automatic cover: det(P, P_psi) vanishes near tau=" << g.taus[k % g.taus.size()]
               << ", psi=" << g.psis[k / g.taus.size()] << "; give an explicit chart cover";
            throw ConfigError(os.str());
        }
    Chart c;
    c.kind = Chart::Kind::Singular;
    // whole patch, no taper: amplitudes are expected to vanish at open psi ends themselves
    c.reference = patch.central_point();
    return ChartCover({c});
}

ChartCover ChartCover::single_regular() {
    Chart c;
    c.kind = Chart::Kind::Regular;
    return ChartCover({c});
}

CoverReport ChartCover::prepare(const ManifoldPatch& patch, const IndexTable& indices) {
    if (charts_.empty()) throw ConfigError("chart cover is empty");
    CoverReport rep;
    rep.min_weight_sum = std::numeric_limits<double>::infinity();
    const auto samples = regular_samples(patch, 64, 64);
    const double scale = length_scale(patch);
    for (const EikonalCoord& c : samples) {
        double sum = 0.0;
        for (std::size_t j = 0; j < charts_.size(); ++j) sum += raw_weight(j, patch, c);
        rep.min_weight_sum = std::min(rep.min_weight_sum, sum);
        if (!(sum > 0.0)) {
            rep.partition_error = 1.0;
            std::ostringstream os;
            os << "chart cover does not partition unity: (tau=" << c.tau << ", psi=" << c.psi << ") is uncovered";
            rep.message = os.str();
            throw ConfigError(rep.message);
        }
        double esum = 0.0;
        for (std::size_t j = 0; j < charts_.size(); ++j) esum += raw_weight(j, patch, c) / sum;
        rep.partition_error = std::max(rep.partition_error, std::abs(esum - 1.0));
        const JacobianTriple t = jacobians(patch, c, 0.0);
        const PhaseJet jet = patch.eval_jet(c, JetOrder::First);
        for (std::size_t j = 0; j < charts_.size(); ++j) {
            if (raw_weight(j, patch, c) == 0.0) continue;
            if (charts_[j].kind == Chart::Kind::Singular) {
                const double ref = patch.mu(c) * norm(jet.P) * norm(jet.P_psi);
                if (!(std::abs(t.J_tilde) > 1e-12 * ref)) rep.singular_ok = false;
            } else if (!(std::abs(t.J) > 1e-8 * scale)) {
                rep.regular_ok = false;
            }
        }
    }
    // focal points between samples: sign changes of J along the cached grid rows
    const SampleGrid& g = patch.grid();
    for (std::size_t k = 0; k < g.psis.size() && rep.regular_ok; ++k)
        for (std::size_t i = 0; i + 1 < g.taus.size(); ++i) {
            const double a = g.J[g.at(k, i)], b = g.J[g.at(k, i + 1)];
            if (a != 0.0 && b != 0.0 && (a > 0) == (b > 0)) continue;
            for (std::size_t j = 0; j < charts_.size(); ++j) {
                if (charts_[j].kind != Chart::Kind::Regular) continue;
                if (raw_weight(j, patch, {g.taus[i], g.psis[k]}) > 0.0 ||
                    raw_weight(j, patch, {g.taus[i + 1], g.psis[k]}) > 0.0)
                    rep.regular_ok = false;
            }
        }
    if (!rep.singular_ok) throw ConfigError("singular chart contains points with det(P, P_psi) = 0");
    if (!rep.regular_ok) throw ConfigError("regular chart contains focal points");
    for (Chart& c : charts_) {
        if (c.kind != Chart::Kind::Singular) continue;
        EikonalCoord ref = c.reference;
        const ChartCover self({c});
        if (!(self.raw_weight(0, patch, ref) > 0.0) || std::abs(jacobians(patch, ref, 0.0).J) < 1e-8 * scale) {
            double best = -1.0;
            for (const EikonalCoord& s : samples) {
                const double w = self.raw_weight(0, patch, s);
                const double J = std::abs(jacobians(patch, s, 0.0).J);
                if (w > 0.0 && J > 1e-3 * scale && w > best) {
                    best = w;
                    ref = s;
                }
            }
            if (best < 0) throw ConfigError("singular chart has no regular reference point");
            c.reference = ref;
        }
        c.index = singular_chart_index(patch, ref, indices.index(ref));
    }
    return rep;
}

FieldSample global_eval(const ManifoldPatch& patch, const Amplitude& A, const ChartCover& cover, Vec2 x, double h,
                        const IndexTable& indices, const GlobalOptions& opt) {
    if (!(h > 0)) throw DomainError("global_eval: h must be positive");
    FieldSample s;
    s.x = x;
    s.h = h;
    bool any_regular = false, any_singular = false;
    for (const Chart& c : cover.charts()) (c.kind == Chart::Kind::Regular ? any_regular : any_singular) = true;
    if (!any_regular && !any_singular) throw ConfigError("chart cover is empty");

    if (any_regular) {
        const auto roots = branch_solve(patch, x, opt.branch);
        s.branch_count = static_cast<int>(roots.size());
        for (const Branch& b : roots) {
            double e = 0.0;
            for (std::size_t j = 0; j < cover.charts().size(); ++j)
                if (cover.charts()[j].kind == Chart::Kind::Regular) e += cover.cutoff(j, patch, b.coord);
            if (e == 0.0) continue;
            if (b.focal) throw MethodError("regular chart weight at a focal branch; the cover is invalid here");
            s.u += e * wkb_term(patch, A, x, h, b.coord, indices.index(b.coord));
        }
    }
    for (std::size_t j = 0; j < cover.charts().size(); ++j) {
        const Chart& c = cover.charts()[j];
        if (c.kind != Chart::Kind::Singular) continue;
        SingularChart sc;
        sc.psi = c.psi.bounded() ? c.psi : patch.domain().psi;
        if (patch.periodic_psi() && sc.psi.length() > patch.domain().psi.length())
            sc.psi = {sc.psi.lo, sc.psi.lo + patch.domain().psi.length()};
        sc.index = c.index;
        sc.cutoff = [&cover, &patch, j](double tau, double psi) {
            return cover.cutoff(j, patch, patch.normalize({tau, psi}));
        };
        const FieldSample part = singular_integral_eval(patch, A, sc, x, h, opt.integral);
        s.u += part.u;
        s.quad_error += part.quad_error;
    }
    s.method = any_regular && any_singular ? FieldMethod::Blend
               : any_regular              ? FieldMethod::WKB
                                          : FieldMethod::SingularIntegral;
    return s;
}

// ---------------------------------------------------------------------------
// Batch driver

std::vector<Vec2> GridSpec::points() const {
    if (n1 < 1 || n2 < 1) throw ConfigError("grid counts must be at least 1");
    std::vector<Vec2> out;
    out.reserve(n1 * n2);
    for (std::size_t j = 0; j < n2; ++j) {
        const double y = n2 == 1 ? x2.lo : x2.lo + x2.length() * j / (n2 - 1);
        for (std::size_t i = 0; i < n1; ++i) {
            const double xx = n1 == 1 ? x1.lo : x1.lo + x1.length() * i / (n1 - 1);
            out.push_back({xx, y});
        }
    }
    return out;
}

CausticSet::CausticSet(const ManifoldPatch& patch) : curves_(find_focal_curves(patch)) {}

double CausticSet::distance(Vec2 x) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : curves_) {
        for (std::size_t k = 0; k < c.size(); ++k) {
            best = std::min(best, norm(x - c[k].x_star));
            if (k + 1 < c.size()) {
                const Vec2 a = c[k].x_star, b = c[k + 1].x_star, d = b - a;
                const double L2 = dot(d, d);
                if (L2 > 0) {
                    const double t = std::clamp(dot(x - a, d) / L2, 0.0, 1.0);
                    best = std::min(best, norm(x - (a + t * d)));
                }
            }
        }
    }
    return best;
}

double dispatch_radius(const ManifoldPatch& patch, double h, double factor) {
    return factor * std::pow(h, 2.0 / 3.0) * patch.length_scale();
}

std::vector<FieldSample> grid_eval(const ManifoldPatch& patch, const Amplitude& A, const ChartCover& cover,
                                   const std::vector<Vec2>& points, double h, DispatchMethod method,
                                   const GridOptions& opt) {
    if (!(h > 0)) throw ConfigError("h must be positive");
    IndexTable indices(patch);
    const CausticSet caustic(patch);
    ChartCover near = cover.charts().empty() ? ChartCover::single_singular(patch) : cover;
    if (method != DispatchMethod::ForceWKB) near.prepare(patch, indices);
    const double d0 = dispatch_radius(patch, h, opt.dispatch_factor);

    std::vector<FieldSample> out(points.size());
    parallel_for(points.size(), opt.threads, [&](std::size_t k) {
        const Vec2 x = points[k];
        const double dist = caustic.distance(x);
        FieldSample s;
        try {
            const bool wkb = method == DispatchMethod::ForceWKB || (method == DispatchMethod::Auto && dist > d0);
            s = wkb ? wkb_eval(patch, A, x, h, indices, opt.global.branch)
                    : global_eval(patch, A, near, x, h, indices, opt.global);
        } catch (const Error& e) {
            s = FieldSample{};
            s.x = x;
            s.h = h;
            s.u = Complex(std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN());
            s.ok = false;
            s.reason = e.what();
            s.method = method == DispatchMethod::ForceIntegral ? FieldMethod::SingularIntegral : FieldMethod::WKB;
        }
        s.nearest_caustic_distance = dist;
        out[k] = s;
    });
    return out;
}

}  // namespace canop
