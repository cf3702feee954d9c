#include "canop/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include "canop/quadrature.hpp"

namespace canop {

struct ManifoldPatch::Cache {
    std::once_flag once;
    SampleGrid grid;
};

ManifoldPatch::ManifoldPatch(Spec spec) : spec_(std::move(spec)), cache_(std::make_shared<Cache>()) {
    if (!spec_.jet) throw ConfigError("manifold patch '" + spec_.name + "' has no jet evaluator");
    if (!(spec_.domain.tau.hi > spec_.domain.tau.lo) || !(spec_.domain.psi.hi > spec_.domain.psi.lo))
        throw ConfigError("manifold patch '" + spec_.name + "' has an empty domain");
    if (spec_.periodic_psi && !spec_.domain.psi.bounded())
        throw ConfigError("periodic psi needs a bounded period");
    if (spec_.grid_tau < 2 || spec_.grid_psi < 2) throw ConfigError("sample grid needs at least 2x2 points");
}

namespace {

double fd_scale(const Interval& iv) {
    return iv.bounded() ? std::max(1.0, iv.length() / 10.0) : 1.0;
}

}  // namespace

ManifoldPatch ManifoldPatch::from_map(std::string name, MapFn map, PatchDomain domain, bool periodic_psi,
                                      EikonalCoord central_point, MuFn mu) {
    const double ht = 1e-5 * fd_scale(domain.tau);
    const double hp = 1e-5 * fd_scale(domain.psi);
    const double kp = 2e-3 * fd_scale(domain.psi);
    Spec s;
    s.name = std::move(name);
    s.domain = domain;
    s.periodic_psi = periodic_psi;
    s.central_point = central_point;
    s.mu = std::move(mu);
    s.analytic_jets = false;
    s.fd_step = hp;
    s.jet = [map, ht, hp, kp](double tau, double psi, JetOrder order) {
        PhaseJet j;
        const PhasePoint c = map(tau, psi);
        j.X = c.x;
        j.P = c.p;
        const PhasePoint tp = map(tau + ht, psi), tm = map(tau - ht, psi);
        const PhasePoint pp = map(tau, psi + hp), pm = map(tau, psi - hp);
        j.X_tau = (tp.x - tm.x) / (2 * ht);
        j.P_tau = (tp.p - tm.p) / (2 * ht);
        j.X_psi = (pp.x - pm.x) / (2 * hp);
        j.P_psi = (pp.p - pm.p) / (2 * hp);
        if (order == JetOrder::Full) {
            const PhasePoint a1 = map(tau, psi + kp), b1 = map(tau, psi - kp);
            const PhasePoint a2 = map(tau, psi + 2 * kp), b2 = map(tau, psi - 2 * kp);
            j.X_psipsi = (a1.x - 2.0 * c.x + b1.x) / (kp * kp);
            j.P_psipsi = (a1.p - 2.0 * c.p + b1.p) / (kp * kp);
            j.X_psipsipsi = (a2.x - 2.0 * a1.x + 2.0 * b1.x - b2.x) / (2 * kp * kp * kp);
        }
        return j;
    };
    return ManifoldPatch(std::move(s));
}

bool ManifoldPatch::contains(EikonalCoord at, double slack) const {
    if (!std::isfinite(at.tau) || !std::isfinite(at.psi)) return false;
    if (!spec_.domain.tau.contains(at.tau, slack)) return false;
    return spec_.periodic_psi || spec_.domain.psi.contains(at.psi, slack);
}

EikonalCoord ManifoldPatch::normalize(EikonalCoord at) const {
    if (spec_.periodic_psi) {
        const double lo = spec_.domain.psi.lo;
        const double L = spec_.domain.psi.length();
        double r = std::fmod(at.psi - lo, L);
        if (r < 0) r += L;
        if (r >= L) r = 0.0;
        at.psi = lo + r;
    }
    return at;
}

PhaseJet ManifoldPatch::eval_jet(EikonalCoord at, JetOrder order) const {
    if (!contains(at)) {
        std::ostringstream os;
        os << "eval_jet: (tau=" << at.tau << ", psi=" << at.psi << ") outside patch '" << spec_.name << "'";
        throw DomainError(os.str());
    }
    at = normalize(at);
    return spec_.jet(at.tau, at.psi, order);
}

double ManifoldPatch::mu(EikonalCoord at) const {
    if (!spec_.mu) return 1.0;
    at = normalize(at);
    return spec_.mu(at.tau, at.psi);
}

SampleGrid ManifoldPatch::build_grid_by_sampling(std::size_t n_tau, std::size_t n_psi) const {
    SampleGrid g;
    const Interval& t = spec_.domain.tau;
    const Interval& p = spec_.domain.psi;
    g.taus.resize(n_tau);
    g.psis.resize(n_psi);
    for (std::size_t i = 0; i < n_tau; ++i) g.taus[i] = t.lo + t.length() * i / (n_tau - 1);
    for (std::size_t k = 0; k < n_psi; ++k)
        g.psis[k] = spec_.periodic_psi ? p.lo + p.length() * k / n_psi : p.lo + p.length() * k / (n_psi - 1);
    g.X.resize(n_tau * n_psi);
    g.J.resize(n_tau * n_psi);
    g.J_tilde.resize(n_tau * n_psi);
    for (std::size_t k = 0; k < n_psi; ++k)
        for (std::size_t i = 0; i < n_tau; ++i) {
            const EikonalCoord c{g.taus[i], g.psis[k]};
            const PhaseJet j = eval_jet(c, JetOrder::First);
            const double m = mu(c);
            const std::size_t idx = g.at(k, i);
            g.X[idx] = j.X;
            g.J[idx] = det(j.X_tau, j.X_psi) / m;
            g.J_tilde[idx] = m * det(j.P, j.P_psi);
        }
    return g;
}

const SampleGrid& ManifoldPatch::grid() const {
    std::call_once(cache_->once, [this] {
        cache_->grid = spec_.grid_builder ? spec_.grid_builder(*this, spec_.grid_tau, spec_.grid_psi)
                                          : build_grid_by_sampling(spec_.grid_tau, spec_.grid_psi);
    });
    return cache_->grid;
}

std::vector<EikonalCoord> regular_samples(const ManifoldPatch& patch, std::size_t n_tau, std::size_t n_psi) {
    std::vector<EikonalCoord> out;
    const Interval& t = patch.domain().tau;
    const Interval& p = patch.domain().psi;
    out.reserve(n_tau * n_psi);
    for (std::size_t k = 0; k < n_psi; ++k) {
        const double psi = patch.periodic_psi() ? p.lo + p.length() * k / n_psi
                                                : p.lo + p.length() * k / std::max<std::size_t>(1, n_psi - 1);
        for (std::size_t i = 0; i < n_tau; ++i)
            out.push_back({t.lo + t.length() * i / std::max<std::size_t>(1, n_tau - 1), psi});
    }
    return out;
}

IdentityReport check_eikonal_identities(const ManifoldPatch& patch, const std::vector<EikonalCoord>& sample_grid,
                                        double tol) {
    IdentityReport r;
    r.min_mu = std::numeric_limits<double>::infinity();
    r.min_momentum = std::numeric_limits<double>::infinity();
    for (const EikonalCoord& c : sample_grid) {
        const PhaseJet j = patch.eval_jet(c, JetOrder::First);
        r.tau_normalization = std::max(r.tau_normalization, std::abs(dot(j.P, j.X_tau) - 1.0));
        r.psi_orthogonality = std::max(r.psi_orthogonality, std::abs(dot(j.P, j.X_psi)));
        r.symmetry = std::max(r.symmetry, std::abs(dot(j.P_psi, j.X_tau) - dot(j.P_tau, j.X_psi)));
        r.min_mu = std::min(r.min_mu, patch.mu(c));
        r.min_momentum = std::min(r.min_momentum, norm(j.P));
        ++r.points;
    }
    r.pass = r.points > 0 && r.tau_normalization <= tol && r.psi_orthogonality <= tol && r.symmetry <= tol &&
             r.min_mu > 0.0 && r.min_momentum > 0.0;
    return r;
}

double action_integral(const ManifoldPatch& patch, const std::vector<EikonalCoord>& path) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const EikonalCoord a = path[i], b = path[i + 1];
        const double dt = b.tau - a.tau, dp = b.psi - a.psi;
        if (dt == 0.0 && dp == 0.0) continue;
        total += integrate_real(
            [&](double s) {
                const PhaseJet j = patch.eval_jet({a.tau + s * dt, a.psi + s * dp}, JetOrder::First);
                return dot(j.P, dt * j.X_tau + dp * j.X_psi);
            },
            0.0, 1.0, 1e-13);
    }
    return total;
}

double eikonal_residual(const ManifoldPatch& patch, const std::vector<EikonalCoord>& path) {
    if (path.size() < 2) return 0.0;
    const double dtau = path.back().tau - path.front().tau;
    return std::abs(dtau - action_integral(patch, path));
}

}  // namespace canop
