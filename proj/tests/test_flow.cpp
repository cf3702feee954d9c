#include <doctest.h>

#include <cmath>
#include <memory>

#include "canop/families.hpp"
#include "canop/flow.hpp"
#include "canop/quadrature.hpp"

using namespace canop;

namespace {

bool near(Vec2 a, Vec2 b, double tol) { return norm(a - b) <= tol; }

std::shared_ptr<RadialProfile> bump_medium() {
    return std::make_shared<RadialProfile>(RadialProfile::bump_profile(0.3, 2.0));
}

Hamiltonian radial_hamiltonian(std::shared_ptr<RadialProfile> prof) {
    return homogeneous([prof](Vec2 x) { return 1.0 / prof->n(norm(x)); });
}

InitialCurve point_source(double n0) {
    InitialCurve c;
    c.gamma = [n0](double psi) { return PhasePoint{{0.0, 0.0}, n0 * unit_dir(psi)}; };
    c.dgamma = [n0](double psi) { return PhasePoint{{0.0, 0.0}, n0 * perp(unit_dir(psi))}; };
    c.periodic = true;
    c.psi_range = {0.0, kTwoPi};
    return c;
}

}  // namespace

TEST_CASE("straight rays for unit speed") {
    const Hamiltonian H = homogeneous([](Vec2) { return 1.0; });
    auto ray = integrate_ray(H, {{0, 0}, {1, 0}}, {0, 2}, 0.1);
    CHECK(ray.size() == 21);
    CHECK(near(ray.back().point.x, {2, 0}, 1e-12));
    CHECK(near(ray.back().point.p, {1, 0}, 1e-12));
    ray = integrate_ray(H, {{0, 0}, {0, 1}}, {0, 5}, 0.3);
    CHECK(ray.back().tau == 5.0);
    CHECK(near(ray.back().point.x, {0, 5}, 1e-12));
    CHECK_THROWS_AS(integrate_ray(H, {{0, 0}, {0, 0}}, {0, 1}, 0.1), DomainError);
}

TEST_CASE("radial ray reaches rho(tau)") {
    auto prof = bump_medium();
    const Hamiltonian H = radial_hamiltonian(prof);
    const double psi = 0.7;
    const auto ray = integrate_ray(H, {{0, 0}, prof->n(0.0) * unit_dir(psi)}, {0, 4}, 4.0 / 2048);
    for (std::size_t i = 0; i < ray.size(); i += 97) {
        CHECK(std::abs(norm(ray[i].point.x) - prof->rho(ray[i].tau)) <= 1e-9);
        CHECK(std::abs(norm(ray[i].point.p) - prof->n(prof->rho(ray[i].tau))) <= 1e-9);
    }
}

TEST_CASE("Hamiltonian conservation is fourth order") {
    auto prof = bump_medium();
    const Hamiltonian H = radial_hamiltonian(prof);
    // off-centre start so the ray bends
    const Vec2 x0{-3.0, 0.6};
    const PhasePoint start{x0, Vec2{1.0, 0.0} * prof->n(norm(x0))};
    auto drift = [&](double step) {
        double worst = 0.0;
        for (const RayState& s : integrate_ray(H, start, {0, 6}, step))
            worst = std::max(worst, std::abs(H(s.point.x, s.point.p) - 1.0));
        return worst;
    };
    const double e1 = drift(0.1), e2 = drift(0.05);
    CHECK(e1 > 1e-12);
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.35));
}

TEST_CASE("maupertuis conversion") {
    Hamiltonian h = maupertuis(mechanical([](Vec2) { return 0.0; }, 1.0, 0.5));
    CHECK(h.C({0.3, 0.1}) == doctest::Approx(1.0));
    h = maupertuis(mechanical([](Vec2) { return 0.0; }, 1.0, 1.0));
    CHECK(h.C({0.3, 0.1}) == doctest::Approx(1.0 / std::sqrt(2.0)));
    auto prof = bump_medium();
    // 2 m (E - v) = n^2 with m = 1/2, E = 1
    const Hamiltonian mech = mechanical([prof](Vec2 x) { return 1.0 - std::pow(prof->n(norm(x)), 2); }, 1.0, 0.5);
    h = maupertuis(mech);
    for (Vec2 x : {Vec2{0, 0}, Vec2{0.5, 1.0}, Vec2{3, 3}}) CHECK(h.C(x) == doctest::Approx(1.0 / prof->n(norm(x))));
    const Vec2 x{0.7, -0.4};
    const Vec2 g = h.gradC(x), gfd = fd_gradient(h.C, x);
    CHECK(near(g, gfd, 1e-7));
    const Mat2 hh = h.hessC(x), hfd = fd_hessian(h.C, x);
    CHECK(std::abs(hh.a11 - hfd.a11) + std::abs(hh.a12 - hfd.a12) + std::abs(hh.a22 - hfd.a22) <= 1e-5);
    CHECK_THROWS_AS(maupertuis(mechanical([](Vec2 x) { return x.x; }, 1.0, 0.5)), DomainError);
}

TEST_CASE("flow from the unit circle of momenta is the flat cylinder") {
    const Hamiltonian H = homogeneous([](Vec2) { return 1.0; });
    FlowOptions opt;
    opt.steps = 256;
    const ManifoldPatch m = build_manifold(H, point_source(1.0), {-4, 4}, opt);
    const ManifoldPatch cyl = flat_cylinder(4.0);
    for (double tau : {-3.0, -0.5, 1.0, 3.7})
        for (double psi : {0.0, 1.0, 4.0}) {
            const PhaseJet a = m.eval_jet({tau, psi}), b = cyl.eval_jet({tau, psi});
            CHECK(near(a.X, b.X, 1e-12));
            CHECK(near(a.P, b.P, 1e-12));
            CHECK(near(a.X_psi, b.X_psi, 1e-12));
            CHECK(near(a.X_psipsi, b.X_psipsi, 1e-5));
            CHECK(near(a.X_psipsipsi, b.X_psipsipsi, 1e-5));
        }
    CHECK(check_eikonal_identities(m, regular_samples(m, 20, 20), 1e-6).pass);
}

TEST_CASE("flow from a straight line gives plane waves") {
    const Hamiltonian H = homogeneous([](Vec2) { return 1.0; });
    InitialCurve c;
    c.gamma = [](double psi) { return PhasePoint{{1.5, psi}, {1.0, 0.0}}; };
    c.psi_range = {-2, 2};
    FlowOptions opt;
    opt.central_point = {0.0, 0.0};
    const ManifoldPatch m = build_manifold(H, c, {-3, 3}, opt);
    const PhaseJet j = m.eval_jet({2.0, 0.5});
    CHECK(near(j.X, {3.5, 0.5}, 1e-12));
    CHECK(near(j.P, {1.0, 0.0}, 1e-12));
    CHECK(det(j.X_tau, j.X_psi) == doctest::Approx(1.0));
}

TEST_CASE("flow from parabola normals reproduces the closed form") {
    const Hamiltonian H = homogeneous([](Vec2) { return 1.0; });
    InitialCurve c;
    c.gamma = [](double psi) {
        const double s = std::sqrt(1 + psi * psi);
        return PhasePoint{{psi, psi * psi / 2}, Vec2{-psi, 1.0} / s};
    };
    c.psi_range = {-2, 2};
    FlowOptions opt;
    opt.central_point = {0.0, 0.0};
    const ManifoldPatch m = build_manifold(H, c, {-2, 8}, opt);
    const ManifoldPatch ref = parabola_family(0.5);
    for (double tau : {-1.0, 0.9, 3.0})
        for (double psi : {-1.5, 0.0, 0.8}) {
            const PhaseJet a = m.eval_jet({tau, psi}), b = ref.eval_jet({tau, psi});
            CHECK(near(a.X, b.X, 1e-10));
            CHECK(near(a.X_psi, b.X_psi, 1e-8));
            CHECK(near(a.P_psi, b.P_psi, 1e-8));
            CHECK(near(a.X_psipsi, b.X_psipsi, 1e-4));
            CHECK(near(a.X_psipsipsi, b.X_psipsipsi, 1e-4));
        }
}

TEST_CASE("radial flow matches the closed-form radial manifold") {
    auto prof = bump_medium();
    FlowOptions opt;
    opt.measure = FlowMeasure::Invariant;
    const ManifoldPatch m = build_manifold(radial_hamiltonian(prof), point_source(prof->n(0.0)), {-6, 6}, opt);
    const ManifoldPatch ref = radial_medium(prof);
    for (double tau : {-4.0, 0.6, 1.8, 5.0})
        for (double psi : {0.2, 2.5}) {
            const PhaseJet a = m.eval_jet({tau, psi}, JetOrder::First), b = ref.eval_jet({tau, psi}, JetOrder::First);
            CHECK(near(a.X, b.X, 1e-8));
            CHECK(near(a.P, b.P, 1e-8));
            CHECK(near(a.X_psi, b.X_psi, 1e-8));
            CHECK(near(a.P_tau, b.P_tau, 1e-6));
            CHECK(m.mu({tau, psi}) == doctest::Approx(ref.mu({tau, psi})).epsilon(1e-8));
        }
    CHECK(check_eikonal_identities(m, regular_samples(m, 12, 12), 1e-6).pass);
    // the custom grid builder agrees with direct jet evaluation
    const SampleGrid& g = m.grid();
    const std::size_t k = 37, i = 201;
    const PhaseJet j = m.eval_jet({g.taus[i], g.psis[k]}, JetOrder::First);
    CHECK(near(g.X[g.at(k, i)], j.X, 1e-9));
}

TEST_CASE("construction rejects bad initial curves") {
    const Hamiltonian H = homogeneous([](Vec2) { return 1.0; });
    InitialCurve tangent;
    tangent.gamma = [](double psi) { return PhasePoint{{psi, 0.0}, {1.0, 0.0}}; };
    tangent.psi_range = {-1, 1};
    FlowOptions opt;
    opt.central_point = {0.0, 0.0};
    CHECK_THROWS_AS(build_manifold(H, tangent, {-1, 1}, opt), ConstructionError);
    InitialCurve off_level = point_source(2.0);
    CHECK_THROWS_AS(build_manifold(H, off_level, {-1, 1}, opt), ConstructionError);
}

TEST_CASE("time reparametrization") {
    const ManifoldPatch cyl = flat_cylinder();
    TimeMap tm = time_reparam(cyl);
    CHECK(tm.t_of_tau(1.7, 0.3) == doctest::Approx(1.7));
    // |P| = 2 with C = 1/2
    FlowOptions opt;
    opt.steps = 256;
    const ManifoldPatch fast = build_manifold(homogeneous([](Vec2) { return 0.5; }), point_source(2.0), {-3, 3}, opt);
    TimeMap tf = time_reparam(fast);
    CHECK(tf.t_of_tau(1.25, 0.0) == doctest::Approx(2.5));
    CHECK(tf.jacobian(1.0, 0.0) == doctest::Approx(0.5));

    auto prof = bump_medium();
    const ManifoldPatch rad = radial_medium(prof);
    TimeMap tr = time_reparam(rad);
    for (double tau : {0.4, 1.5, 3.0}) {
        const double oracle = integrate_real([&](double s) { return prof->n(prof->rho(s)); }, 0.0, tau, 1e-13);
        CHECK(std::abs(tr.t_of_tau(tau, 1.0) - oracle) <= 1e-10);
        CHECK(std::abs(tr.tau_of_t(tr.t_of_tau(tau, 1.0), 1.0) - tau) <= 1e-8);
    }
}

TEST_CASE("amplitude transport") {
    const ManifoldPatch cyl = flat_cylinder();
    auto A = transport_amplitude(cyl, [](double) { return Complex(1.0); });
    CHECK(std::abs(A(2.0, 1.0) - 1.0) <= 1e-15);
    A = transport_amplitude(cyl, [](double psi) { return Complex(std::cos(psi)); });
    CHECK(std::abs(A(2.0, 1.0) - std::cos(1.0)) <= 1e-15);
    auto prof = bump_medium();
    const ManifoldPatch rad = radial_medium(prof);
    A = transport_amplitude(rad, [](double) { return Complex(1.0); });
    for (double tau : {0.3, 1.0, 2.2}) {
        CHECK(std::abs(A(tau, 0.4) - 1.0 / prof->n(prof->rho(tau))) <= 1e-14);
        // flux along the ray: |a|^2 |P| |X_psi| with a = A sqrt(mu |P| / |X_psi|), mu = 1
        const PhaseJet j = rad.eval_jet({tau, 0.4}, JetOrder::First);
        const double a2 = std::norm(A(tau, 0.4)) * norm(j.P) / norm(j.X_psi);
        CHECK(a2 * norm(j.P) * norm(j.X_psi) == doctest::Approx(1.0));
    }
}
