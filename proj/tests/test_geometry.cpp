#include <doctest.h>

#include <cmath>

#include "canop/families.hpp"
#include "canop/geometry.hpp"

using namespace canop;

namespace {

// X = tau n, P = n + kappa n_perp / tau: the psi-circle carries action 2 pi kappa.
ManifoldPatch vortex_patch(double kappa) {
    ManifoldPatch::Spec s;
    s.name = "vortex";
    s.domain = {{0.5, 3.0}, {0.0, kTwoPi}};
    s.periodic_psi = true;
    s.central_point = {1.0, 0.0};
    s.jet = [kappa](double t, double p, JetOrder) {
        const Vec2 n = unit_dir(p), np = perp(n);
        PhaseJet j;
        j.X = t * n;
        j.P = n + (kappa / t) * np;
        j.X_tau = n;
        j.P_tau = (-kappa / (t * t)) * np;
        j.X_psi = t * np;
        j.P_psi = np - (kappa / t) * n;
        return j;
    };
    return ManifoldPatch(s);
}

std::vector<EikonalCoord> circle_loop(EikonalCoord c, double rt, double rp, int n) {
    std::vector<EikonalCoord> out;
    for (int i = 0; i <= n; ++i) {
        const double a = kTwoPi * i / n;
        out.push_back({c.tau + rt * std::cos(a), c.psi + rp * std::sin(a)});
    }
    return out;
}

}  // namespace

TEST_CASE("jacobians on the flat cylinder") {
    const ManifoldPatch cyl = flat_cylinder();
    JacobianTriple t = jacobians(cyl, {2.0, 0.3}, 0.5);
    CHECK(t.J == doctest::Approx(2.0));
    CHECK(t.J_tilde == doctest::Approx(1.0));
    CHECK(std::abs(t.J_eps - Complex(2.0, -0.5)) <= 1e-14);
    t = jacobians(cyl, {0.0, 1.1}, 0.0);
    CHECK(t.J == 0.0);
    const ManifoldPatch par = parabola_family();
    for (EikonalCoord c : {EikonalCoord{0.3, 0.2}, EikonalCoord{4.0, -1.0}}) {
        t = jacobians(par, c, 0.0);
        CHECK(t.J_eps.real() == t.J);
        CHECK(t.J_eps.imag() == 0.0);
    }
}

TEST_CASE("jacobian modulus lemma and nonvanishing regularization") {
    auto prof = std::make_shared<RadialProfile>(RadialProfile::bump_profile());
    for (const ManifoldPatch& p : {flat_cylinder(), parabola_family(), radial_medium(prof)}) {
        for (const EikonalCoord& c : regular_samples(p, 15, 15)) {
            const PhaseJet j = p.eval_jet(c, JetOrder::First);
            const double mu = p.mu(c);
            const JacobianTriple t = jacobians(p, c, 0.0);
            CHECK(std::abs(std::abs(t.J) - norm(j.X_psi) / (mu * norm(j.P))) <= 1e-8);
            for (double e : {1.0, 0.1, 0.01}) CHECK(std::abs(jacobian_eps(j, mu, e)) > 0.0);
        }
    }
}

TEST_CASE("Maslov index of points on the flat cylinder") {
    const ManifoldPatch cyl = flat_cylinder();
    CHECK(maslov_index_point(cyl, default_index_path(cyl, {1.0, 0.0})) == 0);
    CHECK(maslov_index_point(cyl, default_index_path(cyl, {-1.0, 0.0})) == -1);
    CHECK(maslov_index_point(cyl, default_index_path(cyl, cyl.central_point())) == 0);
    // refinement and homotopic deformation do not change the result
    const EikonalCoord c = cyl.central_point();
    for (int pieces : {1, 2, 7, 40}) {
        std::vector<EikonalCoord> path;
        for (int i = 0; i <= pieces; ++i) path.push_back({c.tau + (-1.0 - c.tau) * i / pieces, 0.0});
        CHECK(maslov_index_point(cyl, path) == -1);
    }
    CHECK(maslov_index_point(cyl, {c, {2.0, 1.0}, {-0.5, 2.5}, {-1.0, 3.0}}) == -1);
    CHECK(maslov_index_point(cyl, {c, {0.05, 3.0}, {-1.0, 3.0}}) == -1);
    const IndexResult r = maslov_index_point_detail(cyl, default_index_path(cyl, {-1.0, 0.0}));
    CHECK(r.per_eps.size() == 3);
    CHECK(r.residual < 0.01);
    CHECK_THROWS_AS(maslov_index_point(cyl, default_index_path(cyl, {0.0, 0.0})), ConvergenceError);
}

TEST_CASE("Maslov index of cycles") {
    const ManifoldPatch cyl = flat_cylinder();
    CHECK(maslov_index_cycle(cyl, {{1.0, 0.0}, {1.0, kPi}, {1.0, 2 * kPi}}, 0.5) == 0);
    CHECK(maslov_index_cycle(cyl, {{1.0, 0.0}, {1.0, 2 * kPi}, {1.0, 4 * kPi}}, 0.5) == 0);
    // small loop around the cusp of the parabola family against a brute-force winding count
    const ManifoldPatch par = parabola_family();
    const auto loop = circle_loop({1.0, 0.0}, 0.3, 0.3, 64);
    const int idx = maslov_index_cycle(par, loop, 0.1);
    double brute = 0.0;
    const int n = 20000;
    Complex prev = jacobians(par, {1.3, 0.0}, 0.1).J_eps;
    for (int i = 1; i <= n; ++i) {
        const double a = kTwoPi * i / n;
        const Complex cur = jacobians(par, {1.0 + 0.3 * std::cos(a), 0.3 * std::sin(a)}, 0.1).J_eps;
        brute += std::arg(cur / prev);
        prev = cur;
    }
    CHECK(idx == static_cast<int>(std::lround(brute / kPi)));
    CHECK(idx == 0);
}

TEST_CASE("singular chart index") {
    const ManifoldPatch cyl = flat_cylinder();
    CHECK(singular_chart_index(cyl, {1.0, 0.0}, 0) == 0);
    // J < 0 but the central index there is -1, so the chart index is 0 again
    CHECK(singular_chart_index(cyl, {-1.0, 0.0}, -1) == 0);
    CHECK(singular_chart_index(cyl, {-1.0, 0.0}, 0) == 1);
    CHECK_THROWS_AS(singular_chart_index(cyl, {0.0, 0.0}, 0), DomainError);
    // J < 0 < J~ at the apex side of the parabola family
    const ManifoldPatch par = parabola_family();
    const JacobianTriple t = jacobians(par, {0.0, 0.0}, 0.0);
    CHECK(t.J < 0);
    CHECK(t.J_tilde > 0);
    CHECK(singular_chart_index(par, {0.0, 0.0}, 0) == 1);
}

TEST_CASE("quantization conditions") {
    const ManifoldPatch cyl = flat_cylinder();
    const std::vector<EikonalCoord> circle{{1.0, 0.0}, {1.0, kPi}, {1.0, 2 * kPi}};
    for (double h : {1.0, 0.1, 0.013}) {
        const auto r = check_quantization(cyl, {circle}, h);
        CHECK(std::abs(r[0].action) <= 1e-10);
        CHECK(r[0].index == 0);
        CHECK(r[0].satisfied);
    }
    const std::vector<EikonalCoord> contractible{{1.0, 0.2}, {2.0, 0.2}, {2.0, 0.9}, {1.0, 0.9}, {1.0, 0.2}};
    CHECK(check_quantization(cyl, {contractible}, 0.1)[0].satisfied);

    const ManifoldPatch v = vortex_patch(0.0137);
    const auto bad = check_quantization(v, {circle}, 0.1);
    CHECK(bad[0].action == doctest::Approx(kTwoPi * 0.0137));
    CHECK_FALSE(bad[0].satisfied);
    CHECK(bad[0].residual > 0.1);
    // kappa = h makes (2 / pi h) * 2 pi kappa = 4
    CHECK(check_quantization(vortex_patch(0.1), {circle}, 0.1)[0].satisfied);
}

TEST_CASE("focal set of the flat cylinder") {
    const ManifoldPatch cyl = flat_cylinder();
    const auto curves = find_focal_curves(cyl);
    REQUIRE(curves.size() == 1);
    CHECK(curves[0].size() == 256);
    for (const FocalPoint& f : curves[0]) {
        CHECK(std::abs(f.coord.tau) <= 1e-12);
        CHECK(norm(f.x_star) <= 1e-12);
    }
    const FocalPoint c = classify_focal_point(cyl, curves[0][0]);
    CHECK(c.kind == FocalKind::Degenerate);
    CHECK(c.coeffs.a3 == 0.0);
    CHECK(c.coeffs.a4 == 0.0);
    CHECK(find_focal_points(flat_cylinder(Interval{0.1, 5.0}, 1.0)).empty());
}

TEST_CASE("focal set of the parabola family is its evolute") {
    const ManifoldPatch par = parabola_family();
    const auto curves = find_focal_curves(par);
    REQUIRE(curves.size() == 1);
    int cusps = 0, folds = 0;
    for (const FocalPoint& f : curves[0]) {
        const double s = std::sqrt(1 + f.coord.psi * f.coord.psi);
        CHECK(std::abs(f.coord.tau - s * s * s) <= 1e-10);
        // brute-force root check of J = -s + tau / s^2
        CHECK(std::abs(jacobians(par, f.coord, 0.0).J) <= 1e-12);
        const FocalPoint c = classify_focal_point(par, f);
        CHECK(c.x_psi_norm <= 1e-10);
        CHECK(c.det_identity <= 1e-8);
        if (c.kind == FocalKind::Cusp) {
            ++cusps;
            CHECK(std::abs(c.coord.psi) <= 1e-10);
            CHECK(std::abs(c.coord.tau - 1.0) <= 1e-10);
            CHECK(c.coeffs.a4 == doctest::Approx(3.0));
            CHECK(norm(c.x_star - Vec2{0.0, 1.0}) <= 1e-10);
        } else {
            REQUIRE(c.kind == FocalKind::Fold);
            ++folds;
            CHECK(c.fold_second <= 1e-10);
            CHECK(c.fold_third <= 1e-10);
            CHECK(c.coeffs.a3 == doctest::Approx(3.0 * c.coord.psi / (s * s * s)));
        }
    }
    CHECK(cusps == 1);
    CHECK(folds > 100);
}

TEST_CASE("fold point classification at psi = 0.5") {
    const ManifoldPatch par = parabola_family();
    FocalPoint f;
    f.coord = {std::pow(1.25, 1.5), 0.5};
    const FocalPoint c = classify_focal_point(par, f);
    CHECK(c.kind == FocalKind::Fold);
    CHECK(c.coeffs.a0 == doctest::Approx(std::pow(1.25, 1.5)));
    CHECK(c.coeffs.a1 == 0.0);
    CHECK(c.coeffs.a2 == 0.0);
    CHECK(c.coeffs.a3 == doctest::Approx(1.5 / std::pow(1.25, 1.5)));
    CHECK(norm(c.coeffs.b1 - par.eval_jet(f.coord).P_psi) == 0.0);
}

TEST_CASE("identically vanishing Jacobian is rejected") {
    ManifoldPatch::Spec s;
    s.name = "line";
    s.domain = {{-1, 1}, {-1, 1}};
    s.central_point = {0, 0};
    s.jet = [](double t, double, JetOrder) {
        PhaseJet j;
        j.X = {t, 0};
        j.P = {1, 0};
        j.X_tau = {1, 0};
        j.P_psi = {0, 1};
        return j;
    };
    CHECK_THROWS_AS(find_focal_points(ManifoldPatch(s)), DomainError);
}
