#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "canop/cli/commands.hpp"
#include "canop/cli/verify.hpp"
#include "canop/families.hpp"
#include "canop/specfn.hpp"

using namespace canop;
using namespace canop::cli;

namespace {

std::string run_to_string(const Scenario& sc) {
    std::ostringstream os;
    write_field_csv(os, evaluate_scenario(sc).samples);
    return os.str();
}

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string l;
    while (std::getline(is, l)) out.push_back(l);
    return out;
}

struct Proc {
    int code = -1;
    std::string out;
};

// Runs the installed binary; stderr is discarded.
Proc run_bin(const std::string& args) {
    const char* bin = std::getenv("CANOP_BIN");
    Proc p;
    if (!bin) return p;
    const std::string cmd = std::string(bin) + " " + args + " 2>/dev/null";
    FILE* f = popen(cmd.c_str(), "r");
    if (!f) return p;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, f)) > 0) p.out.append(buf, n);
    const int st = pclose(f);
    p.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return p;
}

}  // namespace

TEST_CASE("expressions: grammar, functions, errors") {
    const Expr e = Expr::parse("1 + 2*x - x^2/4", {"x"});
    CHECK(e({3.0}) == doctest::Approx(1 + 6 - 2.25));
    CHECK(Expr::parse("-2^2", {})({}) == -4.0);
    CHECK(Expr::parse("2^3^2", {})({}) == 512.0);
    CHECK(Expr::parse("2*-3", {})({}) == -6.0);
    CHECK(Expr::parse("1.5e-3 * 2E2", {})({}) == doctest::Approx(0.3));
    CHECK(Expr::parse("cos(pi) + exp(0) + sqrt(16) + abs(-2) + log(1)", {})({}) == doctest::Approx(6.0));
    CHECK(Expr::parse("bump(0)", {})({}) == doctest::Approx(1.0));
    CHECK(Expr::parse("bump(1.5)", {})({}) == 0.0);
    CHECK(Expr::parse("tanh(0) + atan(1) - pi/4 + sinh(0) + cosh(0) + tan(0)", {})({}) == doctest::Approx(1.0));

    try {
        Expr::parse("1 + foo", {"x"});
        FAIL("no error");
    } catch (const ExprError& err) {
        CHECK(err.column() == 5);
        CHECK(std::string(err.what()).find("foo") != std::string::npos);
    }
    CHECK_THROWS_AS(Expr::parse("sin(1", {}), ExprError);
    CHECK_THROWS_AS(Expr::parse("2 +", {}), ExprError);
    CHECK_THROWS_AS(Expr::parse("1 2", {}), ExprError);
    CHECK_THROWS_AS(Expr::parse("frob(2)", {}), ExprError);
    CHECK_THROWS_AS(Expr::parse("", {}), ExprError);
}

TEST_CASE("expressions: symbolic derivatives against central differences") {
    const std::vector<std::string> v{"x", "y"};
    for (const char* text : {"x^3*y - sin(x*y)", "1/(1 + 0.1*bump((x-2)^2 + y^2))", "exp(-x^2) * cos(3*y) + sqrt(1 + x^2)",
                             "x^y", "tanh(x) / (2 + atan(y))", "abs(x - 0.3) * log(2 + y)"}) {
        const Expr f = Expr::parse(text, v);
        for (int var = 0; var < 2; ++var) {
            const Expr d = f.derivative(var);
            const Expr dd = d.derivative(var);
            for (double x0 : {0.7, 1.6, 2.2}) {
                const double y0 = 0.4;
                const double s = 1e-5;
                const double p[2] = {x0 + (var == 0 ? s : 0), y0 + (var == 1 ? s : 0)};
                const double m[2] = {x0 - (var == 0 ? s : 0), y0 - (var == 1 ? s : 0)};
                const double c[2] = {x0, y0};
                const double fd = (f.eval(p) - f.eval(m)) / (2 * s);
                const double fd2 = (d.eval(p) - d.eval(m)) / (2 * s);
                CHECK(d.eval(c) == doctest::Approx(fd).epsilon(1e-7));
                CHECK(dd.eval(c) == doctest::Approx(fd2).epsilon(1e-6));
            }
        }
        CHECK(f.depends_on(0));
    }
    CHECK(Expr::parse("3*y", v).derivative(0).is_constant());
}

TEST_CASE("expressions: bump second derivatives stay finite at the support edge") {
    const Expr C = Expr::parse("1/(1 + 0.03*bump((x1-2)^2 + x2^2))", {"x1", "x2"});
    const Expr cxx = C.derivative(0).derivative(0);
    CHECK(cxx({1.0, 0.0}) == 0.0);
    CHECK(cxx({3.0, 0.0}) == 0.0);
    CHECK(std::isfinite(cxx({2.0 + 1e-3, 0.9999})));
    CHECK(std::isfinite(C.derivative(0).derivative(0).derivative(1)({2.5, 0.3})));
    CHECK(bump_second_derivative(1.0 - 1e-300) == 0.0);
    const double s = 0.4, e = 1e-5;
    CHECK(bump_second_derivative(s) ==
          doctest::Approx((bump_derivative(s + e) - bump_derivative(s - e)) / (2 * e)).epsilon(1e-7));
}

TEST_CASE("expressions: batches share work and agree with single evaluation") {
    const Expr f = Expr::parse("sin(x*y) + bump(x^2 + y^2)", {"x", "y"});
    const std::vector<Expr> set{f, f.derivative(0), f.derivative(1), f.derivative(0).derivative(1)};
    const Expr::Batch batch(set);
    REQUIRE(batch.size() == 4);
    const double in[2] = {0.3, -0.45};
    double out[4];
    batch.eval(in, out);
    for (std::size_t i = 0; i < set.size(); ++i) CHECK(out[i] == set[i].eval(in));
}

TEST_CASE("scenario: numeric keys accept constant expressions") {
    const Scenario sc = parse_scenario("h = 1/20\n[grid]\nx1 = -1:1:3\n");
    CHECK(sc.h == 0.05);
    CHECK_THROWS_AS(parse_scenario("h = 1/x\n"), ParseError);
}

TEST_CASE("expressions: support evaluation finds exact bump edges") {
    const Expr n = Expr::parse("1 + 0.3*bump(r/2)", {"r"});
    const double in[1] = {1.9999}, out[1] = {2.0};
    CHECK(n.eval_support(in) == doctest::Approx(1.3));
    CHECK(n.eval_support(out) == 1.0);
}

TEST_CASE("scenario: minimal text gets defaults") {
    const Scenario sc = parse_scenario("manifold = flat-cylinder\n");
    CHECK(sc.kind == ManifoldKind::FlatCylinder);
    CHECK(sc.h == 0.1);
    CHECK(sc.manifold().mu({1.0, 0.3}) == 1.0);
    const Amplitude A = sc.amplitude_fn();
    CHECK(A({0.2, 0.1}, 0.7, 1.0) == Complex(1.0, 0.0));
    CHECK(sc.auto_cover);
    CHECK(sc.method == "auto");
    CHECK(sc.grid.n1 == 41);
    const std::string echo = sc.echo();
    CHECK(echo.find("h = 0.1\n") != std::string::npos);
    CHECK(echo.find("amplitude.A = 1\n") != std::string::npos);
    CHECK(echo.find("manifold.tau_max = 5\n") != std::string::npos);
    CHECK(echo.find("numerics.tol = 1e-10\n") != std::string::npos);
    // empty text is the same flat default
    CHECK(parse_scenario("").kind == ManifoldKind::FlatCylinder);
}

TEST_CASE("scenario: radial profile from an expression") {
    const Scenario sc = parse_scenario(R"(manifold = radial-medium
h = 0.05
[manifold]
profile = expression
n = 1 + 0.3*bump(r/2)
)");
    REQUIRE(sc.profile);
    CHECK(sc.profile->r0() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(sc.profile->n(1.0) == doctest::Approx(1 + 0.3 * bump(0.5)));
    CHECK(sc.profile->dn(1.0) == doctest::Approx(0.3 * bump_derivative(0.5) / 2));
    const RadialProfile ref = RadialProfile::bump_profile(0.3, 2.0);
    CHECK(sc.profile->phase_shift() == doctest::Approx(ref.phase_shift()).epsilon(1e-10));
    CHECK(sc.echo().find("manifold.detected_radius = 2") != std::string::npos);

    CHECK_THROWS_WITH_AS(parse_scenario("manifold = radial-medium\n[manifold]\nprofile = expression\nn = 1 + 0.1/(1 + r^2)\n"),
                         doctest::Contains("finite radius"), ParseError);
    CHECK_THROWS_WITH_AS(parse_scenario("manifold = radial-medium\n[manifold]\nprofile = expression\nn = 1 - 2*bump(r)\n"),
                         doctest::Contains("positive"), ParseError);
}

TEST_CASE("scenario: errors carry line and column") {
    try {
        parse_scenario("manifold = flat-cylinder\nh = -1\n", "s.scn");
        FAIL("no error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 5);
        CHECK(std::string(e.what()).find("h > 0") != std::string::npos);
        CHECK(std::string(e.what()).rfind("s.scn:2:5:", 0) == 0);
    }
    try {
        parse_scenario("h = 0.1\n[amplitude]\n  A = tau + bogus\n");
        FAIL("no error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(e.column() == 13);
    }
    try {
        parse_scenario("h = 0.1\n[grid]\nx3 = 1:2:3\n");
        FAIL("no error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(e.column() == 1);
        CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_scenario("[nowhere]\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario("h 0.1\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario("h = 0.1\nh = 0.2\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario("[grid]\nx1 = -1:1:0\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario("manifold = torus\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario("[cover]\nchart = singular tau=-1:1\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario("[cover]\nmode = charts\nchart = singular tau=1:-1\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario("manifold = parabola-family\n[manifold]\na = 0\n"), ParseError);
}

TEST_CASE("scenario: cover charts, measure and grid overrides") {
    const Scenario sc = parse_scenario(R"(h = 0.05
[amplitude]
mu = invariant
A = tau^2 + x1
[cover]
mode = charts
chart = singular tau=-3:3 plateau=0.5 taper=tau
chart = regular tau=0.5:10
chart = regular tau=-10:-0.5
)");
    REQUIRE(sc.charts.size() == 3);
    CHECK(sc.charts[0].kind == Chart::Kind::Singular);
    CHECK(sc.charts[0].taper_tau);
    CHECK(sc.charts[1].tau.lo == 0.5);
    CHECK(sc.manifold().mu({1.0, 0.0}) == doctest::Approx(1.0));
    const Amplitude A = sc.amplitude_fn();
    CHECK(A({2.0, 0.0}, 3.0, 0.0).real() == doctest::Approx(11.0));

    const GridSpec g = parse_grid("-1:1:3,0:2:5");
    CHECK(g.n1 == 3);
    CHECK(g.n2 == 5);
    CHECK(g.x2.hi == 2.0);
    CHECK_THROWS_AS(parse_grid("-1:1:3"), ConfigError);
    CHECK_THROWS_AS(parse_grid("-1:1:0,0:1:2"), ConfigError);
    CHECK_THROWS_AS(parse_grid("1:-1:3,0:1:2"), ConfigError);

    Scenario s2 = sc;
    Overrides ov;
    ov.h = -0.1;
    CHECK_THROWS_AS(apply_overrides(s2, ov), ConfigError);
}

TEST_CASE("run: flat 11x11 grid, header, determinism") {
    Scenario sc = load_scenario("flat-cylinder");
    Overrides ov;
    ov.grid = parse_grid("-2:2:11,-2:2:11");
    apply_overrides(sc, ov);
    const std::string a = run_to_string(sc);
    const auto rows = lines_of(a);
    REQUIRE(rows.size() == 122);
    CHECK(rows[0] == "x1,x2,re_u,im_u,abs_u,method,branches,dist_caustic");
    CHECK(rows[1].rfind("-2,-2,", 0) == 0);
    CHECK(rows[2].rfind("-1.6000000000000001,-2,", 0) == 0);
    CHECK(rows[61].find(",integral,") != std::string::npos);   // the origin
    ov.threads = 4;
    apply_overrides(sc, ov);
    CHECK(run_to_string(sc) == a);

    // values: 2 pi J0 identity through the CLI path, with the full integral
    ov.method = "integral";
    ov.threads = 1;
    apply_overrides(sc, ov);
    const RunResult r = evaluate_scenario(sc);
    CHECK(r.failed == 0);
    for (const FieldSample& s : r.samples) {
        const Complex v = s.u * std::polar(std::sqrt(kTwoPi * sc.h), -0.25 * kPi);
        CHECK(std::abs(v - kTwoPi * bessel_j0(norm(s.x) / sc.h)) <= 1e-8);
    }
}

TEST_CASE("run: method selection and failures") {
    Scenario sc = load_scenario("flat-cylinder");
    Overrides ov;
    ov.grid = parse_grid("-1:1:3,-1:1:3");
    ov.method = "airy";
    apply_overrides(sc, ov);
    CHECK_THROWS_WITH_AS(evaluate_scenario(sc), "no fold focal points", ConfigError);
    ov.method = "pearcey";
    apply_overrides(sc, ov);
    CHECK_THROWS_AS(evaluate_scenario(sc), ConfigError);

    // forced WKB fails at the focal point and reports it in the method column
    ov.method = "wkb";
    apply_overrides(sc, ov);
    const RunResult r = evaluate_scenario(sc);
    CHECK(r.failed == 1);
    std::ostringstream os;
    write_field_csv(os, r.samples);
    const auto rows = lines_of(os.str());
    CHECK(rows[5].find("nan,nan,nan,failed:wkb:") != std::string::npos);
    CHECK(std::count(rows[5].begin(), rows[5].end(), ',') == 7);

    // Airy near the fold of the parabola family: only points inside the valid radius succeed
    Scenario par = load_scenario("parabola-family");
    Overrides po;
    po.method = "airy";
    po.h = 0.01;
    const double x = 0.5, y = std::pow(1 + 0.25, 1.5);   // roughly the fold at psi = 0.5 in x-space
    (void)x;
    (void)y;
    po.grid = parse_grid("-1:1:5,0:3:5");
    apply_overrides(par, po);
    const RunResult pr = evaluate_scenario(par);
    CHECK(pr.failed > 0);
    for (const FieldSample& s : pr.samples)
        if (!s.ok) CHECK(s.reason.find("valid radius") != std::string::npos);
}

TEST_CASE("run: parabola family with the automatic cover") {
    Scenario sc = load_scenario("parabola-family");
    Overrides ov;
    ov.grid = parse_grid("-1:1:5,0.5:2:4");
    apply_overrides(sc, ov);
    const RunResult r = evaluate_scenario(sc);
    CHECK(r.failed == 0);
    CHECK(r.samples.size() == 20);
}

TEST_CASE("run: paraxial beam against the J0/J1 beam formula") {
    // g(alpha) = bump(alpha / 3), lambda(z) at z = 0.5, t = 0.5, mass 1
    auto beam = [](double h) {
        Scenario sc = load_scenario("paraxial-beam");
        Overrides ov;
        ov.h = h;
        ov.grid = parse_grid("0.3:2.1:7,0.2:0.2:1");
        apply_overrides(sc, ov);
        sc.amplitude = Expr::parse("bump(tau/(3*0.8944271909999159))", {"tau", "psi", "x1", "x2"});
        const RunResult r = evaluate_scenario(sc);
        const double lam = 1 / std::sqrt(1.25), t = 0.5, m = 1.0;
        double dev = 0.0, mag = 0.0;
        for (const FieldSample& s : r.samples) {
            const double rr = norm(s.x);
            const double gp = bump((rr - t * lam / m) / 3), gm = bump((-rr - t * lam / m) / 3);
            const Complex pref = kPi * std::polar(1.0 / std::sqrt(kTwoPi * h), 0.25 * kPi) *
                                 std::polar(1.0, -t * lam * lam / (2 * m * h)) * lam;
            const Complex u = pref * ((gp + gm) * bessel_j0(lam * rr / h) + Complex(0, 1) * (gp - gm) * bessel_j1(lam * rr / h));
            dev = std::max(dev, std::abs(s.u - u));
            mag = std::max(mag, std::abs(u));
        }
        return dev / mag;
    };
    const double e1 = beam(0.05), e2 = beam(0.025);
    CHECK(e1 < 0.05);
    CHECK(e2 < 0.6 * e1);
}

TEST_CASE("caustic output") {
    std::ostringstream flat;
    write_caustic_csv(flat, load_scenario("flat-cylinder").manifold());
    const auto rows = lines_of(flat.str());
    REQUIRE(rows.size() > 10);
    CHECK(rows[0] == "tau,psi,x1,x2,kind");
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].find(",Degenerate") != std::string::npos);

    std::ostringstream par;
    write_caustic_csv(par, load_scenario("parabola-family").manifold());
    const auto prow = lines_of(par.str());
    int cusps = 0;
    for (const auto& l : prow)
        if (l.find(",Cusp") != std::string::npos) {
            ++cusps;
            CHECK(l == "1,0,0,1,Cusp");
        }
    CHECK(cusps == 1);

    std::ostringstream none;
    write_caustic_csv(none, parse_scenario("manifold = parabola-family\n[manifold]\ntau_min = -2\ntau_max = 0.5\n").manifold());
    CHECK(none.str() == "tau,psi,x1,x2,kind\n");
}

TEST_CASE("built-in scenarios parse") {
    for (const std::string& name : builtin_scenarios()) {
        if (name == "flow-built") continue;   // exercised through the binary below
        CAPTURE(name);
        const Scenario sc = parse_scenario(builtin_scenario_text(name), name);
        CHECK(sc.name == name);
    }
    CHECK_THROWS_AS(builtin_scenario_text("nope"), ConfigError);
    CHECK_THROWS_AS(load_scenario("/no/such/file.scn"), ConfigError);
    CHECK_THROWS_AS(run_verify("nonsense"), ConfigError);
    CHECK(verify_names().size() == 12);
}

TEST_CASE("scenario files in the repository match the built-ins") {
    const char* src = std::getenv("CANOP_SOURCE_DIR");
    if (!src) return;
    for (const std::string& name : builtin_scenarios()) {
        std::ifstream in(std::string(src) + "/scenarios/" + name + ".scn");
        REQUIRE(in);
        std::ostringstream ss;
        ss << in.rdbuf();
        CHECK(ss.str() == builtin_scenario_text(name));
    }
}

TEST_CASE("binary: exit codes and output schema") {
    if (!std::getenv("CANOP_BIN")) return;
    const Proc ok = run_bin("run --scenario flat-cylinder --grid -1:1:3,-1:1:3");
    CHECK(ok.code == 0);
    CHECK(ok.out.rfind("x1,x2,re_u,im_u,abs_u,method,branches,dist_caustic\n", 0) == 0);
    CHECK(lines_of(ok.out).size() == 10);

    CHECK(run_bin("run --scenario flat-cylinder --h -1").code == 2);
    CHECK(run_bin("run --scenario flat-cylinder --seedless").code == 2);
    CHECK(run_bin("run --scenario /no/such.scn").code == 2);
    CHECK(run_bin("run --scenario flat-cylinder --grid 1:2").code == 2);
    CHECK(run_bin("frobnicate").code == 2);
    CHECK(run_bin("run --scenario flat-cylinder --method airy --grid -1:1:3,-1:1:3").code == 2);
    // forced WKB fails at 1 of 9 points: more than 1 percent
    CHECK(run_bin("run --scenario flat-cylinder --method wkb --grid -1:1:3,-1:1:3").code == 3);

    const Proc ai = run_bin("specfn --eval airy 0");
    CHECK(ai.code == 0);
    CHECK(ai.out == "0.35502805388781722\n");
    const Proc j0 = run_bin("specfn --eval j0 2.5");
    CHECK(j0.code == 0);
    CHECK(std::stod(j0.out) == doctest::Approx(bessel_j0(2.5)));
    CHECK(run_bin("specfn --eval nope 1").code == 2);

    const Proc idx = run_bin("index --scenario flat-cylinder --at -1,0.5");
    CHECK(idx.code == 0);
    CHECK(idx.out.find("index = -1\n") != std::string::npos);
    CHECK(idx.out.find("quantization = satisfied\n") != std::string::npos);

    const Proc c = run_bin("caustic --scenario parabola-family");
    CHECK(c.code == 0);
    CHECK(c.out.rfind("tau,psi,x1,x2,kind\n", 0) == 0);

    const Proc fb = run_bin("run --scenario flow-built --grid 1.5:3:3,-0.5:0.5:2");
    CHECK(fb.code == 0);
    CHECK(lines_of(fb.out).size() == 7);

    const Proc v = run_bin("verify maslov");
    CHECK(v.code == 0);
    CHECK(v.out.rfind("PASS  3 maslov", 0) == 0);
}
