#include "canop/cli/scenario.hpp"

#include <array>
#include <atomic>
#include <cstdint>
#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "canop/flow.hpp"

namespace canop::cli {

ParseError::ParseError(const std::string& source, std::size_t line, std::size_t column, const std::string& msg)
    : ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
      line_(line),
      column_(column) {}

std::string to_string(ManifoldKind k) {
    switch (k) {
        case ManifoldKind::FlatCylinder: return "flat-cylinder";
        case ManifoldKind::ParabolaFamily: return "parabola-family";
        case ManifoldKind::RadialMedium: return "radial-medium";
        case ManifoldKind::ParaxialBeam: return "paraxial-beam";
        case ManifoldKind::FlowBuilt: return "flow";
    }
    return "?";
}

namespace {

std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::optional<double> to_double(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

// Plain number, or a constant expression such as 2*pi.
std::optional<double> constant_value(std::string_view s) {
    if (auto d = to_double(s)) return d;
    try {
        const double v = Expr::parse(std::string(s), {})({});
        if (std::isfinite(v)) return v;
    } catch (const ExprError&) {
    }
    return std::nullopt;
}

struct Item {
    std::string section, key, value;
    std::size_t line = 0, key_col = 0, value_col = 0;
    bool used = false;
};

const std::vector<std::string> kSections = {"", "manifold", "amplitude", "grid", "cover", "numerics"};

/// Typed access to the raw items with source positions for every error.
class Reader {
public:
    Reader(std::string_view text, std::string source) : source_(std::move(source)) { lex(text); }

    [[noreturn]] void fail_at(const Item& it, std::size_t col_in_value, const std::string& msg) const {
        throw ParseError(source_, it.line, it.value_col + col_in_value, msg);
    }
    [[noreturn]] void fail_key(const Item& it, const std::string& msg) const {
        throw ParseError(source_, it.line, it.key_col, msg);
    }
    [[noreturn]] void fail_global(const std::string& msg) const { throw ParseError(source_, 1, 1, msg); }

    Item* find(const std::string& section, const std::string& key) {
        Item* hit = nullptr;
        for (Item& it : items_) {
            if (it.section != section || it.key != key) continue;
            if (hit) fail_key(it, "duplicate key '" + qualified(section, key) + "'");
            hit = &it;
        }
        if (hit) hit->used = true;
        return hit;
    }

    std::vector<Item*> all(const std::string& section, const std::string& key) {
        std::vector<Item*> out;
        for (Item& it : items_)
            if (it.section == section && it.key == key) {
                it.used = true;
                out.push_back(&it);
            }
        return out;
    }

    double number(const std::string& section, const std::string& key, double def) {
        const Item* it = find(section, key);
        double v = def;
        if (it) {
            const auto d = constant_value(it->value);
            if (!d) fail_at(*it, 0, "'" + it->value + "' is not a number");
            v = *d;
        }
        record(section, key, fmt(v));
        return v;
    }

    /// Number with a check; the message names the violated invariant.
    double number(const std::string& section, const std::string& key, double def, bool (*ok)(double),
                  const std::string& invariant) {
        const Item* it = find(section, key);
        double v = def;
        if (it) {
            const auto d = constant_value(it->value);
            if (!d) fail_at(*it, 0, "'" + it->value + "' is not a number");
            v = *d;
        }
        if (!ok(v)) {
            const std::string msg = qualified(section, key) + " = " + fmt(v) + " violates " + invariant;
            if (it) fail_at(*it, 0, msg);
            fail_global(msg);
        }
        record(section, key, fmt(v));
        return v;
    }

    std::size_t count(const std::string& section, const std::string& key, std::size_t def, std::size_t min) {
        const Item* it = find(section, key);
        std::size_t v = def;
        if (it) {
            const auto d = to_double(it->value);
            if (!d || *d != std::floor(*d) || *d < 0) fail_at(*it, 0, "'" + it->value + "' is not a count");
            v = static_cast<std::size_t>(*d);
        }
        if (v < min) {
            const std::string msg = qualified(section, key) + " must be at least " + std::to_string(min);
            if (it) fail_at(*it, 0, msg);
            fail_global(msg);
        }
        record(section, key, std::to_string(v));
        return v;
    }

    std::string word(const std::string& section, const std::string& key, const std::string& def,
                     const std::vector<std::string>& allowed) {
        const Item* it = find(section, key);
        const std::string v = it ? it->value : def;
        if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : " | ") + a;
            const std::string msg = qualified(section, key) + " must be one of " + list + ", got '" + v + "'";
            if (it) fail_at(*it, 0, msg);
            fail_global(msg);
        }
        record(section, key, v);
        return v;
    }

    bool flag(const std::string& section, const std::string& key, bool def) {
        return word(section, key, def ? "yes" : "no", {"yes", "no"}) == "yes";
    }

    Expr expr(const std::string& section, const std::string& key, const std::string& def,
              const std::vector<std::string>& vars) {
        const Item* it = find(section, key);
        const std::string text = it ? it->value : def;
        try {
            Expr e = Expr::parse(text, vars);
            record(section, key, text);
            return e;
        } catch (const ExprError& err) {
            if (it) fail_at(*it, err.column() - 1, err.what());
            fail_global(qualified(section, key) + ": " + err.what());
        }
    }

    void record(const std::string& section, const std::string& key, const std::string& value) {
        resolved_.emplace_back(qualified(section, key), value);
    }

    /// Every item must have been consumed by the interpretation.
    void check_unused() const {
        for (const Item& it : items_)
            if (!it.used) fail_key(it, "unknown key '" + qualified(it.section, it.key) + "'");
    }

    const std::string& source() const { return source_; }
    std::vector<std::pair<std::string, std::string>>& resolved() { return resolved_; }

private:
    static std::string qualified(const std::string& section, const std::string& key) {
        return section.empty() ? key : section + "." + key;
    }

    void lex(std::string_view text) {
        std::string section;
        std::size_t line_no = 0;
        while (!text.empty()) {
            const std::size_t nl = text.find('\n');
            std::string_view line = text.substr(0, nl);
            text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
            ++line_no;
            if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            const std::string_view body = trim(line);
            if (body.empty()) continue;
            const std::size_t indent = static_cast<std::size_t>(body.data() - line.data());
            if (body.front() == '[') {
                if (body.back() != ']')
                    throw ParseError(source_, line_no, indent + body.size(), "expected ']' to close the section");
                section = std::string(trim(body.substr(1, body.size() - 2)));
                if (std::find(kSections.begin(), kSections.end(), section) == kSections.end() || section.empty())
                    throw ParseError(source_, line_no, indent + 2, "unknown section [" + section + "]");
                continue;
            }
            const std::size_t eq = body.find('=');
            if (eq == std::string_view::npos)
                throw ParseError(source_, line_no, indent + 1, "expected 'key = value'");
            Item it;
            it.section = section;
            it.key = std::string(trim(body.substr(0, eq)));
            if (it.key.empty()) throw ParseError(source_, line_no, indent + 1, "missing key before '='");
            const std::string_view raw = body.substr(eq + 1);
            const std::string_view val = trim(raw);
            if (val.empty()) throw ParseError(source_, line_no, indent + eq + 2, "missing value for '" + it.key + "'");
            it.value = std::string(val);
            it.line = line_no;
            it.key_col = indent + 1;
            it.value_col = static_cast<std::size_t>(val.data() - line.data()) + 1;
            items_.push_back(std::move(it));
        }
    }

    std::string source_;
    std::vector<Item> items_;
    std::vector<std::pair<std::string, std::string>> resolved_;
};

bool positive(double v) { return v > 0.0; }
bool nonnegative(double v) { return v >= 0.0; }
bool finite(double v) { return std::isfinite(v); }
bool above_minus_one(double v) { return v > -1.0; }

Interval parse_range(std::string_view text, bool& ok) {
    ok = false;
    const std::size_t c = text.find(':');
    if (c == std::string_view::npos) return {};
    const auto lo = to_double(text.substr(0, c)), hi = to_double(text.substr(c + 1));
    if (!lo || !hi || !(*hi > *lo)) return {};
    ok = true;
    return {*lo, *hi};
}

// n(r) profile from an expression: support radius found with bump replaced by its indicator.
std::shared_ptr<const RadialProfile> expression_profile(Reader& rd, const Item* where, const Expr& n,
                                                       std::optional<double> r0_given) {
    auto fail = [&](const std::string& msg) {
        if (where) rd.fail_at(*where, 0, msg);
        rd.fail_global(msg);
    };
    double r0 = 0.0;
    if (r0_given) {
        r0 = *r0_given;
    } else {
        const double dr = 1e-3, rmax = 100.0;
        double last = -1.0;
        for (double r = 0.0; r <= rmax; r += dr) {
            const double v[1] = {r};
            if (n.eval_support(v) != 1.0) last = r;
        }
        if (last < 0.0) fail("n(r) equals 1 everywhere; nothing to refract");
        if (last > rmax - 2 * dr) fail("n(r) must equal 1 outside a finite radius (use bump)");
        double lo = last, hi = last + dr;
        for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            const double v[1] = {mid};
            (n.eval_support(v) != 1.0 ? lo : hi) = mid;
        }
        r0 = hi;
    }
    if (!(r0 > 0.0)) fail("profile radius must be positive");
    for (int k = 0; k <= 4000; ++k) {
        const double r = 3.0 * r0 * k / 4000.0;
        const double v[1] = {r};
        const double nv = n.eval(v);
        if (!(nv > 0.0)) fail("n(r) must be positive; n(" + fmt(r) + ") = " + fmt(nv));
        if (r >= r0 && std::abs(nv - 1.0) > 1e-14)
            fail("n(r) must equal 1 for r >= " + fmt(r0) + "; n(" + fmt(r) + ") = " + fmt(nv));
    }
    const Expr dn = n.derivative(0);
    return std::make_shared<RadialProfile>(
        [n](double r) { const double v[1] = {r}; return n.eval(v); },
        [dn](double r) { const double v[1] = {r}; return dn.eval(v); }, r0);
}

MuFn invariant_mu(const ManifoldPatch& p) {
    return [p](double tau, double psi) {
        const Vec2 P = p.eval_jet({tau, psi}, JetOrder::First).P;
        return 1.0 / dot(P, P);
    };
}

void build_manifold_section(Reader& rd, Scenario& sc, const std::string& mu_mode, const Expr& mu_expr) {
    const std::string M = "manifold";
    switch (sc.kind) {
        case ManifoldKind::FlatCylinder: {
            const double tmax = rd.number(M, "tau_max", 5.0, positive, "tau_max > 0");
            const double ct = rd.number(M, "central_tau", 0.05, positive, "central_tau > 0");
            if (!(ct < tmax)) rd.fail_global("manifold.central_tau must lie inside (0, tau_max)");
            sc.patch = flat_cylinder(Interval{-tmax, tmax}, ct);
            break;
        }
        case ManifoldKind::ParabolaFamily: {
            const double a = rd.number(M, "a", 0.5, positive, "a > 0");
            const double t0 = rd.number(M, "tau_min", -2.0, finite, "a finite tau_min");
            const double t1 = rd.number(M, "tau_max", 8.0, finite, "a finite tau_max");
            const double p0 = rd.number(M, "psi_min", -2.0, finite, "a finite psi_min");
            const double p1 = rd.number(M, "psi_max", 2.0, finite, "a finite psi_max");
            if (!(t1 > t0) || !(p1 > p0)) rd.fail_global("manifold ranges must satisfy tau_min < tau_max, psi_min < psi_max");
            sc.patch = parabola_family(a, {t0, t1}, {p0, p1});
            break;
        }
        case ManifoldKind::RadialMedium: {
            const std::string prof = rd.word(M, "profile", "bump", {"bump", "expression"});
            if (prof == "bump") {
                const double amp = rd.number(M, "amplitude", 0.3, above_minus_one, "amplitude > -1");
                const double r0 = rd.number(M, "radius", 2.0, positive, "radius > 0");
                sc.profile = std::make_shared<RadialProfile>(RadialProfile::bump_profile(amp, r0));
            } else {
                const Item* where = rd.find(M, "n");
                if (!where) rd.fail_global("profile = expression needs manifold.n, an expression in r");
                const Expr n = rd.expr(M, "n", "1", {"r"});
                std::optional<double> r0;
                if (rd.find(M, "radius")) r0 = rd.number(M, "radius", 1.0, positive, "radius > 0");
                sc.profile = expression_profile(rd, where, n, r0);
                rd.record(M, "detected_radius", fmt(sc.profile->r0()));
            }
            const double tmax = rd.number(M, "tau_max", 6.0, positive, "tau_max > 0");
            const double ct = rd.number(M, "central_tau", 0.05, positive, "central_tau > 0");
            sc.patch = radial_medium(sc.profile, tmax, ct);
            rd.record(M, "phase_shift", fmt(sc.profile->phase_shift()));
            break;
        }
        case ManifoldKind::ParaxialBeam: {
            const Expr lambda = rd.expr(M, "lambda", "1/sqrt(1+z^2)", {"z"});
            const double z = rd.number(M, "z", 0.0, finite, "a finite z");
            const double t = rd.number(M, "t", 0.5, nonnegative, "t >= 0");
            const double m = rd.number(M, "mass", 1.0, positive, "mass > 0");
            const double tmax = rd.number(M, "tau_max", 5.0, positive, "tau_max > 0");
            const double lam = lambda({z});
            if (!(lam > 0.0)) rd.fail_global("lambda(z) must be positive, got " + fmt(lam));
            rd.record(M, "lambda_value", fmt(lam));
            sc.patch = paraxial_beam(lam, t, m, tmax);
            const Interval d = sc.patch->domain().tau;
            if (!d.contains(-t * lam * lam / m))
                rd.fail_global("manifold.tau_max must exceed the focal tau t lambda^2 / mass");
            // action of the central ray, t lambda^2 / (2 m)
            sc.action_phase = t * lam * lam / (2.0 * m);
            break;
        }
        case ManifoldKind::FlowBuilt: {
            const std::string ham = rd.word(M, "hamiltonian", "homogeneous", {"homogeneous", "mechanical"});
            const std::vector<std::string> xv{"x1", "x2"};
            Hamiltonian H;
            // value, gradient and Hessian from one joint program; the ray integrator asks for
            // all three at the same x, so the last point is remembered per thread
            auto fields = [](const Expr& f) {
                const Expr f1 = f.derivative(0), f2 = f.derivative(1);
                auto batch = std::make_shared<const Expr::Batch>(
                    std::vector<Expr>{f, f1, f2, f1.derivative(0), f1.derivative(1), f2.derivative(1)});
                static std::atomic<std::uint64_t> next_id{1};
                const std::uint64_t id = next_id++;
                auto jet = [batch, id](Vec2 x) {
                    struct Last {
                        std::uint64_t owner = 0;
                        double x1 = 0.0, x2 = 0.0;
                        std::array<double, 6> v{};
                    };
                    thread_local Last last;
                    if (last.owner != id || last.x1 != x.x || last.x2 != x.y) {
                        const double in[2] = {x.x, x.y};
                        batch->eval(in, last.v);
                        last = {id, x.x, x.y, last.v};
                    }
                    return last.v;
                };
                ScalarField s = [jet](Vec2 x) { return jet(x)[0]; };
                GradientField g = [jet](Vec2 x) {
                    const auto v = jet(x);
                    return Vec2{v[1], v[2]};
                };
                HessianField hs = [jet](Vec2 x) {
                    const auto v = jet(x);
                    return Mat2{v[3], v[4], v[4], v[5]};
                };
                return std::make_tuple(s, g, hs);
            };
            if (ham == "homogeneous") {
                auto [s, g, hs] = fields(rd.expr(M, "C", "1", xv));
                H = homogeneous(s, g, hs);
            } else {
                auto [s, g, hs] = fields(rd.expr(M, "v", "0", xv));
                const double E = rd.number(M, "E", 1.0, finite, "a finite E");
                const double mass = rd.number(M, "mass", 0.5, positive, "mass > 0");
                Box box{sc.grid.x1, sc.grid.x2};
                H = maupertuis(mechanical(s, E, mass, g, hs), box);
            }
            const std::vector<std::string> sv{"s"};
            const Expr cx1 = rd.expr(M, "curve_x1", "cos(s)", sv);
            const Expr cx2 = rd.expr(M, "curve_x2", "sin(s)", sv);
            const Expr dcx1 = cx1.derivative(0), dcx2 = cx2.derivative(0);
            const bool periodic = rd.flag(M, "periodic", true);
            const double s0 = rd.number(M, "s_min", 0.0, finite, "a finite s_min");
            const double s1 = rd.number(M, "s_max", kTwoPi, finite, "a finite s_max");
            if (!(s1 > s0)) rd.fail_global("manifold.s_min must be below manifold.s_max");
            const double sign = rd.flag(M, "flip_normal", false) ? -1.0 : 1.0;
            InitialCurve curve;
            curve.periodic = periodic;
            curve.psi_range = {s0, s1};
            const Hamiltonian Hc = H;
            curve.gamma = [cx1, cx2, dcx1, dcx2, Hc, sign](double s) {
                const Vec2 x{cx1({s}), cx2({s})};
                const Vec2 t{dcx1({s}), dcx2({s})};
                const Vec2 n = sign * Vec2{t.y, -t.x} / norm(t);
                return PhasePoint{x, n / Hc.C(x)};
            };
            FlowOptions fo;
            const double t0 = rd.number(M, "tau_min", 0.0, finite, "a finite tau_min");
            const double t1 = rd.number(M, "tau_max", 5.0, finite, "a finite tau_max");
            if (!(t1 > t0)) rd.fail_global("manifold.tau_min must be below manifold.tau_max");
            fo.steps = rd.count(M, "steps", 1024, 16);
            fo.psi_samples = rd.count(M, "psi_samples", 1024, 16);
            fo.measure = mu_mode == "invariant" ? FlowMeasure::Invariant : FlowMeasure::Unit;
            const double ct = rd.number(M, "central_tau", std::clamp(0.0, t0, t1), finite, "a finite central_tau");
            const double cp = rd.number(M, "central_psi", 0.5 * (s0 + s1), finite, "a finite central_psi");
            fo.central_point = {ct, cp};
            sc.patch = build_manifold(H, curve, {t0, t1}, fo);
            break;
        }
    }

    // measure override
    if (mu_mode == "default" || (sc.kind == ManifoldKind::FlowBuilt && mu_mode == "invariant")) return;
    ManifoldPatch::Spec spec = sc.patch->spec();
    if (mu_mode == "1") {
        spec.mu = {};
    } else if (mu_mode == "invariant") {
        spec.mu = invariant_mu(*sc.patch);
    } else {
        spec.mu = [mu_expr](double tau, double psi) { return mu_expr({tau, psi}); };
    }
    sc.patch = ManifoldPatch(std::move(spec));
}

void parse_chart(Reader& rd, const Item& it, std::vector<Chart>& charts) {
    std::istringstream is(it.value);
    std::string tok;
    Chart c;
    bool first = true;
    std::size_t col = 0;
    while (is >> tok) {
        col = it.value.find(tok, col);
        if (first) {
            if (tok == "singular") c.kind = Chart::Kind::Singular;
            else if (tok == "regular") c.kind = Chart::Kind::Regular;
            else rd.fail_at(it, col, "chart kind must be singular or regular, got '" + tok + "'");
            first = false;
            continue;
        }
        const std::size_t eq = tok.find('=');
        if (eq == std::string::npos) rd.fail_at(it, col, "expected name=value in chart, got '" + tok + "'");
        const std::string name = tok.substr(0, eq), val = tok.substr(eq + 1);
        bool ok = false;
        if (name == "tau" || name == "psi") {
            const Interval r = parse_range(val, ok);
            if (!ok) rd.fail_at(it, col + eq + 1, "expected lo:hi with lo < hi, got '" + val + "'");
            (name == "tau" ? c.tau : c.psi) = r;
        } else if (name == "plateau") {
            const auto v = to_double(val);
            if (!v || !(*v >= 0.0 && *v < 1.0)) rd.fail_at(it, col + eq + 1, "plateau must lie in [0, 1)");
            c.plateau = *v;
        } else if (name == "taper") {
            std::istringstream ts(val);
            std::string t;
            while (std::getline(ts, t, ',')) {
                if (t == "tau") c.taper_tau = true;
                else if (t == "psi") c.taper_psi = true;
                else if (t != "none") rd.fail_at(it, col + eq + 1, "taper takes tau, psi or none");
            }
        } else {
            rd.fail_at(it, col, "unknown chart setting '" + name + "'");
        }
        col += tok.size();
    }
    if (first) rd.fail_at(it, 0, "empty chart");
    charts.push_back(c);
}

std::string chart_text(const Chart& c) {
    std::ostringstream os;
    os << (c.kind == Chart::Kind::Singular ? "singular" : "regular");
    if (c.tau.bounded()) os << " tau=" << fmt(c.tau.lo) << ':' << fmt(c.tau.hi);
    if (c.psi.bounded()) os << " psi=" << fmt(c.psi.lo) << ':' << fmt(c.psi.hi);
    os << " plateau=" << fmt(c.plateau);
    if (c.taper_tau || c.taper_psi)
        os << " taper=" << (c.taper_tau ? "tau" : "") << (c.taper_tau && c.taper_psi ? "," : "") << (c.taper_psi ? "psi" : "");
    return os.str();
}

}  // namespace

void parse_axis(std::string_view text, Interval& range, std::size_t& count) {
    const std::size_t c2 = text.rfind(':');
    if (c2 == std::string_view::npos) throw ConfigError("grid axis must be lo:hi:n, got '" + std::string(text) + "'");
    const auto n = to_double(text.substr(c2 + 1));
    if (!n || *n != std::floor(*n) || *n < 1) throw ConfigError("grid counts must be integers >= 1 in '" + std::string(text) + "'");
    const std::string_view lr = text.substr(0, c2);
    const std::size_t c1 = lr.find(':');
    if (c1 == std::string_view::npos) throw ConfigError("grid axis must be lo:hi:n, got '" + std::string(text) + "'");
    const auto lo = to_double(lr.substr(0, c1)), hi = to_double(lr.substr(c1 + 1));
    if (!lo || !hi) throw ConfigError("grid bounds must be numbers in '" + std::string(text) + "'");
    if (*n > 1 && !(*hi > *lo)) throw ConfigError("grid axis needs lo < hi in '" + std::string(text) + "'");
    range = {*lo, *hi};
    count = static_cast<std::size_t>(*n);
}

GridSpec parse_grid(std::string_view text) {
    const std::size_t comma = text.find(',');
    if (comma == std::string_view::npos)
        throw ConfigError("--grid must be x1min:x1max:n1,x2min:x2max:n2");
    GridSpec g;
    parse_axis(trim(text.substr(0, comma)), g.x1, g.n1);
    parse_axis(trim(text.substr(comma + 1)), g.x2, g.n2);
    return g;
}

Amplitude Scenario::amplitude_fn() const {
    const Expr e = amplitude;
    if (e.depends_on(2) || e.depends_on(3))
        return Amplitude::of_x([e](Vec2 x, double tau, double psi) { return Complex(e({tau, psi, x.x, x.y}), 0.0); });
    return Amplitude::of([e](double tau, double psi) { return Complex(e({tau, psi, 0.0, 0.0}), 0.0); });
}

std::string Scenario::echo() const {
    std::string out;
    for (const auto& [k, v] : resolved) out += k + " = " + v + "\n";
    return out;
}

Scenario parse_scenario(std::string_view text, const std::string& source) {
    Reader rd(text, source);
    Scenario sc;
    const std::string kind = rd.word("", "manifold", "flat-cylinder",
                                     {"flat-cylinder", "parabola-family", "radial-medium", "paraxial-beam", "flow"});
    if (kind == "parabola-family") sc.kind = ManifoldKind::ParabolaFamily;
    else if (kind == "radial-medium") sc.kind = ManifoldKind::RadialMedium;
    else if (kind == "paraxial-beam") sc.kind = ManifoldKind::ParaxialBeam;
    else if (kind == "flow") sc.kind = ManifoldKind::FlowBuilt;
    {
        const Item* it = rd.find("", "name");
        sc.name = it ? it->value : kind;
        rd.record("", "name", sc.name);
    }
    sc.h = rd.number("", "h", 0.1, positive, "h > 0");

    // grid first: the mechanical flow checks its energy condition on the grid box
    {
        const Item* it1 = rd.find("grid", "x1");
        const Item* it2 = rd.find("grid", "x2");
        for (const Item* it : {it1, it2}) {
            if (!it) continue;
            try {
                parse_axis(it->value, it == it1 ? sc.grid.x1 : sc.grid.x2, it == it1 ? sc.grid.n1 : sc.grid.n2);
            } catch (const ConfigError& e) {
                rd.fail_at(*it, 0, e.what());
            }
        }
        if (!it1) sc.grid.x1 = {-3.0, 3.0}, sc.grid.n1 = 41;
        if (!it2) sc.grid.x2 = {-3.0, 3.0}, sc.grid.n2 = 41;
        rd.record("grid", "x1", fmt(sc.grid.x1.lo) + ":" + fmt(sc.grid.x1.hi) + ":" + std::to_string(sc.grid.n1));
        rd.record("grid", "x2", fmt(sc.grid.x2.lo) + ":" + fmt(sc.grid.x2.hi) + ":" + std::to_string(sc.grid.n2));
    }

    sc.amplitude = rd.expr("amplitude", "A", "1", {"tau", "psi", "x1", "x2"});
    std::string mu_mode = "default";
    Expr mu_expr;
    if (const Item* it = rd.find("amplitude", "mu")) {
        if (it->value == "default" || it->value == "1" || it->value == "invariant") {
            mu_mode = it->value;
        } else {
            try {
                mu_expr = Expr::parse(it->value, {"tau", "psi"});
            } catch (const ExprError& e) {
                rd.fail_at(*it, e.column() - 1, e.what());
            }
            mu_mode = "expression";
        }
        rd.record("amplitude", "mu", it->value);
    } else {
        rd.record("amplitude", "mu", mu_mode);
    }

    build_manifold_section(rd, sc, mu_mode, mu_expr);
    if (mu_mode == "expression") {
        const ManifoldPatch& p = *sc.patch;
        for (const EikonalCoord c : regular_samples(p, 33, 33)) {
            const double m = p.mu(c);
            if (!(m > 0.0)) rd.fail_global("amplitude.mu must be positive; mu(" + fmt(c.tau) + ", " + fmt(c.psi) + ") = " + fmt(m));
        }
    }

    const std::string mode = rd.word("cover", "mode", "auto", {"auto", "charts"});
    sc.auto_cover = mode == "auto";
    for (Item* it : rd.all("cover", "chart")) {
        if (sc.auto_cover) rd.fail_key(*it, "cover.chart needs cover.mode = charts");
        parse_chart(rd, *it, sc.charts);
        rd.record("cover", "chart", chart_text(sc.charts.back()));
    }
    if (!sc.auto_cover && sc.charts.empty()) rd.fail_global("cover.mode = charts needs at least one cover.chart");

    sc.method = rd.word("numerics", "method", "auto", {"auto", "wkb", "integral", "airy", "pearcey"});
    sc.tol = rd.number("numerics", "tol", 1e-10, positive, "tol > 0");
    sc.threads = static_cast<unsigned>(rd.count("numerics", "threads", 1, 1));
    sc.dispatch_factor = rd.number("numerics", "dispatch_factor", 3.0, positive, "dispatch_factor > 0");
    sc.radius_factor = rd.number("numerics", "radius_factor", 0.5, positive, "radius_factor > 0");

    rd.check_unused();
    sc.resolved = std::move(rd.resolved());
    return sc;
}

namespace {

struct Builtin {
    const char* name;
    const char* text;
};

const Builtin kBuiltins[] = {
    {"flat-cylinder", R"(# Lagrangian cylinder X = tau n(psi), P = n(psi); caustic is the point x = 0.
name = flat-cylinder
manifold = flat-cylinder
h = 0.1

[manifold]
tau_max = 5

[amplitude]
A = 1
mu = 1

[grid]
x1 = -3:3:41
x2 = -3:3:41
)"},
    {"parabola-family", R"(# Normals to the parabola x2 = a x1^2: an evolute with two fold branches and a cusp.
name = parabola-family
manifold = parabola-family
h = 0.02

[manifold]
a = 0.5
tau_min = -2
tau_max = 8
psi_min = -2
psi_max = 2

[amplitude]
A = bump(psi/2)

[grid]
x1 = -1.5:1.5:31
x2 = 0.5:3:26
)"},
    {"radial-medium", R"(# Rays from the origin refracted by n(r) = 1 + 0.3 bump(r/2).
name = radial-medium
manifold = radial-medium
h = 0.05

[manifold]
profile = bump
amplitude = 0.3
radius = 2
tau_max = 7

[grid]
x1 = -4:4:33
x2 = -4:4:33

[numerics]
method = integral
)"},
    {"paraxial-beam", R"(# Bessel beam in the paraxial approximation at z = 0.5, t = 0.5.
name = paraxial-beam
manifold = paraxial-beam
h = 0.05

[manifold]
lambda = 1/sqrt(1+z^2)
z = 0.5
t = 0.5
mass = 1
tau_max = 5

[amplitude]
A = bump(tau/3)

[grid]
x1 = -2:2:21
x2 = -2:2:21

[numerics]
method = integral
)"},
    {"flow-built", R"(# Circular wave from near the origin traced through an off-centre lens n = 1 + 0.03 bump(|x - (2,0)|^2).
# Stronger lenses fold the momentum angle over psi and need an explicit chart cover.
name = flow-built
manifold = flow
h = 0.05

[manifold]
hamiltonian = homogeneous
C = 1/(1 + 0.03*bump((x1-2)^2 + x2^2))
curve_x1 = 0.5*cos(s)
curve_x2 = 0.5*sin(s)
periodic = yes
s_min = 0
s_max = 2*pi
tau_min = -4
tau_max = 4
steps = 512
psi_samples = 512

[amplitude]
A = 1

[grid]
x1 = 1:3.5:11
x2 = -1:1:9

[numerics]
# Fixed-step rays carry integration error near 1e-9, so the quadrature target stays above it.
method = auto
tol = 1e-6
)"},
};

}  // namespace

std::vector<std::string> builtin_scenarios() {
    std::vector<std::string> out;
    for (const Builtin& b : kBuiltins) out.emplace_back(b.name);
    return out;
}

std::string builtin_scenario_text(const std::string& name) {
    for (const Builtin& b : kBuiltins)
        if (name == b.name) return b.text;
    std::string list;
    for (const Builtin& b : kBuiltins) list += std::string(list.empty() ? "" : ", ") + b.name;
    throw ConfigError("unknown scenario '" + name + "' (built-in: " + list + ")");
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        for (const Builtin& b : kBuiltins)
            if (path == b.name) return parse_scenario(b.text, b.name);
        throw ConfigError("cannot read scenario file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path);
}

}  // namespace canop::cli
