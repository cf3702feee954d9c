#include "canop/cli/commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "canop/caustics.hpp"
#include "canop/cli/verify.hpp"
#include "canop/parallel.hpp"
#include "canop/specfn.hpp"

namespace canop::cli {

const char* const kFieldHeader = "x1,x2,re_u,im_u,abs_u,method,branches,dist_caustic";
const char* const kCausticHeader = "tau,psi,x1,x2,kind";

void apply_overrides(Scenario& sc, const Overrides& ov) {
    if (ov.h) {
        if (!(*ov.h > 0.0)) throw ConfigError("--h must be positive (h > 0)");
        sc.h = *ov.h;
    }
    if (ov.grid) sc.grid = *ov.grid;
    if (ov.method) {
        const std::string& m = *ov.method;
        if (m != "auto" && m != "wkb" && m != "integral" && m != "airy" && m != "pearcey")
            throw ConfigError("--method must be auto, wkb, integral, airy or pearcey");
        sc.method = m;
    }
    if (ov.tol) {
        if (!(*ov.tol > 0.0)) throw ConfigError("--tol must be positive");
        sc.tol = *ov.tol;
    }
    if (ov.threads) {
        if (*ov.threads < 1) throw ConfigError("--threads must be at least 1");
        sc.threads = *ov.threads;
    }
}

namespace {

FieldSample failed_sample(Vec2 x, double h, FieldMethod m, const std::string& reason) {
    FieldSample s;
    s.x = x;
    s.h = h;
    s.method = m;
    s.u = Complex(std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN());
    s.ok = false;
    s.reason = reason;
    return s;
}

std::vector<FieldSample> local_eval(const Scenario& sc, FocalKind want) {
    const ManifoldPatch& patch = sc.manifold();
    std::vector<FocalPoint> focal;
    for (const FocalPoint& f : find_focal_points(patch)) {
        const FocalPoint c = f.kind == FocalKind::Unclassified ? classify_focal_point(patch, f) : f;
        if (c.kind == want) focal.push_back(c);
    }
    if (focal.empty())
        throw ConfigError(want == FocalKind::Fold ? "no fold focal points" : "no cusp focal points");

    IndexTable indices(patch);
    ChartCover cover = sc.auto_cover ? ChartCover::single_singular(patch) : sc.cover();
    cover.prepare(patch, indices);
    auto chart_index = [&](const FocalPoint& f) {
        for (std::size_t j = 0; j < cover.charts().size(); ++j) {
            const Chart& c = cover.charts()[j];
            if (c.kind == Chart::Kind::Singular && cover.raw_weight(j, patch, f.coord) > 0.0) return c.index;
        }
        throw ConfigError("focal point at tau = " + format_number(f.coord.tau) + ", psi = " +
                          format_number(f.coord.psi) + " lies in no singular chart");
    };
    std::vector<int> idx;
    for (const FocalPoint& f : focal) idx.push_back(chart_index(f));

    const Amplitude A = sc.amplitude_fn();
    const std::vector<Vec2> pts = sc.grid.points();
    std::vector<FieldSample> out(pts.size());
    const FieldMethod tag = want == FocalKind::Fold ? FieldMethod::Airy : FieldMethod::Pearcey;
    parallel_for(pts.size(), sc.threads, [&](std::size_t k) {
        const Vec2 x = pts[k];
        std::size_t best = 0;
        for (std::size_t i = 1; i < focal.size(); ++i)
            if (norm(x - focal[i].x_star) < norm(x - focal[best].x_star)) best = i;
        LocalOptions lo;
        lo.radius_factor = sc.radius_factor;
        lo.chart_index = idx[best];
        try {
            out[k] = want == FocalKind::Fold ? airy_local_field(patch, A, focal[best], x, sc.h, lo)
                                             : pearcey_local_field(patch, A, focal[best], x, sc.h, lo);
        } catch (const Error& e) {
            out[k] = failed_sample(x, sc.h, tag, e.what());
            out[k].nearest_caustic_distance = norm(x - focal[best].x_star);
        }
    });
    return out;
}

std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
    return s;
}

}  // namespace

RunResult evaluate_scenario(const Scenario& sc) {
    RunResult r;
    const ManifoldPatch& patch = sc.manifold();
    if (sc.method == "airy") {
        r.samples = local_eval(sc, FocalKind::Fold);
    } else if (sc.method == "pearcey") {
        r.samples = local_eval(sc, FocalKind::Cusp);
    } else {
        GridOptions opt;
        opt.threads = sc.threads;
        opt.dispatch_factor = sc.dispatch_factor;
        opt.global.integral.abs_tol = sc.tol;
        opt.global.integral.rel_tol = sc.tol;
        const DispatchMethod dm = sc.method == "wkb"        ? DispatchMethod::ForceWKB
                                  : sc.method == "integral" ? DispatchMethod::ForceIntegral
                                                            : DispatchMethod::Auto;
        r.samples = grid_eval(patch, sc.amplitude_fn(), sc.cover(), sc.grid.points(), sc.h, dm, opt);
    }
    const Complex phase = std::polar(1.0, sc.action_phase / sc.h);
    for (FieldSample& s : r.samples) {
        if (s.ok && sc.action_phase != 0.0) s.u *= phase;
        if (!s.ok) ++r.failed;
    }
    return r;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_field_csv(std::ostream& out, const std::vector<FieldSample>& samples) {
    out << kFieldHeader << '\n';
    for (const FieldSample& s : samples) {
        out << format_number(s.x.x) << ',' << format_number(s.x.y) << ',' << format_number(s.u.real()) << ','
            << format_number(s.u.imag()) << ',' << format_number(s.ok ? std::abs(s.u) : std::nan("")) << ',';
        if (s.ok) out << to_string(s.method);
        else out << "failed:" << to_string(s.method) << ": " << csv_safe(s.reason);
        out << ',' << s.branch_count << ',' << format_number(s.nearest_caustic_distance) << '\n';
    }
}

void write_caustic_csv(std::ostream& out, const ManifoldPatch& patch) {
    out << kCausticHeader << '\n';
    for (const auto& curve : find_focal_curves(patch)) {
        for (const FocalPoint& f : curve) {
            const FocalPoint c = f.kind == FocalKind::Unclassified ? classify_focal_point(patch, f) : f;
            out << format_number(c.coord.tau) << ',' << format_number(c.coord.psi) << ','
                << format_number(c.x_star.x) << ',' << format_number(c.x_star.y) << ',' << to_string(c.kind) << '\n';
        }
    }
}

namespace {

struct Sink {
    std::ofstream file;
    std::ostream* stream = nullptr;
};

void open_sink(Sink& s, const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
        s.stream = &fallback;
        return;
    }
    s.file.open(path, std::ios::binary);
    if (!s.file) throw ConfigError("cannot write '" + path + "'");
    s.stream = &s.file;
}

void echo_scenario(const Scenario& sc, std::ostream& err) {
    std::istringstream is(sc.echo());
    std::string line;
    while (std::getline(is, line)) err << "# " << line << '\n';
}

int cmd_specfn(const std::vector<std::string>& args, std::ostream& out) {
    if (args.empty()) throw ConfigError("specfn needs --eval <name> <args>");
    const std::string& name = args[0];
    std::vector<double> v;
    for (std::size_t i = 1; i < args.size(); ++i) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(args[i], &used));
            if (used != args[i].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ConfigError("specfn argument '" + args[i] + "' is not a number");
        }
    }
    auto need = [&](std::size_t n) {
        if (v.size() != n) throw ConfigError(name + " takes " + std::to_string(n) + " argument(s)");
    };
    if (name == "airy") {
        need(1);
        out << format_number(airy_ai(v[0])) << '\n';
    } else if (name == "pearcey+" || name == "pearcey-" || name == "pearcey") {
        need(2);
        const Complex p = pearcey(v[0], v[1], name == "pearcey-" ? PearceySign::Minus : PearceySign::Plus);
        out << format_number(p.real()) << ' ' << format_number(p.imag()) << '\n';
    } else if (name == "j0" || name == "j1" || name == "y0" || name == "y1") {
        need(1);
        const int order = name[1] - '0';
        out << format_number(name[0] == 'j' ? bessel_j(order, v[0]) : bessel_y(order, v[0])) << '\n';
    } else if (name == "jn" || name == "yn") {
        need(2);
        if (v[0] != std::floor(v[0])) throw ConfigError(name + " order must be an integer");
        const int order = static_cast<int>(v[0]);
        out << format_number(name == "jn" ? bessel_j(order, v[1]) : bessel_y(order, v[1])) << '\n';
    } else {
        throw ConfigError("unknown function '" + name + "' (airy, pearcey+, pearcey-, j0, j1, jn, y0, y1, yn)");
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"canop: semiclassical wave fields by the Maslov canonical operator in angle variables"};
    app.set_help_flag("--help", "print help");   // -h would collide with --h
    app.require_subcommand(1);
    bool seedless = false;
    app.add_flag("--seedless", seedless, "reserved; canop uses no random numbers and rejects this flag");

    std::string scenario_path, out_path, grid_text, method, at_text;
    double h = 0.0, tol = 0.0;
    unsigned threads = 0;
    std::vector<std::string> eval_args;
    std::string verify_name = "all";

    auto add_common = [&](CLI::App* c) {
        c->add_option("--scenario", scenario_path, "scenario file or built-in name")->required();
        c->add_option("--h", h, "semiclassical parameter");
        c->add_option("--tol", tol, "quadrature tolerance");
        c->add_option("--threads", threads, "worker threads");
        c->add_option("--out", out_path, "output file (stdout when omitted)");
    };
    CLI::App* run = app.add_subcommand("run", "evaluate the field on the scenario grid and write CSV");
    add_common(run);
    run->add_option("--grid", grid_text, "x1min:x1max:n1,x2min:x2max:n2");
    run->add_option("--method", method, "auto|wkb|integral|airy|pearcey");
    CLI::App* caustic = app.add_subcommand("caustic", "write the focal set with fold/cusp tags as CSV");
    add_common(caustic);
    CLI::App* index = app.add_subcommand("index", "Maslov index at a point and quantization of the psi cycle");
    add_common(index);
    index->add_option("--at", at_text, "tau,psi");
    CLI::App* specfn = app.add_subcommand("specfn", "evaluate a special function");
    specfn->add_option("--eval", eval_args, "name followed by arguments")->expected(1, 3)->required();
    CLI::App* verify = app.add_subcommand("verify", "run a named check or the whole acceptance suite");
    verify->add_option("name", verify_name, "check name or 'all'");
    verify->add_option("--threads", threads, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (seedless) throw ConfigError("--seedless is reserved: canop draws no random numbers anywhere");
        Overrides ov;
        if (h != 0.0) ov.h = h;
        if (tol != 0.0) ov.tol = tol;
        if (threads != 0) ov.threads = threads;

        if (*specfn) return cmd_specfn(eval_args, out);

        if (*verify) {
            bool all_ok = true;
            const auto t = ov.threads.value_or(1);
            for (const CheckReport& r : run_verify(verify_name, t)) {
                out << format_report_line(r) << '\n';
                for (const std::string& d : r.details) out << "      " << d << '\n';
                all_ok = all_ok && r.passed;
            }
            return all_ok ? kExitOk : kExitNumeric;
        }

        Scenario sc = load_scenario(scenario_path);
        if (!grid_text.empty()) ov.grid = parse_grid(grid_text);
        if (!method.empty()) ov.method = method;
        apply_overrides(sc, ov);
        echo_scenario(sc, err);

        if (*run) {
            const RunResult r = evaluate_scenario(sc);
            Sink sink;
            open_sink(sink, out_path, out);
            write_field_csv(*sink.stream, r.samples);
            sink.stream->flush();
            if (r.failed > 0) {
                err << "canop: " << r.failed << " of " << r.samples.size() << " points failed\n";
                if (100 * r.failed > r.samples.size()) return kExitNumeric;
            }
            return kExitOk;
        }
        if (*caustic) {
            Sink sink;
            open_sink(sink, out_path, out);
            write_caustic_csv(*sink.stream, sc.manifold());
            return kExitOk;
        }
        if (*index) {
            const ManifoldPatch& p = sc.manifold();
            Sink sink;
            open_sink(sink, out_path, out);
            std::ostream& o = *sink.stream;
            o << "central_point = " << format_number(p.central_point().tau) << ','
              << format_number(p.central_point().psi) << '\n';
            if (!at_text.empty()) {
                const std::size_t c = at_text.find(',');
                if (c == std::string::npos) throw ConfigError("--at must be tau,psi");
                EikonalCoord at;
                try {
                    at = {std::stod(at_text.substr(0, c)), std::stod(at_text.substr(c + 1))};
                } catch (const std::exception&) {
                    throw ConfigError("--at must be two numbers tau,psi");
                }
                const IndexResult r = maslov_index_point_detail(p, default_index_path(p, at));
                o << "index = " << r.index << '\n'
                  << "extrapolated = " << format_number(r.value) << '\n'
                  << "residual = " << format_number(r.residual) << '\n';
            }
            if (p.periodic_psi()) {
                std::vector<EikonalCoord> cycle;
                const Interval ps = p.domain().psi;
                for (int k = 0; k <= 256; ++k)
                    cycle.push_back({p.central_point().tau, ps.lo + ps.length() * k / 256.0});
                const QuantizationReport q = check_quantization(p, {cycle}, sc.h).front();
                o << "cycle_action = " << format_number(q.action) << '\n'
                  << "cycle_index = " << q.index << '\n'
                  << "quantization_residual = " << format_number(q.residual) << '\n'
                  << "quantization = " << (q.satisfied ? "satisfied" : "violated") << '\n';
            }
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        err << "canop: error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        err << "canop: numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        err << "canop: numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitOk;
}

}  // namespace canop::cli
