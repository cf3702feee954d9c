#include "canop/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>

namespace canop {

GaussRule gauss_legendre(int n) {
    if (n < 1) throw DomainError("gauss_legendre: n must be positive");
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) { p1 = x; p0 = 1.0; }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n == 1) { rule.nodes[0] = 0.0; rule.weights[0] = 2.0; }
    return rule;
}

namespace {

// Kronrod 15 abscissae (non-negative half) and weights; Gauss 7 weights on the odd ones.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b;
    Complex value;
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

}  // namespace

QuadResult gk15(const ComplexIntegrand& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    Complex fc = f(c);
    Complex resk = fc * kWgk[7];
    Complex resg = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = hw * kXgk[j];
        Complex s = f(c - dx) + f(c + dx);
        resk += kWgk[j] * s;
        if (j % 2 == 1) resg += kWg[j / 2] * s;
    }
    QuadResult r;
    r.value = resk * hw;
    r.error = std::abs((resk - resg) * hw);
    r.evaluations = 15;
    r.panels = 1;
    return r;
}

QuadResult integrate_panels(const ComplexIntegrand& f, const std::vector<double>& breakpoints,
                            const AdaptiveOptions& opt) {
    QuadResult total;
    if (breakpoints.size() < 2) return total;
    std::priority_queue<Panel> heap;
    Complex sum{};
    double err = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        double a = breakpoints[i], b = breakpoints[i + 1];
        if (a == b) continue;
        QuadResult p = gk15(f, a, b);
        total.evaluations += 15;
        heap.push({a, b, p.value, p.error});
        sum += p.value;
        err += p.error;
    }
    auto target = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(sum)); };
    while (!heap.empty() && err > target()) {
        if (total.evaluations + 30 > opt.max_evaluations) {
            total.converged = false;
            break;
        }
        Panel worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            total.converged = false;
            break;
        }
        heap.pop();
        QuadResult l = gk15(f, worst.a, mid);
        QuadResult r = gk15(f, mid, worst.b);
        total.evaluations += 30;
        sum += l.value + r.value - worst.value;
        err += l.error + r.error - worst.error;
        heap.push({worst.a, mid, l.value, l.error});
        heap.push({mid, worst.b, r.value, r.error});
    }
    // re-sum in breakpoint order so the result does not depend on heap history rounding
    std::vector<Panel> panels;
    panels.reserve(heap.size());
    while (!heap.empty()) {
        panels.push_back(heap.top());
        heap.pop();
    }
    std::sort(panels.begin(), panels.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
    sum = Complex{};
    err = 0.0;
    for (const Panel& p : panels) {
        sum += p.value;
        err += p.error;
    }
    total.value = sum;
    total.error = err;
    total.panels = panels.size();
    if (err > target()) total.converged = false;
    return total;
}

QuadResult integrate(const ComplexIntegrand& f, double a, double b, const AdaptiveOptions& opt) {
    return integrate_panels(f, {a, b}, opt);
}

double integrate_real(const RealIntegrand& f, double a, double b, double abs_tol,
                      std::size_t max_evaluations) {
    AdaptiveOptions opt;
    opt.abs_tol = abs_tol;
    opt.max_evaluations = max_evaluations;
    QuadResult r = integrate_panels([&](double t) { return Complex(f(t), 0.0); }, {a, b}, opt);
    return r.value.real();
}

}  // namespace canop
