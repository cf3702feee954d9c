#include "canop/specfn.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "canop/quadrature.hpp"

namespace canop {

namespace {

constexpr long double kAi0 = 0.355028053887817239260063186004183L;   // Ai(0)
constexpr long double kAip0 = 0.258819403792806798405183560189203L;  // -Ai'(0)

double airy_series(double yd) {
    const long double y = yd;
    const long double y3 = y * y * y;
    long double tf = 1.0L, tg = y;
    long double f = tf, g = tg;
    for (int k = 1; k < 400; ++k) {
        tf *= y3 / ((3.0L * k - 1.0L) * (3.0L * k));
        tg *= y3 / ((3.0L * k) * (3.0L * k + 1.0L));
        f += tf;
        g += tg;
        if (std::fabs(tf) + std::fabs(tg) < 1e-24L * (std::fabs(f) + std::fabs(g) + 1e-300L)) break;
    }
    return static_cast<double>(kAi0 * f - kAip0 * g);
}

// u_k coefficients of the Airy asymptotic expansions
std::vector<double> airy_u(double zeta, int* count) {
    std::vector<double> terms{1.0};
    double u = 1.0;
    double prev = 1.0;
    for (int k = 1; k < 60; ++k) {
        u *= (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / ((2.0 * k - 1.0) * 216.0 * k);
        double t = u / std::pow(zeta, k);
        if (std::abs(t) > std::abs(prev)) break;
        terms.push_back(t);
        prev = t;
        if (std::abs(t) < 1e-17) break;
    }
    *count = static_cast<int>(terms.size());
    return terms;
}

double airy_asymptotic_positive(double y) {
    const double zeta = 2.0 / 3.0 * y * std::sqrt(y);
    int n = 0;
    std::vector<double> t = airy_u(zeta, &n);
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += (k % 2 == 0 ? 1.0 : -1.0) * t[k];
    return std::exp(-zeta) / (2.0 * std::sqrt(kPi) * std::pow(y, 0.25)) * s;
}

double airy_asymptotic_negative(double y) {
    const double x = -y;
    const double zeta = 2.0 / 3.0 * x * std::sqrt(x);
    int n = 0;
    std::vector<double> t = airy_u(zeta, &n);
    double even = 0.0, odd = 0.0;
    for (int k = 0; k < n; ++k) {
        const double sgn = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
        if (k % 2 == 0) even += sgn * t[k];
        else odd += sgn * t[k];
    }
    const double chi = zeta - 0.25 * kPi;
    return (std::cos(chi) * even + std::sin(chi) * odd) / (std::sqrt(kPi) * std::pow(x, 0.25));
}

double bessel_series(int order, double zd) {
    const long double z = zd;
    const long double q = -0.25L * z * z;
    long double term = (order == 0) ? 1.0L : 0.5L * z;
    long double sum = term;
    for (int k = 1; k < 500; ++k) {
        term *= q / (static_cast<long double>(k) * (k + order));
        sum += term;
        if (std::fabs(term) < 1e-22L) break;
    }
    return static_cast<double>(sum);
}

struct HankelPQ {
    double p = 0.0, q = 0.0, chi = 0.0;
};

HankelPQ hankel_pq(int order, double z) {
    const double mu = 4.0 * order * order;
    HankelPQ r;
    double t = 1.0;
    double prev = 2.0;
    for (int k = 0; k < 80; ++k) {
        if (k > 0) t *= (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k * z);
        if (std::abs(t) > prev) break;
        if (k % 2 == 0) r.p += ((k / 2) % 2 == 0 ? 1.0 : -1.0) * t;
        else r.q += (((k - 1) / 2) % 2 == 0 ? 1.0 : -1.0) * t;
        prev = std::abs(t);
        if (prev < 1e-18) break;
    }
    r.chi = z - (0.5 * order + 0.25) * kPi;
    return r;
}

double bessel_hankel(int order, double z) {
    const HankelPQ h = hankel_pq(order, z);
    return std::sqrt(2.0 / (kPi * z)) * (h.p * std::cos(h.chi) - h.q * std::sin(h.chi));
}

double bessel_y_hankel(int order, double z) {
    const HankelPQ h = hankel_pq(order, z);
    return std::sqrt(2.0 / (kPi * z)) * (h.p * std::sin(h.chi) + h.q * std::cos(h.chi));
}

// Neumann series with harmonic numbers, long double.
double bessel_y_series(int order, double zd) {
    const long double z = zd, pi = 3.141592653589793238462643383279503L;
    const long double euler = 0.577215664901532860606512090082402L;
    const long double lg = std::log(0.5L * z) + euler;
    const long double q = -0.25L * z * z;
    if (order == 0) {
        long double term = 1.0L, j0 = 1.0L, s = 0.0L, H = 0.0L;
        for (int k = 1; k < 500; ++k) {
            term *= q / (static_cast<long double>(k) * k);
            H += 1.0L / k;
            j0 += term;
            s -= H * term;
            if (std::fabs(term) * (H + 1.0L) < 1e-24L) break;
        }
        return static_cast<double>(2.0L / pi * (lg * j0 + s));
    }
    long double term = 0.5L * z, j1 = term, s = term, Hk = 0.0L, Hk1 = 1.0L;
    for (int k = 1; k < 500; ++k) {
        term *= q / (static_cast<long double>(k) * (k + 1));
        Hk += 1.0L / k;
        Hk1 += 1.0L / (k + 1);
        j1 += term;
        s += (Hk + Hk1) * term;
        if (std::fabs(term) * (Hk + Hk1 + 1.0L) < 1e-24L) break;
    }
    return static_cast<double>(2.0L / pi * lg * j1 - 2.0L / (pi * z) - s / pi);
}

}  // namespace

double airy_ai(double y) {
    if (!(y >= kAiryMin && y <= kAiryMax))
        throw RangeError("airy_ai: argument " + std::to_string(y) + " outside [-60, 20]");
    if (y > 6.0) return airy_asymptotic_positive(y);
    if (y < -8.0) return airy_asymptotic_negative(y);
    return airy_series(y);
}

double bessel_j(int order, double z) {
    if (order != 0 && order != 1) throw DomainError("bessel_j: order must be 0 or 1");
    if (!(z >= 0.0 && z <= kBesselMax))
        throw RangeError("bessel_j: argument " + std::to_string(z) + " outside [0, 1e4]");
    if (z <= 16.0) return bessel_series(order, z);
    return bessel_hankel(order, z);
}

double bessel_y(int order, double z) {
    if (order != 0 && order != 1) throw DomainError("bessel_y: order must be 0 or 1");
    if (!(z > 0.0 && z <= kBesselMax))
        throw RangeError("bessel_y: argument " + std::to_string(z) + " outside (0, 1e4]");
    if (z <= 16.0) return bessel_y_series(order, z);
    return bessel_y_hankel(order, z);
}

Complex pearcey(double v, double y, PearceySign sign) {
    if (!(std::abs(v) <= kPearceyBox && std::abs(y) <= kPearceyBox))
        throw RangeError("pearcey: arguments outside |v|,|y| <= 40");
    const double sg = (sign == PearceySign::Plus) ? 1.0 : -1.0;
    auto phase = [&](Complex eta) {
        Complex e2 = eta * eta;
        return y * eta + v * e2 + sg * e2 * e2;
    };
    // Real segment [-R, R] joined to rays leaving +-R in the direction of Gaussian decay.
    double R = 0.5;
    while (4.0 * R * R * R + 2.0 * sg * v * R - std::abs(y) < 1.0 || 6.0 * R * R + sg * v < 1.0)
        R += 0.05;
    const Complex d = std::polar(1.0, sg * kPi / 8.0);

    AdaptiveOptions opt;
    opt.abs_tol = 1e-12;
    opt.max_evaluations = 400000;

    const double freq = std::abs(y) + 2.0 * std::abs(v) * R + 4.0 * R * R * R;
    const int nseg = std::max(8, static_cast<int>(std::ceil(2.0 * R * freq / kPi)));
    std::vector<double> bp(nseg + 1);
    for (int i = 0; i <= nseg; ++i) bp[i] = -R + 2.0 * R * i / nseg;
    QuadResult mid = integrate_panels([&](double t) { return std::exp(kI * phase(Complex(t, 0.0))); },
                                      bp, opt);

    const double smax = 8.0;
    std::vector<double> tb(33);
    for (int i = 0; i <= 32; ++i) tb[i] = smax * i / 32.0;
    QuadResult right = integrate_panels(
        [&](double s) { return std::exp(kI * phase(R + s * d)) * d; }, tb, opt);
    QuadResult left = integrate_panels(
        [&](double s) { return std::exp(kI * phase(-R - s * d)) * d; }, tb, opt);

    if (!mid.converged || !right.converged || !left.converged)
        throw AccuracyError("pearcey: quadrature did not converge", mid.error + right.error + left.error);
    return (mid.value + right.value + left.value) / kTwoPi;
}

}  // namespace canop
