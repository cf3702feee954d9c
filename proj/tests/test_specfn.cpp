#include <doctest.h>

#include <cmath>
#include <vector>

#include "canop/quadrature.hpp"
#include "canop/specfn.hpp"

using namespace canop;

namespace {

// Ai via the contour shifted by i*eps, where the integrand decays like exp(-eps t^2).
double airy_contour_oracle(double y) {
    const double eps = 1.0;
    const double L = 7.0;
    const int n = 6000;
    const double dt = 2.0 * L / n;
    std::complex<long double> s = 0;
    for (int i = 0; i <= n; ++i) {
        const long double t = -L + i * dt;
        const long double ph = t * t * t / 3.0L + (y - eps * eps) * t;
        const long double w = (i == 0 || i == n) ? 0.5L : 1.0L;
        s += w * std::exp(-eps * t * t) * std::complex<long double>(std::cos(ph), std::sin(ph));
    }
    return static_cast<double>(std::exp(eps * eps * eps / 3.0 - y * eps) * s.real() * dt / kTwoPi);
}

// Pearcey with the whole real line rotated by +-pi/8; only sensible for moderate |v|.
Complex pearcey_rotated_oracle(double v, double y, PearceySign sign) {
    const double sg = sign == PearceySign::Plus ? 1.0 : -1.0;
    const Complex d = std::polar(1.0, sg * kPi / 8.0);
    const double L = 7.0;
    const int n = 20000;
    const double dt = 2.0 * L / n;
    Complex s = 0;
    for (int i = 0; i <= n; ++i) {
        const Complex eta = (-L + i * dt) * d;
        const Complex e2 = eta * eta;
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        s += w * std::exp(kI * (y * eta + v * e2 + sg * e2 * e2));
    }
    return s * d * dt / kTwoPi;
}

double bisect_j0_zero(double a, double b) {
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (a + b);
        if ((bessel_j0(a) > 0) == (bessel_j0(m) > 0)) a = m;
        else b = m;
    }
    return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("airy value at the origin") {
    CHECK(std::abs(airy_ai(0.0) - 0.3550280538878172) <= 1e-10);
    const double oracle = 1.0 / (std::pow(3.0, 2.0 / 3.0) * std::tgamma(2.0 / 3.0));
    CHECK(std::abs(airy_ai(0.0) - oracle) <= 1e-14);
}

TEST_CASE("airy decays on the right") {
    double prev = airy_ai(5.0);
    for (double y = 5.5; y <= 20.0; y += 0.5) {
        const double v = airy_ai(y);
        CHECK(v > 0.0);
        CHECK(v < prev);
        prev = v;
    }
    CHECK(airy_ai(10.0) < 1e-9);
}

TEST_CASE("airy satisfies its ODE") {
    const double h = 1e-3;
    for (double y : {-5.0, -1.0, 0.0, 1.0, 5.0}) {
        const double d2 = (-airy_ai(y + 2 * h) + 16 * airy_ai(y + h) - 30 * airy_ai(y) +
                           16 * airy_ai(y - h) - airy_ai(y - 2 * h)) / (12 * h * h);
        CHECK(std::abs(d2 - y * airy_ai(y)) <= 1e-6);
    }
}

TEST_CASE("airy matches the shifted contour integral") {
    for (double y = -8.0; y <= 4.0; y += 0.25) CHECK(std::abs(airy_ai(y) - airy_contour_oracle(y)) <= 1e-7);
}

TEST_CASE("airy series and asymptotic branches agree where they meet") {
    // reference values from 25-digit arithmetic on both sides of each switch
    const std::vector<std::pair<double, double>> ref{
        {5.999, 0.000009972489426853128}, {6.001, 0.000009922958979844528},
        {-7.999, -0.05176927985424698767}, {-8.001, -0.05364039921824690247},
        {-30.0, -0.08796818845684216283}, {-59.0, 0.1970653779124357311}};
    for (auto [y, v] : ref) CHECK(std::abs(airy_ai(y) - v) <= 1e-12);
    CHECK(std::abs(airy_ai(-8.5) - airy_contour_oracle(-8.5)) <= 1e-7);
}

TEST_CASE("airy rejects out-of-range arguments") {
    CHECK_THROWS_AS(airy_ai(20.5), RangeError);
    CHECK_THROWS_AS(airy_ai(-61.0), RangeError);
}

TEST_CASE("bessel basics") {
    CHECK(bessel_j0(0.0) == doctest::Approx(1.0));
    CHECK(bessel_j1(0.0) == 0.0);
    CHECK(std::abs(bisect_j0_zero(2.0, 3.0) - 2.404825557695773) <= 1e-10);
    CHECK_THROWS_AS(bessel_j(2, 1.0), DomainError);
    CHECK_THROWS_AS(bessel_j(0, -1.0), RangeError);
}

TEST_CASE("bessel angular integral identity") {
    for (double z : {0.7, 5.0, 14.0, 25.0}) {
        const double val = integrate_real([&](double p) { return std::cos(z * std::cos(p)); }, 0.0,
                                          kTwoPi, 1e-14) / kTwoPi;
        CHECK(std::abs(val - bessel_j0(z)) <= 1e-10);
        const double v1 = integrate_real([&](double p) { return std::cos(p - z * std::sin(p)); }, 0.0,
                                         kPi, 1e-14) / kPi;
        CHECK(std::abs(v1 - bessel_j1(z)) <= 1e-10);
    }
}

TEST_CASE("bessel derivative relation and branch overlap") {
    for (double z : {0.5, 2.0, 10.0, 100.0}) {
        const double h = 1e-4;
        const double d = (bessel_j0(z + h) - bessel_j0(z - h)) / (2 * h);
        CHECK(std::abs(d + bessel_j1(z)) <= 1e-8);
    }
    // reference values from 25-digit arithmetic around the series/asymptotic switch
    struct Ref { double z, j0, j1; };
    for (Ref r : {Ref{15.999, -0.1748085865466534924, 0.09057768514822207179},
                  Ref{16.001, -0.1749893808717229100, 0.09021658741463592815},
                  Ref{50.0, 0.05581232766925181500, -0.09751182812517513766},
                  Ref{1000.0, 0.02478668615242017456, 0.004728311907089523918}}) {
        CHECK(std::abs(bessel_j0(r.z) - r.j0) <= 1e-12);
        CHECK(std::abs(bessel_j1(r.z) - r.j1) <= 1e-12);
    }
}

TEST_CASE("pearcey at the origin") {
    const Complex expected = std::tgamma(0.25) * std::polar(1.0, kPi / 8.0) / (4.0 * kPi);
    CHECK(std::abs(pearcey(0, 0, PearceySign::Plus) - expected) <= 1e-8);
    CHECK(std::abs(pearcey(0, 0, PearceySign::Minus) - std::conj(expected)) <= 1e-8);
}

TEST_CASE("pearcey matches the rotated-line oracle") {
    const std::vector<double> g{-3.0, -1.5, 0.0, 1.5, 3.0};
    for (double v : g)
        for (double y : g)
            for (PearceySign s : {PearceySign::Plus, PearceySign::Minus})
                CHECK(std::abs(pearcey(v, y, s) - pearcey_rotated_oracle(v, y, s)) <= 1e-8);
}

TEST_CASE("pearcey symmetries") {
    const std::vector<double> g{-20.0, -4.0, 0.0, 3.0, 35.0};
    for (double v : g)
        for (double y : g) {
            for (PearceySign s : {PearceySign::Plus, PearceySign::Minus})
                CHECK(std::abs(pearcey(v, -y, s) - pearcey(v, y, s)) <= 1e-8);
            CHECK(std::abs(pearcey(v, y, PearceySign::Minus) - std::conj(pearcey(-v, -y, PearceySign::Plus))) <= 1e-8);
        }
    CHECK_THROWS_AS(pearcey(41.0, 0.0, PearceySign::Plus), RangeError);
}

TEST_CASE("bessel_y against frozen reference values and the Wronskian") {
    // mpmath bessely, 30 digits
    const double ref[][3] = {{0.5, -0.44451873350670655715, -1.4714723926702430692},
                             {3.0, 0.37685001001279038197, 0.32467442479179997844},
                             {15.999, 0.095988929875451420328, 0.17789039011605698901},
                             {16.001, 0.095632979598430106255, 0.17805976518986703674},
                             {40.0, 0.12593641705826092925, -0.0057935058215496329412},
                             {250.0, -0.043216845440366267701, 0.025966992185484582261}};
    for (const auto& r : ref) {
        CHECK(std::abs(bessel_y(0, r[0]) - r[1]) <= 1e-12);
        CHECK(std::abs(bessel_y(1, r[0]) - r[2]) <= 1e-12);
    }
    for (double z : {0.1, 1.0, 7.5, 12.0, 20.0, 99.0}) {
        const double w = bessel_j1(z) * bessel_y(0, z) - bessel_j0(z) * bessel_y(1, z);
        CHECK(std::abs(w - 2.0 / (kPi * z)) <= 1e-12);
    }
    CHECK_THROWS_AS(bessel_y(0, 0.0), RangeError);
}
