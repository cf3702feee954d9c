// Gauss-Legendre and Gauss-Kronrod rules with panel-adaptive drivers.
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "canop/core.hpp"

namespace canop {

/// Nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule computed by Newton iteration on P_n.
GaussRule gauss_legendre(int n);

struct QuadResult {
    Complex value{};
    double error = 0.0;          // estimated absolute error
    std::size_t evaluations = 0;
    std::size_t panels = 0;
    bool converged = true;
};

using ComplexIntegrand = std::function<Complex(double)>;
using RealIntegrand = std::function<double(double)>;

/// Single 15-point Kronrod panel; error is |K15 - G7|.
QuadResult gk15(const ComplexIntegrand& f, double a, double b);

struct AdaptiveOptions {
    double abs_tol = 1e-10;
    double rel_tol = 0.0;
    std::size_t max_evaluations = 200000;
};

/// Globally adaptive bisection starting from the panels between consecutive
/// breakpoints. Stops when the summed error estimate meets the tolerance or
/// the evaluation budget runs out (converged=false then).
QuadResult integrate_panels(const ComplexIntegrand& f, const std::vector<double>& breakpoints,
                            const AdaptiveOptions& opt = {});

QuadResult integrate(const ComplexIntegrand& f, double a, double b, const AdaptiveOptions& opt = {});

double integrate_real(const RealIntegrand& f, double a, double b, double abs_tol = 1e-12,
                      std::size_t max_evaluations = 200000);

}  // namespace canop
