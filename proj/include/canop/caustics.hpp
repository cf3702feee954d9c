// Airy and Pearcey local asymptotics at fold and cusp points, and a numerical
// check of the Taylor coefficients of the phase tau(x, psi) there.
#pragma once

#include "canop/evaluator.hpp"
#include "canop/specfn.hpp"

namespace canop {

struct LocalOptions {
    double radius_factor = 0.5;   // valid radius = factor * h^{5/6} * length scale
    int chart_index = 0;          // m_j of the singular chart containing the focal point
};

double valid_radius(const ManifoldPatch& patch, double h, double radius_factor = 0.5);

/// Leading term of the singular-chart integral near a focal point:
/// u(x) = prefactor * exp(i (tau* + <P*, x - X*>) / h) * special function of the arg maps.
struct LocalExpansion {
    FocalPoint focal;
    double h = 0.0;
    double valid_radius = 0.0;
    Complex prefactor{};
    double scale = 0.0;           // |2h/a3|^{1/3} for a fold, (24h/|a4|)^{1/4} for a cusp
    PearceySign sign = PearceySign::Plus;

    double phase_linear(Vec2 x) const;
    /// Fold: Ai argument <P*_psi, x - X*> (2/a3)^{1/3} h^{-2/3}.
    double airy_argument(Vec2 x) const;
    /// Cusp: (v, y) with v from <P*_psipsi, x - X*> and y from <P*_psi, x - X*>.
    std::pair<double, double> pearcey_arguments(Vec2 x) const;
    Complex evaluate(Vec2 x) const;
};

/// Builds the expansion (classifying the point first if needed). MethodError when the
/// point is neither a fold nor a cusp. The amplitude is taken at (x*, tau*, psi*).
LocalExpansion local_expansion(const ManifoldPatch& patch, const Amplitude& A, const FocalPoint& focal, double h,
                               const LocalOptions& opt = {});

/// RangeError when |x - x*| exceeds the valid radius; MethodError for the wrong kind.
FieldSample airy_local_field(const ManifoldPatch& patch, const Amplitude& A, const FocalPoint& focal, Vec2 x,
                             double h, const LocalOptions& opt = {});
FieldSample pearcey_local_field(const ManifoldPatch& patch, const Amplitude& A, const FocalPoint& focal, Vec2 x,
                                double h, const LocalOptions& opt = {});

struct TaylorCheckOptions {
    double window = 0.05;     // half-width in psi of the fitted range
    int degree = 10;
    int samples = 41;         // Chebyshev points in the window
    double z_step = 1e-4;     // central-difference step in x, times the length scale
    double max_condition = 1e8;
};

struct TaylorCheckReport {
    TaylorCoeffs fitted;
    TaylorCoeffs closed;
    double a0_dev = 0.0, a1_dev = 0.0, a2_dev = 0.0;
    double a3_rel = 0.0, a4_rel = 0.0;      // relative deviations
    double b0_dev = 0.0, b1_dev = 0.0, b2_dev = 0.0;
    double condition = 0.0;
    bool flagged = false;                   // ill-conditioned fit
    std::string message;
};

/// Fits Delta(beta, z) = tau(x + z, psi* + beta) - tau* with polynomials in beta at z = 0
/// and z = +-step e_i, and compares with the closed-form coefficients.
TaylorCheckReport taylor_phase_check(const ManifoldPatch& patch, const FocalPoint& focal,
                                     const TaylorCheckOptions& opt = {});

}  // namespace canop
