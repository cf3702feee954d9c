// Jacobians, Maslov indices, quantization checks and focal points.
#pragma once

#include <string>
#include <vector>

#include "canop/manifold.hpp"

namespace canop {

struct JacobianTriple {
    double J = 0.0;        // det(X_tau, X_psi) / mu
    double J_tilde = 0.0;  // mu det(P, P_psi)
    Complex J_eps;         // det(X_tau - i eps P_tau, X_psi - i eps P_psi) / mu
};

Complex jacobian_eps(const PhaseJet& j, double mu, double eps);
JacobianTriple jacobians(const ManifoldPatch& patch, EikonalCoord at, double eps);

struct IndexOptions {
    std::vector<double> eps{1e-1, 1e-2, 1e-3};
    double integrality_tol = 0.1;
    double max_phase_step = 0.1;     // radians of arg J^eps per accepted step
    double min_step = 1e-13;         // in path parameter per segment
};

struct IndexResult {
    int index = 0;
    double value = 0.0;               // extrapolated to eps -> 0
    double residual = 0.0;            // distance of value from the nearest integer
    std::vector<double> per_eps;      // (1/pi) Im integral of dJ/J for each eps
};

/// Increment of arg J^eps along a polyline, tracked continuously.
double arg_increment(const ManifoldPatch& patch, const std::vector<EikonalCoord>& path, double eps,
                     const IndexOptions& opt = {});

/// Index of the endpoint of `path`, which should start at the central point.
/// ConvergenceError when the result is not within integrality_tol of an integer.
IndexResult maslov_index_point_detail(const ManifoldPatch& patch, const std::vector<EikonalCoord>& path,
                                      const IndexOptions& opt = {});
int maslov_index_point(const ManifoldPatch& patch, const std::vector<EikonalCoord>& path,
                       const IndexOptions& opt = {});

/// Default path from the central point: along psi at the central tau (shortest way
/// round for periodic patches), then along tau.
std::vector<EikonalCoord> default_index_path(const ManifoldPatch& patch, EikonalCoord target);

/// (1/pi) times the arg increment of J^eps around a closed polyline.
int maslov_index_cycle(const ManifoldPatch& patch, const std::vector<EikonalCoord>& cycle, double eps = 0.1);

/// central_index when sign J = sign J~ at the point, central_index + 1 otherwise.
int singular_chart_index(const ManifoldPatch& patch, EikonalCoord chart_point, int central_index);

struct QuantizationReport {
    double action = 0.0;     // closed integral of P dX
    double lhs = 0.0;        // (2 / (pi h)) * action
    int index = 0;
    double residual = 0.0;   // distance of lhs - index from 4Z
    bool satisfied = false;
};

std::vector<QuantizationReport> check_quantization(const ManifoldPatch& patch,
                                                   const std::vector<std::vector<EikonalCoord>>& cycles, double h,
                                                   double tol = 1e-8);

enum class FocalKind { Unclassified, Fold, Cusp, Degenerate };
std::string to_string(FocalKind k);

struct TaylorCoeffs {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0;
    Vec2 b0, b1, b2;   // functionals of z = x - X*
};

struct FocalPoint {
    EikonalCoord coord;
    Vec2 x_star;
    FocalKind kind = FocalKind::Unclassified;
    TaylorCoeffs coeffs;
    // identity residuals recorded by classification
    double x_psi_norm = 0.0;          // |X*_psi|
    double fold_second = 0.0;         // |<P*, X*_psipsi>|
    double fold_third = 0.0;          // |<P*, X*_psipsipsi> + 2 <P*_psi, X*_psipsi>|
    double det_identity = 0.0;        // ||det(P*, P*_psi)| - |P*||P*_psi||
    double scale = 0.0;               // classification scale
};

struct FocalOptions {
    double root_tol = 1e-13;
    bool locate_cusps = true;
};

/// Zero set of J as psi-ordered polylines, from a sign-change scan of the cached grid
/// with each root polished along tau. Cusps between grid rows are located by a root
/// of a3 along the curve and inserted. DomainError when J vanishes on a whole region.
std::vector<std::vector<FocalPoint>> find_focal_curves(const ManifoldPatch& patch, const FocalOptions& opt = {});
std::vector<FocalPoint> find_focal_points(const ManifoldPatch& patch, const FocalOptions& opt = {});

/// Root of J along tau at fixed psi inside [lo, hi] (sign change required).
double polish_focal_tau(const ManifoldPatch& patch, double psi, double lo, double hi, double tol = 1e-13);

struct ClassifyOptions {
    double threshold = 1e-6;
};

FocalPoint classify_focal_point(const ManifoldPatch& patch, const FocalPoint& at, const ClassifyOptions& opt = {});

}  // namespace canop
