// Ray flow of H = |p| C(x), Maupertuis-Jacobi conversion and amplitude transport.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "canop/manifold.hpp"

namespace canop {

using ScalarField = std::function<double(Vec2)>;
using GradientField = std::function<Vec2(Vec2)>;
using HessianField = std::function<Mat2(Vec2)>;

struct Box {
    Interval x1{-5.0, 5.0};
    Interval x2{-5.0, 5.0};
};

struct Hamiltonian {
    enum class Kind { Homogeneous1, Mechanical };
    Kind kind = Kind::Homogeneous1;
    // Homogeneous1: H = |p| C(x). Derivatives fall back to finite differences when empty.
    ScalarField C;
    GradientField grad_C;
    HessianField hess_C;
    // Mechanical: H = p^2 / (2 m) + v(x).
    ScalarField v;
    GradientField grad_v;
    HessianField hess_v;
    double E = 1.0;
    double m_mass = 0.5;

    double operator()(Vec2 x, Vec2 p) const;
    Vec2 gradC(Vec2 x) const;
    Mat2 hessC(Vec2 x) const;
};

Hamiltonian homogeneous(ScalarField C, GradientField grad_C = {}, HessianField hess_C = {});
Hamiltonian mechanical(ScalarField v, double E, double m_mass, GradientField grad_v = {}, HessianField hess_v = {});

/// Central-difference gradient and Hessian of a scalar field.
Vec2 fd_gradient(const ScalarField& f, Vec2 x, double step = 1e-5);
Mat2 fd_hessian(const ScalarField& f, Vec2 x, double step = 1e-4);

/// C(x) = 1 / sqrt(2 m (E - v(x))). DomainError naming the first violating
/// point when E <= v somewhere on a 101x101 sample of the box.
Hamiltonian maupertuis(const Hamiltonian& mech, const Box& box = {});

struct RayState {
    double tau = 0.0;
    PhasePoint point;
};

/// Fixed-step RK4 on x' = C p/|p|, p' = -|p| grad C. Output includes both ends;
/// the last step is shortened to land on tau_span.hi. Integrates backwards
/// when the span runs from a larger to a smaller tau.
std::vector<RayState> integrate_ray(const Hamiltonian& H, PhasePoint start, Interval tau_span, double step);

struct InitialCurve {
    std::function<PhasePoint(double psi)> gamma;
    std::function<PhasePoint(double psi)> dgamma;  // d/dpsi; finite differences when empty
    bool periodic = false;
    Interval psi_range{0.0, kTwoPi};
};

enum class FlowMeasure { Unit, Invariant };

struct FlowOptions {
    std::size_t steps = 2048;           // tau-steps over the span
    std::size_t psi_samples = 2048;     // sets the psi step for higher derivatives and checks
    FlowMeasure measure = FlowMeasure::Unit;
    double level_tol = 1e-8;
    double transversality_tol = 1e-8;
    unsigned threads = 1;
    EikonalCoord central_point{0.05, 0.0};
};

/// Manifold swept by rays from the initial curve; tau is the flow time (level H = 1)
/// and psi the curve parameter. First derivatives come from the variational system
/// integrated alongside each ray; second and third psi-derivatives by central
/// differences of those fields with the psi sample step. Invariant measure is 1/|P|^2.
ManifoldPatch build_manifold(const Hamiltonian& H, const InitialCurve& curve, Interval tau_span,
                             const FlowOptions& opt = {});

/// Passage between flow time t = integral of |P| dtau and tau, per psi.
class TimeMap {
public:
    explicit TimeMap(ManifoldPatch patch, double tol = 1e-12) : patch_(std::move(patch)), tol_(tol) {}
    double t_of_tau(double tau, double psi) const;
    double tau_of_t(double t, double psi) const;
    /// dtau/dt = 1/|P|
    double jacobian(double tau, double psi) const;

private:
    ManifoldPatch patch_;
    double tol_;
};

inline TimeMap time_reparam(const ManifoldPatch& patch) { return TimeMap(patch); }

/// A(tau, psi) = A0(psi) / |P(tau, psi)|.
std::function<Complex(double, double)> transport_amplitude(const ManifoldPatch& patch,
                                                           std::function<Complex(double)> A0);

}  // namespace canop
