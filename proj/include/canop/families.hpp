// Closed-form manifolds with analytic jets.
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "canop/manifold.hpp"

namespace canop {

inline Vec2 unit_normal(double psi) { return unit_dir(psi); }

/// exp(1 - 1/(1 - s^2)) for |s| < 1, zero outside.
double bump(double s);
double bump_derivative(double s);
double bump_second_derivative(double s);

/// X = tau n(psi), P = n(psi) on tau in [-tau_max, tau_max], psi periodic.
ManifoldPatch flat_cylinder(double tau_max = 5.0, double central_tau = 0.05);
ManifoldPatch flat_cylinder(Interval tau, double central_tau);

/// Normals of the parabola (psi, a psi^2): X = gamma + tau nu, P = nu.
ManifoldPatch parabola_family(double a = 0.5, Interval tau = {-2.0, 8.0}, Interval psi = {-2.0, 2.0});

/// Radial refractive index n(r), equal to 1 for r >= r0.
class RadialProfile {
public:
    RadialProfile(std::function<double(double)> n, std::function<double(double)> dn, double r0,
                  std::size_t table_size = 2048);

    /// n(r) = 1 + amplitude * bump(r / r0).
    static RadialProfile bump_profile(double amplitude = 0.3, double r0 = 2.0);

    double r0() const { return r0_; }
    double n(double r) const { return n_(std::abs(r)); }
    /// d n(|r|) / dr
    double dn(double r) const { return r < 0 ? -dn_(-r) : dn_(r); }
    /// Integral of n from 0 to r (odd in r).
    double T(double r) const;
    /// Inverse of T.
    double rho(double tau) const;
    /// Integral of (n - 1) over [0, r0].
    double phase_shift() const { return T(r0_) - r0_; }

private:
    std::function<double(double)> n_;
    std::function<double(double)> dn_;
    double r0_;
    double dr_;
    std::vector<double> table_;   // T at r = k * dr
};

/// X = rho(tau) n(psi), P = n(rho) n(psi) with the flow-invariant density mu = 1/n^2.
ManifoldPatch radial_medium(std::shared_ptr<const RadialProfile> profile, double tau_max = 6.0,
                            double central_tau = 0.05);

/// Paraxial beam manifold at fixed z and time t:
/// X = (tau/lambda + t lambda/m) n(psi), P = lambda n(psi).
ManifoldPatch paraxial_beam(double lambda, double t, double m_mass, double tau_max = 5.0);

}  // namespace canop
