// Lagrangian manifolds in eikonal coordinates (tau, psi).
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "canop/core.hpp"

namespace canop {

struct PhasePoint {
    Vec2 x;
    Vec2 p;
};

struct EikonalCoord {
    double tau = 0.0;
    double psi = 0.0;
};

/// Embedding data at one (tau, psi). Only first derivatives are filled when a
/// jet is requested with JetOrder::First.
struct PhaseJet {
    Vec2 X, P;
    Vec2 X_tau, X_psi, P_tau, P_psi;
    Vec2 X_psipsi, X_psipsipsi, P_psipsi;
};

enum class JetOrder { First, Full };

struct PatchDomain {
    Interval tau;
    Interval psi;
};

/// Cached regular sample of X, J and J~ over the domain, rows indexed by psi.
struct SampleGrid {
    std::vector<double> taus;
    std::vector<double> psis;
    std::vector<Vec2> X;            // [i_psi * taus.size() + i_tau]
    std::vector<double> J;
    std::vector<double> J_tilde;
    std::size_t at(std::size_t i_psi, std::size_t i_tau) const { return i_psi * taus.size() + i_tau; }
};

class ManifoldPatch;
using JetFn = std::function<PhaseJet(double tau, double psi, JetOrder order)>;
using MuFn = std::function<double(double tau, double psi)>;
using MapFn = std::function<PhasePoint(double tau, double psi)>;
using GridBuilder = std::function<SampleGrid(const ManifoldPatch&, std::size_t n_tau, std::size_t n_psi)>;

/// Immutable after construction; copies share the lazily built sample grid.
class ManifoldPatch {
public:
    struct Spec {
        std::string name = "patch";
        JetFn jet;
        MuFn mu;                          // empty means mu = 1
        PatchDomain domain;
        bool periodic_psi = false;
        EikonalCoord central_point;
        bool analytic_jets = true;
        double fd_step = 0.0;             // recorded for finite-difference jets
        std::size_t grid_tau = 256;
        std::size_t grid_psi = 256;
        GridBuilder grid_builder;         // optional faster grid construction
        double length_scale = 1.0;        // typical size of X on the domain
    };

    explicit ManifoldPatch(Spec spec);

    /// Patch whose jets come from centered finite differences of a position/momentum map.
    /// First derivatives use step 1e-5 * scale; second and third psi-derivatives use
    /// 2e-3 * scale so that rounding noise stays below the truncation error.
    static ManifoldPatch from_map(std::string name, MapFn map, PatchDomain domain, bool periodic_psi,
                                  EikonalCoord central_point, MuFn mu = {});

    const Spec& spec() const { return spec_; }
    const std::string& name() const { return spec_.name; }
    const PatchDomain& domain() const { return spec_.domain; }
    bool periodic_psi() const { return spec_.periodic_psi; }
    EikonalCoord central_point() const { return spec_.central_point; }
    bool analytic_jets() const { return spec_.analytic_jets; }
    double fd_step() const { return spec_.fd_step; }
    double length_scale() const { return spec_.length_scale; }

    bool contains(EikonalCoord at, double slack = 1e-12) const;
    /// Wraps psi into the domain period for periodic patches.
    EikonalCoord normalize(EikonalCoord at) const;

    /// DomainError when `at` is outside the patch.
    PhaseJet eval_jet(EikonalCoord at, JetOrder order = JetOrder::Full) const;
    double mu(EikonalCoord at) const;

    const SampleGrid& grid() const;
    /// Plain sampling through eval_jet; used when no custom builder is given.
    SampleGrid build_grid_by_sampling(std::size_t n_tau, std::size_t n_psi) const;

private:
    struct Cache;
    Spec spec_;
    std::shared_ptr<Cache> cache_;
};

inline PhaseJet eval_jet(const ManifoldPatch& patch, EikonalCoord at) { return patch.eval_jet(at); }

struct IdentityReport {
    double tau_normalization = 0.0;   // max |<P, X_tau> - 1|
    double psi_orthogonality = 0.0;   // max |<P, X_psi>|
    double symmetry = 0.0;            // max |<P_psi, X_tau> - <P_tau, X_psi>|
    double min_mu = 0.0;
    double min_momentum = 0.0;        // min |P|
    std::size_t points = 0;
    bool pass = false;
};

IdentityReport check_eikonal_identities(const ManifoldPatch& patch, const std::vector<EikonalCoord>& sample_grid,
                                        double tol);

/// Regular n_tau x n_psi sample of the patch domain (endpoints excluded for periodic psi).
std::vector<EikonalCoord> regular_samples(const ManifoldPatch& patch, std::size_t n_tau, std::size_t n_psi);

/// |delta tau - integral of P dX| along a polyline in (tau, psi).
double eikonal_residual(const ManifoldPatch& patch, const std::vector<EikonalCoord>& path);

/// Integral of P dX along a polyline, by composite Gauss-Kronrod on each segment.
double action_integral(const ManifoldPatch& patch, const std::vector<EikonalCoord>& path);

}  // namespace canop
