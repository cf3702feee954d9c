// Field evaluation: WKB branch sums, singular-chart oscillatory integrals and
// partition-of-unity pasting over a chart cover.
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "canop/geometry.hpp"

namespace canop {

/// Amplitude on the manifold. An x-dependent form may be given instead; it is
/// used by the singular integral (A(x, psi) representations) and at WKB roots.
struct Amplitude {
    std::function<Complex(double tau, double psi)> on_manifold;
    std::function<Complex(Vec2 x, double tau, double psi)> with_x;

    Complex operator()(Vec2 x, double tau, double psi) const {
        if (with_x) return with_x(x, tau, psi);
        if (on_manifold) return on_manifold(tau, psi);
        return Complex(1.0, 0.0);
    }
    static Amplitude constant(Complex c) {
        return Amplitude{[c](double, double) { return c; }, {}};
    }
    static Amplitude of(std::function<Complex(double, double)> f) { return Amplitude{std::move(f), {}}; }
    static Amplitude of_x(std::function<Complex(Vec2, double, double)> f) { return Amplitude{{}, std::move(f)}; }
};

enum class FieldMethod { WKB, SingularIntegral, Airy, Pearcey, Blend };
std::string to_string(FieldMethod m);

struct FieldSample {
    Vec2 x;
    Complex u{};
    double h = 0.0;
    FieldMethod method = FieldMethod::WKB;
    int branch_count = 0;
    double nearest_caustic_distance = 0.0;
    double quad_error = 0.0;      // estimated absolute quadrature error, 0 for closed forms
    bool ok = true;
    std::string reason;           // why the sample failed (u is NaN then)
};

// ---------------------------------------------------------------------------
// Branches

struct Branch {
    EikonalCoord coord;
    double J = 0.0;
    double residual = 0.0;
    bool focal = false;
};

struct BranchOptions {
    double residual_tol = 1e-10;
    double focal_tol = 1e-8;      // |J| below this (times length scale) flags a focal root
    int max_iterations = 50;
};

/// All solutions of X(tau, psi) = x, seeded from the cached grid and polished by
/// Newton (pseudo-inverse steps where X is not locally invertible).
std::vector<Branch> branch_solve(const ManifoldPatch& patch, Vec2 x, const BranchOptions& opt = {});

/// Maslov indices of regular points, memoised per grid cell free of focal points.
class IndexTable {
public:
    explicit IndexTable(ManifoldPatch patch, IndexOptions opt = {});
    int index(EikonalCoord at) const;
    const ManifoldPatch& patch() const { return patch_; }

private:
    ManifoldPatch patch_;
    IndexOptions opt_;
    mutable std::mutex mutex_;
    mutable std::map<std::pair<long, long>, int> cache_;
};

/// Regular-chart sum over branches: e^{i tau/h - i pi m/2} A sqrt(mu |P| / |X_psi|).
/// MethodError when a root is focal.
FieldSample wkb_eval(const ManifoldPatch& patch, const Amplitude& A, Vec2 x, double h, const IndexTable& indices,
                     const BranchOptions& opt = {});

// ---------------------------------------------------------------------------
// Singular charts

/// Root of <P, x - X> = 0 in tau at fixed psi by Newton from `seed`.
/// DomainError when Newton leaves the patch or fails to converge.
double solve_tau(const ManifoldPatch& patch, Vec2 x, double psi, double seed);

struct SingularChart {
    Interval psi;                                            // integration window
    std::function<double(double tau, double psi)> cutoff;    // empty means 1
    int index = 0;                                           // m_j
    std::function<double(double psi)> tau_seed;              // empty: grid search for the first root
};

struct IntegralOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    std::size_t node_budget = 200000;
    std::size_t seed_samples = 257;
};

/// (i / (2 pi h))^{1/2} e^{-i pi m/2} integral of e^{i tau/h} A sqrt(mu |det(P, P_psi)|) dpsi
/// with tau = tau(x, psi). Composite Gauss-Legendre panels no wider than a quarter of the
/// local oscillation period; error estimated by comparing 10- and 20-point rules.
FieldSample singular_integral_eval(const ManifoldPatch& patch, const Amplitude& A, const SingularChart& chart,
                                   Vec2 x, double h, const IntegralOptions& opt = {});

// ---------------------------------------------------------------------------
// Chart covers

/// Smooth step: 1 for u <= 0, 0 for u >= 1, built from exp(-1/t).
double smooth_step(double u);
/// Window function of an interval: 1 on the central plateau fraction, smooth decay to 0 at the ends.
double window_weight(double t, Interval w, double plateau);

struct Chart {
    enum class Kind { Regular, Singular };
    Kind kind = Kind::Singular;
    Interval tau = Interval::unbounded();
    Interval psi = Interval::unbounded();
    double plateau = 0.5;
    bool taper_tau = false;
    bool taper_psi = false;
    EikonalCoord reference;   // regular point used for the singular chart index
    int index = 0;            // filled by ChartCover::prepare for singular charts
};

struct CoverReport {
    double partition_error = 0.0;   // max |sum e_j - 1| on the validation grid
    double min_weight_sum = 0.0;    // min of the raw weight sum
    bool singular_ok = true;        // det(P, P_psi) != 0 on every singular chart support
    bool regular_ok = true;         // J != 0 on every regular chart support
    std::string message;
};

class ChartCover {
public:
    ChartCover() = default;
    explicit ChartCover(std::vector<Chart> charts) : charts_(std::move(charts)) {}

    /// One singular chart over the whole patch, untapered.
    /// ConfigError when det(P, P_psi) vanishes on the sample grid.
    static ChartCover single_singular(const ManifoldPatch& patch);
    /// Single regular chart; valid only away from focal points.
    static ChartCover single_regular();

    const std::vector<Chart>& charts() const { return charts_; }
    double raw_weight(std::size_t j, const ManifoldPatch& patch, EikonalCoord at) const;
    /// Normalised cutoff e_j; 0 when no chart covers the point.
    double cutoff(std::size_t j, const ManifoldPatch& patch, EikonalCoord at) const;

    /// Validates the cover on a sample grid and fills singular chart indices.
    /// ConfigError when the cutoffs do not partition unity or a chart is invalid.
    CoverReport prepare(const ManifoldPatch& patch, const IndexTable& indices);

private:
    std::vector<Chart> charts_;
};

struct GlobalOptions {
    BranchOptions branch;
    IntegralOptions integral;
};

/// Sum of chart contributions with the cutoffs folded into the amplitude.
FieldSample global_eval(const ManifoldPatch& patch, const Amplitude& A, const ChartCover& cover, Vec2 x, double h,
                        const IndexTable& indices, const GlobalOptions& opt = {});

// ---------------------------------------------------------------------------
// Batch driver

struct GridSpec {
    Interval x1{-1.0, 1.0};
    Interval x2{-1.0, 1.0};
    std::size_t n1 = 11;
    std::size_t n2 = 11;
    /// Points in output order: x2 rows outer, x1 inner.
    std::vector<Vec2> points() const;
};

enum class DispatchMethod { Auto, ForceWKB, ForceIntegral };

/// Projection of the focal set, for caustic distances.
class CausticSet {
public:
    CausticSet() = default;
    explicit CausticSet(const ManifoldPatch& patch);
    double distance(Vec2 x) const;
    bool empty() const { return curves_.empty(); }
    const std::vector<std::vector<FocalPoint>>& curves() const { return curves_; }

private:
    std::vector<std::vector<FocalPoint>> curves_;
};

struct GridOptions {
    GlobalOptions global;
    unsigned threads = 1;
    double dispatch_factor = 3.0;   // d0 = factor * h^{2/3} * length scale
};

double dispatch_radius(const ManifoldPatch& patch, double h, double factor = 3.0);

/// Evaluates every grid point; Auto uses WKB beyond the dispatch radius from the
/// caustic and the cover (the single singular chart when `cover` has no charts)
/// inside it. Failed points come back as NaN samples with a reason.
std::vector<FieldSample> grid_eval(const ManifoldPatch& patch, const Amplitude& A, const ChartCover& cover,
                                   const std::vector<Vec2>& points, double h, DispatchMethod method,
                                   const GridOptions& opt = {});

}  // namespace canop
