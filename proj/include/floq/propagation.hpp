#pragma once

#include <functional>
#include <string>
#include <vector>

#include "floq/superop.hpp"

namespace floq {

/// Time-periodic master-equation generator L(t) with L(t + T) = L(t).
/// Construction samples the generator at 16 homogeneously placed times and
/// rejects it if periodicity fails beyond 1e-12, or if any sample violates
/// trace preservation beyond kTracePreservingTol.
class PeriodicLindbladian {
public:
    using GeneratorFn = std::function<Superoperator(double)>;

    PeriodicLindbladian(GeneratorFn generator, double period, std::string label = {});

    Superoperator at(double t) const { return generator_(t); }
    double period() const { return period_; }
    Eigen::Index dim() const { return dim_; }
    const std::string& label() const { return label_; }

private:
    GeneratorFn generator_;
    double period_;
    Eigen::Index dim_;
    std::string label_;
};

/// Finite-time propagation map rho(t_end) = map(rho(t_start)).
struct PropagatorMap {
    Superoperator map;
    double t_start = 0.0;
    double t_end = 0.0;
};

struct PropagateOptions {
    double tol = 1e-10;          // max-norm difference between step-doubled iterates
    long initial_steps = 16;     // first resolution tried by the adaptive driver
    long max_steps = 1L << 20;   // hard ceiling; exceeded -> NumericsError
};

/// Matrix exponential (scaling-and-squaring Pade; exact for the sizes here
/// to ~1e-14 relative).
Matrix matrix_exp(const Matrix& a);

/// Principal matrix logarithm.  Preconditions checked on the eigenvalues:
///  - any eigenvalue with |lambda| vanishing relative to the largest
///    -> NumericsError("singular monodromy ...")
///  - any eigenvalue within 1e-9 radians of the negative real axis
///    -> BranchCutError("log branch ambiguity ...") carrying the eigenvalue.
/// Postcondition: exp(log(a)) reproduces a to ~1e-10 relative.
Matrix matrix_log_principal(const Matrix& a);

/// Fixed-resolution product integrator
///   V(t2, t1) = prod_i exp(L(t_i^mid) dt),   dt = (t2 - t1)/steps,
/// with midpoint sampling (second order in dt).  t2 >= t1 required.
PropagatorMap propagate(const PeriodicLindbladian& lind, double t1, double t2, long steps);

/// Adaptive wrapper around propagate(): doubles the step count until two
/// successive refinements differ by less than opts.tol in max norm.
/// Errors with the last difference if opts.max_steps is exceeded.
PropagatorMap propagate_adaptive(const PeriodicLindbladian& lind, double t1, double t2,
                                 const PropagateOptions& opts = {});

/// One-period propagator V(t0 + T, t0).
PropagatorMap monodromy(const PeriodicLindbladian& lind, double t0 = 0.0,
                        const PropagateOptions& opts = {});

/// Density-matrix trajectory on an ascending time grid starting at 0.
/// Each state is re-Hermitized; a trace drift beyond 1e-8 aborts with
/// "integration accuracy loss".
std::vector<DensityMatrix> evolve_state(const PeriodicLindbladian& lind,
                                        const DensityMatrix& rho0,
                                        const std::vector<double>& t_grid,
                                        const PropagateOptions& opts = {});

/// Trajectory on the uniform grid t_k = k T / points_per_period,
/// k = 0 .. n_periods * points_per_period.  Equivalent to evolve_state on
/// that grid but computes the per-segment maps only once per period phase
/// (they repeat exactly, by periodicity of the generator).
std::vector<DensityMatrix> evolve_periodic_grid(const PeriodicLindbladian& lind,
                                                const DensityMatrix& rho0,
                                                int n_periods, int points_per_period,
                                                const PropagateOptions& opts = {});

/// The points_per_period in-period segment maps used by evolve_periodic_grid:
/// element k maps rho(t0 + k dt) to rho(t0 + (k+1) dt), dt = T/points_per_period.
std::vector<Superoperator> period_segment_maps(const PeriodicLindbladian& lind,
                                               double t0, int points_per_period,
                                               const PropagateOptions& opts = {});

}  // namespace floq
