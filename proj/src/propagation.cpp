#include "floq/propagation.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "floq/log.hpp"

namespace floq {

namespace {

std::string fmt_complex(Complex z) {
    std::ostringstream os;
    os.precision(16);
    os << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// PeriodicLindbladian
// ---------------------------------------------------------------------------

PeriodicLindbladian::PeriodicLindbladian(GeneratorFn generator, double period, std::string label)
    : generator_(std::move(generator)), period_(period), label_(std::move(label)) {
    if (!generator_) throw InvalidInput("PeriodicLindbladian: empty generator function");
    if (!(period_ > 0.0) || !std::isfinite(period_))
        throw InvalidInput("PeriodicLindbladian: period must be positive and finite");

    // Sample a coarse grid over one period: the generator must be periodic to
    // 1e-12 (relative to its size) and trace preserving at every sample.
    constexpr int kSamples = 16;
    dim_ = generator_(0.0).dim();
    for (int j = 0; j < kSamples; ++j) {
        const double t = period_ * j / kSamples;
        const Superoperator here = generator_(t);
        const Superoperator wrapped = generator_(t + period_);
        if (here.dim() != dim_ || wrapped.dim() != dim_)
            throw DimensionError("PeriodicLindbladian: generator dimension varies with time");
        const double scale = std::max(1.0, max_abs(here.matrix()));
        const double defect = max_abs(Matrix(wrapped.matrix() - here.matrix()));
        if (defect > 1e-12 * scale) {
            std::ostringstream os;
            os << "PeriodicLindbladian: generator not periodic: |L(t+T) - L(t)| = " << defect
               << " at t = " << t;
            throw InvalidInput(os.str());
        }
        const double tr = here.trace_defect();
        if (tr > kTracePreservingTol) {
            std::ostringstream os;
            os << "PeriodicLindbladian: trace-preservation defect " << tr << " at t = " << t;
            throw InvalidInput(os.str());
        }
    }
}

// ---------------------------------------------------------------------------
// Matrix exponential / principal logarithm
// ---------------------------------------------------------------------------

Matrix matrix_exp(const Matrix& a) {
    if (a.rows() != a.cols()) throw DimensionError("matrix_exp: non-square input");
    return a.exp();
}

Matrix matrix_log_principal(const Matrix& a) {
    if (a.rows() != a.cols()) throw DimensionError("matrix_log_principal: non-square input");

    Eigen::ComplexEigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw NumericsError("matrix_log_principal: eigenvalue computation failed");
    const Vector& lambda = es.eigenvalues();
    const double max_mag = lambda.cwiseAbs().maxCoeff();
    if (!(max_mag > 0.0))
        throw NumericsError("singular monodromy: all eigenvalues vanish");

    constexpr double kSingularRel = 1e-14;
    constexpr double kBranchDist = 1e-9;  // radians from the negative real axis
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        const Complex ev = lambda[i];
        if (std::abs(ev) <= kSingularRel * max_mag) {
            std::ostringstream os;
            os << "singular monodromy: eigenvalue " << fmt_complex(ev)
               << " is numerically zero (largest magnitude " << max_mag << ")";
            throw NumericsError(os.str());
        }
        const double dist_to_cut = M_PI - std::abs(std::arg(ev));
        if (dist_to_cut < kBranchDist) {
            std::ostringstream os;
            os << "log branch ambiguity: eigenvalue " << fmt_complex(ev) << " lies within "
               << kBranchDist << " rad of the negative real axis";
            throw BranchCutError(os.str(), ev);
        }
    }

    Matrix ln = a.log();

    // Postcondition: the exponential must reproduce the input.
    const double scale = std::max(1.0, max_abs(a));
    const double roundtrip = max_abs(Matrix(ln.exp() - a));
    if (roundtrip > 1e-10 * scale) {
        std::ostringstream os;
        os << "matrix_log_principal: round-trip defect " << roundtrip << " exceeds tolerance";
        throw NumericsError(os.str());
    }
    return ln;
}

// ---------------------------------------------------------------------------
// Product integration
// ---------------------------------------------------------------------------

PropagatorMap propagate(const PeriodicLindbladian& lind, double t1, double t2, long steps) {
    if (!(t2 >= t1)) throw InvalidInput("propagate: t2 must be >= t1");
    if (steps < 1) throw InvalidInput("propagate: steps must be >= 1");
    const Eigen::Index dd = lind.dim() * lind.dim();
    Matrix v = Matrix::Identity(dd, dd);
    if (t2 == t1) return {Superoperator(std::move(v)), t1, t2};
    const double dt = (t2 - t1) / double(steps);
    for (long i = 0; i < steps; ++i) {
        const double t_mid = t1 + (double(i) + 0.5) * dt;
        v = (lind.at(t_mid).matrix() * dt).exp() * v;
    }
    return {Superoperator(std::move(v)), t1, t2};
}

PropagatorMap propagate_adaptive(const PeriodicLindbladian& lind, double t1, double t2,
                                 const PropagateOptions& opts) {
    if (!(t2 >= t1)) throw InvalidInput("propagate_adaptive: t2 must be >= t1");
    if (t2 == t1) return propagate(lind, t1, t2, 1);
    long n = std::max(opts.initial_steps, 2L);
    PropagatorMap prev = propagate(lind, t1, t2, n);
    double diff = std::numeric_limits<double>::infinity();
    while (2 * n <= opts.max_steps) {
        n *= 2;
        PropagatorMap cur = propagate(lind, t1, t2, n);
        diff = max_abs(Matrix(cur.map.matrix() - prev.map.matrix()));
        if (diff < opts.tol) {
            if (log::debug_enabled()) {
                std::ostringstream os;
                os << "propagate_adaptive: [" << t1 << ", " << t2 << "] converged at " << n
                   << " steps (diff " << diff << ")";
                log::debug(os.str());
            }
            return cur;
        }
        prev = std::move(cur);
    }
    std::ostringstream os;
    os << "propagate_adaptive: no convergence within " << opts.max_steps
       << " steps; last refinement difference " << diff << " (tolerance " << opts.tol << ")";
    throw NumericsError(os.str());
}

PropagatorMap monodromy(const PeriodicLindbladian& lind, double t0, const PropagateOptions& opts) {
    return propagate_adaptive(lind, t0, t0 + lind.period(), opts);
}

// ---------------------------------------------------------------------------
// State trajectories
// ---------------------------------------------------------------------------

std::vector<DensityMatrix> evolve_state(const PeriodicLindbladian& lind, const DensityMatrix& rho0,
                                        const std::vector<double>& t_grid,
                                        const PropagateOptions& opts) {
    if (t_grid.empty()) throw InvalidInput("evolve_state: empty time grid");
    if (t_grid.front() != 0.0) throw InvalidInput("evolve_state: grid must start at t = 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw InvalidInput("evolve_state: grid must be strictly ascending");
    if (rho0.dim() != lind.dim()) throw DimensionError("evolve_state: state/generator mismatch");

    std::vector<DensityMatrix> out;
    out.reserve(t_grid.size());
    out.push_back(rho0);
    Matrix rho = rho0.matrix();
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        const PropagatorMap seg = propagate_adaptive(lind, t_grid[i - 1], t_grid[i], opts);
        rho = seg.map.apply(rho);
        out.push_back(DensityMatrix::from_evolution(rho));
    }
    return out;
}

std::vector<Superoperator> period_segment_maps(const PeriodicLindbladian& lind, double t0,
                                               int points_per_period,
                                               const PropagateOptions& opts) {
    if (points_per_period < 1) throw InvalidInput("period_segment_maps: need >= 1 point");
    const double dt = lind.period() / points_per_period;
    std::vector<Superoperator> segs;
    segs.reserve(points_per_period);
    for (int k = 0; k < points_per_period; ++k)
        segs.push_back(propagate_adaptive(lind, t0 + k * dt, t0 + (k + 1) * dt, opts).map);
    return segs;
}

std::vector<DensityMatrix> evolve_periodic_grid(const PeriodicLindbladian& lind,
                                                const DensityMatrix& rho0, int n_periods,
                                                int points_per_period,
                                                const PropagateOptions& opts) {
    if (n_periods < 0) throw InvalidInput("evolve_periodic_grid: negative period count");
    if (rho0.dim() != lind.dim())
        throw DimensionError("evolve_periodic_grid: state/generator mismatch");
    const auto segs = period_segment_maps(lind, 0.0, points_per_period, opts);

    std::vector<DensityMatrix> out;
    out.reserve(std::size_t(n_periods) * points_per_period + 1);
    out.push_back(rho0);
    Matrix rho = rho0.matrix();
    for (int p = 0; p < n_periods; ++p) {
        for (int k = 0; k < points_per_period; ++k) {
            rho = segs[k].apply(rho);
            out.push_back(DensityMatrix::from_evolution(rho));
        }
    }
    return out;
}

}  // namespace floq
