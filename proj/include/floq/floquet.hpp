#pragma once

#include <optional>
#include <vector>

#include "floq/propagation.hpp"

namespace floq {

enum class GeneratorMethod { exact_log, magnus };

/// Constant effective generator L_F of the stroboscopic dynamics, anchored
/// at time t0:  V(t0 + nT, t0) = exp(L_F n T).
struct FloquetGenerator {
    Superoperator generator;
    double t0 = 0.0;
    double period = 0.0;
    GeneratorMethod method = GeneratorMethod::exact_log;
    int magnus_order = -1;   // -1 for exact_log
};

/// L_F = log(V(t0+T, t0)) / T via the principal logarithm.  Inherits the
/// error modes of matrix_log_principal (singular monodromy / branch cut).
/// Postcondition: the generator annihilates the trace covector to 1e-9.
FloquetGenerator floquet_generator_exact(const PeriodicLindbladian& lind, double t0 = 0.0,
                                         const PropagateOptions& opts = {});

/// Truncated operator-valued Fourier series  S(t) = sum_{|m|<=M} C_m e^{i m w t},
/// w = 2 pi / period.
class FourierSeriesSuperop {
public:
    FourierSeriesSuperop() = default;
    FourierSeriesSuperop(std::vector<Superoperator> coeffs, double period);

    int truncation() const { return truncation_; }         // M
    double period() const { return period_; }
    double base_frequency() const;                         // 2 pi / period
    Eigen::Index dim() const;

    /// Coefficient C_m; zero matrix for |m| > truncation.
    const Superoperator& coeff(int m) const;
    Superoperator evaluate(double t) const;

    /// Max-norm reconstruction defect recorded by the routine that built
    /// the series (meaning depends on the producer; 0 if never set).
    double residual() const { return residual_; }
    void set_residual(double r) { residual_ = r; }

private:
    std::vector<Superoperator> coeffs_;  // index m + truncation
    Superoperator zero_;
    int truncation_ = 0;
    double period_ = 0.0;
    double residual_ = 0.0;
};

/// Fourier coefficients L_m of the generator itself, from the trapezoid rule
/// on quad_points >= 4*truncation + 4 uniform samples (spectrally accurate
/// for smooth periodic integrands).  The sample count is doubled until the
/// reconstruction residual on staggered midpoints drops below 1e-8; failure
/// to get there means the series genuinely has harmonics beyond the cutoff
/// -> NumericsError("insufficient truncation ...").
FourierSeriesSuperop lindbladian_fourier(const PeriodicLindbladian& lind, int truncation,
                                         int quad_points = 0);

/// Magnus generator of the given order (0, 1, or 2) at anchor t0 = 0:
///   order 0:  (1/T) int L
///   order 1:  + (1/2T) int int [L(t1), L(t2)]
///   order 2:  + (1/6T) int int int ([L1,[L2,L3]] + [[L1,L2],L3])
/// Nested integrals are evaluated by composite-Simpson cumulants in O(N)
/// generator samples; N starts at quad_points (default 64) and doubles until
/// two refinements agree to 1e-9 in max norm.
FloquetGenerator magnus_generator(const PeriodicLindbladian& lind, int order,
                                  int quad_points = 0, double tol = 1e-9);

/// Periodic micromotion map K(t) = V(t0 + t, t0) exp(-L_F t) on a grid of
/// offsets t >= 0 (ascending).  K(0) = 1 and K(T) = 1 up to the accuracy of
/// the generator supplied.
std::vector<Superoperator> micromotion_ode(const PeriodicLindbladian& lind,
                                           const FloquetGenerator& gen,
                                           const std::vector<double>& t_grid,
                                           const PropagateOptions& opts = {});

/// Micromotion Fourier coefficients K_m from the harmonic-balance system
///   i w m K_m = sum_n L_n K_{m-n} - K_m L_F,     sum_m K_m = 1,
/// solved as a least-squares block system with the normalization row block
/// weighted by 1e4 * max(1, max-norm of the unweighted block matrix).
/// The stored residual is the max-norm defect of the harmonic-balance
/// equations at the solution.
FourierSeriesSuperop micromotion_fourier(const FourierSeriesSuperop& lind_series,
                                         const FloquetGenerator& gen, int truncation);

/// Inverse-direction micromotion J(t) = exp(L_F t) V(t0, t0 + t), computed by
/// inverting the forward map; a condition number beyond 1e12 aborts with
/// "non-invertible dissipative propagator".
std::vector<Superoperator> defect_map(const PeriodicLindbladian& lind,
                                      const FloquetGenerator& gen,
                                      const std::vector<double>& t_grid,
                                      const PropagateOptions& opts = {});

/// Fourier coefficients of J(t) on |m| <= truncation (trapezoid transform of
/// defect_map samples).
FourierSeriesSuperop defect_fourier(const PeriodicLindbladian& lind,
                                    const FloquetGenerator& gen, int truncation,
                                    int quad_points = 0,
                                    const PropagateOptions& opts = {});

/// Full decomposition V(t2, t1) = K(dt2) exp(L_F (t2 - t1)) J(dt1) with
/// dt2 = t2 - (nT + t0), dt1 = t1 - t0.
struct FloquetDecomposition {
    FloquetGenerator generator;
    FourierSeriesSuperop micromotion;            // K_m
    std::optional<FourierSeriesSuperop> defect;  // J_m, on request
};

FloquetDecomposition floquet_decompose(const PeriodicLindbladian& lind, double t0,
                                       int truncation, bool with_defect = false,
                                       const PropagateOptions& opts = {});

/// Evaluate the decomposition: the propagator V(t2, t1) reconstructed from
/// micromotion series, exp(L_F (t2-t1)), and (if present) the defect series;
/// with t1 = t0 the defect factor is the identity and is not required.
Superoperator reconstruct_propagator(const FloquetDecomposition& dec, double t1, double t2);

/// Harmonic coefficients rho_m of the asymptotic periodic state, from the
/// nullspace (smallest singular vector) of the block matrix
///   B[m,q] = L_{m-q} - delta_{mq} i w m 1.
/// Requires a singular-value separation sigma_2/sigma_1 >= 1e3, otherwise
/// "degenerate steady space".  Coefficients are conjugate-symmetrized
/// (rho_{-m} <- (rho_{-m} + rho_m^dag)/2) and normalized to tr rho_0 = 1.
class SteadyStateSeries {
public:
    SteadyStateSeries() = default;
    SteadyStateSeries(std::vector<Matrix> coeffs, double period);

    int truncation() const { return truncation_; }
    double period() const { return period_; }
    double base_frequency() const;

    const Matrix& coeff(int m) const;   // zero for |m| > truncation
    Matrix evaluate(double t) const;    // Hermitian by construction

    double residual() const { return residual_; }            // |B v| / |v|
    double separation() const { return separation_; }        // sigma_2 / sigma_1
    double conj_symmetry_defect() const { return conj_defect_; }  // pre-symmetrization

    void set_diagnostics(double residual, double separation, double conj_defect) {
        residual_ = residual;
        separation_ = separation;
        conj_defect_ = conj_defect;
    }

private:
    std::vector<Matrix> coeffs_;
    Matrix zero_;
    int truncation_ = 0;
    double period_ = 0.0;
    double residual_ = 0.0;
    double separation_ = 0.0;
    double conj_defect_ = 0.0;
};

SteadyStateSeries steady_state_block(const FourierSeriesSuperop& lind_series, int truncation);

/// Stroboscopic trajectory rho(t0 + k T), k = 0..n_periods, by repeated
/// application of exp(L_F T).  A trace drift beyond 1e-8 raises a warning
/// flag (approximate generators leak trace at their truncation order; that
/// is a property of the method, not a numerical failure).
struct StroboscopicTrajectory {
    std::vector<DensityMatrix> states;
    double max_trace_drift = 0.0;
    bool trace_warning = false;
};

StroboscopicTrajectory stroboscopic_evolve(const FloquetGenerator& gen,
                                           const DensityMatrix& rho0, int n_periods);

/// Coherent-limit consistency report for a periodic Hamiltonian H(t) with no
/// dissipation: the one-period unitary U, the Hermitian effective Hamiltonian
/// H_F = (i/T) log U, and agreement metrics between the Hilbert-space and
/// operator-space descriptions.
struct ClosedSystemReduction {
    Matrix one_period_unitary;  // U(T, 0)
    Matrix floquet_hamiltonian;  // H_F, hermitized
    double unitarity_defect = 0.0;          // |U^dag U - 1|
    double propagator_agreement = 0.0;      // |exp(L_F T) - conj(U) (x) U|
    double exponential_agreement = 0.0;     // |exp(L_F T) - exp(-i [H_F, .] T)|
    double generator_gauge_gap = 0.0;       // |L_F - (-i [H_F, .])|
    bool generator_gauge_folded = false;    // gap > 1e-6 despite matching exponentials
    double micromotion_agreement = 0.0;     // K(t) vs U(t) e^{+i H_F t} sandwich
};

ClosedSystemReduction closed_system_reduce(const std::function<Matrix(double)>& hamiltonian,
                                           double period,
                                           const PropagateOptions& opts = {});

}  // namespace floq
