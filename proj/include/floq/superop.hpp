#pragma once

#include <vector>

#include "floq/types.hpp"

namespace floq {

// Default tolerances for structural validation.  These are part of the
// library contract: constructors below reject inputs outside them.
inline constexpr double kHermitianTol = 1e-12;     // Hermiticity defect, max norm
inline constexpr double kTraceTol = 1e-12;         // |tr(rho) - 1| on construction
inline constexpr double kPsdTol = -1e-10;          // smallest eigenvalue may dip this low
inline constexpr double kTracePreservingTol = 1e-10;  // |vec(1)^dag L| for generators

/// Column-stacking vectorization: vec(rho) stacks the columns of rho, so
/// vec(A rho B) = (B^T (x) A) vec(rho).
Vector vectorize(const Matrix& m);

/// Inverse of vectorize for a d x d matrix.
Matrix devectorize(const Vector& v, Eigen::Index dim);

/// Kronecker product, column-stacking convention compatible.
Matrix kron(const Matrix& a, const Matrix& b);

/// Validated density matrix: Hermitian within kHermitianTol, unit trace
/// within kTraceTol, eigenvalues >= kPsdTol.  Construction canonicalizes
/// the stored matrix to (m + m^dag)/2.
class DensityMatrix {
public:
    explicit DensityMatrix(Matrix m);

    /// Relaxed factory for states produced by time evolution: re-Hermitizes,
    /// requires |tr - 1| <= trace_tol (default 1e-8), skips the positivity
    /// check (integrators introduce O(tol) negative parts transiently).
    static DensityMatrix from_evolution(Matrix m, double trace_tol = 1e-8);

    const Matrix& matrix() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }

private:
    struct unchecked_tag {};
    DensityMatrix(Matrix m, unchecked_tag) : m_(std::move(m)) {}
    Matrix m_;
};

/// Validated observable: Hermitian within kHermitianTol.
class Observable {
public:
    explicit Observable(Matrix m);
    const Matrix& matrix() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }

private:
    Matrix m_;
};

/// Linear map on operators, stored as a d^2 x d^2 matrix acting on
/// column-stacked operators.
class Superoperator {
public:
    Superoperator() = default;
    explicit Superoperator(Matrix m);

    Eigen::Index dim() const { return dim_; }          // Hilbert space dimension d
    Eigen::Index matrix_dim() const { return m_.rows(); }  // d^2
    const Matrix& matrix() const { return m_; }

    /// Apply to an operator: unvec(M vec(x)).
    Matrix apply(const Matrix& x) const;
    DensityMatrix apply(const DensityMatrix& rho) const;

    Superoperator operator*(const Superoperator& rhs) const;   // composition
    Superoperator operator+(const Superoperator& rhs) const;
    Superoperator operator-(const Superoperator& rhs) const;
    Superoperator& operator+=(const Superoperator& rhs);
    Superoperator& operator-=(const Superoperator& rhs);
    friend Superoperator operator*(Complex c, const Superoperator& s) {
        return Superoperator(c * s.m_);
    }
    friend Superoperator operator*(double c, const Superoperator& s) {
        return Superoperator(c * s.m_);
    }

    static Superoperator identity(Eigen::Index d);
    static Superoperator zero(Eigen::Index d);

    /// rho -> a rho
    static Superoperator left_multiply(const Matrix& a);
    /// rho -> rho b
    static Superoperator right_multiply(const Matrix& b);
    /// rho -> a rho b  =  (b^T (x) a) vec(rho)
    static Superoperator sandwich(const Matrix& a, const Matrix& b);
    /// rho -> [h, rho]
    static Superoperator commutator_with(const Matrix& h);
    /// rho -> {a, rho}
    static Superoperator anticommutator_with(const Matrix& a);

    /// Defect of the trace-preservation condition for a generator:
    /// max-abs of vec(1)^dag M, which must vanish for any map whose flow
    /// preserves the trace.
    double trace_defect() const;

private:
    Matrix m_;
    Eigen::Index dim_ = 0;
};

/// Superoperator commutator [a, b] = ab - ba.
Superoperator commutator(const Superoperator& a, const Superoperator& b);

struct JumpTerm {
    Matrix op;     // jump operator A
    double rate;   // gamma >= 0
};

struct LindbladTerms {
    Matrix hamiltonian;           // Hermitian
    std::vector<JumpTerm> jumps;  // dissipative channels
};

/// Generator of the master equation for the given terms, with the rate
/// convention  D[A](rho) = gamma (2 A rho A^dag - A^dag A rho - rho A^dag A)
/// (note: no 1/2; rates here are half the textbook-convention rates).
/// Postcondition: the returned map annihilates the trace covector.
Superoperator lindblad_superop(const LindbladTerms& terms);

/// tr(obs * rho); errors if the imaginary residue exceeds 1e-10.
double expectation(const Observable& obs, const DensityMatrix& rho);

/// Trace distance (1/2)||a - b||_1 of two Hermitian matrices.
double trace_distance(const Matrix& a, const Matrix& b);
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

/// Uhlmann fidelity tr sqrt( sqrt(a) b sqrt(a) ).  Eigenvalues of the
/// (numerically Hermitian) inputs are clamped at zero, so nearly-positive
/// evolved states are accepted.
double state_fidelity(const Matrix& a, const Matrix& b);
double state_fidelity(const DensityMatrix& a, const DensityMatrix& b);

// Pauli matrices and friends in the basis |e> = (1,0)^T, |g> = (0,1)^T,
// so sigma_z |e> = +|e> and sigma_plus = |e><g| is the raising operator.
namespace pauli {
const Matrix& id();
const Matrix& x();
const Matrix& y();
const Matrix& z();
const Matrix& plus();   // |e><g|
const Matrix& minus();  // |g><e|
}  // namespace pauli

// Common qubit states.
namespace states {
DensityMatrix excited();
DensityMatrix ground();
DensityMatrix maximally_mixed(Eigen::Index d = 2);
/// Bloch vector state (1 + r . sigma)/2; requires |r| <= 1.
DensityMatrix bloch(double x, double y, double z);
}  // namespace states

}  // namespace floq
