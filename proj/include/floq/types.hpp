#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace floq {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex I_UNIT{0.0, 1.0};

/// Thrown when operator/state dimensions are inconsistent or not square.
class DimensionError : public std::invalid_argument {
public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Thrown when an input fails a structural precondition (non-Hermitian state,
/// bad trace, malformed grid, out-of-range parameter, ...).
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Thrown when a numerical routine cannot meet its accuracy contract
/// (non-convergence, singular operator, accuracy loss, degenerate spectrum).
class NumericsError : public std::runtime_error {
public:
    explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised by the principal matrix logarithm when an eigenvalue sits on (or
/// numerically indistinguishable from) the negative real axis, where the
/// principal branch is discontinuous.  Carries the offending eigenvalue.
class BranchCutError : public NumericsError {
public:
    BranchCutError(const std::string& what, Complex eigenvalue)
        : NumericsError(what), eigenvalue_(eigenvalue) {}
    Complex eigenvalue() const { return eigenvalue_; }

private:
    Complex eigenvalue_;
};

/// Entrywise max-abs norm; the convergence metric used throughout.
inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

inline double max_abs(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace floq
