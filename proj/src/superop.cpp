#include "floq/superop.hpp"

#include <cmath>
#include <sstream>

namespace floq {

namespace {

void require_square(const Matrix& m, const char* who) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        std::ostringstream os;
        os << who << ": expected a square matrix, got " << m.rows() << "x" << m.cols();
        throw DimensionError(os.str());
    }
}

double hermiticity_defect(const Matrix& m) { return max_abs(Matrix(m - m.adjoint())); }

}  // namespace

Vector vectorize(const Matrix& m) {
    require_square(m, "vectorize");
    return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix devectorize(const Vector& v, Eigen::Index dim) {
    if (v.size() != dim * dim) {
        std::ostringstream os;
        os << "devectorize: vector of size " << v.size() << " does not hold a " << dim << "x"
           << dim << " matrix";
        throw DimensionError(os.str());
    }
    return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// ---------------------------------------------------------------------------
// DensityMatrix / Observable
// ---------------------------------------------------------------------------

DensityMatrix::DensityMatrix(Matrix m) : m_(std::move(m)) {
    require_square(m_, "DensityMatrix");
    const double herm = hermiticity_defect(m_);
    if (herm > kHermitianTol) {
        std::ostringstream os;
        os << "DensityMatrix: Hermiticity defect " << herm << " exceeds " << kHermitianTol;
        throw InvalidInput(os.str());
    }
    m_ = 0.5 * (m_ + m_.adjoint().eval());
    const double trace_err = std::abs(m_.trace() - Complex(1.0));
    if (trace_err > kTraceTol) {
        std::ostringstream os;
        os << "DensityMatrix: trace deviates from 1 by " << trace_err;
        throw InvalidInput(os.str());
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    const double lambda_min = es.eigenvalues().minCoeff();
    if (lambda_min < kPsdTol) {
        std::ostringstream os;
        os << "DensityMatrix: smallest eigenvalue " << lambda_min << " below " << kPsdTol;
        throw InvalidInput(os.str());
    }
}

DensityMatrix DensityMatrix::from_evolution(Matrix m, double trace_tol) {
    require_square(m, "DensityMatrix::from_evolution");
    Matrix h = 0.5 * (m + m.adjoint().eval());
    const double trace_err = std::abs(h.trace() - Complex(1.0));
    if (trace_err > trace_tol) {
        std::ostringstream os;
        os << "integration accuracy loss: evolved state trace deviates from 1 by " << trace_err
           << " (tolerance " << trace_tol << ")";
        throw NumericsError(os.str());
    }
    return DensityMatrix(std::move(h), unchecked_tag{});
}

Observable::Observable(Matrix m) : m_(std::move(m)) {
    require_square(m_, "Observable");
    const double herm = hermiticity_defect(m_);
    if (herm > kHermitianTol) {
        std::ostringstream os;
        os << "Observable: Hermiticity defect " << herm << " exceeds " << kHermitianTol;
        throw InvalidInput(os.str());
    }
    m_ = 0.5 * (m_ + m_.adjoint().eval());
}

// ---------------------------------------------------------------------------
// Superoperator
// ---------------------------------------------------------------------------

Superoperator::Superoperator(Matrix m) : m_(std::move(m)) {
    require_square(m_, "Superoperator");
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(m_.rows()))));
    if (d * d != m_.rows()) {
        std::ostringstream os;
        os << "Superoperator: matrix dimension " << m_.rows() << " is not a perfect square";
        throw DimensionError(os.str());
    }
    dim_ = d;
}

Matrix Superoperator::apply(const Matrix& x) const {
    if (x.rows() != dim_ || x.cols() != dim_) {
        std::ostringstream os;
        os << "Superoperator::apply: operand is " << x.rows() << "x" << x.cols()
           << ", map acts on " << dim_ << "x" << dim_;
        throw DimensionError(os.str());
    }
    return devectorize(m_ * vectorize(x), dim_);
}

DensityMatrix Superoperator::apply(const DensityMatrix& rho) const {
    return DensityMatrix::from_evolution(apply(rho.matrix()));
}

Superoperator Superoperator::operator*(const Superoperator& rhs) const {
    if (dim_ != rhs.dim_) throw DimensionError("Superoperator::operator*: dimension mismatch");
    return Superoperator(m_ * rhs.m_);
}

Superoperator Superoperator::operator+(const Superoperator& rhs) const {
    if (dim_ != rhs.dim_) throw DimensionError("Superoperator::operator+: dimension mismatch");
    return Superoperator(m_ + rhs.m_);
}

Superoperator Superoperator::operator-(const Superoperator& rhs) const {
    if (dim_ != rhs.dim_) throw DimensionError("Superoperator::operator-: dimension mismatch");
    return Superoperator(m_ - rhs.m_);
}

Superoperator& Superoperator::operator+=(const Superoperator& rhs) {
    if (dim_ != rhs.dim_) throw DimensionError("Superoperator::operator+=: dimension mismatch");
    m_ += rhs.m_;
    return *this;
}

Superoperator& Superoperator::operator-=(const Superoperator& rhs) {
    if (dim_ != rhs.dim_) throw DimensionError("Superoperator::operator-=: dimension mismatch");
    m_ -= rhs.m_;
    return *this;
}

Superoperator Superoperator::identity(Eigen::Index d) {
    return Superoperator(Matrix::Identity(d * d, d * d));
}

Superoperator Superoperator::zero(Eigen::Index d) {
    return Superoperator(Matrix::Zero(d * d, d * d));
}

Superoperator Superoperator::left_multiply(const Matrix& a) {
    require_square(a, "Superoperator::left_multiply");
    return Superoperator(kron(Matrix::Identity(a.rows(), a.rows()), a));
}

Superoperator Superoperator::right_multiply(const Matrix& b) {
    require_square(b, "Superoperator::right_multiply");
    return Superoperator(kron(b.transpose(), Matrix::Identity(b.rows(), b.rows())));
}

Superoperator Superoperator::sandwich(const Matrix& a, const Matrix& b) {
    require_square(a, "Superoperator::sandwich");
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("Superoperator::sandwich: operand dimensions differ");
    return Superoperator(kron(b.transpose(), a));
}

Superoperator Superoperator::commutator_with(const Matrix& h) {
    return left_multiply(h) - right_multiply(h);
}

Superoperator Superoperator::anticommutator_with(const Matrix& a) {
    return left_multiply(a) + right_multiply(a);
}

double Superoperator::trace_defect() const {
    // vec(1)^dag M picks out the rows of M at the diagonal positions of the
    // vectorized operator; their column sums must vanish for a generator.
    Vector tr_cov = vectorize(Matrix::Identity(dim_, dim_));
    return max_abs(Vector((tr_cov.adjoint() * m_).transpose()));
}

Superoperator commutator(const Superoperator& a, const Superoperator& b) {
    return Superoperator(a.matrix() * b.matrix() - b.matrix() * a.matrix());
}

// ---------------------------------------------------------------------------
// Master-equation generator
// ---------------------------------------------------------------------------

Superoperator lindblad_superop(const LindbladTerms& terms) {
    require_square(terms.hamiltonian, "lindblad_superop");
    const Eigen::Index d = terms.hamiltonian.rows();
    const double herm = hermiticity_defect(terms.hamiltonian);
    if (herm > kHermitianTol) {
        std::ostringstream os;
        os << "lindblad_superop: Hamiltonian Hermiticity defect " << herm;
        throw InvalidInput(os.str());
    }
    Matrix sup = -I_UNIT * Superoperator::commutator_with(terms.hamiltonian).matrix();
    for (const auto& jump : terms.jumps) {
        if (jump.op.rows() != d || jump.op.cols() != d)
            throw DimensionError("lindblad_superop: jump operator dimension mismatch");
        if (jump.rate < 0.0) throw InvalidInput("lindblad_superop: negative rate");
        const Matrix ada = jump.op.adjoint() * jump.op;
        sup += jump.rate * (2.0 * Superoperator::sandwich(jump.op, jump.op.adjoint()).matrix() -
                            Superoperator::anticommutator_with(ada).matrix());
    }
    Superoperator out{std::move(sup)};
    const double defect = out.trace_defect();
    if (defect > kTracePreservingTol) {
        std::ostringstream os;
        os << "lindblad_superop: trace-preservation defect " << defect;
        throw NumericsError(os.str());
    }
    return out;
}

// ---------------------------------------------------------------------------
// State functionals
// ---------------------------------------------------------------------------

double expectation(const Observable& obs, const DensityMatrix& rho) {
    if (obs.dim() != rho.dim()) throw DimensionError("expectation: dimension mismatch");
    const Complex val = (obs.matrix() * rho.matrix()).trace();
    if (std::abs(val.imag()) > 1e-10) {
        std::ostringstream os;
        os << "expectation: imaginary residue " << val.imag();
        throw NumericsError(os.str());
    }
    return val.real();
}

double trace_distance(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("trace_distance: dimension mismatch");
    Matrix diff = a - b;
    diff = 0.5 * (diff + diff.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<Matrix> es(diff, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    return trace_distance(a.matrix(), b.matrix());
}

namespace {

// Hermitian square root with clamping of small negative eigenvalues.
Matrix psd_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    RealVector vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

double state_fidelity(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("state_fidelity: dimension mismatch");
    const Matrix ah = 0.5 * (a + a.adjoint().eval());
    const Matrix bh = 0.5 * (b + b.adjoint().eval());
    const Matrix ra = psd_sqrt(ah);
    Matrix inner = ra * bh * ra;
    inner = 0.5 * (inner + inner.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<Matrix> es(inner, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

double state_fidelity(const DensityMatrix& a, const DensityMatrix& b) {
    return state_fidelity(a.matrix(), b.matrix());
}

// ---------------------------------------------------------------------------
// Pauli operators and stock states
// ---------------------------------------------------------------------------

namespace pauli {

const Matrix& id() {
    static const Matrix m = Matrix::Identity(2, 2);
    return m;
}
const Matrix& x() {
    static const Matrix m = [] {
        Matrix s(2, 2);
        s << 0, 1, 1, 0;
        return s;
    }();
    return m;
}
const Matrix& y() {
    static const Matrix m = [] {
        Matrix s(2, 2);
        s << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
        return s;
    }();
    return m;
}
const Matrix& z() {
    static const Matrix m = [] {
        Matrix s(2, 2);
        s << 1, 0, 0, -1;
        return s;
    }();
    return m;
}
const Matrix& plus() {
    static const Matrix m = [] {
        Matrix s(2, 2);
        s << 0, 1, 0, 0;
        return s;
    }();
    return m;
}
const Matrix& minus() {
    static const Matrix m = [] {
        Matrix s(2, 2);
        s << 0, 0, 1, 0;
        return s;
    }();
    return m;
}

}  // namespace pauli

namespace states {

DensityMatrix excited() {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 1.0;
    return DensityMatrix(m);
}

DensityMatrix ground() {
    Matrix m = Matrix::Zero(2, 2);
    m(1, 1) = 1.0;
    return DensityMatrix(m);
}

DensityMatrix maximally_mixed(Eigen::Index d) {
    if (d < 1) throw InvalidInput("maximally_mixed: dimension must be positive");
    return DensityMatrix(Matrix::Identity(d, d) / double(d));
}

DensityMatrix bloch(double x, double y, double z) {
    const double r = std::sqrt(x * x + y * y + z * z);
    if (r > 1.0 + 1e-12) {
        std::ostringstream os;
        os << "bloch: vector length " << r << " exceeds 1";
        throw InvalidInput(os.str());
    }
    Matrix m = 0.5 * (pauli::id() + x * pauli::x() + y * pauli::y() + z * pauli::z());
    return DensityMatrix(std::move(m));
}

}  // namespace states

}  // namespace floq
