#include "floq/floquet.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "floq/log.hpp"

namespace floq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Matrix mat_commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

// ---------------------------------------------------------------------------
// Composite and cumulative Simpson rules on uniformly sampled matrix data.
// The cumulative rule uses Simpson pairs at even indices and the 3rd-order
// (5, 8, -1)/12 end rule at odd indices, so the running integral keeps the
// full O(h^4) accuracy of the composite rule at every node.
// ---------------------------------------------------------------------------

Matrix csimpson(const std::vector<Matrix>& f, double h) {
    const std::size_t n = f.size() - 1;  // interval count, must be even
    Matrix acc = f[0] + f[n];
    for (std::size_t k = 1; k < n; k += 2) acc += 4.0 * f[k];
    for (std::size_t k = 2; k < n; k += 2) acc += 2.0 * f[k];
    return (h / 3.0) * acc;
}

std::vector<Matrix> cum_simpson(const std::vector<Matrix>& f, double h) {
    const std::size_t n = f.size() - 1;
    std::vector<Matrix> out;
    out.reserve(f.size());
    out.push_back(Matrix::Zero(f[0].rows(), f[0].cols()));
    for (std::size_t k = 1; k <= n; ++k) {
        if (k % 2 == 0) {
            out.push_back(out[k - 2] + (h / 3.0) * (f[k - 2] + 4.0 * f[k - 1] + f[k]));
        } else if (k + 1 <= n) {
            out.push_back(out[k - 1] + (h / 12.0) * (5.0 * f[k - 1] + 8.0 * f[k] - f[k + 1]));
        } else {
            out.push_back(out[k - 1] + (h / 12.0) * (-f[k - 2] + 8.0 * f[k - 1] + 5.0 * f[k]));
        }
    }
    return out;
}

void check_generator_dim(const PeriodicLindbladian& lind, const FloquetGenerator& gen,
                         const char* who) {
    if (gen.generator.dim() != lind.dim()) {
        std::ostringstream os;
        os << who << ": generator dimension " << gen.generator.dim()
           << " does not match the Lindbladian dimension " << lind.dim();
        throw DimensionError(os.str());
    }
    if (std::abs(gen.period - lind.period()) > 1e-12 * std::max(1.0, lind.period())) {
        std::ostringstream os;
        os << who << ": generator anchored to period " << gen.period
           << " but the Lindbladian declares " << lind.period();
        throw InvalidInput(os.str());
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Exact effective generator
// ---------------------------------------------------------------------------

FloquetGenerator floquet_generator_exact(const PeriodicLindbladian& lind, double t0,
                                         const PropagateOptions& opts) {
    const double T = lind.period();
    const PropagatorMap mono = monodromy(lind, t0, opts);
    Matrix g = matrix_log_principal(mono.map.matrix()) / T;
    Superoperator gen{std::move(g)};
    const double defect = gen.trace_defect();
    if (defect > 1e-9) {
        std::ostringstream os;
        os << "floquet_generator_exact: trace-preservation defect " << defect
           << " in the effective generator";
        throw NumericsError(os.str());
    }
    return {std::move(gen), t0, T, GeneratorMethod::exact_log, -1};
}

// ---------------------------------------------------------------------------
// FourierSeriesSuperop
// ---------------------------------------------------------------------------

FourierSeriesSuperop::FourierSeriesSuperop(std::vector<Superoperator> coeffs, double period)
    : coeffs_(std::move(coeffs)), period_(period) {
    if (coeffs_.empty() || coeffs_.size() % 2 == 0)
        throw InvalidInput("FourierSeriesSuperop: need an odd number of coefficients (-M..M)");
    if (!(period_ > 0.0)) throw InvalidInput("FourierSeriesSuperop: period must be positive");
    truncation_ = int(coeffs_.size() / 2);
    const Eigen::Index d = coeffs_.front().dim();
    for (const auto& c : coeffs_)
        if (c.dim() != d)
            throw DimensionError("FourierSeriesSuperop: mixed coefficient dimensions");
    zero_ = Superoperator::zero(d);
}

double FourierSeriesSuperop::base_frequency() const { return kTwoPi / period_; }

Eigen::Index FourierSeriesSuperop::dim() const {
    return coeffs_.empty() ? 0 : coeffs_.front().dim();
}

const Superoperator& FourierSeriesSuperop::coeff(int m) const {
    if (std::abs(m) > truncation_) return zero_;
    return coeffs_[std::size_t(m + truncation_)];
}

Superoperator FourierSeriesSuperop::evaluate(double t) const {
    const double w = base_frequency();
    Matrix acc = Matrix::Zero(coeffs_.front().matrix_dim(), coeffs_.front().matrix_dim());
    for (int m = -truncation_; m <= truncation_; ++m)
        acc += std::exp(I_UNIT * (w * m * t)) * coeff(m).matrix();
    return Superoperator(std::move(acc));
}

FourierSeriesSuperop lindbladian_fourier(const PeriodicLindbladian& lind, int truncation,
                                         int quad_points) {
    if (truncation < 0) throw InvalidInput("lindbladian_fourier: negative truncation");
    const int min_points = 4 * truncation + 4;
    int n = quad_points == 0 ? std::max(min_points, 64) : quad_points;
    if (n < min_points) {
        std::ostringstream os;
        os << "lindbladian_fourier: quad_points " << n << " below the minimum " << min_points
           << " for truncation " << truncation;
        throw InvalidInput(os.str());
    }
    const double T = lind.period();
    const double w = kTwoPi / T;
    constexpr int kMaxPoints = 1 << 14;
    constexpr double kResidualTol = 1e-8;

    double residual = std::numeric_limits<double>::infinity();
    while (true) {
        // Trapezoid transform on n uniform samples: spectrally accurate, and
        // alias-free whenever n exceeds (content + truncation).
        std::vector<Matrix> samples;
        samples.reserve(std::size_t(n));
        for (int k = 0; k < n; ++k) samples.push_back(lind.at(T * k / n).matrix());

        std::vector<Superoperator> coeffs;
        coeffs.reserve(std::size_t(2 * truncation + 1));
        for (int m = -truncation; m <= truncation; ++m) {
            Matrix acc = Matrix::Zero(samples[0].rows(), samples[0].cols());
            for (int k = 0; k < n; ++k)
                acc += std::exp(-I_UNIT * (w * m * (T * k / n))) * samples[std::size_t(k)];
            coeffs.emplace_back(Matrix(acc / double(n)));
        }
        FourierSeriesSuperop series(std::move(coeffs), T);

        // Reconstruction check on staggered midpoints (independent of the
        // transform nodes, so aliasing cannot hide).
        residual = 0.0;
        for (int k = 0; k < n; ++k) {
            const double t = T * (k + 0.5) / n;
            residual = std::max(
                residual, max_abs(Matrix(series.evaluate(t).matrix() - lind.at(t).matrix())));
        }
        if (residual <= kResidualTol) {
            series.set_residual(residual);
            return series;
        }
        if (2 * n > kMaxPoints) break;
        n *= 2;
    }
    std::ostringstream os;
    os << "insufficient truncation: generator Fourier series with cutoff " << truncation
       << " leaves residual " << residual << " (tolerance " << kResidualTol << ")";
    throw NumericsError(os.str());
}

// ---------------------------------------------------------------------------
// Averaged (Magnus-style) generators by nested quadrature
// ---------------------------------------------------------------------------

namespace {

// Single-resolution evaluation of the order-k averaged generator on n+1
// uniform samples over [0, T].  Nested integrals are reduced to running
// (cumulative) integrals so the cost stays linear in n.
Matrix magnus_eval(const PeriodicLindbladian& lind, int order, int n) {
    const double T = lind.period();
    const double h = T / n;
    std::vector<Matrix> ls;
    ls.reserve(std::size_t(n) + 1);
    for (int k = 0; k <= n; ++k) ls.push_back(lind.at(h * k).matrix());
    const Eigen::Index s = ls[0].rows();

    const std::vector<Matrix> c = cum_simpson(ls, h);  // C(t) = int_0^t L
    Matrix gen = c[std::size_t(n)] / T;                // order 0
    if (order == 0) return gen;

    // Order 1: (1/2T) int dt1 [L(t1), C(t1)].
    std::vector<Matrix> f1;
    f1.reserve(ls.size());
    for (std::size_t k = 0; k < ls.size(); ++k) f1.push_back(mat_commutator(ls[k], c[k]));
    gen += csimpson(f1, h) / (2.0 * T);
    if (order == 1) return gen;

    // Order 2, term A: (1/6T) int dt1 [L(t1), Q(t1)], Q = int [L, C].
    const std::vector<Matrix> q = cum_simpson(f1, h);
    std::vector<Matrix> fa;
    fa.reserve(ls.size());
    for (std::size_t k = 0; k < ls.size(); ++k) fa.push_back(mat_commutator(ls[k], q[k]));

    // Order 2, term B: (1/6T) int dt1 int^t1 dt2 [[L1, L2], C(t2)].  The t2
    // integral is expressed through four running integrals; the two middle
    // pieces keep L1 sandwiched between t2-dependent factors, which the
    // column-stacking identity turns into s^2 x s^2 kernels acting on vec(L1).
    std::vector<Matrix> lc, cl, wk, vk;
    lc.reserve(ls.size());
    cl.reserve(ls.size());
    wk.reserve(ls.size());
    vk.reserve(ls.size());
    for (std::size_t k = 0; k < ls.size(); ++k) {
        lc.push_back(ls[k] * c[k]);
        cl.push_back(c[k] * ls[k]);
        wk.push_back(kron(c[k].transpose(), ls[k]));
        vk.push_back(kron(ls[k].transpose(), c[k]));
    }
    const std::vector<Matrix> u = cum_simpson(lc, h);
    const std::vector<Matrix> ubar = cum_simpson(cl, h);
    const std::vector<Matrix> w = cum_simpson(wk, h);
    const std::vector<Matrix> v = cum_simpson(vk, h);

    std::vector<Matrix> fb;
    fb.reserve(ls.size());
    for (std::size_t k = 0; k < ls.size(); ++k) {
        const Vector vl = Eigen::Map<const Vector>(ls[k].data(), ls[k].size());
        const Matrix mid_w = Eigen::Map<const Matrix>(Vector(w[k] * vl).data(), s, s);
        const Matrix mid_v = Eigen::Map<const Matrix>(Vector(v[k] * vl).data(), s, s);
        fb.push_back(ls[k] * u[k] - mid_w - mid_v + ubar[k] * ls[k]);
    }

    gen += (csimpson(fa, h) + csimpson(fb, h)) / (6.0 * T);
    return gen;
}

}  // namespace

FloquetGenerator magnus_generator(const PeriodicLindbladian& lind, int order, int quad_points,
                                  double tol) {
    if (order < 0 || order > 2)
        throw InvalidInput("magnus_generator: supported orders are 0, 1, 2");
    int n = quad_points == 0 ? 64 : quad_points;
    if (n < 8) n = 8;
    if (n % 2 != 0) ++n;
    constexpr int kMaxPoints = 1 << 15;

    Matrix prev = magnus_eval(lind, order, n);
    double diff = std::numeric_limits<double>::infinity();
    while (2 * n <= kMaxPoints) {
        n *= 2;
        Matrix cur = magnus_eval(lind, order, n);
        diff = max_abs(Matrix(cur - prev));
        if (diff < tol) {
            Superoperator gen{std::move(cur)};
            const double defect = gen.trace_defect();
            if (defect > 1e-12) {
                std::ostringstream os;
                os << "magnus_generator: trace-preservation defect " << defect;
                throw NumericsError(os.str());
            }
            return {std::move(gen), 0.0, lind.period(), GeneratorMethod::magnus, order};
        }
        prev = std::move(cur);
    }
    std::ostringstream os;
    os << "magnus_generator: quadrature did not converge below " << tol << " within "
       << kMaxPoints << " samples; last refinement difference " << diff;
    throw NumericsError(os.str());
}

// ---------------------------------------------------------------------------
// Micromotion
// ---------------------------------------------------------------------------

std::vector<Superoperator> micromotion_ode(const PeriodicLindbladian& lind,
                                           const FloquetGenerator& gen,
                                           const std::vector<double>& t_grid,
                                           const PropagateOptions& opts) {
    check_generator_dim(lind, gen, "micromotion_ode");
    if (t_grid.empty()) throw InvalidInput("micromotion_ode: empty grid");
    if (t_grid.front() < 0.0) throw InvalidInput("micromotion_ode: offsets must be >= 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw InvalidInput("micromotion_ode: grid must be strictly ascending");

    const double t0 = gen.t0;
    std::vector<Superoperator> out;
    out.reserve(t_grid.size());
    Matrix v = Matrix::Identity(gen.generator.matrix_dim(), gen.generator.matrix_dim());
    double t_prev = 0.0;
    for (const double t : t_grid) {
        if (t > t_prev)
            v = propagate_adaptive(lind, t0 + t_prev, t0 + t, opts).map.matrix() * v;
        out.emplace_back(Matrix(v * matrix_exp(-gen.generator.matrix() * t)));
        t_prev = t;
    }
    return out;
}

FourierSeriesSuperop micromotion_fourier(const FourierSeriesSuperop& lind_series,
                                         const FloquetGenerator& gen, int truncation) {
    if (truncation < 0) throw InvalidInput("micromotion_fourier: negative truncation");
    if (lind_series.dim() != gen.generator.dim())
        throw DimensionError("micromotion_fourier: series/generator dimension mismatch");
    if (std::abs(lind_series.period() - gen.period) > 1e-12 * std::max(1.0, gen.period))
        throw InvalidInput("micromotion_fourier: series and generator periods differ");

    const int M = truncation;
    const int n_modes = 2 * M + 1;
    const Eigen::Index d = lind_series.dim();
    const Eigen::Index s = d * d;      // operator space dimension
    const Eigen::Index blk = s * s;    // unknowns per mode: vec(K_m)
    const double w = lind_series.base_frequency();
    const Matrix id_s = Matrix::Identity(s, s);

    // Harmonic-balance equation block: row block m, column block q carries
    //   1 (x) L_{m-q}  -  delta_{mq} (L_F^T (x) 1 + i w m).
    Matrix a = Matrix::Zero(Eigen::Index(n_modes) * blk, Eigen::Index(n_modes) * blk);
    const Matrix lf_t = kron(gen.generator.matrix().transpose(), id_s);
    for (int m = -M; m <= M; ++m) {
        for (int q = -M; q <= M; ++q) {
            Matrix block = kron(id_s, lind_series.coeff(m - q).matrix());
            if (m == q)
                block -= lf_t + I_UNIT * (w * m) * Matrix::Identity(blk, blk);
            a.block(Eigen::Index(m + M) * blk, Eigen::Index(q + M) * blk, blk, blk) = block;
        }
    }

    // Anchor sum_m K_m = 1 as a weighted least-squares row block.
    const double weight = 1e4 * std::max(1.0, max_abs(a));
    Matrix sys(a.rows() + blk, a.cols());
    sys.topRows(a.rows()) = a;
    for (int q = 0; q < n_modes; ++q)
        sys.block(a.rows(), Eigen::Index(q) * blk, blk, blk) =
            weight * Matrix::Identity(blk, blk);
    Vector rhs = Vector::Zero(sys.rows());
    rhs.tail(blk) = weight * vectorize(id_s);

    const Vector sol = sys.colPivHouseholderQr().solve(rhs);
    const double eq_residual = max_abs(Vector(a * sol));

    std::vector<Superoperator> coeffs;
    coeffs.reserve(std::size_t(n_modes));
    for (int m = 0; m < n_modes; ++m)
        coeffs.emplace_back(devectorize(sol.segment(Eigen::Index(m) * blk, blk), s));
    FourierSeriesSuperop out(std::move(coeffs), lind_series.period());
    out.set_residual(eq_residual);
    return out;
}

std::vector<Superoperator> defect_map(const PeriodicLindbladian& lind,
                                      const FloquetGenerator& gen,
                                      const std::vector<double>& t_grid,
                                      const PropagateOptions& opts) {
    check_generator_dim(lind, gen, "defect_map");
    if (t_grid.empty()) throw InvalidInput("defect_map: empty grid");
    if (t_grid.front() < 0.0) throw InvalidInput("defect_map: offsets must be >= 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw InvalidInput("defect_map: grid must be strictly ascending");

    const double t0 = gen.t0;
    std::vector<Superoperator> out;
    out.reserve(t_grid.size());
    Matrix v = Matrix::Identity(gen.generator.matrix_dim(), gen.generator.matrix_dim());
    double t_prev = 0.0;
    for (const double t : t_grid) {
        if (t > t_prev)
            v = propagate_adaptive(lind, t0 + t_prev, t0 + t, opts).map.matrix() * v;
        Eigen::JacobiSVD<Matrix> svd(v, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const double smin = svd.singularValues().minCoeff();
        const double smax = svd.singularValues().maxCoeff();
        if (!(smin > 0.0) || smax / smin > 1e12) {
            std::ostringstream os;
            os << "non-invertible dissipative propagator: condition number "
               << (smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity())
               << " at offset t = " << t;
            throw NumericsError(os.str());
        }
        const Matrix v_inv = svd.matrixV() *
                             svd.singularValues().cwiseInverse().asDiagonal() *
                             svd.matrixU().adjoint();
        out.emplace_back(Matrix(matrix_exp(gen.generator.matrix() * t) * v_inv));
        t_prev = t;
    }
    return out;
}

FourierSeriesSuperop defect_fourier(const PeriodicLindbladian& lind, const FloquetGenerator& gen,
                                    int truncation, int quad_points,
                                    const PropagateOptions& opts) {
    if (truncation < 0) throw InvalidInput("defect_fourier: negative truncation");
    const int min_points = 4 * truncation + 4;
    int n = quad_points == 0 ? std::max(min_points, 64) : quad_points;
    if (n < min_points) throw InvalidInput("defect_fourier: too few quadrature points");
    const double T = lind.period();
    const double w = kTwoPi / T;

    std::vector<double> grid;
    grid.reserve(std::size_t(n));
    for (int k = 1; k < n; ++k) grid.push_back(T * k / n);
    std::vector<Superoperator> j_maps;
    j_maps.reserve(std::size_t(n));
    j_maps.push_back(Superoperator::identity(lind.dim()));  // J(0) = 1
    for (auto& m : defect_map(lind, gen, grid, opts)) j_maps.push_back(std::move(m));

    std::vector<Superoperator> coeffs;
    coeffs.reserve(std::size_t(2 * truncation + 1));
    for (int m = -truncation; m <= truncation; ++m) {
        Matrix acc = Matrix::Zero(j_maps[0].matrix_dim(), j_maps[0].matrix_dim());
        for (int k = 0; k < n; ++k)
            acc += std::exp(-I_UNIT * (w * m * (T * k / n))) * j_maps[std::size_t(k)].matrix();
        coeffs.emplace_back(Matrix(acc / double(n)));
    }
    FourierSeriesSuperop series(std::move(coeffs), T);

    // Spot-check the reconstruction on a few staggered offsets.
    const int n_check = std::min(n, 16);
    std::vector<double> check_grid;
    for (int k = 0; k < n_check; ++k) check_grid.push_back(T * (k + 0.5) / n_check);
    const auto j_check = defect_map(lind, gen, check_grid, opts);
    double residual = 0.0;
    for (int k = 0; k < n_check; ++k)
        residual = std::max(residual,
                            max_abs(Matrix(series.evaluate(check_grid[std::size_t(k)]).matrix() -
                                           j_check[std::size_t(k)].matrix())));
    series.set_residual(residual);
    return series;
}

FloquetDecomposition floquet_decompose(const PeriodicLindbladian& lind, double t0,
                                       int truncation, bool with_defect,
                                       const PropagateOptions& opts) {
    // Anchor the harmonic analysis at t0 by shifting the generator.
    const PeriodicLindbladian* src = &lind;
    std::optional<PeriodicLindbladian> shifted;
    if (t0 != 0.0) {
        shifted.emplace([&lind, t0](double t) { return lind.at(t0 + t); }, lind.period(),
                        lind.label());
        src = &shifted.value();
    }
    FloquetGenerator gen = floquet_generator_exact(*src, 0.0, opts);
    gen.t0 = t0;
    const FourierSeriesSuperop l_series = lindbladian_fourier(*src, truncation);
    FloquetGenerator anchored = gen;
    anchored.t0 = 0.0;  // series built in shifted time
    FloquetDecomposition dec{gen, micromotion_fourier(l_series, anchored, truncation), {}};
    if (with_defect) dec.defect = defect_fourier(*src, anchored, truncation, 0, opts);
    return dec;
}

Superoperator reconstruct_propagator(const FloquetDecomposition& dec, double t1, double t2) {
    if (!(t2 >= t1)) throw InvalidInput("reconstruct_propagator: t2 must be >= t1");
    const double t0 = dec.generator.t0;
    if (t1 < t0) throw InvalidInput("reconstruct_propagator: t1 must be >= the anchor t0");
    Matrix acc = dec.micromotion.evaluate(t2 - t0).matrix() *
                 matrix_exp(dec.generator.generator.matrix() * (t2 - t1));
    if (t1 != t0) {
        if (!dec.defect)
            throw InvalidInput(
                "reconstruct_propagator: t1 != t0 requires the defect series (with_defect)");
        acc *= dec.defect->evaluate(t1 - t0).matrix();
    }
    return Superoperator(std::move(acc));
}

// ---------------------------------------------------------------------------
// Asymptotic periodic state
// ---------------------------------------------------------------------------

SteadyStateSeries::SteadyStateSeries(std::vector<Matrix> coeffs, double period)
    : coeffs_(std::move(coeffs)), period_(period) {
    if (coeffs_.empty() || coeffs_.size() % 2 == 0)
        throw InvalidInput("SteadyStateSeries: need an odd number of coefficients");
    if (!(period_ > 0.0)) throw InvalidInput("SteadyStateSeries: period must be positive");
    truncation_ = int(coeffs_.size() / 2);
    zero_ = Matrix::Zero(coeffs_.front().rows(), coeffs_.front().cols());
}

double SteadyStateSeries::base_frequency() const { return kTwoPi / period_; }

const Matrix& SteadyStateSeries::coeff(int m) const {
    if (std::abs(m) > truncation_) return zero_;
    return coeffs_[std::size_t(m + truncation_)];
}

Matrix SteadyStateSeries::evaluate(double t) const {
    const double w = base_frequency();
    Matrix acc = Matrix::Zero(zero_.rows(), zero_.cols());
    for (int m = -truncation_; m <= truncation_; ++m)
        acc += std::exp(I_UNIT * (w * m * t)) * coeff(m);
    return 0.5 * (acc + acc.adjoint().eval());
}

SteadyStateSeries steady_state_block(const FourierSeriesSuperop& lind_series, int truncation) {
    if (truncation < 0) throw InvalidInput("steady_state_block: negative truncation");
    const int M = truncation;
    const int n_modes = 2 * M + 1;
    const Eigen::Index d = lind_series.dim();
    const Eigen::Index s = d * d;
    const double w = lind_series.base_frequency();

    // Block system B[m,q] = L_{m-q} - delta_{mq} i w m.
    Matrix b = Matrix::Zero(Eigen::Index(n_modes) * s, Eigen::Index(n_modes) * s);
    for (int m = -M; m <= M; ++m) {
        for (int q = -M; q <= M; ++q) {
            Matrix block = lind_series.coeff(m - q).matrix();
            if (m == q) block -= I_UNIT * (w * m) * Matrix::Identity(s, s);
            b.block(Eigen::Index(m + M) * s, Eigen::Index(q + M) * s, s, s) = block;
        }
    }

    Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const Eigen::Index last = sv.size() - 1;
    const double sigma_min = sv(last);
    const double sigma_next = sv(last - 1);
    const double separation = sigma_next / std::max(sigma_min, 1e-300);
    if (separation < 1e3) {
        std::ostringstream os;
        os << "degenerate steady space: singular value separation " << separation
           << " below 1e3 (sigma_min " << sigma_min << ", next " << sigma_next << ")";
        throw NumericsError(os.str());
    }
    Vector v = svd.matrixV().col(last);
    const double residual = (b * v).norm() / v.norm();

    // Fix the arbitrary phase/scale so the m = 0 coefficient has unit trace;
    // a traceless null vector cannot be a state.
    std::vector<Matrix> coeffs;
    coeffs.reserve(std::size_t(n_modes));
    for (int m = 0; m < n_modes; ++m) coeffs.push_back(devectorize(v.segment(m * s, s), d));
    const Complex tr0 = coeffs[std::size_t(M)].trace();
    if (std::abs(tr0) < 1e-10) {
        std::ostringstream os;
        os << "degenerate steady space: null vector has trace magnitude " << std::abs(tr0);
        throw NumericsError(os.str());
    }
    double scale = 0.0;
    for (auto& c : coeffs) {
        c /= tr0;
        scale = std::max(scale, max_abs(c));
    }

    // Hermiticity of the reconstructed state pairs coefficients as
    // rho_{-m} = rho_m^dag; measure the solver's defect, then enforce.
    double conj_defect = 0.0;
    for (int m = 1; m <= M; ++m) {
        const Matrix& hi = coeffs[std::size_t(M + m)];
        const Matrix& lo = coeffs[std::size_t(M - m)];
        conj_defect = std::max(conj_defect, max_abs(Matrix(lo - hi.adjoint())) / scale);
    }
    conj_defect = std::max(
        conj_defect, max_abs(Matrix(coeffs[std::size_t(M)] - coeffs[std::size_t(M)].adjoint())) /
                         scale);
    for (int m = 1; m <= M; ++m) {
        Matrix hi = coeffs[std::size_t(M + m)];
        Matrix lo = coeffs[std::size_t(M - m)];
        coeffs[std::size_t(M + m)] = 0.5 * (hi + lo.adjoint());
        coeffs[std::size_t(M - m)] = 0.5 * (lo + hi.adjoint());
    }
    coeffs[std::size_t(M)] =
        0.5 * (coeffs[std::size_t(M)] + coeffs[std::size_t(M)].adjoint().eval());
    const double tr_real = coeffs[std::size_t(M)].trace().real();
    for (auto& c : coeffs) c /= tr_real;

    SteadyStateSeries out(std::move(coeffs), lind_series.period());
    out.set_diagnostics(residual, separation, conj_defect);
    return out;
}

// ---------------------------------------------------------------------------
// Stroboscopic evolution
// ---------------------------------------------------------------------------

StroboscopicTrajectory stroboscopic_evolve(const FloquetGenerator& gen, const DensityMatrix& rho0,
                                           int n_periods) {
    if (n_periods < 0) throw InvalidInput("stroboscopic_evolve: negative period count");
    if (rho0.dim() != gen.generator.dim())
        throw DimensionError("stroboscopic_evolve: state/generator mismatch");
    const Matrix step = matrix_exp(gen.generator.matrix() * gen.period);

    StroboscopicTrajectory out;
    out.states.reserve(std::size_t(n_periods) + 1);
    out.states.push_back(rho0);
    Matrix rho = rho0.matrix();
    for (int k = 1; k <= n_periods; ++k) {
        rho = devectorize(Vector(step * vectorize(rho)), rho0.dim());
        const double drift = std::abs(rho.trace() - Complex(1.0));
        out.max_trace_drift = std::max(out.max_trace_drift, drift);
        // Approximate generators leak trace at their truncation order; that
        // is reported as a warning, not treated as a numerical failure.
        out.states.push_back(DensityMatrix::from_evolution(rho, 1e-3));
    }
    out.trace_warning = out.max_trace_drift > 1e-8;
    return out;
}

// ---------------------------------------------------------------------------
// Coherent-limit consistency
// ---------------------------------------------------------------------------

namespace {

Matrix unitary_product(const std::function<Matrix(double)>& h_fn, double t1, double t2,
                       long steps) {
    const Matrix probe = h_fn(t1);
    Matrix u = Matrix::Identity(probe.rows(), probe.cols());
    const double dt = (t2 - t1) / double(steps);
    for (long i = 0; i < steps; ++i) {
        const double t_mid = t1 + (double(i) + 0.5) * dt;
        u = (-I_UNIT * dt * h_fn(t_mid)).exp() * u;
    }
    return u;
}

Matrix unitary_adaptive(const std::function<Matrix(double)>& h_fn, double t1, double t2,
                        const PropagateOptions& opts) {
    long n = std::max(opts.initial_steps, 2L);
    Matrix prev = unitary_product(h_fn, t1, t2, n);
    double diff = std::numeric_limits<double>::infinity();
    while (2 * n <= opts.max_steps) {
        n *= 2;
        Matrix cur = unitary_product(h_fn, t1, t2, n);
        diff = max_abs(Matrix(cur - prev));
        if (diff < opts.tol) return cur;
        prev = std::move(cur);
    }
    std::ostringstream os;
    os << "closed_system_reduce: unitary integration did not converge; last difference " << diff;
    throw NumericsError(os.str());
}

}  // namespace

ClosedSystemReduction closed_system_reduce(const std::function<Matrix(double)>& hamiltonian,
                                           double period, const PropagateOptions& opts) {
    if (!hamiltonian) throw InvalidInput("closed_system_reduce: empty Hamiltonian function");
    if (!(period > 0.0)) throw InvalidInput("closed_system_reduce: period must be positive");

    ClosedSystemReduction rep;
    const Matrix u = unitary_adaptive(hamiltonian, 0.0, period, opts);
    const Eigen::Index d = u.rows();
    rep.one_period_unitary = u;
    rep.unitarity_defect = max_abs(Matrix(u.adjoint() * u - Matrix::Identity(d, d)));

    Matrix hf = (I_UNIT / period) * matrix_log_principal(u);
    const double herm = max_abs(Matrix(hf - hf.adjoint()));
    if (herm > 1e-9) {
        std::ostringstream os;
        os << "closed_system_reduce: effective Hamiltonian Hermiticity defect " << herm;
        throw NumericsError(os.str());
    }
    hf = 0.5 * (hf + hf.adjoint().eval());
    rep.floquet_hamiltonian = hf;

    // The same dynamics in operator space, dissipation-free.
    PeriodicLindbladian lind(
        [hamiltonian](double t) {
            return lindblad_superop({hamiltonian(t), {}});
        },
        period);
    const FloquetGenerator gen = floquet_generator_exact(lind, 0.0, opts);

    const Matrix exp_gen = matrix_exp(gen.generator.matrix() * period);
    const Matrix u_sandwich = kron(u.conjugate(), u);
    rep.propagator_agreement = max_abs(Matrix(exp_gen - u_sandwich));

    const Matrix comm_gen = -I_UNIT * Superoperator::commutator_with(hf).matrix();
    rep.exponential_agreement = max_abs(Matrix(exp_gen - matrix_exp(comm_gen * period)));
    rep.generator_gauge_gap = max_abs(Matrix(gen.generator.matrix() - comm_gen));
    rep.generator_gauge_folded =
        rep.generator_gauge_gap > 1e-6 && rep.exponential_agreement < 1e-8;

    // Micromotion agreement at a few interior offsets: operator-space K(t)
    // against the Hilbert-space sandwich U(t,0) e^{+i H_F t} . e^{-i H_F t} U^dag.
    const std::vector<double> offsets{0.25 * period, 0.5 * period, 0.75 * period};
    const auto k_maps = micromotion_ode(lind, gen, offsets, opts);
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        const Matrix ut = unitary_adaptive(hamiltonian, 0.0, offsets[i], opts);
        const Matrix p = ut * matrix_exp(I_UNIT * offsets[i] * hf);
        const Matrix k_hilbert = kron(p.conjugate(), p);
        rep.micromotion_agreement = std::max(
            rep.micromotion_agreement, max_abs(Matrix(k_maps[i].matrix() - k_hilbert)));
    }
    return rep;
}

}  // namespace floq
