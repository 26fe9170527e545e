#include <doctest.h>

#include <cmath>

#include "floq/models.hpp"
#include "floq/propagation.hpp"
#include "test_helpers.hpp"

using namespace floq;
using testutil::random_complex;
using testutil::random_state;

namespace {

// Constant-generator Lindbladian (periodic with any declared period).
PeriodicLindbladian constant_lind(const Superoperator& s, double period) {
    return PeriodicLindbladian([s](double) { return s; }, period);
}

Superoperator decay_generator(double gamma) {
    LindbladTerms terms;
    terms.hamiltonian = pauli::z();
    terms.jumps.push_back({pauli::minus(), gamma});
    return lindblad_superop(terms);
}

}  // namespace

TEST_CASE("matrix_exp on known inputs") {
    Matrix nilpotent(2, 2);
    nilpotent << 0, 1, 0, 0;
    Matrix expected(2, 2);
    expected << 1, 1, 0, 1;
    CHECK(max_abs(Matrix(matrix_exp(nilpotent) - expected)) < 1e-14);

    Matrix diag = Matrix::Zero(2, 2);
    diag(0, 0) = Complex(0.3, 0.7);
    diag(1, 1) = Complex(-1.2, 0.1);
    const Matrix e = matrix_exp(diag);
    CHECK(std::abs(e(0, 0) - std::exp(Complex(0.3, 0.7))) < 1e-14);
    CHECK(std::abs(e(1, 1) - std::exp(Complex(-1.2, 0.1))) < 1e-14);
    CHECK(std::abs(e(0, 1)) == 0.0);
}

TEST_CASE("matrix_log_principal inverts matrix_exp off the branch cut") {
    std::mt19937 rng(21);
    for (int it = 0; it < 10; ++it) {
        // Small-norm generator: spectrum of exp stays near 1, far from the cut.
        const Matrix g = 0.3 * random_complex(rng, 4, 4);
        const Matrix a = matrix_exp(g);
        const Matrix l = matrix_log_principal(a);
        CHECK(max_abs(Matrix(matrix_exp(l) - a)) < 1e-10);
        CHECK(max_abs(Matrix(l - g)) < 1e-10);  // principal branch recovers g
    }
}

TEST_CASE("matrix_log_principal rejects spectra on the negative axis or at zero") {
    Matrix neg = Matrix::Identity(2, 2);
    neg(0, 0) = -1.0;
    CHECK_THROWS_AS(matrix_log_principal(neg), BranchCutError);
    try {
        matrix_log_principal(neg);
    } catch (const BranchCutError& e) {
        CHECK(std::abs(e.eigenvalue() - Complex(-1.0, 0.0)) < 1e-12);
        CHECK(std::string(e.what()).find("log branch ambiguity") != std::string::npos);
    }

    Matrix sing = Matrix::Zero(2, 2);
    sing(1, 1) = 1.0;
    CHECK_THROWS_WITH_AS(matrix_log_principal(sing), doctest::Contains("singular monodromy"),
                         NumericsError);
}

TEST_CASE("periodic generator construction rejects a wrong period declaration") {
    Model1Params p;
    auto gen = [p](double t) {
        return model1_lindbladian(p).at(t);
    };
    // Declared period must actually be a period of the generator.
    CHECK_THROWS_AS(PeriodicLindbladian(gen, 0.7 * (2.0 * M_PI / p.omega)), InvalidInput);
    CHECK_NOTHROW(PeriodicLindbladian(gen, 2.0 * M_PI / p.omega));
    // The generator is quadratic in the drive, so half the drive period works too.
    CHECK_NOTHROW(PeriodicLindbladian(gen, M_PI / p.omega));
}

TEST_CASE("periodic generator rejects trace-leaking maps") {
    // rho -> rho is not trace-annihilating, so it is not a valid generator.
    CHECK_THROWS_AS(constant_lind(Superoperator::identity(2), 1.0), InvalidInput);
}

TEST_CASE("propagation of a constant generator is a plain exponential") {
    const Superoperator g = decay_generator(0.4);
    const PeriodicLindbladian lind = constant_lind(g, 1.0);
    const PropagatorMap v = propagate_adaptive(lind, 0.0, 1.7);
    CHECK(max_abs(Matrix(v.map.matrix() - matrix_exp(1.7 * g.matrix()))) < 1e-9);
    CHECK(v.t_start == 0.0);
    CHECK(v.t_end == 1.7);
}

TEST_CASE("fixed-step propagation converges at second order") {
    const PeriodicLindbladian lind = model1_lindbladian({});
    const double T = lind.period();
    // default-tolerance reference: ~1e-10, far below the fixed-step errors
    const Matrix ref = propagate_adaptive(lind, 0.0, T).map.matrix();
    const double e64 = max_abs(Matrix(propagate(lind, 0.0, T, 64).map.matrix() - ref));
    const double e128 = max_abs(Matrix(propagate(lind, 0.0, T, 128).map.matrix() - ref));
    const double e256 = max_abs(Matrix(propagate(lind, 0.0, T, 256).map.matrix() - ref));
    CHECK(e64 / e128 == doctest::Approx(4.0).epsilon(0.2));
    CHECK(e128 / e256 == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("adaptive propagation reports non-convergence against an absurd ceiling") {
    const PeriodicLindbladian lind = model1_lindbladian({});
    PropagateOptions opts;
    opts.tol = 1e-14;
    opts.initial_steps = 2;
    opts.max_steps = 8;  // cannot possibly reach 1e-14
    CHECK_THROWS_WITH_AS(propagate_adaptive(lind, 0.0, lind.period(), opts),
                         doctest::Contains("no convergence"), NumericsError);
}

TEST_CASE("divisibility and periodicity of the propagator") {
    std::mt19937 rng(22);
    const PeriodicLindbladian lind = model1_lindbladian({1.0, 0.3, 2.0, false});
    const double T = lind.period();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int it = 0; it < 5; ++it) {
        const double t0 = u(rng) * T;
        const double t1 = t0 + u(rng) * T;
        const double t2 = t1 + u(rng) * T;
        const Matrix direct = propagate_adaptive(lind, t0, t2).map.matrix();
        const Matrix split = (propagate_adaptive(lind, t1, t2).map *
                              propagate_adaptive(lind, t0, t1).map)
                                 .matrix();
        CHECK(max_abs(Matrix(direct - split)) < 1e-9);

        const Matrix shifted = propagate_adaptive(lind, t0 + T, t2 + T).map.matrix();
        CHECK(max_abs(Matrix(direct - shifted)) < 1e-9);
    }
}

TEST_CASE("monodromy equals the one-period propagator") {
    const PeriodicLindbladian lind = model1_lindbladian({});
    const Matrix m = monodromy(lind).map.matrix();
    const Matrix v = propagate_adaptive(lind, 0.0, lind.period()).map.matrix();
    CHECK(max_abs(Matrix(m - v)) < 1e-12);
    // anchored elsewhere
    const Matrix m2 = monodromy(lind, 0.3).map.matrix();
    const Matrix v2 = propagate_adaptive(lind, 0.3, 0.3 + lind.period()).map.matrix();
    CHECK(max_abs(Matrix(m2 - v2)) < 1e-12);
}

TEST_CASE("evolve_state basics") {
    const PeriodicLindbladian lind = model1_lindbladian({});
    const DensityMatrix rho0 = states::excited();

    const auto single = evolve_state(lind, rho0, {0.0});
    REQUIRE(single.size() == 1);
    CHECK(max_abs(Matrix(single[0].matrix() - rho0.matrix())) == 0.0);

    // constant zero generator -> constant trajectory
    const PeriodicLindbladian frozen = constant_lind(Superoperator::zero(2), 1.0);
    const auto flat = evolve_state(frozen, rho0, {0.0, 0.5, 1.5});
    for (const auto& s : flat) CHECK(max_abs(Matrix(s.matrix() - rho0.matrix())) < 1e-12);

    CHECK_THROWS_AS(evolve_state(lind, rho0, {}), InvalidInput);
    CHECK_THROWS_AS(evolve_state(lind, rho0, {0.5, 1.0}), InvalidInput);   // must start at 0
    CHECK_THROWS_AS(evolve_state(lind, rho0, {0.0, 1.0, 1.0}), InvalidInput);  // ascending
}

TEST_CASE("trajectories preserve trace and Hermiticity") {
    std::mt19937 rng(23);
    const PeriodicLindbladian lind = model1_lindbladian({1.0, 0.5, 1.5, false});
    const double T = lind.period();
    for (int it = 0; it < 5; ++it) {
        const DensityMatrix rho0 = random_state(rng);
        // raw application of the propagator, before any re-symmetrization
        const Matrix v = propagate_adaptive(lind, 0.0, (it + 1) * 0.7 * T).map.matrix();
        const Matrix rho_t = devectorize(Vector(v * vectorize(rho0.matrix())), 2);
        CHECK(std::abs(rho_t.trace() - Complex(1.0)) <= 1e-9);
        CHECK(max_abs(Matrix(rho_t - rho_t.adjoint().eval())) <= 1e-9);
    }
}

TEST_CASE("periodic-grid evolution reuses segment maps consistently") {
    const PeriodicLindbladian lind = model1_lindbladian({1.0, 0.2, 2.0, false});
    const DensityMatrix rho0 = states::excited();
    const int pp = 8, np = 3;
    const double T = lind.period();

    const auto fast = evolve_periodic_grid(lind, rho0, np, pp);
    REQUIRE(fast.size() == std::size_t(np * pp + 1));

    std::vector<double> grid(np * pp + 1);
    for (int k = 0; k <= np * pp; ++k) grid[k] = T * k / pp;
    const auto slow = evolve_state(lind, rho0, grid);
    for (std::size_t k = 0; k < fast.size(); ++k)
        CHECK(trace_distance(fast[k], slow[k]) < 1e-9);

    // the in-period segment maps compose to the monodromy
    const auto segs = period_segment_maps(lind, 0.0, pp);
    REQUIRE(segs.size() == std::size_t(pp));
    Superoperator prod = Superoperator::identity(2);
    for (const auto& s : segs) prod = s * prod;
    CHECK(max_abs(Matrix(prod.matrix() - monodromy(lind).map.matrix())) < 1e-9);
}
