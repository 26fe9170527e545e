#pragma once

#include <random>

#include "floq/superop.hpp"

// Deterministic random inputs for the property tests.  Everything draws from
// an explicitly seeded engine so failures reproduce bit-for-bit.
namespace testutil {

inline floq::Matrix random_complex(std::mt19937& rng, Eigen::Index rows, Eigen::Index cols,
                                   double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    floq::Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = floq::Complex(n(rng), n(rng));
    return m;
}

inline floq::Matrix random_hermitian(std::mt19937& rng, Eigen::Index d, double scale = 1.0) {
    const floq::Matrix g = random_complex(rng, d, d, scale);
    return 0.5 * (g + g.adjoint().eval());
}

inline floq::DensityMatrix random_state(std::mt19937& rng, Eigen::Index d = 2) {
    const floq::Matrix g = random_complex(rng, d, d);
    floq::Matrix rho = g * g.adjoint();
    rho /= rho.trace();
    return floq::DensityMatrix(0.5 * (rho + rho.adjoint().eval()));
}

}  // namespace testutil
