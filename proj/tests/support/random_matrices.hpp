#pragma once

#include <random>
#include <vector>

#include "wgt/inversion.hpp"
#include "wgt/linalg.hpp"

namespace wgt::testing {

inline ComplexMatrix random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
    std::normal_distribution<double> nd(0.0, 1.0);
    ComplexMatrix a(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) a(i, j) = Complex(nd(rng), nd(rng));
    return a;
}

inline ComplexMatrix random_unitary(std::mt19937_64& rng, Index n) {
    Eigen::HouseholderQR<ComplexMatrix> qr(random_matrix(rng, n, n));
    return qr.householderQ() * ComplexMatrix::Identity(n, n);
}

inline ComplexMatrix random_hermitian(std::mt19937_64& rng, Index n) {
    const ComplexMatrix a = random_matrix(rng, n, n);
    return (a + a.adjoint()) * 0.5;
}

/// A0 = X + i sum Z_m^* Z_m with a common kernel spanned by the first k
/// columns of a random unitary U.
struct EngineeredA0 {
    ComplexMatrix a0;
    ComplexMatrix x;
    std::vector<ComplexMatrix> zs;
    ComplexMatrix kernel_basis;
};

inline EngineeredA0 engineered_a0(std::mt19937_64& rng, Index n, Index k, int n_factors = 2) {
    EngineeredA0 out;
    const ComplexMatrix u = random_unitary(rng, n);
    out.kernel_basis = u.leftCols(k);
    const ComplexMatrix comp = u.rightCols(n - k);
    // X and Z_m live on the complement
    const ComplexMatrix xc = random_hermitian(rng, n - k);
    out.x = comp * xc * comp.adjoint();
    out.a0 = out.x;
    for (int m = 0; m < n_factors; ++m) {
        const ComplexMatrix z = random_matrix(rng, n - k, n - k) * comp.adjoint() * 0.5;
        out.zs.push_back(z);
        out.a0 += Complex(0.0, 1.0) * (z.adjoint() * z);
    }
    return out;
}

/// Random family A(z) = A0 + z (C0 + z C1) with A0 having a k-dimensional
/// kernel shared on both sides.
struct RandomFamily {
    OperatorFamily family;
    Projection s;
};

inline RandomFamily random_family(std::mt19937_64& rng, Index n, Index k) {
    RandomFamily out;
    const ComplexMatrix u = random_unitary(rng, n);
    const ComplexMatrix comp = u.rightCols(n - k);
    ComplexMatrix core = random_matrix(rng, n - k, n - k) +
                         4.0 * ComplexMatrix::Identity(n - k, n - k);
    out.family.base = comp * core * comp.adjoint();
    const ComplexMatrix c0 = random_matrix(rng, n, n) * 0.3;
    const ComplexMatrix c1 = random_matrix(rng, n, n) * 0.3;
    out.family.remainder = [c0, c1](Complex z) -> ComplexMatrix { return c0 + z * c1; };
    out.family.remainder_delta = [c1](Complex z) -> ComplexMatrix { return z * c1; };
    out.family.remainder_derivative = c1;
    out.family.bound = op_norm(c0) + op_norm(c1);
    out.family.domain_radius = 0.1;
    out.s = kernel_projector(out.family.base);
    return out;
}

} // namespace wgt::testing
