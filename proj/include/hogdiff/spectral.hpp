#pragma once

#include "hogdiff/errors.hpp"
#include "hogdiff/linalg.hpp"

namespace hogdiff {

// Eigendecomposition L = U diag(lam) U^T with eigenvalues ascending. Each
// eigenvector's largest-magnitude entry is non-negative (ties broken by lowest
// index), which pins the sign for reproducibility.
struct SpectralState {
  Matrix U;    // orthogonal, columns are eigenvectors
  Vector lam;  // ascending
};

// Cyclic Jacobi rotations. Converges when the off-diagonal Frobenius norm
// drops below 1e-10 * max(1, ||L||_F); throws NumericError with the sweep
// count if that does not happen within max_sweeps.
SpectralState eigendecompose(const Matrix& L, int max_sweeps = 100);

// A_hat = D_hat - L_hat with L_hat = U diag(lam) U^T and D_hat = diag(L_hat):
// off-diagonal entries are -L_hat_ij, the diagonal is exactly zero, and the
// result is exactly symmetric.
Matrix reconstruct_adjacency(const SpectralState& s);

}  // namespace hogdiff
