#include "hogdiff/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace hogdiff {

namespace {

double offdiag_norm(const Matrix& A) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      if (i != j) s += A(i, j) * A(i, j);
  return std::sqrt(s);
}

}  // namespace

SpectralState eigendecompose(const Matrix& L, int max_sweeps) {
  const Eigen::Index n = L.rows();
  if (L.cols() != n) throw InvalidGraphError("eigendecompose needs a square matrix");
  if (!L.allFinite()) throw InvalidGraphError("non-finite entry in matrix");
  if ((L - L.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw InvalidGraphError("matrix not symmetric within 1e-10");

  Matrix A = 0.5 * (L + L.transpose());
  Matrix V = Matrix::Identity(n, n);
  const double scale = std::max(1.0, A.norm());
  const double tol = 1e-10 * scale;

  int sweep = 0;
  bool converged = offdiag_norm(A) <= tol;
  for (; sweep < max_sweeps && !converged; ++sweep) {
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (apq == 0.0) continue;
        // Rotation angle that annihilates A(p,q); the standard stable form.
        const double tau = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = A(k, p);
          const double akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = A(p, k);
          const double aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        A(p, q) = 0.0;
        A(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = V(k, p);
          const double vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
    converged = offdiag_norm(A) <= tol;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "jacobi eigensolver did not converge after " << sweep
        << " sweeps (off-diagonal norm " << offdiag_norm(A) << ")";
    throw NumericError(msg.str());
  }

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return A(a, a) < A(b, b); });

  SpectralState out;
  out.U = Matrix(n, n);
  out.lam = Vector(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.lam(k) = A(order[static_cast<size_t>(k)], order[static_cast<size_t>(k)]);
    out.U.col(k) = V.col(order[static_cast<size_t>(k)]);
    // Sign convention: first entry attaining the largest magnitude is >= 0.
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double a = std::abs(out.U(r, k));
      if (a > best_abs) {
        best_abs = a;
        best = r;
      }
    }
    if (out.U(best, k) < 0.0) out.U.col(k) = -out.U.col(k);
  }
  return out;
}

Matrix reconstruct_adjacency(const SpectralState& s) {
  Matrix Lhat = s.U * s.lam.asDiagonal() * s.U.transpose();
  Lhat = (0.5 * (Lhat + Lhat.transpose())).eval();
  Matrix A = -Lhat;
  A.diagonal().setZero();
  return A;
}

}  // namespace hogdiff
