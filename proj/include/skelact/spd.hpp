#pragma once

#include <span>
#include <vector>

#include "skelact/matrix.hpp"
#include "skelact/types.hpp"

namespace skelact {

// Covariance of the stacked joint coordinates of a trial: with
// p(t) the 3J-vector of frame t and p_bar the frame mean,
//   C = 1/(tau-1) * sum_t (p(t) - p_bar)(p(t) - p_bar)^T.
// Computed by a streaming (Welford) update; symmetric PSD output.
// Throws DataError when tau < 2.
Matrix covariance(const Trial& t);

struct EigResult {
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns are eigenvectors, A = V diag(l) V^T
};

// Cyclic Jacobi rotations for symmetric matrices. Converges when the
// off-diagonal norm drops below off_tol * max(1, ||A||_F), capped at
// max_sweeps sweeps. Adequate for the descriptor sizes here (n <= 93).
EigResult jacobi_eigendecompose(const Matrix& sym, double off_tol = 1e-12,
                                int max_sweeps = 100);

// Log-Euclidean tangent projection at the identity: logm(C + eps*I)
// with eps = eps_scale * max(trace(C)/n, 1). eps_scale = 0 disables the
// regularization (the input must then be positive definite). Throws
// DataError for asymmetric (beyond 1e-9) or non-finite input, and for
// non-positive spectra after regularization.
Matrix tangent_project(const Matrix& c, double eps_scale);

// exp of a symmetric matrix via eigendecomposition.
Matrix expm_symmetric(const Matrix& sym);

// Upper triangle, row-major, diagonal included. The optional sqrt(2)
// off-diagonal weighting makes the embedding norm-preserving; default
// off (plain entries).
std::vector<double> vectorize_upper(const Matrix& sym,
                                    bool sqrt2_offdiag = false);

// Full descriptor pipeline: covariance, tangent projection,
// vectorization. Length 3J(3J+1)/2.
std::vector<double> cov_descriptor(const Trial& t, double eps_scale = 1e-6,
                                   bool sqrt2_offdiag = false);

struct Normalizer {
  std::vector<double> mean;
  std::vector<double> std;  // clamped below by variance_floor
  double variance_floor = 1e-8;
};

// Per-dimension mean and population standard deviation (divisor N) of
// the training descriptors only.
Normalizer fit_normalizer(std::span<const std::vector<double>> train,
                          double variance_floor = 1e-8);

std::vector<double> apply_normalizer(const Normalizer& nrm,
                                     std::span<const double> d);

}  // namespace skelact
