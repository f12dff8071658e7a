#pragma once

#include <vector>

#include "qcal/matrix.hpp"

namespace qcal {

// Singular values below this fraction of sigma_max count as zero.
inline constexpr double kDefaultRankTolerance = 1e-6;

// Thin SVD a = u * diag(s) * vt with k = min(n, d): u is n x k, vt is k x d,
// s is descending and non-negative. Columns of u are orthonormal even when
// a is rank deficient (zero directions are completed to an orthonormal basis).
struct SvdResult {
  Matrix u;
  std::vector<double> s;
  Matrix vt;
};

// One-sided Jacobi. Deterministic for identical input bytes. Throws
// NumericalError when the sweep cap is hit.
SvdResult svd(const Matrix& a);

// sigma_max / sigma_min, or +infinity when sigma_min < rank_tolerance * sigma_max.
// Throws std::invalid_argument for an all-zero matrix.
double condition_number(const Matrix& a, double rank_tolerance = kDefaultRankTolerance);
double condition_number(const std::vector<double>& singular_values,
                        double rank_tolerance = kDefaultRankTolerance);

// Moore-Penrose pseudoinverse (d x n); singular values below
// rank_tolerance * sigma_max are treated as zero.
Matrix pseudoinverse(const Matrix& a, double rank_tolerance = kDefaultRankTolerance);

// Tikhonov-regularised least squares: returns W (p x d) minimising
// ||x W^T - y||_F^2 + lambda ||W||_F^2, computed through the SVD of x as
// W^T = V diag(s / (s^2 + lambda)) U^T y so x^T x is never formed.
//
// lambda == 0 on an effectively rank-deficient x throws NumericalError; pick
// a positive lambda (see select_lambda in calib.hpp).
Matrix ridge_solve(const Matrix& x, const Matrix& y, double lambda,
                   double rank_tolerance = kDefaultRankTolerance);
// Same, reusing a precomputed decomposition of x.
Matrix ridge_solve(const SvdResult& x_svd, const Matrix& y, double lambda,
                   double rank_tolerance = kDefaultRankTolerance);

}  // namespace qcal
