#include "qcal/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "qcal/errors.hpp"

namespace qcal {
namespace {

constexpr int kMaxSweeps = 100;

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void check_finite(const Matrix& a, const char* what) {
  for (double v : a.values()) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " has non-finite entries");
  }
}

// Replaces column j of `basis` (stored as rows) by a unit vector orthogonal to
// every other row flagged in `filled`.
void complete_basis(Matrix& basis, std::size_t j, const std::vector<bool>& filled) {
  const std::size_t n = basis.cols();
  double best_norm = -1.0;
  std::vector<double> best(n);
  for (std::size_t e = 0; e < n; ++e) {
    std::vector<double> v(n, 0.0);
    v[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t r = 0; r < basis.rows(); ++r) {
        if (!filled[r]) continue;
        const auto b = basis.row(r);
        const double p = dot(v, b);
        for (std::size_t i = 0; i < n; ++i) v[i] -= p * b[i];
      }
    }
    const double nv = std::sqrt(dot(v, v));
    if (nv > best_norm + 1e-12) {
      best_norm = nv;
      best = v;
    }
  }
  auto row = basis.row(j);
  for (std::size_t i = 0; i < n; ++i) row[i] = best[i] / best_norm;
}

// Tall case: a is n x d with n >= d.
SvdResult jacobi_tall(const Matrix& a) {
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  Matrix g = a.transpose();  // row j holds column j of a
  Matrix v = Matrix::identity(d);  // row j holds column j of V

  // Pairs count as orthogonal once |<g_p, g_q>| <= tol * ||g_p|| ||g_q||.
  const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(std::max<std::size_t>(n, 4));
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        auto gp = g.row(p);
        auto gq = g.row(q);
        const double alpha = dot(gp, gp);
        const double beta = dot(gq, gq);
        const double gamma = dot(gp, gq);
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const double x = gp[i];
          const double y = gq[i];
          gp[i] = c * x - s * y;
          gq[i] = s * x + c * y;
        }
        auto vp = v.row(p);
        auto vq = v.row(q);
        for (std::size_t i = 0; i < d; ++i) {
          const double x = vp[i];
          const double y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }
  if (sweep == kMaxSweeps) {
    std::ostringstream msg;
    msg << "svd: one-sided Jacobi did not converge after " << kMaxSweeps << " sweeps ("
        << n << "x" << d << ", ||A||_F = " << frobenius_norm(a) << ", max|a_ij| = " << max_abs(a)
        << ")";
    throw NumericalError(msg.str());
  }

  std::vector<double> norms(d);
  for (std::size_t j = 0; j < d; ++j) norms[j] = std::sqrt(dot(g.row(j), g.row(j)));
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  SvdResult out;
  out.s.resize(d);
  Matrix ut(d, n);  // rows are columns of u
  out.vt = Matrix(d, d);
  std::vector<bool> filled(d, false);
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t j = order[k];
    out.s[k] = norms[j];
    auto vrow = out.vt.row(k);
    const auto src = v.row(j);
    std::copy(src.begin(), src.end(), vrow.begin());
    if (norms[j] > 0.0 && std::isfinite(1.0 / norms[j])) {
      auto urow = ut.row(k);
      const auto gj = g.row(j);
      for (std::size_t i = 0; i < n; ++i) urow[i] = gj[i] / norms[j];
      filled[k] = true;
    }
  }
  for (std::size_t k = 0; k < d; ++k) {
    if (filled[k]) continue;
    out.s[k] = 0.0;
    complete_basis(ut, k, filled);
    filled[k] = true;
  }
  out.u = ut.transpose();
  return out;
}

}  // namespace

SvdResult svd(const Matrix& a) {
  if (a.empty()) throw std::invalid_argument("svd: empty matrix");
  check_finite(a, "svd input");
  if (a.rows() >= a.cols()) return jacobi_tall(a);
  // a^T = U' S V'^T  =>  a = V' S U'^T
  SvdResult t = jacobi_tall(a.transpose());
  return SvdResult{t.vt.transpose(), std::move(t.s), t.u.transpose()};
}

double condition_number(const std::vector<double>& s, double rank_tolerance) {
  if (s.empty() || s.front() <= 0.0) throw std::invalid_argument("condition_number: zero matrix");
  const double smin = s.back();
  if (smin < rank_tolerance * s.front()) return std::numeric_limits<double>::infinity();
  return s.front() / smin;
}

double condition_number(const Matrix& a, double rank_tolerance) {
  return condition_number(svd(a).s, rank_tolerance);
}

Matrix pseudoinverse(const Matrix& a, double rank_tolerance) {
  const SvdResult f = svd(a);
  const std::size_t k = f.s.size();
  const double cutoff = rank_tolerance * (k ? f.s.front() : 0.0);
  // pinv = V diag(1/s) U^T, built as sum over retained components.
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < k; ++i) {
    if (!(f.s[i] >= cutoff) || f.s[i] == 0.0) continue;
    const double inv = 1.0 / f.s[i];
    const auto vrow = f.vt.row(i);
    for (std::size_t r = 0; r < a.cols(); ++r) {
      const double vr = vrow[r] * inv;
      if (vr == 0.0) continue;
      auto orow = out.row(r);
      for (std::size_t c = 0; c < a.rows(); ++c) orow[c] += vr * f.u(c, i);
    }
  }
  return out;
}

Matrix ridge_solve(const SvdResult& f, const Matrix& y, double lambda, double rank_tolerance) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("ridge_solve: lambda must be finite and >= 0");
  }
  if (f.u.rows() != y.rows()) {
    throw std::invalid_argument("ridge_solve: x has " + std::to_string(f.u.rows()) +
                                " rows but y has " + std::to_string(y.rows()));
  }
  check_finite(y, "ridge_solve y");
  const std::size_t k = f.s.size();
  const double smax = k ? f.s.front() : 0.0;
  if (lambda == 0.0 && (smax == 0.0 || f.s.back() < rank_tolerance * smax)) {
    std::ostringstream msg;
    msg << "ridge_solve: x is effectively rank deficient (sigma_max = " << smax
        << ", sigma_min = " << (k ? f.s.back() : 0.0)
        << ") and lambda = 0; choose lambda > 0, e.g. with select_lambda";
    throw NumericalError(msg.str());
  }
  // proj = diag(s / (s^2 + lambda)) U^T y, k x p
  Matrix proj = matmul_tn(f.u, y);
  for (std::size_t i = 0; i < k; ++i) {
    const double s = f.s[i];
    const double factor = (s == 0.0) ? 0.0 : s / (s * s + lambda);
    for (double& v : proj.row(i)) v *= factor;
  }
  // W = proj^T V^T = proj^T vt, p x d
  return matmul_tn(proj, f.vt);
}

Matrix ridge_solve(const Matrix& x, const Matrix& y, double lambda, double rank_tolerance) {
  if (x.rows() != y.rows()) {
    throw std::invalid_argument("ridge_solve: x has " + std::to_string(x.rows()) +
                                " rows but y has " + std::to_string(y.rows()));
  }
  return ridge_solve(svd(x), y, lambda, rank_tolerance);
}

}  // namespace qcal
