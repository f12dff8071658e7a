#include "qcal/synth.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qcal {

Matrix gaussian_with_outliers(std::size_t rows, std::size_t cols, const HeavyTailOptions& opts,
                              Rng& rng) {
  if (!(opts.outlier_fraction >= 0.0 && opts.outlier_fraction <= 1.0)) {
    throw std::invalid_argument("outlier fraction must be within [0, 1]");
  }
  Matrix w(rows, cols);
  for (double& v : w.values()) v = rng.normal(0.0, opts.stddev);
  const auto count = static_cast<std::size_t>(std::llround(opts.outlier_fraction * static_cast<double>(w.size())));
  const std::vector<std::size_t> order = rng.permutation(w.size());
  for (std::size_t i = 0; i < count; ++i) {
    w.values()[order[i]] = rng.uniform() < 0.5 ? -opts.outlier_magnitude : opts.outlier_magnitude;
  }
  return w;
}

Matrix random_orthonormal(std::size_t rows, std::size_t cols, Rng& rng) {
  if (cols > rows) throw std::invalid_argument("random_orthonormal needs rows >= cols");
  // Columns stored as rows of q for contiguous access; two Gram-Schmidt passes.
  Matrix q(cols, rows);
  for (std::size_t j = 0; j < cols; ++j) {
    auto v = q.row(j);
    for (double& x : v) x = rng.normal();
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        const auto b = q.row(k);
        double p = 0.0;
        for (std::size_t i = 0; i < rows; ++i) p += v[i] * b[i];
        for (std::size_t i = 0; i < rows; ++i) v[i] -= p * b[i];
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return q.transpose();
}

std::vector<double> log_spaced_descending(double hi, double lo, std::size_t count) {
  if (count == 0 || !(hi > 0.0) || !(lo > 0.0)) throw std::invalid_argument("log_spaced: bad range");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = hi;
    return out;
  }
  const double a = std::log10(hi);
  const double b = std::log10(lo);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  return out;
}

Matrix make_fig2_weights(const Fig2Options& opts, std::uint64_t seed) {
  Rng rng(seed);
  return gaussian_with_outliers(opts.rows, opts.cols, opts.weights, rng);
}

IllCondFixture make_illcond(const IllCondOptions& opts, std::uint64_t seed) {
  if (opts.n_calib < opts.d_in) {
    throw std::invalid_argument("illcond preset needs n_calib >= d_in for a full spectrum");
  }
  if (!(opts.cond >= 1.0)) throw std::invalid_argument("illcond preset: cond must be >= 1");
  Rng rng(seed);
  IllCondFixture f;

  Layer layer;
  layer.linear.name = "proj";
  layer.linear.w = gaussian_with_outliers(opts.d_out, opts.d_in, opts.weights, rng);
  layer.linear.bias.assign(opts.d_out, 0.0);
  f.net.layers.push_back(layer);

  const Matrix u = random_orthonormal(opts.n_calib, opts.d_in, rng);
  const Matrix v = random_orthonormal(opts.d_in, opts.d_in, rng);
  const std::vector<double> s = log_spaced_descending(1.0, 1.0 / opts.cond, opts.d_in);
  f.calib.x = matmul_nt(matmul(u, Matrix::diagonal(s)), v);
  f.calib.y = linear_forward(layer.linear, f.calib.x);
  const double rms = frobenius_norm(f.calib.y) / std::sqrt(static_cast<double>(f.calib.y.size()));
  for (double& y : f.calib.y.values()) y += opts.recording_noise * rms * rng.normal();

  f.eval.x = Matrix(opts.n_eval, opts.d_in);
  const double scale = 1.0 / std::sqrt(static_cast<double>(opts.d_in));
  for (double& x : f.eval.x.values()) x = rng.normal(0.0, scale);
  f.eval.y = linear_forward(layer.linear, f.eval.x);
  return f;
}

TeacherFixture make_teacher(const TeacherOptions& opts, std::uint64_t seed) {
  if (opts.dims.size() < 2) throw std::invalid_argument("teacher needs at least two dims");
  if (opts.latent_rank == 0 || opts.latent_rank > opts.dims.front()) {
    throw std::invalid_argument("teacher latent rank must be in [1, d_in]");
  }
  Rng rng(seed);
  TeacherFixture f;
  for (std::size_t i = 0; i + 1 < opts.dims.size(); ++i) {
    Layer layer;
    layer.linear.name = "fc" + std::to_string(i);
    layer.linear.w = gaussian_with_outliers(opts.dims[i + 1], opts.dims[i], opts.weights, rng);
    layer.linear.bias.assign(opts.dims[i + 1], 0.0);
    for (double& b : layer.linear.bias) b = rng.normal(0.0, opts.weights.stddev);
    layer.activation = (i + 2 == opts.dims.size()) ? Activation::None : opts.hidden_activation;
    f.teacher.layers.push_back(std::move(layer));
  }
  const std::size_t d_in = opts.dims.front();
  const Matrix basis = random_orthonormal(d_in, opts.latent_rank, rng).transpose();  // k x d_in
  Matrix z(opts.n_inputs, opts.latent_rank);
  for (double& v : z.values()) v = rng.normal(0.0, opts.input_scale);
  f.inputs = matmul(z, basis);
  if (opts.input_noise > 0.0) {
    for (double& v : f.inputs.values()) v += rng.normal(0.0, opts.input_noise);
  }
  return f;
}

}  // namespace qcal
