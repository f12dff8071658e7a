#pragma once

#include <cstdint>
#include <vector>

#include "qcal/calib.hpp"
#include "qcal/matrix.hpp"
#include "qcal/network.hpp"
#include "qcal/random.hpp"

namespace qcal {

// N(0, stddev^2) entries with round(fraction * size) positions replaced by
// +-magnitude (sign drawn uniformly).
struct HeavyTailOptions {
  double stddev = 0.02;
  double outlier_fraction = 0.005;
  double outlier_magnitude = 0.5;
};

Matrix gaussian_with_outliers(std::size_t rows, std::size_t cols, const HeavyTailOptions& opts,
                              Rng& rng);

// rows x cols matrix with orthonormal columns (rows >= cols).
Matrix random_orthonormal(std::size_t rows, std::size_t cols, Rng& rng);

// Descending, log-spaced from hi to lo (inclusive), count entries.
std::vector<double> log_spaced_descending(double hi, double lo, std::size_t count);

struct Fig2Options {
  std::size_t rows = 64;
  std::size_t cols = 64;
  HeavyTailOptions weights;
};

Matrix make_fig2_weights(const Fig2Options& opts, std::uint64_t seed);

// Single heavy-tailed layer plus an ill-conditioned calibration batch
// (x = U diag(s) V^T, s log-spaced from 1 down to 1/cond) whose outputs were
// recorded with Gaussian noise of relative rms `recording_noise`, and an
// isotropic held-out batch with exact outputs.
struct IllCondOptions {
  std::size_t d_in = 32;
  std::size_t d_out = 16;
  std::size_t n_calib = 50;
  std::size_t n_eval = 10;
  double cond = 1e4;
  double recording_noise = 0.01;
  HeavyTailOptions weights;
};

struct IllCondFixture {
  Network net;
  CalibrationBatch calib;
  CalibrationBatch eval;
};

IllCondFixture make_illcond(const IllCondOptions& opts, std::uint64_t seed);

// Teacher MLP with heavy-tailed weights and an input pool drawn from a
// low-rank latent subspace plus small isotropic noise.
struct TeacherOptions {
  std::vector<std::size_t> dims{16, 16, 8};
  Activation hidden_activation = Activation::ReLU;
  HeavyTailOptions weights;
  std::size_t latent_rank = 8;
  double input_scale = 100.0;
  double input_noise = 0.0;
  std::size_t n_inputs = 256;
};

struct TeacherFixture {
  Network teacher;
  Matrix inputs;
};

TeacherFixture make_teacher(const TeacherOptions& opts, std::uint64_t seed);

}  // namespace qcal
