#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qcal/calib.hpp"
#include "qcal/network.hpp"
#include "qcal/quant.hpp"

namespace qcal {

enum class QuantScheme { MinMax, Sigma };

struct TensorQuantConfig {
  bool enabled = false;
  QuantSpec spec;
  QuantScheme scheme = QuantScheme::Sigma;
  double alpha = 3.0;
};

struct LayerQuantConfig {
  TensorQuantConfig weight;
  TensorQuantConfig activation;
};

// WxAy configuration: signed codes, weights per output row, activations per
// tensor, sigma-clipped observers with the given alpha.
LayerQuantConfig make_wa_config(int weight_bits, int activation_bits,
                                QuantScheme scheme = QuantScheme::Sigma, double alpha = 3.0);

// What an observer hands to the fake-quant node.
struct Observation {
  QuantParams params;
  std::optional<ClipStats> clip;

  friend bool operator==(const Observation&, const Observation&) = default;
};

Observation observe(const Matrix& x, const TensorQuantConfig& config);

struct ToyModel {
  Network net;
  std::vector<LayerQuantConfig> qconfig;
  // Pinned observations once FrozenAfterN kicks in; nullopt while observers run live.
  std::vector<std::optional<Observation>> frozen_weight;
  std::vector<std::optional<Observation>> frozen_activation;

  static ToyModel with_config(Network net, const LayerQuantConfig& config);
  // Chained dims, one qconfig per layer, bits in [2, 8].
  void validate() const;
};

enum class ObserverMode { PerStep, FrozenAfterN };

struct TrainConfig {
  std::uint64_t seed = 0;
  int steps = 500;
  // Sized for the teacher preset, whose inputs have scale 100.
  double learning_rate = 1e-4;
  // 0 means full batch.
  std::size_t batch_size = 0;
  ObserverMode observer_mode = ObserverMode::PerStep;
  int freeze_after = 0;

  void validate() const;
};

struct LayerTape {
  Matrix input;
  Matrix input_q;
  Matrix weight_q;
  Matrix pre_activation;
  std::optional<Observation> weight_obs;
  std::optional<Observation> activation_obs;
};

struct ForwardResult {
  Matrix output;
  std::vector<LayerTape> tape;
};

// Each layer computes act(fq(input) fq(W)^T + b); observers run on the
// current tensors unless the model carries frozen observations.
ForwardResult qat_forward(const ToyModel& model, const Matrix& x);

struct LayerGradients {
  Matrix dw;
  std::vector<double> db;
};

double mse_loss(const Matrix& y, const Matrix& target);

// Gradients of mse_loss(output, target) with STE through every fake-quant node.
std::vector<LayerGradients> qat_backward(const ToyModel& model, const ForwardResult& fwd,
                                         const Matrix& target);

// One plain gradient-descent step; returns the loss before the update.
// step_index drives FrozenAfterN: observations made at step freeze_after are
// pinned for every later step. Throws NumericalError on a non-finite loss.
double qat_step(ToyModel& model, const Matrix& x, const Matrix& target, const TrainConfig& config,
                int step_index);

enum class InitMode { MinMax, Calibrated };

struct ExperimentConfig {
  LayerQuantConfig qconfig;
  TrainConfig train;
  LambdaPolicy policy;
};

struct ExperimentData {
  Matrix train_inputs;
  Matrix calib_inputs;
};

struct ExperimentResult {
  // Loss at each step, measured before that step's update.
  std::vector<double> loss;
  // Quantized-forward loss on the full training set after the last step.
  double final_loss = 0.0;
  ToyModel student;
  std::vector<CalibrationReport> calibration;
};

// Student starts from the teacher's weights (MinMax) or from calibrate_model
// on the calibration inputs (Calibrated), then trains against the teacher's
// full-precision outputs. Both inits see identical data order.
ExperimentResult run_experiment(const Network& teacher, InitMode init, const ExperimentData& data,
                                const ExperimentConfig& config);

}  // namespace qcal
