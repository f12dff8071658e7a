#include "qcal/qat.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qcal/errors.hpp"
#include "qcal/random.hpp"

namespace qcal {
namespace {

const ClipStats* clip_ptr(const Observation& obs) { return obs.clip ? &*obs.clip : nullptr; }

// Fake-quantizes `x` under `config`, reusing a pinned observation when given.
Matrix quantize_node(const Matrix& x, const TensorQuantConfig& config,
                     const std::optional<Observation>& frozen, std::optional<Observation>& used) {
  if (!config.enabled) return x;
  used = frozen ? *frozen : observe(x, config);
  return fake_quantize(x, used->params, clip_ptr(*used));
}

Matrix ste_node(const Matrix& upstream, const Matrix& x, const std::optional<Observation>& obs) {
  if (!obs) return upstream;
  return ste_backward(upstream, x, obs->params, clip_ptr(*obs));
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& order, std::size_t begin,
                   std::size_t count) {
  Matrix out(count, m.cols());
  for (std::size_t i = 0; i < count; ++i) {
    const auto src = m.row(order[(begin + i) % order.size()]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

LayerQuantConfig make_wa_config(int weight_bits, int activation_bits, QuantScheme scheme,
                                double alpha) {
  LayerQuantConfig c;
  c.weight = {true, QuantSpec{weight_bits, true, PerAxis{0}}, scheme, alpha};
  c.activation = {true, QuantSpec{activation_bits, true, PerTensor{}}, scheme, alpha};
  c.weight.spec.validate();
  c.activation.spec.validate();
  return c;
}

Observation observe(const Matrix& x, const TensorQuantConfig& config) {
  if (config.scheme == QuantScheme::MinMax) return {minmax_observe(x, config.spec), std::nullopt};
  SigmaObservation s = sigma_observe(x, config.spec, config.alpha);
  return {std::move(s.params), std::move(s.clip)};
}

ToyModel ToyModel::with_config(Network net, const LayerQuantConfig& config) {
  ToyModel m;
  const std::size_t n = net.layers.size();
  m.net = std::move(net);
  m.qconfig.assign(n, config);
  m.frozen_weight.assign(n, std::nullopt);
  m.frozen_activation.assign(n, std::nullopt);
  m.validate();
  return m;
}

void ToyModel::validate() const {
  net.validate();
  const std::size_t n = net.layers.size();
  if (qconfig.size() != n || frozen_weight.size() != n || frozen_activation.size() != n) {
    throw std::invalid_argument("toy model: per-layer config count does not match layer count");
  }
  for (const auto& c : qconfig) {
    c.weight.spec.validate();
    c.activation.spec.validate();
    if (!(c.weight.alpha > 0.0) || !(c.activation.alpha > 0.0)) {
      throw std::invalid_argument("toy model: alpha must be positive");
    }
  }
}

void TrainConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("train config: steps must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("train config: learning rate must be finite and >= 0");
  }
  if (observer_mode == ObserverMode::FrozenAfterN && freeze_after < 0) {
    throw std::invalid_argument("train config: freeze_after must be >= 0");
  }
}

ForwardResult qat_forward(const ToyModel& model, const Matrix& x) {
  if (x.cols() != model.net.input_dim()) {
    throw std::invalid_argument("qat_forward: input has " + std::to_string(x.cols()) +
                                " features, model expects " + std::to_string(model.net.input_dim()));
  }
  ForwardResult out;
  out.tape.reserve(model.net.layers.size());
  Matrix h = x;
  for (std::size_t l = 0; l < model.net.layers.size(); ++l) {
    const Layer& layer = model.net.layers[l];
    const LayerQuantConfig& cfg = model.qconfig[l];
    LayerTape t;
    t.input_q = quantize_node(h, cfg.activation, model.frozen_activation[l], t.activation_obs);
    t.weight_q = quantize_node(layer.linear.w, cfg.weight, model.frozen_weight[l], t.weight_obs);
    t.pre_activation = linear_forward(t.weight_q, layer.linear.bias, t.input_q);
    t.input = std::move(h);
    h = apply_activation(layer.activation, t.pre_activation);
    out.tape.push_back(std::move(t));
  }
  out.output = std::move(h);
  return out;
}

double mse_loss(const Matrix& y, const Matrix& target) {
  const double d = frobenius_distance(y, target);
  return d * d / static_cast<double>(y.size());
}

std::vector<LayerGradients> qat_backward(const ToyModel& model, const ForwardResult& fwd,
                                         const Matrix& target) {
  if (target.rows() != fwd.output.rows() || target.cols() != fwd.output.cols()) {
    throw std::invalid_argument("qat_backward: target shape does not match the model output");
  }
  const std::size_t n = model.net.layers.size();
  std::vector<LayerGradients> grads(n);
  Matrix upstream = (2.0 / static_cast<double>(target.size())) * (fwd.output - target);
  for (std::size_t l = n; l-- > 0;) {
    const Layer& layer = model.net.layers[l];
    const LayerTape& t = fwd.tape[l];
    Matrix dz = upstream;
    if (layer.activation != Activation::None) {
      const Matrix deriv = activation_derivative(layer.activation, t.pre_activation);
      auto dv = dz.values();
      const auto gv = deriv.values();
      for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= gv[i];
    }
    LayerGradients& g = grads[l];
    g.dw = ste_node(matmul_tn(dz, t.input_q), layer.linear.w, t.weight_obs);
    g.db.assign(dz.cols(), 0.0);
    for (std::size_t r = 0; r < dz.rows(); ++r) {
      const auto row = dz.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) g.db[c] += row[c];
    }
    if (l > 0) upstream = ste_node(matmul(dz, t.weight_q), t.input, t.activation_obs);
  }
  return grads;
}

double qat_step(ToyModel& model, const Matrix& x, const Matrix& target, const TrainConfig& config,
                int step_index) {
  config.validate();
  const ForwardResult fwd = qat_forward(model, x);
  const double loss = mse_loss(fwd.output, target);
  if (!std::isfinite(loss)) {
    throw NumericalError("qat_step: non-finite loss at step " + std::to_string(step_index) +
                         " (learning rate " + std::to_string(config.learning_rate) + ")");
  }
  const std::vector<LayerGradients> grads = qat_backward(model, fwd, target);

  if (config.observer_mode == ObserverMode::FrozenAfterN && step_index == config.freeze_after) {
    for (std::size_t l = 0; l < fwd.tape.size(); ++l) {
      if (fwd.tape[l].weight_obs) model.frozen_weight[l] = fwd.tape[l].weight_obs;
      if (fwd.tape[l].activation_obs) model.frozen_activation[l] = fwd.tape[l].activation_obs;
    }
  }

  const double lr = config.learning_rate;
  for (std::size_t l = 0; l < grads.size(); ++l) {
    LayerSnapshot& layer = model.net.layers[l].linear;
    auto w = layer.w.values();
    const auto dw = grads[l].dw.values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * dw[i];
    for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= lr * grads[l].db[i];
  }
  return loss;
}

ExperimentResult run_experiment(const Network& teacher, InitMode init, const ExperimentData& data,
                                const ExperimentConfig& config) {
  teacher.validate();
  config.train.validate();
  if (data.train_inputs.rows() == 0) throw std::invalid_argument("run_experiment: no training inputs");
  const Matrix targets = forward(teacher, data.train_inputs);

  ExperimentResult result;
  Network student = teacher;
  if (init == InitMode::Calibrated) {
    CalibratedNetwork cal = calibrate_model(teacher, data.calib_inputs, config.policy);
    student = std::move(cal.net);
    result.calibration = std::move(cal.reports);
  }
  result.student = ToyModel::with_config(std::move(student), config.qconfig);

  const std::size_t n = data.train_inputs.rows();
  const std::size_t batch =
      (config.train.batch_size == 0 || config.train.batch_size >= n) ? n : config.train.batch_size;
  Rng rng(config.train.seed);
  std::vector<std::size_t> order = rng.permutation(n);
  std::size_t cursor = 0;

  result.loss.reserve(static_cast<std::size_t>(config.train.steps));
  for (int step = 0; step < config.train.steps; ++step) {
    if (batch == n) {
      result.loss.push_back(qat_step(result.student, data.train_inputs, targets, config.train, step));
      continue;
    }
    if (cursor + batch > n) {
      order = rng.permutation(n);
      cursor = 0;
    }
    const Matrix xb = gather_rows(data.train_inputs, order, cursor, batch);
    const Matrix tb = gather_rows(targets, order, cursor, batch);
    cursor += batch;
    result.loss.push_back(qat_step(result.student, xb, tb, config.train, step));
  }
  result.final_loss = mse_loss(qat_forward(result.student, data.train_inputs).output, targets);
  return result;
}

}  // namespace qcal
