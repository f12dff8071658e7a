#include "qcal_cli/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qcal/calib.hpp"
#include "qcal/digest.hpp"
#include "qcal/errors.hpp"
#include "qcal/json_io.hpp"
#include "qcal/linalg.hpp"
#include "qcal/network.hpp"
#include "qcal/qat.hpp"
#include "qcal/quant.hpp"
#include "qcal/report.hpp"
#include "qcal/synth.hpp"
#include "qcal/tensor_io.hpp"

namespace qcal::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string absolute(const std::string& p) { return fs::absolute(fs::path(p)).lexically_normal().string(); }

std::string file_digest(const std::string& p) { return sha256_hex(read_file_bytes(p)); }

// What a run needs to be replayed: the canonical argument list (every option
// spelled out, inputs absolute) minus --out.
struct Manifest {
  std::string subcommand;
  std::vector<std::string> args;
  std::map<std::string, std::string> inputs;
  std::optional<std::uint64_t> seed;
};

fs::path prepare_out(const std::string& out) {
  if (out.empty()) throw UsageError("--out is required");
  fs::path dir = fs::absolute(fs::path(out)).lexically_normal();
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const fs::path& dir, const Manifest& m) {
  json j{{"tool_version", kToolVersion},
         {"subcommand", m.subcommand},
         {"args", m.args},
         {"inputs", m.inputs},
         {"out", dir.string()}};
  j["seed"] = m.seed ? json(*m.seed) : json(nullptr);
  write_file_bytes(dir / "manifest.json", dump_json(j));
}

void write_json(const fs::path& p, const json& j) { write_file_bytes(p, dump_json(j)); }

Matrix entry_matrix(const NamedTensorSet& set, const std::string& name) {
  const Tensor& t = set.at(name);
  if (t.rank() != 2) throw FormatError("entry '" + name + "' must be rank 2");
  return Matrix::from_tensor(t);
}

// An activation file either carries raw network inputs under "inputs" (the
// layers are then captured with one forward pass) or per-layer recordings
// "<layer>.x" / "<layer>.y".
Captures load_captures(const Network& net, const NamedTensorSet& set, const std::string& what) {
  if (set.contains("inputs")) {
    const Matrix inputs = entry_matrix(set, "inputs");
    if (inputs.cols() != net.input_dim()) {
      throw FormatError(what + ": 'inputs' has " + std::to_string(inputs.cols()) +
                        " columns, model expects " + std::to_string(net.input_dim()));
    }
    return capture(net, inputs);
  }
  Captures c;
  for (const Layer& layer : net.layers) {
    const std::string& n = layer.linear.name;
    if (!set.contains(n + ".x") || !set.contains(n + ".y")) {
      throw FormatError(what + ": no 'inputs' entry and no '" + n + ".x'/'" + n + ".y' pair");
    }
    c.push_back({n, {entry_matrix(set, n + ".x"), entry_matrix(set, n + ".y")}});
  }
  return c;
}

Matrix load_inputs(const NamedTensorSet& set, const std::string& what) {
  if (!set.contains("inputs")) throw FormatError(what + ": missing 'inputs' entry");
  return entry_matrix(set, "inputs");
}

LambdaPolicy parse_policy(const std::string& lambda, double factor) {
  LambdaPolicy policy;
  if (lambda != "auto") {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(lambda, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != lambda.size() || !(v >= 0.0) || !std::isfinite(v)) {
      throw UsageError("--lambda must be 'auto' or a finite value >= 0, got '" + lambda + "'");
    }
    policy = LambdaPolicy::fixed(v);
  }
  policy.factor = factor;
  policy.validate();
  return policy;
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  const char sep = spec.find(',') != std::string::npos ? ',' : ':';
  while (std::getline(ss, item, sep)) parts.push_back(item);
  auto num = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw UsageError("--grid: bad number '" + s + "'");
    return v;
  };
  if (sep == ',') {
    std::vector<double> g;
    for (const auto& p : parts) g.push_back(num(p));
    return g;
  }
  if (parts.size() != 3) throw UsageError("--grid expects lo:hi:count or a comma-separated list");
  const double count = num(parts[2]);
  if (count < 1 || count != std::floor(count)) throw UsageError("--grid count must be a positive integer");
  try {
    return log_grid(num(parts[0]), num(parts[1]), static_cast<std::size_t>(count));
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--grid: ") + e.what());
  }
}

// ---- gen ------------------------------------------------------------------

struct GenOptions {
  std::string preset;
  std::uint64_t seed = 0;
  double cond = 1e4;
  std::string out;
};

int cmd_gen(const GenOptions& o, std::ostream& out) {
  const fs::path dir = prepare_out(o.out);
  if (o.preset == "fig2") {
    Network net;
    Layer layer;
    layer.linear.name = "fig2";
    layer.linear.w = make_fig2_weights({}, o.seed);
    layer.linear.bias.assign(layer.linear.w.rows(), 0.0);
    net.layers.push_back(std::move(layer));
    write_set(dir / "fig2.qts", network_to_set(net));
  } else if (o.preset == "illcond") {
    IllCondOptions opts;
    opts.cond = o.cond;
    const IllCondFixture f = make_illcond(opts, o.seed);
    write_set(dir / "model.qts", network_to_set(f.net));
    const std::string n = f.net.layers.front().linear.name;
    NamedTensorSet calib, eval;
    calib.add(n + ".x", f.calib.x.to_tensor());
    calib.add(n + ".y", f.calib.y.to_tensor());
    eval.add(n + ".x", f.eval.x.to_tensor());
    eval.add(n + ".y", f.eval.y.to_tensor());
    write_set(dir / "calib.qts", calib);
    write_set(dir / "eval.qts", eval);
  } else {
    const TeacherFixture f = make_teacher({}, o.seed);
    write_set(dir / "teacher.qts", network_to_set(f.teacher));
    NamedTensorSet inputs;
    inputs.add("inputs", f.inputs.to_tensor());
    write_set(dir / "inputs.qts", inputs);
  }
  write_manifest(dir, {"gen", {"--preset", o.preset, "--seed", std::to_string(o.seed), "--cond", fmt_double(o.cond)}, {}, o.seed});
  out << "gen " << o.preset << " -> " << dir.string() << "\n";
  return kExitOk;
}

// ---- calibrate ------------------------------------------------------------

struct CalibrateOptions {
  std::string model;
  std::string acts;
  std::string eval;
  std::string lambda = "auto";
  double factor = 5.0;
  std::string out;
};

int cmd_calibrate(const CalibrateOptions& o, std::ostream& out) {
  const LambdaPolicy policy = parse_policy(o.lambda, o.factor);
  const Network net = network_from_set(read_set(o.model));
  const Captures captures = load_captures(net, read_set(o.acts), "activations");
  std::optional<Captures> eval;
  if (!o.eval.empty()) eval = load_captures(net, read_set(o.eval), "eval");

  const CalibratedNetwork cal = calibrate_model(net, captures, policy, eval ? &*eval : nullptr);

  const fs::path dir = prepare_out(o.out);
  write_set(dir / "model.qts", network_to_set(cal.net));
  std::map<std::string, std::string> digests{{"model", file_digest(o.model)}, {"activations", file_digest(o.acts)}};
  Manifest m{"calibrate", {absolute(o.model), absolute(o.acts), "--lambda", o.lambda, "--factor", fmt_double(o.factor)},
             {{"model", absolute(o.model)}, {"activations", absolute(o.acts)}}, std::nullopt};
  if (!o.eval.empty()) {
    digests["eval"] = file_digest(o.eval);
    m.args.insert(m.args.end(), {"--eval", absolute(o.eval)});
    m.inputs["eval"] = absolute(o.eval);
  }
  json layers = json::array();
  for (const auto& r : cal.reports) layers.push_back(to_json(r));
  write_json(dir / "reports.json",
             make_report(digests, {{"lambda", o.lambda}, {"factor", o.factor}, {"layers", std::move(layers)}}));
  write_manifest(dir, m);
  for (const auto& r : cal.reports) {
    out << r.layer << ": lambda " << fmt_double(r.lambda) << " (" << rationale_name(r.rationale) << "), cond "
        << fmt_double(r.condition_number) << "\n";
  }
  return kExitOk;
}

// ---- quantize -------------------------------------------------------------

struct QuantizeOptions {
  std::string model;
  std::string acts;
  int wbits = 8;
  int abits = 0;
  std::string scheme = "minmax";
  double alpha = 3.0;
  bool per_axis = false;
  std::string out;
};

struct Quantized {
  Observation obs;
  Tensor codes;
  double mse;
  double max_roundtrip_error;
};

Quantized quantize_with(const Matrix& x, const QuantSpec& spec, const std::string& scheme, double alpha) {
  TensorQuantConfig cfg{true, spec, scheme == "sigma" ? QuantScheme::Sigma : QuantScheme::MinMax, alpha};
  Observation obs = observe(x, cfg);
  const ClipStats* clip = obs.clip ? &*obs.clip : nullptr;
  const Matrix fq = fake_quantize(x, obs.params, clip);
  Tensor codes = quantize(fq, obs.params);
  const double mse = quantization_mse(x, obs.params, clip);
  Quantized q{std::move(obs), std::move(codes), mse, 0.0};
  clip = q.obs.clip ? &*q.obs.clip : nullptr;
  const Granularity& g = spec.granularity;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      std::size_t group = 0;
      if (const auto* a = std::get_if<PerAxis>(&g)) group = a->axis == 0 ? r : c;
      const Window w = effective_window(q.obs.params, clip, group);
      const double target = std::clamp(x(r, c), w.lo, w.hi);
      q.max_roundtrip_error = std::max(q.max_roundtrip_error, std::abs(fq(r, c) - target));
    }
  }
  return q;
}

json quantized_json(const Quantized& q) {
  json j{{"params", to_json(q.obs.params)},
         {"occupancy", bin_occupancy(q.codes, q.obs.params.spec)},
         {"mse", q.mse},
         {"max_roundtrip_error", q.max_roundtrip_error}};
  if (q.obs.clip) j["clip"] = to_json(*q.obs.clip);
  return j;
}

void add_params(NamedTensorSet& set, const std::string& prefix, const Quantized& q) {
  const auto& p = q.obs.params;
  const std::size_t g = p.groups();
  set.add(prefix + ".scale", Tensor::from_f64({g}, p.scale));
  set.add(prefix + ".zero_point", Tensor::i32({g}, p.zero_point));
  set.add(prefix + ".codes", q.codes);
}

int cmd_quantize(const QuantizeOptions& o, std::ostream& out) {
  if (o.abits != 0 && (o.abits < 2 || o.abits > 8)) throw UsageError("--abits must be in [2, 8]");
  if (o.abits != 0 && o.acts.empty()) throw UsageError("--abits needs --acts");
  if (!(o.alpha > 0.0)) throw UsageError("--alpha must be positive");
  const Network net = network_from_set(read_set(o.model));
  std::optional<Captures> captures;
  if (o.abits != 0) captures = load_captures(net, read_set(o.acts), "activations");

  const QuantSpec wspec{o.wbits, true, o.per_axis ? Granularity{PerAxis{0}} : Granularity{PerTensor{}}};
  const QuantSpec aspec{o.abits == 0 ? 8 : o.abits, true, PerTensor{}};
  NamedTensorSet params;
  json layers = json::array();
  for (const Layer& layer : net.layers) {
    const std::string& n = layer.linear.name;
    const Quantized wq = quantize_with(layer.linear.w, wspec, o.scheme, o.alpha);
    add_params(params, n + ".w", wq);
    json lj{{"layer", n}, {"weight", quantized_json(wq)}};
    if (captures) {
      const Quantized aq = quantize_with(find_batch(*captures, n).x, aspec, o.scheme, o.alpha);
      add_params(params, n + ".a", aq);
      lj["activation"] = quantized_json(aq);
    }
    out << n << ": weight mse " << fmt_double(wq.mse) << "\n";
    layers.push_back(std::move(lj));
  }

  const fs::path dir = prepare_out(o.out);
  write_set(dir / "params.qts", params);
  std::map<std::string, std::string> digests{{"model", file_digest(o.model)}};
  Manifest m{"quantize",
             {absolute(o.model), "--wbits", std::to_string(o.wbits), "--abits", std::to_string(o.abits), "--scheme",
              o.scheme, "--alpha", fmt_double(o.alpha)},
             {{"model", absolute(o.model)}},
             std::nullopt};
  if (o.per_axis) m.args.push_back("--per-axis");
  if (!o.acts.empty()) {
    digests["activations"] = file_digest(o.acts);
    m.args.insert(m.args.end(), {"--acts", absolute(o.acts)});
    m.inputs["activations"] = absolute(o.acts);
  }
  write_json(dir / "occupancy.json",
             make_report(digests, {{"scheme", o.scheme}, {"alpha", o.alpha}, {"layers", std::move(layers)}}));
  write_manifest(dir, m);
  return kExitOk;
}

// ---- sweep ----------------------------------------------------------------

struct SweepOptions {
  std::string model;
  std::string calib;
  std::string eval;
  std::string grid = "1e-8:1e3:25";
  int bits = 3;
  std::string out;
};

int cmd_sweep(const SweepOptions& o, std::ostream& out) {
  const std::vector<double> grid = parse_grid(o.grid);
  const Network net = network_from_set(read_set(o.model));
  const Captures calib = load_captures(net, read_set(o.calib), "calib");
  const Captures eval = load_captures(net, read_set(o.eval), "eval");
  const QuantSpec spec{o.bits, true, PerTensor{}};

  std::string csv = "layer,lambda,heldout_l2,quant_mse,frob_norm,residual\n";
  json layers = json::array();
  for (const Layer& layer : net.layers) {
    const std::string& n = layer.linear.name;
    const CalibrationBatch& cb = find_batch(calib, n);
    const SweepResult s = lambda_sweep(layer.linear, cb, find_batch(eval, n), grid, spec);
    for (const SweepPoint& p : s.points) {
      csv += n + "," + fmt_double(p.lambda) + "," + fmt_double(p.heldout_l2) + "," + fmt_double(p.quant_mse) + "," +
             fmt_double(p.frob_norm) + "," + fmt_double(p.residual) + "\n";
    }
    json lj = to_json(s);
    lj["auto"] = to_json(select_lambda(svd(cb.x).s, LambdaPolicy{}));
    layers.push_back(std::move(lj));
    out << n << ": " << s.points.size() << " grid points\n";
  }

  const fs::path dir = prepare_out(o.out);
  write_file_bytes(dir / "sweep.csv", csv);
  write_json(dir / "sweep.json",
             make_report({{"model", file_digest(o.model)}, {"calib", file_digest(o.calib)}, {"eval", file_digest(o.eval)}},
                         {{"layers", std::move(layers)}}));
  write_manifest(dir, {"sweep",
                       {absolute(o.model), absolute(o.calib), absolute(o.eval), "--grid", o.grid, "--bits",
                        std::to_string(o.bits)},
                       {{"model", absolute(o.model)}, {"calib", absolute(o.calib)}, {"eval", absolute(o.eval)}},
                       std::nullopt});
  return kExitOk;
}

// ---- qat ------------------------------------------------------------------

struct QatOptions {
  std::string teacher;
  std::string inputs;
  std::string init = "minmax";
  int wbits = 2;
  int abits = 4;
  std::string scheme = "sigma";
  double alpha = 3.0;
  int steps = 500;
  std::uint64_t seed = 0;
  double lr = TrainConfig{}.learning_rate;
  std::size_t batch = 0;
  std::string observer = "per-step";
  int freeze_after = 0;
  double factor = 5.0;
  std::string out;
};

int cmd_qat(const QatOptions& o, std::ostream& out) {
  const Network teacher = network_from_set(read_set(o.teacher));
  const Matrix inputs = load_inputs(read_set(o.inputs), "inputs");

  ExperimentConfig cfg;
  cfg.qconfig = make_wa_config(o.wbits, o.abits, o.scheme == "sigma" ? QuantScheme::Sigma : QuantScheme::MinMax, o.alpha);
  cfg.train.seed = o.seed;
  cfg.train.steps = o.steps;
  cfg.train.learning_rate = o.lr;
  cfg.train.batch_size = o.batch;
  cfg.train.observer_mode = o.observer == "frozen" ? ObserverMode::FrozenAfterN : ObserverMode::PerStep;
  cfg.train.freeze_after = o.freeze_after;
  cfg.policy.factor = o.factor;
  try {
    cfg.train.validate();
    cfg.policy.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const InitMode init = o.init == "calibrated" ? InitMode::Calibrated : InitMode::MinMax;
  const ExperimentResult r = run_experiment(teacher, init, {inputs, inputs}, cfg);

  const fs::path dir = prepare_out(o.out);
  std::string csv = "step,loss\n";
  for (std::size_t i = 0; i < r.loss.size(); ++i) csv += std::to_string(i) + "," + fmt_double(r.loss[i]) + "\n";
  write_file_bytes(dir / "loss.csv", csv);
  write_set(dir / "model.qts", network_to_set(r.student.net));
  json calib = json::array();
  for (const auto& c : r.calibration) calib.push_back(to_json(c));
  write_json(dir / "qat.json",
             make_report({{"teacher", file_digest(o.teacher)}, {"inputs", file_digest(o.inputs)}},
                         {{"init", o.init},
                          {"config", {{"wbits", o.wbits}, {"abits", o.abits}, {"scheme", o.scheme}, {"alpha", o.alpha},
                                      {"steps", o.steps}, {"learning_rate", o.lr}, {"batch_size", o.batch},
                                      {"observer", o.observer}, {"freeze_after", o.freeze_after}}},
                          {"initial_loss", r.loss.front()},
                          {"final_loss", r.final_loss},
                          {"calibration", std::move(calib)}}));
  write_manifest(dir, {"qat",
                       {absolute(o.teacher), absolute(o.inputs), "--init", o.init, "--wbits", std::to_string(o.wbits),
                        "--abits", std::to_string(o.abits), "--scheme", o.scheme, "--alpha", fmt_double(o.alpha),
                        "--steps", std::to_string(o.steps), "--seed", std::to_string(o.seed), "--lr", fmt_double(o.lr),
                        "--batch", std::to_string(o.batch), "--observer", o.observer, "--freeze-after",
                        std::to_string(o.freeze_after), "--factor", fmt_double(o.factor)},
                       {{"teacher", absolute(o.teacher)}, {"inputs", absolute(o.inputs)}},
                       o.seed});
  out << "qat " << o.init << " W" << o.wbits << "A" << o.abits << ": final loss " << fmt_double(r.final_loss) << "\n";
  return kExitOk;
}

// ---- dispatch -------------------------------------------------------------

int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err, bool allow_replay);

struct ReplayOptions {
  std::string manifest;
  std::string out;
};

int cmd_replay(const ReplayOptions& o, std::ostream& out, std::ostream& err) {
  json m;
  try {
    m = json::parse(read_file_bytes(o.manifest));
  } catch (const json::exception& e) {
    throw FormatError("manifest '" + o.manifest + "' is not valid JSON: " + e.what());
  }
  if (!m.is_object() || !m.contains("subcommand") || !m.contains("args") || !m.contains("out")) {
    throw FormatError("manifest '" + o.manifest + "' lacks subcommand/args/out");
  }
  if (m.value("tool_version", "") != kToolVersion) {
    err << "qcal: warning: manifest written by '" << m.value("tool_version", "?") << "', replaying with '"
        << kToolVersion << "'\n";
  }
  std::vector<std::string> args{m["subcommand"].get<std::string>()};
  for (const auto& a : m["args"]) args.push_back(a.get<std::string>());
  args.push_back("--out");
  args.push_back(o.out.empty() ? m["out"].get<std::string>() : o.out);
  return dispatch(std::move(args), out, err, false);
}

int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err, bool allow_replay) {
  CLI::App app{"Post-training calibration and quantization toolkit for linear layers", "qcal"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Write a seeded synthetic fixture");
  g->add_option("--preset", gen.preset, "fig2 | illcond | teacher")->required()->check(CLI::IsMember({"fig2", "illcond", "teacher"}));
  g->add_option("--seed", gen.seed, "Generator seed");
  g->add_option("--cond", gen.cond, "Requested condition number (illcond)")->check(CLI::PositiveNumber);
  g->add_option("--out", gen.out, "Output directory")->required();

  CalibrateOptions cal;
  auto* c = app.add_subcommand("calibrate", "Replace each layer's weights by the regularized projection");
  c->add_option("model", cal.model, "Model .qts")->required()->check(CLI::ExistingFile);
  c->add_option("activations", cal.acts, "Activations or inputs .qts")->required()->check(CLI::ExistingFile);
  c->add_option("--eval", cal.eval, "Held-out activations .qts")->check(CLI::ExistingFile);
  c->add_option("--lambda", cal.lambda, "auto or a fixed value");
  c->add_option("--factor", cal.factor, "Multiple of the selected singular value");
  c->add_option("--out", cal.out, "Output directory")->required();

  QuantizeOptions q;
  auto* qz = app.add_subcommand("quantize", "Observe and quantize weights (and activations)");
  qz->add_option("model", q.model, "Model .qts")->required()->check(CLI::ExistingFile);
  qz->add_option("--acts", q.acts, "Activations or inputs .qts")->check(CLI::ExistingFile);
  qz->add_option("--wbits", q.wbits, "Weight bits")->check(CLI::Range(2, 8));
  qz->add_option("--abits", q.abits, "Activation bits (0 = off)");
  qz->add_option("--scheme", q.scheme, "minmax | sigma")->check(CLI::IsMember({"minmax", "sigma"}));
  qz->add_option("--alpha", q.alpha, "Sigma clipping multiplier");
  qz->add_flag("--per-axis", q.per_axis, "One scale per output row");
  qz->add_option("--out", q.out, "Output directory")->required();

  SweepOptions s;
  auto* sw = app.add_subcommand("sweep", "Evaluate calibration over a lambda grid");
  sw->add_option("model", s.model, "Model .qts")->required()->check(CLI::ExistingFile);
  sw->add_option("calib", s.calib, "Calibration activations .qts")->required()->check(CLI::ExistingFile);
  sw->add_option("eval", s.eval, "Held-out activations .qts")->required()->check(CLI::ExistingFile);
  sw->add_option("--grid", s.grid, "lo:hi:count (log-spaced) or a comma-separated list");
  sw->add_option("--bits", s.bits, "Bits for the quantization error")->check(CLI::Range(2, 8));
  sw->add_option("--out", s.out, "Output directory")->required();

  QatOptions t;
  auto* qa = app.add_subcommand("qat", "Train a fake-quantized student against a teacher");
  qa->add_option("teacher", t.teacher, "Teacher model .qts")->required()->check(CLI::ExistingFile);
  qa->add_option("inputs", t.inputs, "Inputs .qts (entry 'inputs')")->required()->check(CLI::ExistingFile);
  qa->add_option("--init", t.init, "minmax | calibrated")->check(CLI::IsMember({"minmax", "calibrated"}));
  qa->add_option("--wbits", t.wbits, "Weight bits")->check(CLI::Range(2, 8));
  qa->add_option("--abits", t.abits, "Activation bits")->check(CLI::Range(2, 8));
  qa->add_option("--scheme", t.scheme, "minmax | sigma")->check(CLI::IsMember({"minmax", "sigma"}));
  qa->add_option("--alpha", t.alpha, "Sigma clipping multiplier")->check(CLI::PositiveNumber);
  qa->add_option("--steps", t.steps, "Training steps");
  qa->add_option("--seed", t.seed, "Data-order seed");
  qa->add_option("--lr", t.lr, "Learning rate");
  qa->add_option("--batch", t.batch, "Mini-batch rows (0 = full batch)");
  qa->add_option("--observer", t.observer, "per-step | frozen")->check(CLI::IsMember({"per-step", "frozen"}));
  qa->add_option("--freeze-after", t.freeze_after, "Step whose observations are pinned (frozen)");
  qa->add_option("--factor", t.factor, "Lambda factor for calibrated init");
  qa->add_option("--out", t.out, "Output directory")->required();

  ReplayOptions rp;
  auto* re = app.add_subcommand("replay", "Rerun a command from its manifest.json");
  re->add_option("manifest", rp.manifest, "manifest.json")->required()->check(CLI::ExistingFile);
  re->add_option("--out", rp.out, "Output directory (default: the recorded one)");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  if (g->parsed()) return cmd_gen(gen, out);
  if (c->parsed()) return cmd_calibrate(cal, out);
  if (qz->parsed()) return cmd_quantize(q, out);
  if (sw->parsed()) return cmd_sweep(s, out);
  if (qa->parsed()) return cmd_qat(t, out);
  if (!allow_replay) throw FormatError("a manifest cannot replay another replay");
  return cmd_replay(rp, out, err);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err, true);
  } catch (const UsageError& e) {
    err << "qcal: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "qcal: format error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "qcal: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "qcal: invalid input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "qcal: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "qcal: internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace qcal::cli
