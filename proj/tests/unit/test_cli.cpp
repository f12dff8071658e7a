#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "qcal/linalg.hpp"
#include "qcal/network.hpp"
#include "qcal/quant.hpp"
#include "qcal/tensor_io.hpp"
#include "qcal_cli/cli.hpp"
#include "support/oracles.hpp"

using namespace qcal;
using nlohmann::json;
using qcal::testing::TempDir;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome qcal_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

json read_json(const std::string& path) { return json::parse(read_file_bytes(path)); }

std::vector<std::string> csv_column(const std::string& path, std::size_t col) {
  std::istringstream in(read_file_bytes(path));
  std::string line;
  std::getline(in, line);
  std::vector<std::string> out;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string cell;
    for (std::size_t i = 0; i <= col; ++i) std::getline(cells, cell, ',');
    out.push_back(cell);
  }
  return out;
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(qcal_run({}).code, cli::kExitUsage);
  EXPECT_EQ(qcal_run({"bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(qcal_run({"gen", "--preset", "nope", "--out", "/tmp/x"}).code, cli::kExitUsage);
  EXPECT_EQ(qcal_run({"--help"}).code, cli::kExitOk);
}

TEST(Cli, GenIsDeterministic) {
  TempDir d("gen");
  for (const char* preset : {"fig2", "illcond", "teacher"}) {
    ASSERT_EQ(qcal_run({"gen", "--preset", preset, "--seed", "3", "--out", d.str("a")}).code, 0);
    ASSERT_EQ(qcal_run({"gen", "--preset", preset, "--seed", "3", "--out", d.str("b")}).code, 0);
    ASSERT_EQ(qcal_run({"gen", "--preset", preset, "--seed", "4", "--out", d.str("c")}).code, 0);
    for (const auto& e : std::filesystem::directory_iterator(d.path() / "a")) {
      if (e.path().extension() != ".qts") continue;
      const auto name = e.path().filename();
      EXPECT_EQ(read_file_bytes(e.path()), read_file_bytes(d.path() / "b" / name)) << preset;
      EXPECT_NE(read_file_bytes(e.path()), read_file_bytes(d.path() / "c" / name)) << preset;
    }
    std::filesystem::remove_all(d.path());
    std::filesystem::create_directories(d.path());
  }
}

TEST(Cli, Fig2WeightsAreHeavyTailed) {
  TempDir d("fig2");
  ASSERT_EQ(qcal_run({"gen", "--preset", "fig2", "--out", d.str("")}).code, 0);
  const Network net = network_from_set(read_set(d.str("fig2.qts")));
  const Matrix& w = net.layers.at(0).linear.w;
  ASSERT_EQ(w.rows(), 64u);
  ASSERT_EQ(w.cols(), 64u);
  std::size_t outliers = 0;
  for (double v : w.values())
    if (std::abs(v) > 0.2) ++outliers;
  EXPECT_EQ(outliers, 20u);  // round(0.005 * 4096)
  EXPECT_NEAR(max_abs(w), 0.5, 1e-7);
}

TEST(Cli, IllcondHasRequestedCondition) {
  TempDir d("ill");
  ASSERT_EQ(qcal_run({"gen", "--preset", "illcond", "--cond", "1e5", "--out", d.str("")}).code, 0);
  const NamedTensorSet calib = read_set(d.str("calib.qts"));
  const double cond = condition_number(Matrix::from_tensor(calib.at("proj.x")));
  EXPECT_GT(cond, 0.5e5);
  EXPECT_LT(cond, 2e5);
}

TEST(Cli, CalibrateWritesModelAndReport) {
  TempDir d("cal");
  ASSERT_EQ(qcal_run({"gen", "--preset", "illcond", "--out", d.str("g")}).code, 0);
  const auto r = qcal_run({"calibrate", d.str("g/model.qts"), d.str("g/calib.qts"), "--eval", d.str("g/eval.qts"),
                           "--out", d.str("c")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json rep = read_json(d.str("c/reports.json"));
  EXPECT_EQ(rep["tool_version"], "qcal 0.1.0");
  EXPECT_EQ(rep["input_digests"]["model"].get<std::string>().size(), 64u);
  const json& layer = rep["results"]["layers"][0];
  EXPECT_EQ(layer["layer"], "proj");
  EXPECT_TRUE(layer.contains("heldout_residual"));

  // lambda is recomputed independently from the stored activations
  const Matrix x = Matrix::from_tensor(read_set(d.str("g/calib.qts")).at("proj.x"));
  const SvdResult f = svd(x);
  double smin = f.s.front();
  for (double v : f.s)
    if (v > 1e-6 * f.s.front()) smin = std::min(smin, v);
  const double cond = f.s.front() / smin;
  EXPECT_NEAR(layer["condition_number"].get<double>(), cond, 1e-9 * cond);
  if (cond <= 1e4) EXPECT_NEAR(layer["lambda"].get<double>(), 5.0 * smin, 1e-12);

  const Network cal = network_from_set(read_set(d.str("c/model.qts")));
  EXPECT_EQ(cal.layers.size(), 1u);
  EXPECT_TRUE(std::filesystem::exists(d.str("c/manifest.json")));
}

TEST(Cli, CalibrateZeroLambdaOnRankDeficientExitsNumerical) {
  TempDir d("cal0");
  ASSERT_EQ(qcal_run({"gen", "--preset", "illcond", "--cond", "1e7", "--out", d.str("g")}).code, 0);
  const auto r = qcal_run({"calibrate", d.str("g/model.qts"), d.str("g/calib.qts"), "--lambda", "0", "--out",
                           d.str("c")});
  EXPECT_EQ(r.code, cli::kExitNumerical);
  EXPECT_NE(r.err.find("rank deficient"), std::string::npos);
  EXPECT_EQ(qcal_run({"calibrate", d.str("g/model.qts"), d.str("g/calib.qts"), "--lambda", "-1", "--out",
                      d.str("c")}).code,
            cli::kExitUsage);
}

TEST(Cli, QuantizeRoundTripWithinHalfStep) {
  TempDir d("quant");
  ASSERT_EQ(qcal_run({"gen", "--preset", "teacher", "--out", d.str("g")}).code, 0);
  for (const bool per_axis : {false, true}) {
    std::vector<std::string> args{"quantize", d.str("g/teacher.qts"), "--acts", d.str("g/inputs.qts"), "--wbits",
                                  "4", "--abits", "8", "--scheme", "minmax", "--out", d.str("q")};
    if (per_axis) args.push_back("--per-axis");
    const auto r = qcal_run(args);
    ASSERT_EQ(r.code, 0) << r.err;
    const Network net = network_from_set(read_set(d.str("g/teacher.qts")));
    const NamedTensorSet p = read_set(d.str("q/params.qts"));
    for (const Layer& l : net.layers) {
      const std::string n = l.linear.name;
      const std::vector<double> scale = p.at(n + ".w.scale").to_f64();
      const auto zp = p.at(n + ".w.zero_point").i32_data();
      QuantParams qp{{4, true, per_axis ? Granularity{PerAxis{0}} : Granularity{PerTensor{}}},
                     scale,
                     {zp.begin(), zp.end()}};
      const Matrix deq = dequantize(p.at(n + ".w.codes"), qp);
      for (std::size_t i = 0; i < deq.rows(); ++i)
        for (std::size_t j = 0; j < deq.cols(); ++j)
          EXPECT_LE(std::abs(deq(i, j) - l.linear.w(i, j)), scale[per_axis ? i : 0] / 2 * (1 + 1e-6) + 1e-7);
      EXPECT_TRUE(p.contains(n + ".a.codes"));
    }
    const json occ = read_json(d.str("q/occupancy.json"));
    for (const auto& l : occ["results"]["layers"]) {
      std::size_t total = 0;
      for (const auto& c : l["weight"]["occupancy"]) total += c.get<std::size_t>();
      EXPECT_GT(total, 0u);
      double max_scale = 0.0;
      for (const auto& sc : l["weight"]["params"]["scale"]) max_scale = std::max(max_scale, sc.get<double>());
      EXPECT_LE(l["weight"]["max_roundtrip_error"].get<double>(), max_scale / 2 + 1e-9);
    }
  }
  EXPECT_EQ(qcal_run({"quantize", d.str("g/teacher.qts"), "--wbits", "1", "--out", d.str("q")}).code,
            cli::kExitUsage);
  EXPECT_EQ(qcal_run({"quantize", d.str("g/teacher.qts"), "--abits", "4", "--out", d.str("q")}).code,
            cli::kExitUsage);
}

TEST(Cli, SweepWritesAlignedCsvAndJson) {
  TempDir d("sweep");
  ASSERT_EQ(qcal_run({"gen", "--preset", "illcond", "--out", d.str("g")}).code, 0);
  const auto r = qcal_run({"sweep", d.str("g/model.qts"), d.str("g/calib.qts"), d.str("g/eval.qts"), "--grid",
                           "1e-4:1e2:7", "--out", d.str("s")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lambdas = csv_column(d.str("s/sweep.csv"), 1);
  ASSERT_EQ(lambdas.size(), 7u);
  EXPECT_DOUBLE_EQ(std::stod(lambdas.front()), 1e-4);
  EXPECT_DOUBLE_EQ(std::stod(lambdas.back()), 1e2);
  const json s = read_json(d.str("s/sweep.json"));
  EXPECT_EQ(s["results"]["layers"][0]["points"].size(), 7u);
  EXPECT_EQ(qcal_run({"sweep", d.str("g/model.qts"), d.str("g/calib.qts"), d.str("g/eval.qts"), "--grid",
                      "1,0.5", "--out", d.str("s")}).code,
            cli::kExitUsage);
}

TEST(Cli, QatLossCurvesArePairedAndReproducible) {
  TempDir d("qat");
  ASSERT_EQ(qcal_run({"gen", "--preset", "teacher", "--out", d.str("g")}).code, 0);
  const auto common = [&](const std::string& init, const std::string& out) {
    return qcal_run({"qat", d.str("g/teacher.qts"), d.str("g/inputs.qts"), "--init", init, "--steps", "25", "--batch",
                     "64", "--seed", "9", "--out", d.str(out)});
  };
  ASSERT_EQ(common("minmax", "m").code, 0);
  ASSERT_EQ(common("calibrated", "c").code, 0);
  ASSERT_EQ(common("calibrated", "c2").code, 0);
  EXPECT_EQ(csv_column(d.str("m/loss.csv"), 0), csv_column(d.str("c/loss.csv"), 0));
  EXPECT_EQ(csv_column(d.str("m/loss.csv"), 0).size(), 25u);
  EXPECT_EQ(read_file_bytes(d.str("c/loss.csv")), read_file_bytes(d.str("c2/loss.csv")));
  EXPECT_EQ(read_file_bytes(d.str("c/model.qts")), read_file_bytes(d.str("c2/model.qts")));
  const json q = read_json(d.str("c/qat.json"));
  EXPECT_EQ(q["results"]["calibration"].size(), 2u);
}

TEST(Cli, CorruptInputsExitWithUsage) {
  TempDir d("bad");
  ASSERT_EQ(qcal_run({"gen", "--preset", "illcond", "--out", d.str("g")}).code, 0);
  std::string bytes = read_file_bytes(d.str("g/model.qts"));
  {
    std::ofstream f(d.str("trunc.qts"), std::ios::binary);
    f << bytes.substr(0, bytes.size() / 2);
  }
  {
    bytes[0] = 'X';
    std::ofstream f(d.str("magic.qts"), std::ios::binary);
    f << bytes;
  }
  for (const char* bad : {"trunc.qts", "magic.qts"}) {
    const auto r = qcal_run({"calibrate", d.str(bad), d.str("g/calib.qts"), "--out", d.str("c")});
    EXPECT_EQ(r.code, cli::kExitUsage) << bad;
    EXPECT_FALSE(r.err.empty());
  }
  // activations for a different layer name
  EXPECT_EQ(qcal_run({"sweep", d.str("g/model.qts"), d.str("g/model.qts"), d.str("g/eval.qts"), "--out",
                      d.str("s")}).code,
            cli::kExitUsage);
}

TEST(Cli, ReplayReproducesEveryCommand) {
  TempDir d("replay");
  ASSERT_EQ(qcal_run({"gen", "--preset", "illcond", "--seed", "2", "--out", d.str("g")}).code, 0);
  ASSERT_EQ(qcal_run({"gen", "--preset", "teacher", "--seed", "2", "--out", d.str("t")}).code, 0);
  const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> runs{
      {{"calibrate", d.str("g/model.qts"), d.str("g/calib.qts"), "--eval", d.str("g/eval.qts")},
       {"model.qts", "reports.json"}},
      {{"quantize", d.str("t/teacher.qts"), "--acts", d.str("t/inputs.qts"), "--abits", "4", "--scheme", "sigma"},
       {"params.qts", "occupancy.json"}},
      {{"sweep", d.str("g/model.qts"), d.str("g/calib.qts"), d.str("g/eval.qts"), "--grid", "1e-6:1:5"},
       {"sweep.csv", "sweep.json"}},
      {{"qat", d.str("t/teacher.qts"), d.str("t/inputs.qts"), "--steps", "10", "--init", "calibrated"},
       {"loss.csv", "model.qts", "qat.json"}},
  };
  int i = 0;
  for (auto [args, files] : runs) {
    const std::string first = d.str("r" + std::to_string(i) + "a");
    const std::string second = d.str("r" + std::to_string(i) + "b");
    ++i;
    args.insert(args.end(), {"--out", first});
    ASSERT_EQ(qcal_run(args).code, 0) << args[0];
    const auto r = qcal_run({"replay", first + "/manifest.json", "--out", second});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const auto& f : files) EXPECT_EQ(read_file_bytes(first + "/" + f), read_file_bytes(second + "/" + f)) << f;
  }
  ASSERT_EQ(qcal_run({"replay", d.str("g/manifest.json"), "--out", d.str("g2")}).code, 0);
  EXPECT_EQ(read_file_bytes(d.str("g/calib.qts")), read_file_bytes(d.str("g2/calib.qts")));
}
