#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "logpen/cli.hpp"
#include "logpen/io.hpp"
#include "logpen/problem_spec.hpp"
#include "test_support.hpp"

namespace logpen {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

class Workdir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path("io_cli_scratch") / ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  fs::path write_config(const ProblemSpec& s, const std::string& name = "case.json") {
    const fs::path p = dir_ / name;
    std::ofstream(p) << s.to_json().dump(2);
    return p;
  }
  // Runs the CLI in-process and returns its exit code; stdout must stay empty.
  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "logpen");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    ::testing::internal::CaptureStdout();
    const int rc = cli::run(static_cast<int>(argv.size()), argv.data());
    EXPECT_EQ(::testing::internal::GetCapturedStdout(), "");
    return rc;
  }
  fs::path dir_;
};

ProblemSpec gausson_spec() {
  ProblemSpec s;
  s.potential = testing::constant_potential(1);
  s.lambda = Region{1, {-9, 0}, {9, 0}};
  s.h = 0.01;
  return s;
}

ProblemSpec well_spec() {
  ProblemSpec s;
  s.potential = testing::capped_quadratic(1, {0.5, 0}, 4.0);
  s.lambda = Region{1, {-1, 0}, {2, 0}};
  s.h = 0.1;
  s.eps_list = {1.0, 0.5, 0.25};
  return s;
}

TEST(WriteCsv, OneRow) {
  SweepRow r;
  r.eps = 0.5;
  r.c_eps = 2.5;
  r.eta = {0.5, 0};
  r.a0 = 0.17;
  r.equivalent = true;
  r.iters = 12;
  r.box_used = "-8:8";
  const fs::path p = fs::path("io_cli_scratch") / "one_row.csv";
  write_csv({r}, p);
  const auto l = lines(slurp(p));
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[0], "eps,c_eps,eta,V_eta,sup_outside,a0,equivalent,residual,iters,box_used");
  EXPECT_EQ(l[1], "0.5,2.5,0.5,0,0,0.17,true,0,12,-8:8");
  EXPECT_THROW(write_csv({}, p), IoError);
}

TEST(WriteCsv, TwoDimensionalEta) {
  SweepRow r;
  r.dim = 2;
  r.eta = {0.25, -1.5};
  EXPECT_NE(sweep_csv({r}).find(",0.25;-1.5,"), std::string::npos);
}

TEST(WriteField, ZeroFieldOnThreeCells) {
  const Grid g = build_grid(1, {0, 0}, {1, 0}, 0.3);
  const fs::path p = fs::path("io_cli_scratch") / "zero.txt";
  write_field(ScalarField(g), p);
  const auto l = lines(slurp(p));
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0], "0.15,0");
  EXPECT_EQ(l[2], "0.75,0");
  const auto meta = nlohmann::json::parse(slurp(p.string() + ".json"));
  EXPECT_EQ(meta["n_cells"][0], 3);
  EXPECT_TRUE(meta["adjusted"].get<bool>());
}

TEST(WriteField, RoundTrip) {
  const Grid g = build_grid(2, {-1, -1}, {1, 1}, 0.25);
  const ScalarField f = sample(g, [](const Point& x) { return std::exp(-x[0] * x[0]) * (1 + x[1]); });
  const fs::path p = fs::path("io_cli_scratch") / "field2d.txt";
  write_field(f, p);
  const ScalarField back = read_field(g, p);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(back[k], f[k], 1e-11 * (1 + std::abs(f[k])));
  const std::string first = lines(slurp(p)).front();
  EXPECT_EQ(std::count(first.begin(), first.end(), ','), 2);
  EXPECT_THROW(read_field(build_grid(1, {0, 0}, {1, 0}, 0.5), p), IoError);
}

TEST(WriteAtomic, UnwritableTarget) {
  EXPECT_THROW(write_atomic("/proc/definitely/not/here.txt", "x"), IoError);
}

TEST(Config, RoundTripIsFixedPoint) {
  for (ProblemSpec s : {gausson_spec(), well_spec()}) {
    s.solver.restarts = 4;
    s.solver.preconditioner = Preconditioner::mass;
    s.rng_seed = 99;
    const std::string once = s.to_json().dump();
    const ProblemSpec back = parse_problem_spec(once);
    EXPECT_EQ(back.to_json().dump(), once);
    EXPECT_EQ(parse_problem_spec(back.to_json().dump()), back);
  }
  ProblemSpec t = well_spec();
  t.potential.kind = PotentialKind::tabulated;
  t.potential.table_lo = {-2, 0};
  t.potential.table_h = {0.5, 1};
  t.potential.table_n = {9, 1};
  t.potential.table = {4, 2.25, 1, 0.25, 0, 0.25, 1, 2.25, 4};
  const std::string once = t.to_json().dump();
  EXPECT_EQ(parse_problem_spec(once).to_json().dump(), once);
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_problem_spec("{not json"), ConfigError);
  EXPECT_THROW(parse_problem_spec(R"({"dim": 3})"), ConfigError);
  nlohmann::json j = well_spec().to_json();
  j.erase("h");
  EXPECT_THROW(problem_spec_from_json(j), ConfigError);

  ProblemSpec s = well_spec();
  s.eps_list = {0.5, 1.0};
  EXPECT_THROW(validate(s), ConfigError);
  s = well_spec();
  s.potential.V0 = -1.5;
  EXPECT_THROW(validate(s), HypothesisViolation);
  s = well_spec();
  s.lambda = Region{1, {3, 0}, {5, 0}};
  EXPECT_THROW(validate(s), HypothesisViolation);
  s = well_spec();
  s.h = 3.0;
  EXPECT_THROW(validate(s), ConfigError);
}

TEST_F(Workdir, ExitCodes) {
  EXPECT_EQ(run({}), cli::kConfigError);
  EXPECT_EQ(run({"frobnicate"}), cli::kConfigError);
  EXPECT_EQ(run({"solve"}), cli::kConfigError);
  EXPECT_EQ(run({"solve", "--config", (dir_ / "missing.json").string()}), cli::kConfigError);
  std::ofstream(dir_ / "broken.json") << "{ \"dim\": ";
  EXPECT_EQ(run({"sweep", "--config", (dir_ / "broken.json").string()}), cli::kConfigError);
  ProblemSpec bad = well_spec();
  bad.potential.V0 = -2.0;
  EXPECT_EQ(run({"solve", "--config", write_config(bad).string()}), cli::kConfigError);
  EXPECT_EQ(run({"--help"}), cli::kOk);
}

TEST_F(Workdir, ValidateGausson) {
  const fs::path cfg = write_config(gausson_spec());
  const fs::path out = dir_ / "out";
  ASSERT_EQ(run({"validate-gausson", "--config", cfg.string(), "--out", out.string()}), cli::kOk);
  const auto j = nlohmann::json::parse(slurp(out / "gausson.json"));
  EXPECT_LE(j["abs_diff"].get<double>(), 2e-3);
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_EQ(lines(slurp(out / "gausson.txt")).size(), 1600u);
  ProblemSpec well = well_spec();
  EXPECT_EQ(run({"validate-gausson", "--config", write_config(well, "w.json").string(), "--out", out.string()}),
            cli::kConfigError);
}

TEST_F(Workdir, SweepWritesSchema) {
  const fs::path cfg = write_config(well_spec());
  const fs::path out = dir_ / "results";
  ASSERT_EQ(run({"sweep", "--config", cfg.string(), "--out", out.string()}), cli::kOk);
  const auto l = lines(slurp(out / "sweep.csv"));
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0], kSweepHeader);
  for (std::size_t i = 1; i < l.size(); ++i) EXPECT_EQ(std::count(l[i].begin(), l[i].end(), ','), 9);
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_TRUE(summary["passed"].get<bool>());
  EXPECT_EQ(summary["rows"].size(), 3u);
  EXPECT_TRUE(fs::exists(out / "field_2.txt"));
  EXPECT_TRUE(fs::exists(out / "field_2.txt.json"));
}

TEST_F(Workdir, SeedAndSpacingOverrides) {
  ProblemSpec s = well_spec();
  s.eps_list = {1.0};
  s.solver.restarts = 2;
  const fs::path cfg = write_config(s);
  ASSERT_EQ(run({"solve", "--config", cfg.string(), "--out", (dir_ / "a").string(), "--h", "0.05"}), cli::kOk);
  const auto j = nlohmann::json::parse(slurp(dir_ / "a" / "solve.json"));
  EXPECT_DOUBLE_EQ(j["grid"]["h"][0].get<double>(), 0.05);
  EXPECT_TRUE(j["converged"].get<bool>());
  ASSERT_EQ(run({"solve", "--config", cfg.string(), "--out", (dir_ / "b").string(), "--seed", "5"}), cli::kOk);
  ASSERT_EQ(run({"solve", "--config", cfg.string(), "--out", (dir_ / "c").string(), "--seed", "5"}), cli::kOk);
  EXPECT_EQ(slurp(dir_ / "b" / "solution.txt"), slurp(dir_ / "c" / "solution.txt"));
}

TEST_F(Workdir, IdentityAndLogBound) {
  ProblemSpec s = gausson_spec();
  s.h = 0.05;
  const fs::path cfg = write_config(s);
  ASSERT_EQ(run({"identity-suite", "--config", cfg.string(), "--out", dir_.string()}), cli::kOk);
  const auto id = nlohmann::json::parse(slurp(dir_ / "identity.json"));
  EXPECT_LT(id["max_relative_gap_random"].get<double>(), 1e-10);
  ASSERT_EQ(run({"log-bound", "--config", cfg.string(), "--out", dir_.string()}), cli::kOk);
  const auto lb = nlohmann::json::parse(slurp(dir_ / "log_bound.json"));
  EXPECT_EQ(lb["violations"].get<int>(), 0);
}

TEST_F(Workdir, Selftest) {
  EXPECT_EQ(run({"selftest", "--out", dir_.string()}), cli::kOk);
  const auto j = nlohmann::json::parse(slurp(dir_ / "selftest.json"));
  EXPECT_GE(j.size(), 6u);
  for (const auto& c : j) EXPECT_TRUE(c["passed"].get<bool>()) << c["name"];
}

}  // namespace
}  // namespace logpen
