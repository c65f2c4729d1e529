#include "cli.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace ppg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = support::scratch_dir("cli"); }
  void TearDown() override { fs::remove_all(dir_); }

  Outcome ppg(const std::string& args, const std::string& env = "") const {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = env + " " + std::string(PPG_CLI_BINARY) + " " + args + " > " + out.string() + " 2> " +
                            err.string();
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.out = slurp(out);
    o.err = slurp(err);
    return o;
  }

  std::string gen(const std::string& kind, const std::string& sub, const std::string& extra = "") const {
    const Outcome o = ppg("gen " + kind + " --out " + (dir_ / sub).string() + " " + extra);
    EXPECT_EQ(o.code, 0) << o.err;
    return (dir_ / sub / "problem.json").string();
  }

  std::string write_config(const std::string& name, const nlohmann::json& j) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << j.dump();
    return p.string();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, GenIsSeedDeterministic) {
  for (std::string kind : {"group-lasso", "svm", "fused-lasso", "network-lasso", "glm"}) {
    const std::string extra = kind == "svm" || kind == "glm" || kind == "fused-lasso" ? "--n 50 --d 8 --seed 4" : "--seed 4";
    gen(kind, kind + "_a", extra);
    gen(kind, kind + "_b", extra);
    for (const auto& entry : fs::directory_iterator(dir_ / (kind + "_a"))) {
      const fs::path twin = dir_ / (kind + "_b") / entry.path().filename();
      EXPECT_EQ(slurp(entry.path()), slurp(twin)) << kind << " " << entry.path().filename();
    }
    gen(kind, kind + "_c", extra + "0");
    const auto data = kind == "svm" ? "train.svm" : kind == "network-lasso" ? "centers.csv" : kind == "glm" ? "X.csv" : "A.csv";
    EXPECT_NE(slurp(dir_ / (kind + "_a") / data), slurp(dir_ / (kind + "_c") / data)) << kind;
  }
}

TEST_F(CliTest, GenGroupLassoShape) {
  const std::string p = gen("group-lasso", "gl", "--m 300 --d 42 --n 3");
  const cli::Problem prob = cli::load_problem(p);
  EXPECT_EQ(prob.spec.dim, 42);
  EXPECT_EQ(prob.spec.size(), 3);
  EXPECT_EQ(prob.spec.kind, "group-lasso");
  ASSERT_TRUE(prob.suggested_alpha);
  EXPECT_EQ(read_dense_csv((dir_ / "gl" / "A.csv").string()).rows(), 300);
}

TEST_F(CliTest, GenSvmDeskShape) {
  const std::string p = gen("svm", "svm", "--n 8192 --d 128");
  const cli::Problem prob = cli::load_problem(p);
  EXPECT_EQ(prob.spec.size(), 8192);
  EXPECT_EQ(prob.spec.dim, 128);
  ASSERT_TRUE(prob.svm);
}

TEST_F(CliTest, GenRejectsBadInput) {
  EXPECT_EQ(ppg("gen nonsense --out " + (dir_ / "x").string()).code, 1);
  EXPECT_EQ(ppg("gen svm --n 0 --out " + (dir_ / "x").string()).code, 1);
  std::ofstream(dir_ / "file") << "x";
  EXPECT_EQ(ppg("gen svm --out " + (dir_ / "file" / "sub").string()).code, 1);
}

TEST_F(CliTest, SolveConvergesAndWritesMetrics) {
  const std::string p = gen("group-lasso", "gl");
  const fs::path m = dir_ / "run.csv";
  const Outcome o = ppg("solve --problem " + p + " --algo ppg --max-iters 5000 --tol 1e-12 --metrics-out " + m.string());
  EXPECT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("status converged"), std::string::npos);
  EXPECT_NE(o.out.find("objective "), std::string::npos);
  EXPECT_NE(o.out.find("residual "), std::string::npos);
  const MetricsLog log = read_metrics_csv(m.string());
  EXPECT_GT(log.size(), 1u);
  const auto meta = nlohmann::json::parse(slurp(dir_ / "run.meta.json"));
  EXPECT_EQ(meta["solver"], "ppg");
  EXPECT_EQ(meta["problem_kind"], "group-lasso");
}

TEST_F(CliTest, SolveExitCodes) {
  const std::string p = gen("group-lasso", "gl");
  EXPECT_EQ(ppg("solve --problem " + p + " --max-iters 3 --tol 1e-15").code, 2);
  const Outcome bad_algo = ppg("solve --problem " + p + " --algo newton");
  EXPECT_EQ(bad_algo.code, 1);
  EXPECT_EQ(ppg("solve --problem " + (dir_ / "missing.json").string()).code, 1);
  EXPECT_EQ(ppg("solve --bogus-flag").code, 1);
}

TEST_F(CliTest, IncompatibleAlgoNamesTheTermClass) {
  const std::string fused = gen("fused-lasso", "fl", "--n 20 --d 6");
  const Outcome spi = ppg("solve --problem " + fused + " --algo spi");
  EXPECT_EQ(spi.code, 1);
  EXPECT_NE(spi.err.find("smooth term"), std::string::npos) << spi.err;

  const Outcome pg = ppg("solve --problem " + fused + " --algo prox-grad");
  EXPECT_EQ(pg.code, 1);
  EXPECT_NE(pg.err.find("nonsmooth term"), std::string::npos) << pg.err;

  const std::string gl = gen("group-lasso", "gl");
  const Outcome spi_r = ppg("solve --problem " + gl + " --algo spi");
  EXPECT_EQ(spi_r.code, 1);
  EXPECT_NE(spi_r.err.find("r = 0"), std::string::npos) << spi_r.err;
}

TEST_F(CliTest, StepBoundIsEnforced) {
  const std::string fused = gen("fused-lasso", "fl", "--n 20 --d 6");
  const double L = cli::load_problem(fused).spec.lipschitz();
  std::ostringstream too_big, warn;
  too_big.precision(17);
  warn.precision(17);
  too_big << 2.0 / L;
  warn << 1.7 / L;
  const Outcome o = ppg("solve --problem " + fused + " --max-iters 5 --alpha " + too_big.str());
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("2/L"), std::string::npos) << o.err;
  const Outcome w = ppg("solve --problem " + fused + " --max-iters 5 --alpha " + warn.str());
  EXPECT_EQ(w.code, 2);
  EXPECT_NE(w.err.find("3/(2L)"), std::string::npos) << w.err;
}

TEST_F(CliTest, ThreadCountDoesNotChangeMetrics) {
  const std::string p = gen("group-lasso", "gl", "--m 120 --d 42 --n 3");
  for (std::string algo : {"ppg", "admm"}) {
    const fs::path a = dir_ / (algo + "1.csv"), b = dir_ / (algo + "8.csv"), c = dir_ / (algo + "env.csv");
    ASSERT_NE(ppg("solve --problem " + p + " --algo " + algo + " --max-iters 300 --threads 1 --metrics-out " + a.string()).code, 1);
    ASSERT_NE(ppg("solve --problem " + p + " --algo " + algo + " --max-iters 300 --threads 8 --metrics-out " + b.string()).code, 1);
    ASSERT_NE(ppg("solve --problem " + p + " --algo " + algo + " --max-iters 300 --metrics-out " + c.string(), "PPG_THREADS=3").code, 1);
    EXPECT_EQ(slurp(a), slurp(b)) << algo;
    EXPECT_EQ(slurp(a), slurp(c)) << algo;
  }
}

TEST_F(CliTest, SeededStochasticRunsAreByteIdentical) {
  const std::string p = gen("svm", "svm", "--n 200 --d 10");
  const fs::path a = dir_ / "a.csv", b = dir_ / "b.csv", c = dir_ / "c.csv";
  const std::string base = "solve --problem " + p + " --algo sppg --epochs 5 --seed 9 --metrics-out ";
  ppg(base + a.string());
  ppg(base + b.string());
  ppg("solve --problem " + p + " --algo sppg --epochs 5 --seed 10 --metrics-out " + c.string());
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_NE(slurp(a), slurp(c));
  EXPECT_EQ(read_metrics_csv(a.string()).back().k, 1000);
}

TEST_F(CliTest, ConfigFileWithFlagOverrides) {
  const std::string p = gen("group-lasso", "gl");
  const std::string cfg = write_config(
      "cfg.json", {{"problem_file", "gl/problem.json"}, {"algo", "admm"}, {"max_iters", 4}, {"metrics_out", "cfg.csv"}});
  const Outcome o = ppg("solve --config " + cfg + " --max-iters 6");
  EXPECT_EQ(o.code, 2) << o.err;
  EXPECT_NE(o.out.find("algo admm"), std::string::npos);
  EXPECT_NE(o.out.find("iterations 6"), std::string::npos);
  EXPECT_EQ(read_metrics_csv((dir_ / "cfg.csv").string()).size(), 6u);

  const std::string typo = write_config("typo.json", {{"problem_file", p}, {"max_iter", 4}});
  const Outcome t = ppg("solve --config " + typo);
  EXPECT_EQ(t.code, 1);
  EXPECT_NE(t.err.find("max_iter"), std::string::npos);
}

TEST_F(CliTest, CompareMergesSeries) {
  gen("group-lasso", "gl");
  const std::string a = write_config("a.json", {{"problem_file", "gl/problem.json"}, {"algo", "ppg"}, {"max_iters", 400}, {"tol", 0}});
  const std::string b = write_config("b.json", {{"problem_file", "./gl/../gl/problem.json"}, {"algo", "admm"}, {"max_iters", 200}, {"tol", 0}});
  const fs::path out = dir_ / "merged.csv";
  const Outcome o = ppg("compare --run " + a + " --run " + b + " --out " + out.string());
  ASSERT_EQ(o.code, 0) << o.err;
  std::istringstream lines(slurp(out));
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("label,algo,k,epoch,runs,", 0), 0u);
  std::map<std::string, int> rows;
  double last_ppg_dist = -1;
  while (std::getline(lines, line)) {
    const auto cells = io_detail::split(line, ',');
    ASSERT_EQ(cells.size(), 11u);
    ++rows[std::string(cells[1])];
    if (cells[1] == "ppg") last_ppg_dist = *io_detail::parse_double(cells[9]);
  }
  EXPECT_EQ(rows["ppg"], 400);
  EXPECT_EQ(rows["admm"], 200);
  EXPECT_GE(last_ppg_dist, 0.0);
  EXPECT_LT(last_ppg_dist, 1e-8);
}

TEST_F(CliTest, CompareRejectsSingleOrMismatchedRuns) {
  gen("group-lasso", "gl");
  gen("group-lasso", "gl2", "--seed 5");
  const std::string a = write_config("a.json", {{"problem_file", "gl/problem.json"}, {"algo", "ppg"}});
  const std::string b = write_config("b.json", {{"problem_file", "gl2/problem.json"}, {"algo", "admm"}});
  const std::string out = (dir_ / "m.csv").string();
  EXPECT_EQ(ppg("compare --run " + a + " --out " + out).code, 1);
  const Outcome o = ppg("compare --run " + a + " --run " + b + " --out " + out);
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("different problem files"), std::string::npos);
}

TEST_F(CliTest, CompareAveragesSeeds) {
  gen("svm", "svm", "--n 100 --d 8");
  const std::string a = write_config("a.json", {{"problem_file", "svm/problem.json"}, {"algo", "sppg"}, {"epochs", 5}, {"tol", 0}});
  const std::string b = write_config("b.json", {{"problem_file", "svm/problem.json"}, {"algo", "ppg"}, {"max_iters", 20}, {"tol", 0}});
  const fs::path out = dir_ / "merged.csv";
  ASSERT_EQ(ppg("compare --seeds 10 --run " + a + " --run " + b + " --out " + out.string()).code, 0);
  std::istringstream lines(slurp(out));
  std::string line;
  std::getline(lines, line);
  int sppg_rows = 0;
  while (std::getline(lines, line)) {
    const auto cells = io_detail::split(line, ',');
    if (cells[1] == "sppg") {
      ++sppg_rows;
      EXPECT_EQ(cells[4], "10");
      if (cells[2] != "0") {
        EXPECT_GT(*io_detail::parse_double(cells[6]), 0.0) << line;
      }
    } else {
      EXPECT_EQ(cells[4], "1");
      EXPECT_EQ(*io_detail::parse_double(cells[6]), 0.0);
    }
  }
  EXPECT_EQ(sppg_rows, 6);
}

TEST(CliLibrary, StepBudgetAndPaths) {
  cli::RunConfig c;
  c.algo = "sppg";
  c.max_iters = 77;
  EXPECT_EQ(cli::step_budget(c, 10), 77);
  c.epochs = 2.5;
  EXPECT_EQ(cli::step_budget(c, 10), 25);
  c.algo = "ppg";
  EXPECT_EQ(cli::step_budget(c, 10), 3);
  EXPECT_EQ(cli::meta_path("/a/b/run.csv"), "/a/b/run.meta.json");
  const cli::RunConfig parsed = cli::parse_run_config({{"problem_file", "p.json"}, {"metrics_out", "/abs/m.csv"}}, "/base");
  EXPECT_EQ(parsed.problem_file, "/base/p.json");
  EXPECT_EQ(parsed.metrics_out, "/abs/m.csv");
}

TEST(CliLibrary, ValidationMessages) {
  cli::RunConfig c;
  c.problem_file = "p.json";
  c.algo = "spi";
  c.alpha = 0.1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.alpha.reset();
  EXPECT_NO_THROW(c.validate());
  c.threads = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(CliLibrary, DefaultThreadsFromEnvironment) {
  ::setenv("PPG_THREADS", "6", 1);
  EXPECT_EQ(cli::default_threads(), 6);
  ::setenv("PPG_THREADS", "zero", 1);
  EXPECT_EQ(cli::default_threads(), 1);
  ::unsetenv("PPG_THREADS");
  EXPECT_EQ(cli::default_threads(), 1);
}
