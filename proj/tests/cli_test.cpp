#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "pgsbm/cli.hpp"
#include "test_util.hpp"

using namespace pgsbm;
using testing_util::slurp;
using testing_util::TempDir;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "pgsbm");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json read_json(const std::filesystem::path& p) { return nlohmann::json::parse(slurp(p)); }

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

// Writes two 5-cliques joined by one edge plus their labels.
void write_two_cliques(const std::filesystem::path& dir) {
  std::string edges, labels;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 5; ++i) {
      for (int j = i + 1; j < 5; ++j) edges += std::to_string(5 * c + i) + " " + std::to_string(5 * c + j) + "\n";
      labels += std::to_string(5 * c + i) + " " + std::to_string(c + 1) + "\n";
    }
  }
  edges += "0 5\n";
  write_file(dir / "graph.txt", edges);
  write_file(dir / "labels.txt", labels);
}

std::vector<std::string> small_fit(const std::filesystem::path& graph, const std::filesystem::path& out,
                                   const std::string& seed = "3") {
  return {"fit",        "--graph",   graph.string(), "--k",    "2",    "--iters", "120",
          "--burnin",   "20",        "--chains",     "2",      "--restarts", "4", "--seed", seed,
          "--out",      out.string()};
}

}  // namespace

TEST(CliGenerate, SpikeFiles) {
  TempDir tmp;
  const Result r = run({"generate", "spike", "--n1", "10", "--r", "5", "--out", tmp.path.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto meta = read_json(tmp.path / "metadata.json");
  EXPECT_EQ(meta["nodes"], 120);
  EXPECT_EQ(meta["edges"], 1380);
  std::istringstream labels(slurp(tmp.path / "labels.txt"));
  int lines = 0;
  for (std::string line; std::getline(labels, line);) lines += line.empty() || line[0] == '#' ? 0 : 1;
  EXPECT_EQ(lines, 120);
}

TEST(CliGenerate, BenchmarkNeedsMu) {
  TempDir tmp;
  const std::string out = tmp.path.string();
  EXPECT_EQ(run({"generate", "benchmark", "--n", "100", "--a", "2", "--b", "1", "--avg-degree", "10", "--out", out}).code,
            kExitUsage);
  const Result ok = run({"generate", "benchmark", "--n", "100", "--a", "2", "--b", "1", "--mu", "0.4",
                         "--avg-degree", "10", "--seed", "4", "--out", out});
  ASSERT_EQ(ok.code, kExitOk) << ok.err;
  EXPECT_EQ(read_json(tmp.path / "metadata.json")["nodes"], 100);
}

TEST(CliGenerate, BadKindAndSpec) {
  TempDir tmp;
  EXPECT_EQ(run({"generate", "lattice", "--out", tmp.path.string()}).code, kExitUsage);
  EXPECT_EQ(run({"generate", "spike", "--n1", "2", "--out", tmp.path.string()}).code, kExitUsage);
  EXPECT_EQ(run({}).code, kExitUsage);
}

TEST(CliFit, RejectsSingleCommunity) {
  TempDir tmp;
  write_two_cliques(tmp.path);
  const Result r = run({"fit", "--graph", (tmp.path / "graph.txt").string(), "--k", "1", "--out",
                        (tmp.path / "fit").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("K >= 2 required"), std::string::npos);
}

TEST(CliFit, TooFewNodesAndUnreadableGraph) {
  TempDir tmp;
  write_file(tmp.path / "tiny.txt", "0 1\n1 2\n");
  EXPECT_EQ(run({"fit", "--graph", (tmp.path / "tiny.txt").string(), "--k", "2", "--out",
                 (tmp.path / "a").string()})
                .code,
            kExitUsage);
  EXPECT_EQ(run({"fit", "--graph", (tmp.path / "missing.txt").string(), "--k", "2", "--out",
                 (tmp.path / "b").string()})
                .code,
            kExitData);
  write_file(tmp.path / "bad.txt", "0 1 2 3\n");
  EXPECT_EQ(run({"fit", "--graph", (tmp.path / "bad.txt").string(), "--k", "2", "--out",
                 (tmp.path / "c").string()})
                .code,
            kExitData);
}

TEST(CliFit, WritesOutputsAndReproduces) {
  TempDir tmp;
  write_two_cliques(tmp.path);
  const auto graph = tmp.path / "graph.txt";
  ASSERT_EQ(run(small_fit(graph, tmp.path / "a")).code, kExitOk);
  ASSERT_EQ(run(small_fit(graph, tmp.path / "b")).code, kExitOk);
  for (const char* f : {"trace_chain0.csv", "trace_chain1.csv", "sigma_chain0.csv", "sigma_chain1.csv",
                        "eta_chain0.csv", "marginal_counts.csv", "mode.csv", "restarts.csv"}) {
    ASSERT_TRUE(std::filesystem::exists(tmp.path / "a" / f)) << f;
    EXPECT_EQ(slurp(tmp.path / "a" / f), slurp(tmp.path / "b" / f)) << f;
  }
  const auto meta = read_json(tmp.path / "a" / "metadata.json");
  EXPECT_EQ(meta["run"]["iters"], 120);
  EXPECT_EQ(meta["run"]["seed"], 3);
  EXPECT_EQ(meta["run"]["samples_per_chain"], 100);
  EXPECT_EQ(meta["hyperparams"]["tau2"], 25.0);
  EXPECT_FALSE(meta["inputs"]["graph_digest"].get<std::string>().empty());

  ASSERT_EQ(run(small_fit(graph, tmp.path / "c", "4")).code, kExitOk);
  EXPECT_NE(slurp(tmp.path / "a" / "trace_chain0.csv"), slurp(tmp.path / "c" / "trace_chain0.csv"));
}

TEST(CliFit, EnvironmentDefaultsAndFlagPrecedence) {
  TempDir tmp;
  write_two_cliques(tmp.path);
  const auto graph = (tmp.path / "graph.txt").string();
  ::setenv("PGSBM_ITERS", "80", 1);
  ::setenv("PGSBM_TAU2", "9", 1);
  const Result env = run({"fit", "--graph", graph, "--k", "2", "--burnin", "10", "--chains", "1", "--restarts",
                          "2", "--out", (tmp.path / "env").string()});
  const Result flag = run({"fit", "--graph", graph, "--k", "2", "--burnin", "10", "--chains", "1", "--restarts",
                           "2", "--iters", "50", "--out", (tmp.path / "flag").string()});
  ::unsetenv("PGSBM_ITERS");
  ::unsetenv("PGSBM_TAU2");
  ASSERT_EQ(env.code, kExitOk) << env.err;
  ASSERT_EQ(flag.code, kExitOk) << flag.err;
  EXPECT_EQ(read_json(tmp.path / "env" / "metadata.json")["run"]["iters"], 80);
  EXPECT_EQ(read_json(tmp.path / "env" / "metadata.json")["hyperparams"]["tau2"], 9.0);
  EXPECT_EQ(read_json(tmp.path / "flag" / "metadata.json")["run"]["iters"], 50);
}

TEST(CliEstimate, EstimatorsAndRisk) {
  TempDir tmp;
  write_two_cliques(tmp.path);
  const auto fit_dir = tmp.path / "fit";
  ASSERT_EQ(run(small_fit(tmp.path / "graph.txt", fit_dir)).code, kExitOk);

  for (const char* e : {"centroid", "binder", "map"}) {
    const Result r = run({"estimate", "--trace-dir", fit_dir.string(), "--estimator", e, "--out",
                          (tmp.path / e).string()});
    ASSERT_EQ(r.code, kExitOk) << e << r.err;
    EXPECT_TRUE(std::filesystem::exists(tmp.path / e / (std::string("estimate_") + e + ".txt")));
    EXPECT_TRUE(std::filesystem::exists(tmp.path / e / "gamma_intervals.csv"));
    EXPECT_TRUE(std::filesystem::exists(tmp.path / e / "eta_degree.csv"));
  }
  const auto centroid = read_json(tmp.path / "centroid" / "summary.json");
  const auto binder = read_json(tmp.path / "binder" / "summary.json");
  EXPECT_LE(binder["expected_binder"].get<double>(), centroid["expected_binder"].get<double>() + 1e-12);
  EXPECT_EQ(centroid["level"], 0.95);
  EXPECT_TRUE(read_json(tmp.path / "map" / "summary.json").contains("map"));

  const Result evaluated = run({"evaluate", "--estimate", (tmp.path / "centroid" / "estimate_centroid.txt").string(),
                                "--reference", (tmp.path / "labels.txt").string()});
  ASSERT_EQ(evaluated.code, kExitOk) << evaluated.err;
  EXPECT_EQ(evaluated.out, "error_rate 0\n");
}

TEST(CliEstimate, LevelAndErrors) {
  TempDir tmp;
  write_two_cliques(tmp.path);
  const auto fit_dir = tmp.path / "fit";
  ASSERT_EQ(run(small_fit(tmp.path / "graph.txt", fit_dir)).code, kExitOk);
  ASSERT_EQ(run({"estimate", "--trace-dir", fit_dir.string(), "--level", "0.5", "--out", (tmp.path / "h").string()}).code,
            kExitOk);
  ASSERT_EQ(run({"estimate", "--trace-dir", fit_dir.string(), "--level", "0.99", "--out", (tmp.path / "w").string()}).code,
            kExitOk);
  const auto half = read_json(tmp.path / "h" / "summary.json")["gamma_intervals"][0];
  const auto wide = read_json(tmp.path / "w" / "summary.json")["gamma_intervals"][0];
  EXPECT_LE(wide[0].get<double>(), half[0].get<double>());
  EXPECT_GE(wide[1].get<double>(), half[1].get<double>());
  EXPECT_LE(wide[1].get<double>(), 0.0);

  EXPECT_EQ(run({"estimate", "--trace-dir", fit_dir.string(), "--level", "1.5"}).code, kExitUsage);
  EXPECT_EQ(run({"estimate", "--trace-dir", fit_dir.string(), "--estimator", "mean"}).code, kExitUsage);
  EXPECT_EQ(run({"estimate", "--trace-dir", (tmp.path / "nowhere").string()}).code, kExitData);
  std::filesystem::create_directories(tmp.path / "empty");
  EXPECT_EQ(run({"estimate", "--trace-dir", (tmp.path / "empty").string()}).code, kExitData);
}

TEST(CliEvaluate, ReferenceAndRuns) {
  TempDir tmp;
  write_two_cliques(tmp.path);
  const auto ref = (tmp.path / "labels.txt").string();
  Result r = run({"evaluate", "--estimate", ref, "--reference", ref});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out, "error_rate 0\n");

  // Swapped names give the same partition; moving node 4 costs one node.
  write_file(tmp.path / "run_a.txt", "0 2\n1 2\n2 2\n3 2\n4 2\n5 1\n6 1\n7 1\n8 1\n9 1\n");
  write_file(tmp.path / "run_b.txt", "0 1\n1 1\n2 1\n3 1\n4 2\n5 2\n6 2\n7 2\n8 2\n9 2\n");
  r = run({"evaluate", "--reference", ref, "--runs-glob", (tmp.path / "run_*.txt").string(), "--q", "0.5"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("q_error_interval 0.5"), std::string::npos);
  EXPECT_NE(r.out.find("run_a.txt 0\n"), std::string::npos);
  EXPECT_NE(r.out.find("run_b.txt 0.1\n"), std::string::npos);

  EXPECT_EQ(run({"evaluate", "--estimate", ref, "--reference", ref, "--q", "1.5"}).code, kExitUsage);
  EXPECT_EQ(run({"evaluate", "--reference", ref}).code, kExitUsage);
  write_file(tmp.path / "short.txt", "0 1\n1 1\n");
  EXPECT_EQ(run({"evaluate", "--estimate", (tmp.path / "short.txt").string(), "--reference", ref}).code, kExitData);
  write_file(tmp.path / "other.txt", "0 1\n1 1\n2 1\n3 1\n4 1\n5 2\n6 2\n7 2\n8 2\n99 2\n");
  EXPECT_EQ(run({"evaluate", "--estimate", (tmp.path / "other.txt").string(), "--reference", ref}).code, kExitData);
  EXPECT_EQ(run({"evaluate", "--reference", ref, "--runs-glob", (tmp.path / "none_*.txt").string()}).code,
            kExitData);
}

TEST(CliBinary, ExitCodes) {
  TempDir tmp;
  const std::string bin = PGSBM_CLI_PATH;
  const auto status = [](int raw) { return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1; };
  EXPECT_EQ(status(std::system((bin + " --help > /dev/null").c_str())), 0);
  EXPECT_EQ(status(std::system((bin + " fit --k 2 > /dev/null 2>&1").c_str())), kExitUsage);
  EXPECT_EQ(status(std::system((bin + " generate spike --out " + tmp.path.string() + " > /dev/null").c_str())), 0);
  EXPECT_TRUE(std::filesystem::exists(tmp.path / "graph.txt"));
}
