#include "pgsbm/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <glob.h>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <unordered_map>

#include "pgsbm/design.hpp"
#include "pgsbm/errors.hpp"
#include "pgsbm/estimators.hpp"
#include "pgsbm/gibbs.hpp"
#include "pgsbm/graph.hpp"
#include "pgsbm/labels.hpp"
#include "pgsbm/synth.hpp"
#include "pgsbm/trace_io.hpp"

namespace pgsbm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out = open_output(path);
  out << j.dump(2) << '\n';
}

json stats_json(const SamplerStats& s) {
  return {{"sigma_updates", s.sigma_updates},   {"sigma_moves", s.sigma_moves},
          {"sigma_rejections", s.sigma_rejections}, {"gamma_draws", s.gamma_draws},
          {"gamma_attempts", s.gamma_attempts}, {"gamma_fallbacks", s.gamma_fallbacks}};
}

json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string("bad value in ") + what + ": '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what);
  return out;
}

// Matches two label files by node token.
std::pair<LabelVector, LabelVector> align_labels(const fs::path& estimate, const fs::path& reference) {
  auto read = [](const fs::path& p) {
    if (p == "-") return read_label_pairs(std::cin);
    std::ifstream in(p);
    if (!in) throw DataError("cannot open " + p.string());
    return read_label_pairs(in);
  };
  const auto est = read(estimate);
  const auto ref = read(reference);
  std::unordered_map<std::string, int> ref_index;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (!ref_index.emplace(ref[i].first, static_cast<int>(i)).second) {
      throw DataError("duplicate token '" + ref[i].first + "' in " + reference.string());
    }
  }
  if (est.size() != ref.size()) {
    throw DataError("mismatched node sets: " + std::to_string(est.size()) + " vs " +
                    std::to_string(ref.size()) + " nodes");
  }
  std::vector<int> a(ref.size()), b(ref.size());
  std::vector<char> seen(ref.size(), 0);
  for (const auto& [token, label] : est) {
    auto it = ref_index.find(token);
    if (it == ref_index.end()) throw DataError("mismatched node sets: '" + token + "' not in reference");
    if (seen[it->second]++) throw DataError("duplicate token '" + token + "' in " + estimate.string());
    a[it->second] = label;
  }
  for (std::size_t i = 0; i < ref.size(); ++i) b[i] = ref[i].second;
  return {LabelVector(std::move(a)), LabelVector(std::move(b))};
}

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  std::vector<std::string> out;
  if (rc == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw DataError("glob failed for " + pattern);
  return out;
}

void write_graph_files(const fs::path& dir, const Synthetic& s, const json& meta) {
  fs::create_directories(dir);
  {
    std::ofstream out = open_output(dir / "graph.txt");
    write_edge_list(out, s.graph);
  }
  {
    std::ofstream out = open_output(dir / "labels.txt");
    write_labels(out, s.graph, s.reference);
  }
  json m = meta;
  m["nodes"] = s.graph.num_nodes();
  m["edges"] = s.graph.num_edges();
  m["communities"] = s.reference.num_labels();
  m["between_fraction"] = between_fraction(s.graph, s.reference);
  m["version"] = kVersion;
  write_json(dir / "metadata.json", m);
}

struct GenerateArgs {
  std::string kind;
  std::uint64_t seed = 1;
  std::string out;
  SpikeSpec spike;
  BenchmarkSpec bench;
  int sbm_n = 100;  // taken from --n
  int sbm_k = 2;
  std::string sbm_gamma = "-2";
  double sbm_eta = 0.0;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  Synthetic s;
  json meta{{"command", "generate"}, {"kind", a.kind}, {"seed", a.seed}};
  if (a.kind == "spike") {
    s = gen_spike(a.spike);
    meta["spec"] = {{"n1", a.spike.n1}, {"r", a.spike.r}};
  } else if (a.kind == "benchmark") {
    Rng rng(a.seed, 0);
    s = gen_benchmark(a.bench, rng);
    meta["spec"] = {{"n", a.bench.n},
                    {"a", a.bench.a},
                    {"b", a.bench.b},
                    {"mu", a.bench.mu},
                    {"avg_degree", a.bench.avg_degree},
                    {"max_degree", a.bench.effective_max_degree()},
                    {"min_community", a.bench.min_community},
                    {"max_community", a.bench.effective_max_community()}};
  } else {
    const int n = a.sbm_n, K = a.sbm_k;
    if (K < 2) throw UsageError("K >= 2 required");
    if (n < 2 * K) throw UsageError("sbm needs n >= 2K");
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = static_cast<int>(static_cast<long>(i) * K / n) + 1;
    LabelVector sigma(std::move(labels), K);
    ModelParams params = ModelParams::zeros(n, K);
    const auto g = parse_list(a.sbm_gamma, "--gamma");
    const int p = num_block_pairs(K);
    if (g.size() != 1 && static_cast<int>(g.size()) != p) {
      throw UsageError("--gamma needs 1 or K(K-1)/2 values");
    }
    for (int k = 0; k < p; ++k) {
      params.gamma(k) = g.size() == 1 ? g[0] : g[k];
      if (params.gamma(k) > 0) throw UsageError("--gamma values must be <= 0");
    }
    params.eta.setConstant(a.sbm_eta);
    Rng rng(a.seed, 0);
    s = {gen_sbm(n, sigma, params, rng), sigma};
    meta["spec"] = {{"n", n}, {"k", K}, {"gamma", g}, {"eta", a.sbm_eta}};
  }
  write_graph_files(a.out, s, meta);
  out << "wrote " << s.graph.num_nodes() << " nodes, " << s.graph.num_edges() << " edges to " << a.out
      << '\n';
  return kExitOk;
}

struct FitArgs {
  std::string graph;
  int k = 0;
  double tau2 = 25.0;
  std::string alpha = "1";
  int iters = 5000;
  int burnin = 1000;
  int thin = 1;
  int chains = 4;
  int restarts = 32;
  int mode_max_iter = 100;
  std::uint64_t seed = 1;
  std::string out;
  bool drop_isolated = false;
  bool keep_eta = false;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  if (a.k < 2) throw UsageError("K >= 2 required");
  LoadReport report;
  const Graph graph = load_edge_list_file(a.graph, a.drop_isolated, &report);
  if (graph.num_nodes() <= a.k) throw UsageError("n must exceed K");

  Hyperparams hyper = Hyperparams::defaults(a.k);
  hyper.tau2 = a.tau2;
  const auto alpha = parse_list(a.alpha, "--alpha");
  if (alpha.size() == 1) {
    hyper.alpha.assign(a.k, alpha[0]);
  } else if (static_cast<int>(alpha.size()) == a.k) {
    hyper.alpha = alpha;
  } else {
    throw UsageError("--alpha needs 1 or K values");
  }
  hyper.validate();

  FitOptions opt;
  opt.chains = a.chains;
  opt.restarts = a.restarts;
  opt.iters = a.iters;
  opt.burnin = a.burnin;
  opt.thin = a.thin;
  opt.mode_max_iter = a.mode_max_iter;
  opt.seed = a.seed;
  opt.keep_eta = a.keep_eta;
  if (opt.iters <= opt.burnin || opt.burnin < 0) throw UsageError("iters must exceed burnin >= 0");
  if (opt.thin < 1 || opt.chains < 1 || opt.restarts < 1) {
    throw UsageError("thin, chains and restarts must be >= 1");
  }

  const ModelData data(graph);
  const FitResult res = fit(data, hyper, opt);

  const fs::path dir = a.out;
  fs::create_directories(dir);
  {
    std::ofstream f = open_output(dir / "nodes.csv");
    write_nodes_csv(f, graph);
  }
  {
    std::ofstream f = open_output(dir / "edges.csv");
    write_edges_csv(f, graph);
  }
  for (int c = 0; c < opt.chains; ++c) {
    const SampleTrace& t = res.chains[c];
    {
      std::ofstream f = open_output(chain_file(dir, "trace", c));
      write_trace_csv(f, t);
    }
    {
      std::ofstream f = open_output(chain_file(dir, "sigma", c));
      write_sigma_csv(f, t);
    }
    {
      std::ofstream f = open_output(chain_file(dir, "eta", c));
      write_eta_csv(f, t);
    }
    if (opt.keep_eta) {
      std::ofstream f = open_output(chain_file(dir, "eta_samples", c));
      write_eta_samples_csv(f, t);
    }
  }
  {
    std::ofstream f = open_output(dir / "marginal_counts.csv");
    write_marginal_counts_csv(f, res.merged);
  }
  {
    std::ofstream f = open_output(dir / "mode.csv");
    write_labels_csv(f, res.init.best.sigma);
  }
  {
    std::ofstream f = open_output(dir / "restarts.csv");
    f << "restart,log_post\n";
    for (std::size_t r = 0; r < res.init.log_posts.size(); ++r) {
      f << r << ',' << format_double(res.init.log_posts[r]) << '\n';
    }
  }

  json psrf_gamma = json::array();
  for (double v : res.psrf_gamma) psrf_gamma.push_back(nullable(v));
  json chain_stats = json::array();
  for (const auto& t : res.chains) chain_stats.push_back(stats_json(t.stats));
  json meta{
      {"command", "fit"},
      {"version", kVersion},
      {"inputs",
       {{"graph", a.graph},
        {"graph_digest", a.graph == "-" ? json(nullptr) : json(file_digest(a.graph))},
        {"drop_isolated", a.drop_isolated},
        {"nodes", graph.num_nodes()},
        {"edges", graph.num_edges()},
        {"self_loops_dropped", report.self_loops},
        {"duplicates_dropped", report.duplicates},
        {"isolated_removed", report.isolated_removed}}},
      {"hyperparams", {{"k", hyper.num_communities}, {"tau2", hyper.tau2}, {"alpha", hyper.alpha}}},
      {"run",
       {{"seed", opt.seed},
        {"chains", opt.chains},
        {"restarts", opt.restarts},
        {"iters", opt.iters},
        {"burnin", opt.burnin},
        {"thin", opt.thin},
        {"mode_max_iter", opt.mode_max_iter},
        {"keep_eta", opt.keep_eta},
        {"init_stream", kInitStream},
        {"samples_per_chain", res.chains.empty() ? 0 : res.chains.front().size()}}},
      {"mode", {{"log_post", res.init.best.log_post}, {"restart", res.init.best_index}}},
      {"psrf", {{"log_post", nullable(res.psrf_log_post)}, {"gamma", psrf_gamma}}},
      {"stats", {{"total", stats_json(res.merged.stats)}, {"chains", chain_stats}}},
  };
  write_json(dir / "metadata.json", meta);
  out << "fit: n=" << graph.num_nodes() << " K=" << hyper.num_communities << " samples=" << res.merged.size()
      << " psrf(log_post)=" << format_double(res.psrf_log_post) << " -> " << dir.string() << '\n';
  return kExitOk;
}

struct EstimateArgs {
  std::string trace_dir;
  std::string estimator = "centroid";
  double level = 0.95;
  std::string out;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  if (!(a.level > 0.0 && a.level < 1.0)) throw UsageError("--level must lie in (0, 1)");
  const FitDirectory fd = load_fit_directory(a.trace_dir);
  const SampleTrace& trace = fd.merged;

  LabelVector est;
  json extra = json::object();
  if (a.estimator == "centroid") {
    est = centroid_estimate(trace);
  } else if (a.estimator == "binder") {
    est = binder_estimate(trace);
  } else {
    const MapEstimate m = map_estimate(trace, fd.mode);
    est = m.sigma;
    extra = {{"log_post", m.log_post}, {"frequency", m.frequency}, {"from_mode_find", m.from_mode_find}};
  }

  const fs::path dir = a.out.empty() ? fs::path(a.trace_dir) : fs::path(a.out);
  fs::create_directories(dir);
  {
    std::ofstream f = open_output(dir / ("estimate_" + a.estimator + ".txt"));
    write_labels(f, fd.graph, est);
  }
  const auto intervals = gamma_credible_interval(trace, a.level);
  {
    std::ofstream f = open_output(dir / "gamma_intervals.csv");
    f << "k,l,lo,hi,mean\n";
    const int K = fd.num_communities;
    for (int k = 1; k <= K; ++k) {
      for (int l = k + 1; l <= K; ++l) {
        const int idx = block_pair_index(k, l, K);
        double mean = 0.0;
        for (const auto& g : trace.gamma_samples) mean += g(idx);
        mean /= static_cast<double>(trace.gamma_samples.size());
        f << k << ',' << l << ',' << format_double(intervals[idx].lo) << ','
          << format_double(intervals[idx].hi) << ',' << format_double(mean) << '\n';
      }
    }
  }
  const EtaDegreeDiagnostic diag = eta_degree_diagnostic(trace, fd.graph);
  {
    std::ofstream f = open_output(dir / "eta_degree.csv");
    f << "node,token,degree,eta_mean,logit_degree,flagged\n";
    for (const auto& r : diag.rows) {
      f << r.node << ',' << csv_field(fd.graph.token(r.node)) << ',' << r.degree << ','
        << format_double(r.eta_mean) << ',' << (r.flagged ? "" : format_double(r.logit_degree)) << ','
        << (r.flagged ? 1 : 0) << '\n';
    }
  }
  int flagged = 0;
  for (const auto& r : diag.rows) flagged += r.flagged ? 1 : 0;
  json summary{
      {"estimator", a.estimator},
      {"level", a.level},
      {"samples", trace.size()},
      {"communities_used", est.num_present()},
      {"expected_hamming", expected_hamming(est, trace)},
      {"expected_binder", expected_binder(est, trace)},
      {"eta_degree_correlation", nullable(diag.correlation)},
      {"eta_degree_flagged", flagged},
      {"version", kVersion},
  };
  if (!extra.empty()) summary["map"] = extra;
  json iv = json::array();
  for (const auto& i : intervals) iv.push_back({i.lo, i.hi});
  summary["gamma_intervals"] = iv;
  write_json(dir / "summary.json", summary);
  out << "estimate(" << a.estimator << "): expected_hamming=" << format_double(summary["expected_hamming"])
      << " expected_binder=" << format_double(summary["expected_binder"]) << '\n';
  return kExitOk;
}

struct EvaluateArgs {
  std::string estimate;
  std::string reference;
  std::string runs_glob;
  double q = 0.10;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  if (!(a.q > 0.0 && a.q < 1.0)) throw UsageError("--q must lie in (0, 1)");
  if (a.estimate.empty() && a.runs_glob.empty()) throw UsageError("need --estimate or --runs-glob");
  if (!a.estimate.empty()) {
    auto [est, ref] = align_labels(a.estimate, a.reference);
    out << "error_rate " << format_double(error_rate(est, ref)) << '\n';
  }
  if (!a.runs_glob.empty()) {
    const auto files = expand_glob(a.runs_glob);
    if (files.empty()) throw DataError("no files match " + a.runs_glob);
    std::vector<double> rates;
    for (const auto& f : files) {
      auto [est, ref] = align_labels(f, a.reference);
      rates.push_back(error_rate(est, ref));
      out << "run " << f << ' ' << format_double(rates.back()) << '\n';
    }
    const auto [lo, hi] = q_error_interval(rates, a.q);
    out << "q_error_interval " << format_double(a.q) << ' ' << format_double(lo) << ' ' << format_double(hi)
        << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian degree-corrected blockmodel fitting by Polya-Gamma Gibbs sampling", "pgsbm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)")
      ->envname("PGSBM_THREADS")
      ->check(CLI::NonNegativeNumber);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic graph and its reference labels");
  generate->add_option("kind", gen.kind, "spike | sbm | benchmark")
      ->required()
      ->check(CLI::IsMember({"spike", "sbm", "benchmark"}));
  generate->add_option("--seed", gen.seed, "Random seed")->envname("PGSBM_SEED");
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_option("--n1", gen.spike.n1, "spike: community-1 kernel size")->capture_default_str();
  generate->add_option("--r", gen.spike.r, "spike: kernel size ratio")->capture_default_str();
  generate->add_option("--n", gen.bench.n, "benchmark/sbm: node count")->capture_default_str();
  generate->add_option("--a", gen.bench.a, "benchmark: degree exponent")->capture_default_str();
  generate->add_option("--b", gen.bench.b, "benchmark: community-size exponent")->capture_default_str();
  auto* opt_mu = generate->add_option("--mu", gen.bench.mu, "benchmark: mixing parameter (required)");
  generate->add_option("--avg-degree", gen.bench.avg_degree, "benchmark: mean degree")->capture_default_str();
  generate->add_option("--max-degree", gen.bench.max_degree, "benchmark: degree cap (default n/4)");
  generate->add_option("--min-community", gen.bench.min_community, "benchmark: smallest community")
      ->capture_default_str();
  generate->add_option("--max-community", gen.bench.max_community, "benchmark: largest community (default n/2)");
  generate->add_option("--k", gen.sbm_k, "sbm: communities (balanced)")->capture_default_str();
  generate->add_option("--gamma", gen.sbm_gamma, "sbm: gamma values, one or K(K-1)/2, comma separated")
      ->capture_default_str();
  generate->add_option("--eta", gen.sbm_eta, "sbm: common eta")->capture_default_str();

  FitArgs fa;
  auto* fitc = app.add_subcommand("fit", "Run restarts, mode finding and Gibbs chains");
  fitc->add_option("--graph", fa.graph, "Edge list path or - for stdin")->required();
  fitc->add_option("--k", fa.k, "Number of communities")->required();
  fitc->add_option("--tau2", fa.tau2, "Prior variance of beta")->envname("PGSBM_TAU2")->capture_default_str();
  fitc->add_option("--alpha", fa.alpha, "Dirichlet concentration, one or K values")
      ->envname("PGSBM_ALPHA")
      ->capture_default_str();
  fitc->add_option("--iters", fa.iters, "Iterations per chain")->envname("PGSBM_ITERS")->capture_default_str();
  fitc->add_option("--burnin", fa.burnin, "Burn-in iterations")->envname("PGSBM_BURNIN")->capture_default_str();
  fitc->add_option("--thin", fa.thin, "Thinning interval")->envname("PGSBM_THIN")->capture_default_str();
  fitc->add_option("--chains", fa.chains, "Independent chains")->envname("PGSBM_CHAINS")->capture_default_str();
  fitc->add_option("--restarts", fa.restarts, "Mode-finding restarts")
      ->envname("PGSBM_RESTARTS")
      ->capture_default_str();
  fitc->add_option("--mode-max-iter", fa.mode_max_iter, "Cycles per mode search")->capture_default_str();
  fitc->add_option("--seed", fa.seed, "Random seed")->envname("PGSBM_SEED")->capture_default_str();
  fitc->add_option("--out", fa.out, "Output directory")->required();
  fitc->add_flag("--drop-isolated", fa.drop_isolated, "Remove zero-degree nodes");
  fitc->add_flag("--keep-eta", fa.keep_eta, "Also write every eta draw");

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate", "Point estimates and summaries from a fit directory");
  estimate->add_option("--trace-dir", ea.trace_dir, "Directory written by fit")->required();
  estimate->add_option("--estimator", ea.estimator, "centroid | binder | map")
      ->check(CLI::IsMember({"centroid", "binder", "map"}))
      ->capture_default_str();
  estimate->add_option("--level", ea.level, "Credible level for gamma intervals")->capture_default_str();
  estimate->add_option("--out", ea.out, "Output directory (default: the trace directory)");

  EvaluateArgs va;
  auto* evaluate = app.add_subcommand("evaluate", "Error rates against a reference partition");
  evaluate->add_option("--estimate", va.estimate, "Label file");
  evaluate->add_option("--reference", va.reference, "Reference label file")->required();
  evaluate->add_option("--runs-glob", va.runs_glob, "Glob of label files, one per run");
  evaluate->add_option("--q", va.q, "Tail mass of the q-error interval")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (threads > 0) omp_set_num_threads(threads);
    if (*generate) {
      if (gen.kind == "benchmark" && opt_mu->count() == 0) throw UsageError("benchmark requires --mu");
      if (gen.kind == "sbm") gen.sbm_n = gen.bench.n;
      return cmd_generate(gen, out);
    }
    if (*fitc) return cmd_fit(fa, out);
    if (*estimate) return cmd_estimate(ea, out);
    return cmd_evaluate(va, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int run_cli(int argc, char** argv) {
  return run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace pgsbm
