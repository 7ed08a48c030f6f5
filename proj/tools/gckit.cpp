// Copyright 2026 The gckit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// gckit command-line tool.
//
//   gckit synth     --out DIR [--k K --n N --m M ...]
//   gckit cluster   --input matrix.lpm --k K --out DIR
//   gckit hcluster  --input matrix.lpm --k K --leaf-threshold T --out DIR
//   gckit baseline  --input matrix.lpm --k K --out DIR
//   gckit eval      --truth labels.txt --pred DIR/assignment.jsonl
//
// Exit status: 0 success, 2 configuration error, 3 data error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gckit/gckit.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Options that double as keys of the flat JSON run configuration.
class ConfigFields {
 public:
  template <typename T>
  CLI::Option* add(CLI::App& app, const std::string& flag, const std::string& key, T& target,
                   const std::string& help) {
    CLI::Option* opt = app.add_option(flag, target, help);
    if constexpr (!std::is_same_v<T, std::string>) opt->capture_default_str();
    fields_.push_back({key, opt, [&target](const json& j) { target = j.get<T>(); },
                       [&target] { return json(target); }});
    return opt;
  }

  CLI::Option* add_flag(CLI::App& app, const std::string& flag, const std::string& key,
                        bool& target, const std::string& help) {
    CLI::Option* opt = app.add_flag(flag, target, help);
    fields_.push_back({key, opt, [&target](const json& j) { target = j.get<bool>(); },
                       [&target] { return json(target); }});
    return opt;
  }

  /// Applies a JSON config; flags given explicitly on the command line win.
  void apply(const fs::path& path) const {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a flat JSON object");
    for (const auto& [key, value] : j.items()) {
      const Field* f = find(key);
      if (f == nullptr) throw ConfigError("unknown config key '" + key + "'");
      if (f->option->count() > 0) continue;
      try {
        f->from_json(value);
      } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
      }
    }
  }

  // Every field except the output directory.
  json to_json() const {
    json j = json::object();
    for (const auto& f : fields_) {
      if (f.key != "out") j[f.key] = f.to_json();
    }
    return j;
  }

 private:
  struct Field {
    std::string key;
    CLI::Option* option;
    std::function<void(const json&)> from_json;
    std::function<json()> to_json;
  };

  const Field* find(const std::string& key) const {
    for (const auto& f : fields_) {
      if (f.key == key) return &f;
    }
    return nullptr;
  }

  std::vector<Field> fields_;
};

std::size_t threads_from_env(std::optional<std::size_t> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("GCKIT_THREADS")) {
    try {
      return static_cast<std::size_t>(std::stoul(env));
    } catch (const std::exception&) {
      throw ConfigError(std::string("GCKIT_THREADS is not a number: ") + env);
    }
  }
  return 0;
}

gckit::LogProbMatrix load_input(const std::string& input, const std::string& format) {
  if (input.empty()) throw ConfigError("--input is required");
  gckit::MatrixFormat f;
  if (format == "auto") {
    f = gckit::format_from_extension(input);
  } else if (format == "binary") {
    f = gckit::MatrixFormat::kBinary;
  } else if (format == "csv") {
    f = gckit::MatrixFormat::kCsv;
  } else {
    throw ConfigError("--format must be auto, binary or csv");
  }
  return gckit::load_matrix(input, f);
}

fs::path prepare_out(const std::string& out) {
  if (out.empty()) throw ConfigError("--out is required");
  fs::create_directories(out);
  return fs::path(out);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

struct ClusterArgs {
  std::string input;
  std::string format = "auto";
  std::string out;
  double alpha = 0.25;
  std::size_t k = 2;
  std::size_t restarts = 10;
  std::uint64_t seed = 0;
  std::string init = "random";
  double clip_sigmas = 5.0;
  bool no_clip = false;
  bool naive_proposal = false;
  std::size_t max_iters = 300;
  // hcluster only
  std::size_t leaf_threshold = 0;
  bool no_localized_phi = false;
  std::size_t samples = 0;

  gckit::Params params(std::size_t threads) const {
    gckit::Params p;
    p.alpha = alpha;
    p.k = k;
    p.restarts = restarts;
    p.seed = seed;
    p.clip_sigmas = clip_sigmas;
    p.clip = !no_clip;
    p.proposal = naive_proposal ? gckit::ProposalMethod::kNaive : gckit::ProposalMethod::kPowerMean;
    if (init == "random") {
      p.init = gckit::InitMethod::kRandom;
    } else if (init == "kmeanspp") {
      p.init = gckit::InitMethod::kKMeansPlusPlus;
    } else {
      throw ConfigError("--init must be random or kmeanspp");
    }
    p.max_iters = max_iters;
    p.n_samples = samples;
    p.threads = threads;
    return p;
  }
};

void add_common(CLI::App& app, ConfigFields& fields, ClusterArgs& a) {
  fields.add(app, "--input", "input", a.input, "Log-probability matrix (LPM1 or .csv)");
  fields.add(app, "--format", "format", a.format, "Input format: auto, binary or csv");
  fields.add(app, "--out", "out", a.out, "Output directory");
  fields.add(app, "--k", "k", a.k, "Number of clusters");
  fields.add(app, "--restarts", "restarts", a.restarts, "Seeds tried; the lowest distortion wins");
  fields.add(app, "--seed", "seed", a.seed, "First seed");
  fields.add(app, "--max-iters", "max_iters", a.max_iters, "Iteration cap per run");
}

void add_gc(CLI::App& app, ConfigFields& fields, ClusterArgs& a) {
  add_common(app, fields, a);
  fields.add(app, "--alpha", "alpha", a.alpha, "Weight regularization exponent in [0, 1]");
  fields.add(app, "--init", "init", a.init, "Centroid initialization: random or kmeanspp");
  fields.add(app, "--clip-sigmas", "clip_sigmas", a.clip_sigmas, "Clip threshold in column sigmas");
  fields.add_flag(app, "--no-clip", "no_clip", a.no_clip, "Disable probability clipping");
  fields.add_flag(app, "--naive-proposal", "naive_proposal", a.naive_proposal,
                  "Estimate p(Y) by the plain column mean");
}

int run_cluster(const ClusterArgs& a, std::size_t threads, const ConfigFields& fields) {
  const gckit::Params params = a.params(threads);
  const gckit::LogProbMatrix m = load_input(a.input, a.format);
  gckit::validate(params, m.n_docs());
  const gckit::Preprocessed pre = gckit::preprocess(m.log_p, params);
  const gckit::RunResult run = gckit::run_best_of(pre.log_p, pre.weights, params);
  const fs::path out = prepare_out(a.out);

  std::ostringstream assignment;
  gckit::write_assignment_jsonl(assignment, m.doc_ids, run.assignment);
  gckit::write_text(out / "assignment.jsonl", assignment.str());
  json meta = gckit::run_metadata(run, params, m.n_texts());
  meta["restarts"] = params.restarts;
  meta["init"] = gckit::to_string(params.init);
  meta["proposal"] = gckit::to_string(params.proposal);
  meta["clip"] = params.clip;
  meta["clipped_count"] = pre.clipped_count;
  gckit::write_text(out / "run.json", dump(meta));
  gckit::write_text(out / "config.json", dump(fields.to_json()));
  std::cerr << "cluster: seed " << run.seed << ", " << run.assignment.iterations
            << " iterations, total distortion " << run.assignment.total_distortion << "\n";
  return 0;
}

int run_hcluster(const ClusterArgs& a, std::size_t threads, const ConfigFields& fields) {
  const gckit::Params params = a.params(threads);
  const gckit::LogProbMatrix m = load_input(a.input, a.format);
  gckit::TreeOptions options;
  options.leaf_threshold = a.leaf_threshold;
  options.localized_phi = !a.no_localized_phi;
  const gckit::HierNode root = gckit::build_tree(m.log_p, params, options);
  const auto codes = gckit::assign_prefix_codes(root);
  const fs::path out = prepare_out(a.out);

  std::ostringstream jsonl;
  gckit::write_codes_jsonl(jsonl, m.doc_ids, codes);
  gckit::write_text(out / "codes.jsonl", jsonl.str());
  json summary = gckit::tree_summary(root);
  summary["K"] = params.k;
  summary["alpha"] = params.alpha;
  summary["J"] = params.n_samples == 0 ? m.n_texts() : params.n_samples;
  summary["leaf_threshold"] = a.leaf_threshold == 0 ? params.k : a.leaf_threshold;
  summary["localized_phi"] = options.localized_phi;
  summary["seed"] = params.seed;
  gckit::write_text(out / "tree.json", dump(summary));
  gckit::write_text(out / "config.json", dump(fields.to_json()));
  const auto stats = gckit::tree_stats(root);
  std::cerr << "hcluster: " << stats.leaves << " leaves, depth " << stats.max_depth << "\n";
  return 0;
}

int run_baseline(const ClusterArgs& a, std::size_t threads, const ConfigFields& fields) {
  gckit::Params params;
  params.k = a.k;
  params.restarts = a.restarts;
  params.seed = a.seed;
  params.max_iters = a.max_iters;
  params.threads = threads;
  const gckit::LogProbMatrix m = load_input(a.input, a.format);
  const gckit::RunResult run = gckit::kmeans_rows_baseline(m.log_p, params);
  const fs::path out = prepare_out(a.out);
  std::ostringstream assignment;
  gckit::write_assignment_jsonl(assignment, m.doc_ids, run.assignment);
  gckit::write_text(out / "assignment.jsonl", assignment.str());
  json meta = {{"seed", run.seed},
               {"iterations", run.assignment.iterations},
               {"converged", run.assignment.converged},
               {"total_distortion", run.assignment.total_distortion},
               {"K", params.k},
               {"J", m.n_texts()},
               {"restarts", params.restarts},
               {"method", "euclidean_kmeans"}};
  gckit::write_text(out / "run.json", dump(meta));
  gckit::write_text(out / "config.json", dump(fields.to_json()));
  return 0;
}

struct SynthArgs {
  std::string out;
  std::size_t k = 3;
  std::size_t n = 90;
  std::size_t m = 50;
  double concentration = 1.0;
  double noise = 0.05;
  double private_mass = 0.0;
  std::size_t j = 256;
  std::uint64_t seed = 0;
};

int run_synth(const SynthArgs& a, const ConfigFields& fields) {
  gckit::SynthOptions o;
  o.k_true = a.k;
  o.n_docs = a.n;
  o.m = a.m;
  o.concentration = a.concentration;
  o.noise = a.noise;
  o.private_mass = a.private_mass;
  o.j = a.j;
  gckit::Rng rng(a.seed);
  const gckit::SyntheticInstance inst = gckit::generate_instance(o, rng);
  const fs::path out = prepare_out(a.out);
  gckit::store_matrix(out / "matrix.lpm", inst.p.log_p);
  gckit::write_jsonl_entries(out / "docs.jsonl", inst.p.doc_ids, {});
  gckit::write_jsonl_entries(out / "texts.jsonl", inst.p.text_ids, {});
  std::ostringstream labels;
  for (std::size_t l : inst.true_labels) labels << l << '\n';
  gckit::write_text(out / "labels.txt", labels.str());
  auto rows = [](const gckit::Matrix& m) {
    json arr = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
      arr.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    }
    return arr;
  };
  json truth = {{"true_labels", inst.true_labels},
                {"sampled_text_ids", inst.sampled_text_ids},
                {"cluster_dists", rows(inst.cluster_dists)},
                {"doc_dists", rows(inst.doc_dists)}};
  gckit::write_text(out / "truth.json", truth.dump() + "\n");
  gckit::write_text(out / "config.json", dump(fields.to_json()));
  return 0;
}

struct EvalArgs {
  std::string truth;
  std::string pred;
};

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

int run_eval(const EvalArgs& a) {
  if (a.truth.empty() || a.pred.empty()) throw ConfigError("--truth and --pred are required");
  const auto truth = gckit::read_label_lines(a.truth);
  const auto pred_u = gckit::read_assignment_labels(a.pred);
  const std::vector<long long> pred(pred_u.begin(), pred_u.end());
  const gckit::Scores s = gckit::evaluate(truth, pred);
  std::cout << "{\"acc\":" << fixed4(100.0 * s.acc) << ",\"nmi\":" << fixed4(100.0 * s.nmi)
            << ",\"ari\":" << fixed4(100.0 * s.ari) << "}\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gckit: generative clustering of documents from log-probability matrices"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::size_t> threads_flag;
  app.add_option("--threads", threads_flag, "Worker threads (default: GCKIT_THREADS or all cores)");

  ClusterArgs cluster_args, hcluster_args, baseline_args;
  SynthArgs synth_args;
  EvalArgs eval_args;
  std::string cluster_cfg, hcluster_cfg, baseline_cfg, synth_cfg;
  ConfigFields cluster_fields, hcluster_fields, baseline_fields, synth_fields;

  auto* cluster = app.add_subcommand("cluster", "Flat generative clustering");
  add_gc(*cluster, cluster_fields, cluster_args);
  cluster->add_option("--config", cluster_cfg, "Flat JSON run configuration");

  auto* hcluster = app.add_subcommand("hcluster", "Hierarchical clustering and prefix codes");
  add_gc(*hcluster, hcluster_fields, hcluster_args);
  hcluster_fields.add(*hcluster, "--leaf-threshold", "leaf_threshold",
                      hcluster_args.leaf_threshold, "Largest leaf size (0 means K)");
  hcluster_fields.add_flag(*hcluster, "--no-localized-phi", "no_localized_phi",
                           hcluster_args.no_localized_phi, "Reuse the global proposal at every node");
  hcluster_fields.add(*hcluster, "--samples", "samples", hcluster_args.samples,
                      "Resampled texts per node (0 means the matrix width)");
  hcluster->add_option("--config", hcluster_cfg, "Flat JSON run configuration");

  auto* baseline = app.add_subcommand("baseline", "Euclidean k-means on matrix rows");
  add_common(*baseline, baseline_fields, baseline_args);
  baseline->add_option("--config", baseline_cfg, "Flat JSON run configuration");

  auto* synth = app.add_subcommand("synth", "Write a planted synthetic instance");
  synth_fields.add(*synth, "--out", "out", synth_args.out, "Output directory");
  synth_fields.add(*synth, "--k", "k", synth_args.k, "Planted clusters");
  synth_fields.add(*synth, "--n", "n", synth_args.n, "Documents");
  synth_fields.add(*synth, "--m", "m", synth_args.m, "Shared text-space size");
  synth_fields.add(*synth, "--concentration", "concentration", synth_args.concentration,
                   "Dirichlet concentration");
  synth_fields.add(*synth, "--noise", "noise", synth_args.noise, "Per-document noise weight");
  synth_fields.add(*synth, "--private-mass", "private_mass", synth_args.private_mass,
                   "Mass on each document's private text");
  synth_fields.add(*synth, "--j", "j", synth_args.j, "Sampled texts");
  synth_fields.add(*synth, "--seed", "seed", synth_args.seed, "Random seed");
  synth->add_option("--config", synth_cfg, "Flat JSON run configuration");

  auto* eval = app.add_subcommand("eval", "ACC / NMI / ARI against true labels (x100)");
  eval->add_option("--truth", eval_args.truth, "True labels, one integer per line");
  eval->add_option("--pred", eval_args.pred, "Assignment JSONL");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const std::size_t threads = threads_from_env(threads_flag);
    if (cluster->parsed()) {
      if (!cluster_cfg.empty()) cluster_fields.apply(cluster_cfg);
      return run_cluster(cluster_args, threads, cluster_fields);
    }
    if (hcluster->parsed()) {
      if (!hcluster_cfg.empty()) hcluster_fields.apply(hcluster_cfg);
      return run_hcluster(hcluster_args, threads, hcluster_fields);
    }
    if (baseline->parsed()) {
      if (!baseline_cfg.empty()) baseline_fields.apply(baseline_cfg);
      return run_baseline(baseline_args, threads, baseline_fields);
    }
    if (synth->parsed()) {
      if (!synth_cfg.empty()) synth_fields.apply(synth_cfg);
      return run_synth(synth_args, synth_fields);
    }
    if (eval->parsed()) return run_eval(eval_args);
  } catch (const ConfigError& e) {
    std::cerr << "gckit: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const gckit::Error& e) {
    std::cerr << "gckit: " << (e.is_config_error() ? "config" : "data") << " error: " << e.what()
              << "\n";
    return e.is_config_error() ? kExitConfig : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "gckit: data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitConfig;
}
