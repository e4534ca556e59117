// Command-line front end: synth, build, flow, train, search, experiment,
// report. A JSON config file is the source of truth; flags override the
// common knobs. All randomness derives from one master seed.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "hgl/bilevel.hpp"
#include "hgl/csv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hgl;

namespace {

json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  json j;
  f >> j;
  return j;
}

SimilarityFn parse_sim(const json& j, ModalityKind kind, int k) {
  if (!j.contains("sim")) return default_modality_config(kind, k).sim;
  SimilarityFn sim;
  const std::string s = j["sim"].value("kind", std::string("dot-product"));
  if (s == "dot-product") sim.kind = SimilarityFn::Kind::DotProduct;
  else if (s == "gaussian-kernel") sim.kind = SimilarityFn::Kind::GaussianKernel;
  else if (s == "negative-euclidean") sim.kind = SimilarityFn::Kind::NegativeEuclidean;
  else throw std::runtime_error("unknown similarity kind '" + s + "'");
  sim.sigma = j["sim"].value("sigma", 0.0);
  return sim;
}

ModalityKind parse_kind(const std::string& s) {
  if (s == "imaging-features") return ModalityKind::ImagingFeatures;
  if (s == "phenotype") return ModalityKind::Phenotype;
  throw std::runtime_error("unknown modality kind '" + s + "'");
}

SyntheticSpec parse_synth_spec(const json& j, std::vector<ModalityConfig>* configs) {
  SyntheticSpec spec;
  spec.n_subjects = j.value("n_subjects", 500);
  spec.n_classes = j.value("n_classes", 4);
  spec.seed = j.value("seed", std::uint64_t{0});
  for (const auto& m : j.at("modalities")) {
    SyntheticModalitySpec ms;
    ms.name = m.at("name").get<std::string>();
    ms.kind = parse_kind(m.value("kind", std::string("imaging-features")));
    ms.dim = m.value("dim", 64);
    ms.cluster_separation = m.value("cluster_separation", 4.0);
    ms.noise_std = m.value("noise_std", 1.0);
    spec.modalities.push_back(ms);
    if (configs) {
      ModalityConfig cfg = default_modality_config(ms.kind, m.value("k", 25));
      cfg.sim = parse_sim(m, ms.kind, cfg.k);
      configs->push_back(cfg);
    }
  }
  if (spec.modalities.empty()) throw std::runtime_error("synthetic spec: no modalities");
  return spec;
}

FlowParams parse_flow(const json& root) {
  FlowParams p;
  if (!root.contains("flow")) return p;
  const json& j = root["flow"];
  p.dt = j.value("dt", p.dt);
  p.tol = j.value("tol", p.tol);
  p.max_iters = j.value("max_iters", p.max_iters);
  const std::string dm = j.value("d_mode", std::string("vertex-degree"));
  if (dm == "ones") p.d_mode = FlowParams::DMode::Ones;
  else if (dm == "vertex-degree") p.d_mode = FlowParams::DMode::VertexDegree;
  else throw std::runtime_error("unknown d_mode '" + dm + "'");
  const std::string gm = j.value("gamma_mode", std::string("lagged"));
  if (gm == "lagged") p.gamma_mode = FlowParams::GammaMode::Lagged;
  else if (gm == "fixed-point") p.gamma_mode = FlowParams::GammaMode::FixedPoint;
  else throw std::runtime_error("unknown gamma_mode '" + gm + "'");
  return p;
}

TrainConfig parse_train(const json& root) {
  TrainConfig t;
  if (!root.contains("train")) return t;
  const json& j = root["train"];
  t.lr = j.value("lr", t.lr);
  t.weight_decay = j.value("weight_decay", t.weight_decay);
  t.epochs = j.value("epochs", t.epochs);
  t.hidden_dim = j.value("hidden_dim", t.hidden_dim);
  return t;
}

PipelineConfig parse_pipeline(const json& root) {
  PipelineConfig p;
  p.flow = parse_flow(root);
  p.train = parse_train(root);
  if (root.contains("pipeline")) {
    const json& j = root["pipeline"];
    const std::string sm = j.value("score_mode", std::string("held-out"));
    if (sm == "held-out") p.score_mode = ScoreMode::HeldOut;
    else if (sm == "train-union") p.score_mode = ScoreMode::TrainUnion;
    else throw std::runtime_error("unknown score_mode '" + sm + "'");
    const std::string pm = j.value("pseudo_mode", std::string("flow"));
    if (pm == "flow") p.pseudo_mode = PseudoMode::Flow;
    else if (pm == "network-argmax") p.pseudo_mode = PseudoMode::NetworkArgmax;
    else throw std::runtime_error("unknown pseudo_mode '" + pm + "'");
    p.flow_on_augmented = j.value("flow_on_augmented", false);
  }
  return p;
}

SplitSpec parse_split(const json& root) {
  SplitSpec s;
  if (!root.contains("split")) return s;
  const json& j = root["split"];
  s.label_rate = j.value("label_rate", s.label_rate);
  s.test_fraction = j.value("test_fraction", s.test_fraction);
  s.outer_val_fraction = j.value("outer_val_fraction", s.outer_val_fraction);
  return s;
}

/// Dataset from either a manifest reference or an inline synthetic spec.
Dataset dataset_from_config(const json& root, std::uint64_t seed) {
  if (!root.contains("dataset")) throw std::runtime_error("config: missing dataset section");
  const json& d = root["dataset"];
  if (d.contains("manifest")) {
    LoadedDataset ld = load(d["manifest"].get<std::string>());
    if ((ld.labels.array() < 0).any()) {
      throw std::runtime_error("experiment dataset needs a label for every subject");
    }
    return assemble_dataset(ld.modalities, ld.configs, ld.labels);
  }
  if (d.contains("synthetic")) {
    std::vector<ModalityConfig> configs;
    SyntheticSpec spec = parse_synth_spec(d["synthetic"], &configs);
    if (!d["synthetic"].contains("seed")) spec.seed = seed;
    auto [mods, labels] = generate(spec);
    return assemble_dataset(mods, configs, labels);
  }
  throw std::runtime_error("config: dataset needs 'manifest' or 'synthetic'");
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed_flag) {
  const json j = load_json(spec_path);
  std::vector<ModalityConfig> configs;
  SyntheticSpec spec = parse_synth_spec(j, &configs);
  if (seed_flag) spec.seed = *seed_flag;
  auto [mods, labels] = generate(spec);
  export_dataset(out_dir, mods, configs, labels, spec.seed);
  std::cout << "wrote " << mods.size() << " modality files + manifest to " << out_dir
            << " (seed=" << spec.seed << ")\n";
  return 0;
}

int cmd_build(const std::string& manifest_path, const std::string& out_path) {
  LoadedDataset ld = load(manifest_path);
  const Hypergraph h = build_multimodal(ld.modalities, ld.configs);
  save_hypergraph(h, out_path, ld.seed);
  std::cout << "n=" << h.n_vertices() << " m=" << h.n_edges() << '\n';
  std::map<int, int> per_mod;
  for (int mod : h.edge_modality) per_mod[mod]++;
  for (const auto& [mod, count] : per_mod) {
    std::cout << "modality " << ld.modalities[mod].name << ": " << count << " edges\n";
  }
  return 0;
}

int cmd_flow(const std::string& hg_path, const std::string& labels_path,
             const std::string& out_dir, const json& config, std::uint64_t seed) {
  const Hypergraph h = load_hypergraph(hg_path);
  const NumericCsv lab_csv = read_numeric_csv(labels_path);
  if (lab_csv.values.cols() != 2) {
    throw std::runtime_error(labels_path + ": expected subject_index,class_label");
  }

  LabelState ls;
  ls.n = h.n_vertices();
  std::vector<char> is_labeled(ls.n, 0);
  std::vector<std::pair<int, int>> pairs;
  for (int r = 0; r < lab_csv.values.rows(); ++r) {
    const int idx = static_cast<int>(lab_csv.values(r, 0));
    const int y = static_cast<int>(lab_csv.values(r, 1));
    if (idx < 0 || idx >= ls.n) throw std::runtime_error("label subject index out of range");
    pairs.emplace_back(idx, y);
    is_labeled[idx] = 1;
    ls.num_classes = std::max(ls.num_classes, y + 1);
  }
  std::sort(pairs.begin(), pairs.end());
  ls.labeled_y.resize(static_cast<int>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ls.labeled_idx.push_back(pairs[i].first);
    ls.labeled_y[static_cast<int>(i)] = pairs[i].second;
  }
  for (int v = 0; v < ls.n; ++v) {
    if (!is_labeled[v]) ls.unlabeled_idx.push_back(v);
  }
  ls.num_classes = std::max(ls.num_classes, 2);

  const FlowParams params = parse_flow(config);
  fs::create_directories(out_dir);
  std::ofstream diag(fs::path(out_dir) / "diagnostics.csv");
  diag << "# seed=" << seed << "\niter,channel,tv_value,residual,tau\n";
  const Eigen::MatrixXd u = run_flow(h, ls, params, [&](const FlowState& st) {
    const double tau_it = uncertainty_tau(st.u, ls.unlabeled_idx);
    for (std::size_t c = 0; c < st.last_diag.size(); ++c) {
      diag << st.iter << ',' << c << ',' << format_g17(st.last_diag[c].tv) << ','
           << format_g17(st.last_diag[c].residual) << ',' << format_g17(tau_it) << '\n';
    }
  });

  const Eigen::VectorXi pseudo = extract_pseudo_labels(u);
  const double tau = uncertainty_tau(u, ls.unlabeled_idx);
  Eigen::MatrixXd rows(ls.n, 2);
  for (int v = 0; v < ls.n; ++v) {
    rows(v, 0) = v;
    rows(v, 1) = pseudo[v];
  }
  write_numeric_csv((fs::path(out_dir) / "pseudo_labels.csv").string(),
                    {"subject_index", "pseudo_label"}, rows, "seed=" + std::to_string(seed));
  std::ofstream tf(fs::path(out_dir) / "tau.txt");
  tf << "# seed=" << seed << "\n" << format_g17(tau) << '\n';
  std::cout << "tau=" << format_g17(tau) << '\n';
  return 0;
}

SplitResult config_split(const Dataset& ds, const json& config, std::uint64_t seed) {
  SplitSpec sp = parse_split(config);
  sp.seed = splitmix64(seed ^ hash_name("split/0"));
  return split(ds.labels, sp);
}

int cmd_train(const json& config, const std::string& out_dir, std::uint64_t seed) {
  const Dataset ds = dataset_from_config(config, seed);
  const SplitResult folds = config_split(ds, config, seed);
  const PipelineConfig pipe = parse_pipeline(config);

  AugmentationPolicy policy = AugmentationPolicy::zero();
  if (config.contains("policy")) {
    policy = AugmentationPolicy::from_json_string(config["policy"].dump());
  }

  const std::uint64_t pseudo_seed = splitmix64(seed ^ hash_name("pseudo/0"));
  const PseudoArtifacts art = compute_pseudo_artifacts(ds, folds, pipe, pseudo_seed);

  std::vector<char> mask(ds.h.n_vertices(), 0);
  for (int v : folds.labeled) mask[v] = 1;
  Rng aug_rng = Rng::stream(splitmix64(seed ^ hash_name("final/0")), "aug");
  const AugmentedView view = apply_policy(ds.h, ds.features, policy, mask, aug_rng);

  std::vector<int> v_lab, v_unl;
  std::vector<int> y_lab, y_pse;
  for (std::size_t i = 0; i < view.kept_vertices.size(); ++i) {
    const int orig = view.kept_vertices[i];
    if (mask[orig]) {
      v_lab.push_back(static_cast<int>(i));
      y_lab.push_back(ds.labels[orig]);
    } else {
      v_unl.push_back(static_cast<int>(i));
      y_pse.push_back(art.pseudo[orig]);
    }
  }
  TrainConfig tc = pipe.train;
  tc.seed = splitmix64(seed ^ hash_name("train/0"));
  const TrainResult tr = train_inner(
      view.hypergraph, view.features, v_lab,
      Eigen::Map<const Eigen::VectorXi>(y_lab.data(), static_cast<int>(y_lab.size())), v_unl,
      Eigen::Map<const Eigen::VectorXi>(y_pse.data(), static_cast<int>(y_pse.size())),
      art.tau, tc);

  fs::create_directories(out_dir);
  save_checkpoint(tr.params, (fs::path(out_dir) / "checkpoint.txt").string(), seed);
  {
    std::ofstream f(fs::path(out_dir) / "loss_trace.csv");
    f << "# seed=" << seed << "\nepoch,lr,loss_lab,loss_unc,total\n";
    for (const auto& e : tr.trace) {
      f << e.epoch << ',' << format_g17(e.lr) << ',' << format_g17(e.loss_lab) << ','
        << format_g17(e.loss_unc) << ',' << format_g17(e.total) << '\n';
    }
  }
  const Eigen::VectorXi pred = predict(ds.conv, ds.features, tr.params);
  Eigen::VectorXi pt(static_cast<int>(folds.test.size())),
      tt(static_cast<int>(folds.test.size()));
  for (std::size_t i = 0; i < folds.test.size(); ++i) {
    pt[static_cast<int>(i)] = pred[folds.test[i]];
    tt[static_cast<int>(i)] = ds.labels[folds.test[i]];
  }
  const MetricsReport m = metrics(pt, tt, ds.num_classes);
  std::cout << "tau=" << format_g17(art.tau) << " test_accuracy=" << format_g17(m.accuracy)
            << " avg_er=" << format_g17(100.0 * m.avg_er)
            << " ppv=" << format_g17(100.0 * m.ppv) << '\n';
  return 0;
}

ExperimentConfig parse_experiment(const json& config, std::uint64_t seed, int workers) {
  ExperimentConfig e;
  e.master_seed = seed;
  e.workers = workers;
  e.split = parse_split(config);
  e.pipeline = parse_pipeline(config);
  if (config.contains("experiment")) {
    const json& j = config["experiment"];
    if (j.contains("arms")) e.arms = j["arms"].get<std::vector<std::string>>();
    e.n_split_seeds = j.value("n_split_seeds", e.n_split_seeds);
    e.a4_budget = j.value("a4_budget", e.a4_budget);
    e.single_action_budget = j.value("single_action_budget", e.single_action_budget);
    e.survivor_seeds = j.value("survivor_seeds", e.survivor_seeds);
    e.max_rounds = j.value("max_rounds", e.max_rounds);
    e.sweep_budget = j.value("sweep_budget", e.sweep_budget);
    if (j.contains("label_rate_sweep")) {
      e.label_rate_sweep = j["label_rate_sweep"].get<std::vector<double>>();
    }
  }
  for (const auto& arm : e.arms) {
    if (arm != "baseline" && arm != "A0" && arm != "A1" && arm != "A2" && arm != "A3" &&
        arm != "A4") {
      throw std::runtime_error("unknown arm '" + arm + "'");
    }
  }
  return e;
}

int cmd_search(const json& config, const std::string& out_dir, std::uint64_t seed,
               int workers) {
  const Dataset ds = dataset_from_config(config, seed);
  const SplitResult folds = config_split(ds, config, seed);
  const PipelineConfig pipe = parse_pipeline(config);
  const PseudoArtifacts art =
      compute_pseudo_artifacts(ds, folds, pipe, splitmix64(seed ^ hash_name("pseudo/0")));

  SearchConfig sc;
  sc.workers = workers;
  sc.seed = splitmix64(seed ^ hash_name("search/0"));
  if (config.contains("search")) {
    const json& j = config["search"];
    sc.budget = j.value("budget", sc.budget);
    sc.survivor_seeds = j.value("survivor_seeds", sc.survivor_seeds);
    sc.max_rounds = j.value("max_rounds", sc.max_rounds);
    sc.delta_max = j.value("delta_max", sc.delta_max);
    sc.walk_min = j.value("walk_min", sc.walk_min);
    sc.walk_max = j.value("walk_max", sc.walk_max);
    if (j.contains("actions")) {
      sc.actions = {false, false, false, false};
      for (const auto& a : j["actions"]) {
        const std::string s = a.get<std::string>();
        if (s == "A0") sc.actions[kNodeRemoval] = true;
        else if (s == "A1") sc.actions[kHyperedgeRemoval] = true;
        else if (s == "A2") sc.actions[kSubgraphRemoval] = true;
        else if (s == "A3") sc.actions[kFeaturePerturb] = true;
        else throw std::runtime_error("unknown action '" + s + "'");
      }
    }
  }
  const SearchResult sr = outer_search(ds, folds, art, pipe, sc);

  fs::create_directories(out_dir);
  {
    std::ofstream f(fs::path(out_dir) / "leaderboard.csv");
    f << "# seed=" << seed
      << "\ncandidate,score,stage1_score,n_evals,divergent,node_ratio,edge_ratio,"
         "subgraph_ratio,walk_length,feature_ratio,delta\n";
    for (const auto& c : sr.leaderboard) {
      f << c.index << ',' << format_g17(c.score) << ',' << format_g17(c.stage1_score) << ','
        << c.seed_scores.size() << ',' << (c.divergent ? 1 : 0) << ','
        << format_g17(c.policy.node_removal_ratio) << ','
        << format_g17(c.policy.hyperedge_removal_ratio) << ','
        << format_g17(c.policy.subgraph_removal_ratio) << ',' << c.policy.walk_length << ','
        << format_g17(c.policy.feature_perturb_ratio) << ',' << format_g17(c.policy.delta)
        << '\n';
    }
  }
  std::ofstream pf(fs::path(out_dir) / "policy.json");
  pf << sr.best.policy.to_json_string() << '\n';
  std::cout << "best score=" << format_g17(sr.best.score) << " candidate=" << sr.best.index
            << '\n';
  return 0;
}

int cmd_experiment(const json& config, const std::string& out_dir, std::uint64_t seed,
                   int workers) {
  const Dataset ds = dataset_from_config(config, seed);
  const ExperimentConfig ec = parse_experiment(config, seed, workers);
  const ExperimentReport rep = run_experiment(ds, ec);
  write_report_bundle(rep, out_dir, seed);
  for (const auto& a : rep.by_arm) {
    std::cout << a.arm << ": avg_er=" << format_g17(a.avg_er_mean) << "+-"
              << format_g17(a.avg_er_std) << " ppv=" << format_g17(a.ppv_mean) << "+-"
              << format_g17(a.ppv_std) << '\n';
  }
  return 0;
}

int cmd_report(const std::string& bundle_dir) {
  for (const char* name : {"metrics_by_arm.csv", "label_rate_sweep.csv"}) {
    const fs::path p = fs::path(bundle_dir) / name;
    if (!fs::exists(p)) throw std::runtime_error("missing " + p.string());
    std::ifstream f(p);
    std::cout << "== " << name << " ==\n";
    std::string line;
    while (std::getline(f, line)) std::cout << line << '\n';
  }
  const fs::path pol = fs::path(bundle_dir) / "policy.json";
  if (fs::exists(pol)) {
    std::ifstream f(pol);
    std::cout << "== policy.json ==\n" << f.rdbuf() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilevel semi-supervised hypergraph learning"};
  app.require_subcommand(1);

  std::string spec_path, manifest_path, out_path = "out", hg_path, labels_path,
              config_path, bundle_dir;
  std::uint64_t seed_flag = 0;
  bool seed_set = false;
  int workers = 1;

  std::vector<CLI::App*> seeded;
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed_flag, "master seed");
    seeded.push_back(cmd);
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--spec", spec_path, "synthetic spec JSON")->required();
  synth->add_option("--out", out_path, "output directory")->required();
  add_seed(synth);

  auto* build = app.add_subcommand("build", "build the multi-modal hypergraph");
  build->add_option("--manifest", manifest_path, "dataset manifest")->required();
  build->add_option("--out", out_path, "output hypergraph file")->required();

  auto* flow = app.add_subcommand("flow", "run the pseudo-label flow");
  flow->add_option("--hypergraph", hg_path, "hypergraph file")->required();
  flow->add_option("--labels", labels_path, "labelled-subset CSV")->required();
  flow->add_option("--out", out_path, "output directory")->required();
  flow->add_option("--config", config_path, "config JSON (flow section)");
  add_seed(flow);

  auto* train = app.add_subcommand("train", "train the classifier once");
  train->add_option("--config", config_path, "config JSON")->required();
  train->add_option("--out", out_path, "output directory")->required();
  add_seed(train);

  auto* search = app.add_subcommand("search", "search augmentation policies");
  search->add_option("--config", config_path, "config JSON")->required();
  search->add_option("--out", out_path, "output directory")->required();
  search->add_option("--workers", workers, "parallel evaluations");
  add_seed(search);

  auto* exp = app.add_subcommand("experiment", "full multi-seed experiment");
  exp->add_option("--config", config_path, "config JSON")->required();
  exp->add_option("--out", out_path, "output directory")->required();
  exp->add_option("--workers", workers, "parallel evaluations");
  add_seed(exp);

  auto* report = app.add_subcommand("report", "print a report bundle");
  report->add_option("--bundle", bundle_dir, "report bundle directory")->required();

  CLI11_PARSE(app, argc, argv);
  for (CLI::App* cmd : seeded) {
    if (cmd->parsed() && cmd->count("--seed") > 0) seed_set = true;
  }

  try {
    json config = json::object();
    if (!config_path.empty()) config = load_json(config_path);
    std::uint64_t seed = config.value("seed", std::uint64_t{0});
    if (seed_set) seed = seed_flag;
    if (config.contains("workers") && workers == 1) {
      workers = config["workers"].get<int>();
    }

    if (synth->parsed()) {
      return cmd_synth(spec_path, out_path,
                       seed_set ? std::optional<std::uint64_t>(seed_flag) : std::nullopt);
    }
    if (build->parsed()) return cmd_build(manifest_path, out_path);
    if (flow->parsed()) return cmd_flow(hg_path, labels_path, out_path, config, seed);
    if (train->parsed()) return cmd_train(config, out_path, seed);
    if (search->parsed()) return cmd_search(config, out_path, seed, workers);
    if (exp->parsed()) return cmd_experiment(config, out_path, seed, workers);
    if (report->parsed()) return cmd_report(bundle_dir);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
