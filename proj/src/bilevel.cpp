#include "hgl/bilevel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "hgl/csv.hpp"

namespace fs = std::filesystem;

namespace hgl {

namespace {

void parallel_for(int n_jobs, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n_jobs));
  if (workers == 1) {
    for (int i = 0; i < n_jobs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n_jobs; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

double accuracy_on(const Eigen::VectorXi& pred, const Eigen::VectorXi& target,
                   const std::vector<int>& idx) {
  if (idx.empty()) return 0.0;
  int correct = 0;
  for (int i : idx) correct += pred[i] == target[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(idx.size());
}

Eigen::VectorXi gather(const Eigen::VectorXi& v, const std::vector<int>& idx) {
  Eigen::VectorXi out(static_cast<int>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<int>(i)] = v[idx[i]];
  return out;
}

struct TrainedPolicy {
  HgnnParams params;
  bool divergent = false;
};

/// Augment, train and return the fitted weights (or the divergent flag).
TrainedPolicy train_policy(const AugmentationPolicy& policy, const Dataset& ds,
                           const SplitResult& folds, const PseudoArtifacts& artifacts,
                           const PipelineConfig& cfg, std::uint64_t eval_seed) {
  std::vector<char> mask(ds.h.n_vertices(), 0);
  for (int v : folds.labeled) mask[v] = 1;

  Rng aug_rng = Rng::stream(eval_seed, "aug");
  const AugmentedView view = apply_policy(ds.h, ds.features, policy, mask, aug_rng);

  std::vector<int> v_labeled, v_unlabeled;
  std::vector<int> y_lab, y_pse;
  for (std::size_t i = 0; i < view.kept_vertices.size(); ++i) {
    const int orig = view.kept_vertices[i];
    if (mask[orig]) {
      v_labeled.push_back(static_cast<int>(i));
      y_lab.push_back(ds.labels[orig]);
    } else {
      v_unlabeled.push_back(static_cast<int>(i));
      y_pse.push_back(artifacts.pseudo[orig]);
    }
  }

  double tau = artifacts.tau;
  if (cfg.flow_on_augmented) {
    LabelState vls;
    vls.n = view.hypergraph.n_vertices();
    vls.num_classes = ds.num_classes;
    vls.labeled_idx = v_labeled;
    vls.labeled_y = Eigen::Map<const Eigen::VectorXi>(y_lab.data(),
                                                      static_cast<int>(y_lab.size()));
    vls.unlabeled_idx = v_unlabeled;
    const Eigen::MatrixXd u_view = run_flow(view.hypergraph, vls, cfg.flow);
    const Eigen::VectorXi pseudo_view = extract_pseudo_labels(u_view);
    for (std::size_t i = 0; i < v_unlabeled.size(); ++i) y_pse[i] = pseudo_view[v_unlabeled[i]];
    tau = uncertainty_tau(u_view, v_unlabeled);
  }

  TrainConfig tcfg = cfg.train;
  tcfg.seed = splitmix64(eval_seed ^ hash_name("train"));

  TrainedPolicy out;
  try {
    TrainResult tr = train_inner(
        view.hypergraph, view.features, v_labeled,
        Eigen::Map<const Eigen::VectorXi>(y_lab.data(), static_cast<int>(y_lab.size())),
        v_unlabeled,
        Eigen::Map<const Eigen::VectorXi>(y_pse.data(), static_cast<int>(y_pse.size())),
        tau, tcfg);
    out.params = std::move(tr.params);
  } catch (const divergence_error&) {
    out.divergent = true;
  }
  return out;
}

std::vector<double> metric_values(const std::vector<MetricsReport>& reports,
                                  double (*pick)(const MetricsReport&)) {
  std::vector<double> v;
  v.reserve(reports.size());
  for (const auto& r : reports) v.push_back(pick(r));
  return v;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

Dataset assemble_dataset(const std::vector<ModalityData>& modalities,
                         const std::vector<ModalityConfig>& configs,
                         const Eigen::VectorXi& labels) {
  Dataset ds;
  ds.h = build_multimodal(modalities, configs);
  int d = 0;
  for (const auto& m : modalities) d += static_cast<int>(m.features.cols());
  ds.features.resize(ds.h.n_vertices(), d);
  int c0 = 0;
  for (const auto& m : modalities) {
    ds.features.middleCols(c0, m.features.cols()) = m.features;
    c0 += static_cast<int>(m.features.cols());
  }
  ds.labels = labels;
  ds.num_classes = labels.size() > 0 ? std::max(2, labels.maxCoeff() + 1) : 2;
  ds.conv = hg_conv_operator(ds.h);
  return ds;
}

PseudoArtifacts compute_pseudo_artifacts(const Dataset& ds, const SplitResult& folds,
                                         const PipelineConfig& cfg, std::uint64_t seed) {
  const LabelState ls = make_label_state(folds, ds.labels, ds.num_classes);
  PseudoArtifacts art;
  if (cfg.pseudo_mode == PseudoMode::Flow) {
    art.u_star = run_flow(ds.h, ls, cfg.flow);
  } else {
    // Pseudo-labels straight from a supervised network on the clean graph.
    TrainConfig tcfg = cfg.train;
    tcfg.seed = splitmix64(seed ^ hash_name("pretrain"));
    TrainResult tr = train_inner(ds.h, ds.features, ls.labeled_idx, ls.labeled_y, {},
                                 Eigen::VectorXi{}, 0.0, tcfg);
    art.u_star = forward(ds.conv, ds.features, tr.params);
  }
  art.pseudo = extract_pseudo_labels(art.u_star);
  for (std::size_t i = 0; i < ls.labeled_idx.size(); ++i) {
    art.pseudo[ls.labeled_idx[i]] = ls.labeled_y[static_cast<int>(i)];
  }
  art.tau = uncertainty_tau(art.u_star, ls.unlabeled_idx);
  return art;
}

PolicyCandidate evaluate_policy(const AugmentationPolicy& policy, const Dataset& ds,
                                const SplitResult& folds, const PseudoArtifacts& artifacts,
                                const PipelineConfig& cfg, std::uint64_t eval_seed) {
  PolicyCandidate cand;
  cand.policy = policy;
  cand.seed = eval_seed;

  const TrainedPolicy tp = train_policy(policy, ds, folds, artifacts, cfg, eval_seed);
  if (tp.divergent) {
    cand.divergent = true;
    cand.score = 0.0;
    cand.stage1_score = 0.0;
    cand.seed_scores = {0.0};
    return cand;
  }

  const Eigen::VectorXi pred = predict(ds.conv, ds.features, tp.params);
  double score;
  if (cfg.score_mode == ScoreMode::HeldOut) {
    score = accuracy_on(pred, ds.labels, folds.outer_val);
  } else {
    std::vector<int> idx = folds.labeled;
    idx.insert(idx.end(), folds.unlabeled.begin(), folds.unlabeled.end());
    score = accuracy_on(pred, artifacts.pseudo, idx);
  }
  cand.score = score;
  cand.stage1_score = score;
  cand.seed_scores = {score};

  if (!folds.outer_val.empty()) {
    const MetricsReport rep = metrics(gather(pred, folds.outer_val),
                                      gather(ds.labels, folds.outer_val), ds.num_classes);
    cand.avg_er = rep.avg_er;
    cand.ppv = rep.ppv;
  }
  return cand;
}

PolicyCandidate evaluate_policy(const AugmentationPolicy& policy, const Dataset& ds,
                                const SplitResult& folds, const PipelineConfig& cfg,
                                std::uint64_t eval_seed) {
  const PseudoArtifacts artifacts = compute_pseudo_artifacts(ds, folds, cfg, eval_seed);
  return evaluate_policy(policy, ds, folds, artifacts, cfg, eval_seed);
}

namespace {

AugmentationPolicy sample_policy(const SearchConfig& s, int index) {
  Rng rng = Rng::stream(s.seed, "policy/" + std::to_string(index));
  AugmentationPolicy p;
  p.enabled = s.actions;
  if (p.enabled[kNodeRemoval]) p.node_removal_ratio = rng.uniform(0.0, AugmentationPolicy::kMaxRatio);
  if (p.enabled[kHyperedgeRemoval]) p.hyperedge_removal_ratio = rng.uniform(0.0, AugmentationPolicy::kMaxRatio);
  if (p.enabled[kSubgraphRemoval]) {
    p.subgraph_removal_ratio = rng.uniform(0.0, AugmentationPolicy::kMaxRatio);
    p.walk_length = s.walk_min + rng.next_int(s.walk_max - s.walk_min + 1);
  }
  if (p.enabled[kFeaturePerturb]) {
    p.feature_perturb_ratio = rng.uniform(0.0, AugmentationPolicy::kMaxRatio);
    p.delta = rng.uniform(0.0, s.delta_max);
  }
  return p;
}

std::uint64_t eval_seed_for(const SearchConfig& s, int candidate, int round, int rep) {
  return splitmix64(s.seed ^ hash_name("eval/" + std::to_string(candidate) + "/" +
                                       std::to_string(round) + "/" + std::to_string(rep)));
}

}  // namespace

SearchResult outer_search(const Dataset& ds, const SplitResult& folds,
                          const PseudoArtifacts& artifacts, const PipelineConfig& cfg,
                          const SearchConfig& search) {
  const int budget = search.pool.empty() ? search.budget : static_cast<int>(search.pool.size());
  if (budget < 1) throw std::invalid_argument("outer_search: budget must be >= 1");

  std::vector<PolicyCandidate> cands(budget);
  std::vector<std::string> errors(budget);

  auto run_eval = [&](int c, int round, int rep) {
    const std::uint64_t seed = eval_seed_for(search, c, round, rep);
    try {
      PolicyCandidate pc = evaluate_policy(cands[c].policy, ds, folds, artifacts, cfg, seed);
      if (round == 0) {
        pc.index = c;
        pc.policy = cands[c].policy;
        cands[c] = std::move(pc);
      } else {
        cands[c].seed_scores.push_back(pc.score);
        cands[c].divergent = cands[c].divergent || pc.divergent;
        cands[c].score = mean_of(cands[c].seed_scores);
      }
    } catch (const std::exception& ex) {
      // Structural failure (e.g. the policy disconnected the view): treat the
      // candidate as divergent rather than aborting the search.
      cands[c].divergent = true;
      cands[c].seed_scores.push_back(0.0);
      cands[c].score = mean_of(cands[c].seed_scores);
      if (round == 0) cands[c].stage1_score = 0.0;
      errors[c] = ex.what();
    }
  };

  for (int c = 0; c < budget; ++c) {
    cands[c].policy = search.pool.empty() ? sample_policy(search, c) : search.pool[c];
    cands[c].index = c;
  }
  parallel_for(budget, search.workers, [&](int c) { run_eval(c, 0, 0); });

  auto by_score = [](const PolicyCandidate& a, const PolicyCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  };

  // Successive halving: survivors get fresh seeds, means accumulate.
  std::vector<int> alive(budget);
  for (int c = 0; c < budget; ++c) alive[c] = c;
  for (int round = 1; round <= search.max_rounds && static_cast<int>(alive.size()) > 1;
       ++round) {
    std::sort(alive.begin(), alive.end(), [&](int a, int b) {
      return by_score(cands[a], cands[b]);
    });
    alive.resize((alive.size() + 1) / 2);
    const int r = round;
    // One worker per surviving candidate; its fresh seeds run sequentially so
    // seed_scores keeps a deterministic order.
    parallel_for(static_cast<int>(alive.size()), search.workers, [&](int j) {
      for (int rep = 0; rep < search.survivor_seeds; ++rep) run_eval(alive[j], r, rep);
    });
  }

  bool all_divergent = true;
  for (const auto& c : cands) all_divergent = all_divergent && c.divergent;
  if (all_divergent) {
    throw std::runtime_error("outer_search: budget exhausted, every candidate diverged");
  }

  SearchResult res;
  res.leaderboard = cands;
  std::sort(res.leaderboard.begin(), res.leaderboard.end(), by_score);
  res.best = res.leaderboard.front();
  return res;
}

MetricsReport test_metrics(const AugmentationPolicy& policy, const Dataset& ds,
                           const SplitResult& folds, const PseudoArtifacts& artifacts,
                           const PipelineConfig& cfg, std::uint64_t eval_seed) {
  const TrainedPolicy tp = train_policy(policy, ds, folds, artifacts, cfg, eval_seed);
  if (tp.divergent) {
    // Degenerate report: everything wrong.
    MetricsReport rep;
    rep.per_class_error_rate.assign(ds.num_classes, 1.0);
    rep.avg_er = 1.0;
    rep.ppv = 0.0;
    rep.accuracy = 0.0;
    rep.n_eval = static_cast<int>(folds.test.size());
    return rep;
  }
  const Eigen::VectorXi pred = predict(ds.conv, ds.features, tp.params);
  return metrics(gather(pred, folds.test), gather(ds.labels, folds.test), ds.num_classes);
}

namespace {

SearchConfig arm_search_config(const ExperimentConfig& cfg, const std::string& arm,
                               int split_index, int budget) {
  SearchConfig s;
  s.budget = budget;
  s.survivor_seeds = cfg.survivor_seeds;
  s.max_rounds = cfg.max_rounds;
  s.workers = cfg.workers;
  s.seed = splitmix64(cfg.master_seed ^
                      hash_name("search/" + std::to_string(split_index) + "/" + arm));
  if (arm == "A4") {
    s.actions = {true, true, true, true};
  } else {
    s.actions = {false, false, false, false};
    if (arm == "A0") s.actions[kNodeRemoval] = true;
    if (arm == "A1") s.actions[kHyperedgeRemoval] = true;
    if (arm == "A2") s.actions[kSubgraphRemoval] = true;
    if (arm == "A3") s.actions[kFeaturePerturb] = true;
  }
  return s;
}

}  // namespace

ExperimentReport run_experiment(const Dataset& ds, const ExperimentConfig& cfg) {
  if (cfg.n_split_seeds < 1) throw std::invalid_argument("experiment: need >= 1 split seed");
  ExperimentReport rep;
  std::vector<std::vector<MetricsReport>> arm_metrics(cfg.arms.size());

  for (int s = 0; s < cfg.n_split_seeds; ++s) {
    SplitSpec sp = cfg.split;
    sp.seed = splitmix64(cfg.master_seed ^ hash_name("split/" + std::to_string(s)));
    const SplitResult folds = split(ds.labels, sp);
    const std::uint64_t pseudo_seed =
        splitmix64(cfg.master_seed ^ hash_name("pseudo/" + std::to_string(s)));
    const PseudoArtifacts artifacts =
        compute_pseudo_artifacts(ds, folds, cfg.pipeline, pseudo_seed);

    for (std::size_t a = 0; a < cfg.arms.size(); ++a) {
      const std::string& arm = cfg.arms[a];
      AugmentationPolicy chosen = AugmentationPolicy::zero();
      std::uint64_t final_seed = splitmix64(
          cfg.master_seed ^ hash_name("final/" + std::to_string(s) + "/" + arm));

      if (arm != "baseline") {
        const int budget = arm == "A4" ? cfg.a4_budget : cfg.single_action_budget;
        const SearchConfig scfg = arm_search_config(cfg, arm, s, budget);
        const SearchResult sr = outer_search(ds, folds, artifacts, cfg.pipeline, scfg);
        chosen = sr.best.policy;
        final_seed = sr.best.seed;  // re-train the winning realisation
        for (const auto& c : sr.leaderboard) rep.leaderboard.push_back({s, arm, c});
        if (sr.best.score > rep.winning_score ||
            (rep.winning_arm.empty() && rep.winning_score == 0.0)) {
          rep.winning_score = sr.best.score;
          rep.winning_policy = sr.best.policy;
          rep.winning_arm = arm;
        }
      } else {
        PolicyCandidate base =
            evaluate_policy(chosen, ds, folds, artifacts, cfg.pipeline, final_seed);
        rep.leaderboard.push_back({s, arm, base});
      }
      arm_metrics[a].push_back(
          test_metrics(chosen, ds, folds, artifacts, cfg.pipeline, final_seed));
    }
  }

  for (std::size_t a = 0; a < cfg.arms.size(); ++a) {
    ArmSummary sum;
    sum.arm = cfg.arms[a];
    sum.per_seed = arm_metrics[a];
    const auto avg_er = metric_values(arm_metrics[a], [](const MetricsReport& r) { return r.avg_er; });
    const auto ppv = metric_values(arm_metrics[a], [](const MetricsReport& r) { return r.ppv; });
    const auto acc = metric_values(arm_metrics[a], [](const MetricsReport& r) { return r.accuracy; });
    sum.avg_er_mean = 100.0 * mean_of(avg_er);
    sum.avg_er_std = 100.0 * std_of(avg_er);
    sum.ppv_mean = 100.0 * mean_of(ppv);
    sum.ppv_std = 100.0 * std_of(ppv);
    sum.accuracy_mean = mean_of(acc);
    rep.by_arm.push_back(std::move(sum));
  }

  // Label-rate sweep for the all-actions arm.
  for (double rate : cfg.label_rate_sweep) {
    std::vector<double> avg_ers, ppvs;
    for (int s = 0; s < cfg.n_split_seeds; ++s) {
      SplitSpec sp = cfg.split;
      sp.label_rate = rate;
      sp.seed = splitmix64(cfg.master_seed ^
                           hash_name("sweep-split/" + std::to_string(s) + "/" +
                                     format_g17(rate)));
      const SplitResult folds = split(ds.labels, sp);
      const PseudoArtifacts artifacts = compute_pseudo_artifacts(
          ds, folds, cfg.pipeline,
          splitmix64(cfg.master_seed ^
                     hash_name("sweep-pseudo/" + std::to_string(s) + "/" + format_g17(rate))));
      SearchConfig scfg = arm_search_config(cfg, "A4", s, cfg.sweep_budget);
      scfg.seed = splitmix64(cfg.master_seed ^
                             hash_name("sweep-search/" + std::to_string(s) + "/" +
                                       format_g17(rate)));
      const SearchResult sr = outer_search(ds, folds, artifacts, cfg.pipeline, scfg);
      const MetricsReport m =
          test_metrics(sr.best.policy, ds, folds, artifacts, cfg.pipeline, sr.best.seed);
      avg_ers.push_back(m.avg_er);
      ppvs.push_back(m.ppv);
    }
    rep.sweep.push_back({rate, 100.0 * mean_of(avg_ers), 100.0 * std_of(avg_ers),
                         100.0 * mean_of(ppvs), 100.0 * std_of(ppvs)});
  }
  return rep;
}

void write_report_bundle(const ExperimentReport& rep, const std::string& dir,
                         std::uint64_t master_seed) {
  fs::create_directories(dir);
  const std::string seed_line = "# seed=" + std::to_string(master_seed) + "\n";

  {
    std::ofstream f(fs::path(dir) / "leaderboard.csv");
    f << seed_line
      << "split_seed,arm,candidate,score,stage1_score,n_evals,divergent,"
         "node_ratio,edge_ratio,subgraph_ratio,walk_length,feature_ratio,delta\n";
    for (const auto& row : rep.leaderboard) {
      const auto& c = row.candidate;
      f << row.split_seed_index << ',' << row.arm << ',' << c.index << ','
        << format_g17(c.score) << ',' << format_g17(c.stage1_score) << ','
        << c.seed_scores.size() << ',' << (c.divergent ? 1 : 0) << ','
        << format_g17(c.policy.node_removal_ratio) << ','
        << format_g17(c.policy.hyperedge_removal_ratio) << ','
        << format_g17(c.policy.subgraph_removal_ratio) << ','
        << c.policy.walk_length << ','
        << format_g17(c.policy.feature_perturb_ratio) << ','
        << format_g17(c.policy.delta) << '\n';
    }
  }
  {
    std::ofstream f(fs::path(dir) / "metrics_by_arm.csv");
    f << seed_line << "arm,avg_er_mean,avg_er_std,ppv_mean,ppv_std\n";
    for (const auto& a : rep.by_arm) {
      f << a.arm << ',' << format_g17(a.avg_er_mean) << ',' << format_g17(a.avg_er_std)
        << ',' << format_g17(a.ppv_mean) << ',' << format_g17(a.ppv_std) << '\n';
    }
  }
  {
    std::ofstream f(fs::path(dir) / "label_rate_sweep.csv");
    f << seed_line << "label_rate,avg_er_mean,avg_er_std,ppv_mean,ppv_std\n";
    for (const auto& r : rep.sweep) {
      f << format_g17(r.label_rate) << ',' << format_g17(r.avg_er_mean) << ','
        << format_g17(r.avg_er_std) << ',' << format_g17(r.ppv_mean) << ','
        << format_g17(r.ppv_std) << '\n';
    }
  }
  {
    std::ofstream f(fs::path(dir) / "policy.json");
    f << rep.winning_policy.to_json_string() << '\n';
  }
}

}  // namespace hgl
