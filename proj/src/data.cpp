#include "hgl/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "hgl/csv.hpp"
#include "hgl/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hgl {

namespace {

std::string kind_to_string(ModalityKind k) {
  return k == ModalityKind::ImagingFeatures ? "imaging-features" : "phenotype";
}

ModalityKind kind_from_string(const std::string& s) {
  if (s == "imaging-features") return ModalityKind::ImagingFeatures;
  if (s == "phenotype") return ModalityKind::Phenotype;
  throw std::runtime_error("unknown modality kind '" + s + "'");
}

std::string sim_to_string(SimilarityFn::Kind k) {
  switch (k) {
    case SimilarityFn::Kind::DotProduct: return "dot-product";
    case SimilarityFn::Kind::GaussianKernel: return "gaussian-kernel";
    case SimilarityFn::Kind::NegativeEuclidean: return "negative-euclidean";
  }
  return "dot-product";
}

SimilarityFn::Kind sim_from_string(const std::string& s) {
  if (s == "dot-product") return SimilarityFn::Kind::DotProduct;
  if (s == "gaussian-kernel") return SimilarityFn::Kind::GaussianKernel;
  if (s == "negative-euclidean") return SimilarityFn::Kind::NegativeEuclidean;
  throw std::runtime_error("unknown similarity kind '" + s + "'");
}

}  // namespace

std::pair<std::vector<ModalityData>, Eigen::VectorXi> generate(const SyntheticSpec& spec) {
  if (spec.n_classes < 2) throw std::invalid_argument("generate: need >= 2 classes");
  if (spec.n_subjects < spec.n_classes) {
    throw std::invalid_argument("generate: fewer subjects than classes");
  }
  const int n = spec.n_subjects;
  const int L = spec.n_classes;

  Eigen::VectorXi labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i % L;  // balanced within 1

  std::vector<ModalityData> mods;
  mods.reserve(spec.modalities.size());
  for (const auto& ms : spec.modalities) {
    if (ms.dim < 1) throw std::invalid_argument("generate: modality dim must be >= 1");
    if (ms.cluster_separation < 0.0) throw std::invalid_argument("generate: separation < 0");
    Rng rng = Rng::stream(spec.seed, "synth/" + ms.name);
    ModalityData mod;
    mod.kind = ms.kind;
    mod.name = ms.name;
    mod.features.resize(n, ms.dim);

    if (ms.kind == ModalityKind::ImagingFeatures) {
      if (ms.cluster_separation > 0.0 && ms.dim < L) {
        throw std::invalid_argument("generate: imaging dim must be >= n_classes when separated");
      }
      // Class means on a scaled simplex: pairwise distance = cluster_separation.
      Eigen::MatrixXd means = Eigen::MatrixXd::Zero(L, ms.dim);
      if (ms.cluster_separation > 0.0) {
        const double scale = ms.cluster_separation / std::sqrt(2.0);
        for (int c = 0; c < L; ++c) means(c, c) = scale;
      }
      for (int i = 0; i < n; ++i) {
        for (int d = 0; d < ms.dim; ++d) {
          mod.features(i, d) = means(labels[i], d) + ms.noise_std * rng.next_gaussian();
        }
      }
    } else {
      // One-hot categories over `dim` values; the own-class category is chosen
      // with probability 1 - exp(-separation), otherwise uniformly at random.
      const double p_signal = 1.0 - std::exp(-ms.cluster_separation);
      mod.features.setZero();
      for (int i = 0; i < n; ++i) {
        int cat;
        if (rng.next_double() < p_signal) {
          cat = labels[i] % ms.dim;
        } else {
          cat = rng.next_int(ms.dim);
        }
        mod.features(i, cat) = 1.0;
      }
    }
    mods.push_back(std::move(mod));
  }
  return {std::move(mods), std::move(labels)};
}

SplitResult split(const Eigen::VectorXi& labels, const SplitSpec& spec) {
  const int n = static_cast<int>(labels.size());
  if (n == 0) throw std::invalid_argument("split: empty label vector");
  if (spec.label_rate <= 0.0 || spec.label_rate >= 1.0) {
    throw std::invalid_argument("split: label_rate must be in (0,1)");
  }
  const int L = labels.maxCoeff() + 1;

  std::vector<std::vector<int>> by_class(L);
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0) throw std::invalid_argument("split: all subjects need a label");
    by_class[labels[i]].push_back(i);
  }
  for (int c = 0; c < L; ++c) {
    if (by_class[c].empty()) {
      throw std::runtime_error("split: class " + std::to_string(c) + " has zero subjects");
    }
  }

  Rng rng = Rng::stream(spec.seed, "split");
  SplitResult out;

  // Per-class shuffle, then carve test fold from the tail.
  std::vector<std::vector<int>> train_pool(L);
  for (int c = 0; c < L; ++c) {
    auto& cls = by_class[c];
    for (int i = static_cast<int>(cls.size()) - 1; i > 0; --i) {
      std::swap(cls[i], cls[rng.next_int(i + 1)]);
    }
    int t = static_cast<int>(std::floor(spec.test_fraction * cls.size() + 0.5));
    t = std::min(t, static_cast<int>(cls.size()) - 1);  // keep >= 1 in the pool
    for (int i = 0; i < t; ++i) out.test.push_back(cls[cls.size() - 1 - i]);
    train_pool[c].assign(cls.begin(), cls.end() - t);
  }

  int n_train = 0;
  for (const auto& p : train_pool) n_train += static_cast<int>(p.size());
  const int budget = static_cast<int>(std::ceil(spec.label_rate * n_train));

  // Proportional allocation with floor 1 (largest remainder).
  std::vector<int> lab_count(L, 1);
  int assigned = L;
  std::vector<std::pair<double, int>> remainder(L);
  for (int c = 0; c < L; ++c) {
    const double share = static_cast<double>(budget) * train_pool[c].size() / n_train;
    const int extra = std::max(0, static_cast<int>(std::floor(share)) - 1);
    lab_count[c] += std::min(extra, static_cast<int>(train_pool[c].size()) - 1);
    assigned += std::min(extra, static_cast<int>(train_pool[c].size()) - 1);
    remainder[c] = {share - std::floor(share), c};
  }
  std::sort(remainder.begin(), remainder.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int r = 0; assigned < budget && r < L; ++r) {
    const int c = remainder[r].second;
    if (lab_count[c] < static_cast<int>(train_pool[c].size())) {
      ++lab_count[c];
      ++assigned;
    }
  }

  for (int c = 0; c < L; ++c) {
    const int lc = lab_count[c];
    int ov = static_cast<int>(std::floor(spec.outer_val_fraction * lc));
    ov = std::min(ov, lc - 1);  // keep >= 1 labelled training subject per class
    for (int i = 0; i < lc - ov; ++i) out.labeled.push_back(train_pool[c][i]);
    for (int i = lc - ov; i < lc; ++i) out.outer_val.push_back(train_pool[c][i]);
    for (int i = lc; i < static_cast<int>(train_pool[c].size()); ++i) {
      out.unlabeled.push_back(train_pool[c][i]);
    }
  }

  std::sort(out.labeled.begin(), out.labeled.end());
  std::sort(out.unlabeled.begin(), out.unlabeled.end());
  std::sort(out.test.begin(), out.test.end());
  std::sort(out.outer_val.begin(), out.outer_val.end());
  return out;
}

LabelState make_label_state(const SplitResult& s, const Eigen::VectorXi& labels,
                            int num_classes) {
  LabelState ls;
  ls.n = static_cast<int>(labels.size());
  ls.num_classes = num_classes;
  ls.labeled_idx = s.labeled;
  ls.labeled_y.resize(static_cast<int>(s.labeled.size()));
  for (std::size_t i = 0; i < s.labeled.size(); ++i) {
    ls.labeled_y[static_cast<int>(i)] = labels[s.labeled[i]];
  }
  ls.unlabeled_idx = s.unlabeled;
  ls.unlabeled_idx.insert(ls.unlabeled_idx.end(), s.test.begin(), s.test.end());
  ls.unlabeled_idx.insert(ls.unlabeled_idx.end(), s.outer_val.begin(), s.outer_val.end());
  std::sort(ls.unlabeled_idx.begin(), ls.unlabeled_idx.end());
  return ls;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  json j;
  f >> j;

  Manifest m;
  m.seed = j.value("seed", std::uint64_t{0});
  m.labels_csv = j.value("labels_csv", std::string{});
  for (const auto& e : j.at("modalities")) {
    ManifestEntry me;
    me.name = e.at("name").get<std::string>();
    me.csv_path = e.at("csv").get<std::string>();
    me.kind = kind_from_string(e.at("kind").get<std::string>());
    me.k = e.value("k", 25);
    if (e.contains("sim")) {
      me.sim.kind = sim_from_string(e["sim"].value("kind", std::string("dot-product")));
      me.sim.sigma = e["sim"].value("sigma", 0.0);
    } else {
      me.sim = default_modality_config(me.kind, me.k).sim;
    }
    m.modalities.push_back(std::move(me));
  }
  return m;
}

void save_manifest(const Manifest& m, const std::string& path) {
  json j;
  j["seed"] = m.seed;
  if (!m.labels_csv.empty()) j["labels_csv"] = m.labels_csv;
  j["modalities"] = json::array();
  for (const auto& e : m.modalities) {
    json je;
    je["name"] = e.name;
    je["csv"] = e.csv_path;
    je["kind"] = kind_to_string(e.kind);
    je["k"] = e.k;
    je["sim"] = {{"kind", sim_to_string(e.sim.kind)}};
    if (e.sim.sigma > 0.0) je["sim"]["sigma"] = e.sim.sigma;
    j["modalities"].push_back(je);
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << '\n';
}

LoadedDataset load(const std::string& manifest_path) {
  const Manifest m = load_manifest(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();

  LoadedDataset ds;
  ds.seed = m.seed;
  int n = -1;
  std::string first_file;
  for (const auto& e : m.modalities) {
    const std::string path = (base / e.csv_path).string();
    NumericCsv csv = read_numeric_csv(path);
    if (n < 0) {
      n = static_cast<int>(csv.values.rows());
      first_file = path;
    } else if (csv.values.rows() != n) {
      throw std::runtime_error("row-count mismatch: " + first_file + " has " +
                               std::to_string(n) + " rows, " + path + " has " +
                               std::to_string(csv.values.rows()));
    }
    ModalityData mod;
    mod.kind = e.kind;
    mod.name = e.name;
    mod.features = std::move(csv.values);
    ds.modalities.push_back(std::move(mod));
    ModalityConfig cfg;
    cfg.k = e.k;
    cfg.sim = e.sim;
    ds.configs.push_back(cfg);
  }

  ds.labels = Eigen::VectorXi::Constant(n, -1);
  if (!m.labels_csv.empty()) {
    const std::string lp = (base / m.labels_csv).string();
    NumericCsv csv = read_numeric_csv(lp);
    if (csv.values.cols() != 2) {
      throw std::runtime_error(lp + ": expected columns subject_index,class_label");
    }
    for (int r = 0; r < csv.values.rows(); ++r) {
      const int idx = static_cast<int>(csv.values(r, 0));
      const int y = static_cast<int>(csv.values(r, 1));
      if (idx < 0 || idx >= n) throw std::runtime_error(lp + ": subject index out of range");
      if (y < 0) throw std::runtime_error(lp + ": negative class label");
      ds.labels[idx] = y;
    }
  }
  return ds;
}

void export_dataset(const std::string& dir, const std::vector<ModalityData>& modalities,
                    const std::vector<ModalityConfig>& configs,
                    const Eigen::VectorXi& labels, std::uint64_t seed) {
  fs::create_directories(dir);
  Manifest m;
  m.seed = seed;
  const std::string seed_comment = "seed=" + std::to_string(seed);
  for (std::size_t i = 0; i < modalities.size(); ++i) {
    const auto& mod = modalities[i];
    std::vector<std::string> header(mod.features.cols());
    for (int c = 0; c < mod.features.cols(); ++c) header[c] = "f" + std::to_string(c);
    const std::string csv_name = mod.name + ".csv";
    write_numeric_csv((fs::path(dir) / csv_name).string(), header, mod.features,
                      seed_comment);
    ManifestEntry me;
    me.name = mod.name;
    me.csv_path = csv_name;
    me.kind = mod.kind;
    me.k = configs.at(i).k;
    me.sim = configs.at(i).sim;
    m.modalities.push_back(std::move(me));
  }

  int n_labeled = 0;
  for (int i = 0; i < labels.size(); ++i) n_labeled += labels[i] >= 0 ? 1 : 0;
  if (n_labeled > 0) {
    Eigen::MatrixXd rows(n_labeled, 2);
    int r = 0;
    for (int i = 0; i < labels.size(); ++i) {
      if (labels[i] >= 0) {
        rows(r, 0) = i;
        rows(r, 1) = labels[i];
        ++r;
      }
    }
    write_numeric_csv((fs::path(dir) / "labels.csv").string(),
                      {"subject_index", "class_label"}, rows, seed_comment);
    m.labels_csv = "labels.csv";
  }
  save_manifest(m, (fs::path(dir) / "manifest.json").string());
}

}  // namespace hgl
