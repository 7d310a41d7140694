#include "radiofp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>

#include "radiofp/random_forest.hpp"

namespace radiofp {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (labels.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

CvStatistics cv_statistics(std::span<const double> acc) {
  if (acc.empty()) throw std::invalid_argument("cv_statistics: no folds");
  const double k = static_cast<double>(acc.size());
  double s = 0.0, s2 = 0.0;
  for (double a : acc) {
    s += a;
    s2 += a * a;
  }
  CvStatistics out;
  out.acc_k = s / k;
  out.sigma = std::sqrt(std::max(0.0, s2 / k - out.acc_k * out.acc_k));
  return out;
}

FoldSplit kfold_split(std::size_t n, std::span<const int> labels, std::size_t k, std::uint64_t seed,
                      bool stratified) {
  if (k < 2) throw std::invalid_argument("kfold_split: k must be >= 2");
  if (k > n) throw std::invalid_argument("kfold_split: k exceeds the number of records");
  if (stratified && labels.size() != n) throw std::invalid_argument("kfold_split: label count != n");

  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> groups;
  if (stratified) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
    for (auto& [label, members] : by_class) groups.push_back(std::move(members));
  } else {
    groups.emplace_back(n);
    std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
  }

  FoldSplit split;
  split.folds.resize(k);
  std::size_t offset = 0;
  for (auto& g : groups) {
    std::shuffle(g.begin(), g.end(), rng);
    for (std::size_t i = 0; i < g.size(); ++i) split.folds[(offset + i) % k].push_back(g[i]);
    offset = (offset + g.size()) % k;
  }
  for (auto& f : split.folds) std::sort(f.begin(), f.end());
  return split;
}

std::size_t ConfusionMatrix::total() const {
  double t = 0.0;
  for (double v : counts.data()) t += v;
  return static_cast<std::size_t>(t);
}

std::size_t ConfusionMatrix::row_total(std::size_t r) const {
  double t = 0.0;
  for (double v : counts.row(r)) t += v;
  return static_cast<std::size_t>(t);
}

double ConfusionMatrix::trace_accuracy() const {
  const auto t = total();
  if (t == 0) throw std::invalid_argument("confusion: empty matrix");
  double tr = 0.0;
  for (std::size_t i = 0; i < classes.size(); ++i) tr += counts(i, i);
  return tr / static_cast<double>(t);
}

Matrix ConfusionMatrix::normalized() const {
  Matrix out(counts.rows(), counts.cols());
  for (std::size_t r = 0; r < counts.rows(); ++r) {
    const auto t = row_total(r);
    if (t == 0) continue;
    for (std::size_t c = 0; c < counts.cols(); ++c) out(r, c) = counts(r, c) / static_cast<double>(t);
  }
  return out;
}

nlohmann::ordered_json ConfusionMatrix::to_json() const {
  auto rows = [](const Matrix& m, bool integral) {
    auto out = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
      auto row = nlohmann::ordered_json::array();
      for (double v : m.row(r)) {
        if (integral) {
          row.push_back(static_cast<long long>(v));
        } else {
          row.push_back(v);
        }
      }
      out.push_back(std::move(row));
    }
    return out;
  };
  return {{"classes", classes}, {"counts", rows(counts, true)}, {"normalized", rows(normalized(), false)}};
}

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels,
                          std::span<const int> class_order) {
  if (predictions.size() != labels.size()) throw std::invalid_argument("confusion: length mismatch");
  ConfusionMatrix cm;
  cm.classes.assign(class_order.begin(), class_order.end());
  cm.counts = Matrix(cm.classes.size(), cm.classes.size());
  auto index = [&](int c) {
    const auto it = std::find(cm.classes.begin(), cm.classes.end(), c);
    if (it == cm.classes.end()) throw std::invalid_argument("confusion: unknown class " + std::to_string(c));
    return static_cast<std::size_t>(it - cm.classes.begin());
  };
  for (std::size_t i = 0; i < labels.size(); ++i) cm.counts(index(labels[i]), index(predictions[i])) += 1.0;
  return cm;
}

std::vector<std::optional<double>> accuracy_quotient(const ConfusionMatrix& fine) {
  const auto order = task_classes(Task::Fine);
  if (fine.classes != order) throw std::invalid_argument("accuracy_quotient: need the 9-class fine order");
  std::vector<std::optional<double>> out(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto t = fine.row_total(r);
    if (t == 0) continue;
    const auto truth = coarse_of(fine_from_ordinal(order[r]));
    double hit = 0.0;
    for (std::size_t c = 0; c < order.size(); ++c) {
      if (coarse_of(fine_from_ordinal(order[c])) == truth) hit += fine.counts(r, c);
    }
    out[r] = hit / static_cast<double>(t);
  }
  return out;
}

std::vector<int> map_to_coarse(std::span<const int> fine_ordinals) {
  std::vector<int> out;
  out.reserve(fine_ordinals.size());
  for (int f : fine_ordinals) out.push_back(ordinal(coarse_of(fine_from_ordinal(f))));
  return out;
}

EvaluationReport cross_validate(const Trainer& trainer, const Dataset& d, const CvOptions& options) {
  EvaluationReport rep;
  rep.options = options;

  std::vector<std::size_t> use;
  {
    std::map<int, std::size_t> counts;
    for (const auto& fp : d) ++counts[ordinal(fp.fine)];
    for (std::size_t i = 0; i < d.size(); ++i) {
      const int f = ordinal(d[i].fine);
      if (options.rare_classes == RareClassPolicy::Skip && counts[f] < 2) continue;
      use.push_back(i);
    }
    if (options.rare_classes == RareClassPolicy::Skip) {
      for (const auto& [f, c] : counts) {
        if (c < 2) {
          rep.warnings.push_back("class " + std::string(canonical_name(fine_from_ordinal(f))) +
                                 " has fewer than 2 records and was skipped");
        }
      }
    }
  }

  const std::size_t n = use.size();
  std::vector<int> fine(n), labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    fine[i] = ordinal(d[use[i]].fine);
    labels[i] = task_label(d[use[i]], options.task);
  }
  const auto split = kfold_split(n, fine, options.k, options.seed, options.stratified);
  const std::size_t k = options.k;

  {
    std::map<int, std::set<std::size_t>> folds_of;
    for (std::size_t f = 0; f < k; ++f)
      for (auto i : split.folds[f]) folds_of[fine[i]].insert(f);
    for (const auto& [cls, fs] : folds_of) {
      if (fs.size() < 2) {
        rep.warnings.push_back("class " + std::string(canonical_name(fine_from_ordinal(cls))) +
                               " occurs in only one fold; its test records cannot be learned");
      }
    }
  }

  std::vector<int> fold_of(n);
  for (std::size_t f = 0; f < k; ++f)
    for (auto i : split.folds[f]) fold_of[i] = static_cast<int>(f);

  std::vector<FoldResult> results(k);
  std::vector<std::vector<int>> fold_preds(k);
  std::vector<std::exception_ptr> errors(k);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t fi = 0; fi < static_cast<std::ptrdiff_t>(k); ++fi) {
    const auto f = static_cast<std::size_t>(fi);
    try {
      std::vector<const Fingerprint*> train;
      std::vector<int> train_labels;
      for (std::size_t i = 0; i < n; ++i) {
        if (fold_of[i] == fi) continue;
        train.push_back(&d[use[i]]);
        train_labels.push_back(labels[i]);
      }
      std::set<int> distinct(train_labels.begin(), train_labels.end());
      if (distinct.size() < 2) throw std::invalid_argument("degenerate fold: fewer than two training classes");
      auto model = trainer(train, train_labels, derive_seed(options.seed, f));
      auto& r = results[f];
      r.fold = f;
      r.train_size = train.size();
      r.test_size = split.folds[f].size();
      r.size = model->size();
      if (const auto* s = model->scaler()) r.scaler = *s;
      std::vector<int> truth;
      for (auto i : split.folds[f]) {
        fold_preds[f].push_back(model->predict(d[use[i]]));
        truth.push_back(labels[i]);
      }
      r.accuracy = accuracy(fold_preds[f], truth);
    } catch (...) {
      errors[f] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<double> accs;
  std::vector<int> all_pred, all_truth;
  for (std::size_t f = 0; f < k; ++f) {
    accs.push_back(results[f].accuracy);
    for (std::size_t j = 0; j < split.folds[f].size(); ++j) {
      const auto i = split.folds[f][j];
      all_pred.push_back(fold_preds[f][j]);
      all_truth.push_back(labels[i]);
      rep.predictions.push_back({d[use[i]].id, labels[i], fold_preds[f][j], f});
    }
  }
  const auto stats = cv_statistics(accs);
  rep.acc_k = stats.acc_k;
  rep.sigma = stats.sigma;
  rep.folds = std::move(results);
  const auto classes = task_classes(options.task);
  rep.confusion = confusion(all_pred, all_truth, classes);

  if (options.task == Task::Fine) {
    const auto cp = map_to_coarse(all_pred);
    const auto ct = map_to_coarse(all_truth);
    rep.coarse_mapped = confusion(cp, ct, task_classes(Task::Coarse));
    rep.coarse_mapped_accuracy = accuracy(cp, ct);
    rep.quotients = accuracy_quotient(rep.confusion);
  }

  for (std::size_t f = 0; f < k; ++f) {
    for (int c : classes) {
      bool in_test = false, in_train = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != c) continue;
        (fold_of[i] == static_cast<int>(f) ? in_test : in_train) = true;
      }
      if (in_test && !in_train) {
        rep.warnings.push_back("fold " + std::to_string(f) + ": class " + class_name(options.task, c) +
                               " absent from training");
      }
    }
  }
  return rep;
}

namespace {

nlohmann::ordered_json named_confusion(const ConfusionMatrix& cm, Task task, const char* mode) {
  auto j = cm.to_json();
  std::vector<std::string> names;
  for (int c : cm.classes) names.push_back(class_name(task, c));
  nlohmann::ordered_json out;
  out["mode"] = mode;
  out["class_names"] = names;
  for (auto& [key, val] : j.items()) out[key] = val;
  return out;
}

}  // namespace

nlohmann::ordered_json EvaluationReport::to_json() const {
  nlohmann::ordered_json j;
  j["task"] = std::string(to_string(options.task));
  j["k"] = options.k;
  j["seed"] = options.seed;
  j["stratified"] = options.stratified;
  j["rare_classes"] = options.rare_classes == RareClassPolicy::Keep ? "keep" : "skip";
  j["config"] = config;
  j["acc_k"] = acc_k;
  j["sigma"] = sigma;
  std::vector<double> accs;
  auto folds_json = nlohmann::ordered_json::array();
  for (const auto& f : folds) {
    accs.push_back(f.accuracy);
    folds_json.push_back({{"fold", f.fold},
                          {"train_size", f.train_size},
                          {"test_size", f.test_size},
                          {"accuracy", f.accuracy},
                          {"model_size", f.size.to_json()}});
  }
  j["fold_accuracies"] = accs;
  j["folds"] = std::move(folds_json);
  j["confusion"] = named_confusion(confusion, options.task, "native");
  if (coarse_mapped) {
    auto c = named_confusion(*coarse_mapped, Task::Coarse, "mapped_from_fine");
    c["accuracy"] = *coarse_mapped_accuracy;
    j["coarse_mapped"] = std::move(c);
  }
  if (!quotients.empty()) {
    nlohmann::ordered_json q;
    for (std::size_t i = 0; i < quotients.size(); ++i) {
      const auto name = class_name(Task::Fine, static_cast<int>(i) + 1);
      q[name] = quotients[i] ? nlohmann::ordered_json(*quotients[i]) : nlohmann::ordered_json(nullptr);
    }
    j["accuracy_quotients"] = std::move(q);
  }
  j["warnings"] = warnings;
  return j;
}

std::vector<LinkSet> default_ablation_subsets() {
  return {LinkSet({1}), LinkSet({5}), LinkSet({9}), LinkSet({1, 5, 9}), LinkSet({3, 7}), LinkSet::all()};
}

std::vector<AblationRow> link_ablation(const std::function<Trainer(const FeatureLayout&)>& make,
                                       FeatureKind kind, const Dataset& d,
                                       std::span<const LinkSet> subsets, const CvOptions& options) {
  if (subsets.empty()) throw std::invalid_argument("link_ablation: no subsets");
  std::vector<AblationRow> rows;
  for (const auto& s : subsets) {
    if (s.empty()) throw std::invalid_argument("link_ablation: empty subset");
    FeatureLayout layout{kind, s};
    const auto rep = cross_validate(make(layout), d, options);
    rows.push_back({s, layout.dim(), rep.acc_k, rep.sigma});
  }
  return rows;
}

ImportanceTable importance_report(const LinearModel& m, double epsilon) {
  if (m.layout.kind != FeatureKind::Raw) throw std::invalid_argument("importance_report: needs a raw-layout model");
  if (m.reg != Regularizer::L1) throw std::invalid_argument("importance_report: needs an L1 model");
  const auto nz = nonzero_counts(m, epsilon);
  ImportanceTable t;
  t.classes = nz.classes;
  t.counts = nz.counts;
  t.normalized = Matrix(t.counts.rows(), t.counts.cols());
  bool any = false;
  for (std::size_t c = 0; c < t.counts.cols(); ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < t.counts.rows(); ++r) s += t.counts(r, c);
    if (s == 0.0) continue;
    any = true;
    for (std::size_t r = 0; r < t.counts.rows(); ++r) t.normalized(r, c) = t.counts(r, c) / s;
  }
  t.all_zero = !any;
  return t;
}

void write_confusion_csv(const ConfusionMatrix& cm, Task task, bool normalized, std::ostream& out) {
  const Matrix m = normalized ? cm.normalized() : cm.counts;
  out << "true\\predicted";
  for (int c : cm.classes) out << ',' << class_name(task, c);
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << class_name(task, cm.classes[r]);
    for (double v : m.row(r)) out << ',' << (normalized ? num(v) : std::to_string(static_cast<long long>(v)));
    out << '\n';
  }
}

void write_ablation_csv(std::span<const AblationRow> rows, std::ostream& out) {
  out << "links,n_links,dim,acc_k,sigma\n";
  for (const auto& r : rows) {
    out << '"' << r.links.to_string() << "\"," << r.links.size() << ',' << r.dim << ',' << num(r.acc_k)
        << ',' << num(r.sigma) << '\n';
  }
}

void write_importance_csv(const ImportanceTable& t, bool normalized, std::ostream& out) {
  const Matrix& m = normalized ? t.normalized : t.counts;
  out << "class";
  for (std::size_t l = 1; l <= m.cols(); ++l) out << ",link" << l;
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << class_name(Task::Fine, t.classes[r]);
    for (double v : m.row(r)) out << ',' << (normalized ? num(v) : std::to_string(static_cast<long long>(v)));
    out << '\n';
  }
}

void write_quotient_csv(std::span<const std::optional<double>> quotients, std::ostream& out) {
  out << "fine_class,coarse_class,quotient\n";
  for (std::size_t i = 0; i < quotients.size(); ++i) {
    const auto f = fine_from_ordinal(static_cast<int>(i) + 1);
    out << canonical_name(f) << ',' << canonical_name(coarse_of(f)) << ','
        << (quotients[i] ? num(*quotients[i]) : std::string()) << '\n';
  }
}

void write_matrix_csv(const Matrix& m, std::span<const std::string> labels, std::ostream& out) {
  if (labels.size() != m.rows() || m.rows() != m.cols()) throw std::invalid_argument("write_matrix_csv: shape");
  out << "id";
  for (const auto& l : labels) out << ',' << l;
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << labels[r];
    for (double v : m.row(r)) out << ',' << num(v);
    out << '\n';
  }
}

}  // namespace radiofp
