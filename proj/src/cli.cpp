#include "radiofp/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "radiofp/evaluation.hpp"
#include "radiofp/kv_config.hpp"
#include "radiofp/linear_svm.hpp"
#include "radiofp/model_io.hpp"
#include "radiofp/parallel.hpp"
#include "radiofp/pipeline.hpp"
#include "radiofp/synthgen.hpp"
#include "radiofp/timewarp.hpp"

namespace fs = std::filesystem;

namespace radiofp {

namespace {

// Raised while resolving the run configuration; maps to the usage exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool parse_bool(const std::string& text, const std::string& key) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + text + "'");
}

std::size_t get_size(const KeyValueConfig& kv, const std::string& key, std::size_t fallback) {
  const auto v = kv.get_int(key, static_cast<long long>(fallback));
  if (v < 0) throw ConfigError(key + " must be >= 0");
  return static_cast<std::size_t>(v);
}

bool get_bool(const KeyValueConfig& kv, const std::string& key, bool fallback) {
  const auto v = kv.get(key);
  return v ? parse_bool(*v, key) : fallback;
}

std::string get_string(const KeyValueConfig& kv, const std::string& key, const std::string& fallback) {
  const auto v = kv.get(key);
  return v ? *v : fallback;
}

PipelineConfig resolve_pipeline(const KeyValueConfig& kv) {
  PipelineConfig p;
  p.model = model_kind_from_string(get_string(kv, "model", "rbf_svm"));
  p.layout.kind = feature_kind_from_string(get_string(kv, "features", "raw"));
  p.layout.links = LinkSet::parse(get_string(kv, "links", "all"));
  p.task = task_from_string(get_string(kv, "task", "fine"));

  auto& hp = p.hp;
  const bool linear = p.model == ModelKind::L1L2Svm || p.model == ModelKind::L2L2Svm;
  hp.linear_c = kv.get_double("linear.C", hp.linear_c);
  hp.linear_tol = kv.get_double("linear.tol", hp.linear_tol);
  hp.linear_max_iter = static_cast<int>(kv.get_int("linear.max_iter", hp.linear_max_iter));
  hp.rbf_c = kv.get_double("rbf.C", hp.rbf_c);
  hp.rbf_gamma = kv.get_double("rbf.gamma", hp.rbf_gamma);
  hp.rbf_tol = kv.get_double("rbf.tol", hp.rbf_tol);
  hp.rbf_cache_rows = get_size(kv, "rbf.cache_rows", hp.rbf_cache_rows);
  if (kv.contains("C")) {
    const double c = kv.get_double("C", 1.0);
    if (linear) hp.linear_c = c;
    if (p.model == ModelKind::RbfSvm) hp.rbf_c = c;
  }
  if (!(hp.linear_c > 0) || !(hp.rbf_c > 0)) throw ConfigError("C must be > 0");
  if (!(hp.rbf_gamma > 0)) throw ConfigError("gamma must be > 0");

  hp.n_trees = get_size(kv, "forest.n_trees", hp.n_trees);
  hp.max_depth = get_size(kv, "forest.max_depth", hp.max_depth);
  hp.min_leaf = get_size(kv, "forest.min_leaf", hp.min_leaf);
  hp.feature_subset = get_size(kv, "forest.feature_subset", hp.feature_subset);
  hp.bootstrap = get_bool(kv, "forest.bootstrap", hp.bootstrap);
  hp.per_node_sampling = get_bool(kv, "forest.per_node_sampling", hp.per_node_sampling);
  if (hp.n_trees == 0) throw ConfigError("forest.n_trees must be >= 1");

  hp.filters = get_size(kv, "convnet.filters", hp.filters);
  hp.filter_width = get_size(kv, "convnet.filter_width", hp.filter_width);
  hp.conv_stride = get_size(kv, "convnet.conv_stride", hp.conv_stride);
  hp.pool_window = get_size(kv, "convnet.pool_window", hp.pool_window);
  hp.pool_stride = get_size(kv, "convnet.pool_stride", hp.pool_stride);
  if (kv.contains("convnet.hidden")) {
    const auto h = kv.get_doubles("convnet.hidden");
    if (h.size() != 3) throw ConfigError("convnet.hidden needs three widths");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!(h[i] >= 1) || h[i] != static_cast<double>(static_cast<std::size_t>(h[i]))) {
        throw ConfigError("convnet.hidden widths must be positive integers");
      }
      hp.hidden[i] = static_cast<std::size_t>(h[i]);
    }
  }
  hp.epochs = get_size(kv, "convnet.epochs", hp.epochs);
  hp.batch_size = get_size(kv, "convnet.batch_size", hp.batch_size);
  hp.learning_rate = kv.get_double("convnet.learning_rate", hp.learning_rate);
  if (kv.contains("standardize")) hp.standardize = get_bool(kv, "standardize", true);
  return p;
}

CvOptions resolve_cv(const KeyValueConfig& kv, Task task) {
  CvOptions cv;
  cv.task = task;
  cv.k = get_size(kv, "k", 10);
  if (cv.k < 2) throw ConfigError("k must be >= 2");
  cv.seed = static_cast<std::uint64_t>(kv.get_int("seed", 42));
  cv.stratified = get_bool(kv, "stratified", true);
  const auto rare = get_string(kv, "rare_classes", "keep");
  if (rare == "keep") {
    cv.rare_classes = RareClassPolicy::Keep;
  } else if (rare == "skip") {
    cv.rare_classes = RareClassPolicy::Skip;
  } else {
    throw ConfigError("rare_classes must be keep or skip");
  }
  return cv;
}

std::vector<LinkSet> parse_subsets(const std::string& text) {
  std::vector<LinkSet> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.find_first_not_of(" \t") == std::string::npos) throw ConfigError("empty link subset in '" + text + "'");
    out.push_back(LinkSet::parse(item));
  }
  if (out.empty()) throw ConfigError("no link subsets given");
  return out;
}

class RunDir {
 public:
  explicit RunDir(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    body(f);
    if (!f) throw std::runtime_error("write failed: " + (dir_ / name).string());
    files_.push_back(name);
  }

  void write_json(const std::string& name, const nlohmann::ordered_json& j) {
    write(name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  }

  void manifest(const std::string& command, const KeyValueConfig& kv, nlohmann::ordered_json extra) {
    nlohmann::ordered_json m;
    m["command"] = command;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    // The thread count does not influence any output, so it is not echoed.
    for (const auto& [k, v] : kv.entries())
      if (k != "jobs") cfg[k] = v;
    m["config"] = std::move(cfg);
    for (auto& [k, v] : extra.items()) m[k] = v;
    m["outputs"] = files_;
    std::ofstream f(dir_ / "manifest.json", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write manifest");
    f << m.dump(2) << '\n';
  }

  const fs::path& path() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

Dataset require_dataset(const KeyValueConfig& kv) {
  const auto path = kv.get("dataset");
  if (!path) throw UsageError("--dataset is required");
  return load_dataset(*path);
}

int cmd_generate(const KeyValueConfig& kv, RunDir& run, std::ostream& out) {
  const auto config = GeneratorConfig::from_config(kv);
  const auto counts = counts_from_config(kv, 60);
  const auto data = generate(config, counts);
  run.write("dataset.jsonl", [&](std::ostream& o) { write_dataset(data.dataset, o); });
  run.write("generation_log.jsonl", [&](std::ostream& o) { write_params_log(data, config, o); });
  nlohmann::ordered_json summary;
  for (auto fine : kFineClasses) {
    const auto n = counts[static_cast<std::size_t>(ordinal(fine) - 1)];
    summary[std::string(canonical_name(fine))] = n;
    out << canonical_name(fine) << ": " << n << '\n';
  }
  out << "total: " << data.dataset.size() << '\n';
  run.manifest("generate", kv, {{"counts", summary}, {"records", data.dataset.size()}});
  return kExitOk;
}

int cmd_features(const KeyValueConfig& kv, RunDir& run, std::ostream& out) {
  const auto d = require_dataset(kv);
  FeatureLayout layout{feature_kind_from_string(get_string(kv, "features", "raw")),
                       LinkSet::parse(get_string(kv, "links", "all"))};
  run.write("features.csv", [&](std::ostream& o) { write_feature_csv(d, layout, o); });
  out << d.size() << " records x " << layout.dim() << " features\n";
  run.manifest("features", kv, {{"layout", to_json(layout)}, {"dim", layout.dim()}});
  return kExitOk;
}

int cmd_train(const KeyValueConfig& kv, const PipelineConfig& pcfg, RunDir& run, std::ostream& out) {
  const auto d = require_dataset(kv);
  const auto seed = static_cast<std::uint64_t>(kv.get_int("seed", 42));
  const auto model = train_classifier(pcfg, d, seed);
  auto j = model->to_json();
  if (pcfg.model == ModelKind::RbfSvm && get_bool(kv, "rbf.base64", false)) {
    j["rbf"] = to_json(rbf_model_from_json(j["rbf"]), true);
  }
  run.write_json("model.json", j);
  std::vector<int> preds, labels;
  for (const auto& fp : d) {
    preds.push_back(model->predict(fp));
    labels.push_back(task_label(fp, pcfg.task));
  }
  const double acc = accuracy(preds, labels);
  out << "training accuracy: " << acc << '\n';
  run.write_json("train_summary.json", {{"records", d.size()},
                                        {"training_accuracy", acc},
                                        {"model_size", model->size().to_json()}});
  run.manifest("train", kv, {{"pipeline", pcfg.to_json()}});
  return kExitOk;
}

int cmd_evaluate(const KeyValueConfig& kv, const PipelineConfig& pcfg, RunDir& run, std::ostream& out) {
  const auto d = require_dataset(kv);
  const auto mode = get_string(kv, "coarse_mode", "native");
  if (mode != "native" && mode != "mapped") throw UsageError("coarse_mode must be native or mapped");
  PipelineConfig cfg = pcfg;
  // Mapped coarse results come from a fine-grained model.
  if (cfg.task == Task::Coarse && mode == "mapped") cfg.task = Task::Fine;
  const auto cv = resolve_cv(kv, cfg.task);
  auto rep = cross_validate(make_trainer(cfg), d, cv);
  rep.config = cfg.to_json();
  auto j = rep.to_json();
  j["requested_task"] = std::string(to_string(pcfg.task));
  j["coarse_mode"] = mode;
  run.write_json("report.json", j);
  run.write("confusion.csv", [&](std::ostream& o) { write_confusion_csv(rep.confusion, cfg.task, false, o); });
  run.write("confusion_normalized.csv",
            [&](std::ostream& o) { write_confusion_csv(rep.confusion, cfg.task, true, o); });
  if (rep.coarse_mapped) {
    run.write("coarse_mapped_confusion.csv",
              [&](std::ostream& o) { write_confusion_csv(*rep.coarse_mapped, Task::Coarse, false, o); });
    run.write("quotients.csv", [&](std::ostream& o) { write_quotient_csv(rep.quotients, o); });
  }
  run.write("predictions.csv", [&](std::ostream& o) {
    o << "id,fold,true,predicted\n";
    for (const auto& p : rep.predictions) {
      o << p.id << ',' << p.fold << ',' << class_name(cfg.task, p.truth) << ','
        << class_name(cfg.task, p.predicted) << '\n';
    }
  });
  for (const auto& w : rep.warnings) out << "warning: " << w << '\n';
  out << "ACC_k = " << rep.acc_k << "  sigma = " << rep.sigma << '\n';
  if (rep.coarse_mapped_accuracy) out << "coarse (mapped from fine) accuracy = " << *rep.coarse_mapped_accuracy << '\n';
  run.manifest("evaluate", kv, {{"pipeline", cfg.to_json()}});
  return kExitOk;
}

int cmd_ablate(const KeyValueConfig& kv, const PipelineConfig& pcfg, RunDir& run, std::ostream& out) {
  const auto d = require_dataset(kv);
  const auto subsets = kv.contains("ablate.subsets") ? parse_subsets(*kv.get("ablate.subsets"))
                                                     : default_ablation_subsets();
  const auto cv = resolve_cv(kv, pcfg.task);
  const auto rows = link_ablation(
      [&](const FeatureLayout& layout) {
        PipelineConfig c = pcfg;
        c.layout = layout;
        return make_trainer(c);
      },
      pcfg.layout.kind, d, subsets, cv);
  run.write("ablation.csv", [&](std::ostream& o) { write_ablation_csv(rows, o); });
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    arr.push_back({{"links", r.links.links()}, {"dim", r.dim}, {"acc_k", r.acc_k}, {"sigma", r.sigma}});
    out << '{' << r.links.to_string() << "}  dim " << r.dim << "  ACC_k " << r.acc_k << "  sigma " << r.sigma
        << '\n';
  }
  run.write_json("ablation.json", {{"task", std::string(to_string(pcfg.task))}, {"rows", arr}});
  run.manifest("ablate", kv, {{"pipeline", pcfg.to_json()}});
  return kExitOk;
}

int cmd_importance(const KeyValueConfig& kv, const PipelineConfig& pcfg, RunDir& run, std::ostream& out) {
  const auto d = require_dataset(kv);
  PipelineConfig cfg = pcfg;
  cfg.model = ModelKind::L1L2Svm;
  cfg.layout.kind = FeatureKind::Raw;
  cfg.task = Task::Fine;
  const auto model = train_classifier(cfg, d, static_cast<std::uint64_t>(kv.get_int("seed", 42)));
  const auto* lin = linear_model_of(*model);
  if (!lin) throw std::logic_error("importance: expected a linear model");
  const auto table = importance_report(*lin);
  run.write("importance.csv", [&](std::ostream& o) { write_importance_csv(table, true, o); });
  run.write("importance_counts.csv", [&](std::ostream& o) { write_importance_csv(table, false, o); });
  auto rows = [](const Matrix& m) {
    auto a = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) a.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
    return a;
  };
  run.write_json("importance.json", {{"classes", table.classes},
                                     {"all_zero", table.all_zero},
                                     {"counts", rows(table.counts)},
                                     {"normalized", rows(table.normalized)},
                                     {"model_size", model->size().to_json()}});
  if (table.all_zero) out << "warning: model has no nonzero weights; table left unnormalized\n";
  out << "nonzero weights: " << model->size().nonzero_weights << '\n';
  run.manifest("importance", kv, {{"pipeline", cfg.to_json()}});
  return kExitOk;
}

int cmd_dtw(const KeyValueConfig& kv, RunDir& run, std::ostream& out) {
  const auto d = require_dataset(kv);
  const auto links = LinkSet::parse(get_string(kv, "dtw.link", "1"));
  std::optional<std::size_t> band;
  if (kv.contains("dtw.band")) band = get_size(kv, "dtw.band", 0);
  for (auto link : links) {
    const auto m = standardized_dtw_matrix(d, link, band);
    std::vector<std::string> ids;
    for (auto i : m.order) ids.push_back(d[i].id);
    const auto tag = "dtw_link" + std::to_string(link);
    run.write(tag + "_standardized.csv", [&](std::ostream& o) { write_matrix_csv(m.values, ids, o); });
    run.write(tag + "_similarity.csv", [&](std::ostream& o) { write_matrix_csv(similarity(m.values), ids, o); });
    out << "link " << link << ": " << ids.size() << " x " << ids.size() << '\n';
  }
  nlohmann::ordered_json extra;
  extra["links"] = links.links();
  extra["band"] = band ? nlohmann::ordered_json(*band) : nlohmann::ordered_json(nullptr);
  run.manifest("dtw", kv, extra);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vehicle classification from multi-link radio fingerprints"};
  app.name("radiofp");
  app.require_subcommand(1);

  std::map<std::string, std::string> flags;
  std::vector<std::string> sets;
  std::string config_path;
  app.add_option("--config", config_path, "key = value configuration file");
  const std::vector<std::pair<std::string, std::string>> simple = {
      {"--dataset", "dataset"},        {"--model", "model"},           {"--features", "features"},
      {"--links", "links"},            {"--task", "task"},             {"--k", "k"},
      {"--seed", "seed"},              {"--jobs", "jobs"},             {"--out", "out"},
      {"--C", "C"},                    {"--gamma", "rbf.gamma"},       {"--trees", "forest.n_trees"},
      {"--max-depth", "forest.max_depth"}, {"--epochs", "convnet.epochs"}, {"--standardize", "standardize"},
      {"--stratified", "stratified"},  {"--coarse-mode", "coarse_mode"}, {"--subsets", "ablate.subsets"},
      {"--link", "dtw.link"},          {"--band", "dtw.band"},         {"--per-class", "per_class"},
      {"--per-coarse", "per_coarse"},  {"--noise", "noise_std"},
  };
  for (const auto& [flag, key] : simple) {
    app.add_option(flag, flags[key], "sets '" + key + "'");
  }
  app.add_option("--set", sets, "KEY=VALUE override, repeatable");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"generate", "Write a synthetic dataset and its parameter log"},
      {"features", "Export the feature matrix as CSV"},
      {"train", "Train on the whole dataset and save the model"},
      {"evaluate", "k-fold cross-validation report"},
      {"ablate", "Cross-validated accuracy per link subset"},
      {"importance", "Per-link share of nonzero L1 weights per class"},
      {"dtw", "Standardized DTW similarity matrices"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  KeyValueConfig kv;
  PipelineConfig pcfg;
  std::optional<RunDir> run;
  try {
    if (!config_path.empty()) kv = KeyValueConfig::load(config_path);
    for (const auto& [flag, key] : simple) {
      if (app.count(flag) > 0) kv.set(key, flags[key]);
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw UsageError("--set expects KEY=VALUE, got '" + s + "'");
      kv.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (kv.contains("jobs")) {
      const auto jobs = kv.get_int("jobs", 1);
      if (jobs < 1) throw ConfigError("jobs must be >= 1");
      set_jobs(static_cast<int>(jobs));
    }
    pcfg = resolve_pipeline(kv);
  } catch (const std::exception& e) {
    err << "radiofp: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    run.emplace(get_string(kv, "out", "run"));
    if (command == "generate") return cmd_generate(kv, *run, out);
    if (command == "features") return cmd_features(kv, *run, out);
    if (command == "train") return cmd_train(kv, pcfg, *run, out);
    if (command == "evaluate") return cmd_evaluate(kv, pcfg, *run, out);
    if (command == "ablate") return cmd_ablate(kv, pcfg, *run, out);
    if (command == "importance") return cmd_importance(kv, pcfg, *run, out);
    if (command == "dtw") return cmd_dtw(kv, *run, out);
  } catch (const UsageError& e) {
    err << "radiofp: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "radiofp: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "radiofp: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << "radiofp: unknown command\n";
  return kExitUsage;
}

}  // namespace radiofp
