#include "radiofp/model_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>

namespace radiofp {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::string b64_encode(const std::vector<unsigned char>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<unsigned char> b64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64: length not a multiple of 4");
  std::vector<unsigned char> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::array<int, 4> v{};
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        v[k] = 0;
        ++pad;
        continue;
      }
      if (pad > 0) throw std::invalid_argument("base64: misplaced padding");
      v[k] = b64_value(c);
      if (v[k] < 0) throw std::invalid_argument("base64: invalid character");
    }
    const std::uint32_t w = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out.push_back(static_cast<unsigned char>((w >> 16) & 0xFF));
    if (pad < 2) out.push_back(static_cast<unsigned char>((w >> 8) & 0xFF));
    if (pad < 1) out.push_back(static_cast<unsigned char>(w & 0xFF));
  }
  return out;
}

template <class T>
T require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw std::invalid_argument(std::string("model json: missing key '") + key + "'");
  return j.at(key).get<T>();
}

}  // namespace

std::string encode_doubles(std::span<const double> values) {
  std::vector<unsigned char> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  return b64_encode(bytes);
}

std::vector<double> decode_doubles(const std::string& text) {
  const auto bytes = b64_decode(text);
  if (bytes.size() % 8 != 0) throw std::invalid_argument("base64: not a whole number of doubles");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

nlohmann::ordered_json to_json(const FeatureLayout& layout) {
  return {{"kind", std::string(to_string(layout.kind))}, {"links", layout.links.links()}};
}

FeatureLayout layout_from_json(const nlohmann::json& j) {
  FeatureLayout l;
  l.kind = feature_kind_from_string(require<std::string>(j, "kind"));
  l.links = LinkSet(require<std::vector<std::size_t>>(j, "links"));
  return l;
}

nlohmann::ordered_json to_json(const Scaler& s) {
  return {{"mean", s.mean}, {"stddev", s.stddev}};
}

Scaler scaler_from_json(const nlohmann::json& j) {
  Scaler s{require<std::vector<double>>(j, "mean"), require<std::vector<double>>(j, "stddev")};
  if (s.mean.size() != s.stddev.size()) throw std::invalid_argument("scaler json: size mismatch");
  return s;
}

nlohmann::ordered_json to_json(const LinearModel& m) {
  nlohmann::ordered_json j;
  j["type"] = "linear_svm";
  j["regularizer"] = std::string(to_string(m.reg));
  j["C"] = m.c;
  j["layout"] = to_json(m.layout);
  j["classes"] = m.classes;
  j["weights"] = m.weights;
  return j;
}

LinearModel linear_model_from_json(const nlohmann::json& j) {
  LinearModel m;
  const auto reg = require<std::string>(j, "regularizer");
  if (reg == "l1") {
    m.reg = Regularizer::L1;
  } else if (reg == "l2") {
    m.reg = Regularizer::L2;
  } else {
    throw std::invalid_argument("linear model json: unknown regularizer '" + reg + "'");
  }
  m.c = require<double>(j, "C");
  m.layout = layout_from_json(j.at("layout"));
  m.classes = require<std::vector<int>>(j, "classes");
  m.weights = require<std::vector<std::vector<double>>>(j, "weights");
  if (m.weights.size() != m.classes.size()) throw std::invalid_argument("linear model json: one weight vector per class");
  for (const auto& w : m.weights) {
    if (w.size() != m.layout.dim()) throw std::invalid_argument("linear model json: weight length != layout dim");
  }
  return m;
}

nlohmann::ordered_json to_json(const RbfModel& m, bool base64) {
  nlohmann::ordered_json j;
  j["type"] = "rbf_svm";
  j["C"] = m.c;
  j["gamma"] = m.gamma;
  j["layout"] = to_json(m.layout);
  j["classes"] = m.classes;
  j["n_support"] = m.support_vectors.rows();
  j["dim"] = m.support_vectors.cols();
  j["support_index"] = m.support_index;
  if (base64) {
    j["support_vectors_b64"] = encode_doubles(m.support_vectors.data());
  } else {
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < m.support_vectors.rows(); ++r) {
      const auto row = m.support_vectors.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["support_vectors"] = std::move(rows);
  }
  auto parts = nlohmann::ordered_json::array();
  for (const auto& p : m.parts) {
    parts.push_back({{"sv", p.sv}, {"coef", p.coef}, {"bias", p.bias}});
  }
  j["parts"] = std::move(parts);
  j["kkt_violation"] = m.kkt_violation;
  return j;
}

RbfModel rbf_model_from_json(const nlohmann::json& j) {
  RbfModel m;
  m.c = require<double>(j, "C");
  m.gamma = require<double>(j, "gamma");
  m.layout = layout_from_json(j.at("layout"));
  m.classes = require<std::vector<int>>(j, "classes");
  const auto n = require<std::size_t>(j, "n_support");
  const auto d = require<std::size_t>(j, "dim");
  m.support_index = require<std::vector<std::size_t>>(j, "support_index");
  if (j.contains("support_vectors_b64")) {
    m.support_vectors = Matrix(n, d, decode_doubles(j.at("support_vectors_b64").get<std::string>()));
  } else {
    const auto rows = require<std::vector<std::vector<double>>>(j, "support_vectors");
    if (rows.size() != n) throw std::invalid_argument("rbf model json: support vector count mismatch");
    m.support_vectors = n == 0 ? Matrix(0, d) : stack_rows(rows);
    if (m.support_vectors.cols() != d) throw std::invalid_argument("rbf model json: dim mismatch");
  }
  for (const auto& p : j.at("parts")) {
    RbfPart part;
    part.sv = require<std::vector<std::uint32_t>>(p, "sv");
    part.coef = require<std::vector<double>>(p, "coef");
    part.bias = require<double>(p, "bias");
    if (part.sv.size() != part.coef.size()) throw std::invalid_argument("rbf model json: sv/coef mismatch");
    for (auto s : part.sv) {
      if (s >= n) throw std::invalid_argument("rbf model json: support vector index out of range");
    }
    m.parts.push_back(std::move(part));
  }
  if (m.parts.size() != m.classes.size()) throw std::invalid_argument("rbf model json: one part per class");
  if (j.contains("kkt_violation")) m.kkt_violation = j.at("kkt_violation").get<std::vector<double>>();
  return m;
}

namespace {

nlohmann::ordered_json node_json(const Tree& t, std::int32_t i) {
  const auto& n = t.nodes.at(static_cast<std::size_t>(i));
  if (n.is_leaf()) return {{"val", n.label}};
  return {{"idx", n.feature},
          {"val", n.threshold},
          {"children", {node_json(t, n.left), node_json(t, n.right)}}};
}

std::int32_t node_from_json(const nlohmann::json& j, Tree& t) {
  const auto index = static_cast<std::int32_t>(t.nodes.size());
  t.nodes.emplace_back();
  if (!j.contains("idx")) {
    t.nodes[index].label = require<int>(j, "val");
    return index;
  }
  const auto feature = require<std::int32_t>(j, "idx");
  const auto threshold = require<double>(j, "val");
  const auto& children = j.at("children");
  if (!children.is_array() || children.size() != 2) throw std::invalid_argument("forest json: need two children");
  const auto left = node_from_json(children[0], t);
  const auto right = node_from_json(children[1], t);
  auto& n = t.nodes[index];
  n.feature = feature;
  n.threshold = threshold;
  n.left = left;
  n.right = right;
  return index;
}

}  // namespace

nlohmann::ordered_json to_json(const Forest& f) {
  nlohmann::ordered_json j;
  j["type"] = "random_forest";
  j["layout"] = to_json(f.layout);
  j["dim"] = f.dim;
  j["classes"] = f.classes;
  j["options"] = {{"n_trees", f.options.n_trees},
                  {"max_depth", f.options.max_depth},
                  {"min_leaf", f.options.min_leaf},
                  {"feature_subset", f.options.feature_subset},
                  {"bootstrap", f.options.bootstrap},
                  {"per_node_sampling", f.options.per_node_sampling},
                  {"seed", f.options.seed}};
  j["tree_seeds"] = f.tree_seeds;
  auto trees = nlohmann::ordered_json::array();
  for (const auto& t : f.trees) trees.push_back(node_json(t, 0));
  j["trees"] = std::move(trees);
  return j;
}

Forest forest_from_json(const nlohmann::json& j) {
  Forest f;
  f.layout = layout_from_json(j.at("layout"));
  f.dim = require<std::size_t>(j, "dim");
  f.classes = require<std::vector<int>>(j, "classes");
  const auto& o = j.at("options");
  f.options.n_trees = require<std::size_t>(o, "n_trees");
  f.options.max_depth = require<std::size_t>(o, "max_depth");
  f.options.min_leaf = require<std::size_t>(o, "min_leaf");
  f.options.feature_subset = require<std::size_t>(o, "feature_subset");
  f.options.bootstrap = require<bool>(o, "bootstrap");
  f.options.per_node_sampling = require<bool>(o, "per_node_sampling");
  f.options.seed = require<std::uint64_t>(o, "seed");
  f.tree_seeds = require<std::vector<std::uint64_t>>(j, "tree_seeds");
  for (const auto& tj : j.at("trees")) {
    Tree t;
    node_from_json(tj, t);
    for (const auto& n : t.nodes) {
      if (!n.is_leaf() && static_cast<std::size_t>(n.feature) >= f.dim) {
        throw std::invalid_argument("forest json: feature index out of range");
      }
    }
    f.trees.push_back(std::move(t));
  }
  return f;
}

nlohmann::ordered_json to_json(const NetworkSpec& s) {
  return {{"links", s.links},
          {"input_len", s.input_len},
          {"filters", s.filters},
          {"filter_width", s.filter_width},
          {"conv_stride", s.conv_stride},
          {"pooling", s.pooling},
          {"pool_window", s.pool_window},
          {"pool_stride", s.pool_stride},
          {"hidden", s.hidden},
          {"n_classes", s.n_classes},
          {"batch_norm", s.batch_norm},
          {"bn_eps", s.bn_eps},
          {"bn_momentum", s.bn_momentum}};
}

NetworkSpec network_spec_from_json(const nlohmann::json& j) {
  NetworkSpec s;
  s.links = require<std::size_t>(j, "links");
  s.input_len = require<std::size_t>(j, "input_len");
  s.filters = require<std::size_t>(j, "filters");
  s.filter_width = require<std::size_t>(j, "filter_width");
  s.conv_stride = require<std::size_t>(j, "conv_stride");
  s.pooling = require<bool>(j, "pooling");
  s.pool_window = require<std::size_t>(j, "pool_window");
  s.pool_stride = require<std::size_t>(j, "pool_stride");
  s.hidden = require<std::array<std::size_t, 3>>(j, "hidden");
  s.n_classes = require<std::size_t>(j, "n_classes");
  s.batch_norm = require<bool>(j, "batch_norm");
  s.bn_eps = require<double>(j, "bn_eps");
  s.bn_momentum = require<double>(j, "bn_momentum");
  s.validate();
  return s;
}

nlohmann::ordered_json to_json(const NetworkParams& p) {
  nlohmann::ordered_json j;
  j["conv_w"] = p.conv_w;
  j["conv_b"] = p.conv_b;
  j["fc_w"] = p.fc_w;
  j["fc_b"] = p.fc_b;
  j["bn_gamma"] = p.bn_gamma;
  j["bn_beta"] = p.bn_beta;
  j["bn_running_mean"] = p.bn_running_mean;
  j["bn_running_var"] = p.bn_running_var;
  return j;
}

NetworkParams network_params_from_json(const nlohmann::json& j) {
  NetworkParams p;
  p.conv_w = require<std::vector<double>>(j, "conv_w");
  p.conv_b = require<std::vector<double>>(j, "conv_b");
  p.fc_w = require<std::array<std::vector<double>, 4>>(j, "fc_w");
  p.fc_b = require<std::array<std::vector<double>, 4>>(j, "fc_b");
  p.bn_gamma = require<std::vector<double>>(j, "bn_gamma");
  p.bn_beta = require<std::vector<double>>(j, "bn_beta");
  p.bn_running_mean = require<std::vector<double>>(j, "bn_running_mean");
  p.bn_running_var = require<std::vector<double>>(j, "bn_running_var");
  return p;
}

}  // namespace radiofp
