#include "radiofp/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace radiofp {

LinkSet::LinkSet(std::vector<std::size_t> links) : links_(std::move(links)) {
  std::sort(links_.begin(), links_.end());
  links_.erase(std::unique(links_.begin(), links_.end()), links_.end());
  for (auto l : links_) {
    if (l < 1 || l > kLinkCount) {
      throw std::invalid_argument("link index out of range 1..9: " + std::to_string(l));
    }
  }
}

LinkSet LinkSet::all() {
  std::vector<std::size_t> v(kLinkCount);
  std::iota(v.begin(), v.end(), std::size_t{1});
  return LinkSet(std::move(v));
}

LinkSet LinkSet::parse(std::string_view text) {
  if (text == "all") return all();
  std::vector<std::size_t> links;
  std::stringstream ss{std::string(text)};
  std::string item;
  auto to_index = [](const std::string& s) -> std::size_t {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(s, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("invalid link '" + s + "'");
    }
    if (pos != s.size() || v < 1) throw std::invalid_argument("invalid link '" + s + "'");
    return static_cast<std::size_t>(v);
  };
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash != std::string::npos) {
      const auto lo = to_index(item.substr(0, dash));
      const auto hi = to_index(item.substr(dash + 1));
      for (auto l = lo; l <= hi; ++l) links.push_back(l);
    } else {
      links.push_back(to_index(item));
    }
  }
  if (links.empty()) throw std::invalid_argument("empty link subset");
  return LinkSet(std::move(links));
}

std::string LinkSet::to_string() const {
  std::string s;
  for (auto l : links_) {
    if (!s.empty()) s += ',';
    s += std::to_string(l);
  }
  return s;
}

std::string_view to_string(FeatureKind kind) noexcept {
  return kind == FeatureKind::Raw ? "raw" : "reduced";
}

FeatureKind feature_kind_from_string(std::string_view text) {
  if (text == "raw") return FeatureKind::Raw;
  if (text == "reduced") return FeatureKind::Reduced;
  throw std::invalid_argument("unknown feature kind '" + std::string(text) + "'");
}

std::vector<double> raw_features(const Fingerprint& fp, const LinkSet& links) {
  if (links.empty()) throw std::invalid_argument("raw_features: empty link subset");
  std::vector<double> out;
  out.reserve(links.size() * fp.series.cols());
  for (auto l : links) {
    const auto row = fp.series.row(l - 1);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

namespace {

template <typename Before>
std::array<Extremum, 3> top3(std::span<const double> s, Before before) {
  if (s.size() < 3) throw std::invalid_argument("extrema need at least three samples");
  std::array<Extremum, 3> best{};
  std::size_t filled = 0;
  // Single pass insertion into a sorted top-3; strict comparison keeps the
  // earlier index ahead on ties.
  for (std::size_t t = 0; t < s.size(); ++t) {
    const Extremum cand{t, s[t]};
    std::size_t k = filled;
    while (k > 0 && before(cand.value, best[k - 1].value)) --k;
    if (k >= 3) continue;
    for (std::size_t m = std::min<std::size_t>(filled, 2); m > k; --m) best[m] = best[m - 1];
    best[k] = cand;
    filled = std::min<std::size_t>(filled + 1, 3);
  }
  return best;
}

}  // namespace

std::array<Extremum, 3> top_minima(std::span<const double> series) {
  return top3(series, [](double a, double b) { return a < b; });
}

std::array<Extremum, 3> top_maxima(std::span<const double> series) {
  return top3(series, [](double a, double b) { return a > b; });
}

std::vector<double> reduced_features(const Fingerprint& fp, const LinkSet& links) {
  if (links.empty()) throw std::invalid_argument("reduced_features: empty link subset");
  std::vector<double> out;
  out.reserve(links.size() * kReducedPerLink);
  for (auto l : links) {
    const auto row = fp.series.row(l - 1);
    for (const auto& e : top_minima(row)) {
      out.push_back(static_cast<double>(e.position));
      out.push_back(e.value);
    }
    for (const auto& e : top_maxima(row)) {
      out.push_back(static_cast<double>(e.position));
      out.push_back(e.value);
    }
    double s1 = 0, s2 = 0, s3 = 0;
    for (double v : row) {
      s1 += v;
      s2 += v * v;
      s3 += v * v * v;
    }
    out.push_back(s1);
    out.push_back(s2);
    out.push_back(s3);
  }
  return out;
}

std::vector<double> extract_features(const Fingerprint& fp, const FeatureLayout& layout) {
  return layout.kind == FeatureKind::Raw ? raw_features(fp, layout.links)
                                         : reduced_features(fp, layout.links);
}

Matrix feature_matrix(std::span<const Fingerprint* const> records, const FeatureLayout& layout) {
  Matrix x(records.size(), layout.dim());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto f = extract_features(*records[i], layout);
    std::copy(f.begin(), f.end(), x.row(i).begin());
  }
  return x;
}

Matrix feature_matrix(const Dataset& d, const FeatureLayout& layout) {
  std::vector<const Fingerprint*> ptrs;
  for (const auto& fp : d) ptrs.push_back(&fp);
  return feature_matrix(ptrs, layout);
}

std::vector<std::string> feature_names(const FeatureLayout& layout) {
  std::vector<std::string> names;
  char buf[32];
  for (auto l : layout.links) {
    if (layout.kind == FeatureKind::Raw) {
      for (std::size_t t = 0; t < kSamplesPerLink; ++t) {
        std::snprintf(buf, sizeof buf, "l%zu_t%03zu", l, t);
        names.emplace_back(buf);
      }
    } else {
      for (const char* kind : {"min", "max"}) {
        for (int rank = 1; rank <= 3; ++rank) {
          for (const char* part : {"pos", "val"}) {
            std::snprintf(buf, sizeof buf, "l%zu_%s%d_%s", l, kind, rank, part);
            names.emplace_back(buf);
          }
        }
      }
      for (int p = 1; p <= 3; ++p) {
        std::snprintf(buf, sizeof buf, "l%zu_pow%d", l, p);
        names.emplace_back(buf);
      }
    }
  }
  return names;
}

void write_feature_csv(const Dataset& d, const FeatureLayout& layout, std::ostream& out) {
  out << "id,fine_class";
  for (const auto& n : feature_names(layout)) out << ',' << n;
  out << '\n';
  char buf[32];
  for (const auto& fp : d) {
    out << fp.id << ',' << canonical_name(fp.fine);
    for (double v : extract_features(fp, layout)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

std::size_t Scaler::constant_count() const {
  return static_cast<std::size_t>(std::count(stddev.begin(), stddev.end(), 0.0));
}

Scaler standardize_fit(const Matrix& x) {
  if (x.rows() == 0) throw std::invalid_argument("standardize_fit: empty matrix");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Scaler s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = x.row(i);
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
  }
  for (auto& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = x.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double c = r[j] - s.mean[j];
      s.stddev[j] += c * c;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    s.stddev[j] = std::sqrt(s.stddev[j] / static_cast<double>(n));
    // Columns that are constant up to rounding are treated as constant.
    if (s.stddev[j] <= 1e-12 * std::max(1.0, std::abs(s.mean[j]))) s.stddev[j] = 0.0;
  }
  return s;
}

void standardize_apply_inplace(const Scaler& s, std::span<double> row) {
  if (row.size() != s.dim()) throw std::invalid_argument("standardize_apply: dimension mismatch");
  for (std::size_t j = 0; j < row.size(); ++j) {
    row[j] = s.stddev[j] == 0.0 ? 0.0 : (row[j] - s.mean[j]) / s.stddev[j];
  }
}

Matrix standardize_apply(const Scaler& s, const Matrix& x) {
  if (x.cols() != s.dim()) throw std::invalid_argument("standardize_apply: dimension mismatch");
  Matrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) standardize_apply_inplace(s, out.row(i));
  return out;
}

}  // namespace radiofp
