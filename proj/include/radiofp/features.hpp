#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "radiofp/domain.hpp"
#include "radiofp/matrix.hpp"

namespace radiofp {

// Sorted, duplicate-free subset of the 1-based link indices 1..9.
class LinkSet {
 public:
  LinkSet() = default;
  explicit LinkSet(std::vector<std::size_t> links);

  static LinkSet all();
  // Accepts "1,5,9", ranges such as "1-9", or "all".
  static LinkSet parse(std::string_view text);

  std::size_t size() const noexcept { return links_.size(); }
  bool empty() const noexcept { return links_.empty(); }
  const std::vector<std::size_t>& links() const noexcept { return links_; }
  auto begin() const { return links_.begin(); }
  auto end() const { return links_.end(); }
  std::string to_string() const;

  bool operator==(const LinkSet&) const = default;

 private:
  std::vector<std::size_t> links_;
};

enum class FeatureKind { Raw, Reduced };

std::string_view to_string(FeatureKind kind) noexcept;
FeatureKind feature_kind_from_string(std::string_view text);

inline constexpr std::size_t kReducedPerLink = 15;

// Layout descriptor stored with every trained vector model.
struct FeatureLayout {
  FeatureKind kind = FeatureKind::Raw;
  LinkSet links = LinkSet::all();

  std::size_t dim() const noexcept {
    return links.size() * (kind == FeatureKind::Raw ? kSamplesPerLink : kReducedPerLink);
  }
  bool operator==(const FeatureLayout&) const = default;
};

// Link-major concatenation of the selected links' samples.
std::vector<double> raw_features(const Fingerprint& fp, const LinkSet& links);

struct Extremum {
  std::size_t position;
  double value;
  bool operator==(const Extremum&) const = default;
};

// Three smallest / largest samples; ties go to the smaller sample index.
// Requires at least three samples.
std::array<Extremum, 3> top_minima(std::span<const double> series);
std::array<Extremum, 3> top_maxima(std::span<const double> series);

// Per link: (pos, val) of minima ranks 1..3, (pos, val) of maxima ranks 1..3,
// then the power sums of orders 1, 2 and 3.
std::vector<double> reduced_features(const Fingerprint& fp, const LinkSet& links);

std::vector<double> extract_features(const Fingerprint& fp, const FeatureLayout& layout);
Matrix feature_matrix(std::span<const Fingerprint* const> records, const FeatureLayout& layout);
Matrix feature_matrix(const Dataset& d, const FeatureLayout& layout);

// Column names, e.g. "l3_t017" (raw) or "l3_min2_pos", "l3_pow2" (reduced).
std::vector<std::string> feature_names(const FeatureLayout& layout);

// CSV with header `id,fine_class,<feature names>`.
void write_feature_csv(const Dataset& d, const FeatureLayout& layout, std::ostream& out);

// Per-feature z-scoring with population standard deviation.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t dim() const noexcept { return mean.size(); }
  bool is_constant(std::size_t j) const { return stddev[j] == 0.0; }
  std::size_t constant_count() const;
  bool operator==(const Scaler&) const = default;
};

Scaler standardize_fit(const Matrix& x);
// Zero-std columns map to 0.
Matrix standardize_apply(const Scaler& s, const Matrix& x);
void standardize_apply_inplace(const Scaler& s, std::span<double> row);

}  // namespace radiofp
