#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "radiofp/matrix.hpp"

namespace radiofp {

inline constexpr std::size_t kLinkCount = 9;
inline constexpr std::size_t kSamplesPerLink = 800;

// Fine-grained vehicle classes. Ordinals match the confusion-matrix order.
enum class FineClass : int {
  PassengerCar = 1,
  PassengerCarWithTrailer = 2,
  SUV = 3,
  Minivan = 4,
  Van = 5,
  Truck = 6,
  TruckWithTrailer = 7,
  Bus = 8,
  SemiTruck = 9,
};

enum class CoarseClass : int { CarLike = 1, TruckLike = 2 };

inline constexpr std::array<FineClass, 9> kFineClasses = {
    FineClass::PassengerCar, FineClass::PassengerCarWithTrailer, FineClass::SUV,
    FineClass::Minivan,      FineClass::Van,                     FineClass::Truck,
    FineClass::TruckWithTrailer, FineClass::Bus,                 FineClass::SemiTruck,
};

inline constexpr std::array<CoarseClass, 2> kCoarseClasses = {CoarseClass::CarLike,
                                                               CoarseClass::TruckLike};

constexpr int ordinal(FineClass c) noexcept { return static_cast<int>(c); }
constexpr int ordinal(CoarseClass c) noexcept { return static_cast<int>(c); }

CoarseClass coarse_of(FineClass fine) noexcept;
FineClass fine_from_ordinal(int ordinal);

// snake_case names used in dataset files.
std::string_view canonical_name(FineClass fine) noexcept;
std::string_view canonical_name(CoarseClass coarse) noexcept;
std::optional<FineClass> fine_from_name(std::string_view name) noexcept;

struct TaxonomyEntry {
  FineClass fine;
  std::string_view label;
  CoarseClass coarse;
  int field_samples;  // passages recorded per class in the field campaign
};

const std::array<TaxonomyEntry, 9>& taxonomy() noexcept;

// One vehicle passage: kLinkCount x kSamplesPerLink RSSI values in dBm.
// Row i holds link i+1.
struct Fingerprint {
  std::string id;
  FineClass fine = FineClass::PassengerCar;
  Matrix series;

  // Throws std::invalid_argument on wrong shape or non-finite samples.
  void validate() const;
  bool operator==(const Fingerprint&) const = default;
};

class Dataset {
 public:
  Dataset() = default;

  // Validates the record and rejects duplicate ids.
  void add(Fingerprint fp);

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const Fingerprint& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<Fingerprint>& records() const noexcept { return records_; }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

  bool operator==(const Dataset& other) const { return records_ == other.records_; }

 private:
  std::vector<Fingerprint> records_;
  std::unordered_set<std::string> ids_;
};

// Raised for malformed dataset input; line() is 1-based, 0 when not line bound.
class DataError : public std::runtime_error {
 public:
  DataError(std::size_t line, const std::string& what)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

Dataset read_dataset(std::istream& in);
void write_dataset(const Dataset& d, std::ostream& out);
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& d, const std::filesystem::path& path);

struct SegmentParams {
  double baseline = -50.0;     // dBm
  double drop_threshold = 10;  // dB below baseline
  std::size_t min_drop_len = 5;
  std::array<std::size_t, 3> trigger_links = {1, 5, 9};  // direct links
};

struct StreamWindow {
  std::size_t run_begin;  // first sample of the triggering run
  std::size_t run_end;    // one past the last sample of the run
  std::ptrdiff_t start;   // stream index of window column 0 (may be negative)
  Matrix series;          // kLinkCount x kSamplesPerLink
};

// Cuts a continuous 9-channel capture (rows = links) into passage windows
// centered on each attenuation run of the trigger links.
std::vector<StreamWindow> segment_stream(const Matrix& stream, const SegmentParams& params);

}  // namespace radiofp
