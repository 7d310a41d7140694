#include "radiofp/domain.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace radiofp {

namespace {

constexpr std::array<std::string_view, 9> kCanonicalNames = {
    "passenger_car", "passenger_car_with_trailer", "suv", "minivan", "van",
    "truck",         "truck_with_trailer",         "bus", "semi_truck",
};

constexpr std::array<TaxonomyEntry, 9> kTaxonomy = {{
    {FineClass::PassengerCar, "Passenger car", CoarseClass::CarLike, 1528},
    {FineClass::PassengerCarWithTrailer, "Passenger car with trailer", CoarseClass::CarLike, 19},
    {FineClass::SUV, "SUV", CoarseClass::CarLike, 93},
    {FineClass::Minivan, "Minivan", CoarseClass::CarLike, 128},
    {FineClass::Van, "Van", CoarseClass::CarLike, 172},
    {FineClass::Truck, "Truck", CoarseClass::TruckLike, 75},
    {FineClass::TruckWithTrailer, "Truck with trailer", CoarseClass::TruckLike, 52},
    {FineClass::Bus, "Bus", CoarseClass::TruckLike, 5},
    {FineClass::SemiTruck, "Semi truck", CoarseClass::TruckLike, 563},
}};

}  // namespace

CoarseClass coarse_of(FineClass fine) noexcept {
  return ordinal(fine) <= 5 ? CoarseClass::CarLike : CoarseClass::TruckLike;
}

FineClass fine_from_ordinal(int ord) {
  if (ord < 1 || ord > 9) {
    throw std::invalid_argument("fine class ordinal out of range: " + std::to_string(ord));
  }
  return static_cast<FineClass>(ord);
}

std::string_view canonical_name(FineClass fine) noexcept {
  return kCanonicalNames[static_cast<std::size_t>(ordinal(fine) - 1)];
}

std::string_view canonical_name(CoarseClass coarse) noexcept {
  return coarse == CoarseClass::CarLike ? "car_like" : "truck_like";
}

std::optional<FineClass> fine_from_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kCanonicalNames.size(); ++i) {
    if (kCanonicalNames[i] == name) return static_cast<FineClass>(static_cast<int>(i) + 1);
  }
  return std::nullopt;
}

const std::array<TaxonomyEntry, 9>& taxonomy() noexcept { return kTaxonomy; }

void Fingerprint::validate() const {
  if (series.rows() != kLinkCount || series.cols() != kSamplesPerLink) {
    throw std::invalid_argument("fingerprint '" + id + "': series must be " +
                                std::to_string(kLinkCount) + "x" + std::to_string(kSamplesPerLink) +
                                ", got " + std::to_string(series.rows()) + "x" +
                                std::to_string(series.cols()));
  }
  for (double v : series.data()) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("fingerprint '" + id + "': non-finite sample");
    }
  }
}

void Dataset::add(Fingerprint fp) {
  fp.validate();
  if (!ids_.insert(fp.id).second) {
    throw std::invalid_argument("duplicate fingerprint id '" + fp.id + "'");
  }
  records_.push_back(std::move(fp));
}

Dataset read_dataset(std::istream& in) {
  Dataset d;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("fine_class") ||
        !obj.contains("series")) {
      throw DataError(line_no, "expected object with id, fine_class and series");
    }
    if (!obj["id"].is_string() || !obj["fine_class"].is_string()) {
      throw DataError(line_no, "id and fine_class must be strings");
    }

    Fingerprint fp;
    fp.id = obj["id"].get<std::string>();
    const auto class_name = obj["fine_class"].get<std::string>();
    const auto fine = fine_from_name(class_name);
    if (!fine) throw DataError(line_no, "unknown class name '" + class_name + "'");
    fp.fine = *fine;

    const auto& series = obj["series"];
    if (!series.is_array() || series.size() != kLinkCount) {
      throw DataError(line_no, "series must hold " + std::to_string(kLinkCount) + " links");
    }
    fp.series = Matrix(kLinkCount, kSamplesPerLink);
    for (std::size_t l = 0; l < kLinkCount; ++l) {
      const auto& link = series[l];
      if (!link.is_array() || link.size() != kSamplesPerLink) {
        throw DataError(line_no, "link " + std::to_string(l + 1) + " must hold " +
                                     std::to_string(kSamplesPerLink) + " samples, got " +
                                     std::to_string(link.is_array() ? link.size() : 0));
      }
      for (std::size_t t = 0; t < kSamplesPerLink; ++t) {
        if (!link[t].is_number()) throw DataError(line_no, "non-numeric sample");
        fp.series(l, t) = link[t].get<double>();
      }
    }
    try {
      d.add(std::move(fp));
    } catch (const std::invalid_argument& e) {
      throw DataError(line_no, e.what());
    }
  }
  return d;
}

void write_dataset(const Dataset& d, std::ostream& out) {
  for (const auto& fp : d) {
    nlohmann::ordered_json obj;
    obj["id"] = fp.id;
    obj["fine_class"] = canonical_name(fp.fine);
    auto series = nlohmann::ordered_json::array();
    for (std::size_t l = 0; l < fp.series.rows(); ++l) {
      const auto row = fp.series.row(l);
      series.push_back(std::vector<double>(row.begin(), row.end()));
    }
    obj["series"] = std::move(series);
    out << obj.dump() << '\n';
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(0, "cannot open dataset '" + path.string() + "'");
  return read_dataset(in);
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write dataset '" + path.string() + "'");
  write_dataset(d, out);
  if (!out) throw std::runtime_error("I/O error while writing '" + path.string() + "'");
}

std::vector<StreamWindow> segment_stream(const Matrix& stream, const SegmentParams& params) {
  if (params.drop_threshold <= 0) throw std::invalid_argument("drop_threshold must be > 0");
  if (params.min_drop_len < 1) throw std::invalid_argument("min_drop_len must be >= 1");
  if (stream.rows() != kLinkCount) {
    throw std::invalid_argument("stream must have " + std::to_string(kLinkCount) + " channels");
  }
  for (auto link : params.trigger_links) {
    if (link < 1 || link > kLinkCount) throw std::invalid_argument("trigger link out of range");
  }

  std::vector<StreamWindow> windows;
  const std::size_t len = stream.cols();
  if (len < params.min_drop_len) return windows;

  const double level = params.baseline - params.drop_threshold;
  auto below = [&](std::size_t t) {
    for (auto link : params.trigger_links) {
      if (stream(link - 1, t) < level) return true;
    }
    return false;
  };

  const auto half = static_cast<std::ptrdiff_t>(kSamplesPerLink / 2);
  std::size_t t = 0;
  while (t < len) {
    if (!below(t)) {
      ++t;
      continue;
    }
    const std::size_t begin = t;
    while (t < len && below(t)) ++t;
    const std::size_t end = t;
    if (end - begin < params.min_drop_len) continue;

    StreamWindow w;
    w.run_begin = begin;
    w.run_end = end;
    const auto mid = static_cast<std::ptrdiff_t>((begin + end - 1) / 2);
    w.start = mid - half;
    w.series = Matrix(kLinkCount, kSamplesPerLink, params.baseline);
    for (std::size_t c = 0; c < kSamplesPerLink; ++c) {
      const std::ptrdiff_t src = w.start + static_cast<std::ptrdiff_t>(c);
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
      for (std::size_t l = 0; l < kLinkCount; ++l) {
        w.series(l, c) = stream(l, static_cast<std::size_t>(src));
      }
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

}  // namespace radiofp
