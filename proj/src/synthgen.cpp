#include "radiofp/synthgen.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include <json.hpp>

namespace radiofp {

namespace {

constexpr double kCenterLo = 200.0;
constexpr double kCenterHi = 600.0;
// Consecutive dips of one passage are placed this fraction of their mean
// duration apart.
constexpr double kDipSpacing = 0.75;

DipProfile make_profile(int n_dips, double dmin, double dmax, double tmin, double tmax) {
  return DipProfile{n_dips, {dmin, dmax}, {tmin, tmax}, default_link_scale()};
}

std::string record_id(FineClass fine, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", index);
  return std::string(canonical_name(fine)) + "-" + buf;
}

}  // namespace

std::array<double, kLinkCount> default_link_scale() {
  return {1.0, 0.6, 0.4, 0.6, 1.0, 0.6, 0.4, 0.6, 1.0};
}

GeneratorConfig GeneratorConfig::defaults() {
  GeneratorConfig c;
  // Car-like depths stay below 14 dB and truck-like depths start at 15 dB,
  // so the noise-free minimum values of the two coarse classes never overlap.
  c.profiles = {
      make_profile(1, 6, 8, 40, 60),      // passenger car
      make_profile(2, 6, 8, 40, 60),      // passenger car with trailer
      make_profile(1, 8, 10, 60, 80),     // SUV
      make_profile(1, 10, 12, 80, 100),   // minivan
      make_profile(1, 12, 14, 100, 120),  // van
      make_profile(1, 15, 18, 120, 150),  // truck
      make_profile(2, 15, 18, 120, 150),  // truck with trailer
      make_profile(1, 18, 21, 160, 200),  // bus
      make_profile(1, 21, 25, 200, 240),  // semi truck
  };
  return c;
}

GeneratorConfig GeneratorConfig::from_config(const KeyValueConfig& kv) {
  GeneratorConfig c = defaults();
  c.baseline_rssi = kv.get_double("baseline_rssi", c.baseline_rssi);
  c.noise_std = kv.get_double("noise_std", c.noise_std);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));
  c.setup.tx_power_dbm = kv.get_double("setup.tx_power_dbm", c.setup.tx_power_dbm);
  c.setup.frequency_ghz = kv.get_double("setup.frequency_ghz", c.setup.frequency_ghz);
  c.setup.antenna_height_m = kv.get_double("setup.antenna_height_m", c.setup.antenna_height_m);
  c.setup.road_width_m = kv.get_double("setup.road_width_m", c.setup.road_width_m);
  c.setup.post_distance_m = kv.get_double("setup.post_distance_m", c.setup.post_distance_m);

  for (auto fine : kFineClasses) {
    auto& p = c.profiles[static_cast<std::size_t>(ordinal(fine) - 1)];
    const std::string prefix = "profile." + std::string(canonical_name(fine)) + ".";
    p.n_dips = static_cast<int>(kv.get_int(prefix + "n_dips", p.n_dips));
    p.depth_db.first = kv.get_double(prefix + "depth_min", p.depth_db.first);
    p.depth_db.second = kv.get_double(prefix + "depth_max", p.depth_db.second);
    p.duration_samples.first = kv.get_double(prefix + "duration_min", p.duration_samples.first);
    p.duration_samples.second = kv.get_double(prefix + "duration_max", p.duration_samples.second);
    if (kv.contains(prefix + "link_scale")) {
      const auto scale = kv.get_doubles(prefix + "link_scale");
      if (scale.size() != kLinkCount) {
        throw ConfigError(prefix + "link_scale needs " + std::to_string(kLinkCount) + " values");
      }
      std::copy(scale.begin(), scale.end(), p.link_scale.begin());
    }
  }
  c.validate();
  return c;
}

void GeneratorConfig::validate() const {
  if (!(noise_std >= 0)) throw ConfigError("noise_std must be >= 0");
  if (!std::isfinite(baseline_rssi)) throw ConfigError("baseline_rssi must be finite");
  for (auto fine : kFineClasses) {
    const auto& p = class_profile(*this, fine);
    const std::string name(canonical_name(fine));
    if (p.n_dips < 1) throw ConfigError(name + ": n_dips must be >= 1");
    if (!(p.depth_db.first > 0 && p.depth_db.first <= p.depth_db.second)) {
      throw ConfigError(name + ": depth range must be a positive interval");
    }
    if (!(p.duration_samples.first > 0 && p.duration_samples.first <= p.duration_samples.second &&
          p.duration_samples.second <= static_cast<double>(kSamplesPerLink))) {
      throw ConfigError(name + ": duration range must be a positive interval within the window");
    }
    for (double s : p.link_scale) {
      if (!(s >= 0 && s <= 1)) throw ConfigError(name + ": link scale must lie in [0, 1]");
    }
  }
}

const DipProfile& class_profile(const GeneratorConfig& config, FineClass fine) {
  return config.profiles[static_cast<std::size_t>(ordinal(fine) - 1)];
}

ClassCounts uniform_counts(std::size_t per_class) {
  ClassCounts c;
  c.fill(per_class);
  return c;
}

ClassCounts coarse_balanced_counts(std::size_t per_coarse) {
  ClassCounts counts{};
  for (auto coarse : kCoarseClasses) {
    std::vector<std::size_t> members;
    for (auto fine : kFineClasses)
      if (coarse_of(fine) == coarse) members.push_back(static_cast<std::size_t>(ordinal(fine) - 1));
    for (std::size_t i = 0; i < members.size(); ++i) {
      counts[members[i]] = per_coarse / members.size() + (i < per_coarse % members.size() ? 1 : 0);
    }
  }
  return counts;
}

ClassCounts counts_from_config(const KeyValueConfig& kv, std::size_t fallback_per_class) {
  const auto per_class = kv.get_int("per_class", static_cast<long long>(fallback_per_class));
  if (per_class < 0) throw ConfigError("per_class must be >= 0");
  ClassCounts counts = uniform_counts(static_cast<std::size_t>(per_class));
  if (kv.contains("per_coarse")) {
    if (kv.contains("per_class")) throw ConfigError("per_class and per_coarse are mutually exclusive");
    const auto per_coarse = kv.get_int("per_coarse", 0);
    if (per_coarse < 0) throw ConfigError("per_coarse must be >= 0");
    counts = coarse_balanced_counts(static_cast<std::size_t>(per_coarse));
  }
  for (auto fine : kFineClasses) {
    const auto key = "count." + std::string(canonical_name(fine));
    const auto v = kv.get_int(key, static_cast<long long>(counts[ordinal(fine) - 1]));
    if (v < 0) throw ConfigError(key + " must be >= 0");
    counts[static_cast<std::size_t>(ordinal(fine) - 1)] = static_cast<std::size_t>(v);
  }
  return counts;
}

GeneratedData generate(const GeneratorConfig& config, const ClassCounts& counts) {
  config.validate();
  GeneratedData out;
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> center_dist(static_cast<int>(kCenterLo),
                                                 static_cast<int>(kCenterHi));
  std::normal_distribution<double> noise(0.0, 1.0);

  for (auto fine : kFineClasses) {
    const auto& profile = class_profile(config, fine);
    std::uniform_real_distribution<double> depth_dist(profile.depth_db.first,
                                                      profile.depth_db.second);
    std::uniform_real_distribution<double> duration_dist(profile.duration_samples.first,
                                                         profile.duration_samples.second);
    for (std::size_t i = 0; i < counts[static_cast<std::size_t>(ordinal(fine) - 1)]; ++i) {
      RecordParams rec{record_id(fine, i), fine, {}};

      const double group_center = center_dist(rng);
      for (int k = 0; k < profile.n_dips; ++k) {
        DrawnDip dip{};
        dip.depth = depth_dist(rng);
        dip.duration = duration_dist(rng);
        dip.sigma = dip.duration / 6.0;
        rec.dips.push_back(dip);
      }
      // Lay the dips out left to right around the group center on integer
      // sample positions, so each bell peaks exactly on a sample.
      std::vector<double> offsets(rec.dips.size(), 0.0);
      for (std::size_t k = 1; k < rec.dips.size(); ++k) {
        offsets[k] = offsets[k - 1] +
                     std::round(kDipSpacing * 0.5 * (rec.dips[k - 1].duration + rec.dips[k].duration));
      }
      const double shift = std::round(offsets.back() / 2.0);
      for (std::size_t k = 0; k < rec.dips.size(); ++k) {
        rec.dips[k].center = group_center + offsets[k] - shift;
      }

      Fingerprint fp;
      fp.id = rec.id;
      fp.fine = fine;
      fp.series = Matrix(kLinkCount, kSamplesPerLink, config.baseline_rssi);
      for (std::size_t l = 0; l < kLinkCount; ++l) {
        for (std::size_t t = 0; t < kSamplesPerLink; ++t) {
          double attenuation = 0.0;
          for (const auto& dip : rec.dips) {
            const double z = (static_cast<double>(t) - dip.center) / dip.sigma;
            attenuation += dip.depth * std::exp(-0.5 * z * z);
          }
          double v = config.baseline_rssi - profile.link_scale[l] * attenuation;
          if (config.noise_std > 0) v += config.noise_std * noise(rng);
          fp.series(l, t) = v;
        }
      }
      out.dataset.add(std::move(fp));
      out.params.push_back(std::move(rec));
    }
  }
  return out;
}

void write_params_log(const GeneratedData& data, const GeneratorConfig& config, std::ostream& out) {
  for (const auto& rec : data.params) {
    nlohmann::ordered_json obj;
    obj["id"] = rec.id;
    obj["fine_class"] = canonical_name(rec.fine);
    const auto& scale = class_profile(config, rec.fine).link_scale;
    obj["link_scale"] = std::vector<double>(scale.begin(), scale.end());
    auto dips = nlohmann::ordered_json::array();
    for (const auto& d : rec.dips) {
      dips.push_back({{"center", d.center}, {"depth", d.depth}, {"duration", d.duration},
                      {"sigma", d.sigma}});
    }
    obj["dips"] = std::move(dips);
    out << obj.dump() << '\n';
  }
}

}  // namespace radiofp
