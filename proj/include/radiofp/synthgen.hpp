#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "radiofp/domain.hpp"
#include "radiofp/kv_config.hpp"

namespace radiofp {

// Attenuation morphology of one vehicle class. Each dip is a Gaussian bell
// whose full duration spans six standard deviations.
struct DipProfile {
  int n_dips = 1;
  std::pair<double, double> depth_db;          // peak attenuation on a unit-scale link
  std::pair<double, double> duration_samples;  // full dip duration
  std::array<double, kLinkCount> link_scale;   // per-link multiplier in [0, 1]
};

// Physical setup of the measurement site. Recorded in outputs, not used by
// the dip model.
struct SetupMetadata {
  double tx_power_dbm = 2.5;
  double frequency_ghz = 2.4;
  double antenna_height_m = 1.0;
  double road_width_m = 7.0;
  double post_distance_m = 5.0;
};

struct GeneratorConfig {
  double baseline_rssi = -50.0;
  double noise_std = 1.0;
  std::uint64_t seed = 42;
  std::array<DipProfile, 9> profiles;
  SetupMetadata setup;

  static GeneratorConfig defaults();
  // Starts from defaults() and overrides every key present in kv.
  static GeneratorConfig from_config(const KeyValueConfig& kv);
  void validate() const;
};

// Direct links 1.0, short diagonals 0.6, long diagonals (3, 7) 0.4.
std::array<double, kLinkCount> default_link_scale();

const DipProfile& class_profile(const GeneratorConfig& config, FineClass fine);

using ClassCounts = std::array<std::size_t, 9>;
ClassCounts uniform_counts(std::size_t per_class);
// `per_coarse` records per coarse class, spread evenly over its fine classes
// (the remainder goes to the lowest ordinals).
ClassCounts coarse_balanced_counts(std::size_t per_coarse);
// Reads `per_class`, `per_coarse` and `count.<class>` keys; per-class keys win.
ClassCounts counts_from_config(const KeyValueConfig& kv, std::size_t fallback_per_class);

struct DrawnDip {
  double center;  // sample index of the bell peak
  double depth;   // dB on a unit-scale link
  double duration;
  double sigma;
};

struct RecordParams {
  std::string id;
  FineClass fine;
  std::vector<DrawnDip> dips;
};

struct GeneratedData {
  Dataset dataset;
  std::vector<RecordParams> params;  // one entry per record, same order
};

GeneratedData generate(const GeneratorConfig& config, const ClassCounts& counts);

// Sidecar parameter log: one JSON object per record keyed by id.
void write_params_log(const GeneratedData& data, const GeneratorConfig& config, std::ostream& out);

}  // namespace radiofp
