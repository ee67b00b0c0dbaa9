#pragma once

#include <array>
#include <optional>
#include <string>

#include "mafl/common.hpp"
#include "mafl/rng.hpp"
#include "mafl/wireless.hpp"

namespace mafl {

struct TaskSpec {
  int task_id = 0;
  int model_dim = 1;          // M_j
  int bits_per_param = 32;    // sigma_j
  int num_aggregations = 1;   // G_j
  double agg_weight = 0.5;    // alpha_j in (0,1)
  Vec learning_rates;         // eta_j^(g), length G_j
  double reg_weight = 0.0;    // rho
  double importance = 1.0;    // gamma_j
  double energy_weight = 1.0; // chi_j
  double qoe_window_s = 1.0;  // T_j^QoE
  int staleness_limit = 0;    // K_j

  double eta_min() const {
    return *std::min_element(learning_rates.begin(), learning_rates.end());
  }
  double eta_max() const {
    return *std::max_element(learning_rates.begin(), learning_rates.end());
  }
};

struct DeviceProfile {
  int device_id = 0;
  Vec cycles_per_sample;      // a_{i,j}, one per task
  double chipset_capacitance = 1e-21;  // xi_i
  double cpu_freq_min_hz = 1e8;
  double cpu_freq_max_hz = 1e9;
  double uplink_power_w = 0.25;
  double uplink_bandwidth_hz = 1e6;
  double downlink_bandwidth_hz = 1e5;
  double energy_budget_j = 1.0;  // E_i^B
  std::array<double, 2> position_m{0.0, 0.0};
  std::vector<int> dataset_sizes;  // D_{i,j}, one per task

  double distance_to_bs() const {
    return std::sqrt(position_m[0] * position_m[0] + position_m[1] * position_m[1]);
  }
};

struct Scenario {
  std::vector<DeviceProfile> devices;
  std::vector<TaskSpec> tasks;
  ChannelParams channel;
  std::array<double, 3> objective_weights{1e-9, 1.0, 1.0};  // c1, c2, c3
  double downlink_power_w = 0.1;                            // p^D (BS)
  std::vector<std::pair<int, int>> sgd_iter_bounds;         // (e_j^min, e_j^max) per task
  uint64_t seed = 0;

  int num_devices() const { return static_cast<int>(devices.size()); }
  int num_tasks() const { return static_cast<int>(tasks.size()); }
};

// First-failure-ordered invariant scan; never silently clamps.
inline std::vector<std::string> validate_scenario(const Scenario& s) {
  std::vector<std::string> v;
  auto bad = [&](const std::string& path, const std::string& why) { v.push_back(path + ": " + why); };

  if (s.devices.empty()) bad("devices", "must be non-empty");
  if (s.tasks.empty()) bad("tasks", "must be non-empty");
  for (std::size_t k = 0; k < 3; ++k)
    if (s.objective_weights[k] < 0.0)
      bad("objective_weights." + std::to_string(k), "must be >= 0");
  if (s.downlink_power_w <= 0.0) bad("downlink_power_w", "must be > 0");
  if (s.channel.ref_distance_m <= 0.0) bad("channel.ref_distance_m", "must be > 0");
  if (s.channel.noise_density <= 0.0) bad("channel.noise_density", "must be > 0");

  for (std::size_t j = 0; j < s.tasks.size(); ++j) {
    const auto& t = s.tasks[j];
    const std::string p = "tasks." + std::to_string(j) + ".";
    if (t.model_dim < 1) bad(p + "model_dim", "must be >= 1");
    if (t.bits_per_param < 1) bad(p + "bits_per_param", "must be >= 1");
    if (t.num_aggregations < 1) bad(p + "num_aggregations", "must be >= 1");
    if (!(t.agg_weight > 0.0 && t.agg_weight < 1.0))
      bad(p + "agg_weight", "must be in open interval (0,1)");
    if (static_cast<int>(t.learning_rates.size()) != t.num_aggregations)
      bad(p + "learning_rates", "length must equal num_aggregations");
    for (double eta : t.learning_rates)
      if (eta <= 0.0) {
        bad(p + "learning_rates", "entries must be > 0");
        break;
      }
    if (t.reg_weight < 0.0) bad(p + "reg_weight", "must be >= 0");
    if (t.importance < 0.0) bad(p + "importance", "must be >= 0");
    if (t.energy_weight < 0.0) bad(p + "energy_weight", "must be >= 0");
    if (t.qoe_window_s <= 0.0) bad(p + "qoe_window_s", "must be > 0");
    if (t.staleness_limit < 0) bad(p + "staleness_limit", "must be >= 0");
  }

  if (s.sgd_iter_bounds.size() != s.tasks.size())
    bad("sgd_iter_bounds", "one (min, max) pair per task required");
  for (std::size_t j = 0; j < s.sgd_iter_bounds.size(); ++j) {
    const auto& [lo, hi] = s.sgd_iter_bounds[j];
    const std::string p = "sgd_iter_bounds." + std::to_string(j);
    if (lo < 1) bad(p + ".min", "must be >= 1");
    if (hi < lo) bad(p + ".max", "must be >= min");
  }

  for (std::size_t i = 0; i < s.devices.size(); ++i) {
    const auto& d = s.devices[i];
    const std::string p = "devices." + std::to_string(i) + ".";
    if (d.cycles_per_sample.size() != s.tasks.size())
      bad(p + "cycles_per_sample", "one entry per task required");
    for (double a : d.cycles_per_sample)
      if (a <= 0.0) {
        bad(p + "cycles_per_sample", "entries must be > 0");
        break;
      }
    if (d.chipset_capacitance <= 0.0) bad(p + "chipset_capacitance", "must be > 0");
    if (d.cpu_freq_min_hz <= 0.0) bad(p + "cpu_freq_min_hz", "must be > 0");
    if (d.cpu_freq_min_hz > d.cpu_freq_max_hz)
      bad(p + "cpu_freq_min_hz", "must be <= cpu_freq_max_hz");
    if (d.uplink_power_w <= 0.0) bad(p + "uplink_power_w", "must be > 0");
    if (d.uplink_bandwidth_hz <= 0.0) bad(p + "uplink_bandwidth_hz", "must be > 0");
    if (d.downlink_bandwidth_hz <= 0.0) bad(p + "downlink_bandwidth_hz", "must be > 0");
    if (d.energy_budget_j <= 0.0) bad(p + "energy_budget_j", "must be > 0");
    if (d.dataset_sizes.size() != s.tasks.size())
      bad(p + "dataset_sizes", "one entry per task required");
    for (int n : d.dataset_sizes)
      if (n < 1) {
        bad(p + "dataset_sizes", "entries must be >= 1");
        break;
      }
    if (d.distance_to_bs() < s.channel.ref_distance_m)
      bad(p + "position_m", "device inside channel reference distance");
  }
  return v;
}

// Device positions drawn uniformly in a disk (rejecting the sub-d0 core).
inline std::array<double, 2> draw_position(uint64_t seed, int device, double radius_m,
                                           double min_radius_m) {
  auto rng = stream_rng(seed, 0xd15c, static_cast<uint64_t>(device));
  for (int tries = 0; tries < 1024; ++tries) {
    const double x = uniform_in(rng, -radius_m, radius_m);
    const double y = uniform_in(rng, -radius_m, radius_m);
    const double r2 = x * x + y * y;
    if (r2 <= radius_m * radius_m && r2 >= min_radius_m * min_radius_m) return {x, y};
  }
  return {min_radius_m, 0.0};
}

// Rates shared by planning and simulation; the longest task horizon sizes
// the table.
inline RateTable build_rate_table(const Scenario& s) {
  int gmax = 0;
  for (const auto& t : s.tasks) gmax = std::max(gmax, t.num_aggregations);
  RateTable rt;
  rt.rate.assign(2, make_mat(s.devices.size(), gmax));
  for (int i = 0; i < s.num_devices(); ++i) {
    const auto& d = s.devices[i];
    for (int g = 0; g < gmax; ++g) {
      const double gu = channel_gain_at(d.distance_to_bs(), s.channel, i, g, LinkDir::Uplink);
      const double gd = channel_gain_at(d.distance_to_bs(), s.channel, i, g, LinkDir::Downlink);
      rt.rate[0][i][g] =
          link_rate(d.uplink_bandwidth_hz, gu, d.uplink_power_w, s.channel.noise_density);
      rt.rate[1][i][g] =
          link_rate(d.downlink_bandwidth_hz, gd, s.downlink_power_w, s.channel.noise_density);
    }
  }
  return rt;
}

}  // namespace mafl
