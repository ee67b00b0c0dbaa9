#pragma once

#include "mafl/common.hpp"
#include "mafl/rng.hpp"

namespace mafl {

struct ChannelParams {
  double pathloss_ref_db = -30.0;  // beta_0
  double ref_distance_m = 1.0;     // d_0
  double pathloss_exponent = 3.0;  // alpha-tilde
  double noise_density = 1e-20;    // N_0, W/Hz
  uint64_t fading_seed = 0;
};

enum class LinkDir : int { Uplink = 0, Downlink = 1 };

struct LinkBudget {
  double gain_squared = 0.0;
  double rate = 0.0;  // bits/s
  LinkDir direction = LinkDir::Uplink;
  int aggregation_index = 0;
};

// |h|^2 = 10^{(beta0 - 10 alpha log10(d/d0)) / 10} * |u|^2 with u ~ CN(0,1).
inline double channel_gain(double distance, const ChannelParams& p, std::mt19937_64& rng) {
  if (distance < p.ref_distance_m)
    throw std::invalid_argument("distance below reference distance");
  const double beta_db =
      p.pathloss_ref_db - 10.0 * p.pathloss_exponent * std::log10(distance / p.ref_distance_m);
  const double beta_lin = std::pow(10.0, beta_db / 10.0);
  const double re = gaussian(rng) / std::sqrt(2.0);
  const double im = gaussian(rng) / std::sqrt(2.0);
  return beta_lin * (re * re + im * im);
}

// Block fading: one draw per (device, aggregation index, direction).
inline double channel_gain_at(double distance, const ChannelParams& p, int device, int g,
                              LinkDir dir) {
  auto rng = stream_rng(p.fading_seed, static_cast<uint64_t>(device), static_cast<uint64_t>(g),
                        static_cast<uint64_t>(dir) + 17);
  return channel_gain(distance, p, rng);
}

// r = B log2(1 + |h|^2 p / (N0 B)).
inline double link_rate(double bandwidth, double gain_squared, double tx_power, double n0) {
  if (bandwidth <= 0.0) throw std::invalid_argument("bandwidth must be positive");
  if (gain_squared < 0.0 || tx_power < 0.0 || n0 < 0.0)
    throw std::invalid_argument("negative link parameter");
  return bandwidth * std::log2(1.0 + gain_squared * tx_power / (n0 * bandwidth));
}

// T^C = R a e B / f.
inline double compute_time(int active, double cycles_per_sample, int sgd_iters, int batch,
                           double freq_hz) {
  if (!active) return 0.0;
  if (freq_hz <= 0.0) throw std::invalid_argument("active compute with zero frequency");
  return cycles_per_sample * static_cast<double>(sgd_iters) * static_cast<double>(batch) / freq_hz;
}

// E^C = R xi e a B f^2.
inline double compute_energy(int active, double capacitance, int sgd_iters,
                             double cycles_per_sample, int batch, double freq_hz) {
  if (!active) return 0.0;
  if (freq_hz <= 0.0) throw std::invalid_argument("active compute with zero frequency");
  return capacitance * static_cast<double>(sgd_iters) * cycles_per_sample *
         static_cast<double>(batch) * freq_hz * freq_hz;
}

// T = sigma M / rate, E = power * T, both gated by the indicator.
inline std::pair<double, double> transfer_cost(int indicator, int bits_per_param, int model_dim,
                                               double rate, double power) {
  if (!indicator) return {0.0, 0.0};
  if (rate <= 0.0) throw std::runtime_error("link outage");
  const double t = static_cast<double>(bits_per_param) * static_cast<double>(model_dim) / rate;
  return {t, power * t};
}

// T^L = R idle + compute + uplink + downlink.
inline double local_period(double idle, int receive, double compute, double uplink,
                           double downlink) {
  if (idle < 0.0 || compute < 0.0 || uplink < 0.0 || downlink < 0.0)
    throw std::invalid_argument("negative period component");
  return (receive ? idle : 0.0) + compute + uplink + downlink;
}

struct PeriodBreakdown {
  double idle = 0.0;
  double downlink = 0.0;
  double compute = 0.0;
  double uplink = 0.0;
  double total = 0.0;
  double compute_energy = 0.0;
  double uplink_energy = 0.0;
  double downlink_energy = 0.0;
  double final_idle = 0.0;
};

// Planning-time link rates per (device, aggregation index, direction).
// Gains are block-constant and drawn once from the fading seed, so the
// optimizer and the simulator see identical rates.
struct RateTable {
  std::vector<Mat> rate;  // [dir][device][g]

  double at(int device, int g, LinkDir dir) const {
    return rate[static_cast<int>(dir)][device][g];
  }
};

}  // namespace mafl
