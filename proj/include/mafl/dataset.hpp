#pragma once

#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "mafl/common.hpp"
#include "mafl/rng.hpp"

namespace mafl {

struct LabeledDataset {
  std::vector<Vec> features;
  std::vector<int> labels;
  int label_count = 0;

  std::size_t size() const { return features.size(); }
  bool empty() const { return features.empty(); }
  int feature_dim() const { return features.empty() ? 0 : static_cast<int>(features[0].size()); }
};

inline void validate_dataset(const LabeledDataset& ds) {
  if (ds.empty()) throw std::invalid_argument("dataset is empty");
  for (int y : ds.labels) {
    if (y < 0 || y >= ds.label_count) throw std::invalid_argument("label out of range");
  }
  if (ds.labels.size() != ds.features.size())
    throw std::invalid_argument("feature/label length mismatch");
}

// Gaussian blobs, one cluster per label. Centers are spread on a seeded
// random direction ring of radius `separation`.
inline LabeledDataset make_blobs(int num_points, int num_labels, int feature_dim,
                                 double separation, uint64_t seed) {
  LabeledDataset ds;
  ds.label_count = num_labels;
  auto center_rng = stream_rng(seed, 0xb10b5);
  std::vector<Vec> centers(num_labels, Vec(feature_dim, 0.0));
  for (int c = 0; c < num_labels; ++c) {
    Vec dir(feature_dim);
    for (double& x : dir) x = gaussian(center_rng);
    const double n = std::max(norm(dir), 1e-12);
    for (int k = 0; k < feature_dim; ++k) centers[c][k] = separation * dir[k] / n;
  }
  auto point_rng = stream_rng(seed, 0xb10b5 + 1);
  for (int p = 0; p < num_points; ++p) {
    const int y = p % num_labels;
    Vec x(feature_dim);
    for (int k = 0; k < feature_dim; ++k) x[k] = centers[y][k] + gaussian(point_rng);
    ds.features.push_back(std::move(x));
    ds.labels.push_back(y);
  }
  return ds;
}

// CSV ingestion: feature columns followed by an integer label column.
inline LabeledDataset read_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  LabeledDataset ds;
  std::string line;
  int max_label = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Vec row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() < 2) throw std::runtime_error("dataset row needs >= 1 feature + label");
    const int y = static_cast<int>(std::lround(row.back()));
    row.pop_back();
    max_label = std::max(max_label, y);
    ds.features.push_back(std::move(row));
    ds.labels.push_back(y);
  }
  ds.label_count = max_label + 1;
  validate_dataset(ds);
  return ds;
}

// Deterministic holdout split carved before partitioning.
inline std::pair<LabeledDataset, LabeledDataset> split_holdout(const LabeledDataset& ds,
                                                               double holdout_fraction,
                                                               uint64_t seed) {
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  auto rng = stream_rng(seed, 0x501d);
  for (std::size_t k = order.size(); k > 1; --k) {
    std::swap(order[k - 1], order[rng() % k]);
  }
  const std::size_t n_hold = static_cast<std::size_t>(holdout_fraction * ds.size());
  LabeledDataset train, hold;
  train.label_count = hold.label_count = ds.label_count;
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto& dst = (k < n_hold) ? hold : train;
    dst.features.push_back(ds.features[order[k]]);
    dst.labels.push_back(ds.labels[order[k]]);
  }
  return {std::move(train), std::move(hold)};
}

// Non-iid label partitioning: shuffle labels per seed, deal labels to devices
// round-robin (guaranteeing coverage), fill each device with extra random
// labels up to max_labels, then round-robin each label's points among the
// devices holding it.
inline std::vector<LabeledDataset> partition_non_iid(const LabeledDataset& ds, int num_devices,
                                                     int max_labels_per_device, uint64_t seed) {
  validate_dataset(ds);
  if (max_labels_per_device < 1) throw std::invalid_argument("max_labels_per_device must be >= 1");
  if (static_cast<int>(ds.size()) < num_devices)
    throw std::invalid_argument("dataset smaller than device count");

  std::set<int> present(ds.labels.begin(), ds.labels.end());
  std::vector<int> labels(present.begin(), present.end());
  const int L = static_cast<int>(labels.size());
  if (static_cast<long long>(num_devices) * max_labels_per_device < L)
    throw std::invalid_argument("insufficient label diversity");

  auto rng = stream_rng(seed, 0x9a57);
  for (int k = L; k > 1; --k) std::swap(labels[k - 1], labels[rng() % k]);

  // Label -> devices assignment.
  std::vector<std::set<int>> device_labels(num_devices);
  for (int k = 0; k < L; ++k) device_labels[k % num_devices].insert(labels[k]);
  const int target = std::min(max_labels_per_device, L);
  for (int d = 0; d < num_devices; ++d) {
    int guard = 0;
    while (static_cast<int>(device_labels[d].size()) < target && guard++ < 64 * L) {
      device_labels[d].insert(labels[rng() % L]);
    }
  }

  std::map<int, std::vector<int>> holders;  // label -> devices holding it
  for (int d = 0; d < num_devices; ++d)
    for (int lab : device_labels[d]) holders[lab].push_back(d);

  // Points of each label, in a seeded shuffle, dealt round-robin.
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t p = 0; p < ds.size(); ++p) by_label[ds.labels[p]].push_back(p);

  std::vector<LabeledDataset> parts(num_devices);
  for (auto& part : parts) part.label_count = ds.label_count;
  for (int lab : labels) {
    auto& idx = by_label[lab];
    for (std::size_t k = idx.size(); k > 1; --k) std::swap(idx[k - 1], idx[rng() % k]);
    const auto& devs = holders[lab];
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const int d = devs[k % devs.size()];
      parts[d].features.push_back(ds.features[idx[k]]);
      parts[d].labels.push_back(ds.labels[idx[k]]);
    }
  }
  for (const auto& part : parts) {
    if (part.empty()) throw std::invalid_argument("insufficient label diversity");
  }
  return parts;
}

// Sample variance of the datapoints: sum of squared deviations from the
// feature mean divided by (D - 1); zero for a single point.
inline double sample_variance(const LabeledDataset& ds) {
  const std::size_t n = ds.size();
  if (n < 2) return 0.0;
  Vec mean(ds.feature_dim(), 0.0);
  for (const auto& x : ds.features) axpy(1.0 / static_cast<double>(n), x, mean);
  double ssd = 0.0;
  for (const auto& x : ds.features) ssd += sqnorm(sub(x, mean));
  return ssd / static_cast<double>(n - 1);
}

}  // namespace mafl
