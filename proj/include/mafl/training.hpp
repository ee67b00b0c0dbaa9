#pragma once

#include <optional>

#include "mafl/common.hpp"
#include "mafl/dataset.hpp"
#include "mafl/losses.hpp"
#include "mafl/rng.hpp"

namespace mafl {

struct ModelState {
  Vec weights;
  int task_id = 0;
  int version = 0;  // global aggregation index this state derives from
};

// One device-side training run: iterates, the stochastic regularized
// gradients actually applied, and the sampled batch indices.
struct SgdTrace {
  std::vector<Vec> iterates;  // length e+1, iterates[0] = received model
  std::vector<Vec> gradients; // length e
  std::vector<std::vector<int>> batch_indices;
  double learning_rate = 0.0;

  // w0 - wF = eta * sum of gradients; the telescoping quantity consumed by
  // the global-model recursion.
  Vec update_sum() const { return sub(iterates.front(), iterates.back()); }
};

// Mean loss over `data` plus (rho/2) ||w - w0||^2.
inline double regularized_loss(const Vec& w, const Vec& w0, double rho, const LossModel& loss,
                               const LabeledDataset& data) {
  if (w.size() != w0.size()) throw std::invalid_argument("dimension mismatch");
  if (data.empty()) throw std::invalid_argument("empty dataset");
  double s = 0.0;
  for (std::size_t p = 0; p < data.size(); ++p)
    s += loss.loss(w, data.features[p], data.labels[p]);
  s /= static_cast<double>(data.size());
  s += 0.5 * rho * sqnorm(sub(w, w0));
  if (!std::isfinite(s)) throw std::runtime_error("non-finite loss");
  return s;
}

// Mean gradient over the batch plus rho * (w - w0). `subset` selects batch
// indices into `data`; nullptr means the full dataset.
inline Vec regularized_gradient(const Vec& w, const Vec& w0, double rho, const LossModel& loss,
                                const LabeledDataset& data,
                                const std::vector<int>* subset = nullptr) {
  if (w.size() != w0.size()) throw std::invalid_argument("dimension mismatch");
  const std::size_t n = subset ? subset->size() : data.size();
  if (n == 0) throw std::invalid_argument("empty batch");
  Vec g(w.size(), 0.0);
  const double c = 1.0 / static_cast<double>(n);
  if (subset) {
    for (int p : *subset) loss.grad_accum(w, data.features[p], data.labels[p], c, g);
  } else {
    for (std::size_t p = 0; p < data.size(); ++p)
      loss.grad_accum(w, data.features[p], data.labels[p], c, g);
  }
  for (std::size_t k = 0; k < w.size(); ++k) g[k] += rho * (w[k] - w0[k]);
  if (!all_finite(g)) throw std::runtime_error("non-finite gradient");
  return g;
}

// Mini-batch SGD on the regularized loss. Batches are sampled without
// replacement within an iteration, independently across iterations, from
// the stream keyed by (rng_seed, iteration).
inline std::pair<ModelState, SgdTrace> local_train(const ModelState& w0, int e, int batch_size,
                                                   double eta, double rho, const LossModel& loss,
                                                   const LabeledDataset& data, uint64_t rng_seed) {
  if (e < 1) throw std::invalid_argument("sgd iteration count must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (static_cast<std::size_t>(batch_size) > data.size())
    throw std::invalid_argument("batch exceeds dataset");

  SgdTrace trace;
  trace.learning_rate = eta;
  trace.iterates.push_back(w0.weights);
  Vec w = w0.weights;
  std::vector<int> pool(data.size());
  std::iota(pool.begin(), pool.end(), 0);
  for (int l = 0; l < e; ++l) {
    auto rng = stream_rng(rng_seed, static_cast<uint64_t>(l));
    // Partial Fisher-Yates: first batch_size entries form the batch.
    for (int k = 0; k < batch_size; ++k) {
      const std::size_t j = k + rng() % (pool.size() - k);
      std::swap(pool[k], pool[j]);
    }
    std::vector<int> batch(pool.begin(), pool.begin() + batch_size);
    Vec g = regularized_gradient(w, w0.weights, rho, loss, data, &batch);
    axpy(-eta, g, w);
    trace.batch_indices.push_back(std::move(batch));
    trace.gradients.push_back(std::move(g));
    trace.iterates.push_back(w);
  }
  ModelState out{std::move(w), w0.task_id, w0.version};
  return {std::move(out), std::move(trace)};
}

// Server-side asynchronous aggregation: (1-alpha) w_global + alpha w_local.
inline ModelState aggregate(const ModelState& w_global, const ModelState& w_local, double alpha) {
  if (w_global.task_id != w_local.task_id) throw std::invalid_argument("task mismatch");
  if (w_global.weights.size() != w_local.weights.size())
    throw std::invalid_argument("dimension mismatch");
  ModelState out;
  out.task_id = w_global.task_id;
  out.version = w_global.version + 1;
  out.weights.resize(w_global.weights.size());
  for (std::size_t k = 0; k < out.weights.size(); ++k)
    out.weights[k] = (1.0 - alpha) * w_global.weights[k] + alpha * w_local.weights[k];
  return out;
}

// Device-mean of per-device mean losses (not the pooled mean).
inline double global_loss(const Vec& w, const std::vector<LabeledDataset>& partitions,
                          const LossModel& loss) {
  if (partitions.empty()) throw std::invalid_argument("no partitions");
  double s = 0.0;
  for (const auto& part : partitions) {
    if (part.empty()) throw std::invalid_argument("empty partition");
    double li = 0.0;
    for (std::size_t p = 0; p < part.size(); ++p)
      li += loss.loss(w, part.features[p], part.labels[p]);
    s += li / static_cast<double>(part.size());
  }
  return s / static_cast<double>(partitions.size());
}

// Gradient of the global loss (device-mean of per-device mean gradients).
inline Vec global_gradient(const Vec& w, const std::vector<LabeledDataset>& partitions,
                           const LossModel& loss) {
  if (partitions.empty()) throw std::invalid_argument("no partitions");
  Vec g(w.size(), 0.0);
  const double ci = 1.0 / static_cast<double>(partitions.size());
  for (const auto& part : partitions) {
    if (part.empty()) throw std::invalid_argument("empty partition");
    const double c = ci / static_cast<double>(part.size());
    for (std::size_t p = 0; p < part.size(); ++p)
      loss.grad_accum(w, part.features[p], part.labels[p], c, g);
  }
  return g;
}

}  // namespace mafl
