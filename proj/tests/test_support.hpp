#pragma once

#include "mafl/bound.hpp"
#include "mafl/dataset.hpp"
#include "mafl/plan.hpp"
#include "mafl/scenario.hpp"
#include "mafl/schedule.hpp"
#include "mafl/simulator.hpp"

namespace mafl::testing {

// Small well-conditioned scenario used across unit suites: quadratic-scale
// dimensions, tight network so delays are nontrivial but QoE windows roomy.
inline Scenario tiny_scenario(int I, int J, int G, int K, uint64_t seed = 1,
                              int model_dim = 2) {
  Scenario s;
  s.seed = seed;
  s.channel.fading_seed = seed + 5;
  s.channel.noise_density = 1e-20;
  s.downlink_power_w = 0.1;
  for (int j = 0; j < J; ++j) {
    TaskSpec t;
    t.task_id = j;
    t.model_dim = model_dim;
    t.bits_per_param = 64;
    t.num_aggregations = G;
    t.agg_weight = 0.5;
    t.learning_rates.assign(G, 0.1);
    t.reg_weight = 0.0;
    t.qoe_window_s = 500.0;
    t.staleness_limit = K;
    s.tasks.push_back(t);
    s.sgd_iter_bounds.push_back({1, 4});
  }
  for (int i = 0; i < I; ++i) {
    DeviceProfile d;
    d.device_id = i;
    d.cycles_per_sample.assign(J, 500.0 + 100.0 * i);
    d.chipset_capacitance = 1e-21;
    d.cpu_freq_min_hz = 1e7;
    d.cpu_freq_max_hz = 1e9;
    d.uplink_power_w = 0.25;
    d.uplink_bandwidth_hz = 1e6;
    d.downlink_bandwidth_hz = 1e5;
    d.energy_budget_j = 100.0;
    d.position_m = draw_position(seed, i, 25.0, 1.0);
    d.dataset_sizes.assign(J, 12);
    s.devices.push_back(d);
  }
  return s;
}

inline std::vector<TaskData> quadratic_task_data(const Scenario& s, uint64_t seed = 2) {
  std::vector<TaskData> out;
  for (int j = 0; j < s.num_tasks(); ++j) {
    TaskData td;
    td.loss = quadratic_loss(s.tasks[j].model_dim);
    const int total = s.devices[0].dataset_sizes[j] * s.num_devices();
    auto ds = make_blobs(total, std::max(2, s.num_devices() / 2), s.tasks[j].model_dim, 3.0,
                         seed + j);
    td.partitions = partition_non_iid(ds, s.num_devices(), 2, seed + 10 + j);
    td.heldout = ds;
    td.w0.assign(s.tasks[j].model_dim, 0.0);
    td.classify = false;
    out.push_back(std::move(td));
  }
  return out;
}

inline ScheduleTensor relay_tensor(int I, int G, int K, int task_id = 0) {
  BMat m = make_bmat(I, G);
  for (int g = 0; g < G; ++g) m[g % I][g] = 1;
  return build_tensor(m, m, {K, G}, task_id);
}

// Uniform plan with iters/batches constant and idle times solved.
inline ResourcePlan uniform_plan(const Scenario& s, const RateTable& rates,
                                 const std::vector<ScheduleTensor>& tensors, int iters,
                                 int batch) {
  ResourcePlan plan;
  for (int j = 0; j < s.num_tasks(); ++j) {
    const int I = s.num_devices();
    const int G = s.tasks[j].num_aggregations;
    TaskPlan tp;
    tp.cpu_freq_hz = make_mat(I, G);
    tp.batch.assign(I, std::vector<int>(G, batch));
    tp.iters.assign(I, std::vector<int>(G, iters));
    tp.idle_s = make_mat(I, G);
    tp.final_idle_s.assign(I, 0.0);
    tp.e_min = iters;
    tp.e_max = iters;
    for (int i = 0; i < I; ++i)
      for (int g = 0; g < G; ++g)
        tp.cpu_freq_hz[i][g] =
            0.5 * (s.devices[i].cpu_freq_min_hz + s.devices[i].cpu_freq_max_hz) /
            s.num_tasks();
    if (!solve_idle_times(s, rates, tensors[j], tp))
      throw std::runtime_error("test plan infeasible");
    plan.tasks.push_back(std::move(tp));
  }
  return plan;
}

// Exact constants for the quadratic family: beta = 1, Theta = 1, delta and
// sample variance computed directly from the partitions.
inline BoundConstants quadratic_exact_constants(const std::vector<LabeledDataset>& partitions,
                                                double rho, int G) {
  const int I = static_cast<int>(partitions.size());
  BoundConstants c;
  c.smoothness = 1.0;
  c.data_variability = 1.0;
  c.reg_weight = rho;
  c.dissimilarity = make_mat(I, 1);
  c.sample_variance = make_mat(I, 1);
  const int dim = partitions[0].feature_dim();
  // grad F_i(w) = w - mean_i; grad F(w) = w - mean of means.
  std::vector<Vec> means(I, Vec(dim, 0.0));
  Vec global_mean(dim, 0.0);
  for (int i = 0; i < I; ++i) {
    for (const auto& x : partitions[i].features)
      axpy(1.0 / static_cast<double>(partitions[i].size()), x, means[i]);
    axpy(1.0 / static_cast<double>(I), means[i], global_mean);
  }
  for (int i = 0; i < I; ++i) {
    c.dissimilarity[i][0] = sqnorm(sub(means[i], global_mean));
    c.sample_variance[i][0] = sample_variance(partitions[i]);
  }
  (void)G;
  return c;
}

}  // namespace mafl::testing
