#pragma once

#include "mafl/common.hpp"
#include "mafl/scenario.hpp"
#include "mafl/schedule.hpp"
#include "mafl/wireless.hpp"

namespace mafl {

// Per-task resource allocation across devices and aggregation slots.
// Integer fields hold post-repair values; cpu_freq stays continuous.
struct TaskPlan {
  Mat cpu_freq_hz;                     // f_{i,j}^(g)
  std::vector<std::vector<int>> batch; // B_{i,j}^(g)
  std::vector<std::vector<int>> iters; // e_{i,j}^(g)
  Mat idle_s;                          // T_{i,j}^{ID,(g)}
  Vec final_idle_s;                    // T_{i,j}^{ID,F}
  double e_min = 1.0;                  // realized / optimized e_j^min
  double e_max = 1.0;                  // realized / optimized e_j^max
};

struct ResourcePlan {
  std::vector<TaskPlan> tasks;
};

// Per-(device, slot) period breakdowns implied by a plan and a schedule.
inline std::vector<std::vector<PeriodBreakdown>> plan_periods(const Scenario& s,
                                                              const RateTable& rates,
                                                              const ScheduleTensor& t,
                                                              const TaskPlan& plan) {
  const int j = t.task_id;
  const auto& task = s.tasks[j];
  const int I = t.devices;
  const int G = t.limits.num_aggregations;
  std::vector<std::vector<PeriodBreakdown>> out(I, std::vector<PeriodBreakdown>(G));
  for (int i = 0; i < I; ++i) {
    const auto& dev = s.devices[i];
    for (int g = 0; g < G; ++g) {
      PeriodBreakdown& p = out[i][g];
      const int recv = t.receive[i][g];
      const int up = t.upload[i][g];
      p.idle = recv ? plan.idle_s[i][g] : 0.0;
      auto [td, ed] = transfer_cost(recv, task.bits_per_param, task.model_dim,
                                    rates.at(i, g, LinkDir::Downlink), s.downlink_power_w);
      auto [tu, eu] = transfer_cost(up, task.bits_per_param, task.model_dim,
                                    rates.at(i, g, LinkDir::Uplink), dev.uplink_power_w);
      p.downlink = td;
      p.downlink_energy = ed;
      p.uplink = tu;
      p.uplink_energy = eu;
      p.compute = compute_time(recv, dev.cycles_per_sample[j], plan.iters[i][g],
                               plan.batch[i][g], plan.cpu_freq_hz[i][g]);
      p.compute_energy = compute_energy(recv, dev.chipset_capacitance, plan.iters[i][g],
                                        dev.cycles_per_sample[j], plan.batch[i][g],
                                        plan.cpu_freq_hz[i][g]);
      p.total = local_period(p.idle, recv, p.compute, p.uplink, p.downlink);
    }
    out[i][0].final_idle = plan.final_idle_s[i];
  }
  return out;
}

inline SchedulePeriods to_schedule_periods(const std::vector<std::vector<PeriodBreakdown>>& pb) {
  SchedulePeriods sp;
  const std::size_t I = pb.size();
  const std::size_t G = pb.empty() ? 0 : pb[0].size();
  sp.idle = make_mat(I, G);
  sp.local = make_mat(I, G);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t g = 0; g < G; ++g) {
      sp.idle[i][g] = pb[i][g].idle;
      sp.local[i][g] = pb[i][g].total;
    }
  return sp;
}

}  // namespace mafl
