#pragma once

#include <map>
#include <optional>
#include <queue>

#include "mafl/bound.hpp"
#include "mafl/common.hpp"
#include "mafl/plan.hpp"
#include "mafl/scenario.hpp"
#include "mafl/schedule.hpp"
#include "mafl/training.hpp"

namespace mafl {

enum class EventKind : int {
  DownlinkStart = 0,
  DownlinkEnd = 1,
  ComputeEnd = 2,
  UplinkEnd = 3,
  Aggregate = 4,
};

inline const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::DownlinkStart: return "downlink_start";
    case EventKind::DownlinkEnd: return "downlink_end";
    case EventKind::ComputeEnd: return "compute_end";
    case EventKind::UplinkEnd: return "uplink_end";
    case EventKind::Aggregate: return "aggregate";
  }
  return "?";
}

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::Aggregate;
  int device = -1;
  int task = 0;
  int g = 0;        // source / reception index
  int g_prime = 0;  // applied aggregation index (uplink/aggregate events)
  double device_energy_j = 0.0;
  double bs_energy_j = 0.0;
};

struct EventLog {
  std::vector<Event> events;  // time-ordered, ties by (task, device, kind)
  Vec device_energy;          // cumulative per device
  double bs_energy = 0.0;
  std::vector<int> aggregation_count;  // per task

  void push(Event e) {
    if (e.device >= 0) device_energy[e.device] += e.device_energy_j;
    bs_energy += e.bs_energy_j;
    events.push_back(e);
  }
  void finalize() {
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
      if (a.time != b.time) return a.time < b.time;
      if (a.task != b.task) return a.task < b.task;
      if (a.device != b.device) return a.device < b.device;
      return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    });
  }
};

struct RunMetrics {
  // Indexed [task][g], g = 0..G (the realized aggregation axis).
  std::vector<Vec> loss;
  std::vector<Vec> accuracy;
  std::vector<Vec> cum_device_energy;
  std::vector<Vec> cum_bs_energy;
  std::vector<Vec> grad_norm_sq;
};

// Everything one task needs to train: loss family, per-device data, holdout
// set and the initial global model.
struct TaskData {
  LossModel loss;
  std::vector<LabeledDataset> partitions;
  LabeledDataset heldout;
  Vec w0;
  bool classify = false;
};

struct RunOutput {
  EventLog log;
  RunMetrics metrics;
  // per task: (device, source) -> trace, and global model snapshots w^(0..G)
  std::vector<std::map<std::pair<int, int>, SgdTrace>> traces;
  std::vector<std::vector<Vec>> snapshots;
  Mat realized_span_s;  // [task][device]: busy span; + final idle ~ QoE window
};

namespace detail {

struct SlotChain {
  std::vector<int> pending;  // reception indices not yet executed
  std::size_t next = 0;
  double clock = 0.0;
};

}  // namespace detail

// Executes one task's schedule on the wall clock. Device timelines follow
// the planned idle times exactly; the engine verifies (and never repairs)
// that receptions see an existing model and arrivals respect the scheduled
// aggregation order.
inline void run_task(const Scenario& s, const RateTable& rates, const ScheduleTensor& tensor,
                     const TaskPlan& plan, const TaskData& data, uint64_t seed, EventLog& log,
                     std::map<std::pair<int, int>, SgdTrace>& traces, std::vector<Vec>& snapshots,
                     Vec& realized_span) {
  const int j = tensor.task_id;
  const auto& task = s.tasks[j];
  const int I = tensor.devices;
  const int G = task.num_aggregations;
  const auto periods = plan_periods(s, rates, tensor, plan);

  std::vector<const ScheduleEntry*> uploader(G, nullptr);
  for (const auto& e : tensor.entries) {
    if (uploader[e.applied])
      throw std::runtime_error("schedule has two uploads at one aggregation");
    uploader[e.applied] = &e;
  }
  for (int gp = 0; gp < G; ++gp)
    if (!uploader[gp]) throw std::runtime_error("schedule misses an aggregation");

  std::vector<detail::SlotChain> chain(I);
  for (int i = 0; i < I; ++i)
    for (int g = 0; g < G; ++g)
      if (tensor.receive[i][g]) chain[i].pending.push_back(g);

  Vec avail(G + 1, 0.0);  // avail[k]: time w^(k) exists

  // Executes device i's reception blocks with index <= limit.
  auto run_receptions = [&](int i, int limit) {
    auto& ch = chain[i];
    while (ch.next < ch.pending.size() && ch.pending[ch.next] <= limit) {
      const int k = ch.pending[ch.next++];
      const auto& p = periods[i][k];
      const double dl_start = ch.clock + p.idle;
      if (dl_start < avail[k] - 1e-9)
        throw std::runtime_error("schedule infeasible: device " + std::to_string(i) +
                                 " would receive model " + std::to_string(k) +
                                 " before it exists (task " + std::to_string(j) + ")");
      log.push({dl_start, EventKind::DownlinkStart, i, j, k, k, 0.0, 0.0});
      log.push({dl_start + p.downlink, EventKind::DownlinkEnd, i, j, k, k, 0.0,
                p.downlink_energy});
      log.push({dl_start + p.downlink + p.compute, EventKind::ComputeEnd, i, j, k, k,
                p.compute_energy, 0.0});
      ch.clock = dl_start + p.downlink + p.compute;
    }
  };

  // Model algebra in aggregation order; timing interleaves lazily.
  snapshots.assign(G + 1, data.w0);
  for (int gp = 0; gp < G; ++gp) {
    const auto& e = *uploader[gp];
    run_receptions(e.device, gp);
    const auto& p = periods[e.device][gp];
    const double arrival = chain[e.device].clock + p.uplink;
    if (arrival < avail[gp] - 1e-9)
      throw std::runtime_error(
          "realized arrival order contradicts schedule at (device " + std::to_string(e.device) +
          ", aggregation " + std::to_string(gp) + ") for task " + std::to_string(j));
    log.push({arrival, EventKind::UplinkEnd, e.device, j, e.src, gp, p.uplink_energy, 0.0});
    chain[e.device].clock = arrival;

    ModelState w_src{snapshots[e.src], j, e.src};
    auto [wf, trace] = local_train(w_src, plan.iters[e.device][e.src],
                                   plan.batch[e.device][e.src], task.learning_rates[e.src],
                                   task.reg_weight, data.loss, data.partitions[e.device],
                                   stream_key(seed, static_cast<uint64_t>(j),
                                              static_cast<uint64_t>(e.device),
                                              static_cast<uint64_t>(e.src)));
    ModelState w_cur{snapshots[gp], j, gp};
    snapshots[gp + 1] = aggregate(w_cur, wf, task.agg_weight).weights;
    traces[{e.device, e.src}] = std::move(trace);

    log.push({arrival, EventKind::Aggregate, e.device, j, e.src, gp, 0.0, 0.0});
    avail[gp + 1] = arrival;
    ++log.aggregation_count[j];
  }
  // Trailing wasted receptions, then the final idle closes the QoE window.
  for (int i = 0; i < I; ++i) {
    run_receptions(i, G - 1);
    realized_span[i] = chain[i].clock + plan.final_idle_s[i];
  }
}

inline RunMetrics collect_metrics(const EventLog& log, const std::vector<std::vector<Vec>>& snaps,
                                  const std::vector<TaskData>& data) {
  const int J = static_cast<int>(snaps.size());
  RunMetrics m;
  m.loss.resize(J);
  m.accuracy.resize(J);
  m.cum_device_energy.resize(J);
  m.cum_bs_energy.resize(J);
  m.grad_norm_sq.resize(J);
  for (int j = 0; j < J; ++j) {
    const auto& snapshots = snaps[j];
    if (snapshots.empty()) throw std::invalid_argument("missing model snapshot");
    for (const auto& w : snapshots) {
      m.loss[j].push_back(global_loss(w, data[j].partitions, data[j].loss));
      m.accuracy[j].push_back(data[j].classify ? accuracy(data[j].loss, w, data[j].heldout) : 0.0);
      m.grad_norm_sq[j].push_back(sqnorm(global_gradient(w, data[j].partitions, data[j].loss)));
    }
  }
  // Cumulative energies sampled at each task's aggregate events (initial
  // point at zero), walking the time-ordered log.
  std::vector<double> dev_cum(J, 0.0), bs_cum(J, 0.0);
  double dev_all = 0.0, bs_all = 0.0;
  for (int j = 0; j < J; ++j) {
    m.cum_device_energy[j].push_back(0.0);
    m.cum_bs_energy[j].push_back(0.0);
  }
  for (const auto& e : log.events) {
    dev_all += e.device_energy_j;
    bs_all += e.bs_energy_j;
    if (e.kind == EventKind::Aggregate) {
      m.cum_device_energy[e.task].push_back(dev_all);
      m.cum_bs_energy[e.task].push_back(bs_all);
    }
  }
  return m;
}

inline RunOutput run(const Scenario& s, const RateTable& rates,
                     const std::vector<ScheduleTensor>& tensors, const ResourcePlan& plan,
                     const std::vector<TaskData>& data, uint64_t seed) {
  const int J = s.num_tasks();
  RunOutput out;
  out.log.device_energy.assign(s.num_devices(), 0.0);
  out.log.aggregation_count.assign(J, 0);
  out.traces.resize(J);
  out.snapshots.resize(J);
  out.realized_span_s = make_mat(J, s.num_devices());

  for (int j = 0; j < J; ++j) {
    const auto& tensor = tensors[j];
    const auto pb = plan_periods(s, rates, tensor, plan.tasks[j]);
    const auto sp = to_schedule_periods(pb);
    auto violations = check_schedule(tensor.receive, tensor.upload,
                                     {s.tasks[j].staleness_limit, s.tasks[j].num_aggregations},
                                     &sp);
    if (!violations.empty())
      throw std::runtime_error("schedule fails validation for task " + std::to_string(j) + ": " +
                               violations.front().what);
    run_task(s, rates, tensor, plan.tasks[j], data[j], seed, out.log, out.traces[j],
             out.snapshots[j], out.realized_span_s[j]);
  }
  out.log.finalize();
  out.metrics = collect_metrics(out.log, out.snapshots, data);
  return out;
}

// ---------------------------------------------------------------------------
// Baselines

enum class BaselineMode { SyncFedAvg, AsyncRandomIdle };

struct BaselineResources {
  // Per task, per device: a fixed (f, B, e) triple used for every round.
  std::vector<Vec> cpu_freq_hz;
  std::vector<std::vector<int>> batch;
  std::vector<std::vector<int>> iters;
};

inline BaselineResources default_baseline_resources(const Scenario& s) {
  BaselineResources r;
  const int J = s.num_tasks();
  r.cpu_freq_hz.resize(J);
  r.batch.resize(J);
  r.iters.resize(J);
  for (int j = 0; j < J; ++j) {
    for (int i = 0; i < s.num_devices(); ++i) {
      const auto& d = s.devices[i];
      r.cpu_freq_hz[j].push_back(0.5 * (d.cpu_freq_min_hz + d.cpu_freq_max_hz) / s.num_tasks());
      r.batch[j].push_back(std::max(1, d.dataset_sizes[j] / 2));
      const auto& [elo, ehi] = s.sgd_iter_bounds[j];
      r.iters[j].push_back((elo + ehi) / 2);
    }
  }
  return r;
}

struct BaselineOutput {
  EventLog log;
  RunMetrics metrics;
  std::vector<std::vector<Vec>> snapshots;
  Mat sgd_work;  // [task][device]: executed e*B gradient evaluations
};

// Synchronous rounds: every device trains each round, the server waits for
// the slowest and averages uniformly.
inline void run_sync_task(const Scenario& s, const RateTable& rates, int j,
                          const BaselineResources& res, const TaskData& data, uint64_t seed,
                          BaselineOutput& out) {
  const auto& task = s.tasks[j];
  const int I = s.num_devices();
  const int G = task.num_aggregations;
  auto& snapshots = out.snapshots[j];
  snapshots.assign(1, data.w0);
  double t = 0.0;
  const int gmax = static_cast<int>(rates.rate[0][0].size());
  for (int r = 0; r < G; ++r) {
    const int gi = std::min(r, gmax - 1);
    double round_end = t;
    Vec mean(data.w0.size(), 0.0);
    for (int i = 0; i < I; ++i) {
      const auto& dev = s.devices[i];
      auto [td, ed] = transfer_cost(1, task.bits_per_param, task.model_dim,
                                    rates.at(i, gi, LinkDir::Downlink), s.downlink_power_w);
      const double tc = compute_time(1, dev.cycles_per_sample[j], res.iters[j][i],
                                     res.batch[j][i], res.cpu_freq_hz[j][i]);
      const double ec = compute_energy(1, dev.chipset_capacitance, res.iters[j][i],
                                       dev.cycles_per_sample[j], res.batch[j][i],
                                       res.cpu_freq_hz[j][i]);
      auto [tu, eu] = transfer_cost(1, task.bits_per_param, task.model_dim,
                                    rates.at(i, gi, LinkDir::Uplink), dev.uplink_power_w);
      out.log.push({t, EventKind::DownlinkStart, i, j, r, r, 0.0, 0.0});
      out.log.push({t + td, EventKind::DownlinkEnd, i, j, r, r, 0.0, ed});
      out.log.push({t + td + tc, EventKind::ComputeEnd, i, j, r, r, ec, 0.0});
      out.log.push({t + td + tc + tu, EventKind::UplinkEnd, i, j, r, r, eu, 0.0});
      round_end = std::max(round_end, t + td + tc + tu);

      ModelState w0{snapshots.back(), j, r};
      auto [wf, trace] = local_train(w0, res.iters[j][i], res.batch[j][i],
                                     task.learning_rates[std::min(r, G - 1)], task.reg_weight,
                                     data.loss, data.partitions[i],
                                     stream_key(seed, static_cast<uint64_t>(j),
                                                static_cast<uint64_t>(i),
                                                static_cast<uint64_t>(r)));
      axpy(1.0 / static_cast<double>(I), wf.weights, mean);
      out.sgd_work[j][i] += static_cast<double>(res.iters[j][i]) * res.batch[j][i];
    }
    out.log.push({round_end, EventKind::Aggregate, -1, j, r, r, 0.0, 0.0});
    ++out.log.aggregation_count[j];
    snapshots.push_back(mean);
    t = round_end;
  }
}

// Fully asynchronous free run: devices loop (random idle, receive the
// current model, train, upload); the server aggregates on every arrival.
inline void run_async_task(const Scenario& s, const RateTable& rates, int j,
                           const BaselineResources& res, const TaskData& data, uint64_t seed,
                           BaselineOutput& out) {
  const auto& task = s.tasks[j];
  const int I = s.num_devices();
  const int G = task.num_aggregations;
  const int gmax = static_cast<int>(rates.rate[0][0].size());
  auto& snapshots = out.snapshots[j];
  snapshots.assign(1, data.w0);
  int state = 0;

  struct Pending {
    double arrival;
    int device;
    int version;
    double uplink_energy;
  };
  auto cmp = [](const Pending& a, const Pending& b) {
    if (a.arrival != b.arrival) return a.arrival > b.arrival;
    return a.device > b.device;
  };
  std::priority_queue<Pending, std::vector<Pending>, decltype(cmp)> queue(cmp);

  Vec clock(I, 0.0);
  std::vector<int> cycle(I, 0);
  auto launch = [&](int i, double now) {
    const auto& dev = s.devices[i];
    auto rng = stream_rng(seed, 0xa57c, static_cast<uint64_t>(j),
                          static_cast<uint64_t>(i) * 4096 + static_cast<uint64_t>(cycle[i]));
    ++cycle[i];
    const double idle = uniform_in(rng, 0.0, task.qoe_window_s / static_cast<double>(G));
    const int v = state;
    const int gi = std::min(v, gmax - 1);
    auto [td, ed] = transfer_cost(1, task.bits_per_param, task.model_dim,
                                  rates.at(i, gi, LinkDir::Downlink), s.downlink_power_w);
    const double tc = compute_time(1, dev.cycles_per_sample[j], res.iters[j][i], res.batch[j][i],
                                   res.cpu_freq_hz[j][i]);
    const double ec = compute_energy(1, dev.chipset_capacitance, res.iters[j][i],
                                     dev.cycles_per_sample[j], res.batch[j][i],
                                     res.cpu_freq_hz[j][i]);
    auto [tu, eu] = transfer_cost(1, task.bits_per_param, task.model_dim,
                                  rates.at(i, gi, LinkDir::Uplink), dev.uplink_power_w);
    const double t0 = now + idle;
    out.log.push({t0, EventKind::DownlinkStart, i, j, v, v, 0.0, 0.0});
    out.log.push({t0 + td, EventKind::DownlinkEnd, i, j, v, v, 0.0, ed});
    out.log.push({t0 + td + tc, EventKind::ComputeEnd, i, j, v, v, ec, 0.0});
    clock[i] = t0 + td + tc + tu;
    queue.push({clock[i], i, v, eu});
  };
  for (int i = 0; i < I; ++i) launch(i, 0.0);

  // Model updates must happen in arrival order, so training is deferred to
  // the arrival: the uploaded model is trained from the version the device
  // actually received.
  while (state < G && !queue.empty()) {
    const Pending p = queue.top();
    queue.pop();
    out.log.push({p.arrival, EventKind::UplinkEnd, p.device, j, p.version, state,
                  p.uplink_energy, 0.0});
    ModelState w0{snapshots[p.version], j, p.version};
    auto [wf, trace] = local_train(w0, res.iters[j][p.device], res.batch[j][p.device],
                                   task.learning_rates[std::min(p.version, G - 1)],
                                   task.reg_weight, data.loss, data.partitions[p.device],
                                   stream_key(seed, static_cast<uint64_t>(j) + 100,
                                              static_cast<uint64_t>(p.device),
                                              static_cast<uint64_t>(cycle[p.device])));
    ModelState cur{snapshots.back(), j, state};
    snapshots.push_back(aggregate(cur, wf, task.agg_weight).weights);
    out.sgd_work[j][p.device] +=
        static_cast<double>(res.iters[j][p.device]) * res.batch[j][p.device];
    out.log.push({p.arrival, EventKind::Aggregate, p.device, j, p.version, state, 0.0, 0.0});
    ++out.log.aggregation_count[j];
    ++state;
    if (state < G) launch(p.device, p.arrival);
  }
}

inline BaselineOutput run_baseline(const Scenario& s, const RateTable& rates, BaselineMode mode,
                                   const std::vector<TaskData>& data, uint64_t seed,
                                   const BaselineResources* resources = nullptr) {
  const int J = s.num_tasks();
  BaselineOutput out;
  out.log.device_energy.assign(s.num_devices(), 0.0);
  out.log.aggregation_count.assign(J, 0);
  out.snapshots.resize(J);
  out.sgd_work = make_mat(J, s.num_devices());
  const BaselineResources res = resources ? *resources : default_baseline_resources(s);
  for (int j = 0; j < J; ++j) {
    if (mode == BaselineMode::SyncFedAvg)
      run_sync_task(s, rates, j, res, data[j], seed, out);
    else
      run_async_task(s, rates, j, res, data[j], seed, out);
  }
  out.log.finalize();
  out.metrics = collect_metrics(out.log, out.snapshots, data);
  return out;
}

// ---------------------------------------------------------------------------
// Idle-time solving: the smallest idle times that realize a schedule's
// aggregation order, with the final idle closing the QoE equality.

inline bool solve_idle_times(const Scenario& s, const RateTable& rates,
                             const ScheduleTensor& tensor, TaskPlan& plan) {
  const int j = tensor.task_id;
  const auto& task = s.tasks[j];
  const int I = tensor.devices;
  const int G = task.num_aggregations;
  for (auto& row : plan.idle_s) std::fill(row.begin(), row.end(), 0.0);

  std::vector<const ScheduleEntry*> uploader(G, nullptr);
  for (const auto& e : tensor.entries) uploader[e.applied] = &e;
  for (int gp = 0; gp < G; ++gp)
    if (!uploader[gp]) return false;

  const auto periods = plan_periods(s, rates, tensor, plan);  // idle currently 0
  std::vector<detail::SlotChain> chain(I);
  for (int i = 0; i < I; ++i)
    for (int g = 0; g < G; ++g)
      if (tensor.receive[i][g]) chain[i].pending.push_back(g);

  Vec avail(G + 1, 0.0);
  std::vector<int> last_src(I, -1);
  auto run_receptions = [&](int i, int limit) {
    auto& ch = chain[i];
    while (ch.next < ch.pending.size() && ch.pending[ch.next] <= limit) {
      const int k = ch.pending[ch.next++];
      plan.idle_s[i][k] = std::max(0.0, avail[k] - ch.clock);
      ch.clock += plan.idle_s[i][k] + periods[i][k].downlink + periods[i][k].compute;
      last_src[i] = k;
    }
  };
  for (int gp = 0; gp < G; ++gp) {
    const auto& e = *uploader[gp];
    run_receptions(e.device, gp);
    double arrival = chain[e.device].clock + periods[e.device][gp].uplink;
    if (arrival < avail[gp]) {
      const double deficit = avail[gp] - arrival;
      plan.idle_s[e.device][last_src[e.device]] += deficit;
      chain[e.device].clock += deficit;
      arrival += deficit;
    }
    chain[e.device].clock = arrival;
    avail[gp + 1] = arrival;
  }
  for (int i = 0; i < I; ++i) run_receptions(i, G - 1);

  // QoE equality: total busy span + final idle = T^QoE per device.
  bool feasible = true;
  for (int i = 0; i < I; ++i) {
    double busy = 0.0;
    for (int g = 0; g < G; ++g) {
      const int recv = tensor.receive[i][g];
      busy += (recv ? plan.idle_s[i][g] : 0.0) + periods[i][g].downlink + periods[i][g].compute +
              periods[i][g].uplink;
    }
    plan.final_idle_s[i] = task.qoe_window_s - busy;
    if (plan.final_idle_s[i] < -1e-9) feasible = false;
    plan.final_idle_s[i] = std::max(0.0, plan.final_idle_s[i]);
  }
  return feasible;
}

}  // namespace mafl
