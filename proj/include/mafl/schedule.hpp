#pragma once

#include <optional>
#include <string>

#include "mafl/common.hpp"

namespace mafl {

struct ScheduleLimits {
  int staleness_limit = 0;   // K_j
  int num_aggregations = 1;  // G_j
};

struct ScheduleEntry {
  int device = 0;
  int src = 0;      // aggregation index of the global model trained from
  int applied = 0;  // server state the upload was applied at (produces src'+1)
};

// Binary receive/upload matrices plus the sparse (device, g, g') tensor.
// receive[i][g] = 1: device i receives the version-g global model, which
// triggers its idle/downlink/compute at index g. upload[i][g'] = 1: device
// i's upload is applied at server state g', completing aggregation g'.
struct ScheduleTensor {
  int task_id = 0;
  int devices = 0;
  ScheduleLimits limits;
  BMat receive;
  BMat upload;
  std::vector<ScheduleEntry> entries;  // sorted by (applied, device, src)

  bool has(int device, int src, int applied) const {
    for (const auto& e : entries)
      if (e.device == device && e.src == src && e.applied == applied) return true;
    return false;
  }
};

// Tensor construction from the receive/upload matrices. An entry (g, g')
// means: trained from version g, applied at state g'. The span is anchored
// to the device's latest reception at or before g', so any reception in
// (g, g'] re-anchors it; admissible only for 0 <= g' - g <= K.
inline double tensor_entry(const BMat& receive, const BMat& upload, int device, int g, int gp) {
  if (gp < g) return 0.0;
  double v = static_cast<double>(receive[device][g]) * static_cast<double>(upload[device][gp]);
  for (int k = g + 1; k <= gp && v != 0.0; ++k) v *= 1.0 - static_cast<double>(receive[device][k]);
  return v;
}

inline ScheduleTensor build_tensor(const BMat& receive, const BMat& upload,
                                   const ScheduleLimits& limits, int task_id = 0) {
  const int I = static_cast<int>(receive.size());
  const int G = limits.num_aggregations;
  if (static_cast<int>(upload.size()) != I) throw std::invalid_argument("R/U device mismatch");
  for (int i = 0; i < I; ++i) {
    if (static_cast<int>(receive[i].size()) != G || static_cast<int>(upload[i].size()) != G)
      throw std::invalid_argument("R/U must be devices x G");
  }
  ScheduleTensor t;
  t.task_id = task_id;
  t.devices = I;
  t.limits = limits;
  t.receive = receive;
  t.upload = upload;
  for (int gp = 0; gp < G; ++gp) {
    for (int i = 0; i < I; ++i) {
      for (int g = std::max(0, gp - limits.staleness_limit); g <= gp; ++g) {
        if (tensor_entry(receive, upload, i, g, gp) > 0.5)
          t.entries.push_back({i, g, gp});
      }
    }
  }
  return t;
}

// Maximum realized staleness g' - g over scheduled entries.
inline int staleness(const ScheduleTensor& t) {
  if (t.entries.empty()) throw std::invalid_argument("no scheduled uploads");
  int m = 0;
  for (const auto& e : t.entries) m = std::max(m, e.applied - e.src);
  return m;
}

struct ScheduleViolation {
  int constraint_id = 0;  // 22..27; 23 also covers upload/reception coherence
  std::string what;
};

// Per-(device, index) idle and local-period lengths, needed for the
// plan-dependent checks (25) and (26).
struct SchedulePeriods {
  Mat idle;
  Mat local;
};

namespace detail {
inline std::string ij(const char* tag, int a, int b) {
  return std::string(tag) + "(" + std::to_string(a) + "," + std::to_string(b) + ")";
}
}  // namespace detail

inline std::vector<ScheduleViolation> check_schedule(const BMat& receive, const BMat& upload,
                                                     const ScheduleLimits& limits,
                                                     const SchedulePeriods* periods = nullptr) {
  const int I = static_cast<int>(receive.size());
  const int G = limits.num_aggregations;
  const int K = limits.staleness_limit;
  std::vector<ScheduleViolation> out;

  // (22): G <= total receptions <= G + K.
  long long rcount = 0;
  for (int i = 0; i < I; ++i)
    for (int g = 0; g < G; ++g) rcount += receive[i][g];
  if (rcount < G || rcount > static_cast<long long>(G) + K)
    out.push_back({22, "reception count " + std::to_string(rcount) + " outside [G, G+K]"});

  // (23): exactly one upload applied per aggregation 0..G-1.
  for (int g = 0; g < G; ++g) {
    int u = 0;
    for (int i = 0; i < I; ++i) u += upload[i][g];
    if (u != 1)
      out.push_back({23, std::to_string(u) + " uploaders at aggregation " + std::to_string(g)});
  }

  // (24): total uploads equal G (redundant with (23), checked verbatim).
  long long ucount = 0;
  for (int i = 0; i < I; ++i)
    for (int g = 0; g < G; ++g) ucount += upload[i][g];
  if (ucount != G) out.push_back({24, "total uploads " + std::to_string(ucount) + " != G"});

  // (23)-coherence + (27): per device, receptions and uploads alternate
  // (reception precedes upload within one index); every upload consumes the
  // latest reception and its staleness g'-src must not exceed K.
  for (int i = 0; i < I; ++i) {
    int src = -1;
    bool available = false;
    for (int g = 0; g < G; ++g) {
      if (receive[i][g]) {
        src = g;
        available = true;
      }
      if (upload[i][g]) {
        if (!available) {
          out.push_back({23, "upload without available reception at " + detail::ij("iu", i, g)});
        } else {
          if (g - src > K)
            out.push_back({27, "staleness " + std::to_string(g - src) + " exceeds K at " +
                                   detail::ij("iu", i, g)});
          available = false;
        }
      }
    }
  }

  if (periods) {
    // (25): idle gated by reception.
    for (int i = 0; i < I; ++i)
      for (int g = 0; g < G; ++g)
        if (!receive[i][g] && periods->idle[i][g] != 0.0)
          out.push_back({25, "idle on inactive slot " + detail::ij("ig", i, g)});

    // (26): cumulative local-period ordering between consecutive uploaders.
    auto cum = [&](int i, int g) {
      double s = 0.0;
      for (int k = 0; k < g; ++k) s += periods->local[i][k];
      return s;
    };
    for (int g = 0; g + 1 < G; ++g) {
      double lhs = 0.0, rhs = 0.0;
      for (int i = 0; i < I; ++i) {
        lhs += upload[i][g] ? cum(i, g) : 0.0;
        rhs += upload[i][g + 1] ? cum(i, g + 1) : 0.0;
      }
      if (lhs > rhs + 1e-12)
        out.push_back({26, "upload order reversed between aggregations " + std::to_string(g) +
                               " and " + std::to_string(g + 1)});
    }
  }
  return out;
}

// Brute-force enumeration of all (R, U) pairs passing the combinatorial
// constraints (22)-(25), (27); (26) is period-dependent and skipped.
inline std::vector<std::pair<BMat, BMat>> enumerate_feasible(int num_devices,
                                                             const ScheduleLimits& limits) {
  const int I = num_devices;
  const int G = limits.num_aggregations;
  if (I * G > 20) throw std::invalid_argument("instance too large");
  const long long r_patterns = 1LL << (I * G);
  // Uploads: exactly one device per aggregation -> I^G combinations.
  long long u_patterns = 1;
  for (int g = 0; g < G; ++g) {
    u_patterns *= I;
    if (u_patterns > (1LL << 26)) throw std::invalid_argument("instance too large");
  }
  if (u_patterns * r_patterns > (1LL << 26)) throw std::invalid_argument("instance too large");

  std::vector<std::pair<BMat, BMat>> out;
  for (long long um = 0; um < u_patterns; ++um) {
    BMat U = make_bmat(I, G);
    long long rem = um;
    for (int g = 0; g < G; ++g) {
      U[rem % I][g] = 1;
      rem /= I;
    }
    for (long long rm = 0; rm < r_patterns; ++rm) {
      BMat R = make_bmat(I, G);
      for (int b = 0; b < I * G; ++b)
        if (rm & (1LL << b)) R[b / G][b % G] = 1;
      if (check_schedule(R, U, limits).empty()) out.emplace_back(R, U);
    }
  }
  return out;
}

}  // namespace mafl
