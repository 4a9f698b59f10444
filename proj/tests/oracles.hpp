#pragma once

// Independent reference computations for the tests. Nothing here calls into the library's
// algorithms; only plain data types are shared.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "evacnav/building.hpp"
#include "evacnav/comms.hpp"
#include "evacnav/random.hpp"

namespace oracle {

using evacnav::NodeId;

// Every simple path from `source` that ends at the first destination it meets.
inline void simple_paths(const std::function<std::vector<NodeId>(NodeId)>& neighbors, NodeId source,
                         const std::function<bool(NodeId)>& is_dest,
                         const std::function<void(const std::vector<NodeId>&)>& visit) {
  std::vector<NodeId> path{source};
  std::function<void()> dfs = [&] {
    const NodeId here = path.back();
    if (path.size() > 1 && is_dest(here)) {
      visit(path);
      return;
    }
    for (NodeId nb : neighbors(here)) {
      if (std::find(path.begin(), path.end(), nb) != path.end()) continue;
      path.push_back(nb);
      dfs();
      path.pop_back();
    }
  };
  if (is_dest(source)) {
    visit(path);
    return;
  }
  dfs();
}

// Cheapest simple path cost to any exit by full enumeration, edge cost = length.
inline std::optional<double> brute_force_shortest(const evacnav::BuildingGraph& g, NodeId source) {
  std::optional<double> best;
  simple_paths([&](NodeId v) { return g.neighbors(v); }, source, [&](NodeId v) { return g.is_exit(v); },
               [&](const std::vector<NodeId>& p) {
                 double c = 0.0;
                 for (std::size_t i = 0; i + 1 < p.size(); ++i) c += *g.edge_length(p[i], p[i + 1]);
                 if (!best || c < *best) best = c;
               });
  return best;
}

// Relay goal of a phone path recomputed from first principles: availability B/(B - drain) per
// sending phone (source pays Bluetooth upload, relays download + upload), delay per hop at the
// Bluetooth rate. nullopt when some sender cannot afford its share.
inline std::optional<double> relay_goal(const std::vector<NodeId>& path, const std::vector<double>& battery_j,
                                        std::uint64_t bytes, double alpha = 1.0) {
  const double up = 0.00012012 * static_cast<double>(bytes);
  const double down = 0.0001377 * static_cast<double>(bytes);
  const double delay = static_cast<double>(bytes) * 8.0 / 1e6;
  double product = 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double b = battery_j[static_cast<std::size_t>(path[i])];
    const double drain = i == 0 ? up : up + down;
    if (drain >= b) return std::nullopt;
    product *= b / (b - drain);
    sum += delay;
  }
  return alpha * product * sum;
}

// Best relay goal over all simple phone paths to any access point.
inline std::optional<double> best_relay_goal(const evacnav::PhoneGraph& g, NodeId source,
                                             const std::vector<double>& battery_j, std::uint64_t bytes) {
  std::optional<double> best;
  simple_paths(
      [&](NodeId v) {
        // access points do not forward
        if (g.is_access_point(v)) return std::vector<NodeId>{};
        return g.neighbors(v);
      },
      source, [&](NodeId v) { return g.is_access_point(v); },
      [&](const std::vector<NodeId>& p) {
        if (p.size() < 2) return;
        auto v = relay_goal(p, battery_j, bytes);
        if (v && (!best || *v < *best)) best = v;
      });
  return best;
}

// Plain fixed-point iteration of the RNN steady state, `steps` sweeps from q = 0, no early exit.
inline std::vector<double> rnn_fixed_point(std::size_t m, const std::vector<double>& wp, const std::vector<double>& wm,
                                           const std::vector<double>& big, const std::vector<double>& small,
                                           int steps = 10'000, double cap = 0.9999) {
  std::vector<double> q(m, 0.0), next(m);
  for (int it = 0; it < steps; ++it) {
    for (std::size_t i = 0; i < m; ++i) {
      double r = 0.0, plus = big[i], minus = small[i];
      for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        r += wp[i * m + j] + wm[i * m + j];
        plus += q[j] * wp[j * m + i];
        minus += q[j] * wm[j * m + i];
      }
      const double d = r + minus;
      next[i] = std::min(d > 0.0 ? plus / d : cap, cap);
    }
    q.swap(next);
  }
  return q;
}

// Connected random graph: node i > 0 hangs off a random earlier node, plus `extra` chords.
// Nodes in `exits` become exits, the rest landmarks.
inline evacnav::BuildingGraph random_building(evacnav::Rng& rng, int n, int extra, const std::vector<NodeId>& exits,
                                              double side_m = 50.0) {
  std::vector<evacnav::NodeRecord> nodes;
  for (int i = 0; i < n; ++i) {
    const bool exit = std::find(exits.begin(), exits.end(), i) != exits.end();
    nodes.push_back({i, rng.uniform() * side_m, rng.uniform() * side_m, 0,
                     exit ? evacnav::NodeKind::exit : evacnav::NodeKind::landmark});
  }
  std::vector<evacnav::EdgeRecord> edges;
  auto has = [&](int a, int b) {
    return std::any_of(edges.begin(), edges.end(), [&](const evacnav::EdgeRecord& e) {
      return (e.a == a && e.b == b) || (e.a == b && e.b == a);
    });
  };
  for (int i = 1; i < n; ++i) edges.push_back({static_cast<int>(rng.below(static_cast<std::uint64_t>(i))), i, 0.0});
  for (int k = 0, tries = 0; k < extra && tries < 1000; ++tries) {
    const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    if (a == b || has(a, b)) continue;
    edges.push_back({a, b, 0.0});
    ++k;
  }
  return evacnav::BuildingGraph::build(std::move(nodes), std::move(edges), {});
}

}  // namespace oracle
