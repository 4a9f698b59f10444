#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <tuple>
#include <vector>

#include "building.hpp"
#include "errors.hpp"
#include "random.hpp"
#include "rnn.hpp"

namespace evacnav {

// What a smart packet records when it crosses one hop. Additive goals use only `cost`;
// product-times-sum goals multiply the factors and add the costs.
struct HopMeasurement {
  double factor = 1.0;
  double cost = 0.0;

  friend bool operator==(const HopMeasurement&, const HopMeasurement&) = default;
};

enum class Aggregation { additive, product_times_sum };

// Per-hop cost evaluator plus the rule that folds hops into a path goal value G (minimised).
struct GoalFunction {
  // nullopt marks the hop Blocked. hop_index 0 means `from` is the packet's source.
  using HopFn = std::function<std::optional<HopMeasurement>(NodeId from, NodeId to, std::size_t hop_index)>;

  HopFn hop;
  Aggregation aggregation = Aggregation::additive;
  double alpha = 1.0;

  double evaluate(std::span<const HopMeasurement> hops) const {
    double sum = 0.0;
    double product = 1.0;
    for (const auto& h : hops) {
      sum += h.cost;
      product *= h.factor;
    }
    if (aggregation == Aggregation::additive) return sum;
    return alpha * product * sum;
  }

  // Measures a whole path from its first vertex; nullopt if any hop is Blocked.
  std::optional<std::vector<HopMeasurement>> measure(std::span<const NodeId> path) const {
    std::vector<HopMeasurement> hops;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      auto m = hop(path[i], path[i + 1], i);
      if (!m) return std::nullopt;
      hops.push_back(*m);
    }
    return hops;
  }
};

template <typename T>
concept Topology = requires(const T& t, NodeId n) {
  { t.neighbors(n) } -> std::convertible_to<const std::vector<NodeId>&>;
};

using DestinationFn = std::function<bool(NodeId)>;

struct CpnParams {
  int packets_per_recompute = 5;
  double hop_limit_factor = 4.0;  // hop limit = factor * vertex count
  double min_goal = 1e-6;         // floor on G before taking the reward 1/G
  RnnParams rnn;

  void validate() const {
    if (packets_per_recompute < 0) throw ConfigError("cpn.packets_per_recompute must be >= 0");
    if (!(hop_limit_factor > 0.0)) throw ConfigError("cpn.hop_limit_factor must be positive");
    rnn.validate();
  }
};

enum class PacketOutcome { delivered, dropped, blocked };

struct SmartPacket {
  NodeId source = 0;
  std::vector<NodeId> visited;       // full walk, loops included; begins at source
  std::vector<HopMeasurement> hops;  // hops[i] covers visited[i] -> visited[i + 1]
  std::size_t hop_limit = 0;
  PacketOutcome outcome = PacketOutcome::dropped;

  bool delivered() const { return outcome == PacketOutcome::delivered; }
};

struct CachedRoute {
  std::vector<NodeId> path;
  std::vector<HopMeasurement> hops;
  double goal = 0.0;
  double timestamp = 0.0;
};

// Chronological loop erasure: whenever the walk revisits a vertex, the cycle since its first
// occurrence is spliced out. Hops stay aligned with the surviving edges.
inline std::pair<std::vector<NodeId>, std::vector<HopMeasurement>> loop_erase(
    std::span<const NodeId> walk, std::span<const HopMeasurement> hops) {
  std::vector<NodeId> path;
  std::vector<HopMeasurement> kept;
  std::map<NodeId, std::size_t> at;
  for (std::size_t i = 0; i < walk.size(); ++i) {
    const NodeId v = walk[i];
    if (auto it = at.find(v); it != at.end()) {
      const std::size_t keep = it->second + 1;
      for (std::size_t j = keep; j < path.size(); ++j) at.erase(path[j]);
      path.resize(keep);
      kept.resize(keep - 1);
      continue;
    }
    if (i > 0 && !hops.empty()) kept.push_back(hops[i - 1]);
    at.emplace(v, path.size());
    path.push_back(v);
  }
  return {std::move(path), std::move(kept)};
}

inline std::vector<NodeId> loop_erase(std::span<const NodeId> walk) {
  return loop_erase(walk, std::span<const HopMeasurement>{}).first;
}

// Cognitive packet routing state for one goal class: one RNN gate per vertex (one neuron per
// neighbour) and a best-route cache per source. Topology and goal are passed per call so the
// same engine can follow a graph that changes between calls.
class CpnEngine {
 public:
  explicit CpnEngine(CpnParams params = {}) : params_(params) { params_.validate(); }

  const CpnParams& params() const { return params_; }

  std::size_t default_hop_limit(std::size_t vertex_count) const {
    return static_cast<std::size_t>(std::max(1.0, params_.hop_limit_factor * static_cast<double>(vertex_count)));
  }

  // Walks from `source` choosing each hop with the current vertex's RNN; neighbours already on
  // the walk are masked unless that would leave nothing to choose. Blocked hops are never taken.
  template <Topology T>
  SmartPacket send_smart_packet(const T& topo, const GoalFunction& goal, NodeId source,
                                const DestinationFn& is_destination, std::size_t hop_limit, Rng& rng) {
    SmartPacket sp;
    sp.source = source;
    sp.hop_limit = hop_limit;
    sp.visited.push_back(source);
    if (is_destination(source)) {
      sp.outcome = PacketOutcome::delivered;
      return sp;
    }
    NodeId here = source;
    std::vector<std::optional<HopMeasurement>> options;
    std::vector<bool> forbidden;
    while (true) {
      const std::vector<NodeId>& nbrs = topo.neighbors(here);
      options.clear();
      bool any_open = false;
      for (NodeId nb : nbrs) {
        auto m = goal.hop(here, nb, sp.hops.size());
        // Never step onto a vertex that cannot forward the packet any further.
        if (m && !is_destination(nb)) {
          bool onward = false;
          for (NodeId x : topo.neighbors(nb))
            if (x != here && goal.hop(nb, x, sp.hops.size() + 1)) {
              onward = true;
              break;
            }
          if (!onward) m.reset();
        }
        options.push_back(m);
        any_open = any_open || options.back().has_value();
      }
      if (!any_open) {
        sp.outcome = sp.hops.empty() ? PacketOutcome::blocked : PacketOutcome::dropped;
        return sp;
      }
      forbidden.assign(nbrs.size(), false);
      bool any_allowed = false;
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        const bool seen = std::find(sp.visited.begin(), sp.visited.end(), nbrs[k]) != sp.visited.end();
        forbidden[k] = !options[k] || seen;
        any_allowed = any_allowed || !forbidden[k];
      }
      if (!any_allowed)
        for (std::size_t k = 0; k < nbrs.size(); ++k) forbidden[k] = !options[k];
      // A destination one hop away is always taken; the gate only chooses among such hops.
      bool at_goal = false;
      for (std::size_t k = 0; k < nbrs.size(); ++k) at_goal = at_goal || (options[k] && is_destination(nbrs[k]));
      if (at_goal)
        for (std::size_t k = 0; k < nbrs.size(); ++k) forbidden[k] = !options[k] || !is_destination(nbrs[k]);

      const std::size_t pick = gate(here, nbrs).rnn.select(forbidden, rng);
      const NodeId next = nbrs[pick];
      sp.hops.push_back(*options[pick]);
      sp.visited.push_back(next);
      if (is_destination(next)) {
        sp.outcome = PacketOutcome::delivered;
        return sp;
      }
      if (sp.hops.size() >= hop_limit) {
        sp.outcome = PacketOutcome::dropped;
        return sp;
      }
      here = next;
    }
  }

  // ACK for a delivered packet: loop-erase, walk back rewarding each vertex's chosen neuron with
  // 1 / G(downstream), and refresh the cached route of the source (and of every vertex on the
  // way) if this one is better.
  void process_ack(const GoalFunction& goal, const SmartPacket& sp, double now) {
    if (!sp.delivered()) throw PreconditionError("ACK requires a packet that reached a destination");
    auto [path, hops] = loop_erase(sp.visited, sp.hops);
    for (std::size_t k = path.size(); k-- > 1;) {
      const NodeId node = path[k - 1];
      const NodeId next = path[k];
      auto it = gates_.find(node);
      if (it == gates_.end()) continue;
      const auto& nbrs = it->second.neighbors;
      auto pos = std::lower_bound(nbrs.begin(), nbrs.end(), next);
      if (pos == nbrs.end() || *pos != next) continue;
      const double downstream =
          goal.evaluate(std::span<const HopMeasurement>(hops).subspan(k - 1));
      it->second.rnn.reinforce(static_cast<std::size_t>(pos - nbrs.begin()),
                               1.0 / std::max(downstream, params_.min_goal));
    }
    // Every vertex the ACK passes learns the rest of the path as its own route, measured as if it
    // were the source.
    for (std::size_t k = path.size() - 1; k-- > 1;) {
      std::vector<NodeId> tail(path.begin() + static_cast<std::ptrdiff_t>(k), path.end());
      if (auto m = goal.measure(tail)) offer_route(goal, std::move(tail), std::move(*m), now);
    }
    offer_route(goal, std::move(path), std::move(hops), now);
  }

  // Cached path from `source`, or nullopt when nothing is cached or its first hop is no longer
  // usable (the entry is then dropped).
  template <Topology T>
  std::optional<std::vector<NodeId>> best_route(const T& topo, const GoalFunction& goal, NodeId source) {
    auto it = cache_.find(source);
    if (it == cache_.end()) return std::nullopt;
    const auto& path = it->second.path;
    if (path.size() >= 2) {
      const auto& nbrs = topo.neighbors(source);
      if (!std::binary_search(nbrs.begin(), nbrs.end(), path[1]) || !goal.hop(path[0], path[1], 0)) {
        cache_.erase(it);
        return std::nullopt;
      }
    }
    return path;
  }

  const CachedRoute* cached(NodeId source) const {
    auto it = cache_.find(source);
    return it == cache_.end() ? nullptr : &it->second;
  }

  void invalidate(NodeId source) { cache_.erase(source); }

  // Neighbour with the highest excitation at `node` among unblocked hops; no exploration.
  template <Topology T>
  std::optional<NodeId> greedy_next(const T& topo, const GoalFunction& goal, NodeId node, Rng& rng) {
    const auto& nbrs = topo.neighbors(node);
    std::vector<bool> forbidden(nbrs.size());
    bool any = false;
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      forbidden[k] = !goal.hop(node, nbrs[k], 0);
      any = any || !forbidden[k];
    }
    if (!any) return std::nullopt;
    return nbrs[gate(node, nbrs).rnn.select(0.0, forbidden, rng)];
  }

  const RandomNeuralNetwork* network(NodeId node) const {
    auto it = gates_.find(node);
    return it == gates_.end() ? nullptr : &it->second.rnn;
  }

  std::size_t cache_size() const { return cache_.size(); }

 private:
  struct Gate {
    std::vector<NodeId> neighbors;
    RandomNeuralNetwork rnn;
  };

  // The RNN gate at `node`, rebuilt around the current neighbour list when it has changed.
  Gate& gate(NodeId node, const std::vector<NodeId>& nbrs) {
    auto it = gates_.find(node);
    if (it == gates_.end())
      return gates_.emplace(node, Gate{nbrs, RandomNeuralNetwork(nbrs.size(), params_.rnn)}).first->second;
    Gate& g = it->second;
    if (g.neighbors != nbrs) {
      std::vector<std::ptrdiff_t> origin(nbrs.size(), -1);
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        auto pos = std::lower_bound(g.neighbors.begin(), g.neighbors.end(), nbrs[k]);
        if (pos != g.neighbors.end() && *pos == nbrs[k]) origin[k] = pos - g.neighbors.begin();
      }
      g.rnn = g.rnn.remapped(origin);
      g.neighbors = nbrs;
    }
    return g;
  }

  void offer_route(const GoalFunction& goal, std::vector<NodeId> path, std::vector<HopMeasurement> hops,
                   double now) {
    const NodeId source = path.front();
    const double g_new = goal.evaluate(hops);
    auto it = cache_.find(source);
    if (it != cache_.end()) {
      if (auto current = goal.measure(it->second.path)) {
        const double g_old = goal.evaluate(*current);
        if (!(g_new < g_old)) {
          it->second.hops = std::move(*current);
          it->second.goal = g_old;
          it->second.timestamp = now;
          return;
        }
      }
    }
    cache_[source] = CachedRoute{std::move(path), std::move(hops), g_new, now};
  }

  CpnParams params_;
  std::map<NodeId, Gate> gates_;
  std::map<NodeId, CachedRoute> cache_;
};

// Minimum-cost path from `source` to the nearest destination. `edge_cost(u, v)` returns nullopt
// for Blocked edges. Equal-cost paths resolve to the lexicographically smallest id sequence.
template <typename EdgeCost>
std::optional<std::vector<NodeId>> dijkstra_route(const BuildingGraph& g, NodeId source,
                                                  const DestinationFn& is_destination, EdgeCost&& edge_cost) {
  const std::size_t n = g.node_count();
  const std::size_t src = g.index_of(source);
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<std::vector<NodeId>> best(n);  // full path per vertex keeps the tie rule exact
  std::vector<bool> done(n, false);
  using Entry = std::tuple<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  dist[src] = 0.0;
  best[src] = {source};
  open.emplace(0.0, src);
  std::optional<std::size_t> found;
  while (!open.empty()) {
    auto [d, i] = open.top();
    open.pop();
    if (done[i] || d > dist[i]) continue;
    const NodeId u = g.nodes()[i].id;
    if (is_destination(u)) {
      // Among destinations at equal distance, prefer the smaller path sequence.
      if (!found || d < dist[*found] || (d == dist[*found] && best[i] < best[*found])) found = i;
      if (d > dist[*found]) break;
      done[i] = true;
      continue;
    }
    if (found && d > dist[*found]) break;
    done[i] = true;
    for (NodeId v : g.neighbors(u)) {
      const std::size_t j = g.index_of(v);
      if (done[j]) continue;
      const std::optional<double> w = edge_cost(u, v);
      if (!w) continue;
      const double nd = d + *w;
      std::vector<NodeId> candidate = best[i];
      candidate.push_back(v);
      if (nd < dist[j] || (nd == dist[j] && candidate < best[j])) {
        dist[j] = nd;
        best[j] = std::move(candidate);
        open.emplace(nd, j);
      }
    }
  }
  if (!found) return std::nullopt;
  return best[*found];
}

}  // namespace evacnav
