#pragma once

#include <optional>
#include <string>
#include <vector>

#include "building.hpp"
#include "errors.hpp"
#include "random.hpp"

namespace evacnav {

struct HazardParams {
  double spread_probability = 0.3;
  double spread_tick_s = 5.0;
  // Delay before the route service learns that a node burns.
  double sensing_delay_s = 10.0;

  void validate() const {
    if (!(spread_probability >= 0.0 && spread_probability <= 1.0))
      throw ConfigError("hazard.spread_probability must lie in [0, 1]");
    if (!(spread_tick_s > 0.0)) throw ConfigError("hazard.spread_tick_s must be positive");
    if (!(sensing_delay_s >= 0.0)) throw ConfigError("hazard.sensing_delay_s must be non-negative");
  }
};

// Per-node ignition times over a fixed building. Copyable value; burnt set only grows.
class HazardField {
 public:
  HazardField(const BuildingGraph& g, HazardParams params)
      : graph_(&g), params_(params), ignition_(g.node_count()) {
    params_.validate();
  }

  const HazardParams& params() const { return params_; }

  void ignite(NodeId node, double t) {
    auto& slot = ignition_[graph_->index_of(node)];
    if (slot) throw PreconditionError("node " + std::to_string(node) + " is already burning");
    slot = t;
  }

  // One spread tick at time t. Every unburnt node touching a node that was burning before
  // this tick ignites with spread_probability; one draw per candidate in ascending id order.
  void spread(double t, Rng& rng) {
    if (params_.spread_probability <= 0.0) return;
    std::vector<NodeId> candidates;
    for (const auto& n : graph_->nodes()) {
      if (is_burning(n.id)) continue;
      for (NodeId nb : graph_->neighbors(n.id))
        if (is_burning(nb)) {
          candidates.push_back(n.id);
          break;
        }
    }
    std::sort(candidates.begin(), candidates.end());
    for (NodeId c : candidates)
      if (rng.bernoulli(params_.spread_probability)) ignition_[graph_->index_of(c)] = t;
  }

  std::optional<double> ignition_time(NodeId node) const { return ignition_[graph_->index_of(node)]; }

  // Burning at any time so far.
  bool is_burning(NodeId node) const { return ignition_[graph_->index_of(node)].has_value(); }

  bool burning_at(NodeId node, double t) const {
    const auto& slot = ignition_[graph_->index_of(node)];
    return slot && t >= *slot;
  }

  // The route service's view: true once sensing_delay_s has elapsed since ignition.
  bool known_burning(NodeId node, double t) const {
    const auto& slot = ignition_[graph_->index_of(node)];
    return slot && t >= *slot + params_.sensing_delay_s;
  }

  std::size_t burning_count() const {
    std::size_t n = 0;
    for (const auto& s : ignition_) n += s.has_value();
    return n;
  }

 private:
  const BuildingGraph* graph_;
  HazardParams params_;
  std::vector<std::optional<double>> ignition_;  // by dense node index
};

}  // namespace evacnav
