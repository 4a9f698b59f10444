#pragma once

#include <cmath>
#include <optional>
#include <span>

#include "building.hpp"
#include "errors.hpp"

namespace evacnav {

// Coefficients of the inverse-power social force between two evacuees.
// With the defaults the force changes sign at roughly 7 m.
struct SpfParams {
  double c1 = 20.0;      // repulsion coefficient
  double c2 = 15.0;      // attraction coefficient
  double sigma1 = 0.9478;
  double sigma2 = 0.8;
  double influence_radius_m = 20.0;

  void validate() const {
    if (!(c1 > 0 && c2 > 0 && sigma1 > 0 && sigma2 > 0 && influence_radius_m > 0))
      throw ConfigError("spf parameters must all be positive");
  }
};

// Distance substituted for coincident evacuees; the other is assumed to lie along +x.
inline constexpr double kCoincidentDistanceM = 0.01;
// Below this magnitude the field gives no direction.
inline constexpr double kMinForceMagnitude = 1e-6;

struct ForceVector {
  double fx = 0.0;
  double fy = 0.0;

  double norm() const { return std::hypot(fx, fy); }
  ForceVector& operator+=(const ForceVector& o) {
    fx += o.fx;
    fy += o.fy;
    return *this;
  }
};

struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;
};

// Signed scalar force at separation r: negative repels, positive attracts, zero past the radius.
inline double pairwise_force(double r, const SpfParams& p = {}) {
  if (!(r > 0.0)) throw PreconditionError("pairwise_force needs r > 0");
  if (r > p.influence_radius_m) return 0.0;
  return -p.c1 / std::pow(r, p.sigma1) + p.c2 / std::pow(r, p.sigma2);
}

// Force exerted on `self` by one other evacuee on the same floor.
inline ForceVector force_from(PlanarPoint self, PlanarPoint other, const SpfParams& p = {}) {
  const double dx = other.x - self.x;
  const double dy = other.y - self.y;
  const double r = std::hypot(dx, dy);
  if (r == 0.0) return {pairwise_force(kCoincidentDistanceM, p), 0.0};
  const double f = pairwise_force(r, p);
  return {f * dx / r, f * dy / r};
}

// Vector sum of pairwise forces; callers pass only evacuees on the same floor.
inline ForceVector resultant_force(PlanarPoint self, std::span<const PlanarPoint> others,
                                   const SpfParams& p = {}) {
  ForceVector total;
  for (const auto& o : others) total += force_from(self, o, p);
  return total;
}

// Same-floor neighbour whose direction best matches the force (max cosine, ties to the
// smaller id). `admissible(id)` can veto neighbours. nullopt when the force is negligible or
// no neighbour qualifies.
template <typename Admissible>
std::optional<NodeId> spf_next_node(const BuildingGraph& g, NodeId current, const ForceVector& force,
                                    Admissible&& admissible) {
  const auto& here = g.node(current);
  const double mag = force.norm();
  if (mag < kMinForceMagnitude) return std::nullopt;
  std::optional<NodeId> best;
  double best_cos = -2.0;
  for (NodeId nb : g.neighbors(current)) {
    const auto& there = g.node(nb);
    if (there.floor != here.floor || !admissible(nb)) continue;
    const double dx = there.x_m - here.x_m;
    const double dy = there.y_m - here.y_m;
    const double len = std::hypot(dx, dy);
    if (len == 0.0) continue;
    const double c = (force.fx * dx + force.fy * dy) / (mag * len);
    if (c > best_cos) {  // neighbours are ascending, so strict > keeps the smaller id on ties
      best_cos = c;
      best = nb;
    }
  }
  return best;
}

inline std::optional<NodeId> spf_next_node(const BuildingGraph& g, NodeId current,
                                           const ForceVector& force) {
  return spf_next_node(g, current, force, [](NodeId) { return true; });
}

}  // namespace evacnav
