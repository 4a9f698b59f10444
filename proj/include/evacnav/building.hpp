#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"

namespace evacnav {

using NodeId = int;

// Storey height used to turn a floor index into a vertical coordinate.
inline constexpr double kFloorHeightM = 4.0;

enum class NodeKind { landmark, exit, plain };

inline std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::landmark: return "landmark";
    case NodeKind::exit: return "exit";
    case NodeKind::plain: return "plain";
  }
  return "plain";
}

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3&, const Point3&) = default;
};

inline double distance(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline Point3 lerp(const Point3& a, const Point3& b, double t) {
  return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, a.z + (b.z - a.z) * t};
}

struct NodeRecord {
  NodeId id = 0;
  double x_m = 0.0;
  double y_m = 0.0;
  int floor = 0;
  NodeKind kind = NodeKind::plain;

  Point3 position() const { return {x_m, y_m, floor * kFloorHeightM}; }

  friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

struct EdgeRecord {
  NodeId a = 0;
  NodeId b = 0;
  double length_m = 0.0;

  friend bool operator==(const EdgeRecord&, const EdgeRecord&) = default;
};

// Immutable landmark/exit graph of a building. Construct through BuildingGraph::build
// or load_building; both validate every invariant before returning.
class BuildingGraph {
 public:
  // Edges given with length_m <= 0 are treated as "omitted" and receive the 3-D
  // Euclidean distance between their endpoints.
  static BuildingGraph build(std::vector<NodeRecord> nodes, std::vector<EdgeRecord> edges,
                             std::vector<NodeId> access_points) {
    BuildingGraph g;
    g.nodes_ = std::move(nodes);
    for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
      const auto& n = g.nodes_[i];
      if (n.floor < 0)
        throw ValidationError("node " + std::to_string(n.id) + " has negative floor");
      if (!std::isfinite(n.x_m) || !std::isfinite(n.y_m))
        throw ValidationError("node " + std::to_string(n.id) + " has non-finite coordinates");
      if (!g.index_.emplace(n.id, i).second)
        throw ValidationError("duplicate node id " + std::to_string(n.id));
      if (n.kind == NodeKind::exit) g.exits_.push_back(n.id);
    }
    if (g.exits_.empty()) throw ValidationError("building has no exit node");
    std::sort(g.exits_.begin(), g.exits_.end());

    g.adjacency_.assign(g.nodes_.size(), {});
    g.edges_ = std::move(edges);
    for (std::size_t e = 0; e < g.edges_.size(); ++e) {
      auto& edge = g.edges_[e];
      for (NodeId end : {edge.a, edge.b})
        if (!g.contains(end))
          throw ValidationError("edge " + std::to_string(edge.a) + "-" + std::to_string(edge.b) +
                                " references missing node " + std::to_string(end));
      if (edge.a == edge.b)
        throw ValidationError("edge " + std::to_string(edge.a) + "-" + std::to_string(edge.b) +
                              " is a self-loop");
      if (!(edge.length_m > 0.0)) edge.length_m = g.euclidean_m(edge.a, edge.b);
      if (!(edge.length_m > 0.0) || !std::isfinite(edge.length_m))
        throw ValidationError("edge " + std::to_string(edge.a) + "-" + std::to_string(edge.b) +
                              " has non-positive length");
      if (!g.edge_index_.emplace(key(edge.a, edge.b), e).second)
        throw ValidationError("duplicate edge " + std::to_string(edge.a) + "-" +
                              std::to_string(edge.b));
      g.adjacency_[g.index_.at(edge.a)].push_back(edge.b);
      g.adjacency_[g.index_.at(edge.b)].push_back(edge.a);
    }
    for (auto& adj : g.adjacency_) std::sort(adj.begin(), adj.end());

    g.access_points_ = std::move(access_points);
    for (NodeId ap : g.access_points_)
      if (!g.contains(ap))
        throw ValidationError("access point references missing node " + std::to_string(ap));
    if (g.access_points_.empty()) g.access_points_ = g.exits_;
    std::sort(g.access_points_.begin(), g.access_points_.end());
    g.access_points_.erase(std::unique(g.access_points_.begin(), g.access_points_.end()),
                           g.access_points_.end());

    g.check_connected();
    return g;
  }

  std::span<const NodeRecord> nodes() const { return nodes_; }
  std::span<const EdgeRecord> edges() const { return edges_; }
  std::span<const NodeId> access_points() const { return access_points_; }
  std::span<const NodeId> exits() const { return exits_; }
  std::size_t node_count() const { return nodes_.size(); }

  bool contains(NodeId id) const { return index_.contains(id); }

  const NodeRecord& node(NodeId id) const { return nodes_[index_of(id)]; }

  // Dense index in [0, node_count()) for per-node arrays.
  std::size_t index_of(NodeId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownNodeError(id);
    return it->second;
  }

  bool is_exit(NodeId id) const { return node(id).kind == NodeKind::exit; }

  // Sorted ascending.
  const std::vector<NodeId>& neighbors(NodeId id) const { return adjacency_[index_of(id)]; }

  bool adjacent(NodeId u, NodeId v) const { return edge_index_.contains(key(u, v)); }

  std::optional<double> edge_length(NodeId u, NodeId v) const {
    auto it = edge_index_.find(key(u, v));
    if (it == edge_index_.end()) return std::nullopt;
    return edges_[it->second].length_m;
  }

  // Index into edges() of the edge joining u and v.
  std::optional<std::size_t> edge_id(NodeId u, NodeId v) const {
    auto it = edge_index_.find(key(u, v));
    if (it == edge_index_.end()) return std::nullopt;
    return it->second;
  }

  Point3 position(NodeId id) const { return node(id).position(); }

  // sqrt(dx^2 + dy^2 + (floor height * dfloor)^2).
  double euclidean_m(NodeId u, NodeId v) const { return distance(position(u), position(v)); }

  friend bool operator==(const BuildingGraph& a, const BuildingGraph& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_ && a.access_points_ == b.access_points_;
  }

 private:
  BuildingGraph() = default;

  static std::pair<NodeId, NodeId> key(NodeId u, NodeId v) { return {std::min(u, v), std::max(u, v)}; }

  struct PairHash {
    std::size_t operator()(const std::pair<NodeId, NodeId>& p) const noexcept {
      return std::hash<long long>{}((static_cast<long long>(p.first) << 32) ^
                                    static_cast<unsigned>(p.second));
    }
  };

  void check_connected() const {
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      for (NodeId n : adjacency_[i]) {
        const std::size_t j = index_.at(n);
        if (!seen[j]) {
          seen[j] = true;
          stack.push_back(j);
        }
      }
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (!seen[i])
        throw ValidationError("building graph is disconnected: node " +
                              std::to_string(nodes_[i].id) + " unreachable from node " +
                              std::to_string(nodes_[0].id));
  }

  std::vector<NodeRecord> nodes_;
  std::vector<EdgeRecord> edges_;
  std::vector<NodeId> access_points_;
  std::vector<NodeId> exits_;
  std::unordered_map<NodeId, std::size_t> index_;
  std::unordered_map<std::pair<NodeId, NodeId>, std::size_t, PairHash> edge_index_;
  std::vector<std::vector<NodeId>> adjacency_;
};

namespace detail {

inline NodeKind parse_kind(const std::string& s) {
  if (s == "landmark") return NodeKind::landmark;
  if (s == "exit") return NodeKind::exit;
  if (s == "plain") return NodeKind::plain;
  throw ParseError("unknown node kind '" + s + "'");
}

template <typename T>
T required(const nlohmann::json& obj, const char* field, const std::string& where) {
  if (!obj.is_object() || !obj.contains(field))
    throw ParseError(where + ": missing field '" + field + "'");
  try {
    return obj.at(field).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(where + ": field '" + field + "' has the wrong type");
  }
}

}  // namespace detail

// Parses and validates a building document:
//   {"nodes": [{id, x_m, y_m, floor, kind}], "edges": [{a, b, length_m?}], "access_points": [ids]}
inline BuildingGraph load_building(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("building file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("building file must be a JSON object");
  if (!doc.contains("nodes") || !doc["nodes"].is_array())
    throw ParseError("building file needs a 'nodes' array");
  if (!doc.contains("edges") || !doc["edges"].is_array())
    throw ParseError("building file needs an 'edges' array");

  std::vector<NodeRecord> nodes;
  for (std::size_t i = 0; i < doc["nodes"].size(); ++i) {
    const auto& n = doc["nodes"][i];
    const std::string where = "nodes[" + std::to_string(i) + "]";
    nodes.push_back({detail::required<NodeId>(n, "id", where),
                     detail::required<double>(n, "x_m", where),
                     detail::required<double>(n, "y_m", where),
                     detail::required<int>(n, "floor", where),
                     detail::parse_kind(detail::required<std::string>(n, "kind", where))});
  }

  std::vector<EdgeRecord> edges;
  for (std::size_t i = 0; i < doc["edges"].size(); ++i) {
    const auto& e = doc["edges"][i];
    const std::string where = "edges[" + std::to_string(i) + "]";
    EdgeRecord rec{detail::required<NodeId>(e, "a", where), detail::required<NodeId>(e, "b", where),
                   0.0};
    if (e.contains("length_m") && !e["length_m"].is_null()) {
      rec.length_m = detail::required<double>(e, "length_m", where);
      if (!(rec.length_m > 0.0)) throw ValidationError(where + ": length_m must be positive");
    }
    edges.push_back(rec);
  }

  std::vector<NodeId> aps;
  if (doc.contains("access_points")) {
    if (!doc["access_points"].is_array()) throw ParseError("'access_points' must be an array");
    for (const auto& ap : doc["access_points"]) {
      if (!ap.is_number_integer()) throw ParseError("access point ids must be integers");
      aps.push_back(ap.get<NodeId>());
    }
  }
  return BuildingGraph::build(std::move(nodes), std::move(edges), std::move(aps));
}

// Inverse of load_building; every edge length is written explicitly.
inline std::string render_building(const BuildingGraph& g) {
  nlohmann::ordered_json doc;
  doc["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : g.nodes())
    doc["nodes"].push_back(
        {{"id", n.id}, {"x_m", n.x_m}, {"y_m", n.y_m}, {"floor", n.floor}, {"kind", to_string(n.kind)}});
  doc["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : g.edges())
    doc["edges"].push_back({{"a", e.a}, {"b", e.b}, {"length_m", e.length_m}});
  doc["access_points"] = std::vector<NodeId>(g.access_points().begin(), g.access_points().end());
  return doc.dump(2);
}

inline double euclidean_m(const BuildingGraph& g, NodeId u, NodeId v) { return g.euclidean_m(u, v); }

// Visibility between two nodes: same node, or adjacent on one floor with neither endpoint burning.
// Hazard needs `bool is_burning(NodeId) const`.
template <typename Hazard>
bool line_of_sight(const BuildingGraph& g, NodeId u, NodeId v, const Hazard& hazard) {
  const auto& nu = g.node(u);
  const auto& nv = g.node(v);
  if (u == v) return true;
  if (nu.floor != nv.floor || !g.adjacent(u, v)) return false;
  return !hazard.is_burning(u) && !hazard.is_burning(v);
}

}  // namespace evacnav
