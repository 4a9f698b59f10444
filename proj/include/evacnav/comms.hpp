#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "building.hpp"
#include "cpn.hpp"
#include "energy.hpp"
#include "errors.hpp"
#include "random.hpp"

namespace evacnav {

enum class CommsMode { direct3g, ahcpn };

inline std::string_view to_string(CommsMode m) { return m == CommsMode::direct3g ? "direct3g" : "ahcpn"; }

struct CommsParams {
  double alpha = 1.0;
  double bluetooth_range_m = 10.0;
  std::uint64_t smart_packet_bytes = 100;
  double discovery_tick_s = 10.0;
  std::uint64_t photo_bytes = 500'000;
  std::uint64_t instruction_bytes = 1'000;
  bool fallback_to_3g = true;
  bool cellular_competes = true;  // a relay quote must beat the 3G uplink under the same goal

  void validate() const {
    if (!(alpha > 0.0)) throw ConfigError("comms.alpha must be positive");
    if (!(bluetooth_range_m > 0.0)) throw ConfigError("comms.bluetooth_range_m must be positive");
    if (!(discovery_tick_s > 0.0)) throw ConfigError("comms.discovery_tick_s must be positive");
  }
};

// Availability factor B_C / (B_C - B_U); nullopt (Excluded) once the estimated drain
// reaches the remaining charge.
inline std::optional<double> path_availability(double remaining_j, double drain_j) {
  if (remaining_j < 0.0 || drain_j < 0.0) throw PreconditionError("charges must be non-negative");
  if (drain_j >= remaining_j) return std::nullopt;
  return remaining_j / (remaining_j - drain_j);
}

// alpha * prod(availability) * sum(delay).
inline double path_goal(std::span<const double> availabilities, std::span<const double> delays,
                        double alpha) {
  if (availabilities.empty() || availabilities.size() != delays.size())
    throw PreconditionError("path goal needs at least one hop and matching hop vectors");
  double product = 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < availabilities.size(); ++i) {
    product *= availabilities[i];
    sum += delays[i];
  }
  return alpha * product * sum;
}

struct PathQuote {
  std::vector<NodeId> path;  // source phone first, access point last
  std::vector<double> availabilities;
  std::vector<double> delays_s;
  double alpha = 1.0;
  double goal_value = 0.0;

  std::size_t hops() const { return availabilities.size(); }
};

struct Phone {
  Battery battery;
  bool active = true;
};

// Handsets of one run plus the ledger of every joule taken from them.
class PhoneBank {
 public:
  PhoneBank() = default;
  explicit PhoneBank(std::vector<Phone> phones) : phones_(std::move(phones)) {
    for (const auto& p : phones_) initial_ += p.battery.remaining_nj();
  }

  std::size_t size() const { return phones_.size(); }
  const Phone& operator[](std::size_t i) const { return phones_.at(i); }
  std::span<const Phone> phones() const { return phones_; }

  // Debits phone i; false (and the phone goes inactive for good) if it drained.
  bool charge(std::size_t i, double joules) {
    Phone& p = phones_.at(i);
    if (!p.active) return false;
    const DebitResult r = p.battery.debit(joules);
    spent_ += r.debited;
    if (r.drained) {
      p.active = false;
      ++drained_;
    }
    return !r.drained;
  }

  Nanojoules spent_nj() const { return spent_; }
  Nanojoules initial_nj() const { return initial_; }
  Nanojoules remaining_nj() const {
    Nanojoules total = 0;
    for (const auto& p : phones_) total += p.battery.remaining_nj();
    return total;
  }
  std::size_t drained_count() const { return drained_; }

 private:
  std::vector<Phone> phones_;
  Nanojoules initial_ = 0;
  Nanojoules spent_ = 0;
  std::size_t drained_ = 0;
};

// Bluetooth contact graph among active phones and access points. Phone i is vertex i; access
// point k is vertex phone_count + k.
class PhoneGraph {
 public:
  PhoneGraph() = default;

  // `present` masks phones whose owners are still in the building; drained phones are always absent.
  static PhoneGraph build(std::span<const Point3> phone_positions, const std::vector<bool>& present,
                          const PhoneBank& bank, std::span<const Point3> ap_positions, double range_m,
                          double time_s) {
    if (phone_positions.size() != bank.size() || present.size() != bank.size())
      throw PreconditionError("one position and presence flag per phone is required");
    PhoneGraph g;
    g.phones_ = phone_positions.size();
    g.time_s_ = time_s;
    g.positions_.assign(phone_positions.begin(), phone_positions.end());
    g.positions_.insert(g.positions_.end(), ap_positions.begin(), ap_positions.end());
    const std::size_t n = g.positions_.size();
    g.present_.assign(n, true);
    for (std::size_t i = 0; i < g.phones_; ++i) g.present_[i] = present[i] && bank[i].active;
    g.adjacency_.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
      if (!g.present_[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!g.present_[j]) continue;
        if (distance(g.positions_[i], g.positions_[j]) <= range_m) {
          g.adjacency_[i].push_back(static_cast<NodeId>(j));
          g.adjacency_[j].push_back(static_cast<NodeId>(i));
        }
      }
    }
    g.component_.assign(n, -1);
    for (std::size_t s = 0; s < n; ++s) {
      if (g.component_[s] >= 0) continue;
      const int label = static_cast<int>(g.component_sizes_.size());
      std::size_t size = 0;
      std::vector<std::size_t> stack{s};
      g.component_[s] = label;
      while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        ++size;
        for (NodeId w : g.adjacency_[v])
          if (g.component_[static_cast<std::size_t>(w)] < 0) {
            g.component_[static_cast<std::size_t>(w)] = label;
            stack.push_back(static_cast<std::size_t>(w));
          }
      }
      g.component_sizes_.push_back(size);
    }
    g.component_has_ap_.assign(g.component_sizes_.size(), false);
    for (std::size_t v = g.phones_; v < n; ++v) g.component_has_ap_[static_cast<std::size_t>(g.component_[v])] = true;
    return g;
  }

  const std::vector<NodeId>& neighbors(NodeId v) const {
    static const std::vector<NodeId> none;
    if (v < 0 || static_cast<std::size_t>(v) >= adjacency_.size()) return none;
    return adjacency_[static_cast<std::size_t>(v)];
  }

  bool adjacent(NodeId u, NodeId v) const {
    const auto& n = neighbors(u);
    return std::binary_search(n.begin(), n.end(), v);
  }

  bool has_vertex(NodeId v) const {
    return v >= 0 && static_cast<std::size_t>(v) < present_.size() && present_[static_cast<std::size_t>(v)];
  }
  bool is_access_point(NodeId v) const {
    return v >= 0 && static_cast<std::size_t>(v) >= phones_ && static_cast<std::size_t>(v) < positions_.size();
  }
  std::size_t phone_count() const { return phones_; }
  std::size_t vertex_count() const { return positions_.size(); }
  NodeId access_point_vertex(std::size_t k) const { return static_cast<NodeId>(phones_ + k); }
  double timestamp() const { return time_s_; }

  // True when some access point is reachable from v over Bluetooth.
  bool reaches_access_point(NodeId v) const {
    if (!has_vertex(v)) return false;
    return component_has_ap_[static_cast<std::size_t>(component_[static_cast<std::size_t>(v)])];
  }

  // Number of vertices reachable from v, v included.
  std::size_t component_size(NodeId v) const {
    if (v < 0 || static_cast<std::size_t>(v) >= component_.size()) return 0;
    return component_sizes_[static_cast<std::size_t>(component_[static_cast<std::size_t>(v)])];
  }

 private:
  std::size_t phones_ = 0;
  double time_s_ = 0.0;
  std::vector<Point3> positions_;
  std::vector<bool> present_;
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<int> component_;
  std::vector<std::size_t> component_sizes_;
  std::vector<bool> component_has_ap_;
};

// Estimated drain B_U of relaying one payload: the source only uploads, intermediates receive
// and forward, access points are mains powered.
struct TransmissionEstimate {
  std::uint64_t payload_bytes = 0;

  double source_j(const EnergyModel& m) const {
    return tx_energy(m, Radio::bluetooth, Direction::upload, payload_bytes);
  }
  double intermediate_j(const EnergyModel& m) const {
    return tx_energy(m, Radio::bluetooth, Direction::download, payload_bytes) +
           tx_energy(m, Radio::bluetooth, Direction::upload, payload_bytes);
  }
};

struct DeliveryReport {
  bool success = false;
  bool relayed = false;        // went over Bluetooth through the ad-hoc network
  bool fell_back = false;      // ad-hoc route was unavailable, cellular used instead
  std::vector<NodeId> path;    // phone/access-point vertices when relayed
  std::vector<std::pair<NodeId, double>> debits;  // (phone, joules) in debit order
  double latency_s = 0.0;

  double total_j() const {
    double s = 0.0;
    for (const auto& [_, j] : debits) s += j;
    return s;
  }
};

// Ad-hoc relay protocol state for one run: a CPN engine whose goal is the energy/delay product
// over the current PhoneGraph, toward the access-point set.
class RelayNetwork {
 public:
  RelayNetwork(CommsParams params, EnergyModel energy, CpnParams cpn)
      : params_(params), energy_(energy), engine_(cpn) {
    params_.validate();
    energy_.validate();
  }

  const CommsParams& params() const { return params_; }
  const EnergyModel& energy() const { return energy_; }
  CpnEngine& engine() { return engine_; }
  const PhoneGraph& graph() const { return graph_; }

  void rebuild(std::span<const Point3> phone_positions, const std::vector<bool>& present,
               const PhoneBank& bank, std::span<const Point3> ap_positions, double time_s) {
    graph_ = PhoneGraph::build(phone_positions, present, bank, ap_positions, params_.bluetooth_range_m,
                               time_s);
  }

  void set_graph(PhoneGraph g) { graph_ = std::move(g); }

  // Goal over the current graph for relaying `payload_bytes`: per hop the sender's availability
  // factor and the Bluetooth transfer time. Hops from access points, to absent vertices, or from
  // excluded senders are Blocked.
  GoalFunction goal(const PhoneBank& bank, std::uint64_t payload_bytes) const {
    const TransmissionEstimate est{payload_bytes};
    const double source_drain = est.source_j(energy_);
    const double relay_drain = est.intermediate_j(energy_);
    const double delay = tx_time(energy_, Radio::bluetooth, payload_bytes);
    GoalFunction g;
    g.aggregation = Aggregation::product_times_sum;
    g.alpha = params_.alpha;
    g.hop = [this, &bank, source_drain, relay_drain, delay](NodeId u, NodeId v,
                                                            std::size_t idx) -> std::optional<HopMeasurement> {
      if (!graph_.has_vertex(u) || !graph_.has_vertex(v) || graph_.is_access_point(u)) return std::nullopt;
      if (!graph_.adjacent(u, v)) return std::nullopt;
      const Phone& p = bank[static_cast<std::size_t>(u)];
      if (!p.active) return std::nullopt;
      const auto pa = path_availability(p.battery.remaining_j(), idx == 0 ? source_drain : relay_drain);
      if (!pa) return std::nullopt;
      return HopMeasurement{*pa, delay};
    };
    return g;
  }

  // Quote for an explicit path under the current batteries; nullopt if any vertex is excluded.
  std::optional<PathQuote> quote(const PhoneBank& bank, std::span<const NodeId> path,
                                 std::uint64_t payload_bytes) const {
    if (path.size() < 2 || !graph_.is_access_point(path.back())) return std::nullopt;
    const GoalFunction g = goal(bank, payload_bytes);
    auto hops = g.measure(path);
    if (!hops) return std::nullopt;
    PathQuote q;
    q.path.assign(path.begin(), path.end());
    q.alpha = params_.alpha;
    for (const auto& h : *hops) {
      q.availabilities.push_back(h.factor);
      q.delays_s.push_back(h.cost);
    }
    q.goal_value = path_goal(q.availabilities, q.delays_s, q.alpha);
    return q;
  }

  // Emits `packets` smart packets from `phone` toward the access points, pays their Bluetooth
  // cost hop by hop, feeds delivered ones back as ACKs, then quotes the cached route.
  std::optional<PathQuote> discover_relay_route(PhoneBank& bank, NodeId phone, int packets, double now,
                                                Rng& rng) {
    const std::size_t owner = static_cast<std::size_t>(phone);
    if (!bank[owner].active) return std::nullopt;
    // The route service sees the whole phone graph and does not launch packets into a
    // component with no uplink.
    if (!graph_.reaches_access_point(phone)) return std::nullopt;
    const GoalFunction g = goal(bank, params_.photo_bytes);
    const DestinationFn is_ap = [this](NodeId v) { return graph_.is_access_point(v); };
    // A packet can only ever meet the vertices of its own component.
    const std::size_t limit = engine_.default_hop_limit(graph_.component_size(phone));
    for (int k = 0; k < packets && bank[owner].active; ++k) {
      SmartPacket sp = engine_.send_smart_packet(graph_, g, phone, is_ap, limit, rng);
      if (sp.outcome == PacketOutcome::blocked) break;
      bool intact = true;
      for (std::size_t h = 0; h + 1 < sp.visited.size() && intact; ++h) {
        intact = charge_hop(bank, sp.visited[h], sp.visited[h + 1], params_.smart_packet_bytes, nullptr);
      }
      if (intact && sp.delivered()) engine_.process_ack(g, sp, now);
    }
    if (!bank[owner].active) return std::nullopt;
    auto path = engine_.best_route(graph_, g, phone);
    if (!path) return std::nullopt;
    auto q = quote(bank, *path, params_.photo_bytes);
    if (!q) engine_.invalidate(phone);
    return q;
  }

  // Sends `payload_bytes` from `phone` to the cloud.
  DeliveryReport upload(PhoneBank& bank, NodeId phone, std::uint64_t payload_bytes, CommsMode mode,
                        int packets, double now, Rng& rng) {
    DeliveryReport report;
    const std::size_t owner = static_cast<std::size_t>(phone);
    if (!bank[owner].active) return report;
    if (mode == CommsMode::ahcpn) {
      auto q = discover_relay_route(bank, phone, packets, now, rng);
      if (q) q = quote(bank, q->path, payload_bytes);
      // The cellular uplink competes as a one-hop path under the same goal.
      if (q && params_.cellular_competes) {
        const auto pa = path_availability(bank[owner].battery.remaining_j(),
                                          tx_energy(energy_, Radio::threeg, Direction::upload, payload_bytes));
        if (pa && params_.alpha * *pa * tx_time(energy_, Radio::threeg, payload_bytes) <= q->goal_value)
          q.reset();
      }
      if (q) {
        report.relayed = true;
        report.path = q->path;
        report.success = true;
        for (std::size_t h = 0; h + 1 < q->path.size() && report.success; ++h)
          report.success = charge_hop(bank, q->path[h], q->path[h + 1], payload_bytes, &report);
        for (double d : q->delays_s) report.latency_s += d;
        return report;
      }
      if (!params_.fallback_to_3g || !bank[owner].active) return report;
      report.fell_back = true;
    }
    const double j = tx_energy(energy_, Radio::threeg, Direction::upload, payload_bytes);
    report.debits.emplace_back(phone, j);
    report.success = bank.charge(owner, j);
    report.latency_s = tx_time(energy_, Radio::threeg, payload_bytes);
    return report;
  }

  // Reply from the cloud to `phone`, over the reverse of the uplink's relay path when there was one.
  DeliveryReport download(PhoneBank& bank, NodeId phone, std::uint64_t payload_bytes,
                          const DeliveryReport& uplink) {
    DeliveryReport report;
    const std::size_t owner = static_cast<std::size_t>(phone);
    if (!bank[owner].active) return report;
    if (uplink.relayed && uplink.success) {
      report.relayed = true;
      report.path.assign(uplink.path.rbegin(), uplink.path.rend());
      report.success = true;
      for (std::size_t h = 0; h + 1 < report.path.size() && report.success; ++h)
        report.success = charge_hop(bank, report.path[h], report.path[h + 1], payload_bytes, &report);
      report.latency_s = static_cast<double>(report.path.size() - 1) *
                         tx_time(energy_, Radio::bluetooth, payload_bytes);
      return report;
    }
    const double j = tx_energy(energy_, Radio::threeg, Direction::download, payload_bytes);
    report.debits.emplace_back(phone, j);
    report.success = bank.charge(owner, j);
    report.latency_s = tx_time(energy_, Radio::threeg, payload_bytes);
    return report;
  }

 private:
  // One Bluetooth hop: the sending phone pays upload, the receiving phone pays download;
  // access points pay nothing. False if either phone drained.
  bool charge_hop(PhoneBank& bank, NodeId from, NodeId to, std::uint64_t bytes, DeliveryReport* report) {
    for (auto [v, dir] : {std::pair{from, Direction::upload}, std::pair{to, Direction::download}}) {
      if (graph_.is_access_point(v)) continue;
      const double j = tx_energy(energy_, Radio::bluetooth, dir, bytes);
      if (report) report->debits.emplace_back(v, j);
      if (!bank.charge(static_cast<std::size_t>(v), j)) return false;
    }
    return true;
  }

  CommsParams params_;
  EnergyModel energy_;
  CpnEngine engine_;
  PhoneGraph graph_;
};

}  // namespace evacnav
