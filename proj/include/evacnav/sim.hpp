#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "building.hpp"
#include "comms.hpp"
#include "cpn.hpp"
#include "energy.hpp"
#include "errors.hpp"
#include "hazard.hpp"
#include "random.hpp"
#include "spf.hpp"

namespace evacnav {

enum class Algorithm { dijkstra, cpnst, cpn_spf };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::dijkstra: return "dijkstra";
    case Algorithm::cpnst: return "cpnst";
    case Algorithm::cpn_spf: return "cpn-spf";
  }
  return "dijkstra";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  if (s == "dijkstra") return Algorithm::dijkstra;
  if (s == "cpnst") return Algorithm::cpnst;
  if (s == "cpn-spf") return Algorithm::cpn_spf;
  return std::nullopt;
}

inline std::optional<CommsMode> parse_comms(std::string_view s) {
  if (s == "direct3g") return CommsMode::direct3g;
  if (s == "ahcpn") return CommsMode::ahcpn;
  return std::nullopt;
}

struct SimConfig {
  std::size_t evacuee_count = 30;
  Algorithm algorithm = Algorithm::dijkstra;
  CommsMode comms_mode = CommsMode::direct3g;
  std::uint64_t seed = 1;
  double step_s = 0.5;
  int max_steps = 2000;
  double p_spf = 0.5;            // chance a cpn-spf decision follows the social force
  double walk_speed_mps = 1.4;
  double congestion_gamma = 0.2;  // speed divisor and CPNST cost factor 1 + gamma * (n - 1)
  std::optional<NodeId> ignition_node;  // nullopt: one random non-exit node

  HazardParams hazard;
  SpfParams spf;
  CpnParams cpn;
  EnergyModel energy;
  BatteryParams battery;
  CommsParams comms;

  void validate() const {
    if (!(step_s > 0.0)) throw ConfigError("sim.step_s must be positive");
    if (max_steps < 0) throw ConfigError("sim.max_steps must be non-negative");
    if (!(p_spf >= 0.0 && p_spf <= 1.0)) throw ConfigError("sim.p_spf must lie in [0, 1]");
    if (!(walk_speed_mps > 0.0)) throw ConfigError("sim.walk_speed_mps must be positive");
    if (!(congestion_gamma >= 0.0)) throw ConfigError("cpn.congestion_gamma must be non-negative");
    hazard.validate();
    spf.validate();
    cpn.validate();
    energy.validate();
    battery.validate();
    comms.validate();
  }
};

enum class LifeState { moving, evacuated, dead };

struct Evacuee {
  int id = 0;
  NodeId node = 0;                 // current node, or the node the current edge was entered from
  std::optional<NodeId> heading;   // set while walking an edge
  double progress_m = 0.0;
  double speed_mps = 1.4;
  LifeState life = LifeState::moving;
  std::vector<NodeId> route;
  std::optional<int> follow_target;
  bool pending_localization = true;  // arrived at a node, upload not yet done
  double exit_time_s = 0.0;

  bool at_node() const { return !heading.has_value(); }
};

enum class EventKind { evacuated, died, phone_drained };

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::evacuated: return "evacuated";
    case EventKind::died: return "died";
    case EventKind::phone_drained: return "phone_drained";
  }
  return "";
}

struct Event {
  int step = 0;
  int evacuee = 0;
  EventKind kind = EventKind::evacuated;
  NodeId node = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

struct RunMetrics {
  std::size_t evacuee_count = 0;
  std::size_t survivors = 0;
  double survivor_pct = 0.0;  // fraction in [0, 1]
  std::size_t casualties = 0;
  std::size_t trapped_at_cap = 0;
  std::size_t drained_phones = 0;
  double mean_evacuation_time_s = 0.0;
  double total_energy_j = 0.0;
  Nanojoules initial_energy_nj = 0;
  Nanojoules final_energy_nj = 0;
  Nanojoules spent_energy_nj = 0;
  int steps = 0;
  std::size_t uploads = 0;
  std::size_t relayed_uploads = 0;
  std::vector<Event> events;

  friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

// One seeded evacuation. Strictly single threaded; every random draw comes from streams derived
// from config.seed, consumed in ascending evacuee order within each phase.
class Simulation {
 public:
  Simulation(const BuildingGraph& g, SimConfig cfg)
      : Simulation(g, std::move(cfg), Scatter{}) {}
  // the graph is held by reference
  Simulation(BuildingGraph&&, SimConfig) = delete;

  // Explicit start: evacuee i stands on start_nodes[i] with batteries[i]. No fire is lit.
  static Simulation with_population(const BuildingGraph& g, SimConfig cfg, std::vector<NodeId> start_nodes,
                                    std::vector<Battery> batteries) {
    if (start_nodes.size() != batteries.size())
      throw PreconditionError("one battery per evacuee is required");
    cfg.evacuee_count = start_nodes.size();
    Simulation s(g, std::move(cfg), Explicit{});
    std::vector<Phone> phones;
    for (std::size_t i = 0; i < start_nodes.size(); ++i) {
      g.index_of(start_nodes[i]);
      Evacuee e;
      e.id = static_cast<int>(i);
      e.node = start_nodes[i];
      e.speed_mps = s.cfg_.walk_speed_mps;
      s.evacuees_.push_back(e);
      phones.push_back(Phone{batteries[i], true});
    }
    s.bank_ = PhoneBank(std::move(phones));
    return s;
  }
  static Simulation with_population(BuildingGraph&&, SimConfig, std::vector<NodeId>, std::vector<Battery>) = delete;

  const SimConfig& config() const { return cfg_; }
  const BuildingGraph& building() const { return *graph_; }
  const std::vector<Evacuee>& evacuees() const { return evacuees_; }
  const PhoneBank& phones() const { return bank_; }
  PhoneBank& phones() { return bank_; }
  const HazardField& hazard() const { return hazard_; }
  HazardField& hazard() { return hazard_; }
  CpnEngine& navigation() { return nav_; }
  RelayNetwork& relay() { return relay_; }
  double time_s() const { return static_cast<double>(step_) * cfg_.step_s; }
  int step_index() const { return step_; }

  bool finished() const {
    if (step_ >= cfg_.max_steps) return true;
    return std::none_of(evacuees_.begin(), evacuees_.end(),
                        [](const Evacuee& e) { return e.life == LifeState::moving; });
  }

  RunMetrics run() {
    while (!finished()) step();
    return metrics();
  }

  // One time step in fixed phase order: fire, casualties, communications, decisions, movement,
  // exits, bookkeeping.
  void step() {
    const double t = time_s();
    spread_fire(t);
    check_casualties(t);
    communicate(t);
    decide_all(t);
    move_all();
    check_exits(t + cfg_.step_s);
    ++step_;
  }

  RunMetrics metrics() const {
    RunMetrics m;
    m.evacuee_count = evacuees_.size();
    double exit_time_sum = 0.0;
    for (const auto& e : evacuees_) {
      switch (e.life) {
        case LifeState::evacuated:
          ++m.survivors;
          exit_time_sum += e.exit_time_s;
          break;
        case LifeState::dead: ++m.casualties; break;
        case LifeState::moving: ++m.trapped_at_cap; break;
      }
    }
    m.survivor_pct = m.evacuee_count == 0 ? 0.0
                                          : static_cast<double>(m.survivors) / static_cast<double>(m.evacuee_count);
    m.mean_evacuation_time_s = m.survivors == 0 ? 0.0 : exit_time_sum / static_cast<double>(m.survivors);
    m.drained_phones = bank_.drained_count();
    m.initial_energy_nj = bank_.initial_nj();
    m.final_energy_nj = bank_.remaining_nj();
    m.spent_energy_nj = bank_.spent_nj();
    m.total_energy_j = to_joules(m.spent_energy_nj);
    m.steps = step_;
    m.uploads = uploads_;
    m.relayed_uploads = relayed_uploads_;
    m.events = events_;
    return m;
  }

  // Position of an evacuee, interpolated along its edge when walking.
  Point3 position_of(const Evacuee& e) const {
    if (e.at_node()) return graph_->position(e.node);
    const double len = *graph_->edge_length(e.node, *e.heading);
    return lerp(graph_->position(e.node), graph_->position(*e.heading), std::clamp(e.progress_m / len, 0.0, 1.0));
  }

  int floor_of(const Evacuee& e) const {
    if (e.at_node()) return graph_->node(e.node).floor;
    const double len = *graph_->edge_length(e.node, *e.heading);
    return graph_->node(e.progress_m < 0.5 * len ? e.node : *e.heading).floor;
  }

  // Next node for an evacuee standing at a node with a working phone; nullopt means Stay.
  std::optional<NodeId> decide_next(int id) {
    Evacuee& e = evacuees_.at(static_cast<std::size_t>(id));
    if (e.life != LifeState::moving || !e.at_node()) return std::nullopt;
    if (!bank_[static_cast<std::size_t>(id)].active) return depleted_behavior(id);
    e.follow_target.reset();
    const double t = time_s();

    if (cfg_.algorithm == Algorithm::dijkstra) {
      auto route = dijkstra_route(*graph_, e.node, exit_open(t), [&](NodeId u, NodeId v) -> std::optional<double> {
        if (hazard_.known_burning(u, t) || hazard_.known_burning(v, t)) return std::nullopt;
        return graph_->edge_length(u, v);
      });
      e.route = route.value_or(std::vector<NodeId>{});
      if (e.route.size() < 2) return std::nullopt;
      return e.route[1];
    }

    std::optional<NodeId> cpn_hop = cpn_next(e, t);
    if (cfg_.algorithm == Algorithm::cpn_spf && cfg_.p_spf > 0.0) {
      const bool use_spf = cfg_.p_spf >= 1.0 || behaviour_rng_.uniform() < cfg_.p_spf;
      if (use_spf) {
        const ForceVector f = social_force(e);
        auto spf_hop = spf_next_node(*graph_, e.node, f, [&](NodeId v) { return !hazard_.known_burning(v, t); });
        if (spf_hop) return spf_hop;
      }
    }
    return cpn_hop;
  }

  // Decision for an evacuee whose phone is drained: follow the nearest visible evacuee that still
  // has a phone, otherwise wander to a random neighbour that is not on fire.
  std::optional<NodeId> depleted_behavior(int id) {
    Evacuee& e = evacuees_.at(static_cast<std::size_t>(id));
    if (e.life != LifeState::moving || !e.at_node()) return std::nullopt;
    const Point3 here = position_of(e);
    std::optional<int> target;
    double best = 0.0;
    for (const auto& o : evacuees_) {
      if (o.id == e.id || o.life != LifeState::moving || !bank_[static_cast<std::size_t>(o.id)].active) continue;
      const NodeId ref = o.at_node() ? o.node : *o.heading;
      if (!line_of_sight(*graph_, e.node, ref, hazard_)) continue;
      const double d = distance(here, position_of(o));
      if (!target || d < best) {
        target = o.id;
        best = d;
      }
    }
    if (target) {
      e.follow_target = target;
      const Evacuee& o = evacuees_[static_cast<std::size_t>(*target)];
      const NodeId ref = o.at_node() ? o.node : *o.heading;
      if (ref != e.node) return ref;
      if (!o.at_node() && o.node == e.node && !hazard_.is_burning(*o.heading)) return o.heading;
      return std::nullopt;  // leader is here and has not moved on yet
    }
    e.follow_target.reset();
    std::vector<NodeId> options;
    for (NodeId nb : graph_->neighbors(e.node))
      if (!hazard_.is_burning(nb)) options.push_back(nb);
    if (options.empty()) return std::nullopt;
    return options[behaviour_rng_.below(options.size())];
  }

 private:
  struct Scatter {};
  struct Explicit {};

  Simulation(const BuildingGraph& g, SimConfig cfg, Explicit)
      : graph_(&g),
        cfg_(validated(std::move(cfg))),
        hazard_(g, cfg_.hazard),
        nav_(cfg_.cpn),
        relay_(cfg_.comms, cfg_.energy, cfg_.cpn),
        behaviour_rng_(Rng::derive(cfg_.seed, 4)),
        nav_rng_(Rng::derive(cfg_.seed, 5)),
        comms_rng_(Rng::derive(cfg_.seed, 6)),
        hazard_rng_(Rng::derive(cfg_.seed, 3)) {
    for (NodeId ap : g.access_points()) ap_positions_.push_back(g.position(ap));
  }

  Simulation(const BuildingGraph& g, SimConfig cfg, Scatter) : Simulation(g, std::move(cfg), Explicit{}) {
    std::vector<NodeId> interior;
    for (const auto& n : g.nodes())
      if (n.kind != NodeKind::exit) interior.push_back(n.id);
    if (interior.empty()) throw ValidationError("building has no non-exit node to start from");

    Rng population = Rng::derive(cfg_.seed, 1);
    Rng batteries = Rng::derive(cfg_.seed, 2);
    std::vector<Phone> phones;
    for (std::size_t i = 0; i < cfg_.evacuee_count; ++i) {
      Evacuee e;
      e.id = static_cast<int>(i);
      e.node = interior[population.below(interior.size())];
      e.speed_mps = cfg_.walk_speed_mps;
      evacuees_.push_back(e);
      phones.push_back(Phone{sample_initial_battery(batteries, cfg_.battery), true});
    }
    bank_ = PhoneBank(std::move(phones));

    NodeId origin;
    if (cfg_.ignition_node) {
      origin = *cfg_.ignition_node;
      g.index_of(origin);
    } else {
      // The fire starts somewhere nobody is standing when such a node exists.
      std::vector<NodeId> empty;
      for (NodeId n : interior)
        if (std::none_of(evacuees_.begin(), evacuees_.end(), [n](const Evacuee& e) { return e.node == n; }))
          empty.push_back(n);
      const auto& pool = empty.empty() ? interior : empty;
      origin = pool[hazard_rng_.below(pool.size())];
    }
    hazard_.ignite(origin, 0.0);
  }

  static SimConfig validated(SimConfig c) {
    c.validate();
    return c;
  }

  DestinationFn exit_open(double t) const {
    return [this, t](NodeId v) { return graph_->is_exit(v) && !hazard_.known_burning(v, t); };
  }

  void spread_fire(double t) {
    if (step_ == 0) return;
    const double tick = cfg_.hazard.spread_tick_s;
    const double prev = t - cfg_.step_s;
    if (std::floor(t / tick + 1e-9) > std::floor(prev / tick + 1e-9)) hazard_.spread(t, hazard_rng_);
  }

  void check_casualties(double t) {
    for (auto& e : evacuees_) {
      if (e.life != LifeState::moving) continue;
      bool dead = hazard_.burning_at(e.node, t);
      if (!dead && e.heading) dead = hazard_.burning_at(*e.heading, t);
      if (dead) {
        e.life = LifeState::dead;
        events_.push_back({step_, e.id, EventKind::died, e.node});
      }
    }
  }

  bool on_tick(double t, double period) const {
    if (step_ == 0) return true;
    const double prev = t - cfg_.step_s;
    return std::floor(t / period + 1e-9) > std::floor(prev / period + 1e-9);
  }

  void communicate(double t) {
    const std::size_t drained_before = bank_.drained_count();
    std::vector<bool> was_active(bank_.size());
    for (std::size_t i = 0; i < bank_.size(); ++i) was_active[i] = bank_[i].active;

    if (cfg_.comms_mode == CommsMode::ahcpn) rebuild_phone_graph(t);
    const int packets = cfg_.cpn.packets_per_recompute;
    for (auto& e : evacuees_) {
      if (e.life != LifeState::moving || !e.pending_localization || !e.at_node()) continue;
      e.pending_localization = false;
      if (graph_->node(e.node).kind != NodeKind::landmark) continue;
      if (!bank_[static_cast<std::size_t>(e.id)].active) continue;
      ++uploads_;
      const DeliveryReport up =
          relay_.upload(bank_, e.id, cfg_.comms.photo_bytes, cfg_.comms_mode, packets, t, comms_rng_);
      if (up.relayed) ++relayed_uploads_;
      if (up.success) relay_.download(bank_, e.id, cfg_.comms.instruction_bytes, up);
    }
    if (cfg_.comms_mode == CommsMode::ahcpn && on_tick(t, cfg_.comms.discovery_tick_s)) {
      for (const auto& e : evacuees_) {
        if (e.life != LifeState::moving || !bank_[static_cast<std::size_t>(e.id)].active) continue;
        relay_.discover_relay_route(bank_, e.id, packets, t, comms_rng_);
      }
    }

    if (bank_.drained_count() != drained_before)
      for (std::size_t i = 0; i < bank_.size(); ++i)
        if (was_active[i] && !bank_[i].active)
          events_.push_back({step_, static_cast<int>(i), EventKind::phone_drained, evacuees_[i].node});
  }

  void rebuild_phone_graph(double t) {
    std::vector<Point3> pos(evacuees_.size());
    std::vector<bool> present(evacuees_.size());
    for (std::size_t i = 0; i < evacuees_.size(); ++i) {
      pos[i] = position_of(evacuees_[i]);
      present[i] = evacuees_[i].life == LifeState::moving;
    }
    relay_.rebuild(pos, present, bank_, ap_positions_, t);
  }

  void count_edge_occupancy() {
    occupancy_.assign(graph_->edges().size(), 0);
    for (const auto& e : evacuees_)
      if (e.life == LifeState::moving && e.heading) ++occupancy_[*graph_->edge_id(e.node, *e.heading)];
  }

  GoalFunction navigation_goal(double t) const {
    GoalFunction g;
    g.aggregation = Aggregation::additive;
    g.hop = [this, t](NodeId u, NodeId v, std::size_t) -> std::optional<HopMeasurement> {
      if (hazard_.known_burning(u, t) || hazard_.known_burning(v, t)) return std::nullopt;
      const auto id = graph_->edge_id(u, v);
      if (!id) return std::nullopt;
      const double crowd = std::max(0, occupancy_[*id] - 1);
      const double seconds = graph_->edges()[*id].length_m / cfg_.walk_speed_mps * (1.0 + cfg_.congestion_gamma * crowd);
      return HopMeasurement{1.0, seconds};
    };
    return g;
  }

  std::optional<NodeId> cpn_next(Evacuee& e, double t) {
    const GoalFunction goal = navigation_goal(t);
    auto route = nav_.best_route(*graph_, goal, e.node);
    if (route && route->size() >= 2) {
      e.route = *route;
      return e.route[1];
    }
    e.route.clear();
    return nav_.greedy_next(*graph_, goal, e.node, nav_rng_);
  }

  ForceVector social_force(const Evacuee& e) const {
    const int floor = floor_of(e);
    const Point3 me = position_of(e);
    std::vector<PlanarPoint> others;
    for (const auto& o : evacuees_) {
      if (o.id == e.id || o.life != LifeState::moving || floor_of(o) != floor) continue;
      const Point3 p = position_of(o);
      others.push_back({p.x, p.y});
    }
    return resultant_force({me.x, me.y}, others, cfg_.spf);
  }

  void decide_all(double t) {
    count_edge_occupancy();
    if (cfg_.algorithm != Algorithm::dijkstra && cfg_.cpn.packets_per_recompute > 0) {
      // The route service explores from every node where a connected evacuee needs a decision.
      std::vector<NodeId> sources;
      for (const auto& e : evacuees_)
        if (e.life == LifeState::moving && e.at_node() && bank_[static_cast<std::size_t>(e.id)].active)
          sources.push_back(e.node);
      std::sort(sources.begin(), sources.end());
      sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
      const GoalFunction goal = navigation_goal(t);
      const DestinationFn dest = exit_open(t);
      const std::size_t limit = nav_.default_hop_limit(graph_->node_count());
      for (NodeId s : sources)
        for (int k = 0; k < cfg_.cpn.packets_per_recompute; ++k) {
          SmartPacket sp = nav_.send_smart_packet(*graph_, goal, s, dest, limit, nav_rng_);
          if (sp.outcome == PacketOutcome::blocked) break;
          if (sp.delivered()) nav_.process_ack(goal, sp, t);
        }
    }
    // Connected evacuees first so that followers can see where their leaders are going.
    for (int pass = 0; pass < 2; ++pass)
      for (auto& e : evacuees_) {
        if (e.life != LifeState::moving || !e.at_node()) continue;
        const bool active = bank_[static_cast<std::size_t>(e.id)].active;
        if (active != (pass == 0)) continue;
        const auto next = active ? decide_next(e.id) : depleted_behavior(e.id);
        if (next && graph_->adjacent(e.node, *next)) {
          e.heading = *next;
          e.progress_m = 0.0;
        }
      }
  }

  void move_all() {
    count_edge_occupancy();
    for (auto& e : evacuees_) {
      if (e.life != LifeState::moving || !e.heading) continue;
      const std::size_t id = *graph_->edge_id(e.node, *e.heading);
      const double crowd = std::max(0, occupancy_[id] - 1);
      e.progress_m += e.speed_mps * cfg_.step_s / (1.0 + cfg_.congestion_gamma * crowd);
      if (e.progress_m >= graph_->edges()[id].length_m) {
        e.node = *e.heading;
        e.heading.reset();
        e.progress_m = 0.0;
        e.pending_localization = true;
      }
    }
  }

  void check_exits(double t_end) {
    for (auto& e : evacuees_) {
      if (e.life != LifeState::moving || !e.at_node() || !graph_->is_exit(e.node)) continue;
      if (hazard_.burning_at(e.node, t_end)) continue;
      e.life = LifeState::evacuated;
      e.exit_time_s = t_end;
      events_.push_back({step_, e.id, EventKind::evacuated, e.node});
    }
  }

  const BuildingGraph* graph_;
  SimConfig cfg_;
  HazardField hazard_;
  CpnEngine nav_;
  RelayNetwork relay_;
  Rng behaviour_rng_;
  Rng nav_rng_;
  Rng comms_rng_;
  Rng hazard_rng_;
  std::vector<Evacuee> evacuees_;
  PhoneBank bank_;
  std::vector<Point3> ap_positions_;
  std::vector<int> occupancy_;
  std::vector<Event> events_;
  std::size_t uploads_ = 0;
  std::size_t relayed_uploads_ = 0;
  int step_ = 0;
};

// Scatter, ignite, and step until everyone is out, dead, or the step cap is hit.
inline RunMetrics run(const SimConfig& cfg, const BuildingGraph& g) {
  Simulation sim(g, cfg);
  return sim.run();
}

}  // namespace evacnav
