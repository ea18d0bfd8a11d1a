// SPDX-License-Identifier: Apache-2.0
//
// Deterministic round-based gossip engine. Three environments (uniform,
// spatial grid with 1/d^2 walks, contact trace), silent failure injection,
// and two-phase rounds: all outgoing messages are computed from round-start
// state, then delivered simultaneously, so end-of-round state does not
// depend on host processing order.
#ifndef GOSSIPAGG_SIM_ENV_HPP
#define GOSSIPAGG_SIM_ENV_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "gossipagg/averaging.hpp"
#include "gossipagg/counting.hpp"
#include "gossipagg/trace.hpp"

namespace gossipagg {

using HostId = std::uint64_t;

enum class Protocol {
  PushSum,
  PushSumRevert,
  SketchCount,
  CountSketchReset,
  InvertAverage,
};

std::string protocol_name(Protocol p);

struct UniformEnv {
  int hosts = 100;
};

/// Hosts on a D-dimensional grid, ids in row-major order. With walk enabled,
/// a peer is found by drawing a distance d from the normalized 1/d^2
/// distribution (truncated at the grid diameter) and taking a d-step uniform
/// random walk. Without it, a uniformly chosen grid neighbor.
struct GridEnv {
  std::vector<int> dims;
  bool walk = true;

  int cells() const;
  int diameter() const;  ///< max Manhattan distance
};

struct TraceEnv {
  std::vector<ContactInterval> contacts;
  double gossip_period = 30.0;
  double group_window = 600.0;
};

using Environment = std::variant<UniformEnv, GridEnv, TraceEnv>;

/// Distance drawn from P[d] proportional to 1/d^2, d in [1, diameter].
int walk_length(int diameter, Rng& rng);

/// Endpoint of a walk_length-step uniform random walk from host.
HostId walk_target(const GridEnv& grid, HostId host, Rng& rng);

struct ChurnSelector {
  enum class Kind { RandomFraction, TopValueFraction, ExplicitIds };
  Kind kind = Kind::RandomFraction;
  double fraction = 0.5;        ///< for the fraction kinds, in (0, 1]
  std::vector<HostId> ids;      ///< for ExplicitIds
};

struct ChurnEvent {
  int round = 0;
  enum class Action { Remove, Add };
  Action action = Action::Remove;
  ChurnSelector selector;
};

struct ValueDist {
  enum class Kind { Uniform, Constant, File };
  Kind kind = Kind::Uniform;
  double lo = 0.0;
  double hi = 100.0;
  double value = 0.0;
  std::vector<double> file_values;  ///< positional, by ascending host id
};

struct WorldParams {
  Protocol protocol = Protocol::PushSum;
  Environment env = UniformEnv{};
  ValueDist values;
  RevertParams revert = RevertParams::classic_push_sum();
  CountingParams counting;
  std::vector<ChurnEvent> churn;
};

/// Full simulation state. Identical (params, seed) gives bit-identical
/// trajectories; removed hosts neither send nor receive from their removal
/// round on and take their mass and counters with them.
class World {
 public:
  World(WorldParams params, std::uint64_t seed);

  /// Advances one round: fires this round's churn events, computes every
  /// live host's outgoing messages from round-start state (pull responses
  /// included), applies all deliveries simultaneously, increments the clock.
  void step_round();

  int round() const { return round_; }
  double sim_time() const { return round_ * gossip_period(); }
  double gossip_period() const;
  std::uint64_t seed() const { return seed_; }
  Protocol protocol() const { return params_.protocol; }
  const WorldParams& params() const { return params_; }

  const std::vector<HostId>& live() const { return live_; }
  bool is_live(HostId id) const;
  double initial_value(HostId id) const;

  std::optional<double> average_estimate(HostId id) const;
  std::optional<double> count_estimate(HostId id) const;
  std::optional<double> sum_estimate(HostId id) const;

  /// This protocol's headline estimate for a host (average, count, or sum).
  std::optional<double> estimate(HostId id) const;

  /// Total mass currently held by live averaging hosts (no mass is in
  /// flight between rounds). Conservation checks compare this across rounds.
  Mass total_mass() const;

  const CountingHostState* counting_state(HostId id) const;
  const AveragingHostState* averaging_state(HostId id) const;

  /// Proximity groups for trace runs at the current simulated time;
  /// a single all-live group otherwise.
  GroupView current_groups() const;

  /// Host ids adjacent to `id` this round (trace/grid); empty in uniform.
  std::vector<HostId> adjacent(HostId id) const;

  /// Testing hook: iterate hosts in descending id order inside a round.
  /// End-of-round state must not depend on this.
  void set_reverse_iteration(bool on) { reverse_iteration_ = on; }

 private:
  struct Slot {
    HostId id = 0;
    double v0 = 0.0;
    bool alive = true;
    std::optional<AveragingHostState> avg;
    std::optional<CountingHostState> cnt;
    std::optional<StaticCountState> sketch;
  };

  void add_host(HostId id, double v0);
  double draw_value(HostId id, size_t position) const;
  void rebuild_live();
  void apply_churn(const ChurnEvent& event, int event_ordinal);
  std::vector<HostId> iteration_order() const;

  std::optional<HostId> draw_peer(HostId id, Rng& rng,
                                  const std::vector<HostId>* adjacency) const;
  void refresh_trace_adjacency();
  const std::vector<HostId>* adjacency_of(HostId id) const;

  void averaging_round();
  void reset_counting_round();
  void static_counting_round();

  Slot& slot(HostId id);
  const Slot& slot(HostId id) const;

  WorldParams params_;
  std::uint64_t seed_;
  int round_ = 0;
  bool reverse_iteration_ = false;

  std::vector<Slot> slots_;
  std::unordered_map<HostId, size_t> index_;
  std::vector<HostId> live_;  // ascending

  // trace adjacency for the current round, rebuilt at round start
  std::unordered_map<HostId, std::vector<HostId>> trace_adj_;
  int trace_adj_round_ = -1;
};

/// One peer draw as the environment defines it: uniform over live hosts
/// (excluding self), uniform over currently adjacent live hosts, or a
/// 1/d^2 random-walk endpoint. nullopt when the host is isolated.
std::optional<HostId> select_peer(const World& world, HostId host, Rng& rng);

}  // namespace gossipagg

#endif
