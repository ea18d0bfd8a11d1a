// SPDX-License-Identifier: Apache-2.0
#include "gossipagg/sim_env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gossipagg {

std::string protocol_name(Protocol p) {
  switch (p) {
    case Protocol::PushSum: return "push-sum";
    case Protocol::PushSumRevert: return "push-sum-revert";
    case Protocol::SketchCount: return "sketch-count";
    case Protocol::CountSketchReset: return "count-sketch-reset";
    case Protocol::InvertAverage: return "invert-average";
  }
  return "?";
}

int GridEnv::cells() const {
  int n = 1;
  for (int d : dims) n *= d;
  return n;
}

int GridEnv::diameter() const {
  int d = 0;
  for (int s : dims) d += s - 1;
  return d;
}

int walk_length(int diameter, Rng& rng) {
  double total = 0.0;
  for (int d = 1; d <= diameter; ++d) total += 1.0 / (static_cast<double>(d) * d);
  double x = rng.real01() * total;
  for (int d = 1; d <= diameter; ++d) {
    x -= 1.0 / (static_cast<double>(d) * d);
    if (x <= 0.0) return d;
  }
  return diameter;
}

HostId walk_target(const GridEnv& grid, HostId host, Rng& rng) {
  const int ndim = static_cast<int>(grid.dims.size());
  std::vector<int> coord(grid.dims.size());
  {
    std::uint64_t rem = host;
    for (int i = ndim - 1; i >= 0; --i) {
      coord[static_cast<size_t>(i)] = static_cast<int>(rem % grid.dims[static_cast<size_t>(i)]);
      rem /= grid.dims[static_cast<size_t>(i)];
    }
  }
  const int steps = walk_length(grid.diameter(), rng);
  for (int s = 0; s < steps; ++s) {
    // enumerate the legal unit moves from the current cell
    int moves = 0;
    for (int i = 0; i < ndim; ++i) {
      if (coord[static_cast<size_t>(i)] > 0) ++moves;
      if (coord[static_cast<size_t>(i)] + 1 < grid.dims[static_cast<size_t>(i)]) ++moves;
    }
    std::uint64_t pick = rng.below(static_cast<std::uint64_t>(moves));
    for (int i = 0; i < ndim; ++i) {
      if (coord[static_cast<size_t>(i)] > 0 && pick-- == 0) {
        --coord[static_cast<size_t>(i)];
        break;
      }
      if (coord[static_cast<size_t>(i)] + 1 < grid.dims[static_cast<size_t>(i)] && pick-- == 0) {
        ++coord[static_cast<size_t>(i)];
        break;
      }
    }
  }
  std::uint64_t id = 0;
  for (int i = 0; i < ndim; ++i)
    id = id * static_cast<std::uint64_t>(grid.dims[static_cast<size_t>(i)]) +
         static_cast<std::uint64_t>(coord[static_cast<size_t>(i)]);
  return id;
}

World::World(WorldParams params, std::uint64_t seed)
    : params_(std::move(params)), seed_(seed) {
  std::vector<HostId> ids;
  if (const auto* u = std::get_if<UniformEnv>(&params_.env)) {
    ids.resize(static_cast<size_t>(u->hosts));
    std::iota(ids.begin(), ids.end(), 0);
  } else if (const auto* g = std::get_if<GridEnv>(&params_.env)) {
    ids.resize(static_cast<size_t>(g->cells()));
    std::iota(ids.begin(), ids.end(), 0);
  } else {
    ids = trace_hosts(std::get<TraceEnv>(params_.env).contacts);
  }
  slots_.reserve(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) add_host(ids[i], draw_value(ids[i], i));
  rebuild_live();
}

double World::gossip_period() const {
  if (const auto* t = std::get_if<TraceEnv>(&params_.env)) return t->gossip_period;
  return 30.0;
}

double World::draw_value(HostId id, size_t position) const {
  switch (params_.values.kind) {
    case ValueDist::Kind::Constant:
      return params_.values.value;
    case ValueDist::Kind::File:
      if (position >= params_.values.file_values.size())
        throw std::runtime_error("value file: not enough values for host set");
      return params_.values.file_values[position];
    case ValueDist::Kind::Uniform:
    default:
      return substream(seed_, id, 0, Stream::InitValue)
          .real(params_.values.lo, params_.values.hi);
  }
}

void World::add_host(HostId id, double v0) {
  Slot s;
  s.id = id;
  s.v0 = v0;
  const Protocol p = params_.protocol;
  if (p == Protocol::PushSum || p == Protocol::PushSumRevert ||
      p == Protocol::InvertAverage)
    s.avg.emplace(v0, params_.revert);
  if (p == Protocol::CountSketchReset || p == Protocol::InvertAverage) {
    auto ids = identifiers_for_value(id, static_cast<std::uint64_t>(
                                             params_.counting.ids_per_host));
    s.cnt.emplace(ids, params_.counting.sketch);
  }
  if (p == Protocol::SketchCount) {
    auto ids = identifiers_for_value(id, static_cast<std::uint64_t>(
                                             params_.counting.ids_per_host));
    s.sketch.emplace(ids, params_.counting.sketch);
  }
  auto [it, inserted] = index_.emplace(id, slots_.size());
  if (inserted) {
    slots_.push_back(std::move(s));
  } else {
    slots_[it->second] = std::move(s);  // rejoining id reuses its slot
  }
}

void World::rebuild_live() {
  live_.clear();
  for (const Slot& s : slots_)
    if (s.alive) live_.push_back(s.id);
  std::sort(live_.begin(), live_.end());
}

World::Slot& World::slot(HostId id) { return slots_[index_.at(id)]; }
const World::Slot& World::slot(HostId id) const { return slots_[index_.at(id)]; }

bool World::is_live(HostId id) const {
  auto it = index_.find(id);
  return it != index_.end() && slots_[it->second].alive;
}

double World::initial_value(HostId id) const { return slot(id).v0; }

std::optional<double> World::average_estimate(HostId id) const {
  const Slot& s = slot(id);
  return s.avg ? s.avg->estimate() : std::nullopt;
}

std::optional<double> World::count_estimate(HostId id) const {
  const Slot& s = slot(id);
  if (s.cnt) return reset_estimate(*s.cnt, params_.counting);
  if (s.sketch) return s.sketch->estimate(params_.counting);
  return std::nullopt;
}

std::optional<double> World::sum_estimate(HostId id) const {
  auto avg = average_estimate(id);
  auto cnt = count_estimate(id);
  if (!avg || !cnt || !(*cnt > 0.0)) return std::nullopt;
  return invert_average_sum(*avg, *cnt);
}

std::optional<double> World::estimate(HostId id) const {
  switch (params_.protocol) {
    case Protocol::PushSum:
    case Protocol::PushSumRevert: return average_estimate(id);
    case Protocol::SketchCount:
    case Protocol::CountSketchReset: return count_estimate(id);
    case Protocol::InvertAverage: return sum_estimate(id);
  }
  return std::nullopt;
}

Mass World::total_mass() const {
  Mass total{0.0, 0.0};
  for (HostId id : live_) {
    const Slot& s = slot(id);
    if (s.avg) total += s.avg->current();
  }
  return total;
}

const CountingHostState* World::counting_state(HostId id) const {
  const Slot& s = slot(id);
  return s.cnt ? &*s.cnt : nullptr;
}

const AveragingHostState* World::averaging_state(HostId id) const {
  const Slot& s = slot(id);
  return s.avg ? &*s.avg : nullptr;
}

GroupView World::current_groups() const {
  if (const auto* t = std::get_if<TraceEnv>(&params_.env))
    return groups_at(t->contacts, sim_time(), t->group_window, live_);
  GroupView view;
  if (!live_.empty()) view.groups.push_back(live_);
  return view;
}

std::vector<HostId> World::adjacent(HostId id) const {
  const auto* adj = adjacency_of(id);
  return adj ? *adj : std::vector<HostId>{};
}

std::vector<HostId> World::iteration_order() const {
  std::vector<HostId> order = live_;
  if (reverse_iteration_) std::reverse(order.begin(), order.end());
  return order;
}

void World::refresh_trace_adjacency() {
  trace_adj_.clear();
  trace_adj_round_ = round_;
  const auto* env = std::get_if<TraceEnv>(&params_.env);
  const auto* grid = std::get_if<GridEnv>(&params_.env);
  if (env) {
    const double t = sim_time();
    for (const ContactInterval& c : env->contacts) {
      if (c.t_start <= t && t < c.t_end && is_live(c.a) && is_live(c.b)) {
        trace_adj_[c.a].push_back(c.b);
        trace_adj_[c.b].push_back(c.a);
      }
    }
    for (auto& [id, peers] : trace_adj_) {
      std::sort(peers.begin(), peers.end());
      peers.erase(std::unique(peers.begin(), peers.end()), peers.end());
    }
  } else if (grid && !grid->walk) {
    // static neighbor lists, filtered to live cells
    for (HostId id : live_) {
      std::vector<HostId> peers;
      std::uint64_t rem = id;
      const int ndim = static_cast<int>(grid->dims.size());
      std::vector<int> coord(grid->dims.size());
      for (int i = ndim - 1; i >= 0; --i) {
        coord[static_cast<size_t>(i)] = static_cast<int>(rem % grid->dims[static_cast<size_t>(i)]);
        rem /= grid->dims[static_cast<size_t>(i)];
      }
      std::uint64_t stride = 1;
      for (int i = ndim - 1; i >= 0; --i) {
        if (coord[static_cast<size_t>(i)] > 0 && is_live(id - stride))
          peers.push_back(id - stride);
        if (coord[static_cast<size_t>(i)] + 1 < grid->dims[static_cast<size_t>(i)] &&
            is_live(id + stride))
          peers.push_back(id + stride);
        stride *= static_cast<std::uint64_t>(grid->dims[static_cast<size_t>(i)]);
      }
      std::sort(peers.begin(), peers.end());
      trace_adj_[id] = std::move(peers);
    }
  }
}

const std::vector<HostId>* World::adjacency_of(HostId id) const {
  if (trace_adj_round_ != round_) return nullptr;
  auto it = trace_adj_.find(id);
  return it == trace_adj_.end() ? nullptr : &it->second;
}

std::optional<HostId> World::draw_peer(HostId id, Rng& rng,
                                       const std::vector<HostId>* adjacency) const {
  if (std::holds_alternative<UniformEnv>(params_.env)) {
    if (live_.size() < 2) return std::nullopt;
    const size_t pos = static_cast<size_t>(
        std::lower_bound(live_.begin(), live_.end(), id) - live_.begin());
    size_t j = static_cast<size_t>(rng.below(live_.size() - 1));
    if (j >= pos) ++j;
    return live_[j];
  }
  if (const auto* grid = std::get_if<GridEnv>(&params_.env)) {
    if (grid->walk) {
      if (grid->cells() < 2) return std::nullopt;
      return walk_target(*grid, id, rng);
    }
    if (!adjacency || adjacency->empty()) return std::nullopt;
    return (*adjacency)[rng.below(adjacency->size())];
  }
  if (!adjacency || adjacency->empty()) return std::nullopt;
  return (*adjacency)[rng.below(adjacency->size())];
}

std::optional<HostId> select_peer(const World& world, HostId host, Rng& rng) {
  // same draw the engine makes when picking a gossip peer
  struct Access : World {};  // not constructible; documents intent only
  (void)sizeof(Access);
  return world.peer_for_testing(host, rng);
}

void World::step_round() {
  int ordinal = 0;
  for (const ChurnEvent& ev : params_.churn) {
    if (ev.round == round_) apply_churn(ev, ordinal);
    ++ordinal;
  }
  refresh_trace_adjacency();

  const Protocol p = params_.protocol;
  if (p == Protocol::PushSum || p == Protocol::PushSumRevert ||
      p == Protocol::InvertAverage)
    averaging_round();
  if (p == Protocol::CountSketchReset || p == Protocol::InvertAverage)
    reset_counting_round();
  if (p == Protocol::SketchCount) static_counting_round();

  ++round_;
}

void World::averaging_round() {
  const RevertParams& rp = params_.revert;
  struct Delivery {
    HostId sender;
    int idx;
    Mass m;
  };
  std::vector<std::vector<Delivery>> inbox(slots_.size());
  std::vector<char> emitted(slots_.size(), 0);

  auto deliver = [&](HostId dest, Delivery d) {
    auto it = index_.find(dest);
    if (it == index_.end() || !slots_[it->second].alive) return;  // dropped
    inbox[it->second].push_back(d);
  };

  if (rp.mode == GossipMode::PushPull) {
    // Draws first: responder shares depend on how many initiators chose a
    // host, which must be known before any mass is split.
    std::unordered_map<HostId, HostId> peer_of;
    std::unordered_map<HostId, std::vector<HostId>> initiators;
    std::unordered_map<HostId, int> indegree;
    for (HostId h : live_) {
      Rng rng = substream(seed_, h, static_cast<std::uint64_t>(round_), Stream::AvgPeer);
      if (auto peer = draw_peer(h, rng, adjacency_of(h))) {
        peer_of.emplace(h, *peer);
        initiators[*peer].push_back(h);  // live_ is ascending, so these are too
        ++indegree[*peer];
      }
    }
    for (HostId h : iteration_order()) {
      auto it = peer_of.find(h);
      if (it == peer_of.end()) continue;  // isolated hosts skip the round
      const int k = indegree.count(h) ? indegree.at(h) : 0;
      Slot& s = slot(h);
      std::vector<Mass> shares = split_parcels(s.avg->take_outgoing(), k + 2);
      emitted[index_.at(h)] = 1;
      deliver(h, {h, 0, shares[0]});
      deliver(it->second, {h, 1, shares[1]});
      if (k > 0) {
        const auto& who = initiators.at(h);
        for (int i = 0; i < k; ++i) deliver(who[static_cast<size_t>(i)], {h, 2 + i, shares[static_cast<size_t>(2 + i)]});
      }
    }
  } else {
    for (HostId h : iteration_order()) {
      Rng rng = substream(seed_, h, static_cast<std::uint64_t>(round_), Stream::AvgParcel);
      // probe for reachability before committing to the exchange
      const auto* adj = adjacency_of(h);
      bool reachable;
      if (std::holds_alternative<UniformEnv>(params_.env)) {
        reachable = live_.size() > 1;
      } else if (const auto* grid = std::get_if<GridEnv>(&params_.env); grid && grid->walk) {
        reachable = grid->cells() > 1;
      } else {
        reachable = adj && !adj->empty();
      }
      if (!reachable) continue;
      Slot& s = slot(h);
      std::vector<Mass> parcels = split_parcels(s.avg->take_outgoing(), rp.parcels);
      emitted[index_.at(h)] = 1;
      for (int i = 0; i < rp.parcels; ++i) {
        if (rp.self_parcel && i == 0) {
          deliver(h, {h, 0, parcels[0]});
          continue;
        }
        if (auto dest = draw_peer(h, rng, adj))
          deliver(*dest, {h, i, parcels[static_cast<size_t>(i)]});
      }
    }
  }

  // simultaneous application; inbox order canonicalized so end-of-round
  // state is independent of emission order
  for (HostId h : live_) {
    const size_t idx = index_.at(h);
    if (!emitted[idx] && inbox[idx].empty()) continue;
    auto& box = inbox[idx];
    std::sort(box.begin(), box.end(), [](const Delivery& a, const Delivery& b) {
      return std::tie(a.sender, a.idx) < std::tie(b.sender, b.idx);
    });
    std::vector<Mass> received;
    received.reserve(box.size());
    for (const Delivery& d : box) received.push_back(d.m);
    slots_[idx].avg->apply_received(received);
  }
}

void World::reset_counting_round() {
  // Step 1 everywhere first: messages carry the incremented matrices.
  for (HostId h : live_) slot(h).cnt->age();

  std::unordered_map<HostId, HostId> peer_of;
  std::unordered_map<HostId, std::vector<HostId>> initiators;
  for (HostId h : live_) {
    Rng rng = substream(seed_, h, static_cast<std::uint64_t>(round_), Stream::CountPeer);
    if (auto peer = draw_peer(h, rng, adjacency_of(h))) {
      peer_of.emplace(h, *peer);
      initiators[*peer].push_back(h);
    }
  }

  // Double buffer: every merge reads the senders' round-start (aged)
  // matrices, never partially merged ones.
  std::vector<CounterMatrix> next;
  next.reserve(live_.size());
  const std::vector<HostId> order = iteration_order();
  for (HostId h : order) {
    CounterMatrix acc = slot(h).cnt->counters();
    if (auto it = initiators.find(h); it != initiators.end())
      for (HostId sender : it->second) acc.merge_min(slot(sender).cnt->counters());
    if (params_.counting.pull_response) {
      if (auto it = peer_of.find(h); it != peer_of.end() && is_live(it->second))
        acc.merge_min(slot(it->second).cnt->counters());
    }
    next.push_back(std::move(acc));
  }
  for (size_t i = 0; i < order.size(); ++i)
    slot(order[i]).cnt->replace_counters(std::move(next[i]));
}

void World::static_counting_round() {
  std::unordered_map<HostId, HostId> peer_of;
  std::unordered_map<HostId, std::vector<HostId>> initiators;
  for (HostId h : live_) {
    Rng rng = substream(seed_, h, static_cast<std::uint64_t>(round_), Stream::CountPeer);
    if (auto peer = draw_peer(h, rng, adjacency_of(h))) {
      peer_of.emplace(h, *peer);
      initiators[*peer].push_back(h);
    }
  }
  std::vector<BitBinArray> next;
  next.reserve(live_.size());
  const std::vector<HostId> order = iteration_order();
  for (HostId h : order) {
    BitBinArray acc = slot(h).sketch->bits();
    if (auto it = initiators.find(h); it != initiators.end())
      for (HostId sender : it->second) acc.merge(slot(sender).sketch->bits());
    if (params_.counting.pull_response) {
      if (auto it = peer_of.find(h); it != peer_of.end() && is_live(it->second))
        acc.merge(slot(it->second).sketch->bits());
    }
    next.push_back(std::move(acc));
  }
  for (size_t i = 0; i < order.size(); ++i)
    slot(order[i]).sketch->replace_bits(std::move(next[i]));
}

void World::apply_churn(const ChurnEvent& event, int event_ordinal) {
  Rng rng = substream(seed_, static_cast<std::uint64_t>(event_ordinal),
                      static_cast<std::uint64_t>(event.round), Stream::Churn);
  if (event.action == ChurnEvent::Action::Add) {
    if (event.selector.kind != ChurnSelector::Kind::ExplicitIds)
      throw std::runtime_error("churn: add events need explicit host ids");
    for (HostId id : event.selector.ids) {
      if (is_live(id))
        throw std::runtime_error("churn: host " + std::to_string(id) + " already live");
      add_host(id, draw_value(id, static_cast<size_t>(-1)));
    }
    rebuild_live();
    return;
  }

  std::vector<HostId> victims;
  switch (event.selector.kind) {
    case ChurnSelector::Kind::ExplicitIds: {
      for (HostId id : event.selector.ids) {
        if (!is_live(id))
          throw std::runtime_error("churn: host " + std::to_string(id) + " not live");
        victims.push_back(id);
      }
      break;
    }
    case ChurnSelector::Kind::RandomFraction: {
      const size_t k = static_cast<size_t>(
          std::ceil(event.selector.fraction * static_cast<double>(live_.size())));
      std::vector<HostId> pool = live_;
      for (size_t i = 0; i < k && i < pool.size(); ++i) {
        const size_t j = i + static_cast<size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
        victims.push_back(pool[i]);
      }
      break;
    }
    case ChurnSelector::Kind::TopValueFraction: {
      const size_t k = static_cast<size_t>(
          std::ceil(event.selector.fraction * static_cast<double>(live_.size())));
      std::vector<HostId> pool = live_;
      std::sort(pool.begin(), pool.end(), [this](HostId a, HostId b) {
        const double va = slot(a).v0, vb = slot(b).v0;
        if (va != vb) return va > vb;
        return a < b;  // ties broken by host id
      });
      victims.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(std::min(k, pool.size())));
      break;
    }
  }
  if (victims.empty()) throw std::runtime_error("churn: selector matches no hosts");
  for (HostId id : victims) {
    Slot& s = slot(id);
    s.alive = false;
    s.avg.reset();  // silent: mass and counters vanish with the host
    s.cnt.reset();
    s.sketch.reset();
  }
  rebuild_live();
}

}  // namespace gossipagg
