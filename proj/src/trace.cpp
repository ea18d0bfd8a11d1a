// SPDX-License-Identifier: Apache-2.0
#include "gossipagg/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "gossipagg/rng.hpp"

namespace gossipagg {

namespace {

[[noreturn]] void parse_fail(const std::string& name, int line,
                             const std::string& what) {
  throw std::runtime_error(name + ":" + std::to_string(line) + ": " + what);
}

bool parse_u64(const std::string& field, std::uint64_t& out) {
  if (field.empty()) return false;
  std::uint64_t v = 0;
  for (char ch : field) {
    if (ch < '0' || ch > '9') return false;
    v = v * 10 + static_cast<std::uint64_t>(ch - '0');
  }
  out = v;
  return true;
}

}  // namespace

std::vector<ContactInterval> parse_trace_csv(std::istream& in,
                                             const std::string& name) {
  std::vector<ContactInterval> contacts;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line == "t_start,t_end,node_a,node_b") continue;
      // fall through: headerless files are accepted
    }
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 4)
      parse_fail(name, lineno, "expected 4 comma-separated fields, got " +
                                   std::to_string(fields.size()));
    std::uint64_t t0, t1, a, b;
    if (!parse_u64(fields[0], t0)) parse_fail(name, lineno, "bad t_start '" + fields[0] + "'");
    if (!parse_u64(fields[1], t1)) parse_fail(name, lineno, "bad t_end '" + fields[1] + "'");
    if (!parse_u64(fields[2], a)) parse_fail(name, lineno, "bad node_a '" + fields[2] + "'");
    if (!parse_u64(fields[3], b)) parse_fail(name, lineno, "bad node_b '" + fields[3] + "'");
    if (t0 >= t1) parse_fail(name, lineno, "t_start must be < t_end");
    if (a == b) parse_fail(name, lineno, "self-contact");
    contacts.push_back({static_cast<double>(t0), static_cast<double>(t1), a, b});
  }
  return contacts;
}

std::vector<ContactInterval> load_trace_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open trace file: " + path);
  return parse_trace_csv(f, path);
}

void write_trace_csv(std::ostream& out, std::span<const ContactInterval> contacts) {
  out << "t_start,t_end,node_a,node_b\n";
  for (const ContactInterval& c : contacts) {
    out << static_cast<long long>(c.t_start) << ','
        << static_cast<long long>(c.t_end) << ',' << c.a << ',' << c.b << '\n';
  }
}

void save_trace_csv(const std::string& path,
                    std::span<const ContactInterval> contacts) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  write_trace_csv(f, contacts);
}

std::vector<std::uint64_t> trace_hosts(std::span<const ContactInterval> contacts) {
  std::set<std::uint64_t> ids;
  for (const ContactInterval& c : contacts) {
    ids.insert(c.a);
    ids.insert(c.b);
  }
  return {ids.begin(), ids.end()};
}

std::vector<std::uint64_t> adjacent_at(std::span<const ContactInterval> contacts,
                                       std::uint64_t host, double t) {
  std::set<std::uint64_t> peers;
  for (const ContactInterval& c : contacts) {
    if (c.t_start <= t && t < c.t_end) {
      if (c.a == host) peers.insert(c.b);
      if (c.b == host) peers.insert(c.a);
    }
  }
  return {peers.begin(), peers.end()};
}

int GroupView::group_of(std::uint64_t host) const {
  for (size_t g = 0; g < groups.size(); ++g)
    if (std::binary_search(groups[g].begin(), groups[g].end(), host))
      return static_cast<int>(g);
  return -1;
}

namespace {

// Plain union-find over dense indices.
struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[static_cast<size_t>(x)] != x) {
      parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
      x = parent[static_cast<size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<size_t>(std::max(a, b))] = std::min(a, b);
  }
};

}  // namespace

GroupView groups_at(std::span<const ContactInterval> contacts, double t,
                    double window, std::span<const std::uint64_t> hosts) {
  if (!(window > 0.0)) throw std::invalid_argument("group window must be > 0");
  std::map<std::uint64_t, int> index;
  for (std::uint64_t h : hosts) index.emplace(h, static_cast<int>(index.size()));
  UnionFind uf(index.size());
  for (const ContactInterval& c : contacts) {
    // edge is in the trailing window if its lifetime intersects (t-window, t]
    if (c.t_start <= t && c.t_end > t - window) {
      auto ia = index.find(c.a);
      auto ib = index.find(c.b);
      if (ia != index.end() && ib != index.end()) uf.unite(ia->second, ib->second);
    }
  }
  std::map<int, std::vector<std::uint64_t>> by_root;
  for (const auto& [id, idx] : index) by_root[uf.find(idx)].push_back(id);
  GroupView view;
  for (auto& [root, members] : by_root) {
    std::sort(members.begin(), members.end());
    view.groups.push_back(std::move(members));
  }
  // index keys are sorted, so roots (smallest member index) come out in
  // ascending smallest-member order already
  return view;
}

void SynthTraceParams::validate() const {
  if (hosts < 1) throw std::invalid_argument("hosts: must be >= 1");
  if (!(duration_s > 0.0)) throw std::invalid_argument("duration: must be > 0");
  if (places < 1) throw std::invalid_argument("places: must be >= 1");
  if (!(mean_dwell_s > 0.0)) throw std::invalid_argument("mean_dwell: must be > 0");
  if (mean_travel_s < 0.0) throw std::invalid_argument("mean_travel: must be >= 0");
}

namespace {

struct Presence {
  double t0, t1;
  int host;
};

// Place popularity ~ 1/(i+1): place 0 collects large gatherings while the
// tail places keep small groups and singletons in the mix.
int draw_place(Rng& rng, int places, int avoid) {
  double total = 0.0;
  for (int i = 0; i < places; ++i)
    if (i != avoid) total += 1.0 / (i + 1);
  double x = rng.real01() * total;
  for (int i = 0; i < places; ++i) {
    if (i == avoid) continue;
    x -= 1.0 / (i + 1);
    if (x <= 0.0) return i;
  }
  return avoid == places - 1 ? places - 2 : places - 1;
}

double draw_exp(Rng& rng, double mean) {
  return mean <= 0.0 ? 0.0 : -mean * std::log(1.0 - rng.real01());
}

}  // namespace

std::vector<ContactInterval> synth_trace(const SynthTraceParams& params,
                                         std::uint64_t seed) {
  params.validate();
  std::vector<std::vector<Presence>> per_place(static_cast<size_t>(params.places));
  for (int h = 0; h < params.hosts; ++h) {
    Rng rng = substream(seed, static_cast<std::uint64_t>(h), 0, Stream::TraceSynth);
    double t = 0.0;
    int place = params.places == 1 ? 0 : draw_place(rng, params.places, -1);
    while (t < params.duration_s) {
      double dwell = std::max(60.0, draw_exp(rng, params.mean_dwell_s));
      double leave = std::min(t + dwell, params.duration_s);
      per_place[static_cast<size_t>(place)].push_back({t, leave, h});
      t = leave;
      if (t >= params.duration_s) break;
      t = std::min(t + draw_exp(rng, params.mean_travel_s), params.duration_s);
      if (params.places > 1) place = draw_place(rng, params.places, place);
    }
  }

  std::vector<ContactInterval> contacts;
  for (auto& presences : per_place) {
    // coalesce back-to-back stays by the same host (travel time 0)
    std::sort(presences.begin(), presences.end(), [](const Presence& x, const Presence& y) {
      return std::tie(x.host, x.t0) < std::tie(y.host, y.t0);
    });
    std::vector<Presence> merged;
    for (const Presence& p : presences) {
      if (!merged.empty() && merged.back().host == p.host &&
          merged.back().t1 >= p.t0) {
        merged.back().t1 = std::max(merged.back().t1, p.t1);
      } else {
        merged.push_back(p);
      }
    }
    for (size_t i = 0; i < merged.size(); ++i) {
      for (size_t j = i + 1; j < merged.size(); ++j) {
        const Presence& p = merged[i];
        const Presence& q = merged[j];
        if (p.host == q.host) continue;
        const double t0 = std::floor(std::max(p.t0, q.t0));
        const double t1 = std::floor(std::min(p.t1, q.t1));
        if (t1 > t0) {
          contacts.push_back({t0, t1,
                              static_cast<std::uint64_t>(std::min(p.host, q.host)),
                              static_cast<std::uint64_t>(std::max(p.host, q.host))});
        }
      }
    }
  }
  std::sort(contacts.begin(), contacts.end(), [](const ContactInterval& x, const ContactInterval& y) {
    return std::tie(x.t_start, x.a, x.b, x.t_end) < std::tie(y.t_start, y.a, y.b, y.t_end);
  });
  return contacts;
}

}  // namespace gossipagg
