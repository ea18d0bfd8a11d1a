// SPDX-License-Identifier: Apache-2.0
//
// Contact-trace support: the interval file format, instantaneous adjacency,
// sliding-window proximity groups, and a synthetic clustered-mobility trace
// generator used in place of real device traces.
#ifndef GOSSIPAGG_TRACE_HPP
#define GOSSIPAGG_TRACE_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace gossipagg {

/// Undirected contact between two hosts over [t_start, t_end) seconds.
struct ContactInterval {
  double t_start = 0.0;
  double t_end = 0.0;
  std::uint64_t a = 0;
  std::uint64_t b = 0;

  friend bool operator==(const ContactInterval&, const ContactInterval&) = default;
};

/// Parses the trace CSV format: header `t_start,t_end,node_a,node_b`,
/// integer seconds, nonnegative integer host ids. Blank lines and lines
/// starting with '#' are ignored. Errors report the 1-based line number.
std::vector<ContactInterval> parse_trace_csv(std::istream& in,
                                             const std::string& name = "trace");
std::vector<ContactInterval> load_trace_csv(const std::string& path);

void write_trace_csv(std::ostream& out, std::span<const ContactInterval> contacts);
void save_trace_csv(const std::string& path, std::span<const ContactInterval> contacts);

/// All host ids mentioned by the trace, sorted ascending.
std::vector<std::uint64_t> trace_hosts(std::span<const ContactInterval> contacts);

/// Hosts adjacent to `host` at instant t (contacts with t_start <= t < t_end).
std::vector<std::uint64_t> adjacent_at(std::span<const ContactInterval> contacts,
                                       std::uint64_t host, double t);

/// Partition of hosts into proximity groups: connected components over the
/// union of all edges that existed within the trailing window (t - window, t].
/// Group ids are the smallest member host id; groups are sorted by id and
/// members sorted within each group.
struct GroupView {
  std::vector<std::vector<std::uint64_t>> groups;

  /// Index into groups for a host, or -1 if the host is not present.
  int group_of(std::uint64_t host) const;
};

GroupView groups_at(std::span<const ContactInterval> contacts, double t,
                    double window, std::span<const std::uint64_t> hosts);

/// Synthetic clustered-mobility trace: hosts shuttle between a fixed set of
/// meeting places, dwell there for a while, and are in contact with every
/// host co-located at the same place. Place popularity is skewed so both
/// singleton periods and large gatherings occur.
struct SynthTraceParams {
  int hosts = 41;
  double duration_s = 3 * 86400.0;
  int places = 8;
  double mean_dwell_s = 2400.0;
  double mean_travel_s = 420.0;

  void validate() const;
};

std::vector<ContactInterval> synth_trace(const SynthTraceParams& params,
                                         std::uint64_t seed);

}  // namespace gossipagg

#endif
