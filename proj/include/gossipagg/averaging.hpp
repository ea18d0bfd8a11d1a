// SPDX-License-Identifier: Apache-2.0
//
// Push-sum style averaging host state machines: the classic protocol, the
// revert extension that decays mass toward each host's initial value, the
// full-transfer variant (N parcels, T-round estimate window), and the
// indegree-scaled reversion option.
#ifndef GOSSIPAGG_AVERAGING_HPP
#define GOSSIPAGG_AVERAGING_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gossipagg/rng.hpp"

namespace gossipagg {

/// The (weight, value) pair a host carries. Its ratio is the host's
/// estimate of the systemwide average.
struct Mass {
  double w = 0.0;
  double v = 0.0;

  Mass& operator+=(const Mass& o) {
    w += o.w;
    v += o.v;
    return *this;
  }
  friend Mass operator+(Mass a, const Mass& b) { return a += b; }
  friend Mass operator-(Mass a, const Mass& b) { return {a.w - b.w, a.v - b.v}; }
  friend bool operator==(const Mass&, const Mass&) = default;
};

enum class GossipMode { Push, PushPull };

struct RevertParams {
  double lambda = 0.0;        ///< reversion constant, [0, 1]
  int parcels = 4;            ///< N, parcels the outgoing mass splits into
  bool self_parcel = false;   ///< route one parcel back to self (classic: on)
  int window_len = 3;         ///< T, estimate window in receiving rounds
  GossipMode mode = GossipMode::Push;
  bool indegree_scaled = false;  ///< lambda/N of initial mass per receipt

  static RevertParams classic_push_sum() {
    return {0.0, 2, true, 1, GossipMode::Push, false};
  }

  void validate() const;  ///< throws std::invalid_argument, names the field
};

/// One reversion step: mass decays toward the host's initial (1, v0) mass
/// by a factor lambda. Systemwide this conserves total mass as long as the
/// host set is unchanged.
Mass revert(const Mass& mass, double v0, double lambda);

/// Splits mass into n parcels of w/n, v/n each, with the last parcel
/// absorbing the floating-point residue so the parcels sum back to the
/// input exactly.
std::vector<Mass> split_parcels(const Mass& mass, int n);

/// Both peers end at the componentwise midpoint; the pair total is
/// conserved exactly.
std::pair<Mass, Mass> pushpull_exchange(const Mass& a, const Mass& b);

class AveragingHostState {
 public:
  AveragingHostState(double v0, const RevertParams& params)
      : params_(params), v0_(v0), current_{1.0, v0} {}

  double initial_value() const { return v0_; }
  const Mass& current() const { return current_; }
  const RevertParams& params() const { return params_; }
  std::span<const Mass> window() const { return window_; }

  /// Removes and returns this round's outgoing mass: the reverted current
  /// mass, or (1-lambda)-scaled when reversion is indegree-scaled (the
  /// lambda term is then re-added per receipt instead). Current becomes
  /// zero pending receipts.
  Mass take_outgoing();

  /// End-of-round receipt: current := sum of received parcels. A nonempty
  /// round's sum is appended to the estimate window (oldest evicted beyond
  /// T); rounds with no received mass leave the window untouched.
  void apply_received(std::span<const Mass> received);

  /// Windowed estimate (sum v / sum w over the window); before any receipt
  /// the current ratio. Hosts with no receivable history report nothing and
  /// are excluded from round statistics.
  std::optional<double> estimate() const;

 private:
  RevertParams params_;
  double v0_;
  Mass current_;
  std::vector<Mass> window_;  // oldest first, size <= window_len
};

struct AddressedMass {
  std::uint64_t dest;
  Mass mass;
};

/// Push-mode emission: splits the outgoing mass into N parcels addressed to
/// independently drawn peers (duplicates allowed), with one parcel reserved
/// for self when self_parcel is set. Zeroes the host's current mass.
/// An empty peer list means the host skips the exchange entirely and its
/// state is left untouched.
std::vector<AddressedMass> outgoing(AveragingHostState& state,
                                    std::uint64_t self_id,
                                    std::span<const std::uint64_t> peers,
                                    Rng& rng);

}  // namespace gossipagg

#endif
