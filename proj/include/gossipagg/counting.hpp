// SPDX-License-Identifier: Apache-2.0
//
// Gossip counting state machines over the FM sketch primitives: the static
// bit-OR protocol (monotone, cannot heal after departures) and the reset
// variant that replaces bits with min-merged age counters so bits no longer
// sourced by any live host decay out of the system.
#ifndef GOSSIPAGG_COUNTING_HPP
#define GOSSIPAGG_COUNTING_HPP

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gossipagg/fm_sketch.hpp"

namespace gossipagg {

/// Age cutoff f(k) = a + b*k separating still-sourced bits from stale ones.
/// The defaults are the uniform-environment fit; `calibrate` re-derives them
/// from a converged run's counter quantiles.
struct CutoffFn {
  double a = 7.0;
  double b = 0.25;

  double operator()(int k) const { return a + b * k; }
  void validate() const;  ///< nondecreasing in k, throws naming the field
};

/// m x (L+1) matrix of age counters with an infinity sentinel. Aging
/// saturates one below the sentinel so infinity is never reached by
/// incrementing. Value type; merging is elementwise min.
class CounterMatrix {
 public:
  using Counter = std::uint16_t;
  static constexpr Counter kInfinity = 0xFFFF;
  static constexpr Counter kMaxFinite = 0xFFFE;

  CounterMatrix(int bins, int width);  ///< all cells start at infinity

  int bins() const { return bins_; }
  int width() const { return width_; }  ///< L + 1

  Counter at(int bin, int k) const {
    return cells_[static_cast<size_t>(bin) * width_ + k];
  }
  void set(int bin, int k, Counter c) {
    cells_[static_cast<size_t>(bin) * width_ + k] = c;
  }

  std::span<const Counter> cells() const { return cells_; }
  bool same_shape(const CounterMatrix& o) const {
    return bins_ == o.bins_ && width_ == o.width_;
  }
  friend bool operator==(const CounterMatrix&, const CounterMatrix&) = default;

  /// Elementwise min with another matrix of identical shape.
  void merge_min(const CounterMatrix& other);

  /// Increments every finite cell, saturating at kMaxFinite.
  void increment_all_finite();

 private:
  int bins_;
  int width_;
  std::vector<Counter> cells_;
};

/// Elementwise minimum; commutative, associative, idempotent, with the
/// all-infinity matrix as identity. Throws on shape mismatch.
CounterMatrix min_merge(const CounterMatrix& mine, const CounterMatrix& incoming);

struct CountingParams {
  SketchParams sketch;
  CutoffFn cutoff;
  int ids_per_host = 1;      ///< identifiers each host registers (uniform)
  bool pull_response = true; ///< contacted peer replies with its own array

  void validate() const;
};

/// Count-Sketch-Reset host state: the counter matrix plus the set of
/// (bin, bit) indices this host sources, which it pins at age zero.
class CountingHostState {
 public:
  CountingHostState(std::span<const Identifier> ids, const SketchParams& params);

  std::span<const std::pair<int, int>> owned() const { return owned_; }
  const CounterMatrix& counters() const { return counters_; }

  /// Round step 1: every non-owned finite counter ages by one (saturating);
  /// owned indices stay zero; infinity stays infinity.
  void age();

  /// Round step 2: min-merge a received (already aged) matrix.
  void merge_incoming(const CounterMatrix& incoming);

 private:
  std::vector<std::pair<int, int>> owned_;  // deduplicated, sorted
  CounterMatrix counters_;
};

/// Initializer matching the protocol description: all counters infinity
/// except the host's owned indices, which start at zero.
CountingHostState init_counting_state(std::span<const Identifier> ids,
                                      const SketchParams& params);

/// A counter survives as a live bit while its age is within f(k);
/// comparison is against the real-valued cutoff, no rounding.
BitBinArray derive_bits(const CounterMatrix& counters, const CutoffFn& f);

/// The reset protocol's estimate: the FM estimate of the derived bit array,
/// divided by the per-host identifier count when the multi-identifier trick
/// is active.
double reset_estimate(const CountingHostState& state, const CountingParams& params);

/// Static sketch-count host: plain bit bins merged by OR. Estimates are
/// monotone nondecreasing, which is exactly why it cannot recover from
/// departures.
class StaticCountState {
 public:
  StaticCountState(std::span<const Identifier> ids, const SketchParams& params);

  const BitBinArray& bits() const { return bits_; }
  void merge_incoming(const BitBinArray& incoming) { bits_.merge(incoming); }
  double estimate(const CountingParams& params) const;

 private:
  BitBinArray bits_;
};

/// Network-wide sum as (gossip average) x (gossip count).
/// Throws std::invalid_argument for a nonpositive count estimate.
double invert_average_sum(double avg_estimate, double count_estimate);

}  // namespace gossipagg

#endif
