// SPDX-License-Identifier: Apache-2.0
//
// Flajolet-Martin counting-sketch primitives: the rho map, bin assignment,
// bit-OR merge, the run-length function R, and the calibrated cardinality
// estimator. These are the building blocks for both the static sketch-count
// gossip and the counter-matrix reset variant.
#ifndef GOSSIPAGG_FM_SKETCH_HPP
#define GOSSIPAGG_FM_SKETCH_HPP

#include <cstdint>
#include <vector>

namespace gossipagg {

/// Orientation of the phi correction in the cardinality estimator.
///
/// The two published forms of the estimator disagree: the gossip formulation
/// multiplies by phi, while R(A) ~ log2(phi * n) implies dividing by it.
/// DividePhi is the unbiased orientation (confirmed by the brute-force
/// insertion oracle in the test suite) and is the default; MultiplyPhi is
/// kept so the literal published formula stays reproducible.
enum class Calibration { DividePhi, MultiplyPhi };

struct SketchParams {
  int bins = 64;       ///< m, number of stochastic-averaging bins
  int bit_width = 32;  ///< L; rho ranges over [0, L]
  double phi = 0.77351;
  Calibration calibration = Calibration::DividePhi;

  /// Throws std::invalid_argument naming the offending field.
  /// bit_width is capped at 32 so the bin index and rho come from disjoint
  /// halves of one 64-bit hash.
  void validate() const;
};

/// Opaque sketch identifier. Distinct tokens hash independently; a host's
/// identifiers are its id combined with an item index (see
/// identifiers_for_value), so they are distinct by construction.
struct Identifier {
  std::uint64_t token = 0;
  friend bool operator==(Identifier, Identifier) = default;
};

/// The single identifier a host inserts when counting hosts.
Identifier host_identifier(std::uint64_t host_id);

/// The v identifiers a host inserts to register the value v (multi-insertion
/// summation). v = 0 yields an empty list. Deterministic and distinct.
std::vector<Identifier> identifiers_for_value(std::uint64_t host_id,
                                              std::uint64_t v);

/// Geometric bit index: position of the first nonzero bit of the hashed
/// identifier, or L when the low L hash bits are all zero.
/// P[rho = k] = 2^-(k+1).
int rho(Identifier id, const SketchParams& params);

/// Uniform bin assignment in [0, m). Taken from the hash bits disjoint from
/// the ones rho consumes, so the two are independent.
int bin_of(Identifier id, const SketchParams& params);

/// m rows of (L+1) bits. Row k-th bit set means some inserted identifier in
/// that bin had rho = k. Value type; merging is bitwise OR.
class BitBinArray {
 public:
  BitBinArray(int bins, int bit_width);
  explicit BitBinArray(const SketchParams& params)
      : BitBinArray(params.bins, params.bit_width) {}

  int bins() const { return bins_; }
  int bit_width() const { return bit_width_; }

  std::uint64_t row(int bin) const { return rows_[static_cast<size_t>(bin)]; }
  bool bit(int bin, int k) const { return (row(bin) >> k) & 1u; }
  void set_bit(int bin, int k) { rows_[static_cast<size_t>(bin)] |= 1ULL << k; }

  bool same_shape(const BitBinArray& other) const {
    return bins_ == other.bins_ && bit_width_ == other.bit_width_;
  }
  friend bool operator==(const BitBinArray&, const BitBinArray&) = default;

  /// In-place OR of another array of identical shape.
  void merge(const BitBinArray& other);

 private:
  int bins_;
  int bit_width_;
  std::vector<std::uint64_t> rows_;
};

/// Sets bit (bin_of(id), rho(id)). Never clears a bit, so duplicate inserts
/// are no-ops. Throws on shape mismatch with params.
void insert(BitBinArray& sketch, Identifier id, const SketchParams& params);

/// Elementwise OR. Commutative, associative, idempotent; the all-zero sketch
/// is the identity. Throws on shape mismatch.
BitBinArray merge_or(const BitBinArray& a, const BitBinArray& b);

/// R: length of the run of contiguous ones starting at bit 0.
/// Approximately log2(phi * n) for a row holding n identifiers.
int run_length(std::uint64_t row_bits);

/// Calibrated cardinality estimate: m * c * 2^avg(R over bins), with
/// c = 1/phi or phi per the calibration flag. Meaningless below n ~ m
/// (the raw floor is about m * c for an empty sketch); gossip counting
/// always has at least one identifier in scope.
double estimate_count(const BitBinArray& sketch, const SketchParams& params);

}  // namespace gossipagg

#endif
