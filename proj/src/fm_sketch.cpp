// SPDX-License-Identifier: Apache-2.0
#include "gossipagg/fm_sketch.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "gossipagg/rng.hpp"

namespace gossipagg {

namespace {

// Domain-separation constant for the sketch hash. The low 32 bits of
// mix64(token ^ kSketchSalt) feed rho, the high 32 bits feed the bin index.
constexpr std::uint64_t kSketchSalt = 0x5bd1e995c6b34f2dULL;

std::uint64_t sketch_hash(Identifier id) { return mix64(id.token ^ kSketchSalt); }

}  // namespace

void SketchParams::validate() const {
  if (bins < 1) throw std::invalid_argument("bins: must be >= 1");
  if (bit_width < 1 || bit_width > 32)
    throw std::invalid_argument("bit_width: must be in [1, 32]");
  if (!(phi > 0.0 && phi < 1.0))
    throw std::invalid_argument("phi: must be in (0, 1)");
}

Identifier host_identifier(std::uint64_t host_id) {
  return Identifier{host_id << 32};
}

std::vector<Identifier> identifiers_for_value(std::uint64_t host_id,
                                              std::uint64_t v) {
  std::vector<Identifier> ids;
  ids.reserve(v);
  for (std::uint64_t i = 0; i < v; ++i) ids.push_back(Identifier{(host_id << 32) | i});
  return ids;
}

int rho(Identifier id, const SketchParams& params) {
  const int L = params.bit_width;
  const std::uint64_t mask = (L >= 64) ? ~0ULL : ((1ULL << L) - 1);
  const std::uint64_t low = sketch_hash(id) & mask;
  return low == 0 ? L : std::countr_zero(low);
}

int bin_of(Identifier id, const SketchParams& params) {
  const std::uint64_t high = sketch_hash(id) >> 32;
  return static_cast<int>((high * static_cast<std::uint64_t>(params.bins)) >> 32);
}

BitBinArray::BitBinArray(int bins, int bit_width)
    : bins_(bins), bit_width_(bit_width), rows_(static_cast<size_t>(bins), 0) {}

void BitBinArray::merge(const BitBinArray& other) {
  if (!same_shape(other))
    throw std::invalid_argument("merge_or: sketch shape mismatch");
  for (size_t i = 0; i < rows_.size(); ++i) rows_[i] |= other.rows_[i];
}

void insert(BitBinArray& sketch, Identifier id, const SketchParams& params) {
  if (sketch.bins() != params.bins || sketch.bit_width() != params.bit_width)
    throw std::invalid_argument("insert: sketch shape does not match params");
  sketch.set_bit(bin_of(id, params), rho(id, params));
}

BitBinArray merge_or(const BitBinArray& a, const BitBinArray& b) {
  BitBinArray out = a;
  out.merge(b);
  return out;
}

int run_length(std::uint64_t row_bits) { return std::countr_one(row_bits); }

double estimate_count(const BitBinArray& sketch, const SketchParams& params) {
  double sum_r = 0.0;
  for (int b = 0; b < sketch.bins(); ++b) sum_r += run_length(sketch.row(b));
  const double avg_r = sum_r / sketch.bins();
  const double c = params.calibration == Calibration::MultiplyPhi
                       ? params.phi
                       : 1.0 / params.phi;
  return sketch.bins() * c * std::exp2(avg_r);
}

}  // namespace gossipagg
