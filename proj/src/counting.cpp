// SPDX-License-Identifier: Apache-2.0
#include "gossipagg/counting.hpp"

#include <algorithm>
#include <stdexcept>

namespace gossipagg {

void CutoffFn::validate() const {
  if (b < 0.0) throw std::invalid_argument("cutoff_b: must be >= 0");
  if (a < 0.0) throw std::invalid_argument("cutoff_a: must be >= 0");
}

void CountingParams::validate() const {
  sketch.validate();
  cutoff.validate();
  if (ids_per_host < 1)
    throw std::invalid_argument("ids_per_host: must be >= 1");
}

CounterMatrix::CounterMatrix(int bins, int width)
    : bins_(bins),
      width_(width),
      cells_(static_cast<size_t>(bins) * width, kInfinity) {}

void CounterMatrix::merge_min(const CounterMatrix& other) {
  if (!same_shape(other))
    throw std::invalid_argument("min_merge: counter matrix shape mismatch");
  for (size_t i = 0; i < cells_.size(); ++i)
    cells_[i] = std::min(cells_[i], other.cells_[i]);
}

void CounterMatrix::increment_all_finite() {
  for (Counter& c : cells_)
    if (c < kMaxFinite) ++c;
}

CounterMatrix min_merge(const CounterMatrix& mine, const CounterMatrix& incoming) {
  CounterMatrix out = mine;
  out.merge_min(incoming);
  return out;
}

CountingHostState::CountingHostState(std::span<const Identifier> ids,
                                     const SketchParams& params)
    : counters_(params.bins, params.bit_width + 1) {
  owned_.reserve(ids.size());
  for (Identifier id : ids) owned_.emplace_back(bin_of(id, params), rho(id, params));
  std::sort(owned_.begin(), owned_.end());
  owned_.erase(std::unique(owned_.begin(), owned_.end()), owned_.end());
  for (auto [bin, k] : owned_) counters_.set(bin, k, 0);
}

void CountingHostState::age() {
  counters_.increment_all_finite();
  for (auto [bin, k] : owned_) counters_.set(bin, k, 0);
}

void CountingHostState::merge_incoming(const CounterMatrix& incoming) {
  counters_.merge_min(incoming);
}

CountingHostState init_counting_state(std::span<const Identifier> ids,
                                      const SketchParams& params) {
  return CountingHostState(ids, params);
}

BitBinArray derive_bits(const CounterMatrix& counters, const CutoffFn& f) {
  BitBinArray bits(counters.bins(), counters.width() - 1);
  for (int bin = 0; bin < counters.bins(); ++bin) {
    for (int k = 0; k < counters.width(); ++k) {
      const CounterMatrix::Counter c = counters.at(bin, k);
      if (c != CounterMatrix::kInfinity && static_cast<double>(c) <= f(k))
        bits.set_bit(bin, k);
    }
  }
  return bits;
}

double reset_estimate(const CountingHostState& state,
                      const CountingParams& params) {
  const double raw =
      estimate_count(derive_bits(state.counters(), params.cutoff), params.sketch);
  return raw / params.ids_per_host;
}

StaticCountState::StaticCountState(std::span<const Identifier> ids,
                                   const SketchParams& params)
    : bits_(params) {
  for (Identifier id : ids) insert(bits_, id, params);
}

double StaticCountState::estimate(const CountingParams& params) const {
  return estimate_count(bits_, params.sketch) / params.ids_per_host;
}

double invert_average_sum(double avg_estimate, double count_estimate) {
  if (!(count_estimate > 0.0))
    throw std::invalid_argument("invert_average_sum: count estimate must be positive");
  return avg_estimate * count_estimate;
}

}  // namespace gossipagg
