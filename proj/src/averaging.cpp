// SPDX-License-Identifier: Apache-2.0
#include "gossipagg/averaging.hpp"

#include <stdexcept>

namespace gossipagg {

void RevertParams::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("lambda: must be in [0, 1]");
  if (parcels < 1) throw std::invalid_argument("parcels: must be >= 1");
  if (window_len < 1) throw std::invalid_argument("window: must be >= 1");
  if (indegree_scaled && mode != GossipMode::Push)
    throw std::invalid_argument(
        "indegree_scaled: only defined for push mode (each message carries a "
        "1/N share of the sender's mass)");
}

Mass revert(const Mass& mass, double v0, double lambda) {
  return {lambda + (1.0 - lambda) * mass.w,
          lambda * v0 + (1.0 - lambda) * mass.v};
}

std::vector<Mass> split_parcels(const Mass& mass, int n) {
  std::vector<Mass> parcels(static_cast<size_t>(n), {mass.w / n, mass.v / n});
  Mass sent{0.0, 0.0};
  for (int i = 0; i + 1 < n; ++i) sent += parcels[static_cast<size_t>(i)];
  parcels.back() = mass - sent;  // residue, keeps the sum exact
  return parcels;
}

std::pair<Mass, Mass> pushpull_exchange(const Mass& a, const Mass& b) {
  const Mass mid{a.w + 0.5 * (b.w - a.w), a.v + 0.5 * (b.v - a.v)};
  return {mid, (a + b) - mid};  // second leg takes the rounding residue
}

Mass AveragingHostState::take_outgoing() {
  const double lam = params_.lambda;
  Mass out = params_.indegree_scaled
                 ? Mass{(1.0 - lam) * current_.w, (1.0 - lam) * current_.v}
                 : revert(current_, v0_, lam);
  current_ = {0.0, 0.0};
  return out;
}

void AveragingHostState::apply_received(std::span<const Mass> received) {
  if (received.empty()) {
    current_ = {0.0, 0.0};
    return;
  }
  Mass sum{0.0, 0.0};
  for (const Mass& m : received) sum += m;
  if (params_.indegree_scaled) {
    const double lam = params_.lambda;
    const double n = static_cast<double>(received.size());
    // lambda/N of the initial mass per message; balances the (1-lambda)
    // scaling of outgoing mass exactly across the system.
    sum += Mass{n * lam / params_.parcels, n * lam / params_.parcels * v0_};
  }
  current_ = sum;
  window_.push_back(sum);
  if (window_.size() > static_cast<size_t>(params_.window_len))
    window_.erase(window_.begin());
}

std::optional<double> AveragingHostState::estimate() const {
  Mass total{0.0, 0.0};
  if (!window_.empty()) {
    for (const Mass& m : window_) total += m;
  } else {
    total = current_;
  }
  if (total.w <= 0.0) return std::nullopt;
  return total.v / total.w;
}

std::vector<AddressedMass> outgoing(AveragingHostState& state,
                                    std::uint64_t self_id,
                                    std::span<const std::uint64_t> peers,
                                    Rng& rng) {
  if (peers.empty()) return {};
  const RevertParams& p = state.params();
  std::vector<Mass> parcels = split_parcels(state.take_outgoing(), p.parcels);
  std::vector<AddressedMass> out;
  out.reserve(parcels.size());
  for (size_t i = 0; i < parcels.size(); ++i) {
    const bool to_self = p.self_parcel && i == 0;
    const std::uint64_t dest = to_self ? self_id : peers[rng.below(peers.size())];
    out.push_back({dest, parcels[i]});
  }
  return out;
}

}  // namespace gossipagg
