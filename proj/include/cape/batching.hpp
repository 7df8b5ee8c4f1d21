#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cape/rng.hpp"
#include "cape/types.hpp"

namespace cape {

/// Plan for batching variable-duration audio without padding: every sample
/// gets its own hop distance so all samples produce (almost) the same frame
/// count, and keep_masks level out the rounding remainder by dropping frames
/// uniformly at random while preserving temporal order.
struct BatchPlan {
  std::vector<double> durations;  // seconds
  double base_hop = 0.010;        // seconds
  Index target_frames = 0;        // round(mean(durations) / base_hop), ties to even
  std::vector<double> hops;       // durations[i] / target_frames
  std::vector<std::vector<bool>> keep_masks;  // one flag per produced frame

  Index kept_frames() const {
    if (keep_masks.empty()) return 0;
    return static_cast<Index>(std::count(keep_masks.front().begin(), keep_masks.front().end(), true));
  }
};

/// Draw order (frozen): for each sample in batch order, one uniform [0,1)
/// draw per produced frame; the kept frames are those with the largest draws
/// (ties broken toward the earlier frame), emitted in temporal order.
inline BatchPlan plan_padding_free_batch(const std::vector<double>& durations, double base_hop,
                                         RngStream& rng) {
  if (durations.empty()) {
    throw std::invalid_argument("plan_padding_free_batch: empty batch");
  }
  if (!(base_hop > 0.0)) {
    throw std::invalid_argument("plan_padding_free_batch: base hop must be positive");
  }
  for (double d : durations) {
    if (!(d > 0.0)) {
      throw std::invalid_argument("plan_padding_free_batch: durations must be positive");
    }
  }
  BatchPlan plan;
  plan.durations = durations;
  plan.base_hop = base_hop;
  const double mean =
      std::accumulate(durations.begin(), durations.end(), 0.0) / static_cast<double>(durations.size());
  plan.target_frames = static_cast<Index>(std::nearbyint(mean / base_hop));
  if (plan.target_frames < 1) {
    throw std::invalid_argument("plan_padding_free_batch: durations too short for base hop");
  }

  std::vector<Index> counts(durations.size());
  plan.hops.resize(durations.size());
  for (std::size_t i = 0; i < durations.size(); ++i) {
    plan.hops[i] = durations[i] / static_cast<double>(plan.target_frames);
    counts[i] = static_cast<Index>(std::floor(durations[i] / plan.hops[i]));
  }
  const Index min_count = *std::min_element(counts.begin(), counts.end());

  plan.keep_masks.resize(durations.size());
  for (std::size_t i = 0; i < durations.size(); ++i) {
    const Index c = counts[i];
    std::vector<std::pair<double, Index>> draws(static_cast<std::size_t>(c));
    for (Index j = 0; j < c; ++j) draws[static_cast<std::size_t>(j)] = {rng.next_double(), j};
    std::sort(draws.begin(), draws.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<bool> mask(static_cast<std::size_t>(c), false);
    for (Index j = 0; j < min_count; ++j) mask[static_cast<std::size_t>(draws[j].second)] = true;
    plan.keep_masks[i] = std::move(mask);
  }
  return plan;
}

/// Timestamps (seconds) of the kept frames of sample `i`: frame j sits at
/// j * hops[i]. No timestamp is rescaled by the masking.
inline std::vector<double> kept_timestamps(const BatchPlan& plan, std::size_t i) {
  std::vector<double> times;
  const auto& mask = plan.keep_masks.at(i);
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (mask[j]) times.push_back(static_cast<double>(j) * plan.hops[i]);
  }
  return times;
}

/// Duration-perturbed shuffling: multiplying durations by U(low, high) noise
/// before sorting keeps batches length-homogeneous while re-rolling the
/// grouping every epoch.
struct ShuffleSpec {
  double perturbation_low = 0.85;
  double perturbation_high = 1.15;
  Index batch_size = 1;
};

/// Draw order (frozen): one U(low, high) factor per sample in input order.
/// Indices are stable-sorted by perturbed duration and grouped consecutively
/// into batches of `batch_size` (the last batch may be short).
inline std::vector<std::vector<std::size_t>> shuffle_by_perturbed_duration(
    const std::vector<double>& durations, const ShuffleSpec& spec, RngStream& rng) {
  if (durations.empty()) {
    throw std::invalid_argument("shuffle_by_perturbed_duration: empty input");
  }
  if (!(spec.perturbation_low > 0.0) || spec.perturbation_high < spec.perturbation_low) {
    throw std::invalid_argument("shuffle_by_perturbed_duration: bad perturbation range");
  }
  if (spec.batch_size < 1) {
    throw std::invalid_argument("shuffle_by_perturbed_duration: batch_size must be >= 1");
  }
  std::vector<double> perturbed(durations.size());
  for (std::size_t i = 0; i < durations.size(); ++i) {
    perturbed[i] = durations[i] * rng.uniform(spec.perturbation_low, spec.perturbation_high);
  }
  std::vector<std::size_t> order(durations.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return perturbed[a] < perturbed[b]; });

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(spec.batch_size)) {
    const std::size_t end = std::min(order.size(), i + static_cast<std::size_t>(spec.batch_size));
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace cape
