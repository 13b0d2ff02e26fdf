#pragma once

// Non-learned contact-selection policies and the clairvoyant oracle.

#include <algorithm>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fsodl/simulator.hpp"
#include "fsodl/stats.hpp"

namespace fsodl {

using Policy = std::function<int(const Observation&)>;

struct Rollout {
  EpisodeMetrics metrics;
  std::vector<StepOutcome> steps;
};

inline Rollout rollout(const std::shared_ptr<const EpisodeInstance>& episode,
                       const Policy& policy, double alpha = kDefaultAlpha,
                       std::size_t horizon = 0) {
  Environment env(horizon);
  auto obs = env.reset(episode);
  while (!env.terminal()) obs = env.step(policy(obs)).next.value_or(obs);
  return {env.metrics(alpha), env.history()};
}

inline Rollout rollout(const EpisodeInstance& episode, const Policy& policy,
                       double alpha = kDefaultAlpha, std::size_t horizon = 0) {
  return rollout(std::make_shared<const EpisodeInstance>(episode), policy, alpha, horizon);
}

// ---- single threshold -------------------------------------------------------

// Use the contact iff lambda <= nu.
inline int threshold_decide(double lambda, double nu) {
  check_cover(lambda);
  if (!(nu >= 0.0 && nu <= 1.0)) throw ConfigError("threshold must be in [0,1]");
  return lambda <= nu ? 1 : 0;
}

struct ThresholdPolicy {
  double threshold = 1.0;

  int operator()(const Observation& o) const { return threshold_decide(o.next_cover, threshold); }
};

// Single-satellite contact graph routing: every contact is on the only
// route, so it transmits whenever data remains.
inline int use_all_decide() { return 1; }

struct UseAllPolicy {
  int operator()(const Observation&) const { return use_all_decide(); }
};

// ---- multi-threshold --------------------------------------------------------

struct ThresholdBand {
  double volume_fraction_upper = 1.0;
  double threshold = 1.0;

  bool operator==(const ThresholdBand&) const = default;
};

struct MultiThresholdPolicy {
  std::vector<ThresholdBand> bands;

  void validate() const {
    if (bands.empty()) throw ConfigError("multi-threshold policy needs at least one band");
    double prev = 0.0;
    for (const auto& b : bands) {
      if (!(b.volume_fraction_upper > prev))
        throw ConfigError("band upper bounds must be strictly increasing in (0,1]");
      if (!(b.threshold >= 0.0 && b.threshold <= 1.0))
        throw ConfigError("band threshold must be in [0,1]");
      prev = b.volume_fraction_upper;
    }
    if (bands.back().volume_fraction_upper != 1.0)
      throw ConfigError("last band must end at 1.0");
  }

  int operator()(const Observation& o) const;
};

// Picks the first band whose upper bound covers Omega/V, then thresholds.
inline int multi_threshold_decide(double lambda, Slots remaining_volume, Slots capacity,
                                  const MultiThresholdPolicy& policy) {
  policy.validate();
  if (capacity <= 0) throw ConfigError("capacity must be positive");
  if (remaining_volume < 0) throw ConfigError("remaining volume must be non-negative");
  if (remaining_volume == 0) return 0;
  double f = static_cast<double>(remaining_volume) / static_cast<double>(capacity);
  for (const auto& b : policy.bands)
    if (f <= b.volume_fraction_upper) return threshold_decide(lambda, b.threshold);
  return threshold_decide(lambda, policy.bands.back().threshold);
}

inline int MultiThresholdPolicy::operator()(const Observation& o) const {
  return multi_threshold_decide(o.next_cover, o.remaining_volume, o.capacity, *this);
}

inline std::vector<double> default_threshold_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 10; ++i) g.push_back(i / 10.0);
  return g;
}

inline std::vector<double> default_band_edges() { return {0.33, 0.66, 1.0}; }

// For each band, the candidate threshold with the highest median objective
// over the training episodes whose Omega0/V falls in the band. Ties go to
// the larger threshold. Bands without training episodes get the largest
// candidate.
inline MultiThresholdPolicy calibrate_multi_threshold(
    const std::vector<EpisodeInstance>& training, std::vector<double> candidates,
    const std::vector<double>& band_edges, double alpha = kDefaultAlpha) {
  if (training.empty()) throw ConfigError("calibration needs training episodes");
  if (candidates.empty()) throw ConfigError("calibration needs candidate thresholds");
  std::sort(candidates.begin(), candidates.end());
  MultiThresholdPolicy result;
  for (double e : band_edges) result.bands.push_back({e, candidates.back()});
  result.validate();

  std::vector<std::shared_ptr<const EpisodeInstance>> shared;
  for (const auto& ep : training) shared.push_back(std::make_shared<const EpisodeInstance>(ep));

  double lower = 0.0;
  for (auto& band : result.bands) {
    std::vector<std::shared_ptr<const EpisodeInstance>> members;
    for (const auto& ep : shared) {
      auto v = total_capacity(ep->plan);
      if (v <= 0) continue;
      double f = static_cast<double>(ep->initial_volume) / static_cast<double>(v);
      if (f > lower && f <= band.volume_fraction_upper) members.push_back(ep);
    }
    lower = band.volume_fraction_upper;
    if (members.empty()) continue;
    double best = -1.0;
    for (double nu : candidates) {
      std::vector<double> z;
      z.reserve(members.size());
      for (const auto& ep : members)
        z.push_back(rollout(ep, ThresholdPolicy{nu}, alpha).metrics.objective);
      double med = median(z);
      if (med >= best) {  // ascending candidates: ties move to the larger one
        best = med;
        band.threshold = nu;
      }
    }
  }
  return result;
}

// ---- clairvoyant oracle -----------------------------------------------------

inline constexpr std::size_t kOracleMaxContacts = 20;

struct OraclePlan {
  std::vector<bool> actions;  // effective actions; contacts after termination are 0
  EpisodeMetrics achieved;
  std::vector<StepOutcome> steps;
};

namespace detail {

struct OracleSearch {
  double alpha;
  OraclePlan best;
  bool have = false;
  std::vector<bool> current;

  static std::size_t used(const std::vector<bool>& a) {
    return static_cast<std::size_t>(std::count(a.begin(), a.end(), true));
  }

  bool better(const EpisodeMetrics& m, const std::vector<bool>& a) const {
    if (!have) return true;
    if (m.objective != best.achieved.objective) return m.objective > best.achieved.objective;
    auto ua = used(a), ub = used(best.actions);
    if (ua != ub) return ua < ub;
    return a < best.actions;
  }

  void visit(const Environment& env) {
    if (env.terminal()) {
      auto m = env.metrics(alpha);
      auto actions = current;
      actions.resize(env.episode().plan.size(), false);
      if (better(m, actions)) {
        best = {std::move(actions), m, env.history()};
        have = true;
      }
      return;
    }
    for (int a : {0, 1}) {
      Environment next = env;
      next.step(a);
      current.push_back(a == 1);
      visit(next);
      current.pop_back();
    }
  }
};

}  // namespace detail

// Exhaustive search over all action vectors against a fixed realization.
// Branches stop at termination, so each distinct trajectory is simulated
// once. Ties prefer fewer used contacts, then the lexicographically
// smaller action vector.
inline OraclePlan oracle_search(const EpisodeInstance& episode, double alpha = kDefaultAlpha) {
  if (episode.plan.size() > kOracleMaxContacts)
    throw ConfigError("oracle search supports at most " + std::to_string(kOracleMaxContacts) +
                      " contacts, plan has " + std::to_string(episode.plan.size()));
  Environment env;
  env.reset(episode);
  detail::OracleSearch search{alpha, {}, false, {}};
  search.visit(env);
  return search.best;
}

// Replays the oracle's action vector; only valid for the episode it was
// computed on.
struct FixedActionsPolicy {
  std::vector<bool> actions;

  int operator()(const Observation& o) const {
    return o.contact_index < actions.size() && actions[o.contact_index] ? 1 : 0;
  }
};

}  // namespace fsodl
