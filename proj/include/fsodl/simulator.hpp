#pragma once

// Episodic contact-selection environment. One decision per contact, in plan
// order: transmit (1) or skip (0). Delivery is limited by the realized
// availability and the remaining buffer.

#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsodl/scenario.hpp"

namespace fsodl {

inline constexpr double kDefaultAlpha = 0.9;

struct FutureContact {
  double cover = 0.0;
  Slots length_slots = 0;

  bool operator==(const FutureContact&) const = default;
};

struct Observation {
  double next_cover = 0.0;     // lambda of the contact about to be decided
  Slots remaining_volume = 0;  // Omega
  Slots remaining_capacity = 0;  // theta, includes the next contact
  Slots capacity = 0;            // V of the whole plan
  std::size_t contact_index = 0;
  // Remaining contacts starting with the next one, zero-padded to the
  // environment horizon.
  std::vector<FutureContact> future_info;

  bool operator==(const Observation&) const = default;
};

struct StepOutcome {
  int action = 0;
  Slots delivered = 0;     // omega
  Slots unsuccessful = 0;  // epsilon
  Slots contact_length = 0;  // zeta
  Slots excess_power = 0;    // a = attempted - delivered

  Slots attempted() const { return delivered + unsuccessful; }
  bool operator==(const StepOutcome&) const = default;
};

struct EpisodeMetrics {
  double delivery_ratio = 0.0;     // w (eta)
  double energy_efficiency = 1.0;  // y
  Slots utilized_time = 0;         // Theta
  Slots excess_total = 0;
  double objective = 0.0;          // z
  Slots delivered_total = 0;
  Slots initial_volume = 0;
};

inline double objective(double delivery_ratio, double energy_efficiency, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ConfigError("alpha must be in [0,1], got " + std::to_string(alpha));
  return alpha * delivery_ratio + (1.0 - alpha) * energy_efficiency;
}

inline double objective(const EpisodeMetrics& m, double alpha) {
  return objective(m.delivery_ratio, m.energy_efficiency, alpha);
}

struct StepResult {
  std::optional<Observation> next;  // empty once the episode is terminal
  StepOutcome outcome;
};

class Environment {
 public:
  // horizon: width of Observation::future_info; 0 means "size of the plan".
  explicit Environment(std::size_t horizon = 0) : horizon_(horizon) {}

  Observation reset(const Scenario& scenario, std::uint64_t episode_seed) {
    return reset(make_episode(scenario, episode_seed));
  }

  Observation reset(EpisodeInstance episode) {
    return reset(std::make_shared<const EpisodeInstance>(std::move(episode)));
  }

  Observation reset(std::shared_ptr<const EpisodeInstance> episode) {
    const auto& ep = *episode;
    require_valid(ep.plan);
    validate_forecast(ep.forecast, ep.plan.size());
    if (ep.realization.size() != ep.plan.size())
      throw ConfigError("realization does not match plan size");
    capacity_ = total_capacity(ep.plan);
    if (ep.initial_volume < 0 || ep.initial_volume > capacity_)
      throw ConfigError("initial volume outside [0, V]");
    if (horizon_ != 0 && ep.plan.size() > horizon_)
      throw ConfigError("plan has " + std::to_string(ep.plan.size()) +
                        " contacts, more than the horizon " + std::to_string(horizon_));
    for (std::size_t i = 0; i < ep.plan.size(); ++i) {
      const auto& a = ep.realization[i];
      if (a.delta_slots < 0 || a.delta_slots > ep.plan.contacts[i].length_slots)
        throw ConfigError("availability exceeds contact length");
      if (a.per_slot_mask &&
          static_cast<Slots>(a.per_slot_mask->size()) != ep.plan.contacts[i].length_slots)
        throw ConfigError("slot mask length does not match contact length");
    }
    episode_ = std::move(episode);
    cursor_ = 0;
    remaining_volume_ = ep.initial_volume;
    remaining_capacity_ = capacity_;
    delivered_ = utilized_ = excess_ = 0;
    history_.clear();
    return observe();
  }

  bool terminal() const {
    return !episode_ || cursor_ >= episode_->plan.size() || remaining_volume_ == 0;
  }

  StepResult step(int action) {
    if (!episode_) throw ConfigError("step before reset");
    if (terminal()) throw ConfigError("step after terminal");
    if (action != 0 && action != 1) throw ConfigError("action must be 0 or 1");
    const auto& contact = episode_->plan.contacts[cursor_];
    const auto& avail = episode_->realization[cursor_];
    StepOutcome out;
    out.action = action;
    out.contact_length = contact.length_slots;
    if (action == 1) {
      Slots attempted = 0, delivered = 0;
      if (avail.per_slot_mask) {
        Slots left = remaining_volume_;
        for (bool ok : *avail.per_slot_mask) {
          if (left == 0) break;
          ++attempted;
          if (ok) {
            ++delivered;
            --left;
          }
        }
      } else {
        attempted = std::min(remaining_volume_, contact.length_slots);
        delivered = std::min(avail.delta_slots, remaining_volume_);
      }
      out.delivered = delivered;
      out.unsuccessful = attempted - delivered;
      out.excess_power = out.unsuccessful;
      remaining_volume_ -= delivered;
      delivered_ += delivered;
      excess_ += out.excess_power;
      utilized_ += contact.length_slots;
    }
    remaining_capacity_ -= contact.length_slots;
    ++cursor_;
    history_.push_back(out);
    StepResult r;
    r.outcome = out;
    if (!terminal()) r.next = observe();
    return r;
  }

  EpisodeMetrics metrics(double alpha = kDefaultAlpha) const {
    if (!terminal()) throw ConfigError("metrics requested before the episode ended");
    EpisodeMetrics m;
    m.initial_volume = episode_ ? episode_->initial_volume : 0;
    m.delivered_total = delivered_;
    m.utilized_time = utilized_;
    m.excess_total = excess_;
    m.delivery_ratio = m.initial_volume == 0
                           ? 1.0
                           : static_cast<double>(delivered_) / static_cast<double>(m.initial_volume);
    m.energy_efficiency =
        utilized_ == 0 ? 1.0 : static_cast<double>(delivered_) / static_cast<double>(utilized_);
    m.objective = objective(m, alpha);
    return m;
  }

  Observation observe() const {
    const auto& ep = *episode_;
    Observation o;
    o.remaining_volume = remaining_volume_;
    o.remaining_capacity = remaining_capacity_;
    o.capacity = capacity_;
    o.contact_index = cursor_;
    const std::size_t n = ep.plan.size();
    o.next_cover = cursor_ < n ? ep.forecast[cursor_] : 0.0;
    const std::size_t width = horizon_ ? horizon_ : n;
    o.future_info.assign(width, FutureContact{});
    for (std::size_t k = 0; cursor_ + k < n && k < width; ++k)
      o.future_info[k] = {ep.forecast[cursor_ + k], ep.plan.contacts[cursor_ + k].length_slots};
    return o;
  }

  const std::vector<StepOutcome>& history() const { return history_; }
  const EpisodeInstance& episode() const { return *episode_; }
  std::size_t horizon() const { return horizon_; }
  Slots remaining_volume() const { return remaining_volume_; }
  Slots capacity() const { return capacity_; }
  std::size_t cursor() const { return cursor_; }

 private:
  std::size_t horizon_;
  std::shared_ptr<const EpisodeInstance> episode_;
  std::size_t cursor_ = 0;
  Slots remaining_volume_ = 0;
  Slots remaining_capacity_ = 0;
  Slots capacity_ = 0;
  Slots delivered_ = 0;
  Slots utilized_ = 0;
  Slots excess_ = 0;
  std::vector<StepOutcome> history_;
};

// ---- episode trace (JSON lines) --------------------------------------------

inline nlohmann::json to_json(const StepOutcome& s) {
  return {{"action", s.action},
          {"delivered", s.delivered},
          {"unsuccessful", s.unsuccessful},
          {"contact_length", s.contact_length},
          {"excess_power", s.excess_power}};
}

inline nlohmann::json to_json(const EpisodeMetrics& m) {
  return {{"delivery_ratio", m.delivery_ratio},
          {"energy_efficiency", m.energy_efficiency},
          {"utilized_time", m.utilized_time},
          {"excess_total", m.excess_total},
          {"objective", m.objective}};
}

inline void write_episode_trace(std::ostream& out, const std::vector<StepOutcome>& steps,
                                const EpisodeMetrics& metrics) {
  for (const auto& s : steps) out << to_json(s).dump() << '\n';
  out << to_json(metrics).dump() << '\n';
}

}  // namespace fsodl
