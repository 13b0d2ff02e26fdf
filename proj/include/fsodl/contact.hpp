#pragma once

// Contacts, contact plans and unit conversions between seconds and
// bundle-slots. All delivery accounting is done in integral slots.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsodl/error.hpp"

namespace fsodl {

using Slots = std::int64_t;

struct LinkParams {
  std::int64_t bundle_size_bits = 160'000'000'000;  // 20 GB
  std::int64_t data_rate_bps = 8'000'000'000;       // 8 Gbit/s

  double slot_duration_s() const {
    return static_cast<double>(bundle_size_bits) /
           static_cast<double>(data_rate_bps);
  }

  void validate() const {
    if (bundle_size_bits <= 0 || data_rate_bps <= 0)
      throw ConfigError("link parameters must be positive");
  }
};

struct Contact {
  int id = 0;
  std::int64_t start_time = 0;  // unix seconds, UTC
  Slots length_slots = 0;
  std::string ground_station;
};

struct ContactPlan {
  std::vector<Contact> contacts;
  LinkParams link;

  std::size_t size() const { return contacts.size(); }
  bool empty() const { return contacts.empty(); }
};

// floor(duration * rate / bundle size). Whole-second durations use exact
// integer arithmetic.
inline Slots slots_from_duration(double duration_s, const LinkParams& link) {
  if (!std::isfinite(duration_s))
    throw ConfigError("duration must be finite");
  if (duration_s < 0) throw ConfigError("duration must be non-negative");
  link.validate();
  double whole = std::floor(duration_s);
  if (whole == duration_s && duration_s < 9.0e15) {
    auto bits = static_cast<__int128>(static_cast<std::int64_t>(whole)) *
                link.data_rate_bps;
    return static_cast<Slots>(bits / link.bundle_size_bits);
  }
  long double bits = static_cast<long double>(duration_s) * link.data_rate_bps;
  return static_cast<Slots>(std::floor(bits / link.bundle_size_bits));
}

// System capacity V without weather impairments.
inline Slots total_capacity(const ContactPlan& plan) {
  return std::accumulate(
      plan.contacts.begin(), plan.contacts.end(), Slots{0},
      [](Slots acc, const Contact& c) { return acc + c.length_slots; });
}

// theta = V minus the first m contact lengths.
inline Slots remaining_capacity(const ContactPlan& plan, std::size_t m) {
  if (m > plan.size())
    throw ConfigError("contact index " + std::to_string(m) +
                      " out of range for plan of " +
                      std::to_string(plan.size()) + " contacts");
  Slots used = 0;
  for (std::size_t i = 0; i < m; ++i) used += plan.contacts[i].length_slots;
  return total_capacity(plan) - used;
}

inline Slots max_contact_length(const ContactPlan& plan) {
  Slots m = 0;
  for (const auto& c : plan.contacts) m = std::max(m, c.length_slots);
  return m;
}

struct PlanViolation {
  enum class Kind { NegativeLength, OutOfOrder, Overlap };
  Kind kind;
  int first_id;
  int second_id;  // same as first_id for single-contact violations
  std::string message;
};

inline std::vector<PlanViolation> validate_plan(const ContactPlan& plan) {
  std::vector<PlanViolation> out;
  const double slot_s =
      plan.link.bundle_size_bits > 0 && plan.link.data_rate_bps > 0
          ? plan.link.slot_duration_s()
          : 0.0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& c = plan.contacts[i];
    if (c.length_slots < 0)
      out.push_back({PlanViolation::Kind::NegativeLength, c.id, c.id,
                     "contact " + std::to_string(c.id) +
                         " has negative length " +
                         std::to_string(c.length_slots)});
    if (i == 0) continue;
    const auto& p = plan.contacts[i - 1];
    if (c.start_time < p.start_time) {
      out.push_back({PlanViolation::Kind::OutOfOrder, p.id, c.id,
                     "contact " + std::to_string(c.id) +
                         " starts before contact " + std::to_string(p.id)});
      continue;
    }
    double prev_end = static_cast<double>(p.start_time) +
                      static_cast<double>(std::max<Slots>(p.length_slots, 0)) *
                          slot_s;
    if (static_cast<double>(c.start_time) < prev_end)
      out.push_back({PlanViolation::Kind::Overlap, p.id, c.id,
                     "contacts " + std::to_string(p.id) + " and " +
                         std::to_string(c.id) + " overlap"});
  }
  return out;
}

inline void require_valid(const ContactPlan& plan) {
  plan.link.validate();
  auto v = validate_plan(plan);
  if (!v.empty()) throw ConfigError("invalid contact plan: " + v.front().message);
}

// n equal-length contacts at a single synthetic station.
inline ContactPlan synthetic_equal_plan(std::size_t n, Slots slots,
                                        const LinkParams& link = {},
                                        std::int64_t start_time = 0) {
  ContactPlan plan;
  plan.link = link;
  const auto slot_s = link.slot_duration_s();
  // 1.5 h spacing, roughly one LEO orbit, and never shorter than the contact.
  auto spacing = std::max<std::int64_t>(
      5400, static_cast<std::int64_t>(std::ceil(slots * slot_s)));
  for (std::size_t i = 0; i < n; ++i)
    plan.contacts.push_back({static_cast<int>(i), start_time + spacing * static_cast<std::int64_t>(i),
                             slots, "synthetic"});
  return plan;
}

// ---- JSON contact-plan file -------------------------------------------------

inline nlohmann::json plan_to_json(const ContactPlan& plan) {
  nlohmann::json j;
  j["link"] = {{"bundle_size_bits", plan.link.bundle_size_bits},
               {"data_rate_bps", plan.link.data_rate_bps}};
  j["contacts"] = nlohmann::json::array();
  for (const auto& c : plan.contacts)
    j["contacts"].push_back({{"id", c.id},
                             {"start_time_unix_s", c.start_time},
                             {"length_slots", c.length_slots},
                             {"ground_station", c.ground_station}});
  return j;
}

inline ContactPlan plan_from_json(const nlohmann::json& j) {
  ContactPlan plan;
  try {
    const auto& link = j.at("link");
    plan.link.bundle_size_bits = link.at("bundle_size_bits").get<std::int64_t>();
    plan.link.data_rate_bps = link.at("data_rate_bps").get<std::int64_t>();
    plan.link.validate();
    for (const auto& jc : j.at("contacts")) {
      Contact c;
      c.id = jc.at("id").get<int>();
      c.start_time = jc.at("start_time_unix_s").get<std::int64_t>();
      c.ground_station = jc.at("ground_station").get<std::string>();
      if (jc.contains("length_slots"))
        c.length_slots = jc.at("length_slots").get<Slots>();
      else if (jc.contains("length_s"))
        c.length_slots = slots_from_duration(jc.at("length_s").get<double>(), plan.link);
      else
        throw ConfigError("contact " + std::to_string(c.id) +
                          " needs length_slots or length_s");
      plan.contacts.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed contact plan: ") + e.what());
  }
  require_valid(plan);
  return plan;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path,
                            const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline ContactPlan load_plan(const std::filesystem::path& path) {
  return plan_from_json(read_json_file(path));
}

inline void save_plan(const std::filesystem::path& path, const ContactPlan& plan) {
  write_json_file(path, plan_to_json(plan));
}

}  // namespace fsodl
