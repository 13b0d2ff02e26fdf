#pragma once

// Cloud cover sources and the contact-availability models that turn a
// cloud-cover value into a deliverable volume (in slots) per contact.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsodl/contact.hpp"
#include "fsodl/error.hpp"
#include "fsodl/rng.hpp"

namespace fsodl {

struct CloudForecast {
  std::vector<double> per_contact_cover;  // fraction in [0,1], plan order

  std::size_t size() const { return per_contact_cover.size(); }
  double operator[](std::size_t i) const { return per_contact_cover[i]; }
};

struct CoverSample {
  std::int64_t time = 0;  // unix seconds
  double cover = 0.0;     // fraction
};

struct HistoricalWeatherTrace {
  std::string station;
  std::vector<CoverSample> samples;
};

struct Availability {
  Slots delta_slots = 0;
  std::optional<std::vector<bool>> per_slot_mask;
};

// One availability draw per contact, in plan order.
using Realization = std::vector<Availability>;

enum class AvailabilityKind { GaussianVolume, BernoulliSampled };

struct AvailabilityModel {
  AvailabilityKind kind = AvailabilityKind::GaussianVolume;
  double sigma_fraction = 0.05;  // Gaussian sd as a fraction of contact length
};

inline void check_cover(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ConfigError("cloud cover must be in [0,1], got " +
                      std::to_string(lambda));
}

inline void validate_forecast(const CloudForecast& f, std::size_t n_contacts) {
  if (f.size() != n_contacts)
    throw ConfigError("forecast has " + std::to_string(f.size()) +
                      " entries for " + std::to_string(n_contacts) +
                      " contacts");
  for (double v : f.per_contact_cover) check_cover(v);
}

// Uniform cover on [0,1] rounded to the nearest tenth.
inline CloudForecast gen_uniform_cover(std::size_t n_contacts,
                                       std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  CloudForecast f;
  f.per_contact_cover.reserve(n_contacts);
  for (std::size_t i = 0; i < n_contacts; ++i)
    f.per_contact_cover.push_back(std::round(uniform01(rng) * 10.0) / 10.0);
  return f;
}

// ---- historical traces ------------------------------------------------------

namespace detail {

inline bool parse_int(std::string_view s, int& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace detail

// Accepts YYYY-MM-DD[T| ]HH:MM[:SS][Z|+HH:MM|-HH:MM]; naive times are UTC.
inline std::optional<std::int64_t> parse_iso8601(std::string_view s) {
  using namespace std::chrono;
  s = detail::trim(s);
  if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':')
    return std::nullopt;
  int y, mo, d, h, mi, sec = 0;
  if (!detail::parse_int(s.substr(0, 4), y) || !detail::parse_int(s.substr(5, 2), mo) ||
      !detail::parse_int(s.substr(8, 2), d) || !detail::parse_int(s.substr(11, 2), h) ||
      !detail::parse_int(s.substr(14, 2), mi))
    return std::nullopt;
  std::string_view rest = s.substr(16);
  if (!rest.empty() && rest.front() == ':') {
    if (rest.size() < 3 || !detail::parse_int(rest.substr(1, 2), sec)) return std::nullopt;
    rest.remove_prefix(3);
  }
  int offset_min = 0;
  if (rest == "Z" || rest.empty()) {
  } else if ((rest.front() == '+' || rest.front() == '-') && rest.size() == 6 &&
             rest[3] == ':') {
    int oh, om;
    if (!detail::parse_int(rest.substr(1, 2), oh) || !detail::parse_int(rest.substr(4, 2), om))
      return std::nullopt;
    offset_min = (oh * 60 + om) * (rest.front() == '-' ? -1 : 1);
  } else {
    return std::nullopt;
  }
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                     day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + sec -
         offset_min * 60;
}

inline std::string format_iso8601(std::int64_t t) {
  using namespace std::chrono;
  auto dp = floor<days>(sys_seconds{seconds{t}});
  year_month_day ymd{dp};
  auto tod = t - dp.time_since_epoch().count() * 86400;
  const int secs = static_cast<int>(tod);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), secs / 3600, secs / 60 % 60, secs % 60);
  return buf;
}

// CSV with header `timestamp_iso8601,cloud_cover_percent`, one station per
// stream. Cover is converted to a fraction.
inline HistoricalWeatherTrace parse_weather_csv(std::istream& in,
                                                const std::string& station,
                                                const std::string& source = "<stream>") {
  HistoricalWeatherTrace trace{station, {}};
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  auto fail = [&](const std::string& what) {
    throw ConfigError(source + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto sv = detail::trim(line);
    if (sv.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (sv != "timestamp_iso8601,cloud_cover_percent")
        fail("expected header 'timestamp_iso8601,cloud_cover_percent'");
      continue;
    }
    auto comma = sv.find(',');
    if (comma == std::string_view::npos) fail("expected two comma-separated fields");
    auto ts = parse_iso8601(sv.substr(0, comma));
    if (!ts) fail("bad timestamp '" + std::string(sv.substr(0, comma)) + "'");
    auto field = detail::trim(sv.substr(comma + 1));
    double pct = 0;
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), pct);
    if (ec != std::errc() || p != field.data() + field.size())
      fail("bad cloud cover '" + std::string(field) + "'");
    if (!(pct >= 0.0 && pct <= 100.0)) fail("cloud cover out of range [0,100]");
    if (!trace.samples.empty() && *ts <= trace.samples.back().time)
      fail("timestamps not strictly increasing");
    trace.samples.push_back({*ts, pct / 100.0});
  }
  if (trace.samples.empty()) throw ConfigError(source + ": no samples");
  return trace;
}

inline HistoricalWeatherTrace ingest_weather_csv(const std::filesystem::path& path,
                                                 const std::string& station) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return parse_weather_csv(in, station, path.string());
}

inline void write_weather_csv(const std::filesystem::path& path,
                              const HistoricalWeatherTrace& trace) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write " + path.string());
  out << "timestamp_iso8601,cloud_cover_percent\n";
  for (const auto& s : trace.samples) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, s.cover * 100.0);
    out << format_iso8601(s.time) << ',' << std::string_view(buf, p - buf) << '\n';
  }
}

// Time-weighted mean of the piecewise-constant trace over [begin, end].
// Each sample holds until the next one; the last sample holds for the
// same span as the interval before it.
inline double mean_cover(const HistoricalWeatherTrace& trace, double begin,
                         double end) {
  const auto& s = trace.samples;
  if (s.empty()) throw ConfigError("trace for " + trace.station + " has no samples");
  double tail = s.size() > 1 ? static_cast<double>(s.back().time - s[s.size() - 2].time) : 0.0;
  double cover_end = static_cast<double>(s.back().time) + tail;
  if (begin < static_cast<double>(s.front().time) || end > cover_end ||
      (tail == 0.0 && begin != static_cast<double>(s.front().time)))
    throw ConfigError("contact outside weather coverage for station " + trace.station);
  // index of the sample active at time t
  auto active = [&](double t) {
    auto it = std::upper_bound(s.begin(), s.end(), t, [](double v, const CoverSample& c) {
      return v < static_cast<double>(c.time);
    });
    return static_cast<std::size_t>(std::distance(s.begin(), it)) - 1;
  };
  if (end <= begin) return s[std::min(active(begin), s.size() - 1)].cover;
  double acc = 0.0;
  for (std::size_t i = active(begin); i < s.size(); ++i) {
    double lo = std::max(begin, static_cast<double>(s[i].time));
    double hi = std::min(end, i + 1 < s.size() ? static_cast<double>(s[i + 1].time) : cover_end);
    if (hi > lo) acc += s[i].cover * (hi - lo);
    if (hi >= end) break;
  }
  return std::clamp(acc / (end - begin), 0.0, 1.0);
}

inline CloudForecast forecast_for_plan(const HistoricalWeatherTrace& trace,
                                       const ContactPlan& plan) {
  CloudForecast f;
  const double slot_s = plan.link.slot_duration_s();
  for (const auto& c : plan.contacts) {
    double begin = static_cast<double>(c.start_time);
    f.per_contact_cover.push_back(
        mean_cover(trace, begin, begin + static_cast<double>(c.length_slots) * slot_s));
  }
  return f;
}

// Per-contact forecast where each contact uses its own station's trace.
inline CloudForecast forecast_for_plan(
    const std::map<std::string, HistoricalWeatherTrace>& traces,
    const ContactPlan& plan) {
  CloudForecast f;
  const double slot_s = plan.link.slot_duration_s();
  for (const auto& c : plan.contacts) {
    auto it = traces.find(c.ground_station);
    if (it == traces.end())
      throw ConfigError("no weather trace for station '" + c.ground_station + "'");
    double begin = static_cast<double>(c.start_time);
    f.per_contact_cover.push_back(
        mean_cover(it->second, begin, begin + static_cast<double>(c.length_slots) * slot_s));
  }
  return f;
}

// ---- availability models ----------------------------------------------------

// Delta ~ Normal((1 - lambda) * length, sigma^2), rounded half away from
// zero and clamped to [0, length].
inline Availability sample_availability_gaussian(const Contact& contact, double lambda,
                                                 double sigma_slots, Rng& rng) {
  check_cover(lambda);
  if (!(sigma_slots >= 0.0)) throw ConfigError("sigma must be non-negative");
  const double mean = (1.0 - lambda) * static_cast<double>(contact.length_slots);
  double g = mean;
  if (sigma_slots > 0.0) g = std::normal_distribution<double>(mean, sigma_slots)(rng);
  auto delta = static_cast<Slots>(
      std::clamp(std::round(g), 0.0, static_cast<double>(contact.length_slots)));
  return {delta, std::nullopt};
}

// One Z ~ U(0,1) per slot; the slot is available iff Z > lambda.
inline Availability sample_availability_bernoulli(const Contact& contact, double lambda,
                                                  Rng& rng) {
  check_cover(lambda);
  std::vector<bool> mask(static_cast<std::size_t>(std::max<Slots>(contact.length_slots, 0)));
  Slots delta = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = uniform_open01(rng) > lambda;
    delta += mask[i];
  }
  return {delta, std::move(mask)};
}

inline Realization sample_realization(const ContactPlan& plan, const CloudForecast& forecast,
                                      const AvailabilityModel& model, Rng& rng) {
  validate_forecast(forecast, plan.size());
  Realization r;
  r.reserve(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& c = plan.contacts[i];
    if (model.kind == AvailabilityKind::GaussianVolume)
      r.push_back(sample_availability_gaussian(
          c, forecast[i], model.sigma_fraction * static_cast<double>(c.length_slots), rng));
    else
      r.push_back(sample_availability_bernoulli(c, forecast[i], rng));
  }
  return r;
}

// ---- forecast JSON ----------------------------------------------------------

inline nlohmann::json forecast_to_json(const CloudForecast& f) {
  return nlohmann::json(f.per_contact_cover);
}

inline CloudForecast forecast_from_json(const nlohmann::json& j) {
  CloudForecast f;
  try {
    f.per_contact_cover = j.get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("forecast must be a list of numbers: ") + e.what());
  }
  for (double v : f.per_contact_cover) check_cover(v);
  return f;
}

// ---- synthetic inputs -------------------------------------------------------

// Station climate for synthetic hourly traces: a latent AR(1) process pushed
// through the normal CDF, stretched so that clear and overcast hours carry
// point mass.
struct CloudClimate {
  double offset = 0.0;       // > 0 means cloudier
  double persistence = 0.9;  // hour-to-hour autocorrelation of the latent
  double stretch = 1.4;
};

inline HistoricalWeatherTrace synthetic_weather_trace(const std::string& station,
                                                      std::int64_t start, std::size_t hours,
                                                      const CloudClimate& climate,
                                                      std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  HistoricalWeatherTrace trace{station, {}};
  const double innov = std::sqrt(1.0 - climate.persistence * climate.persistence);
  double z = unit(rng);
  for (std::size_t h = 0; h < hours; ++h) {
    double p = 0.5 * std::erfc(-(z + climate.offset) / std::sqrt(2.0));
    double cover = std::clamp(0.5 + (p - 0.5) * climate.stretch, 0.0, 1.0);
    trace.samples.push_back({start + static_cast<std::int64_t>(h) * 3600,
                             std::round(cover * 100.0) / 100.0});
    z = climate.persistence * z + innov * unit(rng);
  }
  return trace;
}

struct StationPasses {
  std::string station;
  double passes_per_day = 4.0;
};

// Pass-like contact plan for one satellite: per orbit, each station gets a
// pass with probability passes_per_day / orbits_per_day, of random usable
// length. Overlapping passes are dropped (one station at a time).
inline ContactPlan synthetic_pass_plan(const std::vector<StationPasses>& stations,
                                       std::int64_t start, double days, std::uint64_t seed,
                                       double min_length_s = 120.0,
                                       double max_length_s = 600.0,
                                       const LinkParams& link = {}) {
  constexpr double kOrbitS = 5677.0;  // ~500 km circular orbit
  Rng rng(seed);
  const auto orbits = static_cast<std::size_t>(days * 86400.0 / kOrbitS);
  struct Pass {
    std::int64_t t;
    double len;
    std::string st;
  };
  std::vector<Pass> passes;
  for (std::size_t k = 0; k < orbits; ++k)
    for (std::size_t s = 0; s < stations.size(); ++s) {
      double p = stations[s].passes_per_day * kOrbitS / 86400.0;
      if (uniform01(rng) >= p) continue;
      double phase = (static_cast<double>(s) + uniform01(rng)) / static_cast<double>(stations.size());
      auto t = start + static_cast<std::int64_t>((static_cast<double>(k) + phase * 0.9) * kOrbitS);
      double len = min_length_s + uniform01(rng) * (max_length_s - min_length_s);
      passes.push_back({t, len, stations[s].station});
    }
  std::sort(passes.begin(), passes.end(), [](const Pass& a, const Pass& b) { return a.t < b.t; });
  ContactPlan plan;
  plan.link = link;
  double last_end = -1e300;
  for (const auto& p : passes) {
    if (static_cast<double>(p.t) < last_end) continue;
    auto slots = slots_from_duration(p.len, link);
    if (slots <= 0) continue;
    plan.contacts.push_back({static_cast<int>(plan.contacts.size()), p.t, slots, p.st});
    last_end = static_cast<double>(p.t) + static_cast<double>(slots) * link.slot_duration_s();
  }
  return plan;
}

}  // namespace fsodl
