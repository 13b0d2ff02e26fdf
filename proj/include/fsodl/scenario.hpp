#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>

#include "fsodl/contact.hpp"
#include "fsodl/rng.hpp"
#include "fsodl/weather.hpp"

namespace fsodl {

struct UniformSyntheticWeather {};

struct HistoricalWeather {
  std::map<std::string, HistoricalWeatherTrace> traces;  // by station id
};

// A fixed per-contact forecast, e.g. loaded from a JSON list.
struct FixedWeather {
  CloudForecast forecast;
};

using WeatherSource = std::variant<UniformSyntheticWeather, HistoricalWeather, FixedWeather>;

struct Scenario {
  ContactPlan plan;
  Slots initial_volume_slots = 0;
  WeatherSource weather = UniformSyntheticWeather{};
  AvailabilityModel availability;
  std::uint64_t seed = 0;

  void validate() const {
    require_valid(plan);
    auto v = total_capacity(plan);
    if (initial_volume_slots < 0 || initial_volume_slots > v)
      throw ConfigError("initial volume " + std::to_string(initial_volume_slots) +
                        " outside [0, " + std::to_string(v) + "]");
    if (auto* f = std::get_if<FixedWeather>(&weather))
      validate_forecast(f->forecast, plan.size());
    if (!(availability.sigma_fraction >= 0.0))
      throw ConfigError("sigma_fraction must be non-negative");
  }
};

// Everything one episode needs: plan, observed cover (equal to the cover
// driving availability) and the realized availability per contact.
struct EpisodeInstance {
  ContactPlan plan;
  CloudForecast forecast;
  Realization realization;
  Slots initial_volume = 0;
};

inline CloudForecast realize_forecast(const WeatherSource& weather, const ContactPlan& plan,
                                      std::uint64_t seed) {
  return std::visit(
      [&](const auto& w) -> CloudForecast {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, UniformSyntheticWeather>)
          return gen_uniform_cover(plan.size(), seed);
        else if constexpr (std::is_same_v<T, HistoricalWeather>)
          return forecast_for_plan(w.traces, plan);
        else
          return w.forecast;
      },
      weather);
}

inline EpisodeInstance make_episode(const Scenario& scenario, std::uint64_t episode_seed) {
  scenario.validate();
  EpisodeInstance ep;
  ep.plan = scenario.plan;
  ep.initial_volume = scenario.initial_volume_slots;
  ep.forecast = realize_forecast(scenario.weather, ep.plan, derive_seed(episode_seed, 1));
  Rng rng(derive_seed(episode_seed, 2));
  ep.realization = sample_realization(ep.plan, ep.forecast, scenario.availability, rng);
  return ep;
}

}  // namespace fsodl
