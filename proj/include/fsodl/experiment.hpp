#pragma once

// Experiment configuration, paired Monte-Carlo evaluation of policies,
// result tables and scenario-file generation.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsodl/dqn.hpp"
#include "fsodl/policies.hpp"
#include "fsodl/scenario.hpp"
#include "fsodl/stats.hpp"

namespace fsodl {

namespace fs = std::filesystem;

inline std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

// ---- configuration ----------------------------------------------------------

struct VolumeSpec {
  enum class Kind { Slots, Fraction, Range } kind = Kind::Fraction;
  Slots slots = 0;
  double fraction = 1.0;
  double lower = 0.05, upper = 1.0;

  Slots sample(Slots capacity, Rng& rng) const {
    double f = fraction;
    switch (kind) {
      case Kind::Slots:
        return std::min(slots, capacity);
      case Kind::Fraction:
        break;
      case Kind::Range:
        f = lower + (upper - lower) * uniform01(rng);
        break;
    }
    return std::clamp<Slots>(static_cast<Slots>(std::llround(f * static_cast<double>(capacity))), 0,
                             capacity);
  }
};

struct PolicySpec {
  enum class Kind { Threshold, MultiThreshold, UseAll, Oracle, Dqn } kind = Kind::UseAll;
  std::string name;
  double nu = 1.0;
  MultiThresholdPolicy multi;
  fs::path model_path;
  std::shared_ptr<const AgentBank> bank;
};

struct ExperimentConfig {
  ContactPlan plan;
  std::optional<std::int64_t> window_s;  // random window of the plan per episode
  WeatherSource weather = UniformSyntheticWeather{};
  AvailabilityModel availability;
  VolumeSpec volume;
  std::vector<PolicySpec> policies;
  std::size_t episodes = 1;
  std::uint64_t seed = 0;
  double alpha = kDefaultAlpha;
  std::size_t horizon = 0;  // cap on contacts per episode; 0 = none
};

inline PolicySpec threshold_spec(double nu) {
  PolicySpec p;
  p.kind = PolicySpec::Kind::Threshold;
  p.nu = nu;
  p.name = "threshold_" + format_double(nu);
  return p;
}

inline PolicySpec use_all_spec() {
  PolicySpec p;
  p.kind = PolicySpec::Kind::UseAll;
  p.name = "use_all";
  return p;
}

inline PolicySpec oracle_spec() {
  PolicySpec p;
  p.kind = PolicySpec::Kind::Oracle;
  p.name = "oracle";
  return p;
}

inline PolicySpec multi_threshold_spec(MultiThresholdPolicy m, std::string name = "multi_threshold") {
  m.validate();
  PolicySpec p;
  p.kind = PolicySpec::Kind::MultiThreshold;
  p.multi = std::move(m);
  p.name = std::move(name);
  return p;
}

inline PolicySpec dqn_spec(std::shared_ptr<const AgentBank> bank, std::string name = "dqn") {
  bank->validate();
  PolicySpec p;
  p.kind = PolicySpec::Kind::Dqn;
  p.bank = std::move(bank);
  p.name = std::move(name);
  return p;
}

inline nlohmann::json multi_threshold_to_json(const MultiThresholdPolicy& m) {
  nlohmann::json bands = nlohmann::json::array();
  for (const auto& b : m.bands) bands.push_back({b.volume_fraction_upper, b.threshold});
  return {{"type", "multi_threshold"}, {"bands", bands}};
}

inline MultiThresholdPolicy multi_threshold_from_json(const nlohmann::json& j) {
  MultiThresholdPolicy m;
  try {
    for (const auto& b : j.at("bands")) {
      if (b.is_array())
        m.bands.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
      else
        m.bands.push_back({b.at("upper").get<double>(), b.at("nu").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed multi-threshold bands: ") + e.what());
  }
  m.validate();
  return m;
}

namespace detail {

inline fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline PolicySpec policy_from_json(const nlohmann::json& j, const fs::path& base) {
  const auto type = j.at("type").get<std::string>();
  PolicySpec p;
  if (type == "threshold") {
    p = threshold_spec(j.at("nu").get<double>());
    if (!(p.nu >= 0.0 && p.nu <= 1.0)) throw ConfigError("threshold nu must be in [0,1]");
  } else if (type == "multi_threshold") {
    if (j.contains("path"))
      p = multi_threshold_spec(multi_threshold_from_json(
          read_json_file(resolve(base, j.at("path").get<std::string>()))));
    else
      p = multi_threshold_spec(multi_threshold_from_json(j));
  } else if (type == "use_all") {
    p = use_all_spec();
  } else if (type == "oracle") {
    p = oracle_spec();
  } else if (type == "dqn") {
    auto path = resolve(base, j.at("model_path").get<std::string>());
    if (!fs::exists(path)) throw ConfigError("model file not found: " + path.string());
    p = dqn_spec(std::make_shared<const AgentBank>(load_bank(path)));
    p.model_path = path;
  } else {
    throw ConfigError("unknown policy type '" + type + "'");
  }
  if (j.contains("name")) p.name = j.at("name").get<std::string>();
  return p;
}

inline WeatherSource weather_from_json(const nlohmann::json& j, const fs::path& base) {
  const auto type = j.at("type").get<std::string>();
  if (type == "uniform") return UniformSyntheticWeather{};
  if (type == "historical") {
    HistoricalWeather h;
    for (const auto& [station, path] : j.at("stations").items())
      h.traces[station] = ingest_weather_csv(resolve(base, path.get<std::string>()), station);
    if (h.traces.empty()) throw ConfigError("historical weather needs at least one station");
    return h;
  }
  if (type == "forecast") {
    if (j.contains("values")) return FixedWeather{forecast_from_json(j.at("values"))};
    return FixedWeather{forecast_from_json(read_json_file(resolve(base, j.at("path").get<std::string>())))};
  }
  throw ConfigError("unknown weather type '" + type + "'");
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& c) {
  require_valid(c.plan);
  if (c.episodes < 1) throw ConfigError("episodes must be at least 1");
  if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) throw ConfigError("alpha must be in [0,1]");
  if (c.window_s && *c.window_s <= 0) throw ConfigError("window_s must be positive");
  if (auto* h = std::get_if<HistoricalWeather>(&c.weather))
    for (const auto& contact : c.plan.contacts)
      if (!h->traces.count(contact.ground_station))
        throw ConfigError("no weather trace for station '" + contact.ground_station + "'");
  if (auto* f = std::get_if<FixedWeather>(&c.weather)) {
    if (c.window_s) throw ConfigError("a fixed forecast cannot be combined with plan windows");
    validate_forecast(f->forecast, c.plan.size());
  }
  const auto& v = c.volume;
  if (v.kind == VolumeSpec::Kind::Fraction && !(v.fraction >= 0.0 && v.fraction <= 1.0))
    throw ConfigError("initial_volume_fraction must be in [0,1]");
  if (v.kind == VolumeSpec::Kind::Range &&
      !(v.lower >= 0.0 && v.upper <= 1.0 && v.lower <= v.upper))
    throw ConfigError("initial_volume_range must satisfy 0 <= lo <= hi <= 1");
  if (v.kind == VolumeSpec::Kind::Slots &&
      (v.slots < 0 || (!c.window_s && v.slots > total_capacity(c.plan))))
    throw ConfigError("initial_volume_slots must be in [0, V]");
  std::set<std::string> names;
  for (const auto& p : c.policies) {
    if (p.name.empty() || p.name.find_first_of(",\"\n") != std::string::npos)
      throw ConfigError("policy names must be non-empty without commas or quotes");
    if (!names.insert(p.name).second) throw ConfigError("duplicate policy name '" + p.name + "'");
  }
}

// Scenario files are experiment configs without the experiment keys, so both
// go through this loader.
inline ExperimentConfig config_from_json(const nlohmann::json& j, const fs::path& base) {
  ExperimentConfig c;
  try {
    if (j.contains("plan_path")) {
      c.plan = load_plan(detail::resolve(base, j.at("plan_path").get<std::string>()));
    } else if (j.contains("plan")) {
      const auto& p = j.at("plan");
      if (p.at("type") != "synthetic_equal") throw ConfigError("unknown plan type " + p.at("type").dump());
      auto n = p.at("contacts").get<std::int64_t>();
      auto slots = p.at("slots").get<Slots>();
      if (n <= 0 || slots < 0) throw ConfigError("synthetic plan needs contacts > 0 and slots >= 0");
      LinkParams link;
      if (p.contains("link")) {
        link.bundle_size_bits = p.at("link").at("bundle_size_bits").get<std::int64_t>();
        link.data_rate_bps = p.at("link").at("data_rate_bps").get<std::int64_t>();
      }
      c.plan = synthetic_equal_plan(static_cast<std::size_t>(n), slots, link);
    } else {
      throw ConfigError("config needs plan_path or plan");
    }
    if (j.contains("window_s")) c.window_s = j.at("window_s").get<std::int64_t>();
    c.weather = j.contains("weather") ? detail::weather_from_json(j.at("weather"), base)
                                      : WeatherSource{UniformSyntheticWeather{}};
    const auto model = j.value("availability_model", std::string("gaussian"));
    if (model == "gaussian")
      c.availability.kind = AvailabilityKind::GaussianVolume;
    else if (model == "bernoulli")
      c.availability.kind = AvailabilityKind::BernoulliSampled;
    else
      throw ConfigError("availability_model must be gaussian or bernoulli");
    c.availability.sigma_fraction = j.value("sigma_fraction", 0.05);
    if (j.contains("initial_volume_slots")) {
      c.volume.kind = VolumeSpec::Kind::Slots;
      c.volume.slots = j.at("initial_volume_slots").get<Slots>();
    } else if (j.contains("initial_volume_fraction")) {
      c.volume.kind = VolumeSpec::Kind::Fraction;
      c.volume.fraction = j.at("initial_volume_fraction").get<double>();
    } else if (j.contains("initial_volume_range")) {
      auto r = j.at("initial_volume_range").get<std::vector<double>>();
      if (r.size() != 2) throw ConfigError("initial_volume_range needs [lo, hi]");
      c.volume.kind = VolumeSpec::Kind::Range;
      c.volume.lower = r[0];
      c.volume.upper = r[1];
    }
    c.alpha = j.value("alpha", kDefaultAlpha);
    c.seed = j.value("seed", std::uint64_t{0});
    c.episodes = j.value("episodes", std::size_t{1});
    c.horizon = j.value("horizon", std::size_t{0});
    if (j.contains("policies"))
      for (const auto& p : j.at("policies")) c.policies.push_back(detail::policy_from_json(p, base));
    else
      c.policies.push_back(use_all_spec());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  validate_config(c);
  return c;
}

inline ExperimentConfig load_config(const fs::path& path) {
  return config_from_json(read_json_file(path), path.parent_path());
}

// ---- episode construction ---------------------------------------------------

// The contacts of a random window of the plan, capped at `horizon` contacts.
inline ContactPlan plan_window(const ExperimentConfig& c, Rng& rng) {
  if (!c.window_s && (c.horizon == 0 || c.plan.size() <= c.horizon)) return c.plan;
  ContactPlan out;
  out.link = c.plan.link;
  if (c.plan.empty()) return out;
  const double slot_s = c.plan.link.slot_duration_s();
  auto end_of = [&](const Contact& k) {
    return static_cast<double>(k.start_time) + static_cast<double>(k.length_slots) * slot_s;
  };
  double begin = static_cast<double>(c.plan.contacts.front().start_time);
  double finish = end_of(c.plan.contacts.back());
  double width = c.window_s ? static_cast<double>(*c.window_s) : finish - begin;
  double ws = begin;
  if (finish - begin > width) ws = begin + std::floor(uniform01(rng) * (finish - begin - width));
  for (const auto& k : c.plan.contacts) {
    if (static_cast<double>(k.start_time) < ws || end_of(k) > ws + width) continue;
    if (c.horizon != 0 && out.size() >= c.horizon) break;
    out.contacts.push_back(k);
  }
  return out;
}

// Builds the shared realization for one episode. Every policy in an
// experiment sees exactly this instance.
inline EpisodeInstance build_episode(const ExperimentConfig& c, std::uint64_t episode_seed,
                                     const std::optional<VolumeRange>& override_range = std::nullopt) {
  Rng rng(derive_seed(episode_seed, 3));
  EpisodeInstance ep;
  ep.plan = plan_window(c, rng);
  const Slots v = total_capacity(ep.plan);
  if (override_range) {
    const double f = override_range->lower +
                     (override_range->upper - override_range->lower) * uniform_open01(rng);
    ep.initial_volume = v == 0 ? 0
                               : std::clamp<Slots>(static_cast<Slots>(std::llround(f * static_cast<double>(v))),
                                                   1, v);
  } else {
    ep.initial_volume = c.volume.sample(v, rng);
  }
  ep.forecast = realize_forecast(c.weather, ep.plan, derive_seed(episode_seed, 1));
  Rng avail(derive_seed(episode_seed, 2));
  ep.realization = sample_realization(ep.plan, ep.forecast, c.availability, avail);
  return ep;
}

inline std::uint64_t episode_seed(const ExperimentConfig& c, std::size_t episode) {
  return derive_seed(c.seed, episode);
}

// Training episodes for the DQN: the config's plan and weather, with the
// data volume drawn from the agent's range.
inline EpisodeFactory training_factory(const ExperimentConfig& c) {
  return [c](std::uint64_t seed, const VolumeRange& range) { return build_episode(c, seed, range); };
}

inline EncodingSpec encoding_for(const ExperimentConfig& c) {
  EncodingSpec e;
  e.max_contacts = c.horizon != 0 ? c.horizon : c.plan.size();
  e.length_scale = static_cast<double>(std::max<Slots>(max_contact_length(c.plan), 1));
  return e;
}

// ---- results ----------------------------------------------------------------

struct ResultRow {
  std::string policy;
  std::size_t episode = 0;
  std::uint64_t seed = 0;
  double w = 0, y = 0;
  Slots theta_slots = 0, excess_slots = 0;
  double z = 0;

  bool operator==(const ResultRow&) const = default;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  bool operator==(const ResultTable&) const = default;
};

inline Policy make_policy(const PolicySpec& spec, const EpisodeInstance& ep, double alpha) {
  switch (spec.kind) {
    case PolicySpec::Kind::Threshold:
      return ThresholdPolicy{spec.nu};
    case PolicySpec::Kind::MultiThreshold:
      return spec.multi;
    case PolicySpec::Kind::UseAll:
      return UseAllPolicy{};
    case PolicySpec::Kind::Oracle:
      return FixedActionsPolicy{oracle_search(ep, alpha).actions};
    case PolicySpec::Kind::Dqn: {
      const Slots v = total_capacity(ep.plan);
      if (v == 0 || ep.initial_volume == 0) return UseAllPolicy{};  // terminal at reset
      const auto& agent = bank_select(*spec.bank, ep.initial_volume, v);
      // aliasing constructor: the bank outlives the policy via spec.bank
      return DqnPolicy{std::shared_ptr<const TrainedAgent>(spec.bank, &agent)};
    }
  }
  throw ConfigError("unknown policy kind");
}

inline std::size_t rollout_horizon(const PolicySpec& spec, const EpisodeInstance& ep) {
  if (spec.kind != PolicySpec::Kind::Dqn) return 0;
  const Slots v = total_capacity(ep.plan);
  if (v == 0 || ep.initial_volume == 0) return 0;
  return bank_select(*spec.bank, ep.initial_volume, v).encoding.max_contacts;
}

struct EpisodeEvaluation {
  std::shared_ptr<const EpisodeInstance> episode;
  std::vector<Rollout> rollouts;  // one per policy, config order
};

inline EpisodeEvaluation evaluate_episode(const ExperimentConfig& c, std::size_t index) {
  EpisodeEvaluation out;
  out.episode = std::make_shared<const EpisodeInstance>(build_episode(c, episode_seed(c, index)));
  for (const auto& spec : c.policies)
    out.rollouts.push_back(rollout(out.episode, make_policy(spec, *out.episode, c.alpha), c.alpha,
                                   rollout_horizon(spec, *out.episode)));
  return out;
}

inline ResultTable run_experiment(const ExperimentConfig& c) {
  validate_config(c);
  ResultTable t;
  t.rows.reserve(c.episodes * c.policies.size());
  for (std::size_t e = 0; e < c.episodes; ++e) {
    auto ev = evaluate_episode(c, e);
    for (std::size_t p = 0; p < c.policies.size(); ++p) {
      const auto& m = ev.rollouts[p].metrics;
      t.rows.push_back({c.policies[p].name, e, episode_seed(c, e), m.delivery_ratio,
                        m.energy_efficiency, m.utilized_time, m.excess_total, m.objective});
    }
  }
  return t;
}

struct PolicySummary {
  std::string policy;
  std::size_t count = 0;
  FiveNumber w, y;
  double z_median = 0;
};

// Per-policy summaries in order of first appearance.
inline std::vector<PolicySummary> aggregate(const ResultTable& t) {
  if (t.rows.empty()) throw ConfigError("cannot aggregate an empty result table");
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ResultRow*>> by;
  for (const auto& r : t.rows) {
    if (!by.count(r.policy)) order.push_back(r.policy);
    by[r.policy].push_back(&r);
  }
  std::vector<PolicySummary> out;
  for (const auto& name : order) {
    std::vector<double> w, y, z;
    for (const auto* r : by[name]) {
      w.push_back(r->w);
      y.push_back(r->y);
      z.push_back(r->z);
    }
    out.push_back({name, w.size(), five_number(w), five_number(y), median(z)});
  }
  return out;
}

inline const char* kResultHeader = "policy,episode,seed,w,y,theta_slots,excess_slots,z";

inline void write_results_csv(std::ostream& out, const ResultTable& t) {
  out << kResultHeader << '\n';
  for (const auto& r : t.rows)
    out << r.policy << ',' << r.episode << ',' << r.seed << ',' << format_double(r.w) << ','
        << format_double(r.y) << ',' << r.theta_slots << ',' << r.excess_slots << ','
        << format_double(r.z) << '\n';
}

inline void write_results_jsonl(std::ostream& out, const ResultTable& t) {
  for (const auto& r : t.rows)
    out << nlohmann::ordered_json{{"policy", r.policy},
                                  {"episode", r.episode},
                                  {"seed", r.seed},
                                  {"w", r.w},
                                  {"y", r.y},
                                  {"theta_slots", r.theta_slots},
                                  {"excess_slots", r.excess_slots},
                                  {"z", r.z}}
               .dump()
        << '\n';
}

enum class ResultFormat { Csv, Jsonl };

inline ResultFormat parse_format(const std::string& s) {
  if (s == "csv") return ResultFormat::Csv;
  if (s == "jsonl") return ResultFormat::Jsonl;
  throw ConfigError("format must be csv or jsonl");
}

inline void export_results(const ResultTable& t, const fs::path& path, ResultFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write " + path.string());
  if (format == ResultFormat::Csv)
    write_results_csv(out, t);
  else
    write_results_jsonl(out, t);
  if (!out) throw RuntimeError("write failed for " + path.string());
}

namespace detail {

template <class T>
T parse_number(std::string_view s, std::size_t line) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("results line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

inline ResultTable read_results_csv(std::istream& in) {
  ResultTable t;
  std::string line;
  std::size_t n = 0;
  if (!std::getline(in, line) || detail::trim(line) != kResultHeader)
    throw ConfigError("results file must start with '" + std::string(kResultHeader) + "'");
  ++n;
  while (std::getline(in, line)) {
    ++n;
    auto sv = detail::trim(line);
    if (sv.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t pos = 0;
    while (true) {
      auto c = sv.find(',', pos);
      f.push_back(sv.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos));
      if (c == std::string_view::npos) break;
      pos = c + 1;
    }
    if (f.size() != 8) throw ConfigError("results line " + std::to_string(n) + ": expected 8 fields");
    t.rows.push_back({std::string(f[0]), detail::parse_number<std::size_t>(f[1], n),
                      detail::parse_number<std::uint64_t>(f[2], n),
                      detail::parse_number<double>(f[3], n), detail::parse_number<double>(f[4], n),
                      detail::parse_number<Slots>(f[5], n), detail::parse_number<Slots>(f[6], n),
                      detail::parse_number<double>(f[7], n)});
  }
  return t;
}

inline ResultTable read_results_jsonl(std::istream& in) {
  ResultTable t;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (detail::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      t.rows.push_back({j.at("policy").get<std::string>(), j.at("episode").get<std::size_t>(),
                        j.at("seed").get<std::uint64_t>(), j.at("w").get<double>(),
                        j.at("y").get<double>(), j.at("theta_slots").get<Slots>(),
                        j.at("excess_slots").get<Slots>(), j.at("z").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("results line " + std::to_string(n) + ": " + e.what());
    }
  }
  return t;
}

inline ResultTable load_results(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  if (path.extension() == ".jsonl") return read_results_jsonl(in);
  return read_results_csv(in);
}

inline void write_summary_csv(std::ostream& out, const std::vector<PolicySummary>& s) {
  out << "policy,count,w_min,w_q1,w_median,w_q3,w_max,y_min,y_q1,y_median,y_q3,y_max,z_median\n";
  for (const auto& p : s) {
    out << p.policy << ',' << p.count;
    for (const auto* f : {&p.w, &p.y})
      for (double v : {f->min, f->q1, f->median, f->q3, f->max}) out << ',' << format_double(v);
    out << ',' << format_double(p.z_median) << '\n';
  }
}

inline void write_summary_jsonl(std::ostream& out, const std::vector<PolicySummary>& s) {
  auto five = [](const FiveNumber& f) {
    return nlohmann::ordered_json{
        {"min", f.min}, {"q1", f.q1}, {"median", f.median}, {"q3", f.q3}, {"max", f.max}};
  };
  for (const auto& p : s)
    out << nlohmann::ordered_json{{"policy", p.policy},
                                  {"count", p.count},
                                  {"w", five(p.w)},
                                  {"y", five(p.y)},
                                  {"z_median", p.z_median}}
               .dump()
        << '\n';
}

// ---- scenario generation ----------------------------------------------------

struct SyntheticScenarioSpec {
  std::int64_t contacts = 10;
  Slots slots = 30;
  double volume_fraction = 0.1;
  double sigma_fraction = 0.05;
  std::uint64_t seed = 0;
  double alpha = kDefaultAlpha;
};

struct CaseStudyScenarioSpec {
  fs::path plan_path;
  std::map<std::string, fs::path> station_weather;
  double volume_lower = 0.05, volume_upper = 1.0;
  std::int64_t window_s = 3 * 86400;
  std::size_t horizon = 24;
  std::uint64_t seed = 0;
  double alpha = kDefaultAlpha;
};

struct GeneratedScenario {
  fs::path plan_path;
  fs::path scenario_path;
};

// Equal-length contacts with uniform rounded cover and Gaussian availability.
inline GeneratedScenario gen_scenario(const SyntheticScenarioSpec& s, const fs::path& out_dir) {
  if (s.contacts <= 0) throw ConfigError("synthetic scenario needs at least one contact");
  if (s.slots <= 0) throw ConfigError("synthetic scenario needs positive contact length");
  if (!(s.volume_fraction >= 0.0 && s.volume_fraction <= 1.0))
    throw ConfigError("volume fraction must be in [0,1]");
  fs::create_directories(out_dir);
  GeneratedScenario g{out_dir / "plan.json", out_dir / "scenario.json"};
  save_plan(g.plan_path, synthetic_equal_plan(static_cast<std::size_t>(s.contacts), s.slots));
  write_json_file(g.scenario_path, {{"plan_path", "plan.json"},
                                    {"weather", {{"type", "uniform"}}},
                                    {"availability_model", "gaussian"},
                                    {"sigma_fraction", s.sigma_fraction},
                                    {"initial_volume_fraction", s.volume_fraction},
                                    {"alpha", s.alpha},
                                    {"seed", s.seed}});
  return g;
}

// Pass plan from a file plus one weather CSV per ground station, Bernoulli
// per-slot availability and volume uniform over a fraction range.
inline GeneratedScenario gen_scenario(const CaseStudyScenarioSpec& s, const fs::path& out_dir) {
  auto plan = load_plan(s.plan_path);
  if (plan.empty()) throw ConfigError("case-study plan has no contacts");
  if (s.station_weather.empty()) throw ConfigError("case-study scenario needs weather files");
  for (const auto& c : plan.contacts)
    if (!s.station_weather.count(c.ground_station))
      throw ConfigError("no weather file for station '" + c.ground_station + "'");
  std::map<std::string, HistoricalWeatherTrace> traces;
  nlohmann::json stations = nlohmann::json::object();
  for (const auto& [st, path] : s.station_weather) {
    traces[st] = ingest_weather_csv(path, st);
    stations[st] = fs::absolute(path).string();
  }
  forecast_for_plan(traces, plan);  // fails early on coverage gaps
  fs::create_directories(out_dir);
  GeneratedScenario g{fs::absolute(s.plan_path), out_dir / "scenario.json"};
  write_json_file(g.scenario_path, {{"plan_path", g.plan_path.string()},
                                    {"window_s", s.window_s},
                                    {"horizon", s.horizon},
                                    {"weather", {{"type", "historical"}, {"stations", stations}}},
                                    {"availability_model", "bernoulli"},
                                    {"initial_volume_range", {s.volume_lower, s.volume_upper}},
                                    {"alpha", s.alpha},
                                    {"seed", s.seed}});
  return g;
}

}  // namespace fsodl
