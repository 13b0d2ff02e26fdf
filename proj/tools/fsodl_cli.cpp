// Command-line front end: scenario generation, training, calibration,
// evaluation, oracle search and reporting.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fsodl/fsodl.hpp"

namespace fs = std::filesystem;
using namespace fsodl;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::string out;
  std::string format = "csv";
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "' in list '" + s + "'");
    }
  }
  return v;
}

ExperimentConfig load_with_overrides(const std::string& path, const Globals& g) {
  auto c = load_config(path);
  if (g.seed) c.seed = *g.seed;
  if (g.alpha) {
    if (!(*g.alpha >= 0.0 && *g.alpha <= 1.0)) throw ConfigError("--alpha must be in [0,1]");
    c.alpha = *g.alpha;
  }
  return c;
}

std::string require_out(const Globals& g, const char* what) {
  if (g.out.empty()) throw ConfigError(std::string("--out is required for ") + what);
  return g.out;
}

void print_summary(std::ostream& out, const std::vector<PolicySummary>& s) {
  out << "policy                     n   w_median  y_median  z_median\n";
  for (const auto& p : s) {
    char line[160];
    std::snprintf(line, sizeof line, "%-24s %5zu  %8.4f  %8.4f  %8.4f\n", p.policy.c_str(),
                  p.count, p.w.median, p.y.median, p.z_median);
    out << line;
  }
}

// ---- subcommands ------------------------------------------------------------

struct GenArgs {
  std::string kind = "synthetic";
  std::int64_t contacts = 10;
  Slots slots = 30;
  double volume_fraction = 0.1;
  double sigma_fraction = 0.05;
  std::string plan;
  std::vector<std::string> weather;
  std::string volume_range = "0.05,1.0";
  double window_days = 3.0;
  std::size_t horizon = 24;
  std::string stations = "ottawa:4,calgary:4";
  double days = 90.0;
  double cloud_offset = 0.0;
};

int run_gen(const GenArgs& a, const Globals& g) {
  const fs::path out = require_out(g, "gen-scenario");
  const auto seed = g.seed.value_or(0);
  const auto alpha = g.alpha.value_or(kDefaultAlpha);
  if (a.kind == "synthetic") {
    SyntheticScenarioSpec s{a.contacts, a.slots, a.volume_fraction, a.sigma_fraction, seed, alpha};
    auto r = gen_scenario(s, out);
    std::cout << r.plan_path.string() << '\n' << r.scenario_path.string() << '\n';
    return 0;
  }
  CaseStudyScenarioSpec s;
  auto vr = parse_list(a.volume_range);
  if (vr.size() != 2) throw ConfigError("--volume-range needs lo,hi");
  s.volume_lower = vr[0];
  s.volume_upper = vr[1];
  s.window_s = static_cast<std::int64_t>(a.window_days * 86400.0);
  s.horizon = a.horizon;
  s.seed = seed;
  s.alpha = alpha;
  if (a.kind == "case-study") {
    if (a.plan.empty()) throw ConfigError("--plan is required for case-study");
    s.plan_path = a.plan;
    for (const auto& w : a.weather) {
      auto eq = w.find('=');
      if (eq == std::string::npos) throw ConfigError("--weather expects STATION=FILE");
      s.station_weather[w.substr(0, eq)] = w.substr(eq + 1);
    }
  } else if (a.kind == "synthetic-case-study") {
    // Stand-in inputs when no measured plan or weather is at hand.
    fs::create_directories(out);
    std::vector<StationPasses> stations;
    std::stringstream ss(a.stations);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto colon = item.find(':');
      StationPasses sp{item.substr(0, colon), 4.0};
      if (colon != std::string::npos) sp.passes_per_day = parse_list(item.substr(colon + 1)).at(0);
      stations.push_back(sp);
    }
    if (stations.empty()) throw ConfigError("--stations is empty");
    constexpr std::int64_t kStart = 1704067200;  // 2024-01-01T00:00:00Z
    auto plan = synthetic_pass_plan(stations, kStart, a.days, derive_seed(seed, 1));
    s.plan_path = out / "plan.json";
    save_plan(s.plan_path, plan);
    const auto hours = static_cast<std::size_t>(a.days * 24.0) + 2;
    for (std::size_t k = 0; k < stations.size(); ++k) {
      CloudClimate climate;
      climate.offset = a.cloud_offset + 0.3 * static_cast<double>(k);
      auto trace = synthetic_weather_trace(stations[k].station, kStart, hours, climate,
                                           derive_seed(seed, 100 + k));
      auto csv = out / (stations[k].station + ".csv");
      write_weather_csv(csv, trace);
      s.station_weather[stations[k].station] = csv;
    }
  } else {
    throw ConfigError("--kind must be synthetic, case-study or synthetic-case-study");
  }
  auto r = gen_scenario(s, out);
  std::cout << r.scenario_path.string() << '\n';
  return 0;
}

struct TrainArgs {
  std::string config;
  std::string range;
  std::string edges = "0.33,0.66,1.0";
  std::size_t episodes = 5000;
  bool no_early_stop = false;
  std::string reward_form = "efficiency";
  bool verbose = false;
};

int run_train(const TrainArgs& a, const Globals& g) {
  auto c = load_with_overrides(a.config, g);
  const fs::path out = require_out(g, "train");
  TrainConfig tc;
  tc.episodes = a.episodes;
  tc.alpha = c.alpha;
  tc.encoding = encoding_for(c);
  tc.verbose = a.verbose;
  if (a.no_early_stop) tc.early_stop_window = 0;
  if (a.reward_form == "efficiency")
    tc.episode_reward_form = EpisodeRewardForm::Efficiency;
  else if (a.reward_form == "utilized-time")
    tc.episode_reward_form = EpisodeRewardForm::UtilizedTime;
  else
    throw ConfigError("--reward-form must be efficiency or utilized-time");
  std::vector<VolumeRange> ranges;
  if (!a.range.empty()) {
    auto r = parse_list(a.range);
    if (r.size() != 2) throw ConfigError("--range needs lo,hi");
    ranges.push_back({r[0], r[1]});
  } else {
    ranges = ranges_from_edges(parse_list(a.edges));
  }
  AgentBank bank;
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    std::cerr << "training agent " << k << " on (" << ranges[k].lower << ", " << ranges[k].upper
              << "]\n";
    bank.agents.push_back(train_agent(training_factory(c), ranges[k], tc, derive_seed(c.seed, 1000 + k)));
    const auto& st = bank.agents.back().stats;
    std::cerr << "  " << st.episodes_run << " episodes, " << st.gradient_steps
              << " gradient steps, final median z " << st.final_median_objective << '\n';
  }
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  if (a.range.empty()) {
    save_bank(out, bank);
  } else {
    write_json_file(out, agent_to_json(bank.agents.front()));
  }
  std::cout << out.string() << '\n';
  return 0;
}

struct CalibrateArgs {
  std::string config;
  std::size_t episodes = 1000;
  std::string edges = "0.33,0.66,1.0";
  std::string candidates = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
};

int run_calibrate(const CalibrateArgs& a, const Globals& g) {
  auto c = load_with_overrides(a.config, g);
  std::vector<EpisodeInstance> training;
  for (std::size_t e = 0; e < a.episodes; ++e) training.push_back(build_episode(c, episode_seed(c, e)));
  auto policy = calibrate_multi_threshold(training, parse_list(a.candidates), parse_list(a.edges), c.alpha);
  auto j = multi_threshold_to_json(policy);
  if (g.out.empty())
    std::cout << j.dump(2) << '\n';
  else
    write_json_file(g.out, j);
  for (const auto& b : policy.bands)
    std::cerr << "band <= " << b.volume_fraction_upper << ": nu = " << b.threshold << '\n';
  return 0;
}

struct EvalArgs {
  std::string config;
  std::optional<std::size_t> episodes;
  std::string trace_dir;
};

int run_eval(const EvalArgs& a, const Globals& g) {
  auto c = load_with_overrides(a.config, g);
  if (a.episodes) c.episodes = *a.episodes;
  const auto format = parse_format(g.format);
  auto table = run_experiment(c);
  if (g.out.empty()) {
    if (format == ResultFormat::Csv)
      write_results_csv(std::cout, table);
    else
      write_results_jsonl(std::cout, table);
  } else {
    export_results(table, g.out, format);
  }
  if (!a.trace_dir.empty()) {
    fs::create_directories(a.trace_dir);
    for (std::size_t e = 0; e < c.episodes; ++e) {
      auto ev = evaluate_episode(c, e);
      for (std::size_t p = 0; p < c.policies.size(); ++p) {
        std::ofstream out(fs::path(a.trace_dir) /
                          (c.policies[p].name + "_" + std::to_string(e) + ".jsonl"));
        write_episode_trace(out, ev.rollouts[p].steps, ev.rollouts[p].metrics);
      }
    }
  }
  print_summary(std::cerr, aggregate(table));
  return 0;
}

struct OracleArgs {
  std::string config;
  std::size_t episode = 0;
};

int run_oracle(const OracleArgs& a, const Globals& g) {
  auto c = load_with_overrides(a.config, g);
  auto ep = build_episode(c, episode_seed(c, a.episode));
  auto best = oracle_search(ep, c.alpha);
  std::cout << "actions ";
  for (bool b : best.actions) std::cout << (b ? 1 : 0);
  std::cout << "\nobjective " << format_double(best.achieved.objective) << "\ndelivery_ratio "
            << format_double(best.achieved.delivery_ratio) << "\nenergy_efficiency "
            << format_double(best.achieved.energy_efficiency) << '\n';
  if (!g.out.empty()) {
    std::ofstream out(g.out);
    if (!out) throw RuntimeError("cannot write " + g.out);
    write_episode_trace(out, best.steps, best.achieved);
  }
  return 0;
}

struct ReportArgs {
  std::string in;
};

int run_report(const ReportArgs& a, const Globals& g) {
  auto summary = aggregate(load_results(a.in));
  const auto format = parse_format(g.format);
  std::ofstream file;
  if (!g.out.empty()) {
    file.open(g.out);
    if (!file) throw RuntimeError("cannot write " + g.out);
  }
  std::ostream& out = g.out.empty() ? std::cout : file;
  if (format == ResultFormat::Csv)
    write_summary_csv(out, summary);
  else
    write_summary_jsonl(out, summary);
  if (!g.out.empty()) print_summary(std::cerr, summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weather-adaptive contact selection for satellite optical downlinks"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  double alpha = kDefaultAlpha;
  auto* seed_opt = app.add_option("--seed", seed, "Base seed (overrides config)");
  auto* alpha_opt = app.add_option("--alpha", alpha, "Objective weight on delivery ratio");
  app.add_option("--out", g.out, "Output path");
  app.add_option("--format", g.format, "Result format: csv or jsonl")
      ->check(CLI::IsMember({"csv", "jsonl"}));

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-scenario", "Write plan and scenario files");
  gen_cmd->add_option("--kind", gen.kind, "synthetic | case-study | synthetic-case-study");
  gen_cmd->add_option("--contacts", gen.contacts, "Synthetic: number of contacts");
  gen_cmd->add_option("--slots", gen.slots, "Synthetic: slots per contact");
  gen_cmd->add_option("--volume-fraction", gen.volume_fraction, "Synthetic: Omega0 / V");
  gen_cmd->add_option("--sigma-fraction", gen.sigma_fraction, "Synthetic: Gaussian sd / length");
  gen_cmd->add_option("--plan", gen.plan, "Case study: contact-plan JSON");
  gen_cmd->add_option("--weather", gen.weather, "Case study: STATION=CSV (repeatable)");
  gen_cmd->add_option("--volume-range", gen.volume_range, "Case study: lo,hi fraction of V");
  gen_cmd->add_option("--window-days", gen.window_days, "Case study: episode window length");
  gen_cmd->add_option("--horizon", gen.horizon, "Case study: max contacts per episode");
  gen_cmd->add_option("--stations", gen.stations, "Synthetic case study: name:passes_per_day,...");
  gen_cmd->add_option("--days", gen.days, "Synthetic case study: plan length in days");
  gen_cmd->add_option("--cloud-offset", gen.cloud_offset, "Synthetic case study: climate shift");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train one DQN agent or a full agent bank");
  train_cmd->add_option("--config", train.config)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--range", train.range, "Single agent volume range lo,hi");
  train_cmd->add_option("--edges", train.edges, "Bank range upper edges");
  train_cmd->add_option("--episodes", train.episodes, "Training episodes per agent");
  train_cmd->add_flag("--no-early-stop", train.no_early_stop);
  train_cmd->add_option("--reward-form", train.reward_form, "efficiency | utilized-time");
  train_cmd->add_flag("-v,--verbose", train.verbose);

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Fit a multi-threshold policy");
  cal_cmd->add_option("--config", cal.config)->required()->check(CLI::ExistingFile);
  cal_cmd->add_option("--episodes", cal.episodes, "Calibration episodes");
  cal_cmd->add_option("--edges", cal.edges, "Band upper edges");
  cal_cmd->add_option("--candidates", cal.candidates, "Candidate thresholds");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Paired Monte-Carlo evaluation of policies");
  eval_cmd->add_option("--config", ev.config)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--episodes", ev.episodes, "Override episode count");
  eval_cmd->add_option("--trace-dir", ev.trace_dir, "Write per-episode JSONL traces here");

  OracleArgs orc;
  auto* oracle_cmd = app.add_subcommand("oracle", "Brute-force best action vector for one episode");
  oracle_cmd->add_option("--config", orc.config)->required()->check(CLI::ExistingFile);
  oracle_cmd->add_option("--episode", orc.episode, "Episode index");

  ReportArgs rep;
  auto* report_cmd = app.add_subcommand("report", "Summarize a result file per policy");
  report_cmd->add_option("--in", rep.in)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (seed_opt->count()) g.seed = seed;
  if (alpha_opt->count()) g.alpha = alpha;

  try {
    if (*gen_cmd) return run_gen(gen, g);
    if (*train_cmd) return run_train(train, g);
    if (*cal_cmd) return run_calibrate(cal, g);
    if (*eval_cmd) return run_eval(ev, g);
    if (*oracle_cmd) return run_oracle(orc, g);
    if (*report_cmd) return run_report(rep, g);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
