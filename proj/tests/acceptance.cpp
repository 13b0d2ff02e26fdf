// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Seeds are fixed constants.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include "fsodl/fsodl.hpp"
#include "test_support.hpp"

using namespace fsodl;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << id << " (" << name << "): " << detail
            << std::endl;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

const PolicySummary& summary_of(const std::vector<PolicySummary>& s, const std::string& name) {
  for (const auto& p : s)
    if (p.policy == name) return p;
  throw std::runtime_error("no policy " + name);
}

// ---- 1 ----------------------------------------------------------------------

void reward_signs() {
  auto t0 = Clock::now();
  long cases = 0, bad = 0;
  for (double beta : {30.0, 300.0}) {
    RewardParams p{100.0, beta};
    for (Slots omega = 0; omega <= 100; ++omega)
      for (Slots eps = 0; eps <= 100; ++eps)
        for (Slots zeta = 1; zeta <= 100; ++zeta)
          for (int action : {0, 1}) {
            ++cases;
            const double r = step_reward(omega, eps, zeta, p, action);
            const bool pos = action == 1 && omega >= 1;
            const bool neg = action == 1 && omega == 0 && eps >= 1;
            const bool zero = action == 0;
            if ((r > 0) != pos || (r < 0) != neg || (zero && r != 0)) ++bad;
          }
  }
  const double t = seconds_since(t0);
  report(1, "reward signs", bad == 0 && t < 10.0,
         std::to_string(bad) + " failures over " + std::to_string(cases) + " cases in " + fmt(t, 3) + " s");
}

// ---- 2 ----------------------------------------------------------------------

void conservation() {
  Rng rng(20240101);
  long bad = 0, steps = 0;
  const int episodes = 10000;
  for (int e = 0; e < episodes; ++e) {
    auto kind = e % 2 ? AvailabilityKind::BernoulliSampled : AvailabilityKind::GaussianVolume;
    auto ep = testkit::random_instance(1 + rng() % 20, rng, 40, kind);
    for (std::size_t i = 0; i < ep.plan.size(); ++i) {
      const auto d = ep.realization[i].delta_slots;
      if (d < 0 || d > ep.plan.contacts[i].length_slots) ++bad;
    }
    Environment env;
    env.reset(ep);
    Slots delivered = 0;
    while (!env.terminal()) {
      const std::size_t m = env.cursor();
      const Slots omega = env.remaining_volume();
      const int a = static_cast<int>(rng() % 2);
      auto r = env.step(a);
      ++steps;
      // attempted, counted directly from the availability draw
      Slots attempted = 0;
      if (a == 1) {
        const auto& av = ep.realization[m];
        if (av.per_slot_mask) {
          Slots got = 0;
          for (bool ok : *av.per_slot_mask) {
            if (got == omega) break;
            ++attempted;
            got += ok;
          }
        } else {
          attempted = std::min(omega, ep.plan.contacts[m].length_slots);
        }
      }
      if (r.outcome.delivered + r.outcome.excess_power != attempted) ++bad;
      delivered += r.outcome.delivered;
    }
    if (ep.initial_volume != delivered + env.remaining_volume()) ++bad;
  }
  report(2, "conservation", bad == 0,
         std::to_string(bad) + " failures over " + std::to_string(episodes) + " episodes, " +
             std::to_string(steps) + " steps");
}

// ---- 3 ----------------------------------------------------------------------

void availability_statistics() {
  Rng rng(303);
  const int draws = 100000;
  std::vector<double> counts(31, 0.0);
  double sum = 0;
  Contact c{0, 0, 30, "gs"};
  for (int i = 0; i < draws; ++i) {
    auto d = sample_availability_bernoulli(c, 0.4, rng).delta_slots;
    counts[static_cast<std::size_t>(d)] += 1;
    sum += static_cast<double>(d);
  }
  const double mean = sum / draws;
  boost::math::binomial_distribution<double> b(30, 0.6);
  std::vector<double> obs, expct;
  double o = 0, e = 0;
  for (int k = 0; k <= 30; ++k) {
    o += counts[static_cast<std::size_t>(k)];
    e += draws * boost::math::pdf(b, k);
    if (e >= 5) {
      obs.push_back(o);
      expct.push_back(e);
      o = e = 0;
    }
  }
  obs.back() += o;
  expct.back() += e;
  double stat = 0;
  for (std::size_t i = 0; i < obs.size(); ++i) stat += (obs[i] - expct[i]) * (obs[i] - expct[i]) / expct[i];
  boost::math::chi_squared_distribution<double> chi(static_cast<double>(obs.size() - 1));
  const double p = boost::math::cdf(boost::math::complement(chi, stat));

  long bad = 0;
  for (int k = 0; k <= 10; ++k)
    for (Slots len = 1; len <= 60; ++len) {
      const double lambda = k / 10.0;
      const auto expected = static_cast<Slots>(std::floor((1.0 - lambda) * static_cast<double>(len) + 0.5));
      if (sample_availability_gaussian({0, 0, len, "gs"}, lambda, 0.0, rng).delta_slots != expected) ++bad;
    }
  report(3, "availability statistics", std::abs(mean - 18.0) <= 0.1 && p > 0.01 && bad == 0,
         "Bernoulli mean " + fmt(mean, 5) + ", chi-square p " + fmt(p, 3) + " (" +
             std::to_string(obs.size()) + " bins); Gaussian sigma=0 mismatches " + std::to_string(bad));
}

// ---- 4 ----------------------------------------------------------------------

void threshold_equivalences() {
  long identity_bad = 0, monotone_bad = 0;
  std::size_t paired = 0;
  for (auto kind : {AvailabilityKind::GaussianVolume, AvailabilityKind::BernoulliSampled}) {
    ExperimentConfig c;
    c.plan = synthetic_equal_plan(10, 30);
    c.availability.kind = kind;
    c.volume.kind = VolumeSpec::Kind::Range;
    c.episodes = 1000;
    c.seed = kind == AvailabilityKind::GaussianVolume ? 41 : 42;
    c.policies = {use_all_spec()};
    for (double nu : default_threshold_grid()) c.policies.push_back(threshold_spec(nu));
    for (std::size_t e = 0; e < c.episodes; ++e) {
      auto ev = evaluate_episode(c, e);
      ++paired;
      const auto& all = ev.rollouts[0];
      const auto& full = ev.rollouts.back();  // nu = 1.0
      if (all.steps != full.steps || all.metrics.objective != full.metrics.objective) ++identity_bad;
      for (std::size_t k = 2; k < ev.rollouts.size(); ++k)
        if (ev.rollouts[k].metrics.delivered_total < ev.rollouts[k - 1].metrics.delivered_total)
          ++monotone_bad;
    }
  }
  report(4, "threshold equivalences", identity_bad == 0 && monotone_bad == 0,
         std::to_string(paired) + " paired episodes; nu=1 vs use-all mismatches " +
             std::to_string(identity_bad) + ", monotonicity violations " + std::to_string(monotone_bad));
}

// ---- 5 ----------------------------------------------------------------------

void oracle_dominance() {
  auto t0 = Clock::now();
  constexpr std::size_t kMaxN = 12;
  EpisodeFactory factory = [](std::uint64_t seed, const VolumeRange& range) {
    Rng rng(seed);
    auto ep = testkit::random_instance(1 + rng() % kMaxN, rng);
    const Slots v = total_capacity(ep.plan);
    const double f = range.lower + (range.upper - range.lower) * uniform_open01(rng);
    ep.initial_volume = std::clamp<Slots>(std::llround(f * static_cast<double>(v)), 1, v);
    return ep;
  };
  TrainConfig cfg;
  cfg.episodes = 2000;
  cfg.encoding.max_contacts = kMaxN;
  cfg.encoding.length_scale = 30;
  auto bank = std::make_shared<const AgentBank>(
      train_bank(factory, ranges_from_edges(default_band_edges()), cfg, 555));
  std::vector<PolicySpec> specs{use_all_spec(), dqn_spec(bank),
                                multi_threshold_spec({{{0.33, 0.6}, {0.66, 0.8}, {1.0, 0.9}}})};
  for (double nu : default_threshold_grid()) specs.push_back(threshold_spec(nu));

  Rng rng(5005);
  long bad = 0, comparisons = 0;
  const int instances = 500;
  for (int i = 0; i < instances; ++i) {
    auto ep = std::make_shared<const EpisodeInstance>(testkit::random_instance(1 + rng() % kMaxN, rng));
    const double best = oracle_search(*ep).achieved.objective;
    for (const auto& s : specs) {
      auto r = rollout(ep, make_policy(s, *ep, kDefaultAlpha), kDefaultAlpha, rollout_horizon(s, *ep));
      ++comparisons;
      if (r.metrics.objective > best) ++bad;
    }
  }
  const double t = seconds_since(t0);
  report(5, "oracle dominance", bad == 0 && t < 300.0,
         std::to_string(bad) + " violations over " + std::to_string(comparisons) + " comparisons on " +
             std::to_string(instances) + " instances (n <= 12), " + fmt(t, 3) + " s incl. DQN training");
}

// ---- 6 ----------------------------------------------------------------------

void gradient_check() {
  Rng rng(606);
  double worst = 0.0;
  long params = 0;
  for (int net_i = 0; net_i < 50; ++net_i) {
    std::vector<int> sizes{1 + static_cast<int>(rng() % 8)};
    const int hidden = 1 + static_cast<int>(rng() % 3);
    for (int h = 0; h < hidden; ++h) sizes.push_back(2 + static_cast<int>(rng() % 8));
    sizes.push_back(2);
    Mlp net(sizes, rng);
    for (auto& l : net.layers())
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = uniform01(rng) - 0.5;
    const Eigen::Index batch = 4;
    Eigen::MatrixXd x(sizes.front(), batch), target(2, batch);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = 2 * uniform01(rng) - 1;
    for (Eigen::Index i = 0; i < target.size(); ++i) target(i) = 2 * uniform01(rng) - 1;
    // mean squared error over the batch
    auto loss = [&](const Mlp& m) { return (m.forward(x) - target).squaredNorm() / static_cast<double>(batch); };
    Mlp::Tape tape;
    Eigen::MatrixXd out = net.forward(x, &tape);
    auto g = net.backward(tape, 2.0 * (out - target) / static_cast<double>(batch));
    const double h = 1e-5;
    for (std::size_t li = 0; li < net.layers().size(); ++li) {
      auto& layer = net.layers()[li];
      auto check = [&](double& p, double analytic) {
        const double saved = p;
        p = saved + h;
        const double up = loss(net);
        p = saved - h;
        const double down = loss(net);
        p = saved;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-3});
        worst = std::max(worst, std::abs(numeric - analytic) / scale);
        ++params;
      };
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) check(layer.weight(r, c), g.layers[li].weight(r, c));
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r) check(layer.bias(r), g.layers[li].bias(r));
    }
  }
  report(6, "gradient correctness", worst < 1e-4,
         "worst relative error " + fmt(worst, 3) + " over " + std::to_string(params) +
             " parameters in 50 networks");
}

// ---- 7, 8 -------------------------------------------------------------------

ExperimentConfig equal_contacts_config(double fraction, std::uint64_t seed) {
  ExperimentConfig c;
  c.plan = synthetic_equal_plan(10, 30);
  c.weather = UniformSyntheticWeather{};
  c.availability.kind = AvailabilityKind::GaussianVolume;
  c.volume.kind = VolumeSpec::Kind::Fraction;
  c.volume.fraction = fraction;
  c.episodes = 500;
  c.seed = seed;
  return c;
}

void equal_contact_replication() {
  auto t0 = Clock::now();
  auto train_cfg = equal_contacts_config(0.1, 0);
  TrainConfig cfg;
  cfg.encoding = encoding_for(train_cfg);
  auto bank = std::make_shared<const AgentBank>(
      train_bank(training_factory(train_cfg), ranges_from_edges(default_band_edges()), cfg, 2024));
  const double train_s = seconds_since(t0);

  auto low = equal_contacts_config(0.1, 7007);
  low.policies = {dqn_spec(bank), threshold_spec(0.9), threshold_spec(0.8), use_all_spec(), oracle_spec()};
  auto s = aggregate(run_experiment(low));
  const double total_s = seconds_since(t0);
  const auto& dqn = summary_of(s, "dqn");
  const auto& t09 = summary_of(s, "threshold_0.9");
  const auto& t08 = summary_of(s, "threshold_0.8");
  const auto& all = summary_of(s, "use_all");
  const auto& oracle = summary_of(s, "oracle");
  const bool w_ok = dqn.w.median >= t09.w.median - 0.02;
  const bool y_ok = dqn.y.median >= all.y.median + 0.05;
  report(7, "low-volume DQN efficiency", w_ok && y_ok && total_s <= 1800.0,
         "median w dqn " + fmt(dqn.w.median) + " vs nu=0.9 " + fmt(t09.w.median) +
             (w_ok ? " (ok)" : " (short)") + "; median y dqn " + fmt(dqn.y.median) + " vs use-all " +
             fmt(all.y.median) + " + 0.05" + (y_ok ? " (ok)" : " (short)") + "; " + fmt(total_s, 3) +
             " s");
  std::cout << "      diagnostics: median y nu=0.9 " << fmt(t09.y.median) << ", nu=0.8 " << fmt(t08.y.median)
            << ", clairvoyant oracle " << fmt(oracle.y.median) << " (median w " << fmt(oracle.w.median)
            << "); y quartiles dqn " << fmt(dqn.y.q1) << "/" << fmt(dqn.y.q3) << ", use-all "
            << fmt(all.y.q1) << "/" << fmt(all.y.q3) << "; training " << fmt(train_s, 3) << " s"
            << std::endl;

  // A forecast-aware rule that stops after one partial contact when the
  // clearest contact has cover 0.1. It meets both median conditions but
  // scores lower on z than full delivery.
  std::vector<double> mix_w, mix_y, mix_z, dqn_z, oracle_z;
  auto rows = run_experiment([&] {
    auto c = low;
    c.policies = {dqn_spec(bank), oracle_spec()};
    return c;
  }());
  for (std::size_t e = 0; e < low.episodes; ++e) {
    auto ep = std::make_shared<const EpisodeInstance>(build_episode(low, episode_seed(low, e)));
    const auto& cover = ep->forecast.per_contact_cover;
    const auto imin = static_cast<std::size_t>(std::min_element(cover.begin(), cover.end()) - cover.begin());
    const double lmin = cover[imin];
    Policy mixture = [&](const Observation& o) {
      if (lmin == 0.0) return o.contact_index >= imin && o.next_cover <= 0.9 ? 1 : 0;
      if (lmin <= 0.1) return o.contact_index == imin ? 1 : 0;
      return o.next_cover <= 0.9 ? 1 : 0;
    };
    auto m = rollout(ep, mixture).metrics;
    mix_w.push_back(m.delivery_ratio);
    mix_y.push_back(m.energy_efficiency);
    mix_z.push_back(m.objective);
    dqn_z.push_back(rows.rows[2 * e].z);
    oracle_z.push_back(rows.rows[2 * e + 1].z);
  }
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  std::cout << "      diagnostics: partial-delivery rule median w " << fmt(median(mix_w)) << ", median y "
            << fmt(median(mix_y)) << "; mean z rule " << fmt(mean(mix_z)) << ", dqn " << fmt(mean(dqn_z))
            << ", oracle " << fmt(mean(oracle_z)) << std::endl;

  auto full = equal_contacts_config(1.0, 8008);
  full.policies = {dqn_spec(bank), threshold_spec(0.9)};
  auto f = aggregate(run_experiment(full));
  const double dw = summary_of(f, "dqn").w.median - summary_of(f, "threshold_0.9").w.median;
  report(8, "full-volume DQN sanity", std::abs(dw) <= 0.05,
         "median w dqn " + fmt(summary_of(f, "dqn").w.median) + " vs nu=0.9 " +
             fmt(summary_of(f, "threshold_0.9").w.median) + " (|diff| " + fmt(std::abs(dw)) + ")");
}

// ---- 9 ----------------------------------------------------------------------

ExperimentConfig station_config(const std::vector<StationPasses>& stations,
                                const std::vector<CloudClimate>& climates, std::uint64_t seed) {
  const std::int64_t start = 1704067200;  // 2024-01-01
  const double days = 120;
  ExperimentConfig c;
  c.plan = synthetic_pass_plan(stations, start, days, seed);
  HistoricalWeather h;
  for (std::size_t k = 0; k < stations.size(); ++k)
    h.traces[stations[k].station] = synthetic_weather_trace(
        stations[k].station, start, static_cast<std::size_t>(days * 24 + 2), climates[k], seed + 10 + k);
  c.weather = h;
  c.window_s = 3 * 86400;
  c.horizon = 24;
  c.availability.kind = AvailabilityKind::BernoulliSampled;
  c.volume.kind = VolumeSpec::Kind::Range;
  c.volume.lower = 0.05;
  c.volume.upper = 1.0;
  c.episodes = 500;
  c.seed = seed + 99;
  return c;
}

void generalization() {
  auto t0 = Clock::now();
  // trace A: a clear and a cloudy station; trace B: different stations and climates
  auto a = station_config({{"calgary", 3}, {"inuvik", 3}}, {{-0.3}, {0.4}}, 1);
  auto b = station_config({{"ottawa", 3}, {"calgary", 3}}, {{0.2}, {-0.3}}, 2);
  TrainConfig cfg;
  cfg.encoding = encoding_for(a);
  cfg.encoding.length_scale = 30;
  auto bank = std::make_shared<const AgentBank>(
      train_bank(training_factory(a), ranges_from_edges(default_band_edges()), cfg, 5));
  b.policies = {dqn_spec(bank), use_all_spec()};
  for (double nu : default_threshold_grid()) b.policies.push_back(threshold_spec(nu));
  auto s = aggregate(run_experiment(b));
  const PolicySummary* best = nullptr;
  for (const auto& p : s)
    if (p.policy.rfind("threshold_", 0) == 0 && (!best || p.z_median > best->z_median)) best = &p;
  const auto& dqn = summary_of(s, "dqn");
  report(9, "generalization to unseen stations", dqn.z_median >= best->z_median - 0.05,
         "median z dqn " + fmt(dqn.z_median) + " vs best fixed threshold " + best->policy + " " +
             fmt(best->z_median) + " (median y dqn " + fmt(dqn.y.median) + ", " + best->policy + " " +
             fmt(best->y.median) + "); " + fmt(seconds_since(t0), 3) + " s");
}

// ---- 10 ---------------------------------------------------------------------

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism() {
  auto dir = fs::temp_directory_path() / "fsodl_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto g = gen_scenario(SyntheticScenarioSpec{}, dir);
  auto j = read_json_file(g.scenario_path);
  j["episodes"] = 200;
  j["seed"] = 99;
  j["policies"] = nlohmann::json::parse(
      R"([{"type": "use_all"}, {"type": "threshold", "nu": 0.8}, {"type": "oracle"},
          {"type": "multi_threshold", "bands": [[0.33, 0.6], [1.0, 0.9]]}])");
  write_json_file(dir / "experiment.json", j);
  bool same = true;
  std::size_t bytes = 0;
  for (auto format : {ResultFormat::Csv, ResultFormat::Jsonl}) {
    const auto ext = format == ResultFormat::Csv ? ".csv" : ".jsonl";
    for (int run = 1; run <= 2; ++run)
      export_results(run_experiment(load_config(dir / "experiment.json")),
                     dir / ("run" + std::to_string(run) + ext), format);
    auto first = file_bytes(dir / (std::string("run1") + ext));
    same = same && !first.empty() && first == file_bytes(dir / (std::string("run2") + ext));
    bytes += first.size();
  }
  fs::remove_all(dir);
  report(10, "determinism", same,
         std::string(same ? "identical" : "different") + " result files across two runs (csv and jsonl, " +
             std::to_string(bytes) + " bytes)");
}

}  // namespace

int main() {
  try {
    reward_signs();
    conservation();
    availability_statistics();
    threshold_equivalences();
    oracle_dominance();
    gradient_check();
    equal_contact_replication();
    generalization();
    determinism();
  } catch (const std::exception& e) {
    std::cout << "FAIL  acceptance aborted: " << e.what() << std::endl;
    return 2;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
