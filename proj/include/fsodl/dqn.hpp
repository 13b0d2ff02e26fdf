#pragma once

// Double-DQN contact-selection agent: reward shaping, observation encoding,
// replay memory, training loop and the bank of volume-specialized agents.

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fsodl/mlp.hpp"
#include "fsodl/policies.hpp"
#include "fsodl/simulator.hpp"
#include "fsodl/stats.hpp"

namespace fsodl {

// ---- rewards ----------------------------------------------------------------

struct RewardParams {
  double c = 100.0;   // scaling factor
  double beta = 1.0;  // episode data volume in slots

  void validate() const {
    if (!(c > 0.0) || !(beta > 0.0)) throw ConfigError("reward parameters must be positive");
  }
};

// Delivered bundles earn (c/beta) * omega scaled down by the share of failed
// attempts; a used contact that delivers nothing costs epsilon * c / (2 beta).
inline double step_reward(Slots delivered, Slots unsuccessful, Slots contact_length,
                          const RewardParams& p, int action) {
  if (action == 0) return 0.0;
  const double k = p.c / p.beta;
  const double f1 = k * static_cast<double>(delivered);
  if (f1 > 0.0) {
    const double f2 = f1 * static_cast<double>(unsuccessful) /
                      static_cast<double>(unsuccessful + contact_length);
    return f1 - f2;
  }
  return -static_cast<double>(unsuccessful) * p.c / (2.0 * p.beta);
}

inline double step_reward(const StepOutcome& s, const RewardParams& p) {
  return step_reward(s.delivered, s.unsuccessful, s.contact_length, p, s.action);
}

// Complete delivery earns 2 * c * eta * Theta, anything short of it c * eta.
inline double episode_reward(double delivery_ratio, double utilized_time, const RewardParams& p) {
  if (delivery_ratio == 1.0) return 2.0 * p.c * delivery_ratio * utilized_time;
  return p.c * delivery_ratio;
}

enum class EpisodeRewardForm {
  UtilizedTime,  // terminal bonus proportional to Theta, as published
  Efficiency,    // Theta replaced by the episode efficiency y
};

inline double terminal_bonus(const EpisodeMetrics& m, const RewardParams& p,
                             EpisodeRewardForm form) {
  if (form == EpisodeRewardForm::UtilizedTime)
    return episode_reward(m.delivery_ratio, static_cast<double>(m.utilized_time), p);
  return episode_reward(m.delivery_ratio, m.energy_efficiency, p);
}

// ---- observation encoding ---------------------------------------------------

struct EncodingSpec {
  std::size_t max_contacts = 10;
  double length_scale = 30.0;  // contact lengths are divided by this

  std::size_t dimension() const { return 3 + 2 * max_contacts; }
};

// [lambda, Omega/V, theta/V, (cover, length/scale) per future contact...]
inline Eigen::VectorXd encode_observation(const Observation& obs, const EncodingSpec& spec) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.dimension()));
  const double v = obs.capacity > 0 ? static_cast<double>(obs.capacity) : 1.0;
  x(0) = obs.next_cover;
  x(1) = static_cast<double>(obs.remaining_volume) / v;
  x(2) = static_cast<double>(obs.remaining_capacity) / v;
  for (std::size_t k = 0; k < obs.future_info.size(); ++k) {
    const auto& f = obs.future_info[k];
    if (k >= spec.max_contacts) {
      if (f.length_slots != 0 || f.cover != 0.0)
        throw ConfigError("plan has more remaining contacts than the encoder's " +
                          std::to_string(spec.max_contacts));
      continue;
    }
    x(static_cast<Eigen::Index>(3 + 2 * k)) = f.cover;
    x(static_cast<Eigen::Index>(4 + 2 * k)) = static_cast<double>(f.length_slots) / spec.length_scale;
  }
  return x;
}

inline int greedy_action(const Eigen::VectorXd& q) { return q(1) >= q(0) ? 1 : 0; }

inline int select_action(const Mlp& net, const Eigen::VectorXd& encoded, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must be in [0,1]");
  if (epsilon > 0.0 && uniform01(rng) < epsilon) return uniform01(rng) < 0.5 ? 1 : 0;
  return greedy_action(net.forward(encoded));
}

// ---- replay memory ----------------------------------------------------------

struct Transition {
  Eigen::VectorXd obs;
  int action = 0;
  double reward = 0.0;
  Eigen::VectorXd next_obs;
  bool terminal = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10000) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay capacity must be positive");
    ring_.reserve(capacity);
  }

  void push(Transition t) {
    if (ring_.size() < capacity_) {
      ring_.push_back(std::move(t));
    } else {
      ring_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return ring_.size(); }
  std::size_t capacity() const { return capacity_; }

  // i = 0 is the oldest stored transition.
  const Transition& at(std::size_t i) const { return ring_[(head_ + i) % ring_.size()]; }

  // Distinct indices, uniformly chosen (Floyd's algorithm).
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const {
    const std::size_t n = ring_.size();
    if (batch > n) throw ConfigError("minibatch larger than replay contents");
    std::vector<std::size_t> out;
    std::unordered_set<std::size_t> seen;
    for (std::size_t j = n - batch; j < n; ++j) {
      auto t = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(j + 1));
      if (t > j) t = j;
      if (!seen.insert(t).second) {
        seen.insert(j);
        out.push_back(j);
      } else {
        out.push_back(t);
      }
    }
    return out;
  }

  const Transition& operator[](std::size_t raw) const { return ring_[raw]; }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Transition> ring_;
};

// ---- double DQN -------------------------------------------------------------

// r + gamma * Q_target(s', argmax_a Q_online(s', a)); no bootstrap at terminal.
inline double double_dqn_target(const Eigen::Vector2d& q_online_next,
                                const Eigen::Vector2d& q_target_next, double reward,
                                bool terminal, double gamma) {
  if (terminal) return reward;
  const int a = greedy_action(q_online_next);
  return reward + gamma * q_target_next(a);
}

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t buffer_size = 10000;
  double discount = 0.99;
  double epsilon_start = 1.0;
  double epsilon_decay = 0.005;
  double epsilon_min = 0.01;
  std::size_t minibatch = 64;
  std::size_t target_update_frequency = 1;
  double l2 = 1e-4;
  double target_smoothing = 1e-3;
  bool double_dqn = true;
  std::vector<int> hidden = {64, 64};
  std::size_t episodes = 5000;
  std::size_t early_stop_window = 200;
  double early_stop_tolerance = 1e-3;
  double grad_clip_norm = 10.0;
  double reward_scale = 100.0;  // c
  double alpha = kDefaultAlpha;
  EpisodeRewardForm episode_reward_form = EpisodeRewardForm::Efficiency;
  EncodingSpec encoding;
  bool verbose = false;
};

struct VolumeRange {
  double lower = 0.0;  // exclusive
  double upper = 1.0;  // inclusive

  bool contains(double f) const { return f > lower && f <= upper; }
};

// Builds one training episode whose Omega0/V is drawn from the range.
using EpisodeFactory = std::function<EpisodeInstance(std::uint64_t seed, const VolumeRange&)>;

struct TrainStats {
  std::size_t episodes_run = 0;
  std::size_t gradient_steps = 0;
  double final_epsilon = 1.0;
  double final_median_objective = 0.0;
  bool early_stopped = false;
};

struct TrainedAgent {
  Mlp net;
  EncodingSpec encoding;
  VolumeRange range;
  Slots capacity_hint = 0;  // V seen during training, informational
  TrainStats stats;
};

class DqnLearner {
 public:
  DqnLearner(Mlp online, const TrainConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), online_(std::move(online)), target_(online_), rng_(seed),
        optimizer_(cfg.learning_rate), buffer_(cfg.buffer_size) {}

  const Mlp& online() const { return online_; }
  const Mlp& target() const { return target_; }
  ReplayBuffer& buffer() { return buffer_; }
  Rng& rng() { return rng_; }
  std::size_t steps() const { return steps_; }

  // One minibatch update; returns the loss before the update.
  double update() {
    const std::size_t b = cfg_.minibatch;
    auto idx = buffer_.sample_indices(b, rng_);
    const auto d = buffer_[idx[0]].obs.size();
    Eigen::MatrixXd x(d, static_cast<Eigen::Index>(b)), xn(d, static_cast<Eigen::Index>(b));
    for (std::size_t j = 0; j < b; ++j) {
      x.col(static_cast<Eigen::Index>(j)) = buffer_[idx[j]].obs;
      xn.col(static_cast<Eigen::Index>(j)) = buffer_[idx[j]].next_obs;
    }
    Mlp::Tape tape;
    Eigen::MatrixXd q = online_.forward(x, &tape);
    Eigen::MatrixXd qn_online = online_.forward(xn);
    Eigen::MatrixXd qn_target = target_.forward(xn);
    Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(2, static_cast<Eigen::Index>(b));
    double loss = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      const auto& t = buffer_[idx[j]];
      double y;
      if (cfg_.double_dqn)
        y = double_dqn_target(qn_online.col(col), qn_target.col(col), t.reward, t.terminal,
                              cfg_.discount);
      else
        y = t.terminal ? t.reward : t.reward + cfg_.discount * qn_target.col(col).maxCoeff();
      const double err = q(t.action, col) - y;
      loss += err * err;
      d_out(t.action, col) = 2.0 * err / static_cast<double>(b);
    }
    loss = loss / static_cast<double>(b) + online_.l2_penalty(cfg_.l2);
    if (!std::isfinite(loss))
      throw RuntimeError("DQN loss became non-finite after " + std::to_string(steps_) +
                         " gradient steps");
    auto g = online_.backward(tape, d_out);
    online_.add_l2(g, cfg_.l2);
    const double norm = std::sqrt(g.squared_norm());
    if (cfg_.grad_clip_norm > 0 && norm > cfg_.grad_clip_norm) g.scale(cfg_.grad_clip_norm / norm);
    optimizer_.step(online_, g);
    ++steps_;
    if (cfg_.target_update_frequency > 0 && steps_ % cfg_.target_update_frequency == 0)
      target_.soft_update_from(online_, cfg_.target_smoothing);
    return loss;
  }

 private:
  TrainConfig cfg_;
  Mlp online_;
  Mlp target_;
  Rng rng_;
  Adam optimizer_;
  ReplayBuffer buffer_;
  std::size_t steps_ = 0;
};

inline TrainedAgent train_agent(const EpisodeFactory& factory, const VolumeRange& range,
                                const TrainConfig& cfg, std::uint64_t seed) {
  if (!(range.lower >= 0.0 && range.upper <= 1.0 && range.lower < range.upper))
    throw ConfigError("volume range must satisfy 0 <= lower < upper <= 1");
  if (cfg.minibatch == 0 || cfg.minibatch > cfg.buffer_size)
    throw ConfigError("minibatch must be in [1, buffer size]");
  ScopedFlushDenormals ftz;
  Rng init_rng(derive_seed(seed, 0));
  std::vector<int> sizes{static_cast<int>(cfg.encoding.dimension())};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(2);
  DqnLearner learner(Mlp(sizes, init_rng), cfg, derive_seed(seed, 1));

  TrainedAgent agent;
  agent.encoding = cfg.encoding;
  agent.range = range;
  double epsilon = cfg.epsilon_start;
  std::vector<double> objectives;
  std::optional<double> previous_median;
  const Eigen::VectorXd terminal_obs = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(cfg.encoding.dimension()));

  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    auto episode = std::make_shared<const EpisodeInstance>(factory(derive_seed(seed, ep + 2), range));
    agent.capacity_hint = std::max(agent.capacity_hint, total_capacity(episode->plan));
    Environment env(cfg.encoding.max_contacts);
    auto obs = env.reset(episode);
    if (env.terminal()) continue;
    RewardParams rp{cfg.reward_scale,
                    static_cast<double>(std::max<Slots>(episode->initial_volume, 1))};
    Eigen::VectorXd x = encode_observation(obs, cfg.encoding);
    while (!env.terminal()) {
      const int a = select_action(learner.online(), x, epsilon, learner.rng());
      auto res = env.step(a);
      double r = step_reward(res.outcome, rp);
      Transition t{x, a, 0.0, terminal_obs, env.terminal()};
      if (env.terminal()) {
        r += terminal_bonus(env.metrics(cfg.alpha), rp, cfg.episode_reward_form);
      } else {
        t.next_obs = encode_observation(*res.next, cfg.encoding);
      }
      t.reward = r;
      x = t.next_obs;
      learner.buffer().push(std::move(t));
      if (learner.buffer().size() >= cfg.minibatch) learner.update();
    }
    objectives.push_back(env.metrics(cfg.alpha).objective);
    epsilon = std::max(cfg.epsilon_min, epsilon * (1.0 - cfg.epsilon_decay));
    agent.stats.episodes_run = ep + 1;

    const std::size_t w = cfg.early_stop_window;
    if (w > 0 && objectives.size() % w == 0) {
      double med = median(std::vector<double>(objectives.end() - static_cast<std::ptrdiff_t>(w),
                                              objectives.end()));
      agent.stats.final_median_objective = med;
      if (cfg.verbose)
        std::cerr << "  episode " << ep + 1 << " epsilon " << epsilon << " median z " << med
                  << '\n';
      if (epsilon <= cfg.epsilon_min && previous_median &&
          std::abs(med - *previous_median) <= cfg.early_stop_tolerance * std::abs(*previous_median)) {
        agent.stats.early_stopped = true;
        break;
      }
      // the plateau test only counts once exploration has bottomed out
      if (epsilon <= cfg.epsilon_min) previous_median = med;
    }
  }
  if (!learner.online().finite()) throw RuntimeError("DQN weights became non-finite");
  agent.stats.gradient_steps = learner.steps();
  agent.stats.final_epsilon = epsilon;
  agent.net = learner.online();
  return agent;
}

// ---- agent bank -------------------------------------------------------------

struct AgentBank {
  std::vector<TrainedAgent> agents;

  void validate() const {
    if (agents.empty()) throw ConfigError("agent bank is empty");
    double prev = 0.0;
    for (const auto& a : agents) {
      if (a.range.lower != prev)
        throw ConfigError("agent volume ranges must partition (0,1] in order");
      prev = a.range.upper;
    }
    if (prev != 1.0) throw ConfigError("agent volume ranges must end at 1.0");
  }
};

inline std::vector<VolumeRange> ranges_from_edges(const std::vector<double>& edges) {
  std::vector<VolumeRange> out;
  double prev = 0.0;
  for (double e : edges) {
    out.push_back({prev, e});
    prev = e;
  }
  return out;
}

inline const TrainedAgent& bank_select(const AgentBank& bank, Slots initial_volume,
                                       Slots capacity) {
  if (capacity <= 0) throw ConfigError("capacity must be positive");
  const double f = static_cast<double>(initial_volume) / static_cast<double>(capacity);
  for (const auto& a : bank.agents)
    if (a.range.contains(f)) return a;
  throw ConfigError("no agent covers data volume fraction " + std::to_string(f));
}

inline AgentBank train_bank(const EpisodeFactory& factory, const std::vector<VolumeRange>& ranges,
                            const TrainConfig& cfg, std::uint64_t seed) {
  AgentBank bank;
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    if (cfg.verbose)
      std::cerr << "training agent " << k << " on (" << ranges[k].lower << ", "
                << ranges[k].upper << "]\n";
    bank.agents.push_back(train_agent(factory, ranges[k], cfg, derive_seed(seed, 1000 + k)));
  }
  bank.validate();
  return bank;
}

// Greedy policy of one trained network.
struct DqnPolicy {
  std::shared_ptr<const TrainedAgent> agent;

  int operator()(const Observation& o) const {
    return greedy_action(agent->net.forward(encode_observation(o, agent->encoding)));
  }
};

// ---- model files ------------------------------------------------------------

inline constexpr int kModelVersion = 1;

inline nlohmann::json agent_to_json(const TrainedAgent& a) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : a.net.layers()) {
    nlohmann::json w = nlohmann::json::array();
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(l.weight.cols()));
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) row[static_cast<std::size_t>(c)] = l.weight(r, c);
      w.push_back(row);
    }
    layers.push_back({{"weight", w},
                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return {{"format", "fsodl-qnetwork"},
          {"version", kModelVersion},
          {"layer_sizes", a.net.sizes()},
          {"activation", "relu"},
          {"layers", layers},
          {"normalization",
           {{"capacity", a.capacity_hint},
            {"max_length", a.encoding.length_scale},
            {"max_contacts", a.encoding.max_contacts}}},
          {"volume_range", {a.range.lower, a.range.upper}},
          {"training",
           {{"episodes", a.stats.episodes_run},
            {"gradient_steps", a.stats.gradient_steps},
            {"early_stopped", a.stats.early_stopped}}}};
}

inline TrainedAgent agent_from_json(const nlohmann::json& j) {
  TrainedAgent a;
  try {
    if (j.at("format") != "fsodl-qnetwork") throw ConfigError("not a Q-network model file");
    if (j.at("version").get<int>() != kModelVersion)
      throw ConfigError("unsupported model version " + j.at("version").dump());
    std::vector<DenseLayer> layers;
    for (const auto& jl : j.at("layers")) {
      auto rows = jl.at("weight").get<std::vector<std::vector<double>>>();
      auto bias = jl.at("bias").get<std::vector<double>>();
      if (rows.empty()) throw ConfigError("empty weight matrix");
      DenseLayer l{Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()),
                                   static_cast<Eigen::Index>(rows[0].size())),
                   Eigen::Map<Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()))};
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) throw ConfigError("ragged weight matrix");
        for (std::size_t c = 0; c < rows[r].size(); ++c)
          l.weight(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
      layers.push_back(std::move(l));
    }
    a.net = Mlp(std::move(layers));
    const auto& norm = j.at("normalization");
    a.capacity_hint = norm.at("capacity").get<Slots>();
    a.encoding.length_scale = norm.at("max_length").get<double>();
    a.encoding.max_contacts = norm.at("max_contacts").get<std::size_t>();
    auto range = j.at("volume_range").get<std::vector<double>>();
    if (range.size() != 2) throw ConfigError("volume_range needs two entries");
    a.range = {range[0], range[1]};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  }
  if (a.net.input_size() != static_cast<int>(a.encoding.dimension()) || a.net.output_size() != 2)
    throw ConfigError("model dimensions do not match its normalization block");
  if (!a.net.finite()) throw ConfigError("model has non-finite parameters");
  return a;
}

// Writes one model file per agent next to the manifest.
inline void save_bank(const std::filesystem::path& manifest, const AgentBank& bank) {
  nlohmann::json m{{"format", "fsodl-agent-bank"}, {"version", kModelVersion}};
  m["agents"] = nlohmann::json::array();
  const auto dir = manifest.parent_path();
  const auto stem = manifest.stem().string();
  for (std::size_t k = 0; k < bank.agents.size(); ++k) {
    auto file = stem + "_agent" + std::to_string(k) + ".json";
    write_json_file(dir / file, agent_to_json(bank.agents[k]));
    m["agents"].push_back({{"volume_range", {bank.agents[k].range.lower, bank.agents[k].range.upper}},
                           {"model_path", file}});
  }
  write_json_file(manifest, m);
}

// Accepts either a bank manifest or a single model file (a one-agent bank
// covering its own range).
inline AgentBank load_bank(const std::filesystem::path& path) {
  auto j = read_json_file(path);
  AgentBank bank;
  try {
    if (j.value("format", "") == "fsodl-qnetwork") {
      bank.agents.push_back(agent_from_json(j));
      return bank;
    }
    if (j.at("format") != "fsodl-agent-bank") throw ConfigError(path.string() + ": not a model or bank file");
    for (const auto& ja : j.at("agents")) {
      auto agent = agent_from_json(read_json_file(path.parent_path() / ja.at("model_path").get<std::string>()));
      auto range = ja.at("volume_range").get<std::vector<double>>();
      if (range.size() != 2 || range[0] != agent.range.lower || range[1] != agent.range.upper)
        throw ConfigError("manifest range does not match model file");
      bank.agents.push_back(std::move(agent));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  bank.validate();
  return bank;
}

}  // namespace fsodl
