#include "repairbench/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "repairbench/errors.hpp"
#include "repairbench/rng.hpp"

namespace repairbench::harness {

using nlohmann::json;

namespace {

// Seed streams; see derive_seed.
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kEvalStream = 2;
constexpr std::uint64_t kAgentOffset = 100;

constexpr std::array<std::string_view, 4> kAgentNames = {"oracle", "blind_oracle", "random", "learner"};

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t w = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(workers, 1)));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> threads;
    for (std::size_t k = 0; k < w; ++k) {
      threads.emplace_back([&, k] {
        try {
          for (std::size_t i = k; i < n; i += w) fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

std::unique_ptr<agents::Agent> make_agent(const AgentSpec& spec, const env::EpisodeConfig& cfg,
                                          const agents::LinearGroundingParams* params, std::uint64_t seed) {
  const auto ctx = agents::AgentContext::from(cfg);
  switch (spec.kind) {
    case AgentKind::oracle: return std::make_unique<agents::OracleAgent>(ctx, false);
    case AgentKind::blind_oracle: return std::make_unique<agents::OracleAgent>(ctx, true);
    case AgentKind::random: return std::make_unique<agents::RandomAgent>(ctx, seed);
    case AgentKind::learner:
      if (!params) throw ContractViolation("the learner needs parameters");
      return std::make_unique<agents::LearnerAgent>(ctx, *params, seed);
  }
  throw ContractViolation("unknown agent kind");
}

template <typename T>
T read_int(const json& j, const std::string& path, T lo) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  if (j.is_number_unsigned()) {
    const auto v = j.get<std::uint64_t>();
    if (v > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) throw ConfigError(path, "too large");
    if (static_cast<T>(v) < lo) throw ConfigError(path, "must be at least " + std::to_string(lo));
    return static_cast<T>(v);
  }
  const auto v = j.get<long long>();
  if (v < static_cast<long long>(lo)) throw ConfigError(path, "must be at least " + std::to_string(lo));
  return static_cast<T>(v);
}

double read_positive(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(path, "must be positive");
  return v;
}

MetricsRow evaluate(const ExperimentConfig& cfg, const agents::LinearGroundingParams* params, std::uint64_t seed,
                    std::uint64_t steps) {
  const auto records = run_episodes(cfg.env, cfg.agent, params, seed, kEvalStream,
                                    static_cast<std::size_t>(cfg.eval_episodes), cfg.workers);
  const auto stats = aggregate(records);
  return {steps, seed, stats.overall_success, stats.correction_success, stats.mean_ep_len};
}

std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("metrics line " + std::to_string(line), "bad number '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t parse_u64(std::string_view s, std::size_t line) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("metrics line " + std::to_string(line), "bad integer '" + std::string(s) + "'");
  }
  return v;
}

constexpr std::string_view kCsvHeader = "steps,seed,overall_success,correction_success,mean_ep_len";

}  // namespace

std::string_view to_string(AgentKind k) { return kAgentNames[static_cast<std::size_t>(k)]; }

std::optional<AgentKind> agent_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kAgentNames.size(); ++i) {
    if (kAgentNames[i] == s) return static_cast<AgentKind>(i);
  }
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  env.validate("env");
  if (train_episodes < 0) throw ConfigError("train_episodes", "must be non-negative");
  if (eval_every < 0) throw ConfigError("eval_every", "must be non-negative");
  if (eval_episodes < 1) throw ConfigError("eval_episodes", "must be positive");
  if (seeds < 1) throw ConfigError("seeds", "must be positive");
  if (workers < 1) throw ConfigError("workers", "must be positive");
  if (batch_size < 1) throw ConfigError("batch_size", "must be positive");
  if (!(agent.alpha > 0.0)) throw ConfigError("agent.alpha", "must be positive");
  if (!(agent.tau > 0.0)) throw ConfigError("agent.tau", "must be positive");
  if (!(agent.baseline_rate > 0.0 && agent.baseline_rate <= 1.0)) {
    throw ConfigError("agent.baseline_rate", "must lie in (0, 1]");
  }
}

ExperimentConfig experiment_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config", "expected an object");
  ExperimentConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "env") {
      cfg.env = env::episode_config_from_json(value, "env");
    } else if (key == "agent") {
      if (!value.is_object()) throw ConfigError("agent", "expected an object");
      for (const auto& [k, v] : value.items()) {
        const std::string path = "agent." + k;
        if (k == "kind") {
          if (!v.is_string()) throw ConfigError(path, "expected a string");
          const auto kind = agent_kind_from_string(v.get<std::string>());
          if (!kind) throw ConfigError(path, "unknown agent '" + v.get<std::string>() + "'");
          cfg.agent.kind = *kind;
        } else if (k == "alpha") {
          cfg.agent.alpha = read_positive(v, path);
        } else if (k == "tau") {
          cfg.agent.tau = read_positive(v, path);
        } else if (k == "baseline_rate") {
          cfg.agent.baseline_rate = read_positive(v, path);
        } else {
          throw ConfigError(path, "unknown key");
        }
      }
    } else if (key == "train_episodes") {
      cfg.train_episodes = read_int<int>(value, key, 0);
    } else if (key == "eval_every") {
      cfg.eval_every = read_int<int>(value, key, 0);
    } else if (key == "eval_episodes") {
      cfg.eval_episodes = read_int<int>(value, key, 1);
    } else if (key == "seeds") {
      cfg.seeds = read_int<int>(value, key, 1);
    } else if (key == "base_seed") {
      cfg.base_seed = read_int<std::uint64_t>(value, key, 0);
    } else if (key == "workers") {
      cfg.workers = read_int<int>(value, key, 1);
    } else if (key == "batch_size") {
      cfg.batch_size = read_int<int>(value, key, 1);
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
  return experiment_config_from_json(j);
}

EvalStats aggregate(const std::vector<EpisodeRecord>& records) {
  EvalStats s;
  s.episodes = records.size();
  if (records.empty()) return s;
  std::size_t wins = 0;
  std::size_t corrected_wins = 0;
  double length = 0.0;
  for (const auto& r : records) {
    wins += r.success ? 1 : 0;
    length += r.length;
    if (r.correction_issued) {
      ++s.corrected;
      corrected_wins += r.success ? 1 : 0;
    }
  }
  const double n = static_cast<double>(records.size());
  s.overall_success = static_cast<double>(wins) / n;
  s.mean_ep_len = length / n;
  if (s.corrected > 0) s.correction_success = static_cast<double>(corrected_wins) / static_cast<double>(s.corrected);
  return s;
}

EpisodeRecord play_episode(env::Environment& env, agents::Agent& agent, std::uint64_t seed,
                           const std::function<void(int)>& on_reward) {
  auto obs = env.reset(seed);
  agent.begin_episode(obs);
  while (!env.done()) {
    auto result = env.step(agent.act(obs));
    if (on_reward) on_reward(result.reward);
    obs = std::move(result.observation);
  }
  const auto& s = env.summary();
  return {s.success, s.correction_issued, s.length, s.kind};
}

std::vector<EpisodeRecord> run_episodes(const env::EpisodeConfig& cfg, const AgentSpec& agent,
                                        const agents::LinearGroundingParams* params, std::uint64_t seed,
                                        std::uint64_t stream, std::size_t count, int workers) {
  std::vector<EpisodeRecord> out(count);
  parallel_for(count, workers, [&](std::size_t i) {
    env::Environment environment(cfg);
    auto a = make_agent(agent, cfg, params, derive_seed(seed, stream + kAgentOffset, i));
    out[i] = play_episode(environment, *a, derive_seed(seed, stream, i));
  });
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Progress& progress) {
  cfg.validate();
  ExperimentResult result;
  const bool learner = cfg.agent.kind == AgentKind::learner;
  const auto& vocab = grammar::default_vocabulary();
  const auto train = static_cast<std::size_t>(cfg.train_episodes);
  const auto every = static_cast<std::size_t>(cfg.eval_every);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int k = 0; k < cfg.seeds; ++k) {
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(k);
    auto params = agents::LinearGroundingParams::zeros(vocab.size());
    params.alpha = cfg.agent.alpha;
    params.tau = cfg.agent.tau;
    params.baseline_rate = cfg.agent.baseline_rate;
    const agents::LinearGroundingParams* snapshot = learner ? &params : nullptr;

    std::uint64_t steps = 0;
    auto emit = [&] {
      result.table.push_back(evaluate(cfg, snapshot, seed, steps));
      if (progress) progress(result.table.back());
    };
    emit();
    std::size_t done = 0;
    while (done < train) {
      std::size_t n = std::min(batch, train - done);
      if (every > 0) n = std::min(n, every - done % every);
      std::vector<EpisodeRecord> records(n);
      std::vector<agents::LearnerTrace> traces(learner ? n : 0);
      parallel_for(n, cfg.workers, [&](std::size_t i) {
        const std::size_t index = done + i;
        env::Environment environment(cfg.env);
        auto agent = make_agent(cfg.agent, cfg.env, snapshot, derive_seed(seed, kTrainStream + kAgentOffset, index));
        auto* la = learner ? static_cast<agents::LearnerAgent*>(agent.get()) : nullptr;
        records[i] = play_episode(environment, *agent, derive_seed(seed, kTrainStream, index),
                                  [la](int r) { if (la) la->record_reward(r); });
        if (la) traces[i] = la->trace();
      });
      for (std::size_t i = 0; i < n; ++i) {
        if (learner) agents::learner_update(params, traces[i], cfg.env.max_steps);
        steps += static_cast<std::uint64_t>(records[i].length);
      }
      done += n;
      if ((every > 0 && done % every == 0) || done == train) emit();
    }
    if (learner) result.params.push_back(params);
  }
  return result;
}

std::string metrics_to_csv(const MetricsTable& table) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : table) {
    out += std::to_string(r.steps) + ',' + std::to_string(r.seed) + ',' + format_double(r.overall_success) + ',' +
           format_optional(r.correction_success) + ',' + format_double(r.mean_ep_len) + '\n';
  }
  return out;
}

MetricsTable metrics_from_csv(std::string_view text) {
  MetricsTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (header) {
      if (line != kCsvHeader) throw ConfigError("metrics line 1", "unexpected header");
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 5) throw ConfigError("metrics line " + std::to_string(line_no), "expected 5 fields");
    MetricsRow r;
    r.steps = parse_u64(fields[0], line_no);
    r.seed = parse_u64(fields[1], line_no);
    r.overall_success = parse_double(fields[2], line_no);
    if (!fields[3].empty()) r.correction_success = parse_double(fields[3], line_no);
    r.mean_ep_len = parse_double(fields[4], line_no);
    table.push_back(r);
  }
  if (header) throw ConfigError("metrics line 1", "missing header");
  return table;
}

void write_metrics(const MetricsTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << metrics_to_csv(table);
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

MetricsTable read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return metrics_from_csv(buf.str());
}

std::vector<SummaryRow> summarize(const MetricsTable& table) {
  // Rows arrive grouped by seed; the n-th row of each seed is point n.
  std::vector<std::vector<const MetricsRow*>> points;
  std::vector<std::pair<std::uint64_t, std::size_t>> seen;  // seed, rows so far
  for (const auto& r : table) {
    auto it = std::find_if(seen.begin(), seen.end(), [&](const auto& s) { return s.first == r.seed; });
    if (it == seen.end()) {
      seen.emplace_back(r.seed, 0);
      it = seen.end() - 1;
    }
    const std::size_t p = it->second++;
    if (points.size() <= p) points.resize(p + 1);
    points[p].push_back(&r);
  }
  auto mean_std = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair{m, sd};
  };
  std::vector<SummaryRow> out;
  for (std::size_t p = 0; p < points.size(); ++p) {
    SummaryRow s;
    s.point = p;
    std::vector<double> steps, overall, corr, len;
    for (const auto* r : points[p]) {
      steps.push_back(static_cast<double>(r->steps));
      overall.push_back(r->overall_success);
      len.push_back(r->mean_ep_len);
      if (r->correction_success) corr.push_back(*r->correction_success);
    }
    s.steps = mean_std(steps).first;
    std::tie(s.overall_mean, s.overall_std) = mean_std(overall);
    s.ep_len_mean = mean_std(len).first;
    if (!corr.empty()) {
      const auto [m, sd] = mean_std(corr);
      s.correction_mean = m;
      s.correction_std = sd;
    }
    out.push_back(s);
  }
  return out;
}

std::string summary_to_text(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  for (const auto& r : rows) {
    out << "point " << r.point << "  steps " << static_cast<std::uint64_t>(std::llround(r.steps))
        << "  overall " << r.overall_mean << " +- " << r.overall_std << "  correction ";
    if (r.correction_mean) {
      out << *r.correction_mean << " +- " << *r.correction_std;
    } else {
      out << "n/a";
    }
    out.precision(1);
    out << "  ep_len " << r.ep_len_mean << '\n';
    out.precision(3);
  }
  return out.str();
}

}  // namespace repairbench::harness
