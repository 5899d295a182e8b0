#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "repairbench/agents.hpp"
#include "repairbench/env.hpp"

namespace repairbench::harness {

enum class AgentKind { oracle, blind_oracle, random, learner };

std::string_view to_string(AgentKind k);
std::optional<AgentKind> agent_kind_from_string(std::string_view s);

struct AgentSpec {
  AgentKind kind = AgentKind::oracle;
  double alpha = 0.05;
  double tau = 1.0;
  double baseline_rate = 0.01;
};

/// One experiment: an environment config, an agent and a training budget,
/// repeated over `seeds` consecutive seeds starting at base_seed.
struct ExperimentConfig {
  env::EpisodeConfig env;
  AgentSpec agent;
  int train_episodes = 0;
  /// Evaluate every this many training episodes; 0 evaluates only before
  /// and after training.
  int eval_every = 0;
  int eval_episodes = 200;
  int seeds = 3;
  std::uint64_t base_seed = 0;
  int workers = 4;
  /// Learner episodes run against one parameter snapshot per batch; the
  /// updates are then applied in episode order. Fixing the batch size
  /// (rather than the worker count) keeps results independent of workers.
  int batch_size = 16;

  void validate() const;
};

/// Keys: env (episode config object), agent {kind, alpha, tau,
/// baseline_rate}, train_episodes, eval_every, eval_episodes, seeds,
/// base_seed, workers, batch_size. Throws ConfigError with the key path.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct EpisodeRecord {
  bool success = false;
  bool correction_issued = false;
  int length = 0;
  env::ScenarioKind kind = env::ScenarioKind::none;
};

struct MetricsRow {
  std::uint64_t steps = 0;  // training env steps taken before this evaluation
  std::uint64_t seed = 0;
  double overall_success = 0.0;
  /// Success over episodes with an issued correction; empty if none were.
  std::optional<double> correction_success;
  double mean_ep_len = 0.0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

using MetricsTable = std::vector<MetricsRow>;

struct EvalStats {
  double overall_success = 0.0;
  std::optional<double> correction_success;
  double mean_ep_len = 0.0;
  std::size_t episodes = 0;
  std::size_t corrected = 0;
};

EvalStats aggregate(const std::vector<EpisodeRecord>& records);

/// Plays one episode to the end. `on_reward` sees every reward.
EpisodeRecord play_episode(env::Environment& env, agents::Agent& agent, std::uint64_t seed,
                           const std::function<void(int)>& on_reward = {});

/// Runs `count` episodes with seeds derive_seed(seed, stream, i) on up to
/// `workers` threads. `params` is required for the learner and read only.
std::vector<EpisodeRecord> run_episodes(const env::EpisodeConfig& cfg, const AgentSpec& agent,
                                        const agents::LinearGroundingParams* params, std::uint64_t seed,
                                        std::uint64_t stream, std::size_t count, int workers);

struct ExperimentResult {
  MetricsTable table;  // ordered by seed, then evaluation point
  std::vector<agents::LinearGroundingParams> params;  // learner only, one per seed
};

using Progress = std::function<void(const MetricsRow&)>;

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Progress& progress = {});

std::string metrics_to_csv(const MetricsTable& table);
MetricsTable metrics_from_csv(std::string_view text);
void write_metrics(const MetricsTable& table, const std::filesystem::path& path);
MetricsTable read_metrics(const std::filesystem::path& path);

struct SummaryRow {
  std::size_t point = 0;
  double steps = 0.0;
  double overall_mean = 0.0;
  double overall_std = 0.0;
  std::optional<double> correction_mean;
  std::optional<double> correction_std;
  double ep_len_mean = 0.0;
};

/// Mean and sample standard deviation across seeds per evaluation point.
std::vector<SummaryRow> summarize(const MetricsTable& table);
std::string summary_to_text(const std::vector<SummaryRow>& rows);

struct ValidationOptions {
  int oracle_episodes = 200;  // per task x objects x mode x timing cell
  int blind_episodes = 4000;
  double blind_tolerance = 0.03;
  int workers = 4;
  std::uint64_t seed = 1;
};

/// Oracle and correction-blind oracle checks with one PASS/FAIL line each.
/// Returns true when all pass.
bool run_validation(const ValidationOptions& options, std::ostream& out);

/// Terminal loop on the grid backend with a human instructor. The human
/// types an instruction, then each line is either empty (the oracle takes a
/// step), a move (up/down/left/right/interact or w/s/a/d/e), a correction
/// such as "actually the green cube", or "quit". Returns 0 on success, 1
/// on timeout or quit.
int interactive_session(const env::EpisodeConfig& cfg, std::istream& in, std::ostream& out);

}  // namespace repairbench::harness
