// Command line front end: run experiments, play interactively, validate
// the reference agents, serve the line protocol, record and check replays.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "repairbench/errors.hpp"
#include "repairbench/harness.hpp"
#include "repairbench/protocol.hpp"

namespace fs = std::filesystem;
using namespace repairbench;

namespace {

constexpr int kConfigErrorExit = 2;
constexpr int kAcceptanceExit = 3;

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, "cannot open file");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
}

// Accepts either a bare episode config or an experiment config with "env".
env::EpisodeConfig read_episode_config(const std::string& path) {
  const auto j = read_json_file(path);
  if (j.is_object() && j.contains("env")) return env::episode_config_from_json(j["env"], "env");
  return env::episode_config_from_json(j);
}

int cmd_run(const std::string& config_path, const std::string& out_dir, std::optional<int> seeds,
            std::optional<int> workers) {
  auto cfg = harness::load_experiment_config(config_path);
  if (seeds) cfg.seeds = *seeds;
  if (workers) cfg.workers = *workers;
  cfg.validate();
  fs::create_directories(out_dir);
  const auto result = harness::run_experiment(cfg, [](const harness::MetricsRow& r) {
    std::cerr << "seed " << r.seed << " steps " << r.steps << " overall " << format_double(r.overall_success)
              << '\n';
  });
  harness::write_metrics(result.table, fs::path(out_dir) / "metrics.csv");
  const auto summary = harness::summary_to_text(harness::summarize(result.table));
  std::ofstream(fs::path(out_dir) / "summary.txt", std::ios::binary) << summary;
  for (std::size_t i = 0; i < result.params.size(); ++i) {
    agents::save_params(result.params[i],
                        fs::path(out_dir) / ("params_seed" + std::to_string(cfg.base_seed + i) + ".txt"));
  }
  std::cout << summary;
  return 0;
}

int cmd_record(const std::string& config_path, const std::string& out_path, std::uint64_t seed, int episodes,
               const std::string& agent_name) {
  const auto cfg = read_episode_config(config_path);
  const auto kind = harness::agent_kind_from_string(agent_name);
  if (!kind || *kind == harness::AgentKind::learner) throw ConfigError("agent", "expected oracle, blind_oracle or random");
  env::Environment environment(cfg);
  environment.set_recording(true);
  const auto ctx = agents::AgentContext::from(cfg);
  std::unique_ptr<agents::Agent> agent;
  if (*kind == harness::AgentKind::random) {
    agent = std::make_unique<agents::RandomAgent>(ctx, derive_seed(seed, 9, 0));
  } else {
    agent = std::make_unique<agents::OracleAgent>(ctx, *kind == harness::AgentKind::blind_oracle);
  }
  for (int i = 0; i < episodes; ++i) {
    harness::play_episode(environment, *agent, derive_seed(seed, 0, static_cast<std::uint64_t>(i)));
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  for (const auto& line : environment.log_lines()) out << line << '\n';
  return 0;
}

int cmd_replay(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  if (const auto bad = env::verify_replay(lines)) {
    std::cout << "FAIL replay differs at line " << (*bad + 1) << '\n';
    return kAcceptanceExit;
  }
  std::cout << "PASS replay of " << lines.size() << " records is identical\n";
  return 0;
}

protocol::TcpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->interrupt();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"repairbench: instruction following with incremental corrections"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "results";
  std::optional<int> seeds;
  std::optional<int> workers;
  auto* run = app.add_subcommand("run", "train/evaluate an agent and write metrics.csv");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seeds", seeds, "number of seeds");
  run->add_option("--workers", workers, "parallel workers");

  std::string play_config;
  auto* play = app.add_subcommand("play", "interactive session on the grid backend");
  play->add_option("--config", play_config, "episode config (JSON)")->required();

  harness::ValidationOptions vopt;
  auto* validate = app.add_subcommand("validate", "run the oracle and blind-oracle suites");
  validate->add_option("--episodes", vopt.oracle_episodes, "oracle episodes per combination");
  validate->add_option("--blind-episodes", vopt.blind_episodes, "blind-oracle episodes per kind");
  validate->add_option("--workers", vopt.workers, "parallel workers");
  validate->add_option("--seed", vopt.seed, "base seed");

  std::string host = "127.0.0.1";
  int port = 5555;
  bool stdio = false;
  auto* serve = app.add_subcommand("serve", "serve the line protocol");
  serve->add_option("--host", host, "IPv4 address to bind");
  serve->add_option("--port", port, "TCP port (0 picks one)");
  serve->add_flag("--stdio", stdio, "serve one session on stdin/stdout");

  std::string record_config;
  std::string record_out = "replay.jsonl";
  std::uint64_t record_seed = 0;
  int record_episodes = 1;
  std::string record_agent = "oracle";
  auto* record = app.add_subcommand("record", "record a replay log");
  record->add_option("--config", record_config, "episode config (JSON)")->required();
  record->add_option("--out", record_out, "log file");
  record->add_option("--seed", record_seed, "base seed");
  record->add_option("--episodes", record_episodes, "number of episodes");
  record->add_option("--agent", record_agent, "oracle, blind_oracle or random");

  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "re-simulate a replay log and compare");
  replay->add_option("log", replay_path, "log file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, out_dir, seeds, workers);
    if (*play) return harness::interactive_session(read_episode_config(play_config), std::cin, std::cout);
    if (*validate) return harness::run_validation(vopt, std::cout) ? 0 : kAcceptanceExit;
    if (*record) return cmd_record(record_config, record_out, record_seed, record_episodes, record_agent);
    if (*replay) return cmd_replay(replay_path);
    if (*serve) {
      if (stdio) {
        protocol::serve_stream(std::cin, std::cout);
        return 0;
      }
      protocol::TcpServer server(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << host << ':' << server.port() << '\n';
      server.run();
      g_server = nullptr;
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigErrorExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
