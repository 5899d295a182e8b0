#include <cmath>
#include <ostream>

#include "repairbench/harness.hpp"

namespace repairbench::harness {

bool run_validation(const ValidationOptions& options, std::ostream& out) {
  bool all = true;
  auto report = [&](bool ok, const std::string& line) {
    out << (ok ? "PASS " : "FAIL ") << line << '\n';
    all = all && ok;
  };
  const auto count = static_cast<std::size_t>(options.oracle_episodes);

  for (Task task : kAllTasks) {
    for (int n : {2, 3}) {
      for (auto mode : {env::CorrectionMode::AC, env::CorrectionMode::ACN}) {
        for (auto timing : {env::Timing::immediate, env::Timing::on_interaction}) {
          env::EpisodeConfig cfg;
          cfg.task = task;
          cfg.num_objects = n;
          cfg.mode = mode;
          cfg.timing = timing;
          const auto records = run_episodes(cfg, {AgentKind::oracle}, nullptr, options.seed, 7, count,
                                            options.workers);
          const auto stats = aggregate(records);
          report(stats.overall_success == 1.0,
                 "oracle " + std::string(to_string(task)) + " objects=" + std::to_string(n) + " " +
                     std::string(instructor::to_string(mode)) + " " + std::string(instructor::to_string(timing)) +
                     " success=" + format_double(stats.overall_success));
        }
      }
    }
  }

  struct Ceiling {
    const char* name;
    env::ScenarioKind kind;
    double expected;
  };
  for (const Ceiling& c : {Ceiling{"ambiguity", env::ScenarioKind::ambiguity, 0.75},
                           Ceiling{"instruction_correction", env::ScenarioKind::instruction_correction, 0.50}}) {
    env::EpisodeConfig cfg;
    cfg.backend = world::Backend::grid;
    cfg.kinds = {c.kind};
    const auto records = run_episodes(cfg, {AgentKind::blind_oracle}, nullptr, options.seed, 8,
                                      static_cast<std::size_t>(options.blind_episodes), options.workers);
    const auto stats = aggregate(records);
    const bool ok = std::abs(stats.overall_success - c.expected) <= options.blind_tolerance &&
                    stats.correction_success.value_or(0.0) == 0.0;
    report(ok, std::string("blind oracle ") + c.name + " overall=" + format_double(stats.overall_success) +
                   " expected=" + format_double(c.expected) + " correction_only=" +
                   (stats.correction_success ? format_double(*stats.correction_success) : std::string("n/a")));
  }
  return all;
}

}  // namespace repairbench::harness
