#pragma once

#include <atomic>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "repairbench/env.hpp"

namespace repairbench::protocol {

/// One client's environment. Messages are single-line JSON objects:
///   {"op":"configure","config":{...}}  -> {"ok":true,"vocab":[...],"obs_dim":N}
///   {"op":"reset","seed":S}            -> {"ok":true,"obs":[...],"goal_tokens":[...],"goal_text":"..."}
///   {"op":"step","action":[...]}       -> {"ok":true,"obs":[...],"goal_tokens":[...],"reward":R,
///                                          "done":B,"info":{...}}
///   {"op":"close"}                     -> {"ok":true}
/// Failures reply {"ok":false,"error":"...","code":C} and leave the session
/// usable. Codes: bad_request, episode_done, sampling_error.
class Session {
 public:
  Session() = default;

  std::string handle_message(std::string_view line);
  bool closed() const { return closed_; }

 private:
  env::EpisodeConfig cfg_;
  std::optional<env::Environment> env_;
  bool closed_ = false;
};

/// Serves one session over a pair of streams until "close" or end of input.
void serve_stream(std::istream& in, std::ostream& out);

/// Line server on a TCP port; one thread and one session per connection.
class TcpServer {
 public:
  /// Binds immediately; port 0 picks a free port. Throws std::runtime_error
  /// when the address cannot be bound.
  TcpServer(const std::string& host, int port);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  int port() const { return port_; }
  /// Accepts connections until stop() is called.
  void run();
  void stop();
  /// Makes run() return; safe to call from a signal handler.
  void interrupt();

 private:
  void serve_connection(int fd);

  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex mutex_;
  std::set<int> open_fds_;
  std::vector<std::thread> workers_;
};

}  // namespace repairbench::protocol
