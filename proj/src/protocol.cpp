#include "repairbench/protocol.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "repairbench/errors.hpp"

namespace repairbench::protocol {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxLine = 1 << 20;

std::string error_reply(const std::string& code, const std::string& message) {
  return json{{"ok", false}, {"error", message}, {"code", code}}.dump();
}

void put_observation(json& reply, const env::Observation& obs) {
  reply["obs"] = obs.features;
  reply["goal_tokens"] = obs.goal_ids;
}

}  // namespace

std::string Session::handle_message(std::string_view line) {
  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::parse_error& e) {
    return error_reply("bad_request", std::string("malformed JSON: ") + e.what());
  }
  if (!msg.is_object() || !msg.contains("op") || !msg["op"].is_string()) {
    return error_reply("bad_request", "expected an object with a string 'op'");
  }
  const auto op = msg["op"].get<std::string>();
  try {
    if (op == "configure") {
      if (!msg.contains("config")) return error_reply("bad_request", "configure needs 'config'");
      cfg_ = env::episode_config_from_json(msg["config"], "config");
      env_.reset();
      const auto& words = grammar::default_vocabulary().words();
      return json{{"ok", true}, {"vocab", words}, {"obs_dim", env::kFeatureDim}}.dump();
    }
    if (op == "reset") {
      if (!msg.contains("seed") || !msg["seed"].is_number_unsigned()) {
        return error_reply("bad_request", "reset needs a non-negative integer 'seed'");
      }
      if (!env_) env_.emplace(cfg_);
      const auto obs = env_->reset(msg["seed"].get<std::uint64_t>());
      json reply = {{"ok", true}, {"goal_text", env_->goal().text()}};
      put_observation(reply, obs);
      return reply.dump();
    }
    if (op == "step") {
      if (!env_) return error_reply("bad_request", "no episode; send reset first");
      if (env_->done()) return error_reply("episode_done", "the episode is over; send reset");
      if (!msg.contains("action")) return error_reply("bad_request", "step needs 'action'");
      const auto action = env::action_from_json(msg["action"], cfg_.backend);
      const auto r = env_->step(action);
      json reply = {{"ok", true},
                    {"reward", r.reward},
                    {"done", r.done},
                    {"info",
                     {{"success", r.info.success},
                      {"correction_issued", r.info.correction_issued_this_step},
                      {"wrong_interaction", r.info.wrong_interaction},
                      {"goal_text", r.info.goal_text}}}};
      put_observation(reply, r.observation);
      return reply.dump();
    }
    if (op == "close") {
      closed_ = true;
      return json{{"ok", true}}.dump();
    }
    return error_reply("bad_request", "unknown op '" + op + "'");
  } catch (const ConfigError& e) {
    return error_reply("bad_request", e.what());
  } catch (const ContractViolation& e) {
    return error_reply("bad_request", e.what());
  } catch (const SamplingError& e) {
    return error_reply("sampling_error", e.what());
  } catch (const json::exception& e) {
    return error_reply("bad_request", e.what());
  }
}

void serve_stream(std::istream& in, std::ostream& out) {
  Session session;
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << session.handle_message(line) << '\n' << std::flush;
  }
}

TcpServer::TcpServer(const std::string& host, int port) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw std::runtime_error("bad IPv4 address '" + host + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port) + ": " + err);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer() {
  stop();
  for (auto& t : workers_) {
    if (t.joinable()) t.join();
  }
  ::close(listen_fd_);
}

void TcpServer::interrupt() {
  stopping_ = true;
  ::shutdown(listen_fd_, SHUT_RDWR);
}

void TcpServer::stop() {
  stopping_ = true;
  ::shutdown(listen_fd_, SHUT_RDWR);
  std::lock_guard lock(mutex_);
  for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
}

void TcpServer::run() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    std::lock_guard lock(mutex_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    open_fds_.insert(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void TcpServer::serve_connection(int fd) {
  Session session;
  std::string buffer;
  char chunk[4096];
  auto send_all = [fd](const std::string& s) {
    std::size_t sent = 0;
    while (sent < s.size()) {
      const auto n = ::send(fd, s.data() + sent, s.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return false;
      sent += static_cast<std::size_t>(n);
    }
    return true;
  };
  bool alive = true;
  while (alive && !session.closed()) {
    const auto n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while (alive && !session.closed() && (nl = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      alive = send_all(session.handle_message(line) + "\n");
    }
    if (buffer.size() > kMaxLine) {
      alive = send_all(error_reply("bad_request", "line too long") + "\n");
      buffer.clear();
    }
  }
  {
    std::lock_guard lock(mutex_);
    open_fds_.erase(fd);
  }
  ::close(fd);
}

}  // namespace repairbench::protocol
