#pragma once

// Client side of the em-matcher/1 protocol.
//
//   handshake: {"protocol": "em-matcher/1", "threshold": <float>}
//   request:   {"id": <string>, "pairs": [<RecordPair JSON>, ...]}
//   response:  {"id": <string>, "scores": [<float>, ...]}
//            | {"id": <string>, "error": <string>}
//
// Over stdio the child writes the handshake as its first line and then
// answers one request line with one response line. Over HTTP the handshake is
// served at GET /meta and requests go to POST /predict.

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "emx/error.hpp"
#include "emx/json_io.hpp"
#include "emx/matcher.hpp"

namespace emx {

inline constexpr const char* kMatcherProtocol = "em-matcher/1";

struct Handshake {
  double threshold = 0.5;
  bool threshold_defaulted = true;
};

inline Handshake parse_handshake(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception&) {
    throw MatcherError("matcher handshake is not JSON", "handshake", false);
  }
  if (!j.is_object() || j.value("protocol", "") != kMatcherProtocol) {
    throw MatcherError("matcher handshake does not announce em-matcher/1", "handshake", false);
  }
  Handshake h;
  if (j.contains("threshold") && j["threshold"].is_number()) {
    h.threshold = j["threshold"].get<double>();
    h.threshold_defaulted = false;
    if (!(h.threshold > 0.0 && h.threshold < 1.0)) {
      throw MatcherError("matcher announced a threshold outside (0, 1)", "handshake", false);
    }
  }
  return h;
}

inline json make_predict_request(const std::string& id, std::span<const RecordPair> pairs) {
  json arr = json::array();
  for (const auto& p : pairs) arr.push_back(to_json(p));
  return {{"id", id}, {"pairs", std::move(arr)}};
}

inline std::vector<double> parse_predict_response(const std::string& body, const std::string& id,
                                                  std::size_t expected) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception&) {
    throw MatcherError("matcher response is not JSON", id, true);
  }
  if (!j.is_object() || j.value("id", "") != id) {
    throw MatcherError("matcher response id does not match request", id, true);
  }
  if (j.contains("error")) {
    throw MatcherError("matcher reported an error: " + j["error"].dump(), id, false);
  }
  if (!j.contains("scores") || !j["scores"].is_array()) {
    throw MatcherError("matcher response lacks 'scores'", id, true);
  }
  std::vector<double> out;
  for (const auto& s : j["scores"]) {
    if (!s.is_number()) throw MatcherError("non-numeric score in matcher response", id, false);
    out.push_back(s.get<double>());
  }
  if (out.size() != expected) {
    throw MatcherError("matcher returned " + std::to_string(out.size()) + " scores for " +
                           std::to_string(expected) + " pairs",
                       id, false);
  }
  return out;
}

/// Runs `command` under /bin/sh and talks newline-delimited JSON over its
/// stdin/stdout. One batch is in flight at a time.
class StdioMatcher final : public Matcher {
 public:
  explicit StdioMatcher(const std::string& command, int timeout_ms = 120000)
      : timeout_ms_(timeout_ms) {
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
      throw MatcherError(std::string("socketpair failed: ") + std::strerror(errno), "spawn", true);
    }
    pid_ = ::fork();
    if (pid_ < 0) {
      ::close(sv[0]);
      ::close(sv[1]);
      throw MatcherError(std::string("fork failed: ") + std::strerror(errno), "spawn", true);
    }
    if (pid_ == 0) {
      ::dup2(sv[1], STDIN_FILENO);
      ::dup2(sv[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(sv[1]);
    fd_ = sv[0];
    std::string line;
    if (!read_line(line)) {
      shutdown();
      throw MatcherError("matcher process closed before handshake", "handshake", true);
    }
    try {
      hs_ = parse_handshake(line);
    } catch (...) {
      shutdown();
      throw;
    }
  }

  StdioMatcher(const StdioMatcher&) = delete;
  StdioMatcher& operator=(const StdioMatcher&) = delete;
  ~StdioMatcher() override { shutdown(); }

  std::vector<double> predict_batch(std::span<const RecordPair> pairs) const override {
    std::lock_guard<std::mutex> lock(mu_);
    const std::string id = "req-" + std::to_string(++counter_);
    if (fd_ < 0) throw MatcherError("matcher connection is closed", id, true);
    std::string msg = make_predict_request(id, pairs).dump();
    msg.push_back('\n');
    if (!write_all(msg)) throw MatcherError("failed to send request to matcher", id, true);
    std::string line;
    if (!read_line(line)) throw MatcherError("matcher closed the connection", id, true);
    return parse_predict_response(line, id, pairs.size());
  }

  double threshold() const override { return hs_.threshold; }
  bool threshold_defaulted() const override { return hs_.threshold_defaulted; }

 private:
  bool write_all(const std::string& s) const {
    std::size_t off = 0;
    while (off < s.size()) {
      ssize_t n = ::send(fd_, s.data() + off, s.size() - off, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return false;
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  bool read_line(std::string& line) const {
    for (;;) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return true;
      }
      pollfd p{fd_, POLLIN, 0};
      int rc = ::poll(&p, 1, timeout_ms_);
      if (rc < 0 && errno == EINTR) continue;
      if (rc <= 0) return false;
      char buf[65536];
      ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return false;
      buffer_.append(buf, static_cast<std::size_t>(n));
    }
  }

  void shutdown() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
    if (pid_ > 0) {
      int status = 0;
      // Give the child a moment to exit on EOF before forcing it.
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
          pid_ = -1;
          return;
        }
        ::usleep(10000);
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  int timeout_ms_;
  pid_t pid_ = -1;
  int fd_ = -1;
  Handshake hs_;
  mutable std::string buffer_;
  mutable std::mutex mu_;
  mutable std::uint64_t counter_ = 0;
};

/// HTTP transport: GET /meta for the handshake, POST /predict per batch.
class HttpMatcher final : public Matcher {
 public:
  explicit HttpMatcher(const std::string& base_url, int timeout_s = 120)
      : client_(std::make_unique<httplib::Client>(base_url)) {
    client_->set_read_timeout(timeout_s, 0);
    client_->set_write_timeout(timeout_s, 0);
    client_->set_connection_timeout(10, 0);
    auto res = client_->Get("/meta");
    if (!res) throw MatcherError("cannot reach matcher at " + base_url, "handshake", true);
    if (res->status != 200) {
      throw MatcherError("matcher /meta returned HTTP " + std::to_string(res->status), "handshake", true);
    }
    hs_ = parse_handshake(res->body);
  }

  std::vector<double> predict_batch(std::span<const RecordPair> pairs) const override {
    std::lock_guard<std::mutex> lock(mu_);
    const std::string id = "req-" + std::to_string(++counter_);
    auto res = client_->Post("/predict", make_predict_request(id, pairs).dump(), "application/json");
    if (!res) throw MatcherError("matcher transport failure: " + httplib::to_string(res.error()), id, true);
    if (res->status >= 500) {
      throw MatcherError("matcher returned HTTP " + std::to_string(res->status), id, true);
    }
    return parse_predict_response(res->body, id, pairs.size());
  }

  double threshold() const override { return hs_.threshold; }
  bool threshold_defaulted() const override { return hs_.threshold_defaulted; }

 private:
  std::unique_ptr<httplib::Client> client_;
  Handshake hs_;
  mutable std::mutex mu_;
  mutable std::uint64_t counter_ = 0;
};

}  // namespace emx
