#pragma once

#include "brainform/wire.hpp"

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace brainform {

struct ServeOptions {
  std::string host{"127.0.0.1"};
  int port{7878};  // 0 picks a free port
  // Wall-clock mode ticks every 100 ms on its own; simulated mode advances
  // only on {"type":"step","ticks":n}.
  bool wall_clock{false};
  double resume_timeout_s{60.0};
  std::size_t max_step_ticks{6000};
  SessionConfig session;  // template; each new session gets its own seed
};

// Newline-delimited JSON over TCP, one session per connection. A dropped
// connection parks its session; {"type":"resume","session":id,"last_seq":n}
// as the first line of a new connection reattaches it and resends every
// message after n.
class SessionServer {
 public:
  explicit SessionServer(ServeOptions options);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  // Binds and listens; returns the bound port. Throws IoError.
  int listen();
  // Accepts connections until stop() is called.
  void serve();
  void stop();

  std::size_t parked_sessions();

 private:
  struct Parked {
    std::unique_ptr<LiveSession> session;
    std::chrono::steady_clock::time_point since;
  };

  void handle_connection(int fd);
  std::unique_ptr<LiveSession> take_parked(const std::string& id);
  void park(std::unique_ptr<LiveSession> session);

  ServeOptions opts_;
  int listen_fd_{-1};
  int wake_pipe_[2]{-1, -1};
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> counter_{0};
  std::mutex mu_;
  std::map<std::string, Parked> parked_;
  std::vector<std::thread> workers_;
};

}  // namespace brainform
