#include "brainform/serve.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

namespace brainform {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::size_t kMaxLine = 1 << 20;
constexpr auto kTick = std::chrono::milliseconds(100);

bool send_all(int fd, const std::vector<json>& msgs) {
  std::string out;
  for (const json& m : msgs) {
    out += m.dump();
    out.push_back('\n');
  }
  std::size_t off = 0;
  while (off < out.size()) {
    const ssize_t n = ::send(fd, out.data() + off, out.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

SessionServer::SessionServer(ServeOptions options) : opts_(std::move(options)) {
  opts_.session.validate();
}

SessionServer::~SessionServer() {
  stop();
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  if (wake_pipe_[0] >= 0) ::close(wake_pipe_[0]);
  if (wake_pipe_[1] >= 0) ::close(wake_pipe_[1]);
}

int SessionServer::listen() {
  if (::pipe(wake_pipe_) != 0) throw IoError(std::string("pipe: ") + std::strerror(errno));
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(opts_.port));
  if (::inet_pton(AF_INET, opts_.host.c_str(), &addr.sin_addr) != 1) {
    throw IoError("invalid listen address '" + opts_.host + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw IoError("bind " + opts_.host + ":" + std::to_string(opts_.port) + ": " + std::strerror(errno));
  }
  if (::listen(listen_fd_, 16) != 0) throw IoError(std::string("listen: ") + std::strerror(errno));
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  return ntohs(addr.sin_port);
}

void SessionServer::serve() {
  if (listen_fd_ < 0) throw IoError("serve() called before listen()");
  while (!stopping_) {
    pollfd fds[2] = {{listen_fd_, POLLIN, 0}, {wake_pipe_[0], POLLIN, 0}};
    if (::poll(fds, 2, -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (fds[1].revents) break;
    if (fds[0].revents & POLLIN) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) continue;
      workers_.emplace_back([this, fd] { handle_connection(fd); });
    }
  }
  ::close(listen_fd_);
  listen_fd_ = -1;
}

void SessionServer::stop() {
  if (stopping_.exchange(true)) return;
  if (wake_pipe_[1] >= 0) {
    const char c = 'x';
    [[maybe_unused]] auto n = ::write(wake_pipe_[1], &c, 1);
  }
}

std::size_t SessionServer::parked_sessions() {
  std::lock_guard lock(mu_);
  return parked_.size();
}

std::unique_ptr<LiveSession> SessionServer::take_parked(const std::string& id) {
  std::lock_guard lock(mu_);
  auto it = parked_.find(id);
  if (it == parked_.end()) return nullptr;
  const auto age = std::chrono::duration<double>(Clock::now() - it->second.since).count();
  std::unique_ptr<LiveSession> s = std::move(it->second.session);
  parked_.erase(it);
  if (age > opts_.resume_timeout_s) return nullptr;
  return s;
}

void SessionServer::park(std::unique_ptr<LiveSession> session) {
  std::lock_guard lock(mu_);
  const auto now = Clock::now();
  std::erase_if(parked_, [&](const auto& kv) {
    return std::chrono::duration<double>(now - kv.second.since).count() > opts_.resume_timeout_s;
  });
  const std::string id = session->id();
  parked_[id] = Parked{std::move(session), now};
}

void SessionServer::handle_connection(int fd) {
  std::unique_ptr<LiveSession> session;
  std::string buf;
  bool alive = true;
  auto next_tick = Clock::now() + kTick;

  auto create = [&]() {
    const std::uint64_t n = counter_++;
    SessionConfig cfg = opts_.session;
    cfg.session_id = "s" + std::to_string(n);
    cfg.seed = derive_seed(opts_.session.seed, "serve", n);
    cfg.profile.seed = derive_seed(cfg.seed, "subject");
    session = std::make_unique<LiveSession>(cfg.session_id, cfg);
    alive = send_all(fd, session->hello({{"wall_clock", opts_.wall_clock}}));
    next_tick = Clock::now() + kTick;
  };

  auto process = [&](std::string_view line) {
    json msg;
    bool parsed = true;
    try {
      msg = json::parse(line);
    } catch (const json::parse_error&) {
      parsed = false;
    }
    const std::string type =
        parsed && msg.is_object() && msg.contains("type") && msg["type"].is_string() ? msg["type"].get<std::string>() : "";
    if (!session) {
      if (type == "resume" && msg.contains("session") && msg["session"].is_string()) {
        session = take_parked(msg["session"].get<std::string>());
        if (session) {
          std::uint64_t after = 0;
          if (msg.contains("last_seq") && msg["last_seq"].is_number_unsigned()) after = msg["last_seq"].get<std::uint64_t>();
          alive = send_all(fd, session->since(after));
          next_tick = Clock::now() + kTick;
          return;
        }
        create();
        alive = alive && send_all(fd, session->error_reply("unknown or expired session; started a new one"));
        return;
      }
      create();
      if (type == "hello") return;
    }
    if (!parsed) {
      alive = send_all(fd, session->error_reply("malformed JSON"));
    } else if (type == "step") {
      if (opts_.wall_clock) {
        alive = send_all(fd, session->error_reply("step is only available in simulated-time mode"));
        return;
      }
      std::size_t n = 1;
      if (msg.contains("ticks")) {
        if (!msg["ticks"].is_number_unsigned() || msg["ticks"].get<std::size_t>() == 0 ||
            msg["ticks"].get<std::size_t>() > opts_.max_step_ticks) {
          alive = send_all(fd, session->error_reply("ticks must be an integer in [1, " +
                                                    std::to_string(opts_.max_step_ticks) + "]"));
          return;
        }
        n = msg["ticks"].get<std::size_t>();
      }
      std::vector<json> out;
      for (std::size_t i = 0; i < n; ++i) {
        auto ev = session->tick();
        out.insert(out.end(), std::make_move_iterator(ev.begin()), std::make_move_iterator(ev.end()));
      }
      alive = send_all(fd, out);
    } else if (type == "resume" || type == "hello") {
      alive = send_all(fd, session->error_reply("'" + type + "' is only valid as the first message"));
    } else {
      alive = send_all(fd, session->handle(msg));
    }
  };

  while (alive && !stopping_) {
    int timeout_ms = 100;
    if (opts_.wall_clock && session) {
      const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(next_tick - Clock::now()).count();
      timeout_ms = static_cast<int>(std::clamp<long long>(wait, 0, 100));
    }
    pollfd p{fd, POLLIN, 0};
    const int r = ::poll(&p, 1, timeout_ms);
    if (r < 0 && errno != EINTR) break;
    if (r > 0) {
      char tmp[4096];
      const ssize_t n = ::recv(fd, tmp, sizeof tmp, 0);
      if (n <= 0) break;
      buf.append(tmp, static_cast<std::size_t>(n));
      std::size_t nl;
      while (alive && (nl = buf.find('\n')) != std::string::npos) {
        std::string line = buf.substr(0, nl);
        buf.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) process(line);
      }
      if (buf.size() > kMaxLine) break;
    }
    if (alive && opts_.wall_clock && session && Clock::now() >= next_tick) {
      alive = send_all(fd, session->tick());
      next_tick += kTick;
    }
  }
  ::close(fd);
  if (session) park(std::move(session));
}

}  // namespace brainform
