#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <system_error>
#include <thread>
#include <utility>
#include <vector>

namespace pawn {

/// Child process with line-oriented pipes on stdin/stdout. Move-only; the
/// destructor kills and reaps a still-running child.
class Subprocess {
 public:
  using Clock = std::chrono::steady_clock;

  Subprocess() = default;

  explicit Subprocess(const std::vector<std::string>& argv) {
    if (argv.empty()) throw std::invalid_argument("empty argv");
    static const bool ignore_sigpipe = [] {
      ::signal(SIGPIPE, SIG_IGN);
      return true;
    }();
    (void)ignore_sigpipe;
    int to_child[2], from_child[2], exec_err[2];
    if (pipe2(to_child, O_CLOEXEC) != 0 || pipe2(from_child, O_CLOEXEC) != 0 || pipe2(exec_err, O_CLOEXEC) != 0)
      throw std::system_error(errno, std::generic_category(), "pipe");

    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);

    pid_ = fork();
    if (pid_ < 0) throw std::system_error(errno, std::generic_category(), "fork");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      execvp(args[0], args.data());
      const int e = errno;
      [[maybe_unused]] auto n = write(exec_err[1], &e, sizeof e);
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    close(exec_err[1]);
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];

    int child_errno = 0;
    const auto n = read(exec_err[0], &child_errno, sizeof child_errno);
    close(exec_err[0]);
    if (n == static_cast<ssize_t>(sizeof child_errno)) {
      reap_blocking();
      close_fds();
      throw std::system_error(child_errno, std::generic_category(), "exec " + argv[0]);
    }
  }

  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;
  Subprocess(Subprocess&& o) noexcept { *this = std::move(o); }
  Subprocess& operator=(Subprocess&& o) noexcept {
    if (this != &o) {
      terminate();
      pid_ = std::exchange(o.pid_, -1);
      in_fd_ = std::exchange(o.in_fd_, -1);
      out_fd_ = std::exchange(o.out_fd_, -1);
      buffer_ = std::move(o.buffer_);
      exit_code_ = o.exit_code_;
    }
    return *this;
  }
  ~Subprocess() { terminate(); }

  bool running() const { return pid_ > 0; }
  pid_t pid() const { return pid_; }
  std::optional<int> exit_code() const { return exit_code_; }

  /// Writes one line; returns false if the pipe is closed.
  bool write_line(const std::string& line) {
    if (in_fd_ < 0) return false;
    std::string data = line + "\n";
    const char* p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
      const auto n = ::write(in_fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
    return true;
  }

  enum class ReadStatus { Line, Timeout, Eof };

  /// Reads one line (without the newline) or gives up at `deadline`.
  ReadStatus read_line(std::string& line, Clock::time_point deadline) {
    while (true) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        line = buffer_.substr(0, nl);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        buffer_.erase(0, nl + 1);
        return ReadStatus::Line;
      }
      if (out_fd_ < 0) return ReadStatus::Eof;
      const auto now = Clock::now();
      if (now >= deadline) return ReadStatus::Timeout;
      const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
      pollfd pfd{out_fd_, POLLIN, 0};
      const int r = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(ms + 1, 1 << 30)));
      if (r < 0) {
        if (errno == EINTR) continue;
        return ReadStatus::Eof;
      }
      if (r == 0) continue;
      char chunk[4096];
      const auto n = ::read(out_fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        ::close(out_fd_);
        out_fd_ = -1;
        if (!buffer_.empty()) {
          buffer_ += '\n';
          continue;
        }
        return ReadStatus::Eof;
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  /// Closes stdin and waits up to `grace` for a voluntary exit, then SIGKILLs.
  /// Returns true when the child exited on its own.
  bool wait_or_kill(std::chrono::milliseconds grace) {
    if (pid_ <= 0) return true;
    if (in_fd_ >= 0) {
      ::close(in_fd_);
      in_fd_ = -1;
    }
    const auto deadline = Clock::now() + grace;
    while (Clock::now() < deadline) {
      if (try_reap()) {
        close_fds();
        return true;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    ::kill(pid_, SIGKILL);
    reap_blocking();
    close_fds();
    return false;
  }

  void terminate() {
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      reap_blocking();
    }
    close_fds();
  }

 private:
  bool try_reap() {
    int status = 0;
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      record(status);
      return true;
    }
    return false;
  }

  void reap_blocking() {
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {}
    record(status);
  }

  void record(int status) {
    exit_code_ = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
    pid_ = -1;
  }

  void close_fds() {
    if (in_fd_ >= 0) ::close(in_fd_);
    if (out_fd_ >= 0) ::close(out_fd_);
    in_fd_ = out_fd_ = -1;
  }

  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
  std::optional<int> exit_code_;
};

}  // namespace pawn
