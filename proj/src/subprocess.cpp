#include "pathtest/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>

#include "pathtest/errors.hpp"

namespace pathtest::util {

namespace {

[[noreturn]] void child_exec(const RunSpec& spec, int out_fd) {
  ::setpgid(0, 0);  // own process group so the timeout kill reaps helpers too
  ::dup2(out_fd, STDOUT_FILENO);
  ::dup2(out_fd, STDERR_FILENO);
  ::close(out_fd);
  if (!spec.cwd.empty()) {
    if (::chdir(spec.cwd.c_str()) != 0) ::_exit(127);
  }
  for (const auto& [k, v] : spec.env) {
    ::setenv(k.c_str(), v.c_str(), 1);
  }
  std::vector<char*> argv;
  argv.reserve(spec.argv.size() + 1);
  for (const auto& a : spec.argv) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  ::execvp(argv[0], argv.data());
  ::_exit(127);
}

}  // namespace

RunResult run_process(const RunSpec& spec) {
  if (spec.argv.empty()) throw Error("run_process: empty argv");

  int pipefd[2];
  if (::pipe(pipefd) != 0) throw Error("pipe failed");

  pid_t pid = ::fork();
  if (pid < 0) {
    ::close(pipefd[0]);
    ::close(pipefd[1]);
    throw Error("fork failed");
  }
  if (pid == 0) {
    ::close(pipefd[0]);
    child_exec(spec, pipefd[1]);
  }
  ::close(pipefd[1]);

  RunResult result;
  const auto deadline = spec.timeout.count() > 0
                            ? std::chrono::steady_clock::now() + spec.timeout
                            : std::chrono::steady_clock::time_point::max();

  char buf[4096];
  bool eof = false;
  bool killed = false;
  while (!eof) {
    int wait_ms = -1;
    if (deadline != std::chrono::steady_clock::time_point::max()) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      wait_ms = static_cast<int>(left.count());
      if (wait_ms < 0) wait_ms = 0;
    }
    struct pollfd pfd{pipefd[0], POLLIN, 0};
    int rc = ::poll(&pfd, 1, wait_ms);
    if (rc > 0) {
      ssize_t n = ::read(pipefd[0], buf, sizeof(buf));
      if (n > 0) {
        result.output.append(buf, static_cast<std::size_t>(n));
      } else {
        eof = true;
      }
    } else if (rc == 0) {
      // deadline hit: kill the whole group, then drain whatever remains
      if (!killed) {
        ::kill(-pid, SIGKILL);
        result.timed_out = true;
        killed = true;
      }
      // after the kill the pipe will hit EOF shortly; keep reading
      ssize_t n = ::read(pipefd[0], buf, sizeof(buf));
      if (n > 0) {
        result.output.append(buf, static_cast<std::size_t>(n));
      } else if (n == 0) {
        eof = true;
      }
    } else if (errno != EINTR) {
      break;
    }
  }
  ::close(pipefd[0]);

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.signal = WTERMSIG(status);
    result.exit_code = 128 + WTERMSIG(status);
  }
  return result;
}

bool program_exists(const std::string& name) {
  RunSpec spec;
  spec.argv = {"/bin/sh", "-c", "command -v " + name + " >/dev/null 2>&1"};
  return run_process(spec).exit_code == 0;
}

}  // namespace pathtest::util
