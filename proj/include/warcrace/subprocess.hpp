#pragma once

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <optional>
#include <string>

#include "warcrace/error.hpp"

namespace warcrace {

/// A shell command running as its own process group, with stdout/stderr
/// redirected to files. Supervisors poll `poll_exit` and use `kill_group`
/// for timeouts.
class ChildProcess {
public:
    ChildProcess() = default;

    static ChildProcess spawn(const std::string& shell_command,
                              const std::filesystem::path& stdout_path,
                              const std::filesystem::path& stderr_path) {
        int out_fd = ::open(stdout_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        int err_fd = ::open(stderr_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (out_fd < 0 || err_fd < 0) {
            if (out_fd >= 0) ::close(out_fd);
            if (err_fd >= 0) ::close(err_fd);
            throw Error("cannot open log files for child process");
        }
        pid_t pid = ::fork();
        if (pid < 0) {
            ::close(out_fd);
            ::close(err_fd);
            throw Error("fork failed");
        }
        if (pid == 0) {
            ::setpgid(0, 0);
            ::dup2(out_fd, STDOUT_FILENO);
            ::dup2(err_fd, STDERR_FILENO);
            ::close(out_fd);
            ::close(err_fd);
            ::execl("/bin/sh", "sh", "-c", shell_command.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        ::close(out_fd);
        ::close(err_fd);
        ChildProcess child;
        child.pid_ = pid;
        return child;
    }

    /// Non-blocking: exit code once the process has ended (128+signal when
    /// killed), nullopt while still running.
    std::optional<int> poll_exit() {
        if (exit_code_) return exit_code_;
        if (pid_ <= 0) return std::nullopt;
        int status = 0;
        pid_t rc = ::waitpid(pid_, &status, WNOHANG);
        if (rc == pid_) {
            if (WIFEXITED(status)) {
                exit_code_ = WEXITSTATUS(status);
            } else if (WIFSIGNALED(status)) {
                exit_code_ = 128 + WTERMSIG(status);
            } else {
                exit_code_ = -1;
            }
        }
        return exit_code_;
    }

    void kill_group() {
        if (pid_ > 0 && !exit_code_) ::kill(-pid_, SIGKILL);
    }

    /// Blocks until exit.
    int wait() {
        while (true) {
            if (auto code = poll_exit()) return *code;
            int status = 0;
            if (::waitpid(pid_, &status, 0) == pid_) {
                if (WIFEXITED(status)) exit_code_ = WEXITSTATUS(status);
                else if (WIFSIGNALED(status)) exit_code_ = 128 + WTERMSIG(status);
                else exit_code_ = -1;
                return *exit_code_;
            }
        }
    }

    pid_t pid() const { return pid_; }

private:
    pid_t pid_ = -1;
    std::optional<int> exit_code_;
};

}  // namespace warcrace
