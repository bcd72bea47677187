#include "masszz/process.hpp"

#include <cerrno>
#include <cstring>
#include <map>
#include <system_error>

extern "C" {
#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>
}

extern char** environ;

namespace masszz {
namespace {

struct Pipe {
    int fd[2] = {-1, -1};
    Pipe() {
        if (::pipe2(fd, O_CLOEXEC) != 0) throw std::system_error(errno, std::generic_category(), "pipe2");
    }
    ~Pipe() {
        close_read();
        close_write();
    }
    Pipe(const Pipe&) = delete;
    Pipe& operator=(const Pipe&) = delete;
    void close_read() {
        if (fd[0] >= 0) ::close(fd[0]);
        fd[0] = -1;
    }
    void close_write() {
        if (fd[1] >= 0) ::close(fd[1]);
        fd[1] = -1;
    }
};

class SpawnActions {
public:
    SpawnActions() { posix_spawn_file_actions_init(&actions_); }
    ~SpawnActions() { posix_spawn_file_actions_destroy(&actions_); }
    SpawnActions(const SpawnActions&) = delete;
    SpawnActions& operator=(const SpawnActions&) = delete;
    posix_spawn_file_actions_t* get() { return &actions_; }

private:
    posix_spawn_file_actions_t actions_;
};

std::vector<std::string> build_environment(const std::vector<std::pair<std::string, std::string>>& extra) {
    std::map<std::string, std::string> merged;
    for (char** e = environ; e && *e; ++e) {
        std::string entry(*e);
        auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        merged[entry.substr(0, eq)] = entry.substr(eq + 1);
    }
    for (const auto& [k, v] : extra) merged[k] = v;
    std::vector<std::string> out;
    out.reserve(merged.size());
    for (const auto& [k, v] : merged) out.push_back(k + "=" + v);
    return out;
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& options) {
    if (argv.empty()) throw std::invalid_argument("run_process: empty argv");

    Pipe in, out, err;
    SpawnActions actions;
    posix_spawn_file_actions_adddup2(actions.get(), in.fd[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(actions.get(), out.fd[1], STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(actions.get(), err.fd[1], STDERR_FILENO);
    if (!options.cwd.empty()) posix_spawn_file_actions_addchdir_np(actions.get(), options.cwd.c_str());

    std::vector<char*> cargv;
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);

    auto env_storage = build_environment(options.env);
    std::vector<char*> cenv;
    for (auto& e : env_storage) cenv.push_back(e.data());
    cenv.push_back(nullptr);

    pid_t pid = 0;
    int rc = posix_spawnp(&pid, cargv[0], actions.get(), nullptr, cargv.data(), cenv.data());
    if (rc != 0) throw std::system_error(rc, std::generic_category(), "posix_spawnp " + argv[0]);

    in.close_read();
    out.close_write();
    err.close_write();

    if (!options.input.empty()) {
        static const bool sigpipe_ignored = [] {
            ::signal(SIGPIPE, SIG_IGN);
            return true;
        }();
        (void)sigpipe_ignored;
    }

    ProcessResult result;
    std::size_t written = 0;
    if (options.input.empty()) in.close_write();
    else ::fcntl(in.fd[1], F_SETFL, O_NONBLOCK);

    char buf[65536];
    while (out.fd[0] >= 0 || err.fd[0] >= 0 || in.fd[1] >= 0) {
        pollfd fds[3];
        int n = 0;
        int out_i = -1, err_i = -1, in_i = -1;
        if (out.fd[0] >= 0) { fds[n] = {out.fd[0], POLLIN, 0}; out_i = n++; }
        if (err.fd[0] >= 0) { fds[n] = {err.fd[0], POLLIN, 0}; err_i = n++; }
        if (in.fd[1] >= 0) { fds[n] = {in.fd[1], POLLOUT, 0}; in_i = n++; }
        if (::poll(fds, n, -1) < 0) {
            if (errno == EINTR) continue;
            throw std::system_error(errno, std::generic_category(), "poll");
        }
        auto drain = [&](int idx, Pipe& p, std::string& sink) {
            if (idx < 0 || !(fds[idx].revents & (POLLIN | POLLHUP | POLLERR))) return;
            ssize_t got = ::read(p.fd[0], buf, sizeof buf);
            if (got > 0) sink.append(buf, static_cast<std::size_t>(got));
            else if (got == 0 || errno != EINTR) p.close_read();
        };
        drain(out_i, out, result.out);
        drain(err_i, err, result.err);
        if (in_i >= 0 && (fds[in_i].revents & (POLLOUT | POLLERR | POLLHUP))) {
            if (fds[in_i].revents & (POLLERR | POLLHUP)) {
                in.close_write();
            } else {
                ssize_t put = ::write(in.fd[1], options.input.data() + written, options.input.size() - written);
                if (put > 0) written += static_cast<std::size_t>(put);
                else if (put < 0 && errno != EAGAIN && errno != EINTR) in.close_write();
                if (written >= options.input.size()) in.close_write();
            }
        }
    }

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) throw std::system_error(errno, std::generic_category(), "waitpid");
    }
    if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status)) result.exit_code = 128 + WTERMSIG(status);
    return result;
}

}  // namespace masszz
