#include "irof/error.hpp"
#include "transports.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <cerrno>
#include <condition_variable>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <mutex>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace irof::detail {

namespace {

class Pipe {
public:
    Pipe() {
        int fds[2];
        if (::pipe2(fds, O_CLOEXEC) != 0) {
            throw BackendError(std::string("pipe2 failed: ") + std::strerror(errno), 1, true);
        }
        read_ = fds[0];
        write_ = fds[1];
    }
    ~Pipe() {
        close_read();
        close_write();
    }
    Pipe(const Pipe&) = delete;
    Pipe& operator=(const Pipe&) = delete;

    int read_end() const noexcept { return read_; }
    int write_end() const noexcept { return write_; }
    void close_read() noexcept {
        if (read_ >= 0) {
            ::close(read_);
            read_ = -1;
        }
    }
    void close_write() noexcept {
        if (write_ >= 0) {
            ::close(write_);
            write_ = -1;
        }
    }

private:
    int read_ = -1;
    int write_ = -1;
};

// A model process speaking the line protocol on stdin/stdout. stderr is inherited.
class ModelProcess {
public:
    explicit ModelProcess(const std::string& command) : command_(command) {
        pid_ = ::fork();
        if (pid_ < 0) {
            throw BackendError(std::string("fork failed: ") + std::strerror(errno), 1, true);
        }
        if (pid_ == 0) {
            ::dup2(to_child_.read_end(), STDIN_FILENO);
            ::dup2(from_child_.write_end(), STDOUT_FILENO);
            ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        to_child_.close_read();
        from_child_.close_write();
        ::fcntl(to_child_.write_end(), F_SETFL, O_NONBLOCK);
        ::fcntl(from_child_.read_end(), F_SETFL, O_NONBLOCK);
    }

    ~ModelProcess() {
        to_child_.close_write();
        from_child_.close_read();
        if (pid_ > 0) {
            int status = 0;
            for (int i = 0; i < 50; ++i) {
                if (::waitpid(pid_, &status, WNOHANG) == pid_) {
                    return;
                }
                ::usleep(10000);
            }
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, &status, 0);
        }
    }

    ModelProcess(const ModelProcess&) = delete;
    ModelProcess& operator=(const ModelProcess&) = delete;

    // Writes all request lines and collects one response line per request, multiplexing both
    // directions so a full pipe never deadlocks.
    std::vector<std::string> exchange(const std::string& payload, std::size_t expected,
                                      std::chrono::milliseconds timeout) {
        std::vector<std::string> lines;
        std::size_t written = 0;
        std::string pending;
        char buffer[65536];
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (lines.size() < expected) {
            pollfd fds[2];
            nfds_t count = 0;
            fds[count++] = {from_child_.read_end(), POLLIN, 0};
            if (written < payload.size()) {
                fds[count++] = {to_child_.write_end(), POLLOUT, 0};
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) {
                throw BackendError("model process timed out", 1, true);
            }
            const int ready = ::poll(fds, count, static_cast<int>(left.count()));
            if (ready < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw BackendError(std::string("poll failed: ") + std::strerror(errno), 1, true);
            }
            if (count == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
                const ssize_t n = ::write(to_child_.write_end(), payload.data() + written,
                                          payload.size() - written);
                if (n < 0 && errno != EAGAIN && errno != EINTR) {
                    throw BackendError("model process closed its input (" +
                                       std::string(std::strerror(errno)) + ")", 1, true);
                }
                if (n > 0) {
                    written += static_cast<std::size_t>(n);
                }
            }
            if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
                const ssize_t n = ::read(from_child_.read_end(), buffer, sizeof(buffer));
                if (n == 0) {
                    throw BackendError("model process exited", 1, true);
                }
                if (n < 0) {
                    if (errno == EAGAIN || errno == EINTR) {
                        continue;
                    }
                    throw BackendError(std::string("read from model failed: ") + std::strerror(errno), 1, true);
                }
                pending.append(buffer, static_cast<std::size_t>(n));
                std::size_t start = 0;
                for (std::size_t nl; (nl = pending.find('\n', start)) != std::string::npos; start = nl + 1) {
                    if (nl > start) {
                        lines.emplace_back(pending, start, nl - start);
                    }
                }
                pending.erase(0, start);
            }
        }
        if (!pending.empty()) {
            throw BackendError("model process sent more output than requested", 1, true);
        }
        return lines;
    }

private:
    std::string command_;
    Pipe to_child_;
    Pipe from_child_;
    pid_t pid_ = -1;
};

class ProcessBackend final : public ModelBackend {
public:
    explicit ProcessBackend(const BackendConfig& config) : ModelBackend(config) {
        static std::once_flag ignore_sigpipe;
        std::call_once(ignore_sigpipe, [] { std::signal(SIGPIPE, SIG_IGN); });
        for (std::size_t i = 0; i < config.pool_size; ++i) {
            slots_.push_back(std::make_unique<ModelProcess>(config.endpoint));
            free_.push_back(i);
        }
    }

protected:
    std::vector<ClassScores> run_batch(std::span<const Image> images) override {
        const std::size_t slot = acquire();
        struct Release {
            ProcessBackend* self;
            std::size_t slot;
            ~Release() { self->release(slot); }
        } release{this, slot};

        std::string payload;
        std::vector<std::string> ids;
        for (const Image& image : images) {
            ids.push_back(std::to_string(next_id_++));
            payload += protocol::encode_request(ids.back(), image, config().layout.order);
            payload += '\n';
        }

        const int attempts = config().max_attempts;
        for (int attempt = 1;; ++attempt) {
            try {
                const auto lines = slots_[slot]->exchange(payload, images.size(), config().timeout);
                std::vector<ClassScores> out;
                out.reserve(lines.size());
                for (std::size_t i = 0; i < lines.size(); ++i) {
                    auto response = protocol::decode_response(lines[i]);
                    if (response.id != ids[i]) {
                        throw BackendError("model answered request " + response.id +
                                           " out of order (expected " + ids[i] + ")", 1, true);
                    }
                    if (!response.error.empty()) {
                        throw BackendError("model rejected the input: " + response.error, attempt, false);
                    }
                    out.push_back(std::move(*response.scores));
                }
                return out;
            } catch (const BackendError& e) {
                if (!e.retryable()) {
                    throw BackendError(e.what(), attempt, false);
                }
                if (attempt >= attempts) {
                    throw BackendError(std::string(e.what()) + " (after " + std::to_string(attempt) +
                                       " attempts)", attempt, true);
                }
                spdlog::warn("model process failed ({}); restarting, attempt {}/{}", e.what(),
                             attempt + 1, attempts);
                slots_[slot] = std::make_unique<ModelProcess>(config().endpoint);
            }
        }
    }

private:
    std::size_t acquire() {
        std::unique_lock lock(mutex_);
        available_.wait(lock, [&] { return !free_.empty(); });
        const std::size_t slot = free_.back();
        free_.pop_back();
        return slot;
    }

    void release(std::size_t slot) {
        {
            std::lock_guard lock(mutex_);
            free_.push_back(slot);
        }
        available_.notify_one();
    }

    std::vector<std::unique_ptr<ModelProcess>> slots_;
    std::vector<std::size_t> free_;
    std::mutex mutex_;
    std::condition_variable available_;
    std::atomic<std::uint64_t> next_id_{0};
};

} // namespace

std::unique_ptr<ModelBackend> make_process_backend(const BackendConfig& config) {
    return std::make_unique<ProcessBackend>(config);
}

} // namespace irof::detail
