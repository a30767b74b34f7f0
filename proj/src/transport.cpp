#include "devchain/net/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <map>
#include <mutex>

namespace devchain::net {

namespace {

using clock = std::chrono::steady_clock;

int remaining_ms(int timeout_ms, clock::time_point start) {
    if (timeout_ms < 0) return -1;
    auto spent =
        std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - start)
            .count();
    long left = timeout_ms - spent;
    return left > 0 ? static_cast<int>(left) : 0;
}

// ---------------------------------------------------------------- tcp

struct tcp_addr {
    std::string host;
    uint16_t port;
};

tcp_addr parse_tcp(const std::string& endpoint) {
    size_t colon = endpoint.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size())
        raise(errc::connection_failed, "bad endpoint '" + endpoint + "'");
    int port = 0;
    for (size_t i = colon + 1; i < endpoint.size(); ++i) {
        char c = endpoint[i];
        if (c < '0' || c > '9' || (port = port * 10 + (c - '0')) > 65535)
            raise(errc::connection_failed, "bad port in '" + endpoint + "'");
    }
    return {endpoint.substr(0, colon), static_cast<uint16_t>(port)};
}

sockaddr_in make_sockaddr(const tcp_addr& a) {
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(a.port);
    if (inet_pton(AF_INET, a.host.c_str(), &sa.sin_addr) != 1)
        raise(errc::connection_failed, "bad address '" + a.host + "'");
    return sa;
}

std::string addr_string(const sockaddr_in& sa) {
    char buf[INET_ADDRSTRLEN] = {};
    inet_ntop(AF_INET, &sa.sin_addr, buf, sizeof(buf));
    return std::string(buf) + ":" + std::to_string(ntohs(sa.sin_port));
}

class tcp_connection final : public connection {
  public:
    tcp_connection(int fd, std::string peer, counters_ptr c)
        : connection(std::move(c)), fd_(fd), peer_(std::move(peer)) {
        int one = 1;
        setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    }

    ~tcp_connection() override { close(); }

    void send(const frame& f) override {
        bytes wire = encode_frame(f);
        std::lock_guard lock(send_mu_);
        size_t off = 0;
        while (off < wire.size()) {
            ssize_t n = ::send(fd_, wire.data() + off, wire.size() - off, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                raise(errc::connection_failed,
                      "send to " + peer_ + ": " + std::strerror(errno));
            }
            off += static_cast<size_t>(n);
        }
        counters_->bytes_out.fetch_add(wire.size());
    }

    recv_status receive(frame& out, int timeout_ms) override {
        auto start = clock::now();
        while (true) {
            if (auto f = reader_.next()) {
                out = std::move(*f);
                return recv_status::got;
            }
            if (eof_) return recv_status::eof;

            pollfd pfd{fd_, POLLIN, 0};
            int r = ::poll(&pfd, 1, remaining_ms(timeout_ms, start));
            if (r < 0) {
                if (errno == EINTR) continue;
                return recv_status::eof;
            }
            if (r == 0) return recv_status::timed_out;
            if (pfd.revents & (POLLNVAL | POLLERR)) return recv_status::eof;

            uint8_t buf[65536];
            ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN) continue;
                return recv_status::eof;  // reset peers read as end of stream
            }
            if (n == 0) {
                eof_ = true;
                continue;  // drain any fully buffered frame first
            }
            counters_->bytes_in.fetch_add(static_cast<uint64_t>(n));
            reader_.feed(bytes_view(buf, static_cast<size_t>(n)));
        }
    }

    void close() override {
        int fd = fd_.exchange(-1);
        if (fd >= 0) {
            ::shutdown(fd, SHUT_RDWR);
            ::close(fd);
        }
    }

    std::string peer() const override { return peer_; }

  private:
    std::atomic<int> fd_;
    std::string peer_;
    std::mutex send_mu_;
    frame_reader reader_;
    bool eof_ = false;
};

class tcp_listener final : public listener {
  public:
    tcp_listener(const tcp_addr& addr, counters_ptr counters)
        : counters_(std::move(counters)) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0) raise(errc::connection_failed, "socket: no descriptors");
        int one = 1;
        setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in sa = make_sockaddr(addr);
        if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
            int err = errno;
            ::close(fd_);
            if (err == EADDRINUSE)
                raise(errc::port_in_use, "port in use: " + addr_string(sa));
            raise(errc::connection_failed,
                  "bind " + addr_string(sa) + ": " + std::strerror(err));
        }
        if (::listen(fd_, 64) != 0) {
            ::close(fd_);
            raise(errc::connection_failed, "listen failed");
        }
        sockaddr_in actual{};
        socklen_t len = sizeof(actual);
        getsockname(fd_, reinterpret_cast<sockaddr*>(&actual), &len);
        endpoint_ = addr_string(actual);
    }

    ~tcp_listener() override { close(); }

    std::optional<connection_ptr> accept(int timeout_ms) override {
        int fd = fd_.load();
        if (fd < 0) return std::nullopt;
        pollfd pfd{fd, POLLIN, 0};
        int r = ::poll(&pfd, 1, timeout_ms);
        if (r <= 0 || (pfd.revents & (POLLNVAL | POLLERR | POLLHUP)))
            return std::nullopt;
        sockaddr_in sa{};
        socklen_t len = sizeof(sa);
        int cfd = ::accept(fd, reinterpret_cast<sockaddr*>(&sa), &len);
        if (cfd < 0) return std::nullopt;
        return std::make_shared<tcp_connection>(cfd, addr_string(sa), counters_);
    }

    void close() override {
        int fd = fd_.exchange(-1);
        if (fd >= 0) {
            ::shutdown(fd, SHUT_RDWR);
            ::close(fd);
        }
    }

    std::string endpoint() const override { return endpoint_; }

  private:
    std::atomic<int> fd_{-1};
    std::string endpoint_;
    counters_ptr counters_;
};

connection_ptr tcp_dial(const std::string& endpoint, int timeout_ms, counters_ptr c) {
    sockaddr_in sa = make_sockaddr(parse_tcp(endpoint));
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) raise(errc::connection_failed, "socket: no descriptors");

    int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int r = ::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa));
    if (r != 0 && errno == EINPROGRESS) {
        pollfd pfd{fd, POLLOUT, 0};
        int pr = ::poll(&pfd, 1, timeout_ms);
        if (pr == 0) {
            ::close(fd);
            raise(errc::timeout, "connect to " + endpoint + " timed out");
        }
        int err = 0;
        socklen_t len = sizeof(err);
        getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        if (pr < 0 || err != 0) r = -1, errno = err;
        else r = 0;
    }
    if (r != 0) {
        int err = errno;
        ::close(fd);
        raise(errc::connection_failed,
              "connect " + endpoint + ": " + std::strerror(err));
    }
    fcntl(fd, F_SETFL, flags);  // back to blocking; reads poll first
    return std::make_shared<tcp_connection>(fd, endpoint, std::move(c));
}

// ---------------------------------------------------------------- inproc

// One direction of an in-process duplex pipe.
struct inproc_channel {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<frame> q;
    bool closed = false;

    void push(frame f) {
        {
            std::lock_guard lock(mu);
            if (closed) raise(errc::connection_failed, "inproc peer closed");
            q.push_back(std::move(f));
        }
        cv.notify_all();
    }

    recv_status pop(frame& out, int timeout_ms) {
        std::unique_lock lock(mu);
        auto ready = [&] { return !q.empty() || closed; };
        if (timeout_ms < 0)
            cv.wait(lock, ready);
        else if (!cv.wait_for(lock, std::chrono::milliseconds(timeout_ms), ready))
            return recv_status::timed_out;
        if (!q.empty()) {
            out = std::move(q.front());
            q.pop_front();
            return recv_status::got;
        }
        return recv_status::eof;
    }

    void close_side() {
        {
            std::lock_guard lock(mu);
            closed = true;
        }
        cv.notify_all();
    }
};

struct inproc_pipe {
    inproc_channel a_to_b;
    inproc_channel b_to_a;
};

class inproc_connection final : public connection {
  public:
    inproc_connection(std::shared_ptr<inproc_pipe> pipe, bool is_a, std::string peer,
                      counters_ptr c)
        : connection(std::move(c)), pipe_(std::move(pipe)), is_a_(is_a),
          peer_(std::move(peer)) {}

    ~inproc_connection() override { close(); }

    void send(const frame& f) override {
        size_t wire = f.payload.size() + 5;  // mirrors the tcp byte accounting
        (is_a_ ? pipe_->a_to_b : pipe_->b_to_a).push(f);
        counters_->bytes_out.fetch_add(wire);
    }

    recv_status receive(frame& out, int timeout_ms) override {
        recv_status s = (is_a_ ? pipe_->b_to_a : pipe_->a_to_b).pop(out, timeout_ms);
        if (s == recv_status::got) counters_->bytes_in.fetch_add(out.payload.size() + 5);
        return s;
    }

    void close() override {
        pipe_->a_to_b.close_side();
        pipe_->b_to_a.close_side();
    }

    std::string peer() const override { return peer_; }

  private:
    std::shared_ptr<inproc_pipe> pipe_;
    bool is_a_;
    std::string peer_;
};

struct inproc_listener_state {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<connection_ptr> pending;
    bool closed = false;
    counters_ptr counters;  // shared with accepted connections, like tcp
};

std::mutex g_inproc_mu;
std::map<std::string, std::shared_ptr<inproc_listener_state>> g_inproc;

class inproc_listener final : public listener {
  public:
    inproc_listener(std::string name, counters_ptr counters)
        : name_(std::move(name)), counters_(std::move(counters)),
          state_(std::make_shared<inproc_listener_state>()) {
        state_->counters = counters_;
        std::lock_guard lock(g_inproc_mu);
        auto [it, inserted] = g_inproc.emplace(name_, state_);
        if (!inserted) raise(errc::port_in_use, "inproc name in use: " + name_);
    }

    ~inproc_listener() override { close(); }

    std::optional<connection_ptr> accept(int timeout_ms) override {
        std::unique_lock lock(state_->mu);
        auto ready = [&] { return !state_->pending.empty() || state_->closed; };
        if (timeout_ms < 0)
            state_->cv.wait(lock, ready);
        else if (!state_->cv.wait_for(lock, std::chrono::milliseconds(timeout_ms),
                                      ready))
            return std::nullopt;
        if (state_->pending.empty()) return std::nullopt;
        connection_ptr c = std::move(state_->pending.front());
        state_->pending.pop_front();
        return c;
    }

    void close() override {
        {
            std::lock_guard lock(g_inproc_mu);
            auto it = g_inproc.find(name_);
            if (it != g_inproc.end() && it->second == state_) g_inproc.erase(it);
        }
        {
            std::lock_guard lock(state_->mu);
            state_->closed = true;
        }
        state_->cv.notify_all();
    }

    std::string endpoint() const override { return name_; }
    counters_ptr counters() const { return counters_; }
    std::shared_ptr<inproc_listener_state> state() const { return state_; }

  private:
    std::string name_;
    counters_ptr counters_;
    std::shared_ptr<inproc_listener_state> state_;
};

connection_ptr inproc_dial(const std::string& endpoint, counters_ptr c) {
    std::shared_ptr<inproc_listener_state> state;
    {
        std::lock_guard lock(g_inproc_mu);
        auto it = g_inproc.find(endpoint);
        if (it == g_inproc.end())
            raise(errc::connection_failed, "no inproc listener at " + endpoint);
        state = it->second;
    }
    auto pipe = std::make_shared<inproc_pipe>();
    auto server_side = std::make_shared<inproc_connection>(pipe, false, "inproc-client",
                                                           state->counters);
    auto client_side =
        std::make_shared<inproc_connection>(pipe, true, endpoint, std::move(c));
    {
        std::lock_guard lock(state->mu);
        if (state->closed)
            raise(errc::connection_failed, "inproc listener closed: " + endpoint);
        state->pending.push_back(std::move(server_side));
    }
    state->cv.notify_all();
    return client_side;
}

bool is_inproc(const std::string& endpoint) {
    return endpoint.rfind("inproc://", 0) == 0;
}

}  // namespace

listener_ptr listen(const std::string& endpoint, counters_ptr counters) {
    if (is_inproc(endpoint))
        return std::make_unique<inproc_listener>(endpoint, std::move(counters));
    return std::make_unique<tcp_listener>(parse_tcp(endpoint), std::move(counters));
}

connection_ptr dial(const std::string& endpoint, int timeout_ms, counters_ptr counters) {
    if (is_inproc(endpoint)) return inproc_dial(endpoint, std::move(counters));
    return tcp_dial(endpoint, timeout_ms, std::move(counters));
}

}  // namespace devchain::net
