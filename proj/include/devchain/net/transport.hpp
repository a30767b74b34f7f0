#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <string>

#include "devchain/net/frame.hpp"

namespace devchain::net {

// Raw byte totals over a transport, shared across a node's connections so
// the daemon can report its I/O footprint.
struct io_counters {
    std::atomic<uint64_t> bytes_in{0};
    std::atomic<uint64_t> bytes_out{0};
};
using counters_ptr = std::shared_ptr<io_counters>;

enum class recv_status { got, eof, timed_out };

// A bidirectional, ordered stream of frames. send() is thread-safe against
// itself; receive() is meant for a single reader thread.
class connection {
  public:
    virtual ~connection() = default;
    virtual void send(const frame& f) = 0;  // throws connection_failed when broken
    // timeout_ms < 0 waits forever. Malformed inbound framing throws bad_request.
    virtual recv_status receive(frame& out, int timeout_ms) = 0;
    virtual void close() = 0;
    virtual std::string peer() const = 0;

    uint64_t bytes_in() const { return counters_->bytes_in.load(); }
    uint64_t bytes_out() const { return counters_->bytes_out.load(); }

  protected:
    explicit connection(counters_ptr c)
        : counters_(c ? std::move(c) : std::make_shared<io_counters>()) {}
    counters_ptr counters_;
};
using connection_ptr = std::shared_ptr<connection>;

class listener {
  public:
    virtual ~listener() = default;
    // nullopt on timeout or after close(); accepted connections share the
    // listener's counters.
    virtual std::optional<connection_ptr> accept(int timeout_ms) = 0;
    virtual void close() = 0;
    virtual std::string endpoint() const = 0;  // actual address (resolves port 0)
};
using listener_ptr = std::unique_ptr<listener>;

// Endpoints: "<ipv4>:<port>" for TCP loopback, "inproc://<name>" for the
// in-process transport used by tests. Both carry identical frame semantics.
listener_ptr listen(const std::string& endpoint, counters_ptr counters = nullptr);
connection_ptr dial(const std::string& endpoint, int timeout_ms,
                    counters_ptr counters = nullptr);

}  // namespace devchain::net
