#pragma once

#include <optional>

#include "devchain/bytes.hpp"
#include "devchain/errors.hpp"

namespace devchain::net {

// Wire frame: 4-byte big-endian length (counting the type byte and payload),
// 1-byte message type, canonical-encoded payload.
enum class msg_type : uint8_t {
    submit_tx = 0x01,
    block = 0x02,
    ack = 0x03,
    event_sub = 0x04,
    event = 0x05,
    // request/response riding the same framing on the RPC port
    rpc_request = 0x10,
    rpc_response = 0x11,
};

struct frame {
    msg_type type{};
    bytes payload;

    bool operator==(const frame&) const = default;
};

// Upper bound on a single frame; a block of 500 txs stays far below this.
constexpr size_t max_frame_payload = 64 * 1024 * 1024;

bytes encode_frame(const frame& f);

// Incremental decoder over a byte stream: feed() arbitrary splits, next()
// pops complete frames. Throws bad_request on oversized or zero-length frames.
class frame_reader {
  public:
    void feed(bytes_view data);
    std::optional<frame> next();
    size_t buffered() const { return buf_.size() - off_; }

  private:
    bytes buf_;
    size_t off_ = 0;
};

}  // namespace devchain::net
