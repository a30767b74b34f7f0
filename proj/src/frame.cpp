#include "devchain/net/frame.hpp"

#include <cstring>

namespace devchain::net {

bytes encode_frame(const frame& f) {
    if (f.payload.size() > max_frame_payload)
        raise(errc::bad_request, "frame payload too large");
    uint32_t len = static_cast<uint32_t>(f.payload.size()) + 1;
    bytes out;
    out.reserve(4 + len);
    out.push_back(static_cast<uint8_t>(len >> 24));
    out.push_back(static_cast<uint8_t>(len >> 16));
    out.push_back(static_cast<uint8_t>(len >> 8));
    out.push_back(static_cast<uint8_t>(len));
    out.push_back(static_cast<uint8_t>(f.type));
    out.insert(out.end(), f.payload.begin(), f.payload.end());
    return out;
}

void frame_reader::feed(bytes_view data) {
    if (off_ > 0 && off_ == buf_.size()) {
        buf_.clear();
        off_ = 0;
    }
    buf_.insert(buf_.end(), data.begin(), data.end());
}

std::optional<frame> frame_reader::next() {
    if (buffered() < 4) return std::nullopt;
    const uint8_t* p = buf_.data() + off_;
    uint32_t len = (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) |
                   (uint32_t(p[2]) << 8) | uint32_t(p[3]);
    if (len == 0) raise(errc::bad_request, "zero-length frame");
    if (len > max_frame_payload + 1) raise(errc::bad_request, "oversized frame");
    if (buffered() < 4 + size_t(len)) return std::nullopt;

    frame f;
    f.type = static_cast<msg_type>(p[4]);
    f.payload.assign(p + 5, p + 4 + len);
    off_ += 4 + size_t(len);
    if (off_ == buf_.size()) {
        buf_.clear();
        off_ = 0;
    } else if (off_ > (1u << 20)) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<ptrdiff_t>(off_));
        off_ = 0;
    }
    return f;
}

}  // namespace devchain::net
