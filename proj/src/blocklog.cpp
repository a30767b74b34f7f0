#include "devchain/node/blocklog.hpp"

#include <fstream>

#include "devchain/value.hpp"

namespace devchain::node {

namespace fs = std::filesystem;

static uint32_t read_u32be(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) |
           uint32_t(p[3]);
}

block_log::block_log(fs::path dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) raise(errc::storage_full, "cannot create " + dir.string());
    log_path_ = dir / "blocks.log";
    idx_path_ = dir / "blocks.idx";
    if (!fs::exists(log_path_)) std::ofstream(log_path_, std::ios::binary).flush();
    recover();
}

void block_log::recover() {
    std::ifstream in(log_path_, std::ios::binary);
    bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    offsets_.clear();
    size_t off = 0;
    size_t good_end = 0;
    while (off + 4 <= data.size()) {
        uint32_t len = read_u32be(data.data() + off);
        if (len == 0 || len > (64u << 20))
            raise(errc::corrupt_chain, "block record " + std::to_string(offsets_.size()) +
                                           ": implausible length");
        if (off + 4 + len > data.size()) break;  // torn tail from a crashed append
        doc d;
        try {
            d = parse_doc(bytes_view(data.data() + off + 4, len));
            block::from_doc(d);
        } catch (const chain_error& e) {
            raise(errc::corrupt_chain, "block record " + std::to_string(offsets_.size()) +
                                           ": " + e.what());
        }
        offsets_.push_back(off);
        off += 4 + len;
        good_end = off;
    }
    if (good_end < data.size()) {
        fs::resize_file(log_path_, good_end);  // drop the torn tail
    }
    write_index();
}

void block_log::write_index() const {
    std::ofstream out(idx_path_, std::ios::binary | std::ios::trunc);
    for (uint64_t off : offsets_) {
        uint8_t buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<uint8_t>(off >> (56 - 8 * i));
        out.write(reinterpret_cast<const char*>(buf), 8);
    }
}

void block_log::append(const block& b) {
    bytes payload = canonical_encode(b.to_doc());
    uint32_t len = static_cast<uint32_t>(payload.size());
    uint8_t hdr[4] = {static_cast<uint8_t>(len >> 24), static_cast<uint8_t>(len >> 16),
                      static_cast<uint8_t>(len >> 8), static_cast<uint8_t>(len)};

    uint64_t offset = fs::file_size(log_path_);
    std::ofstream out(log_path_, std::ios::binary | std::ios::app);
    out.write(reinterpret_cast<const char*>(hdr), 4);
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    out.flush();
    if (!out) raise(errc::storage_full, "block append failed");
    offsets_.push_back(offset);

    std::ofstream idx(idx_path_, std::ios::binary | std::ios::app);
    uint8_t buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<uint8_t>(offset >> (56 - 8 * i));
    idx.write(reinterpret_cast<const char*>(buf), 8);
}

block block_log::read(uint64_t index) const {
    if (index >= offsets_.size()) raise(errc::not_found, "no block at that index");
    std::ifstream in(log_path_, std::ios::binary);
    in.seekg(static_cast<std::streamoff>(offsets_[index]));
    uint8_t hdr[4];
    in.read(reinterpret_cast<char*>(hdr), 4);
    uint32_t len = read_u32be(hdr);
    bytes payload(len);
    in.read(reinterpret_cast<char*>(payload.data()), len);
    if (!in) raise(errc::corrupt_chain, "short read from block log");
    return block::from_doc(parse_doc(payload));
}

std::vector<block> block_log::read_all() const {
    std::vector<block> out;
    out.reserve(offsets_.size());
    for (uint64_t i = 0; i < offsets_.size(); ++i) out.push_back(read(i));
    return out;
}

}  // namespace devchain::node
