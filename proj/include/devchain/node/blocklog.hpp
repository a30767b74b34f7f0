#pragma once

#include <filesystem>
#include <vector>

#include "devchain/block.hpp"

namespace devchain::node {

// Append-only on-disk chain: each record is a 4-byte big-endian length
// followed by the canonical block document. A sidecar index file holds one
// 8-byte big-endian offset per record. A torn tail (crash mid-append) is
// truncated on open; a complete record that fails to parse means the chain
// bytes were altered and opening throws corrupt_chain.
class block_log {
  public:
    explicit block_log(std::filesystem::path dir);

    void append(const block& b);
    uint64_t size() const { return offsets_.size(); }
    block read(uint64_t index) const;
    std::vector<block> read_all() const;

    const std::filesystem::path& log_path() const { return log_path_; }

  private:
    void recover();
    void write_index() const;

    std::filesystem::path log_path_;
    std::filesystem::path idx_path_;
    std::vector<uint64_t> offsets_;
};

}  // namespace devchain::node
