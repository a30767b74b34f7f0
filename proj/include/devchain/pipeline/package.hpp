#pragma once

#include <filesystem>
#include <utility>

#include "devchain/castore/castore.hpp"

namespace devchain::pipeline {

struct file_entry {
    std::string path;  // '/'-joined, relative to the tree root
    std::string cid;
    uint64_t size_bytes = 0;
};

// Recursively stores a directory as blobs and trees; returns the root tree
// cid. Identical directory content yields the identical cid regardless of
// filesystem iteration order. Symlinks and special files are skipped.
std::string snapshot_dir(castore::store& cs, const std::filesystem::path& dir);

// Writes a stored tree back to disk (checkout / roundtrip oracle).
void materialize_tree(const castore::store& cs, const std::string& tree_cid,
                      const std::filesystem::path& dir);

// Depth-first listing of every file under a tree. Deterministic order.
std::vector<file_entry> walk_tree(const castore::store& cs, const std::string& tree_cid);

// Deterministic archive of the include paths, byte layout:
//   "devpack1" magic, u32be entry count, then per entry (sorted by path):
//   u32be path length, path bytes, u64be data length, data bytes.
// No timestamps, permissions or other metadata — identical trees produce
// identical archives. An include path naming a tree pulls in every file
// below it; "" or "." means the whole tree; an empty include list is a
// valid archive with zero entries.
bytes make_package(const castore::store& cs, const std::string& tree_cid,
                   const std::vector<std::string>& include_paths);

// Parses an archive back into (path, content) pairs, validating the magic,
// bounds and strict path ordering. Throws malformed_document.
std::vector<std::pair<std::string, bytes>> extract_package(bytes_view archive);

}  // namespace devchain::pipeline
