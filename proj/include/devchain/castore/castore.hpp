#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "devchain/value.hpp"

namespace devchain::castore {

// Content id: "sha256-" + 64 lowercase hex digits over the stored object's
// bytes. For chunked blobs the id addresses the manifest document.
std::string cid_of(bytes_view content);
bool well_formed(const std::string& cid);

struct tree_entry {
    std::string path;  // single segment, no '/', no ".."
    std::string kind;  // "blob" | "tree"
    std::string cid;
    uint64_t size_bytes = 0;
};

struct store_stats {
    uint64_t objects = 0;
    uint64_t bytes = 0;
    uint64_t pins = 0;
};

// Content-addressed object store on disk. Objects are immutable files at
// objects/<hex[0:2]>/<hex[2:4]>/<hex>; every read re-verifies the digest.
// Structured objects (blob manifests, trees, commits) are recorded in a
// `meta` index so raw content can never be misread as one of them, no
// matter what bytes it contains.
class store {
  public:
    static constexpr size_t chunk_size = 262144;  // 256 KiB

    explicit store(std::filesystem::path root);

    // Small content is stored verbatim (cid == digest of the bytes); blobs
    // over 256 KiB become chunk objects plus a kind-marked manifest.
    std::string put_blob(bytes_view content);
    std::string put_blob(const std::string& content);
    bytes get_blob(const std::string& cid) const;  // reassembles manifests

    std::string put_tree(std::vector<tree_entry> entries);
    std::string put_commit(const std::string& tree_cid,
                           const std::optional<std::string>& parent_cid,
                           const std::string& author, const std::string& message,
                           uint64_t authored_at_ms);

    // Parsed structured object (manifest, tree or commit); raw blobs throw
    // malformed_document.
    doc get_object(const std::string& cid) const;
    bool is_structured(const std::string& cid) const;

    // Raw stored bytes, digest-verified. Throws not_found / integrity_failure.
    bytes get_raw(const std::string& cid) const;
    bool has(const std::string& cid) const;

    // Replication path: stores object bytes exactly as received from a peer,
    // registering structured objects in the index. Returns the cid.
    std::string adopt_object(bytes_view raw, bool structured);

    // Walks "<root-cid>/a/b/c" through commits and trees to the target cid.
    // The empty path resolves commits to their tree and trees to themselves.
    std::string resolve_path(const std::string& root_cid, const std::string& path) const;

    void pin(const std::string& cid);
    void unpin(const std::string& cid);
    std::set<std::string> pins() const;

    // Deletes every object unreachable from the pin set; returns the victims.
    std::vector<std::string> gc();

    // Full store audit: digest of every object, resolvability of every
    // reference. Returns human-readable violation lines, empty when intact.
    std::vector<std::string> verify() const;

    std::vector<std::string> list() const;  // all cids, sorted
    store_stats stats() const;
    const std::filesystem::path& root() const { return root_; }

    // Outbound references of a structured object (chunks, entries, tree,
    // parent); empty for raw blobs.
    static std::vector<std::string> references(const doc& object);

  private:
    std::filesystem::path object_path(const std::string& cid) const;
    std::string put_object(bytes_view encoded);
    std::string put_structured(const doc& object);
    std::set<std::string> meta() const;
    void save_lines(const char* name, const std::set<std::string>& lines) const;

    std::filesystem::path root_;
};

}  // namespace devchain::castore
