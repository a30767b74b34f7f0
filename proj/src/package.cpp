#include "devchain/pipeline/package.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace devchain::pipeline {

namespace fs = std::filesystem;

static bytes read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) raise(errc::not_found, "cannot read " + p.string());
    return bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string snapshot_dir(castore::store& cs, const fs::path& dir) {
    if (!fs::is_directory(dir)) raise(errc::path_not_found, dir.string() + " is not a directory");
    std::vector<fs::directory_entry> children;
    for (const auto& e : fs::directory_iterator(dir)) children.push_back(e);
    std::sort(children.begin(), children.end(),
              [](const auto& a, const auto& b) { return a.path().filename() < b.path().filename(); });

    std::vector<castore::tree_entry> entries;
    for (const auto& child : children) {
        std::string name = child.path().filename().string();
        if (child.is_symlink()) continue;
        if (child.is_directory()) {
            entries.push_back({name, "tree", snapshot_dir(cs, child.path()), 0});
        } else if (child.is_regular_file()) {
            bytes content = read_file(child.path());
            entries.push_back({name, "blob", cs.put_blob(content), content.size()});
        }
        // sockets, fifos etc. are not part of a snapshot
    }
    return cs.put_tree(std::move(entries));
}

void materialize_tree(const castore::store& cs, const std::string& tree_cid,
                      const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) raise(errc::target_unwritable, "cannot create " + dir.string());
    doc tree = cs.get_object(tree_cid);
    if (require_string(tree, "kind") != "tree")
        raise(errc::bad_args, tree_cid + " is not a tree");
    for (const doc& e : require_field(tree, "entries")) {
        std::string path = require_string(e, "path");
        std::string kind = require_string(e, "kind");
        std::string cid = require_string(e, "cid");
        if (kind == "tree") {
            materialize_tree(cs, cid, dir / path);
        } else {
            bytes content = cs.get_blob(cid);
            std::ofstream out(dir / path, std::ios::binary | std::ios::trunc);
            out.write(reinterpret_cast<const char*>(content.data()),
                      std::streamsize(content.size()));
            if (!out) raise(errc::target_unwritable, "cannot write " + (dir / path).string());
        }
    }
}

static void walk_into(const castore::store& cs, const std::string& tree_cid,
                      const std::string& prefix, std::vector<file_entry>& out) {
    doc tree = cs.get_object(tree_cid);
    if (require_string(tree, "kind") != "tree")
        raise(errc::bad_args, tree_cid + " is not a tree");
    for (const doc& e : require_field(tree, "entries")) {
        std::string path = prefix + require_string(e, "path");
        std::string kind = require_string(e, "kind");
        std::string cid = require_string(e, "cid");
        if (kind == "tree")
            walk_into(cs, cid, path + "/", out);
        else
            out.push_back({path, cid, require_uint(e, "size_bytes")});
    }
}

std::vector<file_entry> walk_tree(const castore::store& cs, const std::string& tree_cid) {
    std::vector<file_entry> out;
    walk_into(cs, tree_cid, "", out);
    return out;
}

static void put_u32(bytes& out, uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(uint8_t(v >> (8 * i)));
}

static void put_u64(bytes& out, uint64_t v) {
    for (int i = 7; i >= 0; --i) out.push_back(uint8_t(v >> (8 * i)));
}

static constexpr char magic[8] = {'d', 'e', 'v', 'p', 'a', 'c', 'k', '1'};

bytes make_package(const castore::store& cs, const std::string& tree_cid,
                   const std::vector<std::string>& include_paths) {
    // Collect the covered files, deduplicated and sorted by archive path.
    std::map<std::string, std::string> files;  // path -> blob cid
    for (const std::string& raw : include_paths) {
        std::string path = raw == "." ? "" : raw;
        std::string cid = cs.resolve_path(tree_cid, path);  // throws path_not_found
        bool is_tree = cs.is_structured(cid) &&
                       require_string(cs.get_object(cid), "kind") == "tree";
        if (is_tree) {
            std::string prefix = path.empty() ? "" : path + "/";
            for (const file_entry& f : walk_tree(cs, cid)) files[prefix + f.path] = f.cid;
        } else {
            files[path] = cid;
        }
    }

    bytes out(magic, magic + sizeof(magic));
    put_u32(out, uint32_t(files.size()));
    for (const auto& [path, cid] : files) {
        bytes content = cs.get_blob(cid);
        put_u32(out, uint32_t(path.size()));
        out.insert(out.end(), path.begin(), path.end());
        put_u64(out, content.size());
        out.insert(out.end(), content.begin(), content.end());
    }
    return out;
}

std::vector<std::pair<std::string, bytes>> extract_package(bytes_view archive) {
    size_t off = 0;
    auto need = [&](uint64_t n) {  // overflow-safe: off never exceeds size
        if (n > archive.size() - off)
            raise(errc::malformed_document, "package: truncated at byte " + std::to_string(off));
    };
    need(sizeof(magic) + 4);
    if (!std::equal(magic, magic + sizeof(magic), archive.begin()))
        raise(errc::malformed_document, "package: bad magic");
    off = sizeof(magic);
    uint32_t count = 0;
    for (int i = 0; i < 4; ++i) count = (count << 8) | archive[off++];

    std::vector<std::pair<std::string, bytes>> out;
    std::string prev;
    for (uint32_t i = 0; i < count; ++i) {
        need(4);
        uint32_t path_len = 0;
        for (int b = 0; b < 4; ++b) path_len = (path_len << 8) | archive[off++];
        need(path_len);
        std::string path(archive.begin() + std::ptrdiff_t(off),
                         archive.begin() + std::ptrdiff_t(off + path_len));
        off += path_len;
        need(8);
        uint64_t data_len = 0;
        for (int b = 0; b < 8; ++b) data_len = (data_len << 8) | archive[off++];
        need(data_len);
        bytes content(archive.begin() + std::ptrdiff_t(off),
                      archive.begin() + std::ptrdiff_t(off + data_len));
        off += data_len;
        if (i > 0 && !(prev < path))
            raise(errc::malformed_document, "package: entries not strictly sorted");
        prev = path;
        out.emplace_back(std::move(path), std::move(content));
    }
    if (off != archive.size())
        raise(errc::malformed_document, "package: trailing bytes after last entry");
    return out;
}

}  // namespace devchain::pipeline
