#include "devchain/castore/castore.hpp"

#include <atomic>
#include <fstream>
#include <map>
#include <system_error>

namespace devchain::castore {

namespace fs = std::filesystem;

static constexpr std::string_view k_prefix = "sha256-";

std::string cid_of(bytes_view content) {
    return std::string(k_prefix) + sha256(content).hex();
}

bool well_formed(const std::string& cid) {
    if (cid.size() != k_prefix.size() + 64) return false;
    if (cid.compare(0, k_prefix.size(), k_prefix) != 0) return false;
    for (size_t i = k_prefix.size(); i < cid.size(); ++i) {
        char c = cid[i];
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    }
    return true;
}

static const std::string& require_cid(const std::string& cid) {
    if (!well_formed(cid)) raise(errc::malformed_cid, "bad content id: " + cid);
    return cid;
}

static bytes read_file(const fs::path& p, bool& found) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        found = false;
        return {};
    }
    found = true;
    bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return out;
}

store::store(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_ / "objects", ec);
    if (ec) raise(errc::storage_full, "cannot create store at " + root_.string());
}

fs::path store::object_path(const std::string& cid) const {
    std::string hex = require_cid(cid).substr(k_prefix.size());
    return root_ / "objects" / hex.substr(0, 2) / hex.substr(2, 2) / hex;
}

std::string store::put_object(bytes_view encoded) {
    std::string cid = cid_of(encoded);
    fs::path target = object_path(cid);
    std::error_code ec;
    if (fs::exists(target, ec)) return cid;  // content-addressed: already stored
    fs::create_directories(target.parent_path(), ec);
    if (ec) raise(errc::storage_full, "cannot create " + target.parent_path().string());

    static std::atomic<uint64_t> seq{0};
    fs::path tmp = target;
    tmp += ".tmp" + std::to_string(seq.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(encoded.data()),
                  static_cast<std::streamsize>(encoded.size()));
        if (!out) {
            out.close();
            fs::remove(tmp, ec);
            raise(errc::storage_full, "write failed for " + cid);
        }
    }
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        if (!fs::exists(target)) raise(errc::storage_full, "rename failed for " + cid);
    }
    return cid;
}

std::set<std::string> store::meta() const {
    std::set<std::string> out;
    std::ifstream in(root_ / "meta");
    std::string line;
    while (std::getline(in, line))
        if (well_formed(line)) out.insert(line);
    return out;
}

std::string store::put_structured(const doc& object) {
    bytes encoded = canonical_encode(object);
    std::string cid = put_object(encoded);
    if (!meta().count(cid)) {
        std::ofstream out(root_ / "meta", std::ios::app);
        out << cid << '\n';
        if (!out) raise(errc::storage_full, "cannot index " + cid);
    }
    return cid;
}

std::string store::adopt_object(bytes_view raw, bool structured) {
    if (!structured) return put_object(raw);
    doc obj;
    try {
        obj = parse_doc(raw);
    } catch (const chain_error&) {
        raise(errc::malformed_document, "adopted object is not a document");
    }
    if (!obj.is_object() || !obj.contains("kind"))
        raise(errc::malformed_document, "adopted object has no kind");
    return put_structured(obj);
}

bool store::is_structured(const std::string& cid) const {
    return meta().count(require_cid(cid)) > 0;
}

bool store::has(const std::string& cid) const {
    std::error_code ec;
    return fs::exists(object_path(cid), ec);
}

bytes store::get_raw(const std::string& cid) const {
    bool found = false;
    bytes raw = read_file(object_path(cid), found);
    if (!found) raise(errc::not_found, "no object " + cid);
    if (cid_of(raw) != cid) raise(errc::integrity_failure, "digest mismatch for " + cid);
    return raw;
}

doc store::get_object(const std::string& cid) const {
    bytes raw = get_raw(cid);
    if (!is_structured(cid))
        raise(errc::malformed_document, "not a structured object: " + cid);
    doc obj;
    try {
        obj = parse_doc(raw);
    } catch (const chain_error&) {
        raise(errc::integrity_failure, "unparseable structured object " + cid);
    }
    if (!obj.is_object() || !obj.contains("kind") || !obj["kind"].is_string())
        raise(errc::integrity_failure, "structured object without kind: " + cid);
    std::string kind = obj["kind"].get<std::string>();
    if (kind != "blob-manifest" && kind != "tree" && kind != "commit")
        raise(errc::integrity_failure, "unknown object kind '" + kind + "' in " + cid);
    return obj;
}

std::string store::put_blob(bytes_view content) {
    if (content.size() <= chunk_size) return put_object(content);

    doc chunk_cids = doc::array();
    for (size_t off = 0; off < content.size(); off += chunk_size) {
        size_t n = std::min(chunk_size, content.size() - off);
        chunk_cids.push_back(put_object(content.subspan(off, n)));
    }
    doc manifest{{"kind", "blob-manifest"},
                 {"total_size", content.size()},
                 {"logical_id", cid_of(content)},
                 {"chunk_cids", std::move(chunk_cids)}};
    return put_structured(manifest);
}

std::string store::put_blob(const std::string& content) {
    return put_blob(bytes_view(reinterpret_cast<const uint8_t*>(content.data()),
                               content.size()));
}

bytes store::get_blob(const std::string& cid) const {
    if (!is_structured(require_cid(cid))) return get_raw(cid);

    doc obj = get_object(cid);
    if (obj["kind"] != "blob-manifest")
        raise(errc::bad_args, "not a blob: " + cid);
    bytes out;
    out.reserve(require_uint(obj, "total_size"));
    for (const auto& c : require_field(obj, "chunk_cids")) {
        bytes chunk = get_raw(c.get<std::string>());
        out.insert(out.end(), chunk.begin(), chunk.end());
    }
    if (out.size() != require_uint(obj, "total_size") ||
        cid_of(out) != require_string(obj, "logical_id"))
        raise(errc::integrity_failure, "blob reassembly mismatch for " + cid);
    return out;
}

std::string store::put_tree(std::vector<tree_entry> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const tree_entry& a, const tree_entry& b) { return a.path < b.path; });
    doc list = doc::array();
    std::string prev;
    for (const auto& e : entries) {
        if (e.path.empty() || e.path == "." || e.path == ".." ||
            e.path.find('/') != std::string::npos)
            raise(errc::bad_args, "bad tree entry path '" + e.path + "'");
        if (!list.empty() && e.path == prev)
            raise(errc::bad_args, "duplicate tree entry '" + e.path + "'");
        if (e.kind != "blob" && e.kind != "tree")
            raise(errc::bad_args, "bad tree entry kind '" + e.kind + "'");
        if (!has(require_cid(e.cid)))
            raise(errc::dangling_reference, "tree entry '" + e.path + "' -> " + e.cid);
        list.push_back(doc{{"path", e.path},
                           {"kind", e.kind},
                           {"cid", e.cid},
                           {"size_bytes", e.size_bytes}});
        prev = e.path;
    }
    return put_structured(doc{{"kind", "tree"}, {"entries", std::move(list)}});
}

std::string store::put_commit(const std::string& tree_cid,
                              const std::optional<std::string>& parent_cid,
                              const std::string& author, const std::string& message,
                              uint64_t authored_at_ms) {
    if (!has(require_cid(tree_cid)))
        raise(errc::dangling_reference, "commit tree " + tree_cid);
    if (parent_cid && !has(require_cid(*parent_cid)))
        raise(errc::dangling_reference, "commit parent " + *parent_cid);
    doc commit{{"kind", "commit"},
               {"tree_cid", tree_cid},
               {"parent_cid", parent_cid ? doc(*parent_cid) : doc(nullptr)},
               {"author", author},
               {"message", message},
               {"authored_at", authored_at_ms}};
    return put_structured(commit);
}

std::vector<std::string> store::references(const doc& object) {
    std::vector<std::string> out;
    if (!object.is_object() || !object.contains("kind")) return out;
    const doc& kind = object["kind"];
    if (kind == "blob-manifest" && object.contains("chunk_cids")) {
        for (const auto& c : object["chunk_cids"])
            if (c.is_string()) out.push_back(c.get<std::string>());
    } else if (kind == "tree" && object.contains("entries")) {
        for (const auto& e : object["entries"])
            if (e.is_object() && e.contains("cid") && e["cid"].is_string())
                out.push_back(e["cid"].get<std::string>());
    } else if (kind == "commit") {
        if (object.contains("tree_cid") && object["tree_cid"].is_string())
            out.push_back(object["tree_cid"].get<std::string>());
        if (object.contains("parent_cid") && object["parent_cid"].is_string())
            out.push_back(object["parent_cid"].get<std::string>());
    }
    return out;
}

std::string store::resolve_path(const std::string& root_cid, const std::string& path) const {
    std::string cur = require_cid(root_cid);
    if (is_structured(cur)) {
        doc obj = get_object(cur);
        if (obj["kind"] == "commit") cur = require_string(obj, "tree_cid");
    }
    size_t pos = 0;
    while (pos < path.size()) {
        size_t slash = path.find('/', pos);
        if (slash == std::string::npos) slash = path.size();
        std::string seg = path.substr(pos, slash - pos);
        pos = slash + 1;
        if (seg.empty()) continue;

        if (!has(cur)) raise(errc::not_found, "no object " + cur);
        if (!is_structured(cur))
            raise(errc::path_not_found, "'" + seg + "' descends into a blob");
        doc obj = get_object(cur);
        if (obj["kind"] != "tree")
            raise(errc::path_not_found, "'" + seg + "' descends into a non-tree");
        bool hit = false;
        for (const auto& e : require_field(obj, "entries")) {
            if (require_string(e, "path") == seg) {
                cur = require_string(e, "cid");
                hit = true;
                break;
            }
        }
        if (!hit) raise(errc::path_not_found, "no entry '" + seg + "'");
    }
    return cur;
}

std::set<std::string> store::pins() const {
    std::set<std::string> out;
    std::ifstream in(root_ / "pins");
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("pin ", 0) == 0)
            out.insert(line.substr(4));
        else if (line.rfind("unpin ", 0) == 0)
            out.erase(line.substr(6));
    }
    return out;
}

static void append_pin_op(const fs::path& root, const std::string& op,
                          const std::string& cid) {
    std::ofstream out(root / "pins", std::ios::app);
    out << op << ' ' << cid << '\n';
    if (!out) raise(errc::storage_full, "cannot record pin op for " + cid);
}

void store::pin(const std::string& cid) {
    if (!has(require_cid(cid))) raise(errc::not_found, "cannot pin missing " + cid);
    if (pins().count(cid)) return;
    append_pin_op(root_, "pin", cid);
}

void store::unpin(const std::string& cid) {
    if (!pins().count(require_cid(cid))) return;
    append_pin_op(root_, "unpin", cid);
}

void store::save_lines(const char* name, const std::set<std::string>& lines) const {
    fs::path target = root_ / name;
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        for (const auto& l : lines) out << l << '\n';
        if (!out) raise(errc::storage_full, std::string("cannot rewrite ") + name);
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) raise(errc::storage_full, std::string("cannot replace ") + name);
}

std::vector<std::string> store::list() const {
    std::vector<std::string> out;
    std::error_code ec;
    for (fs::recursive_directory_iterator it(root_ / "objects", ec), end; it != end;
         it.increment(ec)) {
        if (ec) break;
        if (!it->is_regular_file()) continue;
        std::string name = it->path().filename().string();
        std::string cid = std::string(k_prefix) + name;
        if (name.size() == 64 && well_formed(cid)) out.push_back(cid);
    }
    std::sort(out.begin(), out.end());
    return out;
}

store_stats store::stats() const {
    store_stats s;
    std::error_code ec;
    for (fs::recursive_directory_iterator it(root_ / "objects", ec), end; it != end;
         it.increment(ec)) {
        if (ec) break;
        if (!it->is_regular_file()) continue;
        std::string name = it->path().filename().string();
        if (name.size() != 64 || !well_formed(std::string(k_prefix) + name)) continue;
        s.objects += 1;
        s.bytes += it->file_size(ec);
    }
    s.pins = pins().size();
    return s;
}

std::vector<std::string> store::gc() {
    std::set<std::string> structured = meta();
    std::set<std::string> pinned = pins();
    std::set<std::string> live;
    std::vector<std::string> frontier(pinned.begin(), pinned.end());
    while (!frontier.empty()) {
        std::string cid = std::move(frontier.back());
        frontier.pop_back();
        if (live.count(cid) || !has(cid)) continue;
        live.insert(cid);
        if (!structured.count(cid)) continue;
        doc obj = get_object(cid);
        for (auto& r : references(obj))
            if (well_formed(r) && !live.count(r)) frontier.push_back(std::move(r));
    }

    std::vector<std::string> victims;
    for (const auto& cid : list()) {
        if (live.count(cid)) continue;
        std::error_code ec;
        fs::remove(object_path(cid), ec);
        if (!ec) victims.push_back(cid);
    }

    std::set<std::string> kept;
    for (const auto& cid : structured)
        if (live.count(cid)) kept.insert(cid);
    if (kept != structured) save_lines("meta", kept);
    return victims;
}

std::vector<std::string> store::verify() const {
    std::vector<std::string> violations;
    std::set<std::string> present;

    for (const auto& cid : list()) {
        bool found = false;
        bytes raw = read_file(object_path(cid), found);
        if (!found) continue;  // raced with gc; reads stay lock-free
        present.insert(cid);
        if (cid_of(raw) != cid) violations.push_back(cid + ": digest mismatch");
    }

    for (const auto& cid : meta()) {
        if (!present.count(cid)) {
            violations.push_back(cid + ": indexed object missing");
            continue;
        }
        doc obj;
        try {
            obj = get_object(cid);
        } catch (const chain_error& e) {
            violations.push_back(cid + ": " + e.what());
            continue;
        }
        for (const auto& r : references(obj)) {
            if (!well_formed(r))
                violations.push_back(cid + ": malformed reference " + r);
            else if (!present.count(r))
                violations.push_back(cid + ": dangling reference " + r);
        }
    }

    for (const auto& cid : pins())
        if (!present.count(cid)) violations.push_back(cid + ": pinned object missing");

    std::sort(violations.begin(), violations.end());
    return violations;
}

}  // namespace devchain::castore
