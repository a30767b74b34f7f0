#include "devchain/value.hpp"

namespace devchain {

namespace {

void check_canonical_at(const doc& d, const std::string& path) {
    switch (d.type()) {
        case doc::value_t::object:
            for (auto it = d.begin(); it != d.end(); ++it)
                check_canonical_at(it.value(), path + "/" + it.key());
            return;
        case doc::value_t::array: {
            size_t i = 0;
            for (const auto& e : d) check_canonical_at(e, path + "/" + std::to_string(i++));
            return;
        }
        case doc::value_t::string:
        case doc::value_t::number_integer:
        case doc::value_t::number_unsigned:
        case doc::value_t::boolean:
        case doc::value_t::null:
            return;
        case doc::value_t::number_float:
            raise(errc::unsupported_value, "float at " + path +
                                               " (store amounts and metrics as scaled integers)");
        case doc::value_t::binary:
            raise(errc::unsupported_value, "binary value at " + path);
        case doc::value_t::discarded:
            raise(errc::unsupported_value, "discarded value at " + path);
    }
    raise(errc::unsupported_value, "unknown value type at " + path);
}

}  // namespace

void check_canonical(const doc& d) { check_canonical_at(d, ""); }

std::string canonical_encode_str(const doc& d) {
    check_canonical(d);
    try {
        // nlohmann objects are std::map-backed, so dump() already emits keys in
        // lexicographic order with no insignificant whitespace.
        return d.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
    } catch (const doc::type_error& e) {
        raise(errc::unsupported_value, std::string("not encodable: ") + e.what());
    }
}

bytes canonical_encode(const doc& d) { return to_bytes(canonical_encode_str(d)); }

hash32 digest_of(const doc& d) {
    auto enc = canonical_encode(d);
    return sha256(bytes_view(enc.data(), enc.size()));
}

doc parse_doc(std::string_view text) {
    doc d = doc::parse(text, nullptr, false);
    if (d.is_discarded())
        raise(errc::malformed_document, "unparseable document");
    check_canonical(d);
    return d;
}

doc parse_doc(bytes_view raw) {
    return parse_doc(std::string_view(reinterpret_cast<const char*>(raw.data()), raw.size()));
}

const doc& require_field(const doc& d, const char* key) {
    if (!d.is_object() || !d.contains(key))
        raise(errc::bad_args, std::string("missing field: ") + key);
    return d.at(key);
}

std::string require_string(const doc& d, const char* key) {
    const doc& v = require_field(d, key);
    if (!v.is_string()) raise(errc::bad_args, std::string("field not a string: ") + key);
    return v.get<std::string>();
}

int64_t require_int(const doc& d, const char* key) {
    const doc& v = require_field(d, key);
    if (v.is_number_unsigned()) {
        uint64_t u = v.get<uint64_t>();
        if (u > static_cast<uint64_t>(INT64_MAX))
            raise(errc::bad_args, std::string("field out of range: ") + key);
        return static_cast<int64_t>(u);
    }
    if (!v.is_number_integer())
        raise(errc::bad_args, std::string("field not an integer: ") + key);
    return v.get<int64_t>();
}

uint64_t require_uint(const doc& d, const char* key) {
    const doc& v = require_field(d, key);
    if (v.is_number_unsigned()) return v.get<uint64_t>();
    if (v.is_number_integer()) {
        int64_t i = v.get<int64_t>();
        if (i < 0) raise(errc::bad_args, std::string("field negative: ") + key);
        return static_cast<uint64_t>(i);
    }
    raise(errc::bad_args, std::string("field not an unsigned integer: ") + key);
}

bool require_bool(const doc& d, const char* key) {
    const doc& v = require_field(d, key);
    if (!v.is_boolean()) raise(errc::bad_args, std::string("field not a bool: ") + key);
    return v.get<bool>();
}

}  // namespace devchain
