#pragma once

#include <nlohmann/json.hpp>

#include "devchain/bytes.hpp"
#include "devchain/digest.hpp"
#include "devchain/errors.hpp"

namespace devchain {

// Structured document as it appears on chain and in the state store.
// Only maps, arrays, strings, integers, booleans and null are legal;
// floats never reach the ledger (money is integer cents, metrics are
// scaled integers).
using doc = nlohmann::json;

// Throws chain_error(unsupported_value) if the document contains a float,
// binary payload or any other value outside the canonical subset.
void check_canonical(const doc& d);

// Deterministic byte encoding: UTF-8 JSON, object keys sorted
// lexicographically, no insignificant whitespace, integers in shortest form.
bytes canonical_encode(const doc& d);

std::string canonical_encode_str(const doc& d);

hash32 digest_of(const doc& d);

// Strict parse of canonical (or plain) JSON text into a doc; rejects
// documents that fall outside the canonical subset.
doc parse_doc(std::string_view text);
doc parse_doc(bytes_view raw);

// Fetches d[key] enforcing presence and type; throws bad_args otherwise.
const doc& require_field(const doc& d, const char* key);
std::string require_string(const doc& d, const char* key);
int64_t require_int(const doc& d, const char* key);
uint64_t require_uint(const doc& d, const char* key);
bool require_bool(const doc& d, const char* key);

}  // namespace devchain
