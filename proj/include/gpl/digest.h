#ifndef GPL_DIGEST_H_
#define GPL_DIGEST_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace gpl {

// Lowercase hex SHA-256 of `data`.
std::string Sha256Hex(std::string_view data);

// First 16 hex digits of the SHA-256; used as config and checkpoint hashes.
std::string ShortHash(std::string_view data);

// Derives an independent child seed from a root seed and a component label.
std::uint64_t DeriveSeed(std::uint64_t root, std::string_view label);

}  // namespace gpl

#endif  // GPL_DIGEST_H_
