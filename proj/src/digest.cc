#include "gpl/digest.h"

#include <openssl/sha.h>

#include <cstring>

namespace gpl {

std::string Sha256Hex(std::string_view data) {
  unsigned char md[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), md);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char b : md) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

std::string ShortHash(std::string_view data) { return Sha256Hex(data).substr(0, 16); }

std::uint64_t DeriveSeed(std::uint64_t root, std::string_view label) {
  std::string buf(sizeof(root), '\0');
  std::memcpy(buf.data(), &root, sizeof(root));
  buf.append(label);
  unsigned char md[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(buf.data()), buf.size(), md);
  std::uint64_t seed = 0;
  std::memcpy(&seed, md, sizeof(seed));
  return seed;
}

}  // namespace gpl
