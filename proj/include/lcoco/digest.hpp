#pragma once

#include <array>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "lcoco/quadratic.hpp"

namespace lcoco {

inline std::string sha1_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("sha1_hex: digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

/// Content digest in the style of `git hash-object`: sha1("blob <size>\0" + content).
inline std::string git_blob_digest(std::string_view content) {
  std::string buf = "blob " + std::to_string(content.size());
  buf.push_back('\0');
  buf.append(content);
  return sha1_hex(buf);
}

/// Short digest of the exact bit pattern of a vector of doubles.
inline std::string answer_digest(const Vector& v) {
  std::string raw(static_cast<std::size_t>(v.size()) * sizeof(double), '\0');
  if (v.size() > 0) std::memcpy(raw.data(), v.data(), raw.size());
  return sha1_hex(raw).substr(0, 16);
}

}  // namespace lcoco
