// FNV-1a digests for artifact files.
#ifndef DATASYM_DIGEST_HPP
#define DATASYM_DIGEST_HPP

#include <cstdint>
#include <fstream>
#include <string>

#include "datasym/types.hpp"

namespace datasym {

inline std::uint64_t fnv1a(const char* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string digest_hex(std::uint64_t h) {
  static const char* hexd = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = hexd[h & 0xf];
    h >>= 4;
  }
  return s;
}

inline std::string digest_string(const std::string& s) { return digest_hex(fnv1a(s.data(), s.size())); }

inline std::string digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("digest: cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return digest_hex(h);
}

}  // namespace datasym

#endif
