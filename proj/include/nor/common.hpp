#ifndef NOR_COMMON_HPP_
#define NOR_COMMON_HPP_

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nor {

template <typename... Args>
std::string cat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

[[noreturn]] inline void fail(const std::string& msg) {
  throw std::runtime_error(msg);
}

[[noreturn]] inline void fail_shape(const std::string& msg) {
  throw std::invalid_argument(msg);
}

// FNV-1a, used for content hashes and per-name seed derivation.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace nor

#define NOR_REQUIRE(cond, ...)                  \
  do {                                          \
    if (!(cond)) ::nor::fail(::nor::cat(__VA_ARGS__)); \
  } while (0)

#define NOR_SHAPE_CHECK(cond, ...)                    \
  do {                                                \
    if (!(cond)) ::nor::fail_shape(::nor::cat(__VA_ARGS__)); \
  } while (0)

#endif  // NOR_COMMON_HPP_
