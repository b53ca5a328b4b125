#pragma once
// Content hashing (64-bit FNV-1a) and fixed-precision number formatting
// for reproducible run ids and layer files.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace h2atlas {

class Fnv1a {
public:
  Fnv1a& update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      h_ ^= c;
      h_ *= 1099511628211ull;
    }
    return *this;
  }
  /// Length-prefixed, so field boundaries cannot alias.
  Fnv1a& field(std::string_view bytes) { return update(std::to_string(bytes.size())).update(":").update(bytes); }

  std::uint64_t value() const { return h_; }
  std::string hex() const;

private:
  std::uint64_t h_ = 14695981039346656037ull;
};

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Hex digest of a file's bytes; NotFound when unreadable.
std::string file_digest(const std::filesystem::path& path);

/// %.17g; non-finite values are rejected.
std::string fmt17(double v);

}  // namespace h2atlas
