#include "h2atlas/digest.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "h2atlas/error.hpp"

namespace h2atlas {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string Fnv1a::hex() const { return hex64(h_); }

std::uint64_t fnv1a64(std::string_view bytes) { return Fnv1a().update(bytes).value(); }

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open " + path.string());
  Fnv1a h;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) h.update(std::string_view(buf, static_cast<std::size_t>(in.gcount())));
  return h.hex();
}

std::string fmt17(double v) {
  if (!std::isfinite(v)) throw InvalidArgument("cannot format non-finite value");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace h2atlas
