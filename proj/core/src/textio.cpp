#include <ism2d/base.hpp>

#include <cstdio>

namespace ism {

// %.17g round-trips doubles exactly and prints the same bytes on every
// platform we target; report determinism depends on it.
std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

}  // namespace ism
