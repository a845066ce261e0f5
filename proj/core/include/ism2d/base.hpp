#pragma once
// Shared ground layer: error types, exact rational scalars, the interned
// symbol table, field traits used by the templated algebra, and a small
// deterministic RNG for reproducible sampling.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ism {

// ---------------------------------------------------------------------------
// errors
//
// input_error: malformed user input (files, CLI arguments, parameter values
//   that violate documented preconditions).  The CLI maps these to exit 2.
// math_error: a computation left its supported domain (gamma pole, series
//   divergence, quadrature failure, degree cap, singular span matrix).
// ---------------------------------------------------------------------------

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct input_error : error {
  using error::error;
};

struct math_error : error {
  using error::error;
};

// ---------------------------------------------------------------------------
// exact rational scalar
// ---------------------------------------------------------------------------

using Rat = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rat& r) { return static_cast<double>(r); }

inline std::string to_string(const Rat& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

// Exact square root test: returns true and sets `root` when v = root^2 with
// root rational and root >= 0.
inline bool rat_sqrt(const Rat& v, Rat& root) {
  using boost::multiprecision::sqrt;
  if (v < 0) return false;
  const BigInt num = boost::multiprecision::numerator(v);
  const BigInt den = boost::multiprecision::denominator(v);
  const BigInt rn = sqrt(num);
  const BigInt rd = sqrt(den);
  if (rn * rn != num || rd * rd != den) return false;
  root = Rat(rn, rd);
  return true;
}

// ---------------------------------------------------------------------------
// interned symbols
//
// A Sym is an index into a process-wide registry.  Symbols carry a name and
// a role.  Role kappa marks subspace coordinates kappa_1..kappa_n (the
// unknowns of the reduced system); everything else is a parameter.  All
// orderings in the algebra compare symbols by NAME, never by creation
// order, so results do not depend on registration history.
// ---------------------------------------------------------------------------

enum class SymRole { parameter, kappa };

class SymbolTable;

struct Sym {
  std::uint32_t id = 0;

  const std::string& name() const;
  SymRole role() const;
  bool is_kappa() const { return role() == SymRole::kappa; }

  friend bool operator==(Sym a, Sym b) { return a.id == b.id; }
  friend bool operator!=(Sym a, Sym b) { return a.id != b.id; }
};

// Name-ordered comparison; the registry guarantees names are unique.
struct SymNameLess {
  bool operator()(Sym a, Sym b) const { return a.name() < b.name(); }
};

class SymbolTable {
 public:
  static SymbolTable& instance() {
    static SymbolTable t;
    return t;
  }

  Sym intern(const std::string& name, SymRole role = SymRole::parameter) {
    auto it = index_.find(name);
    if (it != index_.end()) {
      Entry& e = entries_[it->second];
      if (e.role != role) {
        throw input_error("symbol '" + name + "' already registered with a different role");
      }
      return Sym{it->second};
    }
    const auto id = static_cast<std::uint32_t>(entries_.size());
    entries_.push_back(Entry{name, role});
    index_.emplace(name, id);
    return Sym{id};
  }

  const std::string& name(Sym s) const { return entries_.at(s.id).name; }
  SymRole role(Sym s) const { return entries_.at(s.id).role; }

 private:
  struct Entry {
    std::string name;
    SymRole role;
  };
  std::vector<Entry> entries_;
  std::map<std::string, std::uint32_t> index_;
};

inline const std::string& Sym::name() const { return SymbolTable::instance().name(*this); }
inline SymRole Sym::role() const { return SymbolTable::instance().role(*this); }

inline Sym sym(const std::string& name) { return SymbolTable::instance().intern(name); }
inline Sym kappa_sym(int m) {
  return SymbolTable::instance().intern("kappa" + std::to_string(m), SymRole::kappa);
}

// ---------------------------------------------------------------------------
// field traits
//
// The symbolic layer is templated on the coefficient field F.  Two
// instantiations are supported:
//   F = Rat     exact arithmetic, zero tests are exact;
//   F = double  floating arithmetic, zero test |x| <= 1e-12 relative to a
//               scale, term matching tolerance 1e-9.
// Tolerances never enter container comparators (those stay exact and
// deterministic); they only decide when a computed coefficient is dropped
// or when two results are declared equal.
// ---------------------------------------------------------------------------

template <class F>
struct field_traits;

template <>
struct field_traits<Rat> {
  static constexpr bool exact = true;
  static Rat zero() { return Rat(0); }
  static Rat one() { return Rat(1); }
  static Rat from_rat(const Rat& r) { return r; }
  static Rat from_int(long v) { return Rat(v); }
  static double to_double(const Rat& v) { return ism::to_double(v); }
  static bool is_zero(const Rat& v, double /*scale*/ = 1.0) { return v == 0; }
  static bool eq(const Rat& a, const Rat& b) { return a == b; }
  static std::string str(const Rat& v) { return ism::to_string(v); }
};

template <>
struct field_traits<double> {
  static constexpr bool exact = false;
  static constexpr double zero_tol = 1e-12;  // zero testing
  static constexpr double match_tol = 1e-9;  // agreement between two values
  static double zero() { return 0.0; }
  static double one() { return 1.0; }
  static double from_rat(const Rat& r) { return ism::to_double(r); }
  static double from_int(long v) { return static_cast<double>(v); }
  static double to_double(double v) { return v; }
  static bool is_zero(double v, double scale = 1.0) {
    return std::fabs(v) <= zero_tol * std::max(1.0, std::fabs(scale));
  }
  static bool eq(double a, double b) {
    if (a == b) return true;
    const double m = std::max({1.0, std::fabs(a), std::fabs(b)});
    return std::fabs(a - b) <= match_tol * m;
  }
  static std::string str(double v);
};

// Canonical float formatting: shortest round-trip via %.17g.
std::string format_double(double v);
inline std::string field_traits<double>::str(double v) { return format_double(v); }

// ---------------------------------------------------------------------------
// deterministic RNG (splitmix64)
//
// Sampling must be reproducible byte for byte across runs and platforms,
// so we pin the generator and the integer-draw rule instead of relying on
// std::uniform_int_distribution (whose mapping is implementation-defined).
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform on {lo, ..., hi}; simple modulo (bias is irrelevant for the
  // tiny ranges we draw from, determinism is what matters)
  long irange(long lo, long hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<long>(next() % span);
  }

  bool coin() { return (next() & 1u) != 0; }

  // nonzero rational with numerator and denominator in [-9,9] \ {0}
  Rat rat_pm9() {
    const long num = irange(1, 9) * (coin() ? 1 : -1);
    const long den = irange(1, 9) * (coin() ? 1 : -1);
    return Rat(num, den);
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// FNV-1a, used to derive per-entry sub-seeds from string ids.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace ism
