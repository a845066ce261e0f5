#pragma once
// Multivariate polynomials over interned symbols with coefficients in F.
// These carry the kappa-dependence of expression coefficients and the
// parameter polynomials of determining systems.

#include "ism2d/base.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>

namespace ism {

// A monomial is a name-sorted list of (symbol, exponent) pairs with all
// exponents positive; the empty list is the constant monomial.
using Mono = std::vector<std::pair<Sym, int>>;

inline int mono_degree(const Mono& m) {
  int d = 0;
  for (const auto& [s, e] : m) d += e;
  return d;
}

// Graded lexicographic order: higher total degree first is "larger"; ties
// are broken by walking the union of symbols in name order, the monomial
// with the higher exponent on the earliest differing symbol being larger.
// Used both for map ordering (via MonoLess, ascending) and for choosing
// leading terms during normalization.
inline int mono_cmp(const Mono& a, const Mono& b) {
  const int da = mono_degree(a);
  const int db = mono_degree(b);
  if (da != db) return da < db ? -1 : 1;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const std::string& na = a[i].first.name();
    const std::string& nb = b[j].first.name();
    if (na < nb) return 1;   // a has a positive exponent on an earlier symbol
    if (nb < na) return -1;
    if (a[i].second != b[j].second) return a[i].second < b[j].second ? -1 : 1;
    ++i;
    ++j;
  }
  if (i < a.size()) return 1;
  if (j < b.size()) return -1;
  return 0;
}

struct MonoLess {
  bool operator()(const Mono& a, const Mono& b) const { return mono_cmp(a, b) < 0; }
};

inline Mono mono_mul(const Mono& a, const Mono& b) {
  Mono out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  SymNameLess less;
  while (i < a.size() && j < b.size()) {
    if (a[i].first == b[j].first) {
      out.emplace_back(a[i].first, a[i].second + b[j].second);
      ++i;
      ++j;
    } else if (less(a[i].first, b[j].first)) {
      out.push_back(a[i++]);
    } else {
      out.push_back(b[j++]);
    }
  }
  for (; i < a.size(); ++i) out.push_back(a[i]);
  for (; j < b.size(); ++j) out.push_back(b[j]);
  return out;
}

inline std::string mono_str(const Mono& m) {
  if (m.empty()) return "1";
  std::ostringstream os;
  bool first = true;
  for (const auto& [s, e] : m) {
    if (!first) os << "*";
    first = false;
    os << s.name();
    if (e != 1) os << "^" << e;
  }
  return os.str();
}

// Sparse polynomial.  The map never stores literal-zero coefficients; for
// F = double, normalize() additionally drops entries whose magnitude is
// below 1e-12 relative to the largest coefficient present (or to 1).
template <class F>
class KPoly {
 public:
  using traits = field_traits<F>;
  using Map = std::map<Mono, F, MonoLess>;

  // kappa-degree cap: exact solvable structure in this problem family never
  // exceeds small degrees; blowing past the cap indicates runaway symbolic
  // growth and is reported instead of silently ground through.
  static constexpr int degree_cap = 8;

  KPoly() = default;

  static KPoly zero() { return KPoly(); }
  static KPoly constant(const F& c) {
    KPoly p;
    if (!traits::is_zero(c)) p.t_.emplace(Mono{}, c);
    return p;
  }
  static KPoly one() { return constant(traits::one()); }
  static KPoly var(Sym s) {
    KPoly p;
    p.t_.emplace(Mono{{s, 1}}, traits::one());
    return p;
  }

  const Map& terms() const { return t_; }
  bool is_zero() const { return t_.empty(); }
  std::size_t size() const { return t_.size(); }

  int degree() const {
    return t_.empty() ? -1 : mono_degree(t_.rbegin()->first);
  }

  int kappa_degree() const {
    int d = 0;
    for (const auto& [m, c] : t_) {
      int k = 0;
      for (const auto& [s, e] : m)
        if (s.is_kappa()) k += e;
      d = std::max(d, k);
    }
    return d;
  }

  // true when the polynomial is a plain scalar (constant monomial only)
  bool is_constant() const {
    return t_.empty() || (t_.size() == 1 && t_.begin()->first.empty());
  }

  F constant_value() const {
    if (t_.empty()) return traits::zero();
    auto it = t_.find(Mono{});
    return it == t_.end() ? traits::zero() : it->second;
  }

  void add_term(const Mono& m, const F& c) {
    if (traits::is_zero(c)) return;
    auto [it, inserted] = t_.emplace(m, c);
    if (!inserted) {
      it->second = it->second + c;
      if (traits::is_zero(it->second)) t_.erase(it);
    }
  }

  KPoly& operator+=(const KPoly& o) {
    for (const auto& [m, c] : o.t_) add_term(m, c);
    return *this;
  }
  KPoly& operator-=(const KPoly& o) {
    for (const auto& [m, c] : o.t_) add_term(m, -c);
    return *this;
  }
  friend KPoly operator+(KPoly a, const KPoly& b) { return a += b; }
  friend KPoly operator-(KPoly a, const KPoly& b) { return a -= b; }
  KPoly operator-() const {
    KPoly r;
    for (const auto& [m, c] : t_) r.t_.emplace(m, -c);
    return r;
  }

  KPoly& scale(const F& c) {
    if (traits::is_zero(c)) {
      t_.clear();
      return *this;
    }
    for (auto& [m, v] : t_) v = v * c;
    strip_zeros(1.0);
    return *this;
  }

  friend KPoly operator*(const KPoly& a, const KPoly& b) {
    KPoly r;
    for (const auto& [ma, ca] : a.t_)
      for (const auto& [mb, cb] : b.t_) r.add_term(mono_mul(ma, mb), ca * cb);
    r.check_cap();
    r.normalize();
    return r;
  }

  KPoly pow(int e) const {
    KPoly r = one();
    for (int i = 0; i < e; ++i) r = r * (*this);
    return r;
  }

  // substitute values for a subset of symbols; unbound symbols remain
  KPoly substitute(const std::map<Sym, F, SymNameLess>& bind) const {
    KPoly r;
    for (const auto& [m, c] : t_) {
      F coeff = c;
      Mono rest;
      for (const auto& [s, e] : m) {
        auto it = bind.find(s);
        if (it == bind.end()) {
          rest.emplace_back(s, e);
        } else {
          F p = traits::one();
          for (int i = 0; i < e; ++i) p = p * it->second;
          coeff = coeff * p;
        }
      }
      r.add_term(rest, coeff);
    }
    r.normalize();
    return r;
  }

  // rename symbols (used to rewrite kappa_m -> Phi_m in reductions)
  KPoly rename(const std::map<Sym, Sym, SymNameLess>& map) const {
    KPoly r;
    for (const auto& [m, c] : t_) {
      Mono nm;
      nm.reserve(m.size());
      for (const auto& [s, e] : m) {
        auto it = map.find(s);
        nm.emplace_back(it == map.end() ? s : it->second, e);
      }
      std::sort(nm.begin(), nm.end(),
                [](const auto& a, const auto& b) { return SymNameLess{}(a.first, b.first); });
      r.add_term(nm, c);
    }
    r.normalize();
    return r;
  }

  // full evaluation; throws input_error naming the first unbound symbol
  F eval(const std::map<Sym, F, SymNameLess>& bind) const {
    F acc = traits::zero();
    for (const auto& [m, c] : t_) {
      F term = c;
      for (const auto& [s, e] : m) {
        auto it = bind.find(s);
        if (it == bind.end()) throw input_error("unbound symbol '" + s.name() + "' in evaluation");
        F p = traits::one();
        for (int i = 0; i < e; ++i) p = p * it->second;
        term = term * p;
      }
      acc = acc + term;
    }
    return acc;
  }

  double eval_double(const std::map<Sym, double, SymNameLess>& bind) const {
    double acc = 0.0;
    for (const auto& [m, c] : t_) {
      double term = traits::to_double(c);
      for (const auto& [s, e] : m) {
        auto it = bind.find(s);
        if (it == bind.end()) throw input_error("unbound symbol '" + s.name() + "' in evaluation");
        term *= std::pow(it->second, e);
      }
      acc += term;
    }
    return acc;
  }

  double max_abs_coeff() const {
    double m = 0.0;
    for (const auto& [mono, c] : t_) m = std::max(m, std::fabs(traits::to_double(c)));
    return m;
  }

  void normalize() {
    if constexpr (!traits::exact) {
      strip_zeros(max_abs_coeff());
    }
  }

  std::vector<Sym> symbols() const {
    std::vector<Sym> out;
    for (const auto& [m, c] : t_)
      for (const auto& [s, e] : m) out.push_back(s);
    std::sort(out.begin(), out.end(), SymNameLess{});
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::string str() const {
    if (t_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    // print leading (grlex-largest) terms first
    for (auto it = t_.rbegin(); it != t_.rend(); ++it) {
      const std::string c = traits::str(it->second);
      if (!first) os << (c[0] == '-' ? " - " : " + ");
      std::string body = (!first && c[0] == '-') ? c.substr(1) : c;
      first = false;
      if (it->first.empty()) {
        os << body;
      } else if (body == "1") {
        os << mono_str(it->first);
      } else if (body == "-1") {
        os << "-" << mono_str(it->first);
      } else {
        os << body << "*" << mono_str(it->first);
      }
    }
    return os.str();
  }

  friend bool operator==(const KPoly& a, const KPoly& b) {
    if constexpr (traits::exact) {
      return a.t_ == b.t_;
    } else {
      KPoly d = a;
      d -= b;
      const double scale = std::max(a.max_abs_coeff(), b.max_abs_coeff());
      for (const auto& [m, c] : d.t_)
        if (!traits::is_zero(c, scale)) return false;
      return true;
    }
  }

 private:
  void strip_zeros(double scale) {
    for (auto it = t_.begin(); it != t_.end();) {
      if (traits::is_zero(it->second, scale))
        it = t_.erase(it);
      else
        ++it;
    }
  }

  void check_cap() const {
    if (kappa_degree() > degree_cap) {
      throw math_error("coordinate polynomial exceeded kappa-degree cap " +
                       std::to_string(degree_cap) + "; expression growth is runaway");
    }
  }

  Map t_;
};

using KPolyQ = KPoly<Rat>;
using KPolyD = KPoly<double>;

}  // namespace ism
