#pragma once
// Closed algebra of exponential-polynomial-trigonometric expressions in two
// space variables x1, x2.  Every expression is a finite sum of canonical
// terms
//
//   x1^p1 * x2^p2 * exp(r1*x1) * exp(r2*x2) * osc1(w1*x1) * osc2(w2*x2)
//
// with p1, p2 nonnegative integers, rates r1, r2 and frequencies w1, w2
// affine-linear forms in parameter symbols, and osc in {1, sin, cos}.  The
// class is closed under products (product-to-sum for trig) and under d/dx1,
// d/dx2, which is what makes span extraction exact.  Coefficients are
// polynomials in kappa and parameter symbols (KPoly).

#include "ism2d/kpoly.hpp"

#include <functional>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

namespace ism {

// ---------------------------------------------------------------------------
// affine-linear rate form: c0 + sum_i c_i * sym_i
// ---------------------------------------------------------------------------

template <class F>
class RateForm {
 public:
  using traits = field_traits<F>;
  using Lin = std::map<Sym, F, SymNameLess>;

  RateForm() : c_(traits::zero()) {}
  explicit RateForm(F c) : c_(std::move(c)) {}

  static RateForm zero() { return RateForm(); }
  static RateForm constant(const F& c) { return RateForm(c); }
  static RateForm symbol(Sym s, const F& coeff) {
    RateForm r;
    r.add(s, coeff);
    return r;
  }

  const F& constant_part() const { return c_; }
  const Lin& linear_part() const { return lin_; }

  void add_constant(const F& v) { c_ = c_ + v; }
  void add(Sym s, const F& coeff) {
    if (traits::is_zero(coeff)) return;
    auto [it, inserted] = lin_.emplace(s, coeff);
    if (!inserted) {
      it->second = it->second + coeff;
      if (traits::is_zero(it->second)) lin_.erase(it);
    }
  }

  bool is_zero() const { return lin_.empty() && traits::is_zero(c_); }
  bool is_constant() const { return lin_.empty(); }

  RateForm operator+(const RateForm& o) const {
    RateForm r = *this;
    r.c_ = r.c_ + o.c_;
    for (const auto& [s, v] : o.lin_) r.add(s, v);
    return r;
  }
  RateForm operator-(const RateForm& o) const { return *this + (-o); }
  RateForm operator-() const {
    RateForm r;
    r.c_ = -c_;
    for (const auto& [s, v] : lin_) r.lin_.emplace(s, -v);
    return r;
  }

  // sign of the leading coefficient: first linear entry in symbol-name
  // order, or the constant when purely numeric; used for trig frequency
  // sign normalization
  int leading_sign() const {
    const F& lead = lin_.empty() ? c_ : lin_.begin()->second;
    if (traits::is_zero(lead)) return 0;
    return traits::to_double(lead) > 0 ? 1 : -1;
  }

  KPoly<F> to_kpoly() const {
    KPoly<F> p = KPoly<F>::constant(c_);
    for (const auto& [s, v] : lin_) p += KPoly<F>::var(s).scale(v);
    return p;
  }

  RateForm substitute(const std::map<Sym, F, SymNameLess>& bind) const {
    RateForm r;
    r.c_ = c_;
    for (const auto& [s, v] : lin_) {
      auto it = bind.find(s);
      if (it == bind.end())
        r.add(s, v);
      else
        r.c_ = r.c_ + v * it->second;
    }
    return r;
  }

  double eval_double(const std::map<Sym, double, SymNameLess>& bind) const {
    double acc = traits::to_double(c_);
    for (const auto& [s, v] : lin_) {
      auto it = bind.find(s);
      if (it == bind.end()) throw input_error("unbound symbol '" + s.name() + "' in rate evaluation");
      acc += traits::to_double(v) * it->second;
    }
    return acc;
  }

  std::vector<Sym> symbols() const {
    std::vector<Sym> out;
    for (const auto& [s, v] : lin_) out.push_back(s);
    return out;
  }

  // total order: linear entries as (name, coeff) sequences, then constant
  int cmp(const RateForm& o) const {
    auto a = lin_.begin();
    auto b = o.lin_.begin();
    while (a != lin_.end() && b != o.lin_.end()) {
      const std::string& na = a->first.name();
      const std::string& nb = b->first.name();
      if (na != nb) return na < nb ? -1 : 1;
      if (a->second != b->second) return a->second < b->second ? -1 : 1;
      ++a;
      ++b;
    }
    if (a != lin_.end()) return 1;
    if (b != o.lin_.end()) return -1;
    if (c_ != o.c_) return c_ < o.c_ ? -1 : 1;
    return 0;
  }

  bool fuzzy_eq(const RateForm& o) const {
    if constexpr (traits::exact) {
      return cmp(o) == 0;
    } else {
      if (!traits::eq(c_, o.c_)) return false;
      auto a = lin_.begin();
      auto b = o.lin_.begin();
      while (a != lin_.end() && b != o.lin_.end()) {
        if (a->first != b->first || !traits::eq(a->second, b->second)) return false;
        ++a;
        ++b;
      }
      return a == lin_.end() && b == o.lin_.end();
    }
  }

  std::string str() const {
    if (is_zero()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [s, v] : lin_) {
      std::string c = traits::str(v);
      if (first) {
        if (c == "1")
          os << s.name();
        else if (c == "-1")
          os << "-" << s.name();
        else
          os << c << "*" << s.name();
        first = false;
        continue;
      }
      const bool neg = c[0] == '-';
      if (neg) c = c.substr(1);
      os << (neg ? " - " : " + ");
      if (c == "1")
        os << s.name();
      else
        os << c << "*" << s.name();
    }
    if (!traits::is_zero(c_)) {
      std::string c = traits::str(c_);
      if (first) {
        os << c;
      } else {
        const bool neg = c[0] == '-';
        os << (neg ? " - " : " + ") << (neg ? c.substr(1) : c);
      }
    }
    return os.str();
  }

 private:
  F c_;
  Lin lin_;
};

// ---------------------------------------------------------------------------
// oscillatory factor
// ---------------------------------------------------------------------------

enum class OscKind { none = 0, sine = 1, cosine = 2 };

template <class F>
struct Osc {
  RateForm<F> freq;  // canonical: leading coefficient nonnegative; zero iff kind == none
  OscKind kind = OscKind::none;

  static Osc none() { return Osc{}; }

  int cmp(const Osc& o) const {
    if (kind != o.kind) return static_cast<int>(kind) < static_cast<int>(o.kind) ? -1 : 1;
    return freq.cmp(o.freq);
  }
  bool fuzzy_eq(const Osc& o) const { return kind == o.kind && freq.fuzzy_eq(o.freq); }

  std::string str(const char* var) const {
    if (kind == OscKind::none) return "";
    std::ostringstream os;
    os << (kind == OscKind::sine ? "sin(" : "cos(");
    const std::string f = freq.str();
    const bool atom = freq.is_constant() || (f.find(' ') == std::string::npos && f.find('*') == std::string::npos);
    if (f == "1") {
      os << var;
    } else if (atom) {
      os << f << "*" << var;
    } else {
      os << "(" << f << ")*" << var;
    }
    os << ")";
    return os.str();
  }
};

// ---------------------------------------------------------------------------
// canonical term
// ---------------------------------------------------------------------------

template <class F>
struct CanonicalTerm {
  int p1 = 0;
  int p2 = 0;
  RateForm<F> r1;
  RateForm<F> r2;
  Osc<F> o1;
  Osc<F> o2;

  static CanonicalTerm unit() { return CanonicalTerm{}; }

  bool is_unit() const {
    return p1 == 0 && p2 == 0 && r1.is_zero() && r2.is_zero() &&
           o1.kind == OscKind::none && o2.kind == OscKind::none;
  }

  int cmp(const CanonicalTerm& o) const {
    if (p1 != o.p1) return p1 < o.p1 ? -1 : 1;
    if (p2 != o.p2) return p2 < o.p2 ? -1 : 1;
    if (int c = r1.cmp(o.r1)) return c;
    if (int c = r2.cmp(o.r2)) return c;
    if (int c = o1.cmp(o.o1)) return c;
    return o2.cmp(o.o2);
  }

  bool fuzzy_eq(const CanonicalTerm& o) const {
    return p1 == o.p1 && p2 == o.p2 && r1.fuzzy_eq(o.r1) && r2.fuzzy_eq(o.r2) &&
           o1.fuzzy_eq(o.o1) && o2.fuzzy_eq(o.o2);
  }

  std::vector<Sym> symbols() const {
    std::vector<Sym> out;
    for (const auto* rf : {&r1, &r2, &o1.freq, &o2.freq}) {
      auto s = rf->symbols();
      out.insert(out.end(), s.begin(), s.end());
    }
    std::sort(out.begin(), out.end(), SymNameLess{});
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::string str() const {
    std::vector<std::string> factors;
    auto power = [&](const char* var, int p) {
      if (p == 1) factors.emplace_back(var);
      else if (p > 1) factors.emplace_back(std::string(var) + "^" + std::to_string(p));
    };
    power("x1", p1);
    power("x2", p2);
    auto expf = [&](const RateForm<F>& r, const char* var) {
      if (r.is_zero()) return;
      const std::string f = r.str();
      const bool atom = f.find(' ') == std::string::npos && f.find('*') == std::string::npos;
      if (f == "1")
        factors.emplace_back(std::string("exp(") + var + ")");
      else if (atom)
        factors.emplace_back("exp(" + f + "*" + var + ")");
      else
        factors.emplace_back("exp((" + f + ")*" + var + ")");
    };
    expf(r1, "x1");
    expf(r2, "x2");
    if (o1.kind != OscKind::none) factors.push_back(o1.str("x1"));
    if (o2.kind != OscKind::none) factors.push_back(o2.str("x2"));
    if (factors.empty()) return "1";
    std::string out = factors[0];
    for (std::size_t i = 1; i < factors.size(); ++i) out += "*" + factors[i];
    return out;
  }
};

template <class F>
struct TermLess {
  bool operator()(const CanonicalTerm<F>& a, const CanonicalTerm<F>& b) const {
    return a.cmp(b) < 0;
  }
};

// Canonicalize an oscillatory factor in place.  Returns the scalar factor
// the enclosing term picks up (+1 or -1), or 0 when the factor annihilates
// the term (sin of zero frequency).
template <class F>
int canonicalize_osc(Osc<F>& o) {
  if (o.kind == OscKind::none) {
    o.freq = RateForm<F>::zero();
    return 1;
  }
  if (o.freq.is_zero()) {
    if (o.kind == OscKind::sine) return 0;  // sin(0) = 0
    o.kind = OscKind::none;                 // cos(0) = 1
    o.freq = RateForm<F>::zero();
    return 1;
  }
  if (o.freq.leading_sign() < 0) {
    const bool odd = o.kind == OscKind::sine;
    o.freq = -o.freq;
    return odd ? -1 : 1;
  }
  return 1;
}

// ---------------------------------------------------------------------------
// expressions
// ---------------------------------------------------------------------------

template <class F>
class SymExpr {
 public:
  using traits = field_traits<F>;
  using Term = CanonicalTerm<F>;
  using Map = std::map<Term, KPoly<F>, TermLess<F>>;
  using Bind = std::map<Sym, double, SymNameLess>;

  SymExpr() = default;

  static SymExpr zero() { return SymExpr(); }
  static SymExpr from_scalar(const F& c) {
    SymExpr e;
    e.add(Term::unit(), KPoly<F>::constant(c));
    return e;
  }
  static SymExpr one() { return from_scalar(traits::one()); }
  static SymExpr from_term(Term t, KPoly<F> coeff) {
    SymExpr e;
    e.add(std::move(t), std::move(coeff));
    return e;
  }

  const Map& terms() const { return t_; }
  bool is_zero() const { return t_.empty(); }
  std::size_t size() const { return t_.size(); }

  // Insert with canonicalization.  In floating mode an incoming term is
  // merged into an existing term whose rates and frequencies agree within
  // the matching tolerance, so roundoff cannot split one mathematical term
  // into two map keys.
  void add(Term t, KPoly<F> coeff) {
    if (coeff.is_zero()) return;
    int sgn = canonicalize_osc(t.o1);
    if (sgn == 0) return;
    int sgn2 = canonicalize_osc(t.o2);
    if (sgn2 == 0) return;
    if (sgn * sgn2 < 0) coeff.scale(F(-1));

    typename Map::iterator it = t_.end();
    if constexpr (traits::exact) {
      it = t_.find(t);
    } else {
      for (auto i = t_.begin(); i != t_.end(); ++i) {
        if (i->first.fuzzy_eq(t)) {
          it = i;
          break;
        }
      }
    }
    if (it == t_.end()) {
      t_.emplace(std::move(t), std::move(coeff));
    } else {
      it->second += coeff;
      it->second.normalize();
      if (it->second.is_zero()) t_.erase(it);
    }
  }

  SymExpr& operator+=(const SymExpr& o) {
    for (const auto& [t, c] : o.t_) add(t, c);
    return *this;
  }
  SymExpr& operator-=(const SymExpr& o) {
    for (const auto& [t, c] : o.t_) add(t, -c);
    return *this;
  }
  friend SymExpr operator+(SymExpr a, const SymExpr& b) { return a += b; }
  friend SymExpr operator-(SymExpr a, const SymExpr& b) { return a -= b; }
  SymExpr operator-() const {
    SymExpr r;
    for (const auto& [t, c] : t_) r.t_.emplace(t, -c);
    return r;
  }

  SymExpr scaled(const KPoly<F>& k) const {
    SymExpr r;
    if (k.is_zero()) return r;
    for (const auto& [t, c] : t_) r.add(t, c * k);
    return r;
  }
  SymExpr scaled(const F& v) const { return scaled(KPoly<F>::constant(v)); }

  // re-canonicalize from scratch; idempotent
  void normalize() {
    Map old;
    old.swap(t_);
    for (auto& [t, c] : old) {
      c.normalize();
      add(t, c);
    }
  }

  // substitute parameter values in coefficients, rates and frequencies;
  // terms whose rates collapse are re-canonicalized (and may merge)
  SymExpr substitute(const std::map<Sym, F, SymNameLess>& bind) const {
    SymExpr r;
    for (const auto& [t, c] : t_) {
      Term nt;
      nt.p1 = t.p1;
      nt.p2 = t.p2;
      nt.r1 = t.r1.substitute(bind);
      nt.r2 = t.r2.substitute(bind);
      nt.o1.kind = t.o1.kind;
      nt.o1.freq = t.o1.freq.substitute(bind);
      nt.o2.kind = t.o2.kind;
      nt.o2.freq = t.o2.freq.substitute(bind);
      r.add(std::move(nt), c.substitute(bind));
    }
    return r;
  }

  double eval(double x1, double x2, const Bind& bind = {}) const {
    double acc = 0.0;
    for (const auto& [t, c] : t_) {
      double v = c.eval_double(bind);
      if (t.p1) v *= std::pow(x1, t.p1);
      if (t.p2) v *= std::pow(x2, t.p2);
      const double e1 = t.r1.is_zero() ? 0.0 : t.r1.eval_double(bind) * x1;
      const double e2 = t.r2.is_zero() ? 0.0 : t.r2.eval_double(bind) * x2;
      if (e1 != 0.0 || e2 != 0.0) v *= std::exp(e1 + e2);
      if (t.o1.kind != OscKind::none) {
        const double w = t.o1.freq.eval_double(bind) * x1;
        v *= t.o1.kind == OscKind::sine ? std::sin(w) : std::cos(w);
      }
      if (t.o2.kind != OscKind::none) {
        const double w = t.o2.freq.eval_double(bind) * x2;
        v *= t.o2.kind == OscKind::sine ? std::sin(w) : std::cos(w);
      }
      acc += v;
    }
    return acc;
  }

  std::vector<Sym> symbols() const {
    std::vector<Sym> out;
    for (const auto& [t, c] : t_) {
      auto a = t.symbols();
      auto b = c.symbols();
      out.insert(out.end(), a.begin(), a.end());
      out.insert(out.end(), b.begin(), b.end());
    }
    std::sort(out.begin(), out.end(), SymNameLess{});
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  bool has_kappa() const {
    for (Sym s : symbols())
      if (s.is_kappa()) return true;
    return false;
  }

  // largest coefficient magnitude over all terms (scale for residual tests)
  double coeff_scale() const {
    double m = 0.0;
    for (const auto& [t, c] : t_) m = std::max(m, c.max_abs_coeff());
    return m;
  }

  std::string str() const {
    if (t_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [t, c] : t_) {
      if (!first) os << " + ";
      first = false;
      const std::string cs = c.str();
      const std::string ts = t.str();
      if (ts == "1") {
        os << (c.size() > 1 ? "(" + cs + ")" : cs);
      } else if (cs == "1") {
        os << ts;
      } else if (c.size() > 1) {
        os << "(" << cs << ")*" << ts;
      } else {
        os << cs << "*" << ts;
      }
    }
    return os.str();
  }

 private:
  Map t_;
};

// ---------------------------------------------------------------------------
// term product with trig linearization
// ---------------------------------------------------------------------------

namespace detail {

// product of two oscillatory factors on the same axis -> at most two
// (scalar, osc) summands via the product-to-sum identities
template <class F>
std::vector<std::pair<F, Osc<F>>> osc_mul(const Osc<F>& a, const Osc<F>& b) {
  using traits = field_traits<F>;
  const F one = traits::one();
  const F half = one / field_traits<F>::from_int(2);
  std::vector<std::pair<F, Osc<F>>> out;
  if (a.kind == OscKind::none) {
    out.emplace_back(one, b);
    return out;
  }
  if (b.kind == OscKind::none) {
    out.emplace_back(one, a);
    return out;
  }
  const RateForm<F> sum = a.freq + b.freq;
  const RateForm<F> dif = a.freq - b.freq;
  if (a.kind == OscKind::sine && b.kind == OscKind::sine) {
    // sin A sin B = (cos(A-B) - cos(A+B)) / 2
    out.emplace_back(half, Osc<F>{dif, OscKind::cosine});
    out.emplace_back(-half, Osc<F>{sum, OscKind::cosine});
  } else if (a.kind == OscKind::cosine && b.kind == OscKind::cosine) {
    // cos A cos B = (cos(A-B) + cos(A+B)) / 2
    out.emplace_back(half, Osc<F>{dif, OscKind::cosine});
    out.emplace_back(half, Osc<F>{sum, OscKind::cosine});
  } else {
    // sin A cos B = (sin(A+B) + sin(A-B)) / 2, with A the sine factor
    const RateForm<F> d = a.kind == OscKind::sine ? a.freq - b.freq : b.freq - a.freq;
    out.emplace_back(half, Osc<F>{sum, OscKind::sine});
    out.emplace_back(half, Osc<F>{d, OscKind::sine});
  }
  return out;
}

}  // namespace detail

// product of two canonical terms: at most four canonical summands, each a
// scalar multiple of a canonical term
template <class F>
std::vector<std::pair<F, CanonicalTerm<F>>> term_mul(const CanonicalTerm<F>& a,
                                                     const CanonicalTerm<F>& b) {
  CanonicalTerm<F> base;
  base.p1 = a.p1 + b.p1;
  base.p2 = a.p2 + b.p2;
  base.r1 = a.r1 + b.r1;
  base.r2 = a.r2 + b.r2;
  std::vector<std::pair<F, CanonicalTerm<F>>> out;
  for (const auto& [f1, osc1] : detail::osc_mul(a.o1, b.o1)) {
    for (const auto& [f2, osc2] : detail::osc_mul(a.o2, b.o2)) {
      CanonicalTerm<F> t = base;
      t.o1 = osc1;
      t.o2 = osc2;
      out.emplace_back(f1 * f2, std::move(t));
    }
  }
  return out;
}

template <class F>
SymExpr<F> expr_mul(const SymExpr<F>& a, const SymExpr<F>& b) {
  SymExpr<F> r;
  for (const auto& [ta, ca] : a.terms()) {
    for (const auto& [tb, cb] : b.terms()) {
      const KPoly<F> c = ca * cb;
      for (auto& [f, t] : term_mul(ta, tb)) {
        KPoly<F> scaled = c;
        scaled.scale(f);
        r.add(std::move(t), std::move(scaled));
      }
    }
  }
  return r;
}

template <class F>
SymExpr<F> expr_pow(const SymExpr<F>& a, int e) {
  SymExpr<F> r = SymExpr<F>::one();
  for (int i = 0; i < e; ++i) r = expr_mul(r, a);
  return r;
}

// ---------------------------------------------------------------------------
// differentiation: d/dx1 (axis 1) or d/dx2 (axis 2); exact, closed
// ---------------------------------------------------------------------------

template <class F>
SymExpr<F> diff(const SymExpr<F>& e, int axis) {
  if (axis != 1 && axis != 2) throw input_error("diff: axis must be 1 or 2");
  SymExpr<F> r;
  for (const auto& [t, c] : e.terms()) {
    const int p = axis == 1 ? t.p1 : t.p2;
    const RateForm<F>& rate = axis == 1 ? t.r1 : t.r2;
    const Osc<F>& osc = axis == 1 ? t.o1 : t.o2;

    if (p > 0) {  // power rule
      CanonicalTerm<F> nt = t;
      (axis == 1 ? nt.p1 : nt.p2) -= 1;
      KPoly<F> nc = c;
      nc.scale(field_traits<F>::from_int(p));
      r.add(std::move(nt), std::move(nc));
    }
    if (!rate.is_zero()) {  // exponential rule
      r.add(t, c * rate.to_kpoly());
    }
    if (osc.kind != OscKind::none) {  // trig rule
      CanonicalTerm<F> nt = t;
      Osc<F>& no = axis == 1 ? nt.o1 : nt.o2;
      KPoly<F> nc = c * osc.freq.to_kpoly();
      if (osc.kind == OscKind::sine) {
        no.kind = OscKind::cosine;  // (sin wx)' = w cos wx
      } else {
        no.kind = OscKind::sine;  // (cos wx)' = -w sin wx
        nc.scale(F(-1));
      }
      r.add(std::move(nt), std::move(nc));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// span extraction
// ---------------------------------------------------------------------------

template <class F>
struct SpanCoords {
  bool in_span = false;
  std::vector<KPoly<F>> coords;  // one per member
  SymExpr<F> residual;           // e - sum coords_m * member_m
};

namespace detail {

template <class F>
int find_term(const std::vector<CanonicalTerm<F>>& terms, const CanonicalTerm<F>& t) {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if constexpr (field_traits<F>::exact) {
      if (terms[i].cmp(t) == 0) return static_cast<int>(i);
    } else {
      if (terms[i].fuzzy_eq(t)) return static_cast<int>(i);
    }
  }
  return -1;
}

}  // namespace detail

// Expresses e in the span of the given members where possible.  Members must
// be nonzero, kappa-free, and carry scalar coefficients; e may carry
// arbitrary polynomial coefficients.  Works by exact Gaussian elimination on
// the term-by-member coefficient matrix with the coefficients of e as a
// polynomial-valued right-hand side.  A linearly dependent member set is an
// error (reported with an explicit dependency witness).
template <class F>
SpanCoords<F> coordinates_in_span(const SymExpr<F>& e, const std::vector<SymExpr<F>>& members) {
  using traits = field_traits<F>;
  const std::size_t n = members.size();
  if (n == 0) throw input_error("coordinates_in_span: empty member list");

  for (std::size_t j = 0; j < n; ++j) {
    if (members[j].is_zero())
      throw input_error("coordinates_in_span: member " + std::to_string(j + 1) + " is zero");
    if (members[j].has_kappa())
      throw input_error("coordinates_in_span: member " + std::to_string(j + 1) +
                        " contains kappa symbols");
    for (const auto& [t, c] : members[j].terms()) {
      if (!c.is_constant())
        throw input_error("coordinates_in_span: member " + std::to_string(j + 1) +
                          " has non-scalar coefficient " + c.str());
    }
  }

  // union of canonical terms over members and e, members first
  std::vector<CanonicalTerm<F>> terms;
  for (const auto& m : members)
    for (const auto& [t, c] : m.terms())
      if (detail::find_term(terms, t) < 0) terms.push_back(t);
  for (const auto& [t, c] : e.terms())
    if (detail::find_term(terms, t) < 0) terms.push_back(t);

  const std::size_t rows = terms.size();
  std::vector<std::vector<F>> M(rows, std::vector<F>(n, traits::zero()));
  std::vector<KPoly<F>> rhs(rows);
  double scale = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (const auto& [t, c] : members[j].terms()) {
      const int r = detail::find_term(terms, t);
      M[r][j] = c.constant_value();
      scale = std::max(scale, std::fabs(traits::to_double(M[r][j])));
    }
  }
  for (const auto& [t, c] : e.terms()) rhs[detail::find_term(terms, t)] = c;

  // forward elimination with partial pivoting (numeric) / first nonzero (exact)
  std::vector<int> pivot_row(n, -1);
  std::size_t next_row = 0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t best = rows;
    if constexpr (traits::exact) {
      for (std::size_t r = next_row; r < rows; ++r) {
        if (M[r][col] != 0) {
          best = r;
          break;
        }
      }
    } else {
      double mx = 0.0;
      for (std::size_t r = next_row; r < rows; ++r) {
        const double a = std::fabs(traits::to_double(M[r][col]));
        if (a > mx) {
          mx = a;
          best = r;
        }
      }
      if (best < rows && mx <= 1e-12 * scale) best = rows;
    }
    if (best == rows) {
      // dependent member set: recover the combination explicitly so the
      // error names a witness, not just a verdict
      std::vector<F> w(col, traits::zero());
      for (int i = static_cast<int>(col) - 1; i >= 0; --i) {
        const int pr = pivot_row[i];
        F acc = M[pr][col];
        for (std::size_t c2 = i + 1; c2 < col; ++c2) acc = acc - M[pr][c2] * w[c2];
        w[i] = acc / M[pr][i];
      }
      std::ostringstream os;
      os << "coordinates_in_span: members are linearly dependent; member " << (col + 1) << " = ";
      bool first = true;
      for (std::size_t i = 0; i < col; ++i) {
        if (traits::is_zero(w[i], scale)) continue;
        if (!first) os << " + ";
        first = false;
        os << "(" << traits::str(w[i]) << ")*member " << (i + 1);
      }
      if (first) os << "0";
      throw input_error(os.str());
    }
    std::swap(M[best], M[next_row]);
    std::swap(rhs[best], rhs[next_row]);
    std::swap(terms[best], terms[next_row]);
    const F piv = M[next_row][col];
    for (std::size_t r = next_row + 1; r < rows; ++r) {
      if (traits::is_zero(M[r][col], scale)) continue;
      const F f = M[r][col] / piv;
      for (std::size_t c2 = col; c2 < n; ++c2) M[r][c2] = M[r][c2] - f * M[next_row][c2];
      KPoly<F> adj = rhs[next_row];
      adj.scale(f);
      rhs[r] -= adj;
      rhs[r].normalize();
    }
    pivot_row[col] = static_cast<int>(next_row);
    ++next_row;
  }

  // back substitution for the polynomial-valued coordinates
  SpanCoords<F> out;
  out.coords.assign(n, KPoly<F>());
  for (int col = static_cast<int>(n) - 1; col >= 0; --col) {
    const int pr = pivot_row[col];
    KPoly<F> acc = rhs[pr];
    for (std::size_t c2 = col + 1; c2 < n; ++c2) {
      if (traits::is_zero(M[pr][c2], scale)) continue;
      KPoly<F> t = out.coords[c2];
      t.scale(M[pr][c2]);
      acc -= t;
    }
    acc.scale(traits::one() / M[pr][col]);
    acc.normalize();
    out.coords[col] = std::move(acc);
  }

  // residual by reassembly, so e == sum coords*members + residual holds
  // identically in the expression algebra
  SymExpr<F> recon;
  for (std::size_t j = 0; j < n; ++j) recon += members[j].scaled(out.coords[j]);
  out.residual = e - recon;
  if constexpr (!traits::exact) {
    // drop reassembly roundoff below the zero threshold relative to e
    SymExpr<F> cleaned;
    const double s = std::max(1.0, e.coeff_scale());
    for (const auto& [t, c] : out.residual.terms()) {
      KPoly<F> kept;
      for (const auto& [m, v] : c.terms())
        if (!traits::is_zero(v, s)) kept.add_term(m, v);
      if (!kept.is_zero()) cleaned.add(t, kept);
    }
    out.residual = std::move(cleaned);
  }
  out.in_span = out.residual.is_zero();
  return out;
}

using SymExprQ = SymExpr<Rat>;
using SymExprD = SymExpr<double>;

}  // namespace ism
