#pragma once
// Finite-dimensional solution spaces of constant-coefficient linear ODEs in
// one space variable, and the two ways of combining an x1-space with an
// x2-space: the product construction (dimension n1*n2) and the sum
// construction {1} + V1' + V2' (dimension n1+n2-1, which requires both ODEs
// to annihilate constants).

#include "ism2d/funcalg.hpp"

#include <array>
#include <complex>

namespace ism {

// y^(n) + a_{n-1} y^(n-1) + ... + a_1 y' + a_0 y = 0 on the given axis,
// with concrete coefficients (monic by convention, so only a_0..a_{n-1}
// are stored); order 1..4
template <class F>
struct LinearODE {
  int axis = 1;
  std::vector<F> coeffs;  // a_0 .. a_{n-1}

  int order() const { return static_cast<int>(coeffs.size()); }

  void validate() const {
    if (axis != 1 && axis != 2) throw input_error("LinearODE: axis must be 1 or 2");
    if (coeffs.empty() || coeffs.size() > 4)
      throw input_error("LinearODE: order must be between 1 and 4");
  }
};

// same shape with polynomial coefficients; used where the ODE recipe keeps
// its rates symbolic (determining systems)
template <class F>
struct OdeTemplate {
  int axis = 1;
  std::vector<KPoly<F>> coeffs;  // a_0 .. a_{n-1}

  int order() const { return static_cast<int>(coeffs.size()); }

  void validate() const {
    if (axis != 1 && axis != 2) throw input_error("OdeTemplate: axis must be 1 or 2");
    if (coeffs.empty() || coeffs.size() > 4)
      throw input_error("OdeTemplate: order must be between 1 and 4");
  }

  static OdeTemplate from_concrete(const LinearODE<F>& ode) {
    OdeTemplate t;
    t.axis = ode.axis;
    for (const F& c : ode.coeffs) t.coeffs.push_back(KPoly<F>::constant(c));
    return t;
  }
};

enum class SubspaceKind { type1, type2, custom };

template <class F>
struct SubspaceBasis {
  SubspaceKind kind = SubspaceKind::custom;
  std::vector<SymExpr<F>> members;
  // ODE recipe behind the members; absent for custom bases.  Coefficients
  // stay symbolic when the basis is a template (no members in that case).
  std::optional<OdeTemplate<F>> ode1;
  std::optional<OdeTemplate<F>> ode2;

  int dimension() const { return static_cast<int>(members.size()); }
  bool is_template() const { return members.empty() && ode1.has_value(); }
};

// ---------------------------------------------------------------------------
// characteristic roots
// ---------------------------------------------------------------------------

template <class F>
struct OdeRoots {
  // real roots with multiplicity, ordered descending by value
  std::vector<std::pair<F, int>> real;
  // complex pairs p +- i q with q > 0, ordered (p descending, q ascending)
  std::vector<std::pair<std::pair<F, F>, int>> complex_pairs;
};

namespace detail {

inline void sort_roots_q(OdeRoots<Rat>& r) {
  std::sort(r.real.begin(), r.real.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::sort(r.complex_pairs.begin(), r.complex_pairs.end(), [](const auto& a, const auto& b) {
    if (a.first.first != b.first.first) return a.first.first > b.first.first;
    return a.first.second < b.first.second;
  });
}

// exact roots of the monic quadratic z^2 + a1 z + a0; false when the
// discriminant has no rational square root
inline bool quadratic_roots_q(const Rat& a0, const Rat& a1, OdeRoots<Rat>& out) {
  const Rat disc = a1 * a1 - 4 * a0;
  Rat s;
  if (rat_sqrt(disc, s)) {
    const Rat r1 = (-a1 + s) / 2;
    const Rat r2 = (-a1 - s) / 2;
    if (r1 == r2) {
      out.real.emplace_back(r1, 2);
    } else {
      out.real.emplace_back(r1, 1);
      out.real.emplace_back(r2, 1);
    }
    return true;
  }
  if (disc < 0 && rat_sqrt(-disc, s)) {
    out.complex_pairs.push_back({{-a1 / 2, s / 2}, 1});
    return true;
  }
  return false;
}

// divisors of |v| (positive), trial division; guarded against huge inputs
inline std::vector<BigInt> divisors_of(BigInt v) {
  using boost::multiprecision::abs;
  v = abs(v);
  if (v > BigInt(1000000000000ll))
    throw math_error("characteristic polynomial coefficients too large for exact root search; "
                     "use numeric mode");
  std::vector<BigInt> out;
  for (BigInt d = 1; d * d <= v; ++d) {
    if (v % d == 0) {
      out.push_back(d);
      out.push_back(v / d);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// exact roots of a monic rational-coefficient polynomial of degree <= 4:
// peel off rational roots, finish with the quadratic formula; anything
// needing irrational or non-quadratic surds is reported as unsupported
inline OdeRoots<Rat> char_roots_q(std::vector<Rat> a /* a_0..a_{n-1}, monic */) {
  OdeRoots<Rat> out;
  std::map<Rat, int> mult;

  // poly coefficients low-to-high including the leading 1
  std::vector<Rat> p = a;
  p.push_back(Rat(1));

  auto eval = [](const std::vector<Rat>& q, const Rat& x) {
    Rat acc(0);
    for (auto it = q.rbegin(); it != q.rend(); ++it) acc = acc * x + *it;
    return acc;
  };
  auto deflate = [](std::vector<Rat>& q, const Rat& root) {
    // synthetic division by (z - root); q is low-to-high
    std::vector<Rat> r(q.size() - 1);
    Rat carry = q.back();
    for (int i = static_cast<int>(q.size()) - 2; i >= 0; --i) {
      r[i] = carry;
      carry = q[i] + root * carry;
    }
    q = std::move(r);
  };

  while (p.size() > 3) {
    // zero root?
    if (p[0] == 0) {
      ++mult[Rat(0)];
      p.erase(p.begin());
      continue;
    }
    // rational root candidates +-num/den, num | numerator-lcm form
    // clear denominators first: integer poly c_i
    BigInt lcm_den(1);
    for (const Rat& c : p) {
      const BigInt d = boost::multiprecision::denominator(c);
      lcm_den = boost::multiprecision::lcm(lcm_den, d);
    }
    std::vector<BigInt> ci;
    ci.reserve(p.size());
    for (const Rat& c : p) ci.push_back(boost::multiprecision::numerator(c * lcm_den));
    bool found = false;
    for (const BigInt& num : divisors_of(ci.front())) {
      for (const BigInt& den : divisors_of(ci.back())) {
        for (int sgn : {1, -1}) {
          const Rat cand = Rat(sgn * num, den);
          if (eval(p, cand) == 0) {
            ++mult[cand];
            deflate(p, cand);
            found = true;
            break;
          }
        }
        if (found) break;
      }
      if (found) break;
    }
    if (!found)
      throw math_error("characteristic polynomial has no rational root and degree > 2; "
                       "exact mode supports rational roots and quadratic surd pairs only -- "
                       "use numeric mode");
  }

  if (p.size() == 3) {
    OdeRoots<Rat> quad;
    if (!quadratic_roots_q(p[0], p[1], quad))
      throw math_error("characteristic roots are irrational; use numeric mode or a "
                       "surd-free recipe");
    for (const auto& [r, m] : quad.real) mult[r] += m;
    for (const auto& pr : quad.complex_pairs) out.complex_pairs.push_back(pr);
  } else if (p.size() == 2) {
    ++mult[-p[0]];
  }

  for (const auto& [r, m] : mult) out.real.emplace_back(r, m);
  sort_roots_q(out);
  return out;
}

}  // namespace detail

// numeric characteristic roots: companion-matrix eigenvalues, Newton
// polish, clustering at absolute tolerance 1e-8 into multiple roots
OdeRoots<double> numeric_char_roots(const std::vector<double>& coeffs);

namespace detail {

template <class F>
OdeRoots<F> char_roots(const LinearODE<F>& ode) {
  if constexpr (field_traits<F>::exact) {
    return char_roots_q(ode.coeffs);
  } else {
    return numeric_char_roots(ode.coeffs);
  }
}

// members for one root family on the given axis, scaled x^j/j! so repeated
// roots contribute 1, x, x^2/2, ...
template <class F>
void append_members(std::vector<SymExpr<F>>& out, int axis, const OdeRoots<F>& roots) {
  using traits = field_traits<F>;
  auto base_term = [&](int j, const F& rate) {
    CanonicalTerm<F> t;
    (axis == 1 ? t.p1 : t.p2) = j;
    if (!traits::is_zero(rate))
      (axis == 1 ? t.r1 : t.r2) = RateForm<F>::constant(rate);
    return t;
  };
  auto inv_factorial = [](int j) {
    F f = field_traits<F>::one();
    for (int i = 2; i <= j; ++i) f = f / field_traits<F>::from_int(i);
    return f;
  };
  for (const auto& [r, m] : roots.real) {
    for (int j = 0; j < m; ++j)
      out.push_back(SymExpr<F>::from_term(base_term(j, r), KPoly<F>::constant(inv_factorial(j))));
  }
  for (const auto& [pq, m] : roots.complex_pairs) {
    const auto& [p, q] = pq;
    for (int j = 0; j < m; ++j) {
      for (OscKind k : {OscKind::sine, OscKind::cosine}) {
        CanonicalTerm<F> t = base_term(j, p);
        Osc<F>& o = axis == 1 ? t.o1 : t.o2;
        o.kind = k;
        o.freq = RateForm<F>::constant(q);
        out.push_back(SymExpr<F>::from_term(std::move(t), KPoly<F>::constant(inv_factorial(j))));
      }
    }
  }
}

}  // namespace detail

// fundamental solution set of the ODE as expressions on its axis, ordered:
// real roots descending (powers ascending within a repeated root), then
// complex pairs (sin before cos)
template <class F>
std::vector<SymExpr<F>> ode_basis(const LinearODE<F>& ode) {
  ode.validate();
  const OdeRoots<F> roots = detail::char_roots(ode);
  std::vector<SymExpr<F>> out;
  detail::append_members(out, ode.axis, roots);
  return out;
}

// Throws when the member list fails to be linearly independent (delegates
// to the span elimination, which reports an explicit dependency).
template <class F>
void validate_basis(const std::vector<SymExpr<F>>& members) {
  if (members.empty()) throw input_error("subspace basis has no members");
  (void)coordinates_in_span(members.front(), members);
}

// product construction: all pairwise products, x2-family major so the
// member order is basis1 x {first of basis2}, then basis1 x {second}, ...
template <class F>
SubspaceBasis<F> build_type1(const LinearODE<F>& ode1, const LinearODE<F>& ode2) {
  ode1.validate();
  ode2.validate();
  if (ode1.axis != 1 || ode2.axis != 2)
    throw input_error("build_type1: expected the first ODE on axis 1 and the second on axis 2");
  const auto b1 = ode_basis(ode1);
  const auto b2 = ode_basis(ode2);
  SubspaceBasis<F> out;
  out.kind = SubspaceKind::type1;
  out.ode1 = OdeTemplate<F>::from_concrete(ode1);
  out.ode2 = OdeTemplate<F>::from_concrete(ode2);
  for (const auto& m2 : b2)
    for (const auto& m1 : b1) out.members.push_back(expr_mul(m1, m2));
  validate_basis(out.members);
  return out;
}

// sum construction {1} + V1' + V2'; both ODEs must annihilate constants
// (a_0 = b_0 = 0), otherwise 1 is not a common solution and the
// construction is undefined
template <class F>
SubspaceBasis<F> build_type2(const LinearODE<F>& ode1, const LinearODE<F>& ode2) {
  using traits = field_traits<F>;
  ode1.validate();
  ode2.validate();
  if (ode1.axis != 1 || ode2.axis != 2)
    throw input_error("build_type2: expected the first ODE on axis 1 and the second on axis 2");
  if (!traits::is_zero(ode1.coeffs[0]) || !traits::is_zero(ode2.coeffs[0]))
    throw input_error("build_type2: the sum construction requires a_0 = b_0 = 0 "
                      "(both ODEs must annihilate constants)");
  SubspaceBasis<F> out;
  out.kind = SubspaceKind::type2;
  out.ode1 = OdeTemplate<F>::from_concrete(ode1);
  out.ode2 = OdeTemplate<F>::from_concrete(ode2);
  out.members.push_back(SymExpr<F>::one());
  for (const auto& b : {ode_basis(ode1), ode_basis(ode2)}) {
    for (const auto& m : b) {
      const auto& terms = m.terms();
      if (terms.size() == 1 && terms.begin()->first.is_unit()) continue;  // drop the shared 1
      out.members.push_back(m);
    }
  }
  validate_basis(out.members);
  return out;
}

template <class F>
SubspaceBasis<F> custom_basis(std::vector<SymExpr<F>> members) {
  SubspaceBasis<F> out;
  out.kind = SubspaceKind::custom;
  out.members = std::move(members);
  validate_basis(out.members);
  return out;
}

// symbolic recipe (no members; determining systems only)
template <class F>
SubspaceBasis<F> template_basis(SubspaceKind kind, OdeTemplate<F> ode1, OdeTemplate<F> ode2) {
  if (kind == SubspaceKind::custom) throw input_error("template_basis: kind must be type1 or type2");
  ode1.validate();
  ode2.validate();
  if (ode1.axis != 1 || ode2.axis != 2)
    throw input_error("template_basis: expected the first ODE on axis 1 and the second on axis 2");
  SubspaceBasis<F> out;
  out.kind = kind;
  out.ode1 = std::move(ode1);
  out.ode2 = std::move(ode2);
  return out;
}

}  // namespace ism
