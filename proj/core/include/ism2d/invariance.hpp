#pragma once
// Invariance analysis: does the operator map a subspace into itself, and
// when the coefficients stay symbolic, what conditions on them make it so.
//
// The exact check expands K[sum kappa_m xi_m] in the expression algebra and
// extracts coordinates in the basis span; the leftover is the obstruction.
// The determining-system route works in a jet ring instead: derivatives of
// a subspace element are rewritten through the defining ODEs, so the
// conditions fall out as coefficient polynomials of the jet monomials in
// L1[K], L2[K] (and the mixed-derivative condition for sum-type spaces).
// A numeric finite-difference probe cross-validates both on sampled data.

#include "ism2d/crdop.hpp"
#include "ism2d/subspace.hpp"

namespace ism {

inline constexpr std::uint64_t default_seed = 12345;

// ---------------------------------------------------------------------------
// exact invariance check
// ---------------------------------------------------------------------------

template <class F>
struct InvarianceWitness {
  std::map<Sym, F, SymNameLess> assignment;  // kappa values
  std::string term;                          // out-of-span canonical term
  std::string value;                         // its coefficient at the assignment
};

template <class F>
struct InvarianceReport {
  bool invariant = false;
  std::vector<KPoly<F>> psi;  // coordinates of K[u] in the basis (valid when invariant)
  SymExpr<F> residual;        // out-of-span part of K[u]
  double residual_norm = 0.0; // max residual coefficient relative to K[u] scale
  std::optional<InvarianceWitness<F>> witness;
  SymExpr<F> image;           // K[sum kappa_m xi_m], kept for diagnostics
};

template <class F>
InvarianceReport<F> check_invariance(const CRDOperator<F>& op, const SubspaceBasis<F>& basis,
                                     std::uint64_t seed = default_seed) {
  if (basis.is_template() || basis.members.empty())
    throw input_error("check_invariance: basis has no concrete members");
  const int n = basis.dimension();

  SymExpr<F> u;
  std::vector<Sym> kappas;
  kappas.reserve(n);
  for (int m = 0; m < n; ++m) {
    const Sym k = kappa_sym(m + 1);
    kappas.push_back(k);
    u += basis.members[m].scaled(KPoly<F>::var(k));
  }

  InvarianceReport<F> rep;
  rep.image = apply_operator(op, u);
  SpanCoords<F> span = coordinates_in_span(rep.image, basis.members);
  rep.psi = std::move(span.coords);
  rep.residual = std::move(span.residual);
  rep.invariant = span.in_span;
  const double kscale = std::max(1.0, rep.image.coeff_scale());
  rep.residual_norm = rep.residual.coeff_scale() / kscale;

  if (!rep.invariant) {
    // hunt a concrete kappa assignment that keeps some residual coefficient
    // nonzero; generic draws succeed immediately, the loop guards corner
    // cases where a draw lands on a zero of the coefficient polynomial
    Rng rng(seed);
    for (int attempt = 0; attempt < 100 && !rep.witness; ++attempt) {
      std::map<Sym, F, SymNameLess> assign;
      for (Sym k : kappas) assign[k] = field_traits<F>::from_rat(rng.rat_pm9());
      for (const auto& [t, c] : rep.residual.terms()) {
        const KPoly<F> v = c.substitute(assign);
        const bool nonzero = field_traits<F>::exact ? !v.is_zero() : v.max_abs_coeff() > 1e-12 * kscale;
        if (nonzero) {
          rep.witness = InvarianceWitness<F>{assign, t.str(), v.str()};
          break;
        }
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// reduction to the time system
// ---------------------------------------------------------------------------

template <class F>
struct FODESystem {
  std::vector<Sym> phi;       // Phi1..Phin
  std::vector<KPoly<F>> rhs;  // d^alpha Phi_m = rhs[m](Phi1..Phin)

  int dim() const { return static_cast<int>(rhs.size()); }

  std::string str() const {
    std::ostringstream os;
    for (std::size_t m = 0; m < rhs.size(); ++m) {
      if (m) os << "\n";
      os << "D^alpha " << phi[m].name() << " = " << rhs[m].str();
    }
    return os.str();
  }
};

template <class F>
FODESystem<F> reduce_to_fode_system(const InvarianceReport<F>& rep) {
  if (!rep.invariant) {
    std::string msg = "reduce_to_fode_system: subspace is not invariant";
    if (rep.witness)
      msg += " (residual term " + rep.witness->term + " has coefficient " + rep.witness->value + ")";
    throw input_error(msg);
  }
  FODESystem<F> sys;
  const int n = static_cast<int>(rep.psi.size());
  std::map<Sym, Sym, SymNameLess> rename;
  for (int m = 1; m <= n; ++m) {
    const Sym phi = sym("Phi" + std::to_string(m));
    rename[kappa_sym(m)] = phi;
    sys.phi.push_back(phi);
  }
  for (const auto& p : rep.psi) sys.rhs.push_back(p.rename(rename));
  return sys;
}

template <class F>
FODESystem<F> reduce_to_fode_system(const CRDOperator<F>& op, const SubspaceBasis<F>& basis,
                                    std::uint64_t seed = default_seed) {
  return reduce_to_fode_system(check_invariance(op, basis, seed));
}

// ---------------------------------------------------------------------------
// numeric cross-validation probe
// ---------------------------------------------------------------------------

struct ProbeReport {
  bool in_span = false;
  double max_rel_residual = 0.0;  // worst least-squares residual over draws
  int draws = 0;
};

// Samples K[u] by finite differences for a few random subspace elements and
// least-squares fits the result onto the members on a fixed spatial grid.
// Fully numeric inputs only.  Verdict tolerance: relative residual 1e-7.
ProbeReport numeric_invariance_probe(const CRDOperator<double>& op,
                                     const std::vector<SymExpr<double>>& members,
                                     std::uint64_t seed = default_seed);

// ---------------------------------------------------------------------------
// determining systems (jet-space route)
// ---------------------------------------------------------------------------

template <class F>
struct DeterminingSystem {
  std::vector<KPoly<F>> equations;  // normalized, deduplicated, deterministic order

  std::string str() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < equations.size(); ++i) {
      if (i) os << "\n";
      os << "0 = " << equations[i].str();
    }
    return os.str();
  }
};

namespace detail {

inline bool is_jet_sym(Sym s) { return !s.name().empty() && s.name()[0] == '@'; }

// derivation determined by images of the jet variables; parameter symbols
// are constants
template <class F>
KPoly<F> derive(const KPoly<F>& p, const std::map<Sym, KPoly<F>, SymNameLess>& img) {
  KPoly<F> out;
  for (const auto& [mono, coeff] : p.terms()) {
    for (std::size_t i = 0; i < mono.size(); ++i) {
      const auto& [s, e] = mono[i];
      auto it = img.find(s);
      if (it == img.end() || it->second.is_zero()) continue;
      Mono rest;
      rest.reserve(mono.size());
      for (std::size_t j = 0; j < mono.size(); ++j) {
        if (j == i) {
          if (e > 1) rest.emplace_back(s, e - 1);
        } else {
          rest.push_back(mono[j]);
        }
      }
      KPoly<F> piece;
      F c = coeff * field_traits<F>::from_int(e);
      piece.add_term(rest, c);
      out += piece * it->second;
    }
  }
  out.normalize();
  return out;
}

// divide by content and fix the sign of the leading coefficient (exact) or
// scale the leading coefficient to one (floating)
template <class F>
KPoly<F> normalize_equation(const KPoly<F>& eq) {
  if (eq.is_zero()) return eq;
  KPoly<F> out = eq;
  if constexpr (field_traits<F>::exact) {
    BigInt g(0);
    BigInt l(1);
    for (const auto& [m, c] : eq.terms()) {
      g = boost::multiprecision::gcd(g, boost::multiprecision::numerator(c));
      l = boost::multiprecision::lcm(l, boost::multiprecision::denominator(c));
    }
    Rat scale = Rat(l, g);
    if (eq.terms().rbegin()->second < 0) scale = -scale;
    out.scale(scale);
  } else {
    out.scale(field_traits<F>::one() / eq.terms().rbegin()->second);
  }
  return out;
}

template <class F>
int kpoly_cmp(const KPoly<F>& a, const KPoly<F>& b) {
  auto ia = a.terms().rbegin();
  auto ib = b.terms().rbegin();
  while (ia != a.terms().rend() && ib != b.terms().rend()) {
    if (int c = mono_cmp(ia->first, ib->first)) return c;
    if (ia->second != ib->second) return ia->second < ib->second ? -1 : 1;
    ++ia;
    ++ib;
  }
  if (ia != a.terms().rend()) return 1;
  if (ib != b.terms().rend()) return -1;
  return 0;
}

}  // namespace detail

// Determining system for an operator template over the subspace recipe
// (ODE pair with possibly symbolic coefficients).  Every equation is a
// polynomial in the operator and rate symbols that must vanish for the
// subspace to be invariant.
template <class F>
DeterminingSystem<F> determining_system(const CRDOperator<F>& op, const OdeTemplate<F>& ode1,
                                        const OdeTemplate<F>& ode2, SubspaceKind kind) {
  ode1.validate();
  ode2.validate();
  if (ode1.axis != 1 || ode2.axis != 2)
    throw input_error("determining_system: expected ODE 1 on axis 1 and ODE 2 on axis 2");
  if (kind == SubspaceKind::custom)
    throw input_error("determining_system: subspace kind must be type1 or type2");
  const int n1 = ode1.order();
  const int n2 = ode2.order();
  if (kind == SubspaceKind::type2 &&
      (!ode1.coeffs[0].is_zero() || !ode2.coeffs[0].is_zero()))
    throw input_error("determining_system: the sum construction requires a_0 = b_0 = 0");

  // jet variables: mixed derivatives for the product space, pure
  // derivatives only for the sum space (mixed ones vanish there)
  std::map<std::pair<int, int>, Sym> var;
  auto jet = [&](int i, int j) {
    auto it = var.find({i, j});
    if (it != var.end()) return it->second;
    const Sym s = sym("@j" + std::to_string(i) + "_" + std::to_string(j));
    var.emplace(std::make_pair(i, j), s);
    return s;
  };
  if (kind == SubspaceKind::type1) {
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j) jet(i, j);
  } else {
    for (int i = 0; i < n1; ++i) jet(i, 0);
    for (int j = 1; j < n2; ++j) jet(0, j);
  }

  // images under the two total derivatives, with ODE reduction at the
  // order boundary and structural zeros for the sum construction
  std::map<Sym, KPoly<F>, SymNameLess> img1, img2;
  for (const auto& [ij, s] : var) {
    const auto [i, j] = ij;
    // d/dx1
    if (kind == SubspaceKind::type2 && j > 0) {
      img1[s] = KPoly<F>();
    } else if (i + 1 < n1) {
      img1[s] = KPoly<F>::var(jet(i + 1, j));
    } else {
      KPoly<F> red;
      for (int k = 0; k < n1; ++k) {
        if (ode1.coeffs[k].is_zero()) continue;
        red -= ode1.coeffs[k] * KPoly<F>::var(jet(k, j));
      }
      img1[s] = std::move(red);
    }
    // d/dx2
    if (kind == SubspaceKind::type2 && i > 0) {
      img2[s] = KPoly<F>();
    } else if (j + 1 < n2) {
      img2[s] = KPoly<F>::var(jet(i, j + 1));
    } else {
      KPoly<F> red;
      for (int k = 0; k < n2; ++k) {
        if (ode2.coeffs[k].is_zero()) continue;
        red -= ode2.coeffs[k] * KPoly<F>::var(jet(i, k));
      }
      img2[s] = std::move(red);
    }
  }

  // K[u] in the jet ring
  const KPoly<F> u = KPoly<F>::var(jet(0, 0));
  const int maxd = std::max(1, op.max_u_degree());
  std::vector<KPoly<F>> up;
  up.push_back(KPoly<F>::one());
  for (int d = 1; d <= maxd; ++d) up.push_back(up.back() * u);

  const KPoly<F> ux1 = detail::derive(u, img1);
  const KPoly<F> ux2 = detail::derive(u, img2);
  const KPoly<F> ux1x1 = detail::derive(ux1, img1);
  const KPoly<F> ux2x2 = detail::derive(ux2, img2);

  KPoly<F> K = op.C.compose(up);
  K += op.A1.compose(up) * ux1x1;
  K += op.A1.derivative().compose(up) * (ux1 * ux1);
  K += op.A2.compose(up) * ux2x2;
  K += op.A2.derivative().compose(up) * (ux2 * ux2);
  K += op.B1.compose(up) * ux1;
  K += op.B2.compose(up) * ux2;

  // invariance conditions: K must satisfy both ODEs (and have vanishing
  // mixed derivative for the sum construction)
  std::vector<KPoly<F>> conditions;
  {
    std::vector<KPoly<F>> d1;
    d1.push_back(K);
    for (int i = 1; i <= n1; ++i) d1.push_back(detail::derive(d1.back(), img1));
    KPoly<F> L1 = d1[n1];
    for (int i = 0; i < n1; ++i) L1 += ode1.coeffs[i] * d1[i];
    conditions.push_back(std::move(L1));

    std::vector<KPoly<F>> d2;
    d2.push_back(K);
    for (int j = 1; j <= n2; ++j) d2.push_back(detail::derive(d2.back(), img2));
    KPoly<F> L2 = d2[n2];
    for (int j = 0; j < n2; ++j) L2 += ode2.coeffs[j] * d2[j];
    conditions.push_back(std::move(L2));

    if (kind == SubspaceKind::type2)
      conditions.push_back(detail::derive(detail::derive(K, img1), img2));
  }

  // group by jet monomial; each group's parameter polynomial must vanish
  std::map<Mono, KPoly<F>, MonoLess> groups;
  for (const KPoly<F>& cond : conditions) {
    for (const auto& [mono, coeff] : cond.terms()) {
      Mono jet_part, par_part;
      for (const auto& [s, e] : mono)
        (detail::is_jet_sym(s) ? jet_part : par_part).emplace_back(s, e);
      groups[jet_part].add_term(par_part, coeff);
    }
  }

  DeterminingSystem<F> out;
  for (auto& [jm, eq] : groups) {
    eq.normalize();
    if (eq.is_zero()) continue;
    KPoly<F> n = detail::normalize_equation(eq);
    bool dup = false;
    for (const auto& have : out.equations)
      if (have == n) {
        dup = true;
        break;
      }
    if (!dup) out.equations.push_back(std::move(n));
  }
  std::sort(out.equations.begin(), out.equations.end(),
            [](const KPoly<F>& a, const KPoly<F>& b) { return detail::kpoly_cmp(a, b) < 0; });
  return out;
}

// Convenience overload for a basis carrying its recipe.  Explicit member
// lists with symbolic trigonometric frequencies have no polynomial jet
// closure; they are rejected toward the numeric probe.
template <class F>
DeterminingSystem<F> determining_system(const CRDOperator<F>& op, const SubspaceBasis<F>& basis) {
  for (const auto& m : basis.members) {
    for (const auto& [t, c] : m.terms()) {
      const bool symbolic_trig = (t.o1.kind != OscKind::none && !t.o1.freq.is_constant()) ||
                                 (t.o2.kind != OscKind::none && !t.o2.freq.is_constant());
      if (symbolic_trig)
        throw math_error("determining_system: trigonometric generators with symbolic frequency "
                         "are not supported symbolically; use the numeric probe");
    }
  }
  if (!basis.ode1 || !basis.ode2)
    throw input_error("determining_system: basis carries no ODE recipe");
  return determining_system(op, *basis.ode1, *basis.ode2, basis.kind);
}

}  // namespace ism
