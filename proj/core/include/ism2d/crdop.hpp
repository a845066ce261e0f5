#pragma once
// Quasilinear convection-reaction-diffusion operators
//
//   K[u] = A1(u) u_{x1x1} + A1'(u) (u_{x1})^2 + B1(u) u_{x1}
//        + A2(u) u_{x2x2} + A2'(u) (u_{x2})^2 + B2(u) u_{x2} + C(u)
//
// where A1, A2, B1, B2, C are low-degree polynomials in u whose
// coefficients may themselves be polynomials in named parameters.  The
// A-terms arise from divergence-form diffusion (A(u) u_x)_x, which is why
// the derivative polynomials appear alongside the squares of gradients.

#include "ism2d/funcalg.hpp"

namespace ism {

// polynomial in u of degree <= 4 with KPoly coefficients, trailing zeros
// trimmed so degree() is meaningful
template <class F>
class UPoly {
 public:
  static constexpr int max_degree = 4;

  UPoly() = default;

  explicit UPoly(std::vector<KPoly<F>> coeffs) : c_(std::move(coeffs)) {
    trim();
    if (degree() > max_degree)
      throw input_error("operator coefficient polynomial exceeds degree " +
                        std::to_string(max_degree) + " in u");
  }

  static UPoly zero() { return UPoly(); }
  static UPoly constant(KPoly<F> k) {
    std::vector<KPoly<F>> c;
    c.push_back(std::move(k));
    return UPoly(std::move(c));
  }
  static UPoly constant(const F& v) { return constant(KPoly<F>::constant(v)); }

  const std::vector<KPoly<F>>& coeffs() const { return c_; }
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }

  const KPoly<F>& coeff(int d) const {
    static const KPoly<F> kzero;
    return d >= 0 && d < static_cast<int>(c_.size()) ? c_[d] : kzero;
  }

  UPoly derivative() const {
    std::vector<KPoly<F>> d;
    for (std::size_t i = 1; i < c_.size(); ++i) {
      KPoly<F> k = c_[i];
      k.scale(field_traits<F>::from_int(static_cast<long>(i)));
      d.push_back(std::move(k));
    }
    return UPoly(std::move(d));
  }

  UPoly operator+(const UPoly& o) const {
    std::vector<KPoly<F>> s(std::max(c_.size(), o.c_.size()));
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i < c_.size()) s[i] += c_[i];
      if (i < o.c_.size()) s[i] += o.c_[i];
    }
    return UPoly(std::move(s));
  }

  // evaluate at a numeric point (all coefficient symbols must be bound)
  double eval_double(double u, const std::map<Sym, double, SymNameLess>& bind = {}) const {
    double acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * u + it->eval_double(bind);
    return acc;
  }

  // substitute parameter values into the coefficients
  UPoly substitute(const std::map<Sym, F, SymNameLess>& bind) const {
    std::vector<KPoly<F>> s;
    s.reserve(c_.size());
    for (const auto& k : c_) s.push_back(k.substitute(bind));
    return UPoly(std::move(s));
  }

  // polynomial composition with an expression, using shared precomputed
  // powers of u
  SymExpr<F> compose(const std::vector<SymExpr<F>>& u_powers) const {
    SymExpr<F> acc;
    for (std::size_t d = 0; d < c_.size(); ++d) {
      if (c_[d].is_zero()) continue;
      acc += u_powers[d].scaled(c_[d]);
    }
    return acc;
  }

  // composition in a plain polynomial ring (jet computations)
  KPoly<F> compose(const std::vector<KPoly<F>>& u_powers) const {
    KPoly<F> acc;
    for (std::size_t d = 0; d < c_.size(); ++d) {
      if (c_[d].is_zero()) continue;
      acc += c_[d] * u_powers[d];
    }
    return acc;
  }

  std::string str() const {
    if (c_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (int d = degree(); d >= 0; --d) {
      if (c_[d].is_zero()) continue;
      if (!first) os << " + ";
      first = false;
      const std::string ks = c_[d].str();
      if (d == 0) {
        os << (c_[d].size() > 1 ? "(" + ks + ")" : ks);
      } else {
        if (ks == "1")
          ;  // coefficient 1 prints as the bare power
        else
          os << (c_[d].size() > 1 ? "(" + ks + ")*" : ks + "*");
        os << (d == 1 ? "u" : "u^" + std::to_string(d));
      }
    }
    return first ? "0" : os.str();
  }

 private:
  void trim() {
    while (!c_.empty() && c_.back().is_zero()) c_.pop_back();
  }
  std::vector<KPoly<F>> c_;
};

template <class F>
struct CRDOperator {
  UPoly<F> A1, A2;  // diffusion (divergence form)
  UPoly<F> B1, B2;  // convection
  UPoly<F> C;       // reaction

  // largest u-degree appearing anywhere; bounds the powers cache
  int max_u_degree() const {
    int d = 0;
    for (const UPoly<F>* p : {&A1, &A2, &B1, &B2, &C}) d = std::max(d, p->degree());
    return d;
  }

  CRDOperator substitute(const std::map<Sym, F, SymNameLess>& bind) const {
    return CRDOperator{A1.substitute(bind), A2.substitute(bind), B1.substitute(bind),
                       B2.substitute(bind), C.substitute(bind)};
  }

  std::vector<Sym> symbols() const {
    std::vector<Sym> out;
    for (const UPoly<F>* p : {&A1, &A2, &B1, &B2, &C})
      for (const auto& k : p->coeffs()) {
        auto s = k.symbols();
        out.insert(out.end(), s.begin(), s.end());
      }
    std::sort(out.begin(), out.end(), SymNameLess{});
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::string str() const {
    std::ostringstream os;
    os << "A1 = " << A1.str() << "; A2 = " << A2.str() << "; B1 = " << B1.str()
       << "; B2 = " << B2.str() << "; C = " << C.str();
    return os.str();
  }
};

namespace detail {

template <class F>
inline std::vector<SymExpr<F>> expr_powers(const SymExpr<F>& u, int max_deg) {
  std::vector<SymExpr<F>> p;
  p.reserve(max_deg + 1);
  p.push_back(SymExpr<F>::one());
  for (int d = 1; d <= max_deg; ++d) p.push_back(expr_mul(p.back(), u));
  return p;
}

}  // namespace detail

// expands K[u] for an explicit expression u; exact in the expression algebra
template <class F>
SymExpr<F> apply_operator(const CRDOperator<F>& op, const SymExpr<F>& u) {
  const auto up = detail::expr_powers(u, std::max(1, op.max_u_degree()));
  const SymExpr<F> ux1 = diff(u, 1);
  const SymExpr<F> ux2 = diff(u, 2);
  const SymExpr<F> ux1x1 = diff(ux1, 1);
  const SymExpr<F> ux2x2 = diff(ux2, 2);

  SymExpr<F> r;
  if (!op.A1.is_zero()) {
    r += expr_mul(op.A1.compose(up), ux1x1);
    r += expr_mul(op.A1.derivative().compose(up), expr_mul(ux1, ux1));
  }
  if (!op.A2.is_zero()) {
    r += expr_mul(op.A2.compose(up), ux2x2);
    r += expr_mul(op.A2.derivative().compose(up), expr_mul(ux2, ux2));
  }
  if (!op.B1.is_zero()) r += expr_mul(op.B1.compose(up), ux1);
  if (!op.B2.is_zero()) r += expr_mul(op.B2.compose(up), ux2);
  r += op.C.compose(up);
  return r;
}

}  // namespace ism
