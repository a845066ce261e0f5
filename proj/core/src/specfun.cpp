#include <ism2d/specfun.hpp>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace ism {
namespace {

using mp100 = boost::multiprecision::cpp_bin_float_100;

constexpr long double kPi = 3.141592653589793238462643383279502884L;

// Zone boundaries on chi = |z|^(1/alpha) and the long double overflow rim.
constexpr long double kChiSeries = 8.0L;
constexpr long double kChiBigFloat = 100.0L;
constexpr long double kChiOverflow = 11300.0L;

double finish(long double v, SpecFlags* flags) {
  if (std::fabs(v) > (long double)DBL_MAX) {
    if (flags) flags->overflow = true;
    return v > 0 ? HUGE_VAL : -HUGE_VAL;
  }
  return (double)v;
}

double finish(const mp100& v, SpecFlags* flags) {
  static const mp100 dmax(DBL_MAX);
  if (abs(v) > dmax) {
    if (flags) flags->overflow = true;
    return v > 0 ? HUGE_VAL : -HUGE_VAL;
  }
  return v.convert_to<double>();
}

// sin(pi x), exact zeros at integers.
long double sinpi_ld(long double x) {
  long double r = std::remainder(x, 2.0L);
  if (r > 0.5L)
    r = 1.0L - r;
  else if (r < -0.5L)
    r = -1.0L - r;
  return std::sin(kPi * r);
}

// 1/Gamma with zeros at the poles. Series arguments are always positive here;
// the general form is kept for clarity.
long double rgamma_ld(long double x) {
  if (x <= 0.5L && std::rint(x) == x) return 0.0L;
  int sgn = 0;
  long double lg = boost::math::lgamma(x, &sgn);
  return (long double)sgn * std::exp(-lg);
}

// Gamma(alpha k + beta) values shared across evaluations with the same
// parameters: solution profiles call ml2/ml3 on a whole time grid with fixed
// (alpha, beta), and the 100-digit gammas dominate the cost. thread_local
// keeps the functions reentrant.
std::vector<mp100>& gamma_table(double alpha, double beta) {
  struct Table {
    double a, b;
    std::vector<mp100> g;
  };
  thread_local std::vector<Table> tables;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (tables[i].a == alpha && tables[i].b == beta) {
      if (i) std::rotate(tables.begin(), tables.begin() + i, tables.begin() + i + 1);
      return tables.front().g;
    }
  }
  if (tables.size() >= 16) tables.pop_back();
  tables.insert(tables.begin(), Table{alpha, beta, {}});
  return tables.front().g;
}

const mp100& cached_gamma(std::vector<mp100>& g, double alpha, double beta,
                          long k) {
  // The argument must be formed in mp arithmetic: forming alpha*k + beta in
  // double first perturbs Gamma by ~1e-16 relatively, which the e^chi
  // cancellation amplifies into garbage.
  while ((long)g.size() <= k)
    g.push_back(boost::math::tgamma(mp100(alpha) * (long)g.size() + mp100(beta)));
  return g[(std::size_t)k];
}

// Convergent-series zone, compensated accumulation, termination when
// |term| < 1e-16 |partial| three times in a row.
double ml2_series_ld(double alpha, double beta, double z, SpecFlags* flags) {
  const long double a = alpha, b = beta, zl = z;
  long double s = 0.0L, comp = 0.0L, zk = 1.0L;
  int small = 0;
  for (long k = 0; k < 200000; ++k) {
    long double t = zk * rgamma_ld(a * (long double)k + b);
    long double y = t - comp, tt = s + y;
    comp = (tt - s) - y;
    s = tt;
    if (std::fabs(t) < 1e-16L * std::fabs(s)) {
      if (++small >= 3) return finish(s, flags);
    } else {
      small = 0;
    }
    zk *= zl;
    if (std::fabs(zk) > 1e4800L) break;
  }
  throw math_error("ml2: series did not converge");
}

// Cancellation band: same series in 100-digit arithmetic.
double ml2_series_mp(double alpha, double beta, double z, SpecFlags* flags) {
  auto& g = gamma_table(alpha, beta);
  const mp100 zm(z);
  static const mp100 cut("1e-104");
  mp100 s = 0, zk = 1, mxt = 0;
  for (long k = 0; k < 60000; ++k) {
    mp100 t = zk / cached_gamma(g, alpha, beta, k);
    s += t;
    mp100 at = abs(t);
    if (at > mxt)
      mxt = at;
    else if (k > 3 && at < mxt * cut)
      return finish(s, flags);
    zk *= zm;
  }
  throw math_error("ml2: 100-digit series did not converge");
}

// Large-argument zone: branch terms (1/a) sum_j s_j^(1-b) e^(s_j) over
// s_j = chi e^(i theta_j), theta_j = (arg z + 2 pi j)/alpha in (-pi, pi],
// plus the algebraic tail. The tail's optimal truncation point is
// k* = chi/alpha, where its term envelope bottoms out at ~e^-chi; |t_k| is
// locally non-monotone (sin-pi modulation), so no growth-based cutoff.
double ml2_asymptotic(double alpha, double beta, double z, long double chi,
                      SpecFlags* flags) {
  const long double a = alpha, b = beta;
  const long double argz = z < 0 ? kPi : 0.0L;
  long double br = 0.0L;
  const long jlo = (long)std::floor((-kPi * a - argz) / (2 * kPi)) - 1;
  const long jhi = (long)std::ceil((kPi * a - argz) / (2 * kPi)) + 1;
  for (long j = jlo; j <= jhi; ++j) {
    long double theta = (argz + 2 * kPi * (long double)j) / a;
    if (!(theta > -kPi && theta <= kPi)) continue;
    std::complex<long double> sj = std::polar(chi, theta);
    br += std::real(std::pow(sj, std::complex<long double>(1.0L - b)) *
                    std::exp(sj));
  }
  br /= a;

  long double tail = 0.0L, comp = 0.0L;
  const long double lnaz = std::log(std::fabs((long double)z));
  long kend = (long)std::fmin(4000.0L, chi / a);
  if (kend < 1) kend = 1;
  int small = 0;
  for (long k = 1; k <= kend; ++k) {
    long double x = b - a * (long double)k;
    long double lg, sgn = 1.0L;
    if (x > 0.5L) {
      int is = 0;
      lg = -boost::math::lgamma(x, &is);
    } else {
      long double sp = sinpi_ld(x);
      if (sp == 0.0L) continue;  // Gamma pole: reciprocal term drops out
      int is = 0;
      lg = boost::math::lgamma(1.0L - x, &is) + std::log(std::fabs(sp)) -
           std::log(kPi);
      if (sp < 0) sgn = -1.0L;
    }
    long double t = sgn * std::exp(lg - (long double)k * lnaz);
    if (z < 0 && (k & 1)) t = -t;
    long double y = t - comp, tt = tail + y;
    comp = (tt - tail) - y;
    tail = tt;
    if (std::fabs(t) <= 1e-17L * std::fabs(tail)) {
      if (++small >= 3) break;
    } else {
      small = 0;
    }
  }
  return finish(br - tail, flags);
}

void check_ml_params(const char* who, double alpha, double beta, double z,
                     SpecFlags* flags) {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(z))
    throw input_error(std::string(who) + ": arguments must be finite");
  if (!(alpha >= 0.01))
    throw input_error(std::string(who) + ": alpha must be at least 0.01");
  if (!(beta > 0.0))
    throw input_error(std::string(who) + ": beta must be positive");
  if (alpha > 2.0 && flags) flags->domain_warning = true;
}

}  // namespace

double gamma(double x, SpecFlags* flags) {
  if (!std::isfinite(x)) throw input_error("gamma: argument must be finite");
  if (x <= 0.0 && std::rint(x) == x)
    throw math_error("gamma: pole at non-positive integer argument " +
                     format_double(x));
  try {
    return finish(boost::math::tgamma((long double)x), flags);
  } catch (const std::overflow_error&) {
    if (flags) flags->overflow = true;
    int sgn = 0;
    boost::math::lgamma((long double)x, &sgn);
    return sgn >= 0 ? HUGE_VAL : -HUGE_VAL;
  }
}

double ml2(double alpha, double beta, double z, SpecFlags* flags) {
  check_ml_params("ml2", alpha, beta, z, flags);
  const long double chi =
      std::pow(std::fabs((long double)z), 1.0L / (long double)alpha);
  if (z > 0 && chi > kChiOverflow) {
    if (flags) flags->overflow = true;
    return HUGE_VAL;
  }
  if (chi <= kChiSeries) return ml2_series_ld(alpha, beta, z, flags);
  if (chi <= kChiBigFloat) return ml2_series_mp(alpha, beta, z, flags);
  return ml2_asymptotic(alpha, beta, z, chi, flags);
}

double ml3(double alpha, double beta, double rho, double z, SpecFlags* flags) {
  if (!std::isfinite(rho) || !(rho > 0.0))
    throw input_error("ml3: rho must be positive and finite");
  if (rho == 1.0) {
    check_ml_params("ml3", alpha, beta, z, flags);
    return ml2(alpha, beta, z, flags);
  }
  check_ml_params("ml3", alpha, beta, z, flags);
  const long double chi =
      std::pow(std::fabs((long double)z), 1.0L / (long double)alpha);
  if (z > 0 && chi > kChiOverflow) {
    if (flags) flags->overflow = true;
    return HUGE_VAL;
  }
  if (chi <= kChiSeries) {
    const long double a = alpha, b = beta, r = rho, zl = z;
    long double s = 0.0L, comp = 0.0L, p = 1.0L;  // p = (rho)_k z^k / k!
    int small = 0;
    for (long k = 0; k < 200000; ++k) {
      long double t = p * rgamma_ld(a * (long double)k + b);
      long double y = t - comp, tt = s + y;
      comp = (tt - s) - y;
      s = tt;
      if (std::fabs(t) < 1e-16L * std::fabs(s)) {
        if (++small >= 3) return finish(s, flags);
      } else {
        small = 0;
      }
      p *= zl * (r + (long double)k) / (long double)(k + 1);
      if (std::fabs(p) > 1e4800L) break;
    }
    throw math_error("ml3: series did not converge");
  }
  if (chi <= kChiBigFloat) {
    auto& g = gamma_table(alpha, beta);
    const mp100 zm(z), rm(rho);
    static const mp100 cut("1e-104");
    mp100 s = 0, p = 1, mxt = 0;
    for (long k = 0; k < 60000; ++k) {
      mp100 t = p / cached_gamma(g, alpha, beta, k);
      s += t;
      mp100 at = abs(t);
      if (at > mxt)
        mxt = at;
      else if (k > 3 && at < mxt * cut)
        return finish(s, flags);
      p *= zm * (rm + k) / (k + 1);
    }
    throw math_error("ml3: 100-digit series did not converge");
  }
  throw math_error(
      "ml3: |z|^(1/alpha) = " + format_double((double)chi) +
      " exceeds the supported domain; the large-argument asymptotic regime "
      "of the three-parameter form is not provided");
}

}  // namespace ism
