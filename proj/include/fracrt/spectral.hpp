#pragma once

// Spherical-harmonics solver for the Fourier transform in x3 (q = (0, 0, xi)) of the
// constant-coefficient problem: u' = (D - i xi A) u with D the Funk-Hecke eigenvalues of the
// scattering operator and A the cos(theta) coupling.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/MatrixFunctions>

#include "fracrt/errors.hpp"
#include "fracrt/observables.hpp"
#include "fracrt/quadrature.hpp"

namespace fracrt::spectral {

using cplx = std::complex<double>;

namespace detail {

// log|Gamma(x)| and the sign of Gamma(x).
inline std::pair<double, int> signed_lgamma(double x) {
  if (x <= 0.0 && x == std::floor(x)) throw DomainError("Gamma pole at " + std::to_string(x));
  int sign = 1;
  if (x < 0.0 && static_cast<long long>(std::ceil(-x)) % 2 == 1) sign = -1;
  return {std::lgamma(x), sign};
}

inline double gamma_ratio(double a, double b) {
  const auto [la, sa] = signed_lgamma(a);
  const auto [lb, sb] = signed_lgamma(b);
  return sa * sb * std::exp(la - lb);
}

// P_l(1 - v) - 1 without cancellation near v = 0: sum_{k>=1} (-1)^k C(l,k) C(l+k,k) (v/2)^k.
inline double legendre_minus_one(int l, double v) {
  if (v > 0.5) return quad::detail::legendre_pair(static_cast<std::size_t>(l), 1.0 - v).first - 1.0;
  double term = 1.0;
  double sum = 0.0;
  for (int k = 1; k <= l; ++k) {
    term *= -static_cast<double>((l - k + 1) * (l + k)) / static_cast<double>(k * k) * (0.5 * v);
    sum += term;
  }
  return sum;
}

}  // namespace detail

/// lambda_l = a0 pi Gamma(-alpha/2) / (2^alpha Gamma(1 + alpha/2))
///            * (Gamma(l+1+alpha/2)/Gamma(l+1-alpha/2) - Gamma(1+alpha/2)/Gamma(1-alpha/2)).
inline double eigenvalue(int l, double alpha, double a0) {
  if (l < 0) throw DomainError("degree must be nonnegative");
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("eigenvalues need alpha in (0, 2)");
  const double h = 0.5 * alpha;
  const auto [lg, sg] = detail::signed_lgamma(-h);
  const double pref = a0 * std::numbers::pi * sg * std::exp(lg - std::lgamma(1.0 + h)) / std::pow(2.0, alpha);
  const double dl = static_cast<double>(l);
  return pref * (detail::gamma_ratio(dl + 1.0 + h, dl + 1.0 - h) - detail::gamma_ratio(1.0 + h, 1.0 - h));
}

inline double characteristic_time(double alpha, double a0) { return -1.0 / eigenvalue(1, alpha, a0); }

/// Independent check on eigenvalue(l, alpha, 1): 2 pi int (P_l(s) - 1) (2(1 - s))^{-1-alpha/2} ds
/// by composite Gauss-Legendre after 1 - s = w^q, q = 2 / (2 - alpha), which makes the integrand
/// bounded at s = 1.
inline double funk_hecke_quadrature(int l, double alpha, int panels = 64) {
  const double q = 2.0 / (2.0 - alpha);
  auto f = [&](double w) {
    if (w <= 0.0) return 0.0;
    const double v = std::pow(w, q);
    return detail::legendre_minus_one(l, v) * std::pow(2.0 * v, -1.0 - 0.5 * alpha) * q * std::pow(w, q - 1.0);
  };
  const double top = std::pow(2.0, 1.0 / q);
  double sum = 0.0;
  for (int i = 0; i < panels; ++i) {
    sum += quad::fixed(quad::gauss_legendre_64(), f, top * i / panels, top * (i + 1) / panels);
  }
  return 2.0 * std::numbers::pi * sum;
}

inline double coupling_plus(int l, int m) {
  const double dl = l;
  const double dm = m;
  return std::sqrt((dl + dm + 1.0) * (dl - dm + 1.0) / ((2.0 * dl + 1.0) * (2.0 * dl + 3.0)));
}

inline double coupling_minus(int l, int m) {
  if (l == 0) return 0.0;
  const double dl = l;
  const double dm = m;
  return std::sqrt((dl + dm) * (dl - dm) / ((2.0 * dl - 1.0) * (2.0 * dl + 1.0)));
}

inline constexpr int index(int l, int m) { return l * l + l + m; }
inline constexpr int size(int L) { return (L + 1) * (L + 1); }

struct SpectralSystem {
  int L = 0;
  double xi = 0.0;
  double alpha = 1.0;
  double a0 = 0.0;
  Eigen::VectorXd D;
  Eigen::SparseMatrix<double> A;

  /// Tridiagonal block of D - i xi A for fixed m, rows l = |m| .. L.
  Eigen::MatrixXcd block(int m) const {
    const int lo = std::abs(m);
    const int n = L - lo + 1;
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
    for (int r = 0; r < n; ++r) {
      const int l = lo + r;
      M(r, r) = D(index(l, m));
      if (r + 1 < n) {
        const cplx c(0.0, -xi * coupling_plus(l, m));
        M(r, r + 1) = c;
        M(r + 1, r) = c;
      }
    }
    return M;
  }
};

inline SpectralSystem assemble(int L, double xi, double alpha, double a0) {
  if (L < 1) throw ConfigError("truncation degree must be at least 1");
  SpectralSystem sys{L, xi, alpha, a0, Eigen::VectorXd(size(L)), Eigen::SparseMatrix<double>(size(L), size(L))};
  std::vector<double> lam(static_cast<std::size_t>(L) + 1);
  for (int l = 0; l <= L; ++l) lam[static_cast<std::size_t>(l)] = eigenvalue(l, alpha, a0);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * static_cast<std::size_t>(L) * static_cast<std::size_t>(L));
  for (int l = 0; l <= L; ++l) {
    for (int m = -l; m <= l; ++m) {
      sys.D(index(l, m)) = lam[static_cast<std::size_t>(l)];
      if (l < L) {
        // Upper triangle from d+, mirrored: d-(l+1, m) = d+(l, m).
        const double c = coupling_plus(l, m);
        trips.emplace_back(index(l, m), index(l + 1, m), c);
        trips.emplace_back(index(l + 1, m), index(l, m), c);
      }
    }
  }
  sys.A.setFromTriplets(trips.begin(), trips.end());
  sys.A.makeCompressed();
  return sys;
}

inline Eigen::VectorXcd initial_coefficients(int L, double xi) {
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(size(L));
  const double g = std::exp(-0.5 * xi * xi);
  u(index(0, 0)) = 2.0 * std::sqrt(std::numbers::pi) * g;
  if (L >= 1) u(index(1, 0)) = 2.0 * std::sqrt(std::numbers::pi / 3.0) * g;
  return u;
}

namespace detail {

inline void check_finite(const Eigen::VectorXcd& v) {
  if (!v.allFinite()) throw NumericalError("spectral evolution produced non-finite coefficients");
}

inline Eigen::VectorXcd gather(const Eigen::VectorXcd& u, int L, int m) {
  const int lo = std::abs(m);
  Eigen::VectorXcd b(L - lo + 1);
  for (int l = lo; l <= L; ++l) b(l - lo) = u(index(l, m));
  return b;
}

inline void scatter(Eigen::VectorXcd& u, int L, int m, const Eigen::VectorXcd& b) {
  const int lo = std::abs(m);
  for (int l = lo; l <= L; ++l) u(index(l, m)) = b(l - lo);
}

}  // namespace detail

/// exp((D - i xi A) t) u0, block by block in m (the operator does not mix different m).
inline Eigen::VectorXcd evolve(const SpectralSystem& sys, const Eigen::VectorXcd& u0, double t) {
  if (t < 0.0) throw DomainError("evolution time must be nonnegative");
  if (u0.size() != size(sys.L)) throw ConfigError("coefficient vector does not match the truncation");
  if (t == 0.0) return u0;
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(u0.size());
  for (int m = -sys.L; m <= sys.L; ++m) {
    const Eigen::VectorXcd b = detail::gather(u0, sys.L, m);
    if (b.isZero(0.0)) continue;
    const Eigen::MatrixXcd E = (sys.block(m) * cplx(t)).exp();
    detail::scatter(out, sys.L, m, E * b);
  }
  detail::check_finite(out);
  return out;
}

/// Integral over [0, T] of the evolved coefficients, from the exponential of [[M T, u0 T], [0, 0]].
inline Eigen::VectorXcd integrate_evolution(const SpectralSystem& sys, const Eigen::VectorXcd& u0, double T) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(u0.size());
  if (T <= 0.0) return out;
  for (int m = -sys.L; m <= sys.L; ++m) {
    const Eigen::VectorXcd b = detail::gather(u0, sys.L, m);
    if (b.isZero(0.0)) continue;
    const auto n = b.size();
    Eigen::MatrixXcd aug = Eigen::MatrixXcd::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = sys.block(m) * cplx(T);
    aug.topRightCorner(n, 1) = b * cplx(T);
    const Eigen::MatrixXcd E = aug.exp();
    detail::scatter(out, sys.L, m, E.topRightCorner(n, 1));
  }
  detail::check_finite(out);
  return out;
}

/// Orthonormal associated Legendre values N_l^m P_l^m(cos theta), Condon-Shortley phase, for
/// one m >= 0 and l = m .. L.
inline std::vector<double> normalized_legendre(int L, int m, double theta) {
  std::vector<double> p(static_cast<std::size_t>(L + 1), 0.0);
  if (m > L) return p;
  const double x = std::cos(theta);
  const double s = std::sin(theta);
  // P_m^m with normalization sqrt((2m+1)/(4 pi) / (2m)!) folded in step by step.
  double pmm = std::sqrt(1.0 / (4.0 * std::numbers::pi));
  for (int k = 1; k <= m; ++k) pmm *= -std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * s;
  p[static_cast<std::size_t>(m)] = pmm;
  if (m == L) return p;
  double pm1 = std::sqrt(2.0 * m + 3.0) * x * pmm;
  p[static_cast<std::size_t>(m + 1)] = pm1;
  for (int l = m + 2; l <= L; ++l) {
    const double dl = l;
    const double a = std::sqrt((4.0 * dl * dl - 1.0) / (dl * dl - m * m));
    const double b = std::sqrt(((dl - 1.0) * (dl - 1.0) - m * m) / (4.0 * (dl - 1.0) * (dl - 1.0) - 1.0));
    const double pl = a * (x * pm1 - b * pmm);
    p[static_cast<std::size_t>(l)] = pl;
    pmm = pm1;
    pm1 = pl;
  }
  return p;
}

/// Y_{l,m}(theta, phi) = N P_l^m(cos theta) e^{i m phi}, with Y_{l,-m} = (-1)^m conj(Y_{l,m}).
inline cplx spherical_harmonic(int l, int m, double theta, double phi) {
  if (std::abs(m) > l) throw DomainError("|m| must not exceed l");
  const int am = std::abs(m);
  const double p = normalized_legendre(l, am, theta)[static_cast<std::size_t>(l)];
  const cplx y = p * std::polar(1.0, am * phi);
  if (m >= 0) return y;
  return (am % 2 == 0 ? 1.0 : -1.0) * std::conj(y);
}

/// sum_{l,m} u_{l,m} Y_{l,m}(theta, phi).
inline cplx reconstruct(const Eigen::VectorXcd& u, int L, double theta, double phi) {
  cplx s = 0.0;
  for (int am = 0; am <= L; ++am) {
    const auto p = normalized_legendre(L, am, theta);
    const cplx e = std::polar(1.0, am * phi);
    const double sign = am % 2 == 0 ? 1.0 : -1.0;
    for (int l = am; l <= L; ++l) {
      const cplx y = p[static_cast<std::size_t>(l)] * e;
      s += u(index(l, am)) * y;
      if (am > 0) s += u(index(l, -am)) * sign * std::conj(y);
    }
  }
  return s;
}

/// Integral over the sphere: only the l = 0 term survives.
inline cplx u1_from(const Eigen::VectorXcd& u) { return std::sqrt(4.0 * std::numbers::pi) * u(index(0, 0)); }

/// sin(theta) times the phi integral at theta: only m = 0 terms survive.
inline cplx u2_from(const Eigen::VectorXcd& u, int L, double theta) {
  const auto p = normalized_legendre(L, 0, theta);
  cplx s = 0.0;
  for (int l = 0; l <= L; ++l) s += u(index(l, 0)) * p[static_cast<std::size_t>(l)];
  return 2.0 * std::numbers::pi * std::sin(theta) * s;
}

/// Average of u2 over [theta_lo, theta_hi], to set against a binned estimate.
inline cplx u2_cell_average(const Eigen::VectorXcd& u, int L, double theta_lo, double theta_hi) {
  const auto& rule = quad::gauss_legendre_64();
  const double half = 0.5 * (theta_hi - theta_lo);
  const double mid = 0.5 * (theta_hi + theta_lo);
  cplx s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * u2_from(u, L, mid + half * rule.nodes[i]);
  return 0.5 * s;
}

inline cplx observable_u1(double t, double xi, int L, double alpha, double a0) {
  const auto sys = assemble(L, xi, alpha, a0);
  return u1_from(evolve(sys, initial_coefficients(L, xi), t));
}

inline cplx observable_u2(double t, double xi, double theta, int L, double alpha, double a0) {
  const auto sys = assemble(L, xi, alpha, a0);
  return u2_from(evolve(sys, initial_coefficients(L, xi), t), L, theta);
}

/// u2 at t = 2 t_c and xi = 0.02.
inline cplx observable_u3(double theta, int L, double alpha, double a0) {
  return observable_u2(2.0 * characteristic_time(alpha, a0), 0.02, theta, L, alpha, a0);
}

struct DepthOptions {
  double xi_max = 8.0;
  // Spacing of the xi grid; 0 selects 2 pi / (grid length), so periodic images fall off the grid.
  double dxi = 0.0;
};

/// Cell averages over the x3 grid of the time integral over [0, T] of the angular and transverse
/// integral of the solution. Inverse Fourier synthesis by the trapezoid rule in xi, with the
/// cell average applied as a sinc factor.
inline std::vector<double> observable_u4(const Axis& grid, double T, int L, double alpha, double a0,
                                         DepthOptions opt = {}) {
  const double dxi = opt.dxi > 0.0 ? opt.dxi : 2.0 * std::numbers::pi / (grid.hi - grid.lo);
  const auto nq = static_cast<std::size_t>(std::ceil(opt.xi_max / dxi));
  const double w = grid.width();
  std::vector<cplx> U(nq + 1);
  for (std::size_t q = 0; q <= nq; ++q) {
    const double xi = dxi * static_cast<double>(q);
    const auto sys = assemble(L, xi, alpha, a0);
    U[q] = u1_from(integrate_evolution(sys, initial_coefficients(L, xi), T));
  }
  std::vector<double> out(grid.n, 0.0);
  for (std::size_t j = 0; j < grid.n; ++j) {
    const double c = grid.center(j);
    double s = 0.5 * U[0].real();
    for (std::size_t q = 1; q <= nq; ++q) {
      const double xi = dxi * static_cast<double>(q);
      const double arg = 0.5 * xi * w;
      const double sinc = std::sin(arg) / arg;
      const double weight = q == nq ? 0.5 : 1.0;
      s += weight * (U[q] * std::polar(1.0, xi * c)).real() * sinc;
    }
    // Conjugate symmetry U(-xi) = conj U(xi) folds the negative half of the grid.
    out[j] = s * dxi / std::numbers::pi;
  }
  return out;
}

}  // namespace fracrt::spectral
