#pragma once

#include <array>
#include <cmath>
#include <limits>

#include "dlsc/core.hpp"

namespace dlsc::prox {

/// argmin_a 0.5 (a - z)^2 + s |a|^p, for s >= 0 and p > 0.
///
/// p = 1 and p = 2 are closed form. Otherwise the minimizer is either 0 or
/// the stationary point of h(a) = 0.5 (a - |z|)^2 + s a^p on the interval
/// where h is convex; the latter is found by Newton steps kept inside a
/// shrinking bisection bracket. For p < 1 the candidate is compared with 0
/// and ties go to 0.
inline double scalar(double z, double s, double p) {
  if (s <= 0.0 || z == 0.0) return z;
  const double az = std::abs(z);
  const double sign = z < 0.0 ? -1.0 : 1.0;
  if (p == 1.0) return az > s ? sign * (az - s) : 0.0;
  if (p == 2.0) return z / (1.0 + 2.0 * s);

  auto dh = [&](double a) { return a - az + s * p * std::pow(a, p - 1.0); };
  auto d2h = [&](double a) { return 1.0 + s * p * (p - 1.0) * std::pow(a, p - 2.0); };

  double lo = 0.0;
  double hi = az;
  if (p < 1.0) {
    // h is concave below a_c and convex above it.
    const double a_c = std::pow(s * p * (1.0 - p), 1.0 / (2.0 - p));
    if (a_c >= az) return 0.0;
    if (dh(a_c) >= 0.0) return 0.0;
    lo = a_c;
  }
  // dh(lo) < 0 < dh(hi) (for p > 1, dh(0+) = -|z|).
  // dh is convex on [lo, hi] for p < 1 and p > 2, so Newton from the right
  // end approaches the root monotonically.
  double a = (p < 1.0 || p > 2.0) ? hi : 0.5 * (lo + hi);
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  for (int it = 0; it < 200; ++it) {
    const double g = dh(a);
    if (g == 0.0) break;
    if (g < 0.0) lo = a; else hi = a;
    const double h2 = d2h(a);
    if (h2 > 0.0 && std::abs(g / h2) <= 4.0 * kEps * a) break;
    double next = (h2 > 0.0) ? a - g / h2 : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= 4.0 * kEps * hi) {
      a = next;
      break;
    }
    a = next;
  }
  if (p < 1.0) {
    const double h_a = 0.5 * (a - az) * (a - az) + s * std::pow(a, p);
    const double h_0 = 0.5 * az * az;
    if (!(h_a < h_0)) return 0.0;
  }
  return sign * a;
}

/// Coordinatewise scalar prox with common weight s.
inline Vector separable(const Eigen::Ref<const Vector>& z, double s, double p) {
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = scalar(z[i], s, p);
  return out;
}

/// Exact coordinatewise descent on 0.5 ||a - z||^2 + c (sum |a_i|^p)^r: each
/// coordinate is re-minimized over [0, |z_i|] (sign of z_i) by a dense scan
/// plus golden-section refinement, with 0 and the current value as
/// candidates. Sweeps stop when no coordinate improves.
inline void coordinate_polish(const Eigen::Ref<const Vector>& z, double c, double p, double r,
                              Vector& a) {
  auto total = [&](const Vector& v) {
    const double s = lp_power_sum(v, p);
    return 0.5 * (v - z).squaredNorm() + (s > 0.0 ? c * std::pow(s, r) : 0.0);
  };
  double current = total(a);
  for (int sweep = 0; sweep < 200; ++sweep) {
    bool improved = false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double az = std::abs(z[i]);
      if (az == 0.0) continue;
      const double s_rest = std::max(lp_power_sum(a, p) - std::pow(std::abs(a[i]), p), 0.0);
      auto h = [&](double v) {
        const double s = s_rest + (v > 0.0 ? std::pow(v, p) : 0.0);
        return 0.5 * (v - az) * (v - az) + (s > 0.0 ? c * std::pow(s, r) : 0.0);
      };
      double best_v = std::abs(a[i]);
      double best_h = h(best_v);
      if (h(0.0) < best_h) { best_v = 0.0; best_h = h(0.0); }
      constexpr int kScan = 64;
      const double step = az / kScan;
      for (int k = 1; k <= kScan; ++k) {
        const double v = k * step;
        if (h(v) < best_h) { best_h = h(v); best_v = v; }
      }
      if (best_v > 0.0) {
        double lo = std::max(0.0, best_v - step), hi = std::min(az, best_v + step);
        constexpr double kInvPhi = 0.6180339887498949;
        for (int it = 0; it < 100 && hi - lo > 1e-16 * az; ++it) {
          const double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
          if (h(x1) <= h(x2)) hi = x2; else lo = x1;
        }
        const double v = 0.5 * (lo + hi);
        if (h(v) < best_h) { best_h = h(v); best_v = v; }
      }
      const double updated = z[i] < 0.0 ? -best_v : best_v;
      if (updated != a[i]) {
        const double old = a[i];
        a[i] = updated;
        const double next = total(a);
        if (next < current) {
          improved = improved || current - next > 1e-15 * std::max(1.0, current);
          current = next;
        } else {
          a[i] = old;
        }
      }
    }
    if (!improved) break;
  }
}

namespace detail {

/// Convex case (p, q >= 1): a(mu) is the prox exactly when mu solves
/// phi(mu) = mu - c r S(a(mu))^{r-1} = 0. phi < 0 below the root and > 0
/// above it; with no root the prox is 0. Bracketing in log(mu), then
/// Illinois regula falsi.
template <class Value>
Vector convex_multiplier_root(const Eigen::Ref<const Vector>& z, double c, double p, double r,
                              double log_ref, const Value& value) {
  auto at = [&](double log_mu) { return separable(z, std::exp(log_mu), p); };
  auto phi = [&](double log_mu) {
    const double s = lp_power_sum(at(log_mu), p);
    const double pull = s > 0.0 ? c * r * std::pow(s, r - 1.0)
                                : (r > 1.0 ? 0.0 : std::numeric_limits<double>::infinity());
    return std::exp(log_mu) - pull;
  };
  constexpr double kDecade = 2.302585092994046;
  double lo = log_ref, hi = log_ref;
  double f_lo = phi(lo), f_hi = f_lo;
  bool bracketed = false;
  if (f_lo < 0.0) {
    for (int k = 0; k < 60 && !bracketed; ++k) {
      lo = hi; f_lo = f_hi;
      hi += kDecade;
      f_hi = phi(hi);
      bracketed = f_hi >= 0.0;
    }
  } else {
    for (int k = 0; k < 60 && !bracketed; ++k) {
      hi = lo; f_hi = f_lo;
      lo -= kDecade;
      f_lo = phi(lo);
      bracketed = f_lo < 0.0;
    }
  }
  Vector zero = Vector::Zero(z.size());
  if (!bracketed) {
    Vector a = at(f_lo < 0.0 ? hi : lo);
    return value(a) < value(zero) ? a : zero;
  }
  if (f_hi == 0.0) lo = hi;
  int side = 0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    double mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    const double f_mid = phi(mid);
    if (f_mid == 0.0) { lo = hi = mid; break; }
    if (f_mid < 0.0) {
      lo = mid; f_lo = f_mid;
      if (side == -1) f_hi *= 0.5;
      side = -1;
    } else {
      hi = mid; f_hi = f_mid;
      if (side == 1) f_lo *= 0.5;
      side = 1;
    }
  }
  Vector a_lo = at(lo), a_hi = at(hi);
  Vector best = value(a_lo) <= value(a_hi) ? std::move(a_lo) : std::move(a_hi);
  return value(best) < value(zero) ? best : zero;
}

}  // namespace detail

/// argmin_a 0.5 ||a - z||^2 + t * g(a) for the penalty g = ||a / lambda||_p^q.
///
/// Separable penalties (q == p) reduce to scalar proxes. Otherwise, with
/// c = t lambda^-q and r = q/p, the routine searches the one-parameter family
/// a(mu) = separable(z, mu, p) for the best value of the true prox objective:
/// a log-spaced scan over twenty decades around the reference weight, then
/// golden-section refinement of log(mu) between the neighbours of the best
/// scan point. a = 0 is always a candidate. Convex penalties skip the scan
/// and solve the multiplier equation directly.
///
/// The family contains a global minimizer when r <= 1 (write S^r as an
/// infimum of affine functions of S and swap the two minimizations) and when
/// p >= 1 (the stationarity condition of each coordinate has one root). For
/// p < 1 with r > 1 it need not, and the result is polished by exact
/// coordinatewise descent.
inline Vector penalty_prox(const Eigen::Ref<const Vector>& z, double t, const Penalty& pen) {
  const double p = pen.p();
  if (pen.separable()) return separable(z, t / std::pow(pen.lambda(), p), p);

  const double c = t / std::pow(pen.lambda(), pen.q());
  const double r = pen.q() / p;
  auto value = [&](const Vector& a) {
    const double s = lp_power_sum(a, p);
    return 0.5 * (a - z).squaredNorm() + (s > 0.0 ? c * std::pow(s, r) : 0.0);
  };

  Vector best = Vector::Zero(z.size());
  double best_val = value(best);
  const double sz = lp_power_sum(z, p);
  if (sz == 0.0) return best;

  const double mu_ref = c * r * std::pow(sz, r - 1.0);
  const double log_ref = std::log(mu_ref);
  if (pen.convex()) return detail::convex_multiplier_root(z, c, p, r, log_ref, value);
  constexpr int kScan = 121;
  constexpr double kHalfSpan = 10.0 * 2.302585092994046;  // ten decades each side
  const double step = 2.0 * kHalfSpan / (kScan - 1);

  auto at = [&](double log_mu) { return separable(z, std::exp(log_mu), p); };

  int best_k = -1;
  for (int k = 0; k < kScan; ++k) {
    Vector a = at(log_ref - kHalfSpan + k * step);
    const double v = value(a);
    if (v < best_val) {
      best_val = v;
      best = std::move(a);
      best_k = k;
    }
  }
  if (best_k < 0) return best;

  // Golden-section on log(mu) over the bracket around the best scan point.
  double lo = log_ref - kHalfSpan + (best_k - 1) * step;
  double hi = log_ref - kHalfSpan + (best_k + 1) * step;
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  Vector a1 = at(x1), a2 = at(x2);
  double f1 = value(a1), f2 = value(a2);
  for (int it = 0; it < 80 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1; a2 = std::move(a1); f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      a1 = at(x1); f1 = value(a1);
    } else {
      lo = x1;
      x1 = x2; a1 = std::move(a2); f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      a2 = at(x2); f2 = value(a2);
    }
  }
  if (f1 < best_val) { best_val = f1; best = std::move(a1); }
  if (f2 < best_val) { best_val = f2; best = std::move(a2); }
  if (p < 1.0 && r > 1.0) coordinate_polish(z, c, p, r, best);
  return best;
}

}  // namespace dlsc::prox
