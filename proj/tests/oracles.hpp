#pragma once

// Independent reference implementations used only by the tests. Everything in
// here favors obviousness over speed (dense scans, plain double loops) and
// shares no code with the library under test.

#include <cmath>
#include <cstdlib>
#include <vector>

#include <Eigen/Core>

namespace oracle {

// xorshift64* driven uniform source so tests never depend on stdlib
// distribution internals.
struct TestRng {
  unsigned long long state{0x9E3779B97F4A7C15ull};

  explicit TestRng(unsigned long long seed = 0x9E3779B97F4A7C15ull) : state(seed ? seed : 1) {}

  double uniform() {
    state ^= state >> 12;
    state ^= state << 25;
    state ^= state >> 27;
    return double((state * 0x2545F4914F6CDD1Dull) >> 11) / 9007199254740992.0;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

inline double prox_cubic_value(double z, double x, double lambda, double gamma) {
  return z * z * z - x * z * z + (gamma * gamma + lambda) * z - gamma * gamma * x;
}

// All real roots of the shrinkage cubic by dense sign-change scan + bisection.
inline std::vector<double> bisect_cubic_roots(double x, double lambda, double gamma, double lo,
                                              double hi, double step) {
  std::vector<double> roots;
  double a = lo;
  double fa = prox_cubic_value(a, x, lambda, gamma);
  while (a < hi) {
    const double b = std::min(a + step, hi);
    const double fb = prox_cubic_value(b, x, lambda, gamma);
    if (fa == 0.0) {
      if (roots.empty() || roots.back() != a) roots.push_back(a);
    } else if ((fa < 0.0) != (fb < 0.0)) {
      double l = a, r = b, fl = fa;
      for (int i = 0; i < 200 && r - l > 1e-15; ++i) {
        const double m = 0.5 * (l + r);
        const double fm = prox_cubic_value(m, x, lambda, gamma);
        if ((fm < 0.0) == (fl < 0.0)) {
          l = m;
          fl = fm;
        } else {
          r = m;
        }
      }
      roots.push_back(0.5 * (l + r));
    }
    a = b;
    fa = fb;
  }
  return roots;
}

inline double cauchy_prox_objective(double z, double x, double lambda, double gamma) {
  constexpr double pi = 3.14159265358979323846;
  return (z - x) * (z - x) - lambda * std::log(gamma / (pi * (gamma * gamma + z * z)));
}

template <typename F>
double golden_min(F f, double a, double b) {
  constexpr double invphi = 0.61803398874989485;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > 1e-11) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Global minimizer of the Cauchy proximal objective: coarse scan over
// [-|x|-1, |x|+1], golden-section refinement of every sampled local minimum
// plus a forced bracket around z = 0 (the well there is narrower than any
// sensible coarse step when gamma is small).
inline double prox_argmin_oracle(double x, double lambda, double gamma,
                                 double coarse_step = 1e-2) {
  const auto f = [&](double z) { return cauchy_prox_objective(z, x, lambda, gamma); };
  const double limit = std::abs(x) + 1.0;
  const int n = static_cast<int>(std::llround(2.0 * limit / coarse_step)) + 1;
  std::vector<double> zs(n), fs(n);
  for (int i = 0; i < n; ++i) {
    zs[i] = -limit + coarse_step * i;
    fs[i] = f(zs[i]);
  }
  std::vector<std::pair<double, double>> brackets;
  if (fs[0] <= fs[1]) brackets.emplace_back(zs[0], zs[1]);
  if (fs[n - 1] <= fs[n - 2]) brackets.emplace_back(zs[n - 2], zs[n - 1]);
  for (int i = 1; i + 1 < n; ++i)
    if (fs[i] <= fs[i - 1] && fs[i] <= fs[i + 1]) brackets.emplace_back(zs[i - 1], zs[i + 1]);
  brackets.emplace_back(-coarse_step, coarse_step);
  double best_z = 0.0;
  double best_f = f(0.0);
  for (const auto& [lo, hi] : brackets) {
    const double z = golden_min(f, lo, hi);
    const double fz = f(z);
    if (fz < best_f) {
      best_f = fz;
      best_z = z;
    }
  }
  return best_z;
}

// Dense variant matching the desk-scale example protocol exactly.
inline double prox_argmin_dense(double x, double lambda, double gamma, double lo, double hi,
                                double step) {
  const auto f = [&](double z) { return cauchy_prox_objective(z, x, lambda, gamma); };
  double best_z = lo;
  double best_f = f(lo);
  double z = lo;
  while (z < hi) {
    z = std::min(z + step, hi);
    const double fz = f(z);
    if (fz < best_f) {
      best_f = fz;
      best_z = z;
    }
  }
  return golden_min(f, best_z - step, best_z + step);
}

inline Eigen::VectorXd naive_matvec(const Eigen::MatrixXd& a, const Eigen::VectorXd& v) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out[i] += a(i, j) * v[j];
  return out;
}

inline Eigen::VectorXd naive_transpose_matvec(const Eigen::MatrixXd& a,
                                              const Eigen::VectorXd& u) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) out[j] += a(i, j) * u[i];
  return out;
}

// Plain-loop ISTA with a fixed threshold, as a reference for the solver.
inline Eigen::VectorXd naive_ista_soft(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                                       double eta, double threshold, int iterations) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(a.cols());
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd r = naive_matvec(a, x);
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] -= y[i];
    const Eigen::VectorXd g = naive_transpose_matvec(a, r);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      x[j] -= 2.0 * eta * g[j];
      x[j] = x[j] > threshold ? x[j] - threshold : (x[j] < -threshold ? x[j] + threshold : 0.0);
    }
  }
  return x;
}

// Central finite differences of L(x) = ||y - A x||^2.
inline Eigen::VectorXd fd_gradient(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& x, double h = 1e-6) {
  const auto loss = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd r = y - naive_matvec(a, v);
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) s += r[i] * r[i];
    return s;
  };
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    g[j] = (loss(xp) - loss(xm)) / (2.0 * h);
  }
  return g;
}

}  // namespace oracle
