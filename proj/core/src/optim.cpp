// SPDX-License-Identifier: Apache-2.0
#include "voxcap/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace voxcap {

namespace {

struct BudgetExceeded {};

// Counts evaluations, tracks the best point seen, and aborts the enclosing
// optimizer via exception once the budget is spent.
class Evaluator {
 public:
  Evaluator(const Objective& f, int max_evals) : f_(f), max_evals_(max_evals) {}

  double operator()(const std::vector<double>& x) {
    if (evals_ >= max_evals_) throw BudgetExceeded{};
    const double v = f_(x);
    ++evals_;
    if (!std::isfinite(v)) throw NumericalError("objective returned a non-finite value");
    if (best_x_.empty() || v < best_f_) {
      best_f_ = v;
      best_x_ = x;
    }
    return v;
  }

  OptimResult result() const { return {best_x_, best_f_, evals_}; }
  int evals() const { return evals_; }

 private:
  const Objective& f_;
  int max_evals_;
  int evals_ = 0;
  double best_f_ = 0.0;
  std::vector<double> best_x_;
};

double max_coord_spread(const std::vector<std::vector<double>>& xs, std::size_t best) {
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t d = 0; d < xs[best].size(); ++d) {
      s = std::max(s, std::abs(xs[i][d] - xs[best][d]));
    }
  }
  return s;
}

// Solves A x = b in place by Gaussian elimination with partial pivoting;
// false when A is numerically singular.
bool solve_linear(std::vector<std::vector<double>>& a, std::vector<double>& b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-14) return false;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double m = a[r][col] / a[col][col];
      if (m == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= m * a[col][c];
      b[r] -= m * b[col];
    }
  }
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < n; ++c) s -= a[r][c] * b[c];
    b[r] = s / a[r][r];
  }
  return true;
}

using Fn1d = std::function<double(double)>;

struct Bracket {
  double a, b, c, fa, fb, fc;
};

// Golden-ratio downhill expansion with parabolic trial steps.
Bracket bracket_minimum(const Fn1d& g, double a, double b) {
  constexpr double kGold = 1.618034;
  constexpr double kGrowLimit = 100.0;
  constexpr double kTiny = 1e-21;
  double fa = g(a), fb = g(b);
  if (fb > fa) {
    std::swap(a, b);
    std::swap(fa, fb);
  }
  double c = b + kGold * (b - a);
  double fc = g(c);
  while (fb > fc) {
    const double r = (b - a) * (fb - fc);
    const double q = (b - c) * (fb - fa);
    const double denom = 2.0 * (std::abs(q - r) > kTiny ? q - r : (q - r >= 0 ? kTiny : -kTiny));
    double u = b - ((b - c) * q - (b - a) * r) / denom;
    const double ulim = b + kGrowLimit * (c - b);
    double fu;
    if ((b - u) * (u - c) > 0.0) {
      fu = g(u);
      if (fu < fc) return {b, u, c, fb, fu, fc};
      if (fu > fb) return {a, b, u, fa, fb, fu};
      u = c + kGold * (c - b);
      fu = g(u);
    } else if ((c - u) * (u - ulim) > 0.0) {
      fu = g(u);
      if (fu < fc) {
        b = c; c = u; u = u + kGold * (u - c);
        fb = fc; fc = fu; fu = g(u);
      }
    } else if ((u - ulim) * (ulim - c) >= 0.0) {
      u = ulim;
      fu = g(u);
    } else {
      u = c + kGold * (c - b);
      fu = g(u);
    }
    a = b; b = c; c = u;
    fa = fb; fb = fc; fc = fu;
  }
  return {a, b, c, fa, fb, fc};
}

// Brent's parabolic-interpolation line minimum inside a bracket.
std::pair<double, double> brent_min(const Fn1d& g, const Bracket& br, double tol) {
  constexpr int kMaxIter = 120;
  constexpr double kCGold = 0.3819660;
  constexpr double kZeps = 1e-14;
  double a = std::min(br.a, br.c), b = std::max(br.a, br.c);
  double x = br.b, w = br.b, v = br.b;
  double fx = br.fb, fw = br.fb, fv = br.fb;
  double d = 0.0, e = 0.0;
  for (int it = 0; it < kMaxIter; ++it) {
    const double xm = 0.5 * (a + b);
    const double tol1 = tol * std::abs(x) + kZeps;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;
    bool golden = true;
    if (std::abs(e) > tol1) {
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = std::copysign(tol1, xm - x);
        golden = false;
      }
    }
    if (golden) {
      e = (x >= xm) ? a - x : b - x;
      d = kCGold * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + std::copysign(tol1, d);
    const double fu = g(u);
    if (fu <= fx) {
      if (u >= x) a = x; else b = x;
      v = w; w = x; x = u;
      fv = fw; fw = fx; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return {x, fx};
}

// Minimizes along x + t * dir; updates x and returns the achieved f.
double line_minimize(Evaluator& eval, std::vector<double>& x, const std::vector<double>& dir,
                     double init_step, double tol, double f_hint) {
  thread_local std::vector<double> probe;
  const Fn1d g = [&](double t) {
    probe = x;
    for (std::size_t d = 0; d < x.size(); ++d) probe[d] += t * dir[d];
    return eval(probe);
  };
  Bracket br = bracket_minimum(g, 0.0, init_step);
  auto [t, ft] = brent_min(g, br, tol);
  if (ft <= f_hint) {
    for (std::size_t d = 0; d < x.size(); ++d) x[d] += t * dir[d];
    return ft;
  }
  return f_hint;
}

}  // namespace

OptimResult nelder_mead(const Objective& f, std::vector<double> x0, const OptimConfig& cfg) {
  const std::size_t n = x0.size();
  if (n == 0) throw DegenerateInput("nelder_mead needs at least one dimension");
  Evaluator eval(f, cfg.max_evals);

  std::vector<std::vector<double>> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  try {
    for (std::size_t i = 1; i <= n; ++i) xs[i][i - 1] += cfg.init_step;
    for (std::size_t i = 0; i <= n; ++i) fs[i] = eval(xs[i]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    for (;;) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
      const std::size_t best = order[0], worst = order[n], second_worst = order[n - 1];

      if (max_coord_spread(xs, best) < cfg.x_tol) break;
      if (cfg.f_tol > 0.0 && fs[worst] - fs[best] <
                                 cfg.f_tol * (std::abs(fs[best]) + std::abs(fs[worst]) + 1e-300)) {
        break;
      }

      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t i = 0; i <= n; ++i) {
        if (i == worst) continue;
        for (std::size_t d = 0; d < n; ++d) centroid[d] += xs[i][d];
      }
      for (double& c : centroid) c /= static_cast<double>(n);

      for (std::size_t d = 0; d < n; ++d) xr[d] = centroid[d] + (centroid[d] - xs[worst][d]);
      const double fr = eval(xr);

      if (fr < fs[best]) {
        for (std::size_t d = 0; d < n; ++d) xe[d] = centroid[d] + 2.0 * (centroid[d] - xs[worst][d]);
        const double fe = eval(xe);
        if (fe < fr) {
          xs[worst] = xe; fs[worst] = fe;
        } else {
          xs[worst] = xr; fs[worst] = fr;
        }
      } else if (fr < fs[second_worst]) {
        xs[worst] = xr; fs[worst] = fr;
      } else {
        const bool outside = fr < fs[worst];
        const std::vector<double>& base = outside ? xr : xs[worst];
        for (std::size_t d = 0; d < n; ++d) xc[d] = centroid[d] + 0.5 * (base[d] - centroid[d]);
        const double fc = eval(xc);
        if (fc < std::min(fr, fs[worst])) {
          xs[worst] = xc; fs[worst] = fc;
        } else {
          for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t d = 0; d < n; ++d) {
              xs[i][d] = xs[best][d] + 0.5 * (xs[i][d] - xs[best][d]);
            }
            fs[i] = eval(xs[i]);
          }
        }
      }
    }
  } catch (const BudgetExceeded&) {
  }
  return eval.result();
}

OptimResult powell(const Objective& f, std::vector<double> x0, const OptimConfig& cfg) {
  const std::size_t n = x0.size();
  if (n == 0) throw DegenerateInput("powell needs at least one dimension");
  Evaluator eval(f, cfg.max_evals);
  const double line_tol = 1e-10;

  try {
    std::vector<std::vector<double>> dirs(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) dirs[i][i] = 1.0;

    std::vector<double> x = x0;
    double fx = eval(x);
    for (;;) {
      const std::vector<double> x_start = x;
      const double f_start = fx;
      double biggest_drop = 0.0;
      std::size_t drop_dir = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double f_before = fx;
        fx = line_minimize(eval, x, dirs[i], cfg.init_step, line_tol, fx);
        if (f_before - fx > biggest_drop) {
          biggest_drop = f_before - fx;
          drop_dir = i;
        }
      }

      const double f_drop_total = f_start - fx;
      if (2.0 * f_drop_total <=
          std::max(cfg.f_tol, 1e-14) * (std::abs(f_start) + std::abs(fx)) + 1e-300) {
        break;
      }
      double step_norm = 0.0;
      for (std::size_t d = 0; d < n; ++d) step_norm += (x[d] - x_start[d]) * (x[d] - x_start[d]);
      if (std::sqrt(step_norm) < cfg.x_tol) break;

      // Extrapolated point test before replacing the largest-decrease
      // direction with the sweep displacement.
      std::vector<double> x_ext(n), new_dir(n);
      for (std::size_t d = 0; d < n; ++d) {
        x_ext[d] = 2.0 * x[d] - x_start[d];
        new_dir[d] = x[d] - x_start[d];
      }
      const double f_ext = eval(x_ext);
      if (f_ext < f_start) {
        const double t = 2.0 * (f_start - 2.0 * fx + f_ext) *
                             (f_start - fx - biggest_drop) * (f_start - fx - biggest_drop) -
                         biggest_drop * (f_start - f_ext) * (f_start - f_ext);
        if (t < 0.0) {
          fx = line_minimize(eval, x, new_dir, cfg.init_step, line_tol, fx);
          dirs[drop_dir] = dirs[n - 1];
          dirs[n - 1] = new_dir;
        }
      }
    }
  } catch (const BudgetExceeded&) {
  }
  return eval.result();
}

OptimResult cobyla_like(const Objective& f, std::vector<double> x0, const OptimConfig& cfg) {
  const std::size_t n = x0.size();
  if (n == 0) throw DegenerateInput("cobyla_like needs at least one dimension");
  Evaluator eval(f, cfg.max_evals);

  try {
    double radius = cfg.init_step;
    std::vector<std::vector<double>> xs(n + 1, x0);
    std::vector<double> fs(n + 1);
    auto rebuild = [&](const std::vector<double>& center, double fc, double r) {
      xs.assign(n + 1, center);
      fs.assign(n + 1, fc);
      for (std::size_t i = 1; i <= n; ++i) {
        xs[i][i - 1] += r;
        fs[i] = eval(xs[i]);
      }
    };
    fs[0] = eval(xs[0]);
    for (std::size_t i = 1; i <= n; ++i) {
      xs[i][i - 1] += radius;
      fs[i] = eval(xs[i]);
    }

    while (radius >= cfg.x_tol) {
      std::size_t best = 0, worst = 0;
      for (std::size_t i = 1; i <= n; ++i) {
        if (fs[i] < fs[best]) best = i;
        if (fs[i] > fs[worst]) worst = i;
      }
      if (cfg.f_tol > 0.0 && fs[worst] - fs[best] <
                                 cfg.f_tol * (std::abs(fs[best]) + std::abs(fs[worst]) + 1e-300)) {
        break;
      }

      // Interpolating linear model around the best point.
      std::vector<std::vector<double>> a;
      std::vector<double> b;
      a.reserve(n);
      b.reserve(n);
      for (std::size_t i = 0; i <= n; ++i) {
        if (i == best) continue;
        std::vector<double> row(n);
        for (std::size_t d = 0; d < n; ++d) row[d] = xs[i][d] - xs[best][d];
        a.push_back(std::move(row));
        b.push_back(fs[i] - fs[best]);
      }
      std::vector<double> g = b;
      const bool ok = solve_linear(a, g);
      double gnorm = 0.0;
      for (double v : g) gnorm += v * v;
      gnorm = std::sqrt(gnorm);
      if (!ok || gnorm < 1e-14) {
        radius *= 0.5;
        if (radius < cfg.x_tol) break;
        rebuild(xs[best], fs[best], radius);
        continue;
      }

      std::vector<double> cand(n);
      for (std::size_t d = 0; d < n; ++d) cand[d] = xs[best][d] - radius * g[d] / gnorm;
      const double fc = eval(cand);
      const double predicted = radius * gnorm;
      const double actual = fs[best] - fc;
      const double ratio = actual / predicted;

      if (fc < fs[worst]) {
        xs[worst] = cand;
        fs[worst] = fc;
      }
      if (ratio >= 0.7) {
        radius = std::min(radius * 1.6, cfg.init_step * 8.0);
      } else if (ratio <= 0.1) {
        radius *= 0.5;
        if (radius < cfg.x_tol) break;
        // Keep the simplex scale commensurate with the trust radius.
        if (max_coord_spread(xs, best) > 4.0 * radius) rebuild(xs[best], fs[best], radius);
      }
    }
  } catch (const BudgetExceeded&) {
  }
  return eval.result();
}

}  // namespace voxcap
