#include "isaclab/optimizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

namespace isaclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_classes(std::span<const ClassSpec> classes) {
  if (classes.empty()) throw Error("optimizer: empty class list");
  for (const auto& c : classes) {
    if (!(c.moments.mu4 >= 1.0 - 1e-12))
      throw Error("optimizer: class '" + c.id + "' has mu4 below 1");
    if (!(c.moments.nu_minus2 >= 1.0 - 1e-12))
      throw Error("optimizer: class '" + c.id + "' has nu below 1");
    if (c.moments.rate_bits <= 0)
      throw Error("optimizer: class '" + c.id + "' has nonpositive rate");
    if (c.p_min < 0.0 || c.gamma_min < 0.0)
      throw Error("optimizer: class '" + c.id + "' has a negative power floor");
  }
}

// Water-level solve of min sum cost_n(theta_n) s.t. sum theta = budget,
// lo <= theta <= hi, where the unconstrained stationary point is
// theta_n = level * slope_n. Covers both surrogates: MF uses
// slope = 1/(2 a_n), RF uses slope = sqrt(nu_n). Bisection bracket, then an
// active-set polish makes the budget exact.
bool level_solve(std::span<const double> slope, std::span<const double> lo,
                 std::span<const double> hi, double budget,
                 std::vector<double>& theta) {
  const std::size_t n = slope.size();
  double sum_lo = 0.0, sum_hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum_lo += lo[i];
    sum_hi += hi[i];
  }
  const double slack = 1e-9 * (1.0 + std::fabs(budget));
  if (budget < sum_lo - slack || budget > sum_hi + slack) return false;

  theta.assign(n, 0.0);
  auto fill = [&](double level) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      theta[i] = std::clamp(level * slope[i], lo[i], hi[i]);
      s += theta[i];
    }
    return s;
  };

  double level_hi = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    if (slope[i] > 0.0) level_hi = std::max(level_hi, hi[i] / slope[i]);
  level_hi *= 1.0 + 1e-6;
  double a = 0.0, b = level_hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (fill(mid) < budget)
      a = mid;
    else
      b = mid;
  }
  double level = 0.5 * (a + b);
  fill(level);

  for (int pass = 0; pass < 16; ++pass) {
    double fixed = 0.0, free_slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double stat = level * slope[i];
      if (stat <= lo[i])
        fixed += lo[i];
      else if (stat >= hi[i])
        fixed += hi[i];
      else
        free_slope += slope[i];
    }
    if (free_slope <= 0.0) break;
    const double next = (budget - fixed) / free_slope;
    if (std::fabs(next - level) <= 1e-15 * (1.0 + std::fabs(level))) {
      level = next;
      break;
    }
    level = next;
  }
  fill(level);
  return true;
}

double mixture_cost(Chain chain, std::span<const double> coeff,
                    std::span<const double> eta, std::span<const double> theta) {
  double s = 0.0;
  for (std::size_t j = 0; j < eta.size(); ++j) {
    if (eta[j] <= 1e-15) continue;
    if (chain == Chain::MF)
      s += coeff[j] * theta[j] * theta[j] / eta[j];
    else
      s += coeff[j] * eta[j] * eta[j] / theta[j];
  }
  return s;
}

// Inner power-share solve for a fixed mixture eta. coeff holds c_j (MF) or
// nu_j (RF). Returns +inf when the floors are incompatible with the budget.
double inner_theta_solve(Chain chain, std::span<const double> coeff,
                         std::span<const double> eta,
                         std::span<const double> p_min, double p_max,
                         double p_ave, std::vector<double>& theta) {
  const std::size_t j_count = eta.size();
  std::vector<double> slope(j_count, 0.0), lo(j_count, 0.0), hi(j_count, 0.0);
  for (std::size_t j = 0; j < j_count; ++j) {
    if (eta[j] <= 1e-15) continue;
    lo[j] = eta[j] * p_min[j];
    hi[j] = eta[j] * p_max;
    slope[j] = chain == Chain::MF ? eta[j] / (2.0 * coeff[j])
                                  : eta[j] * std::sqrt(coeff[j]);
  }
  if (!level_solve(slope, lo, hi, p_ave, theta)) return kInf;
  return mixture_cost(chain, coeff, eta, theta);
}

template <class F>
double golden_min(F&& f, double a, double b, int iters, double& x_min) {
  if (b <= a) {
    x_min = a;
    return f(a);
  }
  constexpr double invphi = 0.6180339887498949;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc <= fd) {
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
  x_min = fc <= fd ? c : d;
  return std::min(fc, fd);
}

struct FlatCandidate {
  std::vector<double> eta;
  std::vector<double> theta;
  double objective = kInf;
  int support = 0;
};

}  // namespace

void SurrogateContext::validate() const {
  if (n < 2) throw Error("surrogate context: need at least 2 subcarriers");
  if (m < 1) throw Error("surrogate context: integration count must be positive");
  if (!(sigma_q_sq > 0.0)) throw Error("surrogate context: focal power must be positive");
  if (!(clutter >= 0.0)) throw Error("surrogate context: negative clutter power");
  if (!(noise_var >= 0.0)) throw Error("surrogate context: negative noise power");
}

ClassSpec make_class(const ConstellationSpec& c, double ber_th, double gain_sq,
                     double noise_var) {
  ClassSpec cls;
  cls.id = c.id;
  cls.moments = moments(c);
  cls.gamma_min = min_snr_for_ber(c, ber_th);
  cls.p_min = min_power(c, gain_sq, noise_var, ber_th);
  return cls;
}

double mf_cost_coeff(const Moments& m, const SurrogateContext& ctx) {
  ctx.validate();
  if (!(ctx.clutter > 0.0))
    throw Error("mf_cost_coeff: matched-filter surrogate needs positive clutter");
  const double n = static_cast<double>(ctx.n);
  return ctx.clutter * ((m.mu4 - 1.0) / ctx.m + n / (n - 1.0));
}

double mf_mixture_coeff(const Moments& m, const SurrogateContext& ctx) {
  return static_cast<double>(ctx.n) * mf_cost_coeff(m, ctx);
}

PowerAllocation mf_power_rule(std::span<const double> mu4, int m, double p_ave) {
  const std::size_t n = mu4.size();
  if (n < 2) throw Error("mf_power_rule: need at least 2 subcarriers");
  if (m < 1) throw Error("mf_power_rule: integration count must be positive");
  if (!(p_ave > 0.0)) throw Error("mf_power_rule: average power must be positive");
  const double nd = static_cast<double>(n);
  std::vector<double> b(n);
  double inv_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(mu4[i] >= 1.0 - 1e-12)) throw Error("mf_power_rule: mu4 below 1");
    b[i] = (mu4[i] - 1.0) / m + nd / (nd - 1.0);
    inv_sum += 1.0 / b[i];
  }
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = nd * p_ave / (b[i] * inv_sum);
  return make_power_allocation(std::move(p));
}

PowerAllocation rf_power_rule(std::span<const double> nu_minus2, double p_ave) {
  const std::size_t n = nu_minus2.size();
  if (n < 2) throw Error("rf_power_rule: need at least 2 subcarriers");
  if (!(p_ave > 0.0)) throw Error("rf_power_rule: average power must be positive");
  std::vector<double> root(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(nu_minus2[i] >= 1.0 - 1e-12)) throw Error("rf_power_rule: nu below 1");
    root[i] = std::sqrt(nu_minus2[i]);
    sum += root[i];
  }
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i)
    p[i] = static_cast<double>(n) * p_ave * root[i] / sum;
  return make_power_allocation(std::move(p));
}

int support_size(const MixturePlan& plan, double tol) {
  int s = 0;
  for (double e : plan.eta)
    if (e > tol) ++s;
  return s;
}

MixturePlan flat_fading_solve(Chain chain, std::span<const ClassSpec> classes,
                              double r_min, double p_ave,
                              const SurrogateContext& ctx, double p_max) {
  ctx.validate();
  check_classes(classes);
  if (!(p_ave > 0.0)) throw Error("flat_fading_solve: average power must be positive");
  if (p_max <= 0.0) p_max = 1e3 * p_ave;
  if (p_max < p_ave)
    throw Error("flat_fading_solve: power cap below the average budget");
  const std::size_t j_count = classes.size();

  std::vector<double> coeff(j_count), rate(j_count), p_min(j_count);
  double max_rate = 0.0;
  for (std::size_t j = 0; j < j_count; ++j) {
    coeff[j] = chain == Chain::MF ? mf_mixture_coeff(classes[j].moments, ctx)
                                  : classes[j].moments.nu_minus2;
    rate[j] = static_cast<double>(classes[j].moments.rate_bits);
    p_min[j] = classes[j].p_min;
    max_rate = std::max(max_rate, rate[j]);
  }
  if (max_rate < r_min - 1e-9)
    throw InfeasibleError("flat_fading_solve: infeasible, rate target exceeds every class rate");

  FlatCandidate best;
  std::vector<double> eta(j_count, 0.0), theta;

  auto consider = [&](int support) {
    const double obj = inner_theta_solve(chain, coeff, eta, p_min, p_max, p_ave, theta);
    if (obj >= kInf) return;
    double r = 0.0;
    for (std::size_t j = 0; j < j_count; ++j) r += eta[j] * rate[j];
    if (r < r_min - 1e-9) return;
    const double margin =
        best.objective < kInf ? 1e-12 * (1.0 + std::fabs(best.objective)) : 0.0;
    if (obj < best.objective - margin) {
      best.eta = eta;
      best.theta = theta;
      best.objective = obj;
      best.support = support;
    }
  };

  auto eval_eta = [&](std::span<const double> cand_eta) {
    std::vector<double> th;
    double lo_sum = 0.0, r = 0.0;
    for (std::size_t j = 0; j < j_count; ++j) {
      lo_sum += cand_eta[j] * p_min[j];
      r += cand_eta[j] * rate[j];
    }
    if (lo_sum > p_ave + 1e-12 || r < r_min - 1e-9) return kInf;
    return inner_theta_solve(chain, coeff, cand_eta, p_min, p_max, p_ave, th);
  };

  // Size 1.
  for (std::size_t j = 0; j < j_count; ++j) {
    if (rate[j] < r_min - 1e-9) continue;
    if (p_min[j] > p_ave + 1e-12) continue;
    std::fill(eta.begin(), eta.end(), 0.0);
    eta[j] = 1.0;
    consider(1);
  }

  // Size 2: the inner optimum is convex in the split, so a golden section
  // over the feasible interval finds it.
  for (std::size_t a = 0; a < j_count; ++a) {
    for (std::size_t b = a + 1; b < j_count; ++b) {
      double t_lo = 0.0, t_hi = 1.0;
      // rate: t R_a + (1-t) R_b >= r_min
      const double dr = rate[a] - rate[b];
      const double need = r_min - rate[b];
      if (std::fabs(dr) < 1e-15) {
        if (rate[a] < r_min - 1e-9) continue;
      } else if (dr > 0.0) {
        t_lo = std::max(t_lo, need / dr);
      } else {
        t_hi = std::min(t_hi, need / dr);
      }
      // floors: t p_min_a + (1-t) p_min_b <= p_ave
      const double dp = p_min[a] - p_min[b];
      const double room = p_ave - p_min[b];
      if (std::fabs(dp) < 1e-15) {
        if (p_min[a] > p_ave + 1e-12) continue;
      } else if (dp > 0.0) {
        t_hi = std::min(t_hi, room / dp);
      } else {
        t_lo = std::max(t_lo, room / dp);
      }
      if (t_lo > t_hi + 1e-12) continue;
      t_lo = std::clamp(t_lo, 0.0, 1.0);
      t_hi = std::clamp(t_hi, 0.0, 1.0);
      auto value = [&](double t) {
        std::vector<double> e(j_count, 0.0);
        e[a] = t;
        e[b] = 1.0 - t;
        return eval_eta(e);
      };
      double t_star;
      golden_min(value, t_lo, t_hi, 160, t_star);
      for (double t : {t_star, t_lo, t_hi}) {
        std::fill(eta.begin(), eta.end(), 0.0);
        eta[a] = t;
        eta[b] = 1.0 - t;
        consider(t <= 1e-15 || t >= 1.0 - 1e-15 ? 1 : 2);
      }
    }
  }

  // Size 3: a third class only helps on the rate-equality segment (off it a
  // feasible direction with two active constraints strictly improves any
  // proper 3-point), so search that segment alone.
  for (std::size_t a = 0; a + 2 < j_count + 0; ++a) {
    for (std::size_t b = a + 1; b < j_count; ++b) {
      for (std::size_t c = b + 1; c < j_count; ++c) {
        const std::array<std::size_t, 3> idx = {a, b, c};
        const std::array<double, 3> r3 = {rate[a], rate[b], rate[c]};
        // direction in the simplex plane that keeps the mean rate fixed
        const std::array<double, 3> dir = {r3[1] - r3[2], r3[2] - r3[0],
                                           r3[0] - r3[1]};
        if (std::fabs(dir[0]) + std::fabs(dir[1]) + std::fabs(dir[2]) < 1e-12)
          continue;
        // segment endpoints: rate-equality points on the triangle's edges
        std::vector<std::array<double, 3>> ends;
        for (int u = 0; u < 3; ++u) {
          for (int v = u + 1; v < 3; ++v) {
            const double du = r3[static_cast<std::size_t>(u)] -
                              r3[static_cast<std::size_t>(v)];
            if (std::fabs(du) < 1e-15) continue;
            const double x =
                (r_min - r3[static_cast<std::size_t>(v)]) / du;
            if (x < -1e-12 || x > 1.0 + 1e-12) continue;
            std::array<double, 3> pt = {0.0, 0.0, 0.0};
            pt[static_cast<std::size_t>(u)] = std::clamp(x, 0.0, 1.0);
            pt[static_cast<std::size_t>(v)] =
                1.0 - pt[static_cast<std::size_t>(u)];
            ends.push_back(pt);
          }
        }
        if (ends.size() < 2) continue;
        // extreme pair along the direction
        auto proj = [&](const std::array<double, 3>& pt) {
          return pt[0] * dir[0] + pt[1] * dir[1] + pt[2] * dir[2];
        };
        std::size_t lo_i = 0, hi_i = 0;
        for (std::size_t i = 1; i < ends.size(); ++i) {
          if (proj(ends[i]) < proj(ends[lo_i])) lo_i = i;
          if (proj(ends[i]) > proj(ends[hi_i])) hi_i = i;
        }
        const auto& p0 = ends[lo_i];
        const auto& p1 = ends[hi_i];
        auto value = [&](double s) {
          std::vector<double> e(j_count, 0.0);
          for (int k = 0; k < 3; ++k)
            e[idx[static_cast<std::size_t>(k)]] =
                std::max(0.0, (1.0 - s) * p0[static_cast<std::size_t>(k)] +
                                  s * p1[static_cast<std::size_t>(k)]);
          return eval_eta(e);
        };
        double s_star;
        golden_min(value, 0.0, 1.0, 160, s_star);
        std::fill(eta.begin(), eta.end(), 0.0);
        int nz = 0;
        for (int k = 0; k < 3; ++k) {
          const double e = std::max(0.0, (1.0 - s_star) * p0[static_cast<std::size_t>(k)] +
                                             s_star * p1[static_cast<std::size_t>(k)]);
          eta[idx[static_cast<std::size_t>(k)]] = e;
          if (e > 1e-12) ++nz;
        }
        // renormalize drift from the clamp
        double se = std::accumulate(eta.begin(), eta.end(), 0.0);
        if (se > 0.0)
          for (auto& e : eta) e /= se;
        consider(nz);
      }
    }
  }

  if (!(best.objective < kInf))
    throw InfeasibleError("flat_fading_solve: infeasible, power floors exceed the budget");

  MixturePlan plan;
  plan.eta = std::move(best.eta);
  plan.theta = std::move(best.theta);
  plan.p_per_class.assign(j_count, 0.0);
  for (std::size_t j = 0; j < j_count; ++j)
    if (plan.eta[j] > 1e-12) plan.p_per_class[j] = plan.theta[j] / plan.eta[j];
  plan.objective = best.objective;
  plan.r_min = r_min;
  plan.p_ave = p_ave;
  return plan;
}

double reduced_cost_argmin(double a_j, double p_min_nj, double p_max, double psi) {
  if (!(a_j > 0.0)) throw Error("reduced_cost: coefficient must be positive");
  if (p_min_nj < 0.0 || p_min_nj > p_max)
    throw Error("reduced_cost: empty power box");
  return std::clamp(psi / (2.0 * a_j), p_min_nj, p_max);
}

double reduced_cost_phi(double a_j, double p_min_nj, double p_max, double psi) {
  const double k = reduced_cost_argmin(a_j, p_min_nj, p_max, psi);
  return a_j * k * k - psi * k;
}

double reduced_cost_argmin_rf(double nu_j, double p_min_nj, double p_max, double psi) {
  if (!(nu_j > 0.0)) throw Error("reduced_cost: nu must be positive");
  if (p_min_nj < 0.0 || p_min_nj > p_max)
    throw Error("reduced_cost: empty power box");
  if (psi >= 0.0) return p_max;  // both terms fall with kappa
  return std::clamp(std::sqrt(nu_j / -psi), p_min_nj, p_max);
}

double reduced_cost_phi_rf(double nu_j, double p_min_nj, double p_max, double psi) {
  const double k = reduced_cost_argmin_rf(nu_j, p_min_nj, p_max, psi);
  if (!(k > 0.0)) throw Error("reduced_cost: zero power in reciprocal cost");
  return nu_j / k - psi * k;
}

namespace {

struct SubcarrierProblem {
  Chain chain;
  std::size_t n, j;
  std::vector<double> coeff;  // a_j (MF) or nu_j (RF), per class
  std::vector<int> rate;      // per class
  std::vector<double> p_min;  // n*j row-major floors
  double p_max = 0.0;
  double p_ave = 0.0;
  double budget = 0.0;  // n * p_ave
  int rate_target = 0;  // ceil(n * r_min)
  double r_min = 0.0;

  double floor_at(std::size_t sc, std::size_t cls) const {
    return p_min[sc * j + cls];
  }
};

SubcarrierProblem build_problem(Chain chain, std::span<const double> gains,
                                std::span<const ClassSpec> classes, double r_min,
                                double p_ave, const SurrogateContext& ctx,
                                double p_max) {
  ctx.validate();
  check_classes(classes);
  if (gains.size() < 2) throw Error("optimizer: need at least 2 subcarriers");
  if (static_cast<std::size_t>(ctx.n) != gains.size())
    throw Error("optimizer: context subcarrier count must match the gains");
  if (!(p_ave > 0.0)) throw Error("optimizer: average power must be positive");
  for (double g : gains)
    if (!(g > 0.0)) throw Error("optimizer: channel gains must be positive");

  SubcarrierProblem pb;
  pb.chain = chain;
  pb.n = gains.size();
  pb.j = classes.size();
  pb.p_max = p_max > 0.0 ? p_max : 1e3 * p_ave;
  if (pb.p_max < p_ave) throw Error("optimizer: power cap below the average budget");
  pb.p_ave = p_ave;
  pb.budget = static_cast<double>(pb.n) * p_ave;
  pb.r_min = r_min;
  pb.rate_target = static_cast<int>(
      std::ceil(static_cast<double>(pb.n) * r_min - 1e-9));
  if (pb.rate_target < 0) pb.rate_target = 0;

  int max_rate = 0;
  for (const auto& c : classes) {
    pb.coeff.push_back(chain == Chain::MF ? mf_cost_coeff(c.moments, ctx)
                                          : c.moments.nu_minus2);
    pb.rate.push_back(c.moments.rate_bits);
    max_rate = std::max(max_rate, c.moments.rate_bits);
  }
  if (static_cast<double>(max_rate) < r_min - 1e-9)
    throw InfeasibleError("optimizer: infeasible, rate target exceeds every class rate");

  pb.p_min.resize(pb.n * pb.j);
  for (std::size_t sc = 0; sc < pb.n; ++sc)
    for (std::size_t cls = 0; cls < pb.j; ++cls)
      pb.p_min[sc * pb.j + cls] =
          classes[cls].gamma_min * ctx.noise_var / gains[sc];
  return pb;
}

// Exact power solve for a fixed assignment. Returns +inf if the floors are
// incompatible with the budget or a floor exceeds the cap.
double assignment_power_solve(const SubcarrierProblem& pb,
                              std::span<const int> assign,
                              std::vector<double>& kappa) {
  std::vector<double> slope(pb.n), lo(pb.n), hi(pb.n, pb.p_max);
  for (std::size_t sc = 0; sc < pb.n; ++sc) {
    const std::size_t cls = static_cast<std::size_t>(assign[sc]);
    const double c = pb.coeff[cls];
    slope[sc] = pb.chain == Chain::MF ? 1.0 / (2.0 * c) : std::sqrt(c);
    lo[sc] = pb.floor_at(sc, cls);
    if (lo[sc] > pb.p_max) return kInf;
  }
  if (!level_solve(slope, lo, hi, pb.budget, kappa)) return kInf;
  double obj = 0.0;
  for (std::size_t sc = 0; sc < pb.n; ++sc) {
    const double c = pb.coeff[static_cast<std::size_t>(assign[sc])];
    obj += pb.chain == Chain::MF ? c * kappa[sc] * kappa[sc] : c / kappa[sc];
  }
  return obj;
}

int total_rate(const SubcarrierProblem& pb, std::span<const int> assign) {
  int r = 0;
  for (std::size_t sc = 0; sc < pb.n; ++sc)
    r += pb.rate[static_cast<std::size_t>(assign[sc])];
  return r;
}

// Min sum of power floors subject to the integer rate target; gives both the
// feasibility certificate and a always-feasible fallback assignment.
bool min_floor_assignment(const SubcarrierProblem& pb, std::vector<int>& assign,
                          double& floor_sum) {
  const int t = pb.rate_target;
  const std::size_t states = static_cast<std::size_t>(t) + 1;
  std::vector<double> dp(states, kInf);
  std::vector<double> next(states);
  std::vector<std::vector<int>> choice(pb.n, std::vector<int>(states, -1));
  dp[0] = 0.0;
  for (std::size_t sc = 0; sc < pb.n; ++sc) {
    std::fill(next.begin(), next.end(), kInf);
    for (std::size_t r = 0; r < states; ++r) {
      if (dp[r] >= kInf) continue;
      for (std::size_t cls = 0; cls < pb.j; ++cls) {
        const double f = pb.floor_at(sc, cls);
        if (f > pb.p_max) continue;
        const std::size_t nr = std::min<std::size_t>(
            static_cast<std::size_t>(t), r + static_cast<std::size_t>(
                                                 pb.rate[cls]));
        const double v = dp[r] + f;
        if (v < next[nr] - 1e-15) {
          next[nr] = v;
          choice[sc][nr] = static_cast<int>(cls) * static_cast<int>(states) +
                           static_cast<int>(r);
        }
      }
    }
    dp.swap(next);
  }
  if (dp[static_cast<std::size_t>(t)] >= kInf) return false;
  floor_sum = dp[static_cast<std::size_t>(t)];
  assign.assign(pb.n, 0);
  std::size_t r = static_cast<std::size_t>(t);
  for (std::size_t sc = pb.n; sc-- > 0;) {
    const int packed = choice[sc][r];
    assign[sc] = packed / static_cast<int>(states);
    r = static_cast<std::size_t>(packed % static_cast<int>(states));
  }
  return true;
}

// Greedy rate repair: upgrade the subcarrier/class pair with the cheapest
// floor growth per added bit until the rate target holds.
void repair_rate(const SubcarrierProblem& pb, std::vector<int>& assign) {
  int r = total_rate(pb, assign);
  while (r < pb.rate_target) {
    double best_score = kInf;
    std::size_t best_sc = 0;
    int best_cls = -1;
    for (std::size_t sc = 0; sc < pb.n; ++sc) {
      const std::size_t cur = static_cast<std::size_t>(assign[sc]);
      for (std::size_t cls = 0; cls < pb.j; ++cls) {
        if (pb.rate[cls] <= pb.rate[cur]) continue;
        if (pb.floor_at(sc, cls) > pb.p_max) continue;
        const double score = (pb.floor_at(sc, cls) - pb.floor_at(sc, cur)) /
                             static_cast<double>(pb.rate[cls] - pb.rate[cur]);
        if (score < best_score) {
          best_score = score;
          best_sc = sc;
          best_cls = static_cast<int>(cls);
        }
      }
    }
    if (best_cls < 0) return;  // nothing to upgrade; caller falls back
    r += pb.rate[static_cast<std::size_t>(best_cls)] -
         pb.rate[static_cast<std::size_t>(assign[best_sc])];
    assign[best_sc] = best_cls;
  }
}

SubcarrierPlan finish_plan(const SubcarrierProblem& pb, std::vector<int> assign,
                           std::vector<double> kappa, double objective) {
  SubcarrierPlan plan;
  plan.assignment = std::move(assign);
  plan.kappa = std::move(kappa);
  plan.objective = objective;
  plan.n_classes = static_cast<int>(pb.j);
  return plan;
}

}  // namespace

SubcarrierPlan bilevel_solve(Chain chain, std::span<const double> channel_gains,
                             std::span<const ClassSpec> classes, double r_min,
                             double p_ave, const SurrogateContext& ctx,
                             const DualConfig& cfg) {
  SubcarrierProblem pb = build_problem(chain, channel_gains, classes, r_min,
                                       p_ave, ctx, cfg.p_max);
  const double nd = static_cast<double>(pb.n);

  std::vector<int> dp_assign;
  double dp_floor_sum = 0.0;
  if (!min_floor_assignment(pb, dp_assign, dp_floor_sum) ||
      dp_floor_sum > pb.budget + 1e-9 * (1.0 + pb.budget))
    throw InfeasibleError("bilevel_solve: infeasible, power floors exceed the budget");

  // Best repaired primal seen so far; seeded with the min-floor assignment
  // so a feasible plan exists even if the duals wander.
  std::vector<int> best_assign;
  std::vector<double> best_kappa;
  double best_obj = kInf;
  std::vector<double> kappa_buf;
  auto offer = [&](const std::vector<int>& assign) {
    if (total_rate(pb, assign) < pb.rate_target) return;
    const double obj = assignment_power_solve(pb, assign, kappa_buf);
    const double margin =
        best_obj < kInf ? 1e-15 * (1.0 + std::fabs(best_obj)) : 0.0;
    if (obj < best_obj - margin) {
      best_obj = obj;
      best_assign = assign;
      best_kappa = kappa_buf;
    }
  };
  offer(dp_assign);

  double coeff_bar = 0.0;
  int rate_lo = pb.rate[0], rate_hi = pb.rate[0];
  for (std::size_t cls = 0; cls < pb.j; ++cls) {
    coeff_bar += pb.coeff[cls];
    rate_lo = std::min(rate_lo, pb.rate[cls]);
    rate_hi = std::max(rate_hi, pb.rate[cls]);
  }
  coeff_bar /= static_cast<double>(pb.j);
  const double r_range = std::max(1e-9, static_cast<double>(rate_hi - rate_lo));

  double psi = chain == Chain::MF ? 2.0 * coeff_bar * p_ave
                                  : -coeff_bar / (p_ave * p_ave);
  double lambda = 0.0;
  const double obj_char = chain == Chain::MF ? coeff_bar * p_ave * p_ave
                                             : coeff_bar / p_ave;
  const double psi_scale =
      cfg.psi_step > 0.0 ? cfg.psi_step
                         : (chain == Chain::MF ? 2.0 * coeff_bar * p_ave
                                               : coeff_bar / (p_ave * p_ave));
  const double lambda_scale = cfg.lambda_step > 0.0
                                  ? cfg.lambda_step
                                  : nd * obj_char / r_range;

  std::vector<int> assign(pb.n, 0);
  std::vector<double> kappa(pb.n, 0.0);
  std::vector<int> repaired;
  bool converged = false;
  std::vector<DualIterate> history;

  for (int t = 1; t <= cfg.max_iters; ++t) {
    double dual_value = psi * pb.budget + lambda * r_min;
    double sum_kappa = 0.0;
    int sum_rate = 0;
    for (std::size_t sc = 0; sc < pb.n; ++sc) {
      double best_cost = kInf;
      int best_cls = -1;
      for (std::size_t cls = 0; cls < pb.j; ++cls) {
        const double lo = pb.floor_at(sc, cls);
        if (lo > pb.p_max) continue;
        const double phi =
            chain == Chain::MF
                ? reduced_cost_phi(pb.coeff[cls], lo, pb.p_max, psi)
                : reduced_cost_phi_rf(pb.coeff[cls], lo, pb.p_max, psi);
        const double cost =
            phi - lambda / nd * static_cast<double>(pb.rate[cls]);
        if (cost < best_cost - 1e-15) {
          best_cost = cost;
          best_cls = static_cast<int>(cls);
        }
      }
      if (best_cls < 0) throw Error("bilevel_solve: no admissible class");
      assign[sc] = best_cls;
      const std::size_t cls = static_cast<std::size_t>(best_cls);
      kappa[sc] =
          chain == Chain::MF
              ? reduced_cost_argmin(pb.coeff[cls], pb.floor_at(sc, cls),
                                    pb.p_max, psi)
              : reduced_cost_argmin_rf(pb.coeff[cls], pb.floor_at(sc, cls),
                                       pb.p_max, psi);
      sum_kappa += kappa[sc];
      sum_rate += pb.rate[cls];
      dual_value += best_cost;
    }
    const double power_gap = pb.budget - sum_kappa;
    const double rate_gap = r_min - static_cast<double>(sum_rate) / nd;

    if (cfg.track_history)
      history.push_back({t, psi, lambda, dual_value, power_gap, rate_gap});

    repaired = assign;
    repair_rate(pb, repaired);
    double floor_sum = 0.0;
    for (std::size_t sc = 0; sc < pb.n; ++sc)
      floor_sum += pb.floor_at(sc, static_cast<std::size_t>(repaired[sc]));
    if (total_rate(pb, repaired) < pb.rate_target ||
        floor_sum > pb.budget + 1e-12 * (1.0 + pb.budget))
      repaired = dp_assign;
    offer(repaired);

    if (std::fabs(power_gap) <= cfg.power_tol * pb.budget &&
        rate_gap <= cfg.rate_tol &&
        std::fabs(lambda * rate_gap) <= cfg.compl_tol) {
      converged = true;
      break;
    }

    const double step = 1.0 / std::sqrt(static_cast<double>(t));
    psi += psi_scale * step * power_gap / pb.budget;
    lambda = std::max(0.0, lambda + lambda_scale * step * rate_gap / r_range);
  }

  SubcarrierPlan plan =
      finish_plan(pb, std::move(best_assign), std::move(best_kappa), best_obj);
  plan.psi = psi;
  plan.lambda = lambda;
  plan.converged = converged;
  plan.history = std::move(history);
  return plan;
}

SubcarrierPlan exhaustive_oracle(Chain chain, std::span<const double> channel_gains,
                                 std::span<const ClassSpec> classes, double r_min,
                                 double p_ave, const SurrogateContext& ctx,
                                 double p_max) {
  SubcarrierProblem pb =
      build_problem(chain, channel_gains, classes, r_min, p_ave, ctx, p_max);
  double count = 1.0;
  for (std::size_t sc = 0; sc < pb.n; ++sc) {
    count *= static_cast<double>(pb.j);
    if (count > 1e6)
      throw Error("exhaustive_oracle: instance too large (J^N above 1e6)");
  }

  std::vector<int> assign(pb.n, 0);
  std::vector<int> best_assign;
  std::vector<double> kappa, best_kappa;
  double best_obj = kInf;
  bool done = false;
  while (!done) {
    if (total_rate(pb, assign) >= pb.rate_target) {
      const double obj = assignment_power_solve(pb, assign, kappa);
      const double margin =
          best_obj < kInf ? 1e-15 * (1.0 + std::fabs(best_obj)) : 0.0;
      if (obj < best_obj - margin) {
        best_obj = obj;
        best_assign = assign;
        best_kappa = kappa;
      }
    }
    // mixed-radix increment, last subcarrier fastest
    done = true;
    for (std::size_t sc = pb.n; sc-- > 0;) {
      if (++assign[sc] < static_cast<int>(pb.j)) {
        done = false;
        break;
      }
      assign[sc] = 0;
    }
  }
  if (!(best_obj < kInf))
    throw InfeasibleError("exhaustive_oracle: infeasible instance");
  return finish_plan(pb, std::move(best_assign), std::move(best_kappa), best_obj);
}

bool equal_power_within_blocks(const SubcarrierPlan& plan,
                               std::span<const double> channel_gains,
                               std::span<const ClassSpec> classes,
                               const SurrogateContext& ctx, double tol) {
  if (plan.assignment.size() != channel_gains.size() ||
      plan.kappa.size() != channel_gains.size())
    throw Error("equal_power_within_blocks: size mismatch");
  std::map<std::pair<int, double>, std::pair<double, double>> spread;
  for (std::size_t sc = 0; sc < channel_gains.size(); ++sc) {
    const int cls = plan.assignment[sc];
    const double floor = classes[static_cast<std::size_t>(cls)].gamma_min *
                         ctx.noise_var / channel_gains[sc];
    const double k = plan.kappa[sc];
    if (k <= floor + 1e-9 * (1.0 + floor)) continue;  // pinned at the floor
    const std::pair<int, double> key{cls, channel_gains[sc]};
    auto it = spread.find(key);
    if (it == spread.end())
      spread.emplace(key, std::make_pair(k, k));
    else {
      it->second.first = std::min(it->second.first, k);
      it->second.second = std::max(it->second.second, k);
    }
  }
  for (const auto& [key, mm] : spread)
    if (mm.second - mm.first >= tol) return false;
  return true;
}

bool equal_power_within_blocks(const PowerAllocation& p, std::span<const double> mu4,
                               std::span<const double> nu_minus2, double tol) {
  if (p.p.size() != mu4.size() || p.p.size() != nu_minus2.size())
    throw Error("equal_power_within_blocks: size mismatch");
  std::map<std::pair<double, double>, std::pair<double, double>> spread;
  for (std::size_t i = 0; i < p.p.size(); ++i) {
    const std::pair<double, double> key{mu4[i], nu_minus2[i]};
    auto it = spread.find(key);
    if (it == spread.end())
      spread.emplace(key, std::make_pair(p.p[i], p.p[i]));
    else {
      it->second.first = std::min(it->second.first, p.p[i]);
      it->second.second = std::max(it->second.second, p.p[i]);
    }
  }
  for (const auto& [key, mm] : spread)
    if (mm.second - mm.first >= tol) return false;
  return true;
}

namespace {

double sinr_from_cost(Chain chain, double cost_sum, double sum_p,
                      const SurrogateContext& ctx) {
  const double nd = static_cast<double>(ctx.n);
  if (chain == Chain::MF) {
    const double denom = cost_sum - ctx.clutter * sum_p * sum_p / (nd - 1.0) +
                         ctx.noise_var * sum_p / ctx.m;
    if (!(denom > 0.0)) throw Error("surrogate_sinr: nonpositive denominator");
    return ctx.sigma_q_sq * sum_p * sum_p / denom;
  }
  if (!(ctx.noise_var > 0.0))
    throw Error("surrogate_sinr: reciprocal filter needs positive noise");
  return ctx.sigma_q_sq * ctx.m * nd * nd / (ctx.noise_var * cost_sum);
}

}  // namespace

double surrogate_sinr(Chain chain, const MixturePlan& plan,
                      std::span<const ClassSpec> classes, const SurrogateContext& ctx) {
  ctx.validate();
  if (plan.eta.size() != classes.size())
    throw Error("surrogate_sinr: class count mismatch");
  double cost = 0.0;
  for (std::size_t j = 0; j < classes.size(); ++j) {
    if (plan.eta[j] <= 1e-15) continue;
    if (chain == Chain::MF)
      cost += mf_mixture_coeff(classes[j].moments, ctx) * plan.theta[j] *
              plan.theta[j] / plan.eta[j];
    else
      cost += classes[j].moments.nu_minus2 * plan.eta[j] * plan.eta[j] /
              plan.theta[j];
  }
  const double sum_p = static_cast<double>(ctx.n) * plan.p_ave;
  // mixture RF cost is the per-subcarrier sum divided by N
  if (chain == Chain::RF) cost *= static_cast<double>(ctx.n);
  return sinr_from_cost(chain, cost, sum_p, ctx);
}

double surrogate_sinr(Chain chain, const SubcarrierPlan& plan,
                      std::span<const ClassSpec> classes, const SurrogateContext& ctx) {
  ctx.validate();
  if (plan.assignment.size() != static_cast<std::size_t>(ctx.n))
    throw Error("surrogate_sinr: subcarrier count mismatch");
  double cost = 0.0, sum_p = 0.0;
  for (std::size_t sc = 0; sc < plan.assignment.size(); ++sc) {
    const auto& m = classes[static_cast<std::size_t>(plan.assignment[sc])].moments;
    const double k = plan.kappa[sc];
    sum_p += k;
    if (chain == Chain::MF)
      cost += mf_cost_coeff(m, ctx) * k * k;
    else
      cost += m.nu_minus2 / k;
  }
  return sinr_from_cost(chain, cost, sum_p, ctx);
}

}  // namespace isaclab
