#include "redmf/equilibrium.hpp"

#include <cmath>
#include <sstream>

namespace redmf {

const char* to_string(EquilibriumOutcome o) {
  switch (o) {
    case EquilibriumOutcome::Congested: return "congested";
    case EquilibriumOutcome::NoCongestion: return "no-congestion";
    case EquilibriumOutcome::RampSaturated: return "ramp-saturated";
  }
  return "unknown";
}

double model_mean_window(double k, double w_max) {
  return solve_fixed_point(k, w_max).mean;
}

double residual(double q, const NetworkParams& params, const REDConfig& red) {
  if (q < red.min_th || q > red.max_th)
    throw Error(ErrorCode::Domain, "queue outside the RED ramp");
  const double k = red_drop_probability(red, q);
  const double pipe =
      params.capacity_per_user * (params.prop_delay + q) / (1.0 - k);
  return model_mean_window(k, params.w_max) - pipe;
}

EquilibriumState make_equilibrium_state(const NetworkParams& params, double k,
                                        double q) {
  EquilibriumState s;
  s.fixed_point = solve_fixed_point(k, params.w_max);
  s.k_e = k;
  s.q_e = q;
  s.r_e = params.prop_delay + q;
  s.f_e = s.fixed_point.mean;
  s.f2_e = s.fixed_point.second_moment;
  s.m_e = s.fixed_point.mass_at_wmax;
  s.b_o_e = params.capacity_per_user;
  s.b_i_e = s.f_e / s.r_e;
  s.a_e = 1.0 / s.r_e;
  return s;
}

EquilibriumResult solve_equilibrium(const NetworkParams& params,
                                    const REDConfig& red) {
  params.validate();
  red.validate();
  EquilibriumResult out;
  auto g = [&](double q) { return residual(q, params, red); };

  double lo = red.min_th, hi = red.max_th;
  double g_lo = g(lo), g_hi = g(hi);
  out.residual_at_min_th = g_lo;
  out.residual_at_max_th = g_hi;
  if (g_lo <= 0) {
    out.outcome = EquilibriumOutcome::NoCongestion;
    return out;
  }
  if (g_hi > 0) {
    out.outcome = EquilibriumOutcome::RampSaturated;
    return out;
  }

  // The root is unique only if the residual is monotone on the ramp.
  constexpr int kProbe = 16;
  double prev = g_lo;
  for (int i = 1; i <= kProbe; ++i) {
    const double v = g(i == kProbe ? hi : lo + (hi - lo) * i / kProbe);
    if (v > prev)
      throw Error(ErrorCode::Numerical, "equilibrium residual is not monotone");
    prev = v;
  }

  const double tol = 1e-9 * params.capacity_per_user * params.prop_delay;
  double mid = 0.5 * (lo + hi), g_mid = g(mid);
  int it = 0;
  while (std::abs(g_mid) >= tol && it < 200 && hi - lo > 1e-16) {
    if (g_mid > 0)
      lo = mid;
    else
      hi = mid;
    mid = 0.5 * (lo + hi);
    g_mid = g(mid);
    ++it;
  }
  if (std::abs(g_mid) >= tol)
    throw Error(ErrorCode::Numerical, "equilibrium bisection did not converge");

  out.iterations = it;
  out.outcome = EquilibriumOutcome::Congested;
  out.state = make_equilibrium_state(params, red_drop_probability(red, mid), mid);
  return out;
}

std::vector<std::string> check_invariants(const EquilibriumState& eq,
                                          const NetworkParams& params,
                                          const REDConfig* red) {
  std::vector<std::string> bad;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
  auto expect = [&](bool ok, const char* what, double lhs, double rhs) {
    if (ok) return;
    std::ostringstream os;
    os << what << ": " << lhs << " vs " << rhs;
    bad.push_back(os.str());
  };
  const double c = params.capacity_per_user;
  expect(eq.b_o_e == c, "b_o = C", eq.b_o_e, c);
  expect(rel(eq.r_e, params.prop_delay + eq.q_e) < 1e-12, "r = T + q", eq.r_e,
         params.prop_delay + eq.q_e);
  expect(rel(eq.b_i_e, eq.f_e / eq.r_e) < 1e-6, "b_i = F / R", eq.b_i_e,
         eq.f_e / eq.r_e);
  expect(rel(eq.b_i_e, c / (1 - eq.k_e)) < 1e-6, "b_i = C / (1 - K)", eq.b_i_e,
         c / (1 - eq.k_e));
  expect(rel(eq.a_e, 1 / eq.r_e) < 1e-12, "A = 1 / R", eq.a_e, 1 / eq.r_e);
  if (eq.k_e > 0)
    expect(rel(eq.f2_e, 2 * (1 - eq.m_e) / eq.k_e) < 1e-4, "F2 = 2(1-M)/K",
           eq.f2_e, 2 * (1 - eq.m_e) / eq.k_e);
  if (red)
    expect(std::abs(eq.k_e - red_drop_probability(*red, eq.q_e)) < 1e-15,
           "K = f(Q)", eq.k_e, red_drop_probability(*red, eq.q_e));
  return bad;
}

double sqrt_formula(double k, double w_max) {
  if (!(k > 0)) throw Error(ErrorCode::Domain, "square-root formula needs k > 0");
  return std::min(w_max, kSqrtFormulaAlpha / std::sqrt(k));
}

}  // namespace redmf
