#include "rldp_cli/json_io.hpp"

#include <cmath>

namespace rldp::cli {

ojson num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

ojson to_json(const McEstimate& e) {
  return ojson{{"p_hat", num(e.p_hat)},
               {"n_samples", e.n_samples},
               {"n_hits", e.n_hits},
               {"ci_half_width", num(e.ci_half_width)},
               {"zero_hits", e.zero_hits}};
}

ojson to_json(const LogRate& r) { return ojson{{"value", num(r.value)}, {"lo", num(r.lo)}, {"hi", num(r.hi)}}; }

ojson to_json(const RateResult& r) {
  return ojson{{"feasible", r.feasible},
               {"value", num(r.value)},
               {"constraint_residual", num(r.constraint_residual)},
               {"iterations", r.iterations},
               {"winning_start", r.winning_start},
               {"segments", r.segments},
               {"zero_tail_applied", r.zero_tail_applied},
               {"diagnostics", r.diagnostics}};
}

ojson to_json(const WeakStabilityReport& w) {
  ojson d = ojson::array();
  for (size_t i = 0; i < w.n_values.size(); ++i) d.push_back(ojson{{"n", w.n_values[i]}, {"sup_dist", num(w.sup_dists[i])}});
  return ojson{{"distances", d},
               {"eventually_decreasing", w.eventually_decreasing},
               {"decreasing_from", w.decreasing_from},
               {"final_quarter", w.final_quarter}};
}

ojson to_json(const LdpReport& r) {
  ojson ladder = ojson::array();
  for (const auto& e : r.ladder) {
    ojson row{{"eps", num(e.eps)}, {"estimate", to_json(e.estimate)}, {"finite", e.finite}};
    if (e.finite) row["log_rate"] = to_json(e.log_rate);
    ladder.push_back(row);
  }
  ojson j{{"experiment", r.experiment},
          {"event_id", r.event_id},
          {"ladder", ladder},
          {"lambda_value", num(r.lambda_value)},
          {"lambda_feasible", r.lambda_feasible},
          {"rate_residual", num(r.rate_residual)},
          {"dp_value", num(r.dp_value)},
          {"dp_source", r.dp_source},
          {"cap", num(r.cap)},
          {"pde_eps_value", num(r.pde_eps_value)},
          {"pde_limit_value", num(r.pde_limit_value)},
          {"slack",
           {{"statistical", num(r.slack.statistical)},
            {"scheme", num(r.slack.scheme)},
            {"finite_eps", num(r.slack.finite_eps)},
            {"relative", num(r.slack.relative)},
            {"total", num(r.slack.total())}}},
          {"monotone", r.monotone},
          {"smallest_eps_rate", num(r.smallest_eps_rate)},
          {"two_sided_gap", num(r.two_sided_gap)},
          {"pairwise_ok", r.pairwise_ok}};
  j["extrapolated"] = r.extrapolated ? num(*r.extrapolated) : ojson(nullptr);
  j["verdict"] = to_string(r.verdict);
  j["details"] = r.details;
  return j;
}

ojson to_json(const CapReport& r) {
  ojson cases = ojson::array();
  for (const auto& c : r.cases)
    cases.push_back(ojson{{"A", num(c.A)},
                          {"capped", num(c.capped)},
                          {"capped_coarse", num(c.capped_coarse)},
                          {"capped_fine", num(c.capped_fine)},
                          {"expected", num(c.expected)},
                          {"rel_error", num(c.rel_error)},
                          {"pass", c.pass}});
  return ojson{{"eps", num(r.eps)}, {"uncapped", num(r.uncapped)},
               {"uncapped_coarse", num(r.uncapped_coarse)}, {"uncapped_fine", num(r.uncapped_fine)}, {"tolerance", num(r.tolerance)}, {"cases", cases},
               {"pass", r.pass}};
}

ojson to_json(const GoodnessReport& r) {
  return ojson{{"weak_stability", to_json(r.weak)},
               {"level", num(r.level)},
               {"n_controls", r.n_controls},
               {"max_action", num(r.max_action)},
               {"max_holder", num(r.max_holder)},
               {"envelope", num(r.envelope)},
               {"max_distance_from_free", num(r.max_distance_from_free)},
               {"pass", r.pass}};
}

ojson to_json(const TestFnReport& r) {
  return ojson{{"K_psi_i", num(r.K_psi_i)},
               {"K_psi_ii", num(r.K_psi_ii)},
               {"min_psi_iii", num(r.min_psi_iii)},
               {"max_mu_error", num(r.max_mu_error)},
               {"K1", num(r.K1)},
               {"n_pairs", r.n_pairs},
               {"n_boundary_pairs", r.n_boundary_pairs}};
}

ojson to_json(const ComplementarityReport& r) {
  return ojson{{"min_gap", num(r.min_gap)}, {"max_violation", num(r.max_violation)},
               {"max_residual", num(r.max_residual)}};
}

}  // namespace rldp::cli
