#include "atinf/report.hpp"

#include <cmath>

namespace atinf {

namespace {

using nlohmann::json;

json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

json nums(const std::vector<double>& xs) {
  json out = json::array();
  for (double x : xs) out.push_back(num(x));
  return out;
}

json points(const std::vector<Vec>& ps) {
  json out = json::array();
  for (const Vec& p : ps) out.push_back(to_json(p));
  return out;
}

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? to_json(*v) : json(nullptr);
}

}  // namespace

const char* version() { return ATINF_VERSION; }

json to_json(const Vec& v) {
  json out = json::array();
  for (double x : v) out.push_back(num(x));
  return out;
}

json to_json(const VPolytope& p) {
  return json{{"points", points(p.points)}, {"degenerate", p.degenerate}};
}

json to_json(const VCone& c) { return json{{"generators", points(c.generators)}}; }

json to_json(const MembershipCertificate& c) {
  json mu = json::array(), nu = json::array();
  for (const auto& m : c.mu) mu.push_back(nums(m));
  for (const auto& m : c.nu) nu.push_back(nums(m));
  return json{{"feasible", c.feasible},   {"alpha", nums(c.alpha)},
              {"beta", nums(c.beta)},     {"mu", mu},
              {"nu", nu},                 {"kappa", nums(c.kappa)},
              {"residual", num(c.residual)}, {"margin", num(c.margin)},
              {"near_degenerate", c.near_degenerate}, {"note", c.note}};
}

json to_json(const AsymptoticSet& s) {
  json diag = json::array();
  for (const DirectionDiagnostic& d : s.diagnostics)
    diag.push_back(json{{"direction", d.direction},
                        {"perturbed", d.perturbed},
                        {"valid_samples", d.valid_samples},
                        {"status", d.status}});
  return json{{"bounded_part", to_json(s.bounded_part)},
              {"recession_cone", to_json(s.recession_cone)},
              {"lipschitz_at_infinity", s.lipschitz_at_infinity},
              {"lipschitz_constant", num(s.lipschitz_constant)},
              {"lipschitz_radius", num(s.lipschitz_radius)},
              {"samples_used", s.samples_used},
              {"diagnostics", diag}};
}

json to_json(const EkelandWitness& w) {
  return json{{"x0", to_json(w.x0)},
              {"x1", to_json(w.x1)},
              {"eps", num(w.eps)},
              {"lambda", num(w.lambda)},
              {"u", to_json(w.u)},
              {"u_norm", num(w.u_norm)},
              {"checks",
               json{{"value_decrease", w.value_decrease},
                    {"within_lambda", w.within_lambda},
                    {"perturbed_min", w.perturbed_min},
                    {"samples", w.samples_checked}}}};
}

json to_json(const Trajectory& t) {
  json witnesses = json::array();
  for (const EkelandWitness& w : t.ekeland_witnesses) witnesses.push_back(to_json(w));
  json out{{"status", to_string(t.status)},
           {"iterates", points(t.iterates)},
           {"values", nums(t.values)},
           {"final_point", to_json(t.final_point)},
           {"final_value", num(t.final_value)},
           {"record", num(t.record)},
           {"start_projected", t.start_projected},
           {"penalty_weight", num(t.penalty_weight)},
           {"ekeland_witnesses", witnesses}};
  if (t.status == Trajectory::Status::Escaped) {
    out["escape_direction"] = to_json(t.escape_direction);
    out["limit_estimate"] = num(t.limit_estimate);
  } else if (t.status != Trajectory::Status::Converged) {
    out["note"] = "no escape found";
  }
  return out;
}

json to_json(const EscapeEvidence& e) {
  json witnesses = json::array();
  for (const EkelandWitness& w : e.witnesses) witnesses.push_back(to_json(w));
  return json{{"tail", points(e.tail)},
              {"tail_values", nums(e.tail_values)},
              {"direction", to_json(e.direction)},
              {"limit_estimate", num(e.limit_estimate)},
              {"smallest_u_norm", num(e.smallest_u_norm)},
              {"witnesses", witnesses}};
}

json to_json(const CqVerdict& v) {
  return json{{"verdict", to_string(v.verdict)},
              {"beta", nums(v.beta)},
              {"certificate", to_json(v.certificate)},
              {"note", v.note}};
}

json to_json(const StandingAssumptions& a) {
  return json{{"feasible_set_unbounded", a.feasible_set_unbounded},
              {"objectives_lipschitz", a.objectives_lipschitz},
              {"constraints_lipschitz", a.constraints_lipschitz},
              {"bounded_below", a.bounded_below},
              {"record", num(a.record)},
              {"note", a.note}};
}

json to_json(const SufficiencyVerdict& s) {
  return json{{"outcome", to_string(s.outcome)},
              {"certificate", to_json(s.certificate)},
              {"cross_validated", s.cross_validated},
              {"minimizers", points(s.minimizers)},
              {"minimizer_values", nums(s.minimizer_values)},
              {"note", s.note}};
}

json to_json(const KktReport& r) {
  json objectives = json::array(), constraints = json::array();
  for (const AsymptoticSet& s : r.sets.objectives) objectives.push_back(to_json(s));
  for (const AsymptoticSet& s : r.sets.constraints) constraints.push_back(to_json(s));
  return json{{"cq", to_json(r.cq)},
              {"kkt",
               json{{"verdict", to_string(r.kkt_verdict)},
                    {"certificate", to_json(r.kkt)},
                    {"unreliable", r.unreliable},
                    {"message", r.message}}},
              {"sufficiency", to_json(r.sufficiency)},
              {"assumptions", to_json(r.assumptions)},
              {"asymptotic_sets",
               json{{"objectives", objectives},
                    {"constraints", constraints},
                    {"max_objective", to_json(r.sets.phi)},
                    {"ground", optional_json(r.sets.ground)}}},
              {"escape_evidence", optional_json(r.escape)}};
}

json to_json(const SolutionSetVerdict& s) {
  return json{{"outcome", to_string(s.outcome)},
              {"certificate", to_json(s.certificate)},
              {"closedness_claimed", s.closedness_claimed},
              {"cross_check_points", points(s.cross_check_points)},
              {"candidate_values", points(s.candidate_values)},
              {"note", s.note}};
}

json to_json(const ParetoReport& r) {
  const WeakValueEvidence& e = r.evidence;
  return json{{"candidate_value", to_json(r.candidate_value)},
              {"outcome", to_string(r.outcome)},
              {"message", r.message},
              {"weak_value_evidence",
               json{{"infimum_estimate", num(e.infimum_estimate)},
                    {"nonnegative_on_samples", e.nonnegative_on_samples},
                    {"samples_checked", e.samples_checked},
                    {"escape_to_zero", e.escape_to_zero},
                    {"descent_status", e.descent_status},
                    {"escape", optional_json(e.escape)},
                    {"passes", e.passes}}},
              {"refutation", optional_json(r.refutation)},
              {"auxiliary", to_json(r.kkt)},
              {"weak_solution_set", to_json(r.weak_solution_set)},
              {"solution_set", to_json(r.solution_set)}};
}

std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

}  // namespace atinf
