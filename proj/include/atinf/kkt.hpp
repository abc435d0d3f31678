#pragma once

#include <optional>
#include <string>
#include <vector>

#include "atinf/asymptotics.hpp"
#include "atinf/descent.hpp"
#include "atinf/problem.hpp"

namespace atinf {

enum class Verdict { Holds, Fails, HypothesisUnmet };
std::string to_string(Verdict v);

/// Asymptotic sets of every problem function and of the ground set.
struct AsymptoticData {
  std::vector<AsymptoticSet> objectives;
  std::vector<AsymptoticSet> constraints;
  /// Empty when the ground set looks bounded.
  std::optional<AsymptoticSet> ground;
  /// Estimate for phi = max f_i itself.
  AsymptoticSet phi;
};

AsymptoticData estimate_asymptotics(const MinimaxProblem& p, const SamplingPlan& plan);

struct StandingAssumptions {
  bool feasible_set_unbounded = false;
  bool objectives_lipschitz = false;
  bool constraints_lipschitz = false;
  bool bounded_below = true;
  /// Lowest objective value found by descent.
  double record = 0.0;
  std::string note;
};

struct CqVerdict {
  Verdict verdict = Verdict::Holds;
  /// Violating multipliers per constraint when CQ fails.
  std::vector<double> beta;
  MembershipCertificate certificate;
  std::string note;
};

struct SufficiencyVerdict {
  enum class Outcome { NonemptyCompact, Inconclusive, NotApplicable };
  Outcome outcome = Outcome::Inconclusive;
  MembershipCertificate certificate;
  /// Descent from seeded starts: every run converged with bounded iterates.
  bool cross_validated = false;
  std::vector<Vec> minimizers;
  std::vector<double> minimizer_values;
  std::string note;
};
std::string to_string(SufficiencyVerdict::Outcome o);

struct KktReport {
  CqVerdict cq;
  /// Holds: 0 lies in the multiplier sum. Fails: it does not, so no
  /// minimizing sequence escapes. HypothesisUnmet: some objective is not
  /// Lipschitz at infinity; the certificate is then informational.
  Verdict kkt_verdict = Verdict::Fails;
  MembershipCertificate kkt;
  /// Set when CQ does not hold.
  bool unreliable = false;
  SufficiencyVerdict sufficiency;
  StandingAssumptions assumptions;
  AsymptoticData sets;
  std::optional<EscapeEvidence> escape;
  std::string message;
};

struct AnalysisOptions {
  DescentOptions descent;
  /// Starts for the escape search and the bounded-below check; the projection
  /// of the origin when empty.
  std::vector<Vec> starts;
  int cross_validation_starts = 8;
  bool run_descent = true;
};

CqVerdict check_cq(const MinimaxProblem& p, const SamplingPlan& plan);
CqVerdict check_cq(const MinimaxProblem& p, const AsymptoticData& sets, const SamplingPlan& plan);

StandingAssumptions check_standing_assumptions(const MinimaxProblem& p,
                                               const AsymptoticData& sets,
                                               const SamplingPlan& plan,
                                               const std::vector<Trajectory>& runs);

KktReport kkt_at_infinity(const MinimaxProblem& p, const SamplingPlan& plan,
                          const AnalysisOptions& options = {});

SufficiencyVerdict sufficiency_check(const MinimaxProblem& p, const SamplingPlan& plan,
                                     const AnalysisOptions& options = {});
SufficiencyVerdict sufficiency_check(const MinimaxProblem& p, const AsymptoticData& sets,
                                     const CqVerdict& cq, const SamplingPlan& plan,
                                     const AnalysisOptions& options);

/// Seeded starts uniform in [-10, 10]^n, projected onto the ground set.
std::vector<Vec> seeded_starts(const MinimaxProblem& p, int count, std::uint64_t seed);

}  // namespace atinf
