#pragma once

#include <optional>
#include <string>
#include <vector>

#include "atinf/kkt.hpp"
#include "atinf/problem.hpp"

namespace atinf {

/// Objectives f_i - ybar_i with the constraints and ground set of vp.
MinimaxProblem build_auxiliary(const VectorProblem& vp, const Vec& ybar);

/// The same data as a scalar minimax problem (max of the objectives).
MinimaxProblem as_minimax(const VectorProblem& vp);

struct WeakValueEvidence {
  /// Lowest auxiliary value seen (samples and descent).
  double infimum_estimate = 0.0;
  bool nonnegative_on_samples = false;
  int samples_checked = 0;
  /// Descent on the auxiliary problem escaped with its value tending to 0.
  bool escape_to_zero = false;
  std::optional<EscapeEvidence> escape;
  std::string descent_status;
  bool passes = false;
};

struct SolutionSetVerdict {
  enum class Outcome { NonemptyCompact, NonemptyBounded, Inconclusive, NotApplicable };
  Outcome outcome = Outcome::Inconclusive;
  MembershipCertificate certificate;
  /// Never set: closedness of the Pareto solution set is not established.
  bool closedness_claimed = false;
  /// Weak Pareto points found by descent from seeded starts.
  std::vector<Vec> cross_check_points;
  /// Nondominated values among feasible samples, candidates for a value.
  std::vector<Vec> candidate_values;
  std::string note;
};
std::string to_string(SolutionSetVerdict::Outcome o);

struct ParetoReport {
  enum class Outcome { Consistent, EvidenceFails, Refuted, NotApplicable };
  Vec candidate_value;
  Outcome outcome = Outcome::EvidenceFails;
  WeakValueEvidence evidence;
  /// Feasible x with f_i(x) < ybar_i - tol for every i.
  std::optional<Vec> refutation;
  KktReport kkt;
  SolutionSetVerdict weak_solution_set;
  SolutionSetVerdict solution_set;
  std::string message;
};
std::string to_string(ParetoReport::Outcome o);

struct ParetoOptions {
  AnalysisOptions analysis;
  /// Whether the value set is assumed nonempty; when false the candidate
  /// heuristic still runs but the verdict is at most inconclusive.
  bool assume_values_nonempty = true;
  int cross_check_starts = 8;
};

ParetoReport check_weak_value_at_infinity(const VectorProblem& vp, const Vec& ybar,
                                          const SamplingPlan& plan,
                                          const ParetoOptions& options = {});

SolutionSetVerdict weak_solution_set_check(const VectorProblem& vp, const SamplingPlan& plan,
                                           const ParetoOptions& options = {});

SolutionSetVerdict pareto_solution_set_check(const VectorProblem& vp, const SamplingPlan& plan,
                                             const ParetoOptions& options = {});

}  // namespace atinf
