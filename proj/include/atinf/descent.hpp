#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "atinf/asymptotics.hpp"
#include "atinf/errors.hpp"
#include "atinf/problem.hpp"

namespace atinf {

struct DescentOptions {
  int budget = 2000;
  double escape_floor = 1e3;
  /// Lower estimate of the infimum; when set, trial steps start Polyak-style.
  std::optional<double> lower_estimate;
  double armijo = 1e-4;
  double lp_tol = 1e-8;
  /// Seeds the sampling in the Ekeland checks.
  std::uint64_t seed = 0;
};

/// Approximate stationary point produced by the Ekeland principle.
struct EkelandWitness {
  Vec x0;
  Vec x1;
  double eps = 0.0;
  double lambda = 0.0;
  /// Least-norm element of the subdifferential estimate of phi + indicator(F)
  /// at x1.
  Vec u;
  double u_norm = 0.0;
  bool value_decrease = false;  // phi(x1) <= phi(x0)
  bool within_lambda = false;   // |x1 - x0| <= lambda
  bool perturbed_min = false;   // phi(x1) <= phi(x) + (eps/lambda)|x - x1| on samples
  int samples_checked = 0;
};

/// Raised when a witness cannot be certified; carries the offending point.
class EkelandError : public Error {
 public:
  EkelandError(const std::string& what, EkelandWitness partial, std::optional<Vec> violation)
      : Error(what), partial_(std::move(partial)), violation_(std::move(violation)) {}
  const EkelandWitness& partial() const { return partial_; }
  const std::optional<Vec>& violation() const { return violation_; }

 private:
  EkelandWitness partial_;
  std::optional<Vec> violation_;
};

struct Trajectory {
  enum class Status { Converged, Escaped, BudgetExhausted, UnboundedBelow };

  std::vector<Vec> iterates;
  std::vector<double> values;  // phi at each iterate
  Status status = Status::BudgetExhausted;
  /// Converged: the final point. Escaped: the last iterate.
  Vec final_point;
  double final_value = 0.0;
  /// Escaped only: unit direction of the tail and the limit estimate of phi.
  Vec escape_direction;
  double limit_estimate = 0.0;
  std::vector<EkelandWitness> ekeland_witnesses;
  bool start_projected = false;
  double penalty_weight = 0.0;
  /// Lowest phi seen over feasible iterates.
  double record = 0.0;
};

std::string to_string(Trajectory::Status s);

/// Descent on max_i f_i over F. Steps follow the least-norm element of the
/// active-branch hull of the penalized objective, with projection onto the
/// ground set and backtracking.
Trajectory minimize(const MinimaxProblem& p, const Vec& x0,
                    const DescentOptions& options = {});

/// Independent trajectories from several starts, run on up to `workers`
/// threads. Results are ordered like `starts`.
std::vector<Trajectory> minimize_many(const MinimaxProblem& p, std::span<const Vec> starts,
                                      const DescentOptions& options, int workers = 1);

/// Point x1 with phi(x1) <= phi(x0), |x1 - x0| <= sqrt(eps) and
/// phi(x1) <= phi(x) + sqrt(eps) |x - x1| on 200 samples from the ball of
/// radius 10 sqrt(eps). Throws EkelandError if any check fails.
EkelandWitness ekeland_witness(const MinimaxProblem& p, const Vec& x0, double eps,
                               const DescentOptions& options = {});

struct EscapeEvidence {
  std::vector<Vec> tail;
  std::vector<double> tail_values;
  Vec direction;
  double limit_estimate = 0.0;
  std::vector<EkelandWitness> witnesses;
  double smallest_u_norm = 0.0;
};

/// Throws PreconditionError("trajectory not escaped") unless t escaped.
EscapeEvidence escape_evidence(const Trajectory& t, const SamplingPlan& plan);

/// Columns k, x_1..x_n, phi.
void write_trajectory_csv(std::ostream& out, const Trajectory& t);

}  // namespace atinf
