#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "atinf/asymptotics.hpp"
#include "atinf/problem.hpp"

namespace atinf {

inline constexpr const char* kSchemaVersion = "1";

/// A parsed problem file. Unknown fields are rejected.
struct ProblemDocument {
  std::string version;
  int dimension = 0;
  std::vector<std::string> objectives;
  std::vector<std::string> constraints;
  GroundSet ground;
  /// Sampling-plan fields given in the document, validated but unresolved.
  nlohmann::json plan = nlohmann::json::object();
  std::optional<std::uint64_t> seed;

  MinimaxProblem minimax() const;
  /// Throws SchemaError unless there are at least two objectives.
  VectorProblem vector() const;
};

/// Throws SchemaError (with the offending field) on any schema violation,
/// including expressions that fail to parse.
ProblemDocument parse_document(std::string_view json_text);
ProblemDocument load_document(const std::string& path);

/// Sampling-plan fields that a caller may override.
struct PlanOverrides {
  std::optional<int> directions;
  std::optional<double> radius_base;
  std::optional<double> radius_ratio;
  std::optional<int> radius_steps;
  std::optional<double> cluster_tol;
  std::optional<double> escape_floor;
  std::optional<double> jitter;
  std::optional<double> lp_tol;
  std::optional<std::uint64_t> seed;
};

/// Module defaults, then the document's plan and seed, then `flags`.
SamplingPlan resolve_plan(const ProblemDocument& doc, const PlanOverrides& flags);

/// Every plan field except the worker count.
nlohmann::json plan_to_json(const SamplingPlan& plan);
nlohmann::json ground_to_json(const GroundSet& ground);

}  // namespace atinf
