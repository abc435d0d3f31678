#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "atinf/descent.hpp"
#include "atinf/kkt.hpp"
#include "atinf/pareto.hpp"

namespace atinf {

/// Library version embedded in every report.
const char* version();

// JSON views of the analysis results. Non-finite numbers are written as the
// strings "inf", "-inf" and "nan".
nlohmann::json to_json(const Vec& v);
nlohmann::json to_json(const VPolytope& p);
nlohmann::json to_json(const VCone& c);
nlohmann::json to_json(const MembershipCertificate& c);
nlohmann::json to_json(const AsymptoticSet& s);
nlohmann::json to_json(const EkelandWitness& w);
nlohmann::json to_json(const Trajectory& t);
nlohmann::json to_json(const EscapeEvidence& e);
nlohmann::json to_json(const CqVerdict& v);
nlohmann::json to_json(const StandingAssumptions& a);
nlohmann::json to_json(const SufficiencyVerdict& s);
nlohmann::json to_json(const KktReport& r);
nlohmann::json to_json(const SolutionSetVerdict& s);
nlohmann::json to_json(const ParetoReport& r);

/// Pretty-printed with sorted keys and a trailing newline.
std::string dump_report(const nlohmann::json& report);

}  // namespace atinf
