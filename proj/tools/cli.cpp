#include "cli.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "atinf/document.hpp"
#include "atinf/errors.hpp"
#include "atinf/report.hpp"

namespace atinf::cli {

namespace {

using nlohmann::json;

struct Common {
  std::string path;
  std::string out;
  int workers = 1;
  PlanOverrides plan;
};

struct Options {
  Common common;
  std::vector<double> x0;
  int budget = DescentOptions{}.budget;
  std::string csv;
  std::vector<double> ybar;
};

void add_common(CLI::App& sub, Common& c) {
  sub.add_option("document", c.path, "Problem document (JSON)")->required();
  sub.add_option("--out", c.out, "Report file; standard output when omitted");
  sub.add_option("--seed", c.plan.seed, "RNG seed");
  sub.add_option("--directions", c.plan.directions, "Number of sampling directions");
  sub.add_option("--radii-base", c.plan.radius_base, "First sampling radius");
  sub.add_option("--radii-ratio", c.plan.radius_ratio, "Ratio between radii");
  sub.add_option("--radii-steps", c.plan.radius_steps, "Number of radius steps");
  sub.add_option("--lp-tol", c.plan.lp_tol, "Membership tolerance");
  sub.add_option("--escape-floor", c.plan.escape_floor, "Radius treated as far out");
  sub.add_option("--workers", c.workers, "Worker threads")->check(CLI::Range(1, 256));
}

// Writes to a temporary sibling, then renames over the target.
void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw SchemaError("cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw SchemaError("cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw SchemaError("cannot write " + path + ": " + ec.message());
  }
}

void emit(const Common& c, const json& report, std::ostream& out) {
  const std::string text = dump_report(report);
  if (c.out.empty())
    out << text;
  else
    write_atomic(c.out, text);
}

json header(const char* command, const ProblemDocument& doc, const SamplingPlan& plan) {
  return json{{"tool", json{{"name", "atinf"}, {"version", version()}}},
              {"schema_version", kSchemaVersion},
              {"command", command},
              {"plan", plan_to_json(plan)},
              {"problem",
               json{{"dimension", doc.dimension},
                    {"objectives", doc.objectives},
                    {"constraints", doc.constraints},
                    {"ground", ground_to_json(doc.ground)}}}};
}

Vec to_vec(const std::vector<double>& xs) {
  Vec v(int(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) v[int(i)] = xs[i];
  return v;
}

SamplingPlan plan_for(const ProblemDocument& doc, const Common& c) {
  SamplingPlan plan = resolve_plan(doc, c.plan);
  plan.workers = c.workers;
  return plan;
}

int cmd_analyze(const Options& o, std::ostream& out) {
  const ProblemDocument doc = load_document(o.common.path);
  const SamplingPlan plan = plan_for(doc, o.common);
  AnalysisOptions ao;
  ao.descent.seed = plan.seed;
  const KktReport r = kkt_at_infinity(doc.minimax(), plan, ao);
  const int code = r.kkt_verdict == Verdict::HypothesisUnmet ? kHypothesisUnmet : kCompleted;
  json report = header("analyze", doc, plan);
  report["result"] = to_json(r);
  report["exit_code"] = code;
  emit(o.common, report, out);
  return code;
}

int cmd_descent(const Options& o, std::ostream& out) {
  const ProblemDocument doc = load_document(o.common.path);
  const SamplingPlan plan = plan_for(doc, o.common);
  const MinimaxProblem p = doc.minimax();
  Vec x0 = Vec::Zero(doc.dimension);
  if (!o.x0.empty()) {
    if (int(o.x0.size()) != doc.dimension)
      throw SchemaError("--x0 needs " + std::to_string(doc.dimension) + " entries");
    x0 = to_vec(o.x0);
  }
  DescentOptions d;
  d.budget = o.budget;
  d.escape_floor = plan.escape_floor;
  d.lp_tol = plan.lp_tol;
  d.seed = plan.seed;

  json report = header("descent", doc, plan);
  report["x0"] = to_json(x0);
  report["budget"] = o.budget;
  Trajectory t;
  try {
    t = minimize(p, x0, d);
  } catch (const DomainError& e) {
    throw SchemaError(std::string("start point: ") + e.what());
  } catch (const PreconditionError&) {
    throw;
  } catch (const Error& e) {
    report["error"] = e.what();
    report["exit_code"] = int(kHypothesisUnmet);
    emit(o.common, report, out);
    return kHypothesisUnmet;
  }
  report["trajectory"] = to_json(t);
  if (t.start_projected) report["note"] = "start point projected onto the ground set";
  report["escape_evidence"] =
      t.status == Trajectory::Status::Escaped ? to_json(escape_evidence(t, plan)) : json(nullptr);
  report["exit_code"] = int(kCompleted);
  if (!o.csv.empty()) {
    std::ostringstream csv;
    write_trajectory_csv(csv, t);
    write_atomic(o.csv, csv.str());
  }
  emit(o.common, report, out);
  return kCompleted;
}

int cmd_pareto(const Options& o, std::ostream& out) {
  const ProblemDocument doc = load_document(o.common.path);
  const SamplingPlan plan = plan_for(doc, o.common);
  const VectorProblem vp = doc.vector();
  if (int(o.ybar.size()) != int(vp.objectives.size()))
    throw SchemaError("--ybar needs " + std::to_string(vp.objectives.size()) + " entries");
  ParetoOptions po;
  po.analysis.descent.seed = plan.seed;
  const ParetoReport r = check_weak_value_at_infinity(vp, to_vec(o.ybar), plan, po);
  const int code =
      r.outcome == ParetoReport::Outcome::NotApplicable ? kHypothesisUnmet : kCompleted;
  json report = header("pareto", doc, plan);
  report["result"] = to_json(r);
  report["exit_code"] = code;
  emit(o.common, report, out);
  return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Asymptotic optimality analysis for minimax and vector problems", "atinf"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);
  Options o;

  CLI::App* analyze = app.add_subcommand("analyze", "CQ, KKT and sufficiency tests at infinity");
  add_common(*analyze, o.common);

  CLI::App* descent = app.add_subcommand("descent", "Minimizing sequence with escape detection");
  add_common(*descent, o.common);
  descent->add_option("--x0", o.x0, "Start point, comma separated")->delimiter(',');
  descent->add_option("--budget", o.budget, "Maximum iterations")->check(CLI::NonNegativeNumber);
  descent->add_option("--csv", o.csv, "Trajectory CSV file");

  CLI::App* pareto = app.add_subcommand("pareto", "Weak Pareto value check at infinity");
  add_common(*pareto, o.common);
  pareto->add_option("--ybar", o.ybar, "Candidate value, comma separated")
      ->delimiter(',')
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kCompleted : kInputError;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(o, out);
    if (descent->parsed()) return cmd_descent(o, out);
    return cmd_pareto(o, out);
  } catch (const SchemaError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const DimensionError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const PreconditionError& e) {
    err << "hypothesis unmet: " << e.what() << '\n';
    return kHypothesisUnmet;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kHypothesisUnmet;
  }
}

}  // namespace atinf::cli
