#include "atinf/document.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "atinf/errors.hpp"

namespace atinf {

namespace {

using nlohmann::json;

void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.contains(it.key()))
      throw SchemaError("unknown field '" + it.key() + "' in " + where);
}

const json& need(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw SchemaError(std::string("missing field '") + key + "' in " + where);
  return obj.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw SchemaError(where + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw SchemaError(where + " must be finite");
  return x;
}

// Box bounds accept numbers, null or the strings "inf" and "-inf".
double bound(const json& v, double missing, const std::string& where) {
  if (v.is_null()) return missing;
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw SchemaError(where + " must be a number, null, \"inf\" or \"-inf\"");
  }
  return number(v, where);
}

Vec vector_of(const json& v, int dim, const std::string& where,
              double missing = std::numeric_limits<double>::quiet_NaN()) {
  if (!v.is_array() || int(v.size()) != dim)
    throw SchemaError(where + " must be an array of " + std::to_string(dim) + " entries");
  Vec out(dim);
  for (int i = 0; i < dim; ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    out[i] = std::isnan(missing) ? number(v[i], at) : bound(v[i], missing, at);
  }
  return out;
}

std::vector<std::string> strings(const json& v, const std::string& where) {
  if (!v.is_array()) throw SchemaError(where + " must be an array of strings");
  std::vector<std::string> out;
  for (const json& s : v) {
    if (!s.is_string()) throw SchemaError(where + " must contain only strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

GroundSet parse_ground(const json& g, int dim) {
  if (!g.is_object()) throw SchemaError("ground must be an object");
  const json& kind = need(g, "kind", "ground");
  if (!kind.is_string()) throw SchemaError("ground.kind must be a string");
  const auto k = kind.get<std::string>();
  try {
    if (k == "full") {
      only_keys(g, {"kind"}, "ground");
      return GroundSet::full_space(dim);
    }
    if (k == "box") {
      only_keys(g, {"kind", "lower", "upper"}, "ground");
      const double inf = std::numeric_limits<double>::infinity();
      Vec lo = g.contains("lower") ? vector_of(g["lower"], dim, "ground.lower", -inf)
                                   : Vec::Constant(dim, -inf);
      Vec hi = g.contains("upper") ? vector_of(g["upper"], dim, "ground.upper", inf)
                                   : Vec::Constant(dim, inf);
      return GroundSet::box(std::move(lo), std::move(hi));
    }
    if (k == "polyhedron") {
      only_keys(g, {"kind", "A", "b"}, "ground");
      const json& a = need(g, "A", "ground");
      const json& b = need(g, "b", "ground");
      if (!a.is_array() || a.empty()) throw SchemaError("ground.A must be a nonempty array of rows");
      Eigen::MatrixXd A(int(a.size()), dim);
      for (int r = 0; r < A.rows(); ++r)
        A.row(r) = vector_of(a[r], dim, "ground.A[" + std::to_string(r) + "]").transpose();
      return GroundSet::polyhedron(std::move(A), vector_of(b, int(A.rows()), "ground.b"));
    }
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(std::string("ground: ") + e.what());
  }
  throw SchemaError("ground.kind must be \"full\", \"box\" or \"polyhedron\"");
}

void check_plan(const json& plan) {
  if (!plan.is_object()) throw SchemaError("plan must be an object");
  only_keys(plan,
            {"directions", "radius_base", "radius_ratio", "radius_steps", "cluster_tol",
             "escape_floor", "jitter", "lp_tol"},
            "plan");
  for (auto it = plan.begin(); it != plan.end(); ++it) {
    const std::string at = "plan." + it.key();
    number(it.value(), at);
    if ((it.key() == "directions" || it.key() == "radius_steps") &&
        !it.value().is_number_integer())
      throw SchemaError(at + " must be an integer");
  }
}

std::vector<Expr> parse_all(const std::vector<std::string>& texts, int dim, const char* what) {
  std::vector<Expr> out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    try {
      out.push_back(Expr::parse(texts[i], dim));
    } catch (const Error& e) {
      throw SchemaError(std::string(what) + "[" + std::to_string(i) + "]: " + e.what());
    }
  }
  return out;
}

}  // namespace

ProblemDocument parse_document(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw SchemaError("document must be a JSON object");
  only_keys(root, {"version", "dimension", "objectives", "constraints", "ground", "plan", "seed"},
            "document");

  ProblemDocument doc;
  const json& version = need(root, "version", "document");
  if (!version.is_string() || version.get<std::string>() != kSchemaVersion)
    throw SchemaError(std::string("unsupported version; expected \"") + kSchemaVersion + "\"");
  doc.version = version.get<std::string>();

  const json& dim = need(root, "dimension", "document");
  if (!dim.is_number_integer() || dim.get<long long>() < 1 || dim.get<long long>() > 64)
    throw SchemaError("dimension must be an integer between 1 and 64");
  doc.dimension = dim.get<int>();

  doc.objectives = strings(need(root, "objectives", "document"), "objectives");
  if (doc.objectives.empty()) throw SchemaError("objectives must not be empty");
  if (root.contains("constraints")) doc.constraints = strings(root["constraints"], "constraints");
  parse_all(doc.objectives, doc.dimension, "objectives");
  parse_all(doc.constraints, doc.dimension, "constraints");

  doc.ground = root.contains("ground") ? parse_ground(root["ground"], doc.dimension)
                                       : GroundSet::full_space(doc.dimension);
  if (root.contains("plan")) {
    check_plan(root["plan"]);
    doc.plan = root["plan"];
  }
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) throw SchemaError("seed must be a nonnegative integer");
    doc.seed = root["seed"].get<std::uint64_t>();
  }
  return doc;
}

ProblemDocument load_document(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_document(buf.str());
}

MinimaxProblem ProblemDocument::minimax() const {
  MinimaxProblem p;
  p.dim = dimension;
  p.objectives = parse_all(objectives, dimension, "objectives");
  p.constraints = parse_all(constraints, dimension, "constraints");
  p.ground = ground;
  return p;
}

VectorProblem ProblemDocument::vector() const {
  if (objectives.size() < 2) throw SchemaError("a vector problem needs at least two objectives");
  VectorProblem v;
  v.dim = dimension;
  v.objectives = parse_all(objectives, dimension, "objectives");
  v.constraints = parse_all(constraints, dimension, "constraints");
  v.ground = ground;
  return v;
}

SamplingPlan resolve_plan(const ProblemDocument& doc, const PlanOverrides& flags) {
  const std::uint64_t seed = flags.seed.value_or(doc.seed.value_or(0));
  const int n = doc.dimension;
  int count = std::max(2 * n, 16);
  if (doc.plan.contains("directions")) count = doc.plan["directions"].get<int>();
  if (flags.directions) count = *flags.directions;
  if (count < 2 * n) throw SchemaError("directions must be at least twice the dimension");

  SamplingPlan plan = SamplingPlan::with_directions(n, count, seed);
  auto pick = [&](const char* key, const auto& flag, auto& field) {
    using T = std::decay_t<decltype(field)>;
    if (doc.plan.contains(key)) field = doc.plan[key].template get<T>();
    if (flag) field = *flag;
  };
  pick("radius_base", flags.radius_base, plan.radius_base);
  pick("radius_ratio", flags.radius_ratio, plan.radius_ratio);
  pick("radius_steps", flags.radius_steps, plan.radius_steps);
  pick("cluster_tol", flags.cluster_tol, plan.cluster_tol);
  pick("escape_floor", flags.escape_floor, plan.escape_floor);
  pick("jitter", flags.jitter, plan.jitter);
  pick("lp_tol", flags.lp_tol, plan.lp_tol);
  try {
    plan.validate();
  } catch (const Error& e) {
    throw SchemaError(std::string("plan: ") + e.what());
  }
  return plan;
}

nlohmann::json plan_to_json(const SamplingPlan& plan) {
  json dirs = json::array();
  for (const Vec& d : plan.directions) dirs.push_back(std::vector<double>(d.begin(), d.end()));
  return json{{"directions", dirs},          {"radius_base", plan.radius_base},
              {"radius_ratio", plan.radius_ratio}, {"radius_steps", plan.radius_steps},
              {"seed", plan.seed},           {"cluster_tol", plan.cluster_tol},
              {"escape_floor", plan.escape_floor}, {"jitter", plan.jitter},
              {"lp_tol", plan.lp_tol}};
}

nlohmann::json ground_to_json(const GroundSet& ground) {
  auto bound_json = [](double v) -> json {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
  };
  switch (ground.kind()) {
    case GroundSet::Kind::FullSpace:
      return json{{"kind", "full"}};
    case GroundSet::Kind::Box: {
      json lo = json::array(), hi = json::array();
      for (int i = 0; i < ground.dim(); ++i) {
        lo.push_back(bound_json(ground.lower()[i]));
        hi.push_back(bound_json(ground.upper()[i]));
      }
      return json{{"kind", "box"}, {"lower", lo}, {"upper", hi}};
    }
    case GroundSet::Kind::Polyhedron: {
      json A = json::array();
      for (int r = 0; r < ground.A().rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < ground.A().cols(); ++c) row.push_back(ground.A()(r, c));
        A.push_back(row);
      }
      const Vec& b = ground.b();
      return json{{"kind", "polyhedron"}, {"A", A}, {"b", std::vector<double>(b.begin(), b.end())}};
    }
  }
  return json{};
}

}  // namespace atinf
