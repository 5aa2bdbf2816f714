#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcoco/algorithm.hpp"
#include "lcoco/benchmark.hpp"
#include "lcoco/digest.hpp"
#include "lcoco/errors.hpp"
#include "lcoco/model.hpp"

namespace lcoco {

using Json = nlohmann::json;

/// Malformed or schema-violating input document.
class SchemaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline Json to_json(const Vector& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

inline Json to_json(const Matrix& m) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) j.push_back(to_json(Vector(m.row(i).transpose())));
  return j;
}

inline Vector vector_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw SchemaError(std::string(what) + ": expected a nonempty array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw SchemaError(std::string(what) + ": expected numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Matrix matrix_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw SchemaError(std::string(what) + ": expected row arrays");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Matrix m;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Vector r = vector_from_json(j[static_cast<std::size_t>(i)], what);
    if (i == 0) m.resize(rows, r.size());
    if (r.size() != m.cols()) throw SchemaError(std::string(what) + ": ragged rows");
    m.row(i) = r.transpose();
  }
  return m;
}

inline void require_keys(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw SchemaError(std::string(what) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw SchemaError(std::string(what) + ": unknown key '" + key + "'");
  }
}

inline const Json& require(const Json& j, const char* key, const char* what) {
  if (!j.contains(key)) throw SchemaError(std::string(what) + ": missing key '" + key + "'");
  return j.at(key);
}

inline double number(const Json& j, const char* what) {
  if (!j.is_number()) throw SchemaError(std::string(what) + ": expected a number");
  return j.get<double>();
}

inline Json to_json(const QuadraticFunction& h) {
  return Json{{"H", to_json(h.hessian())}, {"center", to_json(h.center())}, {"offset", h.offset()}};
}

inline QuadraticFunction quadratic_from_json(const Json& j) {
  require_keys(j, {"H", "center", "offset"}, "quadratic");
  return QuadraticFunction(matrix_from_json(require(j, "H", "quadratic"), "H"),
                           vector_from_json(require(j, "center", "quadratic"), "center"),
                           j.contains("offset") ? number(j.at("offset"), "offset") : 0.0);
}

inline Json to_json(const AmbientSet& a) {
  Json j{{"center", to_json(a.center())}};
  if (a.is_ball()) j["radius"] = a.radius();
  else j["semi_axes"] = to_json(a.semi_axes());
  return j;
}

inline AmbientSet ambient_from_json(const Json& j) {
  require_keys(j, {"center", "radius", "semi_axes"}, "ambient");
  const Point c = vector_from_json(require(j, "center", "ambient"), "ambient center");
  if (j.contains("semi_axes") == j.contains("radius")) {
    throw SchemaError("ambient: give exactly one of 'radius' and 'semi_axes'");
  }
  if (j.contains("radius")) return AmbientSet::ball(c, number(j.at("radius"), "radius"));
  return AmbientSet::ellipsoid(c, vector_from_json(j.at("semi_axes"), "semi_axes"));
}

struct ProblemSequence {
  std::vector<RoundPair> rounds;
  AmbientSet ambient = AmbientSet::ball(Point::Zero(1), 1.0);
  double dist = 0.2;
  double alpha = 0.5;
};

inline Json to_json(const ProblemSequence& p) {
  Json rounds = Json::array();
  for (const auto& r : p.rounds) rounds.push_back(Json{{"f", to_json(r.f)}, {"g", to_json(r.g)}});
  return Json{{"dim", p.ambient.dim()},
              {"rounds", std::move(rounds)},
              {"ambient", to_json(p.ambient)},
              {"dist", p.dist},
              {"alpha", p.alpha}};
}

inline ProblemSequence sequence_from_json(const Json& j) {
  require_keys(j, {"dim", "rounds", "ambient", "dist", "alpha"}, "sequence");
  const Json& dim_j = require(j, "dim", "sequence");
  if (!dim_j.is_number_integer() || dim_j.get<long long>() < 1) throw SchemaError("sequence: dim must be a positive integer");
  const auto dim = static_cast<Eigen::Index>(dim_j.get<long long>());
  ProblemSequence p;
  p.ambient = ambient_from_json(require(j, "ambient", "sequence"));
  p.dist = number(require(j, "dist", "sequence"), "dist");
  p.alpha = j.contains("alpha") ? number(j.at("alpha"), "alpha") : 0.5;
  const Json& rounds = require(j, "rounds", "sequence");
  if (!rounds.is_array() || rounds.empty()) throw SchemaError("sequence: rounds must be a nonempty array");
  for (const Json& r : rounds) {
    require_keys(r, {"f", "g"}, "round");
    p.rounds.emplace_back(quadratic_from_json(require(r, "f", "round")),
                          quadratic_from_json(require(r, "g", "round")));
    if (p.rounds.back().dim() != dim) throw StructuralError("sequence: round dimension differs from dim");
  }
  require_dim(dim, p.ambient.dim(), "sequence ambient");
  return p;
}

inline std::string serialize(const ProblemSequence& p) { return to_json(p).dump(); }

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_point(const Vector& v, char sep = ' ') {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += format_double(v(i));
  }
  return s;
}

/// kind|point|answer-digest triples joined by ';'.
inline std::string format_transcript(const std::vector<QueryRecord>& transcript) {
  std::string s;
  for (std::size_t i = 0; i < transcript.size(); ++i) {
    const auto& q = transcript[i];
    if (i) s += ';';
    s += to_string(q.kind);
    s += '|';
    s += format_point(q.point);
    s += '|';
    s += answer_digest(q.answer);
  }
  return s;
}

/// Per-round table: t, case, a_t, x_t*, g_t(a_t), f-gap, ratio, gradient points, transcript.
inline std::string run_csv(const RunResult& run, std::span<const RoundPair> rounds) {
  const auto n = run.actions.front().size();
  std::ostringstream out;
  out << "t,case";
  for (Eigen::Index i = 0; i < n; ++i) out << ",a_" << i;
  for (Eigen::Index i = 0; i < n; ++i) out << ",xstar_" << i;
  out << ",g_at,f_gap,ratio,grad_points,transcript\n";
  for (std::size_t t = 0; t < rounds.size(); ++t) {
    const Point& a = run.actions[t];
    const Point& xs = run.solutions[t].x_star;
    const bool has_rec = t < run.records.size();
    out << (t + 1) << ',' << (has_rec ? to_string(run.records[t].kase) : "Forced");
    out << ',' << format_point(a, ',') << ',' << format_point(xs, ',');
    out << ',' << format_double(rounds[t].g(a));
    out << ',' << format_double(rounds[t].f(a) - run.solutions[t].f_at_star);
    out << ',' << (run.metrics.ratios[t] ? format_double(*run.metrics.ratios[t]) : std::string());
    out << ',' << (has_rec ? run.records[t].gradient_points_used : 0);
    out << ',' << (has_rec ? format_transcript(run.records[t].transcript) : std::string());
    out << '\n';
  }
  return out.str();
}

inline Json to_json(const ConstantsBundle& k) {
  return Json{{"nu_f", k.nu_f}, {"nu_g", k.nu_g}, {"L_f", k.L_f},   {"L_g", k.L_g},
              {"lip_f", k.lip_f}, {"lip_g", k.lip_g}, {"G", k.G}, {"D", k.D},
              {"dist", k.dist}, {"alpha", k.alpha}};
}

inline Json to_json(const ContractionConstants& c) {
  return Json{{"c2", c.c2}, {"c3", c.c3}, {"c4", c.c4}, {"c5", c.c5}, {"c", c.c}};
}

inline Json to_json(const BoundChecks& b) {
  return Json{{"per_step_contraction", b.per_step}, {"tracking_sum", b.tracking},
              {"regret_bound", b.regret},           {"penalty_bound", b.penalty},
              {"penalty_ordering", b.ordering},     {"gradient_budget", b.gradient_budget},
              {"information_firewall", b.firewall}, {"worst_round", b.worst_round},
              {"tracking_bound_value", b.tracking_bound},
              {"regret_bound_value", b.regret_bound},
              {"penalty_bound_value", b.penalty_bound},
              {"all_pass", b.all()}};
}

inline Json run_summary(const RunResult& run) {
  Json hist = Json::object();
  for (RoundCase c : kAllRoundCases) {
    const auto it = run.histogram.find(c);
    hist[to_string(c)] = it == run.histogram.end() ? 0 : it->second;
  }
  int clamped = 0;
  int fallback = 0;
  int repaired = 0;
  for (const auto& r : run.records) {
    clamped += r.clamped;
    fallback += r.window_fallback;
    repaired += r.start_repaired;
  }
  const auto& m = run.metrics;
  return Json{{"constants", to_json(run.constants)},
              {"contraction", to_json(run.contraction)},
              {"metrics",
               {{"R_d", m.R_d},
                {"P_g", m.P_g},
                {"P_g_prime", m.P_g_prime},
                {"V", m.V},
                {"tracking_sum", m.tracking},
                {"c_empirical", m.c_empirical},
                {"x1_gap", (run.solutions.front().x_star - run.actions.front()).norm()}}},
              {"case_histogram", hist},
              {"events", {{"clamped", clamped}, {"window_fallback", fallback}, {"start_repaired", repaired}}},
              {"evaluations", {{"inside_oracle", run.evaluations_inside},
                               {"outside_oracle", run.evaluations_outside}}},
              {"checks", to_json(run.checks)}};
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::ios_base::failure("cannot open " + path + " for writing");
  f << content;
  if (!f) throw std::ios_base::failure("write failed for " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw SchemaError("cannot read " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace lcoco
