#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "lcoco/benchmark.hpp"
#include "lcoco/io.hpp"

namespace lcoco {

enum ExitCode : int {
  kExitOk = 0,
  kExitBoundFailure = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
};

struct SweepPoint {
  std::optional<double> dist, drift_f, drift_g, alpha, g_level;
};

struct ExperimentConfig {
  SequenceSpec spec;
  StartSpec start;
  std::optional<std::string> problem_file;
  std::vector<SweepPoint> sweep{SweepPoint{}};
  int replications = 1;
  bool forced_optimal = false;
  bool save_sequences = false;
  std::string out_dir = "out";
  GeometryTolerances geometry{};
  CheckTolerances checks{};
  int jobs = 1;
  Json echo;
};

namespace detail {

inline EigenRange range_from_json(const Json& j, const char* what) {
  const Vector v = vector_from_json(j, what);
  if (v.size() != 2) throw SchemaError(std::string(what) + ": expected [lo, hi]");
  return {v(0), v(1)};
}

inline std::vector<double> list_from_json(const Json& j, const char* what) {
  const Vector v = vector_from_json(j, what);
  return {v.data(), v.data() + v.size()};
}

inline int int_from_json(const Json& j, const char* what) {
  if (!j.is_number_integer()) throw SchemaError(std::string(what) + ": expected an integer");
  return j.get<int>();
}

}  // namespace detail

/// Parses and validates an experiment document. Unknown keys anywhere are rejected.
inline ExperimentConfig parse_config(const Json& j, const std::filesystem::path& base_dir = {}) {
  require_keys(j,
               {"dim", "horizon", "ambient", "drift_f", "drift_g", "g_level", "eig_f", "eig_g",
                "hessian_f", "hessian_g", "center_f", "center_g", "center_gauge", "dist", "alpha",
                "seed", "replications", "start", "problem_file", "sweep", "tolerances",
                "forced_optimal", "output", "jobs"},
               "config");
  ExperimentConfig c;
  c.echo = j;
  auto& s = c.spec;
  if (j.contains("dim")) s.dim = detail::int_from_json(j["dim"], "dim");
  if (j.contains("horizon")) s.horizon = detail::int_from_json(j["horizon"], "horizon");
  if (j.contains("ambient")) {
    const Json& a = j["ambient"];
    require_keys(a, {"center", "radius", "semi_axes"}, "ambient");
    if (a.contains("center")) s.ambient_center = vector_from_json(a["center"], "ambient.center");
    if (a.contains("radius")) s.ambient_radius = number(a["radius"], "ambient.radius");
    if (a.contains("semi_axes")) s.ambient_semi_axes = vector_from_json(a["semi_axes"], "ambient.semi_axes");
  }
  if (j.contains("drift_f")) s.drift_f = number(j["drift_f"], "drift_f");
  if (j.contains("drift_g")) s.drift_g = number(j["drift_g"], "drift_g");
  if (j.contains("g_level")) s.g_level = number(j["g_level"], "g_level");
  if (j.contains("eig_f")) s.eig_f = detail::range_from_json(j["eig_f"], "eig_f");
  if (j.contains("eig_g")) s.eig_g = detail::range_from_json(j["eig_g"], "eig_g");
  if (j.contains("hessian_f")) s.hessian_f = matrix_from_json(j["hessian_f"], "hessian_f");
  if (j.contains("hessian_g")) s.hessian_g = matrix_from_json(j["hessian_g"], "hessian_g");
  if (j.contains("center_f")) s.center_f = vector_from_json(j["center_f"], "center_f");
  if (j.contains("center_g")) s.center_g = vector_from_json(j["center_g"], "center_g");
  if (j.contains("center_gauge")) s.center_gauge = number(j["center_gauge"], "center_gauge");
  if (j.contains("dist")) s.dist = number(j["dist"], "dist");
  if (j.contains("alpha")) s.alpha = number(j["alpha"], "alpha");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw SchemaError("seed: expected a nonnegative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("replications")) c.replications = detail::int_from_json(j["replications"], "replications");
  if (c.replications < 1) throw SchemaError("replications must be >= 1");
  if (j.contains("start")) {
    const Json& st = j["start"];
    if (st.is_string() && st == "center") c.start.kind = StartSpec::Kind::Center;
    else if (st.is_string() && st == "infeasible") c.start.kind = StartSpec::Kind::Infeasible;
    else if (st.is_array()) {
      c.start.kind = StartSpec::Kind::Explicit;
      c.start.point = vector_from_json(st, "start");
    } else {
      throw SchemaError("start: expected \"center\", \"infeasible\" or a coordinate array");
    }
  }
  if (j.contains("problem_file")) {
    if (!j["problem_file"].is_string()) throw SchemaError("problem_file: expected a path");
    std::filesystem::path p = j["problem_file"].get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    c.problem_file = p.string();
  }
  if (j.contains("sweep")) {
    const Json& sw = j["sweep"];
    require_keys(sw, {"dist", "drift_f", "drift_g", "alpha", "g_level"}, "sweep");
    std::vector<SweepPoint> pts{SweepPoint{}};
    auto expand = [&](const char* key, std::optional<double> SweepPoint::*field) {
      if (!sw.contains(key)) return;
      std::vector<SweepPoint> next;
      for (const auto& p : pts) {
        for (double v : detail::list_from_json(sw[key], key)) {
          SweepPoint q = p;
          q.*field = v;
          next.push_back(q);
        }
      }
      pts = std::move(next);
    };
    expand("dist", &SweepPoint::dist);
    expand("drift_f", &SweepPoint::drift_f);
    expand("drift_g", &SweepPoint::drift_g);
    expand("alpha", &SweepPoint::alpha);
    expand("g_level", &SweepPoint::g_level);
    c.sweep = std::move(pts);
  }
  if (j.contains("tolerances")) {
    const Json& t = j["tolerances"];
    require_keys(t, {"ratio", "tracking", "cumulative", "ordering", "dykstra_move", "dykstra_max_iter",
                     "min_ball_move", "feasibility"}, "tolerances");
    if (t.contains("ratio")) c.checks.ratio = number(t["ratio"], "tolerances.ratio");
    if (t.contains("tracking")) c.checks.tracking = number(t["tracking"], "tolerances.tracking");
    if (t.contains("cumulative")) c.checks.cumulative = number(t["cumulative"], "tolerances.cumulative");
    if (t.contains("ordering")) c.checks.ordering = number(t["ordering"], "tolerances.ordering");
    if (t.contains("dykstra_move")) c.geometry.dykstra_move = number(t["dykstra_move"], "tolerances.dykstra_move");
    if (t.contains("dykstra_max_iter")) {
      c.geometry.dykstra_max_iter = detail::int_from_json(t["dykstra_max_iter"], "tolerances.dykstra_max_iter");
    }
    if (t.contains("min_ball_move")) c.geometry.min_ball_move = number(t["min_ball_move"], "tolerances.min_ball_move");
    if (t.contains("feasibility")) c.geometry.feasibility = number(t["feasibility"], "tolerances.feasibility");
  }
  if (j.contains("forced_optimal")) {
    if (!j["forced_optimal"].is_boolean()) throw SchemaError("forced_optimal: expected a boolean");
    c.forced_optimal = j["forced_optimal"].get<bool>();
  }
  if (j.contains("output")) {
    const Json& o = j["output"];
    require_keys(o, {"dir", "save_sequences"}, "output");
    if (o.contains("dir")) {
      if (!o["dir"].is_string()) throw SchemaError("output.dir: expected a path");
      c.out_dir = o["dir"].get<std::string>();
    }
    if (o.contains("save_sequences")) {
      if (!o["save_sequences"].is_boolean()) throw SchemaError("output.save_sequences: expected a boolean");
      c.save_sequences = o["save_sequences"].get<bool>();
    }
  }
  if (j.contains("jobs")) c.jobs = detail::int_from_json(j["jobs"], "jobs");
  if (c.jobs < 1) throw SchemaError("jobs must be >= 1");
  // Validate every sweep point's spec up front so config errors surface before any run.
  for (const auto& p : c.sweep) {
    SequenceSpec t = s;
    if (p.dist) t.dist = *p.dist;
    if (p.drift_f) t.drift_f = *p.drift_f;
    if (p.drift_g) t.drift_g = *p.drift_g;
    if (p.alpha) t.alpha = *p.alpha;
    if (p.g_level) t.g_level = *p.g_level;
    t.validate();
  }
  return c;
}

struct RunPlan {
  int index = 0;
  int sweep_index = 0;
  int replication = 0;
  SequenceSpec spec;
};

inline std::vector<RunPlan> plan_runs(const ExperimentConfig& c) {
  std::vector<RunPlan> plans;
  int index = 0;
  for (std::size_t si = 0; si < c.sweep.size(); ++si) {
    for (int r = 0; r < c.replications; ++r) {
      RunPlan p;
      p.index = index++;
      p.sweep_index = static_cast<int>(si);
      p.replication = r;
      p.spec = c.spec;
      const SweepPoint& sp = c.sweep[si];
      if (sp.dist) p.spec.dist = *sp.dist;
      if (sp.drift_f) p.spec.drift_f = *sp.drift_f;
      if (sp.drift_g) p.spec.drift_g = *sp.drift_g;
      if (sp.alpha) p.spec.alpha = *sp.alpha;
      if (sp.g_level) p.spec.g_level = *sp.g_level;
      // Sweep points share seeds, so only the swept parameter changes between them.
      p.spec.seed = c.spec.seed + static_cast<std::uint64_t>(r);
      plans.push_back(std::move(p));
    }
  }
  return plans;
}

inline ProblemSequence build_sequence(const ExperimentConfig& c, const RunPlan& plan) {
  if (c.problem_file) {
    ProblemSequence p = sequence_from_json(Json::parse(read_file(*c.problem_file)));
    p.dist = plan.spec.dist;
    p.alpha = plan.spec.alpha;
    return p;
  }
  ProblemSequence p;
  p.rounds = generate_sequence(plan.spec);
  p.ambient = plan.spec.ambient();
  p.dist = plan.spec.dist;
  p.alpha = plan.spec.alpha;
  return p;
}

struct RunOutput {
  std::string csv;
  Json summary;
  bool pass = false;
};

inline RunOutput execute_plan(const ExperimentConfig& c, const RunPlan& plan, const ProblemSequence& seq) {
  RunOptions opt;
  opt.start = c.start;
  opt.forced_optimal = c.forced_optimal;
  opt.geometry = c.geometry;
  opt.checks = c.checks;
  const RunResult run = run_sequence(seq.rounds, seq.ambient, seq.dist, seq.alpha, opt);
  RunOutput out;
  out.csv = run_csv(run, seq.rounds);
  out.summary = run_summary(run);
  const SweepPoint& sp = c.sweep[static_cast<std::size_t>(plan.sweep_index)];
  Json point = Json::object();
  if (sp.dist) point["dist"] = *sp.dist;
  if (sp.drift_f) point["drift_f"] = *sp.drift_f;
  if (sp.drift_g) point["drift_g"] = *sp.drift_g;
  if (sp.alpha) point["alpha"] = *sp.alpha;
  if (sp.g_level) point["g_level"] = *sp.g_level;
  out.summary["run"] = plan.index;
  out.summary["sweep_point"] = point;
  out.summary["replication"] = plan.replication;
  out.summary["seed"] = plan.spec.seed;
  out.summary["sequence_digest"] = git_blob_digest(serialize(seq));
  out.pass = run.checks.all();
  return out;
}

inline std::string run_file_name(int index) { return "run_" + std::to_string(index) + ".csv"; }

/// Runs every (sweep point x replication) and writes one CSV per run plus summary.json.
/// Returns 0 when all bound checks pass, 1 on a bound failure, 2 for configuration
/// or output errors and 3 when a run fails numerically.
inline int run_experiment(ExperimentConfig c, std::ostream& log = std::cerr) {
  namespace fs = std::filesystem;
  try {
    fs::create_directories(c.out_dir);
  } catch (const fs::filesystem_error& e) {
    log << "error: cannot create output directory: " << e.what() << '\n';
    return kExitConfig;
  }
  const std::vector<RunPlan> plans = plan_runs(c);
  std::vector<RunOutput> outputs(plans.size());
  std::vector<std::string> sequences(plans.size());
  std::vector<std::string> errors(plans.size());
  std::vector<int> codes(plans.size(), kExitOk);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < plans.size(); i = next++) {
      try {
        const ProblemSequence seq = build_sequence(c, plans[i]);
        outputs[i] = execute_plan(c, plans[i], seq);
        if (c.save_sequences) sequences[i] = serialize(seq);
      } catch (const NumericalError& e) {
        codes[i] = kExitNumerical;
        errors[i] = e.what();
      } catch (const DegenerateInputError& e) {
        codes[i] = kExitNumerical;
        errors[i] = e.what();
      } catch (const InfeasibleSetError& e) {
        codes[i] = kExitNumerical;
        errors[i] = e.what();
      } catch (const std::invalid_argument& e) {
        codes[i] = kExitConfig;
        errors[i] = e.what();
      } catch (const Json::exception& e) {
        codes[i] = kExitConfig;
        errors[i] = e.what();
      } catch (const std::exception& e) {
        codes[i] = kExitNumerical;
        errors[i] = e.what();
      }
    }
  };
  const int jobs = std::min<int>(c.jobs, static_cast<int>(plans.size()));
  std::vector<std::thread> pool;
  for (int k = 1; k < jobs; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  int code = kExitOk;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    if (codes[i] != kExitOk) {
      log << "run " << plans[i].index << ": " << errors[i] << '\n';
      code = std::max(code, codes[i]);
    }
  }
  if (code == kExitConfig) return kExitConfig;

  Json runs = Json::array();
  bool all_pass = true;
  try {
    for (std::size_t i = 0; i < plans.size(); ++i) {
      if (codes[i] != kExitOk) continue;
      const std::string name = run_file_name(plans[i].index);
      write_file((fs::path(c.out_dir) / name).string(), outputs[i].csv);
      if (c.save_sequences) {
        write_file((fs::path(c.out_dir) / ("sequence_" + std::to_string(plans[i].index) + ".json")).string(),
                   sequences[i]);
      }
      outputs[i].summary["csv"] = name;
      runs.push_back(outputs[i].summary);
      all_pass = all_pass && outputs[i].pass;
      if (!outputs[i].pass) log << "run " << plans[i].index << ": bound check failed\n";
    }
    Json summary{{"config", c.echo}, {"runs", runs}, {"all_checks_pass", all_pass && code == kExitOk}};
    write_file((fs::path(c.out_dir) / "summary.json").string(), summary.dump(2) + "\n");
  } catch (const std::ios_base::failure& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (code != kExitOk) return code;
  return all_pass ? kExitOk : kExitBoundFailure;
}

}  // namespace lcoco
