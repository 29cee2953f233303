#include "cyclecert/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "cyclecert/averaging.hpp"
#include "cyclecert/builtin_systems.hpp"

namespace cyclecert {
namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Formatting

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string point_str(const Vec2& v) {
  return "(" + num(v.x()) + ", " + num(v.y()) + ")";
}

std::string status_name(ProfileStatus status) {
  switch (status) {
    case ProfileStatus::TwoZeros: return "TwoZeros";
    case ProfileStatus::NoZeros: return "NoZeros";
    case ProfileStatus::MoreThanTwoZeros: return "MoreThanTwoZeros";
    case ProfileStatus::Degenerate: return "Degenerate";
  }
  return "Unknown";
}

std::string side_name(ApproachSide side) {
  return side == ApproachSide::inside ? "inside" : "outside";
}

// ---------------------------------------------------------------------------
// Config parsing

[[noreturn]] void bad_key(const std::string& path, const std::string& why) {
  throw ConfigError(path + ": " + why);
}

const json* find(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void check_keys(const json& obj, const std::string& path,
                const std::vector<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) ==
        allowed.end()) {
      bad_key(path.empty() ? item.key() : path + "." + item.key(),
              "unknown key");
    }
  }
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) bad_key(path, "expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) bad_key(path, "expected an integer");
  return j.get<int>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) bad_key(path, "expected a string");
  return j.get<std::string>();
}

Vec2 as_point(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() ||
      !j[1].is_number()) {
    bad_key(path, "expected a two-number array [x, y]");
  }
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

Rect as_rect(const json& j, const std::string& path) {
  if (!j.is_object()) bad_key(path, "expected {\"lo\": [x, y], \"hi\": [x, y]}");
  check_keys(j, path, {"lo", "hi"});
  const json* lo = find(j, "lo");
  const json* hi = find(j, "hi");
  if (!lo) bad_key(path + ".lo", "required");
  if (!hi) bad_key(path + ".hi", "required");
  const Rect rect{as_point(*lo, path + ".lo"), as_point(*hi, path + ".hi")};
  if (rect.degenerate()) bad_key(path, "lo must be strictly below hi per axis");
  return rect;
}

/// Applies one dotted key=value assignment to the parsed config tree,
/// creating intermediate objects as needed. The value is parsed as JSON
/// when possible and kept as a plain string otherwise.
void apply_override(json& root, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override \"" + assignment + "\": expected key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }

  json* node = &root;
  std::size_t pos = 0;
  while (true) {
    const std::size_t dot = key.find('.', pos);
    const std::string part =
        key.substr(pos, dot == std::string::npos ? std::string::npos
                                                 : dot - pos);
    if (part.empty()) {
      throw ConfigError("override \"" + assignment + "\": empty key segment");
    }
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    if (!node->is_object()) {
      throw ConfigError("override \"" + assignment + "\": \"" +
                        key.substr(0, dot) + "\" is not an object");
    }
    pos = dot + 1;
  }
}

const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names = {
      "theorem1",     "theorem2",     "melnikov-profile",
      "degree-map",   "continuation", "period-scan"};
  return names;
}

}  // namespace

Scenario load_scenario(const std::string& config_path,
                       const std::vector<std::string>& overrides,
                       const std::optional<std::string>& out_dir) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file \"" + config_path + "\"");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  for (const std::string& assignment : overrides) {
    apply_override(root, assignment);
  }

  if (!root.is_object()) bad_key("config", "top level must be an object");
  check_keys(root, "", {"system", "task", "options", "output_dir"});

  Scenario s;

  // system
  const json* system = find(root, "system");
  if (!system) bad_key("system", "required");
  if (!system->is_object()) bad_key("system", "expected an object");
  check_keys(*system, "system", {"name", "params"});
  const json* name = find(*system, "name");
  if (!name) bad_key("system.name", "required");
  s.system_name = as_string(*name, "system.name");
  const SystemInfo* info = nullptr;
  for (const SystemInfo& entry : list_systems()) {
    if (entry.name == s.system_name) info = &entry;
  }
  if (!info) {
    bad_key("system.name", "unknown system \"" + s.system_name + "\"");
  }
  if (const json* params = find(*system, "params")) {
    if (!params->is_object()) bad_key("system.params", "expected an object");
    for (const auto& item : params->items()) {
      bool known = false;
      for (const ParamSpec& spec : info->params) {
        known = known || spec.key == item.key();
      }
      if (!known) {
        bad_key("system.params." + item.key(),
                "system \"" + s.system_name + "\" has no such parameter");
      }
      s.system_params[item.key()] =
          as_number(item.value(), "system.params." + item.key());
    }
  }

  // task
  const json* task = find(root, "task");
  if (!task) bad_key("task", "required");
  s.task = as_string(*task, "task");
  if (std::find(task_names().begin(), task_names().end(), s.task) ==
      task_names().end()) {
    std::string expected;
    for (const std::string& t : task_names()) {
      expected += (expected.empty() ? "" : ", ") + t;
    }
    bad_key("task", "unknown task \"" + s.task + "\" (expected one of: " +
                        expected + ")");
  }

  if (const json* od = find(root, "output_dir")) {
    s.output_dir = as_string(*od, "output_dir");
  }

  // options
  json options = json::object();
  if (const json* opt = find(root, "options")) {
    if (!opt->is_object()) bad_key("options", "expected an object");
    options = *opt;
  }
  std::vector<std::string> allowed = {"abs_tol", "rel_tol", "quad_nodes"};
  const auto allow = [&](std::initializer_list<const char*> keys) {
    for (const char* key : keys) allowed.push_back(key);
  };
  if (s.task == "theorem1") {
    allow({"candidate", "region", "eps_lo", "eps_hi", "index_radius",
           "curve_points", "periodicity_grid"});
  } else if (s.task == "theorem2") {
    allow({"cycle_start", "cycle_period", "annulus_width", "eps_lo", "eps_hi",
           "curve_points", "annulus_phases", "n_theta"});
  } else if (s.task == "melnikov-profile") {
    allow({"cycle_start", "cycle_period", "n_theta"});
  } else if (s.task == "degree-map") {
    allow({"region", "grid_n", "index_center", "index_radius",
           "curve_points"});
  } else if (s.task == "continuation") {
    allow({"eps_schedule", "initial_guess", "mode", "reference_point",
           "cycle_start", "cycle_period"});
  } else {  // period-scan
    allow({"alpha_lo", "alpha_hi", "n_alpha", "max_order", "ray"});
  }
  check_keys(options, "options", allowed);

  // shared knobs
  if (const json* v = find(options, "abs_tol")) {
    s.tol.abs_tol = as_number(*v, "options.abs_tol");
  }
  if (const json* v = find(options, "rel_tol")) {
    s.tol.rel_tol = as_number(*v, "options.rel_tol");
  }
  if (!s.tol.valid()) {
    bad_key("options.abs_tol", "tolerances must lie in (0, 1e-6]");
  }
  s.certification.tol = s.tol;
  s.certification.averaging.tol = s.tol;
  if (const json* v = find(options, "quad_nodes")) {
    s.certification.averaging.quad_nodes = as_int(*v, "options.quad_nodes");
  }
  if (const json* v = find(options, "eps_lo")) {
    s.certification.eps_lo = as_number(*v, "options.eps_lo");
    if (s.certification.eps_lo < 0.0) bad_key("options.eps_lo", "must be >= 0");
  }
  if (const json* v = find(options, "eps_hi")) {
    s.certification.eps_hi = as_number(*v, "options.eps_hi");
    if (s.certification.eps_hi < 0.0) bad_key("options.eps_hi", "must be >= 0");
  }
  if (const json* v = find(options, "index_radius")) {
    s.certification.index_radius = as_number(*v, "options.index_radius");
    if (!(s.certification.index_radius > 0.0)) {
      bad_key("options.index_radius", "must be > 0");
    }
  }
  if (const json* v = find(options, "curve_points")) {
    s.certification.curve_points = as_int(*v, "options.curve_points");
    if (s.certification.curve_points < 8) {
      bad_key("options.curve_points", "must be >= 8");
    }
  }
  if (const json* v = find(options, "periodicity_grid")) {
    s.certification.periodicity_grid = as_int(*v, "options.periodicity_grid");
    if (s.certification.periodicity_grid < 2) {
      bad_key("options.periodicity_grid", "must be >= 2");
    }
  }
  if (const json* v = find(options, "annulus_phases")) {
    s.certification.annulus_phases = as_int(*v, "options.annulus_phases");
    if (s.certification.annulus_phases < 4) {
      bad_key("options.annulus_phases", "must be >= 4");
    }
  }

  // task-specific
  if (const json* v = find(options, "candidate")) {
    s.candidate = as_point(*v, "options.candidate");
  }
  if (const json* v = find(options, "region")) {
    s.region = as_rect(*v, "options.region");
  }
  if (const json* v = find(options, "cycle_start")) {
    s.cycle_start = as_point(*v, "options.cycle_start");
  }
  if (const json* v = find(options, "cycle_period")) {
    s.cycle_period = as_number(*v, "options.cycle_period");
    if (!(*s.cycle_period > 0.0)) {
      bad_key("options.cycle_period", "must be > 0");
    }
  }
  if (const json* v = find(options, "annulus_width")) {
    s.annulus_width = as_number(*v, "options.annulus_width");
    if (!(s.annulus_width > 0.0)) bad_key("options.annulus_width", "must be > 0");
  }
  if (const json* v = find(options, "n_theta")) {
    s.n_theta = as_int(*v, "options.n_theta");
    if (s.n_theta < 32) bad_key("options.n_theta", "must be >= 32");
  }
  if (const json* v = find(options, "grid_n")) {
    s.grid_n = as_int(*v, "options.grid_n");
    if (s.grid_n < 1) bad_key("options.grid_n", "must be >= 1");
  }
  if (const json* v = find(options, "index_center")) {
    s.index_center = as_point(*v, "options.index_center");
  }
  if (const json* v = find(options, "eps_schedule")) {
    if (!v->is_array() || v->empty()) {
      bad_key("options.eps_schedule", "expected a non-empty array of numbers");
    }
    for (std::size_t k = 0; k < v->size(); ++k) {
      const double eps = as_number((*v)[k], "options.eps_schedule");
      if (!(eps > 0.0)) {
        bad_key("options.eps_schedule", "entries must be positive");
      }
      if (k > 0 && !(eps < s.eps_schedule.back())) {
        bad_key("options.eps_schedule", "must be strictly decreasing");
      }
      s.eps_schedule.push_back(eps);
    }
  }
  if (const json* v = find(options, "initial_guess")) {
    s.initial_guess = as_point(*v, "options.initial_guess");
  }
  if (const json* v = find(options, "mode")) {
    s.continuation_mode = as_string(*v, "options.mode");
    if (s.continuation_mode != "point" && s.continuation_mode != "cycle") {
      bad_key("options.mode", "expected \"point\" or \"cycle\"");
    }
  }
  if (const json* v = find(options, "reference_point")) {
    s.reference_point = as_point(*v, "options.reference_point");
  }
  if (const json* v = find(options, "alpha_lo")) {
    s.alpha_lo = as_number(*v, "options.alpha_lo");
  }
  if (const json* v = find(options, "alpha_hi")) {
    s.alpha_hi = as_number(*v, "options.alpha_hi");
  }
  if (const json* v = find(options, "n_alpha")) {
    s.n_alpha = as_int(*v, "options.n_alpha");
  }
  if (const json* v = find(options, "max_order")) {
    s.max_order = as_int(*v, "options.max_order");
    if (s.max_order < 1 || s.max_order > 4) {
      bad_key("options.max_order", "must be in 1..4");
    }
  }
  if (const json* v = find(options, "ray")) {
    const Vec2 ray = as_point(*v, "options.ray");
    if (!(ray.norm() > 0.0)) bad_key("options.ray", "must be nonzero");
    s.ray = ray.normalized();
  }

  // per-task requirements
  if (s.task == "theorem2" || s.task == "melnikov-profile") {
    if (!s.cycle_start) {
      bad_key("options.cycle_start", "required for task " + s.task);
    }
  }
  if (s.task == "degree-map" && !s.region) {
    bad_key("options.region", "required for task degree-map");
  }
  if (s.task == "continuation") {
    if (s.eps_schedule.empty()) {
      bad_key("options.eps_schedule", "required for task continuation");
    }
    if (s.continuation_mode == "cycle" && !s.cycle_start) {
      bad_key("options.cycle_start", "required for cycle-mode continuation");
    }
  }
  if (s.task == "period-scan") {
    if (!find(options, "alpha_lo") || !find(options, "alpha_hi")) {
      bad_key("options.alpha_lo", "alpha_lo and alpha_hi are required for "
                                  "task period-scan");
    }
    if (!(s.alpha_lo < s.alpha_hi)) {
      bad_key("options.alpha_hi", "must exceed alpha_lo");
    }
    if (!find(options, "n_alpha")) {
      bad_key("options.n_alpha", "required for task period-scan");
    }
    if (s.n_alpha < 2) bad_key("options.n_alpha", "must be >= 2");
  }

  if (out_dir) s.output_dir = *out_dir;
  if (s.output_dir.empty()) bad_key("output_dir", "must be non-empty");
  return s;
}

// ---------------------------------------------------------------------------
// CSV emitters

namespace {

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file \"" + path + "\"");
  out << content;
  out.flush();
  if (!out) throw Error("write failure on \"" + path + "\"");
}

}  // namespace

void emit_profile_csv(const MelnikovProfile& profile, const std::string& path) {
  std::string text = "theta,m_a,m_e\n";
  for (std::size_t k = 0; k < profile.thetas.size(); ++k) {
    text += num(profile.thetas[k]) + "," + num(profile.m_a[k]) + "," +
            num(profile.m_e[k]) + "\n";
  }
  for (const MelnikovZero& zero : profile.zeros_e) {
    text += "# zero_e," + num(zero.theta) + "," + num(zero.slope) + "\n";
  }
  write_file(path, text);
}

void emit_continuation_csv(const ContinuationResult& result,
                           const std::string& path) {
  std::string text = "eps,x1,x2,residual,mult1_abs,mult2_abs,stable,dist,side\n";
  for (const ContinuationRow& row : result.rows) {
    const FloquetData& fd = row.floquet;
    text += num(fd.eps) + "," + num(fd.fixed_point.x()) + "," +
            num(fd.fixed_point.y()) + "," + num(fd.residual) + "," +
            num(std::abs(fd.multipliers.first)) + "," +
            num(std::abs(fd.multipliers.second)) + "," +
            (fd.stable ? "1" : "0") + "," + num(row.dist_to_generator) + "," +
            (row.side ? side_name(*row.side) : "none") + "\n";
  }
  write_file(path, text);
}

void emit_degree_map_csv(const AveragedField& field, const std::string& path) {
  std::string text = "v1,v2,fbar1,fbar2\n";
  for (std::size_t k = 0; k < field.points.size(); ++k) {
    text += num(field.points[k].x()) + "," + num(field.points[k].y()) + "," +
            num(field.values[k].x()) + "," + num(field.values[k].y()) + "\n";
  }
  write_file(path, text);
}

void emit_period_scan_csv(const PeriodScan& scan, const std::string& path) {
  std::string text = "alpha,T\n";
  for (std::size_t k = 0; k < scan.params.size(); ++k) {
    text += num(scan.params[k]) + "," + num(scan.periods[k]) + "\n";
  }
  write_file(path, text);
}

// ---------------------------------------------------------------------------
// Task runners

namespace {

struct TaskContext {
  const Scenario& s;
  PerturbedSystem sys;
  std::filesystem::path out_dir;
  bool verbose = false;
  std::ostream* log = nullptr;

  void note(const std::string& line) const {
    if (verbose && log) (*log) << "[" << s.task << "] " << line << "\n";
  }
  std::string file(const std::string& name) const {
    return (out_dir / name).string();
  }
};

std::string hypothesis_lines(const TheoremVerdict& verdict) {
  std::string text;
  for (std::size_t k = 0; k < verdict.hypotheses.size(); ++k) {
    const Hypothesis& h = verdict.hypotheses[k];
    text += "hypothesis " + std::to_string(k + 1) + "/" +
            std::to_string(verdict.hypotheses.size()) + ": " + h.name + ": " +
            (h.holds ? "holds" : "fails") + " (evidence = " + num(h.evidence) +
            ")\n";
  }
  return text;
}

std::string conclusion_name(const TheoremVerdict& verdict) {
  return verdict.predicted() ? "stable_periodic_solution_predicted"
                             : "inconclusive";
}

std::string failing_names(const TheoremVerdict& verdict) {
  std::string text;
  for (const Hypothesis& h : verdict.hypotheses) {
    if (!h.holds) text += (text.empty() ? "" : ", ") + h.name;
  }
  return text;
}

std::string system_line(const Scenario& s) {
  std::string text = "system: " + s.system_name;
  for (const auto& [key, value] : s.system_params) {
    text += " " + key + "=" + num(value);
  }
  return text + "\n";
}

RunResult run_theorem1(const TaskContext& ctx) {
  const Scenario& s = ctx.s;
  const Rect region = s.region.value_or(
      Rect{s.candidate - Vec2(1.0, 1.0), s.candidate + Vec2(1.0, 1.0)});
  ctx.note("checking hypotheses over region [" + num(region.lo.x()) + ", " +
           num(region.hi.x()) + "] x [" + num(region.lo.y()) + ", " +
           num(region.hi.y()) + "]");
  const TheoremVerdict verdict =
      check_theorem1(ctx.sys, s.candidate, region, s.certification);
  const Vec2 fbar =
      averaging_function(ctx.sys, s.candidate, s.certification.averaging);

  std::string text = "task: theorem1\n" + system_line(s);
  text += "candidate: " + point_str(s.candidate) + "\n";
  text += "region: lo=" + point_str(region.lo) + " hi=" + point_str(region.hi) +
          "\n";
  text += "averaged_field_at_candidate_integral_form: " + point_str(fbar) +
          "\n";
  text += "averaged_field_at_candidate_mean_form: " +
          point_str(fbar / ctx.sys.period) + "\n";
  text += hypothesis_lines(verdict);
  text += "conclusion: " + conclusion_name(verdict) + "\n";
  const std::string verdict_path = ctx.file("verdict.txt");
  write_file(verdict_path, text);

  RunResult result;
  result.files_written.push_back(verdict_path);
  std::ostringstream summary;
  if (verdict.predicted()) {
    summary << "theorem1 on " << s.system_name << ": all "
            << verdict.hypotheses.size()
            << " hypotheses hold; a stable periodic solution near "
            << point_str(s.candidate)
            << " is predicted for every small enough eps in the admissible "
               "range. Verdict written to "
            << verdict_path << ".";
    result.exit_code = 0;
  } else {
    summary << "theorem1 on " << s.system_name
            << ": inconclusive; failing hypotheses: " << failing_names(verdict)
            << ". Verdict written to " << verdict_path << ".";
    result.exit_code = 2;
  }
  result.summary = summary.str();
  return result;
}

RunResult run_theorem2(const TaskContext& ctx) {
  const Scenario& s = ctx.s;
  const Cycle cycle = make_cycle(ctx.sys.base, *s.cycle_start,
                                 s.cycle_period.value_or(ctx.sys.period),
                                 s.tol);
  ctx.note("cycle through " + point_str(cycle.start) + " with period " +
           num(cycle.period));
  const TheoremVerdict verdict =
      check_theorem2(ctx.sys, cycle, s.annulus_width, s.certification);
  ctx.note("sampling the bifurcation functions on " +
           std::to_string(s.n_theta) + " phases");
  MelnikovConfig mcfg;
  mcfg.quad_nodes = s.certification.averaging.quad_nodes;
  mcfg.tol = s.tol;
  const MelnikovProfile profile =
      melnikov_profile(ctx.sys, cycle, s.n_theta, mcfg);
  const DegreeCriterion criterion = criterion_degree_0_or_2(profile);

  std::string text = "task: theorem2\n" + system_line(s);
  text += "cycle_start: " + point_str(cycle.start) + "\n";
  text += "cycle_period: " + num(cycle.period) + "\n";
  text += "annulus_width: " + num(s.annulus_width) + "\n";
  text += hypothesis_lines(verdict);
  text += "conclusion: " + conclusion_name(verdict) + "\n";
  if (verdict.approach_side) {
    text += "approach_side: " + side_name(*verdict.approach_side) + "\n";
  }
  text += "melnikov_profile_status: " + status_name(profile.status) +
          " (max |M_E| = " + num(profile.max_abs_e) + ")\n";
  for (const MelnikovZero& zero : profile.zeros_e) {
    text += "melnikov_zero_e: theta=" + num(zero.theta) +
            " slope=" + num(zero.slope) + "\n";
  }
  if (profile.status == ProfileStatus::TwoZeros) {
    text += "melnikov_sign_product_a: " + num(profile.sign_product_a) + "\n";
  }
  text += "criterion_degree_0_or_2: applies=" +
          std::string(criterion.applies ? "yes" : "no");
  if (criterion.conclusion) text += " (" + *criterion.conclusion + ")";
  text += "\n";
  const std::string verdict_path = ctx.file("verdict.txt");
  write_file(verdict_path, text);

  RunResult result;
  result.files_written.push_back(verdict_path);
  std::ostringstream summary;
  if (verdict.predicted()) {
    summary << "theorem2 on " << s.system_name << ": all "
            << verdict.hypotheses.size()
            << " hypotheses hold; a stable periodic solution approaching the "
               "cycle from the "
            << (verdict.approach_side ? side_name(*verdict.approach_side)
                                      : std::string("(undetermined side)"))
            << " is predicted; the independent zero/slope criterion "
            << (criterion.applies ? "confirms" : "does not confirm")
            << " that the degree differs from 1. Verdict written to "
            << verdict_path << ".";
    result.exit_code = 0;
  } else {
    summary << "theorem2 on " << s.system_name
            << ": inconclusive; failing hypotheses: " << failing_names(verdict)
            << ". Verdict written to " << verdict_path << ".";
    result.exit_code = 2;
  }
  result.summary = summary.str();
  return result;
}

RunResult run_melnikov_profile(const TaskContext& ctx) {
  const Scenario& s = ctx.s;
  const Cycle cycle = make_cycle(ctx.sys.base, *s.cycle_start,
                                 s.cycle_period.value_or(ctx.sys.period),
                                 s.tol);
  MelnikovConfig mcfg;
  mcfg.quad_nodes = s.certification.averaging.quad_nodes;
  mcfg.tol = s.tol;
  ctx.note("sampling " + std::to_string(s.n_theta) + " phases over one period");
  const MelnikovProfile profile =
      melnikov_profile(ctx.sys, cycle, s.n_theta, mcfg);
  const DegreeCriterion criterion = criterion_degree_0_or_2(profile);

  const std::string csv_path = ctx.file("melnikov_profile.csv");
  emit_profile_csv(profile, csv_path);

  RunResult result;
  result.files_written.push_back(csv_path);
  std::ostringstream summary;
  summary << "melnikov-profile on " << s.system_name << ": " << s.n_theta
          << " phases, status " << status_name(profile.status) << " with "
          << profile.zeros_e.size() << " zero(s) of M_E";
  for (const MelnikovZero& zero : profile.zeros_e) {
    summary << " [theta=" << num(zero.theta) << ", slope=" << num(zero.slope)
            << "]";
  }
  summary << "; the degree-in-{0,2} criterion "
          << (criterion.applies ? "applies" : "does not apply")
          << ". Profile written to " << csv_path << ".";
  result.summary = summary.str();
  result.exit_code = 0;
  return result;
}

RunResult run_degree_map(const TaskContext& ctx) {
  const Scenario& s = ctx.s;
  ctx.note("averaging on a " + std::to_string(s.grid_n) + "x" +
           std::to_string(s.grid_n) + " grid");
  const AveragedField field = averaging_on_grid(
      ctx.sys, *s.region, s.grid_n, s.certification.averaging);
  const std::string csv_path = ctx.file("degree_map.csv");
  emit_degree_map_csv(field, csv_path);

  RunResult result;
  result.files_written.push_back(csv_path);
  std::ostringstream summary;
  summary << "degree-map on " << s.system_name << ": averaged field sampled on "
          << field.points.size() << " grid points over lo="
          << point_str(field.region.lo) << " hi=" << point_str(field.region.hi);
  if (s.index_center) {
    const AveragingConfig acfg = s.certification.averaging;
    const PerturbedSystem& sys = ctx.sys;
    const DegreeReport report = poincare_index(
        [&sys, &acfg](const Vec2& v) {
          return (-averaging_function(sys, v, acfg)).eval();
        },
        *s.index_center, s.certification.index_radius,
        s.certification.curve_points);
    summary << "; index of the negated averaged field at "
            << point_str(*s.index_center) << " (radius "
            << num(s.certification.index_radius) << ") = " << report.value;
  }
  summary << ". Grid written to " << csv_path << ".";
  result.summary = summary.str();
  result.exit_code = 0;
  return result;
}

RunResult run_continuation(const TaskContext& ctx) {
  const Scenario& s = ctx.s;
  ContinuationReference reference{s.reference_point};
  if (s.continuation_mode == "cycle") {
    reference = make_cycle(ctx.sys.base, *s.cycle_start,
                           s.cycle_period.value_or(ctx.sys.period), s.tol);
  }
  ctx.note("running " + std::to_string(s.eps_schedule.size()) +
           " continuation rows from eps = " + num(s.eps_schedule.front()));
  const ContinuationResult rows =
      continuation(ctx.sys, s.eps_schedule, s.initial_guess, reference, s.tol);
  const std::string csv_path = ctx.file("continuation.csv");
  emit_continuation_csv(rows, csv_path);

  RunResult result;
  result.files_written.push_back(csv_path);
  std::ostringstream summary;
  summary << "continuation on " << s.system_name << " (" << s.continuation_mode
          << " mode): " << rows.rows.size() << "/" << s.eps_schedule.size()
          << " rows";
  if (!rows.rows.empty()) {
    const ContinuationRow& last = rows.rows.back();
    summary << "; at eps = " << num(last.eps()) << " the fixed point "
            << point_str(last.fixed_point()) << " sits "
            << num(last.dist_to_generator) << " from the generator";
    if (last.side) summary << " (approach side: " << side_name(*last.side) << ")";
  }
  if (rows.complete) {
    summary << ". Rows written to " << csv_path << ".";
    result.exit_code = 0;
  } else {
    summary << ". Truncated: " << rows.failure << ". Partial rows written to "
            << csv_path << ".";
    result.exit_code = 2;
  }
  result.summary = summary.str();
  return result;
}

RunResult run_period_scan(const TaskContext& ctx) {
  const Scenario& s = ctx.s;
  const Vec2 ray = s.ray;
  ctx.note("scanning " + std::to_string(s.n_alpha) + " amplitudes in [" +
           num(s.alpha_lo) + ", " + num(s.alpha_hi) + "]");
  const PeriodScan scan = period_scan(
      ctx.sys.base, [ray](double a) { return (a * ray).eval(); }, s.alpha_lo,
      s.alpha_hi, s.n_alpha, s.max_order, 100.0, s.tol);
  const std::string csv_path = ctx.file("period_scan.csv");
  emit_period_scan_csv(scan, csv_path);

  RunResult result;
  result.files_written.push_back(csv_path);
  std::ostringstream summary;
  const double mid = 0.5 * (s.alpha_lo + s.alpha_hi);
  summary << "period-scan on " << s.system_name << ": " << scan.params.size()
          << " amplitudes in [" << num(s.alpha_lo) << ", " << num(s.alpha_hi)
          << "] along ray " << point_str(ray)
          << "; derivative estimates at alpha = " << num(mid) << ":";
  for (std::size_t k = 0; k < scan.derivative_estimates.size(); ++k) {
    summary << " T" << std::string(k + 1, '\'') << " = "
            << num(scan.derivative_estimates[k]);
  }
  summary << ". Periods written to " << csv_path << ".";
  result.summary = summary.str();
  result.exit_code = 0;
  return result;
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, bool verbose,
                       std::ostream* log) {
  TaskContext ctx{scenario, make_system(scenario.system_name,
                                        scenario.system_params),
                  std::filesystem::path(scenario.output_dir), verbose, log};
  std::filesystem::create_directories(ctx.out_dir);
  if (scenario.task == "theorem1") return run_theorem1(ctx);
  if (scenario.task == "theorem2") return run_theorem2(ctx);
  if (scenario.task == "melnikov-profile") return run_melnikov_profile(ctx);
  if (scenario.task == "degree-map") return run_degree_map(ctx);
  if (scenario.task == "continuation") return run_continuation(ctx);
  if (scenario.task == "period-scan") return run_period_scan(ctx);
  throw ConfigError("task: unknown task \"" + scenario.task + "\"");
}

// ---------------------------------------------------------------------------
// Built-in reference checks

int run_selftest(std::ostream& out) {
  int failures = 0;
  const auto report = [&](const std::string& name, bool ok) {
    out << (ok ? "PASS" : "FAIL") << "  " << name << "\n";
    if (!ok) ++failures;
  };
  const auto guarded = [&](const std::string& name, const auto& body) {
    bool ok = false;
    try {
      ok = body();
    } catch (const std::exception&) {
      ok = false;
    }
    report(name, ok);
  };

  guarded("index of the negated averaged field at the Duffing origin is 1 "
          "(closed form and quadrature)",
          [&] {
            const PerturbedSystem sys = make_system("duffing-ex1");
            const auto closed_negated = [](const Vec2& v) {
              return Vec2(-2.0 * M_PI * v.y(),
                          2.0 * M_PI * (v.x() * v.x() * v.x() + v.y()));
            };
            const auto quad_negated = [&sys](const Vec2& v) {
              return (-averaging_function(sys, v)).eval();
            };
            const DegreeReport closed =
                poincare_index(closed_negated, Vec2::Zero(), 0.5);
            const DegreeReport quad =
                poincare_index(quad_negated, Vec2::Zero(), 0.5);
            return closed.value == 1 && quad.value == 1;
          });

  const PerturbedSystem degen1 =
      make_system("degenerate-cycle-ex2", {{"p", 1.0}});
  Cycle cycle1;
  bool have_cycle = false;
  try {
    cycle1 = make_cycle(degen1.base, Vec2(0.0, std::sqrt(2.0)), 2.0 * M_PI);
    have_cycle = true;
  } catch (const std::exception&) {
  }
  MelnikovProfile profile1;
  bool have_profile = false;

  guarded("bifurcation functions on the degenerate cycle match the closed "
          "forms -(pi/sqrt(2))cos(theta), -sqrt(2)pi sin(theta)",
          [&] {
            if (!have_cycle) return false;
            profile1 = melnikov_profile(degen1, cycle1, 32);
            have_profile = true;
            double worst = 0.0;
            for (std::size_t k = 0; k < profile1.thetas.size(); ++k) {
              const double theta = profile1.thetas[k];
              worst = std::max(
                  worst, std::abs(profile1.m_a[k] + (M_PI / std::sqrt(2.0)) *
                                                        std::cos(theta)));
              worst = std::max(
                  worst, std::abs(profile1.m_e[k] +
                                  std::sqrt(2.0) * M_PI * std::sin(theta)));
            }
            return worst <= 1e-3;
          });

  guarded("M_E zeros sit at theta = 0 and pi with transversal slopes and "
          "opposite M_A signs (criterion applies)",
          [&] {
            if (!have_profile) return false;
            if (profile1.status != ProfileStatus::TwoZeros) return false;
            const double T = 2.0 * M_PI;
            const auto circular = [&](double a, double b) {
              const double d = std::abs(a - b);
              return std::min(d, T - d);
            };
            return circular(profile1.zeros_e[0].theta, 0.0) <= 1e-6 &&
                   circular(profile1.zeros_e[1].theta, M_PI) <= 1e-6 &&
                   profile1.sign_product_a < 0.0 &&
                   criterion_degree_0_or_2(profile1).applies;
          });

  guarded("divergence of the forced fields matches the analytic formulas",
          [&] {
            const PerturbedSystem duff = make_system("duffing-ex1");
            const PerturbedSystem degen2 =
                make_system("degenerate-cycle-ex2", {{"p", 2.0}});
            for (const double eps : {0.02, 0.1}) {
              for (const double t : {0.0, 1.7}) {
                const Vec2 x(0.3 + t, -0.8);
                if (std::abs(divergence(duff, t, x, eps) - (-eps)) > 1e-10) {
                  return false;
                }
                if (std::abs(divergence(degen2, t, x, eps) - (-eps * eps)) >
                    1e-10) {
                  return false;
                }
              }
            }
            return true;
          });

  guarded("period function of the degenerate family matches "
          "2 pi / ((1/4)(alpha^2 - 2)^p + 1)",
          [&] {
            for (const int p : {1, 2}) {
              const PerturbedSystem sys = make_system(
                  "degenerate-cycle-ex2", {{"p", static_cast<double>(p)}});
              for (const double alpha : {1.0, 2.0}) {
                const Vec2 start(0.0, alpha);
                const Section section =
                    transversal_section(sys.base, start);
                const double expected =
                    2.0 * M_PI /
                    (0.25 * std::pow(alpha * alpha - 2.0, p) + 1.0);
                const double measured =
                    return_time(sys.base, start, section, 100.0);
                if (std::abs(measured - expected) > 1e-7) return false;
              }
            }
            return true;
          });

  guarded("degree of the negated averaged field over the degenerate cycle "
          "is 0",
          [&] {
            const PerturbedSystem sys =
                make_system("degenerate-cycle-ex2", {{"p", 2.0}});
            const Cycle cycle =
                make_cycle(sys.base, Vec2(0.0, std::sqrt(2.0)), 2.0 * M_PI);
            const ClosedCurve curve(cycle.sample_points(64));
            const DegreeReport report = degree_over_cycle(
                [&sys](const Vec2& v) {
                  return (-averaging_function(sys, v)).eval();
                },
                curve);
            return report.value == 0;
          });

  if (failures == 0) {
    out << "all reference checks passed\n";
  } else {
    out << failures << " reference check(s) failed\n";
  }
  return failures;
}

}  // namespace cyclecert
