#ifndef CYCLECERT_SCENARIO_HPP
#define CYCLECERT_SCENARIO_HPP

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cyclecert/degree.hpp"
#include "cyclecert/melnikov.hpp"
#include "cyclecert/orbit_tools.hpp"
#include "cyclecert/periodic_finder.hpp"

namespace cyclecert {

/// A fully validated run description. Produced from a JSON config file by
/// load_scenario; every field here has already been type- and
/// range-checked, so run_scenario only has to execute.
struct Scenario {
  std::string system_name;
  std::map<std::string, double> system_params;
  std::string task;  // theorem1 | theorem2 | melnikov-profile | degree-map |
                     // continuation | period-scan
  std::string output_dir = "out";

  Tolerances tol;                  // options.abs_tol / options.rel_tol
  CertificationConfig certification;

  // theorem1
  Vec2 candidate = Vec2::Zero();           // options.candidate
  std::optional<Rect> region;              // options.region {lo:[..], hi:[..]}

  // theorem2 / melnikov-profile / cycle-mode continuation / period-scan
  std::optional<Vec2> cycle_start;         // options.cycle_start
  std::optional<double> cycle_period;      // options.cycle_period (default:
                                           // the forcing period)
  double annulus_width = 0.3;              // options.annulus_width

  // melnikov-profile
  int n_theta = 64;                        // options.n_theta

  // degree-map
  int grid_n = 33;                         // options.grid_n
  std::optional<Vec2> index_center;        // options.index_center

  // continuation
  std::vector<double> eps_schedule;        // options.eps_schedule
  Vec2 initial_guess = Vec2::Zero();       // options.initial_guess
  std::string continuation_mode = "point"; // options.mode: point | cycle
  Vec2 reference_point = Vec2::Zero();     // options.reference_point

  // period-scan
  double alpha_lo = 0.0;                   // options.alpha_lo
  double alpha_hi = 0.0;                   // options.alpha_hi
  int n_alpha = 0;                         // options.n_alpha
  int max_order = 2;                       // options.max_order
  Vec2 ray = Vec2(0.0, 1.0);               // options.ray (unit direction of
                                           // the amplitude line)
};

/// Parses and validates a JSON config file. `overrides` are dotted
/// key=value assignments applied to the parsed tree before validation
/// (e.g. "options.n_theta=128", "system.params.p=1"); `out_dir`, when
/// set, replaces output_dir last. Throws ConfigError naming the offending
/// key on any schema violation.
Scenario load_scenario(const std::string& config_path,
                       const std::vector<std::string>& overrides = {},
                       const std::optional<std::string>& out_dir = {});

/// Outcome of a scenario run: the process exit code (0 = success, 2 =
/// ran but the verdict/criterion came out negative or partial, 1 is
/// reserved for errors thrown before completion), the one-paragraph
/// summary for stdout, and the files written.
struct RunResult {
  int exit_code = 0;
  std::string summary;
  std::vector<std::string> files_written;
};

/// Executes the task and writes its outputs under output_dir (created if
/// missing). `log` receives progress lines when verbose is on.
RunResult run_scenario(const Scenario& scenario, bool verbose = false,
                       std::ostream* log = nullptr);

/// CSV emitters (all: 17-significant-digit decimals, '\n' newlines,
/// UTF-8 without BOM). Parsing the text back reproduces the arrays
/// bit-exactly.
/// Header `theta,m_a,m_e`, one row per grid point, then one comment line
/// `# zero_e,<theta>,<slope>` per detected zero.
void emit_profile_csv(const MelnikovProfile& profile, const std::string& path);
/// Header `eps,x1,x2,residual,mult1_abs,mult2_abs,stable,dist,side`;
/// side is `inside`/`outside`, or `none` for point-mode rows.
void emit_continuation_csv(const ContinuationResult& result,
                           const std::string& path);
/// Header `v1,v2,fbar1,fbar2`, one row per grid point.
void emit_degree_map_csv(const AveragedField& field, const std::string& path);
/// Header `alpha,T`.
void emit_period_scan_csv(const PeriodScan& scan, const std::string& path);

/// Built-in reference checks against the worked examples' closed forms
/// (index of the negated averaged field, Melnikov profiles and zeros,
/// divergence formulas, period function values, cycle degree). Prints one
/// PASS/FAIL line per check to `out`; returns the number of failures.
int run_selftest(std::ostream& out);

}  // namespace cyclecert

#endif  // CYCLECERT_SCENARIO_HPP
