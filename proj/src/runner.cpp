#include "mip/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mip/body.hpp"
#include "mip/certify.hpp"
#include "mip/error.hpp"
#include "mip/optimizer.hpp"
#include "mip/quadrature.hpp"
#include "mip/rng.hpp"
#include "mip/variation.hpp"

namespace mip {
namespace {

using nlohmann::json;

constexpr std::uint64_t kDirectionStream = 23;
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : cols_(header.size()) {
    append_row(header);
  }
  void row(std::vector<std::string> cells) {
    require(cells.size() == cols_, ErrorCode::internal, "table row width mismatch");
    append_row(cells);
  }
  std::string str() const { return out_.str(); }

 private:
  void append_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "\t" : "") << cells[i];
    out_ << "\n";
  }
  std::size_t cols_;
  std::ostringstream out_;
};

json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat_json(const Mat& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

struct Effective {
  std::int64_t budget;
  std::uint64_t seed;
  double tol;
  int workers;
  double fd_step;
};

Effective resolve(const RunFlags& flags, const Scenario* scen) {
  Effective e{};
  e.budget = flags.budget > 0 ? flags.budget : (scen != nullptr ? scen->budget : (1 << 16));
  e.seed = flags.seed >= 0 ? static_cast<std::uint64_t>(flags.seed)
                           : (scen != nullptr ? scen->seed : 1);
  e.tol = flags.tol > 0.0 ? flags.tol : 5e-3;
  require(flags.workers >= 1, ErrorCode::invalid_argument, "workers must be at least 1");
  e.workers = flags.workers;
  e.fd_step = flags.fd_step > 0.0 ? flags.fd_step : 1e-2;
  return e;
}

QuadOptions quad_of(const Effective& e) {
  QuadOptions q;
  q.budget = static_cast<std::uint64_t>(e.budget);
  q.seed = e.seed;
  q.workers = e.workers;
  return q;
}

OptimizeConfig opt_of(const Effective& e) {
  OptimizeConfig cfg;
  cfg.budget_per_eval = static_cast<std::uint64_t>(e.budget);
  cfg.seed = e.seed;
  cfg.workers = e.workers;
  return cfg;
}

json position_json(const Position& pos) {
  return json{{"t", mat_json(pos.t)}, {"z", vec_json(pos.z)}, {"det", pos.t.determinant()}};
}

struct CommandOutput {
  json result;
  std::vector<TableArtifact> tables;
  std::string summary;
  int exit_code = 0;
};

CommandOutput cmd_optimize(const Scenario& scen, const Effective& eff) {
  const OptimizeResult res =
      maximize(scen.f, scen.g, scen.mode, scen.det_target, opt_of(eff));
  Table t({"iter", "value", "grad_norm"});
  json traj = json::array();
  for (const TrajectoryPoint& p : res.trajectory) {
    t.row({std::to_string(p.iter), fmt(p.value), fmt(p.grad_norm)});
    traj.push_back({{"iter", p.iter}, {"value", p.value}, {"grad_norm", p.grad_norm}});
  }
  CommandOutput out;
  out.result = {{"value", res.value},
                {"value_stderr", res.value_stderr},
                {"grad_norm", res.grad_norm},
                {"converged", res.converged},
                {"restarts_used", res.restarts_used},
                {"position", position_json(res.position)},
                {"trajectory", traj}};
  out.tables.push_back({"trajectory.tsv", t.str()});
  out.summary = "optimize: value=" + fmt(res.value) + " +- " + fmt(res.value_stderr) +
                " grad_norm=" + fmt(res.grad_norm) +
                (res.converged ? " converged" : " NOT CONVERGED");
  out.exit_code = res.converged ? 0 : 3;
  return out;
}

CommandOutput cmd_certify(const Scenario& scen, const Effective& eff) {
  const CertificateReport rep = isotropy_certificate(
      scen.f, scen.g, Position::identity(scen.dim), eff.tol, quad_of(eff));
  Table t({"quantity", "value", "noise", "bound", "pass"});
  t.row({"iso_residual", fmt(rep.iso_residual), fmt(rep.iso_noise), fmt(rep.tol + rep.iso_noise),
         rep.iso_residual <= rep.tol + rep.iso_noise ? "1" : "0"});
  t.row({"center_residual", fmt(rep.center_residual), fmt(rep.center_noise),
         fmt(rep.tol + rep.center_noise),
         rep.center_residual <= rep.tol + rep.center_noise ? "1" : "0"});
  t.row({"theta_gap", fmt(rep.theta_gap), "0", fmt(rep.tol), rep.theta_gap <= rep.tol ? "1" : "0"});
  CommandOutput out;
  out.result = {{"pass", rep.pass},
                {"degenerate", rep.degenerate},
                {"tol", rep.tol},
                {"c", rep.c},
                {"m", mat_json(rep.m)},
                {"b", vec_json(rep.b)},
                {"iso_residual", rep.iso_residual},
                {"iso_noise", rep.iso_noise},
                {"center_residual", rep.center_residual},
                {"center_noise", rep.center_noise},
                {"center_scale", rep.center_scale},
                {"theta_gap", rep.theta_gap}};
  out.tables.push_back({"residuals.tsv", t.str()});
  out.summary = std::string("certify: ") + (rep.pass ? "PASS" : "FAIL") +
                " iso_residual=" + fmt(rep.iso_residual) +
                " center_residual=" + fmt(rep.center_residual);
  out.exit_code = rep.pass ? 0 : 2;
  return out;
}

CommandOutput cmd_gradcheck(const Scenario& scen, const Effective& eff) {
  const int n = scen.dim;
  const int n_sl = 20, n_shift = 10;
  const Rng rng(eff.seed, kDirectionStream);
  QuadOptions q = quad_of(eff);
  Table t({"direction_id", "kind", "analytic", "numeric", "gap", "bound", "pass"});
  json rows = json::array();
  int passed = 0, total = 0;
  bool all_within_5x = true;
  std::uint64_t draw = 0;
  for (int i = 0; i < n_sl + n_shift; ++i) {
    const bool is_sl = i < n_sl;
    FdCheck c;
    std::string kind;
    q.seed = eff.seed ^ (kGolden * static_cast<std::uint64_t>(i + 1));
    if (is_sl) {
      Mat dir(n, n);
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) dir(r, s) = rng.normal(draw++, 0);
      dir = traceless_part(dir);
      dir /= dir.norm();
      c = fd_check_sl(scen.f, scen.g, dir, eff.fd_step, q);
      kind = "sl";
    } else {
      Vec y(n);
      for (int r = 0; r < n; ++r) y[r] = rng.normal(draw++, 0);
      y /= y.norm();
      c = fd_check_shift(scen.f, scen.g, y, eff.fd_step, q);
      kind = "shift";
    }
    const double stderr_bound = 3.0 * std::hypot(c.analytic_stderr, c.numeric_stderr);
    const double bound = std::max(stderr_bound, 2e-3 * std::fabs(c.numeric) + 1e-6);
    const bool ok = c.gap <= bound;
    if (c.gap > 5.0 * bound) all_within_5x = false;
    passed += ok ? 1 : 0;
    ++total;
    t.row({std::to_string(i), kind, fmt(c.analytic), fmt(c.numeric), fmt(c.gap), fmt(bound),
           ok ? "1" : "0"});
    rows.push_back({{"direction_id", i},
                    {"kind", kind},
                    {"analytic", c.analytic},
                    {"analytic_stderr", c.analytic_stderr},
                    {"numeric", c.numeric},
                    {"numeric_stderr", c.numeric_stderr},
                    {"gap", c.gap},
                    {"bound", bound},
                    {"pass", ok}});
  }
  const double fraction = static_cast<double>(passed) / total;
  const bool ok = fraction >= 0.95 && all_within_5x;
  CommandOutput out;
  out.result = {{"directions", rows},
                {"passed", passed},
                {"total", total},
                {"fraction", fraction},
                {"all_within_5x", all_within_5x},
                {"h", eff.fd_step},
                {"pass", ok}};
  out.tables.push_back({"gradcheck.tsv", t.str()});
  out.summary = "gradcheck: " + std::to_string(passed) + "/" + std::to_string(total) +
                " within bound" + (ok ? " PASS" : " FAIL");
  out.exit_code = ok ? 0 : 2;
  return out;
}

CommandOutput cmd_scan(const Scenario& scen, const RunFlags& flags, const Effective& eff) {
  std::vector<double> radii = flags.radii;
  if (radii.empty()) radii = {1.0, 1.1, 1.2, 1.3, 1.4, 1.5};
  const std::vector<ScanPoint> pts = scan_radius(scen.f, scen.g, radii, opt_of(eff));
  Table t({"radius", "value", "stderr", "sandwich_ok"});
  json rows = json::array();
  bool all_conv = true, all_sandwich = true;
  for (const ScanPoint& p : pts) {
    t.row({fmt(p.radius), fmt(p.value), fmt(p.value_stderr), p.sandwich_ok ? "1" : "0"});
    rows.push_back({{"radius", p.radius},
                    {"value", p.value},
                    {"value_stderr", p.value_stderr},
                    {"converged", p.converged},
                    {"sandwich_ok", p.sandwich_ok},
                    {"position", position_json(p.position)}});
    all_conv = all_conv && p.converged;
    all_sandwich = all_sandwich && p.sandwich_ok;
  }
  CommandOutput out;
  out.result = {{"points", rows}, {"all_converged", all_conv}, {"sandwich_ok", all_sandwich}};
  out.tables.push_back({"scan.tsv", t.str()});
  out.summary = "scan: " + std::to_string(pts.size()) + " radii" +
                (all_conv ? "" : " NOT CONVERGED") +
                (all_sandwich ? " sandwich ok" : " SANDWICH VIOLATED");
  out.exit_code = !all_conv ? 3 : (all_sandwich ? 0 : 2);
  return out;
}

CommandOutput cmd_mu_john(const Scenario& scen, const RunFlags& flags, const Effective& eff) {
  const Body& region = scen.f.support();
  require(region.kind() != BodyKind::all_space, ErrorCode::invalid_argument,
          "mu-john requires a bounded region: the support of f");
  std::vector<double> radii = flags.radii;
  if (radii.empty()) radii = {1.3, 1.2, 1.1, 1.05, 1.02};
  const JohnReport rep = john_limit_measure(region, scen.f, radii, opt_of(eff));
  Table t({"radius", "value", "residual", "residual_stderr", "support_distance", "converged"});
  json rows = json::array();
  bool all_conv = true;
  for (const JohnStep& s : rep.steps) {
    t.row({fmt(s.radius), fmt(s.value), fmt(s.residual), fmt(s.residual_stderr),
           fmt(s.support_distance), s.converged ? "1" : "0"});
    rows.push_back({{"radius", s.radius},
                    {"value", s.value},
                    {"residual", s.residual},
                    {"residual_stderr", s.residual_stderr},
                    {"support_distance", s.support_distance},
                    {"converged", s.converged},
                    {"position", position_json(s.position)}});
    all_conv = all_conv && s.converged;
  }
  CommandOutput out;
  out.result = {{"inscribed_shape", mat_json(rep.inscribed_shape)},
                {"steps", rows},
                {"all_converged", all_conv},
                {"measure_convention", "density-weighted surface measure"}};
  out.tables.push_back({"john.tsv", t.str()});
  const double last = rep.steps.empty() ? 0.0 : rep.steps.back().residual;
  out.summary = "mu-john: " + std::to_string(rep.steps.size()) +
                " radii, final residual=" + fmt(last) + (all_conv ? "" : " NOT CONVERGED");
  out.exit_code = all_conv ? 0 : 3;
  return out;
}

// Reference for the line integral: adaptive Simpson split at the kinks.
double simpson_recurse(const std::function<double(double)>& fn, double a, double b, double fa,
                       double fb, double fm, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = fn(lm), frm = fn(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_recurse(fn, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1) +
         simpson_recurse(fn, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1);
}

double adaptive_line_integral(const std::function<double(double)>& fn, double a, double b) {
  const double m = 0.5 * (a + b);
  const double fa = fn(a), fb = fn(b), fm = fn(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_recurse(fn, a, b, fa, fb, fm, whole, 1e-13, 40);
}

double laplace_reference(double lambda, double s) {
  const auto integrand = [&](double t) {
    return std::exp(-(std::fabs(t) + std::fabs(lambda * t + s)));
  };
  const double kink = -s / lambda;
  std::vector<double> cuts{-60.0 / std::min(1.0, lambda), 0.0, kink,
                           60.0 / std::min(1.0, lambda)};
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] > cuts[i]) total += adaptive_line_integral(integrand, cuts[i], cuts[i + 1]);
  return total;
}

CommandOutput cmd_validate(const Effective& eff) {
  Table t({"check", "value", "reference", "error", "bound", "pass"});
  json rows = json::array();
  bool all_ok = true;
  const auto add = [&](const std::string& name, double value, double reference, double bound) {
    const double err = std::fabs(value - reference);
    const bool ok = err <= bound;
    all_ok = all_ok && ok;
    t.row({name, fmt(value), fmt(reference), fmt(err), fmt(bound), ok ? "1" : "0"});
    rows.push_back({{"check", name},
                    {"value", value},
                    {"reference", reference},
                    {"error", err},
                    {"bound", bound},
                    {"pass", ok}});
  };

  for (const double lambda : {0.25, 0.5, 0.9, 1.0, 1.1, 2.0, 5.0})
    for (const double s : {0.0, 0.3, 1.0, 3.0})
      add("line_integral l=" + fmt(lambda) + " s=" + fmt(s), laplace_pair_integral(lambda, s),
          laplace_reference(lambda, s), 1e-8);
  for (const double s : {0.0, 0.7, 2.0}) {
    add("branch_continuity_below s=" + fmt(s), laplace_pair_integral(1.0 - 1e-9, s),
        laplace_pair_integral(1.0, s), 1e-5);
    add("branch_continuity_above s=" + fmt(s), laplace_pair_integral(1.0 + 1e-9, s),
        laplace_pair_integral(1.0, s), 1e-5);
  }

  const auto phi = [](const Vec& x) { return 1.0 / (1.0 + x.squaredNorm()); };
  QuadOptions q = quad_of(eff);
  const auto polar = [&](const std::string& name, const Body& m, const Mat& a, const Mat& tr) {
    const auto [lhs, rhs] = polar_identity_check(phi, m, a, tr, q);
    add("polar " + name, lhs.value, rhs.value,
        3.0 * std::hypot(lhs.stderror, rhs.stderror));
  };
  {
    Mat a(2, 2);
    a << 0.7, 0.2, -0.1, 0.4;
    polar("ball2", Body::ball(2, 1.0), a, Mat::Identity(2, 2));
  }
  {
    Mat shape(2, 2), a(2, 2), tr(2, 2);
    shape << 1.3, 0.2, 0.2, 0.9;
    a << 0.5, -0.3, 0.2, 0.8;
    tr << 1.0, 0.3, 0.0, 1.0;
    polar("ellipsoid2", Body::ellipsoid(shape), a, tr);
  }
  {
    Mat a(3, 3);
    a << 0.6, 0.1, -0.2, 0.0, 0.9, 0.3, 0.2, -0.1, 0.5;
    polar("ball3", Body::ball(3, 1.0), a, Mat::Identity(3, 3));
  }

  CommandOutput out;
  out.result = {{"checks", rows}, {"pass", all_ok}};
  out.tables.push_back({"validate.tsv", t.str()});
  out.summary = std::string("validate: ") + (all_ok ? "all checks PASS" : "CHECK FAILED");
  out.exit_code = all_ok ? 0 : 2;
  return out;
}

}  // namespace

RunReport run_command(const std::string& command, const RunFlags& flags) {
  const auto start = std::chrono::steady_clock::now();
  const bool needs_scenario = command != "validate";
  Scenario* scen_ptr = nullptr;
  std::optional<Scenario> scen;
  if (needs_scenario) {
    require(!flags.scenario_path.empty(), ErrorCode::invalid_argument,
            "command \"" + command + "\" requires --scenario");
    scen.emplace(parse_scenario(flags.scenario_path));
    scen_ptr = &*scen;
  }
  const Effective eff = resolve(flags, scen_ptr);

  CommandOutput cmd;
  if (command == "optimize")
    cmd = cmd_optimize(*scen, eff);
  else if (command == "certify")
    cmd = cmd_certify(*scen, eff);
  else if (command == "gradcheck")
    cmd = cmd_gradcheck(*scen, eff);
  else if (command == "scan")
    cmd = cmd_scan(*scen, flags, eff);
  else if (command == "mu-john")
    cmd = cmd_mu_john(*scen, flags, eff);
  else if (command == "validate")
    cmd = cmd_validate(eff);
  else
    fail(ErrorCode::invalid_argument, "unknown command \"" + command + "\"");

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json report;
  report["command"] = command;
  report["tool_version"] = kToolVersion;
  report["scenario"] = scen ? json::parse(scen->echo) : json(nullptr);
  report["flags"] = {{"budget", eff.budget},
                     {"seed", eff.seed},
                     {"tol", eff.tol},
                     {"workers", eff.workers},
                     {"h", eff.fd_step},
                     {"radii", flags.radii}};
  report["wall_time_seconds"] = wall;
  report["result"] = cmd.result;
  report["exit_code"] = cmd.exit_code;

  RunReport out;
  out.command = command;
  out.exit_code = cmd.exit_code;
  out.report_json = report.dump(2);
  out.tables = std::move(cmd.tables);
  out.summary = std::move(cmd.summary);
  return out;
}

void write_artifacts(const RunReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  require(!ec, ErrorCode::invalid_argument, "cannot create output directory: " + out_dir);
  const auto write = [&](const std::string& name, const std::string& content) {
    const fs::path path = fs::path(out_dir) / name;
    std::ofstream f(path, std::ios::binary);
    require(static_cast<bool>(f), ErrorCode::invalid_argument,
            "cannot write artifact: " + path.string());
    f << content;
  };
  write("report.json", report.report_json);
  for (const TableArtifact& t : report.tables) write(t.filename, t.content);
}

}  // namespace mip
