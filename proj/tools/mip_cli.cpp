#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mip.h"

namespace {

struct Cli {
  std::string scenario;
  std::string out_dir;
  long long budget = 0;
  long long seed = -1;
  double tol = 0.0;
  int workers = 1;
  std::vector<double> radii;
  double fd_step = 0.0;
};

void add_common(CLI::App* sub, Cli& cli, bool scenario_required) {
  auto* opt = sub->add_option("--scenario", cli.scenario, "scenario JSON file");
  if (scenario_required) opt->required();
  sub->add_option("--budget", cli.budget, "sample budget per estimate (default: scenario)");
  sub->add_option("--seed", cli.seed, "RNG seed (default: scenario)");
  sub->add_option("--workers", cli.workers, "worker threads; results do not depend on the count")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", cli.out_dir, "directory for report.json and the result tables");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("intersection-position toolkit ") + mip_version()};
  app.set_help_flag("--help", "print help and exit");
  app.require_subcommand(1);
  Cli cli;

  CLI::App* optimize = app.add_subcommand(
      "optimize",
      "Maximize the product integral over positions.\n"
      "Table trajectory.tsv columns: iter, value, grad_norm.\n"
      "Exit 3 when the search does not converge.");
  add_common(optimize, cli, true);

  CLI::App* certify = app.add_subcommand(
      "certify",
      "Stationarity certificate for the pair at the identity position.\n"
      "Table residuals.tsv columns: quantity, value, noise, bound, pass.\n"
      "Exit 2 when the certificate fails.");
  add_common(certify, cli, true);
  certify->add_option("--tol", cli.tol, "residual tolerance (default 5e-3)")
      ->check(CLI::PositiveNumber);

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck",
      "Finite-difference check of both derivative formulas over random\n"
      "directions (20 traceless, 10 shift).\n"
      "Table gradcheck.tsv columns: direction_id, kind, analytic, numeric,\n"
      "gap, bound, pass. Exit 2 when too many directions miss the bound.");
  add_common(gradcheck, cli, true);
  gradcheck->add_option("--h", cli.fd_step, "central-difference step in [1e-4, 1e-1]");

  CLI::App* scan = app.add_subcommand(
      "scan",
      "Fixed-determinant maxima along ascending radii (default 1.0..1.5).\n"
      "Table scan.tsv columns: radius, value, stderr, sandwich_ok.\n"
      "Exit 3 on non-convergence, 2 when the scaling sandwich is violated.");
  add_common(scan, cli, true);
  scan->add_option("--radii", cli.radii, "comma-separated ascending radii >= 1")
      ->delimiter(',');

  CLI::App* mu_john = app.add_subcommand(
      "mu-john",
      "Boundary-measure limit on the support of f along shrinking radii\n"
      "(default 1.3,1.2,1.1,1.05,1.02). g in the file is ignored; the moving\n"
      "body is the unit ball. Weighting is density-weighted surface measure.\n"
      "Table john.tsv columns: radius, value, residual, residual_stderr,\n"
      "support_distance, converged. Exit 3 on non-convergence.");
  add_common(mu_john, cli, true);
  mu_john->add_option("--radii", cli.radii, "comma-separated descending radii > 1")
      ->delimiter(',');

  CLI::App* validate = app.add_subcommand(
      "validate",
      "Numeric self-checks: closed-form line integrals against adaptive\n"
      "quadrature and the polar surface identity on balls and ellipsoids.\n"
      "Table validate.tsv columns: check, value, reference, error, bound,\n"
      "pass. Exit 2 on any failed check.");
  add_common(validate, cli, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  mip_run_flags flags;
  mip_run_flags_init(&flags);
  if (!cli.scenario.empty()) flags.scenario_path = cli.scenario.c_str();
  flags.budget = cli.budget;
  flags.seed = cli.seed;
  flags.tol = cli.tol;
  flags.workers = cli.workers;
  if (!cli.radii.empty()) {
    flags.radii = cli.radii.data();
    flags.radii_len = cli.radii.size();
  }
  flags.fd_step = cli.fd_step;

  mip_report* report = nullptr;
  const mip_status status = mip_run(command.c_str(), &flags, &report);
  if (status != MIP_OK) {
    std::fprintf(stderr, "error: %s\n", mip_last_error());
    return 1;
  }

  std::printf("%s\n", mip_report_summary(report));
  if (!cli.out_dir.empty()) {
    const mip_status ws = mip_report_write(report, cli.out_dir.c_str());
    if (ws != MIP_OK) {
      std::fprintf(stderr, "error: %s\n", mip_last_error());
      mip_report_free(report);
      return 1;
    }
    std::printf("wrote %s/report.json\n", cli.out_dir.c_str());
  } else {
    for (size_t i = 0; i < mip_report_table_count(report); ++i)
      std::printf("-- %s\n%s", mip_report_table_name(report, i),
                  mip_report_table_content(report, i));
  }
  const int exit_code = mip_report_exit_code(report);
  mip_report_free(report);
  return exit_code;
}
