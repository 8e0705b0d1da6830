#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "qvi/commands.hpp"

using namespace qvi;

int main(int argc, char** argv) {
  CLI::App app{"qvisolve: solve, verify and probe quasi-variational inequalities"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::string report_path;
  std::optional<double> tol, r_init, r_max;
  std::optional<int> max_iter;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::string mode;
  std::string p, y, y_star, x, probe_kind = "pseudo";

  auto common = [&](CLI::App* sub) {
    sub->add_option("problem", opts.problem, "problem file or builtin:<key>")->required();
    sub->add_option("--tol", tol, "solver or acceptance tolerance");
    sub->add_option("--max-iter", max_iter, "inner iteration limit");
    sub->add_option("--r-init", r_init, "initial truncation radius");
    sub->add_option("--r-max", r_max, "largest truncation radius");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--samples", samples, "sample count for certificates, verifiers and probes");
    sub->add_option("--report", report_path, "write the report here instead of stdout");
    sub->add_option("--mode", mode, "pseudo, star or alternative")
        ->check(CLI::IsMember({"pseudo", "star", "alternative"}));
    sub->add_flag("--timing", opts.timing, "include wall-clock time in the report");
  };

  CLI::App* solve = app.add_subcommand("solve", "solve a problem");
  common(solve);
  CLI::App* verify = app.add_subcommand("verify", "check a candidate without solving");
  common(verify);
  verify->add_option("--p", p, "price candidate, JSON array");
  verify->add_option("--y", y, "quantity candidate, JSON array");
  verify->add_option("--y-star", y_star, "certificate y* (qvi), JSON array");
  verify->add_option("--x", x, "point candidate (gnep, vi), JSON array");
  CLI::App* probe = app.add_subcommand("probe", "monotonicity and coercivity probes");
  common(probe);
  probe->add_option("--kind", probe_kind, "pseudo, quasi or coercivity")
      ->check(CLI::IsMember({"pseudo", "quasi", "coercivity"}));
  probe->add_option("--r-p", opts.r_p, "inner coercivity radius");
  probe->add_option("--r-test", opts.r_test, "outer radius of the sampled shell");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    SolverOverrides& o = opts.overrides;
    o.tol = tol;
    o.max_iter = max_iter;
    o.r_init = r_init;
    o.r_max = r_max;
    o.seed = seed;
    o.samples = samples;
    if (!mode.empty()) o.mode = parse_mode(mode);
    if (!p.empty()) opts.p = parse_vector_literal(p, "--p");
    if (!y.empty()) opts.y = parse_vector_literal(y, "--y");
    if (!y_star.empty()) opts.y_star = parse_vector_literal(y_star, "--y-star");
    if (!x.empty()) opts.x = parse_vector_literal(x, "--x");
    opts.probe = parse_probe_kind(probe_kind);

    CommandResult res;
    if (solve->parsed()) {
      res = cmd_solve(opts);
    } else if (verify->parsed()) {
      res = cmd_verify(opts);
    } else {
      res = cmd_probe(opts);
    }
    if (report_path.empty()) {
      std::cout << res.report;
    } else {
      std::ofstream out(report_path, std::ios::binary);
      out << res.report;
      if (!out) {
        std::cerr << "error: cannot write report to " << report_path << "\n";
        return 1;
      }
      const auto st = res.report.find("\nstatus = ") + 1;
      std::cout << res.report.substr(st, res.report.find('\n', st) - st) << "\n";
    }
    return res.exit_code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
