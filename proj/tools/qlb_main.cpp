// qlb — command-line front end: decompose | fig2 | fig3 | lb run | qsim run |
// compare. Exit codes: 0 success, 1 tolerance violation, 2 input error.

#include <CLI11.hpp>
#include <iostream>
#include <stdexcept>

#include "commands.h"
#include "qlb/io.h"
#include "qlb/kernels.h"

int main(int argc, char** argv) {
  CLI::App app{"qlb — heralded quantum lattice-Boltzmann simulator"};
  app.require_subcommand(1);
  bool precision_report = false;
  app.add_flag("--precision-report", precision_report,
               "print residual diagnostics to stderr");
  bool show_backend = false;
  app.add_flag("--kernel-backend", show_backend,
               "print the selected kernel backend to stderr");

  qlb::cli::DecomposeOptions dec_opts;
  CLI::App* dec = app.add_subcommand(
      "decompose", "decompose exp(M dt) into U_alpha + gamma U_beta");
  dec->add_option("--omega", dec_opts.omega_path,
                  "JSON file with the generator matrix (field \"m\", optional \"dt\")")
      ->required();
  double dec_dt = 0.0;
  CLI::Option* dec_dt_opt =
      dec->add_option("--dt", dec_dt, "evolution time (overrides the file)");
  dec->add_option("--gamma", dec_opts.gamma, "weight gamma or \"auto\"")
      ->capture_default_str();
  dec->add_option("--out", dec_opts.out_path, "output JSON path")->required();

  qlb::cli::Fig2Options fig2_opts;
  CLI::App* fig2 = app.add_subcommand(
      "fig2", "success probabilities vs N for random dissipative generators");
  fig2->add_option("--dim", fig2_opts.dim)->capture_default_str();
  fig2->add_option("--seed", fig2_opts.seed)->capture_default_str();
  fig2->add_option("--n-max", fig2_opts.n_max)->capture_default_str();
  fig2->add_option("--instances", fig2_opts.instances)->capture_default_str();
  fig2->add_option("--dt", fig2_opts.dt)->capture_default_str();
  fig2->add_option("--out", fig2_opts.out_path, "output CSV path")->required();

  qlb::cli::Fig3Options fig3_opts;
  CLI::App* fig3 = app.add_subcommand(
      "fig3", "four-speed collision spectrum and gamma window vs dt");
  fig3->add_option("--diffusivity", fig3_opts.diffusivity)->capture_default_str();
  fig3->add_option("--dt-max", fig3_opts.dt_max)->capture_default_str();
  fig3->add_option("--samples", fig3_opts.samples)->capture_default_str();
  fig3->add_option("--out", fig3_opts.out_path, "output CSV path")->required();

  CLI::App* lb = app.add_subcommand("lb", "classical lattice-Boltzmann solver");
  lb->require_subcommand(1);
  qlb::cli::LbRunOptions lb_opts;
  CLI::App* lb_run = lb->add_subcommand("run", "run a scenario config");
  lb_run->add_option("--config", lb_opts.config_path, "scenario JSON")->required();
  lb_run->add_option("--out", lb_opts.out_path, "moments CSV path")->required();
  lb_run->add_option("--density-out", lb_opts.density_out,
                     "optional final density CSV");

  CLI::App* qsim = app.add_subcommand("qsim", "quantum protocol simulator");
  qsim->require_subcommand(1);
  qlb::cli::QsimRunOptions qsim_opts;
  CLI::App* qsim_run = qsim->add_subcommand("run", "run a protocol config");
  qsim_run->add_option("--config", qsim_opts.config_path, "protocol JSON")
      ->required();
  qsim_run->add_option("--moments-out", qsim_opts.moments_out)->required();
  qsim_run->add_option("--herald-out", qsim_opts.herald_out)->required();
  qsim_run->add_option("--field-out", qsim_opts.field_out,
                       "optional field dump CSV (needs \"grid\" in config)");
  qsim_run->add_option("--state-out", qsim_opts.state_out,
                       "optional statevector dump CSV");

  qlb::cli::CompareOptions cmp_opts;
  CLI::App* cmp = app.add_subcommand(
      "compare", "quantum-vs-classical equivalence report");
  cmp->add_option("--lb", cmp_opts.lb_config_path, "lb scenario JSON")->required();
  cmp->add_option("--qsim", cmp_opts.qsim_config_path, "protocol JSON")->required();
  cmp->add_option("--out", cmp_opts.out_path, "report JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (show_backend) {
    std::cerr << "kernel backend: " << qlb::kernels::backend_name() << "\n";
  }

  try {
    if (*dec) {
      if (*dec_dt_opt) dec_opts.dt = dec_dt;
      dec_opts.precision_report = precision_report;
      qlb::cli::cmd_decompose(dec_opts);
    } else if (*fig2) {
      qlb::cli::cmd_fig2(fig2_opts);
    } else if (*fig3) {
      qlb::cli::cmd_fig3(fig3_opts);
    } else if (*lb_run) {
      qlb::cli::cmd_lb_run(lb_opts);
    } else if (*qsim_run) {
      qlb::cli::cmd_qsim_run(qsim_opts);
    } else if (*cmp) {
      cmp_opts.precision_report = precision_report;
      qlb::cli::cmd_compare(cmp_opts);
    }
  } catch (const qlb::io::ToleranceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const qlb::io::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
