// commands.h — implementations behind the qlb CLI subcommands. Kept in a
// library so tests can invoke commands in-process; all functions throw
// io::InputError (exit 2) or io::ToleranceError (exit 1) on failure.

#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace qlb::cli {

struct DecomposeOptions {
  std::string omega_path;
  std::optional<double> dt;     // overrides the file's "dt"
  std::string gamma = "auto";   // "auto" or a number
  std::string out_path;
  bool precision_report = false;
};

void cmd_decompose(const DecomposeOptions& opts);

struct Fig2Options {
  int dim = 4;
  std::uint64_t seed = 1;
  int n_max = 10;
  int instances = 5;
  double dt = 1.0;
  std::string out_path;
};

// Writes the N-table to out_path and the γ/γ₀ sweep (at N = n_max) to
// out_path with a ".gamma" suffix inserted before the extension.
void cmd_fig2(const Fig2Options& opts);

std::string gamma_sweep_path(const std::string& out_path);

struct Fig3Options {
  double diffusivity = 0.05;
  double dt_max = 4.0;
  int samples = 200;
  std::string out_path;
};

void cmd_fig3(const Fig3Options& opts);

struct LbRunOptions {
  std::string config_path;
  std::string out_path;
  std::string density_out;  // optional full-density dump
};

void cmd_lb_run(const LbRunOptions& opts);

struct QsimRunOptions {
  std::string config_path;
  std::string moments_out;
  std::string herald_out;
  std::string field_out;  // optional
  std::string state_out;  // optional
};

void cmd_qsim_run(const QsimRunOptions& opts);

struct CompareOptions {
  std::string lb_config_path;
  std::string qsim_config_path;
  std::string out_path;  // report JSON; optional
  bool precision_report = false;
};

// Runs the collision-equivalence, per-sandwich streaming and herald
// bookkeeping checks; throws ToleranceError when any tolerance is violated.
void cmd_compare(const CompareOptions& opts);

}  // namespace qlb::cli
