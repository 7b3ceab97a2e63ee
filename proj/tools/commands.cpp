#include "commands.h"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "qlb/decompose.h"
#include "qlb/io.h"
#include "qlb/lbm.h"
#include "qlb/linalg.h"
#include "qlb/protocol.h"
#include "qlb/rng.h"
#include "qlb/statevector.h"

namespace qlb::cli {

namespace {

using io::json;

std::string fmt(double v) { return io::format_double(v); }

json complex_pair(cplx v) { return json::array({v.real(), v.imag()}); }

// ----------------------------------------------------------- config load ---

lbm::TransportModel parse_lb_model(const json& config) {
  io::check_keys(config,
                 {"nx", "ny", "D", "velocity", "init", "steps", "sample_every",
                  "omega4"},
                 "lb scenario");
  for (const char* key : {"nx", "ny", "D", "velocity", "init", "steps"}) {
    if (!config.contains(key)) {
      throw io::InputError(std::string("lb scenario: missing key \"") + key + "\"");
    }
  }
  const json& vel = config.at("velocity");
  io::check_keys(vel, {"type", "ux", "uy", "u0"}, "lb velocity");
  lbm::VelocityField field;
  const std::string type = vel.at("type").get<std::string>();
  if (type == "constant") {
    field.type = lbm::VelocityField::Type::constant;
    field.ux = vel.value("ux", 0.0);
    field.uy = vel.value("uy", 0.0);
    if (std::abs(field.ux) > 0.5 || std::abs(field.uy) > 0.5) {
      throw io::InputError("lb velocity: |U| must be <= 0.5 lattice units");
    }
  } else if (type == "couette") {
    field.type = lbm::VelocityField::Type::couette;
    field.u0 = vel.value("u0", 0.0);
    if (std::abs(field.u0) > 0.5) {
      throw io::InputError("lb velocity: |u0| must be <= 0.5");
    }
  } else {
    throw io::InputError("lb velocity: unknown type \"" + type + "\"");
  }
  return lbm::TransportModel::make(config.at("D").get<double>(), field,
                                   config.value("omega4", 1.0));
}

struct LbScenario {
  int nx = 0;
  int ny = 0;
  long steps = 0;
  long sample_every = 1;
  double x0 = 0.0, y0 = 0.0, sigma = 1.0;
  lbm::TransportModel model;
};

LbScenario parse_lb_scenario(const json& config) {
  LbScenario s;
  s.model = parse_lb_model(config);
  s.nx = config.at("nx").get<int>();
  s.ny = config.at("ny").get<int>();
  if (s.nx < 2 || s.ny < 2 || s.nx > 4096 || s.ny > 4096) {
    throw io::InputError("lb scenario: grid sizes must lie in [2, 4096]");
  }
  s.steps = config.at("steps").get<long>();
  if (s.steps < 0 || s.steps > 2000000) {
    throw io::InputError("lb scenario: steps out of range");
  }
  s.sample_every = config.value("sample_every", 1L);
  if (s.sample_every < 1) {
    throw io::InputError("lb scenario: sample_every must be positive");
  }
  const json& init = config.at("init");
  io::check_keys(init, {"type", "x0", "y0", "sigma"}, "lb init");
  if (init.at("type").get<std::string>() != "gaussian") {
    throw io::InputError("lb init: only gaussian initialization is supported");
  }
  s.x0 = init.value("x0", s.nx / 2.0);
  s.y0 = init.value("y0", s.ny / 2.0);
  s.sigma = init.value("sigma", 4.0);
  if (s.sigma <= 0.0) throw io::InputError("lb init: sigma must be positive");
  return s;
}

protocol::ProtocolConfig parse_qsim_config(const json& config) {
  io::check_keys(config,
                 {"cutoff", "dt", "n_substeps", "n_steps", "theta", "k_b",
                  "collision", "init", "herald_mode", "seed", "grid"},
                 "qsim config");
  protocol::ProtocolConfig pc;
  pc.cutoff = config.value("cutoff", 32);
  if (pc.cutoff < 2 || pc.cutoff > 256) {
    throw io::InputError("qsim config: cutoff must lie in [2, 256]");
  }
  pc.dt = config.value("dt", 1.0);
  if (!(pc.dt >= 0.0)) throw io::InputError("qsim config: dt must be >= 0");
  pc.n_substeps = config.value("n_substeps", 1);
  if (pc.n_substeps < 1 || pc.n_substeps > 10000) {
    throw io::InputError("qsim config: n_substeps must lie in [1, 10000]");
  }
  pc.n_steps = config.value("n_steps", 1L);
  if (pc.n_steps < 0 || pc.n_steps > 100000) {
    throw io::InputError("qsim config: n_steps out of range");
  }
  if (config.contains("theta") && config.contains("k_b")) {
    throw io::InputError("qsim config: give either theta or k_b, not both");
  }
  if (config.contains("theta")) {
    pc.theta = config.at("theta").get<double>();
  } else {
    pc.theta = config.value("k_b", 1.0) * pc.dt;
  }
  if (!config.contains("collision")) {
    throw io::InputError("qsim config: missing collision");
  }
  const json& col = config.at("collision");
  io::check_keys(col, {"type", "m", "u0", "D"}, "qsim collision");
  const std::string type = col.at("type").get<std::string>();
  if (type == "matrix") {
    if (!col.contains("m")) throw io::InputError("qsim collision: missing m");
    pc.collision = protocol::MatrixCollision{
        io::parse_square_matrix(col.at("m"), "qsim collision m")};
  } else if (type == "couette") {
    protocol::CouetteCollision cc;
    cc.u0 = col.value("u0", 0.0);
    cc.diffusivity = col.value("D", 0.05);
    pc.collision = cc;
  } else {
    throw io::InputError("qsim collision: unknown type \"" + type + "\"");
  }
  if (!config.contains("init")) throw io::InputError("qsim config: missing init");
  const json& init = config.at("init");
  io::check_keys(init, {"eta", "gaussians"}, "qsim init");
  const json& eta = init.at("eta");
  if (!eta.is_array() || eta.size() != 4) {
    throw io::InputError("qsim init: eta must have 4 entries");
  }
  for (int i = 0; i < 4; ++i) pc.eta[i] = eta[static_cast<std::size_t>(i)].get<double>();
  if (init.contains("gaussians")) {
    const json& packets = init.at("gaussians");
    if (!packets.is_array() || packets.size() != 4) {
      throw io::InputError("qsim init: gaussians must have 4 entries");
    }
    for (std::size_t i = 0; i < 4; ++i) {
      io::check_keys(packets[i], {"x0", "y0", "sigma"}, "qsim gaussian");
      pc.packets[i].x0 = packets[i].value("x0", 0.0);
      pc.packets[i].y0 = packets[i].value("y0", 0.0);
      pc.packets[i].sigma = packets[i].value("sigma", sv::GaussianSpec{}.sigma);
    }
  }
  const std::string mode = config.value("herald_mode", std::string("postselect"));
  if (mode == "postselect") {
    pc.herald_mode = protocol::HeraldMode::postselect;
  } else if (mode == "sample") {
    pc.herald_mode = protocol::HeraldMode::sample;
  } else {
    throw io::InputError("qsim config: herald_mode must be postselect or sample");
  }
  pc.seed = config.value("seed", 0ULL);
  if (config.contains("grid")) {
    const json& grid = config.at("grid");
    io::check_keys(grid, {"min", "max", "points"}, "qsim grid");
    sv::FieldGrid fg;
    fg.min = grid.at("min").get<double>();
    fg.max = grid.at("max").get<double>();
    fg.points = grid.at("points").get<int>();
    if (fg.points < 1 || fg.points > 4096 || fg.max < fg.min) {
      throw io::InputError("qsim grid: malformed grid");
    }
    pc.field_grid = fg;
  }
  return pc;
}

// ------------------------------------------------------------ CSV pieces ---

std::string csv_comment(const json& config) {
  return "# config: " + config.dump() + "\n";
}

void append_moment_header(std::string& out) {
  out += "step,ledger,cumulative_success";
  for (int i = 1; i <= 4; ++i) {
    const std::string n = std::to_string(i);
    out += ",weight_" + n + ",mean_x_" + n + ",mean_y_" + n + ",x2_x_" + n +
           ",x2_y_" + n;
  }
  out += "\n";
}

void append_moment_row(std::string& out, const protocol::MomentRow& row) {
  out += std::to_string(row.step);
  out += "," + fmt(row.ledger) + "," + fmt(row.cumulative_success);
  for (const protocol::ComponentMoments& cm : row.components) {
    out += "," + fmt(cm.weight) + "," + fmt(cm.mean_x) + "," + fmt(cm.mean_y) +
           "," + fmt(cm.x2_x) + "," + fmt(cm.x2_y);
  }
  out += "\n";
}

}  // namespace

// -------------------------------------------------------------- decompose ---

void cmd_decompose(const DecomposeOptions& opts) {
  const json input = io::load_json_file(opts.omega_path);
  io::check_keys(input, {"m", "dt"}, "omega file");
  if (!input.contains("m")) throw io::InputError("omega file: missing \"m\"");
  const Eigen::MatrixXd m = io::parse_square_matrix(input.at("m"), "omega file m");
  double dt = 1.0;
  if (opts.dt.has_value()) {
    dt = *opts.dt;
  } else if (input.contains("dt")) {
    dt = input.at("dt").get<double>();
  } else {
    throw io::InputError("omega file: missing \"dt\" (or pass --dt)");
  }

  const GeneratorMatrix gen = GeneratorMatrix::from_matrix(m);
  const CollisionOperator c = build_collision(gen, dt);
  const auto window = gamma_window(c.spectrum);
  if (!window.has_value()) {
    std::cerr << "infeasible gamma window: lower bound exceeds upper bound for "
                 "this spectrum\n";
    throw io::ToleranceError("decompose: infeasible gamma window");
  }

  double gamma = 0.0;
  if (opts.gamma == "auto") {
    gamma = optimal_gamma(*window);
  } else {
    try {
      gamma = std::stod(opts.gamma);
    } catch (const std::exception&) {
      throw io::InputError("--gamma must be a number or \"auto\"");
    }
    if (gamma < window->lower - 1e-12 || gamma > window->upper + 1e-12) {
      std::cerr << "gamma " << fmt(gamma) << " outside feasible window ["
                << fmt(window->lower) << ", " << fmt(window->upper) << "]\n";
      throw io::ToleranceError("decompose: gamma outside feasible window");
    }
  }

  const UnitarySumDecomposition dec = decompose(c, gamma);
  const double p_fail = failure_bound(dec);

  json out;
  out["dt"] = dt;
  out["gamma"] = gamma;
  out["window"] = {{"lower", window->lower}, {"upper", window->upper}};
  out["spectrum"] = json::array();
  for (Eigen::Index i = 0; i < c.spectrum.size(); ++i) {
    out["spectrum"].push_back(complex_pair(c.spectrum[i]));
  }
  out["u_alpha"] = io::matrix_to_json(dec.u_alpha);
  out["u_beta"] = io::matrix_to_json(dec.u_beta);
  out["p_fail"] = p_fail;
  out["reconstruction_residual"] = dec.reconstruction_residual;
  out["unitarity_residual"] = dec.unitarity_residual;
  out["commutator_residual"] = dec.commutator_residual;
  io::write_text_file(io::resolve_output_path(opts.out_path), out.dump(2) + "\n");

  if (opts.precision_report) {
    std::cerr << "reconstruction residual: " << fmt(dec.reconstruction_residual)
              << "\nunitarity residual:     " << fmt(dec.unitarity_residual)
              << "\ncommutator residual:    " << fmt(dec.commutator_residual)
              << "\n";
    // The min-based choice min{|δ_m−1|, |δ_M−1|} differs from the feasible
    // window edge whenever the two distances straddle the intersection.
    const double dmin = std::abs(c.spectrum[0]);
    const double dmax = std::abs(c.spectrum[c.spectrum.size() - 1]);
    const double paper_gamma0 = std::min(std::abs(dmin - 1.0), std::abs(dmax - 1.0));
    if (std::abs(paper_gamma0 - window->lower) > 1e-12) {
      std::cerr << "note: min-based gamma0 " << fmt(paper_gamma0)
                << " differs from the feasible window edge "
                << fmt(window->lower) << "\n";
    }
  }
}

// ------------------------------------------------------------------- fig2 ---

std::string gamma_sweep_path(const std::string& out_path) {
  std::filesystem::path p(out_path);
  const std::string stem = p.stem().string();
  const std::string ext = p.extension().string();
  p.replace_filename(stem + ".gamma" + ext);
  return p.string();
}

void cmd_fig2(const Fig2Options& opts) {
  if (opts.dim < 2 || opts.dim > 16) {
    throw io::InputError("fig2: dim must lie in [2, 16]");
  }
  if (opts.n_max < 1 || opts.n_max > 1000) {
    throw io::InputError("fig2: n-max must lie in [1, 1000]");
  }
  if (opts.instances < 1 || opts.instances > 100) {
    throw io::InputError("fig2: instances must lie in [1, 100]");
  }
  const json config = {{"command", "fig2"}, {"dim", opts.dim},
                       {"seed", opts.seed}, {"n_max", opts.n_max},
                       {"instances", opts.instances}, {"dt", opts.dt}};

  Rng rng(opts.seed);
  std::string table = csv_comment(config);
  table += "# seed: " + std::to_string(opts.seed) + "\n";
  table += "instance,N,p_step,p_accumulated\n";
  std::string sweep = csv_comment(config);
  sweep += "# seed: " + std::to_string(opts.seed) + "\n";
  sweep += "instance,gamma_ratio,p_step\n";

  std::vector<double> ratios;
  for (int i = 0; i <= 20; ++i) ratios.push_back(1.0 + 0.05 * i);

  for (int inst = 0; inst < opts.instances; ++inst) {
    const double radius = rng.uniform(0.4, 1.0);
    const GeneratorMatrix gen =
        random_dissipative_generator(rng, opts.dim, radius);
    for (const SuccessPoint& point : success_curve(gen, opts.dt, opts.n_max)) {
      table += std::to_string(inst) + "," + std::to_string(point.n) + "," +
               fmt(point.p_step) + "," + fmt(point.p_accumulated) + "\n";
    }
    for (const GammaSweepPoint& point :
         gamma_sweep(gen, opts.dt, opts.n_max, ratios)) {
      sweep += std::to_string(inst) + "," + fmt(point.ratio) + "," +
               fmt(point.p_step) + "\n";
    }
  }
  io::write_text_file(io::resolve_output_path(opts.out_path), table);
  io::write_text_file(io::resolve_output_path(gamma_sweep_path(opts.out_path)),
                      sweep);
}

// ------------------------------------------------------------------- fig3 ---

void cmd_fig3(const Fig3Options& opts) {
  if (opts.samples < 2 || opts.samples > 100000) {
    throw io::InputError("fig3: samples must lie in [2, 100000]");
  }
  if (!(opts.dt_max > 0.0)) throw io::InputError("fig3: dt-max must be positive");
  const json config = {{"command", "fig3"}, {"diffusivity", opts.diffusivity},
                       {"dt_max", opts.dt_max}, {"samples", opts.samples}};
  const lbm::TransportModel model =
      lbm::TransportModel::make(opts.diffusivity, lbm::VelocityField{});
  const Eigen::Matrix4d a = lbm::scattering_matrix(model).a;
  const GeneratorMatrix gen = GeneratorMatrix::from_matrix(-a);

  std::string out = csv_comment(config);
  out += "# spectrum sorted ascending\n";
  out += "dt,delta_1,delta_2,delta_3,delta_4,gamma_lower,gamma_upper\n";
  const double step = opts.dt_max / opts.samples;
  for (int i = 0; i < opts.samples; ++i) {
    const double dt = i * step;
    const CollisionOperator c = build_collision(gen, dt);
    const auto window = gamma_window(c.spectrum);
    out += fmt(dt);
    for (int k = 0; k < 4; ++k) out += "," + fmt(c.spectrum[k].real());
    if (window.has_value()) {
      out += "," + fmt(window->lower) + "," + fmt(window->upper);
    } else {
      out += ",nan,nan";
    }
    out += "\n";
  }
  io::write_text_file(io::resolve_output_path(opts.out_path), out);
}

// ------------------------------------------------------------------ lb run ---

void cmd_lb_run(const LbRunOptions& opts) {
  const json config = io::load_json_file(opts.config_path);
  const LbScenario s = parse_lb_scenario(config);
  lbm::LatticeField field =
      lbm::gaussian_init(s.nx, s.ny, s.x0, s.y0, s.sigma, s.model);
  const lbm::RunResult result =
      lbm::run(std::move(field), s.model, s.steps, s.sample_every);

  std::string out = csv_comment(config);
  out += "step,mass,mean_x,mean_y,var_x,var_y\n";
  for (const lbm::MomentSample& m : result.samples) {
    out += std::to_string(m.step) + "," + fmt(m.mass) + "," + fmt(m.mean_x) +
           "," + fmt(m.mean_y) + "," + fmt(m.var_x) + "," + fmt(m.var_y) + "\n";
  }
  io::write_text_file(io::resolve_output_path(opts.out_path), out);

  if (!opts.density_out.empty()) {
    std::string dump = csv_comment(config);
    dump += "x,y,rho\n";
    for (int y = 0; y < result.final_field.ny; ++y) {
      for (int x = 0; x < result.final_field.nx; ++x) {
        dump += std::to_string(x) + "," + std::to_string(y) + "," +
                fmt(result.final_field.density(x, y)) + "\n";
      }
    }
    io::write_text_file(io::resolve_output_path(opts.density_out), dump);
  }
}

// ---------------------------------------------------------------- qsim run ---

void cmd_qsim_run(const QsimRunOptions& opts) {
  const json config = io::load_json_file(opts.config_path);
  const protocol::ProtocolConfig pc = parse_qsim_config(config);
  const protocol::ProtocolResult result = protocol::run_protocol(pc);

  std::string moments = csv_comment(config);
  append_moment_header(moments);
  for (const protocol::MomentRow& row : result.moments) {
    append_moment_row(moments, row);
  }
  io::write_text_file(io::resolve_output_path(opts.moments_out), moments);

  std::string herald = csv_comment(config);
  herald += "step,substep,p,outcome,cumulative\n";
  for (const protocol::HeraldRow& row : result.herald_rows) {
    herald += std::to_string(row.step) + "," + std::to_string(row.substep) +
              "," + fmt(row.probability) + "," + to_string(row.outcome) + "," +
              fmt(row.cumulative) + "\n";
  }
  io::write_text_file(io::resolve_output_path(opts.herald_out), herald);

  if (!opts.field_out.empty()) {
    if (!result.final_field.has_value()) {
      throw io::InputError("qsim run: --field-out requires a \"grid\" entry "
                           "in the config");
    }
    const sv::ExtractedField& field = *result.final_field;
    const std::vector<double> xs = field.grid.coords();
    std::string dump = csv_comment(config);
    dump += "component,x1,x2,f\n";
    for (int s = 0; s < 4; ++s) {
      for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < xs.size(); ++j) {
          dump += std::to_string(s + 1) + "," + fmt(xs[i]) + "," + fmt(xs[j]) +
                  "," +
                  fmt(field.f[static_cast<std::size_t>(s)](
                      static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) +
                  "\n";
        }
      }
    }
    io::write_text_file(io::resolve_output_path(opts.field_out), dump);
  }

  if (!opts.state_out.empty()) {
    const sv::HybridState& state = result.final_state;
    std::string dump = csv_comment(config);
    dump += "component,n_x,n_y,re,im\n";
    for (int s = 0; s < 4; ++s) {
      for (int nx = 0; nx < state.cutoff; ++nx) {
        for (int ny = 0; ny < state.cutoff; ++ny) {
          const cplx v = state.at(0, s, nx, ny);
          dump += std::to_string(s + 1) + "," + std::to_string(nx) + "," +
                  std::to_string(ny) + "," + fmt(v.real()) + "," +
                  fmt(v.imag()) + "\n";
        }
      }
    }
    io::write_text_file(io::resolve_output_path(opts.state_out), dump);
  }
}

// ----------------------------------------------------------------- compare ---

void cmd_compare(const CompareOptions& opts) {
  const json lb_config = io::load_json_file(opts.lb_config_path);
  const json qsim_config = io::load_json_file(opts.qsim_config_path);
  const LbScenario scenario = parse_lb_scenario(lb_config);
  protocol::ProtocolConfig pc = parse_qsim_config(qsim_config);

  // Physics-identity checks before comparing anything.
  Eigen::MatrixXd m;
  if (std::holds_alternative<protocol::CouetteCollision>(pc.collision)) {
    const auto& cc = std::get<protocol::CouetteCollision>(pc.collision);
    if (std::abs(cc.diffusivity - scenario.model.diffusivity) > 1e-12) {
      throw io::InputError("compare: lb and qsim configs use different D");
    }
    if (scenario.model.velocity.type != lbm::VelocityField::Type::couette) {
      throw io::InputError("compare: qsim couette collision needs an lb "
                           "couette velocity");
    }
    m = protocol::build_couette_generator(cc.u0, cc.diffusivity, pc.cutoff,
                                          pc.dt)
            .generator.assembled;
  } else {
    m = std::get<protocol::MatrixCollision>(pc.collision).m;
    if (scenario.model.velocity.type != lbm::VelocityField::Type::constant ||
        scenario.model.velocity.ux != 0.0 || scenario.model.velocity.uy != 0.0) {
      throw io::InputError("compare: matrix collision comparison requires a "
                           "zero constant velocity in the lb config");
    }
    const Eigen::Matrix4d expected =
        lbm::omega_matrix(scenario.model, 0.0, 0.0);
    if (linalg::max_abs(Eigen::MatrixXd(m - expected)) > 1e-9) {
      throw io::InputError("compare: qsim collision matrix does not match the "
                           "lb model's scattering generator (different D?)");
    }
  }

  // Collision equivalence on a uniform bosonic background (theta = 0).
  protocol::ProtocolConfig collision_pc = pc;
  collision_pc.theta = 0.0;
  collision_pc.herald_mode = protocol::HeraldMode::postselect;
  collision_pc.packets = {};  // vacuum-width packets at the origin
  collision_pc.field_grid.reset();
  if (collision_pc.eta.squaredNorm() <= 0.0) {
    collision_pc.eta = Eigen::Vector4d(0.5, 0.3, 0.15, 0.05);
  }
  const protocol::ProtocolResult qrun = protocol::run_protocol(collision_pc);

  Eigen::VectorXcd classical;
  {
    const double t = collision_pc.dt * collision_pc.n_steps;
    Eigen::MatrixXcd full;
    if (std::holds_alternative<protocol::MatrixCollision>(pc.collision)) {
      full = linalg::expm_sym(m, t).cast<cplx>();
      classical = full * collision_pc.eta.cast<cplx>();
    } else {
      const CollisionOperator c = build_collision_general(m, t);
      full = c.entries;
      // Uniform background occupies the Fock-0 column of each component.
      Eigen::VectorXcd f0 = Eigen::VectorXcd::Zero(4 * pc.cutoff);
      for (int s = 0; s < 4; ++s) f0[s * pc.cutoff] = collision_pc.eta[s];
      classical = full * f0;
    }
  }
  double collision_error = 0.0;
  double mass_error = 0.0;
  {
    const sv::HybridState& state = qrun.final_state;
    cplx quantum_mass(0.0, 0.0), classical_mass(0.0, 0.0);
    if (std::holds_alternative<protocol::MatrixCollision>(pc.collision)) {
      for (int s = 0; s < 4; ++s) {
        const cplx q = state.ledger * state.at(0, s, 0, 0);
        collision_error = std::max(collision_error, std::abs(q - classical[s]));
        quantum_mass += q;
        classical_mass += classical[s];
      }
    } else {
      for (int s = 0; s < 4; ++s) {
        for (int ny = 0; ny < pc.cutoff; ++ny) {
          const cplx q = state.ledger * state.at(0, s, 0, ny);
          collision_error =
              std::max(collision_error, std::abs(q - classical[s * pc.cutoff + ny]));
          quantum_mass += q;
          classical_mass += classical[s * pc.cutoff + ny];
        }
      }
    }
    mass_error = std::abs(quantum_mass - classical_mass);
  }

  // Initial mass-mode invariance: sum of eta vs sum of classical components.
  const double mass_mode_error =
      std::abs(classical.sum().real() - collision_pc.eta.sum());

  // Per-sandwich streaming displacement: ⟨x̂⟩ moves by ±√2·θ from vacuum for
  // β eigenstates (components 1 and 3 have β = ±1).
  double streaming_error = 0.0;
  {
    const double theta = pc.theta;
    for (const sv::Axis axis : {sv::Axis::x, sv::Axis::y}) {
      for (const int spin : {0, 2}) {
        sv::HybridState state = sv::HybridState::zero(pc.cutoff, false);
        state.at(0, spin, 0, 0) = 1.0;
        const auto d = sv::conditional_displacement(axis, theta,
                                                    sv::beta_op(), pc.cutoff);
        d.apply(state);
        const Eigen::MatrixXcd x_op =
            sv::ModeAlgebra(pc.cutoff).position().cast<cplx>();
        const double mean =
            state.component_mode_moment(spin, axis, x_op).real();
        const double expected = (spin == 0 ? 1.0 : -1.0) * std::numbers::sqrt2 * theta;
        streaming_error = std::max(streaming_error, std::abs(mean - expected));
      }
    }
  }

  // Herald bookkeeping: cumulative equals the product of recorded p values.
  double herald_error = 0.0;
  {
    double product = 1.0;
    for (const protocol::HeraldEntry& e : qrun.herald.per_substep) {
      product *= e.probability;
    }
    herald_error = std::abs(product - qrun.herald.cumulative_success);
  }

  const double collision_tol = 1e-6;
  const double streaming_tol = 1e-6;
  const double mass_tol = 1e-8;
  const double herald_tol = 1e-12;
  const bool pass = collision_error <= collision_tol &&
                    streaming_error <= streaming_tol &&
                    mass_error <= mass_tol && herald_error <= herald_tol &&
                    mass_mode_error <= mass_tol;

  json report;
  report["collision_equivalence_error"] = collision_error;
  report["collision_mass_error"] = mass_error;
  report["classical_mass_mode_error"] = mass_mode_error;
  report["streaming_displacement_error"] = streaming_error;
  report["herald_product_error"] = herald_error;
  report["herald_cumulative_success"] = qrun.herald.cumulative_success;
  report["tolerances"] = {{"collision", collision_tol},
                          {"streaming", streaming_tol},
                          {"mass", mass_tol},
                          {"herald", herald_tol}};
  report["pass"] = pass;

  std::cout << "collision equivalence error: " << fmt(collision_error)
            << " (tol " << fmt(collision_tol) << ")\n"
            << "mass-mode error:             " << fmt(mass_error) << " (tol "
            << fmt(mass_tol) << ")\n"
            << "streaming displacement error: " << fmt(streaming_error)
            << " (tol " << fmt(streaming_tol) << ")\n"
            << "herald product error:        " << fmt(herald_error) << " (tol "
            << fmt(herald_tol) << ")\n"
            << (pass ? "PASS" : "FAIL") << "\n";
  if (!opts.out_path.empty()) {
    io::write_text_file(io::resolve_output_path(opts.out_path),
                        report.dump(2) + "\n");
  }
  if (!pass) {
    throw io::ToleranceError("compare: tolerances violated");
  }
}

}  // namespace qlb::cli
