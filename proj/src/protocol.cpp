#include "qlb/protocol.h"

#include <cmath>

#include "qlb/io.h"
#include "qlb/kernels.h"
#include "qlb/lbm.h"
#include "qlb/linalg.h"

namespace qlb::protocol {

const char* to_string(HeraldOutcome outcome) {
  switch (outcome) {
    case HeraldOutcome::success:
      return "success";
    case HeraldOutcome::failure:
      return "failure";
    case HeraldOutcome::postselected:
      return "postselected";
  }
  return "unknown";
}

void HeraldRecord::append(const HeraldEntry& entry, double ledger_multiplier) {
  per_substep.push_back(entry);
  cumulative_success *= entry.probability;
  ledger_factor *= ledger_multiplier;
}

HeraldEntry lcu_apply(sv::HybridState& state,
                      const UnitarySumDecomposition& dec, HeraldMode mode,
                      Rng* rng) {
  if (!state.has_ancilla) {
    throw io::InputError("lcu_apply: state has no herald ancilla");
  }
  if (state.ancilla_one_weight() > 1e-10) {
    throw std::logic_error("lcu_apply: ancilla is not reset to |0>");
  }
  const Eigen::Index dim = dec.u_alpha.rows();
  const bool spin_only = dim == 4;
  if (!spin_only && dim != static_cast<Eigen::Index>(4) * state.cutoff) {
    throw io::InputError("lcu_apply: decomposition dimension matches neither "
                         "the spin nor the spin⊗mode_y subspace");
  }
  if (mode == HeraldMode::sample && rng == nullptr) {
    throw io::InputError("lcu_apply: sample mode needs an RNG");
  }

  const double gamma = dec.gamma;
  const double c = 1.0 / std::sqrt(1.0 + gamma);
  const double s = std::sqrt(gamma) / std::sqrt(1.0 + gamma);
  Eigen::Matrix2cd prepare;
  prepare << c, -s, s, c;

  state.apply_ancilla(prepare);
  if (spin_only) {
    state.apply_spin_branch(dec.u_alpha, 0);
    state.apply_spin_branch(dec.u_beta, 1);
  } else {
    state.apply_spin_mode_y(dec.u_alpha, 0);
    state.apply_spin_mode_y(dec.u_beta, 1);
  }
  state.apply_ancilla(prepare.adjoint());

  const double p = kernels::znorm2(state.amp.data(), state.branch_size());
  if (p < 1e-12) {
    throw io::ToleranceError("lcu_apply: degenerate herald (p < 1e-12)");
  }

  HeraldEntry entry;
  entry.probability = p;
  const bool keep = mode == HeraldMode::postselect ||
                    rng->uniform() < p;
  if (keep) {
    entry.outcome = mode == HeraldMode::postselect ? HeraldOutcome::postselected
                                                   : HeraldOutcome::success;
    std::fill(state.amp.begin() +
                  static_cast<std::ptrdiff_t>(state.branch_size()),
              state.amp.end(), sv::cplx(0.0, 0.0));
    kernels::zscal(sv::cplx(1.0 / std::sqrt(p), 0.0), state.amp.data(),
                   state.branch_size());
    state.ledger *= std::sqrt(p) * (1.0 + gamma);
  } else {
    entry.outcome = HeraldOutcome::failure;
    std::fill(state.amp.begin(),
              state.amp.begin() +
                  static_cast<std::ptrdiff_t>(state.branch_size()),
              sv::cplx(0.0, 0.0));
    const double q = kernels::znorm2(
        state.amp.data() + state.branch_size(), state.branch_size());
    if (q > 0.0) {
      kernels::zscal(sv::cplx(1.0 / std::sqrt(q), 0.0),
                     state.amp.data() + state.branch_size(),
                     state.branch_size());
    }
  }
  return entry;
}

bool full_step(sv::HybridState& state, const SplitSchedule& schedule,
               double stream_theta, HeraldMode mode, Rng* rng,
               HeraldRecord& record) {
  for (const SplitStep& sub : schedule.per_step) {
    const double ledger_before = state.ledger;
    const HeraldEntry entry = lcu_apply(state, sub.dec, mode, rng);
    record.append(entry, state.ledger / ledger_before);
    if (entry.outcome == HeraldOutcome::failure) return false;
  }
  const sv::StreamingSandwich sx =
      sv::streaming_sandwich(sv::Axis::x, stream_theta, state.cutoff);
  sx.apply(state);
  const sv::StreamingSandwich sy =
      sv::streaming_sandwich(sv::Axis::y, stream_theta, state.cutoff);
  sy.apply(state);
  const double leak = state.leak_fraction();
  if (leak > 1e-6) {
    throw io::ToleranceError("full_step: Fock cutoff leakage " +
                             io::format_double(leak) +
                             " exceeds 1e-6; raise the cutoff");
  }
  return true;
}

namespace {

CouetteGenerator assemble_couette(double u0, double diffusivity, int cutoff) {
  const lbm::TransportModel model =
      lbm::TransportModel::make(diffusivity, lbm::VelocityField{});
  const Eigen::Matrix4d a = lbm::scattering_matrix(model).a;

  CouetteGenerator gen;
  gen.u0 = u0;
  gen.diffusivity = diffusivity;
  gen.cutoff = cutoff;
  gen.omega0 = lbm::omega_matrix(model, 0.0, 0.0);

  // E1_ij = w_i s_i with s = (+1, 0, −1, 0): the advection part of f^eq.
  Eigen::Matrix4d e1 = Eigen::Matrix4d::Zero();
  const double sgn[4] = {1.0, 0.0, -1.0, 0.0};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) e1(i, j) = lbm::kWeight * sgn[i];
  }
  gen.omega1 = a * e1;

  const sv::ModeAlgebra mode(cutoff);
  const Eigen::MatrixXd x2 = mode.lowering() + mode.lowering().transpose();
  const double kappa = u0 / lbm::kCs2;

  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(cutoff, cutoff);
  Eigen::MatrixXd assembled(4 * cutoff, 4 * cutoff);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      assembled.block(i * cutoff, j * cutoff, cutoff, cutoff) =
          gen.omega0(i, j) * identity + kappa * gen.omega1(i, j) * x2;
    }
  }
  gen.assembled = std::move(assembled);
  return gen;
}

}  // namespace

CouetteOperators build_couette_generator(double u0, double diffusivity,
                                         int cutoff, double dt) {
  if (cutoff < 2) throw io::InputError("build_couette_generator: cutoff >= 2");
  CouetteOperators out;
  out.generator = assemble_couette(u0, diffusivity, cutoff);
  out.op = build_collision_general(out.generator.assembled, dt);
  if (!gamma_window(out.op.spectrum).has_value()) {
    // Bisect for the largest feasible dt to report.
    double lo = 0.0, hi = dt;
    for (int iter = 0; iter < 40; ++iter) {
      const double mid = 0.5 * (lo + hi);
      const CollisionOperator probe =
          build_collision_general(out.generator.assembled, mid);
      if (gamma_window(probe.spectrum).has_value()) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    throw io::ToleranceError(
        "build_couette_generator: infeasible gamma window at dt = " +
        io::format_double(dt) + "; maximum feasible dt is about " +
        io::format_double(lo));
  }
  return out;
}

SplitSchedule couette_split_schedule(double u0, double diffusivity, int cutoff,
                                     double dt, int n) {
  if (n < 1) throw io::InputError("couette_split_schedule: n must be positive");
  const CouetteOperators sub =
      build_couette_generator(u0, diffusivity, cutoff, dt / n);
  const double gamma0 = optimal_gamma(gamma_window(sub.op.spectrum));
  SplitStep step;
  step.gamma0 = gamma0;
  step.dec = decompose(sub.op, gamma0);
  step.p_success = 1.0 - failure_bound(step.dec);
  SplitSchedule out;
  out.n_steps = n;
  out.per_step.assign(static_cast<std::size_t>(n), step);
  out.accumulated_success = 1.0;
  for (const SplitStep& s : out.per_step) out.accumulated_success *= s.p_success;
  return out;
}

MomentRow sample_moments(const sv::HybridState& state, long step,
                         double cumulative_success) {
  MomentRow row;
  row.step = step;
  row.ledger = state.ledger;
  row.cumulative_success = cumulative_success;
  const sv::ModeAlgebra mode(state.cutoff);
  const Eigen::MatrixXcd x_op = mode.position().cast<sv::cplx>();
  const Eigen::MatrixXcd x2_op =
      (mode.position() * mode.position()).cast<sv::cplx>();
  for (int s = 0; s < 4; ++s) {
    ComponentMoments& cm = row.components[static_cast<std::size_t>(s)];
    cm.weight = state.ledger * std::sqrt(state.component_norm2(s));
    cm.mean_x = state.component_mode_moment(s, sv::Axis::x, x_op).real();
    cm.mean_y = state.component_mode_moment(s, sv::Axis::y, x_op).real();
    cm.x2_x = state.component_mode_moment(s, sv::Axis::x, x2_op).real();
    cm.x2_y = state.component_mode_moment(s, sv::Axis::y, x2_op).real();
  }
  return row;
}

ProtocolResult run_protocol(const ProtocolConfig& config) {
  if (config.n_steps < 0) {
    throw io::InputError("run_protocol: n_steps must be nonnegative");
  }
  if (config.n_substeps < 1) {
    throw io::InputError("run_protocol: n_substeps must be positive");
  }

  SplitSchedule schedule;
  if (std::holds_alternative<MatrixCollision>(config.collision)) {
    const GeneratorMatrix gen = GeneratorMatrix::from_matrix(
        std::get<MatrixCollision>(config.collision).m);
    schedule = split_schedule(gen, config.dt, config.n_substeps);
  } else {
    const CouetteCollision& cc = std::get<CouetteCollision>(config.collision);
    schedule = couette_split_schedule(cc.u0, cc.diffusivity, config.cutoff,
                                      config.dt, config.n_substeps);
  }

  ProtocolResult result;
  result.final_state =
      sv::encode_state(config.eta, config.packets, config.cutoff, true);
  sv::HybridState& state = result.final_state;
  result.moments.push_back(sample_moments(state, 0, 1.0));

  Rng rng(config.seed);
  double running_cumulative = 1.0;
  for (long step = 1; step <= config.n_steps; ++step) {
    const std::size_t before = result.herald.per_substep.size();
    const bool ok = full_step(state, schedule, config.theta,
                              config.herald_mode, &rng, result.herald);
    for (std::size_t i = before; i < result.herald.per_substep.size(); ++i) {
      const HeraldEntry& entry = result.herald.per_substep[i];
      running_cumulative *= entry.probability;
      result.herald_rows.push_back({step, static_cast<int>(i - before),
                                    entry.probability, entry.outcome,
                                    running_cumulative});
    }
    if (!ok) {
      result.halted_by_failure = true;
      break;
    }
    result.moments.push_back(
        sample_moments(state, step, result.herald.cumulative_success));
  }
  if (config.field_grid.has_value() && !result.halted_by_failure) {
    result.final_field = sv::extract_field(state, *config.field_grid);
  }
  return result;
}

}  // namespace qlb::protocol
