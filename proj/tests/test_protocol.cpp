#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.h"
#include "qlb/decompose.h"
#include "qlb/io.h"
#include "qlb/kernels.h"
#include "qlb/lbm.h"
#include "qlb/linalg.h"
#include "qlb/protocol.h"
#include "qlb/rng.h"
#include "qlb/statevector.h"

using namespace qlb;
using namespace qlb::protocol;

namespace {

// Random state with Fock support below max_level (herald states need
// headroom below the cutoff leak monitor).
sv::HybridState random_ancilla_state(Rng& rng, int cutoff,
                                     int max_level = -1) {
  sv::HybridState s = sv::HybridState::zero(cutoff, true);
  if (max_level < 0) max_level = cutoff;
  for (int spin = 0; spin < 4; ++spin) {
    for (int nx = 0; nx < max_level; ++nx) {
      for (int ny = 0; ny < max_level; ++ny) {
        s.at(0, spin, nx, ny) = {rng.normal(), rng.normal()};
      }
    }
  }
  s.normalize();
  return s;
}

// Applies the raw 4x4 collision matrix to the spin sector (reference path).
sv::HybridState apply_collision_directly(const sv::HybridState& input,
                                         const Eigen::Matrix4cd& c) {
  sv::HybridState out = input;
  out.apply_spin_branch(c, 0);
  return out;
}

Eigen::Matrix4d omega_d005() {
  return lbm::omega_matrix(
      lbm::TransportModel::make(0.05, lbm::VelocityField{}), 0.0, 0.0);
}

}  // namespace

TEST_CASE("lcu_apply: trivial decomposition keeps the state") {
  UnitarySumDecomposition dec;
  dec.u_alpha = Eigen::Matrix4cd::Identity();
  dec.u_beta = Eigen::Matrix4cd::Identity();
  dec.gamma = 0.7;
  Rng rng(1);
  sv::HybridState s = random_ancilla_state(rng, 4);
  const sv::HybridState before = s;
  const HeraldEntry entry = lcu_apply(s, dec, HeraldMode::postselect, nullptr);
  CHECK(entry.probability == doctest::Approx(1.0).epsilon(1e-12));
  double diff = 0.0;
  for (std::size_t i = 0; i < s.amp.size(); ++i) {
    diff = std::max(diff, std::abs(s.amp[i] - before.amp[i]));
  }
  CHECK(diff < 1e-12);
  CHECK(s.ledger == doctest::Approx(before.ledger * 1.7).epsilon(1e-12));
}

TEST_CASE("lcu_apply: scalar closed form p = 0.111111 for c = 0.5") {
  const CollisionOperator c =
      collision_from_matrix(0.5 * Eigen::Matrix4cd::Identity());
  const UnitarySumDecomposition dec = decompose(c, 0.5);
  Rng rng(2);
  sv::HybridState s = random_ancilla_state(rng, 3);
  const HeraldEntry entry = lcu_apply(s, dec, HeraldMode::postselect, nullptr);
  CHECK(entry.probability == doctest::Approx(0.111111).epsilon(1e-6));
}

TEST_CASE("lcu_apply: herald exactness on random pairs") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const GeneratorMatrix gen = random_dissipative_generator(rng, 4, 1.0);
    const CollisionOperator c = build_collision(gen, rng.uniform(0.2, 1.5));
    const auto w = gamma_window(c.spectrum);
    REQUIRE(w.has_value());
    const double gamma = rng.uniform(w->lower, w->upper);
    const UnitarySumDecomposition dec = decompose(c, gamma);

    sv::HybridState s = random_ancilla_state(rng, 2);
    const sv::HybridState reference =
        apply_collision_directly(s, c.entries.topLeftCorner<4, 4>());
    const double expected_p =
        kernels::znorm2(reference.amp.data(), reference.branch_size()) /
        ((1.0 + gamma) * (1.0 + gamma));

    const double ledger_before = s.ledger;
    const HeraldEntry entry = lcu_apply(s, dec, HeraldMode::postselect, nullptr);
    CHECK(std::abs(entry.probability - expected_p) < 1e-10);
    CHECK(s.ledger == doctest::Approx(ledger_before * std::sqrt(entry.probability) *
                                      (1.0 + gamma)).epsilon(1e-12));

    // Post-herald fidelity with C|ψ⟩/‖C|ψ⟩‖.
    cplx overlap(0.0, 0.0);
    double ref_norm2 = 0.0;
    for (std::size_t i = 0; i < s.branch_size(); ++i) {
      overlap += std::conj(reference.amp[i]) * s.amp[i];
      ref_norm2 += std::norm(reference.amp[i]);
    }
    CHECK(std::abs(overlap) / std::sqrt(ref_norm2) >= 1.0 - 1e-10);
    CHECK(s.ancilla_one_weight() < 1e-20);
  }
}

TEST_CASE("lcu_apply: worst case saturates at the top singular vector") {
  Rng rng(4);
  const GeneratorMatrix gen = random_dissipative_generator(rng, 4, 1.0);
  const CollisionOperator c = build_collision(gen, 0.8);
  const double gamma = optimal_gamma(gamma_window(c.spectrum));
  const UnitarySumDecomposition dec = decompose(c, gamma);
  const double pf = failure_bound(dec);

  for (int trial = 0; trial < 100; ++trial) {
    sv::HybridState s = random_ancilla_state(rng, 2);
    const HeraldEntry e = lcu_apply(s, dec, HeraldMode::postselect, nullptr);
    CHECK(e.probability >= 1.0 - pf - 1e-12);
  }

  const Eigen::VectorXcd worst =
      test::top_singular_vector(dec.u_alpha - dec.u_beta);
  sv::HybridState s = sv::HybridState::zero(2, true);
  for (int spin = 0; spin < 4; ++spin) s.at(0, spin, 0, 0) = worst[spin];
  const HeraldEntry e = lcu_apply(s, dec, HeraldMode::postselect, nullptr);
  CHECK(std::abs(e.probability - (1.0 - pf)) < 1e-8);
}

TEST_CASE("lcu_apply: sampled outcomes are seed-reproducible") {
  const CollisionOperator c =
      collision_from_matrix(0.8 * Eigen::Matrix4cd::Identity());
  const UnitarySumDecomposition dec = decompose(c, 0.2);
  const auto run_with = [&](std::uint64_t seed) {
    Rng rng(seed);
    std::vector<HeraldOutcome> outcomes;
    for (int i = 0; i < 20; ++i) {
      Rng state_rng(99);
      sv::HybridState s = random_ancilla_state(state_rng, 2);
      outcomes.push_back(lcu_apply(s, dec, HeraldMode::sample, &rng).outcome);
    }
    return outcomes;
  };
  CHECK(run_with(5) == run_with(5));
  bool saw_failure = false, saw_success = false;
  for (const HeraldOutcome o : run_with(5)) {
    saw_failure = saw_failure || o == HeraldOutcome::failure;
    saw_success = saw_success || o == HeraldOutcome::success;
  }
  CHECK(saw_failure);
  CHECK(saw_success);
}

TEST_CASE("lcu_apply: degenerate herald is rejected") {
  const CollisionOperator c =
      collision_from_matrix(1e-7 * Eigen::Matrix4cd::Identity());
  const UnitarySumDecomposition dec =
      decompose(c, optimal_gamma(gamma_window(c.spectrum)));
  Rng rng(6);
  sv::HybridState s = random_ancilla_state(rng, 2);
  CHECK_THROWS_AS((void)lcu_apply(s, dec, HeraldMode::postselect, nullptr),
                  io::ToleranceError);
}

TEST_CASE("full_step: identity collision and zero theta keep the state") {
  const GeneratorMatrix gen =
      GeneratorMatrix::from_matrix(Eigen::Matrix4d::Zero());
  const SplitSchedule schedule = split_schedule(gen, 1.0, 2);
  Rng rng(7);
  sv::HybridState s = random_ancilla_state(rng, 8, 4);
  const sv::HybridState before = s;
  HeraldRecord record;
  CHECK(full_step(s, schedule, 0.0, HeraldMode::postselect, nullptr, record));
  double diff = 0.0;
  for (std::size_t i = 0; i < s.amp.size(); ++i) {
    diff = std::max(diff, std::abs(s.amp[i] - before.amp[i]));
  }
  CHECK(diff < 1e-10);
  CHECK(record.per_substep.size() == 2);
  CHECK(record.cumulative_success == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("full_step: collision-only relaxation matches exp(M dt n)") {
  const Eigen::Matrix4d m = omega_d005();
  const GeneratorMatrix gen = GeneratorMatrix::from_matrix(m);
  const double dt = 0.6;
  const int n_steps = 5;
  const SplitSchedule schedule = split_schedule(gen, dt, 1);

  const Eigen::Vector4d eta(0.5, 0.3, 0.15, 0.05);
  std::array<sv::GaussianSpec, 4> packets{};
  sv::HybridState s = sv::encode_state(eta, packets, 8, true);
  HeraldRecord record;
  for (int t = 0; t < n_steps; ++t) {
    REQUIRE(full_step(s, schedule, 0.0, HeraldMode::postselect, nullptr, record));
  }
  const Eigen::MatrixXd full = test::taylor_expm(m * dt * n_steps);
  const Eigen::Vector4d expected = full * eta;
  double mass_quantum = 0.0, mass_classical = 0.0;
  for (int spin = 0; spin < 4; ++spin) {
    const cplx q = s.ledger * s.at(0, spin, 0, 0);
    CHECK(std::abs(q - cplx(expected[spin], 0.0)) < 1e-8);
    mass_quantum += q.real();
    mass_classical += expected[spin];
  }
  // Mass mode is conserved by ω1 = 0.
  CHECK(std::abs(mass_quantum - eta.sum()) < 1e-8);
  CHECK(std::abs(mass_classical - eta.sum()) < 1e-12);
}

TEST_CASE("full_step: streaming-only moves the alpha-eigenstate mean") {
  const GeneratorMatrix gen =
      GeneratorMatrix::from_matrix(Eigen::Matrix4d::Zero());
  const SplitSchedule schedule = split_schedule(gen, 1.0, 1);
  const double theta = 0.4;
  const int nc = 16;
  sv::HybridState s = sv::HybridState::zero(nc, true);
  // α^x eigenstate (+1): (|00⟩ − |11⟩)/√2.
  s.at(0, 0, 0, 0) = 1.0 / std::numbers::sqrt2;
  s.at(0, 3, 0, 0) = -1.0 / std::numbers::sqrt2;
  HeraldRecord record;
  REQUIRE(full_step(s, schedule, theta, HeraldMode::postselect, nullptr, record));
  const Eigen::MatrixXcd x_op = sv::ModeAlgebra(nc).position().cast<cplx>();
  double mean_x = 0.0;
  for (int comp = 0; comp < 4; ++comp) {
    const double w = s.component_norm2(comp);
    if (w <= 0.0) continue;
    mean_x += w * s.component_mode_moment(comp, sv::Axis::x, x_op).real();
  }
  // The y sandwich acts on spin ⊗ mode_y and cannot change ⟨x̂_x⟩.
  CHECK(mean_x == doctest::Approx(std::numbers::sqrt2 * theta).epsilon(1e-9));
}

TEST_CASE("full_step: the two sandwiches do not commute") {
  const int nc = 12;
  const double theta = 0.5;
  Rng rng(8);
  sv::HybridState a = random_ancilla_state(rng, nc);
  sv::HybridState b = a;
  const auto sx = sv::streaming_sandwich(sv::Axis::x, theta, nc);
  const auto sy = sv::streaming_sandwich(sv::Axis::y, theta, nc);
  sx.apply(a);
  sy.apply(a);
  sy.apply(b);
  sx.apply(b);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.amp.size(); ++i) {
    diff = std::max(diff, std::abs(a.amp[i] - b.amp[i]));
  }
  CHECK(diff > 1e-3);
}

TEST_CASE("build_couette_generator") {
  SUBCASE("u0 = 0 block-reduces to the four-speed spectrum") {
    const int nc = 8;
    const double dt = 0.5;
    const CouetteOperators ops = build_couette_generator(0.0, 0.05, nc, dt);
    // Spectrum: each of {e^(−5dt/3) ×2, e^(−dt), 1} with multiplicity N_c.
    const double e53 = std::exp(-5.0 * dt / 3.0);
    const double e1 = std::exp(-dt);
    int count_e53 = 0, count_e1 = 0, count_one = 0;
    for (Eigen::Index i = 0; i < ops.op.spectrum.size(); ++i) {
      const cplx d = ops.op.spectrum[i];
      CHECK(std::abs(d.imag()) < 1e-10);
      if (std::abs(d.real() - e53) < 1e-9) ++count_e53;
      else if (std::abs(d.real() - e1) < 1e-9) ++count_e1;
      else if (std::abs(d.real() - 1.0) < 1e-9) ++count_one;
    }
    CHECK(count_e53 == 2 * nc);
    CHECK(count_e1 == nc);
    CHECK(count_one == nc);
  }
  SUBCASE("mass row is annihilated") {
    const int nc = 8;
    const CouetteOperators ops = build_couette_generator(0.01, 0.05, nc, 0.5);
    Eigen::RowVectorXd mass_row = Eigen::RowVectorXd::Zero(4 * nc);
    for (int s = 0; s < 4; ++s) {
      for (int n = 0; n < nc; ++n) mass_row[s * nc + n] = 1.0;
    }
    // (1,1,1,1)⊗I annihilates the generator from the left; one unit vector
    // per Fock level: check every column sum over components.
    const Eigen::RowVectorXd res = mass_row * ops.generator.assembled;
    CHECK(res.cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("u0 = 0.01 at cutoff 16 reconstructs to 1e-8") {
    const CouetteOperators ops = build_couette_generator(0.01, 0.05, 16, 0.5);
    const double gamma0 = optimal_gamma(gamma_window(ops.op.spectrum));
    const UnitarySumDecomposition dec = decompose(ops.op, gamma0);
    CHECK(dec.reconstruction_residual <= 1e-8);
  }
  SUBCASE("assembled operator matches -A(I - E) entrywise") {
    const int nc = 6;
    const CouetteOperators ops = build_couette_generator(0.02, 0.05, nc, 0.3);
    const Eigen::Matrix4d a =
        lbm::scattering_matrix(lbm::TransportModel::make(0.05, {})).a;
    const sv::ModeAlgebra mode(nc);
    const Eigen::MatrixXd x2 = mode.lowering() + mode.lowering().transpose();
    const double kappa = 0.02 / lbm::kCs2;
    const double sgn[4] = {1.0, 0.0, -1.0, 0.0};
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(4 * nc, 4 * nc);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        e.block(i * nc, j * nc, nc, nc) =
            lbm::kWeight * (Eigen::MatrixXd::Identity(nc, nc) +
                            sgn[i] * kappa * x2);
      }
    }
    Eigen::MatrixXd a_full = Eigen::MatrixXd::Zero(4 * nc, 4 * nc);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        a_full.block(i * nc, j * nc, nc, nc) =
            a(i, j) * Eigen::MatrixXd::Identity(nc, nc);
      }
    }
    const Eigen::MatrixXd expected =
        -a_full * (Eigen::MatrixXd::Identity(4 * nc, 4 * nc) - e);
    CHECK(linalg::max_abs(Eigen::MatrixXd(ops.generator.assembled - expected)) <
          1e-13);
  }
  SUBCASE("infeasible window reports a maximum feasible dt") {
    try {
      (void)build_couette_generator(0.45, 0.05, 24, 40.0);
      MESSAGE("window remained feasible; parameters too tame");
    } catch (const io::ToleranceError& e) {
      CHECK(std::string(e.what()).find("maximum feasible dt") !=
            std::string::npos);
    }
  }
}

TEST_CASE("couette split schedule and heralded application") {
  const int nc = 8;
  const SplitSchedule schedule = couette_split_schedule(0.01, 0.05, nc, 0.5, 2);
  CHECK(schedule.per_step.size() == 2);
  CHECK(schedule.accumulated_success ==
        doctest::Approx(schedule.per_step[0].p_success *
                        schedule.per_step[1].p_success).epsilon(1e-12));

  // Heralded Couette collision reproduces C|ψ⟩ on the (spin, n_y) sector.
  const CouetteOperators ops = build_couette_generator(0.01, 0.05, nc, 0.25);
  const double gamma0 = optimal_gamma(gamma_window(ops.op.spectrum));
  const UnitarySumDecomposition dec = decompose(ops.op, gamma0);
  Rng rng(9);
  sv::HybridState s = sv::HybridState::zero(nc, true);
  for (int spin = 0; spin < 4; ++spin) {
    for (int ny = 0; ny < nc - 3; ++ny) {
      s.at(0, spin, 0, ny) = {rng.normal(), rng.normal()};
    }
  }
  s.normalize();
  Eigen::VectorXcd psi(4 * nc);
  for (int spin = 0; spin < 4; ++spin) {
    for (int ny = 0; ny < nc; ++ny) psi[spin * nc + ny] = s.at(0, spin, 0, ny);
  }
  const Eigen::VectorXcd expected = ops.op.entries * psi;
  const double ledger_before = s.ledger;
  (void)lcu_apply(s, dec, HeraldMode::postselect, nullptr);
  double err = 0.0;
  for (int spin = 0; spin < 4; ++spin) {
    for (int ny = 0; ny < nc; ++ny) {
      const cplx got =
          s.at(0, spin, 0, ny) * s.ledger / ledger_before;
      err = std::max(err, std::abs(got - expected[spin * nc + ny]));
    }
  }
  CHECK(err < 1e-8);
}

TEST_CASE("run_protocol") {
  SUBCASE("zero dynamics keeps every moment constant") {
    ProtocolConfig config;
    config.cutoff = 8;
    config.dt = 1.0;
    config.n_substeps = 1;
    config.n_steps = 10;
    config.theta = 0.0;
    config.collision = MatrixCollision{Eigen::Matrix4d::Zero()};
    config.eta = Eigen::Vector4d(0.5, 0.5, 0.5, 0.5);
    const ProtocolResult result = run_protocol(config);
    REQUIRE(result.moments.size() == 11);
    for (const MomentRow& row : result.moments) {
      for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(row.components[i].weight -
                       result.moments.front().components[i].weight) < 1e-10);
        CHECK(std::abs(row.components[i].mean_x) < 1e-10);
        CHECK(std::abs(row.components[i].x2_x -
                       result.moments.front().components[i].x2_x) < 1e-10);
      }
    }
  }
  SUBCASE("collision-only moments match the classical relaxation") {
    ProtocolConfig config;
    config.cutoff = 8;
    config.dt = 0.6;
    config.n_substeps = 2;
    config.n_steps = 4;
    config.theta = 0.0;
    config.collision = MatrixCollision{omega_d005()};
    config.eta = Eigen::Vector4d(0.5, 0.3, 0.15, 0.05);
    const ProtocolResult result = run_protocol(config);
    const Eigen::MatrixXd full =
        test::taylor_expm(omega_d005() * config.dt * config.n_steps);
    const Eigen::Vector4d expected = full * config.eta;
    const sv::HybridState& s = result.final_state;
    for (int spin = 0; spin < 4; ++spin) {
      CHECK(std::abs(s.ledger * s.at(0, spin, 0, 0) -
                     cplx(expected[spin], 0.0)) < 1e-6);
    }
    // Cumulative success equals the recorded product.
    double product = 1.0;
    for (const HeraldEntry& e : result.herald.per_substep) {
      product *= e.probability;
    }
    CHECK(std::abs(product - result.herald.cumulative_success) <= 1e-12);
    CHECK(result.herald_rows.size() == 8);
    CHECK(result.herald_rows.back().cumulative ==
          doctest::Approx(product).epsilon(1e-12));
  }
  SUBCASE("sample mode is seed-reproducible and can halt") {
    ProtocolConfig config;
    config.cutoff = 4;
    config.dt = 1.2;
    config.n_substeps = 1;
    config.n_steps = 50;
    config.theta = 0.0;
    config.collision = MatrixCollision{omega_d005()};
    config.eta = Eigen::Vector4d(0.25, 0.25, 0.25, 0.25);
    config.herald_mode = HeraldMode::sample;
    config.seed = 1234;
    const ProtocolResult a = run_protocol(config);
    const ProtocolResult b = run_protocol(config);
    REQUIRE(a.herald_rows.size() == b.herald_rows.size());
    for (std::size_t i = 0; i < a.herald_rows.size(); ++i) {
      CHECK(a.herald_rows[i].probability == b.herald_rows[i].probability);
      CHECK(a.herald_rows[i].outcome == b.herald_rows[i].outcome);
    }
    CHECK(a.halted_by_failure == b.halted_by_failure);
    // With P_s ≈ 0.35 per step, 50 steps all succeeding is ~1e-23.
    CHECK(a.halted_by_failure);
    CHECK(a.herald_rows.back().outcome == HeraldOutcome::failure);
  }
  SUBCASE("field grid extraction is wired through") {
    ProtocolConfig config;
    config.cutoff = 8;
    config.dt = 0.3;
    config.n_substeps = 1;
    config.n_steps = 1;
    config.theta = 0.2;
    config.collision = MatrixCollision{omega_d005()};
    config.eta = Eigen::Vector4d(1.0, 0.0, 0.0, 0.0);
    config.field_grid = sv::FieldGrid{-2.0, 2.0, 11};
    const ProtocolResult result = run_protocol(config);
    REQUIRE(result.final_field.has_value());
    CHECK(result.final_field->f[0].rows() == 11);
  }
}
