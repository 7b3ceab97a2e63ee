// protocol.h — the full quantum LB step: heralded LCU collision substeps
// (ancilla rotation, controlled U_α/U_β, inverse rotation, projection),
// then the two streaming sandwiches, with herald bookkeeping and the
// operator-valued Couette scattering generator.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "qlb/decompose.h"
#include "qlb/rng.h"
#include "qlb/statevector.h"

namespace qlb::protocol {

enum class HeraldMode { postselect, sample };
enum class HeraldOutcome { success, failure, postselected };

const char* to_string(HeraldOutcome outcome);

struct HeraldEntry {
  double probability = 0.0;
  HeraldOutcome outcome = HeraldOutcome::postselected;
};

struct HeraldRecord {
  std::vector<HeraldEntry> per_substep;
  double cumulative_success = 1.0;
  double ledger_factor = 1.0;

  void append(const HeraldEntry& entry, double ledger_multiplier);
};

// One heralded application of C = U_α + γU_β onto the state's spin
// (4×4 decomposition) or spin⊗mode_y (4·cutoff) subspace. Postselect mode
// renormalizes and charges the ledger by √p·(1+γ); sample mode draws the
// ancilla outcome from rng.
HeraldEntry lcu_apply(sv::HybridState& state,
                      const UnitarySumDecomposition& dec, HeraldMode mode,
                      Rng* rng);

// One Eq.-(4) step, right to left: N heralded collision substeps, then the
// x streaming sandwich, then the y one. Returns false when a sampled herald
// failed (trajectory halts; failure is recorded). Aborts when the Fock
// leakage monitor trips.
bool full_step(sv::HybridState& state, const SplitSchedule& schedule,
               double stream_theta, HeraldMode mode, Rng* rng,
               HeraldRecord& record);

struct CouetteGenerator {
  Eigen::Matrix4d omega0;  // wave propagation/damping + mass conservation
  Eigen::Matrix4d omega1;  // advection coefficient of the position quadrature
  double u0 = 0.0;
  double diffusivity = 0.0;
  int cutoff = 0;
  Eigen::MatrixXd assembled;  // omega0⊗I + (u0/c_s²)·omega1⊗(a_y + a_y†)
};

struct CouetteOperators {
  CouetteGenerator generator;
  CollisionOperator op;
};

// Assembles the three-contribution scattering generator on spin⊗Fock_y from
// −A(f − f^eq) with u1 = −u3 = (u0/c_s²)(a_y + a_y†), exponentiates to C and
// prepares the complex-spectrum decomposition inputs. Throws with a maximum
// feasible Δt estimate when the γ window is infeasible at dt.
CouetteOperators build_couette_generator(double u0, double diffusivity,
                                         int cutoff, double dt);

// N identical Couette substeps at dt/n, each decomposed at its γ₀.
SplitSchedule couette_split_schedule(double u0, double diffusivity, int cutoff,
                                     double dt, int n);

struct MatrixCollision {
  Eigen::MatrixXd m;
};

struct CouetteCollision {
  double u0 = 0.0;
  double diffusivity = 0.0;
};

struct ProtocolConfig {
  int cutoff = 32;
  double dt = 1.0;
  int n_substeps = 1;
  long n_steps = 1;
  double theta = 1.0;  // streaming angle K_b·Δt
  std::variant<MatrixCollision, CouetteCollision> collision = MatrixCollision{};
  Eigen::Vector4d eta = Eigen::Vector4d::Zero();
  std::array<sv::GaussianSpec, 4> packets{};
  HeraldMode herald_mode = HeraldMode::postselect;
  std::uint64_t seed = 0;
  std::optional<sv::FieldGrid> field_grid;
};

struct HeraldRow {
  long step = 0;
  int substep = 0;
  double probability = 0.0;
  HeraldOutcome outcome = HeraldOutcome::postselected;
  double cumulative = 1.0;
};

struct ComponentMoments {
  double weight = 0.0;  // ledger-weighted component norm
  double mean_x = 0.0;
  double mean_y = 0.0;
  double x2_x = 0.0;
  double x2_y = 0.0;
};

struct MomentRow {
  long step = 0;
  double ledger = 1.0;
  double cumulative_success = 1.0;
  std::array<ComponentMoments, 4> components{};
};

struct ProtocolResult {
  HeraldRecord herald;
  std::vector<HeraldRow> herald_rows;
  std::vector<MomentRow> moments;
  sv::HybridState final_state;
  std::optional<sv::ExtractedField> final_field;
  bool halted_by_failure = false;
};

MomentRow sample_moments(const sv::HybridState& state, long step,
                         double cumulative_success);

ProtocolResult run_protocol(const ProtocolConfig& config);

}  // namespace qlb::protocol
