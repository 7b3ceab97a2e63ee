#include "qlb/lbm.h"

#include <cmath>
#include <complex>
#include <cstring>
#include <numbers>
#include <stdexcept>

#include "qlb/io.h"
#include "qlb/kernels.h"

namespace qlb::lbm {

std::array<double, 2> VelocityField::at(double y, int ny) const {
  if (type == Type::constant) return {ux, uy};
  const double half = 0.5 * ny;
  const double shear = centered ? u0 * (y - half) / half : u0 * y;
  return {shear, 0.0};
}

TransportModel TransportModel::make(double diffusivity, VelocityField velocity,
                                    double omega4) {
  if (diffusivity <= 0.0) {
    throw io::InputError("TransportModel: diffusivity must be positive");
  }
  if (omega4 <= 0.0 || omega4 >= 2.0) {
    throw io::InputError("TransportModel: omega4 must lie in (0, 2)");
  }
  TransportModel model;
  model.diffusivity = diffusivity;
  model.velocity = velocity;
  const double rate = 1.0 / (0.5 + diffusivity / kCs2);
  model.omega = {0.0, rate, rate, omega4};
  return model;
}

void TransportModel::set_rates(double omega2, double omega3) {
  if (omega2 <= 0.0 || omega2 >= 2.0 || omega3 <= 0.0 || omega3 >= 2.0) {
    throw io::InputError("TransportModel: relaxation rates must lie in (0, 2)");
  }
  omega[1] = omega2;
  omega[2] = omega3;
}

ScatteringMatrix scattering_matrix(const TransportModel& model) {
  ScatteringMatrix out;
  Eigen::Matrix4d raw;
  raw << 1, 1, 1, 1,            // density
      1, 0, -1, 0,              // c_x
      0, 1, 0, -1,              // c_y
      0.5, -0.5, 0.5, -0.5;     // c_x² − c_s²
  for (int k = 0; k < 4; ++k) raw.row(k).normalize();
  out.basis = raw;
  out.rates = Eigen::Vector4d(model.omega[0], model.omega[1], model.omega[2],
                              model.omega[3]);
  out.a.setZero();
  for (int k = 0; k < 4; ++k) {
    out.a += out.rates[k] * raw.row(k).transpose() * raw.row(k);
  }
  return out;
}

Eigen::Vector4d equilibrium(double rho, double ux, double uy) {
  Eigen::Vector4d out;
  for (int i = 0; i < 4; ++i) {
    const double proj = ux * kVelocities[i][0] + uy * kVelocities[i][1];
    out[i] = kWeight * (rho + rho * proj / kCs2);
  }
  return out;
}

Eigen::Matrix4d omega_matrix(const TransportModel& model, double ux, double uy) {
  const Eigen::Matrix4d a = scattering_matrix(model).a;
  Eigen::Vector4d u;
  for (int k = 0; k < 4; ++k) {
    u[k] = (ux * kVelocities[k][0] + uy * kVelocities[k][1]) / kCs2;
  }
  Eigen::Matrix4d m = -a;
  for (int i = 0; i < 4; ++i) {
    double row = 0.0;
    for (int k = 0; k < 4; ++k) row += a(i, k) * kWeight * (1.0 + u[k]);
    for (int j = 0; j < 4; ++j) m(i, j) += row;
  }
  return m;
}

LatticeField::LatticeField(int nx_, int ny_)
    : nx(nx_), ny(ny_),
      f(static_cast<std::size_t>(4) * nx_ * ny_, 0.0) {
  if (nx_ < 2 || ny_ < 2) {
    throw io::InputError("LatticeField: grid must be at least 2x2");
  }
}

double& LatticeField::at(int component, int x, int y) {
  return f[(static_cast<std::size_t>(component) * ny + y) * nx + x];
}

double LatticeField::at(int component, int x, int y) const {
  return f[(static_cast<std::size_t>(component) * ny + y) * nx + x];
}

double* LatticeField::row(int component, int y) {
  return f.data() + (static_cast<std::size_t>(component) * ny + y) * nx;
}

const double* LatticeField::row(int component, int y) const {
  return f.data() + (static_cast<std::size_t>(component) * ny + y) * nx;
}

double LatticeField::mass() const {
  double total = 0.0;
  for (double v : f) total += v;
  return total;
}

double LatticeField::density(int x, int y) const {
  return at(0, x, y) + at(1, x, y) + at(2, x, y) + at(3, x, y);
}

LatticeField gaussian_init(int nx, int ny, double x0, double y0, double sigma,
                           const TransportModel& model) {
  if (sigma <= 0.0) throw io::InputError("gaussian_init: sigma must be positive");
  LatticeField field(nx, ny);
  double total = 0.0;
  std::vector<double> rho(static_cast<std::size_t>(nx) * ny);
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      // Minimum-image distance keeps the pulse periodic-consistent.
      double dx = std::fmod(std::abs(x - x0), static_cast<double>(nx));
      dx = std::min(dx, nx - dx);
      double dy = std::fmod(std::abs(y - y0), static_cast<double>(ny));
      dy = std::min(dy, ny - dy);
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      rho[static_cast<std::size_t>(y) * nx + x] = v;
      total += v;
    }
  }
  for (int y = 0; y < ny; ++y) {
    const auto u = model.velocity.at(y, ny);
    for (int x = 0; x < nx; ++x) {
      const double r = rho[static_cast<std::size_t>(y) * nx + x] / total;
      const Eigen::Vector4d feq = equilibrium(r, u[0], u[1]);
      for (int i = 0; i < 4; ++i) field.at(i, x, y) = feq[i];
    }
  }
  return field;
}

namespace {

void stream_x(LatticeField& field, int component, int direction) {
  const int nx = field.nx;
  for (int y = 0; y < field.ny; ++y) {
    double* row = field.row(component, y);
    if (direction > 0) {
      const double last = row[nx - 1];
      std::memmove(row + 1, row, sizeof(double) * (nx - 1));
      row[0] = last;
    } else {
      const double first = row[0];
      std::memmove(row, row + 1, sizeof(double) * (nx - 1));
      row[nx - 1] = first;
    }
  }
}

void stream_y(LatticeField& field, int component, int direction,
              std::vector<double>& scratch) {
  const int nx = field.nx;
  const int ny = field.ny;
  scratch.resize(static_cast<std::size_t>(nx));
  double* base = field.row(component, 0);
  if (direction > 0) {
    std::memcpy(scratch.data(), base + static_cast<std::size_t>(ny - 1) * nx,
                sizeof(double) * nx);
    std::memmove(base + nx, base, sizeof(double) * nx * (ny - 1));
    std::memcpy(base, scratch.data(), sizeof(double) * nx);
  } else {
    std::memcpy(scratch.data(), base, sizeof(double) * nx);
    std::memmove(base, base + nx, sizeof(double) * nx * (ny - 1));
    std::memcpy(base + static_cast<std::size_t>(ny - 1) * nx, scratch.data(),
                sizeof(double) * nx);
  }
}

}  // namespace

void stream(LatticeField& field) {
  static thread_local std::vector<double> scratch;
  stream_x(field, 0, +1);
  stream_y(field, 1, +1, scratch);
  stream_x(field, 2, -1);
  stream_y(field, 3, -1, scratch);
}

void collide(LatticeField& field, const TransportModel& model) {
  const Eigen::Matrix4d a = scattering_matrix(model).a;
  double a_row_major[16];
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) a_row_major[i * 4 + j] = a(i, j);
  }
  for (int y = 0; y < field.ny; ++y) {
    const auto u = model.velocity.at(y, field.ny);
    double q[4];
    for (int j = 0; j < 4; ++j) {
      const double proj = u[0] * kVelocities[j][0] + u[1] * kVelocities[j][1];
      q[j] = kWeight * (1.0 + proj / kCs2);
    }
    kernels::collide_d2q4_row(field.row(0, y), field.row(1, y),
                              field.row(2, y), field.row(3, y), a_row_major, q,
                              static_cast<std::size_t>(field.nx));
  }
}

void step(LatticeField& field, const TransportModel& model) {
  stream(field);
  collide(field, model);
}

namespace {

struct AxisMoment {
  double mean_raw = 0.0;  // circular mean in [0, L)
  double variance = 0.0;
};

AxisMoment axis_moment(const LatticeField& field, bool along_x, double mass) {
  const int n = along_x ? field.nx : field.ny;
  const double k = 2.0 * std::numbers::pi / n;
  std::complex<double> m1(0.0, 0.0);
  for (int y = 0; y < field.ny; ++y) {
    for (int x = 0; x < field.nx; ++x) {
      const double rho = field.density(x, y);
      const double coord = along_x ? x : y;
      m1 += rho * std::polar(1.0, k * coord);
    }
  }
  AxisMoment out;
  const double mag = std::abs(m1) / mass;
  double mean = std::arg(m1) / k;
  if (mean < 0.0) mean += n;
  out.mean_raw = mean;
  out.variance = mag > 0.0 ? -2.0 * std::log(mag) / (k * k)
                           : std::numeric_limits<double>::infinity();
  return out;
}

double unwrap_delta(double current, double previous, int n) {
  double delta = current - previous;
  delta -= n * std::round(delta / n);
  return delta;
}

}  // namespace

RunResult run(LatticeField field, const TransportModel& model, long steps,
              long sample_every) {
  if (steps < 0) throw io::InputError("run: steps must be nonnegative");
  if (sample_every < 1) throw io::InputError("run: sample_every must be positive");

  RunResult out;
  double prev_x = 0.0, prev_y = 0.0, cum_x = 0.0, cum_y = 0.0;
  bool first = true;

  const auto sample = [&](long t) {
    const double mass = field.mass();
    const AxisMoment mx = axis_moment(field, true, mass);
    const AxisMoment my = axis_moment(field, false, mass);
    if (first) {
      cum_x = mx.mean_raw;
      cum_y = my.mean_raw;
      first = false;
    } else {
      cum_x += unwrap_delta(mx.mean_raw, prev_x, field.nx);
      cum_y += unwrap_delta(my.mean_raw, prev_y, field.ny);
    }
    prev_x = mx.mean_raw;
    prev_y = my.mean_raw;
    out.samples.push_back({t, mass, cum_x, cum_y, mx.variance, my.variance});
  };

  sample(0);
  for (long t = 1; t <= steps; ++t) {
    step(field, model);
    if (t % sample_every == 0 || t == steps) {
      for (double v : field.f) {
        if (!(std::abs(v) <= 1e6)) {
          throw io::ToleranceError("lbm::run: instability detected at step " +
                                   std::to_string(t));
        }
      }
      if (t % sample_every == 0) sample(t);
    }
  }
  out.final_field = std::move(field);
  return out;
}

}  // namespace qlb::lbm
