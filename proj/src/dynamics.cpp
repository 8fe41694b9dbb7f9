#include "dqsim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dqsim/errors.hpp"

namespace dqsim {

namespace pauli {
Matrix2c x() {
  Matrix2c m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}
Matrix2c y() {
  Matrix2c m;
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return m;
}
Matrix2c z() {
  Matrix2c m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}
Matrix2c lowering() { return 0.5 * (x() - Complex(0.0, 1.0) * y()); }
}  // namespace pauli

// ---------------------------------------------------------------------------
// SpinState

SpinState::SpinState() : rho_(Matrix2c::Zero()) { rho_(kGround, kGround) = 1.0; }

SpinState::SpinState(const Matrix2c& rho) : rho_(rho) {}

SpinState SpinState::ground() { return SpinState(); }

SpinState SpinState::excited() {
  Matrix2c m = Matrix2c::Zero();
  m(kExcited, kExcited) = 1.0;
  return SpinState(m);
}

SpinState SpinState::maximally_mixed() { return SpinState(0.5 * Matrix2c::Identity()); }

SpinState SpinState::from_bloch(const Eigen::Vector3d& r) {
  return SpinState(0.5 * (Matrix2c::Identity() + r.x() * pauli::x() + r.y() * pauli::y() +
                          r.z() * pauli::z()));
}

Eigen::Vector3d SpinState::bloch() const {
  return {2.0 * rho_(0, 1).real(), -2.0 * rho_(0, 1).imag(), (rho_(0, 0) - rho_(1, 1)).real()};
}

double SpinState::min_eigenvalue() const {
  // Eigenvalues of the Hermitian part, so tiny asymmetries don't derail it.
  const Matrix2c h = 0.5 * (rho_ + rho_.adjoint());
  const double a = h(0, 0).real();
  const double d = h(1, 1).real();
  const double off = std::abs(h(0, 1));
  return 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + off * off);
}

bool SpinState::is_physical(double tol) const {
  return hermiticity_error() <= tol && std::abs(trace_real() - 1.0) <= tol &&
         std::abs((rho_(0, 0) + rho_(1, 1)).imag()) <= tol && min_eigenvalue() >= -tol;
}

// ---------------------------------------------------------------------------
// Superoperators

Eigen::Vector4cd vectorize(const Matrix2c& rho) {
  return {rho(0, 0), rho(1, 0), rho(0, 1), rho(1, 1)};
}

Matrix2c unvectorize(const Eigen::Vector4cd& v) {
  Matrix2c m;
  m << v(0), v(2), v(1), v(3);
  return m;
}

Matrix2c Liouvillian::apply(const Matrix2c& rho) const {
  return unvectorize(matrix * vectorize(rho));
}

namespace {

Eigen::Matrix4cd kron(const Matrix2c& a, const Matrix2c& b) {
  Eigen::Matrix4cd out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

// vec(AXB) = (Bᵀ ⊗ A) vec(X) under column stacking.
Eigen::Matrix4cd commutator_superoperator(const Matrix2c& h) {
  const Matrix2c id = Matrix2c::Identity();
  return Complex(0.0, -1.0) * (kron(id, h) - kron(h.transpose(), id));
}

void require_closed_form(const Sensor& sensor) {
  if (sensor.params().intrinsic_relaxation_rate != 0.0) {
    throw ParameterError(
        "closed-form steady state assumes zero intrinsic relaxation; use the numeric path");
  }
}

}  // namespace

Matrix2c hamiltonian(const Sensor& sensor, double b) {
  const double gamma = sensor.constants().gyromagnetic_ratio;
  const double dz = sensor.rates().detuning - gamma * b;
  const double dx = -gamma * sensor.params().drive_amplitude;
  return 0.5 * dz * pauli::z() + 0.5 * dx * pauli::x();
}

Liouvillian build_liouvillian(const Matrix2c& h, std::span<const Matrix2c> jumps) {
  const Matrix2c id = Matrix2c::Identity();
  Eigen::Matrix4cd l = commutator_superoperator(h);
  for (const Matrix2c& j : jumps) {
    const Matrix2c jdj = j.adjoint() * j;
    l += 2.0 * kron(j.conjugate(), j) - kron(id, jdj) - kron(jdj.transpose(), id);
  }
  return {l};
}

std::vector<Matrix2c> jump_operators(const Sensor& sensor) {
  const SensorParams& p = sensor.params();
  std::vector<Matrix2c> jumps;
  jumps.push_back(std::sqrt(0.5 * p.amplitude_damping_rate) * pauli::lowering());
  jumps.push_back(0.5 * std::sqrt(p.dephasing_rate) * pauli::z());
  if (p.intrinsic_relaxation_rate > 0.0) {
    const double amp = std::sqrt(0.5 * p.intrinsic_relaxation_rate);
    jumps.push_back(amp * pauli::lowering());
    jumps.push_back(amp * pauli::lowering().adjoint());
  }
  return jumps;
}

Liouvillian build_liouvillian(const Sensor& sensor, double b) {
  const auto jumps = jump_operators(sensor);
  return build_liouvillian(hamiltonian(sensor, b), jumps);
}

SpinState steady_state_numeric(const Liouvillian& liouvillian) {
  const double scale = liouvillian.matrix.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) throw SingularSystemError("Liouvillian is identically zero");
  Eigen::Matrix4cd system = liouvillian.matrix / scale;
  system.row(0) << 1.0, 0.0, 0.0, 1.0;
  Eigen::Vector4cd rhs = Eigen::Vector4cd::Zero();
  rhs(0) = 1.0;

  Eigen::FullPivLU<Eigen::Matrix4cd> lu(system);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible()) {
    throw SingularSystemError("steady state is not unique: Liouvillian null space is degenerate");
  }
  const Matrix2c rho = unvectorize(lu.solve(rhs));
  return SpinState(0.5 * (rho + rho.adjoint()));
}

namespace {
struct ClosedFormTerms {
  double detuning_t2;  // (Δ − γ_e b)·T₂
  double denominator;  // 1 + s + [(Δ − γ_e b)T₂]²
};

ClosedFormTerms closed_form_terms(const Sensor& sensor, double b) {
  const DerivedRates& r = sensor.rates();
  const double x = (r.detuning - sensor.constants().gyromagnetic_ratio * b) * r.t2;
  return {x, 1.0 + r.saturation + x * x};
}
}  // namespace

SpinState steady_state_analytic(const Sensor& sensor, double b) {
  require_closed_form(sensor);
  const DerivedRates& r = sensor.rates();
  const auto [x, den] = closed_form_terms(sensor, b);
  const double rabi = sensor.constants().gyromagnetic_ratio * sensor.params().drive_amplitude;
  Matrix2c rho;
  const Complex coherence(rabi * x * r.t2, rabi * r.t2);
  rho(kExcited, kExcited) = r.saturation / (2.0 * den);
  rho(kExcited, kGround) = coherence / (2.0 * den);
  rho(kGround, kExcited) = std::conj(coherence) / (2.0 * den);
  rho(kGround, kGround) = (2.0 + r.saturation + 2.0 * x * x) / (2.0 * den);
  return SpinState(rho);
}

double p0_steady(const Sensor& sensor, double b) {
  require_closed_form(sensor);
  const auto [x, den] = closed_form_terms(sensor, b);
  return (2.0 + sensor.rates().saturation + 2.0 * x * x) / (2.0 * den);
}

LinearResponse linear_response(const Sensor& sensor) {
  require_closed_form(sensor);
  const DerivedRates& r = sensor.rates();
  const double gamma = sensor.constants().gyromagnetic_ratio;
  const double b1 = sensor.params().drive_amplitude;
  const double s = r.saturation;
  const double x = r.detuning * r.t2;
  const double den = 1.0 + s + x * x;
  const double den2 = den * den;

  const double population = gamma * r.detuning * r.t2 * r.t2 * s / den2;
  const double re = gamma * gamma * b1 * r.t2 * r.t2 * (1.0 + s - x * x) / (2.0 * den2);
  const double im = 2.0 * gamma * gamma * b1 * r.detuning * r.t2 * r.t2 * r.t2 / (2.0 * den2);

  Matrix2c k;
  k(kExcited, kExcited) = population;
  k(kExcited, kGround) = -Complex(re, -im);
  k(kGround, kExcited) = -Complex(re, im);
  k(kGround, kGround) = -population;
  return {steady_state_analytic(sensor, 0.0), k};
}

double p0_of_state(const SpinState& state) { return state.matrix()(kGround, kGround).real(); }

double p0_slope(const Sensor& sensor) {
  require_closed_form(sensor);
  const DerivedRates& r = sensor.rates();
  const double x = r.detuning * r.t2;
  const double den = 1.0 + r.saturation + x * x;
  return -sensor.constants().gyromagnetic_ratio * r.detuning * r.t2 * r.t2 * r.saturation /
         (den * den);
}

double p0_linear(const Sensor& sensor, double b) {
  const DerivedRates& r = sensor.rates();
  const double strength = std::abs(sensor.constants().gyromagnetic_ratio * b * r.t2);
  if (strength > 0.1) {
    std::ostringstream msg;
    msg << "linear response used outside its validity range: |gamma_e*b*T2| = " << strength
        << " > 0.1";
    warn(msg.str());
  }
  const double x = r.detuning * r.t2;
  const double p0 = (2.0 + r.saturation + 2.0 * x * x) / (2.0 * (1.0 + r.saturation + x * x));
  return p0 + p0_slope(sensor) * b;
}

// ---------------------------------------------------------------------------
// Bloch form and propagation

namespace {
// Real affine map r ↦ Tr(σ·L((I + r·σ)/2)) of a 4×4 superoperator.
void project_to_bloch(const Eigen::Matrix4cd& l, Eigen::Matrix3d& linear, Eigen::Vector3d& offset) {
  const Matrix2c basis[3] = {pauli::x(), pauli::y(), pauli::z()};
  const Matrix2c id = Matrix2c::Identity();
  const auto act = [&](const Matrix2c& m) { return unvectorize(l * vectorize(m)); };
  const Matrix2c from_identity = act(id);
  for (int i = 0; i < 3; ++i) {
    offset(i) = 0.5 * (basis[i] * from_identity).trace().real();
    for (int j = 0; j < 3; ++j) {
      linear(i, j) = 0.5 * (basis[i] * act(basis[j])).trace().real();
    }
  }
}
}  // namespace

BlochGenerator BlochGenerator::from_sensor(const Sensor& sensor) {
  BlochGenerator g;
  project_to_bloch(build_liouvillian(sensor, 0.0).matrix, g.base, g.offset);
  // The signal field enters only through −γ_e·b·S_z.
  Eigen::Vector3d unused;
  const Matrix2c field_h = -0.5 * sensor.constants().gyromagnetic_ratio * pauli::z();
  project_to_bloch(commutator_superoperator(field_h), g.field, unused);
  return g;
}

Complex small_signal_transfer(const Sensor& sensor, double angular_frequency) {
  const BlochGenerator g = BlochGenerator::from_sensor(sensor);
  const Eigen::Vector3d r_ss = g.base.fullPivLu().solve(-g.offset);
  const Eigen::Vector3cd drive = (g.field * r_ss).cast<Complex>();
  const Eigen::Matrix3cd a =
      Complex(0.0, angular_frequency) * Eigen::Matrix3cd::Identity() - g.base.cast<Complex>();
  const Eigen::Vector3cd dr = a.fullPivLu().solve(drive);
  return -0.5 * dr(2);
}

double max_integration_step(const Sensor& sensor, const DriveField& drive) {
  const DerivedRates& r = sensor.rates();
  const double gamma = std::abs(sensor.constants().gyromagnetic_ratio);
  double bound = r.t2;
  const auto tighten = [&bound](double rate) {
    if (rate > 0.0) bound = std::min(bound, kTwoPi / rate);
  };
  tighten(std::abs(drive.angular_frequency));
  tighten(gamma * sensor.params().drive_amplitude);
  tighten(std::abs(r.detuning) + gamma * std::abs(drive.amplitude));
  if (sensor.params().intrinsic_relaxation_rate > 0.0) {
    bound = std::min(bound, 1.0 / (sensor.params().amplitude_damping_rate +
                                   2.0 * sensor.params().intrinsic_relaxation_rate));
  }
  return bound / 20.0;
}

void propagate(const Sensor& sensor, const DriveField& drive, const TimeGrid& grid,
               const SpinState& initial, std::size_t substeps, const BlochObserver& observer) {
  if (grid.count == 0) return;
  if (substeps == 0) throw ParameterError("substeps must be at least 1");
  const double h = grid.step / static_cast<double>(substeps);
  const double limit = max_integration_step(sensor, drive);
  if (grid.count > 1 && !(h > 0.0 && h <= limit * (1.0 + 1e-12))) {
    std::ostringstream msg;
    msg << "integration step " << h << " s exceeds the allowed " << limit
        << " s; use at least " << static_cast<std::size_t>(std::ceil(grid.step / limit))
        << " substeps per sample";
    throw StepSizeError(msg.str(), limit);
  }

  const BlochGenerator g = BlochGenerator::from_sensor(sensor);
  Eigen::Vector3d r = initial.bloch();
  observer(0, grid.start, r);
  for (std::size_t i = 1; i < grid.count; ++i) {
    const double t_sample = grid.at(i - 1);
    for (std::size_t k = 0; k < substeps; ++k) {
      const double t = t_sample + h * static_cast<double>(k);
      const double b0 = drive.at(t);
      const double bm = drive.at(t + 0.5 * h);
      const double b1 = drive.at(t + h);
      const Eigen::Vector3d k1 = g.derivative(r, b0);
      const Eigen::Vector3d k2 = g.derivative(r + 0.5 * h * k1, bm);
      const Eigen::Vector3d k3 = g.derivative(r + 0.5 * h * k2, bm);
      const Eigen::Vector3d k4 = g.derivative(r + h * k3, b1);
      r += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    observer(i, grid.at(i), r);
  }
}

std::vector<double> integrate_trajectory(const Sensor& sensor, const DriveField& drive,
                                         const TimeGrid& grid, const SpinState& initial,
                                         std::size_t substeps) {
  std::vector<double> p0(grid.count);
  propagate(sensor, drive, grid, initial, substeps,
            [&p0](std::size_t i, double, const Eigen::Vector3d& r) { p0[i] = 0.5 * (1.0 - r.z()); });
  return p0;
}

std::vector<SpinState> integrate_states(const Sensor& sensor, const DriveField& drive,
                                        const TimeGrid& grid, const SpinState& initial,
                                        std::size_t substeps) {
  std::vector<SpinState> states;
  states.reserve(grid.count);
  propagate(sensor, drive, grid, initial, substeps,
            [&states](std::size_t, double, const Eigen::Vector3d& r) {
              states.push_back(SpinState::from_bloch(r));
            });
  return states;
}

// ---------------------------------------------------------------------------
// Hyperfine ensemble

EnsembleSensor::EnsembleSensor(const HyperfineEnsemble& ensemble) : weights_(ensemble.weights) {
  ensemble.validate();
  for (int m = -1; m <= 1; ++m) members_.push_back(ensemble.member(m));
}

double EnsembleSensor::p0(double b, ResponseMode mode) const {
  double total = 0.0;
  for (int m = -1; m <= 1; ++m) {
    const double w = weight(m);
    if (w == 0.0) continue;
    const Sensor& s = member(m);
    total += w * (mode == ResponseMode::analytic ? p0_steady(s, b) : p0_linear(s, b));
  }
  return total;
}

double EnsembleSensor::slope() const {
  double total = 0.0;
  for (int m = -1; m <= 1; ++m) total += weight(m) * p0_slope(member(m));
  return total;
}

double ensemble_p0(const HyperfineEnsemble& ensemble, double b, ResponseMode mode) {
  return EnsembleSensor(ensemble).p0(b, mode);
}

}  // namespace dqsim
