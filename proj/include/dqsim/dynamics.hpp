#pragma once

// Rotating-frame two-level dynamics under amplitude damping and dephasing.
//
// Basis ordering is (|m_s=+1⟩, |m_s=0⟩): index 0 is the excited sensor level,
// index 1 the laser-pumped level, and σ_z = |1⟩⟨1| − |0⟩⟨0|. Density matrices
// are vectorized by column stacking, vec(ρ) = (ρ₀₀, ρ₁₀, ρ₀₁, ρ₁₁).
//
// The dissipator follows the normalization 2LρL† − L†Lρ − ρL†L (no 1/2) with
// L₁ = √(Γ₁/2)σ₋ and L₂ = (√Γ₂/2)σ_z, so populations relax at Γ₁ and the
// coherence at Γ₂ + Γ₁/2 = 1/T₂.

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dqsim/model.hpp"

namespace dqsim {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;

inline constexpr int kExcited = 0;  ///< |m_s=+1⟩
inline constexpr int kGround = 1;   ///< |m_s=0⟩

namespace pauli {
Matrix2c x();
Matrix2c y();
Matrix2c z();
Matrix2c lowering();  ///< σ₋ = |0⟩⟨1|
}  // namespace pauli

class SpinState {
 public:
  /// |m_s=0⟩⟨m_s=0|.
  SpinState();
  explicit SpinState(const Matrix2c& rho);

  static SpinState ground();
  static SpinState excited();
  static SpinState maximally_mixed();
  /// ρ = (I + r·σ)/2. |r| ≤ 1 is required for a physical state.
  static SpinState from_bloch(const Eigen::Vector3d& r);

  const Matrix2c& matrix() const noexcept { return rho_; }
  Eigen::Vector3d bloch() const;
  double trace_real() const { return (rho_(0, 0) + rho_(1, 1)).real(); }
  double min_eigenvalue() const;
  double hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }
  /// Hermitian, unit trace and positive semidefinite within tol.
  bool is_physical(double tol = 1e-9) const;

 private:
  Matrix2c rho_;
};

struct Liouvillian {
  Eigen::Matrix4cd matrix;

  Matrix2c apply(const Matrix2c& rho) const;
};

Eigen::Vector4cd vectorize(const Matrix2c& rho);
Matrix2c unvectorize(const Eigen::Vector4cd& v);

/// H = Δ·S_z − γ_e·b·S_z − γ_e·B₁·S_x, S_j = σ_j/2.
Matrix2c hamiltonian(const Sensor& sensor, double b);

/// Generic superoperator for dρ/dt = −i[H,ρ] + Σ_j (2LρL† − L†Lρ − ρL†L).
Liouvillian build_liouvillian(const Matrix2c& h, std::span<const Matrix2c> jumps);
/// Jump operators used for the sensor (amplitude, phase, optional intrinsic).
std::vector<Matrix2c> jump_operators(const Sensor& sensor);
Liouvillian build_liouvillian(const Sensor& sensor, double b);

/// Unique fixed point of L via the trace-constrained linear solve (row 0 of
/// the system is replaced by tr ρ = 1). Throws SingularSystemError when the
/// null space is degenerate.
SpinState steady_state_numeric(const Liouvillian& liouvillian);

/// Closed-form steady state with effective detuning Δ − γ_e·b.
SpinState steady_state_analytic(const Sensor& sensor, double b);
/// ⟨0|ρ_ss|0⟩ from the closed form, without building the matrix.
double p0_steady(const Sensor& sensor, double b);

struct LinearResponse {
  SpinState rho0;   ///< b-independent part
  Matrix2c kernel;  ///< K, per Tesla; ρ ≈ ρ₀ + K·b
};

LinearResponse linear_response(const Sensor& sensor);

double p0_of_state(const SpinState& state);

/// First-order P₀(b). Warns when |γ_e·b·T₂| > 0.1.
double p0_linear(const Sensor& sensor, double b);
/// ∂P₀/∂b = −γ_e Δ T₂² s / (1 + s + Δ²T₂²)², per Tesla.
double p0_slope(const Sensor& sensor);

/// Complex small-signal response of P₀ to b(t) = Re(e^{iωt}) per Tesla,
/// from the master equation linearized about the b = 0 steady state. Its
/// ω → 0 limit is p0_slope.
Complex small_signal_transfer(const Sensor& sensor, double angular_frequency);

/// Real affine form of the master equation on the Bloch vector:
/// dr/dt = (base + b·field)·r + offset. The trace is fixed at 1.
struct BlochGenerator {
  Eigen::Matrix3d base;
  Eigen::Matrix3d field;
  Eigen::Vector3d offset;

  static BlochGenerator from_sensor(const Sensor& sensor);
  Eigen::Vector3d derivative(const Eigen::Vector3d& r, double b) const {
    return (base + b * field) * r + offset;
  }
};

struct TimeGrid {
  double start = 0.0;
  double step = 0.0;
  std::size_t count = 0;

  double at(std::size_t i) const { return start + step * static_cast<double>(i); }
};

/// Largest RK4 step accepted for a sensor driven by `drive`:
/// min(T₂, 2π/ω_ac, 2π/|γ_e B₁|, 2π/(|Δ| + |γ_e| b_ac))/20.
double max_integration_step(const Sensor& sensor, const DriveField& drive);

using BlochObserver = std::function<void(std::size_t index, double t, const Eigen::Vector3d& r)>;

/// Classical fourth-order Runge-Kutta on the Bloch form with b(t) sampled at
/// the stage times. Each grid interval is split into `substeps` steps. The
/// observer sees every grid point, starting with the initial state.
void propagate(const Sensor& sensor, const DriveField& drive, const TimeGrid& grid,
               const SpinState& initial, std::size_t substeps, const BlochObserver& observer);

std::vector<double> integrate_trajectory(const Sensor& sensor, const DriveField& drive,
                                         const TimeGrid& grid, const SpinState& initial,
                                         std::size_t substeps = 1);

std::vector<SpinState> integrate_states(const Sensor& sensor, const DriveField& drive,
                                        const TimeGrid& grid, const SpinState& initial,
                                        std::size_t substeps = 1);

enum class ResponseMode { analytic, linear };

/// Weighted average of per-m_I P₀ at field b.
double ensemble_p0(const HyperfineEnsemble& ensemble, double b, ResponseMode mode);

/// Ensemble with its member sensors built once, for repeated evaluation.
class EnsembleSensor {
 public:
  explicit EnsembleSensor(const HyperfineEnsemble& ensemble);

  double p0(double b, ResponseMode mode = ResponseMode::analytic) const;
  /// Σ w·∂P₀/∂b over members.
  double slope() const;
  const Sensor& member(int m_I) const { return members_.at(static_cast<std::size_t>(m_I + 1)); }
  double weight(int m_I) const { return weights_.at(static_cast<std::size_t>(m_I + 1)); }

 private:
  std::array<double, 3> weights_;
  std::vector<Sensor> members_;
};

}  // namespace dqsim
