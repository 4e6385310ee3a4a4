#pragma once

#include <optional>

#include "wv/impulsive.hpp"

namespace wv {

// Slow coupling profile g(t): raised-cosine ramps of duration r*T at both
// ends around a constant plateau, scaled so the time integral is exactly 1.
class RampProfile {
 public:
  RampProfile(double total_time, double ramp_fraction = 0.1)
      : total_time_(total_time), ramp_fraction_(ramp_fraction) {
    if (!(total_time > 0.0))
      throw std::invalid_argument("ramp: total time must be positive");
    if (!(ramp_fraction > 0.0) || !(ramp_fraction < 0.4))
      throw std::invalid_argument("ramp: fraction must lie in (0, 0.4)");
  }

  double total_time() const { return total_time_; }
  double ramp_fraction() const { return ramp_fraction_; }
  double plateau() const { return 1.0 / (total_time_ * (1.0 - ramp_fraction_)); }

  double operator()(double t) const {
    if (t <= 0.0 || t >= total_time_) return 0.0;
    double ramp = ramp_fraction_ * total_time_;
    double h = plateau();
    if (t < ramp) return 0.5 * h * (1.0 - std::cos(std::numbers::pi * t / ramp));
    if (t > total_time_ - ramp)
      return 0.5 * h * (1.0 - std::cos(std::numbers::pi * (total_time_ - t) / ramp));
    return h;
  }

 private:
  double total_time_;
  double ramp_fraction_;
};

struct AdiabaticOutcome {
  int label;                      // index of the protected level / pair
  double shift;                   // pointer shift carried by this outcome
  Complex weak_or_expectation;    // full complex weak value (real for hermitian)
  double probability;
};

inline std::size_t sample_outcome(const std::vector<AdiabaticOutcome>& outcomes,
                                  RngStream& rng) {
  if (outcomes.empty()) throw EmptyInput("no outcomes to sample");
  double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    acc += outcomes[i].probability;
    if (u < acc) return i;
  }
  return outcomes.size() - 1;
}

namespace detail {

inline double spectral_radius(const Operator& a) {
  if (a.is_hermitian()) {
    SpectralDecomposition dec = eig_hermitian(a);
    return std::max(std::abs(dec.eigenvalues[0]),
                    std::abs(dec.eigenvalues[a.dim() - 1]));
  }
  return a.matrix().cwiseAbs().rowwise().sum().maxCoeff();  // row-sum bound
}

// RK4 for i dv/dt = (H0 + g(t) c A) v over [0, T] with fixed steps.
// Returns |final norm - 1| before renormalization.
inline double integrate_slice(const MatrixXcd& h0, const MatrixXcd& am, double c,
                              const RampProfile& g, int steps, VectorXcd& v) {
  const double dt = g.total_time() / steps;
  const int d = static_cast<int>(v.size());
  MatrixXcd h_start(d, d), h_mid(d, d), h_end(d, d);
  VectorXcd k1(d), k2(d), k3(d), k4(d), tmp(d);
  const Complex mi(0.0, -1.0);

  h_start = h0 + (c * g(0.0)) * am;
  for (int n = 0; n < steps; ++n) {
    double t = n * dt;
    h_mid = h0 + (c * g(t + 0.5 * dt)) * am;
    h_end = h0 + (c * g(t + dt)) * am;

    k1.noalias() = h_start * v;
    k1 *= mi;
    tmp = v + (0.5 * dt) * k1;
    k2.noalias() = h_mid * tmp;
    k2 *= mi;
    tmp = v + (0.5 * dt) * k2;
    k3.noalias() = h_mid * tmp;
    k3 *= mi;
    tmp = v + dt * k3;
    k4.noalias() = h_end * tmp;
    k4 *= mi;

    v += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    h_start.swap(h_end);
  }
  double norm = v.norm();
  double drift = std::abs(norm - 1.0);
  v /= norm;
  return drift;
}

}  // namespace detail

// Step count targeting per-slice RK4 norm drift below 1e-8 for a Hamiltonian
// of the given spectral scale (drift ~ T E^6 dt^5 / 144, with margin).
inline int adiabatic_steps(double total_time, double energy_scale) {
  double e = std::max(energy_scale, 1e-6);
  double dt = std::pow(1.44e-6 / (total_time * std::pow(e, 6.0)), 0.2);
  int steps = static_cast<int>(std::ceil(1.5 * total_time / dt));
  return std::max(1000, steps);
}

struct AdiabaticRun {
  JointState state;        // momentum representation
  double max_norm_drift;   // worst per-slice RK4 drift before renormalization
};

// Adiabatic measurement evolution: since the pointer has no free
// Hamiltonian, P is conserved and the joint dynamics factorizes into one
// d-dimensional ODE per momentum node, H(t) = H0 + g(t) p A. Slices whose
// momentum amplitude is exactly zero are left untouched; the others are
// renormalized after the drift check, which keeps the momentum marginal
// conserved to machine precision.
inline AdiabaticRun evolve_adiabatic_full(const Operator& h0, const Operator& a,
                                          const StateVector& psi0, const PointerWave& w,
                                          const RampProfile& ramp, int steps,
                                          int threads = 1) {
  if (!h0.is_hermitian() || !a.is_hermitian())
    throw NotHermitian("adiabatic evolution requires hermitian H0 and A");
  if (h0.dim() != a.dim() || h0.dim() != psi0.dim())
    throw std::invalid_argument("evolve_adiabatic: dimension mismatch");
  if (steps < 1000)
    throw std::invalid_argument("evolve_adiabatic: needs at least 1000 steps");

  const Grid& g = w.grid();
  VectorXcd mom = change_representation(w, Representation::momentum).amplitudes();

  std::vector<int> active;
  active.reserve(g.points);
  for (int j = 0; j < g.points; ++j)
    if (mom[j] != Complex(0.0, 0.0)) active.push_back(j);

  MatrixXcd out = MatrixXcd::Zero(h0.dim(), g.points);
  std::vector<double> drift(active.size(), 0.0);
  parallel_for(active.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      int j = active[idx];
      VectorXcd v = psi0.amplitudes();
      drift[idx] =
          detail::integrate_slice(h0.matrix(), a.matrix(), g.p(j), ramp, steps, v);
      out.col(j) = mom[j] * v;
    }
  });

  double worst = 0.0;
  for (double d : drift) worst = std::max(worst, d);
  if (worst > 1e-6)
    throw UnitarityDrift("slice norm drifted by " + std::to_string(worst) +
                         "; increase the step count");
  return AdiabaticRun{JointState(g, std::move(out), Representation::momentum), worst};
}

inline JointState evolve_adiabatic(const Operator& h0, const Operator& a,
                                   const StateVector& psi0, const PointerWave& w,
                                   const RampProfile& ramp, int steps, int threads = 1) {
  return evolve_adiabatic_full(h0, a, psi0, w, ramp, steps, threads).state;
}

// Position-space pointer mean of a joint state.
inline double joint_mean_q(const JointState& js) {
  JointState pos = change_representation(js, Representation::position);
  VectorXd marginal = pointer_distribution(pos);
  const Grid& g = js.grid();
  VectorXd qd(g.points);
  for (int k = 0; k < g.points; ++k) qd[k] = g.q(k) * marginal[k];
  return detail::trapezoid(qd, g.dq()) / detail::trapezoid(marginal, g.dq());
}

// Protective measurement on the i-th energy eigenstate: slow coupling under
// H0 shifts the pointer towards <E_i|A|E_i>.
inline double protective_shift(const Operator& h0, int level, const Operator& a,
                               double delta, double total_time, int threads = 1) {
  SpectralDecomposition dec = eig_hermitian(h0);
  for (int j = 0; j < h0.dim(); ++j)
    if (j != level && std::abs(dec.eigenvalues[j] - dec.eigenvalues[level]) <= 1e-6)
      throw DegenerateSpectrum("protective level is degenerate");

  Grid grid = Grid::suggest(delta, detail::spectral_radius(a));
  PointerWave w = gaussian_pointer(grid, delta);
  RampProfile ramp(total_time);
  double e_h0 = std::max(std::abs(dec.eigenvalues[0]),
                         std::abs(dec.eigenvalues[h0.dim() - 1]));
  double p_max = std::sqrt(2.0 * 745.0) / delta;  // beyond this the Gaussian underflows
  double scale = e_h0 + ramp.plateau() * p_max * detail::spectral_radius(a);
  int steps = adiabatic_steps(total_time, scale);
  JointState js = evolve_adiabatic(h0, a, dec.eigenvectors[level], w, ramp, steps,
                                   threads);
  return joint_mean_q(js);
}

// Random-outcome rule of the protective measurement on a superposition:
// outcome <E_i|A|E_i> with probability |<E_i|psi0>|^2.
inline std::vector<AdiabaticOutcome> protective_outcomes(const Operator& h0,
                                                         const StateVector& psi0,
                                                         const Operator& a) {
  SpectralDecomposition dec = eig_hermitian(h0);
  for (int i = 0; i < h0.dim(); ++i)
    for (int j = i + 1; j < h0.dim(); ++j)
      if (std::abs(dec.eigenvalues[i] - dec.eigenvalues[j]) <= 1e-6)
        throw DegenerateSpectrum("protective measurement needs a nondegenerate H0");

  std::vector<AdiabaticOutcome> out;
  for (int i = 0; i < h0.dim(); ++i) {
    double prob = std::norm(inner(dec.eigenvectors[i], psi0));
    if (prob < 1e-14) continue;
    double shift = expectation(a, dec.eigenvectors[i]);
    out.push_back(AdiabaticOutcome{i, shift, Complex(shift, 0.0), prob});
  }
  return out;
}

// Conditional (non-unitary) evolution psi(t) ~ sum a_i exp(-i w_i t) |Phi_i>,
// renormalized.
inline StateVector nonhermitian_evolve(const Operator& h, const StateVector& psi0,
                                       double t) {
  BiorthogonalSystem sys = eig_biorthogonal(h);
  VectorXcd v = VectorXcd::Zero(h.dim());
  for (int i = 0; i < h.dim(); ++i) {
    Complex alpha = inner(sys.bras[i], psi0) / sys.norms[i];
    v += alpha * std::exp(Complex(0.0, -1.0) * sys.frequencies[i] * t) *
         sys.kets[i].amplitudes();
  }
  return StateVector(std::move(v));
}

// Adiabatic measurement on a system governed by a non-hermitian Hamiltonian:
// outcome i shows the weak value of the protected pair <Psi_i| |Phi_i>, with
// relative probability |alpha_i exp(-i w_i T)|^2. Also returns the analytic
// joint state sum_i alpha_i exp(-i w_i T) |Phi_i> Gaussian(Q - Re A_w^i).
inline std::pair<std::vector<AdiabaticOutcome>, JointState> adiabatic_nonhermitian_measure(
    const Operator& h, const Operator& a, const StateVector& psi0, double delta,
    double total_time) {
  BiorthogonalSystem sys = eig_biorthogonal(h);
  const int d = h.dim();

  VectorXcd alpha(d), evolved(d);
  std::vector<Complex> weak(d);
  double total = 0.0;
  double max_center = 0.0;
  for (int i = 0; i < d; ++i) {
    alpha[i] = inner(sys.bras[i], psi0) / sys.norms[i];
    evolved[i] = alpha[i] * std::exp(Complex(0.0, -1.0) * sys.frequencies[i] *
                                     total_time);
    weak[i] = sys.bras[i].amplitudes().dot(a.matrix() * sys.kets[i].amplitudes()) /
              sys.norms[i];
    total += std::norm(evolved[i]);
    max_center = std::max(max_center, std::abs(weak[i].real()));
  }
  if (!(total > 0.0)) throw NormalizationUnderflow("evolved amplitudes vanished");

  std::vector<AdiabaticOutcome> outcomes;
  for (int i = 0; i < d; ++i) {
    double prob = std::norm(evolved[i]) / total;
    if (prob < 1e-14) continue;
    outcomes.push_back(AdiabaticOutcome{i, weak[i].real(), weak[i], prob});
  }
  double kept = 0.0;
  for (const auto& o : outcomes) kept += o.probability;
  for (auto& o : outcomes) o.probability /= kept;

  Grid grid = Grid::suggest(delta, max_center);
  MatrixXcd amps = MatrixXcd::Zero(d, grid.points);
  for (int i = 0; i < d; ++i) {
    if (evolved[i] == Complex(0.0, 0.0)) continue;
    for (int k = 0; k < grid.points; ++k) {
      double q = grid.q(k) - weak[i].real();
      amps.col(k) += evolved[i] * std::exp(-q * q / (2.0 * delta * delta)) *
                     sys.kets[i].amplitudes();
    }
  }
  return {std::move(outcomes),
          JointState(grid, std::move(amps), Representation::position)};
}

// Large-spin protection of the spin-1/2 two-state vector <up_y| |up_x>:
// ancilla spin N pre-selected along x, post-selected along y, coupled by
// H_prot = -lambda S.sigma (ancilla is the slow tensor factor).
struct ProtectionSetup {
  int ancilla_spin;      // N
  double lambda;
  Operator h_prot;
  StateVector pre_ancilla;
  StateVector post_ancilla;

  // Control configuration with the coupling switched off entirely.
  static ProtectionSetup unprotected(int n);
};

inline ProtectionSetup build_spin_protection(int n, double lambda) {
  if (n < 1) throw InvalidSpin("ancilla spin must be a positive integer");
  if (lambda == 0.0)
    throw InvalidSpin("protection coupling must be nonzero; use ProtectionSetup::unprotected for the control");
  SpinOperators s = spin_operators(static_cast<double>(n));
  MatrixXcd h = -lambda * (tensor_product(s.x, pauli_x()).matrix() +
                           tensor_product(s.y, pauli_y()).matrix() +
                           tensor_product(s.z, pauli_z()).matrix());
  return ProtectionSetup{n, lambda, Operator(std::move(h)),
                         axis_top_state(Vector3d::UnitX(), n),
                         axis_top_state(Vector3d::UnitY(), n)};
}

inline ProtectionSetup ProtectionSetup::unprotected(int n) {
  if (n < 1) throw InvalidSpin("ancilla spin must be a positive integer");
  int d = 2 * (2 * n + 1);
  return ProtectionSetup{n, 0.0, Operator(MatrixXcd::Zero(d, d).eval()),
                         axis_top_state(Vector3d::UnitX(), n),
                         axis_top_state(Vector3d::UnitY(), n)};
}

// Substitutes the ancilla weak values (N, N, iN) into the coupling:
// H_eff = -lambda N (sigma_x + sigma_y + i sigma_z).
inline Operator effective_hamiltonian(const ProtectionSetup& setup) {
  double ln = setup.lambda * setup.ancilla_spin;
  return Operator((-ln * (pauli_x().matrix() + pauli_y().matrix() +
                          Complex(0.0, 1.0) * pauli_z().matrix()))
                      .eval());
}

struct Protected2svResult {
  double pointer_mean;
  double post_select_prob;
  double disturbance;  // 1 - <up_x| rho_spin |up_x> of the conditional state
};

// Full composite run of the protection scheme: evolve ancilla (x) spin (x)
// pointer under H_prot + g(t) p A_spin, post-select the ancilla on
// <S_y = N|, and report the conditional pointer mean, the post-selection
// probability, and how far the conditional spin strayed from the protected
// forward state |up_x>.
inline Protected2svResult simulate_protected_2sv(const ProtectionSetup& setup,
                                                 const Operator& a_spin, double delta,
                                                 double total_time,
                                                 std::optional<Grid> grid_override = {},
                                                 int threads = 1) {
  if (a_spin.dim() != 2)
    throw std::invalid_argument("protected measurement acts on the spin-1/2 factor");
  if (setup.lambda != 0.0) {
    double guard = 1.0 / (std::abs(setup.lambda) * setup.ancilla_spin * total_time);
    if (!(guard < 0.05))
      throw ProtectionTooWeak("need 1/(lambda N T) < 0.05 for the coupling to protect");
  }

  StateVector spin_pre = axis_top_state(Vector3d::UnitX(), 0.5);  // |up_x>
  StateVector psi0 = tensor_product(setup.pre_ancilla, spin_pre);
  Operator a_comp = tensor_product(identity(2 * setup.ancilla_spin + 1), a_spin);

  Grid grid = grid_override.value_or(Grid::suggest(delta, detail::spectral_radius(a_spin)));
  PointerWave w = gaussian_pointer(grid, delta);
  RampProfile ramp(total_time);
  double p_max = std::sqrt(2.0 * 745.0) / delta;
  double scale = detail::spectral_radius(setup.h_prot) +
                 ramp.plateau() * p_max * detail::spectral_radius(a_spin);
  int steps = adiabatic_steps(total_time, scale);

  JointState js = evolve_adiabatic(setup.h_prot, a_comp, psi0, w, ramp, steps, threads);

  // project the ancilla onto <S_y = N|
  const int na = 2 * setup.ancilla_spin + 1;
  MatrixXcd cond = MatrixXcd::Zero(2, grid.points);
  for (int anc = 0; anc < na; ++anc) {
    Complex weight = std::conj(setup.post_ancilla[anc]);
    cond.row(0) += weight * js.amplitudes().row(anc * 2);
    cond.row(1) += weight * js.amplitudes().row(anc * 2 + 1);
  }
  double prob = cond.squaredNorm() * js.measure();
  if (!(prob > 1e-300))
    throw PostSelectionImpossible("ancilla post-selection amplitude vanishes");

  JointState spin_pointer(grid, std::move(cond), js.representation());
  JointState pos = change_representation(spin_pointer, Representation::position);

  Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
  for (int k = 0; k < grid.points; ++k) {
    VectorXcd col = pos.amplitudes().col(k);
    rho += (col * col.adjoint()) * grid.dq();
  }
  double fidelity =
      (spin_pre.amplitudes().adjoint() * rho * spin_pre.amplitudes())(0, 0).real();

  return Protected2svResult{joint_mean_q(pos), prob, 1.0 - fidelity};
}

// Scan export schema shared by the adiabatic drivers: T, mean_q, error, and
// (when applicable) disturbance and post-selection probability.
struct ScanRow {
  double total_time;
  double mean_q;
  double error;
  std::optional<double> disturbance;
  std::optional<double> post_select_prob;
};

inline void write_scan_csv(const std::vector<ScanRow>& rows, std::ostream& os) {
  csv::row(os, {"T", "mean_q", "error", "disturbance", "post_select_prob"});
  for (const ScanRow& r : rows) {
    csv::row(os, {csv::num(r.total_time), csv::num(r.mean_q), csv::num(r.error),
                  r.disturbance ? csv::num(*r.disturbance) : "",
                  r.post_select_prob ? csv::num(*r.post_select_prob) : ""});
  }
}

}  // namespace wv
