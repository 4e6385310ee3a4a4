#pragma once

#include <optional>

#include "wv/ensemble.hpp"
#include "wv/hilbert.hpp"
#include "wv/pointer.hpp"
#include "wv/rng.hpp"

namespace wv {

// Entangled system (x) pointer amplitude array. Rows index the system
// (slow index), columns the pointer lattice in the tagged representation.
// Globally continuum-normalized: sum |amp|^2 * (dq or dp) = 1.
class JointState {
 public:
  JointState(Grid grid, MatrixXcd amps, Representation rep)
      : grid_(grid), amps_(std::move(amps)), rep_(rep) {
    if (static_cast<int>(amps_.cols()) != grid_.points)
      throw std::invalid_argument("JointState: column count must match the grid");
    double n2 = amps_.squaredNorm() * measure();
    if (!(n2 > 0.0) || !std::isfinite(n2))
      throw NormalizationUnderflow("joint state has vanishing norm");
    amps_ /= std::sqrt(n2);
  }

  int system_dim() const { return static_cast<int>(amps_.rows()); }
  const Grid& grid() const { return grid_; }
  const MatrixXcd& amplitudes() const { return amps_; }
  Representation representation() const { return rep_; }
  double measure() const {
    return rep_ == Representation::position ? grid_.dq() : grid_.dp();
  }

 private:
  Grid grid_;
  MatrixXcd amps_;
  Representation rep_;
};

inline JointState change_representation(const JointState& js, Representation target) {
  if (js.representation() == target) return js;
  bool forward = target == Representation::momentum;
  MatrixXcd out(js.system_dim(), js.grid().points);
  for (int s = 0; s < js.system_dim(); ++s)
    out.row(s) = detail::centered_dft(js.amplitudes().row(s), js.grid(), forward);
  return JointState(js.grid(), std::move(out), target);
}

// Impulsive von Neumann coupling exp(-i P A): in the eigenbasis of A the
// i-th system component drags its pointer factor by the eigenvalue a_i.
inline JointState entangle(const StateVector& psi, const Operator& a,
                           const PointerWave& w) {
  if (!a.is_hermitian()) throw NotHermitian("entangle requires a hermitian observable");
  if (a.dim() != psi.dim())
    throw std::invalid_argument("entangle: dimension mismatch");
  SpectralDecomposition dec = eig_hermitian(a);
  const Grid& g = w.grid();
  double span = std::max(std::abs(dec.eigenvalues[0]),
                         std::abs(dec.eigenvalues[a.dim() - 1]));
  if (!(span < g.extent / 4.0))
    throw ShiftTooLarge("eigenvalue span exceeds the grid shift guard L/4");

  VectorXcd mom = change_representation(w, Representation::momentum).amplitudes();
  MatrixXcd out = MatrixXcd::Zero(a.dim(), g.points);
  for (int i = 0; i < a.dim(); ++i) {
    const VectorXcd& v = dec.eigenvectors[i].amplitudes();
    Complex alpha = v.dot(psi.amplitudes());
    if (alpha == Complex(0.0, 0.0)) continue;
    for (int j = 0; j < g.points; ++j) {
      Complex factor = alpha * mom[j] *
                       std::exp(Complex(0.0, -g.p(j) * dec.eigenvalues[i]));
      out.col(j) += factor * v;
    }
  }
  JointState js(g, std::move(out), Representation::momentum);
  return change_representation(js, Representation::position);
}

// Marginal pointer density over Q, tracing out the system.
inline VectorXd pointer_distribution(const JointState& js) {
  JointState pos = change_representation(js, Representation::position);
  return pos.amplitudes().cwiseAbs2().colwise().sum().transpose();
}

namespace detail {

// Inverse-CDF sampler over a nodal density; the CDF is trapezoidal between
// nodes and inverted by linear interpolation.
class MarginalSampler {
 public:
  MarginalSampler(VectorXd density, const Grid& g)
      : density_(std::move(density)), grid_(g), cdf_(g.points) {
    cdf_[0] = 0.0;
    for (int k = 1; k < g.points; ++k)
      cdf_[k] = cdf_[k - 1] + 0.5 * g.dq() * (density_[k - 1] + density_[k]);
    total_ = cdf_[g.points - 1];
    if (!(total_ > 0.0))
      throw NormalizationUnderflow("cannot sample from a vanishing density");
  }

  // Continuous draw.
  double sample(RngStream& rng) const {
    auto [k, t] = locate(rng.uniform01());
    return grid_.q(k) + t * grid_.dq();
  }

  // Draw snapped to the nearest lattice node.
  int sample_node(RngStream& rng) const {
    auto [k, t] = locate(rng.uniform01());
    int node = t <= 0.5 ? k : k + 1;
    return std::min(node, grid_.points - 1);
  }

 private:
  std::pair<int, double> locate(double u) const {
    double target = u * total_;
    int lo = 0, hi = grid_.points - 1;
    while (hi - lo > 1) {
      int mid = (lo + hi) / 2;
      if (cdf_[mid] > target)
        hi = mid;
      else
        lo = mid;
    }
    double seg = cdf_[hi] - cdf_[lo];
    double t = seg > 0.0 ? (target - cdf_[lo]) / seg : 0.0;
    return {lo, std::min(std::max(t, 0.0), 1.0)};
  }

  VectorXd density_;
  Grid grid_;
  VectorXd cdf_;
  double total_;
};

}  // namespace detail

// One pointer reading plus the conditional system state at the sampled node.
struct ReadoutRecord {
  double reading;
  StateVector collapsed_system;
  bool success_flag = true;
};

inline ReadoutRecord ideal_readout(const JointState& js, RngStream& rng) {
  JointState pos = change_representation(js, Representation::position);
  detail::MarginalSampler sampler(pointer_distribution(pos), pos.grid());
  int node = sampler.sample_node(rng);
  VectorXcd column = pos.amplitudes().col(node);
  if (column.norm() == 0.0) {
    // nearest-node snap landed on an exact zero of the marginal; take the
    // neighbouring node of the sampled segment instead
    node = node > 0 ? node - 1 : node + 1;
    column = pos.amplitudes().col(node);
  }
  return ReadoutRecord{pos.grid().q(node), StateVector(column), true};
}

// Projects the system onto psi2 and returns the conditional pointer wave
// plus the pre-normalization success probability.
inline std::pair<PointerWave, double> post_select(const JointState& js,
                                                  const StateVector& psi2) {
  if (psi2.dim() != js.system_dim())
    throw std::invalid_argument("post_select: dimension mismatch");
  VectorXcd cond = psi2.amplitudes().adjoint() * js.amplitudes();
  double success = cond.squaredNorm() * js.measure();
  if (!(success > 1e-300))
    throw PostSelectionImpossible("post-selection amplitude vanishes");
  return {PointerWave(js.grid(), std::move(cond), js.representation()), success};
}

// Deterministic weak-limit diagnostic for a pre- and post-selected pair:
// the exact conditional pointer mean, the first-order prediction Re(A_w),
// and the higher moment residuals (A^n)_w - (A_w)^n for n = 2..4 that set
// the size of the neglected corrections.
struct WeakLimitReport {
  double exact_mean;
  double weak_prediction;
  Complex weak_val;
  std::vector<Complex> residual_moments;
};

inline WeakLimitReport weak_limit_report(const TwoStateVector& tsv, const Operator& a,
                                         double delta) {
  SpectralDecomposition dec = eig_hermitian(a);
  std::vector<MixtureTerm> terms;
  terms.reserve(a.dim());
  for (int i = 0; i < a.dim(); ++i) {
    const StateVector& ai = dec.eigenvectors[i];
    Complex c = inner(tsv.bra(), ai) * inner(ai, tsv.ket());
    terms.push_back({c, dec.eigenvalues[i]});
  }
  WeakLimitReport out;
  out.exact_mean = mixture_mean(GaussianMixtureWave(delta, std::move(terms)));
  std::vector<Complex> moments = weak_moments(a, tsv, 4);
  out.weak_val = moments[0];
  out.weak_prediction = moments[0].real();
  for (int n = 2; n <= 4; ++n)
    out.residual_moments.push_back(moments[n - 1] -
                                   std::pow(moments[0], static_cast<double>(n)));
  return out;
}

struct EnsembleEstimate {
  double estimate;
  double std_error;
};

// Pre-selected-only weak measurement: n single-shot readings drawn from the
// entangled marginal, averaged. Requires the weak regime delta >= 5 max|a_i|.
inline EnsembleEstimate weak_ensemble_estimate(const StateVector& psi, const Operator& a,
                                               double delta, std::size_t n,
                                               const RngStream& rng, int threads = 1) {
  SpectralDecomposition dec = eig_hermitian(a);
  double span = std::max(std::abs(dec.eigenvalues[0]),
                         std::abs(dec.eigenvalues[a.dim() - 1]));
  if (!(delta >= 5.0 * span))
    throw WeaknessViolated("weak regime requires delta >= 5 max|a_i|");
  if (n == 0) throw EmptyInput("ensemble size must be positive");

  Grid g = Grid::suggest(delta, span);
  JointState js = entangle(psi, a, gaussian_pointer(g, delta));
  detail::MarginalSampler sampler(pointer_distribution(js), g);

  std::vector<double> readings(n);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RngStream stream = rng.child(i);
      readings[i] = sampler.sample(stream);
    }
  });

  double mean = detail::pairwise_sum(readings) / static_cast<double>(n);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (readings[i] - mean) * (readings[i] - mean);
  double var = n > 1 ? detail::pairwise_sum(sq) / static_cast<double>(n - 1) : 0.0;
  return EnsembleEstimate{mean, std::sqrt(var / static_cast<double>(n))};
}

struct PostSelectedShot {
  double reading;
  bool accepted;
};

// Full pre/post-selected single shot: the post-selection measurement fires
// with the conditional probability; the pointer is then read from the
// matching conditional marginal. Rejected runs still carry a reading (the
// device exists either way), flagged unsuccessful.
class PostSelectedExperiment {
 public:
  PostSelectedExperiment(const TwoStateVector& tsv, const Operator& a, double delta,
                         const Grid& grid)
      : joint_(entangle(tsv.ket(), a, gaussian_pointer(grid, delta))) {
    auto [wave, prob] = post_select(joint_, tsv.bra());
    success_prob_ = prob;
    accepted_.emplace(density_of(wave), grid);
    VectorXd rejected = pointer_distribution(joint_) - prob * density_of(wave);
    rejected = rejected.cwiseMax(0.0);
    if (rejected.maxCoeff() > 0.0) rejected_.emplace(rejected, grid);
  }

  double success_prob() const { return success_prob_; }
  const JointState& joint() const { return joint_; }

  PostSelectedShot shot(RngStream& rng) const {
    bool accept = rng.uniform01() < success_prob_;
    const auto& sampler = accept || !rejected_ ? *accepted_ : *rejected_;
    return PostSelectedShot{sampler.sample(rng), accept};
  }

 private:
  static VectorXd density_of(const PointerWave& w) {
    return change_representation(w, Representation::position).amplitudes().cwiseAbs2();
  }

  JointState joint_;
  double success_prob_;
  std::optional<detail::MarginalSampler> accepted_;
  std::optional<detail::MarginalSampler> rejected_;
};

}  // namespace wv
