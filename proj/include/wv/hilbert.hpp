#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <unsupported/Eigen/KroneckerProduct>
#include <vector>

#include "wv/errors.hpp"

namespace wv {

using Complex = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::Vector3d;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double kOverlapTol = 1e-12;     // two-state vectors below this are invalid
inline constexpr double kHermitianTol = 1e-12;   // entrywise |A - A^dag| bound
inline constexpr double kDegeneracyGap = 1e-9;   // minimal eigenvalue separation for bi-orthogonal systems

namespace detail {

// Rotate the global phase so the largest-magnitude component (lowest index on
// ties) becomes real positive. Makes eigenvector output deterministic.
inline VectorXcd fix_phase(VectorXcd v) {
  int pick = 0;
  double best = -1.0;
  for (int i = 0; i < v.size(); ++i) {
    double a = std::abs(v[i]);
    if (a > best + 1e-15) {
      best = a;
      pick = i;
    }
  }
  if (best > 0.0) v *= std::conj(v[pick]) / best;
  return v;
}

}  // namespace detail

// Normalized finite-dimensional state. Construction normalizes, so the
// unit-norm invariant holds for every instance.
class StateVector {
 public:
  explicit StateVector(VectorXcd amps) : amps_(std::move(amps)) {
    double n = amps_.norm();
    if (!(n > 0.0) || !std::isfinite(n))
      throw std::invalid_argument("StateVector: zero or non-finite norm");
    amps_ /= n;
  }

  static StateVector basis(int dim, int k) {
    VectorXcd v = VectorXcd::Zero(dim);
    v[k] = 1.0;
    return StateVector(std::move(v));
  }

  int dim() const { return static_cast<int>(amps_.size()); }
  const VectorXcd& amplitudes() const { return amps_; }
  Complex operator[](int i) const { return amps_[i]; }

 private:
  VectorXcd amps_;
};

// <bra|ket>
inline Complex inner(const StateVector& bra, const StateVector& ket) {
  return bra.amplitudes().dot(ket.amplitudes());
}

// Complex square matrix with a hermiticity flag fixed at construction.
class Operator {
 public:
  explicit Operator(MatrixXcd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0)
      throw std::invalid_argument("Operator: matrix must be square and non-empty");
    hermitian_ = (m_ - m_.adjoint()).cwiseAbs().maxCoeff() < kHermitianTol;
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const MatrixXcd& matrix() const { return m_; }
  bool is_hermitian() const { return hermitian_; }

  Operator adjoint() const { return Operator(m_.adjoint()); }

  friend Operator operator+(const Operator& a, const Operator& b) {
    return Operator(a.m_ + b.m_);
  }
  friend Operator operator-(const Operator& a, const Operator& b) {
    return Operator(a.m_ - b.m_);
  }
  friend Operator operator*(const Operator& a, const Operator& b) {
    return Operator(a.m_ * b.m_);
  }
  friend Operator operator*(Complex c, const Operator& a) { return Operator(c * a.m_); }
  friend Operator operator*(double c, const Operator& a) { return Operator(c * a.m_); }

 private:
  MatrixXcd m_;
  bool hermitian_;
};

inline Operator identity(int dim) {
  return Operator(MatrixXcd::Identity(dim, dim));
}

inline Operator pauli_x() {
  MatrixXcd m(2, 2);
  m << 0, 1, 1, 0;
  return Operator(m);
}

inline Operator pauli_y() {
  MatrixXcd m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return Operator(m);
}

inline Operator pauli_z() {
  MatrixXcd m(2, 2);
  m << 1, 0, 0, -1;
  return Operator(m);
}

// Pre- and post-selected description <Psi2| |Psi1>. Construction rejects
// (near-)orthogonal pairs: every weak value would diverge there.
class TwoStateVector {
 public:
  TwoStateVector(StateVector ket, StateVector bra)
      : ket_(std::move(ket)), bra_(std::move(bra)) {
    if (ket_.dim() != bra_.dim())
      throw std::invalid_argument("TwoStateVector: dimension mismatch");
    if (std::abs(overlap()) <= kOverlapTol)
      throw OverlapVanishes("post-selected state is orthogonal to the pre-selected state");
  }

  const StateVector& ket() const { return ket_; }  // |Psi1>, forward
  const StateVector& bra() const { return bra_; }  // |Psi2>, used conjugated
  Complex overlap() const { return inner(bra_, ket_); }

 private:
  StateVector ket_;
  StateVector bra_;
};

// Eigen-decomposition of a hermitian operator: ascending real eigenvalues,
// orthonormal phase-fixed eigenvectors.
struct SpectralDecomposition {
  VectorXd eigenvalues;
  std::vector<StateVector> eigenvectors;

  MatrixXcd reconstruct() const {
    const int d = static_cast<int>(eigenvalues.size());
    MatrixXcd m = MatrixXcd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
      const VectorXcd& v = eigenvectors[i].amplitudes();
      m += eigenvalues[i] * (v * v.adjoint());
    }
    return m;
  }
};

// Left/right eigen-system of a non-hermitian operator. kets[i] is the
// forward-evolving eigenvector of H, bras[i] the backward one (right
// eigenvector of H^dag, stored as a ket); both unit-normalized, and
// norms[i] = <Psi_i|Phi_i> records the bi-orthogonal pairing factor.
struct BiorthogonalSystem {
  VectorXcd frequencies;
  std::vector<StateVector> kets;
  std::vector<StateVector> bras;
  VectorXcd norms;

  MatrixXcd reconstruct() const {
    const int d = static_cast<int>(frequencies.size());
    MatrixXcd m = MatrixXcd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
      m += frequencies[i] *
           (kets[i].amplitudes() * bras[i].amplitudes().adjoint()) / norms[i];
    }
    return m;
  }
};

// A_w = <Psi2|A|Psi1> / <Psi2|Psi1>
inline Complex weak_value(const Operator& a, const TwoStateVector& tsv) {
  if (a.dim() != tsv.ket().dim())
    throw std::invalid_argument("weak_value: dimension mismatch");
  Complex ovl = tsv.overlap();
  if (std::abs(ovl) <= kOverlapTol)
    throw OverlapVanishes("weak value undefined at vanishing overlap");
  return tsv.bra().amplitudes().dot(a.matrix() * tsv.ket().amplitudes()) / ovl;
}

inline double expectation(const Operator& a, const StateVector& psi) {
  if (!a.is_hermitian())
    throw NotHermitian("expectation requires a hermitian operator");
  if (a.dim() != psi.dim())
    throw std::invalid_argument("expectation: dimension mismatch");
  return psi.amplitudes().dot(a.matrix() * psi.amplitudes()).real();
}

inline SpectralDecomposition eig_hermitian(const Operator& a) {
  if (!a.is_hermitian()) throw NotHermitian("eig_hermitian requires a hermitian operator");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(a.matrix());
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eig_hermitian: solver failed to converge");
  SpectralDecomposition out;
  out.eigenvalues = solver.eigenvalues();  // ascending
  out.eigenvectors.reserve(a.dim());
  for (int i = 0; i < a.dim(); ++i)
    out.eigenvectors.emplace_back(detail::fix_phase(solver.eigenvectors().col(i)));
  return out;
}

// Left/right decomposition of a non-degenerate (possibly non-hermitian)
// operator. Bras are obtained as right eigenvectors of H^dag and paired to
// kets by nearest eigenvalue; pairs are ordered ascending by (Re, Im).
inline BiorthogonalSystem eig_biorthogonal(const Operator& h) {
  const int d = h.dim();
  Eigen::ComplexEigenSolver<MatrixXcd> right(h.matrix());
  Eigen::ComplexEigenSolver<MatrixXcd> left(h.matrix().adjoint());
  if (right.info() != Eigen::Success || left.info() != Eigen::Success)
    throw std::runtime_error("eig_biorthogonal: solver failed to converge");

  VectorXcd omega = right.eigenvalues();
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (std::abs(omega[i] - omega[j]) <= kDegeneracyGap)
        throw DegenerateSpectrum("eigenvalue gap below 1e-9");

  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    if (omega[i].real() != omega[j].real()) return omega[i].real() < omega[j].real();
    return omega[i].imag() < omega[j].imag();
  });

  // Pair each ket eigenvalue with the nearest conj(left eigenvalue); with a
  // non-degenerate spectrum this matching is unambiguous.
  VectorXcd mu = left.eigenvalues();
  std::vector<bool> used(d, false);
  BiorthogonalSystem out;
  out.frequencies.resize(d);
  out.norms.resize(d);
  out.kets.reserve(d);
  out.bras.reserve(d);
  for (int k = 0; k < d; ++k) {
    int i = order[k];
    int pick = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < d; ++j) {
      if (used[j]) continue;
      double dist = std::abs(std::conj(mu[j]) - omega[i]);
      if (dist < best) {
        best = dist;
        pick = j;
      }
    }
    used[pick] = true;
    out.frequencies[k] = omega[i];
    out.kets.emplace_back(detail::fix_phase(right.eigenvectors().col(i)));
    out.bras.emplace_back(detail::fix_phase(left.eigenvectors().col(pick)));
    out.norms[k] = inner(out.bras[k], out.kets[k]);
    if (std::abs(out.norms[k]) <= 1e-10)
      throw DegenerateSpectrum("left/right eigenvector pairing is ill-conditioned");
  }
  return out;
}

// Magnitude of the deviation between a backward eigenstate and its forward
// partner, in the convention where the pair is normalized to unit
// bi-orthogonal product: equals 1/sqrt(1 - |eps|^2) for a 2x2 system whose
// eigen-kets overlap by eps.
inline double backward_forward_fidelity(const BiorthogonalSystem& sys, int i) {
  return 1.0 / std::abs(sys.norms[i]);
}

// (S_x, S_y, S_z) for spin j, built from ladder operators in the basis
// m = j, j-1, ..., -j.
struct SpinOperators {
  Operator x;
  Operator y;
  Operator z;
};

inline SpinOperators spin_operators(double j) {
  double twoj = 2.0 * j;
  if (j < 0.0 || std::abs(twoj - std::round(twoj)) > 1e-9)
    throw InvalidSpin("spin must be a nonnegative half-integer");
  const int d = static_cast<int>(std::lround(twoj)) + 1;
  MatrixXcd sz = MatrixXcd::Zero(d, d);
  MatrixXcd sp = MatrixXcd::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    double m = j - k;
    sz(k, k) = m;
    if (k > 0) sp(k - 1, k) = std::sqrt(j * (j + 1) - m * (m + 1));
  }
  MatrixXcd sm = sp.adjoint();
  return SpinOperators{Operator((sp + sm) / 2.0),
                       Operator((sp - sm) / Complex(0, 2)),
                       Operator(std::move(sz))};
}

// Top-weight coherent state along `axis`: eigenvector of axis.S with
// eigenvalue +j.
inline StateVector axis_top_state(const Vector3d& axis, double j) {
  double n = axis.norm();
  if (!(n > 0.0)) throw std::invalid_argument("axis_top_state: zero axis");
  Vector3d u = axis / n;
  SpinOperators s = spin_operators(j);
  Operator a(u.x() * s.x.matrix() + u.y() * s.y.matrix() + u.z() * s.z.matrix());
  SpectralDecomposition dec = eig_hermitian(a);
  return dec.eigenvectors.back();
}

// Kronecker products; the first factor is the slow index.
inline Operator tensor_product(const Operator& a, const Operator& b) {
  return Operator(Eigen::kroneckerProduct(a.matrix(), b.matrix()).eval());
}

inline StateVector tensor_product(const StateVector& a, const StateVector& b) {
  return StateVector(
      Eigen::kroneckerProduct(a.amplitudes(), b.amplitudes()).eval());
}

// (A^k)_w for k = 1..n_max.
inline std::vector<Complex> weak_moments(const Operator& a, const TwoStateVector& tsv,
                                         int n_max) {
  Complex ovl = tsv.overlap();
  if (std::abs(ovl) <= kOverlapTol)
    throw OverlapVanishes("weak moments undefined at vanishing overlap");
  std::vector<Complex> out;
  out.reserve(n_max);
  VectorXcd v = tsv.ket().amplitudes();
  for (int k = 1; k <= n_max; ++k) {
    v = a.matrix() * v;
    out.push_back(tsv.bra().amplitudes().dot(v) / ovl);
  }
  return out;
}

}  // namespace wv
