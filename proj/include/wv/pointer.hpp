#pragma once

#include <cmath>
#include <numbers>
#include <ostream>
#include <unsupported/Eigen/FFT>
#include <utility>
#include <vector>

#include "wv/csv.hpp"
#include "wv/hilbert.hpp"

namespace wv {

// Uniform pointer-variable lattice Q_k = -L/2 + k dq with the conjugate
// momentum lattice P_j = (j - M/2) dp, dp = 2 pi / L.
struct Grid {
  int points;     // M
  double extent;  // L

  Grid(int m, double l) : points(m), extent(l) {
    if (m < 64 || (m & (m - 1)) != 0)
      throw GridResolution("grid points must be a power of two >= 64");
    if (!(l > 0.0)) throw GridResolution("grid extent must be positive");
  }

  double dq() const { return extent / points; }
  double dp() const { return 2.0 * std::numbers::pi / extent; }
  double q(int k) const { return -extent / 2.0 + k * dq(); }
  double p(int j) const { return (j - points / 2) * dp(); }

  bool operator==(const Grid& o) const {
    return points == o.points && extent == o.extent;
  }

  // Default sizing: resolves a width-delta Gaussian and keeps shifted copies
  // (centers up to max_center) truncated below 1e-12.
  static Grid suggest(double delta, double max_center = 0.0) {
    double l = std::max(20.0 * delta, 8.0 * (std::abs(max_center) + delta));
    return Grid(1024, l);
  }
};

enum class Representation { position, momentum };

namespace detail {

// Unitary centered transform between the Q and P lattices with the
// convention  F(P) = (2 pi)^{-1/2} Int F(Q) exp(-i P Q) dQ,
// so that multiplying by exp(-i P a) in momentum shifts Q by +a.
inline VectorXcd centered_dft(const VectorXcd& in, const Grid& g, bool forward) {
  const int m = g.points;
  // exp(-i pi M/2) = (-1)^{M/2}, computed exactly in integer arithmetic.
  const double c0 = ((m / 2) % 2 == 0) ? 1.0 : -1.0;
  std::vector<Complex> buf(m), out(m);
  for (int k = 0; k < m; ++k) buf[k] = (k % 2 == 0) ? in[k] : -in[k];
  Eigen::FFT<double> fft;
  if (forward) {
    fft.fwd(out, buf);
  } else {
    for (auto& z : buf) z = std::conj(z);
    fft.fwd(out, buf);
    for (auto& z : out) z = std::conj(z);
  }
  const double scale = (forward ? g.dq() : g.dp()) / std::sqrt(2.0 * std::numbers::pi);
  VectorXcd res(m);
  for (int j = 0; j < m; ++j) {
    Complex v = out[j] * (scale * c0);
    res[j] = (j % 2 == 0) ? v : -v;
  }
  return res;
}

inline double trapezoid(const VectorXd& f, double h) {
  double s = 0.0;
  for (int i = 0; i < f.size(); ++i) s += f[i];
  s -= 0.5 * (f[0] + f[f.size() - 1]);
  return s * h;
}

}  // namespace detail

// One-dimensional pointer wavefunction, continuum-normalized in whichever
// representation it currently holds: sum |amp|^2 * (dq or dp) = 1.
class PointerWave {
 public:
  PointerWave(Grid grid, VectorXcd amps, Representation rep = Representation::position)
      : grid_(grid), amps_(std::move(amps)), rep_(rep) {
    if (static_cast<int>(amps_.size()) != grid_.points)
      throw std::invalid_argument("PointerWave: amplitude count must match the grid");
    double n2 = amps_.squaredNorm() * measure();
    if (!(n2 > 0.0) || !std::isfinite(n2))
      throw NormalizationUnderflow("pointer wave has vanishing norm");
    amps_ /= std::sqrt(n2);
  }

  const Grid& grid() const { return grid_; }
  const VectorXcd& amplitudes() const { return amps_; }
  Representation representation() const { return rep_; }
  double measure() const {
    return rep_ == Representation::position ? grid_.dq() : grid_.dp();
  }

 private:
  Grid grid_;
  VectorXcd amps_;
  Representation rep_;
};

// Analytic description sum_i coeff_i exp(-(Q - center_i)^2 / (2 width^2)),
// up to global normalization.
struct MixtureTerm {
  Complex coeff;
  double center;
};

struct GaussianMixtureWave {
  double width;
  std::vector<MixtureTerm> terms;

  GaussianMixtureWave(double w, std::vector<MixtureTerm> t)
      : width(w), terms(std::move(t)) {
    if (terms.empty()) throw EmptyInput("mixture needs at least one term");
    if (!(width > 0.0)) throw std::invalid_argument("mixture width must be positive");
  }
};

namespace detail {
inline void check_resolution(const Grid& g, double delta) {
  if (!(delta > 4.0 * g.dq()))
    throw GridResolution("pointer width under-resolved: need delta > 4 dq");
  if (!(delta < g.extent / 10.0))
    throw GridResolution("pointer width too wide for the grid: need delta < L/10");
}
}  // namespace detail

// Gaussian ground state of the pointer: density ~ exp(-Q^2 / delta^2).
inline PointerWave gaussian_pointer(const Grid& grid, double delta) {
  detail::check_resolution(grid, delta);
  VectorXcd amps(grid.points);
  for (int k = 0; k < grid.points; ++k) {
    double q = grid.q(k);
    amps[k] = std::exp(-q * q / (2.0 * delta * delta));
  }
  return PointerWave(grid, std::move(amps));
}

inline PointerWave change_representation(const PointerWave& w, Representation target) {
  if (w.representation() == target) return w;
  bool forward = target == Representation::momentum;
  return PointerWave(w.grid(), detail::centered_dft(w.amplitudes(), w.grid(), forward),
                     target);
}

// Exact spectral shift Q -> Q + a via exp(-i P a) in the momentum
// representation. Returns the wave in its original representation.
inline PointerWave shift_pointer(const PointerWave& w, double a) {
  if (!(std::abs(a) < w.grid().extent / 4.0))
    throw ShiftTooLarge("shift exceeds L/4; wraparound would corrupt the wave");
  PointerWave mom = change_representation(w, Representation::momentum);
  VectorXcd amps = mom.amplitudes();
  for (int j = 0; j < w.grid().points; ++j) {
    double p = w.grid().p(j);
    amps[j] *= std::exp(Complex(0.0, -p * a));
  }
  PointerWave shifted(w.grid(), std::move(amps), Representation::momentum);
  return change_representation(shifted, w.representation());
}

struct WaveMoments {
  VectorXd density;  // position density |amp(Q)|^2
  double mean_q;
  double var_q;
  double mean_p;
  double var_p;
};

inline WaveMoments density_and_moments(const PointerWave& w) {
  PointerWave pos = change_representation(w, Representation::position);
  PointerWave mom = change_representation(w, Representation::momentum);
  const Grid& g = w.grid();

  WaveMoments out;
  out.density = pos.amplitudes().cwiseAbs2();
  VectorXd qd(g.points), qqd(g.points);
  for (int k = 0; k < g.points; ++k) {
    qd[k] = g.q(k) * out.density[k];
    qqd[k] = g.q(k) * g.q(k) * out.density[k];
  }
  double z = detail::trapezoid(out.density, g.dq());
  out.mean_q = detail::trapezoid(qd, g.dq()) / z;
  out.var_q = detail::trapezoid(qqd, g.dq()) / z - out.mean_q * out.mean_q;

  VectorXd pdens = mom.amplitudes().cwiseAbs2();
  VectorXd pd(g.points), ppd(g.points);
  for (int j = 0; j < g.points; ++j) {
    pd[j] = g.p(j) * pdens[j];
    ppd[j] = g.p(j) * g.p(j) * pdens[j];
  }
  double zp = detail::trapezoid(pdens, g.dp());
  out.mean_p = detail::trapezoid(pd, g.dp()) / zp;
  out.var_p = detail::trapezoid(ppd, g.dp()) / zp - out.mean_p * out.mean_p;
  return out;
}

// Grid sampling of the analytic mixture, normalized.
inline PointerWave mixture_wave(const GaussianMixtureWave& mix, const Grid& grid) {
  detail::check_resolution(grid, mix.width);
  for (const MixtureTerm& t : mix.terms)
    if (std::abs(t.center) > grid.extent / 4.0)
      throw GridResolution("mixture center outside [-L/4, L/4]");
  VectorXcd amps = VectorXcd::Zero(grid.points);
  for (int k = 0; k < grid.points; ++k) {
    double q = grid.q(k);
    Complex s = 0.0;
    for (const MixtureTerm& t : mix.terms)
      s += t.coeff *
           std::exp(-(q - t.center) * (q - t.center) / (2.0 * mix.width * mix.width));
    amps[k] = s;
  }
  if (amps.squaredNorm() * grid.dq() < 1e-300)
    throw NormalizationUnderflow("mixture cancels below representable norm");
  return PointerWave(grid, std::move(amps));
}

// Exact mean of the normalized mixture density via pairwise Gaussian overlap
// integrals: the cross term of centers a_i, a_j carries weight
// exp(-(a_i - a_j)^2 / (4 delta^2)) and sits at (a_i + a_j)/2.
inline double mixture_mean(const GaussianMixtureWave& mix) {
  double num = 0.0;
  double den = 0.0;
  const auto& ts = mix.terms;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (std::size_t j = 0; j < ts.size(); ++j) {
      double gap = ts[i].center - ts[j].center;
      double k = std::exp(-gap * gap / (4.0 * mix.width * mix.width));
      double w = (ts[i].coeff * std::conj(ts[j].coeff)).real() * k;
      num += w * 0.5 * (ts[i].center + ts[j].center);
      den += w;
    }
  }
  if (!(den > 1e-300))
    throw NormalizationUnderflow("mixture density integral underflows");
  return num / den;
}

// CSV export: Q (or P), density, re_amp, im_amp.
inline void write_wave_csv(const PointerWave& w, std::ostream& os) {
  bool pos = w.representation() == Representation::position;
  csv::row(os, {pos ? "Q" : "P", "density", "re_amp", "im_amp"});
  for (int k = 0; k < w.grid().points; ++k) {
    double x = pos ? w.grid().q(k) : w.grid().p(k);
    Complex a = w.amplitudes()[k];
    csv::row(os, {csv::num(x), csv::num(std::norm(a)), csv::num(a.real()),
                  csv::num(a.imag())});
  }
}

}  // namespace wv
