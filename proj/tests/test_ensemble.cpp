#include "wv/ensemble.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "oracle.hpp"
#include "wv/impulsive.hpp"

using namespace wv;
using Catch::Approx;

namespace {

StateVector from2(const oracle::Vec2& v) {
  VectorXcd a(2);
  a << v[0], v[1];
  return StateVector(a);
}

}  // namespace

TEST_CASE("summarize basics", "[ensemble]") {
  EnsembleReport rep = summarize({1.0, 2.0, 3.0});
  REQUIRE(rep.mean == Approx(2.0).margin(1e-15));
  REQUIRE(rep.n == 3);

  EnsembleReport flat = summarize({4.2, 4.2, 4.2, 4.2});
  REQUIRE(flat.std_error == 0.0);

  std::size_t total = 0;
  for (std::size_t c : rep.histogram.counts) total += c;
  REQUIRE(total == rep.n);

  REQUIRE_THROWS_AS(summarize({}), EmptyInput);
}

TEST_CASE("two-cluster data occupies two histogram modes", "[ensemble]") {
  double delta = 0.05;
  Grid g = Grid::suggest(delta, 1.0);
  JointState js = entangle(from2(oracle::up_x()), pauli_z(), gaussian_pointer(g, delta));
  detail::MarginalSampler sampler(pointer_distribution(js), g);

  auto experiment = [&](RngStream& rng) { return sampler.sample(rng); };
  EnsembleReport rep = run_ensemble(experiment, 4000, 2024, 8);

  // modes at -1 and +1 populated, middle empty
  const Histogram& h = rep.histogram;
  std::size_t low = 0, mid = 0, high = 0;
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    double center = 0.5 * (h.bin_edges[b] + h.bin_edges[b + 1]);
    if (center < -0.5)
      low += h.counts[b];
    else if (center > 0.5)
      high += h.counts[b];
    else
      mid += h.counts[b];
  }
  REQUIRE(mid == 0);
  REQUIRE(low > 1500);
  REQUIRE(high > 1500);
}

TEST_CASE("pairwise reduction merges halves bit-exactly", "[ensemble]") {
  RngStream rng(5150);
  std::vector<double> v(100001);
  for (double& x : v) x = 2.0 * rng.uniform01() - 1.0 + 1e8 * (rng.uniform01() < 0.01);
  std::size_t half = v.size() / 2;
  double whole = detail::pairwise_sum(v);
  double merged = detail::pairwise_sum(v.data(), half) +
                  detail::pairwise_sum(v.data() + half, v.size() - half);
  REQUIRE(whole == merged);

  // summarize of the concatenation therefore reproduces the merged mean exactly
  EnsembleReport rep = summarize(v);
  REQUIRE(rep.mean == merged / static_cast<double>(v.size()));
}

TEST_CASE("summary std_error matches a stable two-pass oracle", "[ensemble]") {
  RngStream rng(5151);
  std::vector<double> v(5000);
  for (double& x : v) x = 10.0 * rng.uniform01();
  EnsembleReport rep = summarize(v);
  long double mean = 0.0L;
  for (double x : v) mean += x;
  mean /= v.size();
  long double var = 0.0L;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= (v.size() - 1);
  double se = std::sqrt(static_cast<double>(var / v.size()));
  REQUIRE(rep.std_error == Approx(se).margin(1e-12));
}

TEST_CASE("fixed seed reproduces the ensemble bit for bit", "[ensemble]") {
  auto experiment = [](RngStream& rng) { return rng.uniform01() - 0.5; };
  EnsembleReport a = run_ensemble(experiment, 20000, 99, 32, 1);
  EnsembleReport b = run_ensemble(experiment, 20000, 99, 32, 1);
  REQUIRE(a.mean == b.mean);
  REQUIRE(a.std_error == b.std_error);
  REQUIRE(a.histogram.counts == b.histogram.counts);

  // thread count cannot change a single bit
  EnsembleReport c = run_ensemble(experiment, 20000, 99, 32, 4);
  REQUIRE(a.mean == c.mean);
  REQUIRE(a.std_error == c.std_error);
  REQUIRE(a.histogram.counts == c.histogram.counts);

  EnsembleReport d = run_ensemble(experiment, 20000, 100, 32, 1);
  REQUIRE(a.mean != d.mean);
}

TEST_CASE("weak pre/post-selected ensemble recovers the weak value", "[ensemble]") {
  // accepted readings of the AAV sigma_x experiment at delta = 10
  TwoStateVector aav(from2(oracle::up_x()), from2(oracle::up_y()));
  Grid g = Grid::suggest(10.0, 1.0);
  PostSelectedExperiment exp(aav, pauli_x(), 10.0, g);

  auto accepted_reading = [&](RngStream& rng) {
    for (;;) {
      PostSelectedShot s = exp.shot(rng);
      if (s.accepted) return s.reading;
    }
  };
  std::size_t n = 100000;
  EnsembleReport rep = run_ensemble(accepted_reading, n, 7, 32, 1);

  // Gaussian SE oracle: sd = delta/sqrt(2) -> SE = 10/sqrt(2e5) = 0.0224
  double se = 10.0 / std::sqrt(2.0 * static_cast<double>(n));
  REQUIRE(se == Approx(0.0224).margin(2e-4));
  REQUIRE(std::abs(rep.mean - 1.0) < 3.0 * se);
  REQUIRE(rep.std_error == Approx(se).epsilon(0.05));

  // quadrupling n halves the standard error (within statistical tolerance)
  EnsembleReport quarter = run_ensemble(accepted_reading, n / 4, 7, 32, 1);
  REQUIRE(rep.std_error == Approx(quarter.std_error / 2.0).epsilon(0.15));
}

TEST_CASE("post-selection accounting matches the success probability", "[ensemble]") {
  double theta = 0.6;
  VectorXcd k(2), b(2);
  k << std::cos(theta), std::sin(theta);
  b << std::cos(theta), -std::sin(theta);
  TwoStateVector tsv{StateVector(k), StateVector(b)};
  Grid g = Grid::suggest(8.0, 1.0);
  PostSelectedExperiment exp(tsv, pauli_z(), 8.0, g);

  std::size_t n = 20000, accepted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    RngStream stream(31, i);
    if (exp.shot(stream).accepted) ++accepted;
  }
  double frac = accepted / static_cast<double>(n);
  double p = exp.success_prob();
  double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  REQUIRE(std::abs(frac - p) < 3.0 * sigma);
}

TEST_CASE("readings and histogram csv exports", "[ensemble]") {
  std::vector<double> readings{0.5, 1.5, 2.5};
  EnsembleReport rep = summarize(readings, 2);
  std::ostringstream os;
  write_readings_csv(readings, {true, false, true}, os, &rep);
  std::string text = os.str();
  REQUIRE(text.find("sample_index,reading,success_flag\n") == 0);
  REQUIRE(text.find("1,1.5,0\n") != std::string::npos);
  REQUIRE(text.find("summary,1.5,") != std::string::npos);

  std::ostringstream hs;
  write_histogram_csv(rep.histogram, hs);
  std::string htext = hs.str();
  REQUIRE(htext.find("bin_left,bin_right,count\n") == 0);
  std::size_t lines = std::count(htext.begin(), htext.end(), '\n');
  REQUIRE(lines == 3);  // header + 2 bins
}
