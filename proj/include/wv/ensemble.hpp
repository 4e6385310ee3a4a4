#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "wv/csv.hpp"
#include "wv/errors.hpp"
#include "wv/rng.hpp"

namespace wv {

namespace detail {

// Fixed-split pairwise sum: numerically stable, and associative under the
// midpoint split, so merging half-sums reproduces the whole sum bit for bit.
inline double pairwise_sum(const double* data, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += data[i];
    return s;
  }
  std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(v.data(), v.size());
}

}  // namespace detail

struct Histogram {
  std::vector<double> bin_edges;   // size bins + 1
  std::vector<std::size_t> counts; // size bins
};

struct EnsembleReport {
  std::size_t n = 0;
  double mean = 0.0;
  double std_error = 0.0;
  Histogram histogram;
  std::uint64_t seed = 0;
};

// Mean, standard error and histogram of a reading sequence. The histogram
// spans [min, max] padded by 1% on each side.
inline EnsembleReport summarize(const std::vector<double>& readings, int bins = 32) {
  if (readings.empty()) throw EmptyInput("cannot summarize an empty sequence");
  if (bins < 1) throw std::invalid_argument("summarize: need at least one bin");

  EnsembleReport rep;
  rep.n = readings.size();
  rep.mean = detail::pairwise_sum(readings) / static_cast<double>(rep.n);

  std::vector<double> sq(rep.n);
  for (std::size_t i = 0; i < rep.n; ++i)
    sq[i] = (readings[i] - rep.mean) * (readings[i] - rep.mean);
  double var =
      rep.n > 1 ? detail::pairwise_sum(sq) / static_cast<double>(rep.n - 1) : 0.0;
  rep.std_error = std::sqrt(var / static_cast<double>(rep.n));

  double lo = readings[0], hi = readings[0];
  for (double x : readings) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  double span = hi - lo;
  double pad = span > 0.0 ? 0.01 * span : 0.01 * std::max(1.0, std::abs(lo));
  lo -= pad;
  hi += pad;

  rep.histogram.bin_edges.resize(bins + 1);
  double w = (hi - lo) / bins;
  for (int b = 0; b <= bins; ++b) rep.histogram.bin_edges[b] = lo + b * w;
  rep.histogram.counts.assign(bins, 0);
  for (double x : readings) {
    int b = static_cast<int>((x - lo) / w);
    b = std::min(std::max(b, 0), bins - 1);
    ++rep.histogram.counts[b];
  }
  return rep;
}

// n independent draws from `experiment`, one derived stream per sample
// (stream_id = sample index), so the result is identical for any thread
// count or scheduling.
template <typename Sampler>
EnsembleReport run_ensemble(Sampler&& experiment, std::size_t n, std::uint64_t seed,
                            int bins = 32, int threads = 1) {
  if (n == 0) throw EmptyInput("ensemble size must be positive");
  std::vector<double> readings(n);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RngStream stream(seed, i);
      readings[i] = experiment(stream);
    }
  });
  EnsembleReport rep = summarize(readings, bins);
  rep.seed = seed;
  return rep;
}

// Same, retaining the raw readings (for CSV export).
template <typename Sampler>
std::pair<EnsembleReport, std::vector<double>> run_ensemble_readings(
    Sampler&& experiment, std::size_t n, std::uint64_t seed, int bins = 32,
    int threads = 1) {
  if (n == 0) throw EmptyInput("ensemble size must be positive");
  std::vector<double> readings(n);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RngStream stream(seed, i);
      readings[i] = experiment(stream);
    }
  });
  EnsembleReport rep = summarize(readings, bins);
  rep.seed = seed;
  return {rep, std::move(readings)};
}

// Per-sample rows followed by one summary row.
inline void write_readings_csv(const std::vector<double>& readings,
                               const std::vector<bool>& success, std::ostream& os,
                               const EnsembleReport* summary = nullptr) {
  csv::row(os, {"sample_index", "reading", "success_flag"});
  for (std::size_t i = 0; i < readings.size(); ++i) {
    bool ok = success.empty() || success[i];
    csv::row(os, {std::to_string(i), csv::num(readings[i]), ok ? "1" : "0"});
  }
  if (summary)
    csv::row(os, {"summary", csv::num(summary->mean), csv::num(summary->std_error)});
}

inline void write_histogram_csv(const Histogram& h, std::ostream& os) {
  csv::row(os, {"bin_left", "bin_right", "count"});
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    csv::row(os, {csv::num(h.bin_edges[b]), csv::num(h.bin_edges[b + 1]),
                  std::to_string(h.counts[b])});
}

}  // namespace wv
