#pragma once

#include <span>
#include <string>
#include <vector>

#include "shortvid/domain.hpp"

namespace shortvid {

/// Discrete swipe distribution of one video over chunk indices.
/// mass[j-1] is the probability the viewing ends after exactly j chunks;
/// completion is folded into the last entry.
struct SwipePmf {
  int video_index = 1;
  std::vector<double> mass;

  int num_chunks() const { return static_cast<int>(mass.size()); }
  /// p_ij, zero outside 1..N.
  double at(int j) const;
  /// Probability that chunk j is reached: sum of mass[j..N].
  double survival(int j) const;
  double total() const;
  /// Mass indexed by chunks watched (index 0 holds zero), ready for convolve().
  std::vector<double> by_count() const;
};

/// Continuous viewing-time density of one video on a uniform grid
/// t_k = k * grid_step_s, k = 0..K.
struct SwipePdf {
  int video_index = 1;
  double grid_step_s = 0.1;
  std::vector<double> density;

  double extent_s() const;
  /// Trapezoidal integral over the whole grid.
  double integral() const;
  /// Integral from 0 to t of the piecewise-linear interpolant.
  double cdf(double t) const;
  double mean() const;
  /// Trapezoid weights times density: the node-mass form used by convolution.
  std::vector<double> node_masses() const;
};

/// Distribution of D_ij, the number of chunks played before `target`.
/// For non-first chunks the total is the reach probability, not 1.
struct WatchCountDistribution {
  ChunkId target;
  std::vector<double> mass;  // indexed by n

  double total() const;
  double at(int n) const;
};

/// Distribution of the play-start time of `target` as masses on grid nodes
/// t_k = k * grid_step_s. Point masses are single nodes, so the first video's
/// delta at t = 0 is exact.
struct PlayStartPdf {
  ChunkId target;
  double grid_step_s = 0.1;
  std::vector<double> mass;
  double reach_probability = 1.0;

  double total() const;
};

// Histogram of observed viewing times into chunk buckets: a sample at time t
// falls in chunk ceil(t / T), with t = 0 counted as chunk 1.
SwipePmf pmf_from_samples(std::span<const double> swipe_times_s, const VideoSpec& video, int video_index = 1);

/// Direct-sum discrete convolution: out[n] = sum_i a[i] * b[n - i].
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);

/// P_{D_i1}: the (i-1)-fold convolution of the preceding videos' swipe PMFs.
/// pmfs[0] belongs to video 1.
WatchCountDistribution first_chunk_dist(int i, std::span<const SwipePmf> pmfs);

/// P_{D_ij} for j >= 2: `first` delayed by j-1 chunks and scaled by the
/// probability of watching past chunk j-1 of the same video.
WatchCountDistribution nonfirst_chunk_dist(const WatchCountDistribution& first, const SwipePmf& pmf_i, int j);

/// Play-start distribution of c_i1 by grid convolution of the preceding
/// videos' viewing-time densities.
PlayStartPdf play_start_pdf_first(int i, std::span<const SwipePdf> pdfs);

/// Play-start distribution of c_ij (j >= 2): shifted by (j-1)*T and scaled
/// by the survival integral of the video's own density.
PlayStartPdf play_start_pdf_nonfirst(const PlayStartPdf& first, const SwipePdf& pdf_i, int j,
                                     double chunk_duration_s);

/// Chunk masses implied by a density (exact integral of its interpolant).
SwipePmf pmf_from_pdf(const SwipePdf& pdf, const VideoSpec& video);

/// Piecewise-uniform density reproducing a PMF, sampled on a grid.
SwipePdf pdf_from_pmf(const SwipePmf& pmf, const VideoSpec& video, double grid_step_s = 0.1);

/// Mean viewing seconds of a PMF, reading each chunk as uniform over its span.
double pmf_mean_view_s(const SwipePmf& pmf, const VideoSpec& video);

/// Mean of an exponential with rate `rate` truncated to [0, duration]. Negative
/// rates give increasing densities; rate 0 is uniform. An infinite duration
/// gives the untruncated mean 1 / rate.
double truncated_exponential_mean(double rate, double duration_s);

/// Inverse of truncated_exponential_mean by bisection.
double fit_exponential_rate(double mean_s, double duration_s);

/// CDF of the truncated exponential on [0, duration].
double truncated_exponential_cdf(double rate, double duration_s, double t);

/// Swipe-error injection: fit a truncated exponential to the PMF's mean,
/// move the rate so the mean becomes factor * mean, and rebin to chunks.
SwipePmf perturb_exponential(const SwipePmf& pmf, double factor, const VideoSpec& video);

/// Same perturbation applied to a density on its own grid.
SwipePdf perturb_exponential(const SwipePdf& pdf, double factor);

/// Canonical per-video swipe distribution, keyed by video id.
struct SwipeDistribution {
  std::string video_id;
  SwipePdf pdf;
};

}  // namespace shortvid
