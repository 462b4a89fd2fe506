#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace shortvid {

/// Piecewise-constant throughput. Segment k holds its rate from start_s
/// until the next segment starts; the whole trace repeats with period_s.
class NetworkTrace {
 public:
  struct Segment {
    double start_s = 0.0;
    double mbps = 0.0;
  };

  NetworkTrace() : NetworkTrace({{0.0, 1.0}}) {}
  /// Segments must start at 0, ascend strictly and carry positive rates.
  /// The period is the last start plus the preceding segment's width; a
  /// single segment is a constant trace.
  explicit NetworkTrace(std::vector<Segment> segments, double rtt_s = 0.006);

  static NetworkTrace constant(double mbps, double rtt_s = 0.006);

  const std::vector<Segment>& segments() const { return segments_; }
  double rtt_s() const { return rtt_s_; }
  void set_rtt_s(double rtt_s) { rtt_s_ = rtt_s; }
  double period_s() const { return period_s_; }
  bool is_constant() const { return segments_.size() == 1; }

  double rate_at(double t_s) const;
  /// Megabits delivered over [0, t].
  double cumulative_megabits(double t_s) const;
  /// Smallest t with cumulative_megabits(t) = megabits.
  double time_at_megabits(double megabits) const;
  double megabits_between(double from_s, double to_s) const;
  double mean_mbps() const;

  /// A copy with every rate multiplied by `factor`.
  NetworkTrace scaled(double factor) const;

 private:
  std::vector<Segment> segments_;
  double rtt_s_ = 0.006;
  double period_s_ = std::numeric_limits<double>::infinity();
  // Megabits from phase 0 to the start of each segment, then one full period.
  std::vector<double> cumulative_;

  std::size_t segment_at(double phase_s) const;
};

/// Smallest t with the trace delivering bytes * 8 bits over [start + rtt, t].
double download_time(std::uint64_t bytes, const NetworkTrace& trace, double start_s);

}  // namespace shortvid
