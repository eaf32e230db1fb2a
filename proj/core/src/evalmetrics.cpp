#include "kftam/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "kftam/errors.hpp"

namespace kftam {

namespace {

// Calls f(d, d_gt) for every jointly valid pixel and returns their count.
template <typename F>
std::size_t for_each_pair(const DepthMap& d, const DepthMap& d_gt, F&& f) {
  if (d.width() != d_gt.width() || d.height() != d_gt.height()) {
    raise(ErrorKind::kInvalidArgument, "depth maps differ in size");
  }
  std::size_t n = 0;
  for (int y = 0; y < d.height(); ++y) {
    for (int x = 0; x < d.width(); ++x) {
      if (!d.valid(x, y) || !d_gt.valid(x, y)) continue;
      const double a = d.at(x, y);
      const double b = d_gt.at(x, y);
      if (!(a > 0.0) || !(b > 0.0)) raise(ErrorKind::kNonPositiveDepth, "depth must be positive");
      f(a, b);
      ++n;
    }
  }
  if (n == 0) raise(ErrorKind::kNoValidPixels, "depth maps share no valid pixel");
  return n;
}

}  // namespace

double sc_inv(const DepthMap& d, const DepthMap& d_gt) {
  std::vector<double> e;
  for_each_pair(d, d_gt, [&](double a, double b) { e.push_back(std::log(a) - std::log(b)); });
  const double n = static_cast<double>(e.size());
  const double mean = std::accumulate(e.begin(), e.end(), 0.0) / n;
  // Centred second pass; the one-pass form cancels badly for near-constant e.
  double sum_sq = 0.0;
  for (double v : e) sum_sq += (v - mean) * (v - mean);
  return std::sqrt(sum_sq / n);
}

double l1_rel(const DepthMap& d, const DepthMap& d_gt) {
  double sum = 0.0;
  const auto n = for_each_pair(d, d_gt, [&](double a, double b) { sum += std::abs(a - b) / b; });
  return sum / static_cast<double>(n);
}

double l1_inv(const DepthMap& d, const DepthMap& d_gt) {
  double sum = 0.0;
  const auto n = for_each_pair(d, d_gt, [&](double a, double b) { sum += std::abs(1.0 / a - 1.0 / b); });
  return sum / static_cast<double>(n);
}

namespace {

// Index of the timestamp in sorted `ts` nearest to t.
std::size_t nearest(const std::vector<double>& ts, double t) {
  const auto it = std::lower_bound(ts.begin(), ts.end(), t);
  if (it == ts.begin()) return 0;
  if (it == ts.end()) return ts.size() - 1;
  const auto i = static_cast<std::size_t>(it - ts.begin());
  return (ts[i] - t) < (t - ts[i - 1]) ? i : i - 1;
}

}  // namespace

double translational_rpe_rmse(const Trajectory& estimate, const Trajectory& ground_truth, double interval) {
  if (!(interval > 0.0)) raise(ErrorKind::kInvalidArgument, "RPE interval must be positive");
  Trajectory gt = ground_truth;
  std::stable_sort(gt.begin(), gt.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  std::vector<double> gt_times;
  for (const auto& r : gt) gt_times.push_back(r.timestamp);

  struct Associated {
    double t;
    Pose est;
    Pose gt;
  };
  std::vector<Associated> pairs;
  for (const auto& r : estimate) {
    if (gt_times.empty()) break;
    const std::size_t j = nearest(gt_times, r.timestamp);
    if (std::abs(gt_times[j] - r.timestamp) <= kMaxAssociationGap) pairs.push_back({r.timestamp, r.pose(), gt[j].pose()});
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  if (pairs.size() < 2) raise(ErrorKind::kInsufficientOverlapInTime, "fewer than two associated frames");

  std::vector<double> times;
  for (const auto& p : pairs) times.push_back(p.t);
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double target = pairs[i].t + interval;
    const std::size_t j = nearest(times, target);
    if (j <= i || std::abs(times[j] - target) > kMaxAssociationGap) continue;
    const Pose rel_gt = pairs[i].gt.inverse() * pairs[j].gt;
    const Pose rel_est = pairs[i].est.inverse() * pairs[j].est;
    const Pose err = rel_gt.inverse() * rel_est;
    sum_sq += err.translation().squaredNorm();
    ++count;
  }
  if (count == 0) raise(ErrorKind::kInsufficientOverlapInTime, "no frame pair spans the interval");
  return std::sqrt(sum_sq / static_cast<double>(count)) / interval;
}

}  // namespace kftam
