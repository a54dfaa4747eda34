/******************************************************************************
 * Copyright 2026 The trackvel Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/
#include "trackvel/robust.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "trackvel/error.hpp"
#include "trackvel/linsys.hpp"

namespace trackvel {

namespace {

constexpr double kRadToDeg = 180.0 / M_PI;

double angle_deg(const Vec3d& a, const Vec3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b)) * kRadToDeg;
}

}  // namespace

void RansacConfig::validate() const {
  if (max_iterations < 1 || sample_tracks < 1 || sample_obs_per_track < 2 ||
      !(inlier_threshold_deg > 0) || !(early_stop_inlier_ratio > 0 && early_stop_inlier_ratio <= 1)) {
    throw Error(ErrorCode::kInvalidInput, "invalid RANSAC configuration");
  }
}

bool better_hypothesis(const HypothesisScore& a, const HypothesisScore& b) {
  if (a.inliers != b.inliers) return a.inliers > b.inliers;
  if (a.mean_inlier_residual_deg != b.mean_inlier_residual_deg) {
    return a.mean_inlier_residual_deg < b.mean_inlier_residual_deg;
  }
  return a.iteration < b.iteration;
}

double track_residual(std::span<const BearingObservation<double>> bearings, const Vec3d& point,
                      std::span<const Vec3d> rates) {
  if (bearings.empty()) throw Error(ErrorCode::kInvalidInput, "empty track");
  double sum = 0;
  for (const auto& b : bearings) {
    Vec3d predicted = point;
    double power = 1;
    for (std::size_t s = 0; s < rates.size(); ++s) {
      power *= b.t;
      predicted -= rates[s] * (power * kInvFactorial[s + 1]);
    }
    if (predicted.squaredNorm() == 0) return 180.0;
    sum += angle_deg(b.f, predicted);
  }
  return sum / static_cast<double>(bearings.size());
}

TrackScores score_tracks(std::span<const BearingTrack<double>> tracks,
                         std::span<const TrackBlocks<double>> blocks, std::span<const Vec3d> rates,
                         double threshold_deg, double eps_rank) {
  VecXd v(3 * rates.size());
  for (std::size_t s = 0; s < rates.size(); ++s) v.segment<3>(3 * s) = rates[s];

  TrackScores scores;
  scores.residuals_deg.resize(tracks.size(), 180.0);
  double sum = 0;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (!rank_check_F(blocks[i], eps_rank).pass) continue;
    const Vec3d point = solve_points(blocks[i], v, eps_rank);
    const double r = track_residual(tracks[i].bearings, point, rates);
    scores.residuals_deg[i] = r;
    if (r < threshold_deg) {
      scores.inlier_ids.push_back(tracks[i].id);
      sum += r;
    }
  }
  if (!scores.inlier_ids.empty()) {
    scores.mean_inlier_residual_deg = sum / static_cast<double>(scores.inlier_ids.size());
  }
  return scores;
}

std::vector<BearingTrack<double>> sample_hypothesis(std::span<const BearingTrack<double>> tracks,
                                                    const RansacConfig& config, Rng& rng) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (tracks[i].bearings.size() >= 2) eligible.push_back(i);
  }
  const auto want = static_cast<std::size_t>(config.sample_tracks);
  if (eligible.size() < want) {
    throw Error(ErrorCode::kInsufficientData, std::to_string(eligible.size()) +
                                                  " eligible tracks, need " + std::to_string(want));
  }
  // Partial Fisher-Yates.
  for (std::size_t k = 0; k < want; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, eligible.size() - 1);
    std::swap(eligible[k], eligible[pick(rng)]);
  }

  const auto n = static_cast<std::size_t>(config.sample_obs_per_track);
  std::vector<BearingTrack<double>> sample;
  sample.reserve(want);
  for (std::size_t k = 0; k < want; ++k) {
    const auto& src = tracks[eligible[k]];
    const std::size_t count = src.bearings.size();
    if (count <= n) {
      sample.push_back(src);
      continue;
    }
    std::vector<bool> taken(count, false);
    taken.front() = taken.back() = true;
    const double t0 = src.bearings.front().t;
    const double span = src.bearings.back().t - t0;
    const std::size_t strata = n - 2;
    for (std::size_t s = 0; s < strata; ++s) {
      std::uniform_real_distribution<double> within(t0 + span * static_cast<double>(s) / strata,
                                                    t0 + span * static_cast<double>(s + 1) / strata);
      const double target = within(rng);
      std::size_t best = 0;
      double best_gap = std::numeric_limits<double>::infinity();
      for (std::size_t j = 1; j + 1 < count; ++j) {
        if (taken[j]) continue;
        const double gap = std::abs(src.bearings[j].t - target);
        if (gap < best_gap) {
          best_gap = gap;
          best = j;
        }
      }
      taken[best] = true;
    }
    BearingTrack<double> sub{src.id, {}};
    sub.bearings.reserve(n);
    for (std::size_t j = 0; j < count; ++j) {
      if (taken[j]) sub.bearings.push_back(src.bearings[j]);
    }
    sample.push_back(std::move(sub));
  }
  return sample;
}

RansacResult ransac(const PreparedWindow<double>& window, const RansacConfig& config,
                    const SolverOptions<double>& options) {
  config.validate();
  const auto& tracks = window.tracks;
  if (tracks.size() < static_cast<std::size_t>(config.sample_tracks)) {
    throw Error(ErrorCode::kInsufficientData, "fewer tracks than the RANSAC sample size");
  }
  std::vector<TrackBlocks<double>> blocks;
  blocks.reserve(tracks.size());
  for (const auto& tr : tracks) blocks.push_back(track_blocks(tr, 1));

  RansacResult result;
  bool have_best = false;
  std::vector<std::int64_t> best_inliers;
  int it = 0;
  while (it < config.max_iterations) {
    Rng rng = make_stream(config.seed, static_cast<std::uint64_t>(it));
    const int iteration = it++;
    const auto sample = sample_hypothesis(tracks, config, rng);
    MotionEstimate<double> hyp;
    try {
      hyp = solve_bearing_tracks(std::span<const BearingTrack<double>>(sample), 1, options);
    } catch (const Error&) {
      continue;
    }
    if (hyp.degenerate) continue;

    auto scores = score_tracks(tracks, blocks, hyp.rates, config.inlier_threshold_deg, options.eps_rank);
    const HypothesisScore score{static_cast<int>(scores.inlier_ids.size()),
                                scores.mean_inlier_residual_deg, iteration};
    if (!have_best || better_hypothesis(score, result.best)) {
      have_best = true;
      result.best = score;
      result.hypothesis = std::move(hyp);
      best_inliers = std::move(scores.inlier_ids);
      const double ratio = static_cast<double>(best_inliers.size()) / static_cast<double>(tracks.size());
      if (ratio >= config.early_stop_inlier_ratio) break;
    }
  }
  result.iterations_run = it;
  if (!have_best || best_inliers.empty()) {
    throw Error(ErrorCode::kNoSolution, "no hypothesis produced any inlier");
  }

  std::vector<BearingTrack<double>> inlier_tracks;
  for (const auto& tr : tracks) {
    if (std::find(best_inliers.begin(), best_inliers.end(), tr.id) != best_inliers.end()) {
      inlier_tracks.push_back(tr);
    }
  }
  result.estimate = solve_bearing_tracks(std::span<const BearingTrack<double>>(inlier_tracks), 1, options);
  result.estimate.reference_time = window.reference_time;
  result.hypothesis.reference_time = window.reference_time;
  result.inlier_ids = std::move(best_inliers);
  result.inlier_ratio = static_cast<double>(result.inlier_ids.size()) / static_cast<double>(tracks.size());
  return result;
}

RansacResult ransac(std::span<const Track<double>> tracks, const AngularRate<double>& omega,
                    const CameraIntrinsics<double>& K, const TimestampModel<double>& model,
                    const RansacConfig& config, const SolverOptions<double>& options) {
  const auto window = prepare_window(tracks, std::span<const Vec3d>(&omega.omega, 1), K, model, options);
  return ransac(window, config, options);
}

}  // namespace trackvel
