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
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trackvel/geometry.hpp"
#include "trackvel/random.hpp"
#include "trackvel/solver.hpp"
#include "trackvel/types.hpp"

namespace trackvel {

struct RansacConfig {
  int max_iterations = 200;
  int sample_tracks = 4;          // tracks per hypothesis
  int sample_obs_per_track = 5;   // temporally spread observations per track
  double inlier_threshold_deg = 5.0;
  double early_stop_inlier_ratio = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Ranking key of a hypothesis: more inliers, then lower mean inlier
/// residual, then earlier iteration.
struct HypothesisScore {
  int inliers = 0;
  double mean_inlier_residual_deg = 0;
  int iteration = 0;
};

bool better_hypothesis(const HypothesisScore& a, const HypothesisScore& b);

struct RansacResult {
  MotionEstimate<double> estimate;    // refit on the inlier tracks
  MotionEstimate<double> hypothesis;  // best sampled hypothesis
  std::vector<std::int64_t> inlier_ids;
  double inlier_ratio = 0;
  int iterations_run = 0;
  HypothesisScore best;
};

struct TrackScores {
  std::vector<double> residuals_deg;  // per candidate track
  std::vector<std::int64_t> inlier_ids;
  double mean_inlier_residual_deg = 0;
};

/// Mean angle between each observed bearing and the prediction
/// P - sum_s v^(s) t'^s / s!. Returns 180 when a prediction has zero norm.
double track_residual(std::span<const BearingObservation<double>> bearings, const Vec3d& point,
                      std::span<const Vec3d> rates);

/// Residual of every candidate track under the given rates, with each point
/// triangulated from the full track.
TrackScores score_tracks(std::span<const BearingTrack<double>> tracks,
                         std::span<const TrackBlocks<double>> blocks, std::span<const Vec3d> rates,
                         double threshold_deg, double eps_rank = kDefaultRankEps);

/// Picks sample_tracks distinct tracks uniformly, then sample_obs_per_track
/// observations per track stratified over its time span, endpoints included.
std::vector<BearingTrack<double>> sample_hypothesis(std::span<const BearingTrack<double>> tracks,
                                                    const RansacConfig& config, Rng& rng);

RansacResult ransac(const PreparedWindow<double>& window, const RansacConfig& config,
                    const SolverOptions<double>& options = {});

RansacResult ransac(std::span<const Track<double>> tracks, const AngularRate<double>& omega,
                    const CameraIntrinsics<double>& K, const TimestampModel<double>& model,
                    const RansacConfig& config, const SolverOptions<double>& options = {});

}  // namespace trackvel
