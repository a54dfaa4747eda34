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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trackvel/geometry.hpp"
#include "trackvel/random.hpp"
#include "trackvel/robust.hpp"
#include "trackvel/solver.hpp"
#include "trackvel/types.hpp"

namespace trackvel::sim {

enum class Sensor { kAsynchronous, kGlobalShutter, kRollingShutter };
enum class JitterDistribution { kGaussian, kUniform };
enum class SolveMethod { kDirect, kRansac, kKnownAccel };

struct NoiseConfig {
  double pixel_sigma = 0;       // px, per axis
  double timestamp_jitter = 0;  // s; sigma (Gaussian) or half-width (uniform)
  JitterDistribution jitter_distribution = JitterDistribution::kGaussian;
  double omega_noise_deg = 0;   // deg/s, expected norm of the rate offset
};

struct SimConfig {
  std::string preset = "moderate";
  CameraIntrinsics<double> camera{320, 320, 320, 240, 640, 480};
  double speed = 1.0;            // m/s
  double accel_magnitude = 0.0;  // m/s^2, zero for constant velocity
  double angular_speed_deg = 10.0;
  double cube_size = 1.0;        // m
  double cube_depth = 2.0;       // m, cube center along the optical axis
  double window = 0.2;           // s
  double start_time = 0.0;
  int num_tracks = 20;
  int obs_per_track = 20;
  int trials = 1000;
  NoiseConfig noise;

  Sensor sensor = Sensor::kAsynchronous;
  double rs_scan_time = 0.02;   // s, rolling shutter readout
  bool rs_correct = true;       // solve with the row-time correction

  int solver_order = 1;
  SolveMethod method = SolveMethod::kDirect;
  RansacConfig ransac;

  int outlier_tracks = 0;
  double outlier_angle_deg = 45.0;

  std::optional<Vec3d> velocity;  // forced ground truth
  std::optional<Vec3d> accel;
  std::optional<Vec3d> omega;

  std::uint64_t seed = 0;

  void validate() const;
  /// FNV-1a over the canonical field list, hex.
  std::string hash() const;
};

/// sparse (5-5), moderate (20-20), dense (100-50)
SimConfig make_preset(const std::string& name);

struct Scene {
  Vec3d velocity;
  Vec3d accel;
  Vec3d omega;  // true angular rate
  double reference_time = 0;
  std::vector<Vec3d> points;  // reference camera frame
  std::vector<Track<double>> tracks;
  std::vector<std::int64_t> outlier_ids;
};

struct NoisyData {
  std::vector<Track<double>> tracks;
  Vec3d omega;  // rate handed to the solver
};

/// Camera pose at absolute time t: returns the point in the camera frame.
Vec3d camera_point(const Scene& scene, const Vec3d& point, double t);

Scene generate_scene(const SimConfig& config, Rng& rng);

NoisyData add_noise(const Scene& scene, const SimConfig& config, Rng& rng);

/// Angle between two nonzero vectors in degrees, in [0, 180].
double velocity_error(const Vec3d& estimate, const Vec3d& truth);

TimestampModel<double> solver_timestamp_model(const SimConfig& config);

struct Summary {
  double mean = 0;
  double median = 0;
  double p10 = 0;
  double p25 = 0;
  double p75 = 0;
  double p90 = 0;
};

Summary summarize(std::vector<double> values);

struct TrialStats {
  int trials = 0;
  int failures = 0;
  std::vector<double> errors_deg;        // successful trials only
  std::vector<double> accel_errors_deg;  // order-2 solves on accelerating scenes
  std::vector<double> inlier_ratios;     // RANSAC trials
  std::vector<double> outlier_rejection; // fraction of injected outliers not in the inlier set
  Summary velocity;
  std::optional<Summary> acceleration;
};

struct TrialOutcome {
  bool ok = false;
  double error_deg = 0;
  std::optional<double> accel_error_deg;
  std::optional<double> inlier_ratio;
  std::optional<double> outlier_rejection;
  MotionEstimate<double> estimate;
};

TrialOutcome run_trial(const SimConfig& config, std::uint64_t trial_index);

TrialStats run_trials(const SimConfig& config);

std::string csv_header();
std::string csv_row(const SimConfig& config, const TrialStats& stats);

}  // namespace trackvel::sim
