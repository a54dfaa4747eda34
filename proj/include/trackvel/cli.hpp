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

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trackvel/geometry.hpp"
#include "trackvel/io.hpp"
#include "trackvel/robust.hpp"
#include "trackvel/solver.hpp"

namespace trackvel::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitExperiment = 3,
  kExitNoSolution = 4,
};

struct WindowOptions {
  double window = 0.2;
  double stride = 0.1;
  double min_track_length_px = 10.0;  // endpoint displacement inside the window
  TimestampModel<double> model = Asynchronous{};
  bool use_ransac = false;
  RansacConfig ransac;
  bool use_accel = false;
  SolverOptions<double> solver;
};

struct WindowResult {
  double start = 0;
  double end = 0;
  MotionEstimate<double> estimate;
  std::optional<double> inlier_ratio;
  std::vector<std::int64_t> inlier_ids;
};

/// Fixed-duration sliding windows over the track set; the angular rate (and
/// acceleration) of each window is the mean of the IMU samples inside it.
/// Windows that cannot be solved are skipped and reported through `skipped`.
std::vector<WindowResult> solve_windows(std::span<const Track<double>> tracks,
                                        std::span<const io::ImuFileRecord> imu,
                                        const CameraIntrinsics<double>& K, const WindowOptions& options,
                                        std::vector<std::string>* skipped = nullptr);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trackvel::cli
