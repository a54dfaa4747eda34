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
#include "trackvel/types.hpp"

namespace trackvel::io {

// tracks.csv: header `track_id,t,u,v`
struct TrackFileRecord {
  std::int64_t track_id = 0;
  double t = 0;
  double u = 0;
  double v = 0;
};

// imu.csv: header `t,wx,wy,wz[,ax,ay,az]`
struct ImuFileRecord {
  double t = 0;
  Vec3d omega = Vec3d::Zero();
  std::optional<Vec3d> accel;
};

/// 17 significant digits; parses back to the same double.
std::string format_double(double x);

std::vector<TrackFileRecord> read_tracks_csv(std::istream& in);
std::vector<ImuFileRecord> read_imu_csv(std::istream& in);

/// Groups records by track id (ascending) with each track sorted by time.
std::vector<Track<double>> group_tracks(std::span<const TrackFileRecord> records);

void write_tracks_csv(std::ostream& out, std::span<const Track<double>> tracks);
void write_imu_csv(std::ostream& out, std::span<const ImuFileRecord> samples);

/// key=value lines with keys fx, fy, cx, cy, width, height; '#' comments.
CameraIntrinsics<double> read_intrinsics(std::istream& in);

struct ImuAverage {
  Vec3d omega = Vec3d::Zero();
  std::optional<Vec3d> accel;
  int samples = 0;
};

/// Mean of the samples with t in [t0, t1]; the nearest sample when none fall
/// inside. Running mean, so identical samples average to themselves exactly.
ImuAverage average_imu(std::span<const ImuFileRecord> samples, double t0, double t1);

}  // namespace trackvel::io
