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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "trackvel/error.hpp"
#include "trackvel/types.hpp"

namespace trackvel {

/// Pinhole intrinsics, no distortion.
template <typename Scalar = double>
struct CameraIntrinsics {
  Scalar fx = 320;
  Scalar fy = 320;
  Scalar cx = 320;
  Scalar cy = 240;
  int width = 640;
  int height = 480;

  void validate() const {
    if (!(fx > 0) || !(fy > 0)) {
      throw Error(ErrorCode::kInvalidInput, "focal lengths must be positive");
    }
    if (width <= 0 || height <= 0) {
      throw Error(ErrorCode::kInvalidInput, "sensor size must be positive");
    }
    if (!(cx >= 0 && cx < width && cy >= 0 && cy < height)) {
      throw Error(ErrorCode::kInvalidInput, "principal point outside the sensor");
    }
  }

  /// Pixel coordinates of a camera-frame point (divides by z).
  Vec2<Scalar> project(const Vec3<Scalar>& p) const {
    return Vec2<Scalar>(fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy);
  }

  bool contains(const Vec2<Scalar>& x) const {
    return x.x() >= 0 && x.x() < width && x.y() >= 0 && x.y() < height;
  }
};

template <typename Scalar = double>
struct TrackObservation {
  Vec2<Scalar> x;  // pixels
  Scalar t = 0;    // seconds, absolute
};

template <typename Scalar = double>
struct Track {
  std::int64_t id = 0;
  std::vector<TrackObservation<Scalar>> observations;
};

/// Rotation-compensated unit bearing with its time relative to the
/// reference time of the window.
template <typename Scalar = double>
struct BearingObservation {
  Vec3<Scalar> f;
  Scalar t = 0;
};

template <typename Scalar = double>
struct BearingTrack {
  std::int64_t id = 0;
  std::vector<BearingObservation<Scalar>> bearings;
};

/// Constant angular rate over the window, rad/s.
template <typename Scalar = double>
struct AngularRate {
  Vec3<Scalar> omega = Vec3<Scalar>::Zero();
};

template <typename Scalar = double>
struct GlobalShutter {
  Scalar exposure_offset = 0;  // frame time to exposure midpoint
};

template <typename Scalar = double>
struct RollingShutter {
  Scalar scan_time = 0;  // seconds for a full-frame readout
  int sign = +1;         // +1: rows are read after the frame time
};

struct Asynchronous {};

template <typename Scalar = double>
using TimestampModel = std::variant<GlobalShutter<Scalar>, RollingShutter<Scalar>, Asynchronous>;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// [w]x
template <typename Derived>
Mat3<typename Derived::Scalar> skew(const Eigen::MatrixBase<Derived>& w) {
  using Scalar = typename Derived::Scalar;
  Mat3<Scalar> m;
  m << Scalar(0), -w(2), w(1),
       w(2), Scalar(0), -w(0),
       -w(1), w(0), Scalar(0);
  return m;
}

/// normalize(K^-1 [x; 1])
template <typename Scalar>
Vec3<Scalar> pixel_to_bearing(const Vec2<Scalar>& x, const CameraIntrinsics<Scalar>& K) {
  if (!x.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "non-finite pixel coordinates");
  }
  return Vec3<Scalar>((x.x() - K.cx) / K.fx, (x.y() - K.cy) / K.fy, Scalar(1)).normalized();
}

/// exp([w]x) by the Rodrigues formula; second-order series near zero.
template <typename Derived>
Mat3<typename Derived::Scalar> so3_exp(const Eigen::MatrixBase<Derived>& w) {
  using Scalar = typename Derived::Scalar;
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Scalar theta2 = w.squaredNorm();
  const Mat3<Scalar> W = skew(w);
  const Mat3<Scalar> W2 = W * W;
  if (theta2 < Scalar(1e-16)) {
    return Mat3<Scalar>::Identity() + W + Scalar(0.5) * W2;
  }
  const Scalar theta = sqrt(theta2);
  return Mat3<Scalar>::Identity() + (sin(theta) / theta) * W +
         ((Scalar(1) - cos(theta)) / theta2) * W2;
}

/// Rotation vector of the order-S angular expansion, sum_s w_s t^s / s!.
template <typename Scalar>
Vec3<Scalar> rotation_vector(std::span<const Vec3<Scalar>> omegas, Scalar t) {
  Vec3<Scalar> r = Vec3<Scalar>::Zero();
  Scalar power = 1;
  for (std::size_t s = 0; s < omegas.size(); ++s) {
    power *= t;
    r += omegas[s] * (power * Scalar(kInvFactorial[s + 1]));
  }
  return r;
}

/// f'_j = exp([sum_s w_s t'^s/s!]x) normalize(K^-1 x_j), t'_j = t_j - t_s.
template <typename Scalar>
std::vector<BearingObservation<Scalar>> compensate(const Track<Scalar>& track,
                                                   std::span<const Vec3<Scalar>> omegas,
                                                   Scalar t_s, const CameraIntrinsics<Scalar>& K) {
  if (track.observations.size() < 2) {
    throw Error(ErrorCode::kDegenerateTrack,
                "track " + std::to_string(track.id) + " has fewer than two observations");
  }
  std::vector<BearingObservation<Scalar>> out;
  out.reserve(track.observations.size());
  for (const auto& obs : track.observations) {
    const Scalar t_rel = obs.t - t_s;
    const Vec3<Scalar> f = pixel_to_bearing(obs.x, K);
    out.push_back({so3_exp(rotation_vector(omegas, t_rel)) * f, t_rel});
  }
  return out;
}

template <typename Scalar>
std::vector<BearingObservation<Scalar>> compensate(const Track<Scalar>& track,
                                                   const AngularRate<Scalar>& omega, Scalar t_s,
                                                   const CameraIntrinsics<Scalar>& K) {
  return compensate(track, std::span<const Vec3<Scalar>>(&omega.omega, 1), t_s, K);
}

/// Capture time of a pixel under the given sensor timestamp model.
template <typename Scalar>
Scalar assign_timestamp(const TimestampModel<Scalar>& model, Scalar frame_time,
                        const Vec2<Scalar>& x, int height) {
  return std::visit(
      [&](const auto& m) -> Scalar {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, GlobalShutter<Scalar>>) {
          return frame_time + m.exposure_offset;
        } else if constexpr (std::is_same_v<M, RollingShutter<Scalar>>) {
          if (!(m.scan_time > 0)) {
            throw Error(ErrorCode::kInvalidInput, "rolling shutter scan time must be positive");
          }
          if (height < 2 || !(x.y() >= 0 && x.y() < height)) {
            throw Error(ErrorCode::kInvalidInput, "row index outside the sensor");
          }
          return frame_time + Scalar(m.sign) * (x.y() / Scalar(height - 1)) * m.scan_time;
        } else {
          return frame_time;
        }
      },
      model);
}

/// Midpoint of the earliest and latest observation time.
template <typename Scalar>
Scalar reference_time(std::span<const Track<Scalar>> tracks) {
  Scalar lo = std::numeric_limits<Scalar>::infinity();
  Scalar hi = -lo;
  for (const auto& tr : tracks) {
    for (const auto& o : tr.observations) {
      lo = std::min(lo, o.t);
      hi = std::max(hi, o.t);
    }
  }
  if (!(lo <= hi)) {
    throw Error(ErrorCode::kInsufficientData, "no observations");
  }
  return lo + (hi - lo) / Scalar(2);
}

}  // namespace trackvel
