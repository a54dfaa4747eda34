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
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracle.hpp"
#include "trackvel/geometry.hpp"

namespace trackvel {
namespace {

const CameraIntrinsics<double> kK{};

TEST(PixelToBearing, PrincipalPointIsOpticalAxis) {
  const Vec3d f = pixel_to_bearing(Vec2d(320, 240), kK);
  EXPECT_NEAR((f - Vec3d(0, 0, 1)).norm(), 0, 1e-15);
}

TEST(PixelToBearing, OneFocalLengthOffIs45Degrees) {
  const Vec3d f = pixel_to_bearing(Vec2d(320 + 320, 240), kK);
  EXPECT_NEAR((f - Vec3d(1, 0, 1) / std::sqrt(2.0)).norm(), 0, 1e-15);
}

TEST(PixelToBearing, MatchesDirectArithmetic) {
  const Vec3d expected = Vec3d(0.25, 0.1875, 1).normalized();
  EXPECT_NEAR((pixel_to_bearing(Vec2d(400, 300), kK) - expected).norm(), 0, 1e-15);
  EXPECT_NEAR(pixel_to_bearing(Vec2d(400, 300), kK).norm(), 1.0, 1e-12);
}

TEST(PixelToBearing, RejectsNonFinite) {
  try {
    pixel_to_bearing(Vec2d(std::nan(""), 1), kK);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
}

TEST(PixelToBearing, ProjectionRoundTrip) {
  Rng rng = make_stream(11, 0);
  std::uniform_real_distribution<double> ux(0, 640), uy(0, 480);
  const CameraIntrinsics<double> K{410.5, 395.25, 301.0, 250.5, 640, 480};
  for (int k = 0; k < 1000; ++k) {
    const Vec2d x(ux(rng), uy(rng));
    const Vec3d f = pixel_to_bearing(x, K);
    EXPECT_GT(f.z(), 0);
    EXPECT_LT((K.project(f) - x).norm(), 1e-9);
  }
}

TEST(So3Exp, ZeroIsIdentity) {
  EXPECT_EQ(so3_exp(Vec3d::Zero()), Mat3d::Identity());
}

TEST(So3Exp, QuarterTurnAboutZ) {
  const Mat3d R = so3_exp(Vec3d(0, 0, std::numbers::pi / 2));
  EXPECT_NEAR((R * Vec3d::UnitX() - Vec3d::UnitY()).norm(), 0, 1e-15);
}

TEST(So3Exp, MatchesAngleAxisOracle) {
  Rng rng = make_stream(12, 0);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 1000; ++k) {
    Vec3d w(u(rng), u(rng), u(rng));
    w *= 0.999 * std::numbers::pi * std::abs(u(rng)) / std::max(w.norm(), 1e-300);
    EXPECT_LT((so3_exp(w) - oracle::rotation(w)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(So3Exp, OrthonormalWithUnitDeterminant) {
  Rng rng = make_stream(13, 0);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 1000; ++k) {
    const double scale = (k % 4 == 0) ? 1e-9 : std::numbers::pi / std::sqrt(3.0);
    const Mat3d R = so3_exp(Vec3d(u(rng), u(rng), u(rng)) * scale);
    EXPECT_LT((R.transpose() * R - Mat3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(R.determinant(), 1.0, 1e-12);
  }
}

TEST(So3Exp, SmallAngleBranchIsContinuous) {
  const Vec3d axis = Vec3d(1, 2, 3).normalized();
  const Mat3d below = so3_exp(Vec3d(axis * 0.99e-8));
  const Mat3d above = so3_exp(Vec3d(axis * 1.01e-8));
  EXPECT_LT((below - oracle::rotation(axis * 0.99e-8)).cwiseAbs().maxCoeff(), 1e-16);
  EXPECT_LT((above - below).cwiseAbs().maxCoeff(), 1e-9);
}

Track<double> sample_track() {
  Track<double> tr{7, {}};
  tr.observations = {{Vec2d(100, 50), 0.0}, {Vec2d(110, 60), 0.05}, {Vec2d(640 - 1, 200), 0.1}};
  return tr;
}

TEST(Compensate, ZeroRateGivesRawBearings) {
  const auto tr = sample_track();
  const auto out = compensate(tr, AngularRate<double>{}, 0.05, kK);
  ASSERT_EQ(out.size(), tr.observations.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    EXPECT_EQ(out[j].f, pixel_to_bearing(tr.observations[j].x, kK));
    EXPECT_DOUBLE_EQ(out[j].t, tr.observations[j].t - 0.05);
  }
}

TEST(Compensate, ReferenceTimeObservationIsUnrotated) {
  const auto tr = sample_track();
  const auto out = compensate(tr, AngularRate<double>{Vec3d(0.3, -1.2, 2.0)}, 0.05, kK);
  EXPECT_EQ(out[1].f, pixel_to_bearing(tr.observations[1].x, kK));
  EXPECT_EQ(out[1].t, 0.0);
}

TEST(Compensate, QuarterTurnAfterOneSecond) {
  // (cx+fx, cy) is the bearing (1,0,1)/sqrt2; a quarter turn about z maps it to (0,1,1)/sqrt2.
  Track<double> tr{1, {{Vec2d(640, 240), 0.0}, {Vec2d(640, 240), 1.0}}};
  const auto out = compensate(tr, AngularRate<double>{Vec3d(0, 0, std::numbers::pi / 2)}, 0.0, kK);
  const Vec3d expected = oracle::rotation(Vec3d(0, 0, std::numbers::pi / 2)) * Vec3d(1, 0, 1).normalized();
  EXPECT_NEAR((out[1].f - expected).norm(), 0, 1e-15);
  EXPECT_NEAR((out[1].f - Vec3d(0, 1, 1).normalized()).norm(), 0, 1e-15);
}

TEST(Compensate, HigherOrderRatesUseTaylorRotationVector) {
  const auto tr = sample_track();
  const std::vector<Vec3d> omegas{Vec3d(0.1, 0.2, -0.3), Vec3d(1.0, -0.5, 0.25)};
  const auto out = compensate(tr, std::span<const Vec3d>(omegas), 0.0, kK);
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double t = tr.observations[j].t;
    const Vec3d r = omegas[0] * t + omegas[1] * (t * t / 2);
    const Vec3d expected = oracle::rotation(r) * pixel_to_bearing(tr.observations[j].x, kK);
    EXPECT_NEAR((out[j].f - expected).norm(), 0, 1e-14);
    EXPECT_NEAR(out[j].f.norm(), 1.0, 1e-12);
  }
}

TEST(Compensate, ShortTrackIsDegenerate) {
  Track<double> tr{3, {{Vec2d(1, 1), 0.0}}};
  try {
    compensate(tr, AngularRate<double>{}, 0.0, kK);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateTrack);
  }
}

TEST(AssignTimestamp, GlobalShutterAddsOffset) {
  EXPECT_EQ(assign_timestamp<double>(GlobalShutter<double>{0.0}, 2.0, Vec2d(5, 7), 480), 2.0);
  EXPECT_DOUBLE_EQ(assign_timestamp<double>(GlobalShutter<double>{0.004}, 2.0, Vec2d(5, 7), 480), 2.004);
}

TEST(AssignTimestamp, RollingShutterRows) {
  const TimestampModel<double> rs = RollingShutter<double>{0.02, +1};
  EXPECT_EQ(assign_timestamp(rs, 1.5, Vec2d(10, 0), 480), 1.5);
  EXPECT_DOUBLE_EQ(assign_timestamp(rs, 1.5, Vec2d(10, 479), 480), 1.52);
  const TimestampModel<double> rs_neg = RollingShutter<double>{0.02, -1};
  EXPECT_DOUBLE_EQ(assign_timestamp(rs_neg, 1.5, Vec2d(10, 479), 480), 1.48);
}

TEST(AssignTimestamp, RollingShutterIsMonotoneInRow) {
  const TimestampModel<double> rs = RollingShutter<double>{0.03, +1};
  double prev = -1;
  for (int y = 0; y < 480; ++y) {
    const double t = assign_timestamp(rs, 0.0, Vec2d(3, y), 480);
    EXPECT_GT(t, prev);
    prev = t;
  }
}

TEST(AssignTimestamp, RollingShutterRejectsBadInput) {
  const TimestampModel<double> rs = RollingShutter<double>{0.02, +1};
  EXPECT_THROW(assign_timestamp(rs, 0.0, Vec2d(0, 480), 480), Error);
  EXPECT_THROW(assign_timestamp(rs, 0.0, Vec2d(0, -1), 480), Error);
  const TimestampModel<double> zero = RollingShutter<double>{0.0, +1};
  EXPECT_THROW(assign_timestamp(zero, 0.0, Vec2d(0, 1), 480), Error);
}

TEST(AssignTimestamp, AsynchronousKeepsTimestamp) {
  EXPECT_EQ(assign_timestamp<double>(Asynchronous{}, 0.123456789, Vec2d(1, 470), 480), 0.123456789);
}

TEST(ReferenceTime, MidpointOfObservedRange) {
  std::vector<Track<double>> tracks{{0, {{Vec2d(0, 0), 0.3}, {Vec2d(0, 0), 0.9}}},
                                    {1, {{Vec2d(0, 0), 0.1}, {Vec2d(0, 0), 0.5}}}};
  EXPECT_DOUBLE_EQ(reference_time(std::span<const Track<double>>(tracks)), 0.5);
}

TEST(CameraIntrinsics, ValidateRejectsBadValues) {
  EXPECT_NO_THROW(kK.validate());
  EXPECT_THROW((CameraIntrinsics<double>{0, 320, 320, 240, 640, 480}.validate()), Error);
  EXPECT_THROW((CameraIntrinsics<double>{320, 320, 640, 240, 640, 480}.validate()), Error);
  EXPECT_THROW((CameraIntrinsics<double>{320, 320, 320, -1, 640, 480}.validate()), Error);
}

TEST(Geometry, FloatInstantiation) {
  const CameraIntrinsics<float> K{};
  const Vec3<float> f = pixel_to_bearing(Vec2<float>(400.f, 300.f), K);
  EXPECT_NEAR(f.norm(), 1.0f, 1e-6f);
  const Mat3<float> R = so3_exp(Vec3<float>(0.f, 0.f, 0.5f));
  EXPECT_NEAR(R.determinant(), 1.0f, 1e-6f);
}

}  // namespace
}  // namespace trackvel
