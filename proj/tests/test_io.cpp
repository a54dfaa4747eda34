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
#include <random>
#include <sstream>

#include "trackvel/io.hpp"
#include "trackvel/random.hpp"

namespace trackvel::io {
namespace {

TEST(FormatDouble, RoundTripsExactly) {
  Rng rng = make_stream(71, 0);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 10000; ++k) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(k % 20) - 10);
    EXPECT_EQ(std::strtod(format_double(x).c_str(), nullptr), x);
  }
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}

TEST(TracksCsv, WriteReadRoundTripIsBitExact) {
  Rng rng = make_stream(72, 0);
  std::uniform_real_distribution<double> u(0, 640);
  std::vector<Track<double>> tracks;
  for (std::int64_t id : {0, 3, 17}) {
    Track<double> tr{id, {}};
    double t = 0.1 * static_cast<double>(id);
    for (int j = 0; j < 7; ++j) {
      t += u(rng) * 1e-4;
      tr.observations.push_back({Vec2d(u(rng), u(rng)), t});
    }
    tracks.push_back(tr);
  }
  std::stringstream ss;
  write_tracks_csv(ss, tracks);
  const auto records = read_tracks_csv(ss);
  ASSERT_EQ(records.size(), 21u);
  const auto back = group_tracks(records);
  ASSERT_EQ(back.size(), tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    EXPECT_EQ(back[i].id, tracks[i].id);
    ASSERT_EQ(back[i].observations.size(), tracks[i].observations.size());
    for (std::size_t j = 0; j < tracks[i].observations.size(); ++j) {
      EXPECT_EQ(back[i].observations[j].x, tracks[i].observations[j].x);
      EXPECT_EQ(back[i].observations[j].t, tracks[i].observations[j].t);
    }
  }
}

TEST(TracksCsv, GroupsByIdAndSortsByTime) {
  std::istringstream in("track_id,t,u,v\n5,0.3,1,1\n2,0.2,2,2\n5,0.1,3,3\r\n\n2,0.05,4,4\n");
  const auto tracks = group_tracks(read_tracks_csv(in));
  ASSERT_EQ(tracks.size(), 2u);
  EXPECT_EQ(tracks[0].id, 2);
  EXPECT_EQ(tracks[1].id, 5);
  EXPECT_EQ(tracks[0].observations[0].t, 0.05);
  EXPECT_EQ(tracks[1].observations[0].x, Vec2d(3, 3));
  EXPECT_EQ(tracks[1].observations[1].t, 0.3);
}

TEST(TracksCsv, MalformedInputIsRejected) {
  for (const char* text : {"", "id,t,u,v\n1,0,0,0\n", "track_id,t,u,v\n1,0,0\n",
                           "track_id,t,u,v\n1.5,0,0,0\n", "track_id,t,u,v\n1,zero,0,0\n",
                           "track_id,t,u,v\n1,0,nan,0\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(read_tracks_csv(in), Error) << text;
  }
}

TEST(ImuCsv, RoundTripWithAndWithoutAccel) {
  std::vector<ImuFileRecord> samples;
  for (int k = 0; k < 5; ++k) samples.push_back({0.001 * k, Vec3d(0.1, -0.2, k / 3.0), std::nullopt});
  std::stringstream a;
  write_imu_csv(a, samples);
  EXPECT_EQ(a.str().substr(0, 11), "t,wx,wy,wz\n");
  const auto back = read_imu_csv(a);
  ASSERT_EQ(back.size(), 5u);
  EXPECT_EQ(back[4].omega, samples[4].omega);
  EXPECT_FALSE(back[0].accel.has_value());

  for (auto& s : samples) s.accel = Vec3d(1.0 / 7, 0, -9.81);
  std::stringstream b;
  write_imu_csv(b, samples);
  const auto with_accel = read_imu_csv(b);
  ASSERT_TRUE(with_accel[2].accel.has_value());
  EXPECT_EQ(*with_accel[2].accel, *samples[2].accel);
}

TEST(ImuCsv, TimestampsMustStrictlyIncrease) {
  std::istringstream in("t,wx,wy,wz\n0.1,0,0,0\n0.1,0,0,0\n");
  EXPECT_THROW(read_imu_csv(in), Error);
  std::istringstream bad_header("t,wx,wy\n0.1,0,0\n");
  EXPECT_THROW(read_imu_csv(bad_header), Error);
  std::istringstream short_row("t,wx,wy,wz,ax,ay,az\n0.1,0,0,0\n");
  EXPECT_THROW(read_imu_csv(short_row), Error);
}

TEST(Intrinsics, KeyValueFile) {
  std::istringstream in("# camera\nfx = 320\nfy=321\ncx=319.5 # centre\ncy=239.5\nwidth=640\nheight=480\n");
  const auto K = read_intrinsics(in);
  EXPECT_EQ(K.fx, 320);
  EXPECT_EQ(K.fy, 321);
  EXPECT_EQ(K.cx, 319.5);
  EXPECT_EQ(K.height, 480);
  std::istringstream missing("fx=1\nfy=1\ncx=0\ncy=0\nwidth=2\n");
  EXPECT_THROW(read_intrinsics(missing), Error);
  std::istringstream garbage("fx 320\n");
  EXPECT_THROW(read_intrinsics(garbage), Error);
}

TEST(AverageImu, MeanInsideWindow) {
  std::vector<ImuFileRecord> s;
  for (int k = 0; k < 11; ++k) s.push_back({0.1 * k, Vec3d(k, 2 * k, 1), Vec3d(0, 0, k)});
  const auto avg = average_imu(s, 0.15, 0.55);  // samples 2..5
  EXPECT_EQ(avg.samples, 4);
  EXPECT_NEAR(avg.omega.x(), 3.5, 1e-12);
  EXPECT_NEAR(avg.omega.y(), 7.0, 1e-12);
  ASSERT_TRUE(avg.accel.has_value());
  EXPECT_NEAR(avg.accel->z(), 3.5, 1e-12);
}

TEST(AverageImu, ConstantSamplesAverageExactly) {
  const Vec3d w(0.1, 0.7, -0.3);
  std::vector<ImuFileRecord> s;
  for (int k = 0; k < 1000; ++k) s.push_back({1e-3 * k, w, std::nullopt});
  const auto avg = average_imu(s, 0.0, 1.0);
  EXPECT_EQ(avg.omega, w);
  EXPECT_FALSE(avg.accel.has_value());
}

TEST(AverageImu, EmptyWindowFallsBackToNearest) {
  std::vector<ImuFileRecord> s{{0.0, Vec3d(1, 0, 0), std::nullopt}, {1.0, Vec3d(2, 0, 0), std::nullopt}};
  const auto avg = average_imu(s, 0.7, 0.8);
  EXPECT_EQ(avg.samples, 0);
  EXPECT_EQ(avg.omega, Vec3d(2, 0, 0));
}

}  // namespace
}  // namespace trackvel::io
