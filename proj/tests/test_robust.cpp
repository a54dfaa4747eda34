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

#include <algorithm>
#include <random>
#include <set>

#include "oracle.hpp"
#include "trackvel/robust.hpp"
#include "trackvel/sim.hpp"

namespace trackvel {
namespace {

double residual_oracle(const BearingTrack<double>& tr, const Vec3d& P, const Vec3d& v) {
  double sum = 0;
  for (const auto& b : tr.bearings) {
    sum += oracle::angle_deg(b.f, P - v * b.t);
  }
  return sum / static_cast<double>(tr.bearings.size());
}

struct Window {
  sim::SimConfig cfg;
  sim::Scene scene;
  PreparedWindow<double> prepared;
};

Window make_window(std::uint64_t index, int good, int outliers, double pixel_sigma) {
  Window w;
  w.cfg = sim::make_preset("moderate");
  w.cfg.num_tracks = good;
  w.cfg.outlier_tracks = outliers;
  w.cfg.noise.pixel_sigma = pixel_sigma;
  w.cfg.seed = 61;
  Rng rng = make_stream(w.cfg.seed, index);
  w.scene = sim::generate_scene(w.cfg, rng);
  const auto noisy = sim::add_noise(w.scene, w.cfg, rng);
  SolverOptions<double> opt;
  opt.reference_time = w.scene.reference_time;
  w.prepared = prepare_window(std::span<const Track<double>>(noisy.tracks), std::span<const Vec3d>(&noisy.omega, 1),
                              w.cfg.camera, TimestampModel<double>{Asynchronous{}}, opt);
  return w;
}

// ---------------------------------------------------------------------------

TEST(TrackResidual, GroundTruthIsZero) {
  Rng rng = make_stream(62, 0);
  const auto inst = oracle::random_instance(rng, std::vector<int>{12}, 1);
  EXPECT_LT(track_residual(inst.tracks[0].bearings, inst.points[0], inst.rates), 1e-9);
}

TEST(TrackResidual, OrthogonalPredictionIs90) {
  // Predictions (0,0,1) and (0,1,1)/sqrt2 are both orthogonal to the x axis.
  const std::vector<Vec3d> rates{Vec3d(0, -1, 1)};
  BearingTrack<double> ortho{0, {{Vec3d::UnitX(), 0.0}, {Vec3d::UnitX(), 1.0}}};
  EXPECT_NEAR(track_residual(ortho.bearings, Vec3d(0, 0, 2), rates), 90.0, 1e-12);
}

TEST(TrackResidual, MatchesPerObservationOracle) {
  Rng rng = make_stream(63, 0);
  for (int k = 0; k < 50; ++k) {
    const auto inst = oracle::random_instance(rng, std::vector<int>{15}, 1, 0.2);
    const Vec3d axis = inst.rates[0].unitOrthogonal();
    const Vec3d v_rot = oracle::rotation(axis * (10.0 * M_PI / 180)) * inst.rates[0];
    const std::vector<Vec3d> rates{v_rot};
    const double r = track_residual(inst.tracks[0].bearings, inst.points[0], rates);
    EXPECT_NEAR(r, residual_oracle(inst.tracks[0], inst.points[0], v_rot), 1e-12);
    EXPECT_GT(r, 0);
  }
}

TEST(TrackResidual, ZeroNormPredictionIsSentinel) {
  BearingTrack<double> tr{0, {{Vec3d::UnitZ(), 0.0}, {Vec3d::UnitZ(), 1.0}}};
  const std::vector<Vec3d> rates{Vec3d(0, 0, 2)};
  EXPECT_EQ(track_residual(tr.bearings, Vec3d(0, 0, 2), rates), 180.0);
}

// ---------------------------------------------------------------------------

TEST(SampleHypothesis, ShortTracksContributeEverything) {
  Rng gen = make_stream(64, 0);
  const auto inst = oracle::random_instance(gen, std::vector<int>{5, 5, 3, 5}, 1);
  RansacConfig cfg;
  Rng rng = make_stream(1, 0);
  const auto sample = sample_hypothesis(inst.tracks, cfg, rng);
  ASSERT_EQ(sample.size(), 4u);
  for (const auto& s : sample) {
    const auto& src = inst.tracks[s.id];
    ASSERT_EQ(s.bearings.size(), src.bearings.size());
    for (std::size_t j = 0; j < s.bearings.size(); ++j) EXPECT_EQ(s.bearings[j].t, src.bearings[j].t);
  }
}

TEST(SampleHypothesis, EndpointsAlwaysKeptAndStratified) {
  Rng gen = make_stream(65, 0);
  const auto inst = oracle::random_instance(gen, std::vector<int>(6, 50), 1);
  RansacConfig cfg;
  for (std::uint64_t it = 0; it < 100; ++it) {
    Rng rng = make_stream(3, it);
    const auto sample = sample_hypothesis(inst.tracks, cfg, rng);
    std::set<std::int64_t> ids;
    for (const auto& s : sample) {
      ids.insert(s.id);
      const auto& src = inst.tracks[s.id];
      ASSERT_EQ(s.bearings.size(), 5u);
      EXPECT_EQ(s.bearings.front().t, src.bearings.front().t);
      EXPECT_EQ(s.bearings.back().t, src.bearings.back().t);
      for (std::size_t j = 1; j < s.bearings.size(); ++j) EXPECT_LT(s.bearings[j - 1].t, s.bearings[j].t);
    }
    EXPECT_EQ(ids.size(), 4u);
  }
}

TEST(SampleHypothesis, DeterministicForFixedSeed) {
  Rng gen = make_stream(66, 0);
  const auto inst = oracle::random_instance(gen, std::vector<int>(10, 20), 1);
  RansacConfig cfg;
  Rng a = make_stream(9, 4);
  Rng b = make_stream(9, 4);
  const auto sa = sample_hypothesis(inst.tracks, cfg, a);
  const auto sb = sample_hypothesis(inst.tracks, cfg, b);
  ASSERT_EQ(sa.size(), sb.size());
  for (std::size_t k = 0; k < sa.size(); ++k) {
    EXPECT_EQ(sa[k].id, sb[k].id);
    ASSERT_EQ(sa[k].bearings.size(), sb[k].bearings.size());
    for (std::size_t j = 0; j < sa[k].bearings.size(); ++j) EXPECT_EQ(sa[k].bearings[j].f, sb[k].bearings[j].f);
  }
}

TEST(SampleHypothesis, TooFewTracksIsInsufficientData) {
  Rng gen = make_stream(67, 0);
  const auto inst = oracle::random_instance(gen, std::vector<int>(3, 8), 1);
  RansacConfig cfg;
  Rng rng = make_stream(1, 0);
  try {
    sample_hypothesis(inst.tracks, cfg, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientData);
  }
}

// ---------------------------------------------------------------------------

TEST(RansacConfig, Validation) {
  EXPECT_NO_THROW(RansacConfig{}.validate());
  RansacConfig c;
  c.sample_tracks = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.sample_obs_per_track = 1;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.inlier_threshold_deg = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.early_stop_inlier_ratio = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.max_iterations = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(BetterHypothesis, TieBrokenByMeanResidualThenIteration) {
  const HypothesisScore a{10, 1.5, 3};
  const HypothesisScore b{10, 0.8, 7};
  const HypothesisScore c{11, 4.0, 9};
  EXPECT_TRUE(better_hypothesis(b, a));
  EXPECT_FALSE(better_hypothesis(a, b));
  EXPECT_TRUE(better_hypothesis(c, b));
  const HypothesisScore d{10, 0.8, 2};
  EXPECT_TRUE(better_hypothesis(d, b));
  EXPECT_FALSE(better_hypothesis(b, b));
}

TEST(Ransac, TieOnInlierCountKeepsLowerResidual) {
  // Two hypotheses that both explain every track; the exact one has the lower residual.
  const auto w = make_window(1, 12, 0, 0.0);
  std::vector<TrackBlocks<double>> blocks;
  for (const auto& tr : w.prepared.tracks) blocks.push_back(track_blocks(tr, 1));
  const std::vector<Vec3d> exact{w.scene.velocity};
  const Vec3d tilted_v = oracle::rotation(w.scene.velocity.unitOrthogonal() * 0.02) * w.scene.velocity;
  const std::vector<Vec3d> tilted{tilted_v};
  const auto s_exact = score_tracks(w.prepared.tracks, blocks, exact, 5.0);
  const auto s_tilted = score_tracks(w.prepared.tracks, blocks, tilted, 5.0);
  ASSERT_EQ(s_exact.inlier_ids.size(), s_tilted.inlier_ids.size());
  const HypothesisScore first{static_cast<int>(s_tilted.inlier_ids.size()), s_tilted.mean_inlier_residual_deg, 0};
  const HypothesisScore second{static_cast<int>(s_exact.inlier_ids.size()), s_exact.mean_inlier_residual_deg, 1};
  EXPECT_TRUE(better_hypothesis(second, first));
}

TEST(Ransac, ConsistentTracksStopAfterOneIteration) {
  const auto w = make_window(2, 20, 0, 0.0);
  const auto res = ransac(w.prepared, RansacConfig{});
  EXPECT_EQ(res.inlier_ratio, 1.0);
  EXPECT_EQ(res.iterations_run, 1);
  EXPECT_LT(sim::velocity_error(res.estimate.velocity(), w.scene.velocity), 1e-6);
}

TEST(Ransac, RejectsCorruptedTracks) {
  for (int k = 0; k < 10; ++k) {
    const auto w = make_window(10 + k, 20, 10, 0.5);
    const auto res = ransac(w.prepared, RansacConfig{});
    std::vector<std::int64_t> expected(20);
    for (int i = 0; i < 20; ++i) expected[i] = i;
    auto ids = res.inlier_ids;
    std::sort(ids.begin(), ids.end());
    EXPECT_EQ(ids, expected) << "window " << k;
    EXPECT_NEAR(res.inlier_ratio, 20.0 / 30.0, 1e-15);
    EXPECT_EQ(res.estimate.track_ids.size(), res.inlier_ids.size());
    EXPECT_LT(sim::velocity_error(res.estimate.velocity(), w.scene.velocity), 5.0);
  }
}

TEST(Ransac, Deterministic) {
  const auto w = make_window(30, 20, 8, 1.0);
  RansacConfig cfg;
  cfg.seed = 1234;
  const auto a = ransac(w.prepared, cfg);
  const auto b = ransac(w.prepared, cfg);
  EXPECT_EQ(a.inlier_ids, b.inlier_ids);
  EXPECT_EQ(a.iterations_run, b.iterations_run);
  EXPECT_EQ(a.estimate.velocity(), b.estimate.velocity());
}

TEST(Ransac, InlierClassificationIgnoresTrackOrder) {
  const auto w = make_window(31, 20, 6, 1.0);
  std::vector<TrackBlocks<double>> blocks;
  for (const auto& tr : w.prepared.tracks) blocks.push_back(track_blocks(tr, 1));
  const std::vector<Vec3d> rates{w.scene.velocity};
  const auto forward = score_tracks(w.prepared.tracks, blocks, rates, 5.0);

  auto tracks = w.prepared.tracks;
  Rng rng = make_stream(5, 5);
  std::shuffle(tracks.begin(), tracks.end(), rng);
  std::vector<TrackBlocks<double>> shuffled_blocks;
  for (const auto& tr : tracks) shuffled_blocks.push_back(track_blocks(tr, 1));
  const auto shuffled = score_tracks(tracks, shuffled_blocks, rates, 5.0);

  const std::set<std::int64_t> a(forward.inlier_ids.begin(), forward.inlier_ids.end());
  const std::set<std::int64_t> b(shuffled.inlier_ids.begin(), shuffled.inlier_ids.end());
  EXPECT_EQ(a, b);
}

// The refit is the least-squares solution over every inlier observation, so its
// normalized residual on the stacked inlier system cannot exceed that of the
// best sampled hypothesis with its points triangulated from the same tracks.
TEST(Ransac, RefitDoesNotIncreaseInlierResidual) {
  int ok = 0;
  int total = 0;
  for (int k = 0; k < 100; ++k) {
    const auto w = make_window(100 + k, 20, 5, 1.0);
    const auto res = ransac(w.prepared, RansacConfig{});
    std::vector<BearingTrack<double>> inliers;
    for (const auto& tr : w.prepared.tracks) {
      if (std::find(res.inlier_ids.begin(), res.inlier_ids.end(), tr.id) != res.inlier_ids.end()) {
        inliers.push_back(tr);
      }
    }
    const MatXd A = oracle::stacked_A(inliers, 1);
    const auto rayleigh = [&](const std::vector<Vec3d>& rates, bool triangulate) {
      const Eigen::Index m = static_cast<Eigen::Index>(inliers.size());
      VecXd x(3 * m + 3);
      for (Eigen::Index i = 0; i < m; ++i) {
        const auto& ids = res.estimate.track_ids;
        const auto at = std::find(ids.begin(), ids.end(), inliers[i].id) - ids.begin();
        x.segment<3>(3 * i) = triangulate ? solve_points(track_blocks(inliers[i], 1), VecXd(rates[0]))
                                          : res.estimate.points[at];
      }
      x.tail<3>() = rates[0];
      return (A * x).squaredNorm() / x.squaredNorm();
    };
    ASSERT_EQ(res.estimate.track_ids.size(), inliers.size());
    const double refit = rayleigh(res.estimate.rates, false);
    const double hypothesis = rayleigh(res.hypothesis.rates, true);
    ok += refit <= hypothesis * (1 + 1e-12);
    ++total;
  }
  EXPECT_GE(ok, 95 * total / 100);
}

TEST(Ransac, CleanScenesHaveHighInlierRatio) {
  int ok = 0;
  for (int k = 0; k < 100; ++k) {
    const auto w = make_window(300 + k, 20, 0, 1.0);
    ok += ransac(w.prepared, RansacConfig{}).inlier_ratio >= 0.9;
  }
  EXPECT_GE(ok, 95);
}

TEST(Ransac, TooFewTracksThrows) {
  const auto w = make_window(40, 3, 0, 0.0);
  EXPECT_THROW(ransac(w.prepared, RansacConfig{}), Error);
}

}  // namespace
}  // namespace trackvel
