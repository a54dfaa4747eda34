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
#include "trackvel/bench.hpp"

#include <algorithm>
#include <chrono>
#include <span>

#include "trackvel/linsys.hpp"
#include "trackvel/sim.hpp"
#include "trackvel/solver.hpp"

namespace trackvel::bench {

namespace {

using Clock = std::chrono::steady_clock;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

BenchCase time_solve(const std::string& name, int tracks, int obs, const BenchConfig& config) {
  sim::SimConfig sc;
  sc.num_tracks = tracks;
  sc.obs_per_track = obs;
  sc.seed = config.seed;
  Rng rng = make_stream(config.seed, 0);
  const auto scene = sim::generate_scene(sc, rng);
  const AngularRate<double> omega{scene.omega};
  const TimestampModel<double> model = Asynchronous{};
  const std::span<const Track<double>> span(scene.tracks);

  std::vector<double> samples;
  samples.reserve(config.repetitions);
  double sink = 0;
  for (int r = 0; r < config.repetitions; ++r) {
    const auto t0 = Clock::now();
    const auto est = solve(span, omega, sc.camera, model);
    const auto t1 = Clock::now();
    sink += est.velocity().x();
    samples.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
  }
  volatile double keep = sink;
  (void)keep;
  return {name, tracks, obs, config.repetitions, median(samples)};
}

double time_schur(int tracks, const BenchConfig& config) {
  Rng rng = make_stream(config.seed, static_cast<std::uint64_t>(tracks));
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> t(-0.1, 0.1);
  std::vector<TrackBlocks<double>> blocks;
  blocks.reserve(tracks);
  for (int i = 0; i < tracks; ++i) {
    std::vector<BearingObservation<double>> b(5);
    for (auto& o : b) o = {Vec3d(n(rng), n(rng), 3.0 + n(rng)).normalized(), t(rng)};
    blocks.push_back(track_blocks(std::span<const BearingObservation<double>>(b), 1, i));
  }
  std::vector<double> samples;
  double sink = 0;
  for (int r = 0; r < config.scaling_repetitions; ++r) {
    const auto t0 = Clock::now();
    const auto schur = accumulate_schur(std::span<const TrackBlocks<double>>(blocks));
    const auto t1 = Clock::now();
    sink += schur.B(0, 0);
    samples.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
  }
  volatile double keep = sink;
  (void)keep;
  return median(samples);
}

}  // namespace

BenchReport run_bench(const BenchConfig& config) {
  BenchReport report;
  report.cases.push_back(time_solve("sampled", 4, 5, config));
  report.cases.push_back(time_solve("minimal", 2, 2, config));
  report.schur_median_us_small = time_schur(100, config);
  report.schur_median_us_large = time_schur(1000, config);
  return report;
}

}  // namespace trackvel::bench
