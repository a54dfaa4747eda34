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
#include <string>
#include <vector>

namespace trackvel::bench {

struct BenchConfig {
  int repetitions = 10000;
  int scaling_repetitions = 100;
  std::uint64_t seed = 1;
};

struct BenchCase {
  std::string name;
  int tracks = 0;
  int obs_per_track = 0;
  int repetitions = 0;
  double median_us = 0;
};

struct BenchReport {
  std::vector<BenchCase> cases;
  double schur_median_us_small = 0;  // 100 tracks
  double schur_median_us_large = 0;  // 1000 tracks
  double schur_ratio() const { return schur_median_us_large / schur_median_us_small; }
};

/// Times full solves of the sampled RANSAC case (4 tracks x 5 observations)
/// and the minimal case (2 tracks x 2 observations), then the Schur
/// accumulation at 100 and 1000 tracks.
BenchReport run_bench(const BenchConfig& config);

}  // namespace trackvel::bench
