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
#include "trackvel/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <Eigen/Geometry>

#include "trackvel/error.hpp"

namespace trackvel::sim {

namespace {

constexpr double kDegToRad = M_PI / 180.0;
constexpr int kPlacementAttempts = 1000;
constexpr double kMinJitterGap = 1e-9;  // s, keeps jittered timestamps strictly increasing

Vec3d random_unit(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vec3d v(n(rng), n(rng), n(rng));
    const double norm = v.norm();
    if (norm > 1e-12) return v / norm;
  }
}

std::string g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Projection of `point` observed around `frame_time`. With a rolling shutter
// the capture time depends on the row the point lands on, so it is iterated
// to a fixed point.
std::optional<TrackObservation<double>> observe(const Scene& scene, const SimConfig& cfg,
                                                const Vec3d& point, double frame_time) {
  const auto& K = cfg.camera;
  double capture = frame_time;
  Vec2d x;
  const int iterations = cfg.sensor == Sensor::kRollingShutter ? 50 : 1;
  for (int k = 0; k < iterations; ++k) {
    const Vec3d pc = camera_point(scene, point, capture);
    if (!(pc.z() > 1e-3)) return std::nullopt;
    x = K.project(pc);
    if (cfg.sensor != Sensor::kRollingShutter) break;
    if (!K.contains(x)) return std::nullopt;
    const double next = frame_time + (x.y() / (K.height - 1)) * cfg.rs_scan_time;
    if (next == capture) break;
    capture = next;
  }
  if (!K.contains(x)) return std::nullopt;
  return TrackObservation<double>{x, frame_time};
}

std::vector<double> observation_times(const SimConfig& cfg, Rng& rng) {
  const int n = cfg.obs_per_track;
  std::vector<double> times(n);
  if (cfg.sensor == Sensor::kAsynchronous) {
    std::uniform_real_distribution<double> u(cfg.start_time, cfg.start_time + cfg.window);
    for (auto& t : times) t = u(rng);
    std::sort(times.begin(), times.end());
  } else {
    for (int k = 0; k < n; ++k) times[k] = cfg.start_time + cfg.window * k / (n - 1);
  }
  return times;
}

Track<double> place_track(const Scene& scene, const SimConfig& cfg, std::int64_t id, Rng& rng,
                          Vec3d& point_out) {
  const double h = cfg.cube_size / 2;
  std::uniform_real_distribution<double> u(-h, h);
  for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
    const Vec3d p(u(rng), u(rng), cfg.cube_depth + u(rng));
    const auto times = observation_times(cfg, rng);
    Track<double> track{id, {}};
    track.observations.reserve(times.size());
    bool visible = true;
    for (double t : times) {
      auto obs = observe(scene, cfg, p, t);
      if (!obs) {
        visible = false;
        break;
      }
      track.observations.push_back(*obs);
    }
    if (visible) {
      point_out = p;
      return track;
    }
  }
  throw Error(ErrorCode::kGenerationFailed,
              "could not place a visible point in " + std::to_string(kPlacementAttempts) + " attempts");
}

// Each observation is moved to a bearing at a fixed angle from the true one.
void corrupt_track(Track<double>& track, const SimConfig& cfg, Rng& rng) {
  const auto& K = cfg.camera;
  const double angle = cfg.outlier_angle_deg * kDegToRad;
  for (auto& obs : track.observations) {
    const Vec3d f = pixel_to_bearing(obs.x, K);
    for (int attempt = 0; attempt < 100; ++attempt) {
      const Vec3d axis = f.cross(random_unit(rng)).normalized();
      const Vec3d g = Eigen::AngleAxisd(angle, axis) * f;
      if (g.z() > 0.2) {
        obs.x = K.project(g);
        break;
      }
    }
  }
}

double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::nan("");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

void SimConfig::validate() const {
  camera.validate();
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kInvalidInput, what); };
  if (!(speed >= 0) || !(accel_magnitude >= 0) || !(angular_speed_deg >= 0)) bad("negative magnitude");
  if (!(noise.pixel_sigma >= 0) || !(noise.timestamp_jitter >= 0) || !(noise.omega_noise_deg >= 0)) {
    bad("negative noise level");
  }
  if (!(window > 0)) bad("window must be positive");
  if (!(cube_size > 0) || !(cube_depth > cube_size / 2)) bad("point volume must lie in front of the camera");
  if (num_tracks < 1) bad("need at least one track");
  if (obs_per_track < 2) bad("need at least two observations per track");
  if (trials < 1) bad("need at least one trial");
  if (solver_order < 1 || solver_order > kMaxOrder) bad("solver order out of range");
  if (outlier_tracks < 0) bad("negative outlier count");
  if (sensor == Sensor::kRollingShutter && !(rs_scan_time > 0)) bad("scan time must be positive");
  if (method == SolveMethod::kKnownAccel && solver_order != 1) bad("known-acceleration solve is first order");
  if (method == SolveMethod::kRansac) ransac.validate();
}

std::string SimConfig::hash() const {
  std::ostringstream s;
  s << preset << '|' << camera.fx << '|' << camera.fy << '|' << camera.cx << '|' << camera.cy << '|'
    << camera.width << '|' << camera.height << '|' << g17(speed) << '|' << g17(accel_magnitude) << '|'
    << g17(angular_speed_deg) << '|' << g17(cube_size) << '|' << g17(cube_depth) << '|' << g17(window)
    << '|' << g17(start_time) << '|' << num_tracks << '|' << obs_per_track << '|' << trials << '|'
    << g17(noise.pixel_sigma) << '|' << g17(noise.timestamp_jitter) << '|'
    << static_cast<int>(noise.jitter_distribution) << '|' << g17(noise.omega_noise_deg) << '|'
    << static_cast<int>(sensor) << '|' << g17(rs_scan_time) << '|' << rs_correct << '|'
    << solver_order << '|' << static_cast<int>(method) << '|' << outlier_tracks << '|'
    << g17(outlier_angle_deg) << '|' << seed;
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s.str()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SimConfig make_preset(const std::string& name) {
  SimConfig c;
  c.preset = name;
  if (name == "sparse") {
    c.num_tracks = 5;
    c.obs_per_track = 5;
  } else if (name == "moderate") {
    c.num_tracks = 20;
    c.obs_per_track = 20;
  } else if (name == "dense") {
    c.num_tracks = 100;
    c.obs_per_track = 50;
  } else {
    throw Error(ErrorCode::kInvalidInput, "unknown preset '" + name + "'");
  }
  return c;
}

Vec3d camera_point(const Scene& scene, const Vec3d& point, double t) {
  const double dt = t - scene.reference_time;
  const Vec3d position = scene.velocity * dt + 0.5 * dt * dt * scene.accel;
  return so3_exp(Vec3d(scene.omega * dt)).transpose() * (point - position);
}

Scene generate_scene(const SimConfig& config, Rng& rng) {
  config.validate();
  Scene scene;
  scene.velocity = config.velocity ? *config.velocity : Vec3d(random_unit(rng) * config.speed);
  if (config.accel) {
    scene.accel = *config.accel;
  } else {
    scene.accel = config.accel_magnitude > 0 ? Vec3d(random_unit(rng) * config.accel_magnitude)
                                             : Vec3d::Zero();
  }
  scene.omega = config.omega ? *config.omega
                             : Vec3d(random_unit(rng) * (config.angular_speed_deg * kDegToRad));
  scene.reference_time = config.start_time + config.window / 2;

  const int total = config.num_tracks + config.outlier_tracks;
  scene.tracks.reserve(total);
  scene.points.reserve(total);
  for (int i = 0; i < total; ++i) {
    Vec3d p;
    scene.tracks.push_back(place_track(scene, config, i, rng, p));
    scene.points.push_back(p);
    if (i >= config.num_tracks) {
      corrupt_track(scene.tracks.back(), config, rng);
      scene.outlier_ids.push_back(i);
    }
  }
  return scene;
}

NoisyData add_noise(const Scene& scene, const SimConfig& config, Rng& rng) {
  NoisyData out{scene.tracks, scene.omega};
  const auto& noise = config.noise;
  std::normal_distribution<double> unit(0.0, 1.0);
  if (noise.pixel_sigma > 0) {
    for (auto& tr : out.tracks) {
      for (auto& o : tr.observations) {
        o.x.x() += noise.pixel_sigma * unit(rng);
        o.x.y() += noise.pixel_sigma * unit(rng);
      }
    }
  }
  if (noise.timestamp_jitter > 0) {
    std::uniform_real_distribution<double> flat(-noise.timestamp_jitter, noise.timestamp_jitter);
    for (auto& tr : out.tracks) {
      for (std::size_t j = 0; j < tr.observations.size(); ++j) {
        auto& t = tr.observations[j].t;
        t += noise.jitter_distribution == JitterDistribution::kGaussian
                 ? noise.timestamp_jitter * unit(rng)
                 : flat(rng);
        if (j > 0) t = std::max(t, tr.observations[j - 1].t + kMinJitterGap);
      }
    }
  }
  if (noise.omega_noise_deg > 0) {
    const double sigma = noise.omega_noise_deg * kDegToRad / std::sqrt(3.0);
    out.omega += sigma * Vec3d(unit(rng), unit(rng), unit(rng));
  }
  return out;
}

double velocity_error(const Vec3d& estimate, const Vec3d& truth) {
  if (!(estimate.norm() > 0) || !(truth.norm() > 0)) {
    throw Error(ErrorCode::kInvalidInput, "velocity error needs nonzero vectors");
  }
  const double deg = std::atan2(estimate.cross(truth).norm(), estimate.dot(truth)) / kDegToRad;
  return std::clamp(deg, 0.0, 180.0);
}

TimestampModel<double> solver_timestamp_model(const SimConfig& config) {
  switch (config.sensor) {
    case Sensor::kAsynchronous: return Asynchronous{};
    case Sensor::kGlobalShutter: return GlobalShutter<double>{0.0};
    case Sensor::kRollingShutter:
      if (config.rs_correct) return RollingShutter<double>{config.rs_scan_time, +1};
      return GlobalShutter<double>{0.0};
  }
  return Asynchronous{};
}

Summary summarize(std::vector<double> values) {
  Summary s;
  if (values.empty()) {
    s.mean = s.median = s.p10 = s.p25 = s.p75 = s.p90 = std::nan("");
    return s;
  }
  std::sort(values.begin(), values.end());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.median = percentile(values, 0.5);
  s.p10 = percentile(values, 0.10);
  s.p25 = percentile(values, 0.25);
  s.p75 = percentile(values, 0.75);
  s.p90 = percentile(values, 0.90);
  return s;
}

TrialOutcome run_trial(const SimConfig& config, std::uint64_t trial_index) {
  Rng rng = make_stream(config.seed, trial_index);
  TrialOutcome out;
  try {
    const Scene scene = generate_scene(config, rng);
    const NoisyData data = add_noise(scene, config, rng);
    const std::span<const Track<double>> tracks(data.tracks);
    const auto model = solver_timestamp_model(config);
    SolverOptions<double> options;
    options.reference_time = scene.reference_time;

    switch (config.method) {
      case SolveMethod::kDirect:
        if (config.solver_order == 1) {
          out.estimate = solve(tracks, AngularRate<double>{data.omega}, config.camera, model, options);
        } else {
          OrderSInputs<double> inputs{config.solver_order,
                                      std::vector<Vec3d>(config.solver_order, Vec3d::Zero())};
          inputs.omegas[0] = data.omega;
          out.estimate = solve_order_s(tracks, inputs, config.camera, model, options);
        }
        break;
      case SolveMethod::kRansac: {
        RansacConfig rc = config.ransac;
        rc.seed = make_stream(config.seed ^ 0x5eedull, trial_index)();
        auto res = ransac(tracks, AngularRate<double>{data.omega}, config.camera, model, rc, options);
        out.inlier_ratio = res.inlier_ratio;
        if (!scene.outlier_ids.empty()) {
          int rejected = 0;
          for (auto id : scene.outlier_ids) {
            if (std::find(res.inlier_ids.begin(), res.inlier_ids.end(), id) == res.inlier_ids.end()) {
              ++rejected;
            }
          }
          out.outlier_rejection = static_cast<double>(rejected) / scene.outlier_ids.size();
        }
        out.estimate = std::move(res.estimate);
        break;
      }
      case SolveMethod::kKnownAccel:
        out.estimate = solve_with_known_accel(tracks, AngularRate<double>{data.omega}, scene.accel,
                                              config.camera, model, options);
        break;
    }
    if (out.estimate.degenerate) return out;
    out.error_deg = velocity_error(out.estimate.velocity(), scene.velocity);
    if (out.estimate.order >= 2 && scene.accel.norm() > 0) {
      out.accel_error_deg = velocity_error(out.estimate.rates[1], scene.accel);
    }
    out.ok = true;
  } catch (const Error&) {
    out.ok = false;
  }
  return out;
}

TrialStats run_trials(const SimConfig& config) {
  config.validate();
  TrialStats stats;
  stats.trials = config.trials;
  for (int k = 0; k < config.trials; ++k) {
    const auto outcome = run_trial(config, static_cast<std::uint64_t>(k));
    if (!outcome.ok) {
      ++stats.failures;
      continue;
    }
    stats.errors_deg.push_back(outcome.error_deg);
    if (outcome.accel_error_deg) stats.accel_errors_deg.push_back(*outcome.accel_error_deg);
    if (outcome.inlier_ratio) stats.inlier_ratios.push_back(*outcome.inlier_ratio);
    if (outcome.outlier_rejection) stats.outlier_rejection.push_back(*outcome.outlier_rejection);
  }
  if (2 * stats.failures > stats.trials) {
    throw Error(ErrorCode::kExperimentFailed, std::to_string(stats.failures) + " of " +
                                                  std::to_string(stats.trials) + " trials failed");
  }
  stats.velocity = summarize(stats.errors_deg);
  if (!stats.accel_errors_deg.empty()) stats.acceleration = summarize(stats.accel_errors_deg);
  return stats;
}

std::string csv_header() {
  return "config_hash,preset,pixel_noise_px,timestamp_jitter_s,omega_noise_deg_s,trials,"
         "mean_deg,median_deg,p25_deg,p75_deg,failures";
}

std::string csv_row(const SimConfig& config, const TrialStats& stats) {
  std::ostringstream s;
  s << config.hash() << ',' << config.preset << ',' << g17(config.noise.pixel_sigma) << ','
    << g17(config.noise.timestamp_jitter) << ',' << g17(config.noise.omega_noise_deg) << ','
    << stats.trials << ',' << g17(stats.velocity.mean) << ',' << g17(stats.velocity.median) << ','
    << g17(stats.velocity.p25) << ',' << g17(stats.velocity.p75) << ',' << stats.failures;
  return s.str();
}

}  // namespace trackvel::sim
