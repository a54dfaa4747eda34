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
#include "trackvel/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "trackvel/bench.hpp"
#include "trackvel/error.hpp"
#include "trackvel/sim.hpp"

namespace trackvel::cli {

namespace {

using nlohmann::json;

constexpr double kImuRate = 1000.0;  // Hz, for dumped fixtures

json vec_json(const Vec3d& v) { return json::array({v.x(), v.y(), v.z()}); }

std::vector<Track<double>> select_window(std::span<const Track<double>> tracks, double start, double end,
                                         double min_length_px) {
  std::vector<Track<double>> out;
  for (const auto& tr : tracks) {
    Track<double> sub{tr.id, {}};
    for (const auto& o : tr.observations) {
      if (o.t >= start && o.t <= end) sub.observations.push_back(o);
    }
    if (sub.observations.empty()) continue;
    if (min_length_px > 0) {
      const auto [lo, hi] = std::minmax_element(sub.observations.begin(), sub.observations.end(),
                                                [](const auto& a, const auto& b) { return a.t < b.t; });
      if ((hi->x - lo->x).norm() < min_length_px) continue;
    }
    out.push_back(std::move(sub));
  }
  return out;
}

TimestampModel<double> parse_model(const std::string& name, double trs, int sign, double offset) {
  if (name == "async" || name == "asynchronous") return Asynchronous{};
  if (name == "global" || name == "global-shutter") return GlobalShutter<double>{offset};
  if (name == "rolling-shutter" || name == "rolling") {
    if (!(trs > 0)) throw Error(ErrorCode::kInvalidInput, "--trs must be positive for rolling shutter");
    return RollingShutter<double>{trs, sign};
  }
  throw Error(ErrorCode::kInvalidInput, "unknown timestamp model '" + name + "'");
}

sim::Sensor parse_sensor(const std::string& name) {
  if (name == "async") return sim::Sensor::kAsynchronous;
  if (name == "global") return sim::Sensor::kGlobalShutter;
  if (name == "rolling") return sim::Sensor::kRollingShutter;
  throw Error(ErrorCode::kInvalidInput, "unknown sensor '" + name + "'");
}

template <typename Fn>
void with_output(const std::string& path, std::ostream& fallback, Fn&& fn) {
  if (path.empty()) {
    fn(fallback);
    return;
  }
  std::ofstream file(path);
  if (!file) throw Error(ErrorCode::kInvalidInput, "cannot write " + path);
  fn(file);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidInput, "cannot read " + path);
  return in;
}

// ---------------------------------------------------------------------------
// sim

struct SimArgs {
  std::vector<std::string> presets{"moderate"};
  std::vector<double> pixel_noise{0.0};
  std::vector<double> jitter_ms{0.0};
  std::vector<double> omega_noise{0.0};
  std::string jitter_dist = "gaussian";
  int tracks = 0;
  int obs = 0;
  double window = 0.2;
  int trials = 1000;
  std::uint64_t seed = 0;
  int order = 1;
  double accel = 0.0;
  double angular_speed = 10.0;
  std::string sensor = "async";
  double trs = 0.02;
  bool no_rs_correction = false;
  bool ransac = false;
  bool known_accel = false;
  int outliers = 0;
  std::string output;
  std::string dump_prefix;
};

sim::SimConfig sim_cell(const SimArgs& a, const std::string& preset, double px, double jitter_ms,
                        double omega_noise) {
  auto cfg = sim::make_preset(preset);
  if (a.tracks > 0) cfg.num_tracks = a.tracks;
  if (a.obs > 0) cfg.obs_per_track = a.obs;
  cfg.window = a.window;
  cfg.trials = a.trials;
  cfg.seed = a.seed;
  cfg.solver_order = a.order;
  cfg.accel_magnitude = a.accel;
  cfg.angular_speed_deg = a.angular_speed;
  cfg.sensor = parse_sensor(a.sensor);
  cfg.rs_scan_time = a.trs;
  cfg.rs_correct = !a.no_rs_correction;
  cfg.outlier_tracks = a.outliers;
  cfg.noise.pixel_sigma = px;
  cfg.noise.timestamp_jitter = jitter_ms * 1e-3;
  cfg.noise.omega_noise_deg = omega_noise;
  if (a.jitter_dist == "gaussian") {
    cfg.noise.jitter_distribution = sim::JitterDistribution::kGaussian;
  } else if (a.jitter_dist == "uniform") {
    cfg.noise.jitter_distribution = sim::JitterDistribution::kUniform;
  } else {
    throw Error(ErrorCode::kInvalidInput, "unknown jitter distribution '" + a.jitter_dist + "'");
  }
  if (a.ransac && a.known_accel) throw Error(ErrorCode::kInvalidInput, "--ransac and --known-accel are exclusive");
  cfg.method = a.ransac ? sim::SolveMethod::kRansac
                        : (a.known_accel ? sim::SolveMethod::kKnownAccel : sim::SolveMethod::kDirect);
  cfg.validate();
  return cfg;
}

void dump_scene(const sim::SimConfig& cfg, const std::string& prefix) {
  Rng rng = make_stream(cfg.seed, 0);
  const auto scene = sim::generate_scene(cfg, rng);
  const auto data = sim::add_noise(scene, cfg, rng);

  with_output(prefix + "_tracks.csv", std::cout, [&](std::ostream& os) {
    io::write_tracks_csv(os, data.tracks);
  });

  std::vector<io::ImuFileRecord> imu;
  const double margin = 0.05;
  const int count = static_cast<int>(std::ceil((cfg.window + 2 * margin) * kImuRate)) + 1;
  for (int k = 0; k < count; ++k) {
    io::ImuFileRecord r;
    r.t = cfg.start_time - margin + k / kImuRate;
    r.omega = data.omega;
    if (scene.accel.norm() > 0) r.accel = scene.accel;
    imu.push_back(r);
  }
  with_output(prefix + "_imu.csv", std::cout, [&](std::ostream& os) { io::write_imu_csv(os, imu); });

  json truth;
  truth["velocity"] = vec_json(scene.velocity);
  truth["accel"] = vec_json(scene.accel);
  truth["omega"] = vec_json(scene.omega);
  truth["omega_measured"] = vec_json(data.omega);
  truth["reference_time"] = scene.reference_time;
  truth["config_hash"] = cfg.hash();
  truth["outlier_ids"] = scene.outlier_ids;
  json pts = json::array();
  for (const auto& p : scene.points) pts.push_back(vec_json(p));
  truth["points"] = pts;
  with_output(prefix + "_truth.json", std::cout, [&](std::ostream& os) { os << truth.dump(2) << '\n'; });
}

int run_sim(const SimArgs& a, std::ostream& out) {
  std::vector<sim::SimConfig> cells;
  for (const auto& preset : a.presets) {
    for (double px : a.pixel_noise) {
      for (double j : a.jitter_ms) {
        for (double w : a.omega_noise) cells.push_back(sim_cell(a, preset, px, j, w));
      }
    }
  }
  if (!a.dump_prefix.empty()) dump_scene(cells.front(), a.dump_prefix);

  std::vector<std::string> rows;
  for (const auto& cfg : cells) rows.push_back(sim::csv_row(cfg, sim::run_trials(cfg)));
  with_output(a.output, out, [&](std::ostream& os) {
    os << sim::csv_header() << '\n';
    for (const auto& r : rows) os << r << '\n';
  });
  return kExitOk;
}

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
  std::string tracks_path;
  std::string imu_path;
  std::string intrinsics_path;
  double fx = 320, fy = 320, cx = 320, cy = 240;
  int width = 640, height = 480;
  double window = 0.2;
  double stride = 0.1;
  double min_length = 10.0;
  std::string model = "async";
  double trs = 0.0;
  int rs_sign = 1;
  double exposure_offset = 0.0;
  bool ransac = false;
  RansacConfig rc;
  bool accel = false;
  std::string format = "csv";
  std::string output;
};

void write_csv_results(std::ostream& os, const std::vector<WindowResult>& results) {
  os << "window_start,window_end,t_s,vx,vy,vz,metric,inlier_ratio,tracks,degenerate,sign_flipped\n";
  for (const auto& r : results) {
    const auto& e = r.estimate;
    os << io::format_double(r.start) << ',' << io::format_double(r.end) << ','
       << io::format_double(e.reference_time) << ',' << io::format_double(e.velocity().x()) << ','
       << io::format_double(e.velocity().y()) << ',' << io::format_double(e.velocity().z()) << ','
       << (e.metric ? 1 : 0) << ',' << (r.inlier_ratio ? io::format_double(*r.inlier_ratio) : "") << ','
       << e.track_ids.size() << ',' << (e.degenerate ? 1 : 0) << ',' << (e.sign_flipped ? 1 : 0) << '\n';
  }
}

void write_json_results(std::ostream& os, const std::vector<WindowResult>& results) {
  json arr = json::array();
  for (const auto& r : results) {
    const auto& e = r.estimate;
    json w;
    w["window_start"] = r.start;
    w["window_end"] = r.end;
    w["reference_time"] = e.reference_time;
    w["order"] = e.order;
    w["metric"] = e.metric;
    w["velocity"] = vec_json(e.velocity());
    json rates = json::array();
    for (const auto& v : e.rates) rates.push_back(vec_json(v));
    w["rates"] = rates;
    json pts = json::array();
    for (std::size_t i = 0; i < e.points.size(); ++i) {
      pts.push_back({{"track_id", e.track_ids[i]}, {"point", vec_json(e.points[i])}});
    }
    w["points"] = pts;
    w["singular_values"] = std::vector<double>(e.singular_values.data(),
                                               e.singular_values.data() + e.singular_values.size());
    w["degenerate"] = e.degenerate;
    w["degenerate_reason"] = e.degenerate_reason;
    w["sign_flipped"] = e.sign_flipped;
    w["dropped_tracks"] = e.dropped_tracks;
    w["inlier_ratio"] = r.inlier_ratio ? json(*r.inlier_ratio) : json(nullptr);
    w["inlier_ids"] = r.inlier_ids;
    arr.push_back(w);
  }
  os << arr.dump(2) << '\n';
}

int run_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
  auto track_file = open_input(a.tracks_path);
  const auto records = io::read_tracks_csv(track_file);
  const auto tracks = io::group_tracks(records);
  std::vector<io::ImuFileRecord> imu;
  if (!a.imu_path.empty()) {
    auto imu_file = open_input(a.imu_path);
    imu = io::read_imu_csv(imu_file);
  }
  CameraIntrinsics<double> K{a.fx, a.fy, a.cx, a.cy, a.width, a.height};
  if (!a.intrinsics_path.empty()) {
    auto kf = open_input(a.intrinsics_path);
    K = io::read_intrinsics(kf);
  }
  K.validate();
  if (a.format != "csv" && a.format != "json") throw Error(ErrorCode::kInvalidInput, "--format must be csv or json");
  if (a.accel && (imu.empty() || !imu.front().accel)) {
    throw Error(ErrorCode::kInvalidInput, "--accel needs an IMU file with ax,ay,az columns");
  }
  if (!(a.window > 0) || !(a.stride > 0)) throw Error(ErrorCode::kInvalidInput, "window and stride must be positive");

  WindowOptions opts;
  opts.window = a.window;
  opts.stride = a.stride;
  opts.min_track_length_px = a.min_length;
  opts.model = parse_model(a.model, a.trs, a.rs_sign, a.exposure_offset);
  opts.use_ransac = a.ransac;
  opts.ransac = a.rc;
  opts.use_accel = a.accel;
  if (a.ransac) opts.ransac.validate();

  std::vector<std::string> skipped;
  const auto results = solve_windows(tracks, imu, K, opts, &skipped);
  for (const auto& s : skipped) err << "skipped " << s << '\n';

  with_output(a.output, out, [&](std::ostream& os) {
    if (a.format == "json") {
      write_json_results(os, results);
    } else {
      write_csv_results(os, results);
    }
  });
  const bool any = std::any_of(results.begin(), results.end(), [](const auto& r) { return !r.estimate.degenerate; });
  if (!any) {
    err << "no solvable window\n";
    return kExitNoSolution;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// minimality, bench

int run_minimality(int tracks, const std::vector<int>& obs, int order, std::ostream& out) {
  if (tracks < 1 || static_cast<int>(obs.size()) != tracks || order < 1) {
    throw Error(ErrorCode::kInvalidInput, "need -M >= 1, one -n entry per track and -S >= 1");
  }
  const auto mc = classify_minimality(tracks, obs, order);
  out << to_string(mc.classification) << '\n';
  out << "equations=" << mc.equations << " unknowns=" << mc.unknowns << " observations=" << mc.total_obs
      << " tracks=" << mc.num_tracks << " order=" << mc.order << '\n';
  return kExitOk;
}

int run_bench_cmd(const bench::BenchConfig& cfg, std::ostream& out) {
  const auto report = bench::run_bench(cfg);
  out << "case,tracks,obs_per_track,repetitions,median_us\n";
  for (const auto& c : report.cases) {
    out << c.name << ',' << c.tracks << ',' << c.obs_per_track << ',' << c.repetitions << ','
        << c.median_us << '\n';
  }
  out << "schur_accumulate,100,5," << cfg.scaling_repetitions << ',' << report.schur_median_us_small << '\n';
  out << "schur_accumulate,1000,5," << cfg.scaling_repetitions << ',' << report.schur_median_us_large << '\n';
  out << "# schur time ratio 1000/100 tracks: " << report.schur_ratio() << '\n';
  return kExitOk;
}

}  // namespace

std::vector<WindowResult> solve_windows(std::span<const Track<double>> tracks,
                                        std::span<const io::ImuFileRecord> imu,
                                        const CameraIntrinsics<double>& K, const WindowOptions& options,
                                        std::vector<std::string>* skipped) {
  std::vector<WindowResult> results;
  double t_min = std::numeric_limits<double>::infinity();
  double t_max = -t_min;
  for (const auto& tr : tracks) {
    for (const auto& o : tr.observations) {
      t_min = std::min(t_min, o.t);
      t_max = std::max(t_max, o.t);
    }
  }
  if (!(t_min <= t_max)) return results;

  for (int k = 0;; ++k) {
    const double start = t_min + k * options.stride;
    const double end = start + options.window;
    if (k > 0 && start > t_max) break;
    const auto note = [&](const std::string& why) {
      if (skipped) {
        skipped->push_back("window [" + io::format_double(start) + ", " + io::format_double(end) + "]: " + why);
      }
    };
    const auto selected = select_window(tracks, start, end, options.min_track_length_px);
    if (selected.empty()) {
      note("no tracks");
    } else {
      try {
        const auto avg = io::average_imu(imu, start, end);
        const AngularRate<double> omega{avg.omega};
        const std::span<const Track<double>> sel(selected);
        WindowResult r;
        r.start = start;
        r.end = end;
        if (options.use_accel) {
          r.estimate = solve_with_known_accel(sel, omega, avg.accel.value_or(Vec3d::Zero()), K,
                                              options.model, options.solver);
        } else if (options.use_ransac) {
          auto res = ransac(sel, omega, K, options.model, options.ransac, options.solver);
          r.inlier_ratio = res.inlier_ratio;
          r.inlier_ids = std::move(res.inlier_ids);
          r.estimate = std::move(res.estimate);
        } else {
          r.estimate = solve(sel, omega, K, options.model, options.solver);
        }
        results.push_back(std::move(r));
      } catch (const Error& e) {
        note(e.what());
      }
    }
    if (end >= t_max) break;
  }
  return results;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Linear velocity and structure from asynchronous point tracks"};
  app.require_subcommand(1);

  SimArgs sa;
  auto* sim_cmd = app.add_subcommand("sim", "Run synthetic noise experiments and print CSV statistics");
  sim_cmd->add_option("--preset", sa.presets, "sparse, moderate, dense (comma list)")->delimiter(',');
  sim_cmd->add_option("--pixel-noise", sa.pixel_noise, "pixel noise sigma list (px)")->delimiter(',');
  sim_cmd->add_option("--jitter-ms", sa.jitter_ms, "timestamp jitter list (ms)")->delimiter(',');
  sim_cmd->add_option("--omega-noise", sa.omega_noise, "angular-rate noise list (deg/s)")->delimiter(',');
  sim_cmd->add_option("--jitter-dist", sa.jitter_dist, "gaussian or uniform");
  sim_cmd->add_option("--tracks", sa.tracks, "override the preset track count")->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--obs", sa.obs, "override the preset observations per track")->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--window", sa.window, "time window (s)")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--trials", sa.trials, "trials per cell")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sa.seed, "random seed");
  sim_cmd->add_option("--order", sa.order, "solver Taylor order")->check(CLI::Range(1, kMaxOrder));
  sim_cmd->add_option("--accel", sa.accel, "true acceleration magnitude (m/s^2)")->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--angular-speed", sa.angular_speed, "true angular speed (deg/s)")->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--sensor", sa.sensor, "async, global or rolling");
  sim_cmd->add_option("--trs", sa.trs, "rolling shutter readout time (s)");
  sim_cmd->add_flag("--no-rs-correction", sa.no_rs_correction, "solve rolling shutter data with frame times");
  sim_cmd->add_flag("--ransac", sa.ransac, "solve through RANSAC");
  sim_cmd->add_flag("--known-accel", sa.known_accel, "metric solve with the true acceleration");
  sim_cmd->add_option("--outliers", sa.outliers, "corrupted tracks added per scene")->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--out", sa.output, "CSV output file (default stdout)");
  sim_cmd->add_option("--dump-tracks", sa.dump_prefix,
                      "write trial 0 of the first cell as PREFIX_tracks.csv, PREFIX_imu.csv, PREFIX_truth.json");

  SolveArgs so;
  auto* solve_cmd = app.add_subcommand("solve", "Estimate velocity per time window from track and IMU files");
  solve_cmd->add_option("--tracks", so.tracks_path, "tracks.csv")->required();
  solve_cmd->add_option("--imu", so.imu_path, "imu.csv (zero angular rate when omitted)");
  solve_cmd->add_option("--intrinsics", so.intrinsics_path, "key=value intrinsics file");
  solve_cmd->add_option("--fx", so.fx);
  solve_cmd->add_option("--fy", so.fy);
  solve_cmd->add_option("--cx", so.cx);
  solve_cmd->add_option("--cy", so.cy);
  solve_cmd->add_option("--width", so.width);
  solve_cmd->add_option("--height", so.height);
  solve_cmd->add_option("--window", so.window, "window length (s)");
  solve_cmd->add_option("--stride", so.stride, "window stride (s)");
  solve_cmd->add_option("--min-track-length-px", so.min_length, "drop tracks whose endpoints move less (px)");
  solve_cmd->add_option("--timestamp-model", so.model, "async, global or rolling-shutter");
  solve_cmd->add_option("--trs", so.trs, "rolling shutter readout time (s)");
  solve_cmd->add_option("--rs-sign", so.rs_sign, "+1 adds the row delay, -1 subtracts it")->check(CLI::IsMember({-1, 1}));
  solve_cmd->add_option("--exposure-offset", so.exposure_offset, "global shutter exposure midpoint offset (s)");
  solve_cmd->add_flag("--ransac", so.ransac, "robust estimation");
  solve_cmd->add_option("--ransac-iterations", so.rc.max_iterations);
  solve_cmd->add_option("--ransac-sample-tracks", so.rc.sample_tracks);
  solve_cmd->add_option("--ransac-sample-obs", so.rc.sample_obs_per_track);
  solve_cmd->add_option("--ransac-threshold", so.rc.inlier_threshold_deg, "inlier threshold (deg)");
  solve_cmd->add_option("--ransac-early-stop", so.rc.early_stop_inlier_ratio);
  solve_cmd->add_option("--seed", so.rc.seed);
  solve_cmd->add_flag("--accel", so.accel, "metric solve using the IMU acceleration columns");
  solve_cmd->add_option("--format", so.format, "csv or json");
  solve_cmd->add_option("--output", so.output, "output file (default stdout)");

  int min_tracks = 0;
  std::vector<int> min_obs;
  int min_order = 1;
  auto* min_cmd = app.add_subcommand("minimality", "Classify a track configuration by constraint counting");
  min_cmd->add_option("-M,--tracks", min_tracks, "number of tracks")->required();
  min_cmd->add_option("-n,--obs", min_obs, "observations per track (comma list)")->delimiter(',')->required();
  min_cmd->add_option("-S,--order", min_order, "Taylor order");

  bench::BenchConfig bc;
  auto* bench_cmd = app.add_subcommand("bench", "Time the minimal solves and the Schur accumulation");
  bench_cmd->add_option("--reps", bc.repetitions)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--scaling-reps", bc.scaling_repetitions)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bc.seed);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sim_cmd) return run_sim(sa, out);
    if (*solve_cmd) return run_solve(so, out, err);
    if (*min_cmd) return run_minimality(min_tracks, min_obs, min_order, out);
    if (*bench_cmd) return run_bench_cmd(bc, out);
  } catch (const Error& e) {
    err << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::kInvalidInput: return kExitUsage;
      case ErrorCode::kNoSolution: return kExitNoSolution;
      default: return kExitExperiment;
    }
  }
  return kExitUsage;
}

}  // namespace trackvel::cli
