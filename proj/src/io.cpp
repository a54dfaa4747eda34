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
#include "trackvel/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "trackvel/error.hpp"

namespace trackvel::io {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  return out;
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw Error(ErrorCode::kInvalidInput, "line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& s, int line) {
  // strtod is locale dependent only for the decimal point; files use '.'.
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(x)) {
    fail(line, "bad number '" + s + "'");
  }
  return x;
}

std::int64_t parse_int(const std::string& s, int line) {
  std::int64_t x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(line, "bad integer '" + s + "'");
  }
  return x;
}

bool next_data_line(std::istream& in, std::string& line, int& number) {
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) return true;
  }
  return false;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<TrackFileRecord> read_tracks_csv(std::istream& in) {
  std::string line;
  int number = 0;
  if (!next_data_line(in, line, number)) throw Error(ErrorCode::kInvalidInput, "empty tracks file");
  if (split(line) != std::vector<std::string>{"track_id", "t", "u", "v"}) {
    fail(number, "expected header track_id,t,u,v");
  }
  std::vector<TrackFileRecord> records;
  while (next_data_line(in, line, number)) {
    const auto f = split(line);
    if (f.size() != 4) fail(number, "expected 4 fields");
    records.push_back({parse_int(f[0], number), parse_double(f[1], number),
                       parse_double(f[2], number), parse_double(f[3], number)});
  }
  return records;
}

std::vector<ImuFileRecord> read_imu_csv(std::istream& in) {
  std::string line;
  int number = 0;
  if (!next_data_line(in, line, number)) throw Error(ErrorCode::kInvalidInput, "empty IMU file");
  const auto header = split(line);
  const std::vector<std::string> base{"t", "wx", "wy", "wz"};
  const std::vector<std::string> with_accel{"t", "wx", "wy", "wz", "ax", "ay", "az"};
  const bool has_accel = header == with_accel;
  if (!has_accel && header != base) fail(number, "expected header t,wx,wy,wz[,ax,ay,az]");

  std::vector<ImuFileRecord> samples;
  while (next_data_line(in, line, number)) {
    const auto f = split(line);
    if (f.size() != header.size()) fail(number, "expected " + std::to_string(header.size()) + " fields");
    ImuFileRecord r;
    r.t = parse_double(f[0], number);
    r.omega = Vec3d(parse_double(f[1], number), parse_double(f[2], number), parse_double(f[3], number));
    if (has_accel) {
      r.accel = Vec3d(parse_double(f[4], number), parse_double(f[5], number), parse_double(f[6], number));
    }
    if (!samples.empty() && !(r.t > samples.back().t)) fail(number, "IMU timestamps must increase");
    samples.push_back(r);
  }
  return samples;
}

std::vector<Track<double>> group_tracks(std::span<const TrackFileRecord> records) {
  std::map<std::int64_t, Track<double>> by_id;
  for (const auto& r : records) {
    auto& tr = by_id[r.track_id];
    tr.id = r.track_id;
    tr.observations.push_back({Vec2d(r.u, r.v), r.t});
  }
  std::vector<Track<double>> tracks;
  tracks.reserve(by_id.size());
  for (auto& [id, tr] : by_id) {
    std::stable_sort(tr.observations.begin(), tr.observations.end(),
                     [](const auto& a, const auto& b) { return a.t < b.t; });
    tracks.push_back(std::move(tr));
  }
  return tracks;
}

void write_tracks_csv(std::ostream& out, std::span<const Track<double>> tracks) {
  out << "track_id,t,u,v\n";
  for (const auto& tr : tracks) {
    for (const auto& o : tr.observations) {
      out << tr.id << ',' << format_double(o.t) << ',' << format_double(o.x.x()) << ','
          << format_double(o.x.y()) << '\n';
    }
  }
}

void write_imu_csv(std::ostream& out, std::span<const ImuFileRecord> samples) {
  const bool has_accel = !samples.empty() && samples.front().accel.has_value();
  out << (has_accel ? "t,wx,wy,wz,ax,ay,az\n" : "t,wx,wy,wz\n");
  for (const auto& s : samples) {
    out << format_double(s.t);
    for (int k = 0; k < 3; ++k) out << ',' << format_double(s.omega(k));
    if (has_accel) {
      const Vec3d a = s.accel.value_or(Vec3d::Zero());
      for (int k = 0; k < 3; ++k) out << ',' << format_double(a(k));
    }
    out << '\n';
  }
}

CameraIntrinsics<double> read_intrinsics(std::istream& in) {
  std::map<std::string, double> values;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(number, "expected key=value");
    values[trim(line.substr(0, eq))] = parse_double(trim(line.substr(eq + 1)), number);
  }
  CameraIntrinsics<double> K;
  for (const char* key : {"fx", "fy", "cx", "cy", "width", "height"}) {
    if (!values.count(key)) throw Error(ErrorCode::kInvalidInput, std::string("missing key ") + key);
  }
  K.fx = values["fx"];
  K.fy = values["fy"];
  K.cx = values["cx"];
  K.cy = values["cy"];
  K.width = static_cast<int>(values["width"]);
  K.height = static_cast<int>(values["height"]);
  K.validate();
  return K;
}

ImuAverage average_imu(std::span<const ImuFileRecord> samples, double t0, double t1) {
  ImuAverage avg;
  if (samples.empty()) return avg;
  bool with_accel = samples.front().accel.has_value();
  Vec3d accel = Vec3d::Zero();
  for (const auto& s : samples) {
    if (s.t < t0 || s.t > t1) continue;
    ++avg.samples;
    const double k = avg.samples;
    if (avg.samples == 1) {
      avg.omega = s.omega;
      accel = s.accel.value_or(Vec3d::Zero());
    } else {
      avg.omega += (s.omega - avg.omega) / k;
      accel += (s.accel.value_or(Vec3d::Zero()) - accel) / k;
    }
  }
  if (avg.samples == 0) {
    const double mid = 0.5 * (t0 + t1);
    const auto nearest = std::min_element(samples.begin(), samples.end(), [&](const auto& a, const auto& b) {
      return std::abs(a.t - mid) < std::abs(b.t - mid);
    });
    avg.omega = nearest->omega;
    accel = nearest->accel.value_or(Vec3d::Zero());
  }
  if (with_accel) avg.accel = accel;
  return avg;
}

}  // namespace trackvel::io
