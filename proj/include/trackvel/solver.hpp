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
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SVD>

#include "trackvel/error.hpp"
#include "trackvel/geometry.hpp"
#include "trackvel/linsys.hpp"
#include "trackvel/types.hpp"

namespace trackvel {

// ---------------------------------------------------------------------------
// Constraint counting

enum class Minimality { kUnderconstrained, kMinimal, kOverconstrained };

inline const char* to_string(Minimality m) {
  switch (m) {
    case Minimality::kUnderconstrained: return "underconstrained";
    case Minimality::kMinimal: return "minimal";
    case Minimality::kOverconstrained: return "overconstrained";
  }
  return "unknown";
}

struct MinimalityClass {
  int num_tracks = 0;
  std::vector<int> obs_per_track;
  int order = 1;
  int total_obs = 0;
  int equations = 0;  // 2N independent rows
  int unknowns = 0;   // 3M + 3S - 1 (scale removed)
  Minimality classification = Minimality::kUnderconstrained;
};

/// Every observation contributes two independent rows. Minimal means both
/// bounds N >= ceil((3M+3S-1)/2) and N >= 2M are tight, which happens for
/// (S, M) = (s, 3s) and (s, 3s-1) with two observations per track.
inline MinimalityClass classify_minimality(int num_tracks, std::span<const int> obs_per_track,
                                           int order) {
  MinimalityClass mc;
  mc.num_tracks = num_tracks;
  mc.obs_per_track.assign(obs_per_track.begin(), obs_per_track.end());
  mc.order = order;
  mc.total_obs = std::accumulate(obs_per_track.begin(), obs_per_track.end(), 0);
  mc.equations = 2 * mc.total_obs;
  mc.unknowns = 3 * num_tracks + 3 * order - 1;

  const bool short_track =
      std::any_of(obs_per_track.begin(), obs_per_track.end(), [](int n) { return n < 2; });
  if (num_tracks < 1 || static_cast<int>(obs_per_track.size()) != num_tracks || order < 1 ||
      short_track || mc.equations < mc.unknowns || mc.total_obs < 2 * num_tracks) {
    mc.classification = Minimality::kUnderconstrained;
    return mc;
  }
  const int count_bound = (mc.unknowns + 1) / 2;
  if (mc.total_obs == count_bound && mc.total_obs == 2 * num_tracks) {
    mc.classification = Minimality::kMinimal;
  } else {
    mc.classification = Minimality::kOverconstrained;
  }
  return mc;
}

// ---------------------------------------------------------------------------
// Types

template <typename Scalar = double>
struct SolverOptions {
  Scalar eps_rank = Scalar(kDefaultRankEps);
  // Overrides the midpoint of the observed time range.
  std::optional<Scalar> reference_time;
};

template <typename Scalar = double>
struct OrderSInputs {
  int order = 1;
  std::vector<Vec3<Scalar>> omegas;  // w^(1..S), rad/s^s

  void validate() const {
    if (order < 1 || order > kMaxOrder) {
      throw Error(ErrorCode::kInvalidInput,
                  "order must be in [1, " + std::to_string(kMaxOrder) + "]");
    }
    if (static_cast<int>(omegas.size()) != order) {
      throw Error(ErrorCode::kInvalidInput, "need one angular rate per order");
    }
    for (const auto& w : omegas) {
      if (!w.allFinite()) throw Error(ErrorCode::kInvalidInput, "non-finite angular rate");
    }
  }
};

template <typename Scalar = double>
struct MotionEstimate {
  int order = 1;
  std::vector<Vec3<Scalar>> rates;  // v^(1..S); unit stack, or metric
  bool metric = false;
  std::vector<std::int64_t> track_ids;
  std::vector<Vec3<Scalar>> points;
  VecX<Scalar> singular_values;  // of B, descending
  bool degenerate = false;
  std::string degenerate_reason;
  bool sign_flipped = false;
  Scalar reference_time = 0;
  std::vector<std::int64_t> dropped_tracks;

  const Vec3<Scalar>& velocity() const { return rates.front(); }

  VecX<Scalar> stacked_rates() const {
    VecX<Scalar> v(3 * rates.size());
    for (std::size_t s = 0; s < rates.size(); ++s) v.template segment<3>(3 * s) = rates[s];
    return v;
  }
};

template <typename Scalar = double>
struct VelocitySolution {
  VecX<Scalar> v;                // unit, 3S
  VecX<Scalar> singular_values;  // descending
  bool degenerate = false;
};

template <typename Scalar = double>
struct PrunedWindow {
  std::vector<Track<Scalar>> tracks;  // timestamps corrected, sorted, >= 2 obs
  std::vector<std::int64_t> dropped;
};

template <typename Scalar = double>
struct PreparedWindow {
  Scalar reference_time = 0;
  std::vector<BearingTrack<Scalar>> tracks;
  std::vector<std::int64_t> dropped;
};

// ---------------------------------------------------------------------------
// Core solve steps

/// Null direction of B: right singular vector of the smallest singular value.
template <typename Scalar>
VelocitySolution<Scalar> solve_velocity(const SchurMatrix<Scalar>& schur,
                                        Scalar eps_rank = Scalar(kDefaultRankEps)) {
  if (!schur.B.allFinite() || schur.B.rows() != schur.B.cols() || schur.B.rows() < 2) {
    throw Error(ErrorCode::kInvalidInput, "B must be a finite square matrix");
  }
  Eigen::JacobiSVD<MatX<Scalar>> svd(schur.B, Eigen::ComputeFullV);
  const Eigen::Index n = schur.B.cols();
  VelocitySolution<Scalar> sol;
  sol.singular_values = svd.singularValues();
  sol.v = svd.matrixV().col(n - 1).normalized();
  const Scalar s1 = sol.singular_values(0);
  sol.degenerate = !(s1 > 0) || sol.singular_values(n - 2) < eps_rank * s1;
  return sol;
}

/// P = -(FtF - shift I)^-1 FtG v, reusing the cached FtF factorization.
template <typename Scalar>
Vec3<Scalar> solve_points(const TrackBlocks<Scalar>& blocks, const VecX<Scalar>& v,
                          Scalar eps_rank = Scalar(kDefaultRankEps), Scalar shift = 0) {
  if (!rank_check_F(blocks, eps_rank).pass) {
    throw Error(ErrorCode::kDegenerateTrack,
                "track " + std::to_string(blocks.track_id) + " has rank-deficient F");
  }
  return -(blocks.ftf_inverse(shift) * (blocks.FtG * v));
}

template <typename Scalar = double>
struct SignResolution {
  std::vector<Vec3<Scalar>> points;
  VecX<Scalar> v;
  bool flipped = false;
};

/// Majority vote on point depth; flips the whole solution when most points
/// lie behind the camera.
template <typename Scalar>
SignResolution<Scalar> disambiguate_sign(std::vector<Vec3<Scalar>> points, VecX<Scalar> v) {
  if (points.empty()) {
    throw Error(ErrorCode::kInsufficientData, "no points to check depth on");
  }
  int positive = 0;
  int negative = 0;
  for (const auto& p : points) {
    if (p.z() > 0) ++positive;
    if (p.z() < 0) ++negative;
  }
  if (positive == negative) {
    throw Error(ErrorCode::kAmbiguousSign, std::to_string(positive) + " points in front, " +
                                               std::to_string(negative) + " behind");
  }
  SignResolution<Scalar> res{std::move(points), std::move(v), false};
  if (negative > positive) {
    for (auto& p : res.points) p = -p;
    res.v = -res.v;
    res.flipped = true;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Window preparation

/// Applies the timestamp model, sorts each track by time, keeps one
/// observation per timestamp and drops tracks left with fewer than two.
template <typename Scalar>
PrunedWindow<Scalar> prune_tracks(std::span<const Track<Scalar>> tracks,
                                  const CameraIntrinsics<Scalar>& K,
                                  const TimestampModel<Scalar>& model) {
  K.validate();
  PrunedWindow<Scalar> out;
  for (const auto& tr : tracks) {
    Track<Scalar> t{tr.id, {}};
    t.observations.reserve(tr.observations.size());
    for (const auto& o : tr.observations) {
      if (!o.x.allFinite() || !std::isfinite(o.t)) {
        throw Error(ErrorCode::kInvalidInput,
                    "non-finite observation in track " + std::to_string(tr.id));
      }
      t.observations.push_back({o.x, assign_timestamp(model, o.t, o.x, K.height)});
    }
    std::stable_sort(t.observations.begin(), t.observations.end(),
                     [](const auto& a, const auto& b) { return a.t < b.t; });
    auto last = std::unique(t.observations.begin(), t.observations.end(),
                            [](const auto& a, const auto& b) { return a.t == b.t; });
    t.observations.erase(last, t.observations.end());
    if (t.observations.size() < 2) {
      out.dropped.push_back(tr.id);
    } else {
      out.tracks.push_back(std::move(t));
    }
  }
  return out;
}

template <typename Scalar>
PreparedWindow<Scalar> compensate_window(PrunedWindow<Scalar> pruned,
                                         std::span<const Vec3<Scalar>> omegas,
                                         const CameraIntrinsics<Scalar>& K,
                                         const SolverOptions<Scalar>& options) {
  if (pruned.tracks.empty()) {
    throw Error(ErrorCode::kNoSolution, "no track has at least two different observations");
  }
  PreparedWindow<Scalar> w;
  w.reference_time = options.reference_time
                         ? *options.reference_time
                         : reference_time(std::span<const Track<Scalar>>(pruned.tracks));
  w.dropped = std::move(pruned.dropped);
  w.tracks.reserve(pruned.tracks.size());
  for (const auto& tr : pruned.tracks) {
    w.tracks.push_back({tr.id, compensate(tr, omegas, w.reference_time, K)});
  }
  return w;
}

template <typename Scalar>
PreparedWindow<Scalar> prepare_window(std::span<const Track<Scalar>> tracks,
                                      std::span<const Vec3<Scalar>> omegas,
                                      const CameraIntrinsics<Scalar>& K,
                                      const TimestampModel<Scalar>& model,
                                      const SolverOptions<Scalar>& options = {}) {
  return compensate_window(prune_tracks(tracks, K, model), omegas, K, options);
}

// ---------------------------------------------------------------------------
// Homogeneous solver

/// Runs the Schur-complement solver on already compensated tracks. The
/// reduction is shifted by the smallest eigenvalue of A^T A, so the result is
/// the smallest right singular vector of the stacked system even under noise.
/// Tracks whose F is rank deficient are dropped; a rank-deficient B or a tied depth
/// vote is reported through the degenerate flag.
template <typename Scalar>
MotionEstimate<Scalar> solve_bearing_tracks(std::span<const BearingTrack<Scalar>> tracks,
                                            int order, const SolverOptions<Scalar>& options = {}) {
  MotionEstimate<Scalar> est;
  est.order = order;
  std::vector<TrackBlocks<Scalar>> blocks;
  blocks.reserve(tracks.size());
  for (const auto& tr : tracks) {
    if (tr.bearings.size() < 2) {
      est.dropped_tracks.push_back(tr.id);
      continue;
    }
    auto blk = track_blocks(tr, order);
    if (rank_check_F(blk, options.eps_rank).pass) {
      blocks.push_back(std::move(blk));
    } else {
      est.dropped_tracks.push_back(tr.id);
    }
  }
  if (blocks.empty()) {
    throw Error(ErrorCode::kNoSolution, "every track is degenerate");
  }

  const std::span<const TrackBlocks<Scalar>> all(blocks);
  const Scalar shift = normal_matrix_min_eigenvalue(all, options.eps_rank);
  const auto schur = accumulate_schur(all, options.eps_rank, shift);
  const auto vel = solve_velocity(schur, options.eps_rank);
  est.singular_values = vel.singular_values;
  if (vel.degenerate) {
    est.degenerate = true;
    est.degenerate_reason = "rank of B below 3S-1";
  }

  std::vector<Vec3<Scalar>> points;
  points.reserve(blocks.size());
  for (const auto& blk : blocks) {
    points.push_back(solve_points(blk, vel.v, options.eps_rank, shift));
    est.track_ids.push_back(blk.track_id);
  }

  VecX<Scalar> v = vel.v;
  try {
    auto res = disambiguate_sign(std::move(points), std::move(v));
    points = std::move(res.points);
    v = std::move(res.v);
    est.sign_flipped = res.flipped;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kAmbiguousSign) throw;
    est.degenerate = true;
    if (!est.degenerate_reason.empty()) est.degenerate_reason += "; ";
    est.degenerate_reason += "ambiguous depth sign";
    v = vel.v;
    points.clear();
    for (const auto& blk : blocks) points.push_back(solve_points(blk, v, options.eps_rank, shift));
  }
  est.points = std::move(points);
  est.rates.resize(order);
  for (int s = 0; s < order; ++s) est.rates[s] = v.template segment<3>(3 * s);
  return est;
}

template <typename Scalar>
MotionEstimate<Scalar> solve_prepared(PreparedWindow<Scalar> window, int order,
                                      const SolverOptions<Scalar>& options) {
  auto est = solve_bearing_tracks(std::span<const BearingTrack<Scalar>>(window.tracks), order, options);
  est.reference_time = window.reference_time;
  est.dropped_tracks.insert(est.dropped_tracks.begin(), window.dropped.begin(), window.dropped.end());
  return est;
}

/// Constant-velocity solve (S = 1): unit velocity and scale-free points.
template <typename Scalar>
MotionEstimate<Scalar> solve(std::span<const Track<Scalar>> tracks, const AngularRate<Scalar>& omega,
                             const CameraIntrinsics<Scalar>& K, const TimestampModel<Scalar>& model,
                             const SolverOptions<Scalar>& options = {}) {
  if (!omega.omega.allFinite()) throw Error(ErrorCode::kInvalidInput, "non-finite angular rate");
  const std::span<const Vec3<Scalar>> omegas(&omega.omega, 1);
  return solve_prepared(prepare_window(tracks, omegas, K, model, options), 1, options);
}

/// Order-S solve: jointly unit-normalized stack v^(1..S). The configuration
/// is counted before any numerics and rejected when underconstrained.
template <typename Scalar>
MotionEstimate<Scalar> solve_order_s(std::span<const Track<Scalar>> tracks,
                                     const OrderSInputs<Scalar>& inputs,
                                     const CameraIntrinsics<Scalar>& K,
                                     const TimestampModel<Scalar>& model,
                                     const SolverOptions<Scalar>& options = {}) {
  inputs.validate();
  auto pruned = prune_tracks(tracks, K, model);
  std::vector<int> counts;
  for (const auto& t : pruned.tracks) counts.push_back(static_cast<int>(t.observations.size()));
  const auto mc = classify_minimality(static_cast<int>(counts.size()), counts, inputs.order);
  if (mc.classification == Minimality::kUnderconstrained) {
    throw Error(ErrorCode::kUnderconstrained,
                std::to_string(mc.equations) + " equations for " + std::to_string(mc.unknowns) +
                    " unknowns with " + std::to_string(mc.num_tracks) + " tracks");
  }
  const std::span<const Vec3<Scalar>> omegas(inputs.omegas);
  return solve_prepared(compensate_window(std::move(pruned), omegas, K, options), inputs.order,
                        options);
}

// ---------------------------------------------------------------------------
// Known-acceleration (inhomogeneous) solver

template <typename Scalar = double>
struct AccelRhs {
  Vec3<Scalar> Ftb = Vec3<Scalar>::Zero();
  Vec3<Scalar> Gtb = Vec3<Scalar>::Zero();
};

/// F^T b and G^T b for b_j = 1/2 t'_j^2 [f'_j]x a.
template <typename Scalar>
AccelRhs<Scalar> accel_rhs(std::span<const BearingObservation<Scalar>> bearings,
                           const Vec3<Scalar>& accel) {
  Mat3<Scalar> q2 = Mat3<Scalar>::Zero();
  Mat3<Scalar> q3 = Mat3<Scalar>::Zero();
  for (const auto& b : bearings) {
    const Mat3<Scalar> k2 = skew_squared(b.f);
    const Scalar t2 = b.t * b.t;
    q2 += t2 * k2;
    q3 += (t2 * b.t) * k2;
  }
  return {Scalar(-0.5) * (q2 * accel), Scalar(0.5) * (q3 * accel)};
}

/// With the acceleration known the system becomes inhomogeneous: v = B^-1 d
/// is metric and unique, so no depth vote is taken.
template <typename Scalar>
MotionEstimate<Scalar> solve_with_known_accel(std::span<const Track<Scalar>> tracks,
                                              const AngularRate<Scalar>& omega,
                                              const Vec3<Scalar>& accel,
                                              const CameraIntrinsics<Scalar>& K,
                                              const TimestampModel<Scalar>& model,
                                              const SolverOptions<Scalar>& options = {}) {
  if (!accel.allFinite() || !omega.omega.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "non-finite acceleration or angular rate");
  }
  if (accel.squaredNorm() == 0) {
    throw Error(ErrorCode::kScaleUnobservable, "zero acceleration leaves the scale free");
  }
  const std::span<const Vec3<Scalar>> omegas(&omega.omega, 1);
  auto window = prepare_window(tracks, omegas, K, model, options);

  MotionEstimate<Scalar> est;
  est.order = 1;
  est.metric = true;
  est.reference_time = window.reference_time;
  est.dropped_tracks = window.dropped;

  std::vector<TrackBlocks<Scalar>> blocks;
  std::vector<AccelRhs<Scalar>> rhs;
  for (const auto& tr : window.tracks) {
    auto blk = track_blocks(tr, 1);
    if (!rank_check_F(blk, options.eps_rank).pass) {
      est.dropped_tracks.push_back(tr.id);
      continue;
    }
    rhs.push_back(accel_rhs(std::span<const BearingObservation<Scalar>>(tr.bearings), accel));
    blocks.push_back(std::move(blk));
  }
  if (blocks.empty()) throw Error(ErrorCode::kNoSolution, "every track is degenerate");

  const auto schur = accumulate_schur(std::span<const TrackBlocks<Scalar>>(blocks), options.eps_rank);
  Vec3<Scalar> d = Vec3<Scalar>::Zero();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    d += rhs[i].Gtb - blocks[i].FtG.transpose() * (blocks[i].ftf_inverse() * rhs[i].Ftb);
  }

  const Mat3<Scalar> B = schur.B;
  Eigen::LDLT<Mat3<Scalar>> ldlt(B);
  const Vec3<Scalar> pivots = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || !(pivots.minCoeff() > Scalar(1e-12) * pivots.maxCoeff())) {
    throw Error(ErrorCode::kSingularSystem, "B is singular; velocity is not unique");
  }
  const Vec3<Scalar> v = ldlt.solve(d);
  est.singular_values = Eigen::JacobiSVD<Mat3<Scalar>>(B).singularValues();
  est.rates = {v};
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    est.track_ids.push_back(blocks[i].track_id);
    est.points.push_back(blocks[i].ftf_inverse() * (rhs[i].Ftb - blocks[i].FtG * v));
  }
  return est;
}

// ---------------------------------------------------------------------------
// Dense reference

inline constexpr double kMaxReferenceEntries = 1e7;

template <typename Scalar = double>
struct ReferenceSolution {
  VecX<Scalar> x;                // [P_1 .. P_M, v^(1) .. v^(S)], unit norm
  VecX<Scalar> singular_values;  // descending, padded with zeros to 3M+3S
  std::vector<std::int64_t> track_ids;
  int order = 1;

  VecX<Scalar> rates() const { return x.tail(3 * order); }
};

/// Materializes the full stacked system A x = 0 and takes the right singular
/// vector of its smallest singular value. Test oracle for the Schur path.
template <typename Scalar>
ReferenceSolution<Scalar> full_svd_reference(std::span<const BearingTrack<Scalar>> tracks, int order) {
  if (order < 1 || order > kMaxOrder) throw Error(ErrorCode::kInvalidInput, "bad order");
  const Eigen::Index m = static_cast<Eigen::Index>(tracks.size());
  Eigen::Index n = 0;
  for (const auto& tr : tracks) n += static_cast<Eigen::Index>(tr.bearings.size());
  const Eigen::Index rows = 3 * n;
  const Eigen::Index cols = 3 * m + 3 * order;
  if (m == 0 || n == 0) throw Error(ErrorCode::kInsufficientData, "empty instance");
  if (static_cast<double>(rows) * static_cast<double>(cols) > kMaxReferenceEntries) {
    throw Error(ErrorCode::kOracleTooLarge,
                std::to_string(rows) + "x" + std::to_string(cols) + " exceeds the dense limit");
  }
  MatX<Scalar> A = MatX<Scalar>::Zero(rows, cols);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (const auto& b : tracks[i].bearings) {
      const Mat3<Scalar> S = skew(b.f);
      A.template block<3, 3>(row, 3 * i) = S;
      Scalar power = 1;
      for (int s = 0; s < order; ++s) {
        power *= b.t;
        A.template block<3, 3>(row, 3 * m + 3 * s) = -(power * Scalar(kInvFactorial[s + 1])) * S;
      }
      row += 3;
    }
  }
  Eigen::BDCSVD<MatX<Scalar>> svd(A, Eigen::ComputeFullV);
  ReferenceSolution<Scalar> ref;
  ref.order = order;
  ref.x = svd.matrixV().col(cols - 1);
  ref.singular_values = VecX<Scalar>::Zero(cols);
  ref.singular_values.head(svd.singularValues().size()) = svd.singularValues();
  for (const auto& tr : tracks) ref.track_ids.push_back(tr.id);
  return ref;
}

template <typename Scalar>
ReferenceSolution<Scalar> full_svd_reference(std::span<const Track<Scalar>> tracks,
                                             const OrderSInputs<Scalar>& inputs,
                                             const CameraIntrinsics<Scalar>& K,
                                             const TimestampModel<Scalar>& model,
                                             const SolverOptions<Scalar>& options = {}) {
  inputs.validate();
  const auto window =
      prepare_window(tracks, std::span<const Vec3<Scalar>>(inputs.omegas), K, model, options);
  return full_svd_reference(std::span<const BearingTrack<Scalar>>(window.tracks), inputs.order);
}

}  // namespace trackvel
