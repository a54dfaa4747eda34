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
#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "trackvel/error.hpp"
#include "trackvel/geometry.hpp"
#include "trackvel/types.hpp"

namespace trackvel {

inline constexpr double kDefaultRankEps = 1e-9;

/// Normal-equation products of one track's constraint rows
///   [F | G^(1) .. G^(S)],  F = [f']x stacked,  G^(s) = -(t'^s/s!) [f']x stacked.
/// Also carries the eigendecomposition of FtF, reused by the Schur reduction
/// and the point back-substitution, and the track's own Schur complement taken
/// from a QR factorization of the rows, which avoids the cancellation of
/// GtG - FtG^T FtF^-1 FtG when FtF is poorly conditioned.
template <typename Scalar = double>
struct TrackBlocks {
  std::int64_t track_id = 0;
  int order = 1;
  int n_obs = 0;
  Mat3<Scalar> FtF = Mat3<Scalar>::Zero();
  Mat3X<Scalar> FtG;  // 3 x 3S
  MatX<Scalar> GtG;   // 3S x 3S
  MatX<Scalar> reduced;  // R22^T R22 = GtG - FtG^T FtF^-1 FtG

  Vec3<Scalar> ftf_eigenvalues = Vec3<Scalar>::Zero();  // ascending
  Mat3<Scalar> ftf_eigenvectors = Mat3<Scalar>::Identity();

  auto ftg(int s) const { return FtG.template middleCols<3>(3 * s); }
  auto gtg(int s, int r) const { return GtG.template block<3, 3>(3 * s, 3 * r); }

  /// (FtF)^-1 from the cached eigendecomposition; meaningful only when the
  /// rank check passes.
  Mat3<Scalar> ftf_inverse(Scalar shift = 0) const {
    return ftf_eigenvectors * (ftf_eigenvalues.array() - shift).inverse().matrix().asDiagonal() *
           ftf_eigenvectors.transpose();
  }
};

template <typename Scalar = double>
struct SchurMatrix {
  MatX<Scalar> B;  // 3S x 3S
  int num_tracks = 0;
  Scalar shift = 0;
};

template <typename Scalar = double>
struct RankCheck {
  bool pass = false;
  Scalar min_eigenvalue = 0;
  Scalar max_eigenvalue = 0;
};

/// [f]x^2 = f f^T - |f|^2 I
template <typename Derived>
Mat3<typename Derived::Scalar> skew_squared(const Eigen::MatrixBase<Derived>& f) {
  using Scalar = typename Derived::Scalar;
  Mat3<Scalar> m = f * f.transpose();
  m.diagonal().array() -= f.squaredNorm();
  return m;
}

template <typename Scalar>
void factor_ftf(TrackBlocks<Scalar>& blocks) {
  Eigen::SelfAdjointEigenSolver<Mat3<Scalar>> es(blocks.FtF);
  blocks.ftf_eigenvalues = es.eigenvalues();
  blocks.ftf_eigenvectors = es.eigenvectors();
}

/// Accumulates the per-track blocks from the time moments
///   Q_k = sum_j t'_j^k [f'_j]x^2,  k = 0 .. 2S.
template <typename Scalar>
TrackBlocks<Scalar> track_blocks(std::span<const BearingObservation<Scalar>> bearings, int order,
                                 std::int64_t track_id = 0) {
  if (order < 1 || order > kMaxOrder) {
    throw Error(ErrorCode::kInvalidInput, "order must be in [1, " + std::to_string(kMaxOrder) + "]");
  }
  if (bearings.size() < 2) {
    throw Error(ErrorCode::kDegenerateTrack,
                "track " + std::to_string(track_id) + " has fewer than two observations");
  }
  const int num_moments = 2 * order + 1;
  std::array<Mat3<Scalar>, 2 * kMaxOrder + 1> moments;
  for (int k = 0; k < num_moments; ++k) moments[k].setZero();

  const Eigen::Index rows = 3 * static_cast<Eigen::Index>(bearings.size());
  const Eigen::Index cols = 3 + 3 * order;
  MatX<Scalar> A(rows, cols);
  Eigen::Index row = 0;
  for (const auto& b : bearings) {
    const Mat3<Scalar> k2 = skew_squared(b.f);
    Scalar power = 1;
    for (int k = 0; k < num_moments; ++k) {
      moments[k] += power * k2;
      power *= b.t;
    }
    const Mat3<Scalar> S = skew(b.f);
    A.template block<3, 3>(row, 0) = S;
    power = 1;
    for (int s = 0; s < order; ++s) {
      power *= b.t;
      A.template block<3, 3>(row, 3 + 3 * s) = -(power * Scalar(kInvFactorial[s + 1])) * S;
    }
    row += 3;
  }

  TrackBlocks<Scalar> blocks;
  blocks.track_id = track_id;
  blocks.order = order;
  blocks.n_obs = static_cast<int>(bearings.size());
  blocks.FtF = -moments[0];
  blocks.FtG.resize(3, 3 * order);
  blocks.GtG.resize(3 * order, 3 * order);
  for (int s = 0; s < order; ++s) {
    const Scalar ws = Scalar(kInvFactorial[s + 1]);
    blocks.FtG.template middleCols<3>(3 * s) = ws * moments[s + 1];
    for (int r = 0; r < order; ++r) {
      const Scalar wr = Scalar(kInvFactorial[r + 1]);
      blocks.GtG.template block<3, 3>(3 * s, 3 * r) = -(ws * wr) * moments[s + r + 2];
    }
  }
  factor_ftf(blocks);

  Eigen::HouseholderQR<MatX<Scalar>> qr(A);
  const Eigen::Index r22_rows = std::min(rows, cols) - 3;
  const MatX<Scalar> R22 =
      qr.matrixQR().bottomRightCorner(rows - 3, cols - 3).topRows(r22_rows).template triangularView<Eigen::Upper>();
  blocks.reduced = R22.transpose() * R22;
  return blocks;
}

template <typename Scalar>
TrackBlocks<Scalar> track_blocks(const BearingTrack<Scalar>& track, int order) {
  return track_blocks(std::span<const BearingObservation<Scalar>>(track.bearings), order, track.id);
}

/// F must have full column rank: smallest eigenvalue of FtF above
/// eps_rank times the largest.
template <typename Scalar>
RankCheck<Scalar> rank_check_F(const TrackBlocks<Scalar>& blocks,
                               Scalar eps_rank = Scalar(kDefaultRankEps)) {
  RankCheck<Scalar> rc;
  rc.min_eigenvalue = blocks.ftf_eigenvalues(0);
  rc.max_eigenvalue = blocks.ftf_eigenvalues(2);
  rc.pass = blocks.n_obs >= 2 && rc.max_eigenvalue > 0 &&
            rc.min_eigenvalue > eps_rank * rc.max_eigenvalue;
  return rc;
}

namespace detail {

template <typename Scalar>
void check_blocks(std::span<const TrackBlocks<Scalar>> all_blocks, Scalar eps_rank) {
  if (all_blocks.empty()) {
    throw Error(ErrorCode::kInsufficientData, "no tracks to accumulate");
  }
  const int order = all_blocks.front().order;
  for (const auto& blk : all_blocks) {
    if (blk.order != order) {
      throw Error(ErrorCode::kInvalidInput, "mixed expansion orders");
    }
    if (!rank_check_F(blk, eps_rank).pass) {
      throw Error(ErrorCode::kDegenerateTrack,
                  "track " + std::to_string(blk.track_id) + " has rank-deficient F");
    }
  }
}

}  // namespace detail

/// B = sum_i GtG_i - FtG_i^T (FtF_i - shift I)^-1 FtG_i - shift I, the Schur
/// complement of A^T A - shift I with the points eliminated track by track.
/// shift = 0 gives the plain reduction. Linear in the number of tracks.
/// Evaluated as the unshifted per-track complement minus the exact correction
///   sum_j p_j^T p_j shift / (mu_j (mu_j - shift)),  p_j = v_j^T FtG,
/// so that B carries no cancellation at shift = 0.
template <typename Scalar>
SchurMatrix<Scalar> accumulate_schur(std::span<const TrackBlocks<Scalar>> all_blocks,
                                     Scalar eps_rank = Scalar(kDefaultRankEps), Scalar shift = 0) {
  detail::check_blocks(all_blocks, eps_rank);
  const int order = all_blocks.front().order;
  SchurMatrix<Scalar> schur;
  schur.B = MatX<Scalar>::Zero(3 * order, 3 * order);
  for (const auto& blk : all_blocks) {
    if (!(blk.ftf_eigenvalues(0) > shift)) {
      throw Error(ErrorCode::kInvalidInput, "shift reaches the spectrum of FtF");
    }
    schur.B.noalias() += blk.reduced;
    if (shift != 0) {
      Mat3X<Scalar> W = blk.ftf_eigenvectors.transpose() * blk.FtG;
      W.array().colwise() *=
          (shift / (blk.ftf_eigenvalues.array() * (blk.ftf_eigenvalues.array() - shift))).sqrt();
      schur.B.noalias() -= W.transpose() * W;
    }
  }
  schur.B.diagonal().array() -= shift;
  schur.B = (Scalar(0.5) * (schur.B + schur.B.transpose())).eval();
  schur.num_tracks = static_cast<int>(all_blocks.size());
  schur.shift = shift;
  return schur;
}

/// Smallest eigenvalue of the stacked normal matrix A^T A without forming it.
/// h(l) = lambda_min(B(l)) of the shifted reduction is decreasing and concave
/// below the smallest FtF eigenvalue. One Newton step from l = 0 lands right of
/// the root; from there Newton iterates decrease monotonically onto it.
template <typename Scalar>
Scalar normal_matrix_min_eigenvalue(std::span<const TrackBlocks<Scalar>> all_blocks,
                                    Scalar eps_rank = Scalar(kDefaultRankEps), int max_iterations = 100) {
  detail::check_blocks(all_blocks, eps_rank);
  const int dim = 3 * all_blocks.front().order;
  MatX<Scalar> reduced = MatX<Scalar>::Zero(dim, dim);
  std::vector<Mat3X<Scalar>> projected;
  projected.reserve(all_blocks.size());
  Scalar cap = std::numeric_limits<Scalar>::infinity();
  for (const auto& blk : all_blocks) {
    reduced += blk.reduced;
    projected.push_back(blk.ftf_eigenvectors.transpose() * blk.FtG);
    cap = std::min(cap, blk.ftf_eigenvalues(0));
  }

  // Returns h(l) and the Newton step -h / h'(l).
  const auto evaluate = [&](Scalar l) {
    MatX<Scalar> B = reduced;
    for (std::size_t i = 0; i < projected.size(); ++i) {
      const auto& mu = all_blocks[i].ftf_eigenvalues.array();
      const Vec3<Scalar> correction = l / (mu * (mu - l));
      B.noalias() -= projected[i].transpose() * correction.asDiagonal() * projected[i];
    }
    B.diagonal().array() -= l;
    Eigen::SelfAdjointEigenSolver<MatX<Scalar>> es((Scalar(0.5) * (B + B.transpose())).eval());
    const Scalar h = es.eigenvalues()(0);
    const VecX<Scalar> u = es.eigenvectors().col(0);
    Scalar slope = 1;
    for (std::size_t i = 0; i < projected.size(); ++i) {
      const Vec3<Scalar> inv = (all_blocks[i].ftf_eigenvalues.array() - l).inverse();
      slope += (inv.array() * (projected[i] * u).array()).square().sum();
    }
    return std::pair<Scalar, Scalar>{h, h / slope};
  };

  auto [h, step] = evaluate(Scalar(0));
  if (!(h > 0)) return 0;
  Scalar left = 0;
  Scalar lambda = step;
  for (int it = 0; it < max_iterations; ++it) {
    if (!(lambda < cap)) lambda = Scalar(0.5) * (left + cap);
    std::tie(h, step) = evaluate(lambda);
    if (h > 0) {
      left = lambda;
      lambda += step;
      continue;
    }
    const Scalar next = std::max(lambda + step, left);
    if (!(lambda - next > 4 * std::numeric_limits<Scalar>::epsilon() * lambda)) break;
    lambda = next;
  }
  return lambda;
}

}  // namespace trackvel
