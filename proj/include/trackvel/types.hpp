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

#include <Eigen/Core>

namespace trackvel {

template <typename Scalar> using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar> using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar> using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar> using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar> using Mat3X = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;
using VecXd = VecX<double>;
using MatXd = MatX<double>;

// Highest supported Taylor order of the motion model.
inline constexpr int kMaxOrder = 4;

// 1/k! for k = 0 .. 2*kMaxOrder, the weights of the order-S moment products.
inline constexpr double kInvFactorial[2 * kMaxOrder + 1] = {
    1.0,       1.0,         1.0 / 2.0,    1.0 / 6.0,     1.0 / 24.0,
    1.0 / 120, 1.0 / 720.0, 1.0 / 5040.0, 1.0 / 40320.0,
};

}  // namespace trackvel
