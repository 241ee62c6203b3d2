// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#include <tnrf/geometry.h>

#include <stdexcept>

namespace tnrf {

Mat3 Mat3::operator*(const Mat3 &b) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k)
                s += (*this)(i, k) * b(k, j);
            r(i, j) = s;
        }
    return r;
}

Mat3 Mat3::transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r(i, j) = (*this)(j, i);
    return r;
}

double Mat3::determinant() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

bool RigidTransform::is_valid(double tol) const {
    Mat3 rtr = rotation.transposed() * rotation;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (std::abs(rtr(i, j) - (i == j ? 1.0 : 0.0)) > tol)
                return false;
    if (std::abs(rotation.determinant() - 1.0) > tol)
        return false;
    return std::isfinite(translation.x) && std::isfinite(translation.y) &&
           std::isfinite(translation.z);
}

std::array<double, 16> RigidTransform::to_matrix4() const {
    const Mat3 &r = rotation;
    return {r(0, 0), r(0, 1), r(0, 2), translation.x, r(1, 0), r(1, 1), r(1, 2), translation.y,
            r(2, 0), r(2, 1), r(2, 2), translation.z, 0,       0,       0,       1};
}

RigidTransform RigidTransform::from_matrix4(const std::array<double, 16> &m) {
    RigidTransform t;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            t.rotation(i, j) = m[i * 4 + j];
    t.translation = {m[3], m[7], m[11]};
    return t;
}

RigidTransform RigidTransform::look_at(const Vec3 &eye, const Vec3 &target, const Vec3 &up) {
    Vec3 forward = target - eye;
    if (length(forward) == 0)
        throw std::invalid_argument("look_at: eye and target coincide");
    forward = normalize(forward);
    Vec3 right = cross(forward, up);
    if (length(right) < 1e-12)
        throw std::invalid_argument("look_at: up vector parallel to view direction");
    right = normalize(right);
    Vec3 down = cross(forward, right);
    return {Mat3::from_columns(right, down, forward), eye};
}

}  // namespace tnrf
