#include "screwgrasp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace screwgrasp {

Screw screw_from_point_dir(const Vec3& p, const Vec3& l) {
    const double n = l.norm();
    if (n < 1e-12) {
        throw std::invalid_argument("degenerate direction");
    }
    Screw s;
    s.dir = l / n;
    s.moment = p.cross(s.dir);
    s.anchor = p;
    return s;
}

double moment_about_screw(const Screw& s, const Vec3& f, const Vec3& c) {
    return s.dir.dot(c.cross(f)) + s.moment.dot(f);
}

Screw transform_screw(const RigidTransform& t, const Screw& s) {
    Screw out;
    out.dir = t.rotation * s.dir;
    out.moment = t.rotation * s.moment + t.translation.cross(out.dir);
    if (s.anchor) {
        out.anchor = t.apply(*s.anchor);
    }
    return out;
}

PointCloud transform_cloud(const RigidTransform& t, const PointCloud& cloud) {
    PointCloud out;
    out.frame_tag = cloud.frame_tag;
    out.points.reserve(cloud.points.size());
    for (const Vec3& p : cloud.points) {
        out.points.push_back(t.apply(p));
    }
    out.normals.reserve(cloud.normals.size());
    for (const Vec3& n : cloud.normals) {
        out.normals.push_back(t.apply_dir(n));
    }
    return out;
}

Vec3 OrientedBox::vertex(int i) const {
    Vec3 q;
    for (int k = 0; k < 3; ++k) {
        q[k] = (i >> k) & 1 ? half_extents[k] : -half_extents[k];
    }
    return to_world(q);
}

bool OrientedBox::contains(const Vec3& p, double slack) const {
    const Vec3 q = to_local(p);
    for (int k = 0; k < 3; ++k) {
        if (std::abs(q[k]) > half_extents[k] + slack) return false;
    }
    return true;
}

Vec3 face_outward_normal(const OrientedBox& b, const Face& f) {
    return static_cast<double>(f.sign) * b.axis(f.axis);
}

Vec3 face_center(const OrientedBox& b, const Face& f) {
    return b.center + static_cast<double>(f.sign) * b.half_extents[f.axis] * b.axis(f.axis);
}

std::pair<int, int> face_plane_axes(const Face& f) {
    switch (f.axis) {
        case 0: return {1, 2};
        case 1: return {0, 2};
        default: return {0, 1};
    }
}

OrientedBox axis_aligned_box(const PointCloud& cloud) {
    if (cloud.points.empty()) {
        throw std::invalid_argument("empty cloud");
    }
    Vec3 lo = cloud.points.front();
    Vec3 hi = cloud.points.front();
    for (const Vec3& p : cloud.points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    OrientedBox b;
    b.center = 0.5 * (lo + hi);
    b.rotation = Mat3::Identity();
    b.half_extents = (0.5 * (hi - lo)).cwiseMax(kBoxExtentFloor);
    return b;
}

namespace {

// Sign convention for a candidate axis: positive third moment of the
// projected coordinates wins; near-zero skew falls through to the world axes.
Vec3 canonical_sign(const Vec3& axis, const std::vector<Vec3>& pts, const Vec3& centroid) {
    double skew = 0.0;
    double scale = 0.0;
    for (const Vec3& p : pts) {
        const double t = axis.dot(p - centroid);
        skew += t * t * t;
        scale += std::abs(t * t * t);
    }
    if (std::abs(skew) > 1e-9 * std::max(scale, 1e-300)) {
        return skew >= 0.0 ? axis : Vec3(-axis);
    }
    for (int k = 0; k < 3; ++k) {
        if (std::abs(axis[k]) > 1e-9) {
            return axis[k] >= 0.0 ? axis : Vec3(-axis);
        }
    }
    return axis;
}

OrientedBox box_from_axes(const Mat3& rotation, const std::vector<Vec3>& pts) {
    Vec3 lo(1e300, 1e300, 1e300), hi(-1e300, -1e300, -1e300);
    for (const Vec3& p : pts) {
        const Vec3 q = rotation.transpose() * p;
        lo = lo.cwiseMin(q);
        hi = hi.cwiseMax(q);
    }
    OrientedBox b;
    b.rotation = rotation;
    b.center = rotation * (0.5 * (lo + hi));
    b.half_extents = (0.5 * (hi - lo)).cwiseMax(kBoxExtentFloor);
    return b;
}

}  // namespace

OrientedBox oriented_box_pca(const PointCloud& cloud, const Vec3& support_normal,
                             bool* degenerate) {
    if (cloud.points.empty()) {
        throw std::invalid_argument("empty cloud");
    }
    if (support_normal.norm() < 1e-12) {
        throw std::invalid_argument("degenerate support normal");
    }
    if (degenerate) *degenerate = false;

    const Vec3 n = support_normal.normalized();

    // Any orthonormal in-plane basis works; PCA directions are intrinsic.
    int k_min = 0;
    for (int k = 1; k < 3; ++k) {
        if (std::abs(n[k]) < std::abs(n[k_min])) k_min = k;
    }
    const Vec3 u0 = n.cross(Vec3::Unit(k_min)).normalized();
    const Vec3 v0 = n.cross(u0);

    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : cloud.points) centroid += p;
    centroid /= static_cast<double>(cloud.points.size());

    double caa = 0.0, cab = 0.0, cbb = 0.0;
    for (const Vec3& p : cloud.points) {
        const Vec3 d = p - centroid;
        const double a = u0.dot(d);
        const double b = v0.dot(d);
        caa += a * a;
        cab += a * b;
        cbb += b * b;
    }

    const double tr = caa + cbb;
    const double det = caa * cbb - cab * cab;
    const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    const double lam_major = 0.5 * tr + disc;
    const double lam_minor = 0.5 * tr - disc;

    if (lam_major <= 1e-24 || lam_minor <= 1e-12 * lam_major) {
        if (degenerate) *degenerate = true;
        return axis_aligned_box(cloud);
    }

    // Closed-form 2x2 eigenvector of the major eigenvalue; of the two valid
    // expressions, keep the better-conditioned one.
    const Eigen::Vector2d cand1(lam_major - cbb, cab);
    const Eigen::Vector2d cand2(cab, lam_major - caa);
    Eigen::Vector2d ev = cand1.norm() >= cand2.norm() ? cand1 : cand2;
    Vec3 major;
    if (ev.norm() > 1e-12 * std::max(tr, 1e-300)) {
        ev.normalize();
        major = ev.x() * u0 + ev.y() * v0;
    } else {
        major = u0;  // isotropic in-plane spread: orientation is arbitrary
    }
    // The support axis keeps the direction of the support normal: gravity
    // breaks the vertical symmetry, so the frame must never flip upside
    // down. The major in-plane axis is sign-canonicalized; the minor axis
    // completes the right-handed frame.
    const Vec3 x_axis = canonical_sign(major, cloud.points, centroid);
    const Vec3 z_axis = n;
    const Vec3 y_axis = z_axis.cross(x_axis);

    Mat3 rotation;
    rotation.col(0) = x_axis;
    rotation.col(1) = y_axis;
    rotation.col(2) = z_axis;
    return box_from_axes(rotation, cloud.points);
}

RigidTransform object_frame_from_box(const OrientedBox& b) {
    const Vec3 origin = b.center - b.rotation * b.half_extents;
    RigidTransform t;
    t.rotation = b.rotation.transpose();
    t.translation = -(b.rotation.transpose() * origin);
    return t;
}

std::vector<AntipodalPair> sample_antipodal_grid(const OrientedBox& b, const Face& f_i,
                                                 const Face& f_j, int res_u, int res_v) {
    if (!f_i.is_opposite(f_j)) {
        throw std::invalid_argument("faces not opposite");
    }
    if (res_u < 2 || res_v < 2) {
        throw std::invalid_argument("grid resolution must be >= 2");
    }

    const auto [ua, va] = face_plane_axes(f_i);
    const Vec3 cu = b.axis(ua);
    const Vec3 cv = b.axis(va);
    const Vec3 ci0 = face_center(b, f_i);
    const Vec3 n_in = -face_outward_normal(b, f_i);
    const double separation = 2.0 * b.half_extents[f_i.axis];

    const double hu = b.half_extents[ua] * (1.0 - 2.0 * kGridInsetFraction);
    const double hv = b.half_extents[va] * (1.0 - 2.0 * kGridInsetFraction);

    std::vector<AntipodalPair> pairs;
    pairs.reserve(static_cast<std::size_t>(res_u) * res_v);
    for (int j = 0; j < res_v; ++j) {
        const double v = -hv + 2.0 * hv * j / (res_v - 1);
        for (int i = 0; i < res_u; ++i) {
            const double u = -hu + 2.0 * hu * i / (res_u - 1);
            AntipodalPair pr;
            pr.c_i = ci0 + u * cu + v * cv;
            pr.c_j = pr.c_i + separation * n_in;
            pr.n_i = n_in;
            pr.n_j = -n_in;
            pairs.push_back(pr);
        }
    }
    return pairs;
}

}  // namespace screwgrasp
