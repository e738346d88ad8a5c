#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace screwgrasp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Zero-pitch line in Plucker coordinates: unit direction `dir` and moment
/// `moment = anchor x dir`. The anchor is any point on the line and is kept
/// around when known, since some feature encodings need it.
struct Screw {
    Vec3 dir;
    Vec3 moment;
    std::optional<Vec3> anchor;

    /// Point on the line closest to the origin (`dir x moment`).
    Vec3 closest_point() const { return dir.cross(moment); }
};

/// Builds a screw through point `p` with direction `l` (normalized internally).
/// Throws std::invalid_argument("degenerate direction") for near-zero `l`.
Screw screw_from_point_dir(const Vec3& p, const Vec3& l);

/// Moment of force `f` applied at `c` about the screw line:
/// dir . (c x f) + moment . f. Invariant to sliding the anchor along the line.
double moment_about_screw(const Screw& s, const Vec3& f, const Vec3& c);

struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Vec3 apply_dir(const Vec3& d) const { return rotation * d; }
    RigidTransform inverse() const {
        return {rotation.transpose(), -(rotation.transpose() * translation)};
    }
    RigidTransform compose(const RigidTransform& o) const {
        return {rotation * o.rotation, rotation * o.translation + translation};
    }
};

/// Maps a screw through a rigid transform (direction rotates, moment picks up
/// the translation term).
Screw transform_screw(const RigidTransform& t, const Screw& s);

struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;  // empty, or one unit vector per point
    std::string frame_tag = "world";

    bool has_normals() const { return !normals.empty(); }
    std::size_t size() const { return points.size(); }
};

PointCloud transform_cloud(const RigidTransform& t, const PointCloud& cloud);

/// Box with arbitrary orientation; columns of `rotation` are the box axes.
struct OrientedBox {
    Vec3 center = Vec3::Zero();
    Mat3 rotation = Mat3::Identity();
    Vec3 half_extents = Vec3::Ones();

    Vec3 axis(int i) const { return rotation.col(i); }
    Vec3 to_local(const Vec3& p) const { return rotation.transpose() * (p - center); }
    Vec3 to_world(const Vec3& q) const { return center + rotation * q; }
    /// Vertex for bit pattern i in [0,8): bit k set means +half_extents[k].
    Vec3 vertex(int i) const;
    bool contains(const Vec3& p, double slack = 1e-9) const;
    double volume() const { return 8.0 * half_extents.prod(); }
};

/// Extent floor for degenerate (planar / collinear) clouds.
inline constexpr double kBoxExtentFloor = 1e-4;

/// One of the six box faces: outward normal is sign * rotation.col(axis).
struct Face {
    int axis = 0;  // 0|1|2
    int sign = 1;  // +1|-1

    Face opposite() const { return {axis, -sign}; }
    bool is_opposite(const Face& o) const { return axis == o.axis && sign == -o.sign; }
};

Vec3 face_outward_normal(const OrientedBox& b, const Face& f);
Vec3 face_center(const OrientedBox& b, const Face& f);

/// Parallel-jaw contact pair across two parallel faces: inward normals oppose
/// each other and the chord c_j - c_i runs along n_i.
struct AntipodalPair {
    Vec3 c_i, c_j;
    Vec3 n_i, n_j;

    double separation() const { return (c_j - c_i).norm(); }
    Vec3 midpoint() const { return 0.5 * (c_i + c_j); }
};

/// Tight axis-aligned box; degenerate extents are clamped to kBoxExtentFloor.
OrientedBox axis_aligned_box(const PointCloud& cloud);

/// Box fitted by 2D PCA in the plane orthogonal to `support_normal`. The
/// third box axis points along the support normal (never against it), the
/// major in-plane axis has its sign canonicalized by the third moment of the
/// projected coordinates (ties resolved toward world +x, then +y, +z), and
/// the minor axis completes a right-handed frame. If the in-plane projection
/// is collinear the fit falls back to the axis-aligned box and `*degenerate`
/// (when given) is set.
OrientedBox oriented_box_pca(const PointCloud& cloud, const Vec3& support_normal,
                             bool* degenerate = nullptr);

/// World -> object frame {O}. The origin is the box vertex with
/// lexicographically smallest local coordinates; axes are the box axes.
RigidTransform object_frame_from_box(const OrientedBox& b);

/// Regular res_u x res_v grid of antipodal pairs over face `f_i`, each
/// contact inset from the face boundary by 5% of the face dimension, paired
/// with its orthogonal projection on the opposite face. Row-major, u fastest.
std::vector<AntipodalPair> sample_antipodal_grid(const OrientedBox& b, const Face& f_i,
                                                 const Face& f_j, int res_u, int res_v);

/// In-plane axis indices (u, v) of a face: the two non-normal box axes in
/// increasing index order.
std::pair<int, int> face_plane_axes(const Face& f);

/// Grid inset: contacts stay away from face edges by this fraction of the
/// face dimension.
inline constexpr double kGridInsetFraction = 0.05;

}  // namespace screwgrasp
