#include "screwgrasp/region.hpp"

#include "screwgrasp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace screwgrasp {

std::pair<double, double> BoxMetricField::vertex_uv(int iu, int iv) const {
    const auto [ua, va] = face_plane_axes(face_i);
    const double hu = box.half_extents[ua] * (1.0 - 2.0 * kGridInsetFraction);
    const double hv = box.half_extents[va] * (1.0 - 2.0 * kGridInsetFraction);
    return {-hu + 2.0 * hu * iu / (res_u - 1), -hv + 2.0 * hv * iv / (res_v - 1)};
}

std::optional<int> BoxMetricField::cell_at(double u, double v) const {
    const auto [ua, va] = face_plane_axes(face_i);
    const double hu = box.half_extents[ua] * (1.0 - 2.0 * kGridInsetFraction);
    const double hv = box.half_extents[va] * (1.0 - 2.0 * kGridInsetFraction);
    const double du = 2.0 * hu / cells_u();
    const double dv = 2.0 * hv / cells_v();
    const double tu = (u + hu) / du;
    const double tv = (v + hv) / dv;
    if (tu < 0.0 || tu > cells_u() || tv < 0.0 || tv > cells_v()) return std::nullopt;
    // Boundary positions belong to the lower-index cell.
    int cu = static_cast<int>(std::floor(tu));
    if (static_cast<double>(cu) == tu && cu >= 1) --cu;
    cu = std::min(cu, cells_u() - 1);
    int cv = static_cast<int>(std::floor(tv));
    if (static_cast<double>(cv) == tv && cv >= 1) --cv;
    cv = std::min(cv, cells_v() - 1);
    return cv * cells_u() + cu;
}

Vec3 BoxMetricField::cell_center(int cell) const {
    const int cu = cell % cells_u();
    const int cv = cell / cells_u();
    const auto [u0, v0] = vertex_uv(cu, cv);
    const auto [u1, v1] = vertex_uv(cu + 1, cv + 1);
    const auto [ua, va] = face_plane_axes(face_i);
    Vec3 local = Vec3::Zero();
    local[face_i.axis] = face_i.sign * box.half_extents[face_i.axis];
    local[ua] = 0.5 * (u0 + u1);
    local[va] = 0.5 * (v0 + v1);
    return box.to_world(local);
}

std::pair<Face, Face> select_face_pair(const OrientedBox& b, const Screw& s,
                                       const GripperGeometry& g) {
    // Among pairs that fit the opening, close along the direction most
    // parallel to the task screw: the metric surrogate is trained on grasps
    // whose faces are perpendicular to the screw, and queries far from that
    // family rank poorly against the exact optimizer.
    int best_axis = -1;
    double best_align = -1.0;
    double best_sep = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double sep = 2.0 * b.half_extents[a];
        if (sep > g.max_opening) continue;
        const double align = std::abs(b.axis(a).dot(s.dir));
        const bool better = align > best_align + 1e-12 ||
                            (align > best_align - 1e-12 && sep < best_sep - 1e-12);
        if (best_axis < 0 || better) {
            best_axis = a;
            best_align = align;
            best_sep = sep;
        }
    }
    if (best_axis < 0) {
        throw std::runtime_error("object exceeds gripper opening");
    }
    return {Face{best_axis, -1}, Face{best_axis, 1}};
}

BoxMetricField build_box_field_scored(const OrientedBox& b, const Screw& s, const Face& f_i,
                                      const Face& f_j, int res_u, int res_v,
                                      const VertexScorer& scorer) {
    BoxMetricField field;
    field.box = b;
    field.face_i = f_i;
    field.face_j = f_j;
    field.res_u = res_u;
    field.res_v = res_v;
    field.vertices = sample_antipodal_grid(b, f_i, f_j, res_u, res_v);
    field.vertex_y = scorer(field.vertices, s);
    if (field.vertex_y.size() != static_cast<Eigen::Index>(field.vertices.size())) {
        throw std::runtime_error("vertex scorer returned wrong count");
    }
    field.vertex_rank = field.vertex_y;

    field.cell_y.resize(field.num_cells());
    for (int cv = 0; cv < field.cells_v(); ++cv) {
        for (int cu = 0; cu < field.cells_u(); ++cu) {
            const int v00 = cv * res_u + cu;
            const int v10 = v00 + 1;
            const int v01 = v00 + res_u;
            const int v11 = v01 + 1;
            field.cell_y(cv * field.cells_u() + cu) =
                0.25 * (field.vertex_y(v00) + field.vertex_y(v10) + field.vertex_y(v01) +
                        field.vertex_y(v11));
        }
    }
    return field;
}

namespace {

// Trainer-canonical grasp frame. The metric is invariant under the box
// symmetries that keep gravity on the support axis: swapping the two
// horizontal axes (rotation about z), reflecting either horizontal axis, and
// swapping the two contact labels. Reducing every query by those symmetries
// puts it in the pose family the surrogate was trained on: closing axis +y,
// screw direction in the +y half space, anchor in the far +x half, contact i
// on the low-y face, coordinates anchored at the box corner.
struct CanonicalGraspFrame {
    Eigen::Matrix3d map = Eigen::Matrix3d::Identity();  // box-local -> canonical
    Vec3 box_center = Vec3::Zero();
    Mat3 box_rot = Mat3::Identity();
    Vec3 offset = Vec3::Zero();  // canonical half extents

    CanonicalGraspFrame(const OrientedBox& b, const Face& f_i, const Screw& s) {
        box_center = b.center;
        box_rot = b.rotation;

        Eigen::Matrix3d perm = Eigen::Matrix3d::Zero();
        if (f_i.axis == 0) {
            // Rotate about z so the closing axis lands on +y.
            perm(1, 0) = 1.0;
            perm(0, 1) = -1.0;
            perm(2, 2) = 1.0;
        } else {
            perm.setIdentity();
        }

        const Vec3 l_local = b.rotation.transpose() * s.dir;
        const Vec3 p_local =
            b.rotation.transpose() * ((s.anchor ? *s.anchor : s.closest_point()) - b.center);
        Vec3 l_p = perm * l_local;
        Vec3 p_p = perm * p_local;

        Vec3 signs = Vec3::Ones();
        if (std::abs(l_p.y()) > 1e-9) {
            signs.y() = l_p.y() >= 0.0 ? 1.0 : -1.0;
        } else if (std::abs(p_p.y()) > 1e-9) {
            signs.y() = p_p.y() >= 0.0 ? 1.0 : -1.0;
        }
        if (std::abs(p_p.x()) > 1e-9) {
            signs.x() = p_p.x() >= 0.0 ? 1.0 : -1.0;
        } else if (std::abs(l_p.x()) > 1e-9) {
            signs.x() = l_p.x() >= 0.0 ? 1.0 : -1.0;
        }
        map = signs.asDiagonal() * perm;

        const Vec3 h = b.half_extents;
        offset = (map * Vec3(h.x(), h.y(), h.z())).cwiseAbs();
    }

    Vec3 point(const Vec3& world) const {
        return map * (box_rot.transpose() * (world - box_center)) + offset;
    }
    Vec3 direction(const Vec3& world_dir) const {
        return map * (box_rot.transpose() * world_dir);
    }
};

}  // namespace

BoxMetricField build_box_field(const OrientedBox& b, const Screw& s, const Face& f_i,
                               const Face& f_j, int res_u, int res_v, const MlpModel& model) {
    const CanonicalGraspFrame frame(b, f_i, s);
    Eigen::VectorXd raw;
    const VertexScorer scorer = [&model, &frame, &raw](const std::vector<AntipodalPair>& pairs,
                                                       const Screw& screw) {
        const Vec3 anchor = screw.anchor ? *screw.anchor : screw.closest_point();
        const Screw canon =
            screw_from_point_dir(frame.point(anchor), frame.direction(screw.dir));
        Eigen::MatrixXd features(static_cast<Eigen::Index>(pairs.size()), 12);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            AntipodalPair pr;
            pr.c_i = frame.point(pairs[i].c_i);
            pr.c_j = frame.point(pairs[i].c_j);
            if (pr.c_i.y() > pr.c_j.y()) std::swap(pr.c_i, pr.c_j);
            pr.n_i = (pr.c_j - pr.c_i).normalized();
            pr.n_j = -pr.n_i;
            features.row(static_cast<Eigen::Index>(i)) =
                encode(FeatureVariant::plucker12, pr, canon).transpose();
        }
        raw = predict_batch_raw(model, features);
        return raw.cwiseMax(0.0).cwiseMin(1.0).eval();
    };
    BoxMetricField field = build_box_field_scored(b, s, f_i, f_j, res_u, res_v, scorer);
    field.vertex_rank = raw;
    return field;
}

CloudScores transfer_to_cloud(const BoxMetricField& field, const PointCloud& cloud) {
    if (cloud.points.empty()) throw std::invalid_argument("empty cloud");
    const auto [ua, va] = face_plane_axes(field.face_i);

    CloudScores out;
    out.y.resize(cloud.points.size(), 0.0);
    out.cell.resize(cloud.points.size(), -1);
    out.cell_occupied.assign(static_cast<std::size_t>(field.num_cells()), 0);
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const Vec3 local = field.box.to_local(cloud.points[i]);
        if (const auto cell = field.cell_at(local[ua], local[va])) {
            out.cell[i] = *cell;
            out.y[i] = field.cell_y(*cell);
            out.cell_occupied[static_cast<std::size_t>(*cell)] = 1;
        }
    }
    return out;
}

GraspRegion threshold_region(const CloudScores& scored, double y_th) {
    if (y_th < 0.0 || y_th > 1.0) throw std::invalid_argument("threshold outside [0, 1]");
    GraspRegion region;
    region.y_th = y_th;
    for (std::size_t i = 0; i < scored.y.size(); ++i) {
        if (scored.y[i] >= y_th) {
            region.indices.push_back(static_cast<int>(i));
            region.scores.push_back(scored.y[i]);
        }
    }
    return region;
}

std::vector<Face> filter_approach(const Vec3& g_c, const OrientedBox& b, int closing_axis,
                                  const GripperGeometry& g) {
    const Vec3 local = b.to_local(g_c);
    std::vector<Face> kept;
    for (int a = 0; a < 3; ++a) {
        if (a == closing_axis) continue;
        for (int sign : {-1, 1}) {
            const double dist = b.half_extents[a] - sign * local[a];
            if (dist <= g.reach()) kept.push_back(Face{a, sign});
        }
    }
    return kept;
}

namespace {

GraspPose make_pose(const OrientedBox& b, const Face& face_i, const Vec3& g_c,
                    double opening, const Face& approach) {
    GraspPose pose;
    const Vec3 closing = -face_outward_normal(b, face_i);  // from e_i toward e_j
    const Vec3 app = -face_outward_normal(b, approach);    // into the box
    pose.rotation.col(0) = closing;
    pose.rotation.col(2) = app;
    pose.rotation.col(1) = app.cross(closing);
    pose.translation = g_c;
    pose.opening = opening;
    pose.approach = approach;
    return pose;
}

}  // namespace

std::vector<GraspPose> poses_from_grid(const BoxMetricField& field, const CloudScores& scored,
                                       const GripperGeometry& g, double y_th) {
    const double opening = 2.0 * field.box.half_extents[field.face_i.axis];
    std::vector<GraspPose> poses;
    for (int cell = 0; cell < field.num_cells(); ++cell) {
        if (!scored.cell_occupied[static_cast<std::size_t>(cell)]) continue;
        if (field.cell_y(cell) < y_th) continue;
        const Vec3 e_i = field.cell_center(cell);
        const Vec3 e_j =
            e_i - 2.0 * field.face_i.sign * field.box.half_extents[field.face_i.axis] *
                      field.box.axis(field.face_i.axis);
        const Vec3 g_c = 0.5 * (e_i + e_j);
        for (const Face& approach : filter_approach(g_c, field.box, field.face_i.axis, g)) {
            poses.push_back(make_pose(field.box, field.face_i, g_c, opening, approach));
        }
    }
    return poses;
}

GraspPose poses_from_point(const GraspRegion& region, const PointCloud& cloud,
                           const BoxMetricField& field, const GripperGeometry& g,
                           unsigned seed) {
    if (region.indices.empty()) throw std::invalid_argument("empty region");
    if (!cloud.has_normals()) throw std::invalid_argument("cloud needs normals");

    std::mt19937 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, region.indices.size() - 1);
    const int idx = region.indices[pick(rng)];

    const int a = field.face_i.axis;
    const Vec3 axis = field.box.axis(a);
    Vec3 local = field.box.to_local(cloud.points[static_cast<std::size_t>(idx)]);
    // Snap the contact normal to the closing axis to find the opposite face.
    const double side = cloud.normals[static_cast<std::size_t>(idx)].dot(axis) >= 0.0
                            ? 1.0
                            : -1.0;
    Vec3 e_j_local = local;
    e_j_local[a] = -side * field.box.half_extents[a];
    const Vec3 e_i = cloud.points[static_cast<std::size_t>(idx)];
    const Vec3 e_j = field.box.to_world(e_j_local);
    const Vec3 g_c = 0.5 * (e_i + e_j);

    const auto approaches = filter_approach(g_c, field.box, a, g);
    if (approaches.empty()) throw std::runtime_error("no reachable approach");

    // Closing runs from e_i toward e_j.
    Face face_i{a, side >= 0.0 ? 1 : -1};
    GraspPose pose = make_pose(field.box, face_i, g_c, (e_j - e_i).norm(), approaches.front());
    return pose;
}

RegionResult compute_region(const PointCloud& cloud, const Screw& screw,
                            const MlpModel& model, const RegionParams& params) {
    RegionResult r;
    const OrientedBox world_box =
        oriented_box_pca(cloud, params.support_normal, &r.pca_degenerate);
    r.world_to_object = object_frame_from_box(world_box);
    r.object_cloud = transform_cloud(r.world_to_object, cloud);
    r.object_cloud.frame_tag = "object";
    r.object_screw = transform_screw(r.world_to_object, screw);

    r.box.center = r.world_to_object.apply(world_box.center);
    r.box.rotation = Mat3::Identity();  // object frame axes are the box axes
    r.box.half_extents = world_box.half_extents;

    const auto [f_i, f_j] = select_face_pair(r.box, r.object_screw, params.gripper);
    r.field = build_box_field(r.box, r.object_screw, f_i, f_j, params.res_u, params.res_v,
                              model);
    r.scored = transfer_to_cloud(r.field, r.object_cloud);
    r.region = threshold_region(r.scored, params.y_th);
    return r;
}

}  // namespace screwgrasp
