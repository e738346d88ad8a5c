#pragma once

#include "screwgrasp/geometry.hpp"
#include "screwgrasp/mlp.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace screwgrasp {

struct GripperGeometry {
    double max_opening = 0.08;      // g_w
    double finger_depth = 0.045;
    double finger_thickness = 0.01;
    double palm_clearance = 0.005;

    double reach() const { return finger_depth - palm_clearance; }
};

/// Vertex-scored antipodal grid over a face pair, with per-cell averages.
/// Vertices are row-major with u fastest; cell (cu, cv) averages its four
/// corner vertices exactly.
struct BoxMetricField {
    OrientedBox box;
    Face face_i, face_j;
    int res_u = 0, res_v = 0;
    std::vector<AntipodalPair> vertices;
    Eigen::VectorXd vertex_y;
    Eigen::VectorXd vertex_rank;  // unclamped scores for ordering only
    Eigen::VectorXd cell_y;

    int cells_u() const { return res_u - 1; }
    int cells_v() const { return res_v - 1; }
    int num_cells() const { return cells_u() * cells_v(); }
    /// Local face coordinates of grid vertex (iu, iv).
    std::pair<double, double> vertex_uv(int iu, int iv) const;
    /// Cell of a local (u, v) position; boundary points go to the lower-index
    /// cell, positions outside the grid return nullopt.
    std::optional<int> cell_at(double u, double v) const;
    /// Center of a cell as a 3D point on face i.
    Vec3 cell_center(int cell) const;
};

/// Graspable face pair: separation within the gripper opening, closing
/// direction most parallel to the screw direction (the surrogate's training
/// family); ties prefer the smaller separation, then the smaller axis index.
/// Face i is the negative face of the chosen axis. Throws "object exceeds
/// gripper opening".
std::pair<Face, Face> select_face_pair(const OrientedBox& b, const Screw& s,
                                       const GripperGeometry& g);

/// Scores one grid of antipodal pairs; interchangeable between the surrogate
/// model and the exact optimizer.
using VertexScorer =
    std::function<Eigen::VectorXd(const std::vector<AntipodalPair>&, const Screw& screw)>;

BoxMetricField build_box_field_scored(const OrientedBox& b, const Screw& s, const Face& f_i,
                                      const Face& f_j, int res_u, int res_v,
                                      const VertexScorer& scorer);

/// Algorithm step 5 with the trained surrogate: plucker12 features in the
/// object frame, batch predicted.
BoxMetricField build_box_field(const OrientedBox& b, const Screw& s, const Face& f_i,
                               const Face& f_j, int res_u, int res_v, const MlpModel& model);

struct CloudScores {
    std::vector<double> y;    // one score per point; 0 outside the grid
    std::vector<int> cell;    // containing cell per point, -1 outside
    std::vector<char> cell_occupied;  // per cell, any projected point inside
};

/// Projects every cloud point onto face i and assigns the containing cell's
/// average metric; points outside the grid footprint score zero.
CloudScores transfer_to_cloud(const BoxMetricField& field, const PointCloud& cloud);

struct GraspRegion {
    std::vector<int> indices;    // into the source cloud, input order
    std::vector<double> scores;  // y of each indexed point
    double y_th = 0.6;
};

GraspRegion threshold_region(const CloudScores& scored, double y_th);

struct GraspPose {
    Mat3 rotation;      // columns: x = closing axis, z = approach (into box)
    Vec3 translation;   // grasp center g_c
    double opening = 0.0;
    Face approach;
};

/// Approach faces orthogonal to the closing axis whose surface lies within
/// finger reach of the grasp center.
std::vector<Face> filter_approach(const Vec3& g_c, const OrientedBox& b, int closing_axis,
                                  const GripperGeometry& g);

/// One pose per (occupied qualifying cell, reachable approach): contacts at
/// the cell center and its projection on the opposite face.
std::vector<GraspPose> poses_from_grid(const BoxMetricField& field, const CloudScores& scored,
                                       const GripperGeometry& g, double y_th);

/// Seeded random region point as one contact; the other contact mirrored
/// across the box along the closing axis. Requires cloud normals.
GraspPose poses_from_point(const GraspRegion& region, const PointCloud& cloud,
                           const BoxMetricField& field, const GripperGeometry& g,
                           unsigned seed);

struct RegionParams {
    int res_u = 34;
    int res_v = 19;
    double y_th = 0.6;
    GripperGeometry gripper;
    Vec3 support_normal = Vec3::UnitZ();
};

struct RegionResult {
    RigidTransform world_to_object;
    OrientedBox box;          // in object-frame coordinates
    PointCloud object_cloud;  // input cloud expressed in {O}
    Screw object_screw;
    BoxMetricField field;
    CloudScores scored;
    GraspRegion region;
    bool pca_degenerate = false;
};

/// Whole pipeline on a world-frame cloud: box fit, object frame, face
/// selection, surrogate field, transfer, threshold. All downstream geometry
/// is canonicalized into {O}, so rigid motions of the input leave the region
/// index set unchanged.
RegionResult compute_region(const PointCloud& cloud, const Screw& screw,
                            const MlpModel& model, const RegionParams& params);

}  // namespace screwgrasp
