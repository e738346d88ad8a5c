#pragma once

#include "screwgrasp/geometry.hpp"

#include <array>
#include <vector>

namespace screwgrasp {

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    std::size_t size() const { return triangles.size(); }
    /// Drops zero-area triangles and validates indices.
    void cleanup();
};

/// Pinhole camera; `pose` maps camera coordinates (z forward, x right,
/// y down) into the world.
struct VirtualCamera {
    RigidTransform pose;
    int width = 160;
    int height = 120;
    double fov = 60.0 * 0.017453292519943295;  // horizontal, radians
    double depth_noise_std = 0.001;

    static VirtualCamera look_at(const Vec3& eye, const Vec3& target,
                                 const Vec3& up = Vec3::UnitZ());
};

/// Per-pixel ray cast against the mesh with a z-buffer (nearest hit only),
/// seeded Gaussian depth noise, back-projected to world points. Only
/// camera-facing surfaces appear. Throws "object not visible" on zero hits.
PointCloud render_partial_cloud(const TriMesh& mesh, const VirtualCamera& cam, unsigned seed);

/// Ray/triangle intersection; returns the ray parameter t of the nearest
/// forward hit or nullopt.
std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                         const Vec3& b, const Vec3& c);

/// k-nearest-neighbor plane fit normal per point (smallest-variance axis),
/// flipped toward the viewpoint. Brute-force neighbor search.
PointCloud estimate_normals(const PointCloud& cloud, int k, const Vec3& viewpoint);

/// Mesh primitives for demos and trials.
TriMesh make_box_mesh(const Vec3& size, const Vec3& origin = Vec3::Zero());
TriMesh make_cylinder_mesh(double radius, double height, int segments = 32,
                           const Vec3& origin = Vec3::Zero());
/// Axis-aligned handle-on-stem shape (two boxes).
TriMesh make_t_handle_mesh(double handle_len, double handle_side, double stem_len,
                           double stem_side);

}  // namespace screwgrasp
