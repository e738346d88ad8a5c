#include "screwgrasp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace screwgrasp {

void TriMesh::cleanup() {
    std::vector<std::array<int, 3>> kept;
    kept.reserve(triangles.size());
    const int n = static_cast<int>(vertices.size());
    for (const auto& t : triangles) {
        if (t[0] < 0 || t[1] < 0 || t[2] < 0 || t[0] >= n || t[1] >= n || t[2] >= n) {
            throw std::runtime_error("triangle index out of range");
        }
        const Vec3& a = vertices[static_cast<std::size_t>(t[0])];
        const Vec3& b = vertices[static_cast<std::size_t>(t[1])];
        const Vec3& c = vertices[static_cast<std::size_t>(t[2])];
        if ((b - a).cross(c - a).norm() > 1e-14) kept.push_back(t);
    }
    triangles = std::move(kept);
}

VirtualCamera VirtualCamera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
    const Vec3 z = (target - eye).normalized();
    Vec3 x = z.cross(up);
    if (x.norm() < 1e-9) x = z.cross(Vec3::UnitY());
    x.normalize();
    const Vec3 y = z.cross(x);
    VirtualCamera cam;
    cam.pose.rotation.col(0) = x;
    cam.pose.rotation.col(1) = y;
    cam.pose.rotation.col(2) = z;
    cam.pose.translation = eye;
    return cam;
}

std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                         const Vec3& b, const Vec3& c) {
    // Moller-Trumbore.
    constexpr double eps = 1e-12;
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 pvec = dir.cross(e2);
    const double det = e1.dot(pvec);
    if (std::abs(det) < eps) return std::nullopt;
    const double inv_det = 1.0 / det;
    const Vec3 tvec = origin - a;
    const double u = tvec.dot(pvec) * inv_det;
    if (u < -1e-12 || u > 1.0 + 1e-12) return std::nullopt;
    const Vec3 qvec = tvec.cross(e1);
    const double v = dir.dot(qvec) * inv_det;
    if (v < -1e-12 || u + v > 1.0 + 1e-12) return std::nullopt;
    const double t = e2.dot(qvec) * inv_det;
    if (t <= eps) return std::nullopt;
    return t;
}

PointCloud render_partial_cloud(const TriMesh& mesh, const VirtualCamera& cam, unsigned seed) {
    if (mesh.triangles.empty()) throw std::invalid_argument("empty mesh");
    if (cam.width < 8 || cam.height < 8) throw std::invalid_argument("camera too small");

    std::mt19937 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    const double tan_half_h = std::tan(0.5 * cam.fov);
    const double tan_half_v = tan_half_h * cam.height / cam.width;

    PointCloud cloud;
    cloud.frame_tag = "world";
    for (int py = 0; py < cam.height; ++py) {
        for (int px = 0; px < cam.width; ++px) {
            const double xn = (2.0 * (px + 0.5) / cam.width - 1.0) * tan_half_h;
            const double yn = (2.0 * (py + 0.5) / cam.height - 1.0) * tan_half_v;
            const Vec3 dir = cam.pose.apply_dir(Vec3(xn, yn, 1.0).normalized());

            double best_t = 1e300;
            for (const auto& tri : mesh.triangles) {
                const auto hit = intersect_triangle(
                    cam.pose.translation, dir, mesh.vertices[static_cast<std::size_t>(tri[0])],
                    mesh.vertices[static_cast<std::size_t>(tri[1])],
                    mesh.vertices[static_cast<std::size_t>(tri[2])]);
                if (hit && *hit < best_t) best_t = *hit;
            }
            if (best_t < 1e300) {
                double t = best_t;
                if (cam.depth_noise_std > 0.0) t += cam.depth_noise_std * noise(rng);
                cloud.points.push_back(cam.pose.translation + t * dir);
            }
        }
    }
    if (cloud.points.empty()) throw std::runtime_error("object not visible");
    return cloud;
}

PointCloud estimate_normals(const PointCloud& cloud, int k, const Vec3& viewpoint) {
    const int n = static_cast<int>(cloud.points.size());
    if (k < 3) throw std::invalid_argument("need k >= 3 neighbors");
    if (n < k) throw std::invalid_argument("fewer points than neighbors");

    PointCloud out = cloud;
    out.normals.resize(cloud.points.size());

    std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Vec3& p = cloud.points[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j) {
            dist[static_cast<std::size_t>(j)] = {
                (cloud.points[static_cast<std::size_t>(j)] - p).squaredNorm(), j};
        }
        std::nth_element(dist.begin(), dist.begin() + k, dist.end());

        Vec3 centroid = Vec3::Zero();
        for (int m = 0; m < k; ++m) {
            centroid += cloud.points[static_cast<std::size_t>(dist[m].second)];
        }
        centroid /= k;
        Mat3 cov = Mat3::Zero();
        for (int m = 0; m < k; ++m) {
            const Vec3 d = cloud.points[static_cast<std::size_t>(dist[m].second)] - centroid;
            cov += d * d.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
        Vec3 normal = es.eigenvectors().col(0);  // smallest-variance direction
        if ((viewpoint - p).dot(normal) < 0.0) normal = -normal;
        out.normals[static_cast<std::size_t>(i)] = normal;
    }
    return out;
}

TriMesh make_box_mesh(const Vec3& size, const Vec3& origin) {
    TriMesh m;
    for (int i = 0; i < 8; ++i) {
        m.vertices.push_back(origin + Vec3(((i >> 0) & 1) * size.x(), ((i >> 1) & 1) * size.y(),
                                           ((i >> 2) & 1) * size.z()));
    }
    // Two triangles per face, outward winding.
    const int faces[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                             {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
    for (const auto& f : faces) {
        m.triangles.push_back({f[0], f[1], f[2]});
        m.triangles.push_back({f[0], f[2], f[3]});
    }
    m.cleanup();
    return m;
}

TriMesh make_cylinder_mesh(double radius, double height, int segments, const Vec3& origin) {
    TriMesh m;
    const int top0 = 2 * segments;      // top center
    const int bot0 = 2 * segments + 1;  // bottom center
    for (int s = 0; s < segments; ++s) {
        const double th = 2.0 * M_PI * s / segments;
        const Vec3 rim(radius * std::cos(th), radius * std::sin(th), 0.0);
        m.vertices.push_back(origin + rim);                         // bottom ring
        m.vertices.push_back(origin + rim + Vec3(0, 0, height));    // top ring
    }
    m.vertices.push_back(origin + Vec3(0, 0, height));
    m.vertices.push_back(origin);
    for (int s = 0; s < segments; ++s) {
        const int b0 = 2 * s;
        const int t0 = 2 * s + 1;
        const int b1 = 2 * ((s + 1) % segments);
        const int t1 = 2 * ((s + 1) % segments) + 1;
        m.triangles.push_back({b0, b1, t1});
        m.triangles.push_back({b0, t1, t0});
        m.triangles.push_back({t0, t1, top0});
        m.triangles.push_back({b1, b0, bot0});
    }
    m.cleanup();
    return m;
}

TriMesh make_t_handle_mesh(double handle_len, double handle_side, double stem_len,
                           double stem_side) {
    // Handle bar on top of a vertical stem, both axis-aligned boxes.
    TriMesh stem = make_box_mesh(Vec3(stem_side, stem_side, stem_len),
                                 Vec3(-0.5 * stem_side, -0.5 * stem_side, 0.0));
    TriMesh handle = make_box_mesh(Vec3(handle_len, handle_side, handle_side),
                                   Vec3(-0.5 * handle_len, -0.5 * handle_side, stem_len));
    const int base = static_cast<int>(stem.vertices.size());
    stem.vertices.insert(stem.vertices.end(), handle.vertices.begin(), handle.vertices.end());
    for (const auto& t : handle.triangles) {
        stem.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
    }
    return stem;
}

}  // namespace screwgrasp
