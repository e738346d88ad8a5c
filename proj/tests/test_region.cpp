#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "screwgrasp/region.hpp"

#include <numbers>
#include <random>
#include <set>

using namespace screwgrasp;

namespace {

OrientedBox box_with_extents(double hx, double hy, double hz) {
    OrientedBox b;
    b.half_extents = Vec3(hx, hy, hz);
    return b;
}

VertexScorer constant_scorer(double value) {
    return [value](const std::vector<AntipodalPair>& pairs, const Screw&) {
        return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(pairs.size()), value);
    };
}

PointCloud noisy_box_cloud(const Vec3& dims, int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, 5e-4);
    PointCloud c;
    for (int i = 0; i < n; ++i) {
        // Surface-ish samples over two visible faces plus the top.
        const int face = i % 3;
        Vec3 p(dims.x() * u(rng), dims.y() * u(rng), dims.z() * u(rng));
        if (face == 0) p.y() = 0.0;
        if (face == 1) p.x() = dims.x();
        if (face == 2) p.z() = dims.z();
        p += Vec3(jitter(rng), jitter(rng), jitter(rng));
        c.points.push_back(p);
    }
    return c;
}

}  // namespace

TEST_CASE("select_face_pair picks the only fitting pair") {
    const OrientedBox b = box_with_extents(0.1, 0.03, 0.05);  // extents 0.2/0.06/0.1
    GripperGeometry g;
    g.max_opening = 0.08;
    const Screw s = screw_from_point_dir(Vec3::Zero(), Vec3::UnitX());
    const auto [fi, fj] = select_face_pair(b, s, g);
    CHECK(fi.axis == 1);
    CHECK(fi.sign == -1);
    CHECK(fj.axis == 1);
    CHECK(fj.sign == 1);
}

TEST_CASE("select_face_pair prefers closing along the screw") {
    const OrientedBox b = box_with_extents(0.025, 0.025, 0.025);
    GripperGeometry g;
    const Screw s = screw_from_point_dir(Vec3::Zero(), Vec3::UnitZ());
    const auto [fi, fj] = select_face_pair(b, s, g);
    CHECK(fi.axis == 2);  // most parallel to the screw

    // Perfect tie in alignment: the smaller separation wins.
    const OrientedBox slab = box_with_extents(0.03, 0.02, 0.025);
    const Screw diag = screw_from_point_dir(Vec3::Zero(), Vec3(1, 0, 1).normalized());
    const auto [ft, _] = select_face_pair(slab, diag, g);
    CHECK(ft.axis == 2);
}

TEST_CASE("select_face_pair rejects an oversized object") {
    const OrientedBox b = box_with_extents(0.1, 0.1, 0.1);
    GripperGeometry g;
    g.max_opening = 0.08;
    const Screw s = screw_from_point_dir(Vec3::Zero(), Vec3::UnitZ());
    CHECK_THROWS_WITH_AS(select_face_pair(b, s, g), "object exceeds gripper opening",
                         std::runtime_error);
}

TEST_CASE("field shape and constant-score averaging") {
    const OrientedBox b = box_with_extents(0.1, 0.03, 0.05);
    const Screw s = screw_from_point_dir(Vec3::Zero(), Vec3::UnitX());
    const BoxMetricField f =
        build_box_field_scored(b, s, {1, -1}, {1, 1}, 34, 19, constant_scorer(0.7));
    CHECK(f.vertices.size() == 646);
    CHECK(f.cell_y.size() == 33 * 18);
    for (Eigen::Index i = 0; i < f.cell_y.size(); ++i) {
        CHECK(f.cell_y(i) == doctest::Approx(0.7));
    }
}

TEST_CASE("cell averages are exact corner means") {
    const OrientedBox b = box_with_extents(0.1, 0.03, 0.05);
    const Screw s = screw_from_point_dir(Vec3::Zero(), Vec3::UnitX());
    const VertexScorer ramp = [](const std::vector<AntipodalPair>& pairs, const Screw&) {
        Eigen::VectorXd y(static_cast<Eigen::Index>(pairs.size()));
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            y(static_cast<Eigen::Index>(i)) = static_cast<double>(i);
        }
        return y;
    };
    const BoxMetricField f = build_box_field_scored(b, s, {1, -1}, {1, 1}, 4, 3, ramp);
    // Cell (0,0) corners are vertices 0, 1, 4, 5.
    CHECK(f.cell_y(0) == doctest::Approx(0.25 * (0 + 1 + 4 + 5)));
}

TEST_CASE("transfer assigns the containing cell or zero") {
    const OrientedBox b = box_with_extents(0.1, 0.03, 0.05);
    const Screw s = screw_from_point_dir(Vec3::Zero(), Vec3::UnitX());
    const VertexScorer ramp = [](const std::vector<AntipodalPair>& pairs, const Screw&) {
        Eigen::VectorXd y(static_cast<Eigen::Index>(pairs.size()));
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            y(static_cast<Eigen::Index>(i)) = static_cast<double>(i % 7) / 7.0;
        }
        return y;
    };
    const BoxMetricField f = build_box_field_scored(b, s, {1, -1}, {1, 1}, 6, 5, ramp);

    // Synthetic cloud at every cell center: each point gets its own cell.
    PointCloud centers;
    for (int c = 0; c < f.num_cells(); ++c) centers.points.push_back(f.cell_center(c));
    const CloudScores scored = transfer_to_cloud(f, centers);
    REQUIRE(scored.y.size() == centers.points.size());
    for (int c = 0; c < f.num_cells(); ++c) {
        CHECK(scored.cell[static_cast<std::size_t>(c)] == c);
        CHECK(scored.y[static_cast<std::size_t>(c)] == doctest::Approx(f.cell_y(c)));
        CHECK(scored.cell_occupied[static_cast<std::size_t>(c)] == 1);
    }

    // A point outside the face footprint scores zero.
    PointCloud outside;
    outside.points.push_back(b.to_world(Vec3(0.0, 0.0, 10.0)));
    const CloudScores out = transfer_to_cloud(f, outside);
    CHECK(out.y[0] == 0.0);
    CHECK(out.cell[0] == -1);
}

TEST_CASE("threshold_region examples") {
    CloudScores scored;
    scored.y = {0.5, 0.6, 0.9};
    scored.cell = {0, 1, 2};
    scored.cell_occupied = {1, 1, 1};

    const GraspRegion r = threshold_region(scored, 0.6);
    CHECK(r.indices == std::vector<int>{1, 2});

    CHECK(threshold_region(scored, 0.0).indices.size() == 3);
    CHECK(threshold_region(scored, 1.0).indices.empty());
    CHECK_THROWS_AS(threshold_region(scored, 1.1), std::invalid_argument);
}

TEST_CASE("filter_approach keeps faces within finger reach") {
    const OrientedBox deep = box_with_extents(0.2, 0.03, 0.2);
    GripperGeometry g;  // reach = 0.04
    // Grasp center at the box center of a deep box: nothing reachable.
    CHECK(filter_approach(deep.center, deep, 1, g).empty());

    // Near the +z face: that approach is retained, and is orthogonal to the
    // closing axis.
    const Vec3 near_top = deep.to_world(Vec3(0.0, 0.0, 0.19));
    const auto kept = filter_approach(near_top, deep, 1, g);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].axis == 2);
    CHECK(kept[0].sign == 1);
}

TEST_CASE("poses_from_grid emits one pose per qualifying cell and approach") {
    const OrientedBox b = box_with_extents(0.03, 0.03, 0.02);
    const Screw s = screw_from_point_dir(Vec3::Zero(), Vec3::UnitZ());
    const BoxMetricField f =
        build_box_field_scored(b, s, {0, -1}, {0, 1}, 3, 3, constant_scorer(0.8));

    CloudScores scored;
    scored.y.assign(1, 0.8);
    scored.cell.assign(1, 0);
    scored.cell_occupied.assign(static_cast<std::size_t>(f.num_cells()), 0);
    scored.cell_occupied[0] = 1;  // one occupied cell

    GripperGeometry g;
    const auto poses = poses_from_grid(f, scored, g, 0.6);
    REQUIRE(!poses.empty());
    for (const GraspPose& p : poses) {
        CHECK(p.opening == doctest::Approx(0.06));
        CHECK(p.opening <= g.max_opening);
        CHECK(p.approach.axis != 0);
        CHECK((p.rotation.transpose() * p.rotation).isIdentity(1e-12));
        CHECK(p.rotation.determinant() == doctest::Approx(1.0));
    }
    // Pose count is bounded by 4 approaches per qualifying cell.
    CHECK(poses.size() <= 4u);

    const auto none = poses_from_grid(f, scored, g, 0.95);
    CHECK(none.empty());
}

TEST_CASE("poses_from_point is seeded and stays in the region") {
    const OrientedBox b = box_with_extents(0.03, 0.03, 0.02);
    const Screw s = screw_from_point_dir(Vec3::Zero(), Vec3::UnitZ());
    const BoxMetricField f =
        build_box_field_scored(b, s, {0, -1}, {0, 1}, 3, 3, constant_scorer(0.8));

    PointCloud cloud;
    cloud.points = {b.to_world(Vec3(-0.03, 0.0, 0.0)), b.to_world(Vec3(-0.03, 0.01, 0.0))};
    cloud.normals = {-Vec3::UnitX(), -Vec3::UnitX()};

    GraspRegion region;
    region.indices = {0, 1};
    region.scores = {0.8, 0.8};

    GripperGeometry g;
    const GraspPose p1 = poses_from_point(region, cloud, f, g, 3);
    const GraspPose p2 = poses_from_point(region, cloud, f, g, 3);
    CHECK(p1.translation == p2.translation);
    CHECK(p1.opening <= g.max_opening);

    GraspRegion single;
    single.indices = {1};
    single.scores = {0.8};
    const GraspPose p3 = poses_from_point(single, cloud, f, g, 99);
    CHECK(p3.translation.y() == doctest::Approx(cloud.points[1].y()));

    CHECK_THROWS_AS(poses_from_point(GraspRegion{}, cloud, f, g, 1), std::invalid_argument);
}

TEST_CASE("compute_region is invariant to rigid motions of the input") {
    // An untrained surrogate is fine here; the check is purely geometric.
    MlpModel model = mlp_init(12, 8, 11);
    const PointCloud cloud = noisy_box_cloud(Vec3(0.2, 0.06, 0.1), 600, 17);
    const Screw screw = screw_from_point_dir(Vec3(0.2, 0.03, 0.0), Vec3(0.0, 1.0, 0.0));

    RegionParams params;
    params.y_th = 0.0;  // fresh random model: keep the region non-empty
    const RegionResult base = compute_region(cloud, screw, model, params);
    const std::set<int> base_set(base.region.indices.begin(), base.region.indices.end());
    CHECK(base.region.indices.size() > 0);

    std::mt19937 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        RigidTransform t;
        t.rotation = Eigen::AngleAxisd(std::numbers::pi * u(rng),
                                       Vec3(u(rng), u(rng), u(rng)).normalized())
                         .toRotationMatrix();
        t.translation = Vec3(u(rng), u(rng), u(rng));

        RegionParams moved_params = params;
        moved_params.support_normal = t.apply_dir(Vec3::UnitZ());
        const RegionResult moved =
            compute_region(transform_cloud(t, cloud), transform_screw(t, screw), model,
                           moved_params);
        const std::set<int> moved_set(moved.region.indices.begin(),
                                      moved.region.indices.end());
        REQUIRE(moved_set == base_set);
    }
}

TEST_CASE("region scores respect the threshold and index bounds") {
    MlpModel model = mlp_init(12, 8, 31);
    const PointCloud cloud = noisy_box_cloud(Vec3(0.15, 0.05, 0.08), 400, 41);
    const Screw screw = screw_from_point_dir(Vec3(0.15, 0.025, 0.0), Vec3(0.0, 1.0, 0.0));
    RegionParams params;
    params.y_th = 0.3;
    const RegionResult r = compute_region(cloud, screw, model, params);
    for (std::size_t k = 0; k < r.region.indices.size(); ++k) {
        CHECK(r.region.indices[k] >= 0);
        CHECK(r.region.indices[k] < static_cast<int>(cloud.points.size()));
        CHECK(r.region.scores[k] >= params.y_th);
    }
}
