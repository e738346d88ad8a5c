#include "screwgrasp/evaluation.hpp"

#include "screwgrasp/io.hpp"
#include "screwgrasp/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace screwgrasp {

ExactField compute_region_exact(const OrientedBox& b, const Screw& s, const Face& f_i,
                                const Face& f_j, int res_u, int res_v,
                                const std::vector<ContactSpec>& env, const FrictionModel& fm,
                                double mass, const Vec3& com, const Vec3& gravity,
                                double f_normal_max, int jobs) {
    ExactField out;
    const auto pairs = sample_antipodal_grid(b, f_i, f_j, res_u, res_v);
    out.eta_raw.resize(static_cast<Eigen::Index>(pairs.size()));
    std::vector<int> infeasible(pairs.size(), 0);
    std::vector<int> partial(pairs.size(), 0);

    parallel_for(pairs.size(), jobs, [&](std::size_t i) {
        try {
            const GraspMetricResult r =
                grasp_metric(pairs[i], s, env, fm, mass, com, gravity, f_normal_max);
            out.eta_raw(static_cast<Eigen::Index>(i)) = r.eta_mean;
            if (r.n_feasible < r.n_draws) partial[i] = 1;
        } catch (const NoFeasibleGrasp&) {
            out.eta_raw(static_cast<Eigen::Index>(i)) = 0.0;
            infeasible[i] = 1;
        }
    });
    out.stats.n_samples = static_cast<int>(pairs.size());
    out.stats.n_infeasible = std::accumulate(infeasible.begin(), infeasible.end(), 0);
    out.stats.n_partial_draws = std::accumulate(partial.begin(), partial.end(), 0);

    const double lo = out.eta_raw.minCoeff();
    const double hi = out.eta_raw.maxCoeff();
    Eigen::VectorXd normalized(out.eta_raw.size());
    if (hi - lo > 0.0) {
        normalized = (out.eta_raw.array() - lo) / (hi - lo);
    } else {
        normalized.setConstant(0.5);
    }

    // Same structure as the surrogate field; only step 5 differs.
    const VertexScorer scorer = [&normalized](const std::vector<AntipodalPair>&,
                                              const Screw&) { return normalized; };
    out.field = build_box_field_scored(b, s, f_i, f_j, res_u, res_v, scorer);
    return out;
}

std::vector<int> top_indices(const Eigen::VectorXd& scores, int count) {
    std::vector<int> idx(static_cast<std::size_t>(scores.size()));
    std::iota(idx.begin(), idx.end(), 0);
    const int n = std::min<int>(count, static_cast<int>(scores.size()));
    std::partial_sort(idx.begin(), idx.begin() + n, idx.end(), [&](int a, int b) {
        if (scores(a) != scores(b)) return scores(a) > scores(b);
        return a < b;
    });
    idx.resize(static_cast<std::size_t>(n));
    return idx;
}

std::optional<double> precision_at_threshold(const BoxMetricField& predicted,
                                             const BoxMetricField& exact, double y_th) {
    if (predicted.res_u != exact.res_u || predicted.res_v != exact.res_v ||
        predicted.face_i.axis != exact.face_i.axis) {
        throw std::invalid_argument("field grids do not match");
    }
    int predicted_pos = 0;
    int true_pos = 0;
    for (Eigen::Index i = 0; i < predicted.vertex_y.size(); ++i) {
        if (predicted.vertex_y(i) >= y_th) {
            ++predicted_pos;
            if (exact.vertex_y(i) >= y_th) ++true_pos;
        }
    }
    if (predicted_pos == 0) return std::nullopt;
    return static_cast<double>(true_pos) / predicted_pos;
}

TrialReport fge(const PointCloud& cloud, const Screw& screw, const MlpModel& model,
                const FgeConfig& cfg, const std::vector<ContactSpec>& env,
                const RunConfig& run, bool use_env, int jobs) {
    if (cfg.top_m <= cfg.top_k || cfg.top_k < 1) {
        throw std::invalid_argument("FGE needs m > k >= 1");
    }
    TrialReport report;
    const auto t0 = std::chrono::steady_clock::now();

    RegionParams params = run.region_params();
    const RegionResult region = compute_region(cloud, screw, model, params);

    // Everything below runs in the object frame.
    std::vector<ContactSpec> env_obj;
    for (ContactSpec e : env) {
        e.position = region.world_to_object.apply(e.position);
        e.inward_normal = region.world_to_object.apply_dir(e.inward_normal);
        env_obj.push_back(e);
    }
    const double mass = use_env ? run.mass : 0.0;
    const Vec3 gravity = region.world_to_object.apply_dir(run.gravity);
    const Vec3 com = region.box.center;

    FrictionModel fm = run.friction;
    const ExactField exact = compute_region_exact(
        region.box, region.object_screw, region.field.face_i, region.field.face_j, run.res_u,
        run.res_v, use_env ? env_obj : std::vector<ContactSpec>{}, fm, mass, com, gravity,
        run.f_normal_max, jobs);

    const auto picks_a = top_indices(region.field.vertex_rank, cfg.top_k);
    const auto picks_c = top_indices(exact.field.vertex_y, cfg.top_m);

    std::vector<int> joint = picks_a;
    joint.insert(joint.end(), picks_c.begin(), picks_c.end());
    std::sort(joint.begin(), joint.end());
    joint.erase(std::unique(joint.begin(), joint.end()), joint.end());

    double lo = 1e300, hi = -1e300;
    for (int idx : joint) {
        const double eta = exact.eta_raw(idx);
        report.eta_exact.push_back(eta);
        lo = std::min(lo, eta);
        hi = std::max(hi, eta);
    }
    double y_max = 0.5;  // zero-range convention
    if (hi - lo > 0.0) {
        y_max = 0.0;
        for (int idx : picks_a) {
            y_max = std::max(y_max, (exact.eta_raw(idx) - lo) / (hi - lo));
        }
    }
    report.y_max = y_max;
    report.screw = region.object_screw;
    report.precision = precision_at_threshold(region.field, exact.field, run.y_th);
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

namespace {

Screw sample_trial_screw(const OrientedBox& box, const Vec3& gravity,
                         const GripperGeometry& gripper, std::mt19937& rng, bool& env_on,
                         std::vector<ContactSpec>* env, double mu_env) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    env->clear();
    if (u01(rng) < 0.5) {
        // Pivot about a bottom edge of the box (gravity side down). Prefer
        // edges whose perpendicular faces fit the gripper, so the task is
        // executable the way the trainer grasps cuboids.
        env_on = true;
        const double hx = box.half_extents.x();
        const double hy = box.half_extents.y();
        const double hz = box.half_extents.z();
        std::vector<int> edges;
        if (2.0 * hx <= gripper.max_opening) {
            edges.push_back(0);
            edges.push_back(2);
        }
        if (2.0 * hy <= gripper.max_opening) {
            edges.push_back(1);
            edges.push_back(3);
        }
        if (edges.empty()) edges = {0, 1, 2, 3};
        const int edge = edges[static_cast<std::size_t>(u01(rng) * edges.size()) %
                               edges.size()];
        Vec3 a_local, b_local;
        switch (edge) {
            case 0: a_local = {-hx, -hy, -hz}; b_local = {hx, -hy, -hz}; break;
            case 1: a_local = {hx, -hy, -hz}; b_local = {hx, hy, -hz}; break;
            case 2: a_local = {hx, hy, -hz}; b_local = {-hx, hy, -hz}; break;
            default: a_local = {-hx, hy, -hz}; b_local = {-hx, -hy, -hz}; break;
        }
        const Vec3 a = box.to_world(a_local);
        const Vec3 b = box.to_world(b_local);
        Vec3 dir = b - a;
        const Vec3 p = 0.5 * (a + b);
        // Orient so a positive moment lifts the box over the edge.
        const Vec3 grav_moment = (box.center - p).cross(gravity);
        if (dir.dot(grav_moment) > 0.0) dir = -dir;
        for (double t : {0.25, 0.75}) {
            ContactSpec e;
            e.position = (1.0 - t) * a + t * b;
            e.inward_normal = -gravity.normalized();
            e.mu = mu_env;
            e.f_normal_max = kEnvForceCap;
            e.kind = ContactKind::environment;
            env->push_back(e);
        }
        return screw_from_point_dir(p, dir);
    }
    // Free-space axis through the box interior, parallel to a box axis.
    // Candidates are the tasks the gripper can execute: rotation about the
    // support axis, or about a horizontal axis the gripper can close along.
    env_on = false;
    std::vector<int> axes = {2};
    for (int a : {0, 1}) {
        if (2.0 * box.half_extents[a] <= gripper.max_opening) axes.push_back(a);
    }
    const int axis = axes[static_cast<std::size_t>(u01(rng) * axes.size()) % axes.size()];
    Vec3 offset = Vec3::Zero();
    for (int k = 0; k < 3; ++k) {
        if (k == axis) continue;
        offset[k] = (u01(rng) - 0.5) * box.half_extents[k];
    }
    const Vec3 p = box.to_world(offset);
    return screw_from_point_dir(p, box.axis(axis));
}

}  // namespace

TrialsResult run_trials(const std::vector<std::filesystem::path>& meshes,
                        const MlpModel& model, const RunConfig& run,
                        const TrialsConfig& cfg) {
    if (meshes.empty()) throw std::invalid_argument("no objects given");
    TrialsResult result;
    result.histogram.assign(20, 0);

    for (std::size_t obj = 0; obj < meshes.size(); ++obj) {
        const TriMesh mesh = load_mesh(meshes[obj]);
        const std::string object_id = meshes[obj].stem().string();

        // Deterministic per-object stream so object order never leaks noise
        // across objects.
        std::mt19937 rng(cfg.master_seed + 1000003u * static_cast<unsigned>(obj));
        std::uniform_real_distribution<double> u01(0.0, 1.0);

        Vec3 lo = mesh.vertices.front(), hi = mesh.vertices.front();
        for (const Vec3& v : mesh.vertices) {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
        const Vec3 center = 0.5 * (lo + hi);
        const double diag = (hi - lo).norm();

        for (int t = 0; t < cfg.screws_per_object; ++t) {
            TrialReport report;
            report.object_id = object_id;
            report.trial = t;
            try {
                const double angle = 2.0 * M_PI * u01(rng);
                const Vec3 eye = center + 2.2 * diag * Vec3(std::cos(angle), std::sin(angle),
                                                            0.55);
                VirtualCamera cam = VirtualCamera::look_at(eye, center);
                cam.width = cfg.scan_width;
                cam.height = cfg.scan_height;
                cam.depth_noise_std = cfg.scan_noise;
                PointCloud cloud = render_partial_cloud(
                    mesh, cam, cfg.master_seed + 7919u * static_cast<unsigned>(obj) + t);
                cloud = estimate_normals(cloud, 16, eye);

                const OrientedBox box = oriented_box_pca(cloud, Vec3::UnitZ());
                bool env_on = false;
                std::vector<ContactSpec> env;
                const Screw screw =
                    sample_trial_screw(box, run.gravity, run.gripper, rng, env_on, &env,
                                       run.friction.mu_env);

                FgeConfig fge_cfg = cfg.fge;
                fge_cfg.seed = cfg.master_seed;
                report = fge(cloud, screw, model, fge_cfg, env, run, env_on, cfg.jobs);
                report.object_id = object_id;
                report.trial = t;
            } catch (const std::exception& e) {
                report.failed = true;
                report.failure = e.what();
            }
            result.reports.push_back(std::move(report));
        }
    }

    std::vector<double> ys;
    for (const TrialReport& r : result.reports) {
        if (r.failed) continue;
        ys.push_back(r.y_max);
        const int bin = std::min(19, static_cast<int>(r.y_max / 0.05));
        result.histogram[static_cast<std::size_t>(bin)]++;
    }
    if (!ys.empty()) {
        std::vector<double> sorted = ys;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        result.median_y_max =
            n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        result.fraction_ge_09 =
            static_cast<double>(std::count_if(ys.begin(), ys.end(),
                                              [](double y) { return y >= 0.9; })) /
            static_cast<double>(n);
    }

    // Per-object means in input order.
    for (const auto& path : meshes) {
        const std::string id = path.stem().string();
        if (std::find_if(result.per_object_mean.begin(), result.per_object_mean.end(),
                         [&](const auto& p) { return p.first == id; }) !=
            result.per_object_mean.end()) {
            continue;
        }
        double sum = 0.0;
        int n = 0;
        for (const TrialReport& r : result.reports) {
            if (r.object_id == id && !r.failed) {
                sum += r.y_max;
                ++n;
            }
        }
        result.per_object_mean.emplace_back(id, n > 0 ? sum / n : 0.0);
    }
    return result;
}

void write_trials_csv(const TrialsResult& r, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string());
    out << "object,trial,px,py,pz,lx,ly,lz,y_max,precision,status\n";
    char buf[512];
    for (const TrialReport& rep : r.reports) {
        const Vec3 p = rep.screw.anchor.value_or(Vec3::Zero());
        std::snprintf(buf, sizeof(buf), "%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,",
                      rep.object_id.c_str(), rep.trial, p.x(), p.y(), p.z(),
                      rep.screw.dir.x(), rep.screw.dir.y(), rep.screw.dir.z(), rep.y_max);
        out << buf;
        if (rep.precision) {
            std::snprintf(buf, sizeof(buf), "%.17g", *rep.precision);
            out << buf;
        } else {
            out << "n/a";
        }
        out << "," << (rep.failed ? rep.failure : "ok") << "\n";
    }
}

void write_histogram_csv(const TrialsResult& r, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string());
    out << "bin_lo,bin_hi,count\n";
    char buf[128];
    for (std::size_t b = 0; b < r.histogram.size(); ++b) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f,%d\n", 0.05 * b, 0.05 * (b + 1),
                      r.histogram[b]);
        out << buf;
    }
}

void write_object_table_csv(const TrialsResult& r, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string());
    out << "object,trials,mean_fge\n";
    char buf[256];
    for (const auto& [id, mean] : r.per_object_mean) {
        int n = 0;
        for (const TrialReport& rep : r.reports) {
            if (rep.object_id == id && !rep.failed) ++n;
        }
        std::snprintf(buf, sizeof(buf), "%s,%d,%.17g\n", id.c_str(), n, mean);
        out << buf;
    }
}

}  // namespace screwgrasp
