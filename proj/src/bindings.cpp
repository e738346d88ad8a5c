#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "screwgrasp/config.hpp"
#include "screwgrasp/dataset.hpp"
#include "screwgrasp/evaluation.hpp"
#include "screwgrasp/io.hpp"
#include "screwgrasp/metric.hpp"
#include "screwgrasp/region.hpp"
#include "screwgrasp/synthetic.hpp"

namespace py = pybind11;
using namespace py::literals;
using namespace screwgrasp;

namespace {

PointCloud cloud_from_array(const Eigen::MatrixXd& points,
                            const std::optional<Eigen::MatrixXd>& normals = std::nullopt) {
    if (points.cols() != 3) throw std::invalid_argument("points must be (N, 3)");
    PointCloud c;
    c.points.reserve(static_cast<std::size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        c.points.emplace_back(points.row(i).transpose());
    }
    if (normals) {
        if (normals->rows() != points.rows() || normals->cols() != 3) {
            throw std::invalid_argument("normals must match points");
        }
        for (Eigen::Index i = 0; i < normals->rows(); ++i) {
            c.normals.emplace_back(normals->row(i).transpose());
        }
    }
    return c;
}

Eigen::MatrixXd cloud_to_array(const PointCloud& c) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(c.points.size()), 3);
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        m.row(static_cast<Eigen::Index>(i)) = c.points[i].transpose();
    }
    return m;
}

Screw screw_from_6(const Eigen::VectorXd& s) {
    if (s.size() != 6) throw std::invalid_argument("screw must be (px,py,pz,lx,ly,lz)");
    return screw_from_point_dir(s.head<3>(), s.tail<3>());
}

std::vector<ContactSpec> env_from_array(const std::optional<Eigen::MatrixXd>& env,
                                        double mu_env) {
    std::vector<ContactSpec> out;
    if (!env) return out;
    if (env->cols() != 3) throw std::invalid_argument("env must be (K, 3)");
    for (Eigen::Index i = 0; i < env->rows(); ++i) {
        ContactSpec c;
        c.position = env->row(i).transpose();
        c.inward_normal = Vec3::UnitZ();
        c.mu = mu_env;
        c.f_normal_max = kEnvForceCap;
        c.kind = ContactKind::environment;
        out.push_back(c);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Task-oriented antipodal grasp synthesis: SOCP grasp metric, "
              "surrogate model, and grasping-region pipeline";

    py::class_<MlpModel>(m, "Model")
        .def_static(
            "init",
            [](int input_dim, int hidden_width, unsigned seed) {
                return mlp_init(input_dim, hidden_width, seed);
            },
            "input_dim"_a = 12, "hidden_width"_a = 256, "seed"_a = 7)
        .def_static("load", &load_model, "path"_a)
        .def("save", [](const MlpModel& model, const std::filesystem::path& p) {
            save_model(model, p);
        }, "path"_a)
        .def("predict",
             [](const MlpModel& model, const Eigen::MatrixXd& x) {
                 return predict_batch(model, x);
             },
             "features"_a, "Eval-mode predictions in [0, 1], one per row.")
        .def("train",
             [](MlpModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                double lr, int epochs, int batch_size, unsigned seed) {
                 TrainConfig cfg;
                 cfg.lr = lr;
                 cfg.epochs = epochs;
                 cfg.batch_size = batch_size;
                 cfg.seed = seed;
                 return mlp_train(model, x, y, cfg);
             },
             "features"_a, "labels"_a, "lr"_a = 0.001, "epochs"_a = 150,
             "batch_size"_a = 150, "seed"_a = 7,
             "Minibatch SGD; returns the per-epoch loss trace.")
        .def_property_readonly("input_dim", [](const MlpModel& m_) { return m_.input_dim; })
        .def_property_readonly("hidden_width",
                               [](const MlpModel& m_) { return m_.hidden_width; })
        .def("parameter_count", &MlpModel::parameter_count);

    m.def(
        "grasp_metric",
        [](const Eigen::Vector3d& ci, const Eigen::Vector3d& cj, const Eigen::VectorXd& screw,
           const std::optional<Eigen::MatrixXd>& env, double mu_mean, double mu_std,
           int n_samples, double mu_env, unsigned seed, double mass, double f_normal_max) {
            AntipodalPair pair;
            pair.c_i = ci;
            pair.c_j = cj;
            const Vec3 chord = cj - ci;
            if (chord.norm() < 1e-12) throw std::invalid_argument("coincident contacts");
            pair.n_i = chord.normalized();
            pair.n_j = -pair.n_i;
            FrictionModel fm;
            fm.mu_mean = mu_mean;
            fm.mu_std = mu_std;
            fm.n_samples = n_samples;
            fm.mu_env = mu_env;
            fm.rng_seed = seed;
            const GraspMetricResult r =
                grasp_metric(pair, screw_from_6(screw), env_from_array(env, mu_env), fm, mass,
                             pair.midpoint(), Vec3(0, 0, -9.81), f_normal_max);
            return py::dict("eta"_a = r.eta_mean, "feasible_draws"_a = r.n_feasible,
                            "draws"_a = r.n_draws);
        },
        "c_i"_a, "c_j"_a, "screw"_a, "env"_a = py::none(), "mu_mean"_a = 0.3,
        "mu_std"_a = 0.05, "n_samples"_a = 50, "mu_env"_a = 0.4, "seed"_a = 42,
        "mass"_a = 1.0, "f_normal_max"_a = 10.0,
        "Averaged task-dependent grasp metric for one antipodal pair; the screw is "
        "(px,py,pz,lx,ly,lz) and env rows are support contacts with +z normals.");

    m.def(
        "fit_box",
        [](const Eigen::MatrixXd& points, const Eigen::Vector3d& support_normal) {
            bool degenerate = false;
            const OrientedBox b =
                oriented_box_pca(cloud_from_array(points), support_normal, &degenerate);
            return py::dict("center"_a = b.center, "rotation"_a = b.rotation,
                            "half_extents"_a = b.half_extents, "degenerate"_a = degenerate);
        },
        "points"_a, "support_normal"_a = Eigen::Vector3d(0, 0, 1),
        "PCA-based oriented bounding box with the third axis on the support normal.");

    m.def(
        "compute_region",
        [](const Eigen::MatrixXd& points, const Eigen::VectorXd& screw, const MlpModel& model,
           double y_th, int res_u, int res_v, const Eigen::Vector3d& support_normal) {
            RegionParams params;
            params.y_th = y_th;
            params.res_u = res_u;
            params.res_v = res_v;
            params.support_normal = support_normal;
            const RegionResult r =
                compute_region(cloud_from_array(points), screw_from_6(screw), model, params);
            return py::dict("indices"_a = r.region.indices, "scores"_a = r.region.scores,
                            "point_scores"_a = r.scored.y,
                            "box_half_extents"_a = r.box.half_extents,
                            "object_points"_a = cloud_to_array(r.object_cloud),
                            "pca_degenerate"_a = r.pca_degenerate);
        },
        "points"_a, "screw"_a, "model"_a, "y_th"_a = 0.6, "res_u"_a = 34, "res_v"_a = 19,
        "support_normal"_a = Eigen::Vector3d(0, 0, 1),
        "Ideal grasping region on a world-frame cloud for a task screw.");

    m.def(
        "render_scan",
        [](const Eigen::MatrixXd& vertices, const Eigen::MatrixXi& triangles,
           const Eigen::Vector3d& eye, const Eigen::Vector3d& target, int width, int height,
           double noise, unsigned seed) {
            if (vertices.cols() != 3 || triangles.cols() != 3) {
                throw std::invalid_argument("vertices must be (V,3) and triangles (T,3)");
            }
            TriMesh mesh;
            for (Eigen::Index i = 0; i < vertices.rows(); ++i) {
                mesh.vertices.emplace_back(vertices.row(i).transpose());
            }
            for (Eigen::Index i = 0; i < triangles.rows(); ++i) {
                mesh.triangles.push_back({triangles(i, 0), triangles(i, 1), triangles(i, 2)});
            }
            mesh.cleanup();
            VirtualCamera cam = VirtualCamera::look_at(eye, target);
            cam.width = width;
            cam.height = height;
            cam.depth_noise_std = noise;
            return cloud_to_array(render_partial_cloud(mesh, cam, seed));
        },
        "vertices"_a, "triangles"_a, "eye"_a, "target"_a, "width"_a = 160, "height"_a = 120,
        "noise"_a = 0.001, "seed"_a = 123,
        "Synthetic partial scan of a triangle mesh from a virtual depth camera.");

    m.def(
        "estimate_normals",
        [](const Eigen::MatrixXd& points, int k, const Eigen::Vector3d& viewpoint) {
            const PointCloud withn = estimate_normals(cloud_from_array(points), k, viewpoint);
            Eigen::MatrixXd out(static_cast<Eigen::Index>(withn.normals.size()), 3);
            for (std::size_t i = 0; i < withn.normals.size(); ++i) {
                out.row(static_cast<Eigen::Index>(i)) = withn.normals[i].transpose();
            }
            return out;
        },
        "points"_a, "k"_a = 16, "viewpoint"_a = Eigen::Vector3d(0, 0, 1),
        "Plane-fit normals over k nearest neighbors, flipped toward the viewpoint.");

    m.def(
        "fge",
        [](const Eigen::MatrixXd& points, const Eigen::VectorXd& screw, const MlpModel& model,
           int k, int m_picks, const std::optional<Eigen::MatrixXd>& env, int res_u,
           int res_v) {
            RunConfig cfg;
            cfg.res_u = res_u;
            cfg.res_v = res_v;
            FgeConfig fc;
            fc.top_k = k;
            fc.top_m = m_picks;
            const auto env_contacts = env_from_array(env, cfg.friction.mu_env);
            const TrialReport rep = fge(cloud_from_array(points), screw_from_6(screw), model,
                                        fc, env_contacts, cfg, !env_contacts.empty());
            py::dict out("y_max"_a = rep.y_max, "eta"_a = rep.eta_exact);
            out["precision"] = rep.precision ? py::cast(*rep.precision) : py::none();
            return out;
        },
        "points"_a, "screw"_a, "model"_a, "k"_a = 5, "m"_a = 50, "env"_a = py::none(),
        "res_u"_a = 34, "res_v"_a = 19,
        "Final grasp evaluation of the surrogate's top-k picks against the optimizer.");

    m.def(
        "encode_features",
        [](const Eigen::Vector3d& ci, const Eigen::Vector3d& cj, const Eigen::VectorXd& screw,
           const std::string& variant) {
            AntipodalPair pair;
            pair.c_i = ci;
            pair.c_j = cj;
            pair.n_i = (cj - ci).normalized();
            pair.n_j = -pair.n_i;
            return encode(feature_variant_from_string(variant), pair, screw_from_6(screw));
        },
        "c_i"_a, "c_j"_a, "screw"_a, "variant"_a = "plucker12",
        "Feature vector of an antipodal pair under a task-screw encoding.");

    py::register_exception<NoFeasibleGrasp>(m, "NoFeasibleGrasp");
    py::register_exception<DataError>(m, "DataError");
}
