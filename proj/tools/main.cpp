#include "screwgrasp/config.hpp"
#include "screwgrasp/dataset.hpp"
#include "screwgrasp/evaluation.hpp"
#include "screwgrasp/io.hpp"
#include "screwgrasp/metric.hpp"
#include "screwgrasp/region.hpp"
#include "screwgrasp/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace screwgrasp;
using nlohmann::json;

namespace {

Vec3 parse_vec3(const std::string& text, const char* what) {
    Vec3 v;
    if (std::sscanf(text.c_str(), "%lf,%lf,%lf", &v.x(), &v.y(), &v.z()) != 3) {
        throw CLI::ValidationError(std::string(what) + " expects x,y,z");
    }
    return v;
}

Screw parse_screw(const std::string& text) {
    double p[3], l[3];
    if (std::sscanf(text.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &p[0], &p[1], &p[2], &l[0],
                    &l[1], &l[2]) != 6) {
        throw CLI::ValidationError("--screw expects px,py,pz,lx,ly,lz");
    }
    return screw_from_point_dir(Vec3(p[0], p[1], p[2]), Vec3(l[0], l[1], l[2]));
}

json pose_to_json(const GraspPose& pose) {
    json j;
    j["rotation"] = std::vector<double>(pose.rotation.data(),
                                        pose.rotation.data() + 9);  // column-major
    j["translation"] = {pose.translation.x(), pose.translation.y(), pose.translation.z()};
    j["opening"] = pose.opening;
    j["approach_axis"] = pose.approach.axis;
    j["approach_sign"] = pose.approach.sign;
    return j;
}

DatasetParams dataset_params_for(const RunConfig& cfg, bool reduced) {
    DatasetParams p = cfg.dataset_params();
    if (reduced) {
        // 12 cuboids: dense length coverage at the small tilt, which is the
        // regime bounding-box tasks live in.
        p.n_lengths = 6;
        p.n_delta_magnitudes = 1;
        p.delta_min = 0.005;
        p.delta_max = 0.005;
    }
    return p;
}

std::vector<ContactSpec> parse_env_contacts(const std::vector<std::string>& positions,
                                            double mu_env) {
    std::vector<ContactSpec> env;
    for (const std::string& e : positions) {
        ContactSpec c;
        c.position = parse_vec3(e, "--env");
        c.inward_normal = Vec3::UnitZ();
        c.mu = mu_env;
        c.f_normal_max = kEnvForceCap;
        c.kind = ContactKind::environment;
        env.push_back(c);
    }
    return env;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Task-oriented antipodal grasp synthesis from point clouds"};
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    app.add_option("--config", config_path, "JSON config file")->envname("SCREWGRASP_CONFIG");
    int jobs = 1;
    app.add_option("--jobs", jobs, "parallel workers")->check(CLI::Range(1, 256));
    std::optional<unsigned> seed_override;
    app.add_option("--seed", seed_override, "override data/train/eval seeds");

    auto* gen = app.add_subcommand("gen-data", "generate the labeled cuboid dataset");
    std::string gen_out;
    bool gen_reduced = false, gen_dry = false;
    double gen_train_fraction = 0.8;
    gen->add_option("--out", gen_out, "output CSV stem")->required();
    gen->add_flag("--reduced", gen_reduced, "12-cuboid reduced recipe");
    gen->add_flag("--dry-run", gen_dry, "print counts without labeling");
    gen->add_option("--train-fraction", gen_train_fraction)->check(CLI::Range(0.0, 1.0));

    auto* train = app.add_subcommand("train", "train the surrogate on a dataset CSV");
    std::string train_data, train_val, train_out = "model.bin";
    int epochs_override = -1, batch_override = -1, width_override = -1;
    double lr_override = -1.0;
    train->add_option("--data", train_data, "training CSV")->required();
    train->add_option("--val", train_val, "validation CSV");
    train->add_option("--out", train_out, "model file");
    train->add_option("--epochs", epochs_override);
    train->add_option("--batch", batch_override);
    train->add_option("--lr", lr_override);
    train->add_option("--width", width_override);

    auto* region = app.add_subcommand("region", "ideal grasping region on a cloud");
    std::string region_cloud, region_model, region_out_cloud, region_out_json;
    std::string region_screw, region_support = "0,0,1";
    double y_th_override = -1.0;
    region->add_option("--cloud", region_cloud)->required();
    region->add_option("--screw", region_screw, "px,py,pz,lx,ly,lz")->required();
    region->add_option("--model", region_model)->required();
    region->add_option("--support", region_support, "support normal x,y,z");
    region->add_option("--y-th", y_th_override, "region threshold")
        ->check(CLI::Range(0.0, 1.0));
    region->add_option("--out-cloud", region_out_cloud, "scored PLY");
    region->add_option("--out-region", region_out_json, "region JSON");

    auto* poses = app.add_subcommand("poses", "6-DOF gripper poses from the region");
    std::string poses_cloud, poses_model, poses_out, poses_screw;
    std::string poses_support = "0,0,1";
    bool from_point = false;
    double poses_y_th = -1.0;
    poses->add_option("--cloud", poses_cloud)->required();
    poses->add_option("--screw", poses_screw)->required();
    poses->add_option("--model", poses_model)->required();
    poses->add_option("--support", poses_support);
    poses->add_option("--y-th", poses_y_th)->check(CLI::Range(0.0, 1.0));
    poses->add_option("--out", poses_out, "poses JSON");
    poses->add_flag("--from-point", from_point, "single pose from a random region point");

    auto* fge_cmd = app.add_subcommand("fge", "final grasp evaluation against the optimizer");
    std::string fge_cloud, fge_model, fge_screw;
    int fge_k = 5, fge_m = 50;
    std::vector<std::string> fge_env;
    fge_cmd->add_option("--cloud", fge_cloud)->required();
    fge_cmd->add_option("--screw", fge_screw)->required();
    fge_cmd->add_option("--model", fge_model)->required();
    fge_cmd->add_option("--k", fge_k)->check(CLI::PositiveNumber);
    fge_cmd->add_option("--m", fge_m)->check(CLI::PositiveNumber);
    fge_cmd->add_option("--env", fge_env,
                        "environment contact x,y,z (repeatable, +z support normal)");

    auto* trials_cmd = app.add_subcommand("trials", "batch simulated FGE trials over meshes");
    std::string trials_meshes, trials_model, trials_out = ".";
    int trials_objects = 0, trials_screws = 4, trials_k = 5, trials_m = 50;
    trials_cmd->add_option("--meshes", trials_meshes, "directory of .obj files")->required();
    trials_cmd->add_option("--model", trials_model)->required();
    trials_cmd->add_option("--out", trials_out, "output directory");
    trials_cmd->add_option("--objects", trials_objects, "limit object count");
    trials_cmd->add_option("--screws", trials_screws, "screws per object");
    trials_cmd->add_option("--k", trials_k)->check(CLI::PositiveNumber);
    trials_cmd->add_option("--m", trials_m)->check(CLI::PositiveNumber);

    auto* scan = app.add_subcommand("scan", "synthetic partial scan of a mesh");
    std::string scan_mesh, scan_out;
    std::string scan_eye = "0.5,-0.5,0.4", scan_target = "0,0,0";
    int scan_w = 160, scan_h = 120, scan_knn = 16;
    double scan_noise = 0.001;
    bool no_normals = false;
    scan->add_option("--mesh", scan_mesh)->required();
    scan->add_option("--out", scan_out)->required();
    scan->add_option("--eye", scan_eye);
    scan->add_option("--target", scan_target);
    scan->add_option("--width", scan_w)->check(CLI::Range(8, 4096));
    scan->add_option("--height", scan_h)->check(CLI::Range(8, 4096));
    scan->add_option("--noise", scan_noise)->check(CLI::NonNegativeNumber);
    scan->add_option("--knn", scan_knn)->check(CLI::Range(3, 256));
    scan->add_flag("--no-normals", no_normals);

    auto* metric = app.add_subcommand("metric", "grasp metric for one antipodal pair");
    std::string metric_ci, metric_cj, metric_screw;
    std::vector<std::string> metric_env;
    double metric_mu = -1.0, metric_mass = -1.0, metric_fmax = -1.0;
    int metric_draws = -1;
    metric->add_option("--ci", metric_ci, "contact i x,y,z")->required();
    metric->add_option("--cj", metric_cj, "contact j x,y,z")->required();
    metric->add_option("--screw", metric_screw)->required();
    metric->add_option("--mu", metric_mu, "fixed friction coefficient");
    metric->add_option("--draws", metric_draws, "friction draws");
    metric->add_option("--mass", metric_mass, "object mass (kg)");
    metric->add_option("--fmax", metric_fmax, "grip normal-force bound (N)");
    metric->add_option("--env", metric_env, "environment contact x,y,z (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg = resolve_config(
            config_path ? std::optional<fs::path>(*config_path) : std::nullopt);
        if (seed_override) {
            cfg.seed_data = *seed_override;
            cfg.train.seed = *seed_override;
            cfg.seed_eval = *seed_override;
            cfg.friction.rng_seed = *seed_override;
        }

        if (gen->parsed()) {
            const DatasetParams params = dataset_params_for(cfg, gen_reduced);
            const auto family = generate_cuboid_family(params);
            std::size_t planned = 0;
            for (const CuboidSpec& c : family) {
                planned += cuboid_contact_grid(c, params.res_u, params.res_v).size();
            }
            if (gen_dry) {
                std::cout << "cuboids=" << family.size() << " samples=" << planned << "\n";
                return 0;
            }
            LabelStats stats;
            const auto samples = generate_dataset(params, cfg.friction, jobs, &stats);
            export_dataset(samples, gen_train_fraction, gen_out, cfg.seed_data);
            std::cout << "cuboids=" << family.size() << " samples=" << samples.size()
                      << " infeasible=" << stats.n_infeasible
                      << " partial_draws=" << stats.n_partial_draws << "\n";
            std::cout << "wrote " << gen_out << "_train.csv and " << gen_out << "_val.csv\n";
            return 0;
        }

        if (train->parsed()) {
            if (epochs_override > 0) cfg.train.epochs = epochs_override;
            if (batch_override > 0) cfg.train.batch_size = batch_override;
            if (lr_override > 0) cfg.train.lr = lr_override;
            if (width_override > 0) cfg.hidden_width = width_override;
            cfg.validate();

            const LoadedDataset train_set = load_dataset_csv(train_data);
            if (train_set.labels.size() == 0) throw DataError("training set is empty");
            MlpModel model = mlp_init(12, cfg.hidden_width, cfg.train.seed);
            std::vector<double> trace;
            try {
                trace = mlp_train(model, train_set.features, train_set.labels, cfg.train);
            } catch (const std::runtime_error& e) {
                throw NumericError(e.what());
            }
            std::cout << "train_mse_first=" << trace.front()
                      << " train_mse_final=" << trace.back() << "\n";
            if (!train_val.empty()) {
                const LoadedDataset val_set = load_dataset_csv(train_val);
                const Eigen::VectorXd pred = predict_batch(model, val_set.features);
                const double mse = (pred - val_set.labels).squaredNorm() /
                                   static_cast<double>(val_set.labels.size());
                std::cout << "val_mse=" << mse << "\n";
            }
            save_model(model, train_out);
            std::cout << "wrote " << train_out << "\n";
            return 0;
        }

        if (region->parsed()) {
            if (y_th_override >= 0.0) cfg.y_th = y_th_override;
            const LoadedCloud in = load_cloud(region_cloud);
            const MlpModel model = load_model(region_model);
            RegionParams params = cfg.region_params();
            params.support_normal = parse_vec3(region_support, "--support");
            const RegionResult r =
                compute_region(in.cloud, parse_screw(region_screw), model, params);
            if (r.region.indices.empty()) {
                std::cerr << "warning: empty region at y_th=" << params.y_th
                          << "; consider lowering the threshold\n";
            }
            if (!region_out_cloud.empty()) {
                save_cloud(r.object_cloud, region_out_cloud, &r.scored.y);
            }
            if (!region_out_json.empty()) {
                json j;
                j["y_th"] = params.y_th;
                j["indices"] = r.region.indices;
                j["scores"] = r.region.scores;
                j["pca_degenerate"] = r.pca_degenerate;
                std::ofstream os(region_out_json);
                if (!os) throw DataError("cannot open " + region_out_json);
                os << j.dump(2) << "\n";
            }
            std::cout << "region_points=" << r.region.indices.size() << " of "
                      << in.cloud.points.size() << "\n";
            return 0;
        }

        if (poses->parsed()) {
            if (poses_y_th >= 0.0) cfg.y_th = poses_y_th;
            const LoadedCloud in = load_cloud(poses_cloud);
            const MlpModel model = load_model(poses_model);
            RegionParams params = cfg.region_params();
            params.support_normal = parse_vec3(poses_support, "--support");
            const RegionResult r =
                compute_region(in.cloud, parse_screw(poses_screw), model, params);

            json out = json::array();
            if (from_point) {
                if (!r.object_cloud.has_normals()) {
                    throw DataError("--from-point needs cloud normals");
                }
                out.push_back(pose_to_json(poses_from_point(r.region, r.object_cloud, r.field,
                                                            params.gripper, cfg.seed_eval)));
            } else {
                for (const GraspPose& p :
                     poses_from_grid(r.field, r.scored, params.gripper, params.y_th)) {
                    out.push_back(pose_to_json(p));
                }
            }
            if (!poses_out.empty()) {
                std::ofstream os(poses_out);
                if (!os) throw DataError("cannot open " + poses_out);
                os << out.dump(2) << "\n";
            }
            std::cout << "poses=" << out.size() << "\n";
            return 0;
        }

        if (fge_cmd->parsed()) {
            if (fge_m <= fge_k) throw CLI::ValidationError("--m must exceed --k");
            const LoadedCloud in = load_cloud(fge_cloud);
            const MlpModel model = load_model(fge_model);
            const auto env = parse_env_contacts(fge_env, cfg.friction.mu_env);
            FgeConfig fc;
            fc.top_k = fge_k;
            fc.top_m = fge_m;
            fc.seed = cfg.seed_eval;
            const TrialReport rep = fge(in.cloud, parse_screw(fge_screw), model, fc, env, cfg,
                                        !env.empty(), jobs);
            std::cout << "y_max=" << rep.y_max << " k=" << fge_k << " m=" << fge_m;
            if (rep.precision) {
                std::cout << " precision=" << *rep.precision;
            } else {
                std::cout << " precision=n/a";
            }
            std::cout << "\n";
            return 0;
        }

        if (trials_cmd->parsed()) {
            std::vector<fs::path> meshes;
            for (const auto& entry : fs::directory_iterator(trials_meshes)) {
                if (entry.path().extension() == ".obj") meshes.push_back(entry.path());
            }
            std::sort(meshes.begin(), meshes.end());
            if (meshes.empty()) throw DataError("no .obj meshes in " + trials_meshes);
            if (trials_objects > 0 && static_cast<int>(meshes.size()) > trials_objects) {
                meshes.resize(static_cast<std::size_t>(trials_objects));
            }
            if (trials_m <= trials_k) throw CLI::ValidationError("--m must exceed --k");
            const MlpModel model = load_model(trials_model);
            TrialsConfig tc;
            tc.screws_per_object = trials_screws;
            tc.fge.top_k = trials_k;
            tc.fge.top_m = trials_m;
            tc.master_seed = cfg.seed_eval;
            tc.jobs = jobs;
            const TrialsResult res = run_trials(meshes, model, cfg, tc);
            fs::create_directories(trials_out);
            write_trials_csv(res, fs::path(trials_out) / "reports.csv");
            write_histogram_csv(res, fs::path(trials_out) / "histogram.csv");
            write_object_table_csv(res, fs::path(trials_out) / "objects.csv");
            std::cout << "trials=" << res.reports.size()
                      << " median_y_max=" << res.median_y_max
                      << " fraction_ge_0.9=" << res.fraction_ge_09 << "\n";
            return 0;
        }

        if (scan->parsed()) {
            const TriMesh mesh = load_mesh(scan_mesh);
            VirtualCamera cam = VirtualCamera::look_at(parse_vec3(scan_eye, "--eye"),
                                                       parse_vec3(scan_target, "--target"));
            cam.width = scan_w;
            cam.height = scan_h;
            cam.depth_noise_std = scan_noise;
            PointCloud cloud = render_partial_cloud(mesh, cam, cfg.seed_eval);
            if (!no_normals) {
                cloud = estimate_normals(cloud, scan_knn, parse_vec3(scan_eye, "--eye"));
            }
            save_cloud(cloud, scan_out);
            std::cout << "points=" << cloud.points.size() << "\n";
            return 0;
        }

        if (metric->parsed()) {
            AntipodalPair pair;
            pair.c_i = parse_vec3(metric_ci, "--ci");
            pair.c_j = parse_vec3(metric_cj, "--cj");
            const Vec3 chord = pair.c_j - pair.c_i;
            if (chord.norm() < 1e-12) throw CLI::ValidationError("coincident contacts");
            pair.n_i = chord.normalized();
            pair.n_j = -pair.n_i;

            FrictionModel fm = cfg.friction;
            if (metric_mu >= 0.0) {
                fm.mu_mean = metric_mu;
                fm.mu_std = 0.0;
            }
            if (metric_draws > 0) fm.n_samples = metric_draws;
            const double mass = metric_mass >= 0.0 ? metric_mass : cfg.mass;
            const double fmax = metric_fmax > 0.0 ? metric_fmax : cfg.f_normal_max;
            const auto env = parse_env_contacts(metric_env, fm.mu_env);

            const GraspMetricResult r =
                grasp_metric(pair, parse_screw(metric_screw), env, fm, mass, pair.midpoint(),
                             cfg.gravity, fmax);
            std::cout << "eta=" << r.eta_mean << " feasible_draws=" << r.n_feasible << "/"
                      << r.n_draws << "\n";
            return 0;
        }
        return 1;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NoFeasibleGrasp& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
