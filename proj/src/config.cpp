#include "screwgrasp/config.hpp"

#include "screwgrasp/io.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <set>

namespace screwgrasp {

using nlohmann::json;

DatasetParams RunConfig::dataset_params() const {
    DatasetParams p;
    p.res_u = res_u;
    p.res_v = res_v;
    p.mass = mass;
    p.gravity = gravity;
    p.f_normal_max = f_normal_max;
    return p;
}

RegionParams RunConfig::region_params() const {
    RegionParams p;
    p.res_u = res_u;
    p.res_v = res_v;
    p.y_th = y_th;
    p.gripper = gripper;
    return p;
}

void RunConfig::validate() const {
    const auto fail = [](const std::string& what) { throw DataError("config: " + what); };
    if (friction.mu_mean < 0.0 || friction.mu_std < 0.0) fail("negative friction");
    if (friction.n_samples < 1) fail("n_samples must be >= 1");
    if (friction.mu_env < 0.0) fail("negative mu_env");
    if (mass < 0.0) fail("negative mass");
    if (f_normal_max <= 0.0) fail("f_normal_max must be positive");
    if (gripper.max_opening <= 0.0 || gripper.finger_depth <= 0.0 ||
        gripper.finger_thickness <= 0.0 || gripper.palm_clearance < 0.0) {
        fail("gripper dimensions must be positive");
    }
    if (gripper.max_opening <= gripper.finger_thickness) {
        fail("gripper opening must exceed finger thickness");
    }
    if (y_th < 0.0 || y_th > 1.0) fail("y_th outside [0, 1]");
    if (res_u < 2 || res_v < 2) fail("grid resolution must be >= 2");
    if (train.lr <= 0.0) fail("learning rate must be positive");
    if (train.epochs < 1) fail("epochs must be >= 1");
    if (train.batch_size < 2) fail("batch size must be >= 2");
    if (hidden_width < 1) fail("hidden width must be >= 1");
}

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.contains(key)) {
            throw DataError("config: unknown key '" + key + "' in " + where);
        }
    }
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("config parse error: " + std::string(e.what()));
    }

    RunConfig cfg;
    try {
        check_keys(j, {"friction", "physics", "gripper", "pipeline", "train", "seeds"},
                   "config root");
        if (j.contains("friction")) {
            const json& f = j["friction"];
            check_keys(f, {"mu_mean", "mu_std", "mu_env", "n_samples"}, "friction");
            cfg.friction.mu_mean = f.value("mu_mean", cfg.friction.mu_mean);
            cfg.friction.mu_std = f.value("mu_std", cfg.friction.mu_std);
            cfg.friction.mu_env = f.value("mu_env", cfg.friction.mu_env);
            cfg.friction.n_samples = f.value("n_samples", cfg.friction.n_samples);
        }
        if (j.contains("physics")) {
            const json& p = j["physics"];
            check_keys(p, {"mass", "gravity", "f_normal_max"}, "physics");
            cfg.mass = p.value("mass", cfg.mass);
            if (p.contains("gravity")) {
                const auto g = p["gravity"].get<std::vector<double>>();
                if (g.size() != 3) throw DataError("config: gravity needs 3 components");
                cfg.gravity = Vec3(g[0], g[1], g[2]);
            }
            cfg.f_normal_max = p.value("f_normal_max", cfg.f_normal_max);
        }
        if (j.contains("gripper")) {
            const json& g = j["gripper"];
            check_keys(g, {"g_w", "finger_depth", "finger_thickness", "palm_clearance"},
                       "gripper");
            cfg.gripper.max_opening = g.value("g_w", cfg.gripper.max_opening);
            cfg.gripper.finger_depth = g.value("finger_depth", cfg.gripper.finger_depth);
            cfg.gripper.finger_thickness =
                g.value("finger_thickness", cfg.gripper.finger_thickness);
            cfg.gripper.palm_clearance = g.value("palm_clearance", cfg.gripper.palm_clearance);
        }
        if (j.contains("pipeline")) {
            const json& p = j["pipeline"];
            check_keys(p, {"y_th", "res_u", "res_v"}, "pipeline");
            cfg.y_th = p.value("y_th", cfg.y_th);
            cfg.res_u = p.value("res_u", cfg.res_u);
            cfg.res_v = p.value("res_v", cfg.res_v);
        }
        if (j.contains("train")) {
            const json& t = j["train"];
            check_keys(t, {"lr", "epochs", "batch_size", "hidden_width"}, "train");
            cfg.train.lr = t.value("lr", cfg.train.lr);
            cfg.train.epochs = t.value("epochs", cfg.train.epochs);
            cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
            cfg.hidden_width = t.value("hidden_width", cfg.hidden_width);
        }
        if (j.contains("seeds")) {
            const json& s = j["seeds"];
            check_keys(s, {"data", "train", "eval"}, "seeds");
            cfg.seed_data = s.value("data", cfg.seed_data);
            cfg.train.seed = s.value("train", cfg.train.seed);
            cfg.seed_eval = s.value("eval", cfg.seed_eval);
        }
    } catch (const json::exception& e) {
        throw DataError("config type error: " + std::string(e.what()));
    }
    cfg.friction.rng_seed = cfg.seed_data;
    cfg.validate();
    return cfg;
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& explicit_path) {
    if (explicit_path) return load_config(*explicit_path);
    if (const char* env = std::getenv("SCREWGRASP_CONFIG")) {
        return load_config(env);
    }
    RunConfig cfg;
    cfg.friction.rng_seed = cfg.seed_data;
    return cfg;
}

}  // namespace screwgrasp
