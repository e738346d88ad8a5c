#pragma once

#include "screwgrasp/config.hpp"
#include "screwgrasp/mlp.hpp"
#include "screwgrasp/region.hpp"
#include "screwgrasp/synthetic.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace screwgrasp {

struct FgeConfig {
    int top_k = 10;   // surrogate picks
    int top_m = 100;  // exact picks, > top_k
    unsigned seed = 123;
};

struct TrialReport {
    std::string object_id;
    int trial = 0;
    Screw screw;  // object frame
    double y_max = 0.0;
    std::vector<double> eta_exact;  // evaluated (m+k) metric values
    std::optional<double> precision;
    double wall_time_s = 0.0;
    bool failed = false;
    std::string failure;
};

struct ExactField {
    BoxMetricField field;       // vertex_y holds min-max normalized eta
    Eigen::VectorXd eta_raw;
    LabelStats stats;
};

/// Exact counterpart of build_box_field: every grid vertex labeled by the
/// averaged optimizer metric (0 when no draw is feasible), then min-max
/// normalized over the grid; a zero range collapses to 0.5.
ExactField compute_region_exact(const OrientedBox& b, const Screw& s, const Face& f_i,
                                const Face& f_j, int res_u, int res_v,
                                const std::vector<ContactSpec>& env, const FrictionModel& fm,
                                double mass, const Vec3& com, const Vec3& gravity,
                                double f_normal_max, int jobs = 1);

/// Indices of the `count` best scores, descending, ties to the lower index.
std::vector<int> top_indices(const Eigen::VectorXd& scores, int count);

/// Fraction of predicted positives that the exact field also marks positive
/// at the same threshold; nullopt when nothing is predicted positive.
std::optional<double> precision_at_threshold(const BoxMetricField& predicted,
                                             const BoxMetricField& exact, double y_th);

/// Final grasp evaluation on a world-frame cloud: the surrogate's top-k grid
/// contacts and the exact optimizer's top-m are jointly normalized on their
/// exact metric values; y_max is the best normalized value among the k.
/// Environment contacts are given in world coordinates; `use_env` toggles
/// them together with gravity (free-space tasks are analyzed weightless).
TrialReport fge(const PointCloud& cloud, const Screw& screw, const MlpModel& model,
                const FgeConfig& cfg, const std::vector<ContactSpec>& env,
                const RunConfig& run, bool use_env, int jobs = 1);

struct TrialsConfig {
    int screws_per_object = 4;
    FgeConfig fge;
    unsigned master_seed = 123;
    int jobs = 1;
    int scan_width = 160;
    int scan_height = 120;
    double scan_noise = 0.0;  // simulated depth is exact
};

struct TrialsResult {
    std::vector<TrialReport> reports;
    std::vector<int> histogram;  // y_max counts, bin width 0.05
    double median_y_max = 0.0;
    double fraction_ge_09 = 0.0;
    std::vector<std::pair<std::string, double>> per_object_mean;  // object id, mean FGE
};

/// Scans each mesh from a seeded camera, samples task screws (even odds of a
/// pivot-style bottom edge with environment contacts versus a free-space
/// interior axis), and runs FGE per trial. Per-trial failures are recorded,
/// not fatal.
TrialsResult run_trials(const std::vector<std::filesystem::path>& meshes,
                        const MlpModel& model, const RunConfig& run, const TrialsConfig& cfg);

void write_trials_csv(const TrialsResult& r, const std::filesystem::path& path);
void write_histogram_csv(const TrialsResult& r, const std::filesystem::path& path);
void write_object_table_csv(const TrialsResult& r, const std::filesystem::path& path);

}  // namespace screwgrasp
