#pragma once

#include "screwgrasp/geometry.hpp"
#include "screwgrasp/metric.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace screwgrasp {

/// Training cuboid in its own object frame: the grasped face F^i spans
/// x in [0, length_i] at y = 0, its parallel face F^j spans [0, length_j] at
/// y = width, and the solid sits on z = 0. The pivot edge joins the far-x
/// bottom corners of the two faces, so unequal lengths tilt the task screw.
struct CuboidSpec {
    double length_i = 0.2;
    double length_j = 0.21;
    double width = 0.06;
    double height = 0.10;
    Screw pivot_edge;

    static CuboidSpec make(double length, double delta, double width, double height);

    /// Centroid of the trapezoid-prism solid (uniform density).
    Vec3 center_of_mass() const;
    /// Environment contacts at the stated fractions along the pivot edge,
    /// inward normal along +z.
    std::vector<ContactSpec> pivot_env_contacts(double mu_env,
                                                double f_cap = kEnvForceCap) const;
};

struct MetricSample {
    AntipodalPair pair;
    Screw screw;
    double eta_raw = 0.0;
    double y = 0.0;
    int cuboid_id = 0;
};

enum class FeatureVariant { plucker12, pointdir12, combined15, arms18 };

int feature_length(FeatureVariant v);
FeatureVariant feature_variant_from_string(const std::string& tag);
const char* to_string(FeatureVariant v);

/// Feature vector of a sample under the chosen task-screw encoding; the
/// contact pair always occupies the first six entries.
Eigen::VectorXd encode(FeatureVariant variant, const AntipodalPair& pair, const Screw& screw);

struct DatasetParams {
    double width = 0.06;
    double height = 0.10;
    double length_min = 0.14;
    double length_max = 0.25;
    int n_lengths = 12;
    double delta_min = 0.005;
    double delta_max = 0.06;
    int n_delta_magnitudes = 6;  // each used with both signs
    int res_u = 34;              // along the grasped length
    int res_v = 19;              // along the height
    double mass = 1.0;
    Vec3 gravity = Vec3(0.0, 0.0, -9.81);
    double f_normal_max = 10.0;
};

/// Cross product of base lengths and signed deltas; n_lengths *
/// 2 * n_delta_magnitudes cuboids (144 with the defaults).
std::vector<CuboidSpec> generate_cuboid_family(const DatasetParams& p);

/// Grid of antipodal pairs on the two faces perpendicular to the pivot edge,
/// restricted to the shorter of the two lengths. Row-major, x fastest.
std::vector<AntipodalPair> cuboid_contact_grid(const CuboidSpec& c, int res_u, int res_v);

struct LabelStats {
    int n_samples = 0;
    int n_infeasible = 0;      // samples with no feasible draw, labeled 0
    int n_partial_draws = 0;   // samples where some draws were infeasible
};

/// Labels every grid pair with the averaged metric and min-max normalizes
/// within the cuboid. Samples with no feasible friction draw get eta = 0.
std::vector<MetricSample> label_cuboid(const CuboidSpec& c, int cuboid_id,
                                       const DatasetParams& p, const FrictionModel& fm,
                                       int jobs = 1, LabelStats* stats = nullptr);

/// Full labeled dataset over the cuboid family.
std::vector<MetricSample> generate_dataset(const DatasetParams& p, const FrictionModel& fm,
                                           int jobs = 1, LabelStats* stats = nullptr);

/// Seeded shuffle and split; writes <stem>_train.csv and <stem>_val.csv in
/// the dataset CSV schema.
void export_dataset(const std::vector<MetricSample>& samples, double train_fraction,
                    const std::filesystem::path& stem, unsigned seed);

struct LoadedDataset {
    Eigen::MatrixXd features;  // plucker12 rows
    Eigen::VectorXd labels;
    std::vector<int> cuboid_ids;
    std::vector<double> eta_raw;
};

LoadedDataset load_dataset_csv(const std::filesystem::path& file);
void write_dataset_csv(const std::vector<MetricSample>& samples,
                       const std::filesystem::path& file);

}  // namespace screwgrasp
