#pragma once

#include "screwgrasp/dataset.hpp"
#include "screwgrasp/metric.hpp"
#include "screwgrasp/mlp.hpp"
#include "screwgrasp/region.hpp"

#include <filesystem>
#include <optional>

namespace screwgrasp {

/// Toolchain configuration with every default pinned to the training recipe;
/// a bare run reproduces it. Unknown keys in a config file are rejected.
struct RunConfig {
    FrictionModel friction;        // N(0.3, 0.05), 50 draws, mu_env 0.4
    double mass = 1.0;
    Vec3 gravity = Vec3(0.0, 0.0, -9.81);
    double f_normal_max = 10.0;
    GripperGeometry gripper;
    double y_th = 0.6;
    int res_u = 34;
    int res_v = 19;
    TrainConfig train;             // lr 0.001, 150 epochs, batch 150
    int hidden_width = 256;
    unsigned seed_data = 42;
    unsigned seed_eval = 123;

    DatasetParams dataset_params() const;
    RegionParams region_params() const;
    void validate() const;  // throws DataError on out-of-range values
};

/// Loads and validates a JSON config file.
RunConfig load_config(const std::filesystem::path& path);

/// Resolution order: explicit path, then $SCREWGRASP_CONFIG, then defaults.
RunConfig resolve_config(const std::optional<std::filesystem::path>& explicit_path);

}  // namespace screwgrasp
