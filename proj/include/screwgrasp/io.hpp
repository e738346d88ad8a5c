#pragma once

#include "screwgrasp/geometry.hpp"
#include "screwgrasp/mlp.hpp"
#include "screwgrasp/synthetic.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <vector>

namespace screwgrasp {

/// File and format problems (exit code 2 at the CLI).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Solver and training failures (exit code 3 at the CLI).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Score-to-color ramp: 0 -> blue (0,0,255), 1 -> red (255,0,0), linear.
std::array<std::uint8_t, 3> score_color(double score);

/// ASCII PLY. Normals are written when present; scores add a `quality`
/// column plus red/green/blue under the ramp above. Positions are written
/// with 6-decimal fixed formatting.
void save_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                const std::vector<double>* scores = nullptr);

struct LoadedCloud {
    PointCloud cloud;
    std::vector<double> scores;  // empty when the file has no quality column
};

LoadedCloud load_cloud(const std::filesystem::path& path);

/// OBJ with v/f records; polygonal faces are fan-split into triangles.
TriMesh load_mesh(const std::filesystem::path& path);
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path);

/// Binary model container: magic "SGM1", little-endian doubles in
/// declaration order, running statistics included. Loads bit-identically.
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace screwgrasp
