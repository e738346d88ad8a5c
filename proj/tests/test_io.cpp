#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "screwgrasp/config.hpp"
#include "screwgrasp/io.hpp"

#include <filesystem>
#include <fstream>

using namespace screwgrasp;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "sg_io_test";
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("PLY round trip with and without extras") {
    const fs::path dir = temp_dir();
    PointCloud cloud;
    cloud.points = {Vec3(0.1, -0.25, 1.0), Vec3(2e-4, 0.5, -0.125)};
    cloud.normals = {Vec3::UnitZ(), Vec3::UnitX()};
    std::vector<double> scores = {0.0, 0.5};

    save_cloud(cloud, dir / "scored.ply", &scores);
    const LoadedCloud back = load_cloud(dir / "scored.ply");
    REQUIRE(back.cloud.points.size() == 2);
    REQUIRE(back.scores.size() == 2);
    for (int i = 0; i < 2; ++i) {
        CHECK((back.cloud.points[i] - cloud.points[i]).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK((back.cloud.normals[i] - cloud.normals[i]).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK(back.scores[i] == doctest::Approx(scores[i]).epsilon(1e-6));
    }

    save_cloud(cloud, dir / "plain.ply");
    const LoadedCloud plain = load_cloud(dir / "plain.ply");
    CHECK(plain.scores.empty());

    // Header advertises the quality column only when scores are given.
    std::ifstream in(dir / "plain.ply");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("quality") == std::string::npos);
}

TEST_CASE("score color ramp") {
    CHECK(score_color(0.0) == std::array<std::uint8_t, 3>{0, 0, 255});
    CHECK(score_color(1.0) == std::array<std::uint8_t, 3>{255, 0, 0});
    CHECK(score_color(0.5) == std::array<std::uint8_t, 3>{127, 0, 128});
}

TEST_CASE("malformed PLY inputs are rejected") {
    const fs::path dir = temp_dir();
    {
        std::ofstream out(dir / "bad1.ply");
        out << "plx\n";
    }
    CHECK_THROWS_AS(load_cloud(dir / "bad1.ply"), DataError);
    {
        std::ofstream out(dir / "bad2.ply");
        out << "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
               "property float z\nend_header\n0 0 0\n";
    }
    CHECK_THROWS_AS(load_cloud(dir / "bad2.ply"), DataError);
    {
        std::ofstream out(dir / "bad3.ply");
        out << "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
               "property float z\nend_header\nnan 0 0\n";
    }
    CHECK_THROWS_AS(load_cloud(dir / "bad3.ply"), DataError);
}

TEST_CASE("OBJ loading with fan split and cleanup") {
    const fs::path dir = temp_dir();
    {
        std::ofstream out(dir / "cube.obj");
        out << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
               "v 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n";
        // Quad faces: fan split doubles them into triangles.
        out << "f 1 2 3 4\nf 5 6 7 8\nf 1 2 6 5\nf 2 3 7 6\nf 3 4 8 7\nf 4 1 5 8\n";
    }
    const TriMesh cube = load_mesh(dir / "cube.obj");
    CHECK(cube.vertices.size() == 8);
    CHECK(cube.triangles.size() == 12);  // sum of (n_i - 2)

    {
        std::ofstream out(dir / "tri.obj");
        out << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2/2 3/3\n";
    }
    CHECK(load_mesh(dir / "tri.obj").triangles.size() == 1);

    {
        std::ofstream out(dir / "nofaces.obj");
        out << "v 0 0 0\nv 1 0 0\n";
    }
    CHECK_THROWS_AS(load_mesh(dir / "nofaces.obj"), DataError);
}

TEST_CASE("model file round trip is bit exact") {
    const fs::path dir = temp_dir();
    MlpModel m = mlp_init(12, 16, 321);
    // Touch the running stats so they are not at their init values.
    m.norms[3].running_mean.setConstant(0.25);
    m.norms[5].running_var.setConstant(2.5);

    save_model(m, dir / "m.bin");
    const MlpModel back = load_model(dir / "m.bin");
    CHECK(back.input_dim == m.input_dim);
    CHECK(back.hidden_width == m.hidden_width);
    for (int k = 0; k < MlpModel::kHiddenLayers; ++k) {
        CHECK(back.hidden[k].weight == m.hidden[k].weight);
        CHECK(back.norms[k].running_mean == m.norms[k].running_mean);
        CHECK(back.norms[k].running_var == m.norms[k].running_var);
    }
    CHECK(back.head.weight == m.head.weight);

    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 12);
    CHECK(predict_batch(m, x) == predict_batch(back, x));
}

TEST_CASE("model file corruption is detected") {
    const fs::path dir = temp_dir();
    const MlpModel m = mlp_init(12, 8, 5);
    save_model(m, dir / "m.bin");

    // Wrong magic.
    {
        std::fstream f(dir / "m.bin", std::ios::in | std::ios::out | std::ios::binary);
        f.write("XGM1", 4);
    }
    CHECK_THROWS_AS(load_model(dir / "m.bin"), DataError);

    // Truncation by one byte.
    save_model(m, dir / "m.bin");
    const auto size = fs::file_size(dir / "m.bin");
    fs::resize_file(dir / "m.bin", size - 1);
    CHECK_THROWS_AS(load_model(dir / "m.bin"), DataError);
}

TEST_CASE("config defaults carry the training recipe") {
    const RunConfig cfg = resolve_config(std::nullopt);
    CHECK(cfg.friction.mu_mean == 0.3);
    CHECK(cfg.friction.mu_std == 0.05);
    CHECK(cfg.friction.mu_env == 0.4);
    CHECK(cfg.friction.n_samples == 50);
    CHECK(cfg.y_th == 0.6);
    CHECK(cfg.train.lr == 0.001);
    CHECK(cfg.train.epochs == 150);
    CHECK(cfg.train.batch_size == 150);
    CHECK(cfg.res_u == 34);
    CHECK(cfg.res_v == 19);
}

TEST_CASE("config file parsing, unknown keys, and validation") {
    const fs::path dir = temp_dir();
    {
        std::ofstream out(dir / "ok.json");
        out << R"({"friction": {"mu_mean": 0.25}, "pipeline": {"y_th": 0.7},
                   "seeds": {"data": 9}})";
    }
    const RunConfig cfg = load_config(dir / "ok.json");
    CHECK(cfg.friction.mu_mean == 0.25);
    CHECK(cfg.y_th == 0.7);
    CHECK(cfg.seed_data == 9);
    CHECK(cfg.friction.rng_seed == 9);

    {
        std::ofstream out(dir / "unknown.json");
        out << R"({"fricton": {}})";
    }
    CHECK_THROWS_AS(load_config(dir / "unknown.json"), DataError);

    {
        std::ofstream out(dir / "range.json");
        out << R"({"pipeline": {"y_th": 1.5}})";
    }
    CHECK_THROWS_AS(load_config(dir / "range.json"), DataError);
}
