#include "screwgrasp/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace screwgrasp {

namespace {

void write_f64(std::ostream& out, double v) {
    static_assert(sizeof(double) == 8);
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.write(buf, 8);
}

double read_f64(std::istream& in) {
    char buf[8];
    in.read(buf, 8);
    if (!in) throw DataError("model file truncated");
    double v;
    std::memcpy(&v, buf, 8);
    return v;
}

void write_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.write(buf, 4);
}

std::uint32_t read_u32(std::istream& in) {
    char buf[4];
    in.read(buf, 4);
    if (!in) throw DataError("model file truncated");
    std::uint32_t v;
    std::memcpy(&v, buf, 4);
    return v;
}

void write_vec(std::ostream& out, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) write_f64(out, v(i));
}

void read_vec(std::istream& in, Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = read_f64(in);
}

void write_mat(std::ostream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64(out, m(r, c));
    }
}

void read_mat(std::istream& in, Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_f64(in);
    }
}

}  // namespace

std::array<std::uint8_t, 3> score_color(double score) {
    const double s = std::clamp(score, 0.0, 1.0);
    const auto r = static_cast<std::uint8_t>(std::floor(255.0 * s));
    return {r, 0, static_cast<std::uint8_t>(255 - r)};
}

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                const std::vector<double>* scores) {
    if (scores && scores->size() != cloud.points.size()) {
        throw DataError("score count does not match point count");
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string());

    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << cloud.points.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    if (cloud.has_normals()) {
        out << "property float nx\nproperty float ny\nproperty float nz\n";
    }
    if (scores) {
        out << "property float quality\n";
        out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    }
    out << "end_header\n";

    char buf[256];
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const Vec3& p = cloud.points[i];
        std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f", p.x(), p.y(), p.z());
        out << buf;
        if (cloud.has_normals()) {
            const Vec3& n = cloud.normals[i];
            std::snprintf(buf, sizeof(buf), " %.6f %.6f %.6f", n.x(), n.y(), n.z());
            out << buf;
        }
        if (scores) {
            const auto rgb = score_color((*scores)[i]);
            std::snprintf(buf, sizeof(buf), " %.6f %u %u %u", (*scores)[i],
                          static_cast<unsigned>(rgb[0]), static_cast<unsigned>(rgb[1]),
                          static_cast<unsigned>(rgb[2]));
            out << buf;
        }
        out << "\n";
    }
}

LoadedCloud load_cloud(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line) || line != "ply") throw DataError("not a PLY file");
    if (!std::getline(in, line) || line.rfind("format ascii", 0) != 0) {
        throw DataError("only ascii PLY supported");
    }

    std::size_t n_vertices = 0;
    std::vector<std::string> props;
    bool in_vertex_element = false;
    while (std::getline(in, line)) {
        if (line == "end_header") break;
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "comment") continue;
        if (tok == "element") {
            std::string name;
            ss >> name >> n_vertices;
            in_vertex_element = name == "vertex";
            if (!in_vertex_element) throw DataError("unsupported PLY element: " + name);
        } else if (tok == "property" && in_vertex_element) {
            std::string type, name;
            ss >> type >> name;
            props.push_back(name);
        }
        if (!in) throw DataError("malformed PLY header");
    }
    if (line != "end_header") throw DataError("malformed PLY header");

    const auto index_of = [&](const char* name) -> int {
        const auto it = std::find(props.begin(), props.end(), name);
        return it == props.end() ? -1 : static_cast<int>(it - props.begin());
    };
    const int ix = index_of("x"), iy = index_of("y"), iz = index_of("z");
    if (ix < 0 || iy < 0 || iz < 0) throw DataError("PLY missing x/y/z");
    const int inx = index_of("nx"), iny = index_of("ny"), inz = index_of("nz");
    const int iq = index_of("quality");
    const bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;

    LoadedCloud res;
    res.cloud.points.reserve(n_vertices);
    std::vector<double> row(props.size());
    for (std::size_t v = 0; v < n_vertices; ++v) {
        if (!std::getline(in, line)) throw DataError("PLY vertex count mismatch");
        std::istringstream ss(line);
        for (double& x : row) {
            if (!(ss >> x)) throw DataError("malformed PLY vertex row");
        }
        const Vec3 p(row[static_cast<std::size_t>(ix)], row[static_cast<std::size_t>(iy)],
                     row[static_cast<std::size_t>(iz)]);
        if (!p.allFinite()) throw DataError("non-finite PLY coordinate");
        res.cloud.points.push_back(p);
        if (has_normals) {
            res.cloud.normals.emplace_back(row[static_cast<std::size_t>(inx)],
                                           row[static_cast<std::size_t>(iny)],
                                           row[static_cast<std::size_t>(inz)]);
        }
        if (iq >= 0) res.scores.push_back(row[static_cast<std::size_t>(iq)]);
    }
    return res;
}

TriMesh load_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());

    TriMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "v") {
            Vec3 p;
            if (!(ss >> p.x() >> p.y() >> p.z())) throw DataError("malformed OBJ vertex");
            mesh.vertices.push_back(p);
        } else if (tok == "f") {
            std::vector<int> idx;
            std::string ref;
            while (ss >> ref) {
                // "v", "v/vt", "v//vn", "v/vt/vn" all start with the index
                const int v = std::stoi(ref);
                idx.push_back(v > 0 ? v - 1 : static_cast<int>(mesh.vertices.size()) + v);
            }
            if (idx.size() < 3) throw DataError("OBJ face with fewer than 3 vertices");
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) {  // fan split
                mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
            }
        }
    }
    if (mesh.triangles.empty()) throw DataError("mesh has no faces: " + path.string());
    try {
        mesh.cleanup();
    } catch (const std::runtime_error& e) {
        throw DataError(e.what());
    }
    if (mesh.triangles.empty()) throw DataError("mesh degenerate: " + path.string());
    return mesh;
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string());
    char buf[128];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.6f %.6f %.6f\n", v.x(), v.y(), v.z());
        out << buf;
    }
    for (const auto& t : mesh.triangles) {
        out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
    }
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string());
    out.write("SGM1", 4);
    write_u32(out, 1);  // version
    write_u32(out, static_cast<std::uint32_t>(model.input_dim));
    write_u32(out, static_cast<std::uint32_t>(model.hidden_width));
    write_u32(out, MlpModel::kHiddenLayers);
    for (int k = 0; k < MlpModel::kHiddenLayers; ++k) {
        write_mat(out, model.hidden[k].weight);
        write_vec(out, model.hidden[k].bias);
        write_vec(out, model.norms[k].gamma);
        write_vec(out, model.norms[k].beta);
        write_vec(out, model.norms[k].running_mean);
        write_vec(out, model.norms[k].running_var);
    }
    write_mat(out, model.head.weight);
    write_vec(out, model.head.bias);
    if (!out) throw DataError("failed writing " + path.string());
}

MlpModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SGM1", 4) != 0) throw DataError("bad model magic");
    if (read_u32(in) != 1) throw DataError("unsupported model version");
    const int input_dim = static_cast<int>(read_u32(in));
    const int width = static_cast<int>(read_u32(in));
    if (read_u32(in) != MlpModel::kHiddenLayers) throw DataError("bad layer count");
    if (input_dim <= 0 || width <= 0) throw DataError("bad model dimensions");

    MlpModel m = mlp_init(input_dim, width, 0);
    for (int k = 0; k < MlpModel::kHiddenLayers; ++k) {
        read_mat(in, m.hidden[k].weight);
        read_vec(in, m.hidden[k].bias);
        read_vec(in, m.norms[k].gamma);
        read_vec(in, m.norms[k].beta);
        read_vec(in, m.norms[k].running_mean);
        read_vec(in, m.norms[k].running_var);
    }
    read_mat(in, m.head.weight);
    read_vec(in, m.head.bias);
    // Reject trailing garbage so truncation tests stay symmetric.
    char extra;
    if (in.read(&extra, 1)) throw DataError("model file has trailing bytes");
    return m;
}

}  // namespace screwgrasp
