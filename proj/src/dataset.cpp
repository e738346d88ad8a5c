#include "screwgrasp/dataset.hpp"

#include "screwgrasp/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace screwgrasp {

CuboidSpec CuboidSpec::make(double length, double delta, double width, double height) {
    CuboidSpec c;
    c.length_i = length;
    c.length_j = length + delta;
    c.width = width;
    c.height = height;
    if (c.length_i <= 0.0 || c.length_j <= 0.0 || width <= 0.0 || height <= 0.0) {
        throw std::invalid_argument("cuboid dimensions must be positive");
    }
    const Vec3 corner_i(c.length_i, 0.0, 0.0);
    const Vec3 corner_j(c.length_j, width, 0.0);
    c.pivot_edge = screw_from_point_dir(0.5 * (corner_i + corner_j), corner_j - corner_i);
    return c;
}

Vec3 CuboidSpec::center_of_mass() const {
    // Polygon centroid of the trapezoid cross-section, extruded along z.
    const Eigen::Vector2d v[4] = {{0.0, 0.0},
                                  {length_i, 0.0},
                                  {length_j, width},
                                  {0.0, width}};
    double area2 = 0.0;
    Eigen::Vector2d c2 = Eigen::Vector2d::Zero();
    for (int k = 0; k < 4; ++k) {
        const Eigen::Vector2d& a = v[k];
        const Eigen::Vector2d& b = v[(k + 1) % 4];
        const double cross = a.x() * b.y() - b.x() * a.y();
        area2 += cross;
        c2 += cross * (a + b);
    }
    c2 /= 3.0 * area2;
    return Vec3(c2.x(), c2.y(), 0.5 * height);
}

std::vector<ContactSpec> CuboidSpec::pivot_env_contacts(double mu_env, double f_cap) const {
    const Vec3 corner_i(length_i, 0.0, 0.0);
    const Vec3 corner_j(length_j, width, 0.0);
    std::vector<ContactSpec> env;
    for (double t : {0.25, 0.75}) {
        ContactSpec e;
        e.position = (1.0 - t) * corner_i + t * corner_j;
        e.inward_normal = Vec3::UnitZ();
        e.mu = mu_env;
        e.f_normal_max = f_cap;
        e.kind = ContactKind::environment;
        env.push_back(e);
    }
    return env;
}

int feature_length(FeatureVariant v) {
    switch (v) {
        case FeatureVariant::plucker12: return 12;
        case FeatureVariant::pointdir12: return 12;
        case FeatureVariant::combined15: return 15;
        default: return 18;
    }
}

FeatureVariant feature_variant_from_string(const std::string& tag) {
    if (tag == "plucker12") return FeatureVariant::plucker12;
    if (tag == "pointdir12") return FeatureVariant::pointdir12;
    if (tag == "combined15") return FeatureVariant::combined15;
    if (tag == "arms18") return FeatureVariant::arms18;
    throw std::invalid_argument("unknown feature variant: " + tag);
}

const char* to_string(FeatureVariant v) {
    switch (v) {
        case FeatureVariant::plucker12: return "plucker12";
        case FeatureVariant::pointdir12: return "pointdir12";
        case FeatureVariant::combined15: return "combined15";
        default: return "arms18";
    }
}

Eigen::VectorXd encode(FeatureVariant variant, const AntipodalPair& pair, const Screw& screw) {
    const bool needs_anchor = variant != FeatureVariant::plucker12;
    if (needs_anchor && !screw.anchor) {
        throw std::invalid_argument("feature variant needs a screw anchor");
    }
    Eigen::VectorXd x(feature_length(variant));
    x.segment<3>(0) = pair.c_i;
    x.segment<3>(3) = pair.c_j;
    x.segment<3>(6) = screw.dir;
    switch (variant) {
        case FeatureVariant::plucker12:
            x.segment<3>(9) = screw.moment;
            break;
        case FeatureVariant::pointdir12:
            x.segment<3>(9) = *screw.anchor;
            break;
        case FeatureVariant::combined15:
            x.segment<3>(9) = screw.moment;
            x.segment<3>(12) = *screw.anchor;
            break;
        case FeatureVariant::arms18: {
            x.segment<3>(9) = screw.moment;
            x.segment<3>(12) = *screw.anchor;
            const Vec3 gc = pair.midpoint();
            x(15) = gc.norm();
            x(16) = screw.anchor->norm();
            x(17) = (gc - *screw.anchor).norm();
            break;
        }
    }
    return x;
}

std::vector<CuboidSpec> generate_cuboid_family(const DatasetParams& p) {
    std::vector<double> lengths(p.n_lengths);
    for (int i = 0; i < p.n_lengths; ++i) {
        lengths[i] = p.length_min +
                     (p.length_max - p.length_min) * i / std::max(1, p.n_lengths - 1);
    }
    std::vector<double> deltas;
    for (int i = 0; i < p.n_delta_magnitudes; ++i) {
        const double mag = p.delta_min + (p.delta_max - p.delta_min) * i /
                                             std::max(1, p.n_delta_magnitudes - 1);
        deltas.push_back(mag);
        deltas.push_back(-mag);
    }
    std::vector<CuboidSpec> family;
    family.reserve(lengths.size() * deltas.size());
    for (double len : lengths) {
        for (double d : deltas) {
            family.push_back(CuboidSpec::make(len, d, p.width, p.height));
        }
    }
    return family;
}

std::vector<AntipodalPair> cuboid_contact_grid(const CuboidSpec& c, int res_u, int res_v) {
    if (res_u < 2 || res_v < 2) {
        throw std::invalid_argument("grid resolution must be >= 2");
    }
    const double span = std::min(c.length_i, c.length_j);
    const double x0 = kGridInsetFraction * span;
    const double x1 = span - kGridInsetFraction * span;
    const double z0 = kGridInsetFraction * c.height;
    const double z1 = c.height - kGridInsetFraction * c.height;

    std::vector<AntipodalPair> pairs;
    pairs.reserve(static_cast<std::size_t>(res_u) * res_v);
    for (int j = 0; j < res_v; ++j) {
        const double z = z0 + (z1 - z0) * j / (res_v - 1);
        for (int i = 0; i < res_u; ++i) {
            const double x = x0 + (x1 - x0) * i / (res_u - 1);
            AntipodalPair pr;
            pr.c_i = Vec3(x, 0.0, z);
            pr.c_j = Vec3(x, c.width, z);
            pr.n_i = Vec3::UnitY();
            pr.n_j = -Vec3::UnitY();
            pairs.push_back(pr);
        }
    }
    return pairs;
}

std::vector<MetricSample> label_cuboid(const CuboidSpec& c, int cuboid_id,
                                       const DatasetParams& p, const FrictionModel& fm,
                                       int jobs, LabelStats* stats) {
    const auto pairs = cuboid_contact_grid(c, p.res_u, p.res_v);
    const auto env = c.pivot_env_contacts(fm.mu_env);
    const Vec3 com = c.center_of_mass();

    std::vector<MetricSample> samples(pairs.size());
    std::vector<int> infeasible(pairs.size(), 0);
    std::vector<int> partial(pairs.size(), 0);

    parallel_for(pairs.size(), jobs, [&](std::size_t i) {
        MetricSample& s = samples[i];
        s.pair = pairs[i];
        s.screw = c.pivot_edge;
        s.cuboid_id = cuboid_id;
        try {
            const GraspMetricResult r = grasp_metric(pairs[i], c.pivot_edge, env, fm, p.mass,
                                                     com, p.gravity, p.f_normal_max);
            s.eta_raw = r.eta_mean;
            if (r.n_feasible < r.n_draws) partial[i] = 1;
        } catch (const NoFeasibleGrasp&) {
            s.eta_raw = 0.0;  // no admissible moment at all
            infeasible[i] = 1;
        }
    });

    double lo = samples.front().eta_raw;
    double hi = lo;
    for (const MetricSample& s : samples) {
        lo = std::min(lo, s.eta_raw);
        hi = std::max(hi, s.eta_raw);
    }
    const double range = hi - lo;
    for (MetricSample& s : samples) {
        s.y = range > 0.0 ? (s.eta_raw - lo) / range : 0.5;
    }

    if (stats) {
        stats->n_samples += static_cast<int>(samples.size());
        stats->n_infeasible += std::accumulate(infeasible.begin(), infeasible.end(), 0);
        stats->n_partial_draws += std::accumulate(partial.begin(), partial.end(), 0);
    }
    return samples;
}

std::vector<MetricSample> generate_dataset(const DatasetParams& p, const FrictionModel& fm,
                                           int jobs, LabelStats* stats) {
    const auto family = generate_cuboid_family(p);
    std::vector<MetricSample> all;
    for (std::size_t k = 0; k < family.size(); ++k) {
        auto part = label_cuboid(family[k], static_cast<int>(k), p, fm, jobs, stats);
        all.insert(all.end(), part.begin(), part.end());
    }
    return all;
}

namespace {

void write_rows(std::ofstream& out, const std::vector<MetricSample>& samples) {
    out << "cuboid_id,cix,ciy,ciz,cjx,cjy,cjz,lx,ly,lz,mx,my,mz,eta_raw,y\n";
    char buf[512];
    for (const MetricSample& s : samples) {
        std::snprintf(buf, sizeof(buf),
                      "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                      "%.17g,%.17g,%.17g\n",
                      s.cuboid_id, s.pair.c_i.x(), s.pair.c_i.y(), s.pair.c_i.z(),
                      s.pair.c_j.x(), s.pair.c_j.y(), s.pair.c_j.z(), s.screw.dir.x(),
                      s.screw.dir.y(), s.screw.dir.z(), s.screw.moment.x(), s.screw.moment.y(),
                      s.screw.moment.z(), s.eta_raw, s.y);
        out << buf;
    }
}

}  // namespace

void write_dataset_csv(const std::vector<MetricSample>& samples,
                       const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot open " + file.string());
    write_rows(out, samples);
}

void export_dataset(const std::vector<MetricSample>& samples, double train_fraction,
                    const std::filesystem::path& stem, unsigned seed) {
    if (samples.empty()) throw std::invalid_argument("empty dataset");
    if (train_fraction <= 0.0 || train_fraction > 1.0) {
        throw std::invalid_argument("train fraction must be in (0, 1]");
    }
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const std::size_t n_train =
        static_cast<std::size_t>(std::llround(train_fraction * samples.size()));
    std::vector<MetricSample> train, val;
    train.reserve(n_train);
    val.reserve(samples.size() - n_train);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? train : val).push_back(samples[order[i]]);
    }
    write_dataset_csv(train, stem.string() + "_train.csv");
    write_dataset_csv(val, stem.string() + "_val.csv");
}

LoadedDataset load_dataset_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("cuboid_id,", 0) != 0) {
        throw std::runtime_error("bad dataset header in " + file.string());
    }
    std::vector<std::array<double, 14>> rows;
    std::vector<int> ids;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::array<double, 14> row{};
        char* cur = line.data();
        char* end = nullptr;
        const int id = static_cast<int>(std::strtol(cur, &end, 10));
        if (end == cur) throw std::runtime_error("bad dataset row in " + file.string());
        cur = end;
        for (double& v : row) {
            if (*cur != ',') throw std::runtime_error("bad dataset row in " + file.string());
            ++cur;
            v = std::strtod(cur, &end);
            if (end == cur) throw std::runtime_error("bad dataset row in " + file.string());
            cur = end;
        }
        ids.push_back(id);
        rows.push_back(row);
    }
    LoadedDataset ds;
    ds.features.resize(static_cast<Eigen::Index>(rows.size()), 12);
    ds.labels.resize(static_cast<Eigen::Index>(rows.size()));
    ds.cuboid_ids = std::move(ids);
    ds.eta_raw.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int k = 0; k < 12; ++k) ds.features(static_cast<Eigen::Index>(i), k) = rows[i][k];
        ds.eta_raw.push_back(rows[i][12]);
        ds.labels(static_cast<Eigen::Index>(i)) = rows[i][13];
    }
    return ds;
}

}  // namespace screwgrasp
