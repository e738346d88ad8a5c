#include "screwgrasp/metric.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace screwgrasp {

namespace {

Mat3 skew(const Vec3& a) {
    Mat3 s;
    s << 0.0, -a.z(), a.y(),
         a.z(), 0.0, -a.x(),
         -a.y(), a.x(), 0.0;
    return s;
}

}  // namespace

std::pair<Vec3, Vec3> tangent_basis(const Vec3& n) {
    int k_min = 0;
    for (int k = 1; k < 3; ++k) {
        if (std::abs(n[k]) < std::abs(n[k_min])) k_min = k;
    }
    const Vec3 t1 = n.cross(Vec3::Unit(k_min)).normalized();
    return {t1, n.cross(t1)};
}

std::vector<double> FrictionModel::draw() const {
    std::mt19937 rng(rng_seed);
    std::normal_distribution<double> dist(mu_mean, mu_std);
    std::vector<double> mus(static_cast<std::size_t>(n_samples));
    for (double& mu : mus) {
        mu = std::clamp(dist(rng), 0.01, 1.0);
    }
    return mus;
}

ConeProgram build_program(const TaskInstance& t) {
    std::vector<ContactSpec> contacts = t.robot_contacts;
    contacts.insert(contacts.end(), t.env_contacts.begin(), t.env_contacts.end());
    const int nc = static_cast<int>(contacts.size());
    const int n = 3 * nc + 1;  // forces plus lambda
    const int lam = 3 * nc;

    const Vec3 p = t.screw.anchor ? *t.screw.anchor : t.screw.closest_point();
    const Vec3 grav_force = t.mass * t.gravity;

    ConeProgram prog;
    prog.c = Eigen::VectorXd::Zero(n);
    prog.c(lam) = -1.0;  // maximize lambda

    prog.A = Eigen::MatrixXd::Zero(6, n);
    prog.b = Eigen::VectorXd::Zero(6);
    for (int k = 0; k < nc; ++k) {
        prog.A.block<3, 3>(0, 3 * k) = Mat3::Identity();
        prog.A.block<3, 3>(3, 3 * k) = skew(contacts[k].position - p);
    }
    prog.A.block<3, 1>(3, lam) = -t.screw.dir;
    prog.b.head<3>() = -grav_force;
    prog.b.tail<3>() = -(t.com - p).cross(grav_force);

    // Cone rows: per contact 0 <= f.n <= f_max, lambda >= 0, then one
    // friction cone per contact.
    const int n_lp = 2 * nc + 1;
    const int m = n_lp + 3 * nc;
    prog.G = Eigen::MatrixXd::Zero(m, n);
    prog.h = Eigen::VectorXd::Zero(m);
    prog.n_nonneg = n_lp;
    for (int k = 0; k < nc; ++k) {
        const Vec3& nk = contacts[k].inward_normal;
        prog.G.block<1, 3>(2 * k, 3 * k) = -nk.transpose();  // f.n >= 0
        prog.G.block<1, 3>(2 * k + 1, 3 * k) = nk.transpose();
        prog.h(2 * k + 1) = contacts[k].f_normal_max;  // f.n <= f_max
    }
    prog.G(2 * nc, lam) = -1.0;  // lambda >= 0

    prog.soc_dims.assign(nc, 3);
    for (int k = 0; k < nc; ++k) {
        const Vec3& nk = contacts[k].inward_normal;
        const auto [t1, t2] = tangent_basis(nk);
        const int row = n_lp + 3 * k;
        prog.G.block<1, 3>(row, 3 * k) = -contacts[k].mu * nk.transpose();
        prog.G.block<1, 3>(row + 1, 3 * k) = -t1.transpose();
        prog.G.block<1, 3>(row + 2, 3 * k) = -t2.transpose();
    }
    return prog;
}

MetricSolution solve(const ConeProgram& prog, double tol, int max_iter) {
    SolverSettings st;
    st.tol = tol;
    st.max_iter = max_iter;
    const ConeSolution cs = solve_cone_program(prog, st);

    MetricSolution ms;
    ms.status = cs.status;
    ms.kkt_residual = cs.kkt_residual;
    const int nc = (prog.num_vars() - 1) / 3;
    if (cs.status == SolveStatus::optimal) {
        ms.eta = -cs.objective;
        ms.contact_forces.reserve(nc);
        for (int k = 0; k < nc; ++k) {
            ms.contact_forces.emplace_back(cs.x.segment<3>(3 * k));
        }
    }
    return ms;
}

GraspMetricResult grasp_metric(const AntipodalPair& pair, const Screw& screw,
                               const std::vector<ContactSpec>& env, const FrictionModel& fm,
                               double mass, const Vec3& com, const Vec3& gravity,
                               double f_normal_max) {
    TaskInstance inst;
    inst.screw = screw;
    inst.robot_contacts = {
        {pair.c_i, pair.n_i, fm.mu_mean, f_normal_max, ContactKind::robot},
        {pair.c_j, pair.n_j, fm.mu_mean, f_normal_max, ContactKind::robot},
    };
    inst.env_contacts = env;
    for (ContactSpec& e : inst.env_contacts) {
        e.mu = fm.mu_env;
        e.kind = ContactKind::environment;
    }
    inst.mass = mass;
    inst.com = com;
    inst.gravity = gravity;

    GraspMetricResult res;
    res.n_draws = fm.n_samples;
    double sum = 0.0;
    for (double mu : fm.draw()) {
        inst.robot_contacts[0].mu = mu;
        inst.robot_contacts[1].mu = mu;
        const MetricSolution ms = solve(build_program(inst));
        if (ms.status == SolveStatus::optimal) {
            sum += ms.eta;
            ++res.n_feasible;
        }
    }
    if (res.n_feasible == 0) {
        throw NoFeasibleGrasp();
    }
    res.eta_mean = sum / res.n_feasible;
    return res;
}

}  // namespace screwgrasp
