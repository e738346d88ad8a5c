#pragma once

#include "screwgrasp/geometry.hpp"
#include "screwgrasp/socp.hpp"

#include <stdexcept>
#include <vector>

namespace screwgrasp {

/// Raised when a grasp admits no feasible force distribution for any
/// friction draw.
struct NoFeasibleGrasp : std::runtime_error {
    NoFeasibleGrasp() : std::runtime_error("no feasible grasp") {}
};

enum class ContactKind { robot, environment };

struct ContactSpec {
    Vec3 position = Vec3::Zero();
    Vec3 inward_normal = Vec3::UnitZ();
    double mu = 0.3;
    double f_normal_max = 10.0;
    ContactKind kind = ContactKind::robot;
};

/// Normal-force cap standing in for an unbounded environment contact.
inline constexpr double kEnvForceCap = 1e4;

/// One instance of the grasp force optimization: a task screw, exactly two
/// robot contacts, optional environment contacts, and the object's weight.
struct TaskInstance {
    Screw screw;
    std::vector<ContactSpec> robot_contacts;  // exactly 2
    std::vector<ContactSpec> env_contacts;
    double mass = 1.0;
    Vec3 com = Vec3::Zero();
    Vec3 gravity = Vec3(0.0, 0.0, -9.81);
};

struct MetricSolution {
    double eta = 0.0;
    std::vector<Vec3> contact_forces;
    SolveStatus status = SolveStatus::max_iter;
    double kkt_residual = 0.0;
};

/// Friction sampling recipe: robot-contact friction is drawn per solve from
/// N(mu_mean, mu_std) clamped to [0.01, 1], identical at both robot contacts;
/// environment friction stays fixed at mu_env.
struct FrictionModel {
    double mu_mean = 0.3;
    double mu_std = 0.05;
    int n_samples = 50;
    double mu_env = 0.4;
    unsigned rng_seed = 42;

    std::vector<double> draw() const;
};

/// Maximize lambda with the net moment about the screw equal to lambda * dir:
/// variables are one force per contact plus lambda, with quasi-static force
/// balance, moment balance about the screw anchor (off-axis components pinned
/// to zero), Coulomb friction cones, normal-force bounds, and lambda >= 0.
ConeProgram build_program(const TaskInstance& t);

/// Solves a built program and maps the conic solution back to contact forces.
MetricSolution solve(const ConeProgram& prog, double tol = 1e-7, int max_iter = 200);

struct GraspMetricResult {
    double eta_mean = 0.0;     // mean over feasible draws
    int n_feasible = 0;
    int n_draws = 0;
};

/// Task-dependent grasp metric: solves one instance per friction draw and
/// averages eta over the feasible ones. Throws NoFeasibleGrasp when every
/// draw is infeasible.
GraspMetricResult grasp_metric(const AntipodalPair& pair, const Screw& screw,
                               const std::vector<ContactSpec>& env, const FrictionModel& fm,
                               double mass, const Vec3& com,
                               const Vec3& gravity = Vec3(0.0, 0.0, -9.81),
                               double f_normal_max = 10.0);

/// Deterministic tangent basis completing an orthonormal frame with `n`.
std::pair<Vec3, Vec3> tangent_basis(const Vec3& n);

}  // namespace screwgrasp
