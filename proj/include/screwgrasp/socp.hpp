#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace screwgrasp {

/// Conic program in standard form:
///
///   minimize    c'x
///   subject to  A x = b
///               h - G x in K
///
/// where K = R+^{n_nonneg} x SOC(d_1) x ... x SOC(d_k), with the nonnegative
/// rows of G/h first and the second-order-cone blocks following in order.
struct ConeProgram {
    Eigen::VectorXd c;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::MatrixXd G;
    Eigen::VectorXd h;
    int n_nonneg = 0;
    std::vector<int> soc_dims;

    int num_vars() const { return static_cast<int>(c.size()); }
    int num_eq() const { return static_cast<int>(b.size()); }
    int num_cone_rows() const { return static_cast<int>(h.size()); }
};

enum class SolveStatus { optimal, infeasible, unbounded, max_iter };

const char* to_string(SolveStatus s);

struct SolverSettings {
    double tol = 1e-7;
    int max_iter = 200;
    double step_fraction = 0.99;   // back off from the cone boundary
    double static_reg = 1e-10;     // diagonal regularization of the KKT matrix
    int refine_iters = 2;          // iterative refinement rounds per solve
};

struct ConeSolution {
    SolveStatus status = SolveStatus::max_iter;
    Eigen::VectorXd x;       // primal point (divided by tau)
    Eigen::VectorXd y;       // equality multipliers
    Eigen::VectorXd z;       // cone multipliers
    Eigen::VectorXd s;       // cone slacks
    double objective = 0.0;
    int iterations = 0;
    double kkt_residual = 0.0;   // max of primal/dual residuals at exit
    double duality_gap = 0.0;
    double certificate_residual = 0.0;  // infeasibility certificate quality
};

/// Primal-dual interior-point solve of the homogeneous self-dual embedding,
/// with Nesterov-Todd scaling and Mehrotra predictor-corrector steps. Dense
/// linear algebra throughout; intended for small programs (tens of variables).
ConeSolution solve_cone_program(const ConeProgram& prog, const SolverSettings& settings = {});

}  // namespace screwgrasp
