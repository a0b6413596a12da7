#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <vector>

#include "sparsehw/errors.hpp"

namespace sparsehw {

// Bernoulli mask moments for an n-coordinate bilinear form: marginal means of
// the two mask vectors and the per-coordinate joint mean E[gamma_1j gamma_2j].
struct MaskMoments {
    Eigen::VectorXd pi1;
    Eigen::VectorXd pi2;
    Eigen::VectorXd pi12;

    static MaskMoments all_ones(Eigen::Index n);
    static MaskMoments constant(Eigen::Index n, double p1, double p2, double p12);

    Eigen::Index size() const { return pi1.size(); }

    // Checks ranges and the Frechet feasibility of every coordinate:
    //   max(0, pi1 + pi2 - 1) <= pi12 <= min(pi1, pi2).
    void validate() const;
};

// n x n coefficient matrix of a bilinear form. Centering and IPW matrices are
// kept in closed form (diagonal value, off-diagonal value) so norms are exact
// and storage is O(1); arbitrary matrices are stored densely. Norms are cached
// on first use; duplicate concurrent fills are benign.
class CoefficientMatrix {
public:
    explicit CoefficientMatrix(Eigen::MatrixXd dense);
    static CoefficientMatrix closed_form(Eigen::Index n, double diag_value, double off_value);

    Eigen::Index size() const { return n_; }
    bool is_closed_form() const { return closed_form_; }
    double diag_value() const { return diag_value_; }
    double off_value() const { return off_value_; }

    double entry(Eigen::Index i, Eigen::Index j) const;
    Eigen::MatrixXd materialize() const;

    bool is_diagonal() const;
    bool has_zero_diagonal() const;
    double max_abs_diagonal() const;

    double frobenius() const;
    double operator_norm(double tol = 1e-10) const;

private:
    CoefficientMatrix() = default;

    double frobenius_uncached() const;
    double operator_norm_uncached(double tol) const;

    Eigen::Index n_ = 0;
    bool closed_form_ = false;
    double diag_value_ = 0.0;
    double off_value_ = 0.0;
    Eigen::MatrixXd dense_;

    mutable std::atomic<double> frob_cache_;
    mutable std::atomic<double> opnorm_cache_;
};

double frobenius(const CoefficientMatrix& a);
double operator_norm(const CoefficientMatrix& a, double tol = 1e-10);

// pi-weighted Frobenius norm: joint mask means weight the diagonal, marginal
// products weight the off-diagonal:
//   ||A||_{F,pi} = sqrt( sum_j pi12_j a_jj^2 + sum_{i != j} a_ij^2 pi1_i pi2_j ).
double pi_frobenius(const CoefficientMatrix& a, const MaskMoments& m);

// Entrywise scaling left_i * a_ij * right_j, i.e. D(left) A D(right).
CoefficientMatrix diag_scale(const CoefficientMatrix& a,
                             const Eigen::VectorXd& left,
                             const Eigen::VectorXd& right);

// A = (n I - 1 1^T) / (n (n-1)): the coefficient matrix representing the
// sample cross-covariance with divisor n-1. ||A||_F = 1/sqrt(n-1),
// ||A||_2 = 1/(n-1).
CoefficientMatrix centering_coefficient_matrix(Eigen::Index n);

// Coefficient matrix of the inverse-probability-weighted estimator:
// diagonal 1/(n pi_joint), off-diagonal -1/(n (n-1) pi_x pi_y).
CoefficientMatrix ipw_coefficient_matrix(Eigen::Index n, double pi_joint, double pi_x,
                                         double pi_y);

}  // namespace sparsehw
