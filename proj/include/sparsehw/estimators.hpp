#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

#include "sparsehw/norms.hpp"
#include "sparsehw/specs.hpp"

namespace sparsehw {

// Fully observed samples: rows are samples, columns are variables.
struct SampleMatrixPair {
    Eigen::MatrixXd X;  // n x p
    Eigen::MatrixXd Y;  // n x q

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }
    Eigen::Index q() const { return Y.cols(); }

    void validate() const;
};

// Masked (or error-contaminated) observations: Xt = deltaX .* X entrywise,
// with the multiplicative factors kept alongside. Missing entries are explicit
// zeros in Xt, never sentinels, so the bilinear representation stays exact.
struct MaskedSamplePair {
    Eigen::MatrixXd Xt;      // n x p
    Eigen::MatrixXd Yt;      // n x q
    Eigen::MatrixXd deltaX;  // n x p
    Eigen::MatrixXd deltaY;  // n x q

    Eigen::Index n() const { return Xt.rows(); }
    Eigen::Index p() const { return Xt.cols(); }
    Eigen::Index q() const { return Yt.cols(); }

    void validate() const;
};

enum class EstimateKind { complete, ipw, bounded_error };

struct EstimateMatrix {
    Eigen::MatrixXd values;  // p x q
    EstimateKind kind = EstimateKind::complete;
};

const char* to_string(EstimateKind kind);

// z1^T A z2 by the optimized path (closed-form aware, O(n) for closed-form A).
double bilinear_value(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                      const CoefficientMatrix& a);

// Reference double-loop evaluation, kept as the oracle for the optimized path.
double bilinear_value_naive(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                            const CoefficientMatrix& a);

// s_kl = (n-1)^-1 sum_i (X_ik - Xbar_k)(Y_il - Ybar_l).
EstimateMatrix sample_cross_cov(const SampleMatrixPair& s);

// The inverse-probability-weighted estimator
//   s~_kl = sum_i XtYt / (n pi_kl) - sum_{i != j} XtYt / (n(n-1) pi_k pi_l),
// with the cross term via (sum Xt)(sum Yt) - sum XtYt.
EstimateMatrix ipw_cross_cov(const MaskedSamplePair& m, const MissingSpec& spec);

// Bounded-error estimator: same shape with u-moments in place of pi-moments.
EstimateMatrix me_cross_cov(const MaskedSamplePair& m, const MeasurementErrorSpec& spec);

// decision(k,l) = |est(k,l)| > cutoff (strict; ties are non-rejections).
Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> threshold_matrix(const EstimateMatrix& est,
                                                                     double cutoff);

// CSV with an index header row and a leading index column, 17 significant
// digits, '.' decimal separator.
void write_csv(std::ostream& os, const EstimateMatrix& est);
std::string to_csv(const EstimateMatrix& est);

}  // namespace sparsehw
