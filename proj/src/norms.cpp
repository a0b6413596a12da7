#include "sparsehw/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sparsehw {

namespace {

constexpr double kUnfilled = std::numeric_limits<double>::quiet_NaN();

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw domain_error(std::string(what) + ": entries must be finite");
}

}  // namespace

MaskMoments MaskMoments::all_ones(Eigen::Index n) {
    return {Eigen::VectorXd::Ones(n), Eigen::VectorXd::Ones(n), Eigen::VectorXd::Ones(n)};
}

MaskMoments MaskMoments::constant(Eigen::Index n, double p1, double p2, double p12) {
    return {Eigen::VectorXd::Constant(n, p1), Eigen::VectorXd::Constant(n, p2),
            Eigen::VectorXd::Constant(n, p12)};
}

void MaskMoments::validate() const {
    if (pi1.size() != pi2.size() || pi1.size() != pi12.size())
        throw dimension_error("MaskMoments: pi1, pi2, pi12 must have equal length");
    for (Eigen::Index j = 0; j < pi1.size(); ++j) {
        auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
        if (!in01(pi1[j]) || !in01(pi2[j]) || !in01(pi12[j]))
            throw domain_error("MaskMoments: probabilities must lie in [0,1] (coordinate " +
                               std::to_string(j) + ")");
        const double lo = std::max(0.0, pi1[j] + pi2[j] - 1.0);
        const double hi = std::min(pi1[j], pi2[j]);
        if (pi12[j] < lo - 1e-12 || pi12[j] > hi + 1e-12)
            throw domain_error("MaskMoments: Frechet bounds violated at coordinate " +
                               std::to_string(j) + ": pi12=" + std::to_string(pi12[j]) +
                               " outside [" + std::to_string(lo) + ", " + std::to_string(hi) +
                               "]");
    }
}

CoefficientMatrix::CoefficientMatrix(Eigen::MatrixXd dense) {
    if (dense.rows() != dense.cols())
        throw dimension_error("CoefficientMatrix: matrix must be square");
    if (dense.rows() < 1) throw dimension_error("CoefficientMatrix: n must be >= 1");
    require_finite(dense, "CoefficientMatrix");
    n_ = dense.rows();
    dense_ = std::move(dense);
    frob_cache_.store(kUnfilled, std::memory_order_relaxed);
    opnorm_cache_.store(kUnfilled, std::memory_order_relaxed);
}

CoefficientMatrix CoefficientMatrix::closed_form(Eigen::Index n, double diag_value,
                                                 double off_value) {
    if (n < 1) throw dimension_error("CoefficientMatrix: n must be >= 1");
    if (!std::isfinite(diag_value) || !std::isfinite(off_value))
        throw domain_error("CoefficientMatrix: entries must be finite");
    CoefficientMatrix a;
    a.n_ = n;
    a.closed_form_ = true;
    a.diag_value_ = diag_value;
    a.off_value_ = off_value;
    a.frob_cache_.store(kUnfilled, std::memory_order_relaxed);
    a.opnorm_cache_.store(kUnfilled, std::memory_order_relaxed);
    return a;
}

double CoefficientMatrix::entry(Eigen::Index i, Eigen::Index j) const {
    if (closed_form_) return i == j ? diag_value_ : off_value_;
    return dense_(i, j);
}

Eigen::MatrixXd CoefficientMatrix::materialize() const {
    if (!closed_form_) return dense_;
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n_, n_, off_value_);
    m.diagonal().setConstant(diag_value_);
    return m;
}

bool CoefficientMatrix::is_diagonal() const {
    if (closed_form_) return off_value_ == 0.0 || n_ == 1;
    for (Eigen::Index i = 0; i < n_; ++i)
        for (Eigen::Index j = 0; j < n_; ++j)
            if (i != j && dense_(i, j) != 0.0) return false;
    return true;
}

bool CoefficientMatrix::has_zero_diagonal() const {
    if (closed_form_) return diag_value_ == 0.0;
    return (dense_.diagonal().array() == 0.0).all();
}

double CoefficientMatrix::max_abs_diagonal() const {
    if (closed_form_) return std::abs(diag_value_);
    return dense_.diagonal().cwiseAbs().maxCoeff();
}

double CoefficientMatrix::frobenius_uncached() const {
    if (closed_form_) {
        const double n = static_cast<double>(n_);
        return std::sqrt(n * diag_value_ * diag_value_ +
                         n * (n - 1.0) * off_value_ * off_value_);
    }
    return dense_.norm();
}

double CoefficientMatrix::operator_norm_uncached(double tol) const {
    if (closed_form_) {
        // alpha I + beta 1 1^T has eigenvalues alpha + n beta (once) and
        // alpha (n-1 times), with alpha = diag - off, beta = off.
        const double alpha = diag_value_ - off_value_;
        const double with_ones = alpha + static_cast<double>(n_) * off_value_;
        return std::max(std::abs(alpha), std::abs(with_ones));
    }

    // Power iteration on A^T A with a deterministic all-ones start.
    const Eigen::Index n = n_;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    double lambda = 0.0;
    const int max_iters = 10000;
    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXd w = dense_.transpose() * (dense_ * v);
        const double norm_w = w.norm();
        if (norm_w == 0.0) return 0.0;  // start vector lies in the kernel of A
        const double lambda_new = v.dot(w);
        v = w / norm_w;
        if (it > 0 && std::abs(lambda_new - lambda) <= tol * std::max(1.0, std::abs(lambda_new))) {
            return std::sqrt(std::max(0.0, lambda_new));
        }
        lambda = lambda_new;
    }
    throw convergence_error("operator_norm: power iteration did not converge",
                            std::sqrt(std::max(0.0, lambda)));
}

double CoefficientMatrix::frobenius() const {
    double cached = frob_cache_.load(std::memory_order_relaxed);
    if (std::isnan(cached)) {
        cached = frobenius_uncached();
        frob_cache_.store(cached, std::memory_order_relaxed);
    }
    return cached;
}

double CoefficientMatrix::operator_norm(double tol) const {
    if (tol <= 0.0) throw domain_error("operator_norm: tol must be positive");
    double cached = opnorm_cache_.load(std::memory_order_relaxed);
    if (std::isnan(cached)) {
        cached = operator_norm_uncached(tol);
        opnorm_cache_.store(cached, std::memory_order_relaxed);
    }
    return cached;
}

double frobenius(const CoefficientMatrix& a) { return a.frobenius(); }

double operator_norm(const CoefficientMatrix& a, double tol) { return a.operator_norm(tol); }

double pi_frobenius(const CoefficientMatrix& a, const MaskMoments& m) {
    if (m.size() != a.size())
        throw dimension_error("pi_frobenius: mask moments dimension " +
                              std::to_string(m.size()) + " != matrix dimension " +
                              std::to_string(a.size()));
    const Eigen::Index n = a.size();
    if (a.is_closed_form()) {
        const double d2 = a.diag_value() * a.diag_value();
        const double o2 = a.off_value() * a.off_value();
        const double s1 = m.pi1.sum();
        const double s2 = m.pi2.sum();
        const double s12cross = m.pi1.dot(m.pi2);  // sum_i pi1_i pi2_i
        return std::sqrt(d2 * m.pi12.sum() + o2 * (s1 * s2 - s12cross));
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double aij = a.entry(i, j);
            acc += i == j ? m.pi12[i] * aij * aij : aij * aij * m.pi1[i] * m.pi2[j];
        }
    }
    return std::sqrt(acc);
}

CoefficientMatrix diag_scale(const CoefficientMatrix& a, const Eigen::VectorXd& left,
                             const Eigen::VectorXd& right) {
    if (left.size() != a.size() || right.size() != a.size())
        throw dimension_error("diag_scale: vector lengths must equal matrix dimension");
    Eigen::MatrixXd m = a.materialize();
    m = left.asDiagonal() * m * right.asDiagonal();
    return CoefficientMatrix(std::move(m));
}

CoefficientMatrix centering_coefficient_matrix(Eigen::Index n) {
    if (n < 2)
        throw domain_error("centering_coefficient_matrix: n must be >= 2 (divisor n-1)");
    const double nn = static_cast<double>(n);
    const double denom = nn * (nn - 1.0);
    return CoefficientMatrix::closed_form(n, (nn - 1.0) / denom, -1.0 / denom);
}

CoefficientMatrix ipw_coefficient_matrix(Eigen::Index n, double pi_joint, double pi_x,
                                         double pi_y) {
    if (n < 2) throw domain_error("ipw_coefficient_matrix: n must be >= 2");
    if (pi_joint <= 0.0 || pi_x <= 0.0 || pi_y <= 0.0)
        throw domain_error("ipw_coefficient_matrix: probabilities must be strictly positive");
    const double nn = static_cast<double>(n);
    const double diag = 1.0 / (nn * pi_joint);
    const double off = -1.0 / (nn * (nn - 1.0) * pi_x * pi_y);
    return CoefficientMatrix::closed_form(n, diag, off);
}

}  // namespace sparsehw
