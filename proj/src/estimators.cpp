#include "sparsehw/estimators.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace sparsehw {

namespace {

void format_value(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

// Shared skeleton of the IPW and bounded-error estimators; they differ only
// in which moment table divides the two sums.
EstimateMatrix weighted_cross_cov(const MaskedSamplePair& m, const Eigen::MatrixXd& joint,
                                  const Eigen::VectorXd& wx, const Eigen::VectorXd& wy,
                                  EstimateKind kind, const char* what) {
    m.validate();
    const Eigen::Index n = m.n(), p = m.p(), q = m.q();
    if (n < 2) throw domain_error(std::string(what) + ": n must be >= 2");
    if (wx.size() != p || wy.size() != q || joint.rows() != p || joint.cols() != q)
        throw dimension_error(std::string(what) + ": moment dimensions do not match data");
    if ((wx.array() <= 0.0).any() || (wy.array() <= 0.0).any() ||
        (joint.array() <= 0.0).any())
        throw domain_error(std::string(what) + ": moments must be strictly positive");

    const double nn = static_cast<double>(n);
    const Eigen::VectorXd col_sum_x = m.Xt.colwise().sum();
    const Eigen::VectorXd col_sum_y = m.Yt.colwise().sum();
    const Eigen::MatrixXd prod = m.Xt.transpose() * m.Yt;  // sum_i Xt_ik Yt_il

    EstimateMatrix est;
    est.kind = kind;
    est.values.resize(p, q);
    for (Eigen::Index k = 0; k < p; ++k) {
        for (Eigen::Index l = 0; l < q; ++l) {
            const double same = prod(k, l);
            const double cross = col_sum_x[k] * col_sum_y[l] - same;
            est.values(k, l) = same / (nn * joint(k, l)) -
                               cross / (nn * (nn - 1.0) * wx[k] * wy[l]);
        }
    }
    return est;
}

}  // namespace

void SampleMatrixPair::validate() const {
    if (X.rows() != Y.rows())
        throw dimension_error("SampleMatrixPair: X and Y must have equal row counts");
    if (!X.allFinite() || !Y.allFinite())
        throw domain_error("SampleMatrixPair: entries must be finite");
}

void MaskedSamplePair::validate() const {
    if (Xt.rows() != Yt.rows())
        throw dimension_error("MaskedSamplePair: Xt and Yt must have equal row counts");
    if (deltaX.rows() != Xt.rows() || deltaX.cols() != Xt.cols() ||
        deltaY.rows() != Yt.rows() || deltaY.cols() != Yt.cols())
        throw dimension_error("MaskedSamplePair: delta shapes must match data shapes");
    if (!Xt.allFinite() || !Yt.allFinite())
        throw domain_error("MaskedSamplePair: entries must be finite");
}

const char* to_string(EstimateKind kind) {
    switch (kind) {
        case EstimateKind::complete: return "complete";
        case EstimateKind::ipw: return "ipw";
        case EstimateKind::bounded_error: return "bounded-error";
    }
    return "unknown";
}

double bilinear_value(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                      const CoefficientMatrix& a) {
    if (z1.size() != a.size() || z2.size() != a.size())
        throw dimension_error("bilinear_value: vector lengths must equal matrix dimension");
    if (a.is_closed_form()) {
        const double same = z1.dot(z2);
        const double cross = z1.sum() * z2.sum() - same;
        return a.diag_value() * same + a.off_value() * cross;
    }
    return z1.dot(a.materialize() * z2);
}

double bilinear_value_naive(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                            const CoefficientMatrix& a) {
    if (z1.size() != a.size() || z2.size() != a.size())
        throw dimension_error("bilinear_value: vector lengths must equal matrix dimension");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < a.size(); ++j) acc += z1[i] * a.entry(i, j) * z2[j];
    return acc;
}

EstimateMatrix sample_cross_cov(const SampleMatrixPair& s) {
    s.validate();
    const Eigen::Index n = s.n();
    if (n < 2) throw domain_error("sample_cross_cov: n must be >= 2 (divisor n-1)");
    const Eigen::RowVectorXd xbar = s.X.colwise().mean();
    const Eigen::RowVectorXd ybar = s.Y.colwise().mean();
    EstimateMatrix est;
    est.kind = EstimateKind::complete;
    est.values = (s.X.rowwise() - xbar).transpose() * (s.Y.rowwise() - ybar) /
                 (static_cast<double>(n) - 1.0);
    return est;
}

EstimateMatrix ipw_cross_cov(const MaskedSamplePair& m, const MissingSpec& spec) {
    return weighted_cross_cov(m, spec.piXY, spec.piX, spec.piY, EstimateKind::ipw,
                              "ipw_cross_cov");
}

EstimateMatrix me_cross_cov(const MaskedSamplePair& m, const MeasurementErrorSpec& spec) {
    return weighted_cross_cov(m, spec.uXY, spec.uX, spec.uY, EstimateKind::bounded_error,
                              "me_cross_cov");
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> threshold_matrix(const EstimateMatrix& est,
                                                                     double cutoff) {
    if (cutoff <= 0.0) throw domain_error("threshold_matrix: cutoff must be positive");
    return est.values.cwiseAbs().array() > cutoff;
}

void write_csv(std::ostream& os, const EstimateMatrix& est) {
    const Eigen::Index p = est.values.rows(), q = est.values.cols();
    os << "k";
    for (Eigen::Index l = 0; l < q; ++l) os << "," << l;
    os << "\n";
    for (Eigen::Index k = 0; k < p; ++k) {
        os << k;
        for (Eigen::Index l = 0; l < q; ++l) {
            os << ",";
            format_value(os, est.values(k, l));
        }
        os << "\n";
    }
}

std::string to_csv(const EstimateMatrix& est) {
    std::ostringstream os;
    write_csv(os, est);
    return os.str();
}

}  // namespace sparsehw
