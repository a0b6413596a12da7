#include "sparsehw/specs.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <vector>

namespace sparsehw {

namespace {

void require_matrix_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                          const char* name) {
    if (m.rows() != rows || m.cols() != cols)
        throw dimension_error(std::string(name) + ": expected " + std::to_string(rows) + "x" +
                              std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()));
}

// 64-point Gauss-Legendre rule mapped to [0,1].
struct UnitRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    UnitRule() {
        using rule = boost::math::quadrature::gauss<double, 64>;
        const auto& xs = rule::abscissa();
        const auto& ws = rule::weights();
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (xs[i] != 0.0) {
                nodes.push_back(0.5 * (1.0 - xs[i]));
                weights.push_back(0.5 * ws[i]);
            }
            nodes.push_back(0.5 * (1.0 + xs[i]));
            weights.push_back(0.5 * ws[i]);
        }
    }
};

const UnitRule& unit_rule() {
    static const UnitRule rule;
    return rule;
}

}  // namespace

double beta_quantile(double a, double b, double u) {
    if (a <= 0.0) return 0.0;
    if (b <= 0.0) return 1.0;
    return boost::math::ibeta_inv(a, b, u);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& sigma, double tol) {
    if (sigma.rows() != sigma.cols())
        throw dimension_error("psd_cholesky: matrix must be square");
    const Eigen::Index n = sigma.rows();
    const double scale = std::max(1.0, sigma.diagonal().cwiseAbs().maxCoeff());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = sigma(j, j) - L.row(j).head(j).squaredNorm();
        if (d < -tol * scale)
            throw domain_error("covariance is not positive semidefinite: leading minor of order " +
                               std::to_string(j + 1) + " fails (pivot " + std::to_string(d) +
                               ")");
        if (d <= tol * scale) {
            // Semidefinite direction; the column stays zero.
            continue;
        }
        const double ljj = std::sqrt(d);
        L(j, j) = ljj;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            L(i, j) = (sigma(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / ljj;
        }
    }
    return L;
}

PopulationSpec PopulationSpec::gaussian(Eigen::VectorXd muX, Eigen::VectorXd muY,
                                        Eigen::MatrixXd SigmaXX, Eigen::MatrixXd SigmaYY,
                                        Eigen::MatrixXd SigmaXY, double KX, double KY) {
    PopulationSpec spec;
    spec.muX = std::move(muX);
    spec.muY = std::move(muY);
    spec.SigmaXX = std::move(SigmaXX);
    spec.SigmaYY = std::move(SigmaYY);
    spec.SigmaXY = std::move(SigmaXY);
    spec.kind = PopulationKind::gaussian;
    // psi2 of N(0, sigma^2) is sigma * sqrt(2/pi), attained at p = 1.
    const double psi2_normal = std::sqrt(2.0 / M_PI);
    spec.KX = KX > 0.0 ? KX
                       : psi2_normal * std::sqrt(spec.SigmaXX.diagonal().maxCoeff());
    spec.KY = KY > 0.0 ? KY
                       : psi2_normal * std::sqrt(spec.SigmaYY.diagonal().maxCoeff());
    spec.validate();
    return spec;
}

PopulationSpec PopulationSpec::bounded_mixture(Eigen::VectorXd muX, Eigen::VectorXd muY,
                                               Eigen::MatrixXd SigmaXX, Eigen::MatrixXd SigmaYY,
                                               Eigen::MatrixXd SigmaXY) {
    PopulationSpec spec;
    spec.muX = std::move(muX);
    spec.muY = std::move(muY);
    spec.SigmaXX = std::move(SigmaXX);
    spec.SigmaYY = std::move(SigmaYY);
    spec.SigmaXY = std::move(SigmaXY);
    spec.kind = PopulationKind::bounded_mixture;
    // Mixture innovations are bounded by 2, giving a Hoeffding variance proxy
    // of 2*sd per coordinate; sup_p sqrt(2) (p Gamma(p/2))^(1/p) / sqrt(p) at
    // p=1 turns that into a valid (loose) psi2 bound of 5.02*sd.
    const double psi2_factor = 5.02;
    spec.KX = psi2_factor * std::sqrt(spec.SigmaXX.diagonal().maxCoeff());
    spec.KY = psi2_factor * std::sqrt(spec.SigmaYY.diagonal().maxCoeff());
    spec.validate();
    return spec;
}

Eigen::MatrixXd PopulationSpec::block_covariance() const {
    const Eigen::Index pp = p(), qq = q();
    Eigen::MatrixXd sigma(pp + qq, pp + qq);
    sigma.topLeftCorner(pp, pp) = SigmaXX;
    sigma.topRightCorner(pp, qq) = SigmaXY;
    sigma.bottomLeftCorner(qq, pp) = SigmaXY.transpose();
    sigma.bottomRightCorner(qq, qq) = SigmaYY;
    return sigma;
}

const Eigen::MatrixXd& PopulationSpec::cholesky_factor() const {
    if (!chol_) chol_ = psd_cholesky(block_covariance());
    return *chol_;
}

void PopulationSpec::validate() const {
    const Eigen::Index pp = p(), qq = q();
    if (pp < 1 || qq < 1) throw dimension_error("PopulationSpec: p and q must be >= 1");
    require_matrix_shape(SigmaXX, pp, pp, "PopulationSpec.SigmaXX");
    require_matrix_shape(SigmaYY, qq, qq, "PopulationSpec.SigmaYY");
    require_matrix_shape(SigmaXY, pp, qq, "PopulationSpec.SigmaXY");
    if (KX <= 0.0 || KY <= 0.0)
        throw domain_error("PopulationSpec: KX and KY must be positive");
    cholesky_factor();  // PSD check
}

double coupled_joint_probability(double pi1, double pi2, MaskCoupling coupling) {
    const double theta = coupling.theta;
    const double indep = pi1 * pi2;
    if (theta >= 0.0) return theta * std::min(pi1, pi2) + (1.0 - theta) * indep;
    const double w = -theta;
    return w * std::max(0.0, pi1 + pi2 - 1.0) + (1.0 - w) * indep;
}

MissingSpec MissingSpec::with_coupling(Eigen::VectorXd piX, Eigen::VectorXd piY,
                                       MaskCoupling coupling) {
    if (coupling.theta < -1.0 || coupling.theta > 1.0)
        throw domain_error("MissingSpec: coupling theta must lie in [-1,1]");
    MissingSpec spec;
    spec.piX = std::move(piX);
    spec.piY = std::move(piY);
    spec.piXY.resize(spec.p(), spec.q());
    for (Eigen::Index k = 0; k < spec.p(); ++k)
        for (Eigen::Index l = 0; l < spec.q(); ++l)
            spec.piXY(k, l) = coupled_joint_probability(spec.piX[k], spec.piY[l], coupling);
    spec.coupling = coupling;
    spec.validate();
    return spec;
}

MissingSpec MissingSpec::from_table(Eigen::VectorXd piX, Eigen::VectorXd piY,
                                    Eigen::MatrixXd piXY) {
    MissingSpec spec;
    spec.piX = std::move(piX);
    spec.piY = std::move(piY);
    spec.piXY = std::move(piXY);
    spec.validate();

    // Recover the latent coupling when the table is consistent with one theta;
    // otherwise the spec stays non-generable.
    double theta = 0.0;
    bool found = false;
    for (Eigen::Index k = 0; k < spec.p() && !found; ++k) {
        for (Eigen::Index l = 0; l < spec.q() && !found; ++l) {
            const double indep = spec.piX[k] * spec.piY[l];
            const double co = std::min(spec.piX[k], spec.piY[l]);
            const double ex = std::max(0.0, spec.piX[k] + spec.piY[l] - 1.0);
            const double cell = spec.piXY(k, l);
            if (std::abs(cell - indep) <= 1e-12) continue;
            theta = cell > indep ? (cell - indep) / (co - indep) : -(indep - cell) / (indep - ex);
            found = true;
        }
    }
    MaskCoupling candidate{found ? theta : 0.0};
    bool consistent = candidate.theta >= -1.0 && candidate.theta <= 1.0;
    for (Eigen::Index k = 0; k < spec.p() && consistent; ++k)
        for (Eigen::Index l = 0; l < spec.q() && consistent; ++l)
            consistent = std::abs(spec.piXY(k, l) - coupled_joint_probability(
                                                        spec.piX[k], spec.piY[l], candidate)) <=
                         1e-9;
    if (consistent) spec.coupling = candidate;
    return spec;
}

void MissingSpec::validate() const {
    const Eigen::Index pp = p(), qq = q();
    if (pp < 1 || qq < 1) throw dimension_error("MissingSpec: p and q must be >= 1");
    require_matrix_shape(piXY, pp, qq, "MissingSpec.piXY");
    for (Eigen::Index k = 0; k < pp; ++k)
        if (!(piX[k] > 0.0 && piX[k] <= 1.0))
            throw domain_error("MissingSpec.piX[" + std::to_string(k) +
                               "]=" + std::to_string(piX[k]) + " must lie in (0,1]");
    for (Eigen::Index l = 0; l < qq; ++l)
        if (!(piY[l] > 0.0 && piY[l] <= 1.0))
            throw domain_error("MissingSpec.piY[" + std::to_string(l) +
                               "]=" + std::to_string(piY[l]) + " must lie in (0,1]");
    for (Eigen::Index k = 0; k < pp; ++k) {
        for (Eigen::Index l = 0; l < qq; ++l) {
            const double lo = std::max(0.0, piX[k] + piY[l] - 1.0);
            const double hi = std::min(piX[k], piY[l]);
            if (piXY(k, l) < lo - 1e-12 || piXY(k, l) > hi + 1e-12)
                throw domain_error("MissingSpec.piXY(" + std::to_string(k) + "," +
                                   std::to_string(l) + ")=" + std::to_string(piXY(k, l)) +
                                   " violates the Frechet bounds [" + std::to_string(lo) + ", " +
                                   std::to_string(hi) + "]");
        }
    }
}

MeasurementErrorSpec MeasurementErrorSpec::beta_copula(Eigen::VectorXd uX, Eigen::VectorXd uY,
                                                       Eigen::VectorXd BX, Eigen::VectorXd BY,
                                                       double rho, double dispersion) {
    if (rho < -1.0 || rho > 1.0)
        throw domain_error("MeasurementErrorSpec: rho must lie in [-1,1]");
    if (dispersion <= 0.0)
        throw domain_error("MeasurementErrorSpec: dispersion must be positive");
    MeasurementErrorSpec spec;
    spec.uX = std::move(uX);
    spec.uY = std::move(uY);
    spec.BX = std::move(BX);
    spec.BY = std::move(BY);
    spec.rho = rho;
    spec.dispersion = dispersion;

    const Eigen::Index pp = spec.p(), qq = spec.q();
    spec.uXY.resize(pp, qq);
    if (rho == 0.0) {
        spec.uXY = spec.uX * spec.uY.transpose();
    } else {
        // u_kl = B_k B_l E[Qk(Phi(G1)) Ql(Phi(G2))] over the Gaussian copula,
        // evaluated with a tensor Gauss-Legendre rule on the uniform scale.
        const auto& rule = unit_rule();
        const std::size_t m = rule.nodes.size();
        const boost::math::normal_distribution<double> std_normal;
        std::vector<double> z(m);
        for (std::size_t i = 0; i < m; ++i)
            z[i] = boost::math::quantile(std_normal, rule.nodes[i]);
        const double mix = std::sqrt(1.0 - rho * rho);

        Eigen::MatrixXd qx(pp, static_cast<Eigen::Index>(m));
        for (Eigen::Index k = 0; k < pp; ++k) {
            const double a = dispersion * spec.uX[k] / spec.BX[k];
            for (std::size_t i = 0; i < m; ++i)
                qx(k, static_cast<Eigen::Index>(i)) =
                    beta_quantile(a, dispersion - a, rule.nodes[i]);
        }
        // Ql evaluated at Phi(rho z_i + sqrt(1-rho^2) z_j) for every node pair.
        Eigen::MatrixXd phi_grid(m, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                phi_grid(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    boost::math::cdf(std_normal, rho * z[i] + mix * z[j]);
        for (Eigen::Index l = 0; l < qq; ++l) {
            const double a = dispersion * spec.uY[l] / spec.BY[l];
            Eigen::MatrixXd ql(m, m);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    ql(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        beta_quantile(a, dispersion - a,
                                      phi_grid(static_cast<Eigen::Index>(i),
                                               static_cast<Eigen::Index>(j)));
            for (Eigen::Index k = 0; k < pp; ++k) {
                double acc = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    double inner = 0.0;
                    for (std::size_t j = 0; j < m; ++j)
                        inner += rule.weights[j] * ql(static_cast<Eigen::Index>(i),
                                                      static_cast<Eigen::Index>(j));
                    acc += rule.weights[i] * qx(k, static_cast<Eigen::Index>(i)) * inner;
                }
                spec.uXY(k, l) = spec.BX[k] * spec.BY[l] * acc;
            }
        }
    }
    spec.validate();
    return spec;
}

MeasurementErrorSpec MeasurementErrorSpec::from_table(Eigen::VectorXd uX, Eigen::VectorXd uY,
                                                      Eigen::MatrixXd uXY, Eigen::VectorXd BX,
                                                      Eigen::VectorXd BY) {
    MeasurementErrorSpec spec;
    spec.uX = std::move(uX);
    spec.uY = std::move(uY);
    spec.uXY = std::move(uXY);
    spec.BX = std::move(BX);
    spec.BY = std::move(BY);
    spec.validate();
    return spec;
}

void MeasurementErrorSpec::validate() const {
    const Eigen::Index pp = p(), qq = q();
    if (pp < 1 || qq < 1) throw dimension_error("MeasurementErrorSpec: p and q must be >= 1");
    require_matrix_shape(uXY, pp, qq, "MeasurementErrorSpec.uXY");
    if (BX.size() != pp || BY.size() != qq)
        throw dimension_error("MeasurementErrorSpec: BX/BY dimensions do not match uX/uY");
    for (Eigen::Index k = 0; k < pp; ++k) {
        if (!(BX[k] > 0.0))
            throw domain_error("MeasurementErrorSpec.BX[" + std::to_string(k) +
                               "] must be positive");
        if (!(uX[k] > 0.0) || uX[k] > BX[k] + 1e-12)
            throw domain_error("MeasurementErrorSpec.uX[" + std::to_string(k) +
                               "]=" + std::to_string(uX[k]) + " must lie in (0, BX]");
    }
    for (Eigen::Index l = 0; l < qq; ++l) {
        if (!(BY[l] > 0.0))
            throw domain_error("MeasurementErrorSpec.BY[" + std::to_string(l) +
                               "] must be positive");
        if (!(uY[l] > 0.0) || uY[l] > BY[l] + 1e-12)
            throw domain_error("MeasurementErrorSpec.uY[" + std::to_string(l) +
                               "]=" + std::to_string(uY[l]) + " must lie in (0, BY]");
    }
    for (Eigen::Index k = 0; k < pp; ++k)
        for (Eigen::Index l = 0; l < qq; ++l)
            if (!(uXY(k, l) > 0.0) || uXY(k, l) > BX[k] * BY[l] + 1e-12)
                throw domain_error("MeasurementErrorSpec.uXY(" + std::to_string(k) + "," +
                                   std::to_string(l) + ") must lie in (0, BX*BY]");
}

}  // namespace sparsehw
