#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "sparsehw/errors.hpp"

namespace sparsehw {

enum class PopulationKind { gaussian, bounded_mixture };

// Population moments of (X, Y) plus psi2 bounds. The block covariance
// [[Sxx, Sxy], [Sxy^T, Syy]] must be positive semidefinite; validation
// produces the factor used by the generator.
struct PopulationSpec {
    Eigen::VectorXd muX;
    Eigen::VectorXd muY;
    Eigen::MatrixXd SigmaXX;
    Eigen::MatrixXd SigmaYY;
    Eigen::MatrixXd SigmaXY;
    double KX = 0.0;
    double KY = 0.0;
    PopulationKind kind = PopulationKind::gaussian;

    Eigen::Index p() const { return muX.size(); }
    Eigen::Index q() const { return muY.size(); }

    // Fills KX/KY from the marginal standard deviations when left at 0.
    static PopulationSpec gaussian(Eigen::VectorXd muX, Eigen::VectorXd muY,
                                   Eigen::MatrixXd SigmaXX, Eigen::MatrixXd SigmaYY,
                                   Eigen::MatrixXd SigmaXY, double KX = 0.0, double KY = 0.0);
    static PopulationSpec bounded_mixture(Eigen::VectorXd muX, Eigen::VectorXd muY,
                                          Eigen::MatrixXd SigmaXX, Eigen::MatrixXd SigmaYY,
                                          Eigen::MatrixXd SigmaXY);

    Eigen::MatrixXd block_covariance() const;

    // Lower-triangular L with L L^T equal to the block covariance; throws
    // domain_error naming the offending leading minor if not PSD.
    const Eigen::MatrixXd& cholesky_factor() const;

    void validate() const;

private:
    mutable std::optional<Eigen::MatrixXd> chol_;
};

// Semidefinite Cholesky: zero pivots are tolerated, negative pivots beyond
// tol raise with the 1-based index of the offending leading minor.
Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& sigma, double tol = 1e-9);

// Latent coupling between the X-side and Y-side shared uniforms. theta in
// [-1, 1]: positive weight on the comonotone copula, negative on the
// countermonotone one, remainder independent.
struct MaskCoupling {
    double theta = 0.0;

    static MaskCoupling independent() { return {0.0}; }
    static MaskCoupling comonotone() { return {1.0}; }
    static MaskCoupling exclusive() { return {-1.0}; }
};

// Bernoulli mask moments of Assumption-2 form. piXY is exact for the shared
// latent-uniform generator whenever the spec was built from a coupling;
// arbitrary Frechet-feasible tables are accepted for estimation and bound
// evaluation but are not generable in general (see gen_masks).
struct MissingSpec {
    Eigen::VectorXd piX;
    Eigen::VectorXd piY;
    Eigen::MatrixXd piXY;
    std::optional<MaskCoupling> coupling;

    static MissingSpec with_coupling(Eigen::VectorXd piX, Eigen::VectorXd piY,
                                     MaskCoupling coupling);
    static MissingSpec from_table(Eigen::VectorXd piX, Eigen::VectorXd piY,
                                  Eigen::MatrixXd piXY);

    Eigen::Index p() const { return piX.size(); }
    Eigen::Index q() const { return piY.size(); }

    void validate() const;

    double pi_joint_min() const { return piXY.minCoeff(); }
    double pi_marginal_min() const { return std::min(piX.minCoeff(), piY.minCoeff()); }
};

// Joint Bernoulli mean under the theta mixture coupling.
double coupled_joint_probability(double pi1, double pi2, MaskCoupling coupling);

// Bounded multiplicative error moments of Assumption-4 form. The default
// generator draws delta = B * Beta(a, b) with a + b = dispersion and
// a = dispersion * u / B; cross joint means come from a Gaussian copula with
// latent correlation rho and are precomputed by quadrature so uXY is exact
// for the generator.
struct MeasurementErrorSpec {
    Eigen::VectorXd uX;
    Eigen::VectorXd uY;
    Eigen::MatrixXd uXY;
    Eigen::VectorXd BX;
    Eigen::VectorXd BY;
    double dispersion = 10.0;
    double rho = 0.0;

    static MeasurementErrorSpec beta_copula(Eigen::VectorXd uX, Eigen::VectorXd uY,
                                            Eigen::VectorXd BX, Eigen::VectorXd BY,
                                            double rho = 0.0, double dispersion = 10.0);
    static MeasurementErrorSpec from_table(Eigen::VectorXd uX, Eigen::VectorXd uY,
                                           Eigen::MatrixXd uXY, Eigen::VectorXd BX,
                                           Eigen::VectorXd BY);

    Eigen::Index p() const { return uX.size(); }
    Eigen::Index q() const { return uY.size(); }

    void validate() const;

    double u_joint_min() const { return uXY.minCoeff(); }
    double u_marginal_min() const { return std::min(uX.minCoeff(), uY.minCoeff()); }
};

// Beta(a, b) quantile; a <= 0 maps to 0 and b <= 0 to 1 so degenerate error
// means (u == B) behave as point masses.
double beta_quantile(double a, double b, double u);

// Standard normal CDF.
double normal_cdf(double x);

}  // namespace sparsehw
