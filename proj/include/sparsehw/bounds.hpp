#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "sparsehw/norms.hpp"

namespace sparsehw {

// psi2 bounds of the two sub-Gaussian legs (K_X, K_Y in the estimator setting).
struct SubGaussianParams {
    double K1 = 1.0;
    double K2 = 1.0;

    void validate() const {
        if (K1 <= 0.0 || K2 <= 0.0)
            throw domain_error("SubGaussianParams: K1, K2 must be positive");
    }
};

struct MeanVectors {
    Eigen::VectorXd mu1;
    Eigen::VectorXd mu2;
};

// Almost-sure upper bounds of the multiplicative error factors.
struct ErrorBounds {
    Eigen::VectorXd B1;
    Eigen::VectorXd B2;

    void validate() const {
        if ((B1.array() <= 0.0).any() || (B2.array() <= 0.0).any())
            throw domain_error("ErrorBounds: all entries must be strictly positive");
    }
};

// A tail probability before clamping; domination tests compare raw values,
// reports display value().
struct TailProbability {
    double raw = 0.0;
    double value() const { return raw > 1.0 ? 1.0 : raw; }
};

enum class MatrixStructure { full, diagonal, off_diagonal };

// Assembled deviation-bound state: tail(t) = d exp(-c min(t^2/E1, t/E2)).
struct BoundEvaluation {
    double E1 = 0.0;
    double E2 = 0.0;
    double c = 0.0625;
    double d = 2.0;

    TailProbability tail(double t) const;
    std::vector<TailProbability> tail(const std::vector<double>& t_grid) const;

    // The exponent switches from quadratic to linear at t = E1/E2.
    double regime_kink() const { return E2 > 0.0 ? E1 / E2 : 0.0; }
};

// Centered sparse bilinear Hanson-Wright tail. structure selects the variance
// and scale terms: full uses ||A||_{F,pi} and ||A||_2; diagonal uses
// sum_j pi12_j a_jj^2 and max_j |a_jj|; off_diagonal uses
// sum_{i!=j} a_ij^2 pi1_i pi2_j and ||A||_2.
TailProbability hw_tail_centered(double t, const SubGaussianParams& sg,
                                 const CoefficientMatrix& a, const MaskMoments& m, double c,
                                 MatrixStructure structure = MatrixStructure::full);

// The eight-term E1 / four-term E2 maxima of the non-centered bound, with each
// constituent exposed for inspection.
struct NoncenteredEnergies {
    double E1 = 0.0;
    double E2 = 0.0;
    std::array<double, 8> e1_terms{};
    std::array<double, 4> e2_terms{};
};

NoncenteredEnergies e1_e2_noncentered(const SubGaussianParams& sg, const CoefficientMatrix& a,
                                      const MeanVectors& mu, const MaskMoments& m);

TailProbability hw_tail_noncentered(double t, const BoundEvaluation& ev);

// Centered bound under bounded multiplicative errors: the variance term swaps
// ||A||_{F,pi} for ||D(B1) A D(B2)||_F.
TailProbability hw_tail_bounded_error(double t, const SubGaussianParams& sg,
                                      const CoefficientMatrix& a, const ErrorBounds& b,
                                      double c);

struct BoundedErrorEnergies {
    double E1 = 0.0;
    double E2 = 0.0;
    std::array<double, 6> e1_terms{};
    std::array<double, 3> e2_terms{};
};

// Non-centered bound under bounded errors; u holds the error means.
BoundedErrorEnergies e1_e2_bounded_error(const SubGaussianParams& sg,
                                         const CoefficientMatrix& a, const MeanVectors& mu,
                                         const ErrorBounds& b, const MeanVectors& u);

// Tail of a masked linear combination sum_i alpha_i gamma_i Z_i:
// 2 exp(-c t^2 / (K^2 ||alpha||_2^2)).
TailProbability hoeffding_tail(double t, double K, const Eigen::VectorXd& alpha, double c);

// One FWER-controlling cutoff: cutoff = constant * scale * rate, where scale
// is the population-dependent factor (K_X K_Y, f2, f3) and rate the
// sqrt(log(pq/alpha)/...) factor.
struct ThresholdPlan {
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    Eigen::Index q = 0;
    double alpha = 0.0;
    double constant = 0.0;
    double scale = 0.0;
    double rate = 0.0;
    double cutoff = 0.0;
    bool condition_ok = false;
    bool subgaussian_regime = false;  // whether cutoff/scale < 1, the t/(K_X K_Y) < 1 regime
};

ThresholdPlan threshold_complete(Eigen::Index n, Eigen::Index p, Eigen::Index q, double alpha,
                                 const SubGaussianParams& sg, double C1, double d1);

struct MuMax {
    double mu_x = 0.0;
    double mu_y = 0.0;
};
struct PiMins {
    double joint = 1.0;
    double marginal = 1.0;
};

// Population-scale factors of the missing-data threshold:
//   f2 = max{K_X K_Y, mu_X K_Y, K_X mu_Y, mu_X mu_Y, mu_X^2, mu_Y^2}
//   g2 = min{1, mu_X/K_Y, mu_Y/K_X, mu_X mu_Y/(K_X K_Y)}
double f2_scale(const SubGaussianParams& sg, const MuMax& mu);
double g2_factor(const SubGaussianParams& sg, const MuMax& mu);

ThresholdPlan threshold_missing(Eigen::Index n, Eigen::Index p, Eigen::Index q, double alpha,
                                const SubGaussianParams& sg, const MuMax& mu,
                                const PiMins& pi_mins, double C2, double d2);

struct BMax {
    double b_x = 1.0;
    double b_y = 1.0;
};
struct UMins {
    double joint = 1.0;
    double marginal = 1.0;
};
struct UMax {
    double u_x = 0.0;
    double u_y = 0.0;
};

// Population-scale factors of the measurement-error threshold. u_max enters
// the last two f3 terms.
double f3_scale(const SubGaussianParams& sg, const MuMax& mu, const BMax& b_max,
                const UMax& u_max);
double g3_factor(const SubGaussianParams& sg, const MuMax& mu, const BMax& b_max);

// u_max enters the last two f3 terms; pass the a.s. bounds B when the error
// mean maxima are not tracked (u <= B always, so the result still dominates).
ThresholdPlan threshold_me(Eigen::Index n, Eigen::Index p, Eigen::Index q, double alpha,
                           const SubGaussianParams& sg, const MuMax& mu, const BMax& b_max,
                           const UMins& u_mins, double C3, double d3, const UMax& u_max);

ThresholdPlan threshold_me(Eigen::Index n, Eigen::Index p, Eigen::Index q, double alpha,
                           const SubGaussianParams& sg, const MuMax& mu, const BMax& b_max,
                           const UMins& u_mins, double C3, double d3);

// Entrywise deviation-bound scales for one (k,l) cell of the IPW estimator.
struct EntryEnergies {
    double E1 = 0.0;
    double E2 = 0.0;
    // E1 = max(branch1, branch2): moment-max times the pi^-2 (resp. u^-2) sum,
    // and the squared inverse-probability gap branch.
    double branch1 = 0.0;
    double branch2 = 0.0;
};

struct EntryMu {
    double mu_x = 0.0;
    double mu_y = 0.0;
};
struct EntryPis {
    double joint = 1.0;
    double x = 1.0;
    double y = 1.0;
};
struct EntryUs {
    double joint = 1.0;
    double x = 1.0;
    double y = 1.0;
};
struct EntryBs {
    double x = 1.0;
    double y = 1.0;
};

EntryEnergies e1_e2_missing_entry(Eigen::Index n, const SubGaussianParams& sg,
                                  const EntryMu& mu, const EntryPis& pis);

EntryEnergies e1_e2_me_entry(Eigen::Index n, const SubGaussianParams& sg, const EntryMu& mu,
                             const EntryUs& us, const EntryBs& bs);

}  // namespace sparsehw
