#pragma once

#include <Eigen/Dense>
#include <utility>

#include "sparsehw/estimators.hpp"
#include "sparsehw/rng.hpp"
#include "sparsehw/specs.hpp"

namespace sparsehw {

// n joint draws of (X, Y) with the spec's block moments. The Gaussian kind
// uses correlated normal innovations; bounded_mixture uses a symmetric
// two-point scaled Rademacher innovation (unit variance, |eps| <= 2), which
// keeps every coordinate sub-Gaussian with bounded support.
SampleMatrixPair gen_population(const PopulationSpec& spec, Eigen::Index n, Rng& rng);

// Bernoulli masks with exact per-(k,l) joint table spec.piXY. One shared
// uniform per sample and side; the sides are coupled by the spec's theta
// mixture. Specs built from an arbitrary table that no theta reproduces are
// rejected here (estimation and bound evaluation still accept them).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gen_masks(const MissingSpec& spec, Eigen::Index n,
                                                      Rng& rng);

// Bounded multiplicative errors delta = B * BetaQuantile(a, b, latent) with
// one latent uniform per sample and side, sides joined by the Gaussian copula
// with correlation spec.rho. Joint means match spec.uXY (computed by
// quadrature at spec construction).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gen_errors(const MeasurementErrorSpec& spec,
                                                       Eigen::Index n, Rng& rng);

// Applies multiplicative factors to fully observed samples.
MaskedSamplePair apply_mask(const SampleMatrixPair& s, const Eigen::MatrixXd& deltaX,
                            const Eigen::MatrixXd& deltaY);

}  // namespace sparsehw
