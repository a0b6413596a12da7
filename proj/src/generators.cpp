#include "sparsehw/generators.hpp"

#include <cmath>

namespace sparsehw {

namespace {

// Symmetric two-point magnitude mixture: |eps| = 0.5 w.p. 0.8, 2.0 w.p. 0.2,
// independent Rademacher sign. Mean zero, variance one, |eps| <= 2.
double bounded_mixture_draw(Rng& rng) {
    const double magnitude = rng.uniform01() < 0.8 ? 0.5 : 2.0;
    const double sign = rng.uniform01() < 0.5 ? 1.0 : -1.0;
    return sign * magnitude;
}

}  // namespace

SampleMatrixPair gen_population(const PopulationSpec& spec, Eigen::Index n, Rng& rng) {
    spec.validate();
    if (n < 1) throw domain_error("gen_population: n must be >= 1");
    const Eigen::Index p = spec.p(), q = spec.q(), d = p + q;
    const Eigen::MatrixXd& L = spec.cholesky_factor();

    SampleMatrixPair out;
    out.X.resize(n, p);
    out.Y.resize(n, q);
    Eigen::VectorXd innov(d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j)
            innov[j] = spec.kind == PopulationKind::gaussian ? rng.normal()
                                                             : bounded_mixture_draw(rng);
        const Eigen::VectorXd z = L * innov;
        out.X.row(i) = (spec.muX + z.head(p)).transpose();
        out.Y.row(i) = (spec.muY + z.tail(q)).transpose();
    }
    return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gen_masks(const MissingSpec& spec, Eigen::Index n,
                                                      Rng& rng) {
    spec.validate();
    if (!spec.coupling)
        throw domain_error(
            "gen_masks: piXY table is not representable by the shared-latent coupling; "
            "build the spec from a preset or theta to generate masks");
    if (n < 1) throw domain_error("gen_masks: n must be >= 1");

    const Eigen::Index p = spec.p(), q = spec.q();
    const double theta = spec.coupling->theta;
    Eigen::MatrixXd deltaX(n, p), deltaY(n, q);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        const double branch = rng.uniform01();
        double v;
        if (branch < std::abs(theta))
            v = theta >= 0.0 ? u : 1.0 - u;
        else
            v = rng.uniform01();
        for (Eigen::Index k = 0; k < p; ++k) deltaX(i, k) = u < spec.piX[k] ? 1.0 : 0.0;
        for (Eigen::Index l = 0; l < q; ++l) deltaY(i, l) = v < spec.piY[l] ? 1.0 : 0.0;
    }
    return {std::move(deltaX), std::move(deltaY)};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gen_errors(const MeasurementErrorSpec& spec,
                                                       Eigen::Index n, Rng& rng) {
    spec.validate();
    if (n < 1) throw domain_error("gen_errors: n must be >= 1");

    const Eigen::Index p = spec.p(), q = spec.q();
    const double mix = std::sqrt(1.0 - spec.rho * spec.rho);
    Eigen::MatrixXd deltaX(n, p), deltaY(n, q);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double g1 = rng.normal();
        const double g2 = spec.rho * g1 + mix * rng.normal();
        const double ux = normal_cdf(g1);
        const double uy = normal_cdf(g2);
        for (Eigen::Index k = 0; k < p; ++k) {
            const double a = spec.dispersion * spec.uX[k] / spec.BX[k];
            deltaX(i, k) = spec.BX[k] * beta_quantile(a, spec.dispersion - a, ux);
        }
        for (Eigen::Index l = 0; l < q; ++l) {
            const double a = spec.dispersion * spec.uY[l] / spec.BY[l];
            deltaY(i, l) = spec.BY[l] * beta_quantile(a, spec.dispersion - a, uy);
        }
    }
    return {std::move(deltaX), std::move(deltaY)};
}

MaskedSamplePair apply_mask(const SampleMatrixPair& s, const Eigen::MatrixXd& deltaX,
                            const Eigen::MatrixXd& deltaY) {
    MaskedSamplePair out;
    out.Xt = s.X.cwiseProduct(deltaX);
    out.Yt = s.Y.cwiseProduct(deltaY);
    out.deltaX = deltaX;
    out.deltaY = deltaY;
    out.validate();
    return out;
}

}  // namespace sparsehw
