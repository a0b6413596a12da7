#include "sparsehw/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sparsehw {

namespace {

double checked_log_ratio(Eigen::Index p, Eigen::Index q, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw domain_error("threshold: alpha=" + std::to_string(alpha) +
                           " must lie in (0,1)");
    const double ratio = static_cast<double>(p) * static_cast<double>(q) / alpha;
    if (ratio <= 1.0)
        throw domain_error("threshold: pq/alpha=" + std::to_string(ratio) +
                           " must exceed 1 (log nonpositive)");
    return std::log(ratio);
}

double bilinear_variance_term(const CoefficientMatrix& a, const MaskMoments& m,
                              MatrixStructure structure) {
    switch (structure) {
        case MatrixStructure::diagonal: {
            double acc = 0.0;
            for (Eigen::Index j = 0; j < a.size(); ++j) {
                const double ajj = a.entry(j, j);
                acc += m.pi12[j] * ajj * ajj;
            }
            return acc;
        }
        case MatrixStructure::off_diagonal: {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < a.size(); ++i)
                for (Eigen::Index j = 0; j < a.size(); ++j)
                    if (i != j) {
                        const double aij = a.entry(i, j);
                        acc += aij * aij * m.pi1[i] * m.pi2[j];
                    }
            return acc;
        }
        case MatrixStructure::full: {
            const double f = pi_frobenius(a, m);
            return f * f;
        }
    }
    throw domain_error("hw_tail_centered: unknown structure");
}

double bilinear_scale_term(const CoefficientMatrix& a, MatrixStructure structure) {
    return structure == MatrixStructure::diagonal ? a.max_abs_diagonal() : a.operator_norm();
}

double max6(double a, double b, double c, double d, double e, double f) {
    return std::max({a, b, c, d, e, f});
}

}  // namespace

TailProbability BoundEvaluation::tail(double t) const {
    if (t <= 0.0) throw domain_error("tail: t must be positive");
    const double quad = E1 > 0.0 ? t * t / E1 : std::numeric_limits<double>::infinity();
    const double lin = E2 > 0.0 ? t / E2 : std::numeric_limits<double>::infinity();
    const double expo = std::min(quad, lin);
    return {d * std::exp(-c * expo)};
}

std::vector<TailProbability> BoundEvaluation::tail(const std::vector<double>& t_grid) const {
    std::vector<TailProbability> out;
    out.reserve(t_grid.size());
    for (double t : t_grid) out.push_back(tail(t));
    return out;
}

TailProbability hw_tail_centered(double t, const SubGaussianParams& sg,
                                 const CoefficientMatrix& a, const MaskMoments& m, double c,
                                 MatrixStructure structure) {
    sg.validate();
    if (t <= 0.0) throw domain_error("hw_tail_centered: t must be positive");
    if (m.size() != a.size())
        throw dimension_error("hw_tail_centered: mask moments do not match matrix dimension");
    if (structure == MatrixStructure::diagonal && !a.is_diagonal())
        throw domain_error("hw_tail_centered: structure=diagonal requires a diagonal matrix");
    if (structure == MatrixStructure::off_diagonal && !a.has_zero_diagonal())
        throw domain_error("hw_tail_centered: structure=off-diagonal requires zero diagonal");

    const double kk = sg.K1 * sg.K2;
    BoundEvaluation ev;
    ev.E1 = kk * kk * bilinear_variance_term(a, m, structure);
    ev.E2 = kk * bilinear_scale_term(a, structure);
    ev.c = c;
    ev.d = 2.0;
    return ev.tail(t);
}

NoncenteredEnergies e1_e2_noncentered(const SubGaussianParams& sg, const CoefficientMatrix& a,
                                      const MeanVectors& mu, const MaskMoments& m) {
    sg.validate();
    const Eigen::Index n = a.size();
    if (mu.mu1.size() != n || mu.mu2.size() != n || m.size() != n)
        throw dimension_error("e1_e2_noncentered: dimension mismatch");

    const double v1 = (m.pi1.array() * (1.0 - m.pi1.array())).maxCoeff();
    const double v2 = (m.pi2.array() * (1.0 - m.pi2.array())).maxCoeff();
    const double K1 = sg.K1, K2 = sg.K2;

    const Eigen::MatrixXd A = a.materialize();
    const Eigen::VectorXd abs_mu1 = mu.mu1.cwiseAbs();
    const Eigen::VectorXd abs_mu2 = mu.mu2.cwiseAbs();
    const Eigen::VectorXd sqrt_pi1 = m.pi1.cwiseSqrt();
    const Eigen::VectorXd sqrt_pi2 = m.pi2.cwiseSqrt();
    const Eigen::VectorXd mu1pi1 = mu.mu1.cwiseProduct(m.pi1);
    const Eigen::VectorXd mu2pi2 = mu.mu2.cwiseProduct(m.pi2);

    auto scaled = [&](const Eigen::VectorXd& l, const Eigen::VectorXd& r) {
        return CoefficientMatrix(l.asDiagonal() * A * r.asDiagonal());
    };

    const CoefficientMatrix mu1_A_mu2 = scaled(mu.mu1, mu.mu2);

    NoncenteredEnergies out;
    const double fpi = pi_frobenius(a, m);
    out.e1_terms[0] = K1 * K1 * K2 * K2 * fpi * fpi;
    {
        const double f = mu1_A_mu2.frobenius();
        out.e1_terms[1] = v1 * v1 * v2 * v2 * f * f;
    }
    {
        const double f = scaled(abs_mu1, sqrt_pi2).frobenius();
        out.e1_terms[2] = v1 * v1 * K2 * K2 * f * f;
    }
    {
        const double f = scaled(sqrt_pi1, abs_mu2).frobenius();
        out.e1_terms[3] = v2 * v2 * K1 * K1 * f * f;
    }
    out.e1_terms[4] = K2 * K2 * (A.transpose() * mu1pi1).squaredNorm();
    out.e1_terms[5] = K1 * K1 * (A * mu2pi2).squaredNorm();
    out.e1_terms[6] = v1 * v1 * ((A * mu2pi2).cwiseProduct(mu.mu1)).squaredNorm();
    out.e1_terms[7] = v2 * v2 * ((A * mu1pi1).cwiseProduct(mu.mu2)).squaredNorm();

    out.e2_terms[0] = K1 * K2 * a.operator_norm();
    out.e2_terms[1] = v1 * v2 * mu1_A_mu2.operator_norm();
    out.e2_terms[2] = v1 * K2 * scaled(mu.mu1, Eigen::VectorXd::Ones(n)).operator_norm();
    out.e2_terms[3] = v2 * K1 * scaled(Eigen::VectorXd::Ones(n), mu.mu2).operator_norm();

    out.E1 = *std::max_element(out.e1_terms.begin(), out.e1_terms.end());
    out.E2 = *std::max_element(out.e2_terms.begin(), out.e2_terms.end());
    return out;
}

TailProbability hw_tail_noncentered(double t, const BoundEvaluation& ev) { return ev.tail(t); }

TailProbability hw_tail_bounded_error(double t, const SubGaussianParams& sg,
                                      const CoefficientMatrix& a, const ErrorBounds& b,
                                      double c) {
    sg.validate();
    b.validate();
    if (t <= 0.0) throw domain_error("hw_tail_bounded_error: t must be positive");
    if (b.B1.size() != a.size() || b.B2.size() != a.size())
        throw dimension_error("hw_tail_bounded_error: error bounds do not match matrix");

    const double kk = sg.K1 * sg.K2;
    const double f = diag_scale(a, b.B1, b.B2).frobenius();
    BoundEvaluation ev;
    ev.E1 = kk * kk * f * f;
    ev.E2 = kk * a.operator_norm();
    ev.c = c;
    ev.d = 2.0;
    return ev.tail(t);
}

BoundedErrorEnergies e1_e2_bounded_error(const SubGaussianParams& sg,
                                         const CoefficientMatrix& a, const MeanVectors& mu,
                                         const ErrorBounds& b, const MeanVectors& u) {
    sg.validate();
    b.validate();
    const Eigen::Index n = a.size();
    if (mu.mu1.size() != n || mu.mu2.size() != n || b.B1.size() != n || b.B2.size() != n ||
        u.mu1.size() != n || u.mu2.size() != n)
        throw dimension_error("e1_e2_bounded_error: dimension mismatch");

    const double K1 = sg.K1, K2 = sg.K2;
    const double b1max = b.B1.maxCoeff();
    const double b2max = b.B2.maxCoeff();

    const Eigen::MatrixXd A = a.materialize();
    auto scaled = [&](const Eigen::VectorXd& l, const Eigen::VectorXd& r) {
        return CoefficientMatrix(l.asDiagonal() * A * r.asDiagonal());
    };

    BoundedErrorEnergies out;
    {
        const double f = scaled(b.B1, b.B2).frobenius();
        out.e1_terms[0] = K1 * K1 * K2 * K2 * f * f;
    }
    {
        const double f = scaled(mu.mu1.cwiseAbs(), b.B2.cwiseSqrt()).frobenius();
        out.e1_terms[1] = b1max * b1max * K2 * K2 * f * f;
    }
    {
        const double f = scaled(b.B1.cwiseSqrt(), mu.mu2.cwiseAbs()).frobenius();
        out.e1_terms[2] = b2max * b2max * K1 * K1 * f * f;
    }
    out.e1_terms[3] =
        K2 * K2 *
        ((A.transpose() * mu.mu1.cwiseProduct(u.mu1)).cwiseProduct(b.B2)).squaredNorm();
    out.e1_terms[4] =
        K1 * K1 * ((A * mu.mu2.cwiseProduct(u.mu2)).cwiseProduct(b.B1)).squaredNorm();
    {
        const double f = scaled(mu.mu1, mu.mu2).frobenius();
        out.e1_terms[5] = b1max * b1max * b2max * b2max * f * f;
    }

    out.e2_terms[0] = K1 * K2 * a.operator_norm();
    out.e2_terms[1] =
        b1max * K2 * scaled(mu.mu1, Eigen::VectorXd::Ones(n)).operator_norm();
    out.e2_terms[2] =
        b2max * K1 * scaled(Eigen::VectorXd::Ones(n), mu.mu2).operator_norm();

    out.E1 = *std::max_element(out.e1_terms.begin(), out.e1_terms.end());
    out.E2 = *std::max_element(out.e2_terms.begin(), out.e2_terms.end());
    return out;
}

TailProbability hoeffding_tail(double t, double K, const Eigen::VectorXd& alpha, double c) {
    if (t <= 0.0) throw domain_error("hoeffding_tail: t must be positive");
    if (K <= 0.0) throw domain_error("hoeffding_tail: K must be positive");
    const double a2 = alpha.squaredNorm();
    if (a2 == 0.0)
        throw domain_error("hoeffding_tail: zero coefficient vector (bound undefined)");
    return {2.0 * std::exp(-c * t * t / (K * K * a2))};
}

ThresholdPlan threshold_complete(Eigen::Index n, Eigen::Index p, Eigen::Index q, double alpha,
                                 const SubGaussianParams& sg, double C1, double d1) {
    sg.validate();
    if (n < 2) throw domain_error("threshold_complete: n must be >= 2");
    const double logterm = checked_log_ratio(p, q, alpha);

    ThresholdPlan plan;
    plan.n = n;
    plan.p = p;
    plan.q = q;
    plan.alpha = alpha;
    plan.constant = C1;
    plan.scale = sg.K1 * sg.K2;
    plan.rate = std::sqrt(logterm / (static_cast<double>(n) - 1.0));
    plan.cutoff = plan.constant * plan.scale * plan.rate;
    plan.condition_ok = static_cast<double>(n) / logterm > d1;
    plan.subgaussian_regime = plan.cutoff / plan.scale < 1.0;
    return plan;
}

double f2_scale(const SubGaussianParams& sg, const MuMax& mu) {
    const double KX = sg.K1, KY = sg.K2, mx = mu.mu_x, my = mu.mu_y;
    return max6(KX * KY, mx * KY, KX * my, mx * my, mx * mx, my * my);
}

double g2_factor(const SubGaussianParams& sg, const MuMax& mu) {
    const double KX = sg.K1, KY = sg.K2, mx = mu.mu_x, my = mu.mu_y;
    return std::min({1.0, mx / KY, my / KX, mx * my / (KX * KY)});
}

double f3_scale(const SubGaussianParams& sg, const MuMax& mu, const BMax& b_max,
                const UMax& u_max) {
    const double KX = sg.K1, KY = sg.K2, mx = mu.mu_x, my = mu.mu_y;
    const double BX = b_max.b_x, BY = b_max.b_y, uX = u_max.u_x, uY = u_max.u_y;
    return max6(KX * KY * BX * BY, mx * KY * BX * BY, KX * my * BX * BY, mx * my * BX * BY,
                KX * my * BX * uY, mx * KY * uX * BY);
}

double g3_factor(const SubGaussianParams& sg, const MuMax& mu, const BMax& b_max) {
    auto inv_or_inf = [](double num, double den) {
        return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
    };
    return std::min({1.0, inv_or_inf(sg.K1, b_max.b_x * mu.mu_x),
                     inv_or_inf(sg.K2, b_max.b_y * mu.mu_y)});
}

ThresholdPlan threshold_missing(Eigen::Index n, Eigen::Index p, Eigen::Index q, double alpha,
                                const SubGaussianParams& sg, const MuMax& mu,
                                const PiMins& pi_mins, double C2, double d2) {
    sg.validate();
    if (n < 2) throw domain_error("threshold_missing: n must be >= 2");
    if (pi_mins.joint <= 0.0 || pi_mins.marginal <= 0.0 || pi_mins.joint > 1.0 ||
        pi_mins.marginal > 1.0)
        throw domain_error("threshold_missing: pi minima must lie in (0,1]");
    if (mu.mu_x < 0.0 || mu.mu_y < 0.0)
        throw domain_error("threshold_missing: mu maxima must be nonnegative");
    const double logterm = checked_log_ratio(p, q, alpha);

    const double f2 = f2_scale(sg, mu);
    const double g2 = g2_factor(sg, mu);
    if (g2 == 0.0)
        throw degenerate_condition_error(
            "threshold_missing: g2 = 0 (mu_X or mu_Y is zero), the sample-size condition is "
            "vacuous as stated");

    const double pi_factor = std::min(pi_mins.joint, pi_mins.marginal * pi_mins.marginal);

    ThresholdPlan plan;
    plan.n = n;
    plan.p = p;
    plan.q = q;
    plan.alpha = alpha;
    plan.constant = C2;
    plan.scale = f2;
    plan.rate = std::sqrt(logterm / ((static_cast<double>(n) - 1.0) * pi_factor));
    plan.cutoff = plan.constant * plan.scale * plan.rate;
    plan.condition_ok = (static_cast<double>(n) - 1.0) / logterm > d2 / (g2 * pi_factor);
    plan.subgaussian_regime = plan.cutoff / plan.scale < 1.0;
    return plan;
}

ThresholdPlan threshold_me(Eigen::Index n, Eigen::Index p, Eigen::Index q, double alpha,
                           const SubGaussianParams& sg, const MuMax& mu, const BMax& b_max,
                           const UMins& u_mins, double C3, double d3, const UMax& u_max) {
    sg.validate();
    if (n < 2) throw domain_error("threshold_me: n must be >= 2");
    if (u_mins.joint <= 0.0 || u_mins.marginal <= 0.0)
        throw domain_error("threshold_me: u minima must be strictly positive");
    if (b_max.b_x <= 0.0 || b_max.b_y <= 0.0)
        throw domain_error("threshold_me: B maxima must be strictly positive");
    const double logterm = checked_log_ratio(p, q, alpha);

    const double f3 = f3_scale(sg, mu, b_max, u_max);
    const double g3 = g3_factor(sg, mu, b_max);

    const double uj = u_mins.joint, um = u_mins.marginal;
    const double cutoff_factor = std::min(uj * uj, um * um * um * um);
    const double cond_factor = std::min(uj, um * um);

    ThresholdPlan plan;
    plan.n = n;
    plan.p = p;
    plan.q = q;
    plan.alpha = alpha;
    plan.constant = C3;
    plan.scale = f3;
    plan.rate = std::sqrt(logterm / ((static_cast<double>(n) - 1.0) * cutoff_factor));
    plan.cutoff = plan.constant * plan.scale * plan.rate;
    plan.condition_ok = (static_cast<double>(n) - 1.0) / logterm >= d3 / (g3 * cond_factor);
    plan.subgaussian_regime = plan.cutoff / plan.scale < 1.0;
    return plan;
}

ThresholdPlan threshold_me(Eigen::Index n, Eigen::Index p, Eigen::Index q, double alpha,
                           const SubGaussianParams& sg, const MuMax& mu, const BMax& b_max,
                           const UMins& u_mins, double C3, double d3) {
    return threshold_me(n, p, q, alpha, sg, mu, b_max, u_mins, C3, d3,
                        UMax{b_max.b_x, b_max.b_y});
}

EntryEnergies e1_e2_missing_entry(Eigen::Index n, const SubGaussianParams& sg,
                                  const EntryMu& mu, const EntryPis& pis) {
    sg.validate();
    if (n < 2) throw domain_error("e1_e2_missing_entry: n must be >= 2");
    if (pis.joint <= 0.0 || pis.x <= 0.0 || pis.y <= 0.0)
        throw domain_error("e1_e2_missing_entry: probabilities must be strictly positive");

    const double nn = static_cast<double>(n);
    const double KX2 = sg.K1 * sg.K1, KY2 = sg.K2 * sg.K2;
    const double mx2 = mu.mu_x * mu.mu_x, my2 = mu.mu_y * mu.mu_y;

    const double moment1 = std::max({KX2 * KY2, KX2 * my2, mx2 * KY2, mx2 * my2});
    const double pisum2 = 1.0 / (nn * pis.joint * pis.joint) +
                          1.0 / (nn * (nn - 1.0) * pis.x * pis.x * pis.y * pis.y);

    const double moment2 = std::max({KX2 * my2, mx2 * KY2, mx2 * mx2, my2 * my2});
    const double gap = 1.0 / pis.joint - 1.0 / (pis.x * pis.y);
    const double gap2 = gap * gap / nn;

    const double moment_lin = std::max({sg.K1 * sg.K2, sg.K1 * std::abs(mu.mu_y),
                                        std::abs(mu.mu_x) * sg.K2,
                                        std::abs(mu.mu_x) * std::abs(mu.mu_y)});
    const double pisum1 = 1.0 / (nn * pis.joint) + 1.0 / (nn * (nn - 1.0) * pis.x * pis.y);

    EntryEnergies out;
    out.branch1 = moment1 * pisum2;
    out.branch2 = moment2 * gap2;
    out.E1 = std::max(out.branch1, out.branch2);
    out.E2 = moment_lin * pisum1;
    return out;
}

EntryEnergies e1_e2_me_entry(Eigen::Index n, const SubGaussianParams& sg, const EntryMu& mu,
                             const EntryUs& us, const EntryBs& bs) {
    sg.validate();
    if (n < 2) throw domain_error("e1_e2_me_entry: n must be >= 2");
    if (us.joint <= 0.0 || us.x <= 0.0 || us.y <= 0.0)
        throw domain_error("e1_e2_me_entry: u moments must be strictly positive");
    if (bs.x <= 0.0 || bs.y <= 0.0)
        throw domain_error("e1_e2_me_entry: error bounds must be strictly positive");

    const double nn = static_cast<double>(n);
    const double KX2 = sg.K1 * sg.K1, KY2 = sg.K2 * sg.K2;
    const double mx2 = mu.mu_x * mu.mu_x, my2 = mu.mu_y * mu.mu_y;
    const double bx = bs.x, by = bs.y, bx2 = bx * bx, by2 = by * by;

    const double moment1 = std::max({KX2 * KY2 * bx2 * by2, mx2 * KY2 * bx2 * by,
                                     KX2 * my2 * bx * by2, mx2 * my2 * bx2 * by2});
    const double usum2 = 1.0 / (nn * us.joint * us.joint) +
                         1.0 / (nn * (nn - 1.0) * us.x * us.x * us.y * us.y);

    const double moment2 =
        std::max(KX2 * my2 * bx2 * us.y * us.y, mx2 * KY2 * us.x * us.x * by2);
    const double gap = 1.0 / us.joint - 1.0 / (us.x * us.y);
    const double gap2 = gap * gap / nn;

    const double moment_lin = std::max({sg.K1 * sg.K2, sg.K1 * std::abs(mu.mu_y) * bx,
                                        std::abs(mu.mu_x) * sg.K2 * by});
    const double usum1 = 1.0 / (nn * us.joint) + 1.0 / (nn * (nn - 1.0) * us.x * us.y);

    EntryEnergies out;
    out.branch1 = moment1 * usum2;
    out.branch2 = moment2 * gap2;
    out.E1 = std::max(out.branch1, out.branch2);
    out.E2 = moment_lin * usum1;
    return out;
}

}  // namespace sparsehw
