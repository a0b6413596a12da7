#include "sparsehw/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace sparsehw {

double psi_norm_estimate(const std::vector<double>& samples, int order,
                         const std::vector<double>& p_grid) {
    if (samples.empty()) throw domain_error("psi_norm_estimate: samples must be nonempty");
    if (p_grid.empty()) throw domain_error("psi_norm_estimate: p grid must be nonempty");
    if (order != 1 && order != 2) throw domain_error("psi_norm_estimate: order must be 1 or 2");

    const double n = static_cast<double>(samples.size());
    double best = 0.0;
    for (double p : p_grid) {
        if (p < 1.0) throw domain_error("psi_norm_estimate: grid values must be >= 1");
        double acc = 0.0;
        for (double x : samples) acc += std::pow(std::abs(x), p);
        const double moment = std::pow(acc / n, 1.0 / p);
        const double denom = order == 2 ? std::sqrt(p) : p;
        best = std::max(best, moment / denom);
    }
    return best;
}

std::vector<double> default_psi_grid() {
    std::vector<double> grid;
    for (double p = 1.0; p <= 20.0 + 1e-9; p += 0.5) grid.push_back(p);
    return grid;
}

MgfCheckReport mgf_bound_check(double lambda, double a,
                               const std::function<std::pair<double, double>(Rng&)>& sampler,
                               double mean_product, double K1, double K2, std::int64_t reps,
                               std::uint64_t seed) {
    if (K1 <= 0.0 || K2 <= 0.0) throw domain_error("mgf_bound_check: K1, K2 must be positive");
    if (reps < 10000) throw domain_error("mgf_bound_check: reps must be >= 10000");
    const double cap = a == 0.0 ? std::numeric_limits<double>::infinity()
                                : 1.0 / (4.0 * M_E * K1 * K2 * std::abs(a));
    if (!(std::abs(lambda) < cap))
        throw domain_error("mgf_bound_check: |lambda|=" + std::to_string(std::abs(lambda)) +
                           " must be below 1/(4e K1 K2 |a|)=" + std::to_string(cap));

    MgfCheckReport report;
    report.lambda = lambda;
    report.a = a;
    report.lambda_cap = cap;

    Rng rng = Rng::stream(seed, 0);
    double sum = 0.0, sum_sq = 0.0;
    for (std::int64_t i = 0; i < reps; ++i) {
        const auto [z1, z2] = sampler(rng);
        const double w = std::exp(lambda * a * z1 * z2) - 1.0;
        sum += w;
        sum_sq += w * w;
    }
    const double nn = static_cast<double>(reps);
    report.lhs = sum / nn;
    const double var = std::max(0.0, sum_sq / nn - report.lhs * report.lhs);
    report.se = std::sqrt(var / nn);
    report.rhs = lambda * a * mean_product +
                 16.0 * lambda * lambda * a * a * K1 * K1 * K2 * K2;
    report.pass = report.lhs <= report.rhs + 3.0 * report.se;
    return report;
}

std::function<std::pair<double, double>(Rng&)> gaussian_pair_sampler(double rho) {
    if (rho < -1.0 || rho > 1.0)
        throw domain_error("gaussian_pair_sampler: rho must lie in [-1,1]");
    const double mix = std::sqrt(1.0 - rho * rho);
    return [rho, mix](Rng& rng) {
        const double z1 = rng.normal();
        const double z2 = rho * z1 + mix * rng.normal();
        return std::pair<double, double>(z1, z2);
    };
}

TailCurve empirical_tail(const std::function<double(Rng&)>& statistic,
                         const std::vector<double>& t_grid, std::int64_t reps,
                         std::uint64_t seed, int workers) {
    if (reps < 100) throw domain_error("empirical_tail: reps must be >= 100");
    const std::vector<double> devs = run_replicates<double>(
        reps, seed, workers, [&](std::int64_t, Rng& rng) { return std::abs(statistic(rng)); });

    TailCurve curve;
    curve.t = t_grid;
    curve.reps = reps;
    curve.seed = seed;
    curve.freq.resize(t_grid.size());
    curve.se.resize(t_grid.size());
    const double nn = static_cast<double>(reps);
    for (std::size_t g = 0; g < t_grid.size(); ++g) {
        std::int64_t count = 0;
        for (double d : devs)
            if (d > t_grid[g]) ++count;
        const double f = static_cast<double>(count) / nn;
        curve.freq[g] = f;
        curve.se[g] = std::sqrt(f * (1.0 - f) / nn);
    }
    return curve;
}

double calibrate_tail_rate(const TailCurve& curve, double E1, double E2, double d,
                           double fallback_c) {
    if (E1 <= 0.0 || E2 <= 0.0)
        throw domain_error("calibrate_tail_rate: E1, E2 must be positive");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < curve.t.size(); ++g) {
        const double ucb = curve.freq[g] + 2.0 * curve.se[g];
        if (ucb <= 0.0) continue;
        const double t = curve.t[g];
        const double m = std::min(t * t / E1, t / E2);
        if (m <= 0.0) continue;
        if (ucb >= d) return 0.0;  // even c = 0 cannot sit above this point
        best = std::min(best, std::log(d / ucb) / m);
    }
    if (!std::isfinite(best)) return fallback_c;
    return 0.9 * best;
}

double linear_quantile(std::vector<double> values, double prob) {
    if (values.empty()) throw domain_error("linear_quantile: empty sample");
    if (prob < 0.0 || prob > 1.0) throw domain_error("linear_quantile: prob must be in [0,1]");
    std::sort(values.begin(), values.end());
    const double h = prob * (static_cast<double>(values.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double w = h - std::floor(h);
    return (1.0 - w) * values[lo] + w * values[hi];
}

const char* to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::complete: return "complete";
        case ScenarioKind::missing: return "missing";
        case ScenarioKind::bounded_error: return "bounded-error";
    }
    return "unknown";
}

void Scenario::validate() const {
    population.validate();
    if (n < 2) throw domain_error("Scenario: n must be >= 2");
    if (kind == ScenarioKind::missing) {
        if (!missing) throw domain_error("Scenario: missing kind requires a MissingSpec");
        missing->validate();
        if (missing->p() != p() || missing->q() != q())
            throw dimension_error("Scenario: MissingSpec dimensions do not match population");
    }
    if (kind == ScenarioKind::bounded_error) {
        if (!error)
            throw domain_error("Scenario: bounded-error kind requires a MeasurementErrorSpec");
        error->validate();
        if (error->p() != p() || error->q() != q())
            throw dimension_error("Scenario: error spec dimensions do not match population");
    }
}

EstimateMatrix Scenario::replicate(Rng& rng) const {
    const SampleMatrixPair samples = gen_population(population, n, rng);
    switch (kind) {
        case ScenarioKind::complete: return sample_cross_cov(samples);
        case ScenarioKind::missing: {
            auto [dx, dy] = gen_masks(*missing, n, rng);
            return ipw_cross_cov(apply_mask(samples, dx, dy), *missing);
        }
        case ScenarioKind::bounded_error: {
            auto [dx, dy] = gen_errors(*error, n, rng);
            return me_cross_cov(apply_mask(samples, dx, dy), *error);
        }
    }
    throw domain_error("Scenario: unknown kind");
}

double Scenario::rate_factor(double alpha) const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw domain_error("rate_factor: alpha must be in (0,1)");
    const double logterm =
        std::log(static_cast<double>(p()) * static_cast<double>(q()) / alpha);
    if (logterm <= 0.0) throw domain_error("rate_factor: pq/alpha must exceed 1");
    const double n1 = static_cast<double>(n) - 1.0;
    switch (kind) {
        case ScenarioKind::complete: return std::sqrt(logterm / n1);
        case ScenarioKind::missing: {
            const double pj = missing->pi_joint_min();
            const double pm = missing->pi_marginal_min();
            return std::sqrt(logterm / (n1 * std::min(pj, pm * pm)));
        }
        case ScenarioKind::bounded_error: {
            const double uj = error->u_joint_min();
            const double um = error->u_marginal_min();
            return std::sqrt(logterm / (n1 * std::min(uj * uj, um * um * um * um)));
        }
    }
    throw domain_error("rate_factor: unknown kind");
}

double calibrate_constant(const Scenario& scenario, double alpha, std::int64_t reps,
                          std::uint64_t seed, int workers) {
    scenario.validate();
    if (reps < 500) throw domain_error("calibrate_constant: reps must be >= 500");
    const Eigen::MatrixXd& sigma = scenario.population.SigmaXY;
    std::vector<double> devs =
        run_replicates<double>(reps, seed, workers, [&](std::int64_t, Rng& rng) {
            const EstimateMatrix est = scenario.replicate(rng);
            return (est.values - sigma).cwiseAbs().maxCoeff();
        });
    const double quantile = linear_quantile(std::move(devs), 1.0 - alpha);
    return quantile / scenario.rate_factor(alpha);
}

double FwerReport::min_signal_power() const {
    double best = 1.0;
    for (const auto& [k, l] : signal_entries) best = std::min(best, rejection_freq(k, l));
    return signal_entries.empty() ? 0.0 : best;
}

FwerReport estimate_fwer(const Scenario& scenario, double cutoff, std::int64_t reps,
                         std::uint64_t seed, int workers) {
    scenario.validate();
    if (cutoff <= 0.0) throw domain_error("estimate_fwer: cutoff must be positive");
    if (reps < 1) throw domain_error("estimate_fwer: reps must be >= 1");
    const Eigen::MatrixXd& sigma = scenario.population.SigmaXY;
    const Eigen::Index p = scenario.p(), q = scenario.q();

    bool has_null = false;
    FwerReport report;
    for (Eigen::Index k = 0; k < p; ++k)
        for (Eigen::Index l = 0; l < q; ++l) {
            if (sigma(k, l) == 0.0)
                has_null = true;
            else
                report.signal_entries.emplace_back(k, l);
        }
    if (!has_null)
        throw domain_error("estimate_fwer: the null set is empty (FWER undefined)");

    struct ReplicateOutcome {
        bool any_null_rejection = false;
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> decisions;
    };
    const std::vector<ReplicateOutcome> outcomes = run_replicates<ReplicateOutcome>(
        reps, seed, workers, [&](std::int64_t, Rng& rng) {
            const EstimateMatrix est = scenario.replicate(rng);
            ReplicateOutcome out;
            out.decisions = threshold_matrix(est, cutoff);
            for (Eigen::Index k = 0; k < p && !out.any_null_rejection; ++k)
                for (Eigen::Index l = 0; l < q; ++l)
                    if (sigma(k, l) == 0.0 && out.decisions(k, l)) {
                        out.any_null_rejection = true;
                        break;
                    }
            return out;
        });

    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(p, q);
    std::int64_t fwer_count = 0;
    for (const auto& out : outcomes) {
        if (out.any_null_rejection) ++fwer_count;
        for (Eigen::Index k = 0; k < p; ++k)
            for (Eigen::Index l = 0; l < q; ++l)
                if (out.decisions(k, l)) counts(k, l) += 1.0;
    }
    const double nn = static_cast<double>(reps);
    report.fwer = static_cast<double>(fwer_count) / nn;
    report.se = std::sqrt(report.fwer * (1.0 - report.fwer) / nn);
    report.rejection_freq = counts / nn;
    report.reps = reps;
    report.seed = seed;
    return report;
}

}  // namespace sparsehw
