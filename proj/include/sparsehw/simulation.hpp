#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "sparsehw/bounds.hpp"
#include "sparsehw/estimators.hpp"
#include "sparsehw/generators.hpp"
#include "sparsehw/rng.hpp"

namespace sparsehw {

// Runs fn(index, rng) for index = 0..reps-1 with per-replicate streams derived
// only from (seed, index); results land in index order, so output is
// identical for any worker count.
template <typename T, typename F>
std::vector<T> run_replicates(std::int64_t reps, std::uint64_t seed, int workers, F&& fn) {
    std::vector<T> out(static_cast<std::size_t>(reps));
    workers = std::max(1, workers);
    if (workers == 1) {
        for (std::int64_t i = 0; i < reps; ++i) {
            Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
            out[static_cast<std::size_t>(i)] = fn(i, rng);
        }
        return out;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= reps) return;
            try {
                Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
                out[static_cast<std::size_t>(i)] = fn(i, rng);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(reps);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

// Empirical psi-norm: max over the grid of (mean |X|^p)^(1/p) / p^(1/order).
double psi_norm_estimate(const std::vector<double>& samples, int order,
                         const std::vector<double>& p_grid);

// p in {1, 1.5, ..., 20}.
std::vector<double> default_psi_grid();

struct MgfCheckReport {
    double lambda = 0.0;
    double a = 0.0;
    double lambda_cap = 0.0;
    double lhs = 0.0;
    double se = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

// Monte Carlo check of the sub-exponential MGF bound
//   E exp(lambda a Z1 Z2) - 1 <= lambda a E[Z1 Z2] + 16 lambda^2 a^2 K1^2 K2^2
// for |lambda| < 1/(4e K1 K2 |a|). mean_product is the exact E[Z1 Z2] of the
// sampler. pass when lhs <= rhs + 3 se.
MgfCheckReport mgf_bound_check(double lambda, double a,
                               const std::function<std::pair<double, double>(Rng&)>& sampler,
                               double mean_product, double K1, double K2, std::int64_t reps,
                               std::uint64_t seed);

// Correlated standard normal pair; E[Z1 Z2] = rho.
std::function<std::pair<double, double>(Rng&)> gaussian_pair_sampler(double rho);

struct TailCurve {
    std::vector<double> t;
    std::vector<double> freq;
    std::vector<double> se;
    std::int64_t reps = 0;
    std::uint64_t seed = 0;
};

// Exceedance frequencies of |deviation| over the grid, all grid points reusing
// the same replicates. statistic(rng) returns one replicate's deviation.
TailCurve empirical_tail(const std::function<double(Rng&)>& statistic,
                         const std::vector<double>& t_grid, std::int64_t reps,
                         std::uint64_t seed, int workers = 1);

// Largest exponential rate c such that d exp(-c min(t^2/E1, t/E2)) stays above
// freq + 2 se at every grid point, deflated by 0.9 for fresh-seed slack.
// Returns fallback_c when the curve never constrains (all frequencies zero).
double calibrate_tail_rate(const TailCurve& curve, double E1, double E2, double d,
                           double fallback_c = 0.0625);

// Empirical quantile with linear interpolation between order statistics.
double linear_quantile(std::vector<double> values, double prob);

enum class ScenarioKind { complete, missing, bounded_error };

const char* to_string(ScenarioKind kind);

// A full data-generating experiment: population plus the observation channel.
struct Scenario {
    ScenarioKind kind = ScenarioKind::complete;
    Eigen::Index n = 0;
    PopulationSpec population;
    std::optional<MissingSpec> missing;
    std::optional<MeasurementErrorSpec> error;

    Eigen::Index p() const { return population.p(); }
    Eigen::Index q() const { return population.q(); }

    void validate() const;

    // One replicate of the matching estimator.
    EstimateMatrix replicate(Rng& rng) const;

    // The sqrt(log(pq/alpha)/...) factor of the matching threshold operation.
    double rate_factor(double alpha) const;

    SubGaussianParams subgaussian() const { return {population.KX, population.KY}; }
};

// (1-alpha) empirical quantile of max_kl |s_hat - sigma| divided by the
// theoretical rate factor: the smallest constant whose cutoff
// C * rate_factor(alpha) achieves empirical FWER <= alpha on this run.
double calibrate_constant(const Scenario& scenario, double alpha, std::int64_t reps,
                          std::uint64_t seed, int workers = 1);

struct FwerReport {
    double fwer = 0.0;
    double se = 0.0;
    Eigen::MatrixXd rejection_freq;  // p x q per-entry rejection frequency
    std::vector<std::pair<Eigen::Index, Eigen::Index>> signal_entries;
    std::int64_t reps = 0;
    std::uint64_t seed = 0;

    double min_signal_power() const;
};

// FWER = fraction of replicates with any rejection on the null set
// {(k,l): sigma_kl == 0}; power = per-entry rejection frequency on the rest.
FwerReport estimate_fwer(const Scenario& scenario, double cutoff, std::int64_t reps,
                         std::uint64_t seed, int workers = 1);

}  // namespace sparsehw
