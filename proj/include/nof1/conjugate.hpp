#ifndef NOF1_CONJUGATE_HPP
#define NOF1_CONJUGATE_HPP

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace nof1 {

/// Normal-inverse-gamma prior: beta | sigma^2 ~ N(0, sigma^2 * v * I),
/// sigma^2 ~ InvGamma(ig_shape, ig_rate).
struct PriorConfig {
    double coefficient_variance = 10.0;
    double ig_shape = 2.0;
    double ig_rate = 1.0;

    void validate() const;
    friend bool operator==(const PriorConfig&, const PriorConfig&) = default;
};

struct PosteriorState {
    Eigen::VectorXd coef_mean;
    Eigen::MatrixXd coef_precision;
    double ig_shape = 0.0;
    double ig_rate = 0.0;
    long n_obs = 0;

    Eigen::Index dim() const noexcept { return coef_mean.size(); }
};

/// Student-t marginal of one coefficient (also used for predictive distributions).
struct CoefficientMarginal {
    double location = 0.0;
    double scale = 1.0;
    double dof = 1.0;

    void validate() const;
};

PosteriorState prior_state(const PriorConfig& prior, Eigen::Index dim);

/// Exact batch conjugate update from the prior. Rows of `design` are
/// observations. Throws std::invalid_argument on shape mismatch or
/// non-finite input.
PosteriorState posterior_update(const PriorConfig& prior, const Eigen::MatrixXd& design,
                                const Eigen::VectorXd& outcomes);
PosteriorState posterior_update(const PriorConfig& prior, const std::vector<std::vector<double>>& design_rows,
                                std::span<const double> outcomes);

/// Absorb one observation into an existing state.
PosteriorState posterior_absorb(const PosteriorState& state, const Eigen::VectorXd& row, double outcome);

/// Design matrix [1, indicator] for the pairwise two-group model.
Eigen::MatrixXd pairwise_design(std::span<const double> indicator);

CoefficientMarginal coefficient_marginal(const PosteriorState& state, Eigen::Index index);

/// Student-t posterior predictive for a design row.
CoefficientMarginal posterior_predictive(const PosteriorState& state, const Eigen::VectorXd& row);

double prob_positive(const CoefficientMarginal& marginal);
double prob_negative(const CoefficientMarginal& marginal);

/// Equal-tailed interval; level in (0, 1).
std::pair<double, double> credible_interval(const CoefficientMarginal& marginal, double level);

/// KL(current || lagged) in nats between moment-matched Gaussians.
/// std::nullopt when either dof <= 2 (no finite variance).
std::optional<double> kl_stability(const CoefficientMarginal& current, const CoefficientMarginal& lagged);

double gaussian_kl(double mean_p, double var_p, double mean_q, double var_q);

/// Fraction of (row, outcome) pairs inside the central `level` predictive interval.
double posterior_predictive_coverage(const PosteriorState& state, const Eigen::MatrixXd& design,
                                     const Eigen::VectorXd& outcomes, double level);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// One-sample KS of `values` against Uniform(0, 1) with the asymptotic
/// Kolmogorov p-value (Stephens' small-sample correction).
KsResult ks_uniform(std::vector<double> values);

/// PIT calibration: each outcome is ranked among `n_samples` stratified
/// draws (quantiles (j - 1/2)/n) of its posterior predictive, and the ranks
/// are tested against Uniform(0, 1).
KsResult ks_calibration(const PosteriorState& state, const Eigen::MatrixXd& design, const Eigen::VectorXd& outcomes,
                        int n_samples);

std::string posterior_to_json(const PosteriorState& state);
PosteriorState posterior_from_json(const std::string& text);

} // namespace nof1

#endif
