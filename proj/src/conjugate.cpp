#include "nof1/conjugate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "nof1/special_functions.hpp"

namespace nof1 {

namespace {

Eigen::LLT<Eigen::MatrixXd> factor_precision(const Eigen::MatrixXd& precision)
{
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) throw std::runtime_error("posterior precision is not positive definite");
    return llt;
}

} // namespace

void PriorConfig::validate() const
{
    if (!(coefficient_variance > 0.0) || !(ig_shape > 0.0) || !(ig_rate > 0.0))
        throw std::invalid_argument("prior coefficient_variance, ig_shape and ig_rate must all be positive");
}

void CoefficientMarginal::validate() const
{
    if (!(scale > 0.0) || !(dof > 0.0) || !std::isfinite(location))
        throw std::invalid_argument("marginal requires finite location, scale > 0 and dof > 0");
}

PosteriorState prior_state(const PriorConfig& prior, Eigen::Index dim)
{
    prior.validate();
    PosteriorState s;
    s.coef_mean = Eigen::VectorXd::Zero(dim);
    s.coef_precision = Eigen::MatrixXd::Identity(dim, dim) / prior.coefficient_variance;
    s.ig_shape = prior.ig_shape;
    s.ig_rate = prior.ig_rate;
    s.n_obs = 0;
    return s;
}

PosteriorState posterior_update(const PriorConfig& prior, const Eigen::MatrixXd& design,
                                const Eigen::VectorXd& outcomes)
{
    if (design.rows() != outcomes.size())
        throw std::invalid_argument("design rows and outcomes differ in length");
    if (!design.allFinite() || !outcomes.allFinite()) throw std::invalid_argument("non-finite input to posterior_update");
    PosteriorState s = prior_state(prior, design.cols());
    if (design.rows() == 0) return s;

    s.coef_precision.noalias() += design.transpose() * design;
    const auto llt = factor_precision(s.coef_precision);
    s.coef_mean = llt.solve(design.transpose() * outcomes);
    const Eigen::VectorXd residual = outcomes - design * s.coef_mean;
    // y'y - m' L m == |y - X m|^2 + m' S0^-1 m, written in the non-cancelling form.
    const double quad = residual.squaredNorm() + s.coef_mean.squaredNorm() / prior.coefficient_variance;
    s.ig_shape = prior.ig_shape + 0.5 * static_cast<double>(design.rows());
    s.ig_rate = prior.ig_rate + 0.5 * quad;
    s.n_obs = design.rows();
    return s;
}

PosteriorState posterior_update(const PriorConfig& prior, const std::vector<std::vector<double>>& design_rows,
                                std::span<const double> outcomes)
{
    if (design_rows.size() != outcomes.size())
        throw std::invalid_argument("design rows and outcomes differ in length");
    if (design_rows.empty()) throw std::invalid_argument("cannot infer dimension from an empty design; use prior_state");
    const auto dim = static_cast<Eigen::Index>(design_rows.front().size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(design_rows.size()), dim);
    for (std::size_t i = 0; i < design_rows.size(); ++i) {
        if (static_cast<Eigen::Index>(design_rows[i].size()) != dim)
            throw std::invalid_argument("design rows have differing dimensions");
        for (Eigen::Index j = 0; j < dim; ++j) x(static_cast<Eigen::Index>(i), j) = design_rows[i][j];
    }
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(outcomes.data(), static_cast<Eigen::Index>(outcomes.size()));
    return posterior_update(prior, x, y);
}

PosteriorState posterior_absorb(const PosteriorState& state, const Eigen::VectorXd& row, double outcome)
{
    if (row.size() != state.dim()) throw std::invalid_argument("row dimension does not match state");
    if (!row.allFinite() || !std::isfinite(outcome)) throw std::invalid_argument("non-finite input to posterior_absorb");
    PosteriorState next;
    const Eigen::VectorXd eta = state.coef_precision * state.coef_mean;
    next.coef_precision = state.coef_precision + row * row.transpose();
    const auto llt = factor_precision(next.coef_precision);
    next.coef_mean = llt.solve(eta + row * outcome);
    next.ig_shape = state.ig_shape + 0.5;
    next.ig_rate = state.ig_rate + 0.5 * (outcome * outcome + state.coef_mean.dot(eta) -
                                          next.coef_mean.dot(next.coef_precision * next.coef_mean));
    next.n_obs = state.n_obs + 1;
    return next;
}

Eigen::MatrixXd pairwise_design(std::span<const double> indicator)
{
    Eigen::MatrixXd x(static_cast<Eigen::Index>(indicator.size()), 2);
    for (std::size_t i = 0; i < indicator.size(); ++i) {
        x(static_cast<Eigen::Index>(i), 0) = 1.0;
        x(static_cast<Eigen::Index>(i), 1) = indicator[i];
    }
    return x;
}

CoefficientMarginal coefficient_marginal(const PosteriorState& state, Eigen::Index index)
{
    if (index < 0 || index >= state.dim()) throw std::out_of_range("coefficient index out of range");
    const auto llt = factor_precision(state.coef_precision);
    Eigen::VectorXd e = Eigen::VectorXd::Unit(state.dim(), index);
    const double cov_kk = llt.solve(e)(index);
    CoefficientMarginal m;
    m.location = state.coef_mean(index);
    m.dof = 2.0 * state.ig_shape;
    m.scale = std::sqrt(state.ig_rate / state.ig_shape * cov_kk);
    return m;
}

CoefficientMarginal posterior_predictive(const PosteriorState& state, const Eigen::VectorXd& row)
{
    if (row.size() != state.dim()) throw std::invalid_argument("row dimension does not match state");
    const auto llt = factor_precision(state.coef_precision);
    const double leverage = row.dot(llt.solve(row));
    CoefficientMarginal m;
    m.location = row.dot(state.coef_mean);
    m.dof = 2.0 * state.ig_shape;
    m.scale = std::sqrt(state.ig_rate / state.ig_shape * (1.0 + leverage));
    return m;
}

double prob_positive(const CoefficientMarginal& marginal)
{
    marginal.validate();
    // 1 - F((0 - mu)/s) == F(mu/s) by symmetry of the t density.
    return special::student_t_cdf(marginal.location / marginal.scale, marginal.dof);
}

double prob_negative(const CoefficientMarginal& marginal) { return 1.0 - prob_positive(marginal); }

std::pair<double, double> credible_interval(const CoefficientMarginal& marginal, double level)
{
    marginal.validate();
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("credible level must lie in (0, 1)");
    const double q = special::student_t_quantile(0.5 + 0.5 * level, marginal.dof);
    return {marginal.location - q * marginal.scale, marginal.location + q * marginal.scale};
}

double gaussian_kl(double mean_p, double var_p, double mean_q, double var_q)
{
    const double d = mean_p - mean_q;
    return 0.5 * (std::log(var_q / var_p) + (var_p + d * d) / var_q - 1.0);
}

std::optional<double> kl_stability(const CoefficientMarginal& current, const CoefficientMarginal& lagged)
{
    if (!(current.dof > 2.0) || !(lagged.dof > 2.0)) return std::nullopt;
    const double var_p = current.scale * current.scale * current.dof / (current.dof - 2.0);
    const double var_q = lagged.scale * lagged.scale * lagged.dof / (lagged.dof - 2.0);
    return std::max(0.0, gaussian_kl(current.location, var_p, lagged.location, var_q));
}

double posterior_predictive_coverage(const PosteriorState& state, const Eigen::MatrixXd& design,
                                     const Eigen::VectorXd& outcomes, double level)
{
    if (state.n_obs <= 0) throw std::invalid_argument("predictive coverage needs a state with observations");
    if (design.rows() == 0) throw std::invalid_argument("empty evaluation set");
    if (design.rows() != outcomes.size()) throw std::invalid_argument("design rows and outcomes differ in length");
    long inside = 0;
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
        const auto pred = posterior_predictive(state, design.row(i).transpose());
        const auto [lo, hi] = credible_interval(pred, level);
        if (outcomes(i) >= lo && outcomes(i) <= hi) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(design.rows());
}

KsResult ks_uniform(std::vector<double> values)
{
    if (values.empty()) throw std::invalid_argument("KS test on empty sample");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double u = std::clamp(values[i], 0.0, 1.0);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
    }
    const double sqrt_n = std::sqrt(n);
    return {d, special::kolmogorov_survival((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)};
}

KsResult ks_calibration(const PosteriorState& state, const Eigen::MatrixXd& design, const Eigen::VectorXd& outcomes,
                        int n_samples)
{
    if (n_samples < 100) throw std::invalid_argument("ks_calibration needs n_samples >= 100");
    if (design.rows() == 0) throw std::invalid_argument("ks_calibration on empty data");
    if (design.rows() != outcomes.size()) throw std::invalid_argument("design rows and outcomes differ in length");
    const double n = static_cast<double>(n_samples);
    std::vector<double> pit;
    pit.reserve(static_cast<std::size_t>(design.rows()));
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
        const auto pred = posterior_predictive(state, design.row(i).transpose());
        const double cdf = special::student_t_cdf((outcomes(i) - pred.location) / pred.scale, pred.dof);
        // Number of stratified samples (j - 1/2)/n <= cdf, j = 1..n.
        const double below = std::clamp(std::floor(cdf * n + 0.5), 0.0, n);
        pit.push_back(below / n);
    }
    return ks_uniform(std::move(pit));
}

std::string posterior_to_json(const PosteriorState& state)
{
    nlohmann::ordered_json j;
    j["coef_mean"] = std::vector<double>(state.coef_mean.data(), state.coef_mean.data() + state.coef_mean.size());
    std::vector<std::vector<double>> precision;
    for (Eigen::Index r = 0; r < state.coef_precision.rows(); ++r) {
        std::vector<double> row;
        for (Eigen::Index c = 0; c < state.coef_precision.cols(); ++c) row.push_back(state.coef_precision(r, c));
        precision.push_back(std::move(row));
    }
    j["coef_precision"] = precision;
    j["ig_shape"] = state.ig_shape;
    j["ig_rate"] = state.ig_rate;
    j["n_obs"] = state.n_obs;
    return j.dump();
}

PosteriorState posterior_from_json(const std::string& text)
{
    const auto j = nlohmann::json::parse(text);
    PosteriorState s;
    const auto mean = j.at("coef_mean").get<std::vector<double>>();
    const auto precision = j.at("coef_precision").get<std::vector<std::vector<double>>>();
    const auto dim = static_cast<Eigen::Index>(mean.size());
    s.coef_mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), dim);
    if (static_cast<Eigen::Index>(precision.size()) != dim) throw std::invalid_argument("precision shape mismatch");
    s.coef_precision.resize(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        if (static_cast<Eigen::Index>(precision[static_cast<std::size_t>(r)].size()) != dim)
            throw std::invalid_argument("precision shape mismatch");
        for (Eigen::Index c = 0; c < dim; ++c) s.coef_precision(r, c) = precision[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    s.ig_shape = j.at("ig_shape").get<double>();
    s.ig_rate = j.at("ig_rate").get<double>();
    s.n_obs = j.at("n_obs").get<long>();
    return s;
}

} // namespace nof1
