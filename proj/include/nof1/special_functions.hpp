#ifndef NOF1_SPECIAL_FUNCTIONS_HPP
#define NOF1_SPECIAL_FUNCTIONS_HPP

namespace nof1::special {

/// ln Gamma(x) for x > 0 (Lanczos, g = 7, nine terms; reflection below 0.5).
double log_gamma(double x);

double log_beta(double a, double b);

/// Regularized incomplete beta I_x(a, b), a, b > 0, x in [0, 1].
/// Modified Lentz continued fraction on whichever of I_x(a,b) and
/// 1 - I_{1-x}(b,a) converges faster.
double incomplete_beta(double a, double b, double x);

double normal_cdf(double x);

double student_t_pdf(double x, double dof);

/// Throws std::invalid_argument when dof <= 0 or is NaN.
double student_t_cdf(double x, double dof);

/// Inverse of student_t_cdf; p in (0, 1).
double student_t_quantile(double p, double dof);

/// Kolmogorov limiting survival function Q(lambda) = P(K > lambda).
double kolmogorov_survival(double lambda);

} // namespace nof1::special

#endif
