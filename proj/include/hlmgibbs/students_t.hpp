#pragma once

namespace hlm {

/// Regularized incomplete beta function I_x(a, b) for a, b > 0 and x in [0, 1].
double incomplete_beta(double a, double b, double x);

/// Upper tail P(T > t) of Student's t with `df` degrees of freedom, for t >= 0.
double t_upper_tail(double df, double t);

/// Student t cumulative distribution function.
double t_cdf(double df, double t);

/** Quantile of Student's t: the t with P(T <= t) = prob.  Inverts the incomplete-beta form of
 * the CDF by safeguarded Newton iteration; closed forms are used for df = 1 and df = 2.
 * Throws DomainError unless df > 0 and 0 < prob < 1.
 */
double t_quantile(double df, double prob);

}
