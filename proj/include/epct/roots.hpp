#ifndef EPCT_ROOTS_HPP
#define EPCT_ROOTS_HPP

#include "errors.hpp"

#include <cmath>

namespace epct {

namespace detail {
inline void check_root_args(double gamma, double beta, double k) {
    if (!(k < 0.0))
        throw PreconditionError("root functions require k < 0");
    if (!(gamma >= 0.0) || !(beta >= 0.0))
        throw PreconditionError("root functions require gamma >= 0 and beta >= 0");
}
} // namespace detail

/// Omega(gamma, beta) = (beta + sqrt(beta^2 - 4 k gamma)) / 2.
/// -Omega is the nonpositive root of z^2 + beta z + k gamma.
inline double omega(double gamma, double beta, double k) {
    detail::check_root_args(gamma, beta, k);
    return 0.5 * (beta + std::sqrt(beta * beta - 4.0 * k * gamma));
}

/// Theta(gamma, beta) = (-beta + sqrt(beta^2 - 4 k gamma)) / 2, evaluated as
/// -k gamma / Omega to avoid cancellation for large beta.
inline double theta(double gamma, double beta, double k) {
    const double lam = omega(gamma, beta, k);
    if (lam == 0.0)
        return 0.0;
    return -k * gamma / lam;
}

/// lambda = Omega(gamma, beta), mu = Theta(gamma, beta).
struct RootPair {
    double lambda = 0.0;
    double mu = 0.0;
    double gamma = 0.0;
    double beta = 0.0;
    double k = -1.0;

    static RootPair make(double gamma, double beta, double k) {
        return {omega(gamma, beta, k), theta(gamma, beta, k), gamma, beta, k};
    }

    /// Residual of z^2 + beta z + k gamma at z = -lambda and z = mu.
    double residual() const {
        const double at_neg_lambda = lambda * lambda - beta * lambda + k * gamma;
        const double at_mu = mu * mu + beta * mu + k * gamma;
        return std::max(std::abs(at_neg_lambda), std::abs(at_mu));
    }
};

} // namespace epct

#endif
