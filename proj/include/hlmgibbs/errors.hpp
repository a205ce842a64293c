#pragma once
#include <limits>
#include <stdexcept>
#include <string>

namespace hlm {

/// Inputs whose shapes do not line up (y length vs. rows of X, prior means vs. p, ...).
class DimensionError : public std::invalid_argument {
    public:
        using std::invalid_argument::invalid_argument;
};

/** Thrown when a matrix that must be symmetric positive definite fails its Cholesky
 * factorization.  `lambda_R` / `lambda_D` carry the precisions at which the failure happened
 * (NaN when not applicable).
 */
class SingularityError : public std::runtime_error {
    public:
        SingularityError(const std::string& what, double lambda_R, double lambda_D)
            : std::runtime_error(what), lambda_R_(lambda_R), lambda_D_(lambda_D) {}
        explicit SingularityError(const std::string& what)
            : SingularityError(what, std::numeric_limits<double>::quiet_NaN(),
                               std::numeric_limits<double>::quiet_NaN()) {}

        double lambdaR() const noexcept { return lambda_R_; }
        double lambdaD() const noexcept { return lambda_D_; }

    private:
        double lambda_R_;
        double lambda_D_;
};

/// A model that failed validation where a valid one was required.
class ValidationError : public std::runtime_error {
    public:
        using std::runtime_error::runtime_error;
};

/// Not enough observations for a batch means estimate (fewer than two batches).
class InsufficientDataError : public std::runtime_error {
    public:
        using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function (e.g. a probability outside (0,1)).
class DomainError : public std::domain_error {
    public:
        using std::domain_error::domain_error;
};

/// The numeric search for a bound on G kept increasing at the edge of its search box.
class UnboundedSuspectedError : public std::runtime_error {
    public:
        using std::runtime_error::runtime_error;
};

/// Malformed input file (model file, CSV).
class ParseError : public std::runtime_error {
    public:
        using std::runtime_error::runtime_error;
};

}
