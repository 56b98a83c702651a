#ifndef CUBESUM_LOGBOUND_HPP
#define CUBESUM_LOGBOUND_HPP

#include <optional>
#include <string>
#include <vector>

#include "cubesum/descent.hpp"

namespace cubesum {

/* Closed interval with endpoints rounded outward to double. */
struct RealInterval {
    double lo = 0;
    double hi = 0;

    bool contains(double v) const { return lo <= v && v <= hi; }
};

/* log(alpha1) - ell log(alpha2) with alpha1 = 4 beta / alpha^2. */
struct LogLinearForm {
    Rational alpha1;
    bigint height;      /* H(alpha1) = max(|num|, den) */
    RealInterval log_A1; /* log max(H(alpha1), e) */
    DescentPair pair;
};

enum class BoundBranch { mult_dep, laurent };

std::string to_string(BoundBranch b);

struct EllBound {
    u64 bound = 0; /* no non-degenerate solution with ell >= bound */
    BoundBranch branch = BoundBranch::laurent;
    RealInterval fixed_point;
    int iterations = 0;
};

constexpr unsigned default_precision_bits = 128;

LogLinearForm make_log_form(DescentPair const & pair, unsigned bits = default_precision_bits);

/* Upper end of log((d^2-1) g / (|log alpha1| alpha^2)) / log 4, where g is the
 * gcd of the exponents of alpha1; absent when alpha1 = 1. */
std::optional<RealInterval> mult_dependence_bound(DescentPair const & pair,
                                                  unsigned bits = default_precision_bits);

/* 1 + (|log alpha1| + (d^2-1)/(alpha^2 4^floor)) / (floor log 4). */
RealInterval y2_ratio_bound(DescentPair const & pair, unsigned ell_floor = 1000,
                            unsigned bits = default_precision_bits);

/* ell_floor / log A1 */
RealInterval b_prime_floor(DescentPair const & pair, unsigned ell_floor = 1000,
                           unsigned bits = default_precision_bits);

/* Smallest integer B with ell >= RHS(ell) for every ell >= B, where
 * RHS(ell) = log((d^2-1)/alpha^2)/log 4 + 26 log A1 log^2(ell/log A1 + 1/log 4),
 * evaluated with upward rounding. Pairs with alpha1 = 1 admit no
 * non-degenerate solution with ell > 1000 and get bound 1001.
 * Throws std::runtime_error if the iteration does not settle in 100 steps. */
EllBound laurent_ell_bound(DescentPair const & pair, unsigned bits = default_precision_bits);

/* Upper end of RHS(ell), exposed for the post-checks. */
double laurent_rhs(DescentPair const & pair, double ell, unsigned bits = default_precision_bits);

struct PairBound {
    DescentPair pair;
    std::optional<RealInterval> mult_dep;
    RealInterval y2_ratio;
    RealInterval b_prime;
    EllBound ell;
};

std::vector<PairBound> all_pair_bounds(int d_min, int d_max, unsigned bits = default_precision_bits);

} // namespace cubesum

#endif
