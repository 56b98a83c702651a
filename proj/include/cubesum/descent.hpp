#ifndef CUBESUM_DESCENT_HPP
#define CUBESUM_DESCENT_HPP

#include <string>
#include <utility>
#include <vector>

#include "cubesum/arith.hpp"

namespace cubesum {

/* Exponent class of the descent: ell >= 5 (uniform in ell) or ell = 3. */
enum class ExponentClass { ge5, eq3 };

std::string to_string(ExponentClass c);

/* (alpha, beta) with 2x+d+1 = alpha*y1^ell and
 * x^2+(d+1)x+d(d+1)/2 = beta*y2^ell. */
struct DescentPair {
    Rational alpha;
    Rational beta;
    int d = 0;
    ExponentClass cls = ExponentClass::ge5;
};

/* r*y2^ell - s*y1^(2 ell) = t with gcd(r, s, t) = 1. */
struct TernaryEq {
    bigint r, s, t;
    int d = 0;
    ExponentClass cls = ExponentClass::ge5;
    DescentPair source;

    bool is_trivial_branch() const { return r == t; }
};

std::vector<std::pair<int, int>> local_exponent_set(int d, u64 q, ExponentClass cls);

/* The finite set A_d, ordered by (alpha num, alpha den, beta num, beta den). */
std::vector<DescentPair> descent_pairs(int d, ExponentClass cls);

TernaryEq ternary_coefficients(DescentPair const & pair);

/* All descent equations for 3 <= d <= 50, in d order. */
std::vector<TernaryEq> descent_equations(int d_min, int d_max, ExponentClass cls);

enum class DegenerateBranch { y2_is_y1_squared, y2_is_one, y1_small };

struct DegenerateSolution {
    bigint y1, y2;
    Rational x;
    bool x_integral = false;
    DegenerateBranch branch = DegenerateBranch::y1_small;
};

/* Solutions of eq with y2 = y1^2, y2 = 1 or y1 in {-1, 0, 1}, mapped back
 * to x through 2x + d + 1 = alpha*y1^ell. */
std::vector<DegenerateSolution> degenerate_solutions(TernaryEq const & eq, unsigned ell);

/* Bit length above which degenerate_solutions(eq, ell) no longer depends
 * on ell (only roots of 0 and 1 remain). */
unsigned degenerate_stable_ell(TernaryEq const & eq);

/* 4(x^2+(d+1)x+d(d+1)/2) - (2x+d+1)^2 */
bigint descent_identity_lhs(bigint const & x, int d);

bigint linear_factor(bigint const & x, int d);    /* 2x+d+1 */
bigint quadratic_factor(bigint const & x, int d); /* x^2+(d+1)x+d(d+1)/2 */

} // namespace cubesum

#endif
