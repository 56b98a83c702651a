#ifndef CUBESUM_REDUCTION_HPP
#define CUBESUM_REDUCTION_HPP

#include <optional>
#include <string>
#include <vector>

#include "cubesum/descent.hpp"

namespace cubesum {

/* y1 = g y1' (kind g) or y2 = rad(h) y2' (kind h) */
struct StripStep {
    char kind = 'g';
    bigint factor;

    bool operator==(StripStep const &) const = default;
};

/* R rho^ell - S sigma^(2 ell) = T, rho and sigma standing for the stripped y2 and y1. */
struct ReducedEq {
    bigint R, S, T;
    u64 ell = 0;
    std::vector<StripStep> trace;
    TernaryEq source;

    bool pairwise_coprime() const;
};

/* Precondition gcd(r, s, t) = 1; throws std::invalid_argument otherwise. */
ReducedEq strip(TernaryEq const & eq, u64 ell);

/* (y1, y2) of the source equation for a solution (rho, sigma) of the reduced one. */
std::pair<bigint, bigint> lift_solution(ReducedEq const & red, bigint const & rho, bigint const & sigma);

enum class ObstructionKind { common_factor, quadratic, modular };

std::string to_string(ObstructionKind k);

struct Obstruction {
    ObstructionKind kind = ObstructionKind::modular;
    u64 prime = 0;
    bigint modulus; /* no (rho, sigma) mod modulus satisfies the equation */
};

/* Exact decision of solubility in Z_q for rho, sigma. */
bool solvable_in_Zq(ReducedEq const & red, u64 q);

/* The equation modulo m has a residue solution; brute force over rho, sigma mod m. */
bool solvable_mod(ReducedEq const & red, u64 m);

struct LocalResult {
    bool solvable = true;
    std::optional<Obstruction> obstruction;
    std::vector<u64> primes_tested;
};

/* Tests the primes dividing R S T and the primes q <= 19. */
LocalResult locally_solvable(ReducedEq const & red);

} // namespace cubesum

#endif
