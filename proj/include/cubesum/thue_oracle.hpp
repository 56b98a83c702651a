#ifndef CUBESUM_THUE_ORACLE_HPP
#define CUBESUM_THUE_ORACLE_HPP

#include <compare>
#include <string>
#include <vector>

#include "cubesum/reduction.hpp"

namespace cubesum {

inline constexpr u64 default_thue_height = 10000000;

/* R rho^ell - S tau^ell = T, from a reduced equation with tau = sigma^2 */
struct ThueTask {
    bigint R, S, T;
    u64 ell = 3;
    u64 height_bound = default_thue_height;
    ReducedEq source;
};

ThueTask thue_task(ReducedEq const & red, u64 height_bound = default_thue_height);

struct ThueSolution {
    bigint rho, tau;
    bool operator==(ThueSolution const &) const = default;
};

/* All solutions with |rho|, |tau| <= height_bound, ordered by tau. */
std::vector<ThueSolution> thue_bounded_solve(ThueTask const & task);

/* Primes used for the residue pre-sieve of a task. */
std::vector<u64> thue_sieve_primes(u64 ell);

/* (x+1)^3 + ... + (x+d)^3 = y^ell */
struct SolutionRecord {
    int d = 0;
    bigint x, y;
    u64 ell = 0;

    bool operator==(SolutionRecord const &) const = default;
    bool operator<(SolutionRecord const & o) const;
};

std::string to_string(SolutionRecord const & s);

bigint cube_sum(bigint const & x, int d);

/* Solutions of the source equation behind a Thue solution; empty unless tau
 * is a square and both signs of sigma lift to an integral x. */
std::vector<SolutionRecord> map_back(ThueTask const & task, ThueSolution const & sol);

/* Every (d, x, y, ell) with d, x in range, ell in ells and the sum an exact
 * ell-th power; both signs of y for even ell. Sorted. */
std::vector<SolutionRecord> oracle_search(int d_min, int d_max, i64 x_min, i64 x_max, std::vector<u64> const & ells, unsigned jobs = 1);

} // namespace cubesum

#endif
