#ifndef CUBESUM_SIEVE_HPP
#define CUBESUM_SIEVE_HPP

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cubesum/descent.hpp"

namespace cubesum {

enum class SieveMode { empty, zero_only };

std::string to_string(SieveMode m);

struct SieveWitness {
    u64 ell = 0;
    u64 q = 0;
    u64 k = 0; /* q = 2 k ell + 1 */
    SieveMode mode = SieveMode::empty;

    bool operator==(SieveWitness const &) const = default;
};

/* Coefficients of a ternary equation reduced to machine words. */
struct WordEq {
    u64 r, s, t;

    static WordEq from(TernaryEq const & eq);
};

/* The k-th roots of unity in F_q for q = 2 k ell + 1, in generator order. */
class RootsOfUnity {
public:
    RootsOfUnity(u64 ell, u64 q);

    u64 ell() const { return ell_; }
    u64 q() const { return q_; }
    u64 k() const { return k_; }
    std::span<u64 const> roots() const { return roots_; }

private:
    u64 ell_, q_, k_;
    std::vector<u64> roots_;
};

/* {eta^(2 ell) : eta in F_q} = {0} u {zeta : zeta^k = 1}, sorted. */
std::vector<u64> power_residues(u64 ell, u64 q);

/* B(ell, q) = {zeta in power_residues : ((s zeta + t)/r)^(2k) in {0, 1}}, sorted.
 * Throws std::invalid_argument unless q is prime, q = 1 mod 2 ell and q does not divide r. */
std::vector<u64> sieve_set(TernaryEq const & eq, u64 ell, u64 q);

/* Decides B(ell, q) == {} (empty mode) or B(ell, q) == {0} (zero_only mode)
 * with early exit. Precondition: q does not divide r. */
bool sieve_matches(WordEq const & eq, RootsOfUnity const & mu, SieveMode mode);

/* Smallest k <= kmax with q = 2 k ell + 1 prime, q not dividing r, and
 * B(ell, q) matching mode. */
std::optional<SieveWitness> find_elimination_prime(TernaryEq const & eq, u64 ell, u64 kmax,
                                                   SieveMode mode);

struct SieveOutcome {
    std::size_t eq_index = 0;
    u64 ell = 0;
    std::optional<SieveWitness> witness; /* absent: survived */
};

struct SweepConfig {
    u64 ell_min = 5;
    u64 ell_max = 3000000; /* exclusive */
    u64 kmax = 1000;
    unsigned jobs = 1;
    SieveMode mode = SieveMode::empty;
};

struct SweepStats {
    u64 primes_ell = 0;
    u64 eliminated = 0;
    u64 survived = 0;
};

/* Calls sink once per (equation, ell) in ascending ell, then equation
 * index order; the order does not depend on jobs. */
SweepStats sweep(std::span<TernaryEq const> eqs, SweepConfig const & cfg,
                 std::function<void(SieveOutcome const &)> const & sink);

std::vector<SieveOutcome> sweep_collect(std::span<TernaryEq const> eqs, SweepConfig const & cfg);

} // namespace cubesum

#endif
