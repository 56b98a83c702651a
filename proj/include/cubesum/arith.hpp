#ifndef CUBESUM_ARITH_HPP
#define CUBESUM_ARITH_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace cubesum {

using bigint = mpz_class;
using Rational = mpq_class;

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;

struct PrimePower {
    u64 prime;
    int exponent;

    bool operator==(PrimePower const &) const = default;
};

/* Positive integer together with its complete factorization. Primes are
 * strictly increasing and exponents are >= 1. */
struct Factored {
    bigint value = 1;
    std::vector<PrimePower> factors;

    static Factored from_factors(std::vector<PrimePower> factors);

    int exponent_of(u64 p) const;
    bool operator==(Factored const & o) const { return factors == o.factors; }
};

Factored operator*(Factored const & a, Factored const & b);
/* Exact quotient; throws std::domain_error when b does not divide a. */
Factored operator/(Factored const & a, Factored const & b);
Factored pow(Factored const & a, unsigned e);
Factored gcd(Factored const & a, Factored const & b);
/* Product of the primes of a (exponent 1 each). */
Factored radical_of(Factored const & a);

Factored factorize(bigint const & n);
Factored factorize(u64 n);

/* Largest e with q^e | n. Throws std::domain_error for n == 0. */
int valuation(bigint const & n, u64 q);
/* q-adic valuation of a nonzero rational. */
int valuation(Rational const & x, u64 q);

bigint radical(bigint const & n, std::set<u64> const & excluded = {});

/* y with y^ell == n, sign-aware for odd ell; absent if n is not a perfect
 * ell-th power (or if ell is even and n < 0). */
std::optional<bigint> perfect_power_root(bigint const & n, unsigned ell);

/* Deterministic for all 64-bit inputs. */
bool is_prime(u64 n);
bool is_prime(bigint const & n);
u64 next_prime(u64 n);
std::vector<u64> primes_below(u64 n);

/* Modular helpers for moduli below 2^63. */
inline u64 mulmod(u64 a, u64 b, u64 m) { return static_cast<u64>(static_cast<u128>(a) * b % m); }
u64 powmod(u64 base, u64 e, u64 m);
/* Inverse of a modulo m; throws std::domain_error if gcd(a, m) != 1. */
u64 invmod(u64 a, u64 m);
u64 mod_of(bigint const & n, u64 m);
u64 mod_of(i64 n, u64 m);

int legendre(u64 a, u64 p);
bool sqrt_exists_mod(bigint const & a, u64 p);
/* Square root of a quadratic residue modulo an odd prime. */
u64 sqrt_mod(u64 a, u64 p);

u64 gcd_u64(u64 a, u64 b);

std::string to_string(Factored const & f);

} // namespace cubesum

#endif
