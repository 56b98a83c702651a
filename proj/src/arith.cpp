#include "cubesum/arith.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cubesum {

namespace {

constexpr u64 trial_limit = 1000000;

std::vector<u64> const & small_primes()
{
    static std::vector<u64> const table = primes_below(trial_limit);
    return table;
}

bool miller_rabin_witness(u64 n, u64 a, u64 d, int s)
{
    u64 x = powmod(a % n, d, n);
    if (x == 1 || x == n - 1)
        return false;
    for (int i = 1; i < s; ++i) {
        x = mulmod(x, x, n);
        if (x == n - 1)
            return false;
    }
    return true;
}

u64 rho_factor(u64 n)
{
    if (n % 2 == 0)
        return 2;
    for (u64 c = 1;; ++c) {
        u64 x = 2, y = 2, d = 1;
        auto f = [&](u64 v) { return (mulmod(v, v, n) + c) % n; };
        while (d == 1) {
            u64 prod = 1;
            u64 saved_x = x, saved_y = y;
            for (int i = 0; i < 64; ++i) {
                x = f(x);
                y = f(f(y));
                prod = mulmod(prod, x > y ? x - y : y - x, n);
                if (prod == 0)
                    break;
            }
            d = gcd_u64(prod, n);
            if (d == n) {
                /* back off and go one step at a time */
                x = saved_x;
                y = saved_y;
                do {
                    x = f(x);
                    y = f(f(y));
                    d = gcd_u64(x > y ? x - y : y - x, n);
                } while (d == 1);
            }
        }
        if (d != n)
            return d;
    }
}

void factor_u64_into(u64 n, std::map<u64, int> & out)
{
    if (n == 1)
        return;
    if (is_prime(n)) {
        out[n] += 1;
        return;
    }
    u64 d = rho_factor(n);
    factor_u64_into(d, out);
    factor_u64_into(n / d, out);
}

bigint rho_factor_big(bigint const & n)
{
    for (unsigned long c = 1;; ++c) {
        bigint x = 2, y = 2, d = 1;
        auto f = [&](bigint const & v) -> bigint {
            bigint r = v * v + c;
            mpz_mod(r.get_mpz_t(), r.get_mpz_t(), n.get_mpz_t());
            return r;
        };
        while (d == 1) {
            x = f(x);
            y = f(f(y));
            bigint diff = abs(x - y);
            mpz_gcd(d.get_mpz_t(), diff.get_mpz_t(), n.get_mpz_t());
        }
        if (d != n)
            return d;
    }
}

void factor_big_into(bigint const & n, std::map<u64, int> & out)
{
    if (n == 1)
        return;
    if (n.fits_ulong_p()) {
        factor_u64_into(n.get_ui(), out);
        return;
    }
    if (mpz_probab_prime_p(n.get_mpz_t(), 40) != 0)
        throw std::domain_error("factorize: prime factor exceeds 64 bits");
    bigint d = rho_factor_big(n);
    factor_big_into(d, out);
    factor_big_into(n / d, out);
}

} // namespace

Factored Factored::from_factors(std::vector<PrimePower> factors)
{
    std::map<u64, int> m;
    for (auto const & pp : factors)
        if (pp.exponent != 0)
            m[pp.prime] += pp.exponent;
    Factored f;
    for (auto const & [p, e] : m) {
        if (e < 0)
            throw std::domain_error("Factored: negative exponent");
        if (e == 0)
            continue;
        f.factors.push_back({p, e});
        bigint pe;
        mpz_ui_pow_ui(pe.get_mpz_t(), p, static_cast<unsigned long>(e));
        f.value *= pe;
    }
    return f;
}

int Factored::exponent_of(u64 p) const
{
    auto it = std::lower_bound(factors.begin(), factors.end(), p,
                               [](PrimePower const & pp, u64 v) { return pp.prime < v; });
    return (it != factors.end() && it->prime == p) ? it->exponent : 0;
}

Factored operator*(Factored const & a, Factored const & b)
{
    std::vector<PrimePower> all = a.factors;
    all.insert(all.end(), b.factors.begin(), b.factors.end());
    return Factored::from_factors(std::move(all));
}

Factored operator/(Factored const & a, Factored const & b)
{
    std::vector<PrimePower> all = a.factors;
    for (auto const & pp : b.factors) {
        if (a.exponent_of(pp.prime) < pp.exponent)
            throw std::domain_error("Factored: inexact division");
        all.push_back({pp.prime, -pp.exponent});
    }
    return Factored::from_factors(std::move(all));
}

Factored pow(Factored const & a, unsigned e)
{
    std::vector<PrimePower> all;
    for (auto const & pp : a.factors)
        all.push_back({pp.prime, pp.exponent * static_cast<int>(e)});
    return Factored::from_factors(std::move(all));
}

Factored gcd(Factored const & a, Factored const & b)
{
    std::vector<PrimePower> all;
    for (auto const & pp : a.factors) {
        int e = std::min(pp.exponent, b.exponent_of(pp.prime));
        if (e > 0)
            all.push_back({pp.prime, e});
    }
    return Factored::from_factors(std::move(all));
}

Factored radical_of(Factored const & a)
{
    std::vector<PrimePower> all;
    for (auto const & pp : a.factors)
        all.push_back({pp.prime, 1});
    return Factored::from_factors(std::move(all));
}

Factored factorize(bigint const & n)
{
    if (n < 1)
        throw std::domain_error("factorize: argument must be positive");
    std::map<u64, int> found;
    bigint rest = n;
    for (u64 p : small_primes()) {
        if (rest == 1)
            break;
        if (bigint(p) * p > rest)
            break;
        while (mpz_divisible_ui_p(rest.get_mpz_t(), p) != 0) {
            mpz_divexact_ui(rest.get_mpz_t(), rest.get_mpz_t(), p);
            found[p] += 1;
        }
    }
    if (rest > 1) {
        if (rest < bigint(trial_limit) * trial_limit)
            found[rest.get_ui()] += 1;
        else
            factor_big_into(rest, found);
    }
    std::vector<PrimePower> pps;
    for (auto const & [p, e] : found)
        pps.push_back({p, e});
    return Factored::from_factors(std::move(pps));
}

Factored factorize(u64 n) { return factorize(bigint(static_cast<unsigned long>(n))); }

int valuation(bigint const & n, u64 q)
{
    if (n == 0)
        throw std::domain_error("valuation: undefined for zero");
    if (q < 2)
        throw std::domain_error("valuation: q must be prime");
    bigint rest = abs(n);
    int e = 0;
    while (mpz_divisible_ui_p(rest.get_mpz_t(), q) != 0) {
        mpz_divexact_ui(rest.get_mpz_t(), rest.get_mpz_t(), q);
        ++e;
    }
    return e;
}

int valuation(Rational const & x, u64 q)
{
    return valuation(bigint(x.get_num()), q) - valuation(bigint(x.get_den()), q);
}

bigint radical(bigint const & n, std::set<u64> const & excluded)
{
    bigint r = 1;
    for (auto const & pp : factorize(n).factors)
        if (!excluded.contains(pp.prime))
            r *= static_cast<unsigned long>(pp.prime);
    return r;
}

std::optional<bigint> perfect_power_root(bigint const & n, unsigned ell)
{
    if (ell < 2)
        throw std::invalid_argument("perfect_power_root: ell must be >= 2");
    if (n < 0 && ell % 2 == 0)
        return std::nullopt;
    bigint a = abs(n);
    if (a <= 1)
        return n;
    if (mpz_sizeinbase(a.get_mpz_t(), 2) <= ell)
        return std::nullopt; /* 2^ell already exceeds a */
    bigint root;
    if (mpz_root(root.get_mpz_t(), a.get_mpz_t(), ell) == 0)
        return std::nullopt;
    return n < 0 ? bigint(-root) : root;
}

u64 gcd_u64(u64 a, u64 b) { return std::gcd(a, b); }

u64 powmod(u64 base, u64 e, u64 m)
{
    u64 result = 1 % m;
    base %= m;
    while (e != 0) {
        if (e & 1)
            result = mulmod(result, base, m);
        base = mulmod(base, base, m);
        e >>= 1;
    }
    return result;
}

u64 invmod(u64 a, u64 m)
{
    i128 t = 0, new_t = 1;
    i128 r = m, new_r = a % m;
    while (new_r != 0) {
        i128 q = r / new_r;
        i128 tmp = t - q * new_t;
        t = new_t;
        new_t = tmp;
        tmp = r - q * new_r;
        r = new_r;
        new_r = tmp;
    }
    if (r != 1)
        throw std::domain_error("invmod: not invertible");
    if (t < 0)
        t += m;
    return static_cast<u64>(t);
}

u64 mod_of(bigint const & n, u64 m)
{
    bigint r;
    mpz_fdiv_r_ui(r.get_mpz_t(), n.get_mpz_t(), m);
    return r.get_ui();
}

u64 mod_of(i64 n, u64 m)
{
    i128 r = static_cast<i128>(n) % static_cast<i128>(m);
    if (r < 0)
        r += m;
    return static_cast<u64>(r);
}

bool is_prime(u64 n)
{
    if (n < 2)
        return false;
    static constexpr u64 bases[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    for (u64 p : bases) {
        if (n % p == 0)
            return n == p;
    }
    if (n < 37 * 37)
        return true;
    /* smallest strong pseudoprime to the first j prime bases */
    static constexpr u64 limits[] = {2047ULL, 1373653ULL, 25326001ULL, 3215031751ULL,
                                     2152302898747ULL, 3474749660383ULL, 341550071728321ULL,
                                     341550071728321ULL, 3825123056546413051ULL,
                                     3825123056546413051ULL, 3825123056546413051ULL};
    std::size_t used = 12;
    for (std::size_t j = 0; j < std::size(limits); ++j)
        if (n < limits[j]) {
            used = j + 1;
            break;
        }
    u64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (std::size_t j = 0; j < used; ++j)
        if (miller_rabin_witness(n, bases[j], d, s))
            return false;
    return true;
}

bool is_prime(bigint const & n)
{
    if (n < 2)
        return false;
    if (n.fits_ulong_p())
        return is_prime(static_cast<u64>(n.get_ui()));
    return mpz_probab_prime_p(n.get_mpz_t(), 40) != 0;
}

u64 next_prime(u64 n)
{
    for (u64 c = n + 1;; ++c)
        if (is_prime(c))
            return c;
}

std::vector<u64> primes_below(u64 n)
{
    std::vector<u64> out;
    if (n <= 2)
        return out;
    std::vector<bool> composite(n, false);
    for (u64 i = 2; i < n; ++i) {
        if (composite[i])
            continue;
        out.push_back(i);
        for (u64 j = i * i; j < n; j += i)
            composite[j] = true;
    }
    return out;
}

int legendre(u64 a, u64 p)
{
    a %= p;
    if (a == 0)
        return 0;
    return powmod(a, (p - 1) / 2, p) == 1 ? 1 : -1;
}

bool sqrt_exists_mod(bigint const & a, u64 p)
{
    if (p == 2)
        return true;
    return legendre(mod_of(a, p), p) >= 0;
}

u64 sqrt_mod(u64 a, u64 p)
{
    a %= p;
    if (a == 0 || p == 2)
        return a;
    if (legendre(a, p) != 1)
        throw std::domain_error("sqrt_mod: not a quadratic residue");
    if (p % 4 == 3)
        return powmod(a, (p + 1) / 4, p);
    /* Tonelli-Shanks */
    u64 q = p - 1;
    int s = 0;
    while ((q & 1) == 0) {
        q >>= 1;
        ++s;
    }
    u64 z = 2;
    while (legendre(z, p) != -1)
        ++z;
    u64 m = static_cast<u64>(s);
    u64 c = powmod(z, q, p);
    u64 t = powmod(a, q, p);
    u64 r = powmod(a, (q + 1) / 2, p);
    while (t != 1) {
        u64 i = 0;
        u64 t2 = t;
        while (t2 != 1) {
            t2 = mulmod(t2, t2, p);
            ++i;
        }
        u64 b = c;
        for (u64 j = 0; j + i + 1 < m; ++j)
            b = mulmod(b, b, p);
        m = i;
        c = mulmod(b, b, p);
        t = mulmod(t, c, p);
        r = mulmod(r, b, p);
    }
    return r;
}

std::string to_string(Factored const & f)
{
    std::ostringstream os;
    bool first = true;
    for (auto const & pp : f.factors) {
        if (!first)
            os << '*';
        first = false;
        os << pp.prime;
        if (pp.exponent != 1)
            os << '^' << pp.exponent;
    }
    if (first)
        os << '1';
    return os.str();
}

} // namespace cubesum
