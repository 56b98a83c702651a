#include "cubesum/reduction.hpp"

#include <algorithm>
#include <stdexcept>

namespace cubesum {

std::string to_string(ObstructionKind k)
{
    switch (k) {
    case ObstructionKind::common_factor:
        return "COMMON_FACTOR";
    case ObstructionKind::quadratic:
        return "QUADRATIC";
    case ObstructionKind::modular:
        return "MODULAR";
    }
    return "?";
}

namespace {

bigint gcd(bigint const & a, bigint const & b)
{
    bigint r;
    mpz_gcd(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

bigint power(bigint const & b, u64 e)
{
    bigint r;
    mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), e);
    return r;
}

/* ord_q, with INT_MAX standing in for ord_q(0) */
int ord(bigint const & n, u64 q)
{
    if (n == 0)
        return std::numeric_limits<int>::max();
    return valuation(n, q);
}

} // namespace

bool ReducedEq::pairwise_coprime() const { return gcd(R, S) == 1 && gcd(R, T) == 1 && gcd(S, T) == 1; }

ReducedEq strip(TernaryEq const & eq, u64 ell)
{
    if (gcd(gcd(eq.r, eq.s), eq.t) != 1)
        throw std::invalid_argument("strip: gcd(r, s, t) must be 1");
    ReducedEq red;
    red.R = eq.r;
    red.S = eq.s;
    red.T = eq.t;
    red.ell = ell;
    red.source = eq;
    for (;;) {
        /* each step keeps gcd(R, S, T) = 1, which the next step relies on */
        bigint c = gcd(gcd(red.R, red.S), red.T);
        red.R /= c;
        red.S /= c;
        red.T /= c;
        bigint g = gcd(red.R, red.T);
        if (g > 1) {
            g = radical(g);
            /* g | y1: r y2^l - s g^(2l) y1'^(2l) = t, then divide by g */
            red.R /= g;
            red.S *= power(g, 2 * ell - 1);
            red.T /= g;
            red.trace.push_back({'g', g});
            continue;
        }
        bigint h = gcd(red.S, red.T);
        if (h > 1) {
            h = radical(h);
            red.R *= power(h, ell - 1);
            red.S /= h;
            red.T /= h;
            red.trace.push_back({'h', h});
            continue;
        }
        break;
    }
    return red;
}

std::pair<bigint, bigint> lift_solution(ReducedEq const & red, bigint const & rho, bigint const & sigma)
{
    bigint y1 = sigma, y2 = rho;
    for (auto const & st : red.trace)
        (st.kind == 'g' ? y1 : y2) *= st.factor;
    return {y1, y2};
}

namespace {

/* exponent gcd(ell, q-1) test aside, u is an ell-th power in Z_q^* iff
 * its residue mod q^c passes: c = 0 for q = 2, 2 for q = ell, else 1 */
int unit_precision(u64 q, u64 ell)
{
    if (q == 2)
        return 0;
    return q == ell ? 2 : 1;
}

bool unit_is_ell_power(bigint const & u, u64 q, u64 ell)
{
    if (q == 2)
        return true;
    if (q == ell) {
        u64 m = q * q;
        return powmod(mod_of(u, m), ell - 1, m) == 1;
    }
    if ((q - 1) % ell != 0)
        return true;
    return powmod(mod_of(u, q), (q - 1) / ell, q) == 1;
}

struct ZqSearch {
    ReducedEq const & red;
    u64 q;
    u64 ell;
    int ordR, ordS, ord2lS;
    int c;
    u64 need = 1; /* exponent of an obstruction modulus */

    ZqSearch(ReducedEq const & r, u64 q_) : red(r), q(q_), ell(r.ell)
    {
        ordR = ord(red.R, q);
        ordS = ord(red.S, q);
        ord2lS = ordS + ord(bigint(static_cast<unsigned long>(2 * ell)), q);
        c = unit_precision(q, ell);
    }

    /* lower bound on ord(V(s + q^k t) - V(s)) for integer t */
    long precision(int a, int k) const
    {
        long best = std::numeric_limits<long>::max();
        u64 n = 2 * ell;
        bigint binom = 1;
        for (u64 j = 1; j <= n; ++j) {
            binom = binom * (n - j + 1) / j;
            long v = ord(binom, q) + static_cast<long>(n - j) * std::min(a, k) + static_cast<long>(j) * k;
            best = std::min(best, v);
        }
        return ordS + best;
    }

    /* true if some sigma = s mod q^k gives V(sigma) in R Z_q^ell */
    enum class Verdict { yes, no, refine };

    Verdict classify(bigint const & s, int k)
    {
        bigint V = red.T + red.S * power(s, 2 * ell);
        if (V == 0)
            return Verdict::yes; /* rho = 0 */
        int a = std::min(ord(s, q), k);
        long p = precision(a, k);
        long w = ord(V, q);
        if (w < p) {
            if (w < ordR || (w - ordR) % static_cast<long>(ell) != 0) {
                need = std::max<u64>(need, std::max<long>(k, std::max(w + 1, static_cast<long>(ordR) + 0)));
                return Verdict::no;
            }
            if (p - w < c)
                return Verdict::refine;
            bigint qe = power(bigint(static_cast<unsigned long>(q)), static_cast<u64>(w));
            bigint u = V / qe;
            bigint Ru = red.R / power(bigint(static_cast<unsigned long>(q)), static_cast<u64>(ordR));
            /* u / Ru is a unit; test u * Ru^(ell-1), an ell-th power iff u / Ru is */
            bigint test = u * power(Ru, ell - 1);
            if (unit_is_ell_power(test, q, ell))
                return Verdict::yes;
            need = std::max<u64>(need, std::max<long>(k, w + c));
            return Verdict::no;
        }
        if (a < k) {
            /* Hensel: a root of V near s gives rho = 0 */
            long dv = ord2lS + static_cast<long>(2 * ell - 1) * a;
            if (w >= 2 * dv + 1)
                return Verdict::yes;
        }
        return Verdict::refine;
    }

    /* nullopt when solvable, else the obstruction exponent */
    std::optional<u64> run()
    {
        struct Node {
            bigint s;
            int k;
        };
        std::vector<Node> stack;
        for (u64 t = 0; t < q; ++t)
            stack.push_back({bigint(static_cast<unsigned long>(t)), 1});
        bigint qb = static_cast<unsigned long>(q);
        while (!stack.empty()) {
            Node nd = std::move(stack.back());
            stack.pop_back();
            if (nd.k > 200)
                return std::nullopt; /* give up toward solvable */
            switch (classify(nd.s, nd.k)) {
            case Verdict::yes:
                return std::nullopt;
            case Verdict::no:
                break;
            case Verdict::refine: {
                bigint step = power(qb, static_cast<u64>(nd.k));
                for (u64 t = 0; t < q; ++t)
                    stack.push_back({nd.s + step * static_cast<unsigned long>(t), nd.k + 1});
                break;
            }
            }
        }
        return need;
    }
};

} // namespace

bool solvable_in_Zq(ReducedEq const & red, u64 q) { return !ZqSearch(red, q).run().has_value(); }

bool solvable_mod(ReducedEq const & red, u64 m)
{
    std::vector<char> lhs(m, 0);
    u64 R = mod_of(red.R, m), S = mod_of(red.S, m), T = mod_of(red.T, m);
    for (u64 rho = 0; rho < m; ++rho)
        lhs[mulmod(R, powmod(rho, red.ell, m), m)] = 1;
    for (u64 sigma = 0; sigma < m; ++sigma) {
        u64 v = (T + mulmod(S, powmod(sigma, 2 * red.ell, m), m)) % m;
        if (lhs[v])
            return true;
    }
    return false;
}

LocalResult locally_solvable(ReducedEq const & red)
{
    LocalResult res;
    bigint common = gcd(red.R, red.S);
    if (common > 1) {
        /* p | R, S but not T: the equation is T = 0 mod p */
        u64 p = factorize(common).factors.front().prime;
        res.solvable = false;
        res.obstruction = Obstruction{ObstructionKind::common_factor, p, bigint(static_cast<unsigned long>(p))};
        return res;
    }
    if (!red.pairwise_coprime())
        throw std::logic_error("locally_solvable: strip left a common factor with T");

    std::vector<u64> primes;
    for (auto const & v : {red.R, red.S, red.T})
        for (auto const & pp : factorize(abs(v)).factors)
            primes.push_back(pp.prime);
    std::sort(primes.begin(), primes.end());
    primes.erase(std::unique(primes.begin(), primes.end()), primes.end());

    /* -ST must be a square modulo every odd q | R */
    for (u64 q : primes)
        if (q != 2 && mpz_divisible_ui_p(red.R.get_mpz_t(), q) &&
            legendre(mod_of(bigint(-red.S * red.T), q), q) != 1) {
            res.solvable = false;
            res.obstruction = Obstruction{ObstructionKind::quadratic, q, bigint(static_cast<unsigned long>(q))};
            res.primes_tested.push_back(q);
            return res;
        }

    std::vector<u64> order;
    for (bigint const * v : {&red.R, &red.S, &red.T})
        for (u64 q : primes)
            if (mpz_divisible_ui_p(v->get_mpz_t(), q) && std::find(order.begin(), order.end(), q) == order.end())
                order.push_back(q);
    for (u64 q : primes_below(20))
        if (std::find(order.begin(), order.end(), q) == order.end())
            order.push_back(q);

    for (u64 q : order) {
        res.primes_tested.push_back(q);
        if (auto e = ZqSearch(red, q).run()) {
            res.solvable = false;
            res.obstruction =
                Obstruction{ObstructionKind::modular, q, power(bigint(static_cast<unsigned long>(q)), *e)};
            return res;
        }
    }
    return res;
}

} // namespace cubesum
