#include "cubesum/descent.hpp"

#include <algorithm>
#include <stdexcept>

namespace cubesum {

std::string to_string(ExponentClass c) { return c == ExponentClass::ge5 ? "GE5" : "EQ3"; }

namespace {

int mod3(int m) { return ((m % 3) + 3) % 3; }

Rational prime_power(u64 q, int e)
{
    bigint base = static_cast<unsigned long>(q);
    bigint pe;
    mpz_pow_ui(pe.get_mpz_t(), base.get_mpz_t(), static_cast<unsigned long>(std::abs(e)));
    Rational r(pe);
    if (e < 0)
        r = 1 / r;
    return r;
}

bigint lcm(bigint const & a, bigint const & b)
{
    bigint r;
    mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

bigint gcd(bigint const & a, bigint const & b)
{
    bigint r;
    mpz_gcd(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

} // namespace

namespace {

std::vector<std::pair<int, int>> exponent_entries(int d, u64 q, ExponentClass cls)
{
    if (d < 3)
        throw std::invalid_argument("local_exponent_set: d must be >= 3");
    bigint dd = d;
    bigint d2m1 = dd * dd - 1;
    bool q_divides_d = mpz_divisible_ui_p(dd.get_mpz_t(), q) != 0;
    bool q_divides_d2m1 = mpz_divisible_ui_p(d2m1.get_mpz_t(), q) != 0;
    if (!q_divides_d && !q_divides_d2m1)
        return {{0, 0}};
    int nu = q_divides_d ? valuation(dd, q) : 0;
    int mu = q_divides_d2m1 ? valuation(d2m1, q) : 0;

    if (cls == ExponentClass::ge5) {
        if (q == 2) {
            if (q_divides_d)
                return {{0, 1 - nu}};
            if (mu % 2 == 0)
                return {{1, 0}, {mu / 2, 1 - mu / 2}, {3 - mu, mu - 2}};
            return {{1, 0}, {3 - mu, mu - 2}};
        }
        if (q_divides_d)
            return {{-nu, 0}, {0, -nu}};
        if (mu % 2 == 0)
            return {{0, 0}, {-mu, mu}, {mu / 2, -mu / 2}};
        return {{0, 0}, {-mu, mu}};
    }

    if (q == 2) {
        if (q_divides_d)
            return {{0, mod3(1 - nu)}};
        if (mu < 3)
            throw std::logic_error("local_exponent_set: ord_2(d^2-1) < 3 for odd d");
        if (mu >= 4)
            return {{1, 0}, {0, 1}, {2, 2}};
        return {{1, 0}, {0, 1}};
    }
    if (q_divides_d)
        return {{mod3(-nu), 0}, {0, mod3(-nu)}};
    if (mu >= 2)
        return {{0, 0}, {1, 2}, {2, 1}};
    return {{0, 0}, {2, 1}};
}

} // namespace

/* Entries can coincide after reduction mod 3 (odd q with 3 | nu_q), so
 * duplicates are dropped while keeping the textual order. */
std::vector<std::pair<int, int>> local_exponent_set(int d, u64 q, ExponentClass cls)
{
    std::vector<std::pair<int, int>> out;
    for (auto const & e : exponent_entries(d, q, cls))
        if (std::find(out.begin(), out.end(), e) == out.end())
            out.push_back(e);
    return out;
}

std::vector<DescentPair> descent_pairs(int d, ExponentClass cls)
{
    if (d < 3 || d > 50)
        throw std::invalid_argument("descent_pairs: d must lie in [3, 50]");
    bigint dd = d;
    Factored support = factorize(bigint(dd * (dd * dd - 1)));

    std::vector<DescentPair> pairs{{Rational(1), Rational(1), d, cls}};
    for (auto const & pp : support.factors) {
        std::vector<DescentPair> next;
        for (auto const & [ea, eb] : local_exponent_set(d, pp.prime, cls))
            for (auto const & p : pairs) {
                DescentPair q = p;
                q.alpha *= prime_power(pp.prime, ea);
                q.beta *= prime_power(pp.prime, eb);
                next.push_back(q);
            }
        pairs = std::move(next);
    }
    for (auto & p : pairs) {
        p.alpha.canonicalize();
        p.beta.canonicalize();
    }
    std::sort(pairs.begin(), pairs.end(), [](DescentPair const & a, DescentPair const & b) {
        auto key = [](DescentPair const & p) {
            return std::tuple(bigint(p.alpha.get_num()), bigint(p.alpha.get_den()),
                              bigint(p.beta.get_num()), bigint(p.beta.get_den()));
        };
        return key(a) < key(b);
    });
    return pairs;
}

TernaryEq ternary_coefficients(DescentPair const & pair)
{
    Rational a = 4 * pair.beta;
    Rational b = pair.alpha * pair.alpha;
    Rational c = Rational(pair.d * pair.d - 1);
    bigint den = lcm(lcm(bigint(a.get_den()), bigint(b.get_den())), bigint(c.get_den()));
    bigint r = bigint(a.get_num()) * (den / a.get_den());
    bigint s = bigint(b.get_num()) * (den / b.get_den());
    bigint t = bigint(c.get_num()) * (den / c.get_den());
    bigint g = gcd(gcd(r, s), t);
    return TernaryEq{r / g, s / g, t / g, pair.d, pair.cls, pair};
}

std::vector<TernaryEq> descent_equations(int d_min, int d_max, ExponentClass cls)
{
    std::vector<TernaryEq> out;
    for (int d = d_min; d <= d_max; ++d)
        for (auto const & p : descent_pairs(d, cls))
            out.push_back(ternary_coefficients(p));
    return out;
}

namespace {

void push_solution(std::vector<DegenerateSolution> & out, TernaryEq const & eq, unsigned ell,
                   bigint const & y1, bigint const & y2, DegenerateBranch branch)
{
    for (auto const & s : out)
        if (s.y1 == y1 && s.y2 == y2)
            return;
    bigint y1l;
    mpz_pow_ui(y1l.get_mpz_t(), y1.get_mpz_t(), ell);
    Rational x = (eq.source.alpha * Rational(y1l) - (eq.d + 1)) / 2;
    x.canonicalize();
    out.push_back({y1, y2, x, x.get_den() == 1, branch});
}

/* integer y >= 0 with y^(2 ell) = v, or nothing */
std::optional<bigint> even_root(Rational v, unsigned ell)
{
    v.canonicalize();
    if (v < 0 || v.get_den() != 1)
        return std::nullopt;
    return perfect_power_root(bigint(v.get_num()), 2 * ell);
}

} // namespace

std::vector<DegenerateSolution> degenerate_solutions(TernaryEq const & eq, unsigned ell)
{
    if (ell < 5)
        throw std::invalid_argument("degenerate_solutions: ell must be >= 5");
    std::vector<DegenerateSolution> out;

    /* y2 = y1^2: (r - s) y1^(2 ell) = t */
    if (eq.r != eq.s)
        if (auto y = even_root(Rational(eq.t, eq.r - eq.s), ell); y && *y != 0) {
            bigint y2 = *y * *y;
            push_solution(out, eq, ell, *y, y2, DegenerateBranch::y2_is_y1_squared);
            push_solution(out, eq, ell, bigint(-*y), y2, DegenerateBranch::y2_is_y1_squared);
        }

    /* y2 = 1: r - s y1^(2 ell) = t */
    if (auto y = even_root(Rational(eq.r - eq.t, eq.s), ell)) {
        push_solution(out, eq, ell, *y, 1, DegenerateBranch::y2_is_one);
        if (*y != 0)
            push_solution(out, eq, ell, bigint(-*y), 1, DegenerateBranch::y2_is_one);
    }

    /* y1 in {-1, 0, 1}: r y2^ell = t + s y1^(2 ell) */
    for (int y1 : {-1, 0, 1}) {
        bigint rhs = eq.t + (y1 == 0 ? bigint(0) : eq.s);
        if (rhs % eq.r != 0)
            continue;
        if (auto y2 = perfect_power_root(rhs / eq.r, ell))
            push_solution(out, eq, ell, y1, *y2, DegenerateBranch::y1_small);
    }
    return out;
}

unsigned degenerate_stable_ell(TernaryEq const & eq)
{
    size_t bits = std::max({mpz_sizeinbase(eq.r.get_mpz_t(), 2), mpz_sizeinbase(eq.s.get_mpz_t(), 2),
                            mpz_sizeinbase(eq.t.get_mpz_t(), 2)});
    return static_cast<unsigned>(bits + 2);
}

bigint linear_factor(bigint const & x, int d) { return 2 * x + d + 1; }

bigint quadratic_factor(bigint const & x, int d)
{
    return x * x + (d + 1) * x + (d * (d + 1)) / 2;
}

bigint descent_identity_lhs(bigint const & x, int d)
{
    bigint l = linear_factor(x, d);
    return 4 * quadratic_factor(x, d) - l * l;
}

} // namespace cubesum
