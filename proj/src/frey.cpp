#include "cubesum/frey.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace cubesum {

std::string to_string(ParityCase p) { return p == ParityCase::ord2_is_0 ? "ORD2_IS_0" : "ORD2_IS_3"; }

std::string to_string(FreyVerdict v)
{
    switch (v) {
    case FreyVerdict::eliminated:
        return "ELIMINATED";
    case FreyVerdict::assumptions:
        return "ASSUMPTIONS";
    case FreyVerdict::divides_bQ:
        return "DIVIDES_BQ";
    case FreyVerdict::no_prime:
        return "NO_PRIME";
    case FreyVerdict::incomplete_data:
        return "INCOMPLETE_DATA";
    }
    return "?";
}

FreySetup frey_setup(int d)
{
    if (d < 3 || d > 50)
        throw std::invalid_argument("frey_setup: d must lie in [3, 50]");
    int v2 = valuation(bigint(d), 2);
    if (v2 != 0 && v2 != 3)
        throw std::invalid_argument("frey_setup: ord_2(d) must be 0 or 3");
    FreySetup s;
    s.d = d;
    s.parity = v2 == 0 ? ParityCase::ord2_is_0 : ParityCase::ord2_is_3;
    bigint n = bigint(d) * (d * d - 1);
    if (s.parity == ParityCase::ord2_is_0) {
        s.S = radical(n).get_ui();
        s.N = s.S;
    } else {
        s.S = radical(n, {2}).get_ui();
        s.N = 2 * s.S;
    }
    return s;
}

namespace {

/* d^2 (d^2-1)^3 */
Factored frey_denominator(int d)
{
    Factored dd = factorize(static_cast<u64>(d));
    Factored m = factorize(static_cast<u64>(d * d - 1));
    return pow(dd, 2) * pow(m, 3);
}

/* exponents of T = 64 S^(2 ell) / (d^2 (d^2-1)^3) at the primes of 2S */
std::vector<std::pair<u64, i64>> frey_T_exponents(FreySetup const & s, u64 ell)
{
    Factored den = frey_denominator(s.d);
    Factored S = factorize(s.S);
    std::vector<std::pair<u64, i64>> out;
    std::set<u64> primes{2};
    for (auto const & pp : S.factors)
        primes.insert(pp.prime);
    for (auto const & pp : den.factors)
        primes.insert(pp.prime);
    for (u64 p : primes) {
        i64 e = (p == 2 ? 6 : 0) + static_cast<i64>(2 * ell) * S.exponent_of(p) - den.exponent_of(p);
        out.emplace_back(p, e);
    }
    return out;
}

} // namespace

bool exponent_assumptions(int d, u64 ell)
{
    Factored m = frey_denominator(d);
    for (auto const & pp : m.factors)
        if (pp.prime != 2 && 2 * ell <= static_cast<u64>(pp.exponent))
            return false;
    if (d % 2 != 0) {
        int mu = valuation(bigint(d * d - 1), 2);
        if (static_cast<i64>(2 * ell) < 3 * mu - 1)
            return false;
    }
    return true;
}

bigint frey_T(FreySetup const & s, u64 ell)
{
    bigint T = 1;
    for (auto [p, e] : frey_T_exponents(s, ell)) {
        if (e < 0)
            throw std::domain_error("frey_T: not an integer");
        bigint pe;
        mpz_ui_pow_ui(pe.get_mpz_t(), p, static_cast<unsigned long>(e));
        T *= pe;
    }
    return T;
}

namespace {

/* integrality and Rad(T) = S without forming T */
bool frey_T_certified(FreySetup const & s, u64 ell)
{
    for (auto [p, e] : frey_T_exponents(s, ell)) {
        bool in_S = s.S % p == 0;
        if (e < 0 || (in_S && e == 0) || (!in_S && e != 0))
            return false;
    }
    return true;
}

} // namespace

/* ---------------------------------------------------------------- data */

template <class R>
std::vector<R> DataTable<R>::at(u64 level) const
{
    std::vector<R> out;
    for (auto const & r : records) {
        u64 l;
        if constexpr (std::is_same_v<R, CurveRecord>)
            l = r.conductor;
        else
            l = r.level;
        if (l == level)
            out.push_back(r);
    }
    return out;
}

template struct DataTable<CurveRecord>;
template struct DataTable<NewformRecord>;

namespace {

std::vector<std::string> split(std::string const & s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        out.push_back(cur);
    return out;
}

i64 parse_i64(std::string const & s, std::string const & where)
{
    i64 v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw std::runtime_error(where + ": bad integer '" + s + "'");
    return v;
}

u64 parse_u64(std::string const & s, std::string const & where)
{
    i64 v = parse_i64(s, where);
    if (v <= 0)
        throw std::runtime_error(where + ": expected a positive integer");
    return static_cast<u64>(v);
}

bool parse_complete(std::string const & line, std::set<u64> & complete, std::string const & where)
{
    if (line.empty() || line[0] != '#')
        return false;
    std::istringstream in(line.substr(1));
    std::string word;
    in >> word;
    if (word == "complete") {
        std::string n;
        in >> n;
        complete.insert(parse_u64(n, where));
    }
    return true;
}

std::ifstream open_or_throw(std::string const & path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    return in;
}

} // namespace

CurveTable load_curves(std::string const & path)
{
    auto in = open_or_throw(path);
    CurveTable table;
    std::string line;
    for (int ln = 1; std::getline(in, line); ++ln) {
        std::string where = path + ":" + std::to_string(ln);
        if (line.empty() || parse_complete(line, table.complete, where))
            continue;
        auto f = split(line, '\t');
        if (f.size() != 7 && f.size() != 8)
            throw std::runtime_error(where + ": expected 7 or 8 columns");
        CurveRecord c;
        c.label = f[0];
        c.conductor = parse_u64(f[1], where);
        for (int i = 0; i < 5; ++i)
            c.a[i] = parse_i64(f[2 + i], where);
        if (f.size() == 8)
            for (auto const & item : split(f[7], ',')) {
                auto kv = split(item, ':');
                if (kv.size() != 2)
                    throw std::runtime_error(where + ": bad a_q entry");
                c.ap[parse_u64(kv[0], where)] = parse_i64(kv[1], where);
            }
        table.records.push_back(std::move(c));
    }
    return table;
}

NewformTable load_newforms(std::string const & path)
{
    auto in = open_or_throw(path);
    NewformTable table;
    std::string line;
    for (int ln = 1; std::getline(in, line); ++ln) {
        std::string where = path + ":" + std::to_string(ln);
        if (line.empty() || parse_complete(line, table.complete, where))
            continue;
        auto f = split(line, '\t');
        if (f.size() < 3)
            throw std::runtime_error(where + ": expected at least 3 columns");
        NewformRecord nf;
        nf.level = parse_u64(f[0], where);
        nf.label = f[1];
        nf.degree = static_cast<int>(parse_u64(f[2], where));
        for (std::size_t i = 3; i < f.size(); ++i) {
            auto colon = f[i].find(':');
            if (colon == std::string::npos)
                throw std::runtime_error(where + ": bad Hecke entry");
            u64 q = parse_u64(f[i].substr(0, colon), where);
            std::vector<bigint> coeffs;
            for (auto const & c : split(f[i].substr(colon + 1), ','))
                coeffs.emplace_back(c);
            if (coeffs.size() != static_cast<std::size_t>(nf.degree) + 1 || coeffs[0] != 1)
                throw std::runtime_error(where + ": polynomial is not monic of the stated degree");
            nf.hecke[q] = std::move(coeffs);
        }
        table.records.push_back(std::move(nf));
    }
    return table;
}

std::string default_data_dir()
{
    if (char const * env = std::getenv("CUBESUM_DATA_DIR"))
        return env;
#ifdef CUBESUM_DATA_DIR
    return CUBESUM_DATA_DIR;
#else
    return "data";
#endif
}

/* ------------------------------------------------------- point counting */

namespace {

u64 isqrt(u64 n)
{
    u64 r = static_cast<u64>(std::sqrt(static_cast<long double>(n)));
    while (r * r > n)
        --r;
    while ((r + 1) * (r + 1) <= n)
        ++r;
    return r;
}

constexpr u64 naive_limit = 1 << 12;

struct LongModel {
    u64 q;
    std::array<u64, 5> a; /* a1 a2 a3 a4 a6 mod q */

    LongModel(CurveRecord const & c, u64 q_) : q(q_)
    {
        for (int i = 0; i < 5; ++i)
            a[i] = mod_of(c.a[i], q);
    }

    u64 sub(u64 x, u64 y) const { return (x + q - y) % q; }
    u64 m(u64 x, u64 y) const { return mulmod(x, y, q); }

    u64 discriminant() const
    {
        auto [a1, a2, a3, a4, a6] = a;
        u64 b2 = (m(a1, a1) + 4 * a2) % q;
        u64 b4 = (2 * a4 + m(a1, a3)) % q;
        u64 b6 = (m(a3, a3) + 4 * a6 % q) % q;
        u64 b8 = sub((m(m(a1, a1), a6) + 4 * m(a2, a6) % q + m(a2, m(a3, a3))) % q,
                     (m(m(a1, a3), a4) + m(a4, a4)) % q);
        u64 neg = (m(m(b2, b2), b8) + 8 * m(m(b4, b4), b4) % q + 27 * m(b6, b6) % q) % q;
        return sub(9 * m(m(b2, b4), b6) % q, neg);
    }

    /* y^2 = x^3 + A x + B, valid for q >= 5 */
    std::pair<u64, u64> short_model() const
    {
        auto [a1, a2, a3, a4, a6] = a;
        u64 b2 = (m(a1, a1) + 4 * a2) % q;
        u64 b4 = (2 * a4 + m(a1, a3)) % q;
        u64 b6 = (m(a3, a3) + 4 * a6 % q) % q;
        u64 c4 = sub(m(b2, b2), 24 * b4 % q);
        u64 c6 = sub((36 * m(b2, b4) % q), (m(m(b2, b2), b2) + 216 * b6 % q) % q);
        return {sub(0, 27 * c4 % q), sub(0, 54 * c6 % q)};
    }

    i64 naive_trace() const
    {
        auto [a1, a2, a3, a4, a6] = a;
        u64 count = 1;
        if (q < 5) {
            for (u64 x = 0; x < q; ++x)
                for (u64 y = 0; y < q; ++y) {
                    u64 lhs = (m(y, y) + m(m(a1, x), y) + m(a3, y)) % q;
                    u64 rhs = (m(m(x, x), x) + m(m(a2, x), x) + m(a4, x) + a6) % q;
                    count += lhs == rhs;
                }
        } else {
            for (u64 x = 0; x < q; ++x) {
                u64 l = (m(a1, x) + a3) % q;
                u64 r = (m(m(x, x), x) + m(m(a2, x), x) + m(a4, x) + a6) % q;
                count += static_cast<u64>(1 + legendre((m(l, l) + 4 * r) % q, q));
            }
        }
        return static_cast<i64>(q + 1) - static_cast<i64>(count);
    }
};

/* Montgomery arithmetic modulo an odd q < 2^63 */
struct Mont {
    u64 n, ninv, r2, one;

    explicit Mont(u64 n_) : n(n_)
    {
        u64 inv = n;
        for (int i = 0; i < 5; ++i)
            inv *= 2 - n * inv;
        ninv = ~inv + 1;
        u64 r1 = static_cast<u64>((static_cast<u128>(1) << 64) % n);
        r2 = mulmod(r1, r1, n);
        one = r1;
    }

    u64 redc(u128 t) const
    {
        u64 m = static_cast<u64>(t) * ninv;
        u64 r = static_cast<u64>((t + static_cast<u128>(m) * n) >> 64);
        return r >= n ? r - n : r;
    }
    u64 mul(u64 a, u64 b) const { return redc(static_cast<u128>(a) * b); }
    u64 to(u64 a) const { return mul(a % n, r2); }
    u64 add(u64 a, u64 b) const
    {
        u64 s = a + b;
        return s >= n ? s - n : s;
    }
    u64 sub(u64 a, u64 b) const { return a >= b ? a - b : a + n - b; }
    u64 pow(u64 b, u64 e) const
    {
        u64 r = one;
        while (e != 0) {
            if (e & 1)
                r = mul(r, b);
            b = mul(b, b);
            e >>= 1;
        }
        return r;
    }
};

/* x-only arithmetic on y^2 = x^3 + A x + B and its quadratic twist */
struct XLine {
    Mont f;
    u64 A, B, B4, B8;

    XLine(u64 q, u64 a, u64 b) : f(q), A(f.to(a)), B(f.to(b))
    {
        B4 = f.add(f.add(B, B), f.add(B, B));
        B8 = f.add(B4, B4);
    }

    /* f(x) for x in Montgomery form */
    u64 rhs(u64 x) const { return f.add(f.mul(f.add(f.mul(x, x), A), x), B); }

    int chi(u64 x) const
    {
        u64 v = rhs(x);
        if (v == 0)
            return 0;
        return f.pow(v, (f.n - 1) / 2) == f.one ? 1 : -1;
    }

    /* Z-coordinate of m P is zero, for P with affine x-coordinate xd != 0 */
    bool kills(u64 m, u64 xd) const
    {
        u64 X0 = f.one, Z0 = 0, X1 = xd, Z1 = f.one;
        for (int bit = 63 - __builtin_clzll(m); bit >= 0; --bit) {
            bool b = (m >> bit) & 1;
            u64 & Xd = b ? X1 : X0;
            u64 & Zd = b ? Z1 : Z0;
            u64 & Xa = b ? X0 : X1;
            u64 & Za = b ? Z0 : Z1;
            /* differential addition into the other register */
            u64 u = f.mul(X0, X1), v = f.mul(Z0, Z1);
            u64 w = f.mul(X0, Z1), z = f.mul(X1, Z0);
            u64 t = f.sub(u, f.mul(A, v));
            u64 Xs = f.sub(f.mul(t, t), f.mul(B4, f.mul(v, f.add(w, z))));
            u64 dz = f.sub(w, z);
            u64 Zs = f.mul(xd, f.mul(dz, dz));
            /* doubling */
            u64 XX = f.mul(Xd, Xd), ZZ = f.mul(Zd, Zd);
            u64 s = f.sub(XX, f.mul(A, ZZ));
            u64 XZ = f.mul(Xd, Zd);
            u64 Xt = f.sub(f.mul(s, s), f.mul(B8, f.mul(XZ, ZZ)));
            u64 inner = f.add(f.mul(Xd, f.add(XX, f.mul(A, ZZ))), f.mul(B, f.mul(Zd, ZZ)));
            u64 Zt = f.mul(f.add(f.add(Zd, Zd), f.add(Zd, Zd)), inner);
            Xa = Xs;
            Za = Zs;
            Xd = Xt;
            Zd = Zt;
        }
        if (X0 == 0 && Z0 == 0)
            throw std::logic_error("x-only ladder degenerated");
        return Z0 == 0;
    }
};

/* affine points for baby-step giant-step */
struct AffinePt {
    u64 x = 0, y = 0;
    bool inf = true;
};

struct AffineCurve {
    u64 q, A, B;

    AffinePt add(AffinePt const & P, AffinePt const & Q) const
    {
        if (P.inf)
            return Q;
        if (Q.inf)
            return P;
        u64 lam;
        if (P.x == Q.x) {
            if ((P.y + Q.y) % q == 0)
                return {};
            u64 num = (3 * mulmod(P.x, P.x, q) + A) % q;
            lam = mulmod(num, invmod(2 * P.y % q, q), q);
        } else {
            lam = mulmod((P.y + q - Q.y) % q, invmod((P.x + q - Q.x) % q, q), q);
        }
        u64 x3 = (mulmod(lam, lam, q) + 2 * q - P.x - Q.x) % q;
        u64 y3 = (mulmod(lam, (P.x + q - x3) % q, q) + q - P.y) % q;
        return {x3, y3, false};
    }

    AffinePt mul(AffinePt P, u64 k) const
    {
        AffinePt R;
        while (k != 0) {
            if (k & 1)
                R = add(R, P);
            P = add(P, P);
            k >>= 1;
        }
        return R;
    }

    /* exact order of P, given the Hasse window [lo, hi] containing a multiple */
    u64 order(AffinePt const & P, u64 lo, u64 hi) const
    {
        u64 width = hi - lo;
        u64 s = isqrt(width) + 1;
        std::unordered_map<u64, std::pair<u64, u64>> baby;
        AffinePt J = P;
        for (u64 j = 1; j <= s; ++j) {
            if (J.inf)
                return reduce(P, j);
            baby.emplace(J.x, std::make_pair(j, J.y));
            J = add(J, P);
        }
        AffinePt G = mul(P, s);
        AffinePt Q = mul(P, lo);
        for (u64 i = 0; i <= width / s + 1; ++i, Q = add(Q, G)) {
            u64 base = lo + i * s;
            if (Q.inf)
                return reduce(P, base);
            auto it = baby.find(Q.x);
            if (it == baby.end())
                continue;
            auto [j, y] = it->second;
            return reduce(P, y == Q.y ? base - j : base + j);
        }
        throw std::logic_error("baby-step giant-step: no multiple in the Hasse window");
    }

    u64 reduce(AffinePt const & P, u64 m) const
    {
        for (auto const & pp : factorize(m).factors)
            for (int e = 0; e < pp.exponent && m % pp.prime == 0; ++e) {
                if (!mul(P, m / pp.prime).inf)
                    break;
                m /= pp.prime;
            }
        return m;
    }
};

u64 lcm_u64(u64 a, u64 b) { return a / gcd_u64(a, b) * b; }

/* a_q via orders of points on E and its twist; q >= naive_limit */
i64 bsgs_trace(u64 q, u64 A, u64 B)
{
    u64 b = isqrt(4 * q);
    u64 lo = q + 1 - b, hi = q + 1 + b;
    u64 v = 2;
    while (legendre(v, q) != -1)
        ++v;
    u64 v2 = mulmod(v, v, q);
    AffineCurve E{q, A, B};
    AffineCurve Et{q, mulmod(A, v2, q), mulmod(B, mulmod(v2, v, q), q)};
    u64 lcm_e = 1, lcm_t = 1;
    for (u64 x = 1; x < q && x < 2000; ++x) {
        u64 fx = (mulmod(mulmod(x, x, q), x, q) + mulmod(A, x, q) + B) % q;
        int c = legendre(fx, q);
        if (c == 0)
            continue;
        if (c == 1) {
            AffinePt P{x, sqrt_mod(fx, q), false};
            lcm_e = lcm_u64(lcm_e, E.order(P, lo, hi));
        } else {
            /* (v x, sqrt(v^3 f(x))) lies on the twist */
            u64 X = mulmod(v, x, q);
            AffinePt P{X, sqrt_mod(mulmod(mulmod(v2, v, q), fx, q), q), false};
            lcm_t = lcm_u64(lcm_t, Et.order(P, lo, hi));
        }
        u64 found = 0, count = 0;
        for (u64 n = (lo + lcm_e - 1) / lcm_e * lcm_e; n <= hi && count < 2; n += lcm_e)
            if ((2 * q + 2 - n) % lcm_t == 0) {
                found = n;
                ++count;
            }
        if (count == 1)
            return static_cast<i64>(q + 1) - static_cast<i64>(found);
    }
    throw std::runtime_error("bsgs_trace: group order not determined");
}

void require_good(CurveRecord const & c, u64 q)
{
    if (c.conductor % q == 0)
        throw std::domain_error("ap_point_count: bad reduction at q");
    if (LongModel(c, q).discriminant() == 0)
        throw std::domain_error("ap_point_count: model singular mod q");
}

} // namespace

i64 ap_point_count(CurveRecord const & c, u64 q)
{
    require_good(c, q);
    LongModel lm(c, q);
    if (q < naive_limit)
        return lm.naive_trace();
    auto [A, B] = lm.short_model();
    return bsgs_trace(q, A, B);
}

bool ell_divides_ap2_minus_4(CurveRecord const & c, u64 q, u64 ell)
{
    require_good(c, q);
    i64 b = static_cast<i64>(isqrt(4 * q));
    i64 l = static_cast<i64>(ell);
    /* |a| <= 2 sqrt q with a = +-2 mod ell */
    std::vector<i64> cand;
    for (i64 r : {i64(2) % l, (l - 2) % l}) {
        i64 a = -b + (((r + b) % l) + l) % l;
        for (; a <= b; a += l)
            cand.push_back(a);
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    if (cand.empty())
        return false;
    LongModel lm(c, q);
    if (q < naive_limit) {
        i64 a = lm.naive_trace();
        return std::find(cand.begin(), cand.end(), a) != cand.end();
    }
    auto [A, B] = lm.short_model();
    XLine line(q, A, B);
    /* a is ruled out once some point on E (twist) is not killed by q+1-a (q+1+a) */
    for (u64 x = 1; x <= 24 && !cand.empty(); ++x) {
        u64 xm = line.f.to(x);
        int chi = line.chi(xm);
        if (chi == 0)
            continue;
        std::erase_if(cand, [&](i64 a) {
            i64 order = static_cast<i64>(q + 1) - chi * a;
            return !line.kills(static_cast<u64>(order), xm);
        });
    }
    if (cand.empty())
        return false;
    i64 a = bsgs_trace(q, A, B);
    return std::find(cand.begin(), cand.end(), a) != cand.end();
}

/* ------------------------------------------------------------- newforms */

std::vector<i64> hasse_h_set(u64 q)
{
    i64 b = static_cast<i64>(isqrt(4 * q));
    std::vector<i64> out;
    for (i64 a = -b; a <= b; ++a)
        if (((static_cast<i64>(q) + 1 - a) % 4 + 4) % 4 == 0)
            out.push_back(a);
    return out;
}

namespace {

bigint eval_poly(std::vector<bigint> const & p, bigint const & x)
{
    bigint acc = 0;
    for (auto const & c : p)
        acc = acc * x + c;
    return acc;
}

} // namespace

bigint bq_value(NewformRecord const & f, u64 q)
{
    auto const & p = f.hecke.at(q);
    bigint qq = static_cast<unsigned long>(q);
    bigint acc = qq * eval_poly(p, qq + 1) * eval_poly(p, -(qq + 1));
    for (i64 a : hasse_h_set(q))
        acc *= eval_poly(p, bigint(static_cast<long>(a)));
    return abs(acc);
}

bigint bQ_bound(NewformRecord const & f, std::span<u64 const> Q)
{
    bigint g = 0;
    for (u64 q : Q) {
        bigint b = bq_value(f, q);
        mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), b.get_mpz_t());
    }
    return g;
}

std::vector<IsogenyClass> isogeny_classes(std::vector<CurveRecord> const & curves)
{
    std::vector<IsogenyClass> out;
    for (auto const & c : curves) {
        std::vector<i64> tr;
        for (u64 q : primes_below(100))
            if (c.conductor % q != 0)
                tr.push_back(ap_point_count(c, q));
        auto it = std::find_if(out.begin(), out.end(),
                               [&](IsogenyClass const & k) { return k.traces == tr; });
        if (it == out.end())
            out.push_back({c, {c.label}, tr});
        else
            it->members.push_back(c.label);
    }
    return out;
}

/* ---------------------------------------------------------- elimination */

FreyLevel prepare_level(int d, CurveTable const & curves, NewformTable const & forms)
{
    FreyLevel lv;
    lv.setup = frey_setup(d);
    bool found = false;
    for (auto const & e : descent_equations(d, d, ExponentClass::ge5))
        if (e.is_trivial_branch()) {
            lv.equation = e;
            found = true;
        }
    if (!found)
        throw std::logic_error("prepare_level: no r = t equation");
    u64 N = lv.setup.N;
    lv.complete = curves.complete.count(N) != 0 && forms.complete.count(N) != 0;
    lv.classes = isogeny_classes(curves.at(N));
    std::vector<u64> Q;
    for (u64 q : primes_below(100))
        if (N % q != 0)
            Q.push_back(q);
    for (auto const & f : forms.at(N))
        if (!f.rational())
            lv.irrational.push_back({f.label, bQ_bound(f, Q)});
    return lv;
}

namespace {

bool admissible_q(FreyLevel const & lv, u64 q, WordEq const & w)
{
    return is_prime(q) && lv.setup.N % q != 0 && w.r % q != 0;
}

} // namespace

FreyOutcome frey_eliminate(FreyLevel const & lv, u64 ell, u64 kmax)
{
    FreyOutcome out;
    out.d = lv.setup.d;
    out.ell = ell;
    if (ell < 5 || !is_prime(ell))
        throw std::invalid_argument("frey_eliminate: ell must be a prime >= 5");
    if (!exponent_assumptions(lv.setup.d, ell)) {
        out.verdict = FreyVerdict::assumptions;
        return out;
    }
    if (!frey_T_certified(lv.setup, ell))
        throw std::logic_error("frey_eliminate: T is not an integer with radical S");
    if (!lv.complete) {
        out.verdict = FreyVerdict::incomplete_data;
        return out;
    }
    for (auto const & f : lv.irrational)
        if (mpz_divisible_ui_p(f.bQ.get_mpz_t(), ell)) {
            out.verdict = FreyVerdict::divides_bQ;
            out.failing = f.label;
            return out;
        }

    WordEq w = WordEq::from(lv.equation);
    std::vector<std::size_t> pending(lv.classes.size());
    for (std::size_t i = 0; i < pending.size(); ++i)
        pending[i] = i;
    out.witnesses.resize(lv.classes.size());
    for (u64 k = 1; k <= kmax && !pending.empty(); ++k) {
        u64 q = 2 * k * ell + 1;
        if (!admissible_q(lv, q, w))
            continue;
        RootsOfUnity mu(ell, q);
        if (!sieve_matches(w, mu, SieveMode::zero_only))
            continue;
        std::erase_if(pending, [&](std::size_t i) {
            auto const & rep = lv.classes[i].representative;
            if (ell_divides_ap2_minus_4(rep, q, ell))
                return false;
            out.witnesses[i] = {rep.label, q, k};
            return true;
        });
    }
    if (!pending.empty()) {
        out.verdict = FreyVerdict::no_prime;
        out.failing = lv.classes[pending.front()].representative.label;
        out.witnesses.clear();
        return out;
    }
    out.verdict = FreyVerdict::eliminated;
    return out;
}

bool check_frey_witness(FreyLevel const & lv, CurveRecord const & rep, u64 ell, u64 q)
{
    WordEq w = WordEq::from(lv.equation);
    if ((q - 1) % (2 * ell) != 0 || !admissible_q(lv, q, w))
        return false;
    if (sieve_set(lv.equation, ell, q) != std::vector<u64>{0})
        return false;
    i64 a = ap_point_count(rep, q);
    i128 v = static_cast<i128>(a) * a - 4;
    return v % static_cast<i128>(ell) != 0;
}

void frey_sweep(FreyLevel const & lv, FreySweepConfig const & cfg,
                std::function<void(FreyOutcome const &)> const & sink)
{
    std::vector<u64> ells;
    for (u64 p : primes_below(cfg.ell_max))
        if (p >= cfg.ell_min && p >= 5)
            ells.push_back(p);
    unsigned jobs = std::max(1u, cfg.jobs);
    std::size_t const batch = 64 * jobs;
    std::vector<FreyOutcome> results;
    for (std::size_t start = 0; start < ells.size(); start += batch) {
        std::size_t stop = std::min(ells.size(), start + batch);
        results.assign(stop - start, {});
        auto work = [&](unsigned j) {
            for (std::size_t i = start + j; i < stop; i += jobs)
                results[i - start] = frey_eliminate(lv, ells[i], cfg.kmax);
        };
        if (jobs == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (unsigned j = 0; j < jobs; ++j)
                pool.emplace_back(work, j);
            for (auto & th : pool)
                th.join();
        }
        for (auto const & r : results)
            sink(r);
    }
}

} // namespace cubesum
