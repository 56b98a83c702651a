#include "cubesum/quadfield.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace cubesum {

namespace {

bigint floor_div(bigint const & a, bigint const & b)
{
    bigint q;
    mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return q;
}

bigint ipow(bigint const & b, u64 e)
{
    bigint r;
    mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), e);
    return r;
}

bigint gcd(bigint const & a, bigint const & b)
{
    bigint r;
    mpz_gcd(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

bigint to_int(Rational const & x)
{
    if (x.get_den() != 1)
        throw std::logic_error("quadfield: expected an integer");
    return x.get_num();
}

/* ord_p with INT_MAX for zero */
int ord(Rational const & x, u64 p)
{
    if (x == 0)
        return std::numeric_limits<int>::max();
    return valuation(x, p);
}

/* residue of a p-integral rational */
bigint rat_mod(Rational const & x, bigint const & mod)
{
    bigint den = x.get_den(), inv, r;
    if (mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), mod.get_mpz_t()) == 0)
        throw std::domain_error("rat_mod: denominator not invertible");
    r = x.get_num() * inv;
    mpz_fdiv_r(r.get_mpz_t(), r.get_mpz_t(), mod.get_mpz_t());
    return r;
}

bool squarefree(u64 m)
{
    for (auto const & f : factorize(m).factors)
        if (f.exponent > 1)
            return false;
    return true;
}

/* Gaussian elimination over F_ell: all x with A x = b, as a particular
 * solution and a kernel basis; nullopt if inconsistent. */
struct AffineSolution {
    std::vector<u64> particular;
    std::vector<std::vector<u64>> kernel;
};

std::optional<AffineSolution> solve_mod(std::vector<std::vector<u64>> A, std::vector<u64> b, std::size_t cols, u64 ell)
{
    std::size_t rows = A.size();
    std::vector<int> pivot_col;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && A[piv][c] == 0)
            ++piv;
        if (piv == rows)
            continue;
        std::swap(A[piv], A[r]);
        std::swap(b[piv], b[r]);
        u64 inv = invmod(A[r][c], ell);
        for (auto & x : A[r])
            x = mulmod(x, inv, ell);
        b[r] = mulmod(b[r], inv, ell);
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r || A[i][c] == 0)
                continue;
            u64 f = A[i][c];
            for (std::size_t j = 0; j < cols; ++j)
                A[i][j] = (A[i][j] + ell - mulmod(f, A[r][j], ell)) % ell;
            b[i] = (b[i] + ell - mulmod(f, b[r], ell)) % ell;
        }
        pivot_col.push_back(static_cast<int>(c));
        ++r;
    }
    for (std::size_t i = r; i < rows; ++i)
        if (b[i] != 0)
            return std::nullopt;
    AffineSolution sol;
    sol.particular.assign(cols, 0);
    for (std::size_t i = 0; i < r; ++i)
        sol.particular[pivot_col[i]] = b[i];
    std::vector<char> is_pivot(cols, 0);
    for (int c : pivot_col)
        is_pivot[c] = 1;
    for (std::size_t f = 0; f < cols; ++f) {
        if (is_pivot[f])
            continue;
        std::vector<u64> v(cols, 0);
        v[f] = 1;
        for (std::size_t i = 0; i < r; ++i)
            v[pivot_col[i]] = (ell - A[i][f]) % ell;
        sol.kernel.push_back(std::move(v));
    }
    return sol;
}

std::size_t rank_mod(std::vector<std::vector<u64>> const & A, std::size_t cols, u64 ell)
{
    auto s = solve_mod(A, std::vector<u64>(A.size(), 0), cols, ell);
    return cols - s->kernel.size();
}

u64 primitive_root(u64 q)
{
    auto fs = factorize(q - 1).factors;
    for (u64 g = 2;; ++g) {
        bool ok = true;
        for (auto const & f : fs)
            ok = ok && powmod(g, (q - 1) / f.prime, q) != 1;
        if (ok)
            return g;
    }
}

} // namespace

std::string to_string(PrimeIdeal const & P)
{
    switch (P.kind) {
    case Splitting::inert:
        return "(" + std::to_string(P.p) + ")";
    case Splitting::ramified:
    case Splitting::split:
        return "(" + std::to_string(P.p) + ", w - " + std::to_string(P.root) + ")";
    }
    return "?";
}

BinaryForm reduce_form(BinaryForm f, std::pair<bigint, bigint> * col)
{
    if (f.a <= 0 || f.discriminant() >= 0)
        throw std::invalid_argument("reduce_form: form must be positive definite");
    /* M = [[m11, m12], [m21, m22]] with f_original o M = f */
    bigint m11 = 1, m12 = 0, m21 = 0, m22 = 1;
    for (;;) {
        /* b into (-a, a] by X -> X + k Y */
        bigint k = floor_div(f.a - f.b, 2 * f.a);
        if (k != 0) {
            bigint nc = f.a * k * k + f.b * k + f.c;
            f.b += 2 * f.a * k;
            f.c = nc;
            m12 += m11 * k;
            m22 += m21 * k;
        }
        if (f.a > f.c || (f.a == f.c && f.b < 0)) {
            /* (X, Y) -> (-Y, X) */
            std::swap(f.a, f.c);
            f.b = -f.b;
            bigint t11 = m12, t21 = m22;
            m12 = -m11;
            m22 = -m21;
            m11 = t11;
            m21 = t21;
            continue;
        }
        break;
    }
    if (col)
        *col = {m11, m21};
    return f;
}

u64 count_reduced_forms(i64 D)
{
    if (D >= 0 || ((D % 4) + 4) % 4 > 1)
        throw std::invalid_argument("count_reduced_forms: need a negative discriminant");
    u64 h = 0;
    i64 N = -D;
    for (i64 a = 1; 3 * a * a <= N; ++a)
        for (i64 b = -a + 1; b <= a; ++b) {
            i64 num = b * b - D;
            if (num % (4 * a) != 0)
                continue;
            i64 c = num / (4 * a);
            if (c < a || (c == a && b < 0))
                continue;
            if (gcd_u64(gcd_u64(static_cast<u64>(a), static_cast<u64>(b < 0 ? -b : b)), static_cast<u64>(c)) != 1)
                continue;
            ++h;
        }
    return h;
}

QuadField::QuadField(u64 m) : m_(m)
{
    if (m == 0 || !squarefree(m))
        throw std::invalid_argument("QuadField: m must be squarefree and positive");
    half_ = m % 4 == 3;
    disc_ = half_ ? -static_cast<i64>(m) : -4 * static_cast<i64>(m);
    i64 N = -disc_;
    for (i64 a = 1; 3 * a * a <= N; ++a)
        for (i64 b = -a + 1; b <= a; ++b) {
            i64 num = b * b - disc_;
            if (num % (4 * a) != 0)
                continue;
            i64 c = num / (4 * a);
            if (c < a || (c == a && b < 0))
                continue;
            if (gcd_u64(gcd_u64(static_cast<u64>(a), static_cast<u64>(b < 0 ? -b : b)), static_cast<u64>(c)) != 1)
                continue;
            Ideal I = ideal(BinaryForm{a, b, c});
            ClassKey k = class_of(I);
            if (reps_.count(k))
                throw std::logic_error("QuadField: two reduced forms in one class");
            reps_.emplace(k, I);
            keys_.push_back(k);
        }
    std::sort(keys_.begin(), keys_.end());
}

int QuadField::unit_order() const
{
    if (m_ == 1)
        return 4;
    return m_ == 3 ? 6 : 2;
}

std::pair<Rational, Rational> QuadField::coords(QuadElt const & e) const
{
    if (!half_)
        return {e.a, e.b};
    return {e.a - e.b, 2 * e.b};
}

QuadElt QuadField::from_coords(Rational const & x, Rational const & y) const
{
    if (!half_)
        return {x, y};
    Rational h = y / 2;
    return {x + h, h};
}

bool QuadField::is_integral(QuadElt const & e) const
{
    auto [x, y] = coords(e);
    return x.get_den() == 1 && y.get_den() == 1;
}

std::vector<PrimeIdeal> QuadField::primes_above(u64 p) const
{
    if (!is_prime(p))
        throw std::invalid_argument("primes_above: p must be prime");
    i64 D = disc_;
    if (static_cast<i64>((-D) % static_cast<i64>(p)) == 0) {
        u64 r;
        if (p == 2)
            r = m_ % 2;
        else
            r = half_ ? invmod(2, p) : 0;
        return {PrimeIdeal{p, Splitting::ramified, r}};
    }
    if (p == 2) {
        /* half omega, m = 3 mod 4: x^2 - x + (1+m)/4 */
        if (((1 + m_) / 4) % 2 == 1)
            return {PrimeIdeal{2, Splitting::inert, 0}};
        return {PrimeIdeal{2, Splitting::split, 0}, PrimeIdeal{2, Splitting::split, 1}};
    }
    u64 minus_m = (p - m_ % p) % p;
    if (legendre(minus_m, p) != 1)
        return {PrimeIdeal{p, Splitting::inert, 0}};
    u64 s = sqrt_mod(minus_m, p);
    u64 r1, r2;
    if (half_) {
        u64 inv2 = invmod(2, p);
        r1 = mulmod((1 + s) % p, inv2, p);
        r2 = mulmod((1 + p - s) % p, inv2, p);
    } else {
        r1 = s;
        r2 = p - s;
    }
    if (r1 > r2)
        std::swap(r1, r2);
    return {PrimeIdeal{p, Splitting::split, r1}, PrimeIdeal{p, Splitting::split, r2}};
}

PrimeIdeal QuadField::conj(PrimeIdeal const & P) const
{
    if (P.kind != Splitting::split)
        return P;
    u64 r = half_ ? (1 + P.p - P.root) % P.p : (P.p - P.root) % P.p;
    return PrimeIdeal{P.p, Splitting::split, r};
}

bigint QuadField::norm(PrimeIdeal const & P) const
{
    bigint p = static_cast<unsigned long>(P.p);
    return P.kind == Splitting::inert ? bigint(p * p) : p;
}

int QuadField::valuation(QuadElt const & e, PrimeIdeal const & P) const
{
    if (e.a == 0 && e.b == 0)
        throw std::domain_error("valuation of zero");
    u64 p = P.p;
    if (P.kind == Splitting::ramified)
        return cubesum::valuation(norm(e), p);
    auto [x, y] = coords(e);
    int e0 = std::min(ord(x, p), ord(y, p));
    if (P.kind == Splitting::inert)
        return e0;
    Rational scale = 1;
    bigint pe = ipow(bigint(static_cast<unsigned long>(p)), static_cast<u64>(std::abs(e0)));
    if (e0 > 0)
        scale = Rational(1, 1) / Rational(pe);
    else if (e0 < 0)
        scale = Rational(pe);
    bigint pm = static_cast<unsigned long>(p);
    bigint t = rat_mod(x * scale, pm) + rat_mod(y * scale, pm) * static_cast<unsigned long>(P.root);
    if (t % pm != 0)
        return e0;
    return cubesum::valuation(norm(e), p) - e0;
}

u64 QuadField::residue(QuadElt const & e, PrimeIdeal const & P) const
{
    if (P.kind == Splitting::inert)
        throw std::invalid_argument("residue: inert prime");
    if (valuation(e, P) != 0)
        throw std::domain_error("residue: not a unit at P");
    u64 p = P.p;
    auto [x, y] = coords(e);
    int lo = std::min(ord(x, p), ord(y, p));
    if (lo >= 0) {
        bigint pm = static_cast<unsigned long>(p);
        bigint t = rat_mod(x, pm) + rat_mod(y, pm) * static_cast<unsigned long>(P.root);
        return mod_of(t, p);
    }
    /* split P with p in the denominators: lift omega to Z_p */
    u64 E = static_cast<u64>(-lo);
    bigint pb = static_cast<unsigned long>(p);
    bigint mod = ipow(pb, E + 1);
    bigint w = static_cast<unsigned long>(P.root);
    bigint cst = half_ ? bigint((1 + m_) / 4) : bigint(static_cast<unsigned long>(m_));
    for (u64 it = 0; it <= E + 1; ++it) {
        bigint g = half_ ? bigint(w * w - w + cst) : bigint(w * w + cst);
        bigint dg = half_ ? bigint(2 * w - 1) : bigint(2 * w);
        bigint inv;
        mpz_invert(inv.get_mpz_t(), dg.get_mpz_t(), mod.get_mpz_t());
        w = w - g * inv;
        mpz_fdiv_r(w.get_mpz_t(), w.get_mpz_t(), mod.get_mpz_t());
    }
    Rational scale(ipow(pb, E));
    bigint z = rat_mod(x * scale, mod) + rat_mod(y * scale, mod) * w;
    mpz_fdiv_r(z.get_mpz_t(), z.get_mpz_t(), mod.get_mpz_t());
    bigint pE = ipow(pb, E);
    if (z % pE != 0)
        throw std::logic_error("residue: lifting precision");
    return mod_of(bigint(z / pE), p);
}

void QuadField::mul_coords(bigint const & x1, bigint const & y1, bigint const & x2, bigint const & y2, bigint & x, bigint & y) const
{
    bigint yy = y1 * y2;
    if (half_) {
        x = x1 * x2 - yy * ((1 + m_) / 4);
        y = x1 * y2 + x2 * y1 + yy;
    } else {
        x = x1 * x2 - yy * static_cast<unsigned long>(m_);
        y = x1 * y2 + x2 * y1;
    }
}

namespace {

Ideal hnf(std::vector<std::pair<bigint, bigint>> const & gens)
{
    bigint mx = 0, my = 0, A = 0;
    for (auto const & [x, y] : gens) {
        if (y == 0) {
            A = gcd(A, x);
            continue;
        }
        if (my == 0) {
            mx = x;
            my = y;
            continue;
        }
        bigint g, s, t;
        mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), my.get_mpz_t(), y.get_mpz_t());
        bigint rx = (y / g) * mx - (my / g) * x;
        A = gcd(A, rx);
        mx = s * mx + t * x;
        my = g;
    }
    if (my < 0) {
        mx = -mx;
        my = -my;
    }
    A = abs(A);
    if (A == 0 || my == 0)
        throw std::logic_error("hnf: not a full lattice");
    Ideal I;
    I.a = A;
    I.c = my;
    mpz_fdiv_r(I.b.get_mpz_t(), mx.get_mpz_t(), A.get_mpz_t());
    return I;
}

} // namespace

Ideal QuadField::ideal(PrimeIdeal const & P) const
{
    bigint p = static_cast<unsigned long>(P.p);
    if (P.kind == Splitting::inert)
        return Ideal{p, 0, p};
    bigint b = (p - static_cast<unsigned long>(P.root)) % p;
    return Ideal{p, b, 1};
}

Ideal QuadField::ideal(BinaryForm const & f) const
{
    bigint b = half_ ? bigint((-f.b - 1) / 2) : bigint(-f.b / 2);
    Ideal I{f.a, 0, 1};
    mpz_fdiv_r(I.b.get_mpz_t(), b.get_mpz_t(), f.a.get_mpz_t());
    return I;
}

Ideal QuadField::principal(QuadElt const & e) const
{
    auto [x, y] = coords(e);
    bigint X = to_int(x), Y = to_int(y), x2, y2;
    mul_coords(X, Y, 0, 1, x2, y2);
    return hnf({{X, Y}, {x2, y2}});
}

Ideal QuadField::multiply(Ideal const & I, Ideal const & J) const
{
    std::pair<bigint, bigint> u[2] = {{I.a, 0}, {I.b, I.c}}, v[2] = {{J.a, 0}, {J.b, J.c}};
    std::vector<std::pair<bigint, bigint>> gens;
    for (auto const & p : u)
        for (auto const & q : v) {
            bigint x, y;
            mul_coords(p.first, p.second, q.first, q.second, x, y);
            gens.push_back({x, y});
        }
    return hnf(gens);
}

Ideal QuadField::power(Ideal const & I, u64 e) const
{
    Ideal r, b = I;
    while (e) {
        if (e & 1)
            r = multiply(r, b);
        e >>= 1;
        if (e)
            b = multiply(b, b);
    }
    return r;
}

BinaryForm QuadField::form_of(Ideal const & I, QuadElt * alpha1, QuadElt * alpha2) const
{
    QuadElt a1 = from_coords(Rational(I.a), 0), a2 = from_coords(Rational(I.b), Rational(I.c));
    QuadElt s{a1.a + a2.a, a1.b + a2.b};
    Rational NI(norm(I));
    Rational A = norm(a1) / NI, C = norm(a2) / NI, B = (norm(s) - norm(a1) - norm(a2)) / NI;
    if (alpha1)
        *alpha1 = a1;
    if (alpha2)
        *alpha2 = a2;
    return BinaryForm{to_int(A), to_int(B), to_int(C)};
}

QuadField::ClassKey QuadField::class_of(Ideal const & I) const { return reduce_form(form_of(I, nullptr, nullptr)); }

QuadField::ClassKey QuadField::identity() const { return class_of(Ideal{}); }

std::optional<QuadElt> QuadField::generator(Ideal const & I) const
{
    QuadElt a1, a2;
    std::pair<bigint, bigint> col;
    BinaryForm r = reduce_form(form_of(I, &a1, &a2), &col);
    if (r.a != 1)
        return std::nullopt;
    QuadElt g{a1.a * col.first + a2.a * col.second, a1.b * col.first + a2.b * col.second};
    if (norm(g) != Rational(norm(I)))
        throw std::logic_error("generator: norm mismatch");
    return g;
}

QuadField::ClassKey QuadField::class_mul(ClassKey const & x, ClassKey const & y) const
{
    return class_of(multiply(reps_.at(x), reps_.at(y)));
}

QuadField::ClassKey QuadField::class_pow(ClassKey const & x, u64 e) const
{
    ClassKey r = identity(), b = x;
    while (e) {
        if (e & 1)
            r = class_mul(r, b);
        e >>= 1;
        if (e)
            b = class_mul(b, b);
    }
    return r;
}

ClassGroup const & QuadField::class_group() const
{
    if (group_)
        return *group_;
    auto g = std::make_unique<ClassGroup>();
    u64 h = keys_.size();
    g->order = h;
    /* invariant factors from the sizes of the p^k-torsion subgroups */
    std::vector<u64> cycles;
    for (auto const & f : factorize(h).factors) {
        u64 p = f.prime;
        std::vector<int> rank_ge; /* cycles of order >= p^k */
        u64 pk = 1;
        int prev = 0;
        for (int k = 1;; ++k) {
            pk *= p;
            u64 cnt = 0;
            for (auto const & x : keys_)
                if (class_pow(x, pk) == identity())
                    ++cnt;
            int s = 0;
            while (cnt > 1) {
                cnt /= p;
                ++s;
            }
            rank_ge.push_back(s - prev);
            prev = s;
            if (s == f.exponent)
                break;
        }
        /* rank_ge[k-1] = number of cycles of order >= p^k */
        std::vector<u64> pc;
        for (std::size_t k = 0; k < rank_ge.size(); ++k) {
            int exact = rank_ge[k] - (k + 1 < rank_ge.size() ? rank_ge[k + 1] : 0);
            u64 size = 1;
            for (std::size_t i = 0; i <= k; ++i)
                size *= p;
            for (int i = 0; i < exact; ++i)
                pc.push_back(size);
        }
        std::sort(pc.rbegin(), pc.rend());
        for (std::size_t i = 0; i < pc.size(); ++i) {
            if (cycles.size() <= i)
                cycles.push_back(1);
            cycles[i] *= pc[i];
        }
    }
    std::reverse(cycles.begin(), cycles.end());
    g->cycles = cycles;
    std::set<ClassKey> span = {identity()};
    for (auto const & x : keys_) {
        if (span.count(x))
            continue;
        g->generators.push_back(reps_.at(x));
        std::set<ClassKey> next = span;
        ClassKey pw = x;
        while (!span.count(pw)) {
            for (auto const & s : span)
                next.insert(class_mul(s, pw));
            pw = class_mul(pw, x);
        }
        span = std::move(next);
    }
    group_ = std::move(g);
    return *group_;
}

QuadField class_group(u64 m) { return QuadField(m); }

QuadElt QuadField::mul(QuadElt const & x, QuadElt const & y) const
{
    Rational m(static_cast<unsigned long>(m_));
    return {x.a * y.a - m * x.b * y.b, x.a * y.b + x.b * y.a};
}

namespace {

QuadElt mul(QuadField const & K, QuadElt const & x, QuadElt const & y) { return K.mul(x, y); }

QuadElt pow_elt(QuadField const & K, QuadElt const & x, u64 e)
{
    QuadElt r{1, 0}, b = x;
    while (e) {
        if (e & 1)
            r = mul(K, r, b);
        e >>= 1;
        if (e)
            b = mul(K, b, b);
    }
    return r;
}

QuadElt scale(QuadElt const & x, Rational const & c) { return {x.a * c, x.b * c}; }

int mod_ell(int v, u64 ell)
{
    long l = static_cast<long>(ell);
    return static_cast<int>(((v % l) + l) % l);
}

SelmerElement make_element(QuadField const & K, QuadElt const & e, std::vector<PrimeIdeal> const & S, u64 ell,
                           std::vector<int> coords)
{
    SelmerElement s;
    s.element = e;
    for (auto const & P : S)
        s.valuations.push_back(mod_ell(K.valuation(e, P), ell));
    s.coords = std::move(coords);
    return s;
}

/* ell-th power residue character at a split prime outside S, as an exponent mod ell */
u64 character(QuadField const & K, QuadElt const & e, PrimeIdeal const & Q, u64 ell, u64 zeta)
{
    int o = K.valuation(e, Q);
    QuadElt u = e;
    if (o != 0) {
        bigint qo = ipow(bigint(static_cast<unsigned long>(Q.p)), static_cast<u64>(std::abs(o)));
        u = scale(e, o > 0 ? Rational(1, 1) / Rational(qo) : Rational(qo));
    }
    u64 r = powmod(K.residue(u, Q), (Q.p - 1) / ell, Q.p);
    u64 z = 1;
    for (u64 j = 0; j < ell; ++j) {
        if (z == r)
            return j;
        z = mulmod(z, zeta, Q.p);
    }
    throw std::logic_error("character: not an ell-th root of unity");
}

std::vector<u64> signature(QuadField const & K, SelmerBasis const & sel, QuadElt const & e)
{
    std::vector<u64> sig;
    for (auto const & P : sel.S)
        sig.push_back(static_cast<u64>(mod_ell(K.valuation(e, P), sel.ell)));
    for (auto const & Q : sel.aux) {
        u64 zeta = powmod(primitive_root(Q.p), (Q.p - 1) / sel.ell, Q.p);
        sig.push_back(character(K, e, Q, sel.ell, zeta));
    }
    return sig;
}

} // namespace

SelmerBasis selmer_group(QuadField const & K, std::vector<PrimeIdeal> const & S, u64 ell)
{
    SelmerBasis sel;
    sel.ell = ell;
    sel.S = S;
    std::vector<QuadElt> gens;

    if (K.unit_order() % static_cast<int>(ell) == 0)
        gens.push_back(K.from_coords(0, 1)); /* omega, a primitive sixth root of unity for m = 3 */

    /* the subgroup H generated by the classes of S, with exponent vectors,
     * and a triangular basis of the relation lattice */
    using Key = QuadField::ClassKey;
    std::map<Key, std::vector<int>> H;
    H[K.identity()] = std::vector<int>(S.size(), 0);
    auto conj_product = [&](std::vector<int> const & w, Ideal J, Rational & div) {
        for (std::size_t j = 0; j < S.size(); ++j)
            if (w[j] > 0) {
                J = K.multiply(J, K.power(K.ideal(K.conj(S[j])), static_cast<u64>(w[j])));
                div *= Rational(ipow(K.norm(S[j]), static_cast<u64>(w[j])));
            }
        return J;
    };
    for (std::size_t i = 0; i < S.size(); ++i) {
        Key g = K.class_of(K.ideal(S[i]));
        Key cur = g;
        u64 o = 1;
        while (!H.count(cur)) {
            cur = K.class_mul(cur, g);
            ++o;
        }
        Rational div = 1;
        Ideal J = conj_product(H.at(cur), K.power(K.ideal(S[i]), o), div);
        auto gamma = K.generator(J);
        if (!gamma)
            throw std::logic_error("selmer_group: relation ideal is not principal");
        gens.push_back(scale(*gamma, Rational(1, 1) / div));

        std::map<Key, std::vector<int>> next;
        Key step = K.identity();
        for (u64 j = 0; j < o; ++j) {
            for (auto const & [k, vec] : H) {
                auto v = vec;
                v[i] = static_cast<int>(j);
                next.emplace(K.class_mul(k, step), std::move(v));
            }
            step = K.class_mul(step, g);
        }
        H = std::move(next);
    }

    /* ell-torsion of Cl / H */
    if ((K.class_number() / H.size()) % ell == 0) {
        std::set<Key> V;
        for (auto const & [k, v] : H)
            V.insert(k);
        for (auto const & c : K.classes()) {
            if (V.count(c))
                continue;
            Key p = K.class_pow(c, ell);
            if (!H.count(p))
                continue;
            Rational div = 1;
            Ideal J = conj_product(H.at(p), K.power(K.representative(c), ell), div);
            auto gamma = K.generator(J);
            if (!gamma)
                throw std::logic_error("selmer_group: class ideal power is not principal");
            gens.push_back(scale(*gamma, Rational(1, 1) / div));
            std::set<Key> next;
            Key step = K.identity();
            for (u64 j = 0; j < ell; ++j) {
                for (auto const & k : V)
                    next.insert(K.class_mul(k, step));
                step = K.class_mul(step, c);
            }
            V = std::move(next);
        }
    }

    for (std::size_t i = 0; i < gens.size(); ++i) {
        std::vector<int> c(gens.size(), 0);
        c[i] = 1;
        sel.basis.push_back(make_element(K, gens[i], S, ell, std::move(c)));
    }

    /* auxiliary characters until the basis is visibly independent */
    std::set<u64> bad;
    for (auto const & P : S)
        bad.insert(P.p);
    auto rank = [&]() {
        std::vector<std::vector<u64>> rows;
        std::vector<std::vector<u64>> sigs;
        for (auto const & b : sel.basis)
            sigs.push_back(signature(K, sel, b.element));
        std::size_t len = sel.S.size() + sel.aux.size();
        for (std::size_t r = 0; r < len; ++r) {
            std::vector<u64> row;
            for (auto const & s : sigs)
                row.push_back(s[r]);
            rows.push_back(row);
        }
        return rows.empty() ? std::size_t{0} : rank_mod(rows, sel.basis.size(), ell);
    };
    std::size_t have = sel.basis.empty() ? 0 : rank();
    int tries = 0;
    for (u64 q = 2 * ell + 1; have < sel.basis.size(); q += 2 * ell) {
        if (++tries > 20000)
            throw std::logic_error("selmer_group: basis elements are dependent");
        if (!is_prime(q) || bad.count(q))
            continue;
        auto ps = K.primes_above(q);
        if (ps[0].kind != Splitting::split)
            continue;
        bool units = true;
        for (auto const & b : sel.basis)
            for (auto const & Q : ps)
                units = units && K.valuation(b.element, Q) % static_cast<int>(ell) == 0;
        if (!units)
            continue;
        sel.aux.push_back(ps[0]);
        std::size_t r = rank();
        if (r == have)
            sel.aux.pop_back();
        have = r;
    }
    return sel;
}

std::optional<std::vector<int>> selmer_coords(QuadField const & K, SelmerBasis const & sel, QuadElt const & eps)
{
    /* outside S the valuations must vanish mod ell */
    Rational N = K.norm(eps);
    std::set<u64> inS;
    for (auto const & P : sel.S)
        inS.insert(P.p);
    for (bigint const & part : {bigint(N.get_num()), bigint(N.get_den())})
        for (auto const & f : factorize(abs(part)).factors)
            if (!inS.count(f.prime))
                for (auto const & P : K.primes_above(f.prime))
                    if (K.valuation(eps, P) % static_cast<int>(sel.ell) != 0)
                        return std::nullopt;
    std::vector<u64> target = signature(K, sel, eps);
    std::vector<std::vector<u64>> sigs;
    for (auto const & b : sel.basis)
        sigs.push_back(signature(K, sel, b.element));
    std::vector<std::vector<u64>> rows;
    for (std::size_t r = 0; r < target.size(); ++r) {
        std::vector<u64> row;
        for (auto const & s : sigs)
            row.push_back(s[r]);
        rows.push_back(row);
    }
    if (sel.basis.empty()) {
        for (u64 t : target)
            if (t != 0)
                return std::nullopt;
        return std::vector<int>{};
    }
    auto sol = solve_mod(rows, target, sel.basis.size(), sel.ell);
    if (!sol || !sol->kernel.empty())
        return std::nullopt;
    std::vector<int> out;
    for (u64 x : sol->particular)
        out.push_back(static_cast<int>(x));
    return out;
}

u64 descent_field(ReducedEq const & red)
{
    bigint Sp = 1;
    for (auto const & f : factorize(red.S).factors)
        if (f.exponent % 2)
            Sp *= static_cast<unsigned long>(f.prime);
    bigint m = 1;
    for (auto const & f : factorize(bigint(red.T * Sp)).factors)
        if (f.exponent % 2)
            m *= static_cast<unsigned long>(f.prime);
    if (!m.fits_ulong_p())
        throw std::domain_error("descent_field: m too large");
    return m.get_ui();
}

DescentDatum descent_datum(ReducedEq const & red, QuadField const & K)
{
    DescentDatum dd;
    dd.ell = red.ell;
    bigint Sp = 1;
    for (auto const & f : factorize(red.S).factors)
        if (f.exponent % 2)
            Sp *= static_cast<unsigned long>(f.prime);
    bigint v2 = red.S * Sp;
    mpz_sqrt(dd.v.get_mpz_t(), v2.get_mpz_t());
    if (dd.v * dd.v != v2)
        throw std::logic_error("descent_datum: S S' is not a square");
    dd.u = red.R * Sp;
    bigint m = 1;
    dd.n = 1;
    for (auto const & f : factorize(bigint(red.T * Sp)).factors) {
        if (f.exponent % 2)
            m *= static_cast<unsigned long>(f.prime);
        dd.n *= ipow(bigint(static_cast<unsigned long>(f.prime)), static_cast<u64>(f.exponent / 2));
    }
    if (m != static_cast<unsigned long>(K.m()))
        throw std::invalid_argument("descent_datum: wrong field");
    dd.m = K.m();
    std::set<u64> ps = {2};
    for (bigint const & x : {dd.u, dd.n, bigint(static_cast<unsigned long>(dd.m))})
        for (auto const & f : factorize(x).factors)
            ps.insert(f.prime);
    for (u64 p : ps)
        for (auto const & P : K.primes_above(p))
            dd.S.push_back(P);
    return dd;
}

QuadElt special_element(DescentDatum const & dd) { return {0, Rational(dd.n)}; }

std::vector<SelmerElement> epsilon_set(QuadField const & K, DescentDatum const & dd, SelmerBasis const & sel)
{
    u64 ell = sel.ell;
    std::size_t dim = sel.dimension();
    std::vector<u64> ps;
    for (auto const & P : sel.S)
        if (ps.empty() || ps.back() != P.p)
            ps.push_back(P.p);
    std::vector<std::vector<u64>> A;
    std::vector<u64> b;
    for (u64 p : ps) {
        std::vector<u64> row(dim, 0);
        for (std::size_t i = 0; i < dim; ++i) {
            long s = 0;
            for (std::size_t j = 0; j < sel.S.size(); ++j)
                if (sel.S[j].p == p)
                    s += static_cast<long>(K.residue_degree(sel.S[j])) * K.valuation(sel.basis[i].element, sel.S[j]);
            row[i] = static_cast<u64>(mod_ell(static_cast<int>(s % static_cast<long>(ell)), ell));
        }
        A.push_back(row);
        b.push_back(static_cast<u64>(mod_ell(cubesum::valuation(dd.u, p), ell)));
    }
    for (auto const & f : factorize(dd.u).factors)
        if (std::find(ps.begin(), ps.end(), f.prime) == ps.end())
            throw std::logic_error("epsilon_set: S misses a prime of u");

    std::vector<SelmerElement> out;
    if (dim == 0) {
        for (u64 x : b)
            if (x != 0)
                return out;
        out.push_back(make_element(K, QuadElt{1, 0}, sel.S, ell, {}));
        return out;
    }
    auto sol = solve_mod(A, b, dim, ell);
    if (!sol)
        return out;
    std::size_t kd = sol->kernel.size();
    std::vector<u64> digits(kd, 0);
    for (;;) {
        std::vector<int> e(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            u64 x = sol->particular[i];
            for (std::size_t k = 0; k < kd; ++k)
                x = (x + digits[k] * sol->kernel[k][i]) % ell;
            e[i] = static_cast<int>(x);
        }
        QuadElt eps{1, 0};
        for (std::size_t i = 0; i < dim; ++i)
            if (e[i])
                eps = mul(K, eps, pow_elt(K, sel.basis[i].element, static_cast<u64>(e[i])));
        out.push_back(make_element(K, eps, sel.S, ell, e));
        std::size_t k = 0;
        while (k < kd && ++digits[k] == ell)
            digits[k++] = 0;
        if (k == kd)
            break;
    }
    return out;
}

std::optional<ValuativeWitness> valuative_eliminate(QuadField const & K, SelmerElement const & eps, DescentDatum const & dd)
{
    u64 ell = dd.ell;
    QuadElt nsm = special_element(dd);
    auto distinct = [&](int x, int y, int z) {
        x = mod_ell(x, ell);
        y = mod_ell(y, ell);
        z = mod_ell(z, ell);
        return x != y && y != z && x != z;
    };
    for (std::size_t j = 0; j < dd.S.size(); ++j) {
        PrimeIdeal const & P = dd.S[j];
        int e = P.kind == Splitting::ramified ? 2 : 1;
        int ov = e * cubesum::valuation(dd.v, P.p);
        int o2 = e * cubesum::valuation(bigint(2), P.p);
        int on = K.valuation(nsm, P);
        int oe = K.valuation(eps.element, P);
        int oeb = K.valuation(eps.element, K.conj(P));
        if (distinct(ov, on, oe))
            return ValuativeWitness{P, 1};
        if (distinct(o2 + ov, oe, oeb))
            return ValuativeWitness{P, 2};
        if (distinct(o2 + on, oe, oeb))
            return ValuativeWitness{P, 3};
    }
    return std::nullopt;
}

std::optional<u64> cfield_sieve(QuadField const & K, SelmerElement const & eps, DescentDatum const & dd, u64 kmax)
{
    u64 ell = dd.ell;
    bigint bad = 2 * dd.u * dd.n * static_cast<unsigned long>(dd.m);
    std::vector<char> is_pow;
    for (u64 k = 1; k <= kmax; ++k) {
        u64 q = 2 * k * ell + 1;
        if (!is_prime(q) || mpz_divisible_ui_p(bad.get_mpz_t(), q))
            continue;
        auto Qs = K.primes_above(q);
        if (Qs[0].kind != Splitting::split)
            continue;
        u64 v = mod_of(dd.v, q), n = mod_of(dd.n, q);
        u64 ei[2], si[2];
        for (int j = 0; j < 2; ++j) {
            int o = K.valuation(eps.element, Qs[j]);
            QuadElt u = eps.element;
            if (o != 0) {
                bigint qo = ipow(bigint(static_cast<unsigned long>(q)), static_cast<u64>(std::abs(o)));
                u = scale(u, o > 0 ? Rational(1, 1) / Rational(qo) : Rational(qo));
            }
            ei[j] = invmod(K.residue(u, Qs[j]), q);
            u64 r = Qs[j].root;
            si[j] = K.half_omega() ? (2 * r + q - 1) % q : r; /* image of sqrt(-m) */
        }
        is_pow.assign(q, 0);
        for (u64 t = 1; t < q; ++t)
            is_pow[powmod(t, ell, q)] = 1;
        bool empty = true;
        for (u64 z = 0; z < q && empty; ++z) {
            if (z != 0 && !is_pow[z])
                continue;
            bool ok = true;
            for (int j = 0; j < 2 && ok; ++j) {
                u64 w = mulmod((mulmod(v, z, q) + mulmod(n, si[j], q)) % q, ei[j], q);
                ok = w == 0 || is_pow[w];
            }
            if (ok)
                empty = false;
        }
        if (empty)
            return q;
    }
    return std::nullopt;
}

std::vector<QuadElt> integral_roots(QuadField const & K, std::vector<bigint> const & poly)
{
    std::vector<bigint> P = poly;
    while (!P.empty() && P.back() == 0)
        P.pop_back();
    if (P.size() < 2)
        throw std::invalid_argument("integral_roots: need a nonconstant polynomial");
    std::vector<QuadElt> roots;
    if (P[0] == 0) {
        roots.push_back({0, 0});
        while (P[0] == 0)
            P.erase(P.begin());
        if (P.size() < 2)
            return roots;
    }
    auto eval = [&](bigint const & x) {
        bigint r = 0;
        for (std::size_t i = P.size(); i-- > 0;)
            r = r * x + P[i];
        return r;
    };
    /* remainder of P by the monic X^2 - t X + N is zero */
    auto divides = [&](bigint const & t, bigint const & N) {
        std::vector<bigint> r = P;
        for (std::size_t i = r.size() - 1; i >= 2; --i) {
            bigint c = r[i];
            r[i] = 0;
            r[i - 1] += c * t;
            r[i - 2] -= c * N;
        }
        return r[0] == 0 && r[1] == 0;
    };
    bigint c0 = abs(P[0]);
    std::vector<bigint> divs = {1};
    for (auto const & f : factorize(c0).factors) {
        std::size_t n = divs.size();
        bigint pp = 1;
        for (int e = 1; e <= f.exponent; ++e) {
            pp *= static_cast<unsigned long>(f.prime);
            for (std::size_t i = 0; i < n; ++i)
                divs.push_back(divs[i] * pp);
        }
    }
    std::sort(divs.begin(), divs.end());
    for (auto const & d : divs)
        for (bigint x : {d, bigint(-d)})
            if (eval(x) == 0)
                roots.push_back({Rational(x), 0});
    bigint absD = static_cast<unsigned long>(-K.discriminant());
    for (auto const & N : divs) {
        bigint lim;
        bigint fourN = 4 * N;
        mpz_sqrt(lim.get_mpz_t(), fourN.get_mpz_t());
        for (bigint t = -lim; t <= lim; ++t) {
            bigint gap = fourN - t * t;
            if (gap <= 0 || gap % absD != 0)
                continue;
            bigint f2 = gap / absD, f;
            mpz_sqrt(f.get_mpz_t(), f2.get_mpz_t());
            if (f * f != f2 || !divides(t, N))
                continue;
            /* (t +- f sqrt(D))/2 */
            Rational half_t(t, 2);
            Rational coef = K.discriminant() == -4 * static_cast<i64>(K.m()) ? Rational(f) : Rational(f, 2);
            half_t.canonicalize();
            coef.canonicalize();
            roots.push_back({half_t, coef});
            roots.push_back({half_t, -coef});
        }
    }
    return roots;
}

namespace {

std::vector<bigint> special_poly(u64 ell, long c)
{
    /* X^ell + (c - X)^ell - 2 */
    std::vector<bigint> P(ell + 1, 0);
    bigint binom = 1;
    for (u64 j = 0; j <= ell; ++j) {
        bigint term = binom * ipow(bigint(c), ell - j);
        if (j % 2)
            term = -term;
        P[j] += term;
        binom = binom * (ell - j) / (j + 1);
    }
    P[ell] += 1;
    P[0] -= 2;
    return P;
}

} // namespace

bool special_epsilon_check(QuadField const & K, DescentDatum const & dd)
{
    QuadElt nsm = special_element(dd);
    for (auto const & P : dd.S)
        if (K.valuation(nsm, P) >= static_cast<int>(dd.ell))
            return false;
    for (long c : {1L, -1L, -2L})
        if (!integral_roots(K, special_poly(dd.ell, c)).empty())
            return false;
    auto r = integral_roots(K, special_poly(dd.ell, 2));
    return r.size() == 1 && r[0] == QuadElt{1, 0};
}

std::string to_string(SelmerVerdict v)
{
    switch (v) {
    case SelmerVerdict::eliminated:
        return "ELIMINATED";
    case SelmerVerdict::sigma_zero:
        return "SIGMA_ZERO";
    case SelmerVerdict::survived:
        return "SURVIVED";
    }
    return "?";
}

SelmerOutcome selmer_eliminate(ReducedEq const & red, u64 kmax)
{
    SelmerOutcome out;
    out.m = descent_field(red);
    QuadField K(out.m);
    DescentDatum dd = descent_datum(red, K);
    SelmerBasis sel = selmer_group(K, dd.S, dd.ell);
    out.dimension = sel.dimension();
    auto special = selmer_coords(K, sel, special_element(dd));
    std::size_t left = 0;
    bool special_left = false;
    for (auto const & eps : epsilon_set(K, dd, sel)) {
        EpsilonFate f;
        f.coords = eps.coords;
        f.special = special && *special == eps.coords;
        f.valuative = valuative_eliminate(K, eps, dd);
        if (!f.valuative)
            f.cfield = cfield_sieve(K, eps, dd, kmax);
        if (!f.eliminated()) {
            ++left;
            special_left = special_left || f.special;
        }
        out.fates.push_back(std::move(f));
    }
    if (left == 0)
        out.verdict = SelmerVerdict::eliminated;
    else if (left == 1 && special_left && special_epsilon_check(K, dd))
        out.verdict = SelmerVerdict::sigma_zero;
    return out;
}

} // namespace cubesum
