#include "cubesum/logbound.hpp"

#include <numeric>
#include <stdexcept>

#include <mpfr.h>

namespace cubesum {

std::string to_string(BoundBranch b) { return b == BoundBranch::mult_dep ? "MULT_DEP" : "LAURENT"; }

namespace {

class Real {
public:
    explicit Real(unsigned bits) { mpfr_init2(v_, bits); }
    Real(Real const & o) : Real(static_cast<unsigned>(mpfr_get_prec(o.v_)))
    {
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    Real & operator=(Real const & o)
    {
        mpfr_set_prec(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
        return *this;
    }
    ~Real() { mpfr_clear(v_); }

    mpfr_ptr get() { return v_; }
    mpfr_srcptr get() const { return v_; }

    double down() const { return mpfr_get_d(v_, MPFR_RNDD); }
    double up() const { return mpfr_get_d(v_, MPFR_RNDU); }

private:
    mpfr_t v_;
};

/* Both roundings of a rational. */
struct Enclosure {
    Real lo, hi;
    explicit Enclosure(unsigned bits) : lo(bits), hi(bits) {}

    RealInterval to_interval() const { return {lo.down(), hi.up()}; }
};

Enclosure enclose(Rational const & q, unsigned bits)
{
    Enclosure e(bits);
    mpfr_set_q(e.lo.get(), q.get_mpq_t(), MPFR_RNDD);
    mpfr_set_q(e.hi.get(), q.get_mpq_t(), MPFR_RNDU);
    return e;
}

/* log of a positive rational */
Enclosure enclose_log(Rational const & q, unsigned bits)
{
    Enclosure e = enclose(q, bits);
    mpfr_log(e.lo.get(), e.lo.get(), MPFR_RNDD);
    mpfr_log(e.hi.get(), e.hi.get(), MPFR_RNDU);
    return e;
}

Enclosure enclose_log4(unsigned bits) { return enclose_log(Rational(4), bits); }

/* a / c for a real a and a positive enclosure c */
Enclosure divide(Enclosure const & a, Enclosure const & c, unsigned bits)
{
    Enclosure r(bits);
    mpfr_div(r.lo.get(), a.lo.get(), mpfr_sgn(a.lo.get()) >= 0 ? c.hi.get() : c.lo.get(), MPFR_RNDD);
    mpfr_div(r.hi.get(), a.hi.get(), mpfr_sgn(a.hi.get()) >= 0 ? c.lo.get() : c.hi.get(), MPFR_RNDU);
    return r;
}

Rational alpha1_of(DescentPair const & p)
{
    Rational a = 4 * p.beta / (p.alpha * p.alpha);
    a.canonicalize();
    return a;
}

Rational d2m1_over_alpha2(DescentPair const & p)
{
    Rational v = Rational(p.d * p.d - 1) / (p.alpha * p.alpha);
    v.canonicalize();
    return v;
}

/* |log alpha1| for alpha1 != 1 */
Enclosure abs_log_alpha1(Rational const & a1, unsigned bits)
{
    if (a1 >= 1)
        return enclose_log(a1, bits);
    Enclosure l = enclose_log(1 / a1, bits);
    return l;
}

/* log max(H, e) */
Enclosure enclose_log_A1(bigint const & height, unsigned bits)
{
    Enclosure e(bits);
    if (height >= 3) {
        Enclosure l = enclose_log(Rational(height), bits);
        return l;
    }
    /* H <= 2 < e */
    mpfr_set_ui(e.lo.get(), 1, MPFR_RNDD);
    mpfr_set_ui(e.hi.get(), 1, MPFR_RNDU);
    return e;
}

bigint height_of(Rational const & q)
{
    bigint n = abs(q.get_num());
    bigint d = q.get_den();
    return n > d ? n : d;
}

/* gcd of the exponents in the factorization of a nonzero rational != 1 */
int exponent_gcd(Rational const & q)
{
    int g = 0;
    for (auto const & pp : factorize(bigint(abs(q.get_num()))).factors)
        g = std::gcd(g, pp.exponent);
    for (auto const & pp : factorize(bigint(q.get_den())).factors)
        g = std::gcd(g, pp.exponent);
    return g;
}

struct RhsContext {
    unsigned bits;
    Enclosure c0;
    Enclosure log_A1;
    Enclosure inv_log4;

    explicit RhsContext(DescentPair const & pair, unsigned b)
        : bits(b), c0(b), log_A1(b), inv_log4(b)
    {
        c0 = divide(enclose_log(d2m1_over_alpha2(pair), bits), enclose_log4(bits), bits);
        log_A1 = enclose_log_A1(height_of(alpha1_of(pair)), bits);
        Enclosure one = enclose(Rational(1), bits);
        inv_log4 = divide(one, enclose_log4(bits), bits);
    }

    /* upper end of RHS at x >= 1 */
    void upper(Real & out, Real const & x) const
    {
        Real u(bits);
        mpfr_div(u.get(), x.get(), log_A1.lo.get(), MPFR_RNDU);
        mpfr_add(u.get(), u.get(), inv_log4.hi.get(), MPFR_RNDU);
        mpfr_log(u.get(), u.get(), MPFR_RNDU);
        mpfr_sqr(u.get(), u.get(), MPFR_RNDU);
        mpfr_mul(u.get(), u.get(), log_A1.hi.get(), MPFR_RNDU);
        mpfr_mul_ui(u.get(), u.get(), 26, MPFR_RNDU);
        mpfr_add(out.get(), u.get(), c0.hi.get(), MPFR_RNDU);
    }
};

} // namespace

LogLinearForm make_log_form(DescentPair const & pair, unsigned bits)
{
    LogLinearForm f;
    f.alpha1 = alpha1_of(pair);
    f.height = height_of(f.alpha1);
    f.log_A1 = enclose_log_A1(f.height, bits).to_interval();
    f.pair = pair;
    return f;
}

std::optional<RealInterval> mult_dependence_bound(DescentPair const & pair, unsigned bits)
{
    Rational a1 = alpha1_of(pair);
    if (a1 == 1)
        return std::nullopt;
    Rational num = d2m1_over_alpha2(pair) * exponent_gcd(a1);
    Enclosure val = divide(enclose(num, bits), abs_log_alpha1(a1, bits), bits);
    mpfr_log(val.lo.get(), val.lo.get(), MPFR_RNDD);
    mpfr_log(val.hi.get(), val.hi.get(), MPFR_RNDU);
    return divide(val, enclose_log4(bits), bits).to_interval();
}

RealInterval y2_ratio_bound(DescentPair const & pair, unsigned ell_floor, unsigned bits)
{
    if (ell_floor < 1000)
        throw std::invalid_argument("y2_ratio_bound: ell_floor must be >= 1000");
    Rational a1 = alpha1_of(pair);
    Enclosure acc(bits);
    if (a1 == 1) {
        mpfr_set_zero(acc.lo.get(), 1);
        mpfr_set_zero(acc.hi.get(), 1);
    } else {
        acc = abs_log_alpha1(a1, bits);
    }
    bigint p4;
    mpz_ui_pow_ui(p4.get_mpz_t(), 4, ell_floor);
    Enclosure tail = enclose(d2m1_over_alpha2(pair) / Rational(p4), bits);
    mpfr_add(acc.lo.get(), acc.lo.get(), tail.lo.get(), MPFR_RNDD);
    mpfr_add(acc.hi.get(), acc.hi.get(), tail.hi.get(), MPFR_RNDU);

    Enclosure den = enclose_log4(bits);
    mpfr_mul_ui(den.lo.get(), den.lo.get(), ell_floor, MPFR_RNDD);
    mpfr_mul_ui(den.hi.get(), den.hi.get(), ell_floor, MPFR_RNDU);
    Enclosure r = divide(acc, den, bits);
    mpfr_add_ui(r.lo.get(), r.lo.get(), 1, MPFR_RNDD);
    mpfr_add_ui(r.hi.get(), r.hi.get(), 1, MPFR_RNDU);
    return r.to_interval();
}

RealInterval b_prime_floor(DescentPair const & pair, unsigned ell_floor, unsigned bits)
{
    Enclosure num = enclose(Rational(ell_floor), bits);
    return divide(num, enclose_log_A1(height_of(alpha1_of(pair)), bits), bits).to_interval();
}

double laurent_rhs(DescentPair const & pair, double ell, unsigned bits)
{
    RhsContext ctx(pair, bits);
    Real x(bits), out(bits);
    mpfr_set_d(x.get(), ell, MPFR_RNDN);
    ctx.upper(out, x);
    return out.up();
}

EllBound laurent_ell_bound(DescentPair const & pair, unsigned bits)
{
    EllBound res;
    if (alpha1_of(pair) == 1) {
        res.bound = 1001;
        res.branch = BoundBranch::mult_dep;
        res.fixed_point = {1000, 1000};
        return res;
    }
    RhsContext ctx(pair, bits);
    Real x(bits), next(bits), diff(bits);
    mpfr_set_d(x.get(), 1e12, MPFR_RNDN);
    /* RHS is concave and grows like log^2, so iterating from far above
     * decreases monotonically onto the largest fixed point. */
    for (int it = 1;; ++it) {
        if (it > 100)
            throw std::runtime_error("laurent_ell_bound: fixed-point iteration did not converge");
        ctx.upper(next, x);
        mpfr_sub(diff.get(), x.get(), next.get(), MPFR_RNDN);
        mpfr_set(x.get(), next.get(), MPFR_RNDU);
        if (mpfr_cmp_d(diff.get(), 1e-9) < 0) {
            res.iterations = it;
            break;
        }
    }
    Real b(bits);
    mpfr_ceil(b.get(), x.get());
    res.bound = std::max<u64>(5, mpfr_get_ui(b.get(), MPFR_RNDU));
    res.fixed_point = {x.down(), x.up()};
    res.branch = BoundBranch::laurent;

    /* ell >= RHS(ell) must hold at B and beyond */
    for (u64 probe : {res.bound, 2 * res.bound}) {
        mpfr_set_ui(b.get(), probe, MPFR_RNDN);
        ctx.upper(next, b);
        if (mpfr_cmp(next.get(), b.get()) > 0)
            throw std::runtime_error("laurent_ell_bound: post-check failed");
    }
    return res;
}

std::vector<PairBound> all_pair_bounds(int d_min, int d_max, unsigned bits)
{
    std::vector<PairBound> out;
    for (int d = d_min; d <= d_max; ++d)
        for (auto const & p : descent_pairs(d, ExponentClass::ge5))
            out.push_back({p, mult_dependence_bound(p, bits), y2_ratio_bound(p, 1000, bits),
                           b_prime_floor(p, 1000, bits), laurent_ell_bound(p, bits)});
    return out;
}

} // namespace cubesum
