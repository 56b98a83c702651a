#include <doctest.h>

#include <cmath>

#include "cubesum/logbound.hpp"

using namespace cubesum;

namespace {

DescentPair pair_of(int d, Rational a, Rational b)
{
    a.canonicalize();
    b.canonicalize();
    return {a, b, d, ExponentClass::ge5};
}

/* plain long double evaluation, no directed rounding */
long double ld(Rational const & q) { return static_cast<long double>(q.get_d()); }

long double oracle_rhs(DescentPair const & p, long double ell)
{
    Rational a1 = 4 * p.beta / (p.alpha * p.alpha);
    a1.canonicalize();
    bigint h = abs(a1.get_num()) > a1.get_den() ? bigint(abs(a1.get_num())) : bigint(a1.get_den());
    long double L = std::max(std::log(static_cast<long double>(h.get_d())), 1.0L);
    long double c0 = std::log(ld(Rational(p.d * p.d - 1) / (p.alpha * p.alpha))) / std::log(4.0L);
    long double v = std::log(ell / L + 1 / std::log(4.0L));
    return c0 + 26 * L * v * v;
}

/* bisection for the largest root of x = rhs(x) */
long double oracle_fixed_point(DescentPair const & p)
{
    long double lo = 1, hi = 1e12L;
    while (hi - lo > 1e-6L) {
        long double mid = (lo + hi) / 2;
        if (mid < oracle_rhs(p, mid))
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

} // namespace

TEST_CASE("multiplicative dependence bound")
{
    auto b = mult_dependence_bound(pair_of(50, Rational(1, 62475), Rational(2499)));
    REQUIRE(b.has_value());
    CHECK(b->lo < b->hi);
    CHECK(std::abs(b->hi - 19.09) < 0.01);

    CHECK_FALSE(mult_dependence_bound(pair_of(8, Rational(1), Rational(1, 4))).has_value());

    auto b3 = mult_dependence_bound(pair_of(3, Rational(1, 3), Rational(2)));
    REQUIRE(b3.has_value());
    long double direct = std::log(8.0L * 9 / std::log(72.0L)) / std::log(4.0L);
    CHECK(b3->contains(static_cast<double>(direct)));
    CHECK(std::abs(b3->hi - 2.04) < 0.01);
}

TEST_CASE("y2 ratio bound")
{
    auto r = y2_ratio_bound(pair_of(50, Rational(1, 62475), Rational(2499)));
    CHECK(std::abs(r.hi - 1.02257) < 0.0001);
    auto r3 = y2_ratio_bound(pair_of(3, Rational(1, 3), Rational(2)));
    CHECK(r3.lo > 1);
    CHECK(r3.hi <= 1.03);
    auto r8 = y2_ratio_bound(pair_of(8, Rational(1), Rational(1, 4)));
    CHECK(r8.lo >= 1);
    CHECK(r8.hi - 1 < 1e-15);
    CHECK_THROWS_AS(y2_ratio_bound(pair_of(3, Rational(1, 3), Rational(2)), 999), std::invalid_argument);
}

TEST_CASE("height datum")
{
    auto f = make_log_form(pair_of(3, Rational(1, 3), Rational(2)));
    CHECK(f.alpha1 == 72);
    CHECK(f.height == 72);
    CHECK(f.log_A1.contains(static_cast<double>(std::log(72.0L))));
    /* alpha1 = 1 gives H = 1 < e */
    auto g = make_log_form(pair_of(8, Rational(1), Rational(1, 4)));
    CHECK(g.log_A1.lo == 1.0);
}

TEST_CASE("Laurent bound agrees with bisection oracle")
{
    for (int d : {3, 8, 17, 27, 50})
        for (auto const & p : descent_pairs(d, ExponentClass::ge5)) {
            auto b = laurent_ell_bound(p);
            if (b.branch == BoundBranch::mult_dep) {
                CHECK(d == 8);
                CHECK(b.bound == 1001);
                continue;
            }
            long double fp = oracle_fixed_point(p);
            CHECK(std::abs(static_cast<long double>(b.fixed_point.hi) - fp) < 1e-3L * fp);
            CHECK(b.bound >= static_cast<u64>(std::floor(fp)));
            CHECK(b.bound <= static_cast<u64>(std::ceil(fp)) + 1);
            CHECK(laurent_rhs(p, static_cast<double>(b.bound)) <= static_cast<double>(b.bound));
            CHECK(laurent_rhs(p, static_cast<double>(b.bound - 2)) > static_cast<double>(b.bound - 2));
            CHECK(b.iterations <= 100);
        }
}

TEST_CASE("bounds are stable under precision and ordered")
{
    for (auto const & pb : all_pair_bounds(3, 50, 100)) {
        auto hi = laurent_ell_bound(pb.pair, 200);
        REQUIRE(hi.bound == pb.ell.bound);
        REQUIRE(pb.ell.bound < 3000000);
        REQUIRE(pb.ell.bound >= 5);
        if (pb.mult_dep)
            REQUIRE(static_cast<double>(pb.ell.bound) >= pb.mult_dep->hi);
        REQUIRE(pb.y2_ratio.hi <= 1.03);
    }
}
