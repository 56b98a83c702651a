#include "cubesum/thue_oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace cubesum {

namespace {

bigint ipow(bigint const & b, u64 e)
{
    bigint r;
    mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), e);
    return r;
}

/* allowed[a] iff T + S a^ell = R rho^ell has a solution rho mod q */
std::vector<char> residue_table(ThueTask const & t, u64 q)
{
    u64 R = mod_of(t.R, q), S = mod_of(t.S, q), T = mod_of(t.T, q);
    std::vector<char> image(q, 0), allowed(q, 0);
    for (u64 r = 0; r < q; ++r)
        image[mulmod(R, powmod(r, t.ell, q), q)] = 1;
    for (u64 a = 0; a < q; ++a)
        allowed[a] = image[(T + mulmod(S, powmod(a, t.ell, q), q)) % q];
    return allowed;
}

i128 ipow128(i128 b, u64 e)
{
    i128 r = 1;
    while (e--)
        r *= b;
    return r;
}

/* exact ell-th root of v, |v| < 2^126 */
bool int_root(i128 v, u64 ell, i128 & root)
{
    if (v < 0 && ell % 2 == 0)
        return false;
    i128 a = v < 0 ? -v : v;
    if (a <= 1) {
        root = v;
        return true;
    }
    if (ell == 2) {
        static constexpr bool sq64[64] = {1, 1, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0,
                                          0, 1, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0};
        if (!sq64[static_cast<unsigned>(a & 63)])
            return false;
    }
    auto guess = static_cast<i128>(std::llround(std::pow(static_cast<long double>(a), 1.0L / static_cast<long double>(ell))));
    for (i128 r = std::max<i128>(guess - 1, 1); r <= guess + 1; ++r) {
        i128 p = ipow128(r, ell);
        if (p == a) {
            root = v < 0 ? -r : r;
            return true;
        }
        if (p > a)
            break;
    }
    return false;
}

bigint to_big(i128 v)
{
    bool neg = v < 0;
    u128 a = neg ? static_cast<u128>(-v) : static_cast<u128>(v);
    bigint hi = static_cast<unsigned long>(static_cast<u64>(a >> 64));
    bigint lo = static_cast<unsigned long>(static_cast<u64>(a));
    bigint r = hi * ipow(bigint(2), 64) + lo;
    return neg ? bigint(-r) : r;
}

} // namespace

ThueTask thue_task(ReducedEq const & red, u64 height_bound)
{
    if (height_bound < 1)
        throw std::invalid_argument("thue_task: height bound must be >= 1");
    ThueTask t;
    t.R = red.R;
    t.S = red.S;
    t.T = red.T;
    t.ell = red.ell;
    t.height_bound = height_bound;
    t.source = red;
    return t;
}

std::vector<u64> thue_sieve_primes(u64 ell)
{
    /* q = 1 mod ell, where ell-th powers are a 1/ell fraction */
    std::vector<u64> qs;
    for (u64 q = 2 * ell + 1; qs.size() < 8; q += 2 * ell)
        if (is_prime(q))
            qs.push_back(q);
    return qs;
}

std::vector<ThueSolution> thue_bounded_solve(ThueTask const & task)
{
    if (task.height_bound < 1)
        throw std::invalid_argument("thue_bounded_solve: height bound must be >= 1");
    auto const H = static_cast<i64>(task.height_bound);
    auto qs = thue_sieve_primes(task.ell);

    /* wheel over the first three primes, table lookups for the rest */
    u64 M = qs[0] * qs[1] * qs[2];
    std::vector<std::vector<char>> tables;
    for (u64 q : qs)
        tables.push_back(residue_table(task, q));
    std::vector<i64> wheel;
    for (u64 a = 0; a < M; ++a)
        if (tables[0][a % qs[0]] && tables[1][a % qs[1]] && tables[2][a % qs[2]])
            wheel.push_back(static_cast<i64>(a));

    std::vector<ThueSolution> out;
    bigint Hb = static_cast<unsigned long>(task.height_bound);
    auto const Mi = static_cast<i64>(M);
    i64 base = -H - ((-H) % Mi + Mi) % Mi;
    for (; base <= H; base += Mi)
        for (i64 a : wheel) {
            i64 tau = base + a;
            if (tau < -H || tau > H)
                continue;
            bool pass = true;
            for (std::size_t i = 3; i < qs.size() && pass; ++i)
                pass = tables[i][mod_of(tau, qs[i])];
            if (!pass)
                continue;
            bigint tb = static_cast<long>(tau);
            bigint v = task.T + task.S * ipow(tb, task.ell);
            if (v % task.R != 0)
                continue;
            auto rho = perfect_power_root(bigint(v / task.R), static_cast<unsigned>(task.ell));
            if (rho && abs(*rho) <= Hb)
                out.push_back({*rho, tb});
        }
    return out;
}

bool SolutionRecord::operator<(SolutionRecord const & o) const
{
    if (d != o.d)
        return d < o.d;
    if (ell != o.ell)
        return ell < o.ell;
    if (x != o.x)
        return x < o.x;
    return y < o.y;
}

std::string to_string(SolutionRecord const & s)
{
    return "d=" + std::to_string(s.d) + " x=" + s.x.get_str() + " y=" + s.y.get_str() + " ell=" + std::to_string(s.ell);
}

bigint cube_sum(bigint const & x, int d)
{
    bigint lin = 2 * x + d + 1;
    bigint quad = x * x + (d + 1) * x + d * (d + 1) / 2;
    return d * lin * quad / 2;
}

std::vector<SolutionRecord> map_back(ThueTask const & task, ThueSolution const & sol)
{
    std::vector<SolutionRecord> out;
    if (sol.tau < 0)
        return out;
    bigint sigma;
    mpz_sqrt(sigma.get_mpz_t(), sol.tau.get_mpz_t());
    if (sigma * sigma != sol.tau)
        return out;
    auto const & src = task.source.source;
    int d = src.d;
    for (bigint sg : {sigma, bigint(-sigma)}) {
        auto [y1, y2] = lift_solution(task.source, sol.rho, sg);
        Rational twice = src.source.alpha * Rational(ipow(y1, task.ell)) - Rational(d + 1);
        twice.canonicalize();
        if (twice.get_den() != 1 || twice.get_num() % 2 != 0)
            continue;
        bigint x = twice.get_num() / 2;
        auto y = perfect_power_root(cube_sum(x, d), static_cast<unsigned>(task.ell));
        if (!y)
            continue;
        SolutionRecord r{d, x, *y, task.ell};
        if (std::find(out.begin(), out.end(), r) == out.end())
            out.push_back(r);
        if (sigma == 0)
            break;
    }
    return out;
}

std::vector<SolutionRecord> oracle_search(int d_min, int d_max, i64 x_min, i64 x_max, std::vector<u64> const & ells, unsigned jobs)
{
    if (x_max < x_min)
        throw std::invalid_argument("oracle_search: empty x range");
    if (std::max(std::abs(x_min), std::abs(x_max)) > 100000000)
        throw std::invalid_argument("oracle_search: |x| above 1e8");
    for (u64 e : ells)
        if (e < 2)
            throw std::invalid_argument("oracle_search: ell must be >= 2");
    std::vector<SolutionRecord> out;
    std::mutex lock;
    std::atomic<int> next = d_min;
    auto worker = [&] {
        for (int d = next++; d <= d_max; d = next++) {
            std::vector<SolutionRecord> local;
            i128 s = 0;
            for (int i = 1; i <= d; ++i)
                s += ipow128(x_min + i, 3);
            for (i64 x = x_min;; ++x) {
                for (u64 e : ells) {
                    i128 root;
                    if (!int_root(s, e, root))
                        continue;
                    local.push_back({d, bigint(static_cast<long>(x)), to_big(root), e});
                    if (e % 2 == 0 && root != 0)
                        local.push_back({d, bigint(static_cast<long>(x)), to_big(-root), e});
                }
                if (x == x_max)
                    break;
                s += ipow128(x + d + 1, 3) - ipow128(x + 1, 3);
            }
            std::lock_guard g(lock);
            out.insert(out.end(), local.begin(), local.end());
        }
    };
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < std::max(jobs, 1u); ++j)
        pool.emplace_back(worker);
    worker();
    for (auto & t : pool)
        t.join();
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace cubesum
