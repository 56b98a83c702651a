#include "cubesum/sieve.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

namespace cubesum {

std::string to_string(SieveMode m) { return m == SieveMode::empty ? "EMPTY" : "ZERO_ONLY"; }

WordEq WordEq::from(TernaryEq const & eq)
{
    if (!eq.r.fits_ulong_p() || !eq.s.fits_ulong_p() || !eq.t.fits_ulong_p())
        throw std::domain_error("WordEq: coefficient exceeds 64 bits");
    return {eq.r.get_ui(), eq.s.get_ui(), eq.t.get_ui()};
}

namespace {

/* q < 2^32 keeps products inside 64 bits */
struct NarrowField {
    u64 q;
    u64 mul(u64 a, u64 b) const { return a * b % q; }
};

struct WideField {
    u64 q;
    u64 mul(u64 a, u64 b) const { return mulmod(a, b, q); }
};

template <class F>
u64 field_pow(F const & f, u64 base, u64 e)
{
    u64 result = 1;
    while (e != 0) {
        if (e & 1)
            result = f.mul(result, base);
        base = f.mul(base, base);
        e >>= 1;
    }
    return result;
}

/* ((s z + t)/r)^(2k) in {0, 1}, written as (s z + t)^(2k) in {0, r^(2k)} */
template <class F>
bool in_sieve_set(F const & f, u64 s, u64 t, u64 r2k, u64 k, u64 z)
{
    u64 w = (f.mul(s, z) + t) % f.q;
    if (w == 0)
        return true;
    return field_pow(f, w, 2 * k) == r2k;
}

template <class F>
bool matches(F const & f, WordEq const & eq, RootsOfUnity const & mu, SieveMode mode)
{
    u64 q = f.q, k = mu.k();
    u64 r = eq.r % q, s = eq.s % q, t = eq.t % q;
    u64 r2k = field_pow(f, r, 2 * k);
    bool zero_in = in_sieve_set(f, s, t, r2k, k, 0);
    if (mode == SieveMode::empty ? zero_in : !zero_in)
        return false;
    for (u64 z : mu.roots())
        if (in_sieve_set(f, s, t, r2k, k, z))
            return false;
    return true;
}

std::vector<u64> distinct_primes(u64 n)
{
    std::vector<u64> ps;
    for (u64 p = 2; p * p <= n; ++p)
        if (n % p == 0) {
            ps.push_back(p);
            while (n % p == 0)
                n /= p;
        }
    if (n > 1)
        ps.push_back(n);
    return ps;
}

void check_modulus(u64 ell, u64 q)
{
    if (ell < 2 || !is_prime(ell))
        throw std::invalid_argument("sieve: ell must be prime");
    if (!is_prime(q) || (q - 1) % (2 * ell) != 0)
        throw std::invalid_argument("sieve: q must be a prime congruent to 1 mod 2 ell");
}

} // namespace

RootsOfUnity::RootsOfUnity(u64 ell, u64 q) : ell_(ell), q_(q), k_((q - 1) / (2 * ell))
{
    check_modulus(ell, q);
    /* generator of the order-k subgroup */
    u64 h = 1;
    auto ps = distinct_primes(k_);
    for (u64 a = 2; k_ > 1; ++a) {
        h = powmod(a, (q - 1) / k_, q);
        bool full = std::all_of(ps.begin(), ps.end(), [&](u64 p) { return powmod(h, k_ / p, q) != 1; });
        if (full)
            break;
    }
    roots_.reserve(k_);
    u64 z = 1;
    for (u64 i = 0; i < k_; ++i) {
        roots_.push_back(z);
        z = mulmod(z, h, q);
    }
}

std::vector<u64> power_residues(u64 ell, u64 q)
{
    RootsOfUnity mu(ell, q);
    std::vector<u64> out{0};
    out.insert(out.end(), mu.roots().begin(), mu.roots().end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<u64> sieve_set(TernaryEq const & eq, u64 ell, u64 q)
{
    check_modulus(ell, q);
    WordEq w = WordEq::from(eq);
    if (w.r % q == 0)
        throw std::invalid_argument("sieve_set: q divides r");
    RootsOfUnity mu(ell, q);
    WideField f{q};
    u64 k = mu.k();
    u64 r = w.r % q, s = w.s % q, t = w.t % q;
    u64 r2k = field_pow(f, r, 2 * k);
    std::vector<u64> out;
    if (in_sieve_set(f, s, t, r2k, k, 0))
        out.push_back(0);
    for (u64 z : mu.roots())
        if (in_sieve_set(f, s, t, r2k, k, z))
            out.push_back(z);
    std::sort(out.begin(), out.end());
    return out;
}

bool sieve_matches(WordEq const & eq, RootsOfUnity const & mu, SieveMode mode)
{
    if (mu.q() < (u64(1) << 32))
        return matches(NarrowField{mu.q()}, eq, mu, mode);
    return matches(WideField{mu.q()}, eq, mu, mode);
}

std::optional<SieveWitness> find_elimination_prime(TernaryEq const & eq, u64 ell, u64 kmax,
                                                   SieveMode mode)
{
    if (mode == SieveMode::empty && eq.r == eq.t)
        return std::nullopt; /* zeta = 0 always lies in B */
    WordEq w = WordEq::from(eq);
    for (u64 k = 1; k <= kmax; ++k) {
        u64 q = 2 * k * ell + 1;
        if (!is_prime(q) || w.r % q == 0)
            continue;
        RootsOfUnity mu(ell, q);
        if (sieve_matches(w, mu, mode))
            return SieveWitness{ell, q, k, mode};
    }
    return std::nullopt;
}

namespace {

void sieve_one_ell(std::span<WordEq const> words, std::span<char const> skip, u64 ell,
                   SweepConfig const & cfg, std::vector<SieveOutcome> & out)
{
    std::vector<std::size_t> pending;
    std::size_t first = out.size();
    for (std::size_t i = 0; i < words.size(); ++i) {
        out.push_back({i, ell, std::nullopt});
        if (!skip[i])
            pending.push_back(i);
    }
    for (u64 k = 1; k <= cfg.kmax && !pending.empty(); ++k) {
        u64 q = 2 * k * ell + 1;
        if (!is_prime(q))
            continue;
        RootsOfUnity mu(ell, q);
        std::size_t keep = 0;
        for (std::size_t i : pending) {
            WordEq const & w = words[i];
            if (w.r % q != 0 && sieve_matches(w, mu, cfg.mode))
                out[first + i].witness = SieveWitness{ell, q, k, cfg.mode};
            else
                pending[keep++] = i;
        }
        pending.resize(keep);
    }
}

} // namespace

SweepStats sweep(std::span<TernaryEq const> eqs, SweepConfig const & cfg,
                 std::function<void(SieveOutcome const &)> const & sink)
{
    if (cfg.ell_max > 3000001)
        throw std::invalid_argument("sweep: ell_max exceeds 3e6");
    std::vector<WordEq> words;
    std::vector<char> skip;
    for (auto const & e : eqs) {
        words.push_back(WordEq::from(e));
        skip.push_back(cfg.mode == SieveMode::empty && e.r == e.t);
    }

    std::vector<u64> ells;
    for (u64 p : primes_below(cfg.ell_max))
        if (p >= cfg.ell_min && p >= 5)
            ells.push_back(p);

    unsigned jobs = std::max(1u, cfg.jobs);
    SweepStats stats;
    std::size_t const batch = 64 * jobs;
    std::vector<std::vector<SieveOutcome>> parts(jobs);
    for (std::size_t start = 0; start < ells.size(); start += batch) {
        std::size_t stop = std::min(ells.size(), start + batch);
        auto work = [&](unsigned j) {
            parts[j].clear();
            for (std::size_t i = start + j; i < stop; i += jobs)
                sieve_one_ell(words, skip, ells[i], cfg, parts[j]);
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
        /* restore ascending-ell order: ell index i lives in part (i - start) % jobs */
        std::vector<std::size_t> cursor(jobs, 0);
        for (std::size_t i = start; i < stop; ++i) {
            auto & part = parts[(i - start) % jobs];
            std::size_t & c = cursor[(i - start) % jobs];
            for (std::size_t e = 0; e < words.size(); ++e, ++c) {
                SieveOutcome const & o = part[c];
                if (o.witness)
                    ++stats.eliminated;
                else
                    ++stats.survived;
                sink(o);
            }
        }
        stats.primes_ell += stop - start;
    }
    return stats;
}

std::vector<SieveOutcome> sweep_collect(std::span<TernaryEq const> eqs, SweepConfig const & cfg)
{
    std::vector<SieveOutcome> out;
    sweep(eqs, cfg, [&](SieveOutcome const & o) { out.push_back(o); });
    return out;
}

} // namespace cubesum
