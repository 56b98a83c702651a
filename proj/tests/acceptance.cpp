/* Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
 * Runs the full pipeline unless --stream names an existing complete stream. */
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>
#include <set>
#include <thread>

#include "cubesum/pipeline.hpp"

using namespace cubesum;

namespace {

/* tolerances */
constexpr double mult_dep_target = 19.09, mult_dep_tol = 0.01;
constexpr double y2_ratio_target = 1.02257, y2_ratio_tol = 0.0001;
constexpr double b_prime_target = 31.95, b_prime_tol = 0.01;
constexpr double laurent_target = 2648167, laurent_rel_tol = 0.01;
constexpr u64 laurent_cap = 3000000;
constexpr u64 desk_ell = 100000;
constexpr double desk_seconds = 600;

int failures = 0;

void report(bool ok, std::string const & id, std::string const & what)
{
    failures += !ok;
    std::cout << (ok ? "PASS " : "FAIL ") << id << " " << what << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixed(double v, int prec)
{
    std::ostringstream o;
    o.precision(prec);
    o << std::fixed << v;
    return o.str();
}

u64 get(std::map<u64, u64> const & m, u64 k)
{
    auto it = m.find(k);
    return it == m.end() ? 0 : it->second;
}

std::string split_of(std::map<u64, u64> const & m, std::vector<Table2Row> const & t2, u64 Table2Row::*col, bool & same)
{
    std::string s;
    u64 total = 0, want = 0;
    same = true;
    for (auto const & r : t2) {
        u64 v = get(m, r.ell);
        total += v;
        want += r.*col;
        same = same && v == r.*col;
        s += (s.empty() ? "" : "/") + std::to_string(v);
    }
    std::string w;
    for (auto const & r : t2)
        w += (w.empty() ? "" : "/") + std::to_string(r.*col);
    same = same && total == want;
    return std::to_string(total) + " (" + s + "), expected " + std::to_string(want) + " (" + w + ")";
}

using Key = std::tuple<int, std::string, std::string, std::string, u64>;

Key key_of(TernaryEq const & e, u64 ell) { return {e.d, e.r.get_str(), e.s.get_str(), e.t.get_str(), ell}; }
Key key_of(Certificate const & c) { return {c.d, c.r.get_str(), c.s.get_str(), c.t.get_str(), c.ell}; }

/* h(D) by counting reduced forms (a, b, c): |b| <= a <= c, b >= 0 when |b| = a or a = c */
u64 reduced_forms_oracle(i64 D)
{
    u64 h = 0;
    i64 n = -D;
    for (i64 a = 1; 3 * a * a <= n; ++a)
        for (i64 b = -a + 1; b <= a; ++b) {
            i64 num = b * b - D;
            if (num % (4 * a))
                continue;
            i64 c = num / (4 * a);
            if (c < a || (c == a && b < 0))
                continue;
            ++h;
        }
    return h;
}

bool squarefree(u64 m)
{
    for (u64 p = 2; p * p <= m; ++p)
        if (m % (p * p) == 0)
            return false;
    return true;
}

bigint brute_cube_sum(bigint const & x, int d)
{
    bigint s = 0;
    for (int i = 1; i <= d; ++i) {
        bigint v = x + i;
        s += v * v * v;
    }
    return s;
}

bool solvable_mod_q(TernaryEq const & eq, u64 ell, u64 q)
{
    std::set<u64> ys, xs;
    for (u64 v = 0; v < q; ++v) {
        ys.insert(powmod(v, ell, q));
        xs.insert(powmod(v, 2 * ell, q));
    }
    u64 r = mod_of(eq.r, q), s = mod_of(eq.s, q), t = mod_of(eq.t, q);
    for (u64 y : ys)
        for (u64 x : xs)
            if ((mulmod(r, y, q) + q - mulmod(s, x, q)) % q == t)
                return true;
    return false;
}

void criterion_table1(std::vector<Certificate> const & certs, std::string const & data_dir, unsigned jobs)
{
    auto table = load_table1(data_dir + "/table1.tsv");
    auto t0 = std::chrono::steady_clock::now();
    std::vector<Certificate> direct;
    for (auto const & h : oracle_search(2, 50, 1, 150000, {2, 3, 5, 7, 11, 13}, jobs)) {
        Certificate c;
        c.stage = Stage::oracle;
        c.verdict = Verdict::solved;
        c.d = h.d;
        c.ell = h.ell;
        c.put("x", h.x.get_str());
        c.put("y", h.y.get_str());
        direct.push_back(c);
    }
    double secs = seconds_since(t0);
    auto diff = verify_table(direct, table);
    report(diff.empty(), "1", "Table 1 reproduction, oracle 2<=d<=50, 1<=x<=150000: " + std::to_string(direct.size()) + " signed records vs " +
                                  std::to_string(table.size()) + " rows, " + std::to_string(diff.missing.size()) + " missing, " +
                                  std::to_string(diff.extra.size()) + " extra (" + fixed(secs, 1) + " s)");
    if (!diff.empty())
        std::cout << format_diff(diff);
    auto stream_diff = verify_table(certs, table);
    report(stream_diff.empty(), "1b", "Table 1 diff of the pipeline stream's ORACLE records: " + std::string(stream_diff.empty() ? "empty" : "nonempty"));
}

void criterion_descent(std::vector<Certificate> const & certs, StageCounts const & counts, std::vector<Table2Row> const & t2, std::string const & data_dir,
                       unsigned jobs)
{
    u64 eq3 = get(counts.original, 3);
    report(eq3 == 942, "2a", "cubic descent quintuples: " + std::to_string(eq3) + ", expected 942");

    std::set<Key> sieve_surv, frey_surv;
    std::map<u64, u64> frey_by_ell;
    for (auto const & c : certs) {
        if (c.get("ell_hi") || c.verdict != Verdict::survived)
            continue;
        if (c.stage == Stage::sieve)
            sieve_surv.insert(key_of(c));
        if (c.stage == Stage::frey) {
            frey_surv.insert(key_of(c));
            ++frey_by_ell[c.ell];
        }
    }
    report(sieve_surv.size() == 224, "2b", "r!=t sieve failures over 5<=ell<3e6, kmax 1000: " + std::to_string(sieve_surv.size()) + ", expected 224");

    std::string inc;
    for (int d : counts.incomplete_levels)
        inc += " " + std::to_string(d);
    std::string split;
    for (auto const & [ell, n] : frey_by_ell)
        split += (split.empty() ? "" : " ") + std::to_string(ell) + ":" + std::to_string(n);
    if (counts.incomplete_levels.empty())
        report(frey_surv.size() == 53, "2c", "r=t frey failures with complete fixtures: " + std::to_string(frey_surv.size()) + " (" + split + "), expected 53");
    else
        report(false, "2c", "r=t frey failures: " + std::to_string(frey_surv.size()) + " (" + split + ") on covered levels; expected 53 needs complete fixtures, missing newform data for d =" + inc);

    bool same = false;
    auto s = split_of(counts.original, t2, &Table2Row::original, same);
    report(same, "2d", "per-ell equation totals: " + s);

    /* desk scale: ell < 1e5 recomputed from scratch, compared with the restriction of the stream */
    auto t0 = std::chrono::steady_clock::now();
    auto eqs = descent_equations(3, 50, ExponentClass::ge5);
    std::vector<TernaryEq> rnt;
    for (auto const & e : eqs)
        if (!e.is_trivial_branch())
            rnt.push_back(e);
    SweepConfig sc;
    sc.ell_max = desk_ell;
    sc.jobs = jobs;
    std::set<Key> desk_sieve;
    sweep(rnt, sc, [&](SieveOutcome const & o) {
        if (!o.witness)
            desk_sieve.insert(key_of(rnt[o.eq_index], o.ell));
    });
    std::set<Key> desk_frey;
    auto curves = load_curves(data_dir + "/curves.tsv");
    auto forms = load_newforms(data_dir + "/newforms.tsv");
    std::vector<int> covered;
    for (auto const & e : eqs) {
        if (!e.is_trivial_branch())
            continue;
        auto lv = prepare_level(e.d, curves, forms);
        if (!lv.complete)
            continue;
        covered.push_back(e.d);
        FreySweepConfig fc;
        fc.ell_max = desk_ell;
        fc.jobs = jobs;
        frey_sweep(lv, fc, [&](FreyOutcome const & o) {
            if (o.verdict != FreyVerdict::eliminated)
                desk_frey.insert(key_of(lv.equation, o.ell));
        });
    }
    double secs = seconds_since(t0);
    std::set<Key> full_sieve, full_frey;
    for (auto const & k : sieve_surv)
        if (std::get<4>(k) < desk_ell)
            full_sieve.insert(k);
    std::set<int> cov(covered.begin(), covered.end());
    for (auto const & k : frey_surv)
        if (std::get<4>(k) < desk_ell && cov.count(std::get<0>(k)))
            full_frey.insert(k);
    report(desk_sieve == full_sieve && desk_frey == full_frey && secs < desk_seconds,
           "2e", "desk-scale ell<1e5 sub-sweep vs full-sweep restriction: r!=t " + std::to_string(desk_sieve.size()) + "/" + std::to_string(full_sieve.size()) +
                     ", r=t " + std::to_string(desk_frey.size()) + "/" + std::to_string(full_frey.size()) + " on " + std::to_string(covered.size()) +
                     " d with newform data, " + fixed(secs, 1) + " s (limit " + fixed(desk_seconds, 0) + " s)");
    report(desk_frey == full_frey, "2f", "per-level r=t agreement (ell<1e5) on the " + std::to_string(covered.size()) + " d whose level the newform fixture covers");
}

void criterion_constants()
{
    auto bounds = all_pair_bounds(3, 50);
    PairBound const * md = nullptr;
    double y2 = 0, bmin = 1e300;
    u64 laurent = 0;
    for (auto const & b : bounds) {
        if (b.mult_dep && (!md || b.mult_dep->hi > md->mult_dep->hi))
            md = &b;
        y2 = std::max(y2, b.y2_ratio.hi);
        bmin = std::min(bmin, b.b_prime.lo);
        laurent = std::max(laurent, b.ell.bound);
    }
    bool at = md && md->pair.d == 50 && md->pair.alpha == Rational(1, 62475) && md->pair.beta == 2499;
    report(md && std::abs(md->mult_dep->hi - mult_dep_target) <= mult_dep_tol && at, "3a",
           "max multiplicative dependence bound " + (md ? fixed(md->mult_dep->hi, 4) + " at d=" + std::to_string(md->pair.d) + " (" + md->pair.alpha.get_str() + ", " +
                                                             md->pair.beta.get_str() + ")"
                                                       : std::string("absent")) +
               ", expected 19.09 +- 0.01 at d=50 (1/62475, 2499)");
    report(std::abs(y2 - y2_ratio_target) <= y2_ratio_tol, "3b", "max y2 ratio bound " + fixed(y2, 6) + ", expected 1.02257 +- 0.0001");
    report(std::abs(bmin - b_prime_target) <= b_prime_tol, "3c", "min 1000/log A1 " + fixed(bmin, 4) + ", expected 31.95 +- 0.01");
    double rel = std::abs(static_cast<double>(laurent) - laurent_target) / laurent_target;
    report(rel <= laurent_rel_tol, "3d", "global Laurent bound " + std::to_string(laurent) + ", expected 2648167 within 1% (off by " + fixed(100 * rel, 2) + "%)");
    report(laurent < laurent_cap, "3e", "global Laurent bound " + std::to_string(laurent) + " < 3e6");
}

void criterion_funnel(StageCounts const & counts, std::vector<Table2Row> const & t2)
{
    bool same = false;
    auto s = split_of(counts.after_local, t2, &Table2Row::after_local, same);
    report(same, "4a", "after local solubility: " + s);
    s = split_of(counts.after_selmer, t2, &Table2Row::after_descent, same);
    report(same, "4b", "after Selmer descent: " + s);
}

void criterion_endgame(StageCounts const & counts)
{
    std::vector<SolutionRecord> want = {{3, 2, 6, 3}, {4, 10, 20, 3}, {20, 2, 40, 3}, {20, 14, 70, 3}, {25, 5, 60, 3}, {49, 290, 1155, 3}};
    std::string got;
    for (auto const & r : counts.thue_solutions)
        got += " " + to_string(r);
    report(counts.thue_solutions == want, "5",
           "Thue tasks at height " + std::to_string(default_thue_height) + ": " + std::to_string(counts.thue_tasks) + " tasks (226 expected upstream), x>=1 solutions:" + got);
}

void criterion_properties(std::vector<Certificate> const & certs, std::string const & data_dir, unsigned jobs)
{
    std::mt19937_64 rng(2024);

    /* sieve soundness: 1000 random elimination certificates, F_q enumeration */
    {
        std::vector<Certificate const *> elim;
        for (auto const & c : certs)
            if (c.stage == Stage::sieve && c.verdict == Verdict::eliminated && c.get("q") && std::stoull(c.at("q")) < 20000)
                elim.push_back(&c);
        std::vector<TernaryEq> eqs = descent_equations(3, 50, ExponentClass::ge5);
        std::map<Key, TernaryEq const *> by_key;
        for (auto const & e : eqs)
            by_key[key_of(e, 0)] = &e;
        std::shuffle(elim.begin(), elim.end(), rng);
        std::size_t n = std::min<std::size_t>(1000, elim.size()), sound = 0;
        for (std::size_t i = 0; i < n; ++i) {
            auto const & c = *elim[i];
            auto it = by_key.find({c.d, c.r.get_str(), c.s.get_str(), c.t.get_str(), 0});
            sound += it != by_key.end() && !solvable_mod_q(*it->second, c.ell, std::stoull(c.at("q")));
        }
        report(n == 1000 && sound == n, "6a", "sieve soundness by F_q enumeration: " + std::to_string(sound) + "/" + std::to_string(n) + " certificates (1000 required)");
    }

    /* descent claim: every solution with |x| <= 500 lands in a listed pair */
    {
        u64 checked = 0, ok = 0;
        for (int d = 3; d <= 50; ++d) {
            for (ExponentClass cls : {ExponentClass::eq3, ExponentClass::ge5}) {
                auto pairs = descent_pairs(d, cls);
                for (int xi = -500; xi <= 500; ++xi) {
                    bigint x = xi, s = brute_cube_sum(x, d);
                    if (s == 0)
                        continue;
                    for (unsigned ell : cls == ExponentClass::eq3 ? std::vector<unsigned>{3} : std::vector<unsigned>{5, 7, 11, 13}) {
                        auto y = perfect_power_root(s, ell);
                        if (!y)
                            continue;
                        ++checked;
                        /* 2x+d+1 = alpha y1^ell for some listed alpha with y1 rational */
                        bigint lin = linear_factor(x, d), quad = quadratic_factor(x, d);
                        bool found = false;
                        for (auto const & p : pairs) {
                            Rational a = Rational(lin) / p.alpha, b = Rational(quad) / p.beta;
                            a.canonicalize();
                            b.canonicalize();
                            auto ra = perfect_power_root(a.get_num(), ell), rad = perfect_power_root(a.get_den(), ell);
                            auto rb = perfect_power_root(b.get_num(), ell), rbd = perfect_power_root(b.get_den(), ell);
                            if (ra && rad && rb && rbd) {
                                found = true;
                                break;
                            }
                        }
                        ok += found;
                    }
                }
            }
        }
        report(checked > 0 && ok == checked, "6b", "descent claim on brute-force solutions |x|<=500: " + std::to_string(ok) + "/" + std::to_string(checked));
    }

    /* class numbers against the reduced-forms oracle */
    {
        u64 fields = 0, agree = 0;
        for (u64 m = 1; m <= 10000; ++m) {
            if (!squarefree(m))
                continue;
            i64 D = m % 4 == 3 ? -static_cast<i64>(m) : -4 * static_cast<i64>(m);
            if (-D > 10000)
                continue;
            ++fields;
            agree += class_group(m).class_number() == reduced_forms_oracle(D);
        }
        report(agree == fields, "6c", "class numbers vs reduced forms for |D|<=1e4: " + std::to_string(agree) + "/" + std::to_string(fields) + " fields");
    }

    /* Hasse on point counts of every stored curve at every good prime q < 200 */
    {
        auto curves = load_curves(data_dir + "/curves.tsv");
        u64 n = 0, ok = 0;
        for (auto const & c : curves.records)
            for (u64 q : primes_below(200)) {
                if (c.conductor % q == 0)
                    continue;
                i64 a = ap_point_count(c, q);
                ++n;
                ok += static_cast<u64>(a * a) <= 4 * q;
            }
        for (int i = 0; i < 2000; ++i) {
            auto const & c = curves.records[rng() % curves.records.size()];
            u64 q = next_prime(std::uniform_int_distribution<u64>(200, u64(1) << 32)(rng));
            if (c.conductor % q == 0)
                continue;
            i64 a = ap_point_count(c, q);
            ++n;
            ok += static_cast<i128>(a) * a <= static_cast<i128>(4 * q);
        }
        report(n > 0 && ok == n, "6d", "Hasse bound on point counts: " + std::to_string(ok) + "/" + std::to_string(n));
    }

    /* descent identity on random inputs */
    {
        std::uniform_int_distribution<long> xs(-1000000000L, 1000000000L);
        std::uniform_int_distribution<int> ds(2, 50);
        int ok = 0;
        for (int i = 0; i < 10000; ++i) {
            bigint x = xs(rng);
            int d = ds(rng);
            ok += descent_identity_lhs(x, d) == d * d - 1 && d * linear_factor(x, d) * quadratic_factor(x, d) == 2 * brute_cube_sum(x, d);
        }
        report(ok == 10000, "6e", "descent identity on random inputs: " + std::to_string(ok) + "/10000");
    }

    /* replay */
    {
        auto t0 = std::chrono::steady_clock::now();
        ReplayContext ctx(data_dir);
        auto res = replay_all(certs, ctx, jobs);
        u64 ok = 0;
        std::vector<std::string> bad;
        for (std::size_t i = 0; i < certs.size(); ++i) {
            if (res[i])
                ++ok;
            else if (bad.size() < 5)
                bad.push_back(format(certs[i]));
        }
        report(ok == certs.size(), "6f", "replay: " + std::to_string(ok) + "/" + std::to_string(certs.size()) + " certificates (" + fixed(seconds_since(t0), 1) + " s)");
        for (auto const & b : bad)
            std::cout << "  " << b << "\n";
    }
}

} // namespace

int main(int argc, char ** argv)
{
    CLI::App app{"acceptance criteria"};
    std::string stream = "acceptance.cert", data_dir = default_data_dir();
    bool reuse = false;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--stream", stream, "certificate stream to write, or read with --reuse");
    app.add_flag("--reuse", reuse, "read an existing complete stream instead of running the pipeline");
    app.add_option("--data-dir", data_dir);
    app.add_option("--jobs", jobs);
    CLI11_PARSE(app, argc, argv);

    try {
        if (!reuse) {
            RunConfig cfg;
            cfg.jobs = jobs;
            cfg.data_dir = data_dir;
            cfg.output = stream;
            auto t0 = std::chrono::steady_clock::now();
            auto res = run_pipeline(cfg);
            std::cout << "pipeline: " << res.counts.certificates << " certificates in " << fixed(seconds_since(t0), 1) << " s\n";
        }
        auto certs = read_certificates(stream);
        auto counts = summarize(certs);
        auto t2 = load_table2(data_dir + "/table2.tsv");
        report(counts.consistency_failures == 0, "0", "pipeline stream consistency: " + std::to_string(counts.consistency_failures) + " failures");
        for (auto const & f : counts.failures)
            std::cout << "  " << f << "\n";

        criterion_table1(certs, data_dir, jobs);
        criterion_descent(certs, counts, t2, data_dir, jobs);
        criterion_constants();
        criterion_funnel(counts, t2);
        criterion_endgame(counts);
        criterion_properties(certs, data_dir, jobs);
    } catch (std::exception const & e) {
        std::cout << "FAIL error " << e.what() << std::endl;
        return 1;
    }
    std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed")) << std::endl;
    return failures ? 1 : 0;
}
