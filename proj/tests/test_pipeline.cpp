#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cubesum/pipeline.hpp"

using namespace cubesum;

namespace {

std::string temp_path(std::string const & name) { return (std::filesystem::temp_directory_path() / ("cubesum_test_" + name)).string(); }

std::string slurp(std::string const & path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig small_config(std::string const & out)
{
    RunConfig cfg;
    cfg.d_min = 3;
    cfg.d_max = 5;
    cfg.ell_cap = 120;
    cfg.detail_below = 40;
    cfg.thue_height = 3000;
    cfg.oracle_x_max = 2000;
    cfg.output = out;
    return cfg;
}

/* the stream of an uninterrupted small run, computed once */
std::string const & reference_stream()
{
    static std::string s = [] {
        auto cfg = small_config(temp_path("reference"));
        run_pipeline(cfg);
        return slurp(cfg.output);
    }();
    return s;
}

Certificate oracle_record(int d, bigint x, bigint y, u64 ell)
{
    Certificate c;
    c.stage = Stage::oracle;
    c.verdict = Verdict::solved;
    c.d = d;
    c.ell = ell;
    c.put("x", x.get_str());
    c.put("y", y.get_str());
    return c;
}

} // namespace

TEST_CASE("certificate lines round trip")
{
    Certificate c;
    c.stage = Stage::sieve;
    c.verdict = Verdict::eliminated;
    c.d = 3;
    c.ell = 5;
    c.r = 8;
    c.s = 3;
    c.t = 24;
    c.put("q", "11");
    c.put("k", "1");
    auto line = format(c);
    CHECK(line == "v=1 stage=SIEVE verdict=ELIMINATED d=3 ell=5 r=8 s=3 t=24 q=11 k=1");
    CHECK(parse_certificate(line) == c);
    c.r = bigint("102208119975000000000000000000");
    CHECK(parse_certificate(format(c)) == c);

    CHECK_THROWS_AS(parse_certificate("v=2 stage=SIEVE verdict=ELIMINATED d=3 ell=5 r=8 s=3 t=24"), StaleVersion);
    CHECK_THROWS_AS(parse_certificate("v=1 stage=SIEVE verdict=ELIMINATED d=3 ell=5 r=8 s=3"), std::invalid_argument);
    CHECK_THROWS_AS(parse_certificate("v=1 stage=BOGUS verdict=ELIMINATED d=3 ell=5 r=8 s=3 t=24"), std::invalid_argument);
    CHECK_THROWS_AS(parse_certificate("v=1 verdict=ELIMINATED stage=SIEVE d=3 ell=5 r=8 s=3 t=24"), std::invalid_argument);
    CHECK_THROWS_AS(parse_certificate("v=1 stage=SIEVE verdict=ELIMINATED d=3 ell=x r=8 s=3 t=24"), std::invalid_argument);

    ReplayContext ctx("");
    Certificate stale = c;
    stale.version = 0;
    CHECK_THROWS_AS(replay(stale, ctx), StaleVersion);
}

TEST_CASE("config validation and hash")
{
    RunConfig cfg = small_config("x");
    CHECK_NOTHROW(cfg.validate());
    RunConfig other = cfg;
    other.jobs = 4;
    CHECK(other.hash() == cfg.hash());
    other.kmax = 999;
    CHECK(other.hash() != cfg.hash());
    RunConfig bad = cfg;
    bad.ell_cap = 3000001;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.kmax = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.d_min = 2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("small run: bookkeeping, routes and replay")
{
    auto const & stream = reference_stream();
    std::string path = temp_path("reference");
    auto certs = read_certificates(path);
    auto counts = summarize(certs);
    CHECK(counts.consistency_failures == 0);
    CHECK(counts.original[3] == descent_equations(3, 5, ExponentClass::eq3).size());
    CHECK(stream.find("# complete") != std::string::npos);

    bool d2 = false, ell2 = false;
    for (auto const & c : certs) {
        d2 |= c.stage == Stage::oracle && c.verdict == Verdict::cited && c.get("route") == "d2";
        ell2 |= c.stage == Stage::oracle && c.verdict == Verdict::cited && c.get("route") == "ell2";
    }
    CHECK(d2);
    CHECK(ell2);

    std::vector<SolutionRecord> want = {{3, 2, 6, 3}, {4, 10, 20, 3}};
    CHECK(counts.thue_solutions == want);

    ReplayContext ctx("");
    std::size_t passed = 0;
    for (auto const & c : certs) {
        bool ok = replay(c, ctx);
        if (!ok)
            MESSAGE("replay failed: " << format(c));
        passed += ok;
    }
    CHECK(passed == certs.size());

    auto batch = replay_all(certs, ctx);
    CHECK(std::count(batch.begin(), batch.end(), true) == static_cast<long>(certs.size()));
    auto bad = certs;
    for (auto & c : bad)
        for (auto & [k, v] : c.witness)
            if (k == "survivors")
                v = "999";
    auto rb = replay_all(bad, ctx);
    for (std::size_t i = 0; i < bad.size(); ++i)
        if (bad[i].get("survivors") && bad[i].stage == Stage::sieve)
            CHECK_FALSE(rb[i]);
}

TEST_CASE("levels without newform data are carried and replay")
{
    /* copy the fixtures without the level of d = 5 */
    auto dir = std::filesystem::temp_directory_path() / "cubesum_test_partial_data";
    std::filesystem::create_directories(dir);
    std::filesystem::copy_file(default_data_dir() + "/curves.tsv", dir / "curves.tsv", std::filesystem::copy_options::overwrite_existing);
    auto N = std::to_string(frey_setup(5).N);
    {
        std::ifstream in(default_data_dir() + "/newforms.tsv");
        std::ofstream out(dir / "newforms.tsv", std::ios::trunc);
        std::string line;
        while (std::getline(in, line))
            if (line != "#complete " + N && line.rfind(N + "\t", 0) != 0)
                out << line << '\n';
    }
    auto cfg = small_config(temp_path("partial"));
    cfg.data_dir = dir.string();
    auto res = run_pipeline(cfg);
    CHECK(res.exit_status == 0);
    CHECK(res.counts.incomplete_levels == std::vector<int>{5});
    auto certs = read_certificates(cfg.output);
    ReplayContext ctx(cfg.data_dir);
    auto ok = replay_all(certs, ctx);
    for (std::size_t i = 0; i < certs.size(); ++i)
        if (!ok[i])
            MESSAGE("replay failed: " << format(certs[i]));
    CHECK(std::count(ok.begin(), ok.end(), true) == static_cast<long>(certs.size()));
    for (auto const & c : certs)
        if (c.d == 5 && c.stage == Stage::frey)
            CHECK((c.verdict != Verdict::eliminated || c.get("ell_hi").has_value()));

    /* the same stream does not replay against the complete fixture */
    ReplayContext full("");
    auto against_full = replay_all(certs, full);
    CHECK(std::count(against_full.begin(), against_full.end(), false) > 0);
}

TEST_CASE("tampered witnesses fail replay")
{
    reference_stream();
    auto certs = read_certificates(temp_path("reference"));
    ReplayContext ctx("");
    int tampered = 0;
    for (auto c : certs) {
        if (c.stage == Stage::sieve && c.verdict == Verdict::eliminated && c.get("q")) {
            Certificate wrong_q = c;
            for (auto & [key, v] : wrong_q.witness)
                if (key == "q")
                    v = std::to_string(std::stoull(v) + 2);
            CHECK_FALSE(replay(wrong_q, ctx));
            ++tampered;
        }
        if (c.get("digest")) {
            for (auto & [key, v] : c.witness)
                if (key == "digest")
                    v[0] = v[0] == '0' ? '1' : '0';
            CHECK_FALSE(replay(c, ctx));
            ++tampered;
        }
        if (c.stage == Stage::thue && c.verdict == Verdict::solved) {
            for (auto & [key, v] : c.witness)
                if (key == "xy")
                    v = "none";
            CHECK_FALSE(replay(c, ctx));
            ++tampered;
        }
        if (c.stage == Stage::local && c.verdict == Verdict::eliminated) {
            for (auto & [key, v] : c.witness)
                if (key == "T")
                    v = "7";
            CHECK_FALSE(replay(c, ctx));
            ++tampered;
        }
    }
    CHECK(tampered > 20);
}

TEST_CASE("kill and resume reproduces the stream")
{
    auto const & ref = reference_stream();
    auto total = read_certificates(temp_path("reference")).size();
    for (std::size_t stop : {std::size_t{1}, std::size_t{2}, std::size_t{37}, total / 3, total / 2, total - 8}) {
        auto cfg = small_config(temp_path("resume"));
        std::size_t seen = 0;
        auto res = run_pipeline(cfg, [&](Certificate const &) { return ++seen < stop; });
        CHECK(res.interrupted);
        /* a half-written line */
        {
            std::ofstream out(cfg.output, std::ios::app);
            out << "v=1 stage=SIEVE verd";
        }
        cfg.resume = true;
        auto again = run_pipeline(cfg);
        CHECK_FALSE(again.interrupted);
        CHECK(slurp(cfg.output) == ref);
    }
    /* resuming a complete stream is a no-op */
    auto cfg = small_config(temp_path("reference"));
    cfg.resume = true;
    run_pipeline(cfg);
    CHECK(slurp(cfg.output) == ref);

    auto other = small_config(temp_path("reference"));
    other.kmax = 500;
    other.resume = true;
    CHECK_THROWS_AS(run_pipeline(other), std::runtime_error);
}

TEST_CASE("stage bookkeeping catches inconsistencies")
{
    auto certs = read_certificates((reference_stream(), temp_path("reference")));
    auto dup = certs;
    dup.push_back(certs.front());
    CHECK(summarize(dup).consistency_failures == 1);

    /* a LOCAL record for an equation the sieve eliminated */
    for (auto const & c : certs)
        if (c.stage == Stage::sieve && c.verdict == Verdict::eliminated && !c.get("ell_hi")) {
            Certificate l = c;
            l.stage = Stage::local;
            l.verdict = Verdict::survived;
            l.witness.clear();
            auto bad = certs;
            bad.push_back(l);
            CHECK(summarize(bad).consistency_failures == 1);
            break;
        }

    /* a Selmer survivor without a Thue record */
    auto no_thue = certs;
    std::erase_if(no_thue, [](Certificate const & c) { return c.stage == Stage::thue; });
    CHECK(summarize(no_thue).consistency_failures > 0);

    auto wrong = certs;
    for (auto & c : wrong)
        if (c.stage == Stage::thue && c.verdict == Verdict::solved)
            for (auto & [k, v] : c.witness)
                if (k == "xy")
                    v = "2,7";
    CHECK(summarize(wrong).consistency_failures > 0);
}

TEST_CASE("verify table")
{
    auto table = load_table1(std::string(CUBESUM_DATA_DIR) + "/table1.tsv");
    REQUIRE(table.size() == 58);
    std::vector<Certificate> certs;
    for (auto const & r : table) {
        certs.push_back(oracle_record(r.d, r.x, r.y, r.ell));
        if (r.both_signs)
            certs.push_back(oracle_record(r.d, r.x, -r.y, r.ell));
    }
    /* composite exponents and x <= 0 are outside the table */
    certs.push_back(oracle_record(3, 22, 0, 4));
    certs.push_back(oracle_record(3, 0, 6, 2));
    CHECK(verify_table(certs, table).empty());

    auto missing = certs;
    std::erase_if(missing, [](Certificate const & c) { return c.d == 20 && c.get("x") == "14"; });
    auto d1 = verify_table(missing, table);
    CHECK(d1.missing == std::vector<SolutionRecord>{{20, 14, 70, 3}});
    CHECK(d1.extra.empty());

    auto extra = certs;
    extra.push_back(oracle_record(6, 5, 9, 3));
    auto d2 = verify_table(extra, table);
    CHECK(d2.missing.empty());
    CHECK(d2.extra == std::vector<SolutionRecord>{{6, 5, 9, 3}});
    CHECK(format_diff(d2) == "extra d=6 x=5 y=9 ell=3\n");
}

TEST_CASE("table 2 fixture")
{
    auto rows = load_table2(std::string(CUBESUM_DATA_DIR) + "/table2.tsv");
    REQUIRE(rows.size() == 7);
    u64 a = 0, b = 0, c = 0;
    for (auto const & r : rows) {
        a += r.original;
        b += r.after_local;
        c += r.after_descent;
    }
    CHECK(a == 1219);
    CHECK(b == 507);
    CHECK(c == 226);
}
