#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "cubesum/pipeline.hpp"

using namespace cubesum;

namespace {

ExponentClass parse_class(std::string const & s)
{
    if (s == "3")
        return ExponentClass::eq3;
    if (s == "ge5")
        return ExponentClass::ge5;
    throw CLI::ValidationError("--class", "expected 3 or ge5");
}

std::string table_path(std::string const & given, char const * name) { return given.empty() ? default_data_dir() + "/" + name : given; }

int cmd_descend(int d_min, int d_max, std::string const & cls)
{
    for (auto const & e : descent_equations(d_min, d_max, parse_class(cls)))
        std::cout << e.d << '\t' << e.r << '\t' << e.s << '\t' << e.t << '\t' << e.source.alpha << '\t' << e.source.beta << '\n';
    return 0;
}

int cmd_bound(int d_min, int d_max)
{
    u64 worst = 0;
    for (auto const & b : all_pair_bounds(d_min, d_max)) {
        std::cout << b.pair.d << '\t' << b.pair.alpha << '\t' << b.pair.beta << '\t' << b.ell.bound << '\t' << to_string(b.ell.branch) << '\n';
        worst = std::max(worst, b.ell.bound);
    }
    std::cout << "# max bound " << worst << '\n';
    return 0;
}

int cmd_sieve(int d_min, int d_max, u64 ell_min, u64 ell_max, u64 kmax, unsigned jobs)
{
    auto eqs = descent_equations(d_min, d_max, ExponentClass::ge5);
    std::erase_if(eqs, [](TernaryEq const & e) { return e.is_trivial_branch(); });
    SweepConfig cfg;
    cfg.ell_min = ell_min;
    cfg.ell_max = ell_max;
    cfg.kmax = kmax;
    cfg.jobs = jobs;
    std::map<u64, u64> surv;
    auto st = sweep(eqs, cfg, [&](SieveOutcome const & o) {
        if (o.witness)
            return;
        auto const & e = eqs[o.eq_index];
        std::cout << "SURVIVED d=" << e.d << " ell=" << o.ell << " r=" << e.r << " s=" << e.s << " t=" << e.t << '\n';
        ++surv[o.ell];
    });
    std::cout << "# " << eqs.size() << " equations, " << st.primes_ell << " exponents, " << st.eliminated << " eliminated, " << st.survived << " survived\n";
    for (auto [l, c] : surv)
        std::cout << "# ell " << l << ": " << c << '\n';
    return 0;
}

int cmd_frey(int d_min, int d_max, u64 ell_max, u64 kmax, unsigned jobs, std::string const & dir)
{
    auto curves = load_curves(dir + "/curves.tsv");
    auto forms = load_newforms(dir + "/newforms.tsv");
    for (int d = d_min; d <= d_max; ++d) {
        int v = __builtin_ctz(static_cast<unsigned>(d));
        if (v != 0 && v != 3)
            continue;
        auto lv = prepare_level(d, curves, forms);
        FreySweepConfig cfg;
        cfg.ell_max = ell_max;
        cfg.kmax = kmax;
        cfg.jobs = jobs;
        u64 elim = 0, incomplete = 0;
        frey_sweep(lv, cfg, [&](FreyOutcome const & o) {
            if (o.verdict == FreyVerdict::eliminated)
                ++elim;
            else if (o.verdict == FreyVerdict::incomplete_data)
                ++incomplete;
            else
                std::cout << "d=" << d << " ell=" << o.ell << ' ' << to_string(o.verdict) << ' ' << o.failing << '\n';
        });
        std::cout << "# d=" << d << " N=" << lv.setup.N << " complete=" << lv.complete << " eliminated=" << elim << " incomplete=" << incomplete << '\n';
    }
    return 0;
}

int cmd_reduce(int d_min, int d_max, u64 ell, bool selmer)
{
    auto cls = ell == 3 ? ExponentClass::eq3 : ExponentClass::ge5;
    std::map<std::string, u64> tally;
    for (auto const & e : descent_equations(d_min, d_max, cls)) {
        auto red = strip(e, ell);
        auto lr = locally_solvable(red);
        std::cout << "d=" << e.d << " r=" << e.r << " s=" << e.s << " t=" << e.t << " R=" << red.R << " S=" << red.S << " T=" << red.T;
        if (!lr.solvable) {
            std::cout << " LOCAL " << to_string(lr.obstruction->kind) << " mod " << lr.obstruction->modulus << '\n';
            ++tally["local"];
            continue;
        }
        if (!selmer) {
            std::cout << " SOLVABLE\n";
            ++tally["solvable"];
            continue;
        }
        auto out = selmer_eliminate(red);
        std::cout << " m=" << out.m << " dim=" << out.dimension << ' ' << to_string(out.verdict) << '\n';
        ++tally[to_string(out.verdict)];
    }
    for (auto const & [k, c] : tally)
        std::cout << "# " << k << ": " << c << '\n';
    return 0;
}

int cmd_thue(std::string const & in, u64 height)
{
    u64 tasks = 0;
    for (auto const & c : read_certificates(in)) {
        if (c.stage != Stage::selmer || c.verdict != Verdict::survived)
            continue;
        TernaryEq e;
        e.d = c.d;
        e.r = c.r;
        e.s = c.s;
        e.t = c.t;
        e.cls = c.ell == 3 ? ExponentClass::eq3 : ExponentClass::ge5;
        for (auto const & src : descent_equations(c.d, c.d, e.cls))
            if (src.r == e.r && src.s == e.s && src.t == e.t)
                e = src;
        auto task = thue_task(strip(e, c.ell), height);
        ++tasks;
        for (auto const & s : thue_bounded_solve(task)) {
            std::cout << "d=" << c.d << " ell=" << c.ell << " R=" << task.R << " S=" << task.S << " T=" << task.T << " rho=" << s.rho << " tau=" << s.tau;
            for (auto const & r : map_back(task, s))
                std::cout << " -> x=" << r.x << " y=" << r.y;
            std::cout << '\n';
        }
    }
    std::cout << "# " << tasks << " tasks, height " << height << " (BOUNDED)\n";
    return 0;
}

int cmd_oracle(int d_min, int d_max, i64 x_max, std::vector<u64> const & ells, unsigned jobs)
{
    for (auto const & s : oracle_search(d_min, d_max, 1, x_max, ells, jobs))
        std::cout << s.d << '\t' << s.x << '\t' << s.y << '\t' << s.ell << '\n';
    return 0;
}

int cmd_verify(std::string const & in, std::string const & table)
{
    auto diff = verify_table(read_certificates(in), load_table1(table));
    std::cout << (diff.empty() ? "table agrees\n" : format_diff(diff));
    return diff.empty() ? 0 : 1;
}

int cmd_replay(std::string const & in, std::string const & dir, std::string const & stage, unsigned jobs)
{
    ReplayContext ctx(dir);
    auto certs = read_certificates(in);
    if (!stage.empty())
        std::erase_if(certs, [&](Certificate const & c) { return to_string(c.stage) != stage; });
    auto ok = replay_all(certs, ctx, jobs);
    u64 bad = 0;
    for (std::size_t i = 0; i < certs.size(); ++i)
        if (!ok[i]) {
            ++bad;
            std::cout << "FAIL " << format(certs[i]) << '\n';
        }
    std::cout << "replayed " << certs.size() << ", passed " << certs.size() - bad << ", failed " << bad << '\n';
    return bad ? 1 : 0;
}

} // namespace

int main(int argc, char ** argv)
{
    CLI::App app{"Perfect powers that are sums of consecutive cubes"};
    app.require_subcommand(1);
    int d_min = 3, d_max = 50;
    unsigned jobs = 1;
    u64 kmax = 1000;
    std::string data_dir;

    auto add_d = [&](CLI::App * c) {
        c->add_option("--d-min", d_min)->check(CLI::Range(2, 50));
        c->add_option("--d-max", d_max)->check(CLI::Range(2, 50));
    };

    std::string cls = "ge5";
    auto * descend = app.add_subcommand("descend", "ternary equations from the descent");
    add_d(descend);
    descend->add_option("--class", cls, "3 or ge5");

    auto * bound = app.add_subcommand("bound", "exponent bounds per descent pair");
    add_d(bound);

    u64 ell_min = 5, ell_max = 3000000;
    auto * sieve = app.add_subcommand("sieve", "B(ell, q) sieve on the r != t equations");
    add_d(sieve);
    sieve->add_option("--ell-min", ell_min);
    sieve->add_option("--ell-max", ell_max, "exclusive");
    sieve->add_option("--kmax", kmax);
    sieve->add_option("--jobs", jobs);

    auto * frey = app.add_subcommand("frey", "Frey curve elimination of the r = t equations");
    add_d(frey);
    frey->add_option("--ell-max", ell_max, "exclusive");
    frey->add_option("--kmax", kmax);
    frey->add_option("--jobs", jobs);
    frey->add_option("--data-dir", data_dir);

    u64 ell = 3;
    auto * reduce = app.add_subcommand("reduce", "strip and local solubility");
    add_d(reduce);
    reduce->add_option("--ell", ell)->required();

    auto * selmer = app.add_subcommand("selmer", "local solubility then the quadratic field descent");
    add_d(selmer);
    selmer->add_option("--ell", ell)->required();

    std::string in;
    u64 height = default_thue_height;
    auto * thue = app.add_subcommand("thue", "bounded Thue search on the Selmer survivors of a certificate file");
    thue->add_option("--in", in)->required();
    thue->add_option("--height", height);

    i64 x_max = 150000;
    std::vector<u64> ells = {2, 3, 5, 7, 11, 13};
    auto * oracle = app.add_subcommand("oracle", "brute-force search for perfect powers");
    add_d(oracle);
    oracle->add_option("--x-max", x_max);
    oracle->add_option("--ell", ells)->delimiter(',');
    oracle->add_option("--jobs", jobs);

    RunConfig cfg;
    bool no_oracle = false;
    std::string table2;
    auto * pipeline = app.add_subcommand("pipeline", "full run with certificates");
    pipeline->add_option("--d-min", cfg.d_min)->check(CLI::Range(3, 50));
    pipeline->add_option("--d-max", cfg.d_max)->check(CLI::Range(3, 50));
    pipeline->add_option("--ell-cap", cfg.ell_cap, "exclusive, at most 3e6");
    pipeline->add_option("--kmax", cfg.kmax);
    pipeline->add_option("--height", cfg.thue_height);
    pipeline->add_option("--x-max", cfg.oracle_x_max);
    pipeline->add_flag("--no-oracle", no_oracle);
    pipeline->add_option("--jobs", cfg.jobs);
    pipeline->add_option("--data-dir", cfg.data_dir);
    pipeline->add_option("--out", cfg.output)->required();
    pipeline->add_flag("--resume", cfg.resume);
    pipeline->add_option("--table2", table2);

    std::string table;
    auto * verify = app.add_subcommand("verify-table", "compare oracle certificates with the solution table");
    verify->add_option("--in", in)->required();
    verify->add_option("--table", table);

    std::string stage;
    auto * rep = app.add_subcommand("replay", "re-execute certificate witnesses");
    rep->add_option("--in", in)->required();
    rep->add_option("--stage", stage);
    rep->add_option("--data-dir", data_dir);
    rep->add_option("--jobs", jobs);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*descend)
            return cmd_descend(d_min, d_max, cls);
        if (*bound)
            return cmd_bound(d_min, d_max);
        if (*sieve)
            return cmd_sieve(d_min, d_max, ell_min, ell_max, kmax, jobs);
        if (*frey)
            return cmd_frey(d_min, d_max, ell_max, kmax, jobs, data_dir.empty() ? default_data_dir() : data_dir);
        if (*reduce)
            return cmd_reduce(d_min, d_max, ell, false);
        if (*selmer)
            return cmd_reduce(d_min, d_max, ell, true);
        if (*thue)
            return cmd_thue(in, height);
        if (*oracle)
            return cmd_oracle(d_min == 3 ? 2 : d_min, d_max, x_max, ells, jobs);
        if (*pipeline) {
            cfg.run_oracle = !no_oracle;
            auto res = run_pipeline(cfg);
            std::cout << format_report(res.counts, load_table2(table_path(table2, "table2.tsv")));
            if (cfg.run_oracle) {
                auto diff = verify_table(read_certificates(cfg.output), load_table1(default_data_dir() + "/table1.tsv"));
                std::cout << (diff.empty() ? "Table 1: oracle agrees\n" : "Table 1 differences:\n" + format_diff(diff));
            }
            return res.exit_status;
        }
        if (*verify)
            return cmd_verify(in, table_path(table, "table1.tsv"));
        if (*rep)
            return cmd_replay(in, data_dir, stage, jobs);
    } catch (std::exception const & e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
