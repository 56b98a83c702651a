#include "cubesum/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace cubesum {

namespace {

template <class E, std::size_t N>
E parse_enum(std::string const & s, std::array<E, N> const & all, char const * what)
{
    for (E e : all)
        if (to_string(e) == s)
            return e;
    throw std::invalid_argument(std::string("unknown ") + what + ": " + s);
}

constexpr std::array all_stages = {Stage::descent, Stage::sieve, Stage::frey, Stage::local, Stage::selmer, Stage::thue, Stage::degenerate, Stage::oracle};
constexpr std::array all_verdicts = {Verdict::eliminated, Verdict::survived, Verdict::solved, Verdict::cited};

/* FNV-1a, 64 bit */
class Digest {
public:
    void add(std::string const & s)
    {
        for (unsigned char c : s) {
            h_ ^= c;
            h_ *= 1099511628211ULL;
        }
    }
    std::string hex() const
    {
        std::ostringstream o;
        o << std::hex << std::setw(16) << std::setfill('0') << h_;
        return o.str();
    }

private:
    u64 h_ = 14695981039346656037ULL;
};

std::string str(u64 v) { return std::to_string(v); }
std::string str(bigint const & v) { return v.get_str(); }

u64 to_u64(std::string const & s)
{
    std::size_t pos = 0;
    u64 v = std::stoull(s, &pos);
    if (pos != s.size())
        throw std::invalid_argument("not an integer: " + s);
    return v;
}

std::vector<std::string> split(std::string const & s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        out.push_back(cur);
    return out;
}

Certificate make(Stage st, Verdict v, TernaryEq const & eq, u64 ell)
{
    Certificate c;
    c.stage = st;
    c.verdict = v;
    c.d = eq.d;
    c.ell = ell;
    c.r = eq.r;
    c.s = eq.s;
    c.t = eq.t;
    return c;
}

/* the descent equation behind a certificate, with its pair */
std::optional<TernaryEq> find_equation(Certificate const & c)
{
    if (c.d < 3 || c.d > 50)
        return std::nullopt;
    auto cls = c.ell == 3 ? ExponentClass::eq3 : ExponentClass::ge5;
    for (auto const & e : descent_equations(c.d, c.d, cls))
        if (e.r == c.r && e.s == c.s && e.t == c.t)
            return e;
    return std::nullopt;
}

std::string sieve_digest_item(u64 ell, u64 k) { return str(ell) + ":" + str(k) + ";"; }

std::string frey_digest_item(FreyOutcome const & o)
{
    std::string s = str(o.ell) + ":";
    for (auto const & w : o.witnesses)
        s += w.label + "@" + str(w.q) + ",";
    return s + ";";
}

std::string frey_classes(FreyOutcome const & o)
{
    std::string s;
    for (auto const & w : o.witnesses)
        s += (s.empty() ? "" : ",") + w.label + ":" + str(w.q);
    return s;
}

std::string records(std::vector<SolutionRecord> const & rs)
{
    std::string s;
    for (auto const & r : rs)
        s += (s.empty() ? "" : ";") + r.x.get_str() + "," + r.y.get_str();
    return s.empty() ? "none" : s;
}

std::string thue_pairs(std::vector<ThueSolution> const & sols)
{
    std::string s;
    for (auto const & p : sols)
        s += (s.empty() ? "" : ";") + p.rho.get_str() + "," + p.tau.get_str();
    return s.empty() ? "none" : s;
}

std::string degenerate_list(std::vector<DegenerateSolution> const & sols)
{
    std::string s;
    for (auto const & v : sols)
        if (v.x_integral)
            s += (s.empty() ? "" : ";") + v.x.get_num().get_str() + "," + v.y1.get_str() + "," + v.y2.get_str();
    return s.empty() ? "none" : s;
}

u64 degenerate_ell(TernaryEq const & eq, u64 bound) { return std::max<u64>({bound, degenerate_stable_ell(eq), 5}); }

/* identity for the once-per-stage check */
std::string identity(Certificate const & c)
{
    std::string s = to_string(c.stage) + " " + std::to_string(c.d) + " " + str(c.ell) + " " + str(c.r) + " " + str(c.s) + " " + str(c.t);
    for (char const * k : {"ell_hi", "x", "y", "route", "reason"})
        if (auto v = c.get(k))
            s += " " + *v;
    return s;
}

std::string base_identity(Certificate const & c) { return std::to_string(c.d) + " " + str(c.ell) + " " + str(c.r) + " " + str(c.s) + " " + str(c.t); }

class Writer {
public:
    Writer(std::ofstream & out, CertificateHook const & hook) : out_(out), hook_(hook) {}

    /* false once the hook asked to stop */
    bool emit(Certificate const & c)
    {
        if (stopped_)
            return false;
        out_ << format(c) << '\n';
        ++count_;
        if (hook_ && !hook_(c)) {
            out_.flush();
            stopped_ = true;
        }
        return !stopped_;
    }
    bool stopped() const { return stopped_; }

private:
    std::ofstream & out_;
    CertificateHook const & hook_;
    bool stopped_ = false;
    u64 count_ = 0;
};

struct Data {
    std::string dir;
    std::unique_ptr<CurveTable> curves;
    std::unique_ptr<NewformTable> forms;

    void load()
    {
        if (curves)
            return;
        for (char const * f : {"/curves.tsv", "/newforms.tsv"})
            if (!std::filesystem::exists(dir + f))
                throw std::runtime_error("missing data file " + dir + f);
        curves = std::make_unique<CurveTable>(load_curves(dir + "/curves.tsv"));
        forms = std::make_unique<NewformTable>(load_newforms(dir + "/newforms.tsv"));
    }
};

/* LOCAL, SELMER and THUE for one equation at one exponent */
void chain(Writer & w, RunConfig const & cfg, TernaryEq const & eq, u64 ell)
{
    auto red = strip(eq, ell);
    auto lr = locally_solvable(red);
    Certificate loc = make(Stage::local, lr.solvable ? Verdict::survived : Verdict::eliminated, eq, ell);
    loc.put("R", str(red.R));
    loc.put("S", str(red.S));
    loc.put("T", str(red.T));
    if (lr.obstruction) {
        loc.put("kind", to_string(lr.obstruction->kind));
        loc.put("q", str(lr.obstruction->prime));
        loc.put("modulus", str(lr.obstruction->modulus));
    }
    if (!w.emit(loc) || !lr.solvable)
        return;

    auto so = selmer_eliminate(red, cfg.kmax);
    Certificate sel = make(Stage::selmer, so.verdict == SelmerVerdict::survived ? Verdict::survived : Verdict::eliminated, eq, ell);
    sel.put("result", to_string(so.verdict));
    sel.put("m", str(so.m));
    sel.put("dim", str(so.dimension));
    std::size_t left = 0, valuative = 0, cfield = 0;
    for (auto const & f : so.fates) {
        left += !f.eliminated();
        valuative += f.valuative.has_value();
        cfield += !f.valuative && f.cfield;
    }
    sel.put("epsilons", str(so.fates.size()));
    sel.put("valuative", str(valuative));
    sel.put("cfield", str(cfield));
    sel.put("left", str(left));
    if (!w.emit(sel) || so.verdict != SelmerVerdict::survived)
        return;

    auto task = thue_task(red, cfg.thue_height);
    auto sols = thue_bounded_solve(task);
    std::vector<SolutionRecord> mapped;
    for (auto const & s : sols)
        for (auto const & r : map_back(task, s))
            mapped.push_back(r);
    std::sort(mapped.begin(), mapped.end());
    Certificate th = make(Stage::thue, mapped.empty() ? Verdict::survived : Verdict::solved, eq, ell);
    th.put("height", str(cfg.thue_height));
    th.put("complete", "BOUNDED(" + str(cfg.thue_height) + ")");
    th.put("rho_tau", thue_pairs(sols));
    th.put("xy", records(mapped));
    w.emit(th);
}

void cubic_unit(Writer & w, RunConfig const & cfg, int d)
{
    for (auto const & eq : descent_equations(d, d, ExponentClass::eq3)) {
        Certificate c = make(Stage::descent, Verdict::survived, eq, 3);
        c.put("alpha", eq.source.alpha.get_str());
        c.put("beta", eq.source.beta.get_str());
        if (!w.emit(c))
            return;
        chain(w, cfg, eq, 3);
        if (w.stopped())
            return;
    }
}

void uniform_unit(Writer & w, RunConfig const & cfg, int d, Data & data)
{
    auto eqs = descent_equations(d, d, ExponentClass::ge5);
    std::vector<TernaryEq> sieve_eqs;
    std::optional<TernaryEq> trivial;
    for (auto const & eq : eqs) {
        Certificate c = make(Stage::descent, Verdict::survived, eq, 0);
        c.put("alpha", eq.source.alpha.get_str());
        c.put("beta", eq.source.beta.get_str());
        if (!w.emit(c))
            return;
        auto b = laurent_ell_bound(eq.source);
        u64 eval = degenerate_ell(eq, b.bound);
        auto sols = degenerate_solutions(eq, static_cast<unsigned>(eval));
        Verdict v = b.bound > cfg.ell_cap ? Verdict::survived : (degenerate_list(sols) == "none" ? Verdict::eliminated : Verdict::solved);
        Certificate g = make(Stage::degenerate, v, eq, 0);
        g.put("bound", str(b.bound));
        g.put("branch", to_string(b.branch));
        g.put("sieved_to", str(cfg.ell_cap));
        g.put("at_ell", str(eval));
        g.put("x_y1_y2", degenerate_list(sols));
        if (!w.emit(g))
            return;
        if (eq.is_trivial_branch())
            trivial = eq;
        else
            sieve_eqs.push_back(eq);
    }

    /* r != t: EMPTY sieve */
    if (!sieve_eqs.empty()) {
        SweepConfig sc;
        sc.ell_min = 5;
        sc.ell_max = cfg.ell_cap;
        sc.kmax = cfg.kmax;
        sc.jobs = cfg.jobs;
        sc.mode = SieveMode::empty;
        struct PerEq {
            Digest dg;
            u64 primes = 0, hi_surv = 0;
            std::vector<Certificate> detail;
            std::vector<u64> survivors;
        };
        std::vector<PerEq> per(sieve_eqs.size());
        sweep(sieve_eqs, sc, [&](SieveOutcome const & o) {
            auto & pe = per[o.eq_index];
            if (!o.witness) {
                pe.survivors.push_back(o.ell);
                pe.hi_surv += o.ell >= cfg.detail_below;
            } else if (o.ell < cfg.detail_below) {
                Certificate c = make(Stage::sieve, Verdict::eliminated, sieve_eqs[o.eq_index], o.ell);
                c.put("q", str(o.witness->q));
                c.put("k", str(o.witness->k));
                pe.detail.push_back(std::move(c));
            } else {
                pe.dg.add(sieve_digest_item(o.ell, o.witness->k));
                ++pe.primes;
            }
        });
        for (std::size_t i = 0; i < sieve_eqs.size(); ++i) {
            auto const & eq = sieve_eqs[i];
            auto & pe = per[i];
            for (auto const & c : pe.detail)
                if (!w.emit(c))
                    return;
            if (cfg.ell_cap > cfg.detail_below) {
                Certificate c = make(Stage::sieve, Verdict::eliminated, eq, cfg.detail_below);
                c.put("ell_hi", str(cfg.ell_cap));
                c.put("kmax", str(cfg.kmax));
                c.put("primes", str(pe.primes));
                c.put("survivors", str(pe.hi_surv));
                c.put("digest", pe.dg.hex());
                if (!w.emit(c))
                    return;
            }
            for (u64 ell : pe.survivors) {
                Certificate c = make(Stage::sieve, Verdict::survived, eq, ell);
                c.put("kmax", str(cfg.kmax));
                if (!w.emit(c))
                    return;
                chain(w, cfg, eq, ell);
                if (w.stopped())
                    return;
            }
        }
    }

    /* r = t: Frey curves */
    if (trivial) {
        data.load();
        auto lv = prepare_level(d, *data.curves, *data.forms);
        if (lv.equation.r != trivial->r || lv.equation.t != trivial->t)
            throw std::logic_error("pipeline: level equation differs from the descent");
        FreySweepConfig fc;
        fc.ell_min = 5;
        fc.ell_max = cfg.ell_cap;
        fc.kmax = cfg.kmax;
        fc.jobs = cfg.jobs;
        Digest dg;
        u64 primes = 0, hi_surv = 0, hi_inc = 0, incomplete = 0, inc_lo = 0, inc_hi = 0;
        std::vector<FreyOutcome> survivors;
        std::vector<Certificate> detail;
        frey_sweep(lv, fc, [&](FreyOutcome const & o) {
            if (o.verdict == FreyVerdict::incomplete_data) {
                if (!incomplete++)
                    inc_lo = o.ell;
                inc_hi = o.ell;
                hi_inc += o.ell >= cfg.detail_below;
            } else if (o.verdict != FreyVerdict::eliminated) {
                survivors.push_back(o);
                hi_surv += o.ell >= cfg.detail_below;
            } else if (o.ell < cfg.detail_below) {
                Certificate c = make(Stage::frey, Verdict::eliminated, *trivial, o.ell);
                c.put("N", str(lv.setup.N));
                c.put("classes", frey_classes(o));
                detail.push_back(std::move(c));
            } else {
                dg.add(frey_digest_item(o));
                ++primes;
            }
        });
        for (auto const & c : detail)
            if (!w.emit(c))
                return;
        if (cfg.ell_cap > cfg.detail_below) {
            Certificate c = make(Stage::frey, Verdict::eliminated, *trivial, cfg.detail_below);
            c.put("ell_hi", str(cfg.ell_cap));
            c.put("N", str(lv.setup.N));
            c.put("kmax", str(cfg.kmax));
            c.put("primes", str(primes));
            c.put("survivors", str(hi_surv));
            c.put("incomplete", str(hi_inc));
            c.put("digest", dg.hex());
            if (!w.emit(c))
                return;
        }
        if (incomplete) {
            /* no newform data: never eliminated, not pursued further */
            Certificate c = make(Stage::frey, Verdict::survived, *trivial, inc_lo);
            c.put("reason", to_string(FreyVerdict::incomplete_data));
            c.put("N", str(lv.setup.N));
            c.put("ell_hi", str(inc_hi + 1));
            c.put("count", str(incomplete));
            if (!w.emit(c))
                return;
        }
        for (auto const & o : survivors) {
            Certificate c = make(Stage::frey, Verdict::survived, *trivial, o.ell);
            c.put("reason", to_string(o.verdict));
            c.put("N", str(lv.setup.N));
            c.put("kmax", str(cfg.kmax));
            if (!o.failing.empty())
                c.put("failing", o.failing);
            if (!w.emit(c))
                return;
            chain(w, cfg, *trivial, o.ell);
            if (w.stopped())
                return;
        }
    }
}

void oracle_unit(Writer & w, RunConfig const & cfg)
{
    TernaryEq none;
    Certificate d2 = make(Stage::oracle, Verdict::cited, none, 0);
    d2.d = 2;
    d2.put("route", "d2");
    d2.put("x_max", str(static_cast<u64>(cfg.oracle_x_max)));
    if (!w.emit(d2))
        return;
    Certificate l2 = make(Stage::oracle, Verdict::cited, none, 2);
    l2.put("route", "ell2");
    l2.put("x_max", str(static_cast<u64>(cfg.oracle_x_max)));
    if (!w.emit(l2))
        return;
    int lo = cfg.d_min <= 3 ? 2 : cfg.d_min;
    for (auto const & h : oracle_search(lo, cfg.d_max, 1, cfg.oracle_x_max, cfg.oracle_ells, cfg.jobs)) {
        Certificate c = make(Stage::oracle, Verdict::solved, none, h.ell);
        c.d = h.d;
        c.put("x", str(h.x));
        c.put("y", str(h.y));
        if (!w.emit(c))
            return;
    }
}

std::string unit_tag(std::pair<int, u64> const & u) { return "d=" + std::to_string(u.first) + " ell=" + str(u.second); }

} // namespace

std::string to_string(Stage s)
{
    switch (s) {
    case Stage::descent:
        return "DESCENT";
    case Stage::sieve:
        return "SIEVE";
    case Stage::frey:
        return "FREY";
    case Stage::local:
        return "LOCAL";
    case Stage::selmer:
        return "SELMER";
    case Stage::thue:
        return "THUE";
    case Stage::degenerate:
        return "DEGENERATE";
    case Stage::oracle:
        return "ORACLE";
    }
    return "?";
}

std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::eliminated:
        return "ELIMINATED";
    case Verdict::survived:
        return "SURVIVED";
    case Verdict::solved:
        return "SOLVED";
    case Verdict::cited:
        return "CITED";
    }
    return "?";
}

Stage parse_stage(std::string const & s) { return parse_enum(s, all_stages, "stage"); }
Verdict parse_verdict(std::string const & s) { return parse_enum(s, all_verdicts, "verdict"); }

std::optional<std::string> Certificate::get(std::string const & key) const
{
    for (auto const & [k, v] : witness)
        if (k == key)
            return v;
    return std::nullopt;
}

std::string const & Certificate::at(std::string const & key) const
{
    for (auto const & [k, v] : witness)
        if (k == key)
            return v;
    throw std::out_of_range("certificate has no field " + key);
}

void Certificate::put(std::string key, std::string value) { witness.emplace_back(std::move(key), std::move(value)); }

std::string format(Certificate const & c)
{
    std::string s = "v=" + std::to_string(c.version) + " stage=" + to_string(c.stage) + " verdict=" + to_string(c.verdict) + " d=" + std::to_string(c.d) +
                    " ell=" + str(c.ell) + " r=" + str(c.r) + " s=" + str(c.s) + " t=" + str(c.t);
    for (auto const & [k, v] : c.witness)
        s += " " + k + "=" + v;
    return s;
}

Certificate parse_certificate(std::string const & line)
{
    std::vector<std::pair<std::string, std::string>> fields;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument("malformed certificate field: " + tok);
        fields.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
    }
    static constexpr char const * head[] = {"v", "stage", "verdict", "d", "ell", "r", "s", "t"};
    if (fields.size() < 8)
        throw std::invalid_argument("truncated certificate: " + line);
    for (int i = 0; i < 8; ++i)
        if (fields[i].first != head[i])
            throw std::invalid_argument("certificate field " + std::string(head[i]) + " out of order");
    Certificate c;
    try {
        c.version = std::stoi(fields[0].second);
        if (c.version != certificate_version)
            throw StaleVersion("certificate version " + fields[0].second + ", expected " + std::to_string(certificate_version));
        c.stage = parse_stage(fields[1].second);
        c.verdict = parse_verdict(fields[2].second);
        c.d = std::stoi(fields[3].second);
        c.ell = to_u64(fields[4].second);
        c.r.set_str(fields[5].second, 10);
        c.s.set_str(fields[6].second, 10);
        c.t.set_str(fields[7].second, 10);
    } catch (StaleVersion const &) {
        throw;
    } catch (std::exception const & e) {
        throw std::invalid_argument("malformed certificate: " + std::string(e.what()));
    }
    for (std::size_t i = 8; i < fields.size(); ++i)
        c.witness.push_back(fields[i]);
    return c;
}

void RunConfig::validate() const
{
    if (d_min < 3 || d_max > 50 || d_min > d_max)
        throw std::invalid_argument("d range must lie in [3, 50]");
    if (ell_cap > 3000000 || ell_cap < 5)
        throw std::invalid_argument("ell cap must lie in [5, 3e6]");
    if (kmax < 1)
        throw std::invalid_argument("kmax must be >= 1");
    if (thue_height < 1)
        throw std::invalid_argument("Thue height must be >= 1");
    if (oracle_x_max < 1)
        throw std::invalid_argument("oracle x max must be >= 1");
    if (output.empty())
        throw std::invalid_argument("no output path");
}

std::string RunConfig::canonical() const
{
    std::ostringstream o;
    o << "d=" << d_min << ".." << d_max << " ell_cap=" << ell_cap << " kmax=" << kmax << " detail=" << detail_below << " height=" << thue_height
      << " oracle=" << run_oracle << " x_max=" << oracle_x_max << " ells=";
    for (u64 e : oracle_ells)
        o << e << ",";
    return o.str();
}

std::string RunConfig::hash() const
{
    Digest d;
    d.add(canonical());
    return d.hex();
}

std::vector<std::pair<int, u64>> work_units(RunConfig const & cfg)
{
    std::vector<std::pair<int, u64>> u;
    for (int d = cfg.d_min; d <= cfg.d_max; ++d) {
        u.push_back({d, 3});
        u.push_back({d, 0});
    }
    if (cfg.run_oracle)
        u.push_back({0, 0});
    return u;
}

std::vector<Certificate> read_certificates(std::string const & path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read " + path);
    std::vector<Certificate> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#')
            out.push_back(parse_certificate(line));
    return out;
}

PipelineResult run_pipeline(RunConfig const & cfg, CertificateHook const & hook)
{
    cfg.validate();
    Data data{cfg.data_dir.empty() ? default_data_dir() : cfg.data_dir, nullptr, nullptr};
    auto units = work_units(cfg);
    std::string header = "# cubesum certificates v=" + std::to_string(certificate_version) + " config=" + cfg.hash();
    std::size_t next = 0;
    bool done = false;

    if (cfg.resume && std::filesystem::exists(cfg.output)) {
        std::ifstream in(cfg.output);
        std::string line;
        if (!std::getline(in, line) || line != header)
            throw std::runtime_error("resume: " + cfg.output + " was written with a different configuration or format");
        std::uintmax_t keep = line.size() + 1, pos = keep;
        while (std::getline(in, line)) {
            pos += line.size() + 1;
            if (in.eof() && !line.empty())
                break; /* unterminated last line */
            if (line.rfind("# done ", 0) == 0) {
                if (next >= units.size() || line != "# done " + unit_tag(units[next]))
                    throw std::runtime_error("resume: watermark out of order: " + line);
                ++next;
                keep = pos;
            } else if (line == "# complete") {
                done = true;
                keep = pos;
            }
        }
        in.close();
        std::filesystem::resize_file(cfg.output, keep);
    } else {
        std::ofstream out(cfg.output, std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + cfg.output);
        out << header << '\n';
    }

    PipelineResult res;
    if (!done) {
        std::ofstream out(cfg.output, std::ios::app);
        if (!out)
            throw std::runtime_error("cannot write " + cfg.output);
        Writer w(out, hook);
        for (; next < units.size(); ++next) {
            auto [d, ell] = units[next];
            if (d == 0)
                oracle_unit(w, cfg);
            else if (ell == 3)
                cubic_unit(w, cfg, d);
            else
                uniform_unit(w, cfg, d, data);
            if (w.stopped()) {
                res.interrupted = true;
                return res;
            }
            out << "# done " << unit_tag(units[next]) << '\n';
            out.flush();
        }
        out << "# complete\n";
    }
    res.counts = summarize(read_certificates(cfg.output));
    res.exit_status = res.counts.consistency_failures ? 2 : 0;
    return res;
}

StageCounts summarize(std::vector<Certificate> const & certs)
{
    StageCounts c;
    c.certificates = certs.size();
    std::set<std::string> seen;
    std::map<std::string, std::map<Stage, Verdict>> by_eq;
    auto fail = [&](std::string msg) {
        ++c.consistency_failures;
        if (c.failures.size() < 20)
            c.failures.push_back(std::move(msg));
    };
    for (auto const & x : certs) {
        if (!seen.insert(identity(x)).second)
            fail("duplicate certificate: " + identity(x));
        bool range = x.get("ell_hi").has_value();
        if (!range && x.stage != Stage::oracle)
            by_eq[base_identity(x)][x.stage] = x.verdict;
        if (x.stage == Stage::descent && x.ell == 3)
            ++c.original[3];
        if ((x.stage == Stage::sieve || x.stage == Stage::frey) && x.verdict == Verdict::survived && !range)
            ++c.original[x.ell];
        if (x.stage == Stage::frey && x.verdict == Verdict::survived && range)
            c.incomplete_levels.push_back(x.d);
        if (x.stage == Stage::local && x.verdict == Verdict::survived)
            ++c.after_local[x.ell];
        if (x.stage == Stage::selmer && x.verdict == Verdict::survived)
            ++c.after_selmer[x.ell];
        if (x.stage == Stage::thue) {
            ++c.thue_tasks;
            auto xy = x.at("xy");
            if (xy == "none")
                continue;
            for (auto const & item : split(xy, ';')) {
                auto parts = split(item, ',');
                SolutionRecord r{x.d, bigint(parts.at(0)), bigint(parts.at(1)), x.ell};
                if (cube_sum(r.x, r.d) != [&] {
                        bigint p;
                        mpz_pow_ui(p.get_mpz_t(), r.y.get_mpz_t(), r.ell);
                        return p;
                    }())
                    fail("Thue record does not solve the equation: " + to_string(r));
                if (r.x >= 1)
                    c.thue_solutions.push_back(r);
            }
        }
    }
    /* each stage needs a surviving predecessor */
    for (auto const & entry : by_eq) {
        auto const & id = entry.first;
        auto const & st = entry.second;
        auto need = [&](Stage s, std::vector<Stage> const & before) {
            if (!st.count(s))
                return;
            for (Stage b : before) {
                auto it = st.find(b);
                if (it != st.end() && it->second == Verdict::survived)
                    return;
            }
            fail(to_string(s) + " without a surviving predecessor: " + id);
        };
        need(Stage::local, {Stage::descent, Stage::sieve, Stage::frey});
        need(Stage::selmer, {Stage::local});
        need(Stage::thue, {Stage::selmer});
        auto sel = st.find(Stage::selmer);
        if (sel != st.end() && sel->second == Verdict::survived && !st.count(Stage::thue))
            fail("SELMER survivor without a Thue result: " + id);
    }
    std::sort(c.thue_solutions.begin(), c.thue_solutions.end());
    std::sort(c.incomplete_levels.begin(), c.incomplete_levels.end());
    return c;
}

std::vector<Table2Row> load_table2(std::string const & path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read " + path);
    std::vector<Table2Row> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ls(line);
        Table2Row r;
        if (!(ls >> r.ell >> r.original >> r.after_local >> r.after_descent))
            throw std::runtime_error("malformed row in " + path + ": " + line);
        rows.push_back(r);
    }
    return rows;
}

std::string format_report(StageCounts const & c, std::vector<Table2Row> const & table2)
{
    std::ostringstream o;
    auto get = [](std::map<u64, u64> const & m, u64 k) {
        auto it = m.find(k);
        return it == m.end() ? u64(0) : it->second;
    };
    o << "ell   original        after local     after descent\n";
    u64 t[3] = {0, 0, 0}, p[3] = {0, 0, 0};
    for (auto const & r : table2) {
        u64 v[3] = {get(c.original, r.ell), get(c.after_local, r.ell), get(c.after_selmer, r.ell)};
        u64 w[3] = {r.original, r.after_local, r.after_descent};
        o << std::left << std::setw(6) << r.ell;
        for (int i = 0; i < 3; ++i) {
            std::string cell = std::to_string(v[i]) + " (" + std::to_string(w[i]) + ")";
            o << std::setw(16) << cell;
            t[i] += v[i];
            p[i] += w[i];
        }
        o << '\n';
    }
    o << std::setw(6) << "total";
    for (int i = 0; i < 3; ++i)
        o << std::setw(16) << (std::to_string(t[i]) + " (" + std::to_string(p[i]) + ")");
    o << "\n(table values in parentheses)\n";
    o << "Thue tasks: " << c.thue_tasks << "\n";
    for (auto const & s : c.thue_solutions)
        o << "  " << to_string(s) << "\n";
    if (!c.incomplete_levels.empty()) {
        o << "levels without newform data (d):";
        for (int d : c.incomplete_levels)
            o << " " << d;
        o << "\n";
    }
    o << "certificates: " << c.certificates << ", consistency failures: " << c.consistency_failures << "\n";
    for (auto const & f : c.failures)
        o << "  " << f << "\n";
    return o.str();
}

ReplayContext::ReplayContext(std::string data_dir) : dir_(data_dir.empty() ? default_data_dir() : std::move(data_dir)) {}

FreyLevel const & ReplayContext::level(int d)
{
    auto it = levels_.find(d);
    if (it != levels_.end())
        return it->second;
    if (!curves_) {
        curves_ = std::make_unique<CurveTable>(load_curves(dir_ + "/curves.tsv"));
        forms_ = std::make_unique<NewformTable>(load_newforms(dir_ + "/newforms.tsv"));
    }
    return levels_.emplace(d, prepare_level(d, *curves_, *forms_)).first->second;
}

bool replay(Certificate const & c, ReplayContext & ctx)
{
    if (c.version != certificate_version)
        throw StaleVersion("certificate version " + std::to_string(c.version));
    try {
        if (c.stage == Stage::oracle) {
            if (c.verdict == Verdict::cited)
                return c.get("route").has_value();
            bigint x(c.at("x")), y(c.at("y")), p;
            mpz_pow_ui(p.get_mpz_t(), y.get_mpz_t(), c.ell);
            return c.verdict == Verdict::solved && cube_sum(x, c.d) == p;
        }
        auto eq = find_equation(c);
        if (!eq)
            return false;
        switch (c.stage) {
        case Stage::descent:
            return c.verdict == Verdict::survived && eq->source.alpha.get_str() == c.at("alpha") && eq->source.beta.get_str() == c.at("beta") &&
                   ternary_coefficients(eq->source).r == c.r;
        case Stage::degenerate: {
            auto b = laurent_ell_bound(eq->source);
            u64 cap = to_u64(c.at("sieved_to")), eval = to_u64(c.at("at_ell"));
            if (b.bound != to_u64(c.at("bound")) || eval != degenerate_ell(*eq, b.bound))
                return false;
            auto list = degenerate_list(degenerate_solutions(*eq, static_cast<unsigned>(eval)));
            Verdict v = b.bound > cap ? Verdict::survived : (list == "none" ? Verdict::eliminated : Verdict::solved);
            return list == c.at("x_y1_y2") && v == c.verdict;
        }
        case Stage::sieve: {
            if (auto hi = c.get("ell_hi")) {
                u64 kmax = to_u64(c.at("kmax")), primes = 0, surv = 0;
                Digest dg;
                for (u64 ell : primes_below(to_u64(*hi)))
                    if (ell >= c.ell && ell >= 5) {
                        auto w = find_elimination_prime(*eq, ell, kmax, SieveMode::empty);
                        if (w) {
                            dg.add(sieve_digest_item(ell, w->k));
                            ++primes;
                        } else {
                            ++surv;
                        }
                    }
                return primes == to_u64(c.at("primes")) && surv == to_u64(c.at("survivors")) && dg.hex() == c.at("digest");
            }
            if (c.verdict == Verdict::survived)
                return !find_elimination_prime(*eq, c.ell, to_u64(c.at("kmax")), SieveMode::empty);
            u64 q = to_u64(c.at("q")), k = to_u64(c.at("k"));
            return q == 2 * k * c.ell + 1 && is_prime(q) && mod_of(eq->r, q) != 0 && sieve_set(*eq, c.ell, q).empty();
        }
        case Stage::frey: {
            auto const & lv = ctx.level(c.d);
            if (str(lv.setup.N) != c.at("N"))
                return false;
            if (auto hi = c.get("ell_hi")) {
                FreySweepConfig fc;
                fc.ell_min = c.ell;
                fc.ell_max = to_u64(*hi);
                if (c.verdict == Verdict::survived) {
                    u64 n = 0;
                    bool all = true;
                    frey_sweep(lv, fc, [&](FreyOutcome const & o) {
                        all = all && o.verdict == FreyVerdict::incomplete_data;
                        ++n;
                    });
                    return all && n == to_u64(c.at("count"));
                }
                fc.kmax = to_u64(c.at("kmax"));
                Digest dg;
                u64 primes = 0, surv = 0, inc = 0;
                frey_sweep(lv, fc, [&](FreyOutcome const & o) {
                    if (o.verdict == FreyVerdict::eliminated) {
                        dg.add(frey_digest_item(o));
                        ++primes;
                    } else if (o.verdict == FreyVerdict::incomplete_data) {
                        ++inc;
                    } else {
                        ++surv;
                    }
                });
                return primes == to_u64(c.at("primes")) && surv == to_u64(c.at("survivors")) && inc == to_u64(c.at("incomplete")) &&
                       dg.hex() == c.at("digest");
            }
            if (c.verdict == Verdict::survived)
                return to_string(frey_eliminate(lv, c.ell, to_u64(c.at("kmax"))).verdict) == c.at("reason");
            /* every class has a working q, no irrational form is congruent */
            if (!lv.complete || !exponent_assumptions(c.d, c.ell))
                return false;
            for (auto const & f : lv.irrational)
                if (mpz_divisible_ui_p(f.bQ.get_mpz_t(), c.ell))
                    return false;
            std::map<std::string, u64> qs;
            for (auto const & item : split(c.at("classes"), ',')) {
                auto colon = item.rfind(':');
                qs[item.substr(0, colon)] = to_u64(item.substr(colon + 1));
            }
            for (auto const & cl : lv.classes) {
                auto it = qs.find(cl.representative.label);
                if (it == qs.end() || !check_frey_witness(lv, cl.representative, c.ell, it->second))
                    return false;
            }
            return true;
        }
        case Stage::local: {
            auto red = strip(*eq, c.ell);
            if (str(red.R) != c.at("R") || str(red.S) != c.at("S") || str(red.T) != c.at("T"))
                return false;
            if (c.verdict == Verdict::survived)
                return locally_solvable(red).solvable;
            bigint m(c.at("modulus"));
            if (m.fits_ulong_p() && m <= 50000000)
                return !solvable_mod(red, m.get_ui());
            return !solvable_in_Zq(red, to_u64(c.at("q")));
        }
        case Stage::selmer: {
            auto out = selmer_eliminate(strip(*eq, c.ell), 1000);
            bool surv = out.verdict == SelmerVerdict::survived;
            return to_string(out.verdict) == c.at("result") && surv == (c.verdict == Verdict::survived) && str(out.m) == c.at("m") &&
                   str(out.dimension) == c.at("dim");
        }
        case Stage::thue: {
            auto task = thue_task(strip(*eq, c.ell), to_u64(c.at("height")));
            auto sols = thue_bounded_solve(task);
            std::vector<SolutionRecord> mapped;
            for (auto const & s : sols)
                for (auto const & r : map_back(task, s))
                    mapped.push_back(r);
            std::sort(mapped.begin(), mapped.end());
            return thue_pairs(sols) == c.at("rho_tau") && records(mapped) == c.at("xy") &&
                   (mapped.empty() ? Verdict::survived : Verdict::solved) == c.verdict;
        }
        case Stage::oracle:
            break;
        }
    } catch (std::out_of_range const &) {
        return false;
    } catch (std::invalid_argument const &) {
        return false;
    }
    return false;
}

std::vector<bool> replay_all(std::vector<Certificate> const & certs, ReplayContext & ctx, unsigned jobs)
{
    std::vector<bool> ok(certs.size(), false);
    /* sieve range certificates sharing (ell, ell_hi, kmax) go through one sweep */
    struct Group {
        std::vector<std::size_t> index;
        std::vector<TernaryEq> eqs;
    };
    std::map<std::tuple<u64, u64, u64>, Group> groups;
    for (std::size_t i = 0; i < certs.size(); ++i) {
        auto const & c = certs[i];
        if (c.version != certificate_version)
            throw StaleVersion("certificate version " + std::to_string(c.version));
        auto hi = c.get("ell_hi");
        auto kmax = c.get("kmax");
        if (c.stage != Stage::sieve || !hi || !kmax) {
            ok[i] = replay(c, ctx);
            continue;
        }
        auto eq = find_equation(c);
        if (!eq)
            continue;
        try {
            auto & g = groups[{c.ell, to_u64(*hi), to_u64(*kmax)}];
            g.index.push_back(i);
            g.eqs.push_back(*eq);
        } catch (std::invalid_argument const &) {
        }
    }
    for (auto & [key, g] : groups) {
        SweepConfig sc;
        sc.ell_min = std::max<u64>(std::get<0>(key), 5);
        sc.ell_max = std::get<1>(key);
        sc.kmax = std::get<2>(key);
        sc.jobs = jobs;
        sc.mode = SieveMode::empty;
        std::vector<Digest> dg(g.eqs.size());
        std::vector<u64> primes(g.eqs.size()), surv(g.eqs.size());
        sweep(g.eqs, sc, [&](SieveOutcome const & o) {
            if (o.witness) {
                dg[o.eq_index].add(sieve_digest_item(o.ell, o.witness->k));
                ++primes[o.eq_index];
            } else {
                ++surv[o.eq_index];
            }
        });
        for (std::size_t j = 0; j < g.index.size(); ++j) {
            auto const & c = certs[g.index[j]];
            auto p = c.get("primes"), s = c.get("survivors"), d = c.get("digest");
            ok[g.index[j]] = p && s && d && *p == str(primes[j]) && *s == str(surv[j]) && *d == dg[j].hex();
        }
    }
    return ok;
}

std::vector<TableRow> load_table1(std::string const & path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read " + path);
    std::vector<TableRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        auto f = split(line, '\t');
        if (f.size() != 4)
            throw std::runtime_error("malformed row in " + path + ": " + line);
        TableRow r;
        r.d = std::stoi(f[0]);
        r.x = bigint(f[1]);
        std::string y = f[2];
        std::string const pm = "\xc2\xb1";
        if (y.rfind(pm, 0) == 0) {
            r.both_signs = true;
            y = y.substr(pm.size());
        }
        r.y = bigint(y);
        r.ell = to_u64(f[3]);
        rows.push_back(r);
    }
    return rows;
}

TableDiff verify_table(std::vector<Certificate> const & certs, std::vector<TableRow> const & table)
{
    std::set<SolutionRecord> want, got;
    for (auto const & r : table) {
        want.insert({r.d, r.x, r.y, r.ell});
        if (r.both_signs)
            want.insert({r.d, r.x, bigint(-r.y), r.ell});
    }
    for (auto const & c : certs)
        if (c.stage == Stage::oracle && c.verdict == Verdict::solved && is_prime(c.ell)) {
            SolutionRecord r{c.d, bigint(c.at("x")), bigint(c.at("y")), c.ell};
            if (r.x >= 1)
                got.insert(r);
        }
    TableDiff diff;
    std::set_difference(want.begin(), want.end(), got.begin(), got.end(), std::back_inserter(diff.missing));
    std::set_difference(got.begin(), got.end(), want.begin(), want.end(), std::back_inserter(diff.extra));
    return diff;
}

std::string format_diff(TableDiff const & diff)
{
    std::string s;
    for (auto const & r : diff.missing)
        s += "missing " + to_string(r) + "\n";
    for (auto const & r : diff.extra)
        s += "extra " + to_string(r) + "\n";
    return s;
}

} // namespace cubesum
