#ifndef CUBESUM_PIPELINE_HPP
#define CUBESUM_PIPELINE_HPP

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cubesum/frey.hpp"
#include "cubesum/logbound.hpp"
#include "cubesum/quadfield.hpp"
#include "cubesum/sieve.hpp"
#include "cubesum/thue_oracle.hpp"

namespace cubesum {

inline constexpr int certificate_version = 1;

enum class Stage { descent, sieve, frey, local, selmer, thue, degenerate, oracle };
enum class Verdict { eliminated, survived, solved, cited };

std::string to_string(Stage s);
std::string to_string(Verdict v);
Stage parse_stage(std::string const & s);
Verdict parse_verdict(std::string const & s);

/* One line: v=1 stage=.. verdict=.. d=.. ell=.. r=.. s=.. t=.. then witness
 * fields in order. ell = 0 marks the ell-uniform descent (ell >= 5). */
struct Certificate {
    int version = certificate_version;
    Stage stage = Stage::descent;
    Verdict verdict = Verdict::survived;
    int d = 0;
    u64 ell = 0;
    bigint r, s, t;
    std::vector<std::pair<std::string, std::string>> witness;

    std::optional<std::string> get(std::string const & key) const;
    std::string const & at(std::string const & key) const; /* throws std::out_of_range */
    void put(std::string key, std::string value);
    bool operator==(Certificate const &) const = default;
};

struct StaleVersion : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string format(Certificate const & c);
/* Throws StaleVersion on a version mismatch and std::invalid_argument on a malformed line. */
Certificate parse_certificate(std::string const & line);

struct RunConfig {
    int d_min = 3;
    int d_max = 50;
    u64 ell_cap = 3000000;  /* exclusive, at most 3e6 */
    u64 kmax = 1000;
    u64 detail_below = 100; /* per-ell sieve and frey certificates below this, digests above */
    u64 thue_height = default_thue_height;
    bool run_oracle = true;
    i64 oracle_x_max = 150000;
    std::vector<u64> oracle_ells = {2, 3, 5, 7, 11, 13};
    unsigned jobs = 1;
    std::string data_dir;
    std::string output;
    bool resume = false;

    void validate() const; /* throws std::invalid_argument */
    std::string canonical() const; /* the fields that determine the stream */
    std::string hash() const;
};

/* Work units in stream order: (d, 3) cubic, (d, 0) uniform, then (0, 0) for the oracle. */
std::vector<std::pair<int, u64>> work_units(RunConfig const & cfg);

struct StageCounts {
    std::map<u64, u64> original, after_local, after_selmer;
    u64 thue_tasks = 0;
    std::vector<SolutionRecord> thue_solutions; /* x >= 1 */
    std::vector<int> incomplete_levels;
    u64 certificates = 0;
    u64 consistency_failures = 0;
    std::vector<std::string> failures;
};

/* Table 2 bookkeeping from a certificate stream; also checks that every
 * identity appears once per stage and that stages stay monotone. */
StageCounts summarize(std::vector<Certificate> const & certs);

struct Table2Row {
    u64 ell = 0;
    u64 original = 0, after_local = 0, after_descent = 0;
};
std::vector<Table2Row> load_table2(std::string const & path);

std::string format_report(StageCounts const & c, std::vector<Table2Row> const & table2);

/* Called after each certificate is written; returning false stops the run
 * (used to simulate an interruption). */
using CertificateHook = std::function<bool(Certificate const &)>;

struct PipelineResult {
    StageCounts counts;
    bool interrupted = false;
    int exit_status = 0;
};

/* Writes the stream to cfg.output, resuming from the last watermark when
 * cfg.resume is set. Throws std::runtime_error on missing data or an
 * unreadable resume state. */
PipelineResult run_pipeline(RunConfig const & cfg, CertificateHook const & hook = {});

std::vector<Certificate> read_certificates(std::string const & path);

/* Loads curve and newform tables on demand for replay. */
class ReplayContext {
public:
    explicit ReplayContext(std::string data_dir);
    FreyLevel const & level(int d);

private:
    std::string dir_;
    std::unique_ptr<CurveTable> curves_;
    std::unique_ptr<NewformTable> forms_;
    std::map<int, FreyLevel> levels_;
};

/* Re-executes the witness of one certificate. Throws StaleVersion on a version mismatch. */
bool replay(Certificate const & c, ReplayContext & ctx);

/* replay over a whole stream; sieve range certificates are re-swept together */
std::vector<bool> replay_all(std::vector<Certificate> const & certs, ReplayContext & ctx, unsigned jobs = 1);

struct TableRow {
    int d = 0;
    bigint x, y; /* y > 0 */
    u64 ell = 0;
    bool both_signs = false;
};
std::vector<TableRow> load_table1(std::string const & path);

struct TableDiff {
    std::vector<SolutionRecord> missing, extra;
    bool empty() const { return missing.empty() && extra.empty(); }
};

/* ORACLE records with x >= 1 and ell prime against the table rows (each
 * row standing for one or two signed records). */
TableDiff verify_table(std::vector<Certificate> const & certs, std::vector<TableRow> const & table);

std::string format_diff(TableDiff const & diff);

} // namespace cubesum

#endif
