#ifndef CUBESUM_FREY_HPP
#define CUBESUM_FREY_HPP

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cubesum/sieve.hpp"

namespace cubesum {

enum class ParityCase { ord2_is_0, ord2_is_3 };

std::string to_string(ParityCase p);

struct FreySetup {
    int d = 0;
    u64 S = 0; /* Rad(d(d^2-1)), odd part when ord_2(d) = 3 */
    u64 N = 0; /* S, or 2S when ord_2(d) = 3 */
    ParityCase parity = ParityCase::ord2_is_0;
};

/* Throws std::invalid_argument unless 3 <= d <= 50 and ord_2(d) is 0 or 3. */
FreySetup frey_setup(int d);

/* 2 ell > ord_q(d^2 (d^2-1)^3) for every odd q, and 2 ell >= 3 ord_2(d^2-1) - 1
 * when d is odd. */
bool exponent_assumptions(int d, u64 ell);

/* 64 S^(2 ell) / (d^2 (d^2-1)^3); throws std::domain_error if not an integer. */
bigint frey_T(FreySetup const & s, u64 ell);

struct CurveRecord {
    std::string label;
    u64 conductor = 0;
    std::array<i64, 5> a{}; /* a1 a2 a3 a4 a6 */
    std::map<u64, i64> ap;  /* optional traces from the data file */
};

struct NewformRecord {
    u64 level = 0;
    std::string label;
    int degree = 0;
    /* characteristic polynomial of a_q, leading coefficient first */
    std::map<u64, std::vector<bigint>> hecke;

    bool rational() const { return degree == 1; }
};

/* Records plus the levels for which the file asserts completeness. */
template <class R>
struct DataTable {
    std::vector<R> records;
    std::set<u64> complete;

    std::vector<R> at(u64 level) const;
};

using CurveTable = DataTable<CurveRecord>;
using NewformTable = DataTable<NewformRecord>;

/* Throws std::runtime_error on malformed input. */
CurveTable load_curves(std::string const & path);
NewformTable load_newforms(std::string const & path);
/* CUBESUM_DATA_DIR from the environment, else the build-time data directory. */
std::string default_data_dir();

/* q + 1 - #E(F_q). Throws std::domain_error when q divides the conductor or
 * the model is singular mod q. */
i64 ap_point_count(CurveRecord const & c, u64 q);

/* ell | a_q(E)^2 - 4, decided exactly; avoids a full point count when
 * |a| <= 2 sqrt q leaves few candidates. */
bool ell_divides_ap2_minus_4(CurveRecord const & c, u64 q, u64 ell);

/* H_q = {a : |a| <= 2 sqrt q, q + 1 - a = 0 mod 4} */
std::vector<i64> hasse_h_set(u64 q);

/* |B_q(f)|; throws std::out_of_range without Hecke data at q. */
bigint bq_value(NewformRecord const & f, u64 q);
bigint bQ_bound(NewformRecord const & f, std::span<u64 const> Q);

struct IsogenyClass {
    CurveRecord representative;
    std::vector<std::string> members;
    std::vector<i64> traces; /* a_q for the good primes q < 100 */
};

/* Groups curves of a single conductor by their a_q vectors for q < 100. */
std::vector<IsogenyClass> isogeny_classes(std::vector<CurveRecord> const & curves);

struct FreyLevel {
    FreySetup setup;
    TernaryEq equation; /* the r = t equation of d */
    bool complete = false;
    std::vector<IsogenyClass> classes;
    struct Form {
        std::string label;
        bigint bQ;
    };
    std::vector<Form> irrational;
};

FreyLevel prepare_level(int d, CurveTable const & curves, NewformTable const & forms);

enum class FreyVerdict { eliminated, assumptions, divides_bQ, no_prime, incomplete_data };

std::string to_string(FreyVerdict v);

struct ClassWitness {
    std::string label; /* representative */
    u64 q = 0;
    u64 k = 0;
};

struct FreyOutcome {
    int d = 0;
    u64 ell = 0;
    FreyVerdict verdict = FreyVerdict::no_prime;
    std::string failing; /* form or class label behind the verdict */
    std::vector<ClassWitness> witnesses;
};

FreyOutcome frey_eliminate(FreyLevel const & lv, u64 ell, u64 kmax = 1000);

/* Re-checks a stored witness: q = 2 k ell + 1 prime, q not dividing N or r,
 * B(ell, q) = {0} and ell not dividing a_q(F)^2 - 4. */
bool check_frey_witness(FreyLevel const & lv, CurveRecord const & rep, u64 ell, u64 q);

struct FreySweepConfig {
    u64 ell_min = 5;
    u64 ell_max = 3000000; /* exclusive */
    u64 kmax = 1000;
    unsigned jobs = 1;
};

/* One outcome per prime ell in ascending order. */
void frey_sweep(FreyLevel const & lv, FreySweepConfig const & cfg,
                std::function<void(FreyOutcome const &)> const & sink);

} // namespace cubesum

#endif
