#ifndef CUBESUM_QUADFIELD_HPP
#define CUBESUM_QUADFIELD_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cubesum/reduction.hpp"

namespace cubesum {

/* a + b sqrt(-m) */
struct QuadElt {
    Rational a, b;

    bool operator==(QuadElt const &) const = default;
};

/* Positive definite form a X^2 + b XY + c Y^2. */
struct BinaryForm {
    bigint a, b, c;

    bigint discriminant() const { return b * b - 4 * a * c; }
    bool operator==(BinaryForm const &) const = default;
    bool operator<(BinaryForm const & o) const
    {
        if (a != o.a)
            return a < o.a;
        if (b != o.b)
            return b < o.b;
        return c < o.c;
    }
};

/* The reduced form properly equivalent to f. If col is given it receives the
 * first column (x, y) of the transformation, so f(x, y) = reduced.a. */
BinaryForm reduce_form(BinaryForm f, std::pair<bigint, bigint> * col = nullptr);

/* Number of reduced primitive forms of discriminant D < 0. */
u64 count_reduced_forms(i64 D);

enum class Splitting { split, inert, ramified };

/* Prime ideal (p, omega - root); for inert p the ideal is (p) and root is unused. */
struct PrimeIdeal {
    u64 p = 0;
    Splitting kind = Splitting::inert;
    u64 root = 0;

    bool operator==(PrimeIdeal const &) const = default;
    auto operator<=>(PrimeIdeal const &) const = default;
};

std::string to_string(PrimeIdeal const & P);

/* Z-basis {a, b + c omega} in Hermite normal form, 0 <= b < a. */
struct Ideal {
    bigint a = 1, b = 0, c = 1;

    bool operator==(Ideal const &) const = default;
};

struct ClassGroup {
    u64 order = 1;
    std::vector<u64> cycles; /* invariant factors, each dividing the next */
    std::vector<Ideal> generators;
};

/* K = Q(sqrt(-m)) with ring of integers Z[omega]; omega = (1 + sqrt(-m))/2
 * when m = 3 mod 4, else sqrt(-m). */
class QuadField {
public:
    using ClassKey = BinaryForm;

    explicit QuadField(u64 m);

    u64 m() const { return m_; }
    i64 discriminant() const { return disc_; }
    bool half_omega() const { return half_; }
    int unit_order() const;
    u64 class_number() const { return reps_.size(); }
    ClassGroup const & class_group() const;

    /* omega-coordinates (x, y) of a + b sqrt(-m) */
    std::pair<Rational, Rational> coords(QuadElt const & e) const;
    QuadElt from_coords(Rational const & x, Rational const & y) const;
    QuadElt conj(QuadElt const & e) const { return {e.a, -e.b}; }
    QuadElt mul(QuadElt const & x, QuadElt const & y) const;
    Rational norm(QuadElt const & e) const { return e.a * e.a + e.b * e.b * m_; }
    bool is_integral(QuadElt const & e) const;

    std::vector<PrimeIdeal> primes_above(u64 p) const;
    PrimeIdeal conj(PrimeIdeal const & P) const;
    u64 residue_degree(PrimeIdeal const & P) const { return P.kind == Splitting::inert ? 2 : 1; }
    bigint norm(PrimeIdeal const & P) const;
    /* ord_P of a nonzero element; throws std::domain_error for zero */
    int valuation(QuadElt const & e, PrimeIdeal const & P) const;
    /* image in O/P = F_p of a P-unit, P split or ramified */
    u64 residue(QuadElt const & e, PrimeIdeal const & P) const;

    Ideal ideal(PrimeIdeal const & P) const;
    Ideal ideal(BinaryForm const & f) const;
    Ideal principal(QuadElt const & e) const; /* e integral */
    Ideal multiply(Ideal const & I, Ideal const & J) const;
    Ideal power(Ideal const & I, u64 e) const;
    bigint norm(Ideal const & I) const { return I.a * I.c; }

    ClassKey class_of(Ideal const & I) const;
    ClassKey identity() const;
    /* a generator when I is principal */
    std::optional<QuadElt> generator(Ideal const & I) const;

    ClassKey class_mul(ClassKey const & x, ClassKey const & y) const;
    ClassKey class_pow(ClassKey const & x, u64 e) const;
    std::vector<ClassKey> const & classes() const { return keys_; }
    Ideal const & representative(ClassKey const & k) const { return reps_.at(k); }

private:
    u64 m_;
    i64 disc_;
    bool half_;
    std::vector<ClassKey> keys_;
    std::map<ClassKey, Ideal> reps_;
    mutable std::unique_ptr<ClassGroup> group_;

    BinaryForm form_of(Ideal const & I, QuadElt * alpha1, QuadElt * alpha2) const;
    void mul_coords(bigint const & x1, bigint const & y1, bigint const & x2, bigint const & y2, bigint & x, bigint & y) const;
};

/* Non-squarefree m is rejected with std::invalid_argument. */
QuadField class_group(u64 m);

struct SelmerElement {
    QuadElt element;
    std::vector<int> valuations; /* ord_P mod ell over the S set, in order */
    std::vector<int> coords;     /* exponents over the basis it came from */
};

struct SelmerBasis {
    u64 ell = 0;
    std::vector<PrimeIdeal> S;
    std::vector<SelmerElement> basis;
    std::vector<PrimeIdeal> aux; /* split primes whose ell-th power characters separate the basis */

    std::size_t dimension() const { return basis.size(); }
};

/* Basis of K(S, ell) = { eps : ord_P(eps) = 0 mod ell for P not in S }. */
SelmerBasis selmer_group(QuadField const & K, std::vector<PrimeIdeal> const & S, u64 ell);

/* Coordinates of eps in the basis, or nullopt if eps is not in K(S, ell). */
std::optional<std::vector<int>> selmer_coords(QuadField const & K, SelmerBasis const & sel, QuadElt const & eps);

/* (v sigma^ell)^2 + m n^2 = u rho^ell, from S S' = v^2, R S' = u, T S' = m n^2 */
struct DescentDatum {
    bigint u, v, n;
    u64 m = 1;
    u64 ell = 0;
    std::vector<PrimeIdeal> S;
};

DescentDatum descent_datum(ReducedEq const & red, QuadField const & K);
u64 descent_field(ReducedEq const & red);

/* n sqrt(-m) */
QuadElt special_element(DescentDatum const & dd);

/* Elements of K(S, ell) whose norm over u is an ell-th power. */
std::vector<SelmerElement> epsilon_set(QuadField const & K, DescentDatum const & dd, SelmerBasis const & sel);

struct ValuativeWitness {
    PrimeIdeal ideal;
    int condition = 1; /* which of the three valuation triples */
};

std::optional<ValuativeWitness> valuative_eliminate(QuadField const & K, SelmerElement const & eps, DescentDatum const & dd);

/* Smallest q = 2 k ell + 1, k <= kmax, split and prime to 2 u n m, with C(ell, q) empty. */
std::optional<u64> cfield_sieve(QuadField const & K, SelmerElement const & eps, DescentDatum const & dd, u64 kmax = 1000);

/* Integer roots in K of an integer polynomial (coefficients low degree first). */
std::vector<QuadElt> integral_roots(QuadField const & K, std::vector<bigint> const & poly);

/* The hypotheses under which eps = n sqrt(-m) forces sigma = 0. */
bool special_epsilon_check(QuadField const & K, DescentDatum const & dd);

enum class SelmerVerdict { eliminated, sigma_zero, survived };

std::string to_string(SelmerVerdict v);

struct EpsilonFate {
    std::vector<int> coords;
    std::optional<ValuativeWitness> valuative;
    std::optional<u64> cfield;
    bool special = false;

    bool eliminated() const { return valuative || cfield; }
};

struct SelmerOutcome {
    SelmerVerdict verdict = SelmerVerdict::survived;
    u64 m = 0;
    std::size_t dimension = 0;
    std::vector<EpsilonFate> fates;
};

SelmerOutcome selmer_eliminate(ReducedEq const & red, u64 kmax = 1000);

} // namespace cubesum

#endif
