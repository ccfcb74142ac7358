#pragma once

// Bilinear schemes: rank-1 decompositions of a structured tensor, over F_p
// (bit-packed) or over Z/Q (GMP rationals).

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "stmm/gf.hpp"
#include "stmm/tensor.hpp"

namespace stmm {

struct Term {
    PackedVec u, v, w;

    bool has_zero_factor() const { return u.is_zero() || v.is_zero() || w.is_zero(); }
    friend bool operator==(const Term&, const Term&) = default;
    friend auto operator<=>(const Term&, const Term&) = default;
};

struct Scheme {
    int p = 2;
    std::array<int, 3> dims{0, 0, 0};
    std::vector<Term> terms;
    FormatPair format;
    int n = 0;

    Scheme() = default;
    Scheme(int p_, std::array<int, 3> d) : p(p_), dims(d) {}

    int rank() const { return static_cast<int>(terms.size()); }
    /// Appends the term unless one of its factors is zero.
    void add(Term t);
    friend bool operator==(const Scheme&, const Scheme&) = default;
};

/// One term per nonzero of t mod p, with the coefficient carried by w.
Scheme naive_scheme(const Tensor3& t, int p);

/// Coefficients in [0, p).
Tensor3 contract(const Scheme& s);
bool verify(const Scheme& s, const Tensor3& t);

enum class Field : std::uint8_t { F2, F3, Z, Q };

std::string field_name(Field f);
Field parse_field(std::string_view name);
inline int field_characteristic(Field f) { return f == Field::F2 ? 2 : (f == Field::F3 ? 3 : 0); }

struct ExactTerm {
    std::vector<mpq_class> u, v, w;
};

struct RecursionCounts {
    int q_ab = 0, q_ag = 0, q_gb = 0;
    friend bool operator==(const RecursionCounts&, const RecursionCounts&) = default;
};

/// Scheme with rational coefficients. Also the in-memory form of a scheme
/// file, so F2/F3 schemes are representable with residues in [0, p).
struct ExactScheme {
    Field field = Field::Q;
    std::array<int, 3> dims{0, 0, 0};
    std::vector<ExactTerm> terms;
    FormatPair format;
    int n = 0;
    std::optional<RecursionCounts> profile;
    std::string criterion = "none";
    // provenance
    std::string source_field;
    int lift_steps = 0;

    int rank() const { return static_cast<int>(terms.size()); }
    /// Z when every coefficient is integral, Q otherwise (finite fields kept).
    void settle_domain();
};

struct RationalTensor {
    std::array<int, 3> dims{0, 0, 0};
    std::vector<mpq_class> coeffs;

    mpq_class& at(int i, int j, int k) {
        return coeffs[(static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k];
    }
};

RationalTensor contract(const ExactScheme& s);
/// Exact equality for Z/Q, equality mod p for F2/F3 schemes.
bool verify(const ExactScheme& s, const Tensor3& t);

ExactScheme to_exact(const Scheme& s);
/// Throws ContractViolation when a denominator is divisible by p.
Scheme reduce_mod(const ExactScheme& s, int p);

std::size_t count_additions(const ExactScheme& s);
std::size_t count_nonzeros(const ExactScheme& s);
mpz_class max_denominator(const ExactScheme& s);

using SchemeDigest = std::array<std::uint8_t, 16>;

/// Order-independent digest. Over F3 each term is first rescaled so that u
/// and v lead with 1, which identifies the three equivalent spellings of a
/// rank-1 term.
SchemeDigest canonical_hash(const Scheme& s);
std::string to_hex(const SchemeDigest& d);

/// Evaluates the scheme as a bilinear algorithm over a possibly
/// non-commutative ring R: products are always formed left-input times
/// right-input. scale(c, x) multiplies an element by a rational constant.
/// Exactly rank() ring multiplications are performed; their count is added
/// to *mults when given.
template <class R, class Scale>
std::vector<R> evaluate_bilinear(const ExactScheme& s, std::span<const R> a, std::span<const R> b,
                                 const R& zero, Scale&& scale, std::size_t* mults = nullptr) {
    if (static_cast<int>(a.size()) != s.dims[0] || static_cast<int>(b.size()) != s.dims[1])
        throw ContractViolation("evaluate_bilinear: input length mismatch");
    std::vector<R> c(s.dims[2], zero);
    for (const ExactTerm& t : s.terms) {
        R left = zero, right = zero;
        for (int i = 0; i < s.dims[0]; ++i)
            if (sgn(t.u[i]) != 0)
                left = left + scale(t.u[i], a[i]);
        for (int j = 0; j < s.dims[1]; ++j)
            if (sgn(t.v[j]) != 0)
                right = right + scale(t.v[j], b[j]);
        const R m = left * right;
        if (mults)
            ++*mults;
        for (int k = 0; k < s.dims[2]; ++k)
            if (sgn(t.w[k]) != 0)
                c[k] = c[k] + scale(t.w[k], m);
    }
    return c;
}

}  // namespace stmm
