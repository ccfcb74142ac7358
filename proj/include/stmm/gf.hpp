#pragma once

// Bit-packed vectors and matrices over F2 and F3.
//
// F2 vectors live in a single 64-bit word. F3 vectors use two bit planes
// (low, high) with the element encoding 0 -> 00, 1 -> 01, 2 -> 10; the code
// 11 never occurs.

#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stmm {

using u64 = std::uint64_t;

class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

inline constexpr u64 low_mask(int len) {
    return len >= 64 ? ~u64{0} : ((u64{1} << len) - 1);
}

inline constexpr int mod_p(long long x, int p) {
    int r = static_cast<int>(x % p);
    return r < 0 ? r + p : r;
}

// Word-level field kernels. The flip engine is templated on these so the
// hot loop never branches on the characteristic.
struct F2 {
    static constexpr int p = 2;
    using Vec = u64;

    static Vec add(Vec a, Vec b) { return a ^ b; }
    static Vec sub(Vec a, Vec b) { return a ^ b; }
    static Vec neg(Vec a) { return a; }
    static Vec scale(Vec a, int c) { return (c & 1) ? a : 0; }
    static bool is_zero(Vec a) { return a == 0; }
    static int dot(Vec a, Vec b) { return std::popcount(a & b) & 1; }
    // Leading-one normal form; over F2 every nonzero vector is normalized.
    static Vec normalize(Vec a, int& mult) {
        mult = 1;
        return a;
    }
    static int get(Vec a, int i) { return static_cast<int>((a >> i) & 1); }
    static void set(Vec& a, int i, int v) {
        a = (a & ~(u64{1} << i)) | (u64{static_cast<u64>(v & 1)} << i);
    }
    static Vec unit(int i, int c = 1) { return (c & 1) ? (u64{1} << i) : 0; }
};

struct F3 {
    static constexpr int p = 3;
    struct Vec {
        u64 lo = 0;
        u64 hi = 0;
        friend bool operator==(const Vec&, const Vec&) = default;
        friend auto operator<=>(const Vec&, const Vec&) = default;
    };

    static Vec add(Vec a, Vec b) {
        const u64 t = (a.lo | b.hi) ^ (a.hi | b.lo);
        return {(a.hi | b.hi) ^ t, (a.lo | b.lo) ^ t};
    }
    static Vec neg(Vec a) { return {a.hi, a.lo}; }
    static Vec sub(Vec a, Vec b) { return add(a, neg(b)); }
    static Vec scale(Vec a, int c) {
        c = mod_p(c, 3);
        return c == 0 ? Vec{} : (c == 1 ? a : neg(a));
    }
    static bool is_zero(Vec a) { return (a.lo | a.hi) == 0; }
    static int dot(Vec a, Vec b) {
        const int plus = std::popcount((a.lo & b.lo) | (a.hi & b.hi));
        const int minus = std::popcount((a.lo & b.hi) | (a.hi & b.lo));
        return mod_p(plus - minus, 3);
    }
    // Scales so the lowest-index nonzero element is 1; returns the
    // multiplier m with a == m * normalize(a).
    static Vec normalize(Vec a, int& mult) {
        const u64 any = a.lo | a.hi;
        if (any == 0 || (a.lo & (any & -any))) {
            mult = 1;
            return a;
        }
        mult = 2;
        return neg(a);
    }
    static int get(Vec a, int i) {
        return static_cast<int>((a.lo >> i) & 1) + 2 * static_cast<int>((a.hi >> i) & 1);
    }
    static void set(Vec& a, int i, int v) {
        v = mod_p(v, 3);
        const u64 bit = u64{1} << i;
        a.lo = (a.lo & ~bit) | (v == 1 ? bit : 0);
        a.hi = (a.hi & ~bit) | (v == 2 ? bit : 0);
    }
    static Vec unit(int i, int c = 1) {
        Vec r;
        set(r, i, c);
        return r;
    }
};

/// A vector of 1..64 elements over F2 or F3.
struct PackedVec {
    std::uint8_t p = 2;
    std::uint8_t len = 0;
    u64 low = 0;
    u64 high = 0;

    PackedVec() = default;
    PackedVec(int p_, int len_);

    static PackedVec from_values(int p, std::span<const int> values);
    static PackedVec unit(int p, int len, int index, int c = 1);

    int get(int i) const;
    void set(int i, int v);
    bool is_zero() const { return (low | high) == 0; }
    int count_nonzero() const { return std::popcount(low | high); }
    bool valid() const;
    std::vector<int> values() const;

    F2::Vec as_f2() const { return low; }
    F3::Vec as_f3() const { return {low, high}; }
    static PackedVec from_f2(int len, F2::Vec v);
    static PackedVec from_f3(int len, F3::Vec v);

    friend bool operator==(const PackedVec&, const PackedVec&) = default;
    friend auto operator<=>(const PackedVec&, const PackedVec&) = default;
};

PackedVec vec_add(const PackedVec& x, const PackedVec& y);
PackedVec vec_sub(const PackedVec& x, const PackedVec& y);
PackedVec vec_neg(const PackedVec& x);
PackedVec vec_scale(const PackedVec& x, int c);
int vec_dot(const PackedVec& x, const PackedVec& y);

/// Dense matrix over F_p with rows stored as runs of 64-element blocks.
class GFMatrix {
public:
    GFMatrix() = default;
    GFMatrix(int p, int n_rows, int n_cols);
    static GFMatrix from_rows(int p, int n_cols, std::span<const PackedVec> rows);

    int p() const { return p_; }
    int n_rows() const { return n_rows_; }
    int n_cols() const { return n_cols_; }
    int words_per_row() const { return words_; }

    int get(int r, int c) const;
    void set(int r, int c, int v);
    /// The b-th 64-column block of row r.
    PackedVec block(int r, int b) const;

    void swap_rows(int a, int b);
    void scale_row(int r, int c);
    /// row[target] += c * row[source], touching words from first_word on.
    void add_row_multiple(int target, int source, int c, int first_word = 0);

    std::vector<int> multiply(std::span<const int> x) const;

    friend bool operator==(const GFMatrix&, const GFMatrix&) = default;

private:
    int p_ = 2;
    int n_rows_ = 0;
    int n_cols_ = 0;
    int words_ = 0;
    std::vector<u64> lo_;
    std::vector<u64> hi_;
};

struct RowOp {
    enum class Kind : std::uint8_t { swap, scale, add };
    Kind kind;
    int target;
    int source;
    int factor;
};

/// Reduced row echelon form with the row operations that produced it.
struct EchelonForm {
    GFMatrix reduced;
    std::vector<int> pivots;
    int rank = 0;
    std::vector<RowOp> ops;

    /// Applies the recorded operations to a right-hand side.
    std::vector<int> transform(std::span<const int> rhs) const;
    /// Applies the recorded operations to every column of a matrix.
    GFMatrix transform(const GFMatrix& m) const;
};

EchelonForm echelonize(GFMatrix m);

/// Particular solution with free variables set to zero, or nullopt when
/// the system is inconsistent.
std::optional<std::vector<int>> solve(const EchelonForm& ech, std::span<const int> rhs);

}  // namespace stmm
