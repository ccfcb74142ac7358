#pragma once

// Structured multiplication formats and their target tensors.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace stmm {

/// g general, u upper, l lower, s symmetric, k skew, w skew plus diagonal,
/// t right operand is the transpose of the left one.
enum class StructureTag : std::uint8_t { g, u, l, s, k, w, t };

char tag_char(StructureTag tag);
StructureTag parse_tag(char c);

struct FormatPair {
    StructureTag a = StructureTag::g;
    StructureTag b = StructureTag::g;
    bool canonical = true;

    std::string code() const;
    bool is_transpose() const { return b == StructureTag::t; }
    friend bool operator==(const FormatPair& x, const FormatPair& y) { return x.a == y.a && x.b == y.b; }
};

/// Parses a two-letter code; throws std::invalid_argument on unknown codes
/// or a left-hand t.
FormatPair parse_format(std::string_view code);

/// How a non-canonical pair reaches its canonical representative:
/// optionally transpose the product (C^T = B^T A^T, swapping the input
/// axes), then optionally conjugate all matrices by the reversal
/// permutation (row and column order reversed, u <-> l).
struct NormalizedFormat {
    FormatPair canonical;
    bool transposed = false;
    bool reversed = false;
};

/// Throws std::invalid_argument for pairs with no canonical representative
/// (k mixed with w).
NormalizedFormat normalize_format(FormatPair fmt);

struct FormatEntry {
    FormatPair pair;
    bool structured = true;             // false only for gg
    std::vector<std::string> reduced;   // non-canonical codes mapping here
};

/// The 20 canonical formats in catalog order.
std::vector<FormatEntry> enumerate_formats();

struct CellRef {
    int index = -1;  // -1 marks a structural zero
    int sign = 0;
};

/// Row-major enumeration of the free entries of an n x n structured matrix.
struct IndexMap {
    StructureTag tag = StructureTag::g;
    int n = 0;
    std::vector<std::array<int, 2>> free_cells;
    std::vector<CellRef> cells;  // n*n, row-major

    int free_count() const { return static_cast<int>(free_cells.size()); }
    const CellRef& at(int row, int col) const { return cells[row * n + col]; }
    bool is_diagonal(int free_index) const {
        return free_cells[free_index][0] == free_cells[free_index][1];
    }
};

IndexMap free_index_map(StructureTag tag, int n);

/// Output cell list for a format: all n^2 cells row-major, or the upper
/// triangle row-major for transpose products.
std::vector<std::array<int, 2>> output_cells(FormatPair fmt, int n);

/// Integer tensor T_ijk with c_k = sum_ij T_ijk a_i b_j.
struct Tensor3 {
    std::array<int, 3> dims{0, 0, 0};
    std::vector<std::int64_t> coeffs;
    FormatPair format;
    int n = 0;

    Tensor3() = default;
    Tensor3(std::array<int, 3> d);

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k;
    }
    std::int64_t at(int i, int j, int k) const { return coeffs[index(i, j, k)]; }
    std::int64_t& at(int i, int j, int k) { return coeffs[index(i, j, k)]; }

    /// Coefficients reduced into [0, p).
    Tensor3 reduce_mod(int p) const;

    friend bool operator==(const Tensor3& x, const Tensor3& y) {
        return x.dims == y.dims && x.coeffs == y.coeffs;
    }
};

std::size_t nnz(const Tensor3& t);

/// (d1, d2, d3) of build_tensor(fmt, n) without building it.
std::array<int, 3> tensor_dims(FormatPair fmt, int n);

/// Throws std::invalid_argument for non-canonical formats or n outside 2..8.
Tensor3 build_tensor(FormatPair fmt, int n);

/// Rank-1 term with small integer coefficients.
struct IntTerm {
    std::vector<int> u, v, w;
};

struct CornerZeroed {
    Tensor3 reduced;
    std::vector<IntTerm> completion;
};

/// Transpose-product tensor with the (0,0) and (n-1,n-1) outputs removed,
/// plus the pure recursive terms A(row,m) A(row,m)^T that restore them.
CornerZeroed build_corner_zeroed(FormatPair fmt, int n);

}  // namespace stmm
