#include "stmm/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace stmm {

namespace {

// Table order: 15 base formats followed by the five w variants.
constexpr std::array<std::string_view, 20> canonical_codes = {
    "gg", "ug", "sg", "kg", "gt", "ut", "st", "kt", "uu", "us",
    "uk", "sk", "ul", "ss", "kk", "wg", "wt", "uw", "sw", "ww"};

bool is_canonical_code(std::string_view code) {
    return std::find(canonical_codes.begin(), canonical_codes.end(), code) != canonical_codes.end();
}

StructureTag transpose_tag(StructureTag t) {
    switch (t) {
        case StructureTag::u: return StructureTag::l;
        case StructureTag::l: return StructureTag::u;
        default: return t;  // k^T = -k and w^T is again skew plus diagonal
    }
}

StructureTag reverse_tag(StructureTag t) {
    return transpose_tag(t);  // J A J swaps upper and lower, preserves s, k, w, g
}

}  // namespace

char tag_char(StructureTag tag) {
    static constexpr char chars[] = {'g', 'u', 'l', 's', 'k', 'w', 't'};
    return chars[static_cast<int>(tag)];
}

StructureTag parse_tag(char c) {
    switch (c) {
        case 'g': return StructureTag::g;
        case 'u': return StructureTag::u;
        case 'l': return StructureTag::l;
        case 's': return StructureTag::s;
        case 'k': return StructureTag::k;
        case 'w': return StructureTag::w;
        case 't': return StructureTag::t;
        default: throw std::invalid_argument(std::string("unknown structure tag '") + c + "'");
    }
}

std::string FormatPair::code() const {
    return {tag_char(a), tag_char(b)};
}

FormatPair parse_format(std::string_view code) {
    if (code.size() != 2)
        throw std::invalid_argument("format code must have two letters: '" + std::string(code) + "'");
    FormatPair f{parse_tag(code[0]), parse_tag(code[1]), false};
    if (f.a == StructureTag::t)
        throw std::invalid_argument("t is only legal as the right tag");
    f.canonical = is_canonical_code(f.code());
    return f;
}

NormalizedFormat normalize_format(FormatPair fmt) {
    for (int transposed = 0; transposed < 2; ++transposed) {
        if (transposed && fmt.b == StructureTag::t)
            break;
        FormatPair f = transposed ? FormatPair{transpose_tag(fmt.b), transpose_tag(fmt.a)} : fmt;
        for (int reversed = 0; reversed < 2; ++reversed) {
            FormatPair g = reversed ? FormatPair{reverse_tag(f.a), reverse_tag(f.b)} : f;
            if (is_canonical_code(g.code())) {
                g.canonical = true;
                return {g, transposed != 0, reversed != 0};
            }
        }
    }
    throw std::invalid_argument("format '" + fmt.code() + "' has no canonical representative");
}

std::vector<FormatEntry> enumerate_formats() {
    std::vector<FormatEntry> out;
    for (auto code : canonical_codes) {
        FormatEntry e;
        e.pair = parse_format(code);
        e.structured = code != "gg";
        out.push_back(e);
    }
    static constexpr std::string_view tags = "gulskw";
    static constexpr std::string_view rights = "gulskwt";
    for (char a : tags) {
        for (char b : rights) {
            const std::string code{a, b};
            if (is_canonical_code(code))
                continue;
            try {
                const auto norm = normalize_format(parse_format(code));
                for (auto& e : out)
                    if (e.pair == norm.canonical)
                        e.reduced.push_back(code);
            } catch (const std::invalid_argument&) {
                // k/w mixtures have no representative
            }
        }
    }
    return out;
}

IndexMap free_index_map(StructureTag tag, int n) {
    if (tag == StructureTag::t)
        throw std::invalid_argument("t has no index map of its own");
    if (n < 2 || n > 8)
        throw std::invalid_argument("n must be in 2..8, got " + std::to_string(n));
    IndexMap m;
    m.tag = tag;
    m.n = n;
    m.cells.assign(static_cast<std::size_t>(n) * n, CellRef{});
    auto keep = [&](int i, int j) {
        switch (tag) {
            case StructureTag::g: return true;
            case StructureTag::u: return i <= j;
            case StructureTag::l: return i >= j;
            case StructureTag::s:
            case StructureTag::w: return i <= j;
            case StructureTag::k: return i < j;
            default: return false;
        }
    };
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (!keep(i, j))
                continue;
            m.cells[i * n + j] = {m.free_count(), 1};
            m.free_cells.push_back({i, j});
        }
    }
    if (tag == StructureTag::s || tag == StructureTag::k || tag == StructureTag::w) {
        const int sign = tag == StructureTag::s ? 1 : -1;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                m.cells[j * n + i] = {m.cells[i * n + j].index, sign};
    }
    return m;
}

std::vector<std::array<int, 2>> output_cells(FormatPair fmt, int n) {
    std::vector<std::array<int, 2>> out;
    for (int i = 0; i < n; ++i)
        for (int j = fmt.is_transpose() ? i : 0; j < n; ++j)
            out.push_back({i, j});
    return out;
}

Tensor3::Tensor3(std::array<int, 3> d) : dims(d) {
    coeffs.assign(static_cast<std::size_t>(d[0]) * d[1] * d[2], 0);
}

Tensor3 Tensor3::reduce_mod(int p) const {
    Tensor3 r = *this;
    for (auto& c : r.coeffs)
        c = ((c % p) + p) % p;
    return r;
}

std::size_t nnz(const Tensor3& t) {
    return static_cast<std::size_t>(
        std::count_if(t.coeffs.begin(), t.coeffs.end(), [](std::int64_t c) { return c != 0; }));
}

std::array<int, 3> tensor_dims(FormatPair fmt, int n) {
    const int d1 = free_index_map(fmt.a, n).free_count();
    if (fmt.is_transpose())
        return {d1, d1, n * (n + 1) / 2};
    return {d1, free_index_map(fmt.b, n).free_count(), n * n};
}

Tensor3 build_tensor(FormatPair fmt, int n) {
    if (!is_canonical_code(fmt.code()))
        throw std::invalid_argument("format '" + fmt.code() + "' is not canonical; normalize it first");
    const IndexMap left = free_index_map(fmt.a, n);
    const auto outs = output_cells(fmt, n);

    if (fmt.is_transpose()) {
        // c_{kl} = sum_m A_{km} A_{lm}, k <= l; the right operand indexes A.
        Tensor3 t({left.free_count(), left.free_count(), static_cast<int>(outs.size())});
        for (std::size_t o = 0; o < outs.size(); ++o) {
            const auto [k, l] = outs[o];
            for (int m = 0; m < n; ++m) {
                const CellRef& x = left.at(k, m);
                const CellRef& y = left.at(l, m);
                if (x.index < 0 || y.index < 0)
                    continue;
                t.at(x.index, y.index, static_cast<int>(o)) += x.sign * y.sign;
            }
        }
        t.format = fmt;
        t.n = n;
        return t;
    }

    const IndexMap right = free_index_map(fmt.b, n);
    Tensor3 t({left.free_count(), right.free_count(), n * n});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int m = 0; m < n; ++m) {
                const CellRef& x = left.at(i, m);
                const CellRef& y = right.at(m, j);
                if (x.index < 0 || y.index < 0)
                    continue;
                t.at(x.index, y.index, i * n + j) += x.sign * y.sign;
            }
        }
    }
    t.format = fmt;
    t.n = n;
    return t;
}

CornerZeroed build_corner_zeroed(FormatPair fmt, int n) {
    if (!fmt.is_transpose())
        throw std::invalid_argument("corner zeroing applies to transpose products only, got " + fmt.code());
    CornerZeroed out;
    out.reduced = build_tensor(fmt, n);
    const IndexMap left = free_index_map(fmt.a, n);
    const auto outs = output_cells(fmt, n);
    const int d1 = out.reduced.dims[0];
    const int d3 = out.reduced.dims[2];

    for (int corner : {0, n - 1}) {
        const int o = static_cast<int>(std::find(outs.begin(), outs.end(), std::array<int, 2>{corner, corner}) -
                                       outs.begin());
        for (int i = 0; i < d1; ++i)
            for (int j = 0; j < d1; ++j)
                out.reduced.at(i, j, o) = 0;
        for (int m = 0; m < n; ++m) {
            const CellRef& x = left.at(corner, m);
            if (x.index < 0)
                continue;
            IntTerm term{std::vector<int>(d1, 0), std::vector<int>(d1, 0), std::vector<int>(d3, 0)};
            term.u[x.index] = 1;
            term.v[x.index] = 1;
            term.w[o] = x.sign * x.sign;
            out.completion.push_back(std::move(term));
        }
    }
    return out;
}

}  // namespace stmm
