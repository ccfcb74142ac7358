#include "stmm/gf.hpp"

#include <algorithm>
#include <utility>

namespace stmm {

namespace {

void require_field(int p) {
    if (p != 2 && p != 3)
        throw ContractViolation("field characteristic must be 2 or 3, got " + std::to_string(p));
}

void require_matched(const PackedVec& x, const PackedVec& y) {
    if (x.p != y.p || x.len != y.len)
        throw ContractViolation("packed vector mismatch: p " + std::to_string(x.p) + "/" +
                                std::to_string(y.p) + ", len " + std::to_string(x.len) + "/" +
                                std::to_string(y.len));
}

}  // namespace

PackedVec::PackedVec(int p_, int len_) {
    require_field(p_);
    if (len_ < 0 || len_ > 64)
        throw ContractViolation("packed vector length must be in 0..64");
    p = static_cast<std::uint8_t>(p_);
    len = static_cast<std::uint8_t>(len_);
}

PackedVec PackedVec::from_values(int p, std::span<const int> values) {
    PackedVec r(p, static_cast<int>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i)
        r.set(static_cast<int>(i), values[i]);
    return r;
}

PackedVec PackedVec::unit(int p, int len, int index, int c) {
    PackedVec r(p, len);
    r.set(index, c);
    return r;
}

PackedVec PackedVec::from_f2(int len, F2::Vec v) {
    PackedVec r(2, len);
    r.low = v & low_mask(len);
    return r;
}

PackedVec PackedVec::from_f3(int len, F3::Vec v) {
    PackedVec r(3, len);
    r.low = v.lo & low_mask(len);
    r.high = v.hi & low_mask(len);
    return r;
}

int PackedVec::get(int i) const {
    if (i < 0 || i >= len)
        throw ContractViolation("packed vector index out of range");
    return p == 2 ? F2::get(low, i) : F3::get(as_f3(), i);
}

void PackedVec::set(int i, int v) {
    if (i < 0 || i >= len)
        throw ContractViolation("packed vector index out of range");
    if (p == 2) {
        F2::set(low, i, mod_p(v, 2));
    } else {
        F3::Vec t = as_f3();
        F3::set(t, i, v);
        low = t.lo;
        high = t.hi;
    }
}

bool PackedVec::valid() const {
    if (p != 2 && p != 3)
        return false;
    const u64 outside = ~low_mask(len);
    if ((low | high) & outside)
        return false;
    return p == 2 ? high == 0 : (low & high) == 0;
}

std::vector<int> PackedVec::values() const {
    std::vector<int> out(len);
    for (int i = 0; i < len; ++i)
        out[i] = get(i);
    return out;
}

PackedVec vec_add(const PackedVec& x, const PackedVec& y) {
    require_matched(x, y);
    return x.p == 2 ? PackedVec::from_f2(x.len, F2::add(x.low, y.low))
                    : PackedVec::from_f3(x.len, F3::add(x.as_f3(), y.as_f3()));
}

PackedVec vec_sub(const PackedVec& x, const PackedVec& y) {
    return vec_add(x, vec_neg(y));
}

PackedVec vec_neg(const PackedVec& x) {
    return x.p == 2 ? x : PackedVec::from_f3(x.len, F3::neg(x.as_f3()));
}

PackedVec vec_scale(const PackedVec& x, int c) {
    return x.p == 2 ? PackedVec::from_f2(x.len, F2::scale(x.low, c))
                    : PackedVec::from_f3(x.len, F3::scale(x.as_f3(), c));
}

int vec_dot(const PackedVec& x, const PackedVec& y) {
    require_matched(x, y);
    return x.p == 2 ? F2::dot(x.low, y.low) : F3::dot(x.as_f3(), y.as_f3());
}

// ---------------------------------------------------------------------------

GFMatrix::GFMatrix(int p, int n_rows, int n_cols)
    : p_(p), n_rows_(n_rows), n_cols_(n_cols), words_((n_cols + 63) / 64) {
    require_field(p);
    if (n_rows < 0 || n_cols < 0)
        throw ContractViolation("negative matrix dimension");
    lo_.assign(static_cast<std::size_t>(n_rows_) * words_, 0);
    if (p_ == 3)
        hi_.assign(lo_.size(), 0);
}

GFMatrix GFMatrix::from_rows(int p, int n_cols, std::span<const PackedVec> rows) {
    if (n_cols > 64)
        throw ContractViolation("from_rows builds single-block matrices only");
    GFMatrix m(p, static_cast<int>(rows.size()), n_cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].p != p || rows[r].len != n_cols)
            throw ContractViolation("row " + std::to_string(r) + " does not match matrix shape");
        if (m.words_ == 0)
            continue;
        m.lo_[r * m.words_] = rows[r].low;
        if (p == 3)
            m.hi_[r * m.words_] = rows[r].high;
    }
    return m;
}

int GFMatrix::get(int r, int c) const {
    const std::size_t w = static_cast<std::size_t>(r) * words_ + c / 64;
    const int b = c % 64;
    const int l = static_cast<int>((lo_[w] >> b) & 1);
    return p_ == 2 ? l : l + 2 * static_cast<int>((hi_[w] >> b) & 1);
}

void GFMatrix::set(int r, int c, int v) {
    v = mod_p(v, p_);
    const std::size_t w = static_cast<std::size_t>(r) * words_ + c / 64;
    const u64 bit = u64{1} << (c % 64);
    lo_[w] = (lo_[w] & ~bit) | (v == 1 ? bit : 0);
    if (p_ == 3)
        hi_[w] = (hi_[w] & ~bit) | (v == 2 ? bit : 0);
}

PackedVec GFMatrix::block(int r, int b) const {
    const int len = std::min(64, n_cols_ - 64 * b);
    const std::size_t w = static_cast<std::size_t>(r) * words_ + b;
    PackedVec out(p_, len);
    out.low = lo_[w];
    if (p_ == 3)
        out.high = hi_[w];
    return out;
}

void GFMatrix::swap_rows(int a, int b) {
    if (a == b)
        return;
    for (int w = 0; w < words_; ++w) {
        std::swap(lo_[static_cast<std::size_t>(a) * words_ + w], lo_[static_cast<std::size_t>(b) * words_ + w]);
        if (p_ == 3)
            std::swap(hi_[static_cast<std::size_t>(a) * words_ + w], hi_[static_cast<std::size_t>(b) * words_ + w]);
    }
}

void GFMatrix::scale_row(int r, int c) {
    c = mod_p(c, p_);
    u64* lo = &lo_[static_cast<std::size_t>(r) * words_];
    if (c == 0) {
        std::fill(lo, lo + words_, 0);
        if (p_ == 3)
            std::fill(&hi_[static_cast<std::size_t>(r) * words_], &hi_[static_cast<std::size_t>(r) * words_] + words_, 0);
        return;
    }
    if (p_ == 3 && c == 2) {
        u64* hi = &hi_[static_cast<std::size_t>(r) * words_];
        for (int w = 0; w < words_; ++w)
            std::swap(lo[w], hi[w]);
    }
}

void GFMatrix::add_row_multiple(int target, int source, int c, int first_word) {
    c = mod_p(c, p_);
    if (c == 0)
        return;
    u64* tl = &lo_[static_cast<std::size_t>(target) * words_];
    const u64* sl = &lo_[static_cast<std::size_t>(source) * words_];
    if (p_ == 2) {
        for (int w = first_word; w < words_; ++w)
            tl[w] ^= sl[w];
        return;
    }
    u64* th = &hi_[static_cast<std::size_t>(target) * words_];
    const u64* sh = &hi_[static_cast<std::size_t>(source) * words_];
    for (int w = first_word; w < words_; ++w) {
        F3::Vec s{sl[w], sh[w]};
        if (c == 2)
            s = F3::neg(s);
        const F3::Vec r = F3::add({tl[w], th[w]}, s);
        tl[w] = r.lo;
        th[w] = r.hi;
    }
}

std::vector<int> GFMatrix::multiply(std::span<const int> x) const {
    if (static_cast<int>(x.size()) != n_cols_)
        throw ContractViolation("matrix-vector length mismatch");
    std::vector<int> out(n_rows_, 0);
    for (int r = 0; r < n_rows_; ++r) {
        long long acc = 0;
        for (int c = 0; c < n_cols_; ++c)
            acc += static_cast<long long>(get(r, c)) * mod_p(x[c], p_);
        out[r] = mod_p(acc, p_);
    }
    return out;
}

// ---------------------------------------------------------------------------

EchelonForm echelonize(GFMatrix m) {
    EchelonForm ech;
    const int p = m.p();
    int rank = 0;
    for (int col = 0; col < m.n_cols() && rank < m.n_rows(); ++col) {
        int pivot = -1;
        for (int r = rank; r < m.n_rows(); ++r) {
            if (m.get(r, col) != 0) {
                pivot = r;
                break;
            }
        }
        if (pivot < 0)
            continue;
        if (pivot != rank) {
            m.swap_rows(pivot, rank);
            ech.ops.push_back({RowOp::Kind::swap, rank, pivot, 0});
        }
        const int lead = m.get(rank, col);
        if (lead != 1) {
            // Over F3 the only non-unit lead is 2, its own inverse.
            m.scale_row(rank, lead);
            ech.ops.push_back({RowOp::Kind::scale, rank, rank, lead});
        }
        const int first_word = col / 64;
        for (int r = 0; r < m.n_rows(); ++r) {
            if (r == rank)
                continue;
            const int v = m.get(r, col);
            if (v == 0)
                continue;
            m.add_row_multiple(r, rank, p - v, first_word);
            ech.ops.push_back({RowOp::Kind::add, r, rank, p - v});
        }
        ech.pivots.push_back(col);
        ++rank;
    }
    ech.rank = rank;
    ech.reduced = std::move(m);
    return ech;
}

std::vector<int> EchelonForm::transform(std::span<const int> rhs) const {
    const int p = reduced.p();
    std::vector<int> b(rhs.begin(), rhs.end());
    for (auto& x : b)
        x = mod_p(x, p);
    for (const RowOp& op : ops) {
        switch (op.kind) {
            case RowOp::Kind::swap:
                std::swap(b[op.target], b[op.source]);
                break;
            case RowOp::Kind::scale:
                b[op.target] = (b[op.target] * op.factor) % p;
                break;
            case RowOp::Kind::add:
                b[op.target] = (b[op.target] + op.factor * b[op.source]) % p;
                break;
        }
    }
    return b;
}

GFMatrix EchelonForm::transform(const GFMatrix& m) const {
    GFMatrix out = m;
    for (const RowOp& op : ops) {
        switch (op.kind) {
            case RowOp::Kind::swap:
                out.swap_rows(op.target, op.source);
                break;
            case RowOp::Kind::scale:
                out.scale_row(op.target, op.factor);
                break;
            case RowOp::Kind::add:
                out.add_row_multiple(op.target, op.source, op.factor);
                break;
        }
    }
    return out;
}

std::optional<std::vector<int>> solve(const EchelonForm& ech, std::span<const int> rhs) {
    if (static_cast<int>(rhs.size()) != ech.reduced.n_rows())
        throw ContractViolation("rhs length does not match the system");
    const std::vector<int> b = ech.transform(rhs);
    for (int r = ech.rank; r < ech.reduced.n_rows(); ++r)
        if (b[r] != 0)
            return std::nullopt;
    std::vector<int> x(ech.reduced.n_cols(), 0);
    for (int i = 0; i < ech.rank; ++i)
        x[ech.pivots[i]] = b[i];
    return x;
}

}  // namespace stmm
