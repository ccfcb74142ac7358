#include "stmm/scheme.hpp"

#include <algorithm>
#include <stdexcept>

#include <openssl/evp.h>

namespace stmm {

void Scheme::add(Term t) {
    if (!t.has_zero_factor())
        terms.push_back(t);
}

Scheme naive_scheme(const Tensor3& t, int p) {
    Scheme s(p, t.dims);
    s.format = t.format;
    s.n = t.n;
    for (int i = 0; i < t.dims[0]; ++i)
        for (int j = 0; j < t.dims[1]; ++j)
            for (int k = 0; k < t.dims[2]; ++k) {
                const int c = mod_p(t.at(i, j, k), p);
                if (c == 0)
                    continue;
                s.add({PackedVec::unit(p, t.dims[0], i), PackedVec::unit(p, t.dims[1], j),
                       PackedVec::unit(p, t.dims[2], k, c)});
            }
    return s;
}

Tensor3 contract(const Scheme& s) {
    Tensor3 out(s.dims);
    out.format = s.format;
    out.n = s.n;
    for (const Term& t : s.terms) {
        const auto u = t.u.values(), v = t.v.values(), w = t.w.values();
        for (int i = 0; i < s.dims[0]; ++i) {
            if (!u[i])
                continue;
            for (int j = 0; j < s.dims[1]; ++j) {
                if (!v[j])
                    continue;
                const int uv = u[i] * v[j];
                for (int k = 0; k < s.dims[2]; ++k)
                    if (w[k])
                        out.at(i, j, k) += uv * w[k];
            }
        }
    }
    return out.reduce_mod(s.p);
}

bool verify(const Scheme& s, const Tensor3& t) {
    if (s.dims != t.dims)
        throw ContractViolation("verify: scheme and tensor dimensions differ");
    return contract(s) == t.reduce_mod(s.p);
}

std::string field_name(Field f) {
    switch (f) {
        case Field::F2: return "F2";
        case Field::F3: return "F3";
        case Field::Z: return "Z";
        case Field::Q: return "Q";
    }
    return "?";
}

Field parse_field(std::string_view name) {
    if (name == "F2") return Field::F2;
    if (name == "F3") return Field::F3;
    if (name == "Z") return Field::Z;
    if (name == "Q") return Field::Q;
    throw std::invalid_argument("unknown field '" + std::string(name) + "'");
}

void ExactScheme::settle_domain() {
    if (field == Field::F2 || field == Field::F3)
        return;
    for (const auto& t : terms)
        for (const auto* vec : {&t.u, &t.v, &t.w})
            for (const auto& x : *vec)
                if (x.get_den() != 1) {
                    field = Field::Q;
                    return;
                }
    field = Field::Z;
}

RationalTensor contract(const ExactScheme& s) {
    RationalTensor out;
    out.dims = s.dims;
    out.coeffs.assign(static_cast<std::size_t>(s.dims[0]) * s.dims[1] * s.dims[2], 0);
    mpq_class uv;
    for (const ExactTerm& t : s.terms) {
        for (int i = 0; i < s.dims[0]; ++i) {
            if (sgn(t.u[i]) == 0)
                continue;
            for (int j = 0; j < s.dims[1]; ++j) {
                if (sgn(t.v[j]) == 0)
                    continue;
                uv = t.u[i] * t.v[j];
                for (int k = 0; k < s.dims[2]; ++k)
                    if (sgn(t.w[k]) != 0)
                        out.at(i, j, k) += uv * t.w[k];
            }
        }
    }
    return out;
}

bool verify(const ExactScheme& s, const Tensor3& t) {
    if (s.dims != t.dims)
        throw ContractViolation("verify: scheme and tensor dimensions differ");
    const int p = field_characteristic(s.field);
    if (p != 0)
        return verify(reduce_mod(s, p), t);
    const RationalTensor c = contract(s);
    for (std::size_t i = 0; i < c.coeffs.size(); ++i)
        if (c.coeffs[i] != mpq_class(mpz_class(static_cast<long>(t.coeffs[i]))))
            return false;
    return true;
}

ExactScheme to_exact(const Scheme& s) {
    ExactScheme e;
    e.field = s.p == 2 ? Field::F2 : Field::F3;
    e.dims = s.dims;
    e.format = s.format;
    e.n = s.n;
    auto conv = [](const PackedVec& x) {
        std::vector<mpq_class> out;
        for (int v : x.values())
            out.emplace_back(v);
        return out;
    };
    for (const Term& t : s.terms)
        e.terms.push_back({conv(t.u), conv(t.v), conv(t.w)});
    return e;
}

Scheme reduce_mod(const ExactScheme& s, int p) {
    Scheme out(p, s.dims);
    out.format = s.format;
    out.n = s.n;
    const mpz_class pz = p;
    auto conv = [&](const std::vector<mpq_class>& x) {
        PackedVec r(p, static_cast<int>(x.size()));
        for (std::size_t i = 0; i < x.size(); ++i) {
            mpz_class num = x[i].get_num() % pz, den = x[i].get_den() % pz;
            if (den == 0)
                throw ContractViolation("coefficient " + x[i].get_str() + " has a denominator divisible by " +
                                        std::to_string(p));
            // den is 1 or 2 mod p, and both are self-inverse for p <= 3
            r.set(static_cast<int>(i), mod_p(num.get_si() * den.get_si(), p));
        }
        return r;
    };
    for (const ExactTerm& t : s.terms)
        out.add({conv(t.u), conv(t.v), conv(t.w)});
    return out;
}

std::size_t count_additions(const ExactScheme& s) {
    std::size_t total = 0;
    auto nz = [](const std::vector<mpq_class>& x) {
        return static_cast<std::size_t>(std::count_if(x.begin(), x.end(), [](const mpq_class& c) { return sgn(c) != 0; }));
    };
    for (const ExactTerm& t : s.terms) {
        const std::size_t nu = nz(t.u), nv = nz(t.v);
        total += nu ? nu - 1 : 0;
        total += nv ? nv - 1 : 0;
    }
    for (int k = 0; k < s.dims[2]; ++k) {
        std::size_t col = 0;
        for (const ExactTerm& t : s.terms)
            col += sgn(t.w[k]) != 0;
        total += col ? col - 1 : 0;
    }
    return total;
}

std::size_t count_nonzeros(const ExactScheme& s) {
    std::size_t total = 0;
    for (const ExactTerm& t : s.terms)
        for (const auto* vec : {&t.u, &t.v, &t.w})
            for (const auto& x : *vec)
                total += sgn(x) != 0;
    return total;
}

mpz_class max_denominator(const ExactScheme& s) {
    mpz_class best = 1;
    for (const ExactTerm& t : s.terms)
        for (const auto* vec : {&t.u, &t.v, &t.w})
            for (const auto& x : *vec)
                if (x.get_den() > best)
                    best = x.get_den();
    return best;
}

SchemeDigest canonical_hash(const Scheme& s) {
    std::vector<Term> terms = s.terms;
    if (s.p == 3) {
        for (Term& t : terms) {
            int mu = 1, mv = 1;
            const F3::Vec u = F3::normalize(t.u.as_f3(), mu);
            const F3::Vec v = F3::normalize(t.v.as_f3(), mv);
            t.u = PackedVec::from_f3(t.u.len, u);
            t.v = PackedVec::from_f3(t.v.len, v);
            t.w = vec_scale(t.w, mu * mv);
        }
    }
    std::sort(terms.begin(), terms.end());

    std::vector<std::uint64_t> words{static_cast<std::uint64_t>(s.p), static_cast<std::uint64_t>(s.dims[0]),
                                     static_cast<std::uint64_t>(s.dims[1]), static_cast<std::uint64_t>(s.dims[2])};
    for (const Term& t : terms)
        for (const PackedVec* x : {&t.u, &t.v, &t.w}) {
            words.push_back(x->low);
            words.push_back(x->high);
        }

    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int md_len = 0;
    if (!EVP_Digest(words.data(), words.size() * sizeof(std::uint64_t), md, &md_len, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 failed");
    SchemeDigest d{};
    std::copy_n(md, d.size(), d.begin());
    return d;
}

std::string to_hex(const SchemeDigest& d) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (auto b : d) {
        out += digits[b >> 4];
        out += digits[b & 15];
    }
    return out;
}

}  // namespace stmm
