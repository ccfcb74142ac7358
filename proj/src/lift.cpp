#include "stmm/lift.hpp"

namespace stmm {

namespace {

struct Layout {
    std::array<int, 3> dims;
    int per_term;

    explicit Layout(std::array<int, 3> d) : dims(d), per_term(d[0] + d[1] + d[2]) {}
    int col(int q, int axis, int idx) const {
        return q * per_term + (axis > 0 ? dims[0] : 0) + (axis > 1 ? dims[1] : 0) + idx;
    }
    int row(int i, int j, int k) const { return (i * dims[1] + j) * dims[2] + k; }
};

using Coeffs = std::vector<std::array<std::vector<mpz_class>, 3>>;

std::vector<mpz_class> evaluate(const Coeffs& x, std::array<int, 3> dims) {
    std::vector<mpz_class> f(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0);
    mpz_class uv;
    for (const auto& term : x) {
        const auto& [u, v, w] = term;
        for (int i = 0; i < dims[0]; ++i) {
            if (sgn(u[i]) == 0)
                continue;
            for (int j = 0; j < dims[1]; ++j) {
                if (sgn(v[j]) == 0)
                    continue;
                uv = u[i] * v[j];
                for (int k = 0; k < dims[2]; ++k)
                    if (sgn(w[k]) != 0)
                        f[(static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k] += uv * w[k];
            }
        }
    }
    return f;
}

bool residual_divisible(const std::vector<mpz_class>& f, const Tensor3& t, const mpz_class& m) {
    for (std::size_t e = 0; e < f.size(); ++e) {
        mpz_class d = mpz_class(static_cast<long>(t.coeffs[e])) - f[e];
        if (!mpz_divisible_p(d.get_mpz_t(), m.get_mpz_t()))
            return false;
    }
    return true;
}

}  // namespace

std::optional<PadicScheme> hensel_lift(const Scheme& s, const Tensor3& t, const LiftParams& params) {
    if (params.steps < 1)
        throw ContractViolation("lifting needs at least one step");
    if (!verify(s, t))
        throw ContractViolation("hensel_lift: scheme does not decompose the tensor mod p");
    const int p = s.p;
    const Layout lay(s.dims);
    const int r = s.rank();

    // Symmetric representatives: over F3 the residue 2 starts as -1.
    Coeffs x(r);
    for (int q = 0; q < r; ++q) {
        const PackedVec* f[3] = {&s.terms[q].u, &s.terms[q].v, &s.terms[q].w};
        for (int a = 0; a < 3; ++a)
            for (int v : f[a]->values())
                x[q][a].emplace_back(v == 2 ? -1 : v);
    }

    // Jacobian of (i,j,k) -> sum_q u_qi v_qj w_qk at the base point, mod p.
    GFMatrix jac(p, s.dims[0] * s.dims[1] * s.dims[2], r * lay.per_term);
    for (int q = 0; q < r; ++q) {
        const auto u = s.terms[q].u.values(), v = s.terms[q].v.values(), w = s.terms[q].w.values();
        for (int i = 0; i < s.dims[0]; ++i)
            for (int j = 0; j < s.dims[1]; ++j)
                for (int k = 0; k < s.dims[2]; ++k) {
                    const int row = lay.row(i, j, k);
                    if (v[j] && w[k])
                        jac.set(row, lay.col(q, 0, i), v[j] * w[k]);
                    if (u[i] && w[k])
                        jac.set(row, lay.col(q, 1, j), u[i] * w[k]);
                    if (u[i] && v[j])
                        jac.set(row, lay.col(q, 2, k), u[i] * v[j]);
                }
    }
    const EchelonForm ech = echelonize(std::move(jac));

    PadicScheme out;
    out.dims = s.dims;
    out.p = p;
    out.steps = params.steps;
    mpz_class pj = p;  // p^j
    out.residual_checks.push_back(pj);

    std::vector<int> rhs(ech.reduced.n_rows());
    const mpz_class pz = p;
    for (int j = 1; j < params.steps; ++j) {
        const auto f = evaluate(x, s.dims);
        for (std::size_t e = 0; e < f.size(); ++e) {
            mpz_class d = mpz_class(static_cast<long>(t.coeffs[e])) - f[e];
            if (!mpz_divisible_p(d.get_mpz_t(), pj.get_mpz_t()))
                throw ContractViolation("lifting residual lost divisibility at step " + std::to_string(j));
            d /= pj;
            mpz_class m;
            mpz_fdiv_r(m.get_mpz_t(), d.get_mpz_t(), pz.get_mpz_t());
            rhs[e] = static_cast<int>(m.get_si());
        }
        const auto delta = solve(ech, rhs);
        if (!delta)
            return std::nullopt;
        for (int q = 0; q < r; ++q)
            for (int a = 0; a < 3; ++a)
                for (int idx = 0; idx < s.dims[a]; ++idx)
                    if (int d = (*delta)[lay.col(q, a, idx)])
                        x[q][a][idx] += pj * d;
        pj *= p;
        if (!residual_divisible(evaluate(x, s.dims), t, pj))
            throw ContractViolation("lifting residual invariant failed at step " + std::to_string(j));
        out.residual_checks.push_back(pj);
    }

    out.modulus = pj;
    for (auto& term : x)
        for (auto& vec : term)
            for (auto& c : vec)
                mpz_fdiv_r(c.get_mpz_t(), c.get_mpz_t(), pj.get_mpz_t());
    out.terms = std::move(x);
    return out;
}

std::optional<mpq_class> rational_reconstruct(const mpz_class& residue, const mpz_class& modulus) {
    if (residue < 0 || residue >= modulus)
        throw ContractViolation("rational_reconstruct: residue outside [0, modulus)");
    mpz_class bound;
    mpz_class half = modulus / 2;
    mpz_sqrt(bound.get_mpz_t(), half.get_mpz_t());

    // Half-extended Euclid on (modulus, residue), tracking the cofactor of residue.
    mpz_class r0 = modulus, r1 = residue, t0 = 0, t1 = 1, q, tmp;
    while (r1 > bound) {
        q = r0 / r1;
        tmp = r0 - q * r1;
        r0 = r1;
        r1 = tmp;
        tmp = t0 - q * t1;
        t0 = t1;
        t1 = tmp;
    }
    if (abs(t1) > bound || t1 == 0)
        return std::nullopt;
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), t1.get_mpz_t(), modulus.get_mpz_t());
    if (g != 1)
        return std::nullopt;
    mpq_class out(r1, t1);
    out.canonicalize();
    return out;
}

std::string to_string(LiftStatus s) {
    switch (s) {
        case LiftStatus::Z: return "Z";
        case LiftStatus::Q: return "Q";
        case LiftStatus::NotLiftable: return "NotLiftable";
        case LiftStatus::ReconstructionFailed: return "ReconstructionFailed";
    }
    return "?";
}

LiftResult lift_to_exact(const Scheme& s, const Tensor3& t, const LiftParams& params) {
    LiftResult res;
    res.padic = hensel_lift(s, t, params);
    if (!res.padic) {
        res.status = LiftStatus::NotLiftable;
        res.detail = "linearized system inconsistent";
        return res;
    }
    ExactScheme e;
    e.field = Field::Q;
    e.dims = s.dims;
    e.format = s.format;
    e.n = s.n;
    e.source_field = s.p == 2 ? "F2" : "F3";
    e.lift_steps = params.steps;
    for (std::size_t q = 0; q < res.padic->terms.size(); ++q) {
        ExactTerm term;
        std::vector<mpq_class>* dst[3] = {&term.u, &term.v, &term.w};
        for (int a = 0; a < 3; ++a)
            for (const auto& c : res.padic->terms[q][a]) {
                auto x = rational_reconstruct(c, res.padic->modulus);
                if (!x) {
                    res.status = LiftStatus::ReconstructionFailed;
                    res.detail = "no bounded rational for " + c.get_str() + " in term " + std::to_string(q + 1);
                    return res;
                }
                dst[a]->push_back(*x);
            }
        e.terms.push_back(std::move(term));
    }
    if (!verify(e, t)) {
        res.status = LiftStatus::ReconstructionFailed;
        res.detail = "reconstructed scheme does not verify exactly";
        return res;
    }
    e.settle_domain();
    res.status = e.field == Field::Z ? LiftStatus::Z : LiftStatus::Q;
    res.scheme = std::move(e);
    return res;
}

}  // namespace stmm
