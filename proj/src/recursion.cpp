#include "stmm/recursion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace stmm {

std::string to_string(Criterion c) {
    switch (c) {
        case Criterion::none: return "none";
        case Criterion::uv: return "uv";
        case Criterion::wdiag: return "wdiag";
    }
    return "?";
}

Criterion parse_criterion(std::string_view s) {
    if (s == "none") return Criterion::none;
    if (s == "uv") return Criterion::uv;
    if (s == "wdiag") return Criterion::wdiag;
    throw std::invalid_argument("criterion must be uv, wdiag or none, got '" + std::string(s) + "'");
}

namespace {

bool on_diagonal(const std::vector<mpq_class>& x, const IndexMap& map) {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (sgn(x[i]) != 0 && !map.is_diagonal(static_cast<int>(i)))
            return false;
    return true;
}

}  // namespace

RecursionProfile classify_terms(const ExactScheme& s, Criterion criterion) {
    const FormatPair fmt = s.format;
    RecursionProfile prof{fmt, s.n, s.rank(), {}, criterion};
    if (fmt.is_transpose() != (criterion != Criterion::none))
        throw std::invalid_argument(fmt.is_transpose() ? "transpose formats need criterion uv or wdiag"
                                                       : "criterion given for non-transpose format " + fmt.code());
    if (fmt.a == StructureTag::g && fmt.b == StructureTag::g)
        return prof;

    const IndexMap left = free_index_map(fmt.a, s.n);
    const bool left_general = fmt.a == StructureTag::g;
    auto q = RecursionCounts{};

    if (fmt.is_transpose()) {
        const auto outs = output_cells(fmt, s.n);
        for (const ExactTerm& t : s.terms) {
            bool call;
            if (criterion == Criterion::uv) {
                call = t.u == t.v;
            } else {
                call = true;
                for (std::size_t o = 0; o < t.w.size(); ++o)
                    if (sgn(t.w[o]) != 0 && outs[o][0] != outs[o][1])
                        call = false;
            }
            const bool su = left_general || on_diagonal(t.u, left);
            const bool sv = left_general || on_diagonal(t.v, left);
            if (call && (left_general || (su && sv)))
                ++q.q_ab;
            else if (call)
                ++q.q_gb;
            else if (!left_general && (su || sv))
                ++q.q_ag;
        }
        prof.q = q;
        return prof;
    }

    const bool right_general = fmt.b == StructureTag::g;
    const IndexMap right = free_index_map(fmt.b, s.n);
    for (const ExactTerm& t : s.terms) {
        const bool su = left_general || on_diagonal(t.u, left);
        const bool sv = right_general || on_diagonal(t.v, right);
        if (right_general) {
            q.q_ab += su;
        } else if (su && sv) {
            ++q.q_ab;
        } else if (su) {
            ++q.q_ag;
        } else if (sv) {
            ++q.q_gb;
        }
    }
    // When both one-sided call types are the same format up to symmetry
    // (ss: sg and gs ~ sg), they are reported together as left-structured.
    const auto [ag, gb] = auxiliary_formats(fmt);
    if (ag == gb) {
        q.q_ag += q.q_gb;
        q.q_gb = 0;
    }
    prof.q = q;
    return prof;
}

bool AnalysisConfig::omega_is_log2_7() const {
    return std::abs(omega - std::log2(7.0)) < 1e-12;
}

std::optional<mpz_class> AnalysisConfig::exact_power(int k) const {
    if (std::abs(omega - std::round(omega)) < 1e-12) {
        mpz_class out;
        mpz_ui_pow_ui(out.get_mpz_t(), static_cast<unsigned long>(k), static_cast<unsigned long>(std::lround(omega)));
        return out;
    }
    if (omega_is_log2_7() && k > 0 && (k & (k - 1)) == 0) {
        mpz_class out;
        mpz_ui_pow_ui(out.get_mpz_t(), 7, static_cast<unsigned long>(std::countr_zero(static_cast<unsigned>(k))));
        return out;
    }
    return std::nullopt;
}

std::pair<FormatPair, FormatPair> auxiliary_formats(FormatPair fmt) {
    auto canon = [](StructureTag a, StructureTag b) { return normalize_format(FormatPair{a, b, false}).canonical; };
    const FormatPair ag = canon(fmt.a, StructureTag::g);
    const FormatPair gb = fmt.is_transpose() ? parse_format("gt") : canon(StructureTag::g, fmt.b);
    return {ag, gb};
}

GammaValue gamma(const RecursionProfile& p, const AnalysisConfig& cfg, const GammaRegistry& aux) {
    const double kw = std::pow(static_cast<double>(p.k), cfg.omega);
    if (kw <= p.q.q_ab + 1e-12)
        throw std::domain_error("k^omega <= q_ab: the recursion does not converge");
    const auto [ag, gb] = auxiliary_formats(p.format);
    auto lookup = [&](FormatPair f, int count) -> GammaValue {
        if (count == 0)
            return {1, mpq_class(1)};
        if (f.code() == "gg")
            return {1, mpq_class(1)};
        auto it = aux.find(f.code());
        if (it == aux.end())
            throw MissingAuxiliary(f.code());
        return it->second;
    };
    const GammaValue g_ag = lookup(ag, p.q.q_ag);
    const GammaValue g_gb = lookup(gb, p.q.q_gb);

    GammaValue out;
    out.value = (p.r - p.q.q_ab - p.q.q_ag * (1 - g_ag.value) - p.q.q_gb * (1 - g_gb.value)) / (kw - p.q.q_ab);
    if (const auto kwx = cfg.exact_power(p.k); kwx && g_ag.exact && g_gb.exact) {
        mpq_class num = mpq_class(p.r - p.q.q_ab) - p.q.q_ag * (1 - *g_ag.exact) - p.q.q_gb * (1 - *g_gb.exact);
        mpq_class den = mpq_class(*kwx) - p.q.q_ab;
        out.exact = num / den;
        out.exact->canonicalize();
    }
    return out;
}

double closed_form_M(int r, int q_ab, int k, double omega, long long n) {
    int m = 0;
    long long x = 1;
    while (x < n) {
        x *= k;
        ++m;
    }
    if (x != n || n < 1)
        throw std::invalid_argument(std::to_string(n) + " is not a power of " + std::to_string(k));
    const double kw = std::pow(static_cast<double>(k), omega);
    if (std::abs(kw - q_ab) < 1e-12)
        throw std::domain_error("closed form undefined for k^omega == q_ab");
    const double qm = std::pow(static_cast<double>(q_ab), m);
    return qm + (r - q_ab) * (std::pow(kw, m) - qm) / (kw - q_ab);
}

GammaValue baseline_gamma_ug(int k, const AnalysisConfig& cfg) {
    const double kw = std::pow(static_cast<double>(k), cfg.omega);
    const int num2 = k * k * (k - 1);  // twice the numerator
    GammaValue out{num2 / 2.0 / (kw - k * k), std::nullopt};
    if (auto kwx = cfg.exact_power(k)) {
        out.exact = mpq_class(num2, 2) / (mpq_class(*kwx) - k * k);
        out.exact->canonicalize();
    }
    return out;
}

GammaValue eca_gamma(const AnalysisConfig& cfg) {
    GammaValue out{24.0 / (std::pow(4.0, cfg.omega) - 10), std::nullopt};
    if (auto kwx = cfg.exact_power(4)) {
        out.exact = mpq_class(24) / (mpq_class(*kwx) - 10);
        out.exact->canonicalize();
    }
    return out;
}

double baseline_gamma(FormatPair fmt, const AnalysisConfig& cfg) {
    struct Row {
        const char* code;
        double strassen, cubic;
    };
    static constexpr Row rows[] = {
        {"ug", 0.615, 0.444}, {"sg", 0.816, 0.5},   {"kg", 0.816, 0.5},   {"gt", 0.615, 0.444},
        {"ut", 0.306, 0.167}, {"st", 0.588, 0.333}, {"kt", 0.588, 0.5},   {"uu", 0.306, 0.167},
        {"us", 0.544, 0.333}, {"uk", 0.544, 0.333}, {"sk", 0.799, 0.5},   {"ul", 0.467, 0.333},
        {"ss", 0.799, 0.5},   {"kk", 0.799, 0.5},
    };
    const bool cubic = std::abs(cfg.omega - 3) < 1e-12;
    if (!cubic && !cfg.omega_is_log2_7())
        throw std::invalid_argument("baseline factors are tabulated for omega = log2 7 and omega = 3 only");
    for (const Row& r : rows)
        if (fmt.code() == r.code)
            return cubic ? r.cubic : r.strassen;
    throw std::invalid_argument("no baseline for format " + fmt.code());
}

namespace {

bool weakly_dominates(const RecursionCounts& a, const RecursionCounts& b) {
    return a.q_ab >= b.q_ab && a.q_ag >= b.q_ag && a.q_gb >= b.q_gb;
}

bool preferred(const CatalogCandidate& a, const CatalogCandidate& b) {
    if ((a.domain == Field::Z) != (b.domain == Field::Z))
        return a.domain == Field::Z;
    if (a.max_den != b.max_den)
        return a.max_den < b.max_den;
    return a.nonzeros < b.nonzeros;
}

}  // namespace

std::vector<CatalogCandidate> pareto_select(const std::vector<CatalogCandidate>& cands) {
    std::vector<CatalogCandidate> out;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const auto& c = cands[i];
        bool keep = true;
        for (std::size_t j = 0; j < cands.size() && keep; ++j) {
            if (i == j)
                continue;
            const auto& d = cands[j];
            const bool strictly = weakly_dominates(d.q, c.q) && !(d.q == c.q);
            if (strictly)
                keep = false;
            else if (d.q == c.q && (preferred(d, c) || (!preferred(c, d) && j < i)))
                keep = false;
            else if (c.domain == Field::Q && d.domain == Field::Z && weakly_dominates(d.q, c.q))
                keep = false;
        }
        if (keep)
            out.push_back(c);
    }
    std::stable_sort(out.begin(), out.end(), preferred);
    return out;
}

std::vector<CatalogRow> catalog_gammas(const std::vector<CatalogCandidate>& cands, const AnalysisConfig& cfg) {
    static const std::map<std::string, std::string> w_based = {
        {"kg", "wg"}, {"kt", "wt"}, {"uk", "uw"}, {"sk", "sw"}, {"kk", "ww"}};

    GammaRegistry reg;
    std::map<std::string, CatalogRow> rows;
    const auto formats = enumerate_formats();

    auto evaluate = [&](const CatalogCandidate& c, std::vector<std::string>& missing) {
        RecursionProfile p{c.format, c.n, c.rank, c.q, c.criterion};
        GammaRegistry local = reg;
        const auto [ag, gb] = auxiliary_formats(c.format);
        for (const auto& [f, count] : {std::pair{ag, c.q.q_ag}, std::pair{gb, c.q.q_gb}})
            if (count > 0 && f.code() != "gg" && !local.count(f.code())) {
                local[f.code()] = {1, mpq_class(1)};
                missing.push_back(f.code());
            }
        return gamma(p, cfg, local);
    };

    for (int iter = 0; iter < 1000; ++iter) {
        bool changed = false;
        for (const auto& fe : formats) {
            const std::string code = fe.pair.code();
            if (code == "gg")
                continue;
            std::optional<CatalogRow> best;
            for (const auto& c : cands) {
                if (!(c.format == fe.pair))
                    continue;
                std::vector<std::string> missing;
                GammaValue g;
                try {
                    g = evaluate(c, missing);
                } catch (const std::domain_error&) {
                    continue;
                }
                if (!best || g.value < best->gamma.value - 1e-15)
                    best = CatalogRow{fe.pair, c, "", g, missing};
            }
            if (auto it = w_based.find(code); it != w_based.end()) {
                if (auto wr = rows.find(it->second); wr != rows.end() && (!best || wr->second.gamma.value < best->gamma.value - 1e-15))
                    best = CatalogRow{fe.pair, wr->second.best, it->second, wr->second.gamma, wr->second.missing};
            }
            if (!best)
                continue;
            auto old = reg.find(code);
            const bool exact_changed = old != reg.end() && old->second.exact.has_value() != best->gamma.exact.has_value();
            if (old == reg.end() || std::abs(old->second.value - best->gamma.value) > 1e-12 || exact_changed ||
                rows[code].missing != best->missing)
                changed = true;
            reg[code] = best->gamma;
            rows[code] = *best;
        }
        if (!changed)
            break;
    }

    std::vector<CatalogRow> out;
    for (const auto& fe : formats)
        if (auto it = rows.find(fe.pair.code()); it != rows.end())
            out.push_back(it->second);
    return out;
}

}  // namespace stmm
