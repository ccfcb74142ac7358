#pragma once

// Recursive interpretation of exact schemes: call classification, the
// asymptotic factor gamma, operation counts, baselines and the catalog.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "stmm/scheme.hpp"

namespace stmm {

enum class Criterion { none, uv, wdiag };

std::string to_string(Criterion c);
Criterion parse_criterion(std::string_view s);

struct RecursionProfile {
    FormatPair format;
    int k = 0;  // block partition size (the base n)
    int r = 0;
    RecursionCounts q;
    Criterion criterion = Criterion::none;
};

/// Each term is read as one block product of the k x k partition. A side is
/// structured when its support lies in diagonal blocks (a g side always is).
/// For transpose products the criterion decides which terms are A_i A_i^T
/// style calls: uv requires u == v, wdiag requires w to touch only diagonal
/// outputs.
RecursionProfile classify_terms(const ExactScheme& s, Criterion criterion);

struct AnalysisConfig {
    double omega = 2.807354922057604;  // log2 7

    static AnalysisConfig strassen() { return {}; }
    bool omega_is_log2_7() const;
    /// k^omega as an exact integer when it is one (integral omega, or
    /// omega = log2 7 with k a power of two).
    std::optional<mpz_class> exact_power(int k) const;
};

struct GammaValue {
    double value = 1;
    std::optional<mpq_class> exact;
};

using GammaRegistry = std::map<std::string, GammaValue>;

class MissingAuxiliary : public std::runtime_error {
public:
    explicit MissingAuxiliary(const std::string& fmt)
        : std::runtime_error("no gamma known for auxiliary format " + fmt), format(fmt) {}
    std::string format;
};

/// Formats of the left-only and right-only structured sub-calls.
std::pair<FormatPair, FormatPair> auxiliary_formats(FormatPair fmt);

/// gamma = (r - q_ab - q_ag (1 - g_ag) - q_gb (1 - g_gb)) / (k^omega - q_ab).
/// gg always counts as 1. Throws MissingAuxiliary, or std::domain_error when
/// k^omega <= q_ab.
GammaValue gamma(const RecursionProfile& p, const AnalysisConfig& cfg, const GammaRegistry& aux = {});

/// Operation count of the pure recursion M(n) = q M(n/k) + (r - q) (n/k)^omega,
/// M(1) = 1, in closed form. Throws std::invalid_argument if n is not a
/// power of k.
double closed_form_M(int r, int q_ab, int k, double omega, long long n);

/// Block-columnwise baseline: gamma_ug(k) = (k^2 (k-1)/2) / (k^omega - k^2).
GammaValue baseline_gamma_ug(int k, const AnalysisConfig& cfg);
/// Reference point (34 - 10) / (4^omega - 10).
GammaValue eca_gamma(const AnalysisConfig& cfg);
/// Previously published factors for the 14 structured formats, for
/// omega = log2 7 and omega = 3 only. Throws std::invalid_argument otherwise.
double baseline_gamma(FormatPair fmt, const AnalysisConfig& cfg);

struct CatalogCandidate {
    FormatPair format;
    int n = 0;
    int rank = 0;
    Field domain = Field::Z;
    RecursionCounts q;
    Criterion criterion = Criterion::none;
    std::size_t nonzeros = 0;
    mpz_class max_den = 1;
    std::string source;
};

/// Non-dominated candidates (higher counts are better). A Q candidate is
/// dropped when some Z candidate has counts at least as high everywhere;
/// identical profiles keep the preferred one. Result ordered by preference:
/// Z first, then smaller denominators, then fewer nonzeros.
std::vector<CatalogCandidate> pareto_select(const std::vector<CatalogCandidate>& cands);

struct CatalogRow {
    FormatPair format;
    std::optional<CatalogCandidate> best;
    std::string via;  // w-format whose scheme supplies a k-format row
    GammaValue gamma;
    std::vector<std::string> missing;  // auxiliaries bounded by gamma = 1
};

/// Per-format minimum gamma over all candidates, with auxiliary factors
/// resolved by fixed-point iteration. Rows follow catalog order, restricted
/// to formats that have some value.
std::vector<CatalogRow> catalog_gammas(const std::vector<CatalogCandidate>& cands, const AnalysisConfig& cfg);

}  // namespace stmm
