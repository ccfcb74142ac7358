#pragma once

// Hensel lifting of F_p schemes to p-adic approximations and rational
// reconstruction of the result.

#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "stmm/scheme.hpp"

namespace stmm {

struct LiftParams {
    int steps = 10;  // final modulus p^steps
};

struct PadicScheme {
    std::array<int, 3> dims{0, 0, 0};
    int p = 2;
    int steps = 0;
    mpz_class modulus;
    // coefficients in [0, modulus), term-major: u, v, w
    std::vector<std::array<std::vector<mpz_class>, 3>> terms;
    // moduli p^(j+1) at which the residual was confirmed, one per step
    std::vector<mpz_class> residual_checks;
};

/// nullopt when the linearized system is inconsistent at some step, i.e. the
/// scheme does not lift beyond F_p along this Jacobian.
std::optional<PadicScheme> hensel_lift(const Scheme& s, const Tensor3& t, const LiftParams& params = {});

/// num/den with |num|, den <= floor(sqrt(modulus/2)), gcd(den, modulus) = 1
/// and num == residue * den mod modulus; nullopt when none exists.
std::optional<mpq_class> rational_reconstruct(const mpz_class& residue, const mpz_class& modulus);

enum class LiftStatus { Z, Q, NotLiftable, ReconstructionFailed };

std::string to_string(LiftStatus s);

struct LiftResult {
    LiftStatus status = LiftStatus::NotLiftable;
    std::optional<ExactScheme> scheme;  // set for Z and Q
    std::optional<PadicScheme> padic;
    std::string detail;
};

LiftResult lift_to_exact(const Scheme& s, const Tensor3& t, const LiftParams& params = {});

}  // namespace stmm
