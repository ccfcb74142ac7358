#pragma once

// Flip-graph random walks over F2/F3 schemes and the rank-descent pool
// search built on them.

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "stmm/scheme.hpp"

namespace stmm {

using Rng = std::mt19937_64;

/// Generator for walker `walker` of a run seeded with `seed`.
Rng make_rng(std::uint64_t seed, std::uint64_t walker);

struct FlipCandidate {
    int i = 0, j = 0;  // i < j
    int axis = 0;      // 0 u, 1 v, 2 w
    int mult = 1;      // x_j[axis] == mult * x_i[axis]
    friend bool operator==(const FlipCandidate&, const FlipCandidate&) = default;
};

/// All term pairs whose factors on some axis agree up to a nonzero scalar.
std::vector<FlipCandidate> flip_candidates(const Scheme& s);

/// Applies one flip to the candidate pair; orientation, the order of the
/// two remaining axes and the scalar are drawn from rng. Terms with a zero
/// factor are dropped.
Scheme apply_flip(const Scheme& s, const FlipCandidate& c, Rng& rng);

/// Splits a random term along a random axis (rank + 1), then flips one of
/// the two halves against some other term when possible.
Scheme plus_transition(const Scheme& s, Rng& rng);

struct SearchParams {
    std::int64_t walk_limit = 1'000'000;   // L
    std::int64_t stagnation = 50'000;      // P
    int pool_size = 10'000;                // S
    int target_rank = 0;                   // stop once reached and filled
    std::uint64_t seed = 1;
    int walkers = 1;
    std::int64_t walks_per_level = 1'000'000;
    double time_limit_s = 0;  // 0 disables
    bool check_every_step = false;
};

struct WalkOutcome {
    enum class Result { descended, exhausted };
    Result result = Result::exhausted;
    Scheme scheme;
    std::int64_t steps = 0;
    std::int64_t flips = 0;
    std::int64_t plus_transitions = 0;
};

/// Throws ContractViolation when check_every_step is set and some step
/// breaks the decomposition of `target`.
WalkOutcome random_walk(const Scheme& start, const SearchParams& params, const Tensor3& target, Rng& rng);

struct LevelStats {
    int rank = 0;
    std::int64_t walks = 0;
    std::int64_t flips = 0;
    std::int64_t plus_transitions = 0;
    std::int64_t admitted = 0;
    double wall_s = 0;
};

std::string to_json_line(const LevelStats& s);

struct SearchResult {
    std::map<int, std::vector<Scheme>> pools;  // rank -> members, admission order
    int best_rank = 0;
    std::vector<LevelStats> levels;  // in the order levels were worked on
    std::int64_t total_flips = 0;
    std::int64_t total_walks = 0;
    double wall_s = 0;

    const std::vector<Scheme>& best_pool() const { return pools.at(best_rank); }
};

/// Rank-descent search starting from `start` (typically naive_scheme).
/// Walks draw random members of the current level; descended, verified and
/// previously unseen schemes are admitted at their own rank. A level is left
/// once a lower one holds pool_size schemes, or its walk budget runs out.
SearchResult search(const Tensor3& target, const Scheme& start, const SearchParams& params,
                    const std::function<void(const LevelStats&)>& on_level = {});

/// Flips per second of a single walker on `s`, measured over `flips` flips.
double measure_flip_rate(const Scheme& s, std::int64_t flips, std::uint64_t seed);

}  // namespace stmm
