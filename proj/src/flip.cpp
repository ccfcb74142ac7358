#include "stmm/flip.hpp"

#include <algorithm>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

namespace stmm {

Rng make_rng(std::uint64_t seed, std::uint64_t walker) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(walker), static_cast<std::uint32_t>(walker >> 32)};
    return Rng(seq);
}

namespace {

inline std::uint64_t below(Rng& rng, std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

template <class F>
typename F::Vec to_vec(const PackedVec& x) {
    if constexpr (F::p == 2)
        return x.as_f2();
    else
        return x.as_f3();
}

template <class F>
PackedVec from_vec(int len, typename F::Vec v) {
    if constexpr (F::p == 2)
        return PackedVec::from_f2(len, v);
    else
        return PackedVec::from_f3(len, v);
}

template <class F>
typename F::Vec random_vec(int len, Rng& rng) {
    if constexpr (F::p == 2) {
        return rng() & low_mask(len);
    } else {
        typename F::Vec v;
        for (int i = 0; i < len; ++i)
            F::set(v, i, static_cast<int>(below(rng, 3)));
        return v;
    }
}

// Working copy of a scheme with per-axis normalized keys and an explicit
// candidate list kept in sync with every flip.
template <class F>
class Engine {
public:
    using Vec = typename F::Vec;

    explicit Engine(const Scheme& s) : dims_(s.dims), format_(s.format), n_(s.n) {
        if (s.p != F::p)
            throw ContractViolation("engine field does not match scheme");
        for (const Term& t : s.terms)
            terms_.push_back({to_vec<F>(t.u), to_vec<F>(t.v), to_vec<F>(t.w)});
        rebuild();
    }

    int rank() const { return static_cast<int>(terms_.size()); }
    std::size_t candidate_count() const { return cands_.size(); }
    const std::vector<FlipCandidate>& candidates() const { return cands_; }

    Scheme scheme() const {
        Scheme s(F::p, dims_);
        s.format = format_;
        s.n = n_;
        for (const auto& t : terms_)
            s.terms.push_back({from_vec<F>(dims_[0], t[0]), from_vec<F>(dims_[1], t[1]), from_vec<F>(dims_[2], t[2])});
        return s;
    }

    bool random_flip(Rng& rng) {
        if (cands_.empty())
            return false;
        flip(cands_[below(rng, cands_.size())], rng);
        return true;
    }

    void flip(FlipCandidate c, Rng& rng) {
        const std::uint64_t bits = rng();
        int t = c.i, s = c.j;
        if (bits & 1)
            std::swap(t, s);
        // x_s = mult * x_t holds in both orientations since 1 and 2 are self-inverse.
        const int a = c.axis;
        int b = (a + 1) % 3, cc = (a + 2) % 3;
        if (bits & 2)
            std::swap(b, cc);
        const int lambda = F::p == 2 ? 1 : 1 + static_cast<int>((bits >> 2) & 1);

        auto& xt = terms_[t];
        auto& xs = terms_[s];
        xt[b] = F::add(xt[b], F::scale(xs[b], lambda * c.mult));
        xs[cc] = F::sub(xs[cc], F::scale(xt[cc], lambda));

        const bool zt = F::is_zero(xt[b]);
        const bool zs = F::is_zero(xs[cc]);
        if (zt || zs) {
            // Implicit reduction: erase higher index first so the other stays valid.
            std::vector<int> gone;
            if (zt)
                gone.push_back(t);
            if (zs)
                gone.push_back(s);
            std::sort(gone.rbegin(), gone.rend());
            for (int g : gone) {
                terms_[g] = terms_.back();
                terms_.pop_back();
            }
            rebuild();
            return;
        }
        refresh(t, b);
        refresh(s, cc);
    }

    /// Split along a random axis; returns the indices of the two halves, or
    /// nothing when every axis has length 1 over F2 (no second nonzero vector).
    std::optional<std::pair<int, int>> split(Rng& rng) {
        std::array<int, 3> axes;
        int n_axes = 0;
        for (int a = 0; a < 3; ++a)
            if (dims_[a] > 1 || F::p > 2)
                axes[n_axes++] = a;
        if (n_axes == 0)
            return std::nullopt;
        const int i = static_cast<int>(below(rng, terms_.size()));
        const int a = axes[below(rng, n_axes)];
        const Vec y = terms_[i][a];
        Vec y1;
        do {
            y1 = random_vec<F>(dims_[a], rng);
        } while (F::is_zero(y1) || y1 == y);
        auto fresh = terms_[i];
        fresh[a] = F::sub(y, y1);
        terms_[i][a] = y1;
        terms_.push_back(fresh);
        rebuild();
        return std::pair{i, rank() - 1};
    }

    void plus_transition(Rng& rng) {
        const auto halves = split(rng);
        if (!halves)
            return;
        const auto [i, k] = *halves;
        std::vector<FlipCandidate> options;
        for (const auto& c : cands_) {
            const bool touches = c.i == i || c.j == i || c.i == k || c.j == k;
            const bool own_pair = (c.i == std::min(i, k) && c.j == std::max(i, k));
            if (touches && !own_pair)
                options.push_back(c);
        }
        if (!options.empty())
            flip(options[below(rng, options.size())], rng);
    }

private:
    void rebuild() {
        const int r = rank();
        keys_.resize(r);
        mults_.resize(r);
        for (int q = 0; q < r; ++q)
            for (int a = 0; a < 3; ++a) {
                int m = 1;
                keys_[q][a] = F::normalize(terms_[q][a], m);
                mults_[q][a] = static_cast<std::uint8_t>(m);
            }
        cands_.clear();
        for (int a = 0; a < 3; ++a)
            for (int q = 0; q < r; ++q)
                for (int o = q + 1; o < r; ++o)
                    if (keys_[q][a] == keys_[o][a])
                        cands_.push_back({q, o, a, (mults_[q][a] * mults_[o][a]) % F::p});
    }

    // Factor `axis` of term q changed: renormalize it and redo its candidates.
    void refresh(int q, int axis) {
        int m = 1;
        keys_[q][axis] = F::normalize(terms_[q][axis], m);
        mults_[q][axis] = static_cast<std::uint8_t>(m);
        for (std::size_t e = 0; e < cands_.size();) {
            const auto& c = cands_[e];
            if (c.axis == axis && (c.i == q || c.j == q)) {
                cands_[e] = cands_.back();
                cands_.pop_back();
            } else {
                ++e;
            }
        }
        const Vec key = keys_[q][axis];
        for (int o = 0; o < rank(); ++o)
            if (o != q && keys_[o][axis] == key)
                cands_.push_back({std::min(q, o), std::max(q, o), axis, (m * mults_[o][axis]) % F::p});
    }

    std::array<int, 3> dims_;
    FormatPair format_;
    int n_;
    std::vector<std::array<Vec, 3>> terms_;
    std::vector<std::array<Vec, 3>> keys_;
    std::vector<std::array<std::uint8_t, 3>> mults_;
    std::vector<FlipCandidate> cands_;
};

template <class F>
WalkOutcome walk_impl(const Scheme& start, const SearchParams& params, const Tensor3& target, Rng& rng) {
    Engine<F> e(start);
    WalkOutcome out;
    const int start_rank = e.rank();
    int last_rank = start_rank;
    std::int64_t since_drop = 0;
    auto check = [&](const char* what) {
        if (params.check_every_step && !verify(e.scheme(), target))
            throw ContractViolation(std::string(what) + " broke the decomposition at step " + std::to_string(out.steps));
    };
    while (out.steps < params.walk_limit) {
        ++out.steps;
        if (since_drop >= params.stagnation || e.candidate_count() == 0) {
            e.plus_transition(rng);
            ++out.plus_transitions;
            since_drop = 0;
            check("plus-transition");
        } else {
            e.random_flip(rng);
            ++out.flips;
            ++since_drop;
            check("flip");
        }
        if (e.rank() < last_rank)
            since_drop = 0;
        last_rank = e.rank();
        if (e.rank() < start_rank) {
            out.result = WalkOutcome::Result::descended;
            break;
        }
    }
    out.scheme = e.scheme();
    return out;
}

}  // namespace

std::vector<FlipCandidate> flip_candidates(const Scheme& s) {
    return s.p == 2 ? Engine<F2>(s).candidates() : Engine<F3>(s).candidates();
}

Scheme apply_flip(const Scheme& s, const FlipCandidate& c, Rng& rng) {
    const auto cands = flip_candidates(s);
    if (std::find(cands.begin(), cands.end(), c) == cands.end())
        throw ContractViolation("apply_flip: terms " + std::to_string(c.i) + " and " + std::to_string(c.j) +
                                " do not share axis " + std::to_string(c.axis));
    if (s.p == 2) {
        Engine<F2> e(s);
        e.flip(c, rng);
        return e.scheme();
    }
    Engine<F3> e(s);
    e.flip(c, rng);
    return e.scheme();
}

Scheme plus_transition(const Scheme& s, Rng& rng) {
    if (s.terms.empty())
        throw ContractViolation("plus_transition needs a nonempty scheme");
    if (s.p == 2) {
        Engine<F2> e(s);
        e.plus_transition(rng);
        return e.scheme();
    }
    Engine<F3> e(s);
    e.plus_transition(rng);
    return e.scheme();
}

WalkOutcome random_walk(const Scheme& start, const SearchParams& params, const Tensor3& target, Rng& rng) {
    return start.p == 2 ? walk_impl<F2>(start, params, target, rng) : walk_impl<F3>(start, params, target, rng);
}

std::string to_json_line(const LevelStats& s) {
    std::ostringstream os;
    os << "{\"level\":" << s.rank << ",\"walks\":" << s.walks << ",\"flips\":" << s.flips
       << ",\"plus_transitions\":" << s.plus_transitions << ",\"admitted\":" << s.admitted
       << ",\"wall_s\":" << s.wall_s << "}";
    return os.str();
}

namespace {

struct Pool {
    std::vector<Scheme> members;
    std::set<SchemeDigest> seen;

    bool admit(Scheme s) {
        if (!seen.insert(canonical_hash(s)).second)
            return false;
        members.push_back(std::move(s));
        return true;
    }
};

}  // namespace

SearchResult search(const Tensor3& target, const Scheme& start, const SearchParams& params,
                    const std::function<void(const LevelStats&)>& on_level) {
    using clock = std::chrono::steady_clock;
    if (params.stagnation >= params.walk_limit)
        throw ContractViolation("stagnation threshold must be below the walk limit");
    if (params.pool_size < 1 || params.walkers < 1)
        throw ContractViolation("pool size and walker count must be positive");
    if (!verify(start, target))
        throw ContractViolation("start scheme does not decompose the target");

    const auto t0 = clock::now();
    std::mutex mu;
    std::map<int, Pool> pools;
    pools[start.rank()].admit(start);
    int level = start.rank();
    std::int64_t walks_at_level = 0;
    bool done = false;
    SearchResult result;
    LevelStats current{level};
    auto level_t0 = t0;

    const int S = params.pool_size;
    const int T = params.target_rank;
    auto elapsed = [&](clock::time_point since) { return std::chrono::duration<double>(clock::now() - since).count(); };
    auto leave_level = [&](int next) {
        current.wall_s = elapsed(level_t0);
        result.levels.push_back(current);
        if (on_level)
            on_level(current);
        level = next;
        walks_at_level = 0;
        current = LevelStats{level};
        level_t0 = clock::now();
    };
    // Lowest rank below the current level we may work from next.
    auto lower_level = [&](bool require_full) {
        for (auto& [r, pool] : pools) {
            if (r >= level)
                break;
            if (T > 0 && r <= T)
                continue;
            if (!require_full || static_cast<int>(pool.members.size()) >= S)
                return r;
        }
        return level;
    };
    auto after_walk = [&]() {
        const int best = pools.begin()->first;
        if (T > 0 && best <= T && static_cast<int>(pools.begin()->second.members.size()) >= S) {
            done = true;
            return;
        }
        if (int next = lower_level(true); next < level) {
            leave_level(next);
            return;
        }
        if (walks_at_level >= params.walks_per_level) {
            if (int next = lower_level(false); next < level)
                leave_level(next);
            else
                done = true;
        }
    };
    if (T > 0 && start.rank() <= T)
        done = true;

    auto worker = [&](int id) {
        Rng rng = make_rng(params.seed, static_cast<std::uint64_t>(id));
        while (true) {
            Scheme from;
            int from_level;
            {
                std::lock_guard lock(mu);
                if (done)
                    return;
                if (params.time_limit_s > 0 && elapsed(t0) > params.time_limit_s) {
                    done = true;
                    return;
                }
                const auto& members = pools.at(level).members;
                from = members[below(rng, members.size())];
                from_level = level;
            }
            WalkOutcome w = random_walk(from, params, target, rng);
            const bool ok = w.result == WalkOutcome::Result::descended && verify(w.scheme, target);
            std::lock_guard lock(mu);
            result.total_walks++;
            result.total_flips += w.flips;
            if (from_level == level) {
                current.walks++;
                current.flips += w.flips;
                current.plus_transitions += w.plus_transitions;
                walks_at_level++;
            }
            if (ok && pools[w.scheme.rank()].admit(std::move(w.scheme)) && from_level == level)
                current.admitted++;
            if (!done)
                after_walk();
        }
    };

    if (!done) {
        if (params.walkers == 1) {
            worker(0);
        } else {
            std::vector<std::thread> threads;
            for (int id = 0; id < params.walkers; ++id)
                threads.emplace_back(worker, id);
            for (auto& th : threads)
                th.join();
        }
    }
    leave_level(level);

    for (auto& [r, pool] : pools)
        result.pools[r] = std::move(pool.members);
    result.best_rank = result.pools.begin()->first;
    result.wall_s = elapsed(t0);
    return result;
}

double measure_flip_rate(const Scheme& s, std::int64_t flips, std::uint64_t seed) {
    Rng rng = make_rng(seed, 0);
    auto run = [&](auto& e) {
        const auto t0 = std::chrono::steady_clock::now();
        for (std::int64_t i = 0; i < flips; ++i)
            if (!e.random_flip(rng))
                e.plus_transition(rng);
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    double secs;
    if (s.p == 2) {
        Engine<F2> e(s);
        secs = run(e);
    } else {
        Engine<F3> e(s);
        secs = run(e);
    }
    return static_cast<double>(flips) / std::max(secs, 1e-9);
}

}  // namespace stmm
