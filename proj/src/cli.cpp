#include "stmm/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "stmm/flip.hpp"
#include "stmm/lift.hpp"
#include "stmm/recursion.hpp"
#include "stmm/scheme_io.hpp"

namespace stmm {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string git_blob_sha1(const std::string& content) {
    const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr))
        throw std::runtime_error("sha1 failed");
    std::ostringstream os;
    for (unsigned i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

namespace {

class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw UsageError("cannot open " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + p.string());
    out << content;
}

NormalizedFormat resolve_format(const std::string& code) {
    try {
        return normalize_format(parse_format(code));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

std::string counts_str(const RecursionCounts& q) {
    return "(" + std::to_string(q.q_ab) + "," + std::to_string(q.q_ag) + "," + std::to_string(q.q_gb) + ")";
}

std::string fmt_double(double x, int digits = 6) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << x;
    return os.str();
}

int default_walkers() {
    if (const char* env = std::getenv("STMM_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v >= 1)
                return v;
        } catch (const std::exception&) {
        }
    }
    return 1;
}

// ---------------------------------------------------------------------------

struct BuildOpts {
    std::string format;
    int n = 0;
    std::string out;
};

int cmd_build(const BuildOpts& o, std::ostream& out) {
    const auto norm = resolve_format(o.format);
    if (o.n < 2 || o.n > 8)
        throw UsageError("--n must be in 2..8");
    const Tensor3 t = build_tensor(norm.canonical, o.n);
    if (norm.canonical.code() != o.format)
        out << "format " << o.format << " -> " << norm.canonical.code() << (norm.transposed ? " (transposed)" : "")
            << (norm.reversed ? " (reversed)" : "") << '\n';
    out << "format " << norm.canonical.code() << " n " << o.n << " dims (" << t.dims[0] << "," << t.dims[1] << ","
        << t.dims[2] << ") nnz " << nnz(t) << '\n';
    if (!o.out.empty()) {
        std::ostringstream os;
        os << "# i j k coefficient\n";
        for (int i = 0; i < t.dims[0]; ++i)
            for (int j = 0; j < t.dims[1]; ++j)
                for (int k = 0; k < t.dims[2]; ++k)
                    if (t.at(i, j, k))
                        os << i << ' ' << j << ' ' << k << ' ' << t.at(i, j, k) << '\n';
        write_file(o.out, os.str());
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct SearchOpts {
    std::string format, field = "F2", out = "stmm-out";
    int n = 0;
    SearchParams params;
    bool corner_zeroed = false;
    int max_files = 100;
};

int cmd_search(SearchOpts o, std::ostream& out) {
    const auto norm = resolve_format(o.format);
    const FormatPair fmt = norm.canonical;
    if (o.n < 2 || o.n > 8)
        throw UsageError("--n must be in 2..8");
    if (o.field != "F2" && o.field != "F3")
        throw UsageError("--field must be F2 or F3");
    if (o.corner_zeroed && !fmt.is_transpose())
        throw UsageError("--corner-zeroed needs a transpose format");
    const int p = o.field == "F2" ? 2 : 3;

    const Tensor3 full = build_tensor(fmt, o.n);
    Tensor3 target = full;
    std::vector<Term> completion;
    if (o.corner_zeroed) {
        auto cz = build_corner_zeroed(fmt, o.n);
        target = cz.reduced;
        for (const auto& it : cz.completion)
            completion.push_back({PackedVec::from_values(p, it.u), PackedVec::from_values(p, it.v),
                                  PackedVec::from_values(p, it.w)});
        if (o.params.target_rank > 0)
            o.params.target_rank = std::max(1, o.params.target_rank - static_cast<int>(completion.size()));
    }

    fs::create_directories(o.out);
    std::ofstream stats(fs::path(o.out) / "stats.jsonl", std::ios::binary);
    const Scheme start = naive_scheme(target, p);
    out << "search " << fmt.code() << " n=" << o.n << " " << o.field << (o.corner_zeroed ? " corner-zeroed" : "")
        << " start rank " << start.rank() + static_cast<int>(completion.size()) << '\n';
    const SearchResult res = search(target, start, o.params, [&](const LevelStats& ls) {
        stats << to_json_line(ls) << '\n';
        stats.flush();
    });

    const int final_rank = res.best_rank + static_cast<int>(completion.size());
    ojson files = ojson::array();
    int written = 0;
    for (const Scheme& member : res.best_pool()) {
        if (written >= o.max_files)
            break;
        Scheme s = member;
        for (const Term& t : completion)
            s.add(t);
        if (!verify(s, full))
            throw ContractViolation("completed scheme fails verification");
        ExactScheme e = to_exact(s);
        e.format = fmt;
        e.n = o.n;
        std::ostringstream name;
        name << fmt.code() << "_n" << o.n << "_" << o.field << "_r" << final_rank << "_" << std::setw(4)
             << std::setfill('0') << written << ".txt";
        const std::string text = serialize(e);
        write_file(fs::path(o.out) / name.str(), text);
        files.push_back({{"file", name.str()}, {"sha1", git_blob_sha1(text)}});
        ++written;
    }

    ojson m;
    m["command"] = "search";
    m["format"] = fmt.code();
    m["requested_format"] = o.format;
    m["n"] = o.n;
    m["field"] = o.field;
    m["corner_zeroed"] = o.corner_zeroed;
    m["seed"] = o.params.seed;
    m["params"] = {{"walk_limit", o.params.walk_limit},   {"stagnation", o.params.stagnation},
                   {"pool", o.params.pool_size},          {"target_rank", o.params.target_rank},
                   {"walkers", o.params.walkers},         {"walks_per_level", o.params.walks_per_level},
                   {"time_limit_s", o.params.time_limit_s}};
    m["tensor_sha1"] = git_blob_sha1(std::string(reinterpret_cast<const char*>(target.coeffs.data()),
                                                 target.coeffs.size() * sizeof(std::int64_t)));
    m["best_rank"] = final_rank;
    m["pool_size"] = res.best_pool().size();
    m["walks"] = res.total_walks;
    m["flips"] = res.total_flips;
    ojson levels = ojson::array();
    for (const auto& ls : res.levels)
        levels.push_back({{"level", ls.rank + static_cast<int>(completion.size())},
                          {"walks", ls.walks},
                          {"flips", ls.flips},
                          {"plus_transitions", ls.plus_transitions},
                          {"admitted", ls.admitted}});
    m["levels"] = levels;
    m["outputs"] = files;
    write_file(fs::path(o.out) / "manifest.json", m.dump(2) + "\n");

    out << "best rank " << final_rank << ", pool " << res.best_pool().size() << ", walks " << res.total_walks
        << ", flips " << res.total_flips << ", " << fmt_double(res.wall_s, 2) << " s";
    if (res.wall_s > 0)
        out << ", " << fmt_double(static_cast<double>(res.total_flips) / res.wall_s, 0) << " flips/s";
    out << '\n';
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct LiftOpts {
    std::vector<std::string> files;
    int steps = 10;
    std::string out;
};

int cmd_lift(const LiftOpts& o, std::ostream& out) {
    if (o.steps < 1)
        throw UsageError("--steps must be positive");
    ojson report = ojson::array();
    for (const auto& file : o.files) {
        const std::string text = read_file(file);
        ExactScheme e;
        try {
            e = deserialize(text);
        } catch (const ParseError& pe) {
            throw ParseError(pe.line(), pe.detail(), file);
        }
        const int p = field_characteristic(e.field);
        if (p == 0)
            throw UsageError(file + ": lifting needs an F2 or F3 scheme, got field=" + field_name(e.field));
        const Tensor3 t = build_tensor(e.format, e.n);
        const Scheme s = reduce_mod(e, p);
        ojson entry{{"file", file}, {"sha1", git_blob_sha1(text)}};
        if (!verify(s, t)) {
            out << file << ": does not verify mod " << p << '\n';
            entry["status"] = "Invalid";
            report.push_back(entry);
            continue;
        }
        const LiftResult r = lift_to_exact(s, t, LiftParams{o.steps});
        entry["status"] = to_string(r.status);
        out << file << ": " << to_string(r.status);
        if (r.scheme) {
            const mpz_class den = max_denominator(*r.scheme);
            out << " max_den " << den.get_str();
            entry["max_den"] = den.get_str();
            if (!o.out.empty()) {
                fs::create_directories(o.out);
                const fs::path dst = fs::path(o.out) / (fs::path(file).stem().string() + "_" + to_string(r.status) + ".txt");
                const std::string lifted = serialize(*r.scheme);
                write_file(dst, lifted);
                entry["output"] = dst.string();
                entry["output_sha1"] = git_blob_sha1(lifted);
            }
        } else if (!r.detail.empty()) {
            out << " (" << r.detail << ")";
        }
        out << '\n';
        report.push_back(entry);
    }
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        write_file(fs::path(o.out) / "lift_report.json", report.dump(2) + "\n");
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct VerifyOpts {
    std::string file, format;
    int n = 0;
};

int cmd_verify(const VerifyOpts& o, std::ostream& out) {
    ExactScheme e;
    try {
        e = deserialize(read_file(o.file));
    } catch (const ParseError& pe) {
        throw ParseError(pe.line(), pe.detail(), o.file);
    }
    if (!o.format.empty() && resolve_format(o.format).canonical.code() != e.format.code())
        throw UsageError("file declares format " + e.format.code() + ", expected " + o.format);
    if (o.n != 0 && o.n != e.n)
        throw UsageError("file declares n=" + std::to_string(e.n) + ", expected " + std::to_string(o.n));

    const Tensor3 t = build_tensor(e.format, e.n);
    const bool ok = verify(e, t);
    out << o.file << ": " << (ok ? "pass" : "FAIL") << '\n';
    out << "format " << e.format.code() << " n " << e.n << " field " << field_name(e.field) << '\n';
    out << "multiplications " << e.rank() << '\n';
    out << "additions " << count_additions(e) << '\n';
    if (ok) {
        if (e.format.is_transpose()) {
            for (Criterion c : {Criterion::uv, Criterion::wdiag})
                out << "profile[" << to_string(c) << "] " << counts_str(classify_terms(e, c).q) << '\n';
        } else {
            out << "profile " << counts_str(classify_terms(e, Criterion::none).q) << '\n';
        }
    }
    return ok ? exit_ok : exit_verify_failed;
}

// ---------------------------------------------------------------------------

struct CatalogOpts {
    std::string dir;
    double omega = std::log2(7.0);
    std::string json;
};

int cmd_catalog(const CatalogOpts& o, std::ostream& out) {
    if (!fs::is_directory(o.dir))
        throw UsageError(o.dir + " is not a directory");
    const AnalysisConfig cfg{o.omega};
    std::vector<fs::path> files;
    for (const auto& ent : fs::directory_iterator(o.dir))
        if (ent.is_regular_file() && ent.path().extension() == ".txt")
            files.push_back(ent.path());
    std::sort(files.begin(), files.end());

    std::map<std::tuple<std::string, int, int>, std::vector<CatalogCandidate>> groups;
    bool failures = false;
    for (const auto& f : files) {
        ExactScheme e;
        try {
            e = deserialize(read_file(f));
        } catch (const ParseError& pe) {
            throw ParseError(pe.line(), pe.detail(), f.string());
        }
        if (e.field != Field::Z && e.field != Field::Q)
            continue;
        if (!verify(e, build_tensor(e.format, e.n))) {
            out << "skipped " << f.filename().string() << ": does not verify\n";
            failures = true;
            continue;
        }
        std::vector<Criterion> crits = e.format.is_transpose() ? std::vector{Criterion::uv, Criterion::wdiag}
                                                                : std::vector{Criterion::none};
        for (Criterion c : crits) {
            CatalogCandidate cand;
            cand.format = e.format;
            cand.n = e.n;
            cand.rank = e.rank();
            cand.domain = e.field;
            cand.q = classify_terms(e, c).q;
            cand.criterion = c;
            cand.nonzeros = count_nonzeros(e);
            cand.max_den = max_denominator(e);
            cand.source = f.filename().string();
            groups[{e.format.code(), e.n, e.rank()}].push_back(cand);
        }
    }
    std::vector<CatalogCandidate> frontier;
    for (const auto& [key, cands] : groups)
        for (auto& c : pareto_select(cands))
            frontier.push_back(c);

    const auto rows = catalog_gammas(frontier, cfg);
    const bool have_baseline = cfg.omega_is_log2_7() || std::abs(cfg.omega - 3) < 1e-12;
    out << std::left << std::setw(8) << "format" << std::setw(10) << "gamma" << std::setw(12) << "exact"
        << std::setw(4) << "n" << std::setw(5) << "r" << std::setw(12) << "q" << std::setw(7) << "field"
        << std::setw(7) << "crit" << std::setw(10) << "baseline" << "source\n";
    ojson j = ojson::array();
    for (const auto& row : rows) {
        const auto& b = *row.best;
        std::string base = "-";
        if (have_baseline) {
            try {
                base = fmt_double(baseline_gamma(row.format, cfg), 3);
            } catch (const std::invalid_argument&) {
            }
        }
        const std::string exact = row.gamma.exact ? row.gamma.exact->get_str() : "-";
        std::string source = b.source;
        if (!row.via.empty())
            source = "via " + row.via + ": " + source;
        for (const auto& m : row.missing)
            source += " [missing " + m + ", bounded with gamma=1]";
        out << std::setw(8) << row.format.code() << std::setw(10) << fmt_double(row.gamma.value, 4) << std::setw(12)
            << exact << std::setw(4) << b.n << std::setw(5) << b.rank << std::setw(12) << counts_str(b.q)
            << std::setw(7) << field_name(b.domain) << std::setw(7) << to_string(b.criterion) << std::setw(10) << base
            << source << '\n';
        j.push_back({{"format", row.format.code()},
                     {"gamma", row.gamma.value},
                     {"gamma_exact", exact},
                     {"n", b.n},
                     {"rank", b.rank},
                     {"q", {b.q.q_ab, b.q.q_ag, b.q.q_gb}},
                     {"field", field_name(b.domain)},
                     {"criterion", to_string(b.criterion)},
                     {"baseline", base},
                     {"via", row.via},
                     {"missing", row.missing},
                     {"source", b.source}});
    }
    if (!o.json.empty())
        write_file(o.json, j.dump(2) + "\n");
    return failures ? exit_verify_failed : exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Structured matrix multiplication scheme search, lifting and analysis", "stmm"};
    app.require_subcommand(1);

    BuildOpts bo;
    auto* build = app.add_subcommand("build", "Build a structured tensor and report its size");
    build->add_option("--format", bo.format, "Two-letter format code")->required();
    build->add_option("--n", bo.n, "Base size")->required();
    build->add_option("--out", bo.out, "Dump nonzero coefficients to this file");

    SearchOpts so;
    so.params.walkers = default_walkers();
    auto* srch = app.add_subcommand("search", "Flip-graph search for low-rank schemes");
    srch->add_option("--format", so.format)->required();
    srch->add_option("--n", so.n)->required();
    srch->add_option("--field", so.field, "F2 or F3")->capture_default_str();
    srch->add_option("--seed", so.params.seed)->capture_default_str();
    srch->add_option("--walkers", so.params.walkers, "Parallel walkers (default $STMM_THREADS or 1)");
    srch->add_option("--walk-limit", so.params.walk_limit, "Max steps per walk (L)")->capture_default_str();
    srch->add_option("--stagnation", so.params.stagnation, "Steps without progress before a plus-transition (P)")
        ->capture_default_str();
    srch->add_option("--pool", so.params.pool_size, "Pool size per level (S)")->capture_default_str();
    srch->add_option("--target-rank", so.params.target_rank, "Stop once a full pool at this rank exists");
    srch->add_option("--walks-per-level", so.params.walks_per_level, "Walk budget per level")->capture_default_str();
    so.params.time_limit_s = 600;
    srch->add_option("--time-limit", so.params.time_limit_s, "Seconds, 0 for none")->capture_default_str();
    srch->add_flag("--corner-zeroed", so.corner_zeroed, "Search with the corner outputs removed (transpose formats)");
    srch->add_option("--max-files", so.max_files, "Scheme files written from the best pool")->capture_default_str();
    srch->add_option("--out", so.out, "Output directory")->capture_default_str();

    LiftOpts lo;
    auto* lift = app.add_subcommand("lift", "Hensel-lift F2/F3 schemes to Z or Q");
    lift->add_option("files", lo.files)->required();
    lift->add_option("--steps", lo.steps, "Lifting steps")->capture_default_str();
    lift->add_option("--out", lo.out, "Directory for lifted schemes and the report");

    VerifyOpts vo;
    auto* ver = app.add_subcommand("verify", "Verify a scheme file");
    ver->add_option("file", vo.file)->required();
    ver->add_option("--format", vo.format, "Expected format");
    ver->add_option("--n", vo.n, "Expected base size");

    CatalogOpts co;
    auto* cat = app.add_subcommand("catalog", "Best gamma per format from a directory of exact schemes");
    cat->add_option("dir", co.dir)->required();
    cat->add_option("--omega", co.omega, "Matrix multiplication exponent")->capture_default_str();
    cat->add_option("--out", co.json, "Also write the catalog as JSON");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*build)
            return cmd_build(bo, out);
        if (*srch)
            return cmd_search(so, out);
        if (*lift)
            return cmd_lift(lo, out);
        if (*ver)
            return cmd_verify(vo, out);
        if (*cat)
            return cmd_catalog(co, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_verify_failed;
    }
    return exit_usage;
}

}  // namespace stmm
