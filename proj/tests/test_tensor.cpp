#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "stmm/scheme.hpp"
#include "stmm/tensor.hpp"

using namespace stmm;

namespace {

// nnz column of the published rank table, n = 2..5.
const std::map<std::string, std::array<int, 4>> table_nnz = {
    {"gg", {8, 27, 64, 125}}, {"ug", {6, 18, 40, 75}},  {"sg", {8, 27, 64, 125}}, {"kg", {4, 18, 48, 100}},
    {"gt", {6, 18, 40, 75}},  {"ut", {4, 10, 20, 35}},  {"st", {6, 18, 40, 75}},  {"kt", {2, 9, 24, 50}},
    {"uu", {4, 10, 20, 35}},  {"us", {6, 18, 40, 75}},  {"uk", {3, 12, 30, 60}},  {"sk", {4, 18, 48, 100}},
    {"ul", {5, 14, 30, 55}},  {"ss", {8, 27, 64, 125}}, {"kk", {2, 12, 36, 80}},  {"wg", {8, 27, 64, 125}},
    {"wt", {6, 18, 40, 75}},  {"uw", {6, 18, 40, 75}},  {"sw", {8, 27, 64, 125}}, {"ww", {8, 27, 64, 125}},
};

using Mat = std::vector<std::vector<long>>;

// Random structured matrix together with its free parameters.
std::pair<Mat, std::vector<long>> random_structured(StructureTag tag, int n, std::mt19937_64& rng) {
    const IndexMap m = free_index_map(tag, n);
    std::vector<long> params(m.free_count());
    for (auto& x : params)
        x = static_cast<long>(rng() % 19) - 9;
    Mat a(n, std::vector<long>(n, 0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const CellRef& c = m.at(i, j);
            if (c.index >= 0)
                a[i][j] = c.sign * params[c.index];
        }
    return {a, params};
}

Mat multiply(const Mat& a, const Mat& b) {
    const int n = static_cast<int>(a.size());
    Mat c(n, std::vector<long>(n, 0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                c[i][j] += a[i][k] * b[k][j];
    return c;
}

Mat transpose(const Mat& a) {
    const int n = static_cast<int>(a.size());
    Mat t(n, std::vector<long>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            t[i][j] = a[j][i];
    return t;
}

std::vector<long> contract_inputs(const Tensor3& t, const std::vector<long>& a, const std::vector<long>& b) {
    std::vector<long> c(t.dims[2], 0);
    for (int i = 0; i < t.dims[0]; ++i)
        for (int j = 0; j < t.dims[1]; ++j)
            for (int k = 0; k < t.dims[2]; ++k)
                c[k] += t.at(i, j, k) * a[i] * b[j];
    return c;
}

}  // namespace

TEST_CASE("twenty canonical formats") {
    const auto fs = enumerate_formats();
    REQUIRE(fs.size() == 20);
    std::set<std::string> codes;
    for (const auto& f : fs) {
        codes.insert(f.pair.code());
        CHECK(f.pair.canonical);
        CHECK(f.structured == (f.pair.code() != "gg"));
    }
    CHECK(codes.count("ul"));
    CHECK(codes.count("gg"));
    for (const auto& [code, nn] : table_nnz)
        CHECK(codes.count(code));
    // every non-canonical pair except k/w mixtures reduces somewhere
    const auto& ug = *std::find_if(fs.begin(), fs.end(), [](const FormatEntry& e) { return e.pair.code() == "ug"; });
    CHECK(std::find(ug.reduced.begin(), ug.reduced.end(), "lg") != ug.reduced.end());
    CHECK(std::find(ug.reduced.begin(), ug.reduced.end(), "gu") != ug.reduced.end());
}

TEST_CASE("normalization") {
    auto norm = [](const char* c) { return normalize_format(parse_format(c)); };
    CHECK(norm("lg").canonical.code() == "ug");
    CHECK(norm("lg").reversed);
    CHECK(norm("gu").canonical.code() == "ug");
    CHECK(norm("gu").transposed);
    CHECK(norm("lt").canonical.code() == "ut");
    CHECK(norm("lu").canonical.code() == "ul");
    CHECK(norm("ks").canonical.code() == "sk");
    CHECK(norm("ss").canonical.code() == "ss");
    CHECK_THROWS_AS(norm("kw"), std::invalid_argument);
    CHECK_THROWS_AS(parse_format("tg"), std::invalid_argument);
    CHECK_THROWS_AS(parse_format("xx"), std::invalid_argument);
}

TEST_CASE("index maps") {
    const auto u2 = free_index_map(StructureTag::u, 2);
    CHECK(u2.free_cells == std::vector<std::array<int, 2>>{{0, 0}, {0, 1}, {1, 1}});
    const auto k3 = free_index_map(StructureTag::k, 3);
    CHECK(k3.free_count() == 3);
    CHECK(k3.at(1, 0).index == k3.at(0, 1).index);
    CHECK(k3.at(1, 0).sign == -1);
    CHECK(k3.at(1, 1).index == -1);
    const auto w2 = free_index_map(StructureTag::w, 2);
    CHECK(w2.free_cells == std::vector<std::array<int, 2>>{{0, 0}, {0, 1}, {1, 1}});
    CHECK(w2.at(1, 0).sign == -1);
    for (int n = 2; n <= 8; ++n) {
        CHECK(free_index_map(StructureTag::g, n).free_count() == n * n);
        CHECK(free_index_map(StructureTag::s, n).free_count() == n * (n + 1) / 2);
        CHECK(free_index_map(StructureTag::k, n).free_count() == n * (n - 1) / 2);
    }
    CHECK_THROWS_AS(free_index_map(StructureTag::g, 1), std::invalid_argument);
    CHECK_THROWS_AS(free_index_map(StructureTag::g, 9), std::invalid_argument);
}

TEST_CASE("nnz matches the published table for all 80 tensors") {
    for (const auto& [code, expected] : table_nnz)
        for (int n = 2; n <= 5; ++n) {
            INFO(code << " n=" << n);
            const Tensor3 t = build_tensor(parse_format(code), n);
            CHECK(nnz(t) == static_cast<std::size_t>(expected[n - 2]));
            CHECK(t.dims == tensor_dims(parse_format(code), n));
        }
    CHECK(nnz(Tensor3({2, 2, 2})) == 0);
}

TEST_CASE("non-canonical formats must be normalized first") {
    CHECK_THROWS_AS(build_tensor(parse_format("lg"), 3), std::invalid_argument);
}

TEST_CASE("tensor contraction equals the structured product") {
    std::mt19937_64 rng(4242);
    for (const auto& fe : enumerate_formats())
        for (int n = 2; n <= 5; ++n) {
            const Tensor3 t = build_tensor(fe.pair, n);
            for (int trial = 0; trial < 5; ++trial) {
                auto [a, pa] = random_structured(fe.pair.a, n, rng);
                std::vector<long> c;
                Mat expect;
                if (fe.pair.is_transpose()) {
                    c = contract_inputs(t, pa, pa);
                    expect = multiply(a, transpose(a));
                } else {
                    auto [b, pb] = random_structured(fe.pair.b, n, rng);
                    c = contract_inputs(t, pa, pb);
                    expect = multiply(a, b);
                }
                const auto outs = output_cells(fe.pair, n);
                REQUIRE(outs.size() == c.size());
                for (std::size_t o = 0; o < outs.size(); ++o)
                    REQUIRE(c[o] == expect[outs[o][0]][outs[o][1]]);
            }
        }
}

TEST_CASE("transpose products are symmetric in the input axes") {
    for (const char* code : {"gt", "ut", "st", "kt", "wt"})
        for (int n = 2; n <= 5; ++n) {
            const Tensor3 t = build_tensor(parse_format(code), n);
            CHECK(t.dims[2] == n * (n + 1) / 2);
            const auto outs = output_cells(parse_format(code), n);
            for (int i = 0; i < t.dims[0]; ++i)
                for (int j = 0; j < t.dims[1]; ++j)
                    for (int k = 0; k < t.dims[2]; ++k)
                        if (outs[k][0] == outs[k][1])
                            REQUIRE(t.at(i, j, k) == t.at(j, i, k));
        }
}

TEST_CASE("corner zeroing") {
    for (const char* code : {"gt", "ut", "st", "kt", "wt"})
        for (int n = 2; n <= 5; ++n) {
            const FormatPair f = parse_format(code);
            const CornerZeroed cz = build_corner_zeroed(f, n);
            if (std::string(code) == "gt")
                CHECK(cz.completion.size() == static_cast<std::size_t>(2 * n));
            Tensor3 sum = cz.reduced;
            for (const auto& term : cz.completion)
                for (int i = 0; i < sum.dims[0]; ++i)
                    for (int j = 0; j < sum.dims[1]; ++j)
                        for (int k = 0; k < sum.dims[2]; ++k)
                            sum.at(i, j, k) += static_cast<std::int64_t>(term.u[i]) * term.v[j] * term.w[k];
            CHECK(sum == build_tensor(f, n));
        }
    CHECK(build_corner_zeroed(parse_format("gt"), 4).completion.size() == 8);
    CHECK(build_corner_zeroed(parse_format("gt"), 3).completion.size() == 6);
    CHECK_THROWS_AS(build_corner_zeroed(parse_format("gg"), 3), std::invalid_argument);
}

TEST_CASE("naive scheme") {
    const Tensor3 gg2 = build_tensor(parse_format("gg"), 2);
    const Scheme s = naive_scheme(gg2, 2);
    CHECK(s.rank() == 8);
    CHECK(verify(s, gg2));
    const Tensor3 kg2 = build_tensor(parse_format("kg"), 2);
    const Scheme k3 = naive_scheme(kg2, 3);
    bool saw_two = false;
    for (const auto& t : k3.terms)
        for (int v : t.w.values())
            saw_two |= v == 2;
    CHECK(saw_two);
    for (const auto& fe : enumerate_formats())
        for (int p : {2, 3}) {
            const Tensor3 t = build_tensor(fe.pair, 3);
            const Scheme ns = naive_scheme(t, p);
            CHECK(verify(ns, t));
            CHECK(contract(ns) == t.reduce_mod(p));
            CHECK(static_cast<std::size_t>(ns.rank()) == nnz(t.reduce_mod(p)));
        }
}
