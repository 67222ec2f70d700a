#include <catch_amalgamated.hpp>

#include "nmforge/lincode.hpp"

using namespace nmforge;

namespace {

// All codewords by direct enumeration of messages, no Gray-code shortcut.
std::vector<BitVector> all_codewords(const LinearCodeSpec& code) {
    std::vector<BitVector> out;
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << code.k_in); ++m)
        out.push_back(encode(code, BitVector::from_uint(m, code.k_in)));
    return out;
}

// cw lies in the dual iff it is orthogonal to a basis of the BCH code, taken
// here as the null space of the dual generator's transpose.
bool in_bch_dual_by_trace(const BitVector& cw, const LinearCodeSpec& code) {
    auto bch = solve_affine(code.gen.transpose(), BitVector(code.k_in));
    for (const auto& b : bch->basis())
        if (b.dot(cw)) return false;
    return true;
}

}  // namespace

TEST_CASE("encode is linear", "[lincode]") {
    auto code = build_dual_bch(31, 4);
    CHECK(encode(code, BitVector(code.k_in)).is_zero());
    Rng rng(1);
    for (int t = 0; t < 1000; ++t) {
        auto a = BitVector::random(code.k_in, rng), b = BitVector::random(code.k_in, rng);
        CHECK((encode(code, a) ^ encode(code, b)) == encode(code, a ^ b));
    }
    CHECK_THROWS_AS(encode(code, BitVector(3)), std::invalid_argument);
}

TEST_CASE("dual of the [15,11] Hamming code is the [15,4,8] simplex code", "[lincode]") {
    auto code = build_dual_bch(15, 1);
    CHECK(code.k_in == 4);
    CHECK(code.n_out == 15);
    auto cws = all_codewords(code);
    for (std::size_t i = 1; i < cws.size(); ++i) CHECK(cws[i].popcount() == 8);
    CHECK(code.rel_distance * 15 == Catch::Approx(8));
}

TEST_CASE("dual of the [15,7,5] BCH code", "[lincode]") {
    auto code = build_dual_bch(15, 2);
    CHECK(code.k_in == 8);
    auto cws = all_codewords(code);
    std::size_t best = 15;
    for (std::size_t i = 1; i < cws.size(); ++i) best = std::min(best, cws[i].popcount());
    CHECK(best >= 4);
    CHECK(min_distance_exhaustive(code) == best);
    CHECK(best >= code.rel_distance * 15);

    // The BCH code itself (orthogonal complement) has dimension 7 and distance 5.
    auto bch = solve_affine(code.gen.transpose(), BitVector(code.k_in));
    REQUIRE(bch);
    CHECK(bch->dim() == 7);
    std::size_t bch_best = 15;
    for (std::uint64_t c = 1; c < 128; ++c) bch_best = std::min(bch_best, bch->element(c).popcount());
    CHECK(bch_best == 5);
    for (const auto& cw : cws) CHECK(in_bch_dual_by_trace(cw, code));
}

TEST_CASE("small coordinate subsets are unconstrained", "[lincode]") {
    for (std::size_t t : {1u, 2u}) {
        auto code = build_dual_bch(15, t);
        for (std::size_t size = 1; size <= t; ++size) {
            std::vector<std::size_t> idx(size);
            std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t start) {
                if (pos == size) {
                    CHECK(code.coordinate_rank(idx) == size);
                    return;
                }
                for (std::size_t i = start; i < 15; ++i) {
                    idx[pos] = i;
                    rec(pos + 1, i + 1);
                }
            };
            rec(0, 0);
        }
        // The designed distance of the BCH code gives independence up to 2t coordinates.
        std::size_t all_pairs_ok = 0;
        for (std::size_t a = 0; a < 15; ++a)
            for (std::size_t b = a + 1; b < 15; ++b) all_pairs_ok += code.coordinate_rank({a, b}) == 2;
        CHECK(all_pairs_ok == 105);
    }
}

TEST_CASE("larger dual BCH codes", "[lincode]") {
    Rng rng(2);
    for (auto [n, t] : std::vector<std::pair<std::size_t, std::size_t>>{{31, 4}, {63, 3}, {255, 8}}) {
        auto code = build_dual_bch(n, t);
        CHECK(rank(code.gen) == code.k_in);
        CHECK(code.k_in <= t * static_cast<std::size_t>(std::log2(n + 1)));
        for (int trial = 0; trial < 10000; ++trial) {
            std::vector<std::size_t> idx;
            while (idx.size() < t) {
                std::size_t i = rng() % n;
                if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
            }
            REQUIRE(code.coordinate_rank(idx) == t);
        }
    }
    CHECK(build_dual_bch(31, 4).k_in == 20);
    CHECK(build_dual_bch(255, 8).k_in == 64);
    CHECK(build_dual_bch(63, 3).k_in == 18);
    CHECK(build_dual_bch(63, 5).k_in == 27);  // the coset of 9 mod 63 has only 3 elements
}

TEST_CASE("claimed distance holds for small dual BCH codes", "[lincode]") {
    for (auto [n, t] : std::vector<std::pair<std::size_t, std::size_t>>{{7, 1}, {15, 1}, {15, 2}, {31, 1}, {31, 2}, {31, 3}, {63, 2}}) {
        auto code = build_dual_bch(n, t);
        REQUIRE(code.k_in <= 16);
        CHECK(min_distance_exhaustive(code) >= code.rel_distance * double(n) - 1e-9);
    }
}

TEST_CASE("invalid parameters are rejected", "[lincode]") {
    CHECK_THROWS_AS(build_dual_bch(16, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_dual_bch(15, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_dual_bch(15, 4), std::invalid_argument);
}

TEST_CASE("explicit codes", "[lincode]") {
    BitMatrix rep(3, 1);
    for (int i = 0; i < 3; ++i) rep.set(i, 0, true);
    auto code = explicit_code(rep);
    CHECK(code.rel_distance == Catch::Approx(1.0));
    CHECK(encode(code, BitVector::from_bits("1")) == BitVector::from_bits("111"));
    CHECK_THROWS_AS(explicit_code(BitMatrix(3, 2)), std::invalid_argument);
}
