#include <catch_amalgamated.hpp>

#include <boost/math/distributions/chi_squared.hpp>

#include "nmforge/nmcode.hpp"

using namespace nmforge;

namespace {

const NmCode& toy() {
    static const NmCode code(builtin_toy20());
    return code;
}

// Dense code whose coordinates never read z6: no constraint row can be
// independent on the free bits, so every input takes the fallback branch.
LinearCodeSpec blind_code(const ParamProfile& p) {
    auto code = with_dense_basis(build_dual_bch(p.code.n_b, p.code.t_b));
    std::size_t o6 = 0;
    for (auto s : p.inv.split) o6 += s;
    for (std::size_t r = 0; r < code.gen.rows(); ++r)
        for (std::size_t c = o6; c < code.gen.cols(); ++c) code.gen.set(r, c, false);
    return code;
}

}  // namespace

TEST_CASE("every message decodes back", "[nmcode]") {
    const auto& code = toy();
    Rng rng(11);
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << code.k()); ++s) {
        auto msg = BitVector::from_uint(s, code.k());
        for (int t = 0; t < 250; ++t) {
            auto e = code.encode(msg, rng);
            REQUIRE(e.ok());
            CHECK(e.codeword->size() == code.block());
            CHECK(code.decode(*e.codeword) == msg);
            CHECK(code.classify(*e.codeword).encodable);
        }
    }
}

TEST_CASE("encoding is randomized and reproducible", "[nmcode]") {
    const auto& code = toy();
    auto msg = BitVector::parse("2:2");
    Rng a(5), b(5);
    for (int t = 0; t < 20; ++t) CHECK(*code.encode(msg, a).codeword == *code.encode(msg, b).codeword);
    Rng rng(6);
    int distinct = 0;
    for (int t = 0; t < 1000; ++t) distinct += *code.encode(msg, rng).codeword != *code.encode(msg, rng).codeword;
    CHECK(distinct >= 990);
}

TEST_CASE("scheme shape", "[nmcode]") {
    const auto& code = toy();
    CHECK(code.k() == 2);
    CHECK(code.block() == 20);
    CHECK(code.rate() == 0.1);
    CHECK(code.decode(BitVector(20)) == ilnm_inv(code.suite(), BitVector(20)));
    Rng rng(1);
    CHECK_THROWS_AS(code.encode(BitVector(3), rng), std::invalid_argument);
    CHECK_THROWS_AS(code.decode(BitVector(19)), std::invalid_argument);
}

TEST_CASE("exhausted sampler is an explicit encode failure", "[nmcode]") {
    auto p = builtin_toy20();
    NmCode code(std::make_shared<const NmSuite>(p, blind_code(p)));
    Rng rng(2);
    auto e = code.encode(BitVector::parse("2:1"), rng, 8);
    CHECK_FALSE(e.ok());
    CHECK(e.attempts == 8);
    for (int t = 0; t < 100; ++t) {
        auto c = BitVector::random(20, rng);
        auto r = code.classify(c);
        CHECK_FALSE(r.encodable);
        CHECK(r.message == BitVector(2));
    }
}

TEST_CASE("encode marginal is uniform on encodable codewords", "[nmcode]") {
    const auto& code = toy();
    // Bin by the top 10 bits; a bin's expected share is its count of
    // encodable codewords.
    const std::size_t bins = 1024;
    std::vector<double> expected(bins, 0);
    double total = 0;
    for (std::uint64_t c = 0; c < (1u << 20); ++c)
        if (code.classify(BitVector::from_uint(c, 20)).encodable) {
            expected[c >> 10] += 1;
            total += 1;
        }
    const int samples = 1000000;
    std::vector<double> seen(bins, 0);
    Rng rng(77);
    for (int t = 0; t < samples; ++t) {
        auto s = BitVector::random(2, rng);
        seen[code.encode(s, rng).codeword->to_uint() >> 10] += 1;
    }
    double stat = 0;
    std::size_t dof = 0;
    for (std::size_t b = 0; b < bins; ++b) {
        if (expected[b] == 0) {
            CHECK(seen[b] == 0);
            continue;
        }
        double e = expected[b] / total * samples;
        stat += (seen[b] - e) * (seen[b] - e) / e;
        ++dof;
    }
    double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(double(dof - 1)), stat));
    CHECK(p >= 0.001);
}
