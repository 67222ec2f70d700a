#include <catch_amalgamated.hpp>

#include "nmforge/tamperlab.hpp"

using namespace nmforge;

namespace {

// Parity code on 8 bits: message bit j is the XOR of the coordinates j, j+2, j+4, j+6.
struct ParityScheme {
    std::size_t k() const { return 2; }
    std::size_t block() const { return 8; }
    BitVector decode(const BitVector& c) const {
        BitVector m(2);
        for (std::size_t i = 0; i < 8; ++i)
            if (c.get(i)) m.flip(i % 2);
        return m;
    }
    DecodeResult classify(const BitVector& c) const { return {decode(c), true}; }
    EncodeResult encode(const BitVector& s, Rng& rng) const {
        auto c = BitVector::random(8, rng);
        auto fix = decode(c) ^ s;
        for (std::size_t j = 0; j < 2; ++j)
            if (fix.get(j)) c.flip(j);
        return {c, 1};
    }
};
static_assert(CodingScheme<ParityScheme>);
static_assert(CodingScheme<NmCode>);

BitVector bits(const char* s) { return BitVector::from_bits(s); }

// Every 2n-bit input as x o y.
template <class F>
void for_all_pairs(std::size_t n, F&& f) {
    for (std::uint64_t x = 0; x < (std::uint64_t{1} << n); ++x)
        for (std::uint64_t y = 0; y < (std::uint64_t{1} << n); ++y) f(BitVector::from_uint(x, n), BitVector::from_uint(y, n));
}

// h((f(x) o g(y))_pi) evaluated directly from the definition.
BitVector recompose_direct(const LinearComposed& lc, const BitVector& x, const BitVector& y) {
    return lc.h * lc.inner.pi.apply(lc.inner.f(x).concat(lc.inner.g(y)));
}

BitVector recompose_sum(const SumForm& s, const BitVector& x, const BitVector& y) {
    return s.pi.apply((s.f1(x) ^ s.g1(y)).concat(s.f2(x) ^ s.g2(y)));
}

}  // namespace

TEST_CASE("program operations", "[tamperlab][program]") {
    auto x = bits("1011");
    CHECK(Program::identity()(x) == x);
    CHECK(Program::xor_mask(bits("0110"))(x) == bits("1101"));
    CHECK(Program::permute(Permutation({1, 2, 3, 0}))(x) == bits("1101"));
    CHECK(Program::constant(bits("111"))(x) == bits("111"));

    BitMatrix a(2, 4);
    a.set(0, 0, true);
    a.set(0, 2, true);
    a.set(1, 3, true);
    CHECK(Program::affine(a)(x) == bits("01"));
    CHECK(Program::affine(a, bits("11"))(x) == bits("10"));

    // Slice [1, 3) holds 0b10 = 2 (bit 1 = 0, bit 2 = 1); table maps 2 -> 1.
    auto t = Program::table(1, 2, {3, 0, 1, 2});
    CHECK(t(x) == bits("1101"));

    auto c = Program::compose({Program::xor_mask(bits("1111")), Program::affine(a)});
    CHECK(c(x) == Program::affine(a)(bits("0100")));
    CHECK(c.out_len(4) == 2);

    CHECK_THROWS_AS(Program::xor_mask(bits("01"))(x), std::invalid_argument);
    CHECK_THROWS_AS(Program::affine(a)(bits("101")), std::invalid_argument);
    CHECK_THROWS_AS(Program::table(3, 2, {0, 1, 2, 3})(x), std::invalid_argument);
    CHECK_THROWS_AS(Program::table(0, 2, {0, 1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(Program::table(0, 2, {0, 1, 2, 4}), std::invalid_argument);
}

TEST_CASE("programs survive a JSON round trip", "[tamperlab][program]") {
    Rng rng(1);
    for (int t = 0; t < 20; ++t) {
        auto p = Program::compose({Program::random_table(6, rng), Program::xor_mask(BitVector::random(6, rng)),
                                   Program::permute(Permutation::random(6, rng)), Program::random_affine(4, 6, rng)});
        auto q = Program::from_json(nlohmann::json::parse(p.to_json().dump()), "f");
        for (int i = 0; i < 64; ++i) {
            auto x = BitVector::from_uint(i, 6);
            CHECK(p(x) == q(x));
        }
    }
}

TEST_CASE("adversary files", "[tamperlab][json]") {
    Rng rng(2);
    auto battery = standard_battery(6, 3);
    for (const auto& a : battery) {
        auto b = parse_adversary(to_json(a).dump());
        CHECK(b.id == a.id);
        CHECK(b.spec.index() == a.spec.index());
        CHECK(to_json(b).dump() == to_json(a).dump());
        for (int t = 0; t < 50; ++t) {
            auto c = BitVector::random(12, rng);
            CHECK(tamper(a.spec, c) == tamper(b.spec, c));
        }
    }

    auto err = [](const std::string& text) {
        try {
            validate(parse_adversary(text).spec, 4);
        } catch (const AdversaryError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(err("{}") == "missing field: family");
    CHECK(err(R"({"family":"split-state","f":{"op":"identity"}})") == "missing field: g");
    CHECK(err(R"({"family":"warp","f":1})") == "bad field: family: unknown family 'warp'");
    CHECK(err(R"({"family":"split-state","f":{"op":"spin"},"g":{"op":"identity"}})") == "bad field: f.op unknown op 'spin'");
    CHECK(err(R"({"family":"split-state","f":{"op":"xor","mask":"3:7"},"g":{"op":"identity"}})").starts_with("bad field: f:"));
    CHECK(err(R"({"family":"split-state","f":{"op":"compose","steps":[{"op":"xor"}]},"g":{"op":"identity"}})") ==
          "missing field: f.steps[0].mask");
    CHECK(err(R"({"family":"linear-composed","h":["8:ff"],"inner":{"f":{"op":"identity"},"g":{"op":"identity"}}})") ==
          "missing field: inner.pi");
    CHECK(err(R"({"family":"interleaved","f":{"op":"identity"},"g":{"op":"identity"},"pi":[0,1,2]})") ==
          "bad field: pi must permute 8 positions");
    CHECK(err(R"({"family":"comm-protocol","t":1,"rounds":[{"party":"alice","bits":2,"fn":{"op":"const","value":"2:3"}}],
                 "final_f":{"op":"affine","rows":["6:01","6:02","6:04","6:08"]},"final_g":{"op":"affine","rows":["6:01","6:02","6:04","6:08"]}})") ==
          "bad field: rounds[0].bits: party sends more than t = 1 bits");
    CHECK(err(R"({"family":"comm-protocol","t":1,"rounds":[{"party":"carol","bits":1,"fn":{"op":"identity"}}]})") ==
          "bad field: rounds[0].party must be alice or bob");
    CHECK_THROWS_AS(parse_adversary("{not json"), AdversaryError);
}

TEST_CASE("tampering families act on the codeword", "[tamperlab]") {
    Rng rng(3);
    const std::size_t n = 5;
    for (int t = 0; t < 100; ++t) {
        auto f = Program::random_table(n, rng), g = Program::random_table(n, rng);
        auto pi = Permutation::random(2 * n, rng);
        auto x = BitVector::random(n, rng), y = BitVector::random(n, rng);
        CHECK(tamper(SplitState{f, g}, x.concat(y)) == f(x).concat(g(y)));
        CHECK(tamper(Interleaved{f, g, pi}, pi.apply(x.concat(y))) == pi.apply(f(x).concat(g(y))));
        auto h = BitMatrix::random(2 * n, 2 * n, rng);
        LinearComposed lc{h, Interleaved{f, g, pi}};
        CHECK(tamper(lc, pi.apply(x.concat(y))) == recompose_direct(lc, x, y));
    }
}

TEST_CASE("decomposition of identity-composed tampering", "[tamperlab][decompose]") {
    const std::size_t n = 4;
    LinearComposed lc{BitMatrix::identity(2 * n), Interleaved{Program::identity(), Program::identity(), Permutation::identity(2 * n)}};
    auto s = decompose_linear_composed(lc);
    for (std::uint64_t v = 0; v < 16; ++v) {
        auto u = BitVector::from_uint(v, n);
        CHECK(s.f1(u) == u);
        CHECK(s.g2(u) == u);
        CHECK(s.g1(u).is_zero());
        CHECK(s.f2(u).is_zero());
    }

    Rng rng(4);
    auto f = Program::random_table(n, rng), g = Program::random_table(n, rng);
    lc.inner = Interleaved{f, g, Permutation::random(2 * n, rng)};
    s = decompose_linear_composed(lc);
    for (std::uint64_t v = 0; v < 16; ++v) {
        auto u = BitVector::from_uint(v, n);
        CHECK(s.f1(u) == f(u));
        CHECK(s.g2(u) == g(u));
        CHECK(s.g1(u).is_zero());
        CHECK(s.f2(u).is_zero());
    }
}

TEST_CASE("decomposition recomposes exhaustively", "[tamperlab][decompose]") {
    Rng rng(5);
    for (std::size_t n : {3, 5, 6, 7}) {
        LinearComposed lc{BitMatrix::random(2 * n, 2 * n, rng),
                          Interleaved{Program::random_table(n, rng), Program::random_table(n, rng), Permutation::random(2 * n, rng)}};
        auto s = decompose_linear_composed(lc);
        std::size_t mismatches = 0;
        for_all_pairs(n, [&](const BitVector& x, const BitVector& y) { mismatches += recompose_sum(s, x, y) != recompose_direct(lc, x, y); });
        CHECK(mismatches == 0);
    }
}

TEST_CASE("fixed-point-free sum forms", "[tamperlab]") {
    const std::size_t n = 4;
    SumForm id{Program::identity(), Program::constant(BitVector(n)), Program::constant(BitVector(n)), Program::identity(),
               Permutation::identity(2 * n), false};
    CHECK_FALSE(is_fixed_point_free(id, n));
    auto shifted = id;
    shifted.f1 = Program::xor_mask(bits("1000"));
    CHECK(is_fixed_point_free(shifted, n));
    auto only_second = id;
    only_second.g2 = Program::xor_mask(bits("0001"));
    CHECK(is_fixed_point_free(only_second, n));

    id.fixed_point_free = true;
    CHECK_THROWS_AS(validate(id, n), AdversaryError);
    shifted.fixed_point_free = true;
    CHECK_NOTHROW(validate(shifted, n));
}

TEST_CASE("protocol runs", "[tamperlab][protocol]") {
    const std::size_t n = 4;
    auto x = bits("1011"), y = bits("0110");

    SECTION("zero rounds") {
        CommProtocol p;
        p.t = 0;
        p.final_f = Program::xor_mask(bits("1111"));
        p.final_g = Program::identity();
        auto r = run_protocol(p, x, y);
        CHECK(r.transcript.size() == 0);
        CHECK(r.x == bits("0100"));
        CHECK(r.y == y);
    }

    SECTION("echo protocol with t = n") {
        CommProtocol p;
        p.t = n;
        BitMatrix send(n, 3 * n), take(n, 3 * n);
        for (std::size_t i = 0; i < n; ++i) {
            send.set(i, i, true);
            take.set(i, n + i, true);
        }
        p.rounds.push_back({Party::alice, n, Program::affine(send)});
        p.final_f = Program::affine(send);
        p.final_g = Program::affine(take);  // y' = x
        CHECK_NOTHROW(validate(p, n));
        auto r = run_protocol(p, x, y);
        CHECK(r.transcript.size() == n);
        CHECK(r.transcript == x);
        CHECK(r.y == x);
    }

    SECTION("two rounds, traced by hand") {
        // Alice: (x0 + x1, x3). Bob: (y2 + m0, y0). Finals XOR the transcript in.
        CommProtocol p;
        p.t = 2;
        BitMatrix alice(2, 8), bob(2, 8), fin(4, 8);
        alice.set(0, 0, true);
        alice.set(0, 1, true);
        alice.set(1, 3, true);
        bob.set(0, 2, true);
        bob.set(0, 4, true);
        bob.set(1, 0, true);
        for (std::size_t i = 0; i < 4; ++i) {
            fin.set(i, i, true);
            fin.set(i, 4 + i, true);
        }
        p.rounds.push_back({Party::alice, 2, Program::affine(alice)});
        p.rounds.push_back({Party::bob, 2, Program::affine(bob)});
        p.final_f = Program::affine(fin);
        p.final_g = Program::affine(fin);
        CHECK_NOTHROW(validate(p, n));
        auto r = run_protocol(p, x, y);
        CHECK(r.transcript == bits("1100"));
        CHECK(r.x == bits("0111"));
        CHECK(r.y == bits("1010"));
        auto again = run_protocol(p, x, y);
        CHECK(again.transcript == r.transcript);
        CHECK(tamper(p, x.concat(y)) == r.x.concat(r.y));
    }

    SECTION("budget is asserted at run time") {
        CommProtocol p;
        p.t = 1;
        p.rounds.push_back({Party::bob, 2, Program::constant(bits("11"))});
        p.final_f = Program::constant(BitVector(n));
        p.final_g = Program::constant(BitVector(n));
        CHECK_THROWS_AS(validate(p, n), AdversaryError);
        CHECK_THROWS_AS(run_protocol(p, x, y), std::logic_error);
    }
}

TEST_CASE("total variation distance", "[tamperlab][tv]") {
    auto u2 = DistributionTable::uniform(2);
    CHECK(tv_distance(u2, u2) == 0);
    CHECK(tv_distance(DistributionTable::point_mass(2, 0), u2) == 0.5);
    CHECK(tv_distance(DistributionTable::point_mass(4, 0), DistributionTable::point_mass(4, 3)) == 1);
    CHECK_THROWS_AS(tv_distance(u2, DistributionTable::uniform(3)), std::invalid_argument);
    CHECK_THROWS_AS(DistributionTable({0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(DistributionTable({1.5, -0.5}), std::invalid_argument);

    Rng rng(6);
    auto random_counts = [&](std::size_t size) {
        std::vector<std::uint64_t> c(size);
        for (auto& x : c) x = rng() % 1000;
        c[0] += 1;
        return c;
    };
    for (int t = 0; t < 200; ++t) {
        auto a = random_counts(16), b = random_counts(16), c = random_counts(16);
        auto p = DistributionTable::from_counts(a), q = DistributionTable::from_counts(b), r = DistributionTable::from_counts(c);
        CHECK(tv_distance(p, q) == Catch::Approx(tv_distance(q, p)).margin(1e-15));
        CHECK(tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r) + 1e-12);
        auto exact = tv_distance(RationalTable(a), RationalTable(b));
        CHECK(tv_distance(p, q) == Catch::Approx(exact.convert_to<double>()).margin(1e-12));
    }
    CHECK(tv_distance(RationalTable({1, 1}), RationalTable({1, 0})) == Rational(1, 2));
    CHECK_THROWS_AS(RationalTable(std::vector<std::uint64_t>((1u << 16) + 1, 1)), std::invalid_argument);
}

TEST_CASE("exact joint tables", "[tamperlab][joint]") {
    auto src = EnumerableSource::uniform(4);
    auto konst = exact_joint([](std::uint64_t) { return 2; }, 4, [](std::uint64_t) { return 1; }, 2, src);
    CHECK(konst.joint[2 * 2 + 1] == 1.0);

    auto ident = exact_joint([](std::uint64_t z) { return z; }, 16, [](std::uint64_t) { return 0; }, 1, src);
    CHECK(tv_distance(ident.joint, DistributionTable::uniform(16)) == 0);

    // Marginals against a direct count; weighted source.
    Rng rng(7);
    std::vector<std::uint64_t> support;
    std::vector<double> weights;
    for (std::uint64_t z = 0; z < 64; z += 3) {
        support.push_back(z);
        weights.push_back(1 + double(rng() % 5));
    }
    auto w = EnumerableSource::weighted(6, support, weights);
    auto fa = [](std::uint64_t z) { return z & 3; };
    auto fb = [](std::uint64_t z) { return (z >> 2) % 3; };
    auto j = exact_joint(fa, 4, fb, 3, w);
    double total = 0;
    std::vector<double> ma(4, 0), mb(3, 0);
    for (std::size_t i = 0; i < support.size(); ++i) {
        total += weights[i];
        ma[fa(support[i])] += weights[i];
        mb[fb(support[i])] += weights[i];
    }
    for (std::size_t u = 0; u < 4; ++u) CHECK(j.marginal_a()[u] == Catch::Approx(ma[u] / total));
    for (std::size_t v = 0; v < 3; ++v) CHECK(j.marginal_b()[v] == Catch::Approx(mb[v] / total));

    try {
        exact_joint(fa, 4, fb, 3, EnumerableSource::uniform(25));
        FAIL("cap not enforced");
    } catch (const CapExceeded& e) {
        CHECK(std::string(e.what()).find("Monte Carlo") != std::string::npos);
    }
}

TEST_CASE("canonical simulator", "[tamperlab][simulator]") {
    ParityScheme scheme;
    auto cb = build_codebook(scheme);
    const auto M = 4;

    auto ident = canonical_simulator(cb, tamper_map(SplitState{}, 8));
    CHECK(ident[M] == 1.0);

    auto c0 = bits("10110010");
    SplitState konst{Program::constant(c0.slice(0, 4)), Program::constant(c0.slice(4, 4))};
    auto sim = canonical_simulator(cb, tamper_map(konst, 8));
    CHECK(sim[M] == 1.0 / 256);
    CHECK(sim[scheme.decode(c0).to_uint()] == 255.0 / 256);

    // Flipping coordinate 0 flips message bit 0: c' never equals c, and
    // decode(c') is uniform over c.
    auto flip = SplitState{Program::xor_mask(bits("1000")), Program::identity()};
    sim = canonical_simulator(cb, tamper_map(flip, 8));
    for (int s = 0; s < M; ++s) CHECK(sim[s] == 0.25);
    CHECK(sim[M] == 0);

    Rng rng(8);
    auto mc = canonical_simulator(scheme, flip, 4000, rng);
    CHECK(mc[M] == 0);
    CHECK(tv_distance(mc, sim) < 0.05);
}

TEST_CASE("non-malleability experiments on a parity code", "[tamperlab][experiment]") {
    ParityScheme scheme;
    NmHarness harness(scheme, "parity8");
    ExperimentConfig cfg;

    auto r = harness.run({"identity", SplitState{}}, cfg);
    CHECK(r.nm_error == 0);
    CHECK(r.trials == 256);

    SplitState konst{Program::constant(bits("1011")), Program::constant(bits("0010"))};
    r = harness.run({"constant", konst}, cfg);
    CHECK(r.nm_error <= 1.0 / 256 + 1e-15);

    // Decoding is linear, so a flip of coordinate 0 maps s to s + 10: real is
    // a point mass, copy(D, s) is uniform.
    r = harness.run({"flip0", SplitState{Program::xor_mask(bits("1000")), Program::identity()}}, cfg);
    CHECK(r.nm_error == Catch::Approx(0.75));
    CHECK(r.per_message.size() == 4);
    CHECK(r.simulator.size() == 5);

    cfg.mode = Mode::monte_carlo;
    cfg.trials = 5000;
    r = harness.run({"flip0", SplitState{Program::xor_mask(bits("1000")), Program::identity()}}, cfg);
    CHECK(std::abs(r.nm_error - 0.75) <= 3 * r.standard_error);
    CHECK(r.standard_error > 0);
}

TEST_CASE("Monte Carlo agrees with exact within error bars", "[tamperlab][experiment]") {
    ParityScheme scheme;
    NmHarness harness(scheme);
    Rng rng(9);
    std::vector<Adversary> advs = {
        {"random-split", SplitState{Program::random_table(4, rng), Program::random_table(4, rng)}},
        {"random-interleaved", Interleaved{Program::random_table(4, rng), Program::random_table(4, rng), Permutation::random(8, rng)}},
    };
    for (const auto& a : advs) {
        ExperimentConfig ex;
        double exact = harness.run(a, ex).nm_error;
        int within = 0;
        for (std::uint64_t seed = 1; seed <= 100; ++seed) {
            ExperimentConfig mc;
            mc.mode = Mode::monte_carlo;
            mc.trials = 2000;
            mc.seed = seed;
            auto r = harness.run(a, mc);
            within += std::abs(r.nm_error - exact) <= 3 * r.standard_error;
        }
        CHECK(within >= 99);
    }
}

TEST_CASE("experiment reports", "[tamperlab][report]") {
    ParityScheme scheme;
    Rng rng(10);
    Adversary a{"random-split", SplitState{Program::random_table(4, rng), Program::random_table(4, rng)}};
    ExperimentConfig cfg;
    cfg.mode = Mode::monte_carlo;
    cfg.trials = 500;
    cfg.seed = 42;
    cfg.threshold = 0.25;
    auto j1 = nm_experiment(scheme, a, cfg, "parity8").to_json();
    auto j2 = nm_experiment(scheme, a, cfg, "parity8").to_json();
    CHECK(j1.dump() == j2.dump());
    CHECK_FALSE(j1.contains("wall_time_s"));
    std::vector<std::string> keys;
    for (auto it = j1.begin(); it != j1.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"version", "profile", "adversary", "family", "mode", "seed", "trials", "nm_error", "standard_error",
                                           "worst_message", "per_message", "simulator", "encode_failures", "threshold", "pass"});
    CHECK(j1["mode"] == "monte-carlo");
    CHECK(j1["simulator"]["messages"].size() == 4);

    cfg.timing = true;
    CHECK(nm_experiment(scheme, a, cfg).to_json().contains("wall_time_s"));
}

TEST_CASE("standard battery", "[tamperlab]") {
    auto b = standard_battery(10, 1);
    REQUIRE(b.size() == 2 + 20 + 3);
    CHECK(b.front().id == "identity");
    CHECK(b.back().id == "protocol-2round-t2");
    for (const auto& a : b) CHECK_NOTHROW(validate(a.spec, 10));
    CHECK(std::holds_alternative<CommProtocol>(b.back().spec));
    CHECK(std::get<CommProtocol>(b.back().spec).t == 2);
    auto again = standard_battery(10, 1);
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(to_json(b[i]).dump() == to_json(again[i]).dump());
}
