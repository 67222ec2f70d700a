#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "bitlin.hpp"
#include "field2m.hpp"
#include "rng.hpp"

namespace nmforge {

// gen is n_out x k_in, so encode(msg) = gen * msg and rows are coordinates.
struct LinearCodeSpec {
    std::string family;  // "dual-bch" or "explicit"
    std::size_t n_out = 0;
    std::size_t k_in = 0;
    BitMatrix gen;
    double rate = 0;
    double rel_distance = 0;  // claimed lower bound on min weight / n_out
    std::size_t n_b = 0, t_b = 0;

    // Rank of the coordinate functionals at idx.
    std::size_t coordinate_rank(const std::vector<std::size_t>& idx) const { return rank(gen.select_rows(idx)); }
};

inline BitVector encode(const LinearCodeSpec& code, const BitVector& msg) {
    if (msg.size() != code.k_in) throw std::invalid_argument("encode: message length does not match code");
    return code.gen * msg;
}

// Gray-code walk over all 2^k_in messages.
inline std::size_t min_distance_exhaustive(const LinearCodeSpec& code) {
    if (code.k_in > 26) throw std::invalid_argument("code too large for exhaustive distance");
    std::vector<BitVector> cols(code.k_in, BitVector(code.n_out));
    for (std::size_t r = 0; r < code.n_out; ++r)
        for (std::size_t c = 0; c < code.k_in; ++c)
            if (code.gen.get(r, c)) cols[c].set(r, true);
    BitVector cw(code.n_out);
    std::size_t best = code.n_out + 1;
    for (std::uint64_t i = 1; i < (std::uint64_t{1} << code.k_in); ++i) {
        cw ^= cols[std::countr_zero(i)];
        best = std::min(best, cw.popcount());
    }
    return best;
}

namespace detail {

inline std::size_t field_order(const FieldSpec& f, std::uint64_t a) {
    std::size_t ord = 1;
    for (std::uint64_t x = a; x != 1; x = f.mul(x, a)) ++ord;
    return ord;
}

}  // namespace detail

// Dual of the narrow-sense binary BCH code of length 2^s - 1 whose generator
// has roots alpha^1 .. alpha^(2 t_b - 1). The dual is the cyclic code
// generated by the reciprocal of the BCH check polynomial.
inline LinearCodeSpec build_dual_bch(std::size_t n_b, std::size_t t_b) {
    unsigned s = 0;
    while ((std::size_t{1} << s) - 1 < n_b) ++s;
    if (n_b < 3 || (std::size_t{1} << s) - 1 != n_b || s > 20) throw std::invalid_argument("dual BCH: n_b must be 2^s - 1 with 2 <= s <= 20");
    if (t_b < 1 || t_b * s > n_b) throw std::invalid_argument("dual BCH: need 1 <= t_b and t_b * s <= n_b");

    FieldSpec f = FieldSpec::standard(s);
    std::uint64_t alpha = 2;
    while (detail::field_order(f, alpha) != n_b) ++alpha;

    std::set<std::size_t> roots;
    for (std::size_t i = 1; i <= 2 * t_b - 1; ++i)
        for (std::size_t j = i % n_b; roots.insert(j).second;) j = (2 * j) % n_b;
    if (roots.size() >= n_b) throw std::invalid_argument("dual BCH: designed distance too large for n_b");

    // g(x) = prod (x - alpha^j) with coefficients in GF(2^s).
    std::vector<std::uint64_t> g{1};
    for (auto j : roots) {
        std::uint64_t r = 1;
        for (std::size_t e = 0; e < j; ++e) r = f.mul(r, alpha);
        std::vector<std::uint64_t> next(g.size() + 1, 0);
        for (std::size_t k = 0; k < g.size(); ++k) {
            next[k + 1] ^= g[k];
            next[k] ^= f.mul(g[k], r);
        }
        g = std::move(next);
    }
    poly::Poly gb;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (g[k] > 1) throw std::logic_error("BCH generator coefficient outside GF(2)");
        if (g[k]) poly::flip(gb, k);
    }

    // h = (x^n - 1) / g by long division.
    poly::Poly rem;
    poly::flip(rem, n_b);
    poly::flip(rem, 0);
    poly::Poly h;
    int dg = poly::degree(gb);
    for (int i = poly::degree(rem); i >= dg; i = poly::degree(rem)) {
        poly::flip(h, static_cast<std::size_t>(i - dg));
        poly::xor_shifted(rem, gb, static_cast<std::size_t>(i - dg));
    }
    if (poly::degree(rem) >= 0) throw std::logic_error("BCH generator does not divide x^n - 1");
    int dh = poly::degree(h);

    const std::size_t k = static_cast<std::size_t>(dg);
    LinearCodeSpec code;
    code.family = "dual-bch";
    code.n_out = n_b;
    code.k_in = k;
    code.n_b = n_b;
    code.t_b = t_b;
    code.gen = BitMatrix(n_b, k);
    for (std::size_t j = 0; j < k; ++j)
        for (int e = 0; e <= dh; ++e)
            if (poly::bit(h, static_cast<std::size_t>(dh - e))) code.gen.set(j + e, j, true);
    code.rate = double(k) / double(n_b);
    double cu = (double(n_b) + 1) / 2 - (double(t_b) - 1) * std::sqrt(double(n_b) + 1);
    code.rel_distance = std::max(0.0, std::ceil(cu - 1e-9)) / double(n_b);
    return code;
}

// Same code, different message basis: gen * B for a fixed invertible B. In the
// cyclic basis coordinate i only reads a window of message bits ending at i;
// after the change every coordinate functional is dense.
inline LinearCodeSpec with_dense_basis(LinearCodeSpec code) {
    std::uint64_t state = 0x6a09e667f3bcc909ULL ^ (code.n_out << 32) ^ code.k_in;
    Rng rng(splitmix64(state));
    BitMatrix b;
    do b = BitMatrix::random(code.k_in, code.k_in, rng);
    while (rank(b) != code.k_in);
    code.gen = code.gen * b;
    return code;
}

inline LinearCodeSpec explicit_code(BitMatrix gen) {
    LinearCodeSpec code;
    code.family = "explicit";
    code.n_out = gen.rows();
    code.k_in = gen.cols();
    if (rank(gen) != code.k_in) throw std::invalid_argument("explicit code generator must have full column rank");
    code.gen = std::move(gen);
    code.rate = code.n_out ? double(code.k_in) / double(code.n_out) : 0;
    code.rel_distance = code.k_in <= 20 ? double(min_distance_exhaustive(code)) / double(code.n_out) : 0;
    return code;
}

}  // namespace nmforge
