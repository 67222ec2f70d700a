#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "bitlin.hpp"
#include "rng.hpp"

namespace nmforge {

namespace poly {

// Dense GF(2)[x] polynomials as little-endian words; bit i is the x^i coefficient.
using Poly = std::vector<std::uint64_t>;

inline int degree(const Poly& p) {
    for (std::size_t k = p.size(); k-- > 0;)
        if (p[k]) return static_cast<int>(k * 64 + 63 - std::countl_zero(p[k]));
    return -1;
}
inline bool bit(const Poly& p, std::size_t i) { return i / 64 < p.size() && ((p[i / 64] >> (i % 64)) & 1); }
inline void flip(Poly& p, std::size_t i) {
    if (i / 64 >= p.size()) p.resize(i / 64 + 1, 0);
    p[i / 64] ^= std::uint64_t{1} << (i % 64);
}
inline void xor_shifted(Poly& dst, const Poly& src, std::size_t shift) {
    std::size_t ws = shift / 64, bs = shift % 64;
    std::size_t need = src.size() + ws + 1;
    if (dst.size() < need) dst.resize(need, 0);
    for (std::size_t k = 0; k < src.size(); ++k) {
        dst[k + ws] ^= src[k] << bs;
        if (bs) dst[k + ws + 1] ^= src[k] >> (64 - bs);
    }
}
inline void normalize(Poly& p) {
    while (!p.empty() && p.back() == 0) p.pop_back();
}
inline Poly mod(Poly a, const Poly& f) {
    int df = degree(f);
    if (df < 0) throw std::invalid_argument("polynomial modulus is zero");
    for (int i = degree(a); i >= df; i = degree(a)) xor_shifted(a, f, static_cast<std::size_t>(i - df));
    normalize(a);
    return a;
}
inline Poly mul(const Poly& a, const Poly& b) {
    Poly out;
    for (std::size_t k = 0; k < a.size(); ++k)
        for (std::uint64_t w = a[k]; w; w &= w - 1) xor_shifted(out, b, k * 64 + std::countr_zero(w));
    normalize(out);
    return out;
}
inline Poly gcd(Poly a, Poly b) {
    normalize(a);
    normalize(b);
    while (!b.empty()) {
        a = mod(std::move(a), b);
        std::swap(a, b);
    }
    return a;
}
inline Poly from_bits(const BitVector& v) {
    Poly p(v.words().begin(), v.words().end());
    normalize(p);
    return p;
}
inline BitVector to_bits(const Poly& p, std::size_t len) {
    BitVector v(len);
    for (std::size_t i = 0; i < len; ++i)
        if (bit(p, i)) v.set(i, true);
    return v;
}

// Ben-Or: f of degree m is irreducible iff gcd(x^(2^i) - x, f) = 1 for i <= m/2.
inline bool is_irreducible(const Poly& f_in) {
    Poly f = f_in;
    normalize(f);
    int m = degree(f);
    if (m < 1) return false;
    if (m == 1) return true;
    if (!bit(f, 0)) return false;
    Poly xpow{2};  // x
    for (int i = 1; i <= m / 2; ++i) {
        xpow = mod(mul(xpow, xpow), f);
        Poly g = xpow;
        flip(g, 1);
        normalize(g);
        if (g.empty()) return false;
        if (degree(gcd(f, g)) > 0) return false;
    }
    return true;
}

// Trial division by every polynomial of degree 1..m/2; practical for m <= 32.
inline bool is_irreducible_trial(std::uint64_t f) {
    int m = 63 - std::countl_zero(f);
    if (m < 1) return false;
    for (int dg = 1; dg <= m / 2; ++dg)
        for (std::uint64_t g = std::uint64_t{1} << dg; g < (std::uint64_t{2} << dg); ++g) {
            std::uint64_t r = f;
            for (int i = m; i >= dg; --i)
                if ((r >> i) & 1) r ^= g << (i - dg);
            if (r == 0) return false;
        }
    return true;
}

}  // namespace poly

inline bool is_irreducible(const BitVector& modulus) {
    int m = static_cast<int>(modulus.size()) - 1;
    if (m >= 1 && m <= 32 && modulus.get(static_cast<std::size_t>(m))) return poly::is_irreducible_trial(modulus.to_uint());
    return poly::is_irreducible(poly::from_bits(modulus));
}

// Lowest-weight irreducible of degree m: the trinomial x^m + x^k + 1 with the
// smallest k, else the pentanomial x^m + x^a + x^b + x^c + 1 with the smallest
// (a, b, c) in lexicographic order.
inline BitVector default_modulus(unsigned m) {
    if (m == 0) throw std::invalid_argument("field degree must be positive");
    auto make = [m](std::initializer_list<unsigned> exps) {
        BitVector f(m + 1);
        f.set(m, true);
        f.set(0, true);
        for (auto e : exps) f.set(e, true);
        return f;
    };
    if (m == 1) {
        BitVector f(2);
        f.set(0, true);
        f.set(1, true);
        return f;
    }
    for (unsigned k = 1; k < m; ++k) {
        auto f = make({k});
        if (is_irreducible(f)) return f;
    }
    for (unsigned a = 3; a < m; ++a)
        for (unsigned b = 2; b < a; ++b)
            for (unsigned c = 1; c < b; ++c) {
                auto f = make({a, b, c});
                if (is_irreducible(f)) return f;
            }
    throw std::logic_error("no low-weight irreducible polynomial found");
}

class FieldSpec {
public:
    FieldSpec(unsigned m, BitVector modulus) : m_(m), modulus_(std::move(modulus)) {
        if (m == 0) throw std::invalid_argument("field degree must be positive");
        if (modulus_.size() != m + 1 || !modulus_.get(m))
            throw std::invalid_argument("modulus must have degree exactly m");
        if (!is_irreducible(modulus_)) throw std::invalid_argument("field modulus is not irreducible");
        for (unsigned e = 0; e < m; ++e)
            if (modulus_.get(e)) low_exps_.push_back(e);
        if (m <= 64) {
            for (auto e : low_exps_) low_ |= std::uint64_t{1} << e;
        }
        spread_ = find_spreading_element();
    }

    static FieldSpec standard(unsigned m) { return FieldSpec(m, default_modulus(m)); }

    unsigned m() const { return m_; }
    const BitVector& modulus() const { return modulus_; }
    bool small() const { return m_ <= 64; }

    // Fast path for m <= 64: elements packed into one word.
    std::uint64_t mul(std::uint64_t a, std::uint64_t b) const {
        unsigned __int128 p = 0;
        for (; a; a &= a - 1) p ^= static_cast<unsigned __int128>(b) << std::countr_zero(a);
        for (int i = 2 * static_cast<int>(m_) - 2; i >= static_cast<int>(m_); --i)
            if ((p >> i) & 1) p ^= (static_cast<unsigned __int128>(low_) << (i - m_)) | (static_cast<unsigned __int128>(1) << i);
        return static_cast<std::uint64_t>(p);
    }

    BitVector mul(const BitVector& a, const BitVector& b) const {
        check(a);
        check(b);
        if (small()) return BitVector::from_uint(mul(a.to_uint(), b.to_uint()), m_);
        poly::Poly p;
        poly::Poly pb(b.words().begin(), b.words().end());
        for (std::size_t k = 0; k < a.words().size(); ++k)
            for (std::uint64_t w = a.words()[k]; w; w &= w - 1) poly::xor_shifted(p, pb, k * 64 + std::countr_zero(w));
        for (int i = poly::degree(p); i >= static_cast<int>(m_); i = poly::degree(p)) {
            poly::flip(p, static_cast<std::size_t>(i));
            for (auto e : low_exps_) poly::flip(p, i - m_ + e);
        }
        return poly::to_bits(p, m_);
    }

    // a^(2^m - 2) by square-and-multiply.
    BitVector inv(const BitVector& a) const {
        check(a);
        if (a.is_zero()) throw std::invalid_argument("zero has no inverse");
        BitVector result = one(), base = a;
        // exponent bits: 0 at position 0, 1 at positions 1..m-1
        for (unsigned i = 1; i < m_; ++i) {
            base = mul(base, base);
            result = mul(result, base);
        }
        return result;
    }

    BitVector one() const { return BitVector::from_uint(1, m_); }
    BitVector zero() const { return BitVector(m_); }

    // A fixed element that lies in no proper subfield. Short seeds are lifted to
    // field elements through its powers.
    const BitVector& spreading_element() const { return spread_; }

    friend bool operator==(const FieldSpec& a, const FieldSpec& b) {
        return a.m_ == b.m_ && a.modulus_ == b.modulus_;
    }

private:
    void check(const BitVector& a) const {
        if (a.size() != m_) throw std::invalid_argument("field element has wrong length");
    }

    BitVector frobenius(BitVector a, unsigned times) const {
        for (unsigned i = 0; i < times; ++i) a = mul(a, a);
        return a;
    }

    BitVector find_spreading_element() const {
        if (m_ == 1) return one();
        std::vector<unsigned> primes;
        for (unsigned p = 2, r = m_; r > 1; ++p)
            if (r % p == 0) {
                primes.push_back(p);
                while (r % p == 0) r /= p;
            }
        std::uint64_t state = 0x5eed000000000000ULL ^ m_;
        for (;;) {
            BitVector c(m_);
            for (auto& w : c.words()) w = splitmix64(state);
            c.resize(m_);
            if (c.popcount() < 2) continue;
            bool generic = true;
            for (auto p : primes)
                if (frobenius(c, m_ / p) == c) generic = false;
            if (generic) return c;
        }
    }

    unsigned m_;
    BitVector modulus_;
    std::vector<unsigned> low_exps_;
    std::uint64_t low_ = 0;
    BitVector spread_;
};

using FieldPtr = std::shared_ptr<const FieldSpec>;

// Standard fields are built once per degree and shared.
inline FieldPtr standard_field(unsigned m) {
    static std::mutex mu;
    static std::map<unsigned, FieldPtr> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[m];
    if (!slot) slot = std::make_shared<const FieldSpec>(FieldSpec::standard(m));
    return slot;
}

// Per-degree replacements for the standard fields.
using FieldOverrides = std::map<unsigned, FieldPtr>;

inline FieldPtr field_for(unsigned m, const FieldOverrides& ov) {
    auto it = ov.find(m);
    return it != ov.end() ? it->second : standard_field(m);
}

struct FieldElem {
    FieldPtr spec;
    BitVector coeffs;

    FieldElem(FieldPtr s, BitVector c) : spec(std::move(s)), coeffs(std::move(c)) {
        if (!spec || coeffs.size() != spec->m()) throw std::invalid_argument("field element has wrong length");
    }
    static FieldElem from_uint(FieldPtr s, std::uint64_t v) {
        auto m = s->m();
        return FieldElem(std::move(s), BitVector::from_uint(v, m));
    }
    bool is_zero() const { return coeffs.is_zero(); }
    friend bool operator==(const FieldElem& a, const FieldElem& b) {
        return *a.spec == *b.spec && a.coeffs == b.coeffs;
    }
};

namespace detail {
inline void same_field(const FieldElem& a, const FieldElem& b) {
    if (a.spec != b.spec && !(*a.spec == *b.spec)) throw std::invalid_argument("field elements from different fields");
}
}  // namespace detail

inline FieldElem fadd(const FieldElem& a, const FieldElem& b) {
    detail::same_field(a, b);
    return FieldElem(a.spec, a.coeffs ^ b.coeffs);
}
inline FieldElem fmul(const FieldElem& a, const FieldElem& b) {
    detail::same_field(a, b);
    return FieldElem(a.spec, a.spec->mul(a.coeffs, b.coeffs));
}
inline FieldElem finv(const FieldElem& a) { return FieldElem(a.spec, a.spec->inv(a.coeffs)); }

// Matrix of x -> first out_bits coefficients of a*x. Column j is a*x^j.
inline BitMatrix as_linear_map(const FieldSpec& f, const BitVector& a, std::size_t out_bits) {
    if (out_bits < 1 || out_bits > f.m()) throw std::invalid_argument("as_linear_map: out_bits must be in [1, m]");
    BitMatrix mat(out_bits, f.m());
    BitVector col = a;
    BitVector x = f.m() > 1 ? BitVector::from_uint(2, f.m()) : f.one();
    for (std::size_t j = 0; j < f.m(); ++j) {
        for (std::size_t r = 0; r < out_bits; ++r)
            if (col.get(r)) mat.set(r, j, true);
        col = f.mul(col, x);
    }
    return mat;
}
inline BitMatrix as_linear_map(const FieldElem& a, std::size_t out_bits) {
    return as_linear_map(*a.spec, a.coeffs, out_bits);
}

}  // namespace nmforge
