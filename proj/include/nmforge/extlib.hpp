#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "bitlin.hpp"
#include "field2m.hpp"

namespace nmforge {

enum class ExtractorKind { strong_hash, linear_multiplicative, fixed_rank_invertible };

inline std::string to_string(ExtractorKind k) {
    switch (k) {
        case ExtractorKind::strong_hash: return "strong-hash";
        case ExtractorKind::linear_multiplicative: return "linear-multiplicative";
        case ExtractorKind::fixed_rank_invertible: return "fixed-rank-invertible";
    }
    return "?";
}
inline ExtractorKind extractor_kind_from_string(const std::string& s) {
    if (s == "strong-hash") return ExtractorKind::strong_hash;
    if (s == "linear-multiplicative") return ExtractorKind::linear_multiplicative;
    if (s == "fixed-rank-invertible") return ExtractorKind::fixed_rank_invertible;
    throw std::invalid_argument("unknown extractor kind: " + s);
}

struct SeededExtractorSpec {
    ExtractorKind kind = ExtractorKind::strong_hash;
    std::size_t n_in = 0, d = 0, m_out = 0;
    std::size_t k_min = 0;  // 0 means n_in
    double eps = 0;         // filled by the constructor when left at 0
};

// x -> first m_out coefficients of lift(seed) * x in GF(2^L).
//
// L = n_in for the linear kinds and max(n_in, d, m_out) for strong-hash (x is
// zero-padded). A seed of full length L is used as the field element itself.
// Shorter seeds are lifted injectively and linearly to sum_j s_j * rho^(j+1),
// rho being the field's spreading element, so a nonzero seed never maps to a
// sparse low-degree multiplier.
class SeededExtractor {
public:
    SeededExtractor() = default;
    explicit SeededExtractor(SeededExtractorSpec spec, const FieldOverrides& ov = {}) : spec_(spec) {
        auto& s = spec_;
        if (s.n_in == 0 || s.d == 0 || s.m_out == 0) throw std::invalid_argument("extractor lengths must be positive");
        if (s.k_min == 0) s.k_min = s.n_in;
        if (s.k_min > s.n_in) throw std::invalid_argument("extractor k_min exceeds n_in");
        if (s.kind == ExtractorKind::strong_hash) {
            L_ = std::max({s.n_in, s.d, s.m_out});
        } else {
            L_ = s.n_in;
            if (s.d > s.n_in || s.m_out > s.n_in)
                throw std::invalid_argument("linear extractor needs d <= n_in and m_out <= n_in");
        }
        field_ = field_for(static_cast<unsigned>(L_), ov);
        if (s.eps == 0) s.eps = default_eps();
        if (s.d < L_) {
            BitVector p = field_->spreading_element();
            for (std::size_t j = 0; j < s.d; ++j) {
                lift_.push_back(p);
                p = field_->mul(p, field_->spreading_element());
            }
        }
        if (L_ <= 64)
            for (auto& b : lift_) lift_words_.push_back(b.to_uint());
    }

    const SeededExtractorSpec& spec() const { return spec_; }
    std::size_t field_degree() const { return L_; }
    const FieldSpec& field() const { return *field_; }
    bool linear() const { return spec_.kind != ExtractorKind::strong_hash; }

    BitVector seed_element(const BitVector& seed) const {
        check_seed(seed);
        if (lift_.empty()) return seed;
        BitVector a(L_);
        for (std::size_t j = 0; j < seed.size(); ++j)
            if (seed.get(j)) a ^= lift_[j];
        return a;
    }

    BitVector operator()(const BitVector& x, const BitVector& seed) const {
        if (x.size() != spec_.n_in) throw std::invalid_argument("extractor input has wrong length");
        check_seed(seed);
        if (spec_.kind == ExtractorKind::fixed_rank_invertible && seed.is_zero())
            throw std::invalid_argument("zero seed is not admissible for a fixed-rank extractor");
        if (L_ <= 64) return BitVector::from_uint(eval(x.to_uint(), seed.to_uint()), spec_.m_out);
        return field_->mul(seed_element(seed), x.resized(L_)).slice(0, spec_.m_out);
    }

    // Word-level evaluation for L <= 64.
    std::uint64_t eval(std::uint64_t x, std::uint64_t seed) const {
        std::uint64_t a = seed;
        if (!lift_words_.empty()) {
            a = 0;
            for (; seed; seed &= seed - 1) a ^= lift_words_[std::countr_zero(seed)];
        }
        std::uint64_t y = field_->mul(a, x);
        return spec_.m_out == 64 ? y : y & ((std::uint64_t{1} << spec_.m_out) - 1);
    }

    // m_out x n_in matrix of x -> Ext(x, seed).
    BitMatrix matrix(const BitVector& seed) const {
        auto full = as_linear_map(*field_, seed_element(seed), spec_.m_out);
        if (L_ == spec_.n_in) return full;
        std::vector<std::size_t> cols(spec_.n_in);
        for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = i;
        return full.select_cols(cols);
    }

    AffineSpace preimage(const BitVector& seed, const BitVector& y) const {
        if (spec_.kind != ExtractorKind::fixed_rank_invertible)
            throw std::invalid_argument("pre-images are only defined for fixed-rank extractors");
        if (seed.is_zero()) throw std::invalid_argument("zero seed is not admissible for a fixed-rank extractor");
        if (y.size() != spec_.m_out) throw std::invalid_argument("pre-image target has wrong length");
        auto s = solve_affine(matrix(seed), y);
        if (!s) throw std::logic_error("fixed-rank extractor matrix lost rank");
        return *s;
    }

private:
    void check_seed(const BitVector& seed) const {
        if (seed.size() != spec_.d) throw std::invalid_argument("extractor seed has wrong length");
    }

    // Universal hashing bound. With a full seed the family is universal and the
    // leftover-hash error is 2^-((k-m)/2); a seed lifted from d < L bits spans
    // only a 2^d subset of multipliers, which costs a 2^(L-d) collision factor.
    double default_eps() const {
        double k = double(spec_.k_min), m = double(spec_.m_out);
        if (spec_.d >= L_) return std::min(1.0, std::pow(2.0, -(k - m) / 2));
        double coll = std::pow(2.0, m - k) + std::pow(2.0, double(L_ - spec_.d)) - 1;
        return std::min(1.0, 0.5 * std::sqrt(coll));
    }

    SeededExtractorSpec spec_;
    std::size_t L_ = 0;
    FieldPtr field_;
    std::vector<BitVector> lift_;
    std::vector<std::uint64_t> lift_words_;
};

inline BitVector ext_strong(const SeededExtractor& e, const BitVector& x, const BitVector& seed) { return e(x, seed); }
inline BitVector lext_linear(const SeededExtractor& e, const BitVector& x, const BitVector& seed) {
    if (!e.linear()) throw std::invalid_argument("lext_linear needs a linear extractor");
    return e(x, seed);
}
inline AffineSpace lext_preimage(const SeededExtractor& e, const BitVector& seed, const BitVector& y) {
    return e.preimage(seed, y);
}

// Zero seed replaced by the seed of value one.
inline BitVector nonzero_seed(BitVector seed) {
    if (seed.is_zero() && seed.size() > 0) seed.set(0, true);
    return seed;
}

struct SampleIndexSet {
    std::vector<std::size_t> indices;
    std::size_t range = 0;
};

inline std::size_t ceil_log2(std::size_t v) {
    std::size_t b = 0;
    while ((std::size_t{1} << b) < v) ++b;
    return b;
}

// Ext(x, r) for every seed r in order, each reduced modulo range.
inline SampleIndexSet samp(const SeededExtractor& e, const BitVector& x, std::size_t range) {
    if (range == 0) throw std::invalid_argument("sampler range must be positive");
    if (e.spec().m_out != std::max<std::size_t>(1, ceil_log2(range)))
        throw std::invalid_argument("sampler output length must be ceil(log2(range))");
    if (e.spec().d > 24) throw std::invalid_argument("sampler seed too long to enumerate");
    SampleIndexSet out;
    out.range = range;
    const std::size_t D = std::size_t{1} << e.spec().d;
    out.indices.reserve(D);
    if (e.field_degree() <= 64) {
        std::uint64_t xv = x.to_uint();
        if (x.size() != e.spec().n_in) throw std::invalid_argument("sampler input has wrong length");
        for (std::size_t r = 0; r < D; ++r) out.indices.push_back(e.eval(xv, r) % range);
    } else {
        for (std::size_t r = 0; r < D; ++r)
            out.indices.push_back(e(x, BitVector::from_uint(r, e.spec().d)).to_uint() % range);
    }
    return out;
}

// Inner product of two r-vectors over GF(2^m); block i is bits [i*m, (i+1)*m).
inline BitVector ip_extract(const BitVector& x, const BitVector& y, const FieldSpec& f, std::size_t r) {
    const std::size_t m = f.m();
    if (x.size() != r * m || y.size() != r * m) throw std::invalid_argument("ip_extract: inputs must have r*m bits");
    BitVector acc(m);
    for (std::size_t i = 0; i < r; ++i) acc ^= f.mul(x.slice(i * m, m), y.slice(i * m, m));
    return acc;
}

struct CondenserSpec {
    std::size_t n_in = 0;
    std::size_t iterations = 2;

    std::size_t rows() const {
        std::size_t d = 1;
        for (std::size_t i = 0; i < iterations; ++i) d *= 3;
        return d;
    }
    std::size_t row_len() const { return n_in >> iterations; }
    void validate() const {
        if (iterations == 0 || n_in == 0 || (n_in % (std::size_t{1} << iterations)) != 0)
            throw std::invalid_argument("condenser input length must be a positive multiple of 2^iterations");
    }
};

// Row digits in base 3, first iteration most significant. Each step splits the
// current value into halves (a, b) over GF(2^(len/2)) and keeps a, b or a*b.
inline BitVector condense(const BitVector& x, std::size_t row, const CondenserSpec& spec, const FieldOverrides& ov = {}) {
    spec.validate();
    if (x.size() != spec.n_in) throw std::invalid_argument("condenser input has wrong length");
    if (row >= spec.rows()) throw std::invalid_argument("condenser row out of range");
    std::vector<int> digits(spec.iterations);
    for (std::size_t i = spec.iterations; i-- > 0; row /= 3) digits[i] = static_cast<int>(row % 3);
    BitVector v = x;
    for (int dgt : digits) {
        std::size_t half = v.size() / 2;
        BitVector a = v.slice(0, half), b = v.slice(half, half);
        if (dgt == 0) v = std::move(a);
        else if (dgt == 1) v = std::move(b);
        else v = field_for(static_cast<unsigned>(half), ov)->mul(a, b);
    }
    return v;
}

}  // namespace nmforge
