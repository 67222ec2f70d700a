#pragma once

#include <algorithm>
#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/container/small_vector.hpp>

namespace nmforge {

// Bit i lives in word i/64 at position i%64. Bits past len are kept zero so
// word-level equality and hashing need no masking.
class BitVector {
public:
    using Words = boost::container::small_vector<std::uint64_t, 2>;

    BitVector() = default;
    explicit BitVector(std::size_t len) : len_(len), words_(word_count(len), 0) {}

    static BitVector from_uint(std::uint64_t value, std::size_t len) {
        BitVector v(len);
        if (len == 0) return v;
        v.words_[0] = len < 64 ? value & ((std::uint64_t{1} << len) - 1) : value;
        return v;
    }

    // "1010": character i is bit i.
    static BitVector from_bits(std::string_view bits) {
        BitVector v(bits.size());
        for (std::size_t i = 0; i < bits.size(); ++i) {
            if (bits[i] == '1') v.set(i, true);
            else if (bits[i] != '0') throw std::invalid_argument("bit string may only contain 0 and 1");
        }
        return v;
    }

    // "len:hex", most significant nibble first. Extra leading zero nibbles are
    // accepted; set bits beyond len are not.
    static BitVector parse(std::string_view text) {
        auto colon = text.find(':');
        if (colon == std::string_view::npos || colon == 0)
            throw std::invalid_argument("bit vector text must look like len:hex");
        std::size_t len = 0;
        for (char c : text.substr(0, colon)) {
            if (c < '0' || c > '9') throw std::invalid_argument("bad length in bit vector text");
            len = len * 10 + static_cast<std::size_t>(c - '0');
            if (len > (std::size_t{1} << 30)) throw std::invalid_argument("bit vector too long");
        }
        auto hex = text.substr(colon + 1);
        BitVector v(len);
        std::size_t pos = 0;
        for (auto it = hex.rbegin(); it != hex.rend(); ++it, pos += 4) {
            int nib = hex_value(*it);
            if (nib < 0) throw std::invalid_argument("bad hex digit in bit vector text");
            for (int b = 0; b < 4; ++b) {
                if (!((nib >> b) & 1)) continue;
                if (pos + b >= len) throw std::invalid_argument("bit vector value exceeds its length");
                v.set(pos + b, true);
            }
        }
        return v;
    }

    std::string to_text() const {
        std::string out = std::to_string(len_) + ":";
        std::size_t nibbles = (len_ + 3) / 4;
        if (nibbles == 0) return out + "0";
        for (std::size_t k = nibbles; k-- > 0;) {
            int nib = 0;
            for (int b = 0; b < 4; ++b)
                if (k * 4 + b < len_ && get(k * 4 + b)) nib |= 1 << b;
            out.push_back("0123456789abcdef"[nib]);
        }
        return out;
    }

    std::string to_bits() const {
        std::string s(len_, '0');
        for (std::size_t i = 0; i < len_; ++i)
            if (get(i)) s[i] = '1';
        return s;
    }

    std::size_t size() const { return len_; }
    bool empty() const { return len_ == 0; }

    bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
    bool operator[](std::size_t i) const { return get(i); }
    void set(std::size_t i, bool b) {
        auto mask = std::uint64_t{1} << (i & 63);
        if (b) words_[i >> 6] |= mask;
        else words_[i >> 6] &= ~mask;
    }
    void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

    std::uint64_t to_uint() const {
        if (len_ > 64) throw std::invalid_argument("bit vector longer than 64 bits");
        return words_.empty() ? 0 : words_[0];
    }

    const Words& words() const { return words_; }
    Words& words() { return words_; }

    bool is_zero() const {
        return std::all_of(words_.begin(), words_.end(), [](auto w) { return w == 0; });
    }
    std::size_t popcount() const {
        std::size_t c = 0;
        for (auto w : words_) c += std::popcount(w);
        return c;
    }
    // Lowest set index, or size() if none.
    std::size_t first_set() const {
        for (std::size_t k = 0; k < words_.size(); ++k)
            if (words_[k]) return k * 64 + std::countr_zero(words_[k]);
        return len_;
    }

    BitVector& operator^=(const BitVector& o) {
        if (o.len_ != len_) throw std::invalid_argument("xor of bit vectors with different lengths");
        for (std::size_t k = 0; k < words_.size(); ++k) words_[k] ^= o.words_[k];
        return *this;
    }
    friend BitVector operator^(BitVector a, const BitVector& b) { return a ^= b; }
    BitVector& operator&=(const BitVector& o) {
        if (o.len_ != len_) throw std::invalid_argument("and of bit vectors with different lengths");
        for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= o.words_[k];
        return *this;
    }
    friend BitVector operator&(BitVector a, const BitVector& b) { return a &= b; }

    bool dot(const BitVector& o) const {
        if (o.len_ != len_) throw std::invalid_argument("dot product of bit vectors with different lengths");
        std::uint64_t acc = 0;
        for (std::size_t k = 0; k < words_.size(); ++k) acc ^= words_[k] & o.words_[k];
        return std::popcount(acc) & 1;
    }

    BitVector slice(std::size_t offset, std::size_t len) const {
        if (offset + len > len_) throw std::invalid_argument("slice out of range");
        BitVector out(len);
        if (len == 0) return out;
        std::size_t shift = offset & 63, base = offset >> 6;
        for (std::size_t k = 0; k < out.words_.size(); ++k) {
            std::uint64_t lo = base + k < words_.size() ? words_[base + k] : 0;
            std::uint64_t hi = base + k + 1 < words_.size() ? words_[base + k + 1] : 0;
            out.words_[k] = shift ? (lo >> shift) | (hi << (64 - shift)) : lo;
        }
        out.trim();
        return out;
    }

    // Copies src into bits [offset, offset + src.size()).
    void assign(std::size_t offset, const BitVector& src) {
        if (offset + src.len_ > len_) throw std::invalid_argument("assign out of range");
        for (std::size_t k = 0; k < src.words_.size(); ++k) {
            std::size_t nbits = std::min<std::size_t>(64, src.len_ - 64 * k);
            std::uint64_t mask = nbits == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << nbits) - 1;
            std::uint64_t w = src.words_[k];
            std::size_t at = offset + 64 * k, wi = at >> 6, sh = at & 63;
            words_[wi] = (words_[wi] & ~(mask << sh)) | (w << sh);
            if (sh && sh + nbits > 64) {
                std::uint64_t hm = mask >> (64 - sh);
                words_[wi + 1] = (words_[wi + 1] & ~hm) | (w >> (64 - sh));
            }
        }
    }

    void append(const BitVector& tail) {
        std::size_t old = len_;
        resize(len_ + tail.len_);
        assign(old, tail);
    }
    BitVector concat(const BitVector& tail) const {
        BitVector out = *this;
        out.append(tail);
        return out;
    }

    // Zero-extends or truncates.
    void resize(std::size_t len) {
        len_ = len;
        words_.resize(word_count(len), 0);
        trim();
    }
    BitVector resized(std::size_t len) const {
        BitVector out = *this;
        out.resize(len);
        return out;
    }

    friend bool operator==(const BitVector& a, const BitVector& b) {
        return a.len_ == b.len_ && std::equal(a.words_.begin(), a.words_.end(), b.words_.begin());
    }
    friend std::strong_ordering operator<=>(const BitVector& a, const BitVector& b) {
        if (a.len_ != b.len_) return a.len_ <=> b.len_;
        for (std::size_t k = a.words_.size(); k-- > 0;)
            if (a.words_[k] != b.words_[k]) return a.words_[k] <=> b.words_[k];
        return std::strong_ordering::equal;
    }

    std::size_t hash() const {
        std::size_t h = len_ * 0x9e3779b97f4a7c15ULL;
        for (auto w : words_) h = (h ^ w) * 0xff51afd7ed558ccdULL + (h >> 29);
        return h;
    }

    template <class Rng>
    static BitVector random(std::size_t len, Rng& rng) {
        BitVector v(len);
        for (auto& w : v.words_) w = static_cast<std::uint64_t>(rng());
        v.trim();
        return v;
    }

private:
    static std::size_t word_count(std::size_t len) { return (len + 63) / 64; }
    static int hex_value(char c) {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    }
    void trim() {
        if (len_ & 63) words_.back() &= (std::uint64_t{1} << (len_ & 63)) - 1;
    }

    std::size_t len_ = 0;
    Words words_;
};

inline BitVector operator+(const BitVector& a, const BitVector& b) { return a ^ b; }

struct BitVectorHash {
    std::size_t operator()(const BitVector& v) const { return v.hash(); }
};

class BitMatrix {
public:
    BitMatrix() = default;
    BitMatrix(std::size_t rows, std::size_t cols) : cols_(cols), rows_(rows, BitVector(cols)) {}
    BitMatrix(std::vector<BitVector> rows, std::size_t cols) : cols_(cols), rows_(std::move(rows)) {
        for (auto& r : rows_)
            if (r.size() != cols_) throw std::invalid_argument("matrix row has wrong length");
    }

    static BitMatrix identity(std::size_t n) {
        BitMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.rows_[i].set(i, true);
        return m;
    }
    template <class Rng>
    static BitMatrix random(std::size_t rows, std::size_t cols, Rng& rng) {
        BitMatrix m(rows, cols);
        for (auto& r : m.rows_) r = BitVector::random(cols, rng);
        return m;
    }

    std::size_t rows() const { return rows_.size(); }
    std::size_t cols() const { return cols_; }
    bool get(std::size_t r, std::size_t c) const { return rows_[r].get(c); }
    void set(std::size_t r, std::size_t c, bool b) { rows_[r].set(c, b); }
    const BitVector& row(std::size_t r) const { return rows_[r]; }
    BitVector& row(std::size_t r) { return rows_[r]; }
    const std::vector<BitVector>& row_list() const { return rows_; }

    void append_row(BitVector r) {
        if (r.size() != cols_) throw std::invalid_argument("matrix row has wrong length");
        rows_.push_back(std::move(r));
    }

    BitVector operator*(const BitVector& x) const {
        if (x.size() != cols_) throw std::invalid_argument("matrix-vector size mismatch");
        BitVector out(rows_.size());
        for (std::size_t r = 0; r < rows_.size(); ++r)
            if (rows_[r].dot(x)) out.set(r, true);
        return out;
    }

    BitMatrix operator*(const BitMatrix& o) const {
        if (o.rows() != cols_) throw std::invalid_argument("matrix product size mismatch");
        BitMatrix out(rows_.size(), o.cols_);
        for (std::size_t r = 0; r < rows_.size(); ++r)
            for (std::size_t k = 0; k < cols_; ++k)
                if (rows_[r].get(k)) out.rows_[r] ^= o.rows_[k];
        return out;
    }

    BitMatrix transpose() const {
        BitMatrix t(cols_, rows_.size());
        for (std::size_t r = 0; r < rows_.size(); ++r)
            for (std::size_t c = 0; c < cols_; ++c)
                if (rows_[r].get(c)) t.rows_[c].set(r, true);
        return t;
    }

    BitMatrix select_rows(const std::vector<std::size_t>& idx) const {
        BitMatrix out(0, cols_);
        for (auto i : idx) out.rows_.push_back(rows_.at(i));
        return out;
    }
    BitMatrix select_cols(const std::vector<std::size_t>& idx) const {
        BitMatrix out(rows_.size(), idx.size());
        for (std::size_t r = 0; r < rows_.size(); ++r)
            for (std::size_t j = 0; j < idx.size(); ++j)
                if (rows_[r].get(idx[j])) out.rows_[r].set(j, true);
        return out;
    }

    friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

private:
    std::size_t cols_ = 0;
    std::vector<BitVector> rows_;
};

// Incremental row-echelon form over GF(2), used for rank, independence tests
// and span membership. Rows are kept fully reduced against each other.
class EchelonBasis {
public:
    explicit EchelonBasis(std::size_t cols) : cols_(cols) {}

    std::size_t dim() const { return rows_.size(); }
    std::size_t cols() const { return cols_; }

    BitVector reduce(BitVector v) const {
        for (std::size_t k = 0; k < rows_.size(); ++k)
            if (v.get(pivots_[k])) v ^= rows_[k];
        return v;
    }
    bool in_span(const BitVector& v) const { return reduce(v).is_zero(); }

    // Returns false if v was already in the span.
    bool insert(const BitVector& v) {
        BitVector r = reduce(v);
        std::size_t p = r.first_set();
        if (p >= cols_) return false;
        for (auto& row : rows_)
            if (row.get(p)) row ^= r;
        rows_.push_back(std::move(r));
        pivots_.push_back(p);
        return true;
    }

private:
    std::size_t cols_;
    std::vector<BitVector> rows_;
    std::vector<std::size_t> pivots_;
};

inline std::size_t rank(const BitMatrix& m) {
    EchelonBasis e(m.cols());
    for (const auto& r : m.row_list()) e.insert(r);
    return e.dim();
}

class AffineSpace {
public:
    AffineSpace(BitVector offset, std::vector<BitVector> basis)
        : offset_(std::move(offset)), basis_(std::move(basis)), echelon_(offset_.size()) {
        for (const auto& b : basis_) {
            if (b.size() != offset_.size()) throw std::invalid_argument("basis vector has wrong length");
            if (!echelon_.insert(b)) throw std::invalid_argument("affine basis is not linearly independent");
        }
    }

    const BitVector& offset() const { return offset_; }
    const std::vector<BitVector>& basis() const { return basis_; }
    std::size_t ambient_len() const { return offset_.size(); }
    std::size_t dim() const { return basis_.size(); }

    bool contains(const BitVector& v) const {
        return v.size() == offset_.size() && echelon_.in_span(v ^ offset_);
    }

    // offset + sum of basis[i] over the set bits i of coeffs.
    BitVector element(const BitVector& coeffs) const {
        BitVector v = offset_;
        for (std::size_t i = 0; i < basis_.size(); ++i)
            if (coeffs.get(i)) v ^= basis_[i];
        return v;
    }
    BitVector element(std::uint64_t coeffs) const {
        return element(BitVector::from_uint(coeffs, basis_.size()));
    }

private:
    BitVector offset_;
    std::vector<BitVector> basis_;
    EchelonBasis echelon_;
};

// Reduced row echelon on [M | y] with lowest-index pivots. Free variables are
// zero in the offset; one basis vector per free column, in column order.
inline std::optional<AffineSpace> solve_affine(const BitMatrix& m, const BitVector& y) {
    if (y.size() != m.rows()) throw std::invalid_argument("solve_affine: right-hand side has wrong length");
    const std::size_t n = m.cols();
    std::vector<BitVector> aug;
    aug.reserve(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        BitVector row = m.row(r).resized(n + 1);
        row.set(n, y.get(r));
        aug.push_back(std::move(row));
    }
    std::vector<std::size_t> pivot_cols;
    std::size_t lead = 0;
    for (std::size_t c = 0; c < n && lead < aug.size(); ++c) {
        std::size_t p = lead;
        while (p < aug.size() && !aug[p].get(c)) ++p;
        if (p == aug.size()) continue;
        std::swap(aug[p], aug[lead]);
        for (std::size_t r = 0; r < aug.size(); ++r)
            if (r != lead && aug[r].get(c)) aug[r] ^= aug[lead];
        pivot_cols.push_back(c);
        ++lead;
    }
    for (std::size_t r = lead; r < aug.size(); ++r)
        if (aug[r].get(n)) return std::nullopt;

    BitVector offset(n);
    for (std::size_t k = 0; k < pivot_cols.size(); ++k)
        if (aug[k].get(n)) offset.set(pivot_cols[k], true);

    std::vector<bool> is_pivot(n, false);
    for (auto c : pivot_cols) is_pivot[c] = true;
    std::vector<BitVector> basis;
    for (std::size_t f = 0; f < n; ++f) {
        if (is_pivot[f]) continue;
        BitVector b(n);
        b.set(f, true);
        for (std::size_t k = 0; k < pivot_cols.size(); ++k)
            if (aug[k].get(f)) b.set(pivot_cols[k], true);
        basis.push_back(std::move(b));
    }
    return AffineSpace(std::move(offset), std::move(basis));
}

template <class Rng>
BitVector sample_affine(const AffineSpace& s, Rng& rng) {
    return s.element(BitVector::random(s.dim(), rng));
}

class Permutation {
public:
    Permutation() = default;
    explicit Permutation(std::vector<std::size_t> map) : map_(std::move(map)) {
        std::vector<bool> seen(map_.size(), false);
        for (auto v : map_) {
            if (v >= map_.size() || seen[v]) throw std::invalid_argument("permutation map is not a bijection");
            seen[v] = true;
        }
    }
    static Permutation identity(std::size_t n) {
        std::vector<std::size_t> m(n);
        for (std::size_t i = 0; i < n; ++i) m[i] = i;
        return Permutation(std::move(m));
    }
    template <class Rng>
    static Permutation random(std::size_t n, Rng& rng) {
        auto p = identity(n);
        std::shuffle(p.map_.begin(), p.map_.end(), rng);
        return p;
    }

    std::size_t size() const { return map_.size(); }
    std::size_t operator()(std::size_t i) const { return map_[i]; }
    const std::vector<std::size_t>& map() const { return map_; }

    Permutation inverse() const {
        std::vector<std::size_t> inv(map_.size());
        for (std::size_t i = 0; i < map_.size(); ++i) inv[map_[i]] = i;
        return Permutation(std::move(inv));
    }

    // out[p(i)] = v[i]
    BitVector apply(const BitVector& v) const {
        if (v.size() != map_.size()) throw std::invalid_argument("permutation size does not match vector");
        BitVector out(v.size());
        for (std::size_t i = 0; i < map_.size(); ++i)
            if (v.get(i)) out.set(map_[i], true);
        return out;
    }

    friend bool operator==(const Permutation&, const Permutation&) = default;

private:
    std::vector<std::size_t> map_;
};

inline BitVector apply_perm(const Permutation& p, const BitVector& v) { return p.apply(v); }
inline Permutation invert_perm(const Permutation& p) { return p.inverse(); }

// The bits of v at idx, in idx order (duplicates repeat).
inline BitVector project(const BitVector& v, const std::vector<std::size_t>& idx) {
    BitVector out(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
        if (idx[j] >= v.size()) throw std::invalid_argument("projection index out of range");
        if (v.get(idx[j])) out.set(j, true);
    }
    return out;
}

}  // namespace nmforge

template <>
struct std::hash<nmforge::BitVector> {
    std::size_t operator()(const nmforge::BitVector& v) const { return v.hash(); }
};
