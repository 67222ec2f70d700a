#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "acb.hpp"
#include "bitlin.hpp"
#include "extlib.hpp"
#include "lincode.hpp"
#include "profile.hpp"
#include "rng.hpp"

namespace nmforge {

// Prefix of length len.
inline BitVector slice(const BitVector& z, std::size_t len) {
    if (len > z.size()) throw std::invalid_argument("slice longer than its input");
    return z.slice(0, len);
}

// Rows are labelled 1..rows, so a label is never the zero seed.
inline std::size_t row_label_len(std::size_t rows) { return ceil_log2(rows + 1); }

// Collisions move to the next unused index, cyclically.
inline void make_distinct(std::vector<std::size_t>& idx, std::size_t range) {
    if (idx.size() > range) throw std::invalid_argument("more indices than the range holds");
    std::vector<char> used(range, 0);
    for (auto& i : idx) {
        while (used[i]) i = (i + 1) % range;
        used[i] = 1;
    }
}

struct InterleavedInput {
    struct Provenance {
        BitVector x, y;
        Permutation pi;
    };
    BitVector z;
    std::optional<Provenance> provenance;

    static InterleavedInput make(BitVector x, BitVector y, Permutation pi) {
        if (x.size() != y.size() || pi.size() != 2 * x.size()) throw std::invalid_argument("interleaving needs |x| = |y| and a permutation of 2|x|");
        InterleavedInput in;
        in.z = pi.apply(x.concat(y));
        in.provenance = Provenance{std::move(x), std::move(y), std::move(pi)};
        return in;
    }
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ProfileError(msg);
}

template <class F>
auto at_path(const std::string& where, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ProfileError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ProfileError(where + ": " + e.what());
    }
}

inline std::shared_ptr<const SeededExtractor> make_ext(ExtractorKind kind, std::size_t n, std::size_t d, std::size_t m,
                                                       const FieldOverrides& ov, const std::string& where) {
    return at_path(where, [&] { return std::make_shared<const SeededExtractor>(SeededExtractorSpec{kind, n, d, m, 0, 0}, ov); });
}

inline AcbParams acb_params(const AcbSection& s, std::size_t n, std::size_t n1, std::size_t h) {
    AcbParams a;
    a.n = n;
    a.n1 = n1;
    a.n2 = s.n2;
    a.t = s.t;
    a.h = h;
    a.d = s.d;
    a.lambda = s.lambda;
    a.eps = s.eps;
    a.ladder_floor = s.ladder_floor;
    return a;
}

inline std::shared_ptr<const Acb> make_acb(const AcbParams& a, const FieldOverrides& ov, const std::string& where) {
    return at_path(where, [&] { return std::make_shared<const Acb>(a, ov); });
}

}  // namespace detail

// Index sampler: one strong-hash evaluation per seed, reduced into [range).
class Sampler {
public:
    Sampler() = default;
    Sampler(std::size_t n_in, std::size_t d, std::size_t range, const FieldOverrides& ov, const std::string& where) : range_(range) {
        detail::require(range > 0, where + ": sampler range is empty");
        detail::require(d >= 1 && d <= 24, where + ": sampler seed length must lie in 1..24");
        ext_ = detail::make_ext(ExtractorKind::strong_hash, n_in, d, std::max<std::size_t>(1, ceil_log2(range)), ov, where);
    }
    std::vector<std::size_t> operator()(const BitVector& x) const { return samp(*ext_, x, range_).indices; }
    std::size_t count() const { return std::size_t{1} << ext_->spec().d; }
    std::size_t range() const { return range_; }
    const SeededExtractor& extractor() const { return *ext_; }

private:
    std::size_t range_ = 0;
    std::shared_ptr<const SeededExtractor> ext_;
};

// Condense a prefix into 3^iterations rows, widen each row into a seed for an
// extraction from the whole input, break correlations across rows with the
// row number as advice, and extract once more with the XOR as seed.
class IlExt {
public:
    IlExt() = default;
    IlExt(const IlExtSection& s, std::size_t input_len, const FieldOverrides& ov, const std::string& where) : s_(s), n_(input_len), ov_(ov) {
        detail::require(s.n1 >= 1 && s.n1 <= n_, where + ".n1 must lie in 1.." + std::to_string(n_));
        con_ = CondenserSpec{s.n1, s.iterations};
        detail::at_path(where + ".iterations", [&] { con_.validate(); });
        lext1_ = detail::make_ext(ExtractorKind::linear_multiplicative, n_, con_.row_len(), s.lext1_out, ov, where + ".lext1_out");
        acb_ = detail::make_acb(detail::acb_params(s.acb, n_, s.lext1_out, ceil_log2(con_.rows())), ov, where + ".acb");
        lext2_ = detail::make_ext(ExtractorKind::linear_multiplicative, n_, s.acb.n2, s.m, ov, where + ".m");
    }

    std::size_t input_len() const { return n_; }
    std::size_t output_len() const { return s_.m; }
    std::size_t rows() const { return con_.rows(); }
    const AcbParams& acb_params() const { return acb_->params(); }
    const IlExtSection& section() const { return s_; }

    BitVector row_output(const BitVector& z, std::size_t i) const {
        auto v = condense(slice(z, s_.n1), i, con_, ov_);
        auto r = (*lext1_)(z, nonzero_seed(v));
        return (*acb_)(r, z, BitVector::from_uint(i, acb_->params().h));
    }

    BitVector operator()(const BitVector& z) const {
        if (z.size() != n_) throw std::invalid_argument("ilext input has wrong length");
        BitVector acc(s_.acb.n2);
        for (std::size_t i = 0; i < con_.rows(); ++i) acc ^= row_output(z, i);
        return (*lext2_)(z, nonzero_seed(acc));
    }

private:
    IlExtSection s_;
    std::size_t n_ = 0;
    FieldOverrides ov_;
    CondenserSpec con_;
    std::shared_ptr<const SeededExtractor> lext1_, lext2_;
    std::shared_ptr<const Acb> acb_;
};

struct AdviceBundle {
    BitVector z1, z2, z3, w1, w2;
    BitVector flat() const { return z1.concat(z2).concat(z3).concat(w1).concat(w2); }
};

class AdviceGenerator {
public:
    AdviceGenerator() = default;
    AdviceGenerator(const ParamProfile& p, std::shared_ptr<const LinearCodeSpec> code, const FieldOverrides& ov) : code_(std::move(code)) {
        const auto& a = p.adv;
        n2_ = 2 * p.n;
        detail::require(a.slice1 >= 1 && a.slice1 <= n2_, "ilnm.adv.slice1 must lie in 1.." + std::to_string(n2_));
        detail::require(a.slice2 >= 1 && a.slice2 <= n2_, "ilnm.adv.slice2 must lie in 1.." + std::to_string(n2_));
        s1_ = a.slice1;
        s2_ = a.slice2;
        samp1_ = Sampler(a.slice1, a.samp1_d, code_->n_out, ov, "ilnm.adv.samp1_d");
        samp2_ = Sampler(a.slice2, a.samp2_d, n2_, ov, "ilnm.adv.samp2_d");
        core_ = IlExt(a.core, samp2_.count(), ov, "ilnm.adv.core");
        lext_ = detail::make_ext(ExtractorKind::linear_multiplicative, n2_, a.core.m, a.w2_len, ov, "ilnm.adv.w2_len");
    }

    std::size_t bundle_len() const { return s1_ + s2_ + samp2_.count() + samp1_.count() + lext_->spec().m_out; }
    const IlExt& core() const { return core_; }

    AdviceBundle operator()(const BitVector& z) const {
        if (z.size() != n2_) throw std::invalid_argument("advice generator input has wrong length");
        AdviceBundle b;
        b.z1 = slice(z, s1_);
        b.z2 = slice(z, s2_);
        auto S = samp1_(b.z1);
        auto T = samp2_(b.z2);
        b.z3 = project(z, T);
        auto r = core_(b.z3);
        b.w1 = BitVector(S.size());
        for (std::size_t j = 0; j < S.size(); ++j) b.w1.set(j, code_->gen.row(S[j]).dot(z));
        b.w2 = (*lext_)(z, nonzero_seed(r));
        return b;
    }

private:
    std::shared_ptr<const LinearCodeSpec> code_;
    std::size_t n2_ = 0, s1_ = 0, s2_ = 0;
    Sampler samp1_, samp2_;
    IlExt core_;
    std::shared_ptr<const SeededExtractor> lext_;
};

// Row i: v_i = LExt1(prefix, i), r_i = LExt2(z, v_i), s_i = ACB(r_i, z, w o i).
// Output is the XOR of the rows.
class AcbWrapper {
public:
    AcbWrapper() = default;
    AcbWrapper(const ParamProfile& p, std::size_t advice_len, const FieldOverrides& ov) : w_len_(advice_len) {
        const auto& s = p.wrap;
        n2_ = 2 * p.n;
        detail::require(s.rows >= 1, "ilnm.wrap.rows must be positive");
        detail::require(s.slice >= 1 && s.slice <= n2_, "ilnm.wrap.slice must lie in 1.." + std::to_string(n2_));
        detail::require(s.acb.n2 == p.m, "ilnm.wrap.acb.n2 must equal m");
        slice_ = s.slice;
        rows_ = s.rows;
        label_ = row_label_len(rows_);
        lext1_ = detail::make_ext(ExtractorKind::linear_multiplicative, s.slice, label_, s.lext1_out, ov, "ilnm.wrap.lext1_out");
        lext2_ = detail::make_ext(ExtractorKind::linear_multiplicative, n2_, s.lext1_out, s.lext2_out, ov, "ilnm.wrap.lext2_out");
        acb_ = detail::make_acb(detail::acb_params(s.acb, n2_, s.lext2_out, w_len_ + label_), ov, "ilnm.wrap.acb");
    }

    std::size_t rows() const { return rows_; }
    std::size_t advice_len() const { return w_len_; }
    const AcbParams& acb_params() const { return acb_->params(); }

    BitVector row_output(const BitVector& z, const BitVector& w, std::size_t i) const {
        auto label = BitVector::from_uint(i, label_);
        auto v = (*lext1_)(slice(z, slice_), label);
        auto r = (*lext2_)(z, nonzero_seed(v));
        return (*acb_)(r, z, w.concat(label));
    }

    BitVector operator()(const BitVector& z, const BitVector& w) const {
        if (z.size() != n2_ || w.size() != w_len_) throw std::invalid_argument("acb_wrap input has wrong length");
        BitVector acc(acb_->params().n2);
        for (std::size_t i = 1; i <= rows_; ++i) acc ^= row_output(z, w, i);
        return acc;
    }

private:
    std::size_t n2_ = 0, w_len_ = 0, slice_ = 0, rows_ = 0, label_ = 0;
    std::shared_ptr<const SeededExtractor> lext1_, lext2_;
    std::shared_ptr<const Acb> acb_;
};

class NmExtractor {
public:
    NmExtractor() = default;
    NmExtractor(const ParamProfile& p, std::shared_ptr<const LinearCodeSpec> code, const FieldOverrides& ov)
        : adv_(p, std::move(code), ov), wrap_(p, adv_.bundle_len(), ov) {}

    const AdviceGenerator& adv() const { return adv_; }
    const AcbWrapper& wrap() const { return wrap_; }
    BitVector operator()(const BitVector& z) const { return wrap_(z, adv_(z).flat()); }

private:
    AdviceGenerator adv_;
    AcbWrapper wrap_;
};

// Where the sampled pieces of z sit. Depends on z1..z4 only.
struct InvLayout {
    std::vector<std::size_t> t1;                 // codeword positions, with repeats
    std::vector<std::size_t> pos2, pos3, pos4;   // absolute positions inside z6
    std::vector<std::size_t> free;               // the rest of z6, ascending
    BitVector free_mask;
};

struct InvTrace {
    InvLayout layout;
    BitVector zbar2, z2p, z2pp;
    std::vector<std::size_t> tbar1;
    bool fallback = false;
    BitVector w, s_tilde, g;
};

// Invertible extractor. Constraint rows (LExt0 at seed z2' and the chosen code
// coordinates) are kept independent on the free bits of z6, which is what
// makes every non-fallback fibre cell an affine space of one dimension.
class InvertibleNmExtractor {
public:
    InvertibleNmExtractor() = default;
    InvertibleNmExtractor(const ParamProfile& p, std::shared_ptr<const LinearCodeSpec> code, const FieldOverrides& ov) : code_(std::move(code)) {
        const auto& s = p.inv;
        n2_ = 2 * p.n;
        m_ = p.m;
        detail::require(m_ >= 1, "m must be positive");
        detail::require(code_->k_in == n2_, "code dimension " + std::to_string(code_->k_in) + " must equal 2n = " + std::to_string(n2_));
        std::size_t prefix = 0;
        for (std::size_t i = 0; i < 5; ++i) {
            detail::require(s.split[i] >= 1, "ilnm_inv.split[" + std::to_string(i) + "] must be positive");
            offs_[i] = prefix;
            prefix += s.split[i];
        }
        split_ = s.split;
        detail::require(prefix < n2_, "ilnm_inv.split leaves nothing for z6");
        o6_ = prefix;
        n6_ = n2_ - prefix;
        detail::require(n6_ >= s.min_n6, "ilnm_inv.min_n6: z6 has " + std::to_string(n6_) + " bits");

        samp_[0] = Sampler(s.split[0], s.samp_d[0], code_->n_out, ov, "ilnm_inv.samp_d[0]");
        std::size_t range = n6_;
        for (std::size_t i = 1; i < 4; ++i) {
            std::string where = "ilnm_inv.samp_d[" + std::to_string(i) + "]";
            samp_[i] = Sampler(s.split[i], s.samp_d[i], range, ov, where);
            detail::require(samp_[i].count() <= range, where + ": 2^d exceeds the " + std::to_string(range) + " remaining bits");
            range -= samp_[i].count();
        }
        free_len_ = range;
        d1_ = samp_[0].count();
        detail::require(s.lext0_out >= 1 && s.lext0_out <= d1_, "ilnm_inv.lext0_out must lie in 1..2^samp_d[0]");
        detail::require(free_len_ >= d1_, "ilnm_inv: " + std::to_string(free_len_) + " free bits cannot carry " + std::to_string(d1_) + " constraints");
        tbar_len_ = d1_ - s.lext0_out;

        core_ = IlExt(s.core, samp_[1].count(), ov, "ilnm_inv.core");
        detail::require(s.core.m == s.n0, "ilnm_inv.core.m must equal ilnm_inv.n0");
        lext0_ = detail::make_ext(ExtractorKind::linear_multiplicative, n2_, s.n0, s.lext0_out, ov, "ilnm_inv.lext0_out");
        if (s.n0 <= 10) {
            for (std::uint64_t v = 0; v < (std::uint64_t{1} << s.n0); ++v)
                lext0_cache_.push_back(lext0_->matrix(nonzero_seed(BitVector::from_uint(v, s.n0))));
        }

        detail::require(s.rows >= 1, "ilnm_inv.rows must be positive");
        rows_ = s.rows;
        label_ = row_label_len(rows_);
        w_len_ = split_[0] + split_[1] + samp_[1].count() + tbar_len_ + s.lext0_out;
        lext1_ = detail::make_ext(ExtractorKind::linear_multiplicative, split_[4], label_, s.lext1_out, ov, "ilnm_inv.lext1_out");
        lext2_ = detail::make_ext(ExtractorKind::linear_multiplicative, samp_[2].count(), s.lext1_out, s.lext2_out, ov, "ilnm_inv.lext2_out");
        acb_ = detail::make_acb(detail::acb_params(s.acb, samp_[2].count(), s.lext2_out, w_len_ + label_), ov, "ilnm_inv.acb");
        lext3_ = detail::make_ext(ExtractorKind::fixed_rank_invertible, samp_[3].count(), s.acb.n2, m_, ov, "ilnm_inv.acb.n2");
    }

    std::size_t input_len() const { return n2_; }
    std::size_t output_len() const { return m_; }
    std::size_t n6() const { return n6_; }
    std::size_t free_len() const { return free_len_; }
    std::size_t advice_len() const { return w_len_; }
    std::size_t constraint_count() const { return d1_; }
    std::size_t rows() const { return rows_; }
    // Dimension of every non-fallback cell: z7 pre-image plus unconstrained free bits.
    std::size_t cell_dim() const { return samp_[3].count() - m_ + free_len_ - d1_; }
    const AcbParams& acb_params() const { return acb_->params(); }
    const IlExt& core() const { return core_; }
    const SeededExtractor& lext3() const { return *lext3_; }
    const LinearCodeSpec& code() const { return *code_; }

    InvLayout layout(const BitVector& z) const {
        InvLayout L;
        L.t1 = samp_[0](z.slice(offs_[0], split_[0]));
        std::vector<std::size_t> rest(n6_);
        for (std::size_t i = 0; i < n6_; ++i) rest[i] = o6_ + i;
        std::vector<std::size_t>* out[3] = {&L.pos2, &L.pos3, &L.pos4};
        for (std::size_t k = 1; k < 4; ++k) {
            auto T = samp_[k](z.slice(offs_[k], split_[k]));
            make_distinct(T, rest.size());
            std::vector<char> taken(rest.size(), 0);
            for (auto t : T) {
                out[k - 1]->push_back(rest[t]);
                taken[t] = 1;
            }
            std::vector<std::size_t> keep;
            keep.reserve(rest.size() - T.size());
            for (std::size_t i = 0; i < rest.size(); ++i)
                if (!taken[i]) keep.push_back(rest[i]);
            rest = std::move(keep);
        }
        L.free = std::move(rest);
        L.free_mask = BitVector(n2_);
        for (auto f : L.free) L.free_mask.set(f, true);
        return L;
    }

    BitMatrix lext0_rows(const BitVector& z2p) const {
        if (!lext0_cache_.empty()) return lext0_cache_[z2p.to_uint()];
        return lext0_->matrix(nonzero_seed(z2p));
    }

    // Greedy scan over T1 in sampling order; nullopt is the fallback branch.
    std::optional<std::vector<std::size_t>> select_tbar1(const InvLayout& L, const BitMatrix& rows0) const {
        EchelonBasis eb(n2_);
        for (const auto& r : rows0.row_list())
            if (!eb.insert(r & L.free_mask)) return std::nullopt;
        std::vector<std::size_t> out;
        for (auto p : L.t1) {
            if (out.size() == tbar_len_) break;
            if (eb.insert(code_->gen.row(p) & L.free_mask)) out.push_back(p);
        }
        if (out.size() < tbar_len_) return std::nullopt;
        return out;
    }

    BitVector s_tilde(const BitVector& z5, const BitVector& zbar6, const BitVector& w) const {
        BitVector acc(acb_->params().n2);
        for (std::size_t i = 1; i <= rows_; ++i) {
            auto label = BitVector::from_uint(i, label_);
            auto v = (*lext1_)(z5, label);
            auto r = (*lext2_)(zbar6, nonzero_seed(v));
            acc ^= (*acb_)(r, zbar6, w.concat(label));
        }
        return acc;
    }

    InvTrace trace(const BitVector& z) const {
        if (z.size() != n2_) throw std::invalid_argument("ilnm_inv input has wrong length");
        InvTrace t;
        t.layout = layout(z);
        const auto& L = t.layout;
        t.zbar2 = project(z, L.pos2);
        t.z2p = core_(t.zbar2);
        auto rows0 = lext0_rows(t.z2p);
        t.z2pp = rows0 * z;
        auto sel = select_tbar1(L, rows0);
        if (!sel) {
            t.fallback = true;
            t.g = BitVector(m_);
            return t;
        }
        t.tbar1 = std::move(*sel);
        t.w = assemble_w(z, t.zbar2, code_values(z, t.tbar1), t.z2pp);
        t.s_tilde = s_tilde(z.slice(offs_[4], split_[4]), project(z, L.pos3), t.w);
        t.g = (*lext3_)(project(z, L.pos4), nonzero_seed(t.s_tilde));
        return t;
    }

    BitVector operator()(const BitVector& z) const { return trace(z).g; }

    // Uniform element of the non-fallback part of the fibre of g. Each attempt
    // that hits the fallback branch restarts from scratch.
    std::optional<BitVector> sample_preimage(const BitVector& g, Rng& rng, std::size_t max_attempts = 64,
                                             std::size_t* attempts_used = nullptr) const {
        if (g.size() != m_) throw std::invalid_argument("pre-image target has wrong length");
        for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
            if (attempts_used) *attempts_used = attempt;
            BitVector z(n2_);
            z.assign(0, BitVector::random(o6_, rng));
            auto L = layout(z);
            for (auto p : L.pos2) z.set(p, rng() & 1);
            auto zbar2 = project(z, L.pos2);
            auto rows0 = lext0_rows(core_(zbar2));
            auto sel = select_tbar1(L, rows0);
            if (!sel) continue;

            auto z2pp = BitVector::random(rows0.rows(), rng);
            auto e = BitVector::random(sel->size(), rng);
            auto w = assemble_w(z, zbar2, e, z2pp);
            for (auto p : L.pos3) z.set(p, rng() & 1);
            auto s = s_tilde(z.slice(offs_[4], split_[4]), project(z, L.pos3), w);
            auto z7 = sample_affine(lext3_->preimage(nonzero_seed(s), g), rng);
            for (std::size_t j = 0; j < L.pos4.size(); ++j) z.set(L.pos4[j], z7.get(j));

            // Free bits are still zero, so rho . z is the fixed part of each constraint.
            BitMatrix A(0, L.free.size());
            BitVector y(d1_);
            std::size_t k = 0;
            auto add = [&](const BitVector& rho, bool target) {
                A.append_row(project(rho, L.free));
                y.set(k++, target ^ rho.dot(z));
            };
            for (std::size_t r = 0; r < rows0.rows(); ++r) add(rows0.row(r), z2pp.get(r));
            for (std::size_t j = 0; j < sel->size(); ++j) add(code_->gen.row((*sel)[j]), e.get(j));
            auto sol = solve_affine(A, y);
            if (!sol) throw std::logic_error("independent constraint rows turned out inconsistent");
            auto zf = sample_affine(*sol, rng);
            for (std::size_t j = 0; j < L.free.size(); ++j) z.set(L.free[j], zf.get(j));
            return z;
        }
        return std::nullopt;
    }

private:
    BitVector code_values(const BitVector& z, const std::vector<std::size_t>& pos) const {
        BitVector e(pos.size());
        for (std::size_t j = 0; j < pos.size(); ++j) e.set(j, code_->gen.row(pos[j]).dot(z));
        return e;
    }
    BitVector assemble_w(const BitVector& z, const BitVector& zbar2, const BitVector& e, const BitVector& z2pp) const {
        BitVector w = z.slice(offs_[0], split_[0]);
        w.append(z.slice(offs_[1], split_[1]));
        w.append(zbar2);
        w.append(e);
        w.append(z2pp);
        return w;
    }

    std::shared_ptr<const LinearCodeSpec> code_;
    std::size_t n2_ = 0, m_ = 0, o6_ = 0, n6_ = 0, free_len_ = 0, d1_ = 0, tbar_len_ = 0;
    std::size_t rows_ = 0, label_ = 0, w_len_ = 0;
    std::array<std::size_t, 5> split_{}, offs_{};
    std::array<Sampler, 4> samp_;
    IlExt core_;
    std::shared_ptr<const SeededExtractor> lext0_, lext1_, lext2_, lext3_;
    std::vector<BitMatrix> lext0_cache_;
    std::shared_ptr<const Acb> acb_;
};

// Everything a profile describes, validated and ready to evaluate.
class NmSuite {
public:
    explicit NmSuite(ParamProfile p) : NmSuite(std::move(p), std::nullopt) {}

    // Suite over an explicit code in place of the profile's dual-BCH code.
    NmSuite(ParamProfile p, std::optional<LinearCodeSpec> code) : p_(std::move(p)) {
        detail::require(p_.n >= 1, "n must be positive");
        for (const auto& [deg, f] : p_.moduli) detail::require(f && f->m() == deg, "moduli." + std::to_string(deg) + " has the wrong degree");
        if (code)
            code_ = std::make_shared<const LinearCodeSpec>(std::move(*code));
        else
            code_ = detail::at_path("code", [&] { return std::make_shared<const LinearCodeSpec>(with_dense_basis(build_dual_bch(p_.code.n_b, p_.code.t_b))); });
        inv_ = InvertibleNmExtractor(p_, code_, p_.moduli);
        nm_ = NmExtractor(p_, code_, p_.moduli);
        ilext_ = IlExt(p_.ilext, 2 * p_.n, p_.moduli, "ilext");
        if (p_.enforce_preconditions)
            for (const auto& [where, a] : breakers()) {
                auto r = acb_preconditions(a);
                detail::require(r.all(), where + ": breaker preconditions fail (need n1 >= " + std::to_string(r.need_n1) + ", n2 >= " +
                                             std::to_string(r.need_n2) + ", k1 >= " + std::to_string(r.need_k1) + ")");
            }
    }

    const ParamProfile& profile() const { return p_; }
    const LinearCodeSpec& code() const { return *code_; }
    const InvertibleNmExtractor& inv() const { return inv_; }
    const NmExtractor& nm() const { return nm_; }
    const IlExt& ilext() const { return ilext_; }

    std::vector<std::pair<std::string, AcbParams>> breakers() const {
        return {{"ilnm_inv.core.acb", inv_.core().acb_params()},
                {"ilnm_inv.acb", inv_.acb_params()},
                {"ilnm.adv.core.acb", nm_.adv().core().acb_params()},
                {"ilnm.wrap.acb", nm_.wrap().acb_params()},
                {"ilext.acb", ilext_.acb_params()}};
    }

    // Derived lengths, breaker precondition arithmetic and the error budget the
    // breaker contracts imply (rows times the per-breaker bound).
    nlohmann::ordered_json report() const {
        using oj = nlohmann::ordered_json;
        oj j;
        j["profile"] = p_.name;
        j["block_bits"] = 2 * p_.n;
        j["message_bits"] = p_.m;
        j["rate"] = double(p_.m) / double(2 * p_.n);
        j["code"] = oj{{"n_b", code_->n_out}, {"k_in", code_->k_in}, {"rel_distance", code_->rel_distance}};
        j["ilnm_inv"] = oj{{"n6", inv_.n6()},
                           {"free_bits", inv_.free_len()},
                           {"constraints", inv_.constraint_count()},
                           {"advice_bits", inv_.advice_len()},
                           {"cell_dim", inv_.cell_dim()}};
        j["ilnm"] = oj{{"advice_bits", nm_.adv().bundle_len()}, {"rows", nm_.wrap().rows()}};
        j["ilext"] = oj{{"rows", ilext_.rows()}, {"output_bits", ilext_.output_len()}};
        oj pre = oj::object();
        bool all = true;
        for (const auto& [where, a] : breakers()) {
            auto r = acb_preconditions(a);
            all = all && r.all();
            pre[where] = oj{{"n", a.n}, {"n1", a.n1}, {"n2", a.n2}, {"h", a.h}, {"d", a.d}, {"t", a.t},
                            {"need_k1", r.need_k1}, {"need_n1", r.need_n1}, {"need_n2", r.need_n2},
                            {"k1_ok", r.k1_ok}, {"n1_ok", r.n1_ok}, {"n2_ok", r.n2_ok}, {"error_bound", r.error_bound}};
        }
        j["breaker_preconditions"] = pre;
        j["preconditions_hold"] = all;
        auto bound = [](const AcbParams& a) { return acb_preconditions(a).error_bound; };
        j["error_budget"] = oj{{"ilnm_inv", std::min(1.0, double(inv_.rows()) * bound(inv_.acb_params()) + bound(inv_.core().acb_params()))},
                               {"ilnm", std::min(1.0, double(nm_.wrap().rows()) * bound(nm_.wrap().acb_params()) + bound(nm_.adv().core().acb_params()))},
                               {"ilext", std::min(1.0, double(ilext_.rows()) * bound(ilext_.acb_params()))}};
        return j;
    }

private:
    ParamProfile p_;
    std::shared_ptr<const LinearCodeSpec> code_;
    InvertibleNmExtractor inv_;
    NmExtractor nm_;
    IlExt ilext_;
};

inline AdviceBundle adv_gen(const NmSuite& s, const BitVector& z) { return s.nm().adv()(z); }
inline BitVector acb_wrap(const NmSuite& s, const BitVector& z, const BitVector& w) { return s.nm().wrap()(z, w); }
inline BitVector ilnm(const NmSuite& s, const BitVector& z) { return s.nm()(z); }
inline BitVector ilnm_inv(const NmSuite& s, const BitVector& z) { return s.inv()(z); }
inline std::optional<BitVector> ilnm_sample_preimage(const NmSuite& s, const BitVector& g, Rng& rng) {
    return s.inv().sample_preimage(g, rng);
}
inline BitVector ilext(const NmSuite& s, const BitVector& z) { return s.ilext()(z); }

// The two-source extractor used against protocol tampering: the invertible
// extractor on x o y with the identity interleaving.
inline BitVector comm_nmext(const NmSuite& s, const BitVector& x, const BitVector& y) {
    if (x.size() != s.profile().n || y.size() != s.profile().n) throw std::invalid_argument("comm_nmext inputs must have n bits each");
    return s.inv()(x.concat(y));
}

}  // namespace nmforge
