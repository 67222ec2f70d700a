#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "bitlin.hpp"
#include "extlib.hpp"

namespace nmforge {

struct AcbParams {
    std::size_t n = 0;   // helper bits
    std::size_t n1 = 0;  // row bits
    std::size_t n2 = 0;  // output bits
    std::size_t t = 1;   // tampered copies the contract is meant to tolerate
    std::size_t h = 0;   // advice bits
    std::size_t d = 0;   // internal seed bits
    std::size_t lambda = 0;
    double eps = 0.01;
    std::size_t k1 = 0;            // helper min-entropy assumed by the precondition report; 0 means n
    std::size_t ladder_floor = 0;  // narrowest y-state; 0 means d

    std::size_t floor_width() const { return std::max(ladder_floor ? ladder_floor : d, d); }

    // y-state width entering round i, i = 0..h; halves from n1 down to the floor.
    std::vector<std::size_t> widths() const {
        std::vector<std::size_t> w{n1};
        for (std::size_t i = 0; i < h; ++i) w.push_back(std::max(floor_width(), w.back() / 2));
        return w;
    }
    std::size_t out_seed_len() const { return std::min(widths().back(), n); }

    void validate_shape() const {
        if (n == 0 || n1 == 0 || n2 == 0 || d == 0) throw std::invalid_argument("ACB lengths must be positive");
        if (d > n) throw std::invalid_argument("ACB seed length exceeds helper length");
        if (n2 > n) throw std::invalid_argument("ACB output longer than helper");
        if (h > 0 && n1 < floor_width()) throw std::invalid_argument("ACB row narrower than the ladder floor");
    }
};

struct AcbPreconditions {
    double log_inv_eps = 0;
    double need_k1 = 0, need_n1 = 0, need_n2 = 0;
    bool k1_ok = false, n1_ok = false, n2_ok = false;
    double error_bound = 0;  // (h + 2^lambda) * eps
    bool all() const { return k1_ok && n1_ok && n2_ok; }
};

inline AcbPreconditions acb_preconditions(const AcbParams& p) {
    AcbPreconditions r;
    double d = double(p.d), t = double(p.t), h = double(p.h), n2 = double(p.n2);
    r.log_inv_eps = -std::log2(p.eps);
    r.need_k1 = 2 * d + 8 * t * d * h + r.log_inv_eps;
    r.need_n1 = 2 * d + 10 * t * d * h + (4 * h * t + 1) * n2 * n2 + r.log_inv_eps;
    r.need_n2 = 2 * d + 3 * t * d + r.log_inv_eps;
    r.k1_ok = double(p.k1 ? p.k1 : p.n) >= r.need_k1;
    r.n1_ok = double(p.n1) >= r.need_n1;
    r.n2_ok = double(p.n2) >= r.need_n2;
    r.error_bound = (h + std::pow(2.0, double(p.lambda))) * p.eps;
    return r;
}

// Correlation breaker with advice. Every advice bit runs one flip-flop round on
// the y-state; the final state seeds an extraction from the helper.
class Acb {
public:
    Acb() = default;
    explicit Acb(AcbParams p, const FieldOverrides& ov = {}) : p_(p) {
        p_.validate_shape();
        widths_ = p_.widths();
        ext_helper_ = linear(p_.n, p_.d, p_.d, ov);
        for (std::size_t i = 0; i < p_.h; ++i) ext_y_.push_back(linear(widths_[i], p_.d, widths_[i + 1], ov));
        ext_out_ = linear(p_.n, p_.out_seed_len(), p_.n2, ov);
    }

    const AcbParams& params() const { return p_; }
    const std::vector<std::size_t>& widths() const { return widths_; }

    // Round i: q = LExt(helper, y|d); y1 = LExt(y, q). Advice bit 0 stops at y1.
    // Bit 1 alternates once more: q' = LExt(helper, y1|d), out = LExt(y, q').
    BitVector flip_flop(const BitVector& y, const BitVector& helper, bool bit, std::size_t round) const {
        if (round >= p_.h) throw std::invalid_argument("flip_flop round out of range");
        if (y.size() != widths_[round] || helper.size() != p_.n) throw std::invalid_argument("flip_flop input has wrong length");
        const auto& ey = *ext_y_[round];
        auto q = (*ext_helper_)(helper, nonzero_seed(y.slice(0, p_.d)));
        auto y1 = ey(y, nonzero_seed(q));
        if (!bit) return y1;
        auto q2 = (*ext_helper_)(helper, nonzero_seed(y1.slice(0, p_.d)));
        return ey(y, nonzero_seed(q2));
    }

    BitVector operator()(const BitVector& y_row, const BitVector& helper, const BitVector& advice) const {
        if (y_row.size() != p_.n1 || helper.size() != p_.n || advice.size() != p_.h)
            throw std::invalid_argument("acb input has wrong length");
        BitVector y = y_row;
        for (std::size_t i = 0; i < p_.h; ++i) y = flip_flop(y, helper, advice.get(i), i);
        return (*ext_out_)(helper, nonzero_seed(y.slice(0, p_.out_seed_len())));
    }

private:
    static std::shared_ptr<const SeededExtractor> linear(std::size_t n, std::size_t d, std::size_t m, const FieldOverrides& ov) {
        return std::make_shared<const SeededExtractor>(
            SeededExtractorSpec{ExtractorKind::linear_multiplicative, n, std::min(d, n), m, 0, 0}, ov);
    }

    AcbParams p_;
    std::vector<std::size_t> widths_;
    std::shared_ptr<const SeededExtractor> ext_helper_, ext_out_;
    std::vector<std::shared_ptr<const SeededExtractor>> ext_y_;
};

inline BitVector acb(const AcbParams& p, const BitVector& y_row, const BitVector& helper, const BitVector& advice) {
    return Acb(p)(y_row, helper, advice);
}

}  // namespace nmforge
