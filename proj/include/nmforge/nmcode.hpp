#pragma once

#include <memory>
#include <optional>
#include <stdexcept>

#include "nmx.hpp"

namespace nmforge {

struct EncodeResult {
    std::optional<BitVector> codeword;
    std::size_t attempts = 0;
    bool ok() const { return codeword.has_value(); }
};

// Decoder output plus whether the encoder can ever emit this codeword.
struct DecodeResult {
    BitVector message;
    bool encodable = true;
};

// Enc samples a uniform non-fallback pre-image of the message; Dec evaluates
// the invertible extractor.
class NmCode {
public:
    explicit NmCode(ParamProfile p) : suite_(std::make_shared<const NmSuite>(std::move(p))) {}
    explicit NmCode(std::shared_ptr<const NmSuite> suite) : suite_(std::move(suite)) {}

    const NmSuite& suite() const { return *suite_; }
    const ParamProfile& profile() const { return suite_->profile(); }
    std::size_t k() const { return profile().m; }
    std::size_t block() const { return 2 * profile().n; }
    double rate() const { return double(k()) / double(block()); }

    EncodeResult encode(const BitVector& s, Rng& rng, std::size_t max_attempts = 64) const {
        if (s.size() != k()) throw std::invalid_argument("message must have " + std::to_string(k()) + " bits");
        EncodeResult r;
        r.codeword = suite_->inv().sample_preimage(s, rng, max_attempts, &r.attempts);
        return r;
    }

    BitVector decode(const BitVector& c) const {
        check_block(c);
        return suite_->inv()(c);
    }

    DecodeResult classify(const BitVector& c) const {
        check_block(c);
        auto t = suite_->inv().trace(c);
        return {std::move(t.g), !t.fallback};
    }

private:
    void check_block(const BitVector& c) const {
        if (c.size() != block()) throw std::invalid_argument("codeword must have " + std::to_string(block()) + " bits");
    }

    std::shared_ptr<const NmSuite> suite_;
};

}  // namespace nmforge
