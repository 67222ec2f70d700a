#pragma once

#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "bitlin.hpp"
#include "nmcode.hpp"
#include "rng.hpp"

namespace nmforge {

inline constexpr const char* kVersion = "0.3.0";

struct AdversaryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CapExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Programs: small function ASTs over bit vectors.

class Program {
public:
    enum class Op { identity, xor_mask, permute, affine, table, constant, compose };

    static Program identity() { return Program(Op::identity); }
    static Program xor_mask(BitVector mask) {
        Program p(Op::xor_mask);
        p.vec_ = std::move(mask);
        return p;
    }
    static Program permute(Permutation pi) {
        Program p(Op::permute);
        p.perm_ = std::move(pi);
        return p;
    }
    // x -> a x + offset; a zero offset when omitted.
    static Program affine(BitMatrix a, std::optional<BitVector> offset = std::nullopt) {
        Program p(Op::affine);
        p.vec_ = offset ? std::move(*offset) : BitVector(a.rows());
        if (p.vec_.size() != a.rows()) throw std::invalid_argument("affine offset length differs from row count");
        p.mat_ = std::move(a);
        return p;
    }
    // Replaces bits [offset, offset + width) by values[old slice].
    static Program table(std::size_t offset, std::size_t width, std::vector<std::uint32_t> values) {
        if (width == 0 || width > 24) throw std::invalid_argument("table width must be in 1..24");
        if (values.size() != (std::size_t{1} << width)) throw std::invalid_argument("table needs 2^width values");
        for (auto v : values)
            if (v >> width) throw std::invalid_argument("table value wider than the slice");
        Program p(Op::table);
        p.offset_ = offset;
        p.width_ = width;
        p.values_ = std::move(values);
        return p;
    }
    static Program constant(BitVector v) {
        Program p(Op::constant);
        p.vec_ = std::move(v);
        return p;
    }
    static Program compose(std::vector<Program> steps) {
        Program p(Op::compose);
        p.steps_ = std::move(steps);
        return p;
    }

    static Program random_table(std::size_t n, Rng& rng) {
        std::vector<std::uint32_t> v(std::size_t{1} << n);
        for (auto& x : v) x = static_cast<std::uint32_t>(rng() & ((std::uint64_t{1} << n) - 1));
        return table(0, n, std::move(v));
    }
    static Program random_affine(std::size_t rows, std::size_t cols, Rng& rng) {
        return affine(BitMatrix::random(rows, cols, rng), BitVector::random(rows, rng));
    }

    Op op() const { return op_; }
    const std::vector<Program>& steps() const { return steps_; }

    // Output length on an input of in_len bits; throws when not applicable.
    std::size_t out_len(std::size_t in_len) const {
        switch (op_) {
            case Op::identity: return in_len;
            case Op::xor_mask:
                if (vec_.size() != in_len) throw std::invalid_argument("xor mask has " + std::to_string(vec_.size()) + " bits, input has " + std::to_string(in_len));
                return in_len;
            case Op::permute:
                if (perm_.size() != in_len) throw std::invalid_argument("permutation size differs from input length");
                return in_len;
            case Op::affine:
                if (mat_.cols() != in_len) throw std::invalid_argument("affine map takes " + std::to_string(mat_.cols()) + " bits, input has " + std::to_string(in_len));
                return mat_.rows();
            case Op::table:
                if (offset_ + width_ > in_len) throw std::invalid_argument("table slice runs past the input");
                return in_len;
            case Op::constant: return vec_.size();
            case Op::compose: {
                std::size_t len = in_len;
                for (std::size_t i = 0; i < steps_.size(); ++i) {
                    try {
                        len = steps_[i].out_len(len);
                    } catch (const std::invalid_argument& e) {
                        throw std::invalid_argument("steps[" + std::to_string(i) + "]: " + e.what());
                    }
                }
                return len;
            }
        }
        return in_len;
    }

    BitVector operator()(const BitVector& x) const {
        switch (op_) {
            case Op::identity: return x;
            case Op::xor_mask: out_len(x.size()); return x ^ vec_;
            case Op::permute: out_len(x.size()); return perm_.apply(x);
            case Op::affine: out_len(x.size()); return (mat_ * x) ^ vec_;
            case Op::table: {
                out_len(x.size());
                BitVector y = x;
                y.assign(offset_, BitVector::from_uint(values_[x.slice(offset_, width_).to_uint()], width_));
                return y;
            }
            case Op::constant: return vec_;
            case Op::compose: {
                BitVector y = x;
                for (const auto& s : steps_) y = s(y);
                return y;
            }
        }
        return x;
    }

    nlohmann::ordered_json to_json() const {
        using oj = nlohmann::ordered_json;
        switch (op_) {
            case Op::identity: return oj{{"op", "identity"}};
            case Op::xor_mask: return oj{{"op", "xor"}, {"mask", vec_.to_text()}};
            case Op::permute: return oj{{"op", "permute"}, {"map", perm_.map()}};
            case Op::affine: {
                oj rows = oj::array();
                for (const auto& r : mat_.row_list()) rows.push_back(r.to_text());
                return oj{{"op", "affine"}, {"cols", mat_.cols()}, {"rows", rows}, {"offset", vec_.to_text()}};
            }
            case Op::table: return oj{{"op", "table"}, {"offset", offset_}, {"width", width_}, {"values", values_}};
            case Op::constant: return oj{{"op", "const"}, {"value", vec_.to_text()}};
            case Op::compose: {
                oj steps = oj::array();
                for (const auto& s : steps_) steps.push_back(s.to_json());
                return oj{{"op", "compose"}, {"steps", steps}};
            }
        }
        return {};
    }

    static Program from_json(const nlohmann::json& j, const std::string& path);

private:
    explicit Program(Op op) : op_(op) {}

    Op op_ = Op::identity;
    BitVector vec_;
    Permutation perm_ = Permutation::identity(0);
    BitMatrix mat_;
    std::size_t offset_ = 0, width_ = 0;
    std::vector<std::uint32_t> values_;
    std::vector<Program> steps_;
};

// ---------------------------------------------------------------------------
// Tampering families on a 2n-bit codeword.

struct SplitState {
    Program f = Program::identity(), g = Program::identity();
};

// c = (x o y)_pi, tampered to (f(x) o g(y))_pi.
struct Interleaved {
    Program f = Program::identity(), g = Program::identity();
    Permutation pi = Permutation::identity(0);
};

struct LinearComposed {
    BitMatrix h;
    Interleaved inner;
};

// c = (x o y)_pi, tampered to ((f1(x) + g1(y)) o (f2(x) + g2(y)))_pi.
struct SumForm {
    Program f1 = Program::identity(), f2 = Program::identity(), g1 = Program::identity(), g2 = Program::identity();
    Permutation pi = Permutation::identity(0);
    bool fixed_point_free = false;
};

enum class Party { alice, bob };

// next sees (own half o transcript so far, zero-padded to 2t bits) and emits `bits` bits.
struct ProtocolRound {
    Party party = Party::alice;
    std::size_t bits = 0;
    Program next = Program::identity();
};

// c = x o y. Finals see (own half o full transcript padded to 2t bits).
struct CommProtocol {
    std::size_t t = 0;
    std::vector<ProtocolRound> rounds;
    Program final_f = Program::identity(), final_g = Program::identity();
};

using TamperSpec = std::variant<SplitState, Interleaved, LinearComposed, SumForm, CommProtocol>;

struct Adversary {
    std::string id;
    TamperSpec spec;
};

inline std::string family_name(const TamperSpec& s) {
    static const char* names[] = {"split-state", "interleaved", "linear-composed", "sum-form", "comm-protocol"};
    return names[s.index()];
}

struct ProtocolRun {
    BitVector x, y, transcript;
};

inline BitVector padded_view(const BitVector& own, const BitVector& transcript, std::size_t t) {
    return own.concat(transcript.resized(2 * t));
}

inline ProtocolRun run_protocol(const CommProtocol& p, const BitVector& x, const BitVector& y) {
    ProtocolRun r{x, y, BitVector(0)};
    std::size_t sent[2] = {0, 0};
    for (const auto& round : p.rounds) {
        const auto who = static_cast<int>(round.party);
        auto msg = round.next(padded_view(who == 0 ? x : y, r.transcript, p.t));
        if (msg.size() != round.bits) throw std::logic_error("protocol round emitted the wrong number of bits");
        sent[who] += msg.size();
        if (sent[who] > p.t) throw std::logic_error("protocol party exceeded its communication budget");
        r.transcript.append(msg);
    }
    r.x = p.final_f(padded_view(x, r.transcript, p.t));
    r.y = p.final_g(padded_view(y, r.transcript, p.t));
    return r;
}

namespace detail {

inline BitVector sum_half(const Program& a, const BitVector& x, const Program& b, const BitVector& y) { return a(x) ^ b(y); }

inline void check_program(const Program& p, std::size_t in_len, std::size_t out_len, const std::string& path) {
    std::size_t got;
    try {
        got = p.out_len(in_len);
    } catch (const std::invalid_argument& e) {
        throw AdversaryError("bad field: " + path + ": " + e.what());
    }
    if (got != out_len)
        throw AdversaryError("bad field: " + path + " maps " + std::to_string(in_len) + " bits to " + std::to_string(got) + ", need " +
                             std::to_string(out_len));
}

inline void check_perm(const Permutation& pi, std::size_t len, const std::string& path) {
    if (pi.size() != len) throw AdversaryError("bad field: " + path + " must permute " + std::to_string(len) + " positions");
}

}  // namespace detail

inline BitVector tamper(const TamperSpec& spec, const BitVector& c) {
    const std::size_t n = c.size() / 2;
    return std::visit(
        [&](const auto& s) -> BitVector {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SplitState>) {
                return s.f(c.slice(0, n)).concat(s.g(c.slice(n, n)));
            } else if constexpr (std::is_same_v<T, Interleaved>) {
                auto u = s.pi.inverse().apply(c);
                return s.pi.apply(s.f(u.slice(0, n)).concat(s.g(u.slice(n, n))));
            } else if constexpr (std::is_same_v<T, LinearComposed>) {
                return s.h * tamper(TamperSpec(s.inner), c);
            } else if constexpr (std::is_same_v<T, SumForm>) {
                auto u = s.pi.inverse().apply(c);
                auto x = u.slice(0, n), y = u.slice(n, n);
                return s.pi.apply(detail::sum_half(s.f1, x, s.g1, y).concat(detail::sum_half(s.f2, x, s.g2, y)));
            } else {
                auto r = run_protocol(s, c.slice(0, n), c.slice(n, n));
                return r.x.concat(r.y);
            }
        },
        spec);
}

inline bool is_fixed_point_free(const SumForm& s, std::size_t n);

// Shape checks for a 2n-bit codeword; messages carry the failing field path.
inline void validate(const TamperSpec& spec, std::size_t n) {
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SplitState>) {
                detail::check_program(s.f, n, n, "f");
                detail::check_program(s.g, n, n, "g");
            } else if constexpr (std::is_same_v<T, Interleaved>) {
                detail::check_program(s.f, n, n, "f");
                detail::check_program(s.g, n, n, "g");
                detail::check_perm(s.pi, 2 * n, "pi");
            } else if constexpr (std::is_same_v<T, LinearComposed>) {
                if (s.h.rows() != 2 * n || s.h.cols() != 2 * n) throw AdversaryError("bad field: h must be " + std::to_string(2 * n) + " x " + std::to_string(2 * n));
                detail::check_program(s.inner.f, n, n, "inner.f");
                detail::check_program(s.inner.g, n, n, "inner.g");
                detail::check_perm(s.inner.pi, 2 * n, "inner.pi");
            } else if constexpr (std::is_same_v<T, SumForm>) {
                detail::check_program(s.f1, n, n, "f1");
                detail::check_program(s.f2, n, n, "f2");
                detail::check_program(s.g1, n, n, "g1");
                detail::check_program(s.g2, n, n, "g2");
                detail::check_perm(s.pi, 2 * n, "pi");
                if (s.fixed_point_free && n <= 20 && !is_fixed_point_free(s, n))
                    throw AdversaryError("bad field: fixed_point_free is set but both halves have fixed points");
            } else {
                std::size_t budget[2] = {0, 0};
                for (std::size_t i = 0; i < s.rounds.size(); ++i) {
                    const auto& r = s.rounds[i];
                    auto where = "rounds[" + std::to_string(i) + "]";
                    detail::check_program(r.next, n + 2 * s.t, r.bits, where + ".fn");
                    budget[static_cast<int>(r.party)] += r.bits;
                    if (budget[static_cast<int>(r.party)] > s.t)
                        throw AdversaryError("bad field: " + where + ".bits: party sends more than t = " + std::to_string(s.t) + " bits");
                }
                detail::check_program(s.final_f, n + 2 * s.t, n, "final_f");
                detail::check_program(s.final_g, n + 2 * s.t, n, "final_g");
            }
        },
        spec);
}

// The permutation as a 2n x 2n matrix P with P v = pi.apply(v).
inline BitMatrix perm_matrix(const Permutation& pi) {
    BitMatrix m(pi.size(), pi.size());
    for (std::size_t i = 0; i < pi.size(); ++i) m.set(pi(i), i, true);
    return m;
}

inline BitMatrix block_of(const BitMatrix& a, std::size_t r0, std::size_t c0, std::size_t n) {
    BitMatrix b(n, n);
    for (std::size_t r = 0; r < n; ++r) b.row(r) = a.row(r0 + r).slice(c0, n);
    return b;
}

// h((f(x) o g(y))_pi) = ((f1(x) + g1(y)) o (f2(x) + g2(y)))_pi with A = P^-1 h P:
// f1 = A11 f, g1 = A12 g, f2 = A21 f, g2 = A22 g.
inline SumForm decompose_linear_composed(const LinearComposed& lc) {
    const std::size_t n = lc.h.rows() / 2;
    auto P = perm_matrix(lc.inner.pi), Pinv = perm_matrix(lc.inner.pi.inverse());
    auto A = Pinv * (lc.h * P);
    auto side = [&](const Program& f, std::size_t r0, std::size_t c0) { return Program::compose({f, Program::affine(block_of(A, r0, c0, n))}); };
    SumForm s;
    s.f1 = side(lc.inner.f, 0, 0);
    s.g1 = side(lc.inner.g, 0, n);
    s.f2 = side(lc.inner.f, n, 0);
    s.g2 = side(lc.inner.g, n, n);
    s.pi = lc.inner.pi;
    return s;
}

// Either f1(x) + g1(y) != x for all x, y, or f2(x) + g2(y) != y for all x, y.
inline bool is_fixed_point_free(const SumForm& s, std::size_t n) {
    if (n > 20) throw std::invalid_argument("fixed-point check enumerates 2^n points; n too large");
    auto never_hits = [&](const Program& own, const Program& other) {
        // own(u) + other(v) = u  <=>  own(u) + u = other(v)
        std::vector<std::uint8_t> image(std::size_t{1} << n, 0);
        for (std::uint64_t v = 0; v < (std::uint64_t{1} << n); ++v) image[other(BitVector::from_uint(v, n)).to_uint()] = 1;
        for (std::uint64_t u = 0; u < (std::uint64_t{1} << n); ++u) {
            auto uv = BitVector::from_uint(u, n);
            if (image[(own(uv) ^ uv).to_uint()]) return false;
        }
        return true;
    };
    return never_hits(s.f1, s.g1) || never_hits(s.g2, s.f2);
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

using json = nlohmann::json;

inline const json& field(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw AdversaryError("bad field: " + (path.empty() ? std::string("adversary") : path) + " must be an object");
    if (!j.contains(key)) throw AdversaryError("missing field: " + (path.empty() ? key : path + "." + key));
    return j.at(key);
}
inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline BitVector vec_field(const json& j, const std::string& key, const std::string& path) {
    const auto& v = field(j, key, path);
    if (!v.is_string()) throw AdversaryError("bad field: " + join(path, key) + " must be a len:hex string");
    try {
        return BitVector::parse(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw AdversaryError("bad field: " + join(path, key) + ": " + e.what());
    }
}

inline std::size_t count_field(const json& j, const std::string& key, const std::string& path) {
    const auto& v = field(j, key, path);
    if (!v.is_number_integer() || v.get<long long>() < 0) throw AdversaryError("bad field: " + join(path, key) + " must be a non-negative integer");
    return v.get<std::size_t>();
}

inline Permutation perm_field(const json& j, const std::string& key, const std::string& path) {
    const auto& v = field(j, key, path);
    if (!v.is_array()) throw AdversaryError("bad field: " + join(path, key) + " must be an array of indices");
    std::vector<std::size_t> map;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number_integer() || v[i].get<long long>() < 0)
            throw AdversaryError("bad field: " + join(path, key) + "[" + std::to_string(i) + "] must be a non-negative integer");
        map.push_back(v[i].get<std::size_t>());
    }
    try {
        return Permutation(std::move(map));
    } catch (const std::invalid_argument& e) {
        throw AdversaryError("bad field: " + join(path, key) + ": " + e.what());
    }
}

inline BitMatrix matrix_field(const json& j, const std::string& key, const std::string& path) {
    const auto& v = field(j, key, path);
    if (!v.is_array() || v.empty()) throw AdversaryError("bad field: " + join(path, key) + " must be a non-empty array of rows");
    std::vector<BitVector> rows;
    for (std::size_t i = 0; i < v.size(); ++i) {
        auto where = join(path, key) + "[" + std::to_string(i) + "]";
        if (!v[i].is_string()) throw AdversaryError("bad field: " + where + " must be a len:hex string");
        try {
            rows.push_back(BitVector::parse(v[i].get<std::string>()));
        } catch (const std::invalid_argument& e) {
            throw AdversaryError("bad field: " + where + ": " + e.what());
        }
        if (rows.back().size() != rows.front().size()) throw AdversaryError("bad field: " + where + " has a different length");
    }
    const std::size_t cols = rows.front().size();
    return BitMatrix(std::move(rows), cols);
}

inline nlohmann::ordered_json matrix_json(const BitMatrix& m) {
    auto a = nlohmann::ordered_json::array();
    for (const auto& r : m.row_list()) a.push_back(r.to_text());
    return a;
}

}  // namespace detail

inline Program Program::from_json(const nlohmann::json& j, const std::string& path) {
    using namespace detail;
    const auto& opv = field(j, "op", path);
    if (!opv.is_string()) throw AdversaryError("bad field: " + join(path, "op") + " must be a string");
    const auto op = opv.get<std::string>();
    try {
        if (op == "identity") return identity();
        if (op == "xor") return xor_mask(vec_field(j, "mask", path));
        if (op == "permute") return permute(perm_field(j, "map", path));
        if (op == "const") return constant(vec_field(j, "value", path));
        if (op == "affine") {
            auto m = matrix_field(j, "rows", path);
            if (j.contains("cols") && count_field(j, "cols", path) != m.cols())
                throw AdversaryError("bad field: " + join(path, "cols") + " differs from the row length");
            std::optional<BitVector> off;
            if (j.contains("offset")) off = vec_field(j, "offset", path);
            if (off && off->size() != m.rows()) throw AdversaryError("bad field: " + join(path, "offset") + " must have one bit per row");
            return affine(std::move(m), std::move(off));
        }
        if (op == "table") {
            auto offset = j.contains("offset") ? count_field(j, "offset", path) : 0;
            auto width = count_field(j, "width", path);
            const auto& v = field(j, "values", path);
            if (!v.is_array()) throw AdversaryError("bad field: " + join(path, "values") + " must be an array");
            std::vector<std::uint32_t> values;
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (!v[i].is_number_integer() || v[i].get<long long>() < 0)
                    throw AdversaryError("bad field: " + join(path, "values") + "[" + std::to_string(i) + "] must be a non-negative integer");
                values.push_back(v[i].get<std::uint32_t>());
            }
            return table(offset, width, std::move(values));
        }
        if (op == "compose") {
            const auto& v = field(j, "steps", path);
            if (!v.is_array()) throw AdversaryError("bad field: " + join(path, "steps") + " must be an array");
            std::vector<Program> steps;
            for (std::size_t i = 0; i < v.size(); ++i) steps.push_back(from_json(v[i], join(path, "steps") + "[" + std::to_string(i) + "]"));
            return compose(std::move(steps));
        }
    } catch (const std::invalid_argument& e) {
        throw AdversaryError("bad field: " + (path.empty() ? std::string("program") : path) + ": " + e.what());
    }
    throw AdversaryError("bad field: " + join(path, "op") + " unknown op '" + op + "'");
}

inline nlohmann::ordered_json to_json(const Adversary& a) {
    using oj = nlohmann::ordered_json;
    oj j;
    j["id"] = a.id;
    j["family"] = family_name(a.spec);
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SplitState>) {
                j["f"] = s.f.to_json();
                j["g"] = s.g.to_json();
            } else if constexpr (std::is_same_v<T, Interleaved>) {
                j["f"] = s.f.to_json();
                j["g"] = s.g.to_json();
                j["pi"] = s.pi.map();
            } else if constexpr (std::is_same_v<T, LinearComposed>) {
                j["h"] = detail::matrix_json(s.h);
                j["inner"] = oj{{"f", s.inner.f.to_json()}, {"g", s.inner.g.to_json()}, {"pi", s.inner.pi.map()}};
            } else if constexpr (std::is_same_v<T, SumForm>) {
                j["f1"] = s.f1.to_json();
                j["f2"] = s.f2.to_json();
                j["g1"] = s.g1.to_json();
                j["g2"] = s.g2.to_json();
                j["pi"] = s.pi.map();
                j["fixed_point_free"] = s.fixed_point_free;
            } else {
                j["t"] = s.t;
                oj rounds = oj::array();
                for (const auto& r : s.rounds)
                    rounds.push_back(oj{{"party", r.party == Party::alice ? "alice" : "bob"}, {"bits", r.bits}, {"fn", r.next.to_json()}});
                j["rounds"] = rounds;
                j["final_f"] = s.final_f.to_json();
                j["final_g"] = s.final_g.to_json();
            }
        },
        a.spec);
    return j;
}

inline Adversary adversary_from_json(const nlohmann::json& j) {
    using namespace detail;
    Adversary a;
    if (!j.is_object()) throw AdversaryError("bad field: adversary must be an object");
    if (j.contains("id")) {
        if (!j["id"].is_string()) throw AdversaryError("bad field: id must be a string");
        a.id = j["id"].get<std::string>();
    }
    const auto& fam = field(j, "family", "");
    if (!fam.is_string()) throw AdversaryError("bad field: family must be a string");
    const auto family = fam.get<std::string>();
    auto prog = [&](const json& obj, const std::string& key, const std::string& path) { return Program::from_json(field(obj, key, path), join(path, key)); };
    if (family == "split-state") {
        a.spec = SplitState{prog(j, "f", ""), prog(j, "g", "")};
    } else if (family == "interleaved") {
        a.spec = Interleaved{prog(j, "f", ""), prog(j, "g", ""), perm_field(j, "pi", "")};
    } else if (family == "linear-composed") {
        const auto& in = field(j, "inner", "");
        a.spec = LinearComposed{matrix_field(j, "h", ""), Interleaved{prog(in, "f", "inner"), prog(in, "g", "inner"), perm_field(in, "pi", "inner")}};
    } else if (family == "sum-form") {
        SumForm s{prog(j, "f1", ""), prog(j, "f2", ""), prog(j, "g1", ""), prog(j, "g2", ""), perm_field(j, "pi", ""), false};
        if (j.contains("fixed_point_free")) {
            if (!j["fixed_point_free"].is_boolean()) throw AdversaryError("bad field: fixed_point_free must be a boolean");
            s.fixed_point_free = j["fixed_point_free"].get<bool>();
        }
        a.spec = std::move(s);
    } else if (family == "comm-protocol") {
        CommProtocol p;
        p.t = count_field(j, "t", "");
        const auto& rounds = field(j, "rounds", "");
        if (!rounds.is_array()) throw AdversaryError("bad field: rounds must be an array");
        for (std::size_t i = 0; i < rounds.size(); ++i) {
            auto where = "rounds[" + std::to_string(i) + "]";
            const auto& party = field(rounds[i], "party", where);
            if (!party.is_string() || (party != "alice" && party != "bob")) throw AdversaryError("bad field: " + where + ".party must be alice or bob");
            p.rounds.push_back({party == "alice" ? Party::alice : Party::bob, count_field(rounds[i], "bits", where), prog(rounds[i], "fn", where)});
        }
        p.final_f = prog(j, "final_f", "");
        p.final_g = prog(j, "final_g", "");
        a.spec = std::move(p);
    } else {
        throw AdversaryError("bad field: family: unknown family '" + family + "'");
    }
    if (a.id.empty()) a.id = family;
    return a;
}

inline Adversary parse_adversary(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw AdversaryError(std::string("adversary is not valid JSON: ") + e.what());
    }
    return adversary_from_json(j);
}

// ---------------------------------------------------------------------------
// Distributions

class KahanSum {
public:
    void add(double x) {
        double y = x - c_;
        double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

private:
    double s_ = 0, c_ = 0;
};

class DistributionTable {
public:
    DistributionTable() = default;
    explicit DistributionTable(std::vector<double> pmf) : pmf_(std::move(pmf)) {
        KahanSum total;
        for (double p : pmf_) {
            if (!(p >= 0)) throw std::invalid_argument("probabilities must be non-negative");
            total.add(p);
        }
        if (std::abs(total.value() - 1.0) > std::ldexp(1.0, -40)) throw std::invalid_argument("probabilities must sum to 1");
    }

    static DistributionTable from_counts(const std::vector<std::uint64_t>& counts) {
        std::uint64_t total = 0;
        for (auto c : counts) total += c;
        if (total == 0) throw std::invalid_argument("empty count table");
        std::vector<double> p(counts.size());
        for (std::size_t i = 0; i < counts.size(); ++i) p[i] = double(counts[i]) / double(total);
        return normalized(std::move(p));
    }
    static DistributionTable point_mass(std::size_t size, std::size_t at) {
        std::vector<double> p(size, 0.0);
        p.at(at) = 1.0;
        return DistributionTable(std::move(p));
    }
    static DistributionTable uniform(std::size_t size) { return DistributionTable(std::vector<double>(size, 1.0 / double(size))); }
    // Rescales accumulated weights onto the simplex.
    static DistributionTable normalized(std::vector<double> w) {
        KahanSum total;
        for (double x : w) total.add(x);
        if (!(total.value() > 0)) throw std::invalid_argument("weights must have positive mass");
        for (auto& x : w) x /= total.value();
        DistributionTable d;
        d.pmf_ = std::move(w);
        return d;
    }

    std::size_t size() const { return pmf_.size(); }
    double operator[](std::size_t i) const { return pmf_[i]; }
    const std::vector<double>& pmf() const { return pmf_; }

private:
    std::vector<double> pmf_;
};

inline double tv_distance(const DistributionTable& p, const DistributionTable& q) {
    if (p.size() != q.size()) throw std::invalid_argument("distributions live on different domains");
    KahanSum s;
    for (std::size_t i = 0; i < p.size(); ++i) s.add(std::abs(p[i] - q[i]));
    return std::min(1.0, s.value() / 2);
}

using Rational = boost::multiprecision::cpp_rational;

// Exact counterpart of a count-built table, for domains up to 2^16.
struct RationalTable {
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;

    explicit RationalTable(std::vector<std::uint64_t> c) : counts(std::move(c)) {
        if (counts.size() > (std::size_t{1} << 16)) throw std::invalid_argument("exact-rational mode is limited to 2^16 outcomes");
        for (auto x : counts) total += x;
        if (total == 0) throw std::invalid_argument("empty count table");
    }
    Rational operator[](std::size_t i) const { return Rational(counts[i]) / total; }
    DistributionTable to_double() const { return DistributionTable::from_counts(counts); }
};

inline Rational tv_distance(const RationalTable& p, const RationalTable& q) {
    if (p.counts.size() != q.counts.size()) throw std::invalid_argument("distributions live on different domains");
    boost::multiprecision::cpp_int num = 0;
    for (std::size_t i = 0; i < p.counts.size(); ++i) {
        boost::multiprecision::cpp_int d = boost::multiprecision::cpp_int(p.counts[i]) * q.total - boost::multiprecision::cpp_int(q.counts[i]) * p.total;
        num += d < 0 ? -d : d;
    }
    return Rational(num) / (boost::multiprecision::cpp_int(2) * p.total * q.total);
}

// Finite source given by its support and optional weights.
class EnumerableSource {
public:
    static EnumerableSource uniform(std::size_t bits) {
        if (bits > 40) throw std::invalid_argument("uniform source too wide to enumerate");
        EnumerableSource s;
        s.bits_ = bits;
        s.size_ = std::uint64_t{1} << bits;
        return s;
    }
    static EnumerableSource flat(std::size_t bits, std::vector<std::uint64_t> support) {
        if (support.empty()) throw std::invalid_argument("flat source needs a non-empty support");
        EnumerableSource s;
        s.bits_ = bits;
        s.size_ = support.size();
        s.support_ = std::move(support);
        return s;
    }
    static EnumerableSource weighted(std::size_t bits, std::vector<std::uint64_t> support, std::vector<double> weights) {
        if (support.size() != weights.size()) throw std::invalid_argument("support and weights differ in length");
        auto s = flat(bits, std::move(support));
        s.weights_ = DistributionTable::normalized(std::move(weights)).pmf();
        return s;
    }

    std::size_t bits() const { return bits_; }
    std::uint64_t size() const { return size_; }

    template <class F>
    void for_each(F&& f) const {
        const double flat_p = 1.0 / double(size_);
        for (std::uint64_t i = 0; i < size_; ++i) {
            std::uint64_t z = support_.empty() ? i : support_[i];
            f(z, weights_.empty() ? flat_p : weights_[i]);
        }
    }

private:
    std::size_t bits_ = 0;
    std::uint64_t size_ = 0;
    std::vector<std::uint64_t> support_;
    std::vector<double> weights_;
};

inline constexpr std::uint64_t kDefaultCap = std::uint64_t{1} << 24;

inline void check_cap(std::uint64_t points, std::uint64_t cap) {
    if (points > cap)
        throw CapExceeded("enumeration of " + std::to_string(points) + " points exceeds the cap of " + std::to_string(cap) +
                          "; use Monte Carlo mode");
}

// Joint law of (a(Z), b(Z)); outcome (u, v) sits at index u * b_size + v.
struct JointTable {
    std::size_t a_size = 0, b_size = 0;
    DistributionTable joint;

    DistributionTable marginal_a() const {
        std::vector<double> p(a_size, 0.0);
        for (std::size_t u = 0; u < a_size; ++u)
            for (std::size_t v = 0; v < b_size; ++v) p[u] += joint[u * b_size + v];
        return DistributionTable::normalized(std::move(p));
    }
    DistributionTable marginal_b() const {
        std::vector<double> p(b_size, 0.0);
        for (std::size_t u = 0; u < a_size; ++u)
            for (std::size_t v = 0; v < b_size; ++v) p[v] += joint[u * b_size + v];
        return DistributionTable::normalized(std::move(p));
    }
    // Distance from (U, B): how far the first coordinate is from uniform and
    // independent of the second.
    double distance_from_uniform_times_b() const {
        auto mb = marginal_b();
        std::vector<double> q(a_size * b_size);
        for (std::size_t u = 0; u < a_size; ++u)
            for (std::size_t v = 0; v < b_size; ++v) q[u * b_size + v] = mb[v] / double(a_size);
        return tv_distance(joint, DistributionTable::normalized(std::move(q)));
    }
};

inline JointTable exact_joint(const std::function<std::uint64_t(std::uint64_t)>& a, std::size_t a_size,
                              const std::function<std::uint64_t(std::uint64_t)>& b, std::size_t b_size, const EnumerableSource& src,
                              std::uint64_t cap = kDefaultCap) {
    check_cap(src.size(), cap);
    std::vector<KahanSum> acc(a_size * b_size);
    src.for_each([&](std::uint64_t z, double p) {
        auto u = a(z), v = b(z);
        if (u >= a_size || v >= b_size) throw std::out_of_range("joint outcome outside the declared domain");
        acc[u * b_size + v].add(p);
    });
    std::vector<double> w(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) w[i] = acc[i].value();
    return {a_size, b_size, DistributionTable::normalized(std::move(w))};
}

// ---------------------------------------------------------------------------
// Non-malleability experiments

template <class S>
concept CodingScheme = requires(const S& s, const BitVector& v, Rng& r) {
    { s.k() } -> std::convertible_to<std::size_t>;
    { s.block() } -> std::convertible_to<std::size_t>;
    { s.encode(v, r) } -> std::same_as<EncodeResult>;
    { s.decode(v) } -> std::same_as<BitVector>;
    { s.classify(v) } -> std::same_as<DecodeResult>;
};

// Decoder table over every codeword.
struct Codebook {
    std::size_t k = 0, block = 0;
    std::vector<std::uint32_t> message;
    std::vector<std::uint8_t> encodable;
};

template <CodingScheme S>
Codebook build_codebook(const S& scheme, std::uint64_t cap = kDefaultCap) {
    if (scheme.block() > 32 || scheme.k() > 31) throw CapExceeded("codebook needs block <= 32 bits; use Monte Carlo mode");
    const std::uint64_t N = std::uint64_t{1} << scheme.block();
    check_cap(N, cap);
    Codebook cb{scheme.k(), scheme.block(), std::vector<std::uint32_t>(N), std::vector<std::uint8_t>(N)};
    for (std::uint64_t c = 0; c < N; ++c) {
        auto r = scheme.classify(BitVector::from_uint(c, cb.block));
        cb.message[c] = static_cast<std::uint32_t>(r.message.to_uint());
        cb.encodable[c] = r.encodable;
    }
    return cb;
}

inline std::vector<std::uint32_t> tamper_map(const TamperSpec& spec, std::size_t block) {
    const std::uint64_t N = std::uint64_t{1} << block;
    std::vector<std::uint32_t> out(N);
    for (std::uint64_t c = 0; c < N; ++c) out[c] = static_cast<std::uint32_t>(tamper(spec, BitVector::from_uint(c, block)).to_uint());
    return out;
}

enum class Mode { exact, monte_carlo };

inline std::string to_string(Mode m) { return m == Mode::exact ? "exact" : "monte-carlo"; }
inline Mode mode_from_string(const std::string& s) {
    if (s == "exact") return Mode::exact;
    if (s == "monte-carlo" || s == "mc") return Mode::monte_carlo;
    throw std::invalid_argument("unknown mode: " + s);
}

// copy(D, s): the same* mass moves onto s.
inline DistributionTable copy_of(const DistributionTable& sim, std::size_t s) {
    std::vector<double> p(sim.pmf().begin(), sim.pmf().end() - 1);
    p[s] += sim.pmf().back();
    return DistributionTable::normalized(std::move(p));
}

// Simulator over messages plus same* (last index), exact from a codebook.
inline DistributionTable canonical_simulator(const Codebook& cb, const std::vector<std::uint32_t>& tampered) {
    const std::size_t M = std::size_t{1} << cb.k;
    std::vector<std::uint64_t> counts(M + 1, 0);
    for (std::size_t c = 0; c < tampered.size(); ++c) ++counts[tampered[c] == c ? M : cb.message[tampered[c]]];
    return DistributionTable::from_counts(counts);
}

template <CodingScheme S>
DistributionTable canonical_simulator(const S& scheme, const TamperSpec& spec, std::uint64_t trials, Rng& rng) {
    const std::size_t M = std::size_t{1} << scheme.k();
    std::vector<std::uint64_t> counts(M + 1, 0);
    for (std::uint64_t t = 0; t < trials; ++t) {
        auto c = BitVector::random(scheme.block(), rng);
        auto c2 = tamper(spec, c);
        ++counts[c2 == c ? M : scheme.decode(c2).to_uint()];
    }
    return DistributionTable::from_counts(counts);
}

struct ExperimentConfig {
    Mode mode = Mode::exact;
    std::uint64_t trials = 10000;  // per message and for the simulator (Monte Carlo)
    std::uint64_t seed = 1;
    std::uint64_t cap = kDefaultCap;
    std::size_t max_messages = 16;  // Monte Carlo samples this many messages when 2^k is larger
    std::optional<double> threshold;
    bool timing = false;
};

struct ExperimentReport {
    std::string profile, adversary, family;
    Mode mode = Mode::exact;
    std::uint64_t trials = 0, seed = 0;
    double nm_error = 0, standard_error = 0;
    std::uint64_t worst_message = 0;
    std::vector<std::pair<std::uint64_t, double>> per_message;
    DistributionTable simulator;
    std::uint64_t encode_failures = 0;
    std::optional<double> threshold;
    std::optional<double> wall_time_s;

    bool pass() const { return !threshold || nm_error <= *threshold; }

    nlohmann::ordered_json to_json() const {
        using oj = nlohmann::ordered_json;
        oj j;
        j["version"] = kVersion;
        j["profile"] = profile;
        j["adversary"] = adversary;
        j["family"] = family;
        j["mode"] = to_string(mode);
        j["seed"] = seed;
        j["trials"] = trials;
        j["nm_error"] = nm_error;
        j["standard_error"] = standard_error;
        j["worst_message"] = worst_message;
        oj pm = oj::array();
        for (const auto& [s, e] : per_message) pm.push_back(oj{{"message", s}, {"error", e}});
        j["per_message"] = pm;
        oj sim = oj::array();
        for (std::size_t i = 0; i + 1 < simulator.size(); ++i) sim.push_back(simulator[i]);
        j["simulator"] = oj{{"messages", sim}, {"same", simulator.pmf().back()}};
        j["encode_failures"] = encode_failures;
        if (threshold) {
            j["threshold"] = *threshold;
            j["pass"] = pass();
        }
        if (wall_time_s) j["wall_time_s"] = *wall_time_s;
        return j;
    }
};

namespace detail {

// Noise scale of TV(p_hat, copy(D_hat, s)): half the sum of per-outcome
// standard deviations, which bounds E|TV_hat - TV| including the bias of |.|
// near zero. p_hat and D_hat are independent multinomial estimates. Variances
// use add-half smoothing, so an outcome never seen in N trials still carries
// the 1/N resolution of the sample.
inline double tv_standard_error(const DistributionTable& real, std::uint64_t n_real, const DistributionTable& sim, std::uint64_t n_sim,
                                std::size_t s) {
    auto target = copy_of(sim, s);
    auto var = [](double p, std::uint64_t n) {
        double t = (p * double(n) + 0.5) / (double(n) + 1);
        return t * (1 - t) / double(n);
    };
    KahanSum acc;
    for (std::size_t i = 0; i < real.size(); ++i) acc.add(std::sqrt(var(real[i], n_real) + var(target[i], n_sim)));
    return acc.value() / 2;
}

}  // namespace detail

// Runs Dec(f(Enc(s))) against copy(D_f, s) for every message (exact) or a
// sample of messages (Monte Carlo); the reported error is the maximum over s.
template <CodingScheme S>
class NmHarness {
public:
    explicit NmHarness(const S& scheme, std::string profile_id = "") : scheme_(scheme), profile_(std::move(profile_id)) {}

    const Codebook& codebook(std::uint64_t cap = kDefaultCap) const {
        if (!codebook_) codebook_ = build_codebook(scheme_, cap);
        return *codebook_;
    }

    ExperimentReport run(const Adversary& adv, const ExperimentConfig& cfg) const {
        validate(adv.spec, scheme_.block() / 2);
        auto t0 = std::chrono::steady_clock::now();
        ExperimentReport r;
        r.profile = profile_;
        r.adversary = adv.id;
        r.family = family_name(adv.spec);
        r.mode = cfg.mode;
        r.seed = cfg.seed;
        r.threshold = cfg.threshold;
        if (cfg.mode == Mode::exact)
            run_exact(adv, cfg, r);
        else
            run_mc(adv, cfg, r);
        if (cfg.timing) r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }

private:
    void run_exact(const Adversary& adv, const ExperimentConfig& cfg, ExperimentReport& r) const {
        check_cap(std::uint64_t{1} << scheme_.block(), cfg.cap);
        const auto& cb = codebook(cfg.cap);
        auto map = tamper_map(adv.spec, cb.block);
        r.simulator = canonical_simulator(cb, map);
        r.trials = map.size();
        const std::size_t M = std::size_t{1} << cb.k;
        std::vector<std::vector<std::uint64_t>> real(M, std::vector<std::uint64_t>(M, 0));
        for (std::size_t c = 0; c < map.size(); ++c)
            if (cb.encodable[c]) ++real[cb.message[c]][cb.message[map[c]]];
        for (std::size_t s = 0; s < M; ++s) {
            std::uint64_t tot = 0;
            for (auto x : real[s]) tot += x;
            if (tot == 0) throw std::runtime_error("message " + std::to_string(s) + " has no encodable codeword");
            record(r, s, tv_distance(DistributionTable::from_counts(real[s]), copy_of(r.simulator, s)), 0.0);
        }
    }

    void run_mc(const Adversary& adv, const ExperimentConfig& cfg, ExperimentReport& r) const {
        auto sim_rng = substream(cfg.seed, "simulator");
        r.simulator = canonical_simulator(scheme_, adv.spec, cfg.trials, sim_rng);
        r.trials = cfg.trials;
        const std::size_t k = scheme_.k();
        const std::uint64_t M = std::uint64_t{1} << k;
        std::vector<std::uint64_t> messages;
        if (M <= cfg.max_messages) {
            for (std::uint64_t s = 0; s < M; ++s) messages.push_back(s);
        } else {
            auto pick = substream(cfg.seed, "messages");
            for (std::size_t i = 0; i < cfg.max_messages; ++i) messages.push_back(BitVector::random(k, pick).to_uint());
        }
        auto enc_rng = substream(cfg.seed, "encode");
        for (auto s : messages) {
            // Outcome table over messages; for wide k only observed outcomes matter.
            std::map<std::uint64_t, std::uint64_t> seen;
            std::uint64_t ok = 0;
            auto msg = BitVector::from_uint(s, k);
            for (std::uint64_t t = 0; t < cfg.trials; ++t) {
                auto e = scheme_.encode(msg, enc_rng);
                if (!e.ok()) {
                    ++r.encode_failures;
                    continue;
                }
                ++seen[scheme_.decode(tamper(adv.spec, *e.codeword)).to_uint()];
                ++ok;
            }
            if (ok == 0) throw std::runtime_error("every encode of message " + std::to_string(s) + " failed");
            std::vector<std::uint64_t> counts(M, 0);
            for (const auto& [o, c] : seen) counts[o] = c;
            auto real = DistributionTable::from_counts(counts);
            record(r, s, tv_distance(real, copy_of(r.simulator, s)), detail::tv_standard_error(real, ok, r.simulator, cfg.trials, s));
        }
    }

    // The maximum over messages moves with the noise, so the reported error
    // bar is the largest per-message one.
    static void record(ExperimentReport& r, std::uint64_t s, double err, double se) {
        r.per_message.emplace_back(s, err);
        r.standard_error = std::max(r.standard_error, se);
        if (r.per_message.size() == 1 || err > r.nm_error) {
            r.nm_error = err;
            r.worst_message = s;
        }
    }

    const S& scheme_;
    std::string profile_;
    mutable std::optional<Codebook> codebook_;
};

template <CodingScheme S>
ExperimentReport nm_experiment(const S& scheme, const Adversary& adv, const ExperimentConfig& cfg, const std::string& profile_id = "") {
    return NmHarness<S>(scheme, profile_id).run(adv, cfg);
}

// ---------------------------------------------------------------------------
// Standard adversary battery for a 2n-bit block.

inline BitMatrix prefix_selector(std::size_t rows, std::size_t cols) {
    BitMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) m.set(r, r, true);
    return m;
}

inline std::vector<Adversary> standard_battery(std::size_t n, std::uint64_t seed) {
    auto rng = substream(seed, "battery");
    std::vector<Adversary> out;
    out.push_back({"identity", SplitState{}});
    out.push_back({"constant", SplitState{Program::constant(BitVector::random(n, rng)), Program::constant(BitVector::random(n, rng))}});
    for (std::size_t i = 0; i < 2 * n; ++i) {
        BitVector mask(n);
        mask.set(i % n, true);
        SplitState s;
        (i < n ? s.f : s.g) = Program::xor_mask(mask);
        out.push_back({"bit-flip-" + std::to_string(i), s});
    }
    if (n <= 16) {
        out.push_back({"random-interleaved", Interleaved{Program::random_table(n, rng), Program::random_table(n, rng), Permutation::random(2 * n, rng)}});
        out.push_back({"random-linear-composed",
                       LinearComposed{BitMatrix::random(2 * n, 2 * n, rng),
                                      Interleaved{Program::random_table(n, rng), Program::random_table(n, rng), Permutation::identity(2 * n)}}});
    }
    CommProtocol p;
    p.t = 2;
    p.rounds.push_back({Party::alice, 2, Program::random_affine(2, n + 4, rng)});
    p.rounds.push_back({Party::bob, 2, Program::random_affine(2, n + 4, rng)});
    auto final_side = [&] {
        if (n + 4 <= 20) return Program::compose({Program::random_table(n + 4, rng), Program::affine(prefix_selector(n, n + 4))});
        return Program::random_affine(n, n + 4, rng);
    };
    p.final_f = final_side();
    p.final_g = final_side();
    out.push_back({"protocol-2round-t2", std::move(p)});
    return out;
}

}  // namespace nmforge
