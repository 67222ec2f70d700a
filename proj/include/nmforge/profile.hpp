#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "field2m.hpp"

namespace nmforge {

struct ProfileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Breaker settings. Helper, row and advice lengths come from the call site.
struct AcbSection {
    std::size_t n2 = 0, d = 0, t = 1, lambda = 0, ladder_floor = 0;
    double eps = 0.25;
};

// Interleaved-source extractor: condense a prefix, widen rows with LExt1,
// break correlations across rows, extract with the XOR as seed.
struct IlExtSection {
    std::size_t n1 = 0;          // condensed prefix
    std::size_t iterations = 1;  // condenser depth; 3^iterations rows
    std::size_t lext1_out = 0;   // widened row length
    AcbSection acb;              // acb.n2 is the final seed length
    std::size_t m = 0;
};

struct CodeSection {
    std::string family = "dual-bch";
    std::size_t n_b = 0, t_b = 0;
};

// Invertible extractor: z = z1..z5 (split) followed by z6.
struct InvSection {
    std::array<std::size_t, 5> split{};
    std::array<std::size_t, 4> samp_d{};  // sampler i takes 2^samp_d[i] indices
    std::size_t min_n6 = 0;
    std::size_t n0 = 0;         // core output, seed of LExt0
    std::size_t lext0_out = 0;  // rows of LExt0 fixed in the constraint system
    IlExtSection core;
    std::size_t rows = 1;       // D
    std::size_t lext1_out = 0;  // v_i length
    std::size_t lext2_out = 0;  // r_i length
    AcbSection acb;             // acb.n2 is the LExt3 seed length
};

struct AdvSection {
    std::size_t slice1 = 0, slice2 = 0;
    std::size_t samp1_d = 0, samp2_d = 0;
    IlExtSection core;
    std::size_t w2_len = 0;
};

struct WrapSection {
    std::size_t slice = 0;
    std::size_t rows = 1;
    std::size_t lext1_out = 0;
    std::size_t lext2_out = 0;
    AcbSection acb;  // acb.n2 is forced to the profile output length
};

struct ParamProfile {
    std::string name;
    std::size_t n = 0;  // half block length
    std::size_t m = 0;  // output bits of ilnm and ilnm_inv
    CodeSection code;
    std::map<unsigned, FieldPtr> moduli;  // overrides of the default field per degree
    bool enforce_preconditions = false;
    InvSection inv;
    AdvSection adv;
    WrapSection wrap;
    IlExtSection ilext;
    std::map<std::string, double> constants;
};

namespace detail {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ProfileError(where() + ": expected an object");
    }

    std::string where(const std::string& key = "") const {
        if (key.empty()) return path_.empty() ? "profile" : path_;
        return path_.empty() ? key : path_ + "." + key;
    }
    bool has(const std::string& key) const { return j_.contains(key); }
    const json& at(const std::string& key) const {
        if (!j_.contains(key)) throw ProfileError("missing field: " + where(key));
        return j_.at(key);
    }
    Reader sub(const std::string& key) const { return Reader(at(key), where(key)); }

    std::size_t count(const std::string& key) const { return as_count(at(key), where(key)); }
    std::size_t count_or(const std::string& key, std::size_t dflt) const { return has(key) ? count(key) : dflt; }
    double real(const std::string& key) const {
        const auto& v = at(key);
        if (!v.is_number()) throw ProfileError("bad field: " + where(key) + " must be a number");
        return v.get<double>();
    }
    double real_or(const std::string& key, double dflt) const { return has(key) ? real(key) : dflt; }
    std::string str(const std::string& key) const {
        const auto& v = at(key);
        if (!v.is_string()) throw ProfileError("bad field: " + where(key) + " must be a string");
        return v.get<std::string>();
    }
    bool flag_or(const std::string& key, bool dflt) const {
        if (!has(key)) return dflt;
        const auto& v = at(key);
        if (!v.is_boolean()) throw ProfileError("bad field: " + where(key) + " must be a boolean");
        return v.get<bool>();
    }
    template <std::size_t N>
    std::array<std::size_t, N> counts(const std::string& key) const {
        const auto& v = at(key);
        if (!v.is_array() || v.size() != N)
            throw ProfileError("bad field: " + where(key) + " must be an array of " + std::to_string(N) + " counts");
        std::array<std::size_t, N> out{};
        for (std::size_t i = 0; i < N; ++i) out[i] = as_count(v[i], where(key) + "[" + std::to_string(i) + "]");
        return out;
    }

    static std::size_t as_count(const json& v, const std::string& path) {
        if (!v.is_number_integer() || v.get<long long>() < 0) throw ProfileError("bad field: " + path + " must be a non-negative integer");
        return v.get<std::size_t>();
    }

private:
    const json& j_;
    std::string path_;
};

inline AcbSection read_acb(const Reader& r) {
    AcbSection a;
    a.n2 = r.count("n2");
    a.d = r.count("d");
    a.t = r.count_or("t", 1);
    a.lambda = r.count_or("lambda", 0);
    a.eps = r.real_or("eps", 0.25);
    a.ladder_floor = r.count_or("ladder_floor", 0);
    if (!(a.eps > 0 && a.eps < 1)) throw ProfileError("bad field: " + r.where("eps") + " must lie in (0, 1)");
    return a;
}

inline IlExtSection read_ilext(const Reader& r) {
    IlExtSection s;
    s.n1 = r.count("n1");
    s.iterations = r.count("iterations");
    s.lext1_out = r.count("lext1_out");
    s.acb = read_acb(r.sub("acb"));
    s.m = r.count("m");
    return s;
}

inline ojson write_acb(const AcbSection& a) {
    ojson j;
    j["n2"] = a.n2;
    j["d"] = a.d;
    j["t"] = a.t;
    j["lambda"] = a.lambda;
    j["eps"] = a.eps;
    j["ladder_floor"] = a.ladder_floor;
    return j;
}

inline ojson write_ilext(const IlExtSection& s) {
    ojson j;
    j["n1"] = s.n1;
    j["iterations"] = s.iterations;
    j["lext1_out"] = s.lext1_out;
    j["acb"] = write_acb(s.acb);
    j["m"] = s.m;
    return j;
}

}  // namespace detail

inline ParamProfile profile_from_json(const nlohmann::json& j) {
    detail::Reader r(j, "");
    ParamProfile p;
    p.name = r.str("name");
    p.n = r.count("n");
    p.m = r.count("m");

    auto code = r.sub("code");
    p.code.family = code.str("family");
    if (p.code.family != "dual-bch") throw ProfileError("bad field: code.family must be \"dual-bch\"");
    p.code.n_b = code.count("n_b");
    p.code.t_b = code.count("t_b");

    if (r.has("moduli")) {
        const auto& mj = r.at("moduli");
        if (!mj.is_object()) throw ProfileError("bad field: moduli must be an object");
        for (auto it = mj.begin(); it != mj.end(); ++it) {
            std::string path = "moduli." + it.key();
            unsigned deg = 0;
            try {
                deg = static_cast<unsigned>(std::stoul(it.key()));
            } catch (const std::exception&) {
                throw ProfileError("bad field: " + path + " key must be a degree");
            }
            if (!it.value().is_string()) throw ProfileError("bad field: " + path + " must be a hex string");
            try {
                auto bits = BitVector::parse(std::to_string(deg + 1) + ":" + it.value().get<std::string>());
                p.moduli[deg] = std::make_shared<const FieldSpec>(deg, bits);
            } catch (const std::exception& e) {
                throw ProfileError("bad field: " + path + ": " + e.what());
            }
        }
    }
    p.enforce_preconditions = r.flag_or("enforce_preconditions", false);

    auto inv = r.sub("ilnm_inv");
    p.inv.split = inv.counts<5>("split");
    p.inv.samp_d = inv.counts<4>("samp_d");
    p.inv.min_n6 = inv.count_or("min_n6", 0);
    p.inv.n0 = inv.count("n0");
    p.inv.lext0_out = inv.count("lext0_out");
    p.inv.core = detail::read_ilext(inv.sub("core"));
    p.inv.rows = inv.count("rows");
    p.inv.lext1_out = inv.count("lext1_out");
    p.inv.lext2_out = inv.count("lext2_out");
    p.inv.acb = detail::read_acb(inv.sub("acb"));

    auto nm = r.sub("ilnm");
    auto adv = nm.sub("adv");
    p.adv.slice1 = adv.count("slice1");
    p.adv.slice2 = adv.count("slice2");
    p.adv.samp1_d = adv.count("samp1_d");
    p.adv.samp2_d = adv.count("samp2_d");
    p.adv.core = detail::read_ilext(adv.sub("core"));
    p.adv.w2_len = adv.count("w2_len");
    auto wrap = nm.sub("wrap");
    p.wrap.slice = wrap.count("slice");
    p.wrap.rows = wrap.count("rows");
    p.wrap.lext1_out = wrap.count("lext1_out");
    p.wrap.lext2_out = wrap.count("lext2_out");
    p.wrap.acb = detail::read_acb(wrap.sub("acb"));

    p.ilext = detail::read_ilext(r.sub("ilext"));

    if (r.has("constants")) {
        auto c = r.sub("constants");
        for (auto it = r.at("constants").begin(); it != r.at("constants").end(); ++it) p.constants[it.key()] = c.real(it.key());
    }
    return p;
}

inline nlohmann::ordered_json profile_to_json(const ParamProfile& p) {
    using detail::ojson;
    ojson j;
    j["name"] = p.name;
    j["n"] = p.n;
    j["m"] = p.m;
    j["code"] = ojson{{"family", p.code.family}, {"n_b", p.code.n_b}, {"t_b", p.code.t_b}};
    ojson mod = ojson::object();
    for (const auto& [deg, f] : p.moduli) {
        auto text = f->modulus().to_text();
        mod[std::to_string(deg)] = text.substr(text.find(':') + 1);
    }
    j["moduli"] = mod;
    j["enforce_preconditions"] = p.enforce_preconditions;

    ojson inv;
    inv["split"] = p.inv.split;
    inv["samp_d"] = p.inv.samp_d;
    inv["min_n6"] = p.inv.min_n6;
    inv["n0"] = p.inv.n0;
    inv["lext0_out"] = p.inv.lext0_out;
    inv["core"] = detail::write_ilext(p.inv.core);
    inv["rows"] = p.inv.rows;
    inv["lext1_out"] = p.inv.lext1_out;
    inv["lext2_out"] = p.inv.lext2_out;
    inv["acb"] = detail::write_acb(p.inv.acb);
    j["ilnm_inv"] = inv;

    ojson adv;
    adv["slice1"] = p.adv.slice1;
    adv["slice2"] = p.adv.slice2;
    adv["samp1_d"] = p.adv.samp1_d;
    adv["samp2_d"] = p.adv.samp2_d;
    adv["core"] = detail::write_ilext(p.adv.core);
    adv["w2_len"] = p.adv.w2_len;
    ojson wrap;
    wrap["slice"] = p.wrap.slice;
    wrap["rows"] = p.wrap.rows;
    wrap["lext1_out"] = p.wrap.lext1_out;
    wrap["lext2_out"] = p.wrap.lext2_out;
    wrap["acb"] = detail::write_acb(p.wrap.acb);
    j["ilnm"] = ojson{{"adv", adv}, {"wrap", wrap}};

    j["ilext"] = detail::write_ilext(p.ilext);
    ojson c = ojson::object();
    for (const auto& [k, v] : p.constants) c[k] = v;
    j["constants"] = c;
    return j;
}

inline ParamProfile parse_profile(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ProfileError(std::string("profile is not valid JSON: ") + e.what());
    }
    return profile_from_json(j);
}

inline ParamProfile load_profile_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ProfileError("profile not found: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_profile(ss.str());
}

namespace detail {

inline AcbSection acb_section(std::size_t n2, std::size_t d, std::size_t t, double eps, std::size_t floor = 0) {
    AcbSection a;
    a.n2 = n2;
    a.d = d;
    a.t = t;
    a.eps = eps;
    a.ladder_floor = floor;
    return a;
}

inline IlExtSection ilext_section(std::size_t n1, std::size_t it, std::size_t l1, AcbSection acb, std::size_t m) {
    return IlExtSection{n1, it, l1, acb, m};
}

inline std::map<std::string, double> default_constants(const ParamProfile& p) {
    // The asymptotic exponents have no desk-scale meaning; they are recorded
    // as the values the concrete lengths correspond to.
    double n = double(p.n);
    auto expo = [&](double len) { return len > 1 ? std::log(len) / std::log(n) : 0.0; };
    return {
        {"delta", expo(double(p.inv.split[0]))},
        {"delta_prime", expo(double(p.inv.n0))},
        {"delta1", expo(double(p.inv.acb.n2))},
        {"delta2", expo(double(p.inv.rows))},
        {"kappa", 2.0 / 3.0},
        {"c0", 2},
        {"c1", 1},
        {"c2", 1},
        {"C", 2},
        {"C1", 1},
        {"C2", 1},
        {"alpha", double(2 * p.n) / double(p.code.n_b)},
        {"beta", 0.5 - double(p.code.t_b - 1) * std::sqrt(double(p.code.n_b + 1)) / double(p.code.n_b)},
    };
}

}  // namespace detail

inline ParamProfile builtin_toy20() {
    ParamProfile p;
    p.name = "toy20";
    p.n = 10;
    p.m = 2;
    p.code = {"dual-bch", 31, 4};
    p.inv.split = {2, 1, 1, 1, 1};
    p.inv.samp_d = {1, 1, 2, 2};
    p.inv.min_n6 = 14;
    p.inv.n0 = 2;
    p.inv.lext0_out = 1;
    p.inv.core = detail::ilext_section(2, 1, 2, detail::acb_section(2, 1, 1, 0.25), 2);
    p.inv.rows = 1;
    p.inv.lext1_out = 1;
    p.inv.lext2_out = 4;
    p.inv.acb = detail::acb_section(4, 4, 2, 0.25);
    p.adv = {4, 4, 3, 2, detail::ilext_section(4, 1, 4, detail::acb_section(2, 2, 1, 0.25), 2), 2};
    p.wrap = {4, 2, 4, 12, detail::acb_section(2, 4, 2, 0.25, 12)};
    p.ilext = detail::ilext_section(16, 2, 6, detail::acb_section(4, 3, 2, 0.25), 4);
    p.constants = detail::default_constants(p);
    return p;
}

inline ParamProfile builtin_small64() {
    ParamProfile p;
    p.name = "small64";
    p.n = 32;
    p.m = 4;
    p.code = {"dual-bch", 255, 8};
    p.inv.split = {4, 4, 4, 4, 4};
    p.inv.samp_d = {3, 2, 3, 3};
    p.inv.min_n6 = 40;
    p.inv.n0 = 4;
    p.inv.lext0_out = 2;
    p.inv.core = detail::ilext_section(4, 1, 4, detail::acb_section(2, 2, 1, 0.25), 4);
    p.inv.rows = 2;
    p.inv.lext1_out = 4;
    p.inv.lext2_out = 6;
    p.inv.acb = detail::acb_section(6, 3, 4, 0.25, 6);
    p.adv = {8, 8, 3, 3, detail::ilext_section(8, 1, 6, detail::acb_section(4, 3, 1, 0.25), 4), 4};
    p.wrap = {8, 4, 8, 16, detail::acb_section(4, 6, 8, 0.1, 12)};
    p.ilext = detail::ilext_section(48, 2, 12, detail::acb_section(8, 4, 9, 0.1), 16);
    p.constants = detail::default_constants(p);
    return p;
}

inline ParamProfile builtin_demo1k() {
    ParamProfile p;
    p.name = "demo1k";
    p.n = 506;
    p.m = 16;
    p.code = {"dual-bch", 2047, 104};
    p.inv.split = {16, 16, 16, 16, 16};
    p.inv.samp_d = {6, 5, 7, 7};
    p.inv.min_n6 = 900;
    p.inv.n0 = 16;
    p.inv.lext0_out = 4;
    p.inv.core = detail::ilext_section(32, 1, 16, detail::acb_section(16, 8, 2, 0.01), 16);
    p.inv.rows = 4;
    p.inv.lext1_out = 8;
    p.inv.lext2_out = 64;
    p.inv.acb = detail::acb_section(32, 8, 8, 0.01);
    p.adv = {32, 32, 5, 5, detail::ilext_section(32, 1, 16, detail::acb_section(16, 8, 1, 0.01), 16), 16};
    p.wrap = {32, 8, 16, 128, detail::acb_section(16, 16, 16, 0.01)};
    p.ilext = detail::ilext_section(768, 2, 128, detail::acb_section(32, 16, 9, 0.01), 128);
    p.constants = detail::default_constants(p);
    return p;
}

inline std::vector<std::string> builtin_profile_names() { return {"toy20", "small64", "demo1k"}; }

inline std::optional<ParamProfile> builtin_profile(const std::string& name) {
    if (name == "toy20") return builtin_toy20();
    if (name == "small64") return builtin_small64();
    if (name == "demo1k") return builtin_demo1k();
    return std::nullopt;
}

}  // namespace nmforge
