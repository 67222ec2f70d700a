#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "acb.hpp"
#include "extlib.hpp"
#include "lincode.hpp"
#include "nmcode.hpp"
#include "tamperlab.hpp"

namespace nmforge {

struct CriterionOutcome {
    bool ok = false;
    std::string detail;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    double budget_s = 0;
    double seconds = 0;
    CriterionOutcome outcome;
    bool pass() const { return outcome.ok && seconds <= budget_s; }
    std::string line() const {
        std::ostringstream os;
        os.setf(std::ios::fixed);
        os.precision(1);
        os << "AC" << id << " " << (pass() ? "PASS" : "FAIL") << " " << name << ": " << outcome.detail << " (" << seconds << " s of "
           << budget_s << " s)";
        return os.str();
    }
};

struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<CriterionOutcome()> run;
};

namespace verify {

inline std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os.precision(digits);
    os << v;
    return os.str();
}

inline double tv_from_uniform(const std::vector<double>& counts) {
    double total = std::accumulate(counts.begin(), counts.end(), 0.0), tv = 0;
    for (auto c : counts) tv += std::abs(c / total - 1.0 / double(counts.size()));
    return tv / 2;
}

template <class R>
std::vector<std::uint64_t> random_flat(std::size_t n, std::size_t k, R& rng) {
    std::vector<std::uint64_t> all(std::size_t{1} << n);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(std::size_t{1} << k);
    std::sort(all.begin(), all.end());
    return all;
}

inline const NmCode& toy_code() {
    static const NmCode code(builtin_toy20());
    return code;
}

inline CriterionOutcome perfect_correctness() {
    const auto& code = toy_code();
    Rng rng = substream(1, "encode");
    const int per_message = 2500;
    std::size_t failures = 0, messages = std::size_t{1} << code.k();
    for (std::uint64_t s = 0; s < messages; ++s) {
        auto msg = BitVector::from_uint(s, code.k());
        for (int t = 0; t < per_message; ++t) {
            auto e = code.encode(msg, rng);
            failures += !e.ok() || code.decode(*e.codeword) != msg;
        }
    }
    return {failures == 0, std::to_string(messages) + " messages x " + std::to_string(per_message) + " encodes, " + std::to_string(failures) +
                               " failures"};
}

// Cells fix everything the extractor reads except z7 and the free bits; each
// must be an affine space, all of one dimension.
inline CriterionOutcome fiber_structure() {
    const auto& inv = toy_code().suite().inv();
    const auto& p = toy_code().profile();
    const std::size_t n2 = 2 * p.n;
    std::size_t o6 = 0;
    for (auto v : p.inv.split) o6 += v;
    std::unordered_map<BitVector, std::vector<std::uint32_t>> cells;
    std::size_t fallback = 0;
    for (std::uint64_t z = 0; z < (std::uint64_t{1} << n2); ++z) {
        auto v = BitVector::from_uint(z, n2);
        auto t = inv.trace(v);
        if (t.fallback) {
            ++fallback;
            continue;
        }
        auto key = v.slice(0, o6).concat(t.w).concat(project(v, t.layout.pos3)).concat(t.g);
        cells[key].push_back(static_cast<std::uint32_t>(z));
    }
    std::set<std::size_t> dims;
    std::size_t not_affine = 0;
    for (const auto& [key, members] : cells) {
        EchelonBasis eb(n2);
        auto base = BitVector::from_uint(members.front(), n2);
        for (auto m : members) eb.insert(BitVector::from_uint(m, n2) ^ base);
        dims.insert(eb.dim());
        not_affine += members.size() != (std::size_t{1} << eb.dim());
    }
    bool ok = not_affine == 0 && dims.size() == 1 && *dims.begin() == inv.cell_dim();
    std::string dl;
    for (auto d : dims) dl += (dl.empty() ? "" : ",") + std::to_string(d);
    return {ok, std::to_string(cells.size()) + " cells over " + std::to_string((std::size_t{1} << n2) - fallback) +
                    " non-fallback inputs, dimensions {" + dl + "}, expected " + std::to_string(inv.cell_dim()) + ", " +
                    std::to_string(not_affine) + " not affine"};
}

inline CriterionOutcome sampler_uniformity() {
    const auto& code = toy_code();
    auto cb = build_codebook(code);
    const std::size_t messages = std::size_t{1} << code.k();
    const int samples = 1000000;
    double worst_p = 1;
    std::size_t strays = 0;
    for (std::uint64_t s = 0; s < messages; ++s) {
        std::unordered_map<std::uint32_t, std::size_t> slot;
        for (std::uint32_t c = 0; c < cb.message.size(); ++c)
            if (cb.encodable[c] && cb.message[c] == s) slot.emplace(c, slot.size());
        std::vector<double> seen(slot.size(), 0);
        Rng rng = substream(s, "sampler");
        auto msg = BitVector::from_uint(s, code.k());
        for (int t = 0; t < samples; ++t) {
            auto e = code.encode(msg, rng);
            auto it = e.ok() ? slot.find(static_cast<std::uint32_t>(e.codeword->to_uint())) : slot.end();
            if (it == slot.end()) {
                ++strays;
                continue;
            }
            seen[it->second] += 1;
        }
        double expect = double(samples) / double(slot.size()), stat = 0;
        for (auto o : seen) stat += (o - expect) * (o - expect) / expect;
        double pv = boost::math::cdf(boost::math::complement(boost::math::chi_squared(double(slot.size() - 1)), stat));
        worst_p = std::min(worst_p, pv);
    }
    return {strays == 0 && worst_p >= 0.001, std::to_string(messages) + " messages x 10^6 samples, min chi-square p = " + fmt(worst_p) + ", " +
                                                 std::to_string(strays) + " samples outside the fiber"};
}

// Strong in either source: TV of (IP, X) from (U, X) and of (IP, Y) from (U, Y).
inline CriterionOutcome inner_product_exactness() {
    auto f2 = standard_field(2);
    Rng rng(4);
    const double bound = std::pow(2.0, -(7.0 + 7.0 - 8.0 - 2.0) / 2);
    double worst = 0;
    const int pairs = 20;
    for (int t = 0; t < pairs; ++t) {
        auto xs = random_flat(8, 7, rng), ys = random_flat(8, 7, rng);
        std::vector<std::vector<double>> by_x(xs.size(), std::vector<double>(4, 0)), by_y(ys.size(), std::vector<double>(4, 0));
        for (std::size_t i = 0; i < xs.size(); ++i)
            for (std::size_t j = 0; j < ys.size(); ++j) {
                auto v = ip_extract(BitVector::from_uint(xs[i], 8), BitVector::from_uint(ys[j], 8), *f2, 4).to_uint();
                by_x[i][v] += 1;
                by_y[j][v] += 1;
            }
        double tx = 0, ty = 0;
        for (const auto& c : by_x) tx += tv_from_uniform(c);
        for (const auto& c : by_y) ty += tv_from_uniform(c);
        worst = std::max({worst, tx / double(xs.size()), ty / double(ys.size())});
    }
    return {worst <= bound, std::to_string(pairs) + " flat source pairs, max joint TV " + fmt(worst) + " vs bound " + fmt(bound)};
}

inline CriterionOutcome fixed_rank_extractor() {
    std::vector<std::array<std::size_t, 3>> shapes = {{16, 16, 5}, {16, 10, 9}, {14, 7, 14}, {12, 12, 1}, {9, 3, 4}};
    std::size_t seeds = 0, bad_rank = 0, bad_dim = 0;
    Rng rng(5);
    for (auto [n, d, m] : shapes) {
        SeededExtractor e({ExtractorKind::fixed_rank_invertible, n, d, m, 0, 0});
        for (std::uint64_t s = 1; s < (std::uint64_t{1} << d); ++s) {
            auto seed = BitVector::from_uint(s, d);
            ++seeds;
            bad_rank += rank(e.matrix(seed)) != m;
            bad_dim += lext_preimage(e, seed, BitVector::random(m, rng)).dim() != n - m;
        }
    }
    return {bad_rank == 0 && bad_dim == 0, std::to_string(seeds) + " nonzero seeds over " + std::to_string(shapes.size()) + " shapes, " +
                                               std::to_string(bad_rank) + " rank defects, " + std::to_string(bad_dim) + " pre-image dimension defects"};
}

inline CriterionOutcome sampler_deviation() {
    const std::size_t n = 12, k = 8, d = 12, range = 16;
    SeededExtractor e({ExtractorKind::strong_hash, n, d, ceil_log2(range), k, 0});
    const double D = double(std::size_t{1} << d), eps = e.spec().eps;
    std::vector<std::vector<std::size_t>> samples;
    for (std::uint64_t x = 0; x < (std::uint64_t{1} << n); ++x) samples.push_back(samp(e, BitVector::from_uint(x, n), range).indices);
    Rng rng(6);
    std::size_t worst = 0;
    for (int t = 0; t < 20; ++t) {
        std::vector<std::size_t> perm(range);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<char> in_r(range, 0);
        for (std::size_t i = 0; i < range / 2; ++i) in_r[perm[i]] = 1;
        std::size_t bad = 0;
        for (const auto& s : samples) {
            std::size_t hit = 0;
            for (auto i : s) hit += in_r[i];
            bad += std::abs(double(hit) - 0.5 * D) > eps * D;
        }
        worst = std::max(worst, bad);
    }
    return {worst < (std::size_t{1} << k), "20 sets of density 1/2, eps " + fmt(eps) + ", max deviating inputs " + std::to_string(worst) + " of " +
                                               std::to_string(std::size_t{1} << n) + ", limit " + std::to_string(std::size_t{1} << k)};
}

inline CriterionOutcome dual_bch_structure() {
    std::string detail;
    bool ok = true;
    for (std::size_t t : {1, 2}) {
        auto code = build_dual_bch(15, t);
        std::size_t best = code.n_out;
        for (std::uint64_t m = 1; m < (std::uint64_t{1} << code.k_in); ++m) best = std::min(best, encode(code, BitVector::from_uint(m, code.k_in)).popcount());
        std::size_t subsets = 0, deficient = 0;
        std::vector<std::size_t> idx(t);
        std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t start) {
            if (pos == t) {
                ++subsets;
                deficient += code.coordinate_rank(idx) != t;
                return;
            }
            for (std::size_t i = start; i < code.n_out; ++i) {
                idx[pos] = i;
                rec(pos + 1, i + 1);
            }
        };
        rec(0, 0);
        bool good = best >= code.rel_distance * double(code.n_out) - 1e-9 && best == min_distance_exhaustive(code) && deficient == 0;
        ok = ok && good;
        detail += (detail.empty() ? "" : "; ") + std::string("t_b=") + std::to_string(t) + ": k=" + std::to_string(code.k_in) + ", distance " +
                  std::to_string(best) + " (claimed " + fmt(code.rel_distance * double(code.n_out)) + "), " + std::to_string(deficient) + "/" +
                  std::to_string(subsets) + " deficient subsets";
    }
    return {ok, detail};
}

inline CriterionOutcome extractor_uniformity() {
    const auto& s = toy_code().suite();
    const std::size_t n = s.profile().n;
    std::vector<double> inv_u(std::size_t{1} << s.profile().m, 0), il_u(std::size_t{1} << s.profile().ilext.m, 0);
    for (std::uint64_t z = 0; z < (std::uint64_t{1} << (2 * n)); ++z) {
        auto v = BitVector::from_uint(z, 2 * n);
        inv_u[ilnm_inv(s, v).to_uint()] += 1;
        il_u[ilext(s, v).to_uint()] += 1;
    }
    double tv_inv = tv_from_uniform(inv_u), tv_il = tv_from_uniform(il_u), flat_inv = 0, flat_il = 0;
    // Interleaved flat sources of rate (n-1)/n under random permutations.
    Rng rng(8);
    for (int t = 0; t < 3; ++t) {
        auto X = random_flat(n, n - 1, rng), Y = random_flat(n, n - 1, rng);
        auto pi = Permutation::random(2 * n, rng);
        std::fill(inv_u.begin(), inv_u.end(), 0);
        std::fill(il_u.begin(), il_u.end(), 0);
        for (auto x : X)
            for (auto y : Y) {
                auto z = InterleavedInput::make(BitVector::from_uint(x, n), BitVector::from_uint(y, n), pi).z;
                inv_u[ilnm_inv(s, z).to_uint()] += 1;
                il_u[ilext(s, z).to_uint()] += 1;
            }
        flat_inv = std::max(flat_inv, tv_from_uniform(inv_u));
        flat_il = std::max(flat_il, tv_from_uniform(il_u));
    }
    double worst = std::max({tv_inv, tv_il, flat_inv, flat_il});
    return {worst <= 0.2, "uniform: ilext " + fmt(tv_il) + ", ilnm_inv " + fmt(tv_inv) + "; flat interleaved: ilext " +
                              fmt(flat_il) + ", ilnm_inv " + fmt(flat_inv) + "; desk budget 0.2"};
}

inline CriterionOutcome nm_battery() {
    const auto& code = toy_code();
    const std::size_t n = code.profile().n;
    NmHarness harness(code, code.profile().name);
    harness.codebook();
    const double const_limit = std::pow(2.0, -double(2 * n));
    std::vector<std::string> failed;
    double worst_other = 0;
    std::string worst_id;
    for (const auto& a : standard_battery(n, 7)) {
        ExperimentConfig cfg;
        auto r = harness.run(a, cfg);
        bool good;
        if (a.id == "identity")
            good = r.nm_error == 0;
        else if (a.id == "constant")
            good = r.nm_error <= const_limit;
        else {
            good = r.nm_error <= 0.25;
            if (r.nm_error > worst_other) {
                worst_other = r.nm_error;
                worst_id = a.id;
            }
        }
        if (!good) failed.push_back(a.id + "=" + fmt(r.nm_error, 3));
    }
    std::string detail = std::to_string(failed.size()) + " of " + std::to_string(2 * n + 5) + " adversaries over budget, max " + fmt(worst_other) +
                         " (" + worst_id + ")";
    if (!failed.empty()) {
        detail += ": ";
        for (std::size_t i = 0; i < failed.size(); ++i) detail += (i ? " " : "") + failed[i];
    }
    return {failed.empty(), detail};
}

inline CriterionOutcome decomposition_identity() {
    const std::size_t n = 6;
    Rng rng(10);
    std::size_t mismatches = 0;
    for (int t = 0; t < 50; ++t) {
        LinearComposed lc{BitMatrix::random(2 * n, 2 * n, rng),
                          Interleaved{Program::random_table(n, rng), Program::random_table(n, rng), Permutation::random(2 * n, rng)}};
        auto s = decompose_linear_composed(lc);
        for (std::uint64_t x = 0; x < (1u << n); ++x)
            for (std::uint64_t y = 0; y < (1u << n); ++y) {
                auto xv = BitVector::from_uint(x, n), yv = BitVector::from_uint(y, n);
                auto direct = lc.h * lc.inner.pi.apply(lc.inner.f(xv).concat(lc.inner.g(yv)));
                auto sum = s.pi.apply((s.f1(xv) ^ s.g1(yv)).concat(s.f2(xv) ^ s.g2(yv)));
                mismatches += direct != sum;
            }
    }
    return {mismatches == 0, "50 specs at 2n = 12, " + std::to_string(mismatches) + " mismatches"};
}

// Honest advice 01 against tampered 10 with tampered helper (and row);
// passes when the upper 3-sigma bar stays within 0.25.
inline CriterionOutcome acb_contract() {
    AcbParams p;
    p.n = 24;
    p.n1 = 16;
    p.n2 = 2;
    p.t = 2;
    p.h = 2;
    p.d = 4;
    p.eps = 0.1;
    Acb a(p);
    Rng rng(11);
    const int trials = 100000;
    auto honest = BitVector::from_bits("01"), tampered = BitVector::from_bits("10");
    struct Case {
        std::string name;
        BitVector dx, dy;
    };
    std::vector<Case> cases = {{"identity", BitVector(24), BitVector(16)},
                               {"helper shift", BitVector::random(24, rng), BitVector(16)},
                               {"helper and row shift", BitVector::random(24, rng), BitVector::random(16, rng)}};
    std::string detail;
    bool ok = true;
    for (const auto& c : cases) {
        std::vector<double> joint(16, 0), second(4, 0);
        for (int t = 0; t < trials; ++t) {
            auto y = BitVector::random(16, rng), x = BitVector::random(24, rng);
            auto h = a(y, x, honest).to_uint(), g = a(y ^ c.dy, x ^ c.dx, tampered).to_uint();
            joint[h * 4 + g] += 1;
            second[g] += 1;
        }
        double tv = 0, se = 0;
        for (std::size_t u = 0; u < 4; ++u)
            for (std::size_t v = 0; v < 4; ++v) {
                double pj = joint[u * 4 + v] / trials, q = second[v] / trials / 4;
                tv += std::abs(pj - q);
                se += std::sqrt(pj * (1 - pj) / trials + q * (1 - q) / trials);
            }
        tv /= 2;
        se /= 2;
        ok = ok && tv + 3 * se <= 0.25;
        detail += (detail.empty() ? "" : "; ") + c.name + " " + fmt(tv, 3) + " +- " + fmt(3 * se, 2);
    }
    return {ok, detail};
}

inline CriterionOutcome mc_exact_agreement() {
    const auto& code = toy_code();
    NmHarness harness(code, code.profile().name);
    harness.codebook();
    std::size_t instances = 0;
    std::vector<std::string> failing;
    int worst = 101;
    std::string worst_id;
    for (const auto& a : standard_battery(code.profile().n, 7)) {
        double exact = harness.run(a, ExperimentConfig{}).nm_error;
        int within = 0;
        for (std::uint64_t seed = 1; seed <= 100; ++seed) {
            ExperimentConfig cfg;
            cfg.mode = Mode::monte_carlo;
            cfg.trials = 2000;
            cfg.seed = seed;
            auto r = harness.run(a, cfg);
            within += std::abs(r.nm_error - exact) <= 3 * r.standard_error;
        }
        ++instances;
        if (within < 99) failing.push_back(a.id + "=" + std::to_string(within));
        if (within < worst) {
            worst = within;
            worst_id = a.id;
        }
    }
    std::string detail = std::to_string(instances) + " battery instances x 100 seeds at 2000 trials, fewest within 3 SE: " + std::to_string(worst) +
                         " (" + worst_id + ")";
    if (!failing.empty()) {
        detail += "; below 99:";
        for (const auto& f : failing) detail += " " + f;
    }
    return {failing.empty(), detail};
}

}  // namespace verify

inline std::vector<Criterion> acceptance_criteria() {
    using namespace verify;
    return {
        {1, "perfect correctness", 10, perfect_correctness},
        {2, "fiber structure", 300, fiber_structure},
        {3, "sampler uniformity", 600, sampler_uniformity},
        {4, "inner-product extractor", 60, inner_product_exactness},
        {5, "fixed-rank linear extractor", 60, fixed_rank_extractor},
        {6, "sampler deviation", 120, sampler_deviation},
        {7, "dual BCH structure", 60, dual_bch_structure},
        {8, "extractor uniformity", 1200, extractor_uniformity},
        {9, "non-malleability battery", 1800, nm_battery},
        {10, "decomposition identity", 120, decomposition_identity},
        {11, "breaker contract", 300, acb_contract},
        {12, "Monte Carlo agrees with exact", 3600, mc_exact_agreement},
    };
}

// Runs the selected criteria (all when empty), printing one line each.
inline std::vector<CriterionResult> run_acceptance(std::ostream& out, const std::set<int>& only = {}) {
    std::vector<CriterionResult> results;
    for (const auto& c : acceptance_criteria()) {
        if (!only.empty() && !only.count(c.id)) continue;
        CriterionResult r{c.id, c.name, c.budget_s, 0, {}};
        auto t0 = std::chrono::steady_clock::now();
        try {
            r.outcome = c.run();
        } catch (const std::exception& e) {
            r.outcome = {false, std::string("threw: ") + e.what()};
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out << r.line() << std::endl;
        results.push_back(r);
    }
    return results;
}

}  // namespace nmforge
