#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nmforge/verify.hpp"

using namespace nmforge;

namespace {

enum Exit { kOk = 0, kThreshold = 1, kUsage = 2 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string profile = "toy20";
    std::string mode = "ilext";
    std::string exp_mode = "exact";
    std::vector<std::string> in;
    std::uint64_t seed = 1;
    std::uint64_t trials = 10000;
    std::uint64_t cap = kDefaultCap;
    std::string out;
    std::optional<double> threshold;
    bool timing = false;
    bool battery = false;
    std::string adversary;
    std::vector<int> only;
    std::string profile_arg;
};

// File path, then $NMFORGE_PROFILE_DIR/<name>.json, then the builtins.
ParamProfile find_profile(const std::string& name) {
    namespace fs = std::filesystem;
    if (fs::is_regular_file(name)) return load_profile_file(name);
    if (const char* dir = std::getenv("NMFORGE_PROFILE_DIR")) {
        auto path = fs::path(dir) / (name + ".json");
        if (fs::is_regular_file(path)) return load_profile_file(path.string());
    }
    if (auto p = builtin_profile(name)) return *p;
    throw UsageError("profile not found: " + name);
}

BitVector parse_vector(const std::string& text, std::size_t want, const std::string& field) {
    BitVector v;
    try {
        v = BitVector::parse(text);
    } catch (const std::exception& e) {
        throw UsageError("bad field: " + field + ": " + e.what());
    }
    if (v.size() != want) throw UsageError("bad field: " + field + ": expected " + std::to_string(want) + " bits, got " + std::to_string(v.size()));
    return v;
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text << "\n";
        return;
    }
    std::ofstream f(out);
    if (!f) throw UsageError("bad field: --out: cannot write " + out);
    f << text << "\n";
}

void require_input(const Options& o) {
    if (o.in.empty()) throw UsageError("missing field: --in");
}

int cmd_extract(const Options& o) {
    require_input(o);
    NmSuite s(find_profile(o.profile));
    for (const auto& text : o.in) {
        auto z = parse_vector(text, 2 * s.profile().n, "--in");
        if (o.mode == "ilnm")
            std::cout << ilnm(s, z).to_text() << "\n";
        else if (o.mode == "ilnm_inv")
            std::cout << ilnm_inv(s, z).to_text() << "\n";
        else
            std::cout << ilext(s, z).to_text() << "\n";
    }
    return kOk;
}

int cmd_encode(const Options& o) {
    require_input(o);
    NmCode code(find_profile(o.profile));
    auto rng = substream(o.seed, "encode");
    std::cerr << "profile " << code.profile().name << " seed " << o.seed << " version " << kVersion << "\n";
    for (const auto& text : o.in) {
        auto e = code.encode(parse_vector(text, code.k(), "--in"), rng);
        if (!e.ok()) {
            std::cerr << "encode failed: pre-image sampler exhausted after " << e.attempts << " attempts\n";
            return kThreshold;
        }
        std::cout << e.codeword->to_text() << "\n";
    }
    return kOk;
}

int cmd_decode(const Options& o) {
    require_input(o);
    NmCode code(find_profile(o.profile));
    for (const auto& text : o.in) std::cout << code.decode(parse_vector(text, code.block(), "--in")).to_text() << "\n";
    return kOk;
}

Adversary load_adversary(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw UsageError("adversary file not found: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_adversary(ss.str());
}

int cmd_experiment(const Options& o) {
    if (o.battery == !o.adversary.empty()) throw UsageError("experiment needs exactly one of an adversary file or --battery");
    NmCode code(find_profile(o.profile));
    ExperimentConfig cfg;
    try {
        cfg.mode = mode_from_string(o.exp_mode);
    } catch (const std::exception& e) {
        throw UsageError(std::string("bad field: --mode: ") + e.what());
    }
    cfg.trials = o.trials;
    cfg.seed = o.seed;
    cfg.cap = o.cap;
    cfg.threshold = o.threshold;
    cfg.timing = o.timing;
    NmHarness harness(code, code.profile().name);

    if (!o.battery) {
        auto adv = load_adversary(o.adversary);
        try {
            validate(adv.spec, code.profile().n);
        } catch (const AdversaryError& e) {
            throw UsageError(e.what());
        }
        auto r = harness.run(adv, cfg);
        emit(r.to_json().dump(2), o.out);
        return r.pass() ? kOk : kThreshold;
    }
    nlohmann::ordered_json all = nlohmann::ordered_json::array();
    bool pass = true;
    for (const auto& adv : standard_battery(code.profile().n, o.seed)) {
        auto r = harness.run(adv, cfg);
        pass = pass && r.pass();
        all.push_back(r.to_json());
    }
    emit(all.dump(2), o.out);
    return pass ? kOk : kThreshold;
}

int cmd_verify(const Options& o) {
    std::set<int> only(o.only.begin(), o.only.end());
    auto results = run_acceptance(std::cout, only);
    bool pass = true;
    for (const auto& r : results) pass = pass && r.pass();
    return pass ? kOk : kThreshold;
}

int cmd_profile(const Options& o, const std::string& action) {
    auto p = find_profile(o.profile_arg.empty() ? o.profile : o.profile_arg);
    if (action == "show") {
        emit(profile_to_json(p).dump(2), o.out);
        return kOk;
    }
    NmSuite s(p);
    emit(s.report().dump(2), o.out);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nmforge: non-malleable extractors and codes at desk scale"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--profile", o.profile, "Profile file, name under $NMFORGE_PROFILE_DIR, or builtin name")->capture_default_str();
    app.add_option("--seed", o.seed, "Root seed for every random stream")->capture_default_str();
    app.add_option("--out", o.out, "Write structured output here instead of stdout");

    auto* extract = app.add_subcommand("extract", "Evaluate an extractor on one or more 2n-bit inputs");
    extract->add_option("--mode", o.mode, "ilnm, ilnm_inv or ilext")->check(CLI::IsMember({"ilnm", "ilnm_inv", "ilext"}))->capture_default_str();
    extract->add_option("--in", o.in, "Input vector(s), len:hex")->required();

    auto* encode = app.add_subcommand("encode", "Encode message(s) with seeded randomness");
    encode->add_option("--in", o.in, "Message(s), len:hex")->required();

    auto* decode = app.add_subcommand("decode", "Decode codeword(s)");
    decode->add_option("--in", o.in, "Codeword(s), len:hex")->required();

    auto* experiment = app.add_subcommand("experiment", "Measure non-malleability against an adversary");
    experiment->add_option("adversary", o.adversary, "Adversary JSON file");
    experiment->add_flag("--battery", o.battery, "Run the standard battery instead, one report per adversary");
    experiment->add_option("--mode", o.exp_mode, "exact or monte-carlo")->capture_default_str();
    experiment->add_option("--trials", o.trials, "Monte Carlo trials per message and for the simulator")->capture_default_str();
    experiment->add_option("--cap", o.cap, "Largest domain exact mode may enumerate")->capture_default_str();
    experiment->add_option("--threshold", o.threshold, "Exit 1 when the measured error exceeds this");
    experiment->add_flag("--timing", o.timing, "Record wall time in the report");

    auto* verify = app.add_subcommand("verify", "Run the acceptance criteria");
    verify->add_option("criteria", o.only, "Criterion numbers to run (default all)");

    auto* profile = app.add_subcommand("profile", "Inspect profiles");
    profile->require_subcommand(1);
    auto* validate_cmd = profile->add_subcommand("validate", "Validate and print derived lengths and error budget");
    validate_cmd->add_option("profile", o.profile_arg, "Profile to validate (default --profile)");
    auto* show = profile->add_subcommand("show", "Print the profile as JSON");
    show->add_option("profile", o.profile_arg, "Profile to print (default --profile)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*extract) return cmd_extract(o);
        if (*encode) return cmd_encode(o);
        if (*decode) return cmd_decode(o);
        if (*experiment) return cmd_experiment(o);
        if (*verify) return cmd_verify(o);
        if (*validate_cmd) return cmd_profile(o, "validate");
        if (*show) return cmd_profile(o, "show");
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ProfileError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const AdversaryError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const CapExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
