#include "aexns/profile.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace aexns::cli {

namespace {

enum class KeyType { Double, Int, Bool };

struct KeySpec {
    KeyType type;
    const char* def;  // canonical default
};

// The documented schema. Every key may also appear prefixed with an
// experiment name (e.g. "stepping_nop.arrival.std_dev") to override it for
// that experiment only.
const std::map<std::string, KeySpec>& schema() {
    static const std::map<std::string, KeySpec> s = {
        {"sim.restore_cost", {KeyType::Double, "150"}},
        {"sim.pte_check_cost", {KeyType::Double, "250"}},
        {"sim.warmup_iterations", {KeyType::Int, "12"}},
        {"sim.warmup_cost_cache_on", {KeyType::Double, "10"}},
        {"sim.warmup_cost_cache_off", {KeyType::Double, "120"}},
        {"sim.nop_slide_length", {KeyType::Int, "20"}},
        {"sim.nop_cost", {KeyType::Double, "1.0"}},
        {"sim.nop_probability", {KeyType::Double, "0.5"}},
        {"sim.slowdown", {KeyType::Double, "15"}},
        {"sim.cache_disabled", {KeyType::Bool, "true"}},
        {"arrival.mean_offset", {KeyType::Double, "40"}},
        {"arrival.std_dev", {KeyType::Double, "250"}},
        {"pss.tail_mass", {KeyType::Double, "0.12"}},
        {"pss.samples_per_guess", {KeyType::Int, "40"}},
        {"pss.max_interrupts_per_trace", {KeyType::Int, "10000"}},
        {"pss.adapt_window", {KeyType::Int, "200"}},
        {"pss.adapt_sigma", {KeyType::Double, "3.0"}},
        {"pss.fixed_delivery_offset", {KeyType::Double, "-1"}},  // <0: disabled
        {"lbms.epsilon", {KeyType::Double, "0.001"}},
        {"lbms.detection_threshold", {KeyType::Int, "1"}},
        {"fingerprint.window_cycles", {KeyType::Double, "2100"}},
        {"fingerprint.noise_std", {KeyType::Double, "3.0"}},
        {"fingerprint.idle_baseline", {KeyType::Double, "12"}},
        {"fingerprint.post_aex", {KeyType::Double, "5"}},
        {"fingerprint.restore_amp", {KeyType::Double, "30"}},
        {"fingerprint.pte_amp", {KeyType::Double, "48"}},
        {"fingerprint.warmup_lo", {KeyType::Double, "20"}},
        {"fingerprint.warmup_hi", {KeyType::Double, "58"}},
        {"fingerprint.slide_amp", {KeyType::Double, "38"}},
        {"fingerprint.earp_amp", {KeyType::Double, "40"}},
        {"fingerprint.earp_nonmem_factor", {KeyType::Double, "0.45"}},
        {"fingerprint.earp_bins_mem", {KeyType::Int, "2"}},
        {"fingerprint.earp_bins_nonmem", {KeyType::Int, "1"}},
        {"forest.trees", {KeyType::Int, "100"}},
        {"forest.max_depth", {KeyType::Int, "12"}},
        {"forest.min_leaf", {KeyType::Int, "1"}},
        {"forest.feature_subsample", {KeyType::Int, "0"}},
        {"classifier.oracle", {KeyType::Bool, "false"}},
        {"classifier.train_per_class", {KeyType::Int, "4099"}},
    };
    return s;
}

const char* kPaperLike = R"(# paper-like: the shipped calibration profile.
# Shared geometry: memory-heavy (addl) victims under a 15x cache-off slowdown,
# IPI jitter of a couple hundred cycles, right tail placed at 12%.
sim.slowdown = 15
arrival.std_dev = 250
arrival.mean_offset = 40
pss.tail_mass = 0.12

# Per-experiment calibration overrides (each experiment is calibrated against
# its own victim, as on hardware).
stepping_nop.arrival.std_dev = 8
stepping_nop.sim.nop_cost = 0.2
stepping_nop.classifier.train_per_class = 1500
pss_bench.arrival.std_dev = 14
pss_bench.pss.tail_mass = 0.30
pss_bench.sim.nop_cost = 0.2
pss_bench.classifier.train_per_class = 1500
lbms_bench.arrival.std_dev = 414
ecdsa_trunc.arrival.std_dev = 100
lzb.arrival.std_dev = 100
)";

const char* kNoiseless = R"(# noiseless: oracle classifier, zero jitter, delivery pinned mid-window of
# the second post-mitigation instruction (exactly one retired per fire).
arrival.std_dev = 0
fingerprint.noise_std = 0
classifier.oracle = true
pss.fixed_delivery_offset = 112.5
)";

const char* kFast = R"(# fast: smoke-test profile, smaller classifier corpus and forest.
sim.slowdown = 15
arrival.std_dev = 250
forest.trees = 30
forest.max_depth = 10
classifier.train_per_class = 600
stepping_nop.arrival.std_dev = 8
stepping_nop.sim.nop_cost = 0.2
stepping_nop.classifier.train_per_class = 400
pss_bench.arrival.std_dev = 14
pss_bench.pss.tail_mass = 0.30
pss_bench.sim.nop_cost = 0.2
pss_bench.classifier.train_per_class = 400
lbms_bench.arrival.std_dev = 414
ecdsa_trunc.arrival.std_dev = 100
lzb.arrival.std_dev = 100
)";

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("profile key '" + key + "': bad number '" + v + "'");
    }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long long d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("profile key '" + key + "': bad integer '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("profile key '" + key + "': bad bool '" + v + "'");
}

// Splits "<experiment>.<base_key>" if the prefix names an experiment.
std::pair<std::string, std::string> split_experiment(const std::string& key) {
    auto dot = key.find('.');
    if (dot != std::string::npos) {
        std::string head = key.substr(0, dot);
        for (const auto& e : experiment_names()) {
            if (head == e) return {head, key.substr(dot + 1)};
        }
    }
    return {"", key};
}

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {
        "calibrate",  "classify_eval", "stepping_addl", "stepping_nop", "pss_bench",
        "lbms_bench", "memcmp",        "ecdsa_trunc",   "lzb",          "expected_reductions",
    };
    return names;
}

const std::vector<std::string>& Profile::preset_names() {
    static const std::vector<std::string> names = {"paper-like", "noiseless", "fast"};
    return names;
}

std::string Profile::preset_text(const std::string& name) {
    if (name == "paper-like") return kPaperLike;
    if (name == "noiseless") return kNoiseless;
    if (name == "fast") return kFast;
    throw ConfigError("unknown preset '" + name + "'");
}

Profile Profile::load(const std::string& name_or_path) {
    for (const auto& p : preset_names()) {
        if (p == name_or_path) return from_text(preset_text(p), p);
    }
    std::ifstream in(name_or_path);
    if (!in) {
        throw ConfigError("profile '" + name_or_path + "': not a preset name and not a readable file");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str(), name_or_path);
}

Profile Profile::from_text(const std::string& text, const std::string& name) {
    Profile p;
    p.name_ = name;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("profile " + name + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("profile " + name + ":" + std::to_string(lineno) + ": empty key or value");
        }
        if (p.values_.count(key)) {
            throw ConfigError("profile " + name + ": duplicate key '" + key + "'");
        }
        p.values_[key] = value;
    }
    p.validate_keys();
    p.hash_ = fnv1a64(p.canonical_text());
    return p;
}

void Profile::validate_keys() const {
    for (const auto& [key, value] : values_) {
        auto [exp, base] = split_experiment(key);
        auto it = schema().find(base);
        if (it == schema().end()) {
            throw ConfigError("profile " + name_ + ": unknown key '" + key + "'");
        }
        // Type-check now so later getters cannot fail.
        switch (it->second.type) {
            case KeyType::Double: parse_double(key, value); break;
            case KeyType::Int: parse_int(key, value); break;
            case KeyType::Bool: parse_bool(key, value); break;
        }
    }
}

std::optional<std::string> Profile::lookup(const std::string& experiment,
                                           const std::string& key) const {
    if (!experiment.empty()) {
        auto it = values_.find(experiment + "." + key);
        if (it != values_.end()) return it->second;
    }
    auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    return std::nullopt;
}

std::string Profile::canonical_text() const {
    // Fully resolved: every schema key at base level plus explicit overrides,
    // sorted. A profile's hash is stable under comments and ordering.
    std::map<std::string, std::string> resolved;
    for (const auto& [key, spec] : schema()) resolved[key] = spec.def;
    for (const auto& [key, value] : values_) resolved[key] = value;
    std::string out;
    for (const auto& [key, value] : resolved) {
        out += key;
        out += " = ";
        out += value;
        out += "\n";
    }
    return out;
}

double Profile::View::get_double(const std::string& key) const {
    auto it = schema().find(key);
    if (it == schema().end() || it->second.type != KeyType::Double) {
        throw ConfigError("unknown double key '" + key + "'");
    }
    auto v = profile_.lookup(experiment_, key);
    return parse_double(key, v.value_or(it->second.def));
}

std::int64_t Profile::View::get_int(const std::string& key) const {
    auto it = schema().find(key);
    if (it == schema().end() || it->second.type != KeyType::Int) {
        throw ConfigError("unknown int key '" + key + "'");
    }
    auto v = profile_.lookup(experiment_, key);
    return parse_int(key, v.value_or(it->second.def));
}

bool Profile::View::get_bool(const std::string& key) const {
    auto it = schema().find(key);
    if (it == schema().end() || it->second.type != KeyType::Bool) {
        throw ConfigError("unknown bool key '" + key + "'");
    }
    auto v = profile_.lookup(experiment_, key);
    return parse_bool(key, v.value_or(it->second.def));
}

bool Profile::View::has_override(const std::string& key) const {
    return profile_.lookup(experiment_, key).has_value();
}

sim::MitigationModel Profile::View::mitigation() const {
    sim::MitigationModel m;
    m.restore_cost = get_double("sim.restore_cost");
    m.pte_check_cost = get_double("sim.pte_check_cost");
    m.warmup_iterations = static_cast<int>(get_int("sim.warmup_iterations"));
    m.warmup_cost_cache_on = get_double("sim.warmup_cost_cache_on");
    m.warmup_cost_cache_off = get_double("sim.warmup_cost_cache_off");
    m.nop_slide_length = static_cast<int>(get_int("sim.nop_slide_length"));
    m.nop_cost = get_double("sim.nop_cost");
    m.nop_probability = get_double("sim.nop_probability");
    m.validate();
    return m;
}

arrival::ArrivalDistribution Profile::View::arrival_dist() const {
    arrival::ArrivalDistribution d;
    d.mean_offset = get_double("arrival.mean_offset");
    d.std_dev = get_double("arrival.std_dev");
    d.validate();
    return d;
}

fp::TraceShape Profile::View::trace_shape() const {
    fp::TraceShape s;
    s.window_cycles = get_double("fingerprint.window_cycles");
    s.noise_std = get_double("fingerprint.noise_std");
    s.idle_baseline = get_double("fingerprint.idle_baseline");
    s.post_aex = get_double("fingerprint.post_aex");
    s.restore_amp = get_double("fingerprint.restore_amp");
    s.pte_amp = get_double("fingerprint.pte_amp");
    s.warmup_lo = get_double("fingerprint.warmup_lo");
    s.warmup_hi = get_double("fingerprint.warmup_hi");
    s.slide_amp = get_double("fingerprint.slide_amp");
    s.earp_amp = get_double("fingerprint.earp_amp");
    s.earp_nonmem_factor = get_double("fingerprint.earp_nonmem_factor");
    s.earp_bins_mem = static_cast<int>(get_int("fingerprint.earp_bins_mem"));
    s.earp_bins_nonmem = static_cast<int>(get_int("fingerprint.earp_bins_nonmem"));
    return s;
}

fp::ForestHyper Profile::View::forest_hyper() const {
    fp::ForestHyper h;
    h.num_trees = static_cast<int>(get_int("forest.trees"));
    h.max_depth = static_cast<int>(get_int("forest.max_depth"));
    h.min_leaf = static_cast<int>(get_int("forest.min_leaf"));
    h.feature_subsample = static_cast<int>(get_int("forest.feature_subsample"));
    return h;
}

}  // namespace aexns::cli
