#pragma once
// PSS and LBMS attacker strategies: per-trace interrupt loops, classifier
// filtering, count averaging and guess discrimination. Attacker decisions
// consume only classifier labels; ground-truth landings stay on the
// evaluation side.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "aexns/arrival.hpp"
#include "aexns/fingerprint.hpp"
#include "aexns/sim.hpp"

namespace aexns::attack {

// IPIs are recognized on the cycle clock: a sampled arrival lands at the
// midpoint of the cycle it falls in.
inline double delivery_time(double arrival) {
    return std::floor(arrival) + 0.5;
}

// Interrupt classification: a trained model over synthesized traces, or the
// ground-truth oracle (debug / noiseless profiles).
struct Classifier {
    bool oracle = false;
    fp::ClassifierModel model;
    fp::TraceShape shape;

    fp::InterruptClass classify(const sim::AexEvent& ev, const sim::MitigationModel& m,
                                double fire_delay, Rng& noise_rng) const {
        if (oracle) return fp::class_of_landing(ev.landing);
        fp::CounterTrace t = fp::synthesize_trace(ev, m, shape, fire_delay, noise_rng);
        return fp::predict(model, t);
    }
};

// Everything a strategy needs to run traces against a victim.
struct AttackEnv {
    sim::MitigationModel mitigation;
    double slowdown = 15.0;
    bool cache_enabled = false;  // attacker disables caching during traces
    arrival::ArrivalDistribution dist;
    arrival::IpiPlan plan;
    Classifier classifier;
    int max_interrupts_per_trace = 10000;
    // NOP-slide adaptation: when the mitigation-landing fraction over the last
    // `adapt_window` classified interrupts exceeds the calibrated expectation
    // by `adapt_sigma` binomial standard deviations, delay the IPI by one
    // slide length; cleared again once progress is observed.
    int adapt_window = 200;
    double adapt_sigma = 3.0;
    double expected_mit_fraction = 0.88;
    std::optional<double> fixed_delivery_offset;  // noiseless profile: exact delivery
};

struct PssConfig {
    int samples_per_guess = 40;       // k
    double tail_mass = 0.12;
    int max_interrupts_per_trace = 10000;
};

struct PssTraceResult {
    int step_count = 0;
    int fired = 0;
    int classified_mit = 0;
    int classified_zero = 0;
    bool aborted = false;  // interrupt cap exceeded
};

struct PssResult {
    std::map<std::int64_t, double> per_guess_mean_counts;
    std::int64_t predicted_secret = 0;
    std::map<std::int64_t, std::vector<int>> raw_counts;
    std::int64_t interrupts_total = 0;
};

using TraceFactory = std::function<sim::TraceContext(std::uint64_t trace_id, Rng rng)>;

// [OP] pss_trace: fire calibrated IPIs across one boundary-to-boundary region
// and count Step-classified interrupts.
PssTraceResult pss_trace(sim::TraceContext& ctx, const AttackEnv& env, Rng& rng);

// [OP] pss_attack: k traces per guess, argmin of mean Step counts, ties to
// the smaller guess value.
PssResult pss_attack(const std::function<TraceFactory(std::int64_t guess)>& victim_for_guess,
                     const std::vector<std::int64_t>& guesses, const AttackEnv& env,
                     const PssConfig& cfg, Rng rng);

struct SteppingRateResult {
    std::map<int, std::int64_t> step_histogram;  // ground-truth n of Step-classified
    std::int64_t false_positives = 0;            // Step-classified with true n <= 0
    std::int64_t fired = 0;
    std::int64_t landed_in_mitigation = 0;       // ground truth
    std::int64_t classified_steps = 0;
    std::int64_t true_steps = 0;                 // ground-truth n >= 1 events
};

// [OP] stepping_rate_experiment over a uniform filler region (debug mode:
// ground-truth landings drive the histogram).
SteppingRateResult stepping_rate_experiment(const TraceFactory& factory, const AttackEnv& env,
                                            std::int64_t interrupts, Rng rng);

struct LbmsConfig {
    double lower_bound_cycles = 0.0;
    int detection_threshold = 1;
    arrival::IpiPlan ipi_plan;
};

struct Observation {
    int interrupts_before_boundary = 0;
    bool boundary_reached = false;
    std::uint64_t trace_id = 0;
};

// [OP] lbms_trace: fire per-resume IPIs under the lower-bounded plan and count
// interrupts observed before the closing boundary fault.
Observation lbms_trace(sim::TraceContext& ctx, const AttackEnv& env, const LbmsConfig& cfg,
                       Rng& rng);

// [OP] lbms_detect: longer branch taken?
inline bool lbms_detect(const Observation& obs, const LbmsConfig& cfg) {
    return obs.interrupts_before_boundary >= cfg.detection_threshold;
}

// [OP] call_landing_filter: drop observations whose stage-II-start to
// page-fault TSC delta is at least 5.7%/2 below baseline (eRIP on the call).
inline bool call_landing_filter_keep(double delta_cycles, double baseline_cycles) {
    return delta_cycles > (1.0 - 0.057 / 2.0) * baseline_cycles;
}

}  // namespace aexns::attack
