#include "aexns/attack.hpp"

#include <cmath>

namespace aexns::attack {

namespace {

// Tracks the recent classification window for the NOP-slide countermeasure.
class SlideAdaptation {
  public:
    SlideAdaptation(const AttackEnv& env)
        : window_(env.adapt_window),
          threshold_(env.expected_mit_fraction * env.adapt_window +
                     env.adapt_sigma * std::sqrt(env.adapt_window * env.expected_mit_fraction *
                                                 (1.0 - env.expected_mit_fraction))),
          slide_cycles_(env.mitigation.nop_slide_length * env.mitigation.nop_cost) {}

    // Returns the extra fire delay to apply on the next fire.
    double extra() const { return extra_; }

    void record(fp::InterruptClass label) {
        recent_.push_back(label == fp::InterruptClass::MitigationLanding);
        mit_in_window_ += recent_.back();
        if (static_cast<int>(recent_.size()) > window_) {
            mit_in_window_ -= recent_.front();
            recent_.pop_front();
        }
        if (label != fp::InterruptClass::MitigationLanding) {
            // Progress observed: the next mitigation draws a fresh r, so fall
            // back to the conservative (no-slide) delay.
            extra_ = 0.0;
            return;
        }
        if (static_cast<int>(recent_.size()) == window_ && mit_in_window_ > threshold_) {
            extra_ += slide_cycles_;
            recent_.clear();
            mit_in_window_ = 0;
        }
    }

  private:
    int window_;
    double threshold_;
    double slide_cycles_;
    std::deque<bool> recent_;
    int mit_in_window_ = 0;
    double extra_ = 0.0;
};

double fire_arrival(const AttackEnv& env, double extra_delay, Rng& rng) {
    if (env.fixed_delivery_offset) {
        // Noiseless deterministic schedule: delivery at an exact offset past
        // the (r = 0) mitigation end.
        double d0 = sim::mitigation_duration(env.mitigation, 0, env.cache_enabled);
        return d0 + *env.fixed_delivery_offset + extra_delay;
    }
    arrival::IpiPlan plan = env.plan;
    plan.fire_delay += extra_delay;
    return delivery_time(arrival::sample_arrival(env.dist, plan, rng));
}

}  // namespace

PssTraceResult pss_trace(sim::TraceContext& ctx, const AttackEnv& env, Rng& rng) {
    PssTraceResult res;
    Rng noise_rng = rng.substream("noise");
    Rng arrival_rng = rng.substream("arrival");
    SlideAdaptation adapt(env);

    // Advance to the region: the first resume faults on the start marker.
    sim::AexEvent ev = ctx.resume_and_run(std::nullopt);
    if (ev.cause != sim::AexCause::PageFault) {
        throw UsageError("pss_trace: victim did not open with a boundary fault");
    }

    while (true) {
        if (res.fired >= env.max_interrupts_per_trace) {
            res.aborted = true;
            return res;
        }
        double t = fire_arrival(env, adapt.extra(), arrival_rng);
        ev = ctx.resume_and_run(t);
        if (ev.cause == sim::AexCause::PageFault) {
            return res;  // stop marker: region complete, the IPI was absorbed
        }
        ++res.fired;
        fp::InterruptClass label =
            env.classifier.classify(ev, env.mitigation, env.plan.fire_delay, noise_rng);
        adapt.record(label);
        switch (label) {
            case fp::InterruptClass::Step: ++res.step_count; break;
            case fp::InterruptClass::ZeroStep: ++res.classified_zero; break;
            case fp::InterruptClass::MitigationLanding: ++res.classified_mit; break;
        }
    }
}

PssResult pss_attack(const std::function<TraceFactory(std::int64_t guess)>& victim_for_guess,
                     const std::vector<std::int64_t>& guesses, const AttackEnv& env,
                     const PssConfig& cfg, Rng rng) {
    if (guesses.size() < 2) throw UsageError("pss_attack: need at least 2 guesses");
    PssResult out;
    for (std::int64_t g : guesses) {
        TraceFactory factory = victim_for_guess(g);
        Rng guess_rng = rng.substream(static_cast<std::uint64_t>(g) + 0x517cc1b727220a95ULL);
        std::vector<int> counts;
        int aborted = 0;
        for (int i = 0; i < cfg.samples_per_guess; ++i) {
            Rng trace_rng = guess_rng.substream(static_cast<std::uint64_t>(i));
            sim::TraceContext ctx = factory(static_cast<std::uint64_t>(i), trace_rng.substream("sim"));
            Rng loop_rng = trace_rng.substream("loop");
            PssTraceResult r = pss_trace(ctx, env, loop_rng);
            out.interrupts_total += r.fired;
            if (r.aborted) {
                ++aborted;
                continue;
            }
            counts.push_back(r.step_count);
        }
        if (counts.empty()) {
            throw BudgetError("pss_attack: all traces aborted for guess " + std::to_string(g));
        }
        double mean = 0.0;
        for (int c : counts) mean += c;
        mean /= static_cast<double>(counts.size());
        out.per_guess_mean_counts[g] = mean;
        out.raw_counts[g] = std::move(counts);
        (void)aborted;
    }
    // argmin of the mean counts; ties resolve to the smaller guess value
    // (map iteration is ordered, strict < keeps the first).
    auto best = out.per_guess_mean_counts.begin();
    for (auto it = out.per_guess_mean_counts.begin(); it != out.per_guess_mean_counts.end(); ++it) {
        if (it->second < best->second) best = it;
    }
    out.predicted_secret = best->first;
    return out;
}

SteppingRateResult stepping_rate_experiment(const TraceFactory& factory, const AttackEnv& env,
                                            std::int64_t interrupts, Rng rng) {
    SteppingRateResult res;
    std::uint64_t trace_id = 0;
    while (res.fired < interrupts) {
        Rng trace_rng = rng.substream(trace_id);
        sim::TraceContext ctx = factory(trace_id, trace_rng.substream("sim"));
        ++trace_id;
        Rng noise_rng = trace_rng.substream("noise");
        Rng arrival_rng = trace_rng.substream("arrival");

        sim::AexEvent ev = ctx.resume_and_run(std::nullopt);
        if (ev.cause != sim::AexCause::PageFault) {
            throw UsageError("stepping_rate_experiment: victim did not open with a boundary fault");
        }
        int fired_this_trace = 0;
        while (res.fired < interrupts) {
            if (fired_this_trace >= env.max_interrupts_per_trace) break;
            double t = fire_arrival(env, 0.0, arrival_rng);
            ev = ctx.resume_and_run(t);
            if (ev.cause == sim::AexCause::PageFault) break;
            ++res.fired;
            ++fired_this_trace;
            if (ev.landing < 0) ++res.landed_in_mitigation;
            if (ev.landing >= 1) ++res.true_steps;
            fp::InterruptClass label =
                env.classifier.classify(ev, env.mitigation, env.plan.fire_delay, noise_rng);
            if (label == fp::InterruptClass::Step) {
                ++res.classified_steps;
                if (ev.landing >= 1) {
                    res.step_histogram[ev.landing]++;
                } else {
                    ++res.false_positives;
                }
            }
        }
    }
    return res;
}

Observation lbms_trace(sim::TraceContext& ctx, const AttackEnv& env, const LbmsConfig& cfg,
                       Rng& rng) {
    Observation obs;
    obs.trace_id = ctx.trace_id();
    Rng arrival_rng = rng.substream("arrival");

    sim::AexEvent ev = ctx.resume_and_run(std::nullopt);
    if (ev.cause != sim::AexCause::PageFault) {
        throw UsageError("lbms_trace: victim did not open with a boundary fault");
    }
    int fired = 0;
    while (true) {
        if (fired >= env.max_interrupts_per_trace) {
            obs.boundary_reached = false;  // cap exceeded: flagged
            return obs;
        }
        arrival::IpiPlan plan = cfg.ipi_plan;
        double t = delivery_time(arrival::sample_arrival(env.dist, plan, arrival_rng));
        ev = ctx.resume_and_run(t);
        ++fired;
        if (ev.cause == sim::AexCause::PageFault) {
            obs.boundary_reached = true;
            return obs;
        }
        // Any IPI-caused AEX is an observed interrupt; LBMS does not need to
        // break obfuscated forward progress.
        ++obs.interrupts_before_boundary;
    }
}

}  // namespace aexns::attack
