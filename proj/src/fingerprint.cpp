#include "aexns/fingerprint.hpp"

#include <algorithm>
#include <cmath>

namespace aexns::fp {

const char* class_name(InterruptClass c) {
    switch (c) {
        case InterruptClass::MitigationLanding: return "mitigation";
        case InterruptClass::ZeroStep: return "zero_step";
        case InterruptClass::Step: return "step";
    }
    return "?";
}

namespace {

// Piecewise-constant phase curve in wall cycles from resume. Segments:
// restore plateau, PTE-check bump, warmup ramp with per-iteration teeth,
// optional NOP-slide plateau, then one contention burst per retired victim
// instruction. Activity ends at the AEX; afterwards the attacker samples an
// unloaded core.
struct Segment {
    double start, end, lo, hi;  // linear ramp lo->hi across the segment
    int teeth = 0;              // sawtooth count (warmup iterations)
};

struct Curve {
    std::vector<Segment> segs;
    double aex_at;        // enclave activity stops here
    double baseline, post_aex;

    double value(double t) const {
        if (t >= aex_at) return post_aex;
        for (const auto& s : segs) {
            if (t >= s.start && t < s.end) {
                double u = (t - s.start) / (s.end - s.start);
                if (s.teeth > 0) {
                    double phase = u * s.teeth;
                    u = phase - std::floor(phase);
                }
                return s.lo + (s.hi - s.lo) * u;
            }
        }
        return baseline;
    }

    // Average over [a, b) by exact integration of the piecewise pieces.
    double average(double a, double b) const {
        // Integrate piecewise; segment boundaries and aex_at split the bin.
        std::vector<double> cuts{a, b};
        for (const auto& s : segs) {
            if (s.start > a && s.start < b) cuts.push_back(s.start);
            if (s.end > a && s.end < b) cuts.push_back(s.end);
            if (s.teeth > 0) {
                double step = (s.end - s.start) / s.teeth;
                for (int k = 1; k < s.teeth; ++k) {
                    double c = s.start + k * step;
                    if (c > a && c < b) cuts.push_back(c);
                }
            }
        }
        if (aex_at > a && aex_at < b) cuts.push_back(aex_at);
        std::sort(cuts.begin(), cuts.end());
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            double lo = cuts[i], hi = cuts[i + 1];
            if (hi <= lo) continue;
            // curve is linear within each piece, so the midpoint is exact
            acc += value(0.5 * (lo + hi)) * (hi - lo);
        }
        return acc / (b - a);
    }
};

Curve build_curve(const sim::AexEvent& event, const sim::MitigationModel& m,
                  const TraceShape& shape) {
    Curve c;
    c.baseline = shape.idle_baseline;
    c.post_aex = shape.post_aex;

    const bool cache_off = true;  // attack traces run with caches disabled
    double warm = cache_off ? m.warmup_cost_cache_off : m.warmup_cost_cache_on;
    double restore_end = m.restore_cost;
    double pte_end = restore_end + m.pte_check_cost;
    double warm_end = pte_end + m.warmup_iterations * warm;
    double slide_len = event.slide_active ? m.nop_slide_length * m.nop_cost : 0.0;
    double mit_end = warm_end + slide_len;

    c.segs.push_back({0.0, restore_end, shape.restore_amp, shape.restore_amp, 0});
    c.segs.push_back({restore_end, pte_end, shape.pte_amp, shape.pte_amp, 0});
    c.segs.push_back({pte_end, warm_end, shape.warmup_lo, shape.warmup_hi, m.warmup_iterations});
    if (slide_len > 0) {
        c.segs.push_back({warm_end, mit_end, shape.slide_amp, shape.slide_amp, 0});
    }

    // EARP bursts: one fixed-width burst per retired instruction. The burst
    // footprint is measured in sample bins; a squashed (non-retired)
    // instruction leaves no footprint.
    double bin = shape.window_cycles / kTraceLen;
    double t = mit_end;
    for (std::uint8_t memdep : event.retired_kinds) {
        double amp = shape.earp_amp * (memdep ? 1.0 : shape.earp_nonmem_factor);
        int bins = memdep ? shape.earp_bins_mem : shape.earp_bins_nonmem;
        c.segs.push_back({t, t + bins * bin, amp, amp, 0});
        t += bins * bin;
    }
    c.aex_at = t;

    // Mitigation landings cut the curve mid-phase instead.
    if (event.landing < 0) c.aex_at = event.mitigation_progress;
    return c;
}

}  // namespace

CounterTrace mean_trace(const sim::AexEvent& event, const sim::MitigationModel& m,
                        const TraceShape& shape) {
    Curve curve = build_curve(event, m, shape);
    CounterTrace t;
    double bin = shape.window_cycles / kTraceLen;
    for (int i = 0; i < kTraceLen; ++i) {
        t.samples[i] = curve.average(i * bin, (i + 1) * bin);
    }
    return t;
}

CounterTrace synthesize_trace(const sim::AexEvent& event, const sim::MitigationModel& m,
                              const TraceShape& shape, double fire_delay, Rng& rng) {
    CounterTrace t = mean_trace(event, m, shape);
    t.fire_delay = fire_delay;
    t.seed = rng.seed();
    if (shape.noise_std > 0) {
        for (auto& s : t.samples) {
            s = std::max(0.0, s + rng.normal(0.0, shape.noise_std));
        }
    }
    return t;
}

std::vector<double> trace_features(const CounterTrace& t) {
    std::vector<double> f;
    f.reserve(kTraceLen * 2 - 1);
    for (int i = 0; i < kTraceLen; ++i) f.push_back(t.samples[i]);
    for (int i = 1; i < kTraceLen; ++i) f.push_back(t.samples[i] - t.samples[i - 1]);
    return f;
}

EvalReport metrics_from_confusion(const std::array<std::array<std::int64_t, 3>, 3>& confusion) {
    EvalReport rep;
    rep.confusion = confusion;
    std::int64_t total = 0, correct = 0;
    for (int c = 0; c < 3; ++c) {
        std::int64_t tp = confusion[c][c];
        std::int64_t support = 0, predicted = 0;
        for (int j = 0; j < 3; ++j) {
            support += confusion[c][j];
            predicted += confusion[j][c];
        }
        total += support;
        correct += tp;
        ClassMetrics& cm = rep.per_class[c];
        cm.support = support;
        cm.precision = predicted > 0 ? static_cast<double>(tp) / predicted : 0.0;
        cm.recall = support > 0 ? static_cast<double>(tp) / support : 0.0;
        cm.f1 = (cm.precision + cm.recall) > 0
                    ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall)
                    : 0.0;
    }
    rep.accuracy = total > 0 ? static_cast<double>(correct) / total : 0.0;
    return rep;
}

EvalReport evaluate(const ClassifierModel& model,
                    const std::vector<std::pair<CounterTrace, InterruptClass>>& test) {
    if (test.empty()) throw UsageError("evaluate: empty test set");
    std::array<std::array<std::int64_t, 3>, 3> confusion{};
    for (const auto& [trace, label] : test) {
        confusion[static_cast<int>(label)][static_cast<int>(predict(model, trace))]++;
    }
    return metrics_from_confusion(confusion);
}

}  // namespace aexns::fp
