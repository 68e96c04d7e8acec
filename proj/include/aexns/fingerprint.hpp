#pragma once
// Synthetic contention fingerprints: the attacker-side idle-cycle counter
// trace sampled across enclave re-entry, and a decision-tree ensemble that
// classifies each interrupt as mitigation landing, zero-step or >=1-step.
// The generator is this artifact's stand-in for hardware rdpmc sampling.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "aexns/common.hpp"
#include "aexns/sim.hpp"

namespace aexns::fp {

inline constexpr int kTraceLen = 120;  // sampled values per interrupt

struct CounterTrace {
    std::array<double, kTraceLen> samples{};
    double fire_delay = 0.0;
    std::uint64_t seed = 0;
};

enum class InterruptClass : int {
    MitigationLanding = 0,  // n < 0
    ZeroStep = 1,           // n = 0
    Step = 2,               // n >= 1
};

inline InterruptClass class_of_landing(int n) {
    if (n < 0) return InterruptClass::MitigationLanding;
    return n == 0 ? InterruptClass::ZeroStep : InterruptClass::Step;
}

const char* class_name(InterruptClass c);

// Shape parameters of the phase curve. The trace window is fixed; what moves
// with the landing is where each phase segment sits and where the post-AEX
// quiet tail begins.
struct TraceShape {
    double window_cycles = 2100.0;  // wall span covered by the 120 samples
    double noise_std = 3.0;
    double idle_baseline = 12.0;   // before any enclave activity
    double post_aex = 5.0;         // after the AEX, enclave stopped
    double restore_amp = 30.0;
    double pte_amp = 48.0;
    double warmup_lo = 20.0;
    double warmup_hi = 58.0;
    double slide_amp = 38.0;
    double earp_amp = 40.0;          // per-retired-instruction contention burst
    double earp_nonmem_factor = 0.45;  // nop-like instructions contend less
    int earp_bins_mem = 2;           // burst footprint, bins per instruction
    int earp_bins_nonmem = 1;
};

// [OP] synthesize_trace: 120 bin-averaged samples of the phase curve for the
// resume that ended in `event`, plus clipped Gaussian noise.
CounterTrace synthesize_trace(const sim::AexEvent& event, const sim::MitigationModel& m,
                              const TraceShape& shape, double fire_delay, Rng& rng);

// Noise-free mean curve (used by separability checks).
CounterTrace mean_trace(const sim::AexEvent& event, const sim::MitigationModel& m,
                        const TraceShape& shape);

// ---------------------------------------------------------------------------
// Random forest over raw samples + first differences (239 features).
// ---------------------------------------------------------------------------
struct ForestHyper {
    int num_trees = 100;
    int max_depth = 12;
    int min_leaf = 1;
    int feature_subsample = 0;  // 0 = round(sqrt(#features))
};

struct TreeNode {
    int feature = -1;       // -1: leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    int label = 0;          // leaf majority class
};

struct ClassifierModel {
    ForestHyper hyper;
    std::vector<std::vector<TreeNode>> trees;
    std::array<std::int64_t, 3> class_counts{};  // training support per class
    std::uint64_t train_seed = 0;
    std::uint64_t profile_hash = 0;

    bool empty() const { return trees.empty(); }
};

std::vector<double> trace_features(const CounterTrace& t);

// [OP] train: bootstrap-sampled Gini trees; deterministic given the seed.
ClassifierModel train(const std::vector<std::pair<CounterTrace, InterruptClass>>& labeled,
                      const ForestHyper& hyper, Rng rng, std::uint64_t profile_hash = 0);

// [OP] predict: majority vote, ties broken by fixed label order
// (MitigationLanding < ZeroStep < Step).
InterruptClass predict(const ClassifierModel& model, const CounterTrace& trace);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;
};

struct EvalReport {
    std::array<std::array<std::int64_t, 3>, 3> confusion{};  // [truth][predicted]
    std::array<ClassMetrics, 3> per_class{};
    double accuracy = 0.0;
};

// [OP] evaluate: exact confusion-matrix metrics.
EvalReport evaluate(const ClassifierModel& model,
                    const std::vector<std::pair<CounterTrace, InterruptClass>>& test);

EvalReport metrics_from_confusion(const std::array<std::array<std::int64_t, 3>, 3>& confusion);

// Versioned text serialization with embedded seed and profile hash.
void save_model(const ClassifierModel& model, std::ostream& out);
ClassifierModel load_model(std::istream& in);

// Labeled corpora as CSV: 120 sample columns + label.
void save_corpus(const std::vector<std::pair<CounterTrace, InterruptClass>>& corpus,
                 std::ostream& out);

}  // namespace aexns::fp
