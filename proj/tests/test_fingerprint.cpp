#include <doctest.h>

#include <sstream>

#include "aexns/fingerprint.hpp"
#include "aexns/victims.hpp"

using namespace aexns;
using namespace aexns::fp;

namespace {

// Events generated by the real simulator on a uniform addl region with the
// default mitigation, caches disabled, slowdown 15 (effective addl cost 75).
sim::AexEvent make_event(double interrupt_at, std::uint64_t seed = 1, double nop_prob = 0.0) {
    sim::VictimProgram v;
    v.boundary_pages = {victims::kStartMarkerPage, victims::kStopMarkerPage};
    sim::Block start, body, stop;
    start.instructions.push_back(sim::marker_instr(victims::kStartMarkerPage));
    for (int i = 0; i < 100; ++i) body.instructions.push_back(sim::addl_instr());
    stop.instructions.push_back(sim::marker_instr(victims::kStopMarkerPage));
    v.blocks = {start, body, stop};
    sim::MitigationModel m;
    m.nop_probability = nop_prob;
    sim::TraceContext ctx(v, m, {}, false, 15.0, seed, Rng(seed));
    ctx.resume_and_run(std::nullopt);
    return ctx.resume_and_run(interrupt_at);
}

const double kD0 = 150 + 250 + 12 * 120;  // 1840, cache-off r=0

}  // namespace

TEST_CASE("synthesize_trace determinism and length") {
    sim::MitigationModel m;
    TraceShape shape;
    shape.noise_std = 0.0;
    auto ev = make_event(900.0);
    Rng r1(5), r2(5);
    auto t1 = synthesize_trace(ev, m, shape, 100.0, r1);
    auto t2 = synthesize_trace(ev, m, shape, 100.0, r2);
    CHECK(t1.samples == t2.samples);
    CHECK(t1.samples.size() == 120);

    // all samples nonnegative, under noise too
    shape.noise_std = 25.0;
    Rng r3(6);
    auto t3 = synthesize_trace(ev, m, shape, 100.0, r3);
    for (double s : t3.samples) CHECK(s >= 0.0);
}

TEST_CASE("mean curves separate mitigation landings from steps") {
    sim::MitigationModel m;
    TraceShape shape;
    auto mit = make_event(900.0);          // mid-warmup
    auto step = make_event(kD0 + 100.0);   // one addl retired
    REQUIRE(mit.landing == -1);
    REQUIRE(step.landing == 1);
    auto mt = mean_trace(mit, m, shape);
    auto st = mean_trace(step, m, shape);
    double max_gap = 0;
    for (int i = 0; i < kTraceLen; ++i) {
        max_gap = std::max(max_gap, std::abs(mt.samples[i] - st.samples[i]));
    }
    CHECK(max_gap > 5.0 * shape.noise_std);
}

TEST_CASE("generator monotonicity: noise never improves the margin") {
    sim::MitigationModel m;
    auto mit = make_event(900.0);
    auto step = make_event(kD0 + 100.0);
    double prev_margin = 1e300;
    for (double noise : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        TraceShape shape;
        shape.noise_std = noise;
        auto mt = mean_trace(mit, m, shape);
        auto st = mean_trace(step, m, shape);
        double max_gap = 0;
        for (int i = 0; i < kTraceLen; ++i) {
            max_gap = std::max(max_gap, std::abs(mt.samples[i] - st.samples[i]));
        }
        double margin = max_gap - 5.0 * noise;
        CHECK(margin <= prev_margin);
        prev_margin = margin;
    }
}

TEST_CASE("train/predict on separable noiseless classes") {
    sim::MitigationModel m;
    TraceShape shape;
    shape.noise_std = 0.0;
    Rng rng(11);

    std::vector<std::pair<CounterTrace, InterruptClass>> corpus;
    for (int i = 0; i < 40; ++i) {
        auto mit = make_event(100.0 + i * 40.0, 10 + i);
        REQUIRE(mit.landing == -1);
        corpus.emplace_back(synthesize_trace(mit, m, shape, 0, rng),
                            InterruptClass::MitigationLanding);
        auto zero = make_event(kD0 + 0.5 + i * 0.5, 100 + i);
        REQUIRE(zero.landing == 0);
        corpus.emplace_back(synthesize_trace(zero, m, shape, 0, rng), InterruptClass::ZeroStep);
        auto step = make_event(kD0 + 80.0 + i * 70.0, 200 + i);
        REQUIRE(step.landing >= 1);
        corpus.emplace_back(synthesize_trace(step, m, shape, 0, rng), InterruptClass::Step);
    }

    ForestHyper hyper;
    hyper.num_trees = 20;
    hyper.max_depth = 8;
    auto model = train(corpus, hyper, Rng(77));
    auto rep = evaluate(model, corpus);
    CHECK(rep.accuracy == doctest::Approx(1.0));

    // training exemplar of each pure class classifies as that class
    CHECK(predict(model, corpus[0].first) == corpus[0].second);
    CHECK(predict(model, corpus[1].first) == corpus[1].second);
    CHECK(predict(model, corpus[2].first) == corpus[2].second);

    // same data, same seed: identical model
    auto model2 = train(corpus, hyper, Rng(77));
    CHECK(model.trees.size() == model2.trees.size());
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        REQUIRE(model.trees[t].size() == model2.trees[t].size());
        for (std::size_t i = 0; i < model.trees[t].size(); ++i) {
            CHECK(model.trees[t][i].feature == model2.trees[t][i].feature);
            CHECK(model.trees[t][i].threshold == model2.trees[t][i].threshold);
            CHECK(model.trees[t][i].label == model2.trees[t][i].label);
        }
    }
}

TEST_CASE("train rejects single-class input") {
    sim::MitigationModel m;
    TraceShape shape;
    Rng rng(1);
    std::vector<std::pair<CounterTrace, InterruptClass>> corpus;
    for (int i = 0; i < 10; ++i) {
        corpus.emplace_back(synthesize_trace(make_event(500.0, i), m, shape, 0, rng),
                            InterruptClass::MitigationLanding);
    }
    CHECK_THROWS_AS(train(corpus, ForestHyper{}, Rng(1)), UsageError);
}

TEST_CASE("prediction ties break in fixed label order") {
    ClassifierModel model;
    model.hyper.num_trees = 2;
    TreeNode leaf_step;
    leaf_step.feature = -1;
    leaf_step.label = static_cast<int>(InterruptClass::Step);
    TreeNode leaf_zero;
    leaf_zero.feature = -1;
    leaf_zero.label = static_cast<int>(InterruptClass::ZeroStep);
    model.trees = {{leaf_step}, {leaf_zero}};
    CounterTrace t;
    CHECK(predict(model, t) == InterruptClass::ZeroStep);  // smaller label wins the tie
}

TEST_CASE("evaluate metrics identities") {
    // all-one-class predictor on a balanced 3-class set
    ClassifierModel constant;
    constant.hyper.num_trees = 1;
    TreeNode leaf;
    leaf.feature = -1;
    leaf.label = static_cast<int>(InterruptClass::MitigationLanding);
    constant.trees = {{leaf}};

    sim::MitigationModel m;
    TraceShape shape;
    Rng rng(3);
    std::vector<std::pair<CounterTrace, InterruptClass>> test;
    for (int i = 0; i < 30; ++i) {
        test.emplace_back(synthesize_trace(make_event(500.0, i), m, shape, 0, rng),
                          static_cast<InterruptClass>(i % 3));
    }
    auto rep = evaluate(constant, test);
    CHECK(rep.per_class[0].recall == doctest::Approx(1.0));
    CHECK(rep.per_class[0].precision == doctest::Approx(1.0 / 3.0));
    CHECK(rep.per_class[1].recall == doctest::Approx(0.0));

    // identities on a randomized confusion matrix
    std::array<std::array<std::int64_t, 3>, 3> conf{};
    Rng crng(9);
    for (auto& row : conf) {
        for (auto& cell : row) cell = crng.uniform_int(0, 50);
    }
    auto rep2 = metrics_from_confusion(conf);
    for (int c = 0; c < 3; ++c) {
        std::int64_t support = conf[c][0] + conf[c][1] + conf[c][2];
        CHECK(rep2.per_class[c].support == support);
        double pr = rep2.per_class[c].precision, rc = rep2.per_class[c].recall;
        if (pr + rc > 0) {
            CHECK(rep2.per_class[c].f1 == doctest::Approx(2 * pr * rc / (pr + rc)));
        }
    }
    CHECK_THROWS_AS(evaluate(constant, {}), UsageError);
}

TEST_CASE("model serialization round trip") {
    sim::MitigationModel m;
    TraceShape shape;
    Rng rng(4);
    std::vector<std::pair<CounterTrace, InterruptClass>> corpus;
    for (int i = 0; i < 20; ++i) {
        corpus.emplace_back(synthesize_trace(make_event(300.0 + 40 * i, i), m, shape, 0, rng),
                            InterruptClass::MitigationLanding);
        corpus.emplace_back(synthesize_trace(make_event(kD0 + 80 + 70 * i, 50 + i), m, shape, 0, rng),
                            InterruptClass::Step);
    }
    ForestHyper hyper;
    hyper.num_trees = 8;
    auto model = train(corpus, hyper, Rng(5), 0xabcdef);
    std::stringstream ss;
    save_model(model, ss);
    auto loaded = load_model(ss);
    CHECK(loaded.profile_hash == model.profile_hash);
    CHECK(loaded.trees.size() == model.trees.size());
    for (const auto& [trace, label] : corpus) {
        CHECK(predict(loaded, trace) == predict(model, trace));
    }
}
