#include <doctest.h>

#include "aexns/ec.hpp"
#include "aexns/sim.hpp"
#include "aexns/victims.hpp"

using namespace aexns;
using namespace aexns::victims;

namespace {

// Replay oracle: retired instructions between the two boundary faults.
int replay_region_count(const sim::VictimProgram& v,
                        const std::map<std::string, std::int64_t>& binding) {
    sim::MitigationModel m;
    m.restore_cost = 1;
    m.pte_check_cost = 1;
    m.warmup_iterations = 0;
    m.nop_probability = 0.0;
    sim::TraceContext ctx(v, m, binding, true, 1.0, 1, Rng(1));
    auto e0 = ctx.resume_and_run(std::nullopt);
    auto e1 = ctx.resume_and_run(std::nullopt);
    REQUIRE(e0.cause == sim::AexCause::PageFault);
    REQUIRE(e1.cause == sim::AexCause::PageFault);
    return sim::ground_truth_step_count(e0, e1);
}

}  // namespace

TEST_CASE("delta victim path lengths") {
    CHECK(replay_region_count(make_delta_victim(0, 0, Filler::Nop), delta_binding(0, 0)) == 10);
    CHECK(replay_region_count(make_delta_victim(0, 0, Filler::Nop), delta_binding(0, 1)) == 10);
    CHECK(replay_region_count(make_delta_victim(6, 1, Filler::Nop), delta_binding(1, 1)) == 10);
    CHECK(replay_region_count(make_delta_victim(6, 1, Filler::Nop), delta_binding(1, 0)) == 16);
    // oracle agreement for a spread of deltas and secrets
    for (int delta : {1, 2, 3, 8, 64}) {
        for (int s : {0, 1}) {
            for (int g : {0, 1}) {
                int expect = delta_victim_path_length(delta, s, g);
                CHECK(replay_region_count(make_delta_victim(delta, s, Filler::Addl),
                                          delta_binding(s, g)) == expect);
            }
        }
    }
}

TEST_CASE("memcmp count oracle matches replay exhaustively (len <= 3, alphabet ABC)") {
    std::vector<std::string> words;
    for (int len = 1; len <= 3; ++len) {
        std::vector<std::string> cur = {""};
        for (int i = 0; i < len; ++i) {
            std::vector<std::string> next;
            for (const auto& w : cur) {
                for (char ch : {'A', 'B', 'C'}) next.push_back(w + ch);
            }
            cur = next;
        }
        words.insert(words.end(), cur.begin(), cur.end());
    }
    for (const auto& secret : words) {
        auto v = make_memcmp_victim(secret);
        for (const auto& guess : words) {
            int expect = memcmp_victim_instruction_count(secret, guess);
            CHECK(replay_region_count(v, memcmp_binding(secret, guess)) == expect);
        }
    }
}

TEST_CASE("memcmp structure") {
    // shorter input than the secret: minimal path (length block only)
    CHECK(memcmp_victim_instruction_count("ABC", "A") == kMemcmpLenBlock);
    // full match executes the most instructions for that secret
    std::string secret = "SECRET";
    int full = memcmp_victim_instruction_count(secret, secret);
    CHECK(full == kMemcmpLenBlock + 6 * kMemcmpCharBlock);
    for (char c = 'A'; c <= 'Z'; ++c) {
        for (std::size_t pos = 0; pos < secret.size(); ++pos) {
            std::string g = secret;
            g[pos] = c;
            CHECK(memcmp_victim_instruction_count(secret, g) <= full);
        }
    }
    CHECK_THROWS_AS(make_memcmp_victim("toolongsecret"), ConfigError);
    CHECK_THROWS_AS(make_memcmp_victim("abc"), ConfigError);
}

TEST_CASE("truncation victim bias predicate and 52-instruction delta") {
    mpz_class biased = (mpz_class("7FFF", 16) << 145) + 12345;
    mpz_class unbiased = (mpz_class("7FFE", 16) << 145) + 12345;
    CHECK(truncation_biased(biased));
    CHECK(!truncation_biased(unbiased));

    int long_path = replay_region_count(make_truncation_victim(biased), {});
    int short_path = replay_region_count(make_truncation_victim(unbiased), {});
    CHECK(long_path - short_path == kTruncationExtra);
    CHECK(short_path == kTruncationBase);
}

TEST_CASE("truncation bias frequency over random nonces") {
    // ~2^-15 per nonce; 3e6 draws give a usable binomial bound.
    Rng rng(2024);
    const int n = 3000000;
    int hits = 0;
    mpz_class top = mpz_class(1) << 160;
    for (int i = 0; i < n; ++i) {
        mpz_class k = ec::random_below(top, rng);
        hits += truncation_biased(k);
    }
    double p = std::pow(2.0, -15.0);
    double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(static_cast<double>(hits) / n - p) <= 4.0 * se);
}

TEST_CASE("lzb victim paths and probability") {
    mpz_class low = (mpz_class(1) << 154) + 7;      // >= 5 leading zero bits
    mpz_class high = (mpz_class(1) << 159) + 7;     // MSB set
    CHECK(lzb_biased(low));
    CHECK(!lzb_biased(high));
    CHECK(replay_region_count(make_lzb_victim(low), {}) == kLzbLong);
    CHECK(replay_region_count(make_lzb_victim(high), {}) == kLzbShort);

    Rng rng(77);
    const int n = 200000;
    int hits = 0;
    mpz_class top = mpz_class(1) << 160;
    for (int i = 0; i < n; ++i) hits += lzb_biased(ec::random_below(top, rng));
    double p = 1.0 / 32.0;
    double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(static_cast<double>(hits) / n - p) <= 4.0 * se);
}

TEST_CASE("victims only fault on boundary markers") {
    Rng rng(5);
    for (auto filler : {Filler::Nop, Filler::Addl}) {
        auto v = make_delta_victim(4, 1, filler);
        sim::MitigationModel m;
        sim::TraceContext ctx(v, m, delta_binding(1, 0), false, 15.0, 1, Rng(rng.u64()));
        int faults = 0;
        while (true) {
            std::optional<double> t;
            if (rng.bernoulli(0.5)) t = rng.uniform(0.0, 4000.0);
            auto ev = ctx.resume_and_run(t);
            if (ev.cause == sim::AexCause::PageFault) {
                ++faults;
                CHECK(v.boundary_pages.count(*ev.faulting_page) == 1);
                if (*ev.faulting_page == kStopMarkerPage) break;
            }
        }
        CHECK(faults == 2);
    }
}
