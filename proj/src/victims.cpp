#include "aexns/victims.hpp"

namespace aexns::victims {

namespace {

sim::Block marker_block(int page) {
    sim::Block b;
    b.instructions.push_back(sim::marker_instr(page));
    return b;
}

sim::Block filler_block(sim::Guard guard, Filler f, int count) {
    sim::Block b;
    b.guard = guard;
    for (int i = 0; i < count; ++i) b.instructions.push_back(filler_instr(f, kCodePage));
    return b;
}

}  // namespace

sim::VictimProgram make_delta_victim(int delta, int secret_bit, Filler filler, int base_length) {
    if (delta < 0) throw ConfigError("delta must be >= 0");
    if (secret_bit != 0 && secret_bit != 1) throw ConfigError("secret bit must be 0 or 1");
    sim::VictimProgram v;
    v.secret_env["s"] = secret_bit;
    v.secret_env["g"] = 0;  // attacker guess, bound per trace
    v.boundary_pages = {kStartMarkerPage, kStopMarkerPage};

    v.blocks.push_back(marker_block(kStartMarkerPage));
    // Short branch when the guess matches the secret, long branch otherwise.
    // The branch is keyed on a derived secret "match" so a single Equals
    // guard suffices: callers bind match = (s == g).
    v.secret_env["match"] = 1;
    v.blocks.push_back(filler_block({sim::Guard::Kind::Equals, "match", 1}, filler, base_length));
    v.blocks.push_back(
        filler_block({sim::Guard::Kind::Equals, "match", 0}, filler, base_length + delta));
    v.blocks.push_back(marker_block(kStopMarkerPage));
    v.validate();
    return v;
}

std::map<std::string, std::int64_t> delta_binding(int secret_bit, int guess) {
    return {{"g", guess}, {"match", secret_bit == guess ? 1 : 0}};
}

int delta_victim_path_length(int delta, int secret_bit, int guess, int base_length) {
    return secret_bit == guess ? base_length : base_length + delta;
}

sim::VictimProgram make_memcmp_victim(const std::string& secret) {
    if (secret.empty() || secret.size() > kMemcmpMaxLen) {
        throw ConfigError("memcmp secret length must be 1..8");
    }
    for (char c : secret) {
        if (c < 'A' || c > 'Z') throw ConfigError("memcmp secret must be A-Z");
    }
    const int n = static_cast<int>(secret.size());

    sim::VictimProgram v;
    v.boundary_pages = {kStartMarkerPage, kStopMarkerPage};
    v.secret_env["g_len"] = 0;
    for (int i = 0; i < kMemcmpMaxLen; ++i) v.secret_env["g" + std::to_string(i)] = 0;

    v.blocks.push_back(marker_block(kStartMarkerPage));
    // if (a_len != b_len) return 0; -- always executes.
    v.blocks.push_back(filler_block({}, Filler::Addl, kMemcmpLenBlock));
    // Character loop: compare block i executes iff the lengths match and all
    // previous characters matched. Guards express the early exit by keying
    // each block on derived secrets "m_i" = (lengths match && prefix i
    // matches), bound at trace construction from the actual guess.
    for (int i = 0; i < n; ++i) {
        v.secret_env["m" + std::to_string(i)] = 0;
        v.blocks.push_back(filler_block({sim::Guard::Kind::Equals, "m" + std::to_string(i), 1},
                                        Filler::Addl, kMemcmpCharBlock));
    }
    v.blocks.push_back(marker_block(kStopMarkerPage));
    v.validate();
    return v;
}

std::map<std::string, std::int64_t> memcmp_binding(const std::string& secret,
                                                   const std::string& guess) {
    if (guess.empty() || guess.size() > kMemcmpMaxLen) {
        throw ConfigError("memcmp guess length must be 1..8");
    }
    for (char c : guess) {
        if (c < 'A' || c > 'Z') throw ConfigError("memcmp guess must be A-Z");
    }
    std::map<std::string, std::int64_t> b;
    b["g_len"] = static_cast<std::int64_t>(guess.size());
    for (int i = 0; i < kMemcmpMaxLen; ++i) {
        b["g" + std::to_string(i)] =
            i < static_cast<int>(guess.size()) ? guess[i] - 'A' : 0;
    }
    // m_i: lengths equal and characters 0..i-1 all matched (the early-exit
    // structure of the comparison loop).
    bool alive = guess.size() == secret.size();
    for (int i = 0; i < static_cast<int>(secret.size()); ++i) {
        b["m" + std::to_string(i)] = alive ? 1 : 0;
        if (alive && (i >= static_cast<int>(guess.size()) || guess[i] != secret[i])) alive = false;
    }
    return b;
}

int memcmp_victim_instruction_count(const std::string& secret, const std::string& guess) {
    if (guess.size() != secret.size()) return kMemcmpLenBlock;
    int matching = 0;
    for (std::size_t i = 0; i < secret.size(); ++i) {
        if (guess[i] == secret[i]) {
            ++matching;
        } else {
            break;
        }
    }
    int inspected = std::min<int>(matching + 1, static_cast<int>(secret.size()));
    return kMemcmpLenBlock + inspected * kMemcmpCharBlock;
}

bool truncation_biased(const mpz_class& nonce) {
    // Top 15 bits of the 160-bit nonce all ones.
    mpz_class top = nonce >> 145;
    return top == (mpz_class(1) << 15) - 1;
}

sim::VictimProgram make_truncation_victim(const mpz_class& nonce) {
    if (nonce < 0 || mpz_sizeinbase(nonce.get_mpz_t(), 2) > 160) {
        throw ConfigError("truncation nonce must be a 160-bit value");
    }
    sim::VictimProgram v;
    v.boundary_pages = {kStartMarkerPage, kStopMarkerPage};
    v.secret_env["biased"] = truncation_biased(nonce) ? 1 : 0;
    v.blocks.push_back(marker_block(kStartMarkerPage));
    // One division iteration always runs; 15-bit-biased nonces take a second
    // iteration of the memory-heavy loop.
    v.blocks.push_back(filler_block({}, Filler::Addl, kTruncationBase));
    v.blocks.push_back(
        filler_block({sim::Guard::Kind::Equals, "biased", 1}, Filler::Addl, kTruncationExtra));
    v.blocks.push_back(marker_block(kStopMarkerPage));
    v.validate();
    return v;
}

bool lzb_biased(const mpz_class& nonce) {
    // >= 5 leading zero bits in a 160-bit register: nonce < 2^155.
    return nonce < (mpz_class(1) << (160 - kLzbBits));
}

sim::VictimProgram make_lzb_victim(const mpz_class& nonce) {
    if (nonce < 0 || mpz_sizeinbase(nonce.get_mpz_t(), 2) > 160) {
        throw ConfigError("lzb nonce must be a 160-bit value");
    }
    sim::VictimProgram v;
    v.boundary_pages = {kStartMarkerPage, kStopMarkerPage};
    v.secret_env["lzb"] = lzb_biased(nonce) ? 1 : 0;
    v.blocks.push_back(marker_block(kStartMarkerPage));
    v.blocks.push_back(filler_block({sim::Guard::Kind::Equals, "lzb", 1}, Filler::Addl, kLzbLong));
    v.blocks.push_back(filler_block({sim::Guard::Kind::Equals, "lzb", 0}, Filler::Addl, kLzbShort));
    v.blocks.push_back(marker_block(kStopMarkerPage));
    v.validate();
    return v;
}

}  // namespace aexns::victims
