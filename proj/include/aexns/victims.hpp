#pragma once
// Victim library: the delta-branch benchmark, the non-constant-time memcmp,
// the wolfSSL-style nonce-truncation loop and the leading-zero-bit scalar
// multiplication gadget, all expressed as abstract instruction streams with
// ground-truth count oracles.

#include <gmpxx.h>

#include <string>

#include "aexns/sim.hpp"

namespace aexns::victims {

enum class Filler { Nop, Addl };

inline sim::InstructionSpec filler_instr(Filler f, int page = 0) {
    return f == Filler::Nop ? sim::nop_instr(page) : sim::addl_instr(page);
}

// Pages used by generated victims. Markers get distinct ids so each fires
// exactly once per trace.
inline constexpr int kCodePage = 0;
inline constexpr int kStartMarkerPage = 100;
inline constexpr int kStopMarkerPage = 101;

// [OP] make_delta_victim: STR(10)-style branch, short path of `base` fillers
// if the secret bit equals the attacker guess, base + delta otherwise.
// Bind a guess with delta_binding(secret, guess) when opening a trace.
sim::VictimProgram make_delta_victim(int delta, int secret_bit, Filler filler,
                                     int base_length = 10);

std::map<std::string, std::int64_t> delta_binding(int secret_bit, int guess);

// Executed-instruction oracle for the branch body between the two markers.
int delta_victim_path_length(int delta, int secret_bit, int guess, int base_length = 10);

// [OP] make_memcmp_victim: early-exit string comparison. The attacker input
// is bound via secrets "g_len" and "g0".."g7" (candidate characters, 0-25).
// Block sizes: one length-check block plus one compare block per inspected
// character.
inline constexpr int kMemcmpLenBlock = 4;
inline constexpr int kMemcmpCharBlock = 6;
inline constexpr int kMemcmpMaxLen = 8;

sim::VictimProgram make_memcmp_victim(const std::string& secret);

// Per-trace binding of an attacker guess string against the hidden secret.
std::map<std::string, std::int64_t> memcmp_binding(const std::string& secret,
                                                   const std::string& guess);

// Count oracle: 1 length block + (matching prefix + 1, capped at len) compare
// blocks when lengths match; length block only otherwise. Markers excluded.
int memcmp_victim_instruction_count(const std::string& secret, const std::string& guess);

// [OP] make_truncation_victim: nonce-truncation loop with a 52-instruction
// penalty when the top 15 bits of the 160-bit nonce are all ones.
inline constexpr int kTruncationBase = 8;
inline constexpr int kTruncationExtra = 52;

bool truncation_biased(const mpz_class& nonce);
sim::VictimProgram make_truncation_victim(const mpz_class& nonce);

// [OP] make_lzb_victim: scalar-multiplication gadget; 14 instructions between
// the mp_copy boundaries when the nonce has >= 5 leading zero bits, else 12.
inline constexpr int kLzbLong = 14;   // >= 5 leading zero bits
inline constexpr int kLzbShort = 12;
inline constexpr int kLzbBits = 5;

bool lzb_biased(const mpz_class& nonce);
sim::VictimProgram make_lzb_victim(const mpz_class& nonce);

}  // namespace aexns::victims
