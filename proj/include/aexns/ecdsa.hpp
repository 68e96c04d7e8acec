#pragma once
// ECDSA signing/verification with controllable nonce bias. Deliberately not
// constant-time: this is the attack target, not a crypto library.

#include <gmpxx.h>

#include <optional>
#include <vector>

#include "aexns/ec.hpp"

namespace aexns::ecdsa {

struct KeyPair {
    mpz_class d;   // private
    ec::Point q;   // public
};

struct Signature {
    mpz_class r, s;
    mpz_class msg_hash;
    std::optional<mpz_class> true_nonce;  // evaluation-only; never read by attacker code
};

KeyPair gen_keypair(const ec::CurveParams& curve, Rng& rng);

// [OP] sign: standard ECDSA with a caller-supplied nonce.
Signature sign(const mpz_class& priv, const mpz_class& msg_hash, const mpz_class& nonce,
               const ec::CurveParams& curve);

// [OP] verify.
bool verify(const ec::Point& pub, const mpz_class& msg_hash, const Signature& sig,
            const ec::CurveParams& curve);

// Nonce bias over a 160-bit nonce register.
struct BiasSpec {
    enum class Kind { MsbOnes, LeadingZeros } kind = Kind::MsbOnes;
    int bits = 15;
    mpz_class known_part;  // A
    mpz_class bound;       // B_e

    static BiasSpec msb_ones(int b);
    static BiasSpec leading_zeros(int z);
};

// [OP] gen_biased_nonce: known part plus a uniform remainder below the bound.
mpz_class gen_biased_nonce(const BiasSpec& spec, Rng& rng);

// Uniform unbiased nonce in [1, 2^160).
mpz_class gen_unbiased_nonce(Rng& rng);

}  // namespace aexns::ecdsa
