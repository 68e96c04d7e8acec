#include "aexns/ecdsa.hpp"

namespace aexns::ecdsa {

KeyPair gen_keypair(const ec::CurveParams& curve, Rng& rng) {
    KeyPair kp;
    do {
        kp.d = ec::random_below(curve.n_order, rng);
    } while (kp.d == 0);
    kp.q = ec::scalar_mult(kp.d, curve.g, curve);
    return kp;
}

Signature sign(const mpz_class& priv, const mpz_class& msg_hash, const mpz_class& nonce,
               const ec::CurveParams& curve) {
    if (nonce <= 0 || nonce >= curve.n_order) throw UsageError("sign: nonce out of range");
    ec::Point rp = ec::scalar_mult(nonce, curve.g, curve);
    if (rp.infinity) throw UsageError("sign: k*G at infinity");
    Signature sig;
    sig.r = ec::mod(rp.x, curve.n_order);
    if (sig.r == 0) throw UsageError("sign: r == 0, pick another nonce");
    mpz_class kinv = ec::mod_inverse(nonce, curve.n_order);
    sig.s = ec::mod(kinv * (msg_hash + sig.r * priv), curve.n_order);
    if (sig.s == 0) throw UsageError("sign: s == 0, pick another nonce");
    sig.msg_hash = msg_hash;
    sig.true_nonce = nonce;
    return sig;
}

bool verify(const ec::Point& pub, const mpz_class& msg_hash, const Signature& sig,
            const ec::CurveParams& curve) {
    if (sig.r <= 0 || sig.r >= curve.n_order || sig.s <= 0 || sig.s >= curve.n_order) return false;
    if (!ec::on_curve(pub, curve) || pub.infinity) return false;
    mpz_class w = ec::mod_inverse(sig.s, curve.n_order);
    mpz_class u1 = ec::mod(msg_hash * w, curve.n_order);
    mpz_class u2 = ec::mod(sig.r * w, curve.n_order);
    ec::Point p = ec::add(ec::scalar_mult(u1, curve.g, curve), ec::scalar_mult(u2, pub, curve),
                          curve);
    if (p.infinity) return false;
    return ec::mod(p.x, curve.n_order) == sig.r;
}

BiasSpec BiasSpec::msb_ones(int b) {
    if (b < 1 || b > 160) throw UsageError("msb_ones: bits must be 1..160");
    BiasSpec s;
    s.kind = Kind::MsbOnes;
    s.bits = b;
    s.known_part = ((mpz_class(1) << b) - 1) << (160 - b);
    s.bound = mpz_class(1) << (160 - b);
    return s;
}

BiasSpec BiasSpec::leading_zeros(int z) {
    if (z < 1 || z > 160) throw UsageError("leading_zeros: bits must be 1..160");
    BiasSpec s;
    s.kind = Kind::LeadingZeros;
    s.bits = z;
    s.known_part = 0;
    s.bound = mpz_class(1) << (160 - z);
    return s;
}

mpz_class gen_biased_nonce(const BiasSpec& spec, Rng& rng) {
    for (;;) {
        mpz_class k = spec.known_part + ec::random_below(spec.bound, rng);
        if (k > 0) return k;  // LeadingZeros can draw 0; nonces must be nonzero
    }
}

mpz_class gen_unbiased_nonce(Rng& rng) {
    mpz_class bound = mpz_class(1) << 160;
    for (;;) {
        mpz_class k = ec::random_below(bound, rng);
        if (k > 0) return k;
    }
}

}  // namespace aexns::ecdsa
