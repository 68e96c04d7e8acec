#include "aexns/ec.hpp"

namespace aexns::ec {

mpz_class mod(const mpz_class& x, const mpz_class& m) {
    mpz_class r;
    mpz_mod(r.get_mpz_t(), x.get_mpz_t(), m.get_mpz_t());
    return r;
}

mpz_class mod_inverse(const mpz_class& x, const mpz_class& m) {
    mpz_class r;
    if (mpz_invert(r.get_mpz_t(), x.get_mpz_t(), m.get_mpz_t()) == 0) {
        throw UsageError("modular inverse does not exist");
    }
    return r;
}

bool on_curve(const Point& pt, const CurveParams& c) {
    if (pt.infinity) return true;
    mpz_class lhs = mod(pt.y * pt.y, c.p);
    mpz_class rhs = mod(pt.x * pt.x * pt.x + c.a * pt.x + c.b, c.p);
    return lhs == rhs;
}

Point add(const Point& lhs, const Point& rhs, const CurveParams& c) {
    if (lhs.infinity) return rhs;
    if (rhs.infinity) return lhs;
    if (lhs.x == rhs.x && mod(lhs.y + rhs.y, c.p) == 0) return Point::at_infinity();
    mpz_class lambda;
    if (lhs.x == rhs.x && lhs.y == rhs.y) {
        lambda = mod((3 * lhs.x * lhs.x + c.a) * mod_inverse(mod(2 * lhs.y, c.p), c.p), c.p);
    } else {
        lambda = mod((rhs.y - lhs.y) * mod_inverse(mod(rhs.x - lhs.x, c.p), c.p), c.p);
    }
    mpz_class x = mod(lambda * lambda - lhs.x - rhs.x, c.p);
    mpz_class y = mod(lambda * (lhs.x - x) - lhs.y, c.p);
    return Point::affine(x, y);
}

Point scalar_mult(const mpz_class& k, const Point& pt, const CurveParams& c) {
    if (!on_curve(pt, c)) throw UsageError("scalar_mult: point not on curve");
    mpz_class e = mod(k, c.n_order);
    Point result = Point::at_infinity();
    Point base = pt;
    while (e > 0) {
        if (mpz_odd_p(e.get_mpz_t())) result = add(result, base, c);
        base = add(base, base, c);
        e >>= 1;
    }
    return result;
}

void CurveParams::validate() const {
    if (!on_curve(g, *this) || g.infinity) {
        throw ConfigError("curve " + name + ": generator not on curve");
    }
    if (!scalar_mult(n_order, g, *this).infinity) {
        throw ConfigError("curve " + name + ": n_order * G != infinity");
    }
}

const CurveParams& secp160r1() {
    static const CurveParams c = [] {
        CurveParams cp;
        cp.name = "secp160r1";
        cp.p = mpz_class("FFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFF7FFFFFFF", 16);
        cp.a = mpz_class("FFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFF7FFFFFFC", 16);
        cp.b = mpz_class("1C97BEFC54BD7A8B65ACF89F81D4D4ADC565FA45", 16);
        cp.g = Point::affine(mpz_class("4A96B5688EF573284664698968C38BB913CBFC82", 16),
                             mpz_class("23A628553168947D59DCC912042351377AC5FB32", 16));
        cp.n_order = mpz_class("0100000000000000000001F4C8F927AED3CA752257", 16);
        cp.cofactor = 1;
        cp.validate();
        return cp;
    }();
    return c;
}

const CurveParams& toy_curve() {
    static const CurveParams c = [] {
        CurveParams cp;
        cp.name = "toy-7919";
        cp.p = 7919;
        cp.a = 3;
        cp.b = 7;
        cp.g = Point::affine(1, 2346);
        cp.n_order = 7877;
        cp.cofactor = 1;
        cp.validate();
        return cp;
    }();
    return c;
}

mpz_class random_below(const mpz_class& bound, Rng& rng) {
    if (bound <= 0) throw UsageError("random_below: bound must be positive");
    std::size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
    std::size_t words = (bits + 63) / 64;
    for (;;) {
        mpz_class v = 0;
        for (std::size_t w = 0; w < words; ++w) {
            v <<= 64;
            v |= mpz_class(static_cast<unsigned long>(rng.u64()));
        }
        // mask down to `bits` bits
        mpz_class masked = v & ((mpz_class(1) << bits) - 1);
        if (masked < bound) return masked;
    }
}

}  // namespace aexns::ec
