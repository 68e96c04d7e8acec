#pragma once
// Short-Weierstrass elliptic curve arithmetic over prime fields (affine,
// GMP-backed). Carries secp160r1 plus a tiny toy curve for exhaustive tests.

#include <gmpxx.h>

#include <optional>
#include <string>

#include "aexns/common.hpp"

namespace aexns::ec {

struct Point {
    mpz_class x, y;
    bool infinity = true;

    static Point at_infinity() { return {}; }
    static Point affine(mpz_class px, mpz_class py) { return {std::move(px), std::move(py), false}; }

    bool operator==(const Point& o) const {
        if (infinity || o.infinity) return infinity == o.infinity;
        return x == o.x && y == o.y;
    }
};

struct CurveParams {
    std::string name;
    mpz_class p, a, b;
    Point g;
    mpz_class n_order;
    int cofactor = 1;

    // Sanity gates run at construction: G on curve, n_order * G == infinity.
    void validate() const;
};

const CurveParams& secp160r1();
// y^2 = x^3 + 3x + 7 over F_7919; prime order 7877, cofactor 1. Small enough
// for exhaustive oracles.
const CurveParams& toy_curve();

bool on_curve(const Point& pt, const CurveParams& c);
Point add(const Point& lhs, const Point& rhs, const CurveParams& c);

// [OP] scalar_mult: double-and-add. Errors on off-curve input.
Point scalar_mult(const mpz_class& k, const Point& pt, const CurveParams& c);

mpz_class mod_inverse(const mpz_class& x, const mpz_class& m);
mpz_class mod(const mpz_class& x, const mpz_class& m);

// Uniform integer in [0, bound) from the deterministic stream.
mpz_class random_below(const mpz_class& bound, Rng& rng);

}  // namespace aexns::ec
