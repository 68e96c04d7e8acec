#pragma once
// Hidden-Number-Problem pipeline: biased ECDSA signatures -> integer lattice
// -> LLL -> private key, plus the subset-search driver and the hypergeometric
// expected-reduction cost model.

#include <optional>
#include <vector>

#include "aexns/ecdsa.hpp"
#include "aexns/lll.hpp"

namespace aexns::hnp {

struct HnpInstance {
    std::vector<mpz_class> t;  // t_i = r_i * s_i^-1 mod n
    std::vector<mpz_class> u;  // u_i = A - h_i * s_i^-1 mod n
    mpz_class bound;           // B_e
    mpz_class n_order;
    int m = 0;
};

// [OP] build_hnp. Errors on non-invertible s_i.
HnpInstance build_hnp(const std::vector<ecdsa::Signature>& sigs, const ecdsa::BiasSpec& spec,
                      const ec::CurveParams& curve);

// Evaluation-side residual: (t_i*d - u_i) reduced to the symmetric range.
mpz_class hnp_residual(const HnpInstance& inst, int i, const mpz_class& d);

// [OP] build_lattice: dimension m+2. Rows 1..m are n^2-scaled unit rows;
// row m+1 = (n*t_1..n*t_m, B_e, 0); row m+2 = (n*u_1..n*u_m, 0, n*B_e).
// t_i, u_i enter by their symmetric representatives (the lattice is
// unchanged; entries stay small). Target short vector:
// (n*e_1..n*e_m, d*B_e, -n*B_e), every coordinate at most n*B_e.
lll::LatticeBasis build_lattice(const HnpInstance& inst);

struct RecoveryResult {
    std::optional<mpz_class> key;
    int reductions = 0;
};

// [OP] recover_key: lattice, LLL at delta, candidate scan over all reduced
// rows and both signs, hard verification gate against the public key.
std::optional<mpz_class> recover_key(const std::vector<ecdsa::Signature>& sigs,
                                     const ecdsa::BiasSpec& spec, const ec::CurveParams& curve,
                                     const ec::Point& pub, double delta = 0.99);

// [OP] subset_search: random subsets of `subset_size` flagged signatures until
// recovery or the reduction budget is exhausted.
RecoveryResult subset_search(const std::vector<ecdsa::Signature>& flagged, int subset_size,
                             std::int64_t budget, Rng& rng, const ec::CurveParams& curve,
                             const ec::Point& pub, const ecdsa::BiasSpec& spec,
                             double delta = 0.99);

// [OP] expected_reductions: C(F, m) / C(B, m) with B = round(tp_rate * F);
// the reciprocal of the hypergeometric probability that a random m-subset is
// all-biased. Infeasible when B < m.
double expected_reductions(int flagged, double tp_rate, int subset_size);

// Closed form for fully-known nonces: d = (s*k - h) * r^-1 mod n.
mpz_class key_from_known_nonce(const ecdsa::Signature& sig, const mpz_class& nonce,
                               const ec::CurveParams& curve);

}  // namespace aexns::hnp
