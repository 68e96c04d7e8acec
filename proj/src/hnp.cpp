#include "aexns/hnp.hpp"

#include <algorithm>
#include <numeric>

namespace aexns::hnp {

namespace {

// Symmetric representative in (-n/2, n/2].
mpz_class centered(const mpz_class& x, const mpz_class& n) {
    mpz_class r = ec::mod(x, n);
    if (2 * r > n) r -= n;
    return r;
}

}  // namespace

HnpInstance build_hnp(const std::vector<ecdsa::Signature>& sigs, const ecdsa::BiasSpec& spec,
                      const ec::CurveParams& curve) {
    HnpInstance inst;
    inst.n_order = curve.n_order;
    inst.bound = spec.bound;
    inst.m = static_cast<int>(sigs.size());
    for (const auto& sig : sigs) {
        if (ec::mod(sig.s, curve.n_order) == 0) throw UsageError("build_hnp: s_i not invertible");
        mpz_class sinv = ec::mod_inverse(sig.s, curve.n_order);
        inst.t.push_back(ec::mod(sig.r * sinv, curve.n_order));
        inst.u.push_back(ec::mod(spec.known_part - sig.msg_hash * sinv, curve.n_order));
    }
    return inst;
}

mpz_class hnp_residual(const HnpInstance& inst, int i, const mpz_class& d) {
    return centered(inst.t[i] * d - inst.u[i], inst.n_order);
}

lll::LatticeBasis build_lattice(const HnpInstance& inst) {
    const int m = inst.m;
    const int dim = m + 2;
    const mpz_class& n = inst.n_order;
    lll::LatticeBasis basis;
    basis.rows.assign(dim, lll::Row(dim, 0));
    for (int i = 0; i < m; ++i) basis.rows[i][i] = n * n;
    for (int i = 0; i < m; ++i) basis.rows[m][i] = n * centered(inst.t[i], n);
    basis.rows[m][m] = inst.bound;
    for (int i = 0; i < m; ++i) basis.rows[m + 1][i] = n * centered(inst.u[i], n);
    basis.rows[m + 1][m + 1] = n * inst.bound;
    return basis;
}

std::optional<mpz_class> recover_key(const std::vector<ecdsa::Signature>& sigs,
                                     const ecdsa::BiasSpec& spec, const ec::CurveParams& curve,
                                     const ec::Point& pub, double delta) {
    HnpInstance inst = build_hnp(sigs, spec, curve);
    lll::LatticeBasis reduced = reduce(build_lattice(inst), delta);
    const int m = inst.m;
    const mpz_class n_be = inst.n_order * inst.bound;

    auto try_candidate = [&](const mpz_class& num) -> std::optional<mpz_class> {
        if (inst.bound == 0 || num % inst.bound != 0) return std::nullopt;
        mpz_class d = ec::mod(num / inst.bound, inst.n_order);
        if (d == 0) return std::nullopt;
        if (ec::scalar_mult(d, curve.g, curve) == pub) return d;
        return std::nullopt;
    };

    // Preferred extraction: rows whose homogenizer coordinate is exactly
    // +-n*B_e carry d*B_e in the second-to-last slot (up to global sign).
    for (const auto& row : reduced.rows) {
        if (abs(row[m + 1]) == n_be) {
            mpz_class sgn = row[m + 1] > 0 ? -1 : 1;  // target carries -n*B_e
            if (auto d = try_candidate(sgn * row[m])) return d;
        }
    }
    // Fallback scan: all rows, both signs.
    for (const auto& row : reduced.rows) {
        for (int sgn : {1, -1}) {
            if (auto d = try_candidate(sgn * row[m])) return d;
        }
    }
    return std::nullopt;
}

RecoveryResult subset_search(const std::vector<ecdsa::Signature>& flagged, int subset_size,
                             std::int64_t budget, Rng& rng, const ec::CurveParams& curve,
                             const ec::Point& pub, const ecdsa::BiasSpec& spec, double delta) {
    if (static_cast<int>(flagged.size()) < subset_size) {
        throw UsageError("subset_search: fewer flagged signatures than subset size");
    }
    RecoveryResult res;
    std::vector<int> idx(flagged.size());
    std::iota(idx.begin(), idx.end(), 0);
    while (res.reductions < budget) {
        // Fisher-Yates prefix shuffle for one random subset.
        for (int i = 0; i < subset_size; ++i) {
            int j = static_cast<int>(rng.uniform_int(i, static_cast<int>(idx.size()) - 1));
            std::swap(idx[i], idx[j]);
        }
        std::vector<ecdsa::Signature> subset;
        subset.reserve(subset_size);
        for (int i = 0; i < subset_size; ++i) subset.push_back(flagged[idx[i]]);
        ++res.reductions;
        if (auto d = recover_key(subset, spec, curve, pub, delta)) {
            res.key = d;
            return res;
        }
    }
    return res;  // budget exhausted, key absent
}

double expected_reductions(int flagged, double tp_rate, int subset_size) {
    if (flagged < 1 || subset_size < 1 || subset_size > flagged) {
        throw UsageError("expected_reductions: need 1 <= m <= F");
    }
    if (tp_rate < 0.0 || tp_rate > 1.0) throw UsageError("expected_reductions: tp_rate in [0,1]");
    long biased = std::lround(tp_rate * flagged);
    if (biased < subset_size) {
        throw CalibrationError("expected_reductions: infeasible, round(tp*F) < m");
    }
    // C(F, m) / C(B, m) as an exact rational, then to double.
    mpz_class num, den;
    mpz_bin_uiui(num.get_mpz_t(), flagged, subset_size);
    mpz_bin_uiui(den.get_mpz_t(), static_cast<unsigned long>(biased), subset_size);
    mpq_class ratio(num, den);
    ratio.canonicalize();
    return ratio.get_d();
}

mpz_class key_from_known_nonce(const ecdsa::Signature& sig, const mpz_class& nonce,
                               const ec::CurveParams& curve) {
    mpz_class rinv = ec::mod_inverse(sig.r, curve.n_order);
    return ec::mod((sig.s * nonce - sig.msg_hash) * rinv, curve.n_order);
}

}  // namespace aexns::hnp
