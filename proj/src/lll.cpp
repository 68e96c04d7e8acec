#include "aexns/lll.hpp"

#include <cmath>

namespace aexns::lll {

mpz_class norm_sq(const Row& row) {
    mpz_class acc = 0;
    for (const auto& x : row) acc += x * x;
    return acc;
}

namespace {

mpz_class dot(const Row& a, const Row& b) {
    mpz_class acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

// round(num / den) to nearest, den > 0.
mpz_class round_div(const mpz_class& num, const mpz_class& den) {
    mpz_class q, r;
    mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    if (2 * r > den) q += 1;
    return q;
}

}  // namespace

// de Weger's integral LLL (Cohen, Alg. 2.6.3) with a rational delta. State:
// d[i] are the Gram determinants (d[0] = 1), lam[i][j] = d[j+1] * mu_ij.
LatticeBasis reduce(const LatticeBasis& basis, double delta) {
    if (!(delta > 0.25 && delta <= 1.0)) throw UsageError("lll: delta must be in (0.25, 1]");
    const mpz_class delta_num = static_cast<long>(std::llround(delta * 1000000.0));
    const mpz_class delta_den = 1000000;

    LatticeBasis out = basis;
    auto& B = out.rows;
    const int n = static_cast<int>(B.size());
    if (n == 0) return out;
    for (const auto& row : B) {
        if (row.size() != out.cols()) throw UsageError("lll: ragged basis");
    }
    if (n == 1) {
        if (norm_sq(B[0]) == 0) throw UsageError("lll: dependent (zero) rows");
        return out;
    }

    std::vector<mpz_class> d(n + 1);
    std::vector<std::vector<mpz_class>> lam(n, std::vector<mpz_class>(n));
    d[0] = 1;
    d[1] = dot(B[0], B[0]);
    if (d[1] == 0) throw UsageError("lll: dependent rows");
    int kmax = 0;

    auto red = [&](int k, int l) {
        if (2 * abs(lam[k][l]) > d[l + 1]) {
            mpz_class q = round_div(lam[k][l], d[l + 1]);
            for (std::size_t i = 0; i < out.cols(); ++i) B[k][i] -= q * B[l][i];
            lam[k][l] -= q * d[l + 1];
            for (int i = 0; i < l; ++i) lam[k][i] -= q * lam[l][i];
        }
    };

    auto swap_step = [&](int k) {
        std::swap(B[k], B[k - 1]);
        for (int j = 0; j <= k - 2; ++j) std::swap(lam[k][j], lam[k - 1][j]);
        mpz_class l = lam[k][k - 1];
        mpz_class bnew = (d[k - 1] * d[k + 1] + l * l) / d[k];
        for (int i = k + 1; i <= kmax; ++i) {
            mpz_class t = lam[i][k];
            lam[i][k] = (d[k + 1] * lam[i][k - 1] - l * t) / d[k];
            lam[i][k - 1] = (bnew * t + l * lam[i][k]) / d[k + 1];
        }
        d[k] = bnew;
    };

    int k = 1;
    while (k < n) {
        if (k > kmax) {
            kmax = k;
            for (int j = 0; j <= k; ++j) {
                mpz_class u = dot(B[k], B[j]);
                for (int i = 0; i < j; ++i) u = (d[i + 1] * u - lam[k][i] * lam[j][i]) / d[i];
                if (j < k) {
                    lam[k][j] = u;
                } else {
                    d[k + 1] = u;
                    if (d[k + 1] == 0) throw UsageError("lll: dependent rows");
                }
            }
        }
        for (;;) {
            red(k, k - 1);
            // Lovasz: swap while den*(d[k+1]d[k-1] + lam^2) < num*d[k]^2.
            if (delta_den * (d[k + 1] * d[k - 1] + lam[k][k - 1] * lam[k][k - 1]) <
                delta_num * d[k] * d[k]) {
                swap_step(k);
                k = std::max(1, k - 1);
            } else {
                break;
            }
        }
        for (int l = k - 2; l >= 0; --l) red(k, l);
        ++k;
    }
    return out;
}

mpz_class determinant(const LatticeBasis& basis) {
    const int n = static_cast<int>(basis.dim());
    if (n == 0) return 1;
    if (basis.cols() != static_cast<std::size_t>(n)) {
        throw UsageError("determinant: basis must be square");
    }
    // Bareiss fraction-free elimination.
    std::vector<Row> m = basis.rows;
    mpz_class prev = 1;
    int sign = 1;
    for (int i = 0; i < n - 1; ++i) {
        if (m[i][i] == 0) {
            int piv = -1;
            for (int r = i + 1; r < n; ++r) {
                if (m[r][i] != 0) {
                    piv = r;
                    break;
                }
            }
            if (piv < 0) return 0;
            std::swap(m[i], m[piv]);
            sign = -sign;
        }
        for (int r = i + 1; r < n; ++r) {
            for (int c = i + 1; c < n; ++c) {
                m[r][c] = (m[r][c] * m[i][i] - m[r][i] * m[i][c]) / prev;
            }
            m[r][i] = 0;
        }
        prev = m[i][i];
    }
    return sign * m[n - 1][n - 1];
}

namespace {

// Exact rational Gram-Schmidt for the test-facing predicates.
struct RationalGS {
    std::vector<std::vector<mpq_class>> mu;     // mu[i][j], j < i
    std::vector<mpq_class> bstar_norm;          // |b*_i|^2

    explicit RationalGS(const LatticeBasis& basis) {
        const int n = static_cast<int>(basis.dim());
        const int m = static_cast<int>(basis.cols());
        std::vector<std::vector<mpq_class>> bstar(n, std::vector<mpq_class>(m));
        mu.assign(n, {});
        bstar_norm.assign(n, 0);
        for (int i = 0; i < n; ++i) {
            mu[i].assign(i, 0);
            for (int c = 0; c < m; ++c) bstar[i][c] = mpq_class(basis.rows[i][c]);
            for (int j = 0; j < i; ++j) {
                mpq_class num = 0;
                for (int c = 0; c < m; ++c) num += mpq_class(basis.rows[i][c]) * bstar[j][c];
                mu[i][j] = bstar_norm[j] != 0 ? num / bstar_norm[j] : mpq_class(0);
                for (int c = 0; c < m; ++c) bstar[i][c] -= mu[i][j] * bstar[j][c];
            }
            mpq_class nn = 0;
            for (int c = 0; c < m; ++c) nn += bstar[i][c] * bstar[i][c];
            bstar_norm[i] = nn;
        }
    }
};

}  // namespace

bool is_size_reduced(const LatticeBasis& basis) {
    RationalGS gs(basis);
    for (std::size_t i = 0; i < basis.dim(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (2 * abs(gs.mu[i][j]) > 1) return false;
        }
    }
    return true;
}

bool satisfies_lovasz(const LatticeBasis& basis, double delta) {
    mpq_class delta_q(static_cast<long>(std::llround(delta * 1000000.0)), 1000000L);
    delta_q.canonicalize();
    RationalGS gs(basis);
    for (std::size_t k = 1; k < basis.dim(); ++k) {
        mpq_class lhs = gs.bstar_norm[k] + gs.mu[k][k - 1] * gs.mu[k][k - 1] * gs.bstar_norm[k - 1];
        if (lhs < delta_q * gs.bstar_norm[k - 1]) return false;
    }
    return true;
}

}  // namespace aexns::lll
