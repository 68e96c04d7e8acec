#pragma once
// Lattice basis reduction with exact integer arithmetic (de Weger's
// all-integer LLL; no floating-point Gram-Schmidt anywhere).

#include <gmpxx.h>

#include <vector>

#include "aexns/common.hpp"

namespace aexns::lll {

using Row = std::vector<mpz_class>;

struct LatticeBasis {
    std::vector<Row> rows;

    std::size_t dim() const { return rows.size(); }
    std::size_t cols() const { return rows.empty() ? 0 : rows[0].size(); }
};

// [OP] lll: size-reduced, Lovasz-satisfying basis spanning the same lattice.
// delta in (0.25, 1], default 0.99; it is applied as an exact rational
// round(delta * 10^6) / 10^6. Throws on linearly dependent rows.
LatticeBasis reduce(const LatticeBasis& basis, double delta = 0.99);

// Exact determinant via fraction-free (Bareiss) elimination; square bases.
mpz_class determinant(const LatticeBasis& basis);

// Exact Gram-Schmidt checks used by tests: size reduction |mu_ij| <= 1/2 and
// the Lovasz condition at the given delta.
bool is_size_reduced(const LatticeBasis& basis);
bool satisfies_lovasz(const LatticeBasis& basis, double delta);

mpz_class norm_sq(const Row& row);

}  // namespace aexns::lll
