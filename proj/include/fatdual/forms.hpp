#pragma once

#include <numeric>
#include <vector>

#include "fatdual/fields.hpp"
#include "fatdual/quiver.hpp"

namespace fatdual {

/// Dimension vector: one non-negative integer per vertex.
using DimVector = std::vector<long long>;

inline void check_dimvector(const Quiver& q, const DimVector& d) {
  if ((int)d.size() != q.vertex_count)
    throw DomainError("dim mismatch", "dimension vector length != vertex count");
  for (auto v : d)
    if (v < 0) throw DomainError("negative dim", "dimension vector must be >= 0");
}

/// Integer matrix of the Euler/Tits bilinear form; convention
/// E[i][j] = delta_ij - #arrows(i -> j), evaluated as d^T E e.
struct FormMatrix {
  int n = 0;
  std::vector<std::vector<BigInt>> entries;

  static FormMatrix identity_like(int n) {
    FormMatrix f;
    f.n = n;
    f.entries.assign(n, std::vector<BigInt>(n, 0));
    for (int i = 0; i < n; ++i) f.entries[i][i] = 1;
    return f;
  }
};

inline FormMatrix quiver_form(const Quiver& q) {
  FormMatrix f = FormMatrix::identity_like(q.vertex_count);
  for (auto [s, t] : q.arrows) f.entries[s][t] -= 1;
  return f;
}

inline BigInt bilinear(const FormMatrix& f, const DimVector& d, const DimVector& e) {
  FATDUAL_CHECK((int)d.size() == f.n && (int)e.size() == f.n,
                "bilinear form dimension mismatch");
  BigInt total = 0;
  for (int i = 0; i < f.n; ++i)
    for (int j = 0; j < f.n; ++j) total += BigInt(d[i]) * f.entries[i][j] * e[j];
  return total;
}

inline BigInt tits_quadratic(const FormMatrix& f, const DimVector& d) {
  return bilinear(f, d, d);
}

/// Bipartite Tits form of a bimodule: the three dimensions are computed by
/// the caller (module bimod); this is the signed sum itself.
inline BigInt bimodule_tits(const BigInt& hom_p1, const BigInt& hom_p2,
                            const BigInt& w_space) {
  return hom_p1 + hom_p2 - w_space;
}

/// Euler form of a module of projective dimension <= 1.
inline BigInt euler_form_module(const BigInt& hom_dim, const BigInt& ext1_dim) {
  return hom_dim - ext1_dim;
}

// ---------------------------------------------------------------------------
// Smith normal form over Z (small matrices), used for the integer kernel.
// ---------------------------------------------------------------------------

struct SmithResult {
  std::vector<std::vector<BigInt>> d; // U A V = D, diagonal
  std::vector<std::vector<BigInt>> u;
  std::vector<std::vector<BigInt>> v;
};

inline SmithResult smith_normal_form(std::vector<std::vector<BigInt>> a) {
  int m = (int)a.size(), n = (int)a[0].size();
  auto ident = [](int sz) {
    std::vector<std::vector<BigInt>> r(sz, std::vector<BigInt>(sz, 0));
    for (int i = 0; i < sz; ++i) r[i][i] = 1;
    return r;
  };
  auto u = ident(m), v = ident(n);

  auto swap_rows = [&](int i, int j) {
    std::swap(a[i], a[j]);
    std::swap(u[i], u[j]);
  };
  auto swap_cols = [&](int i, int j) {
    for (auto& row : a) std::swap(row[i], row[j]);
    for (auto& row : v) std::swap(row[i], row[j]);
  };
  auto add_row = [&](int dst, int src, const BigInt& f) {
    for (int c = 0; c < n; ++c) a[dst][c] += f * a[src][c];
    for (int c = 0; c < m; ++c) u[dst][c] += f * u[src][c];
  };
  auto add_col = [&](int dst, int src, const BigInt& f) {
    for (int r = 0; r < m; ++r) a[r][dst] += f * a[r][src];
    for (int r = 0; r < n; ++r) v[r][dst] += f * v[r][src];
  };

  int t = 0;
  while (t < m && t < n) {
    // find a nonzero pivot with minimal absolute value
    int pi = -1, pj = -1;
    BigInt best = 0;
    for (int i = t; i < m; ++i)
      for (int j = t; j < n; ++j)
        if (a[i][j] != 0 && (pi < 0 || abs(a[i][j]) < best)) {
          best = abs(a[i][j]);
          pi = i;
          pj = j;
        }
    if (pi < 0) break;
    swap_rows(t, pi);
    swap_cols(t, pj);
    bool clean = true;
    for (int i = t + 1; i < m; ++i)
      if (a[i][t] != 0) {
        add_row(i, t, -(a[i][t] / a[t][t]));
        if (a[i][t] != 0) clean = false;
      }
    for (int j = t + 1; j < n; ++j)
      if (a[t][j] != 0) {
        add_col(j, t, -(a[t][j] / a[t][t]));
        if (a[t][j] != 0) clean = false;
      }
    if (!clean) continue; // remainder became the new smaller pivot candidate
    // divisibility condition of the Smith chain
    bool divides_all = true;
    for (int i = t + 1; i < m && divides_all; ++i)
      for (int j = t + 1; j < n && divides_all; ++j)
        if (a[i][j] % a[t][t] != 0) {
          add_row(t, i, 1);
          divides_all = false;
        }
    if (!divides_all) continue;
    if (a[t][t] < 0) {
      for (int j = 0; j < n; ++j) a[t][j] = -a[t][j];
      for (int j = 0; j < m; ++j) u[t][j] = -u[t][j];
    }
    ++t;
  }
  return SmithResult{a, u, v};
}

/// Basis of the integer kernel of A, columns of the returned matrix.
inline std::vector<std::vector<BigInt>> integer_kernel(
    const std::vector<std::vector<BigInt>>& a) {
  int m = (int)a.size(), n = (int)a[0].size();
  auto s = smith_normal_form(a);
  std::vector<std::vector<BigInt>> basis;
  for (int j = 0; j < n; ++j) {
    bool zero_col = j >= m || s.d[j][j] == 0;
    if (!zero_col) continue;
    std::vector<BigInt> col(n);
    for (int r = 0; r < n; ++r) col[r] = s.v[r][j];
    basis.push_back(col);
  }
  return basis;
}

/// Null root of a Euclidean quiver: the primitive positive integer kernel
/// vector of the symmetrized form, normalized so Q(delta) = 0.
inline DimVector delta(const Quiver& q) {
  auto cls = classify(q);
  if (cls.kind != GraphKind::Euclidean)
    throw DomainError("no null root", "delta is defined for Euclidean quivers only");
  int n = q.vertex_count;
  auto f = quiver_form(q);
  std::vector<std::vector<BigInt>> sym(n, std::vector<BigInt>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) sym[i][j] = f.entries[i][j] + f.entries[j][i];
  auto ker = integer_kernel(sym);
  FATDUAL_CHECK(ker.size() == 1, "Euclidean radical must be one-dimensional");
  auto v = ker[0];
  BigInt g = 0;
  for (const auto& x : v) g = gcd(g, x);
  FATDUAL_CHECK(g != 0, "kernel vector is zero");
  for (auto& x : v) x /= g;
  bool negative = false, positive = false;
  for (const auto& x : v) {
    if (x < 0) negative = true;
    if (x > 0) positive = true;
  }
  FATDUAL_CHECK(negative != positive, "null root must have constant sign");
  if (negative)
    for (auto& x : v) x = -x;
  DimVector d(n);
  for (int i = 0; i < n; ++i) {
    FATDUAL_CHECK(v[i] > 0, "null root must be sincere");
    d[i] = (long long)v[i];
  }
  FATDUAL_CHECK(tits_quadratic(f, d) == 0, "Q(delta) != 0");
  return d;
}

} // namespace fatdual
