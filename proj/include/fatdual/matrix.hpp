#pragma once

#include <optional>
#include <vector>

#include "fatdual/error.hpp"
#include "fatdual/fields.hpp"

namespace fatdual {

/// Dense matrix over an exact field.  Sizes here are desk scale (a few
/// hundred at most), so plain Gaussian elimination is the right tool.
template <class K>
struct Mat {
  using E = typename K::Elem;

  K k{};
  int m = 0, n = 0;
  std::vector<E> a;

  Mat() = default;
  Mat(K field, int rows, int cols)
      : k(field), m(rows), n(cols), a((size_t)rows * cols, field.zero()) {}

  E& at(int i, int j) { return a[(size_t)i * n + j]; }
  const E& at(int i, int j) const { return a[(size_t)i * n + j]; }

  static Mat identity(K field, int sz) {
    Mat r(field, sz, sz);
    for (int i = 0; i < sz; ++i) r.at(i, i) = field.one();
    return r;
  }

  static Mat zero(K field, int rows, int cols) { return Mat(field, rows, cols); }

  bool is_zero() const {
    for (const auto& x : a)
      if (!k.is_zero(x)) return false;
    return true;
  }

  bool operator==(const Mat& o) const {
    if (m != o.m || n != o.n) return false;
    for (size_t i = 0; i < a.size(); ++i)
      if (!k.eq(a[i], o.a[i])) return false;
    return true;
  }

  Mat transpose() const {
    Mat r(k, n, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) r.at(j, i) = at(i, j);
    return r;
  }

  Mat operator*(const Mat& o) const {
    FATDUAL_CHECK(n == o.m, "matrix product shape mismatch");
    Mat r(k, m, o.n);
    for (int i = 0; i < m; ++i)
      for (int l = 0; l < n; ++l) {
        const E& x = at(i, l);
        if (k.is_zero(x)) continue;
        for (int j = 0; j < o.n; ++j)
          r.at(i, j) = k.add(r.at(i, j), k.mul(x, o.at(l, j)));
      }
    return r;
  }

  Mat operator+(const Mat& o) const {
    FATDUAL_CHECK(m == o.m && n == o.n, "matrix sum shape mismatch");
    Mat r(k, m, n);
    for (size_t i = 0; i < a.size(); ++i) r.a[i] = k.add(a[i], o.a[i]);
    return r;
  }

  Mat operator-(const Mat& o) const {
    FATDUAL_CHECK(m == o.m && n == o.n, "matrix difference shape mismatch");
    Mat r(k, m, n);
    for (size_t i = 0; i < a.size(); ++i) r.a[i] = k.sub(a[i], o.a[i]);
    return r;
  }

  Mat scaled(const E& c) const {
    Mat r(k, m, n);
    for (size_t i = 0; i < a.size(); ++i) r.a[i] = k.mul(c, a[i]);
    return r;
  }

  std::vector<E> apply(const std::vector<E>& v) const {
    FATDUAL_CHECK((int)v.size() == n, "matrix apply shape mismatch");
    std::vector<E> r(m, k.zero());
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        r[i] = k.add(r[i], k.mul(at(i, j), v[j]));
    return r;
  }

  Mat block(int i0, int j0, int rows, int cols) const {
    Mat r(k, rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) r.at(i, j) = at(i0 + i, j0 + j);
    return r;
  }

  void set_block(int i0, int j0, const Mat& b) {
    for (int i = 0; i < b.m; ++i)
      for (int j = 0; j < b.n; ++j) at(i0 + i, j0 + j) = b.at(i, j);
  }
};

template <class K>
Mat<K> hstack(const Mat<K>& l, const Mat<K>& r) {
  FATDUAL_CHECK(l.m == r.m, "hstack row mismatch");
  Mat<K> out(l.k, l.m, l.n + r.n);
  out.set_block(0, 0, l);
  out.set_block(0, l.n, r);
  return out;
}

template <class K>
Mat<K> vstack(const Mat<K>& t, const Mat<K>& b) {
  FATDUAL_CHECK(t.n == b.n, "vstack column mismatch");
  Mat<K> out(t.k, t.m + b.m, t.n);
  out.set_block(0, 0, t);
  out.set_block(t.m, 0, b);
  return out;
}

template <class K>
Mat<K> block_diag(const Mat<K>& a, const Mat<K>& b) {
  Mat<K> out(a.k, a.m + b.m, a.n + b.n);
  out.set_block(0, 0, a);
  out.set_block(a.m, a.n, b);
  return out;
}

/// In-place reduced row echelon form; returns pivot columns.
template <class K>
std::vector<int> rref(Mat<K>& M) {
  const K& k = M.k;
  std::vector<int> pivots;
  int row = 0;
  for (int col = 0; col < M.n && row < M.m; ++col) {
    int piv = -1;
    for (int i = row; i < M.m; ++i)
      if (!k.is_zero(M.at(i, col))) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    if (piv != row)
      for (int j = 0; j < M.n; ++j) std::swap(M.at(piv, j), M.at(row, j));
    auto d = k.inv(M.at(row, col));
    for (int j = col; j < M.n; ++j) M.at(row, j) = k.mul(d, M.at(row, j));
    for (int i = 0; i < M.m; ++i) {
      if (i == row || k.is_zero(M.at(i, col))) continue;
      auto f = M.at(i, col);
      for (int j = col; j < M.n; ++j)
        M.at(i, j) = k.sub(M.at(i, j), k.mul(f, M.at(row, j)));
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

template <class K>
int rank(Mat<K> M) {
  return (int)rref(M).size();
}

/// Basis of the right kernel, returned as columns of a single matrix.
template <class K>
Mat<K> kernel(const Mat<K>& M) {
  const K& k = M.k;
  Mat<K> R = M;
  auto pivots = rref(R);
  std::vector<bool> is_pivot(M.n, false);
  for (int c : pivots) is_pivot[c] = true;
  int free_count = M.n - (int)pivots.size();
  Mat<K> ker(k, M.n, free_count);
  int idx = 0;
  for (int c = 0; c < M.n; ++c) {
    if (is_pivot[c]) continue;
    ker.at(c, idx) = k.one();
    for (int r = 0; r < (int)pivots.size(); ++r)
      ker.at(pivots[r], idx) = k.neg(R.at(r, c));
    ++idx;
  }
  return ker;
}

/// One solution of M x = b, if any.
template <class K>
std::optional<std::vector<typename K::Elem>> solve(const Mat<K>& M,
                                                   const std::vector<typename K::Elem>& b) {
  const K& k = M.k;
  Mat<K> aug(k, M.m, M.n + 1);
  aug.set_block(0, 0, M);
  for (int i = 0; i < M.m; ++i) aug.at(i, M.n) = b[i];
  auto pivots = rref(aug);
  if (!pivots.empty() && pivots.back() == M.n) return std::nullopt;
  std::vector<typename K::Elem> x(M.n, k.zero());
  for (int r = 0; r < (int)pivots.size(); ++r) x[pivots[r]] = aug.at(r, M.n);
  return x;
}

template <class K>
std::optional<Mat<K>> inverse(const Mat<K>& M) {
  FATDUAL_CHECK(M.m == M.n, "inverse of non-square matrix");
  const K& k = M.k;
  Mat<K> aug = hstack(M, Mat<K>::identity(k, M.n));
  auto pivots = rref(aug);
  if ((int)pivots.size() < M.n || (M.n > 0 && pivots[M.n - 1] >= M.n))
    return std::nullopt;
  return aug.block(0, M.n, M.n, M.n);
}

template <class K>
typename K::Elem det(Mat<K> M) {
  FATDUAL_CHECK(M.m == M.n, "determinant of non-square matrix");
  const K& k = M.k;
  auto d = k.one();
  for (int col = 0; col < M.n; ++col) {
    int piv = -1;
    for (int i = col; i < M.m; ++i)
      if (!k.is_zero(M.at(i, col))) {
        piv = i;
        break;
      }
    if (piv < 0) return k.zero();
    if (piv != col) {
      for (int j = 0; j < M.n; ++j) std::swap(M.at(piv, j), M.at(col, j));
      d = k.neg(d);
    }
    d = k.mul(d, M.at(col, col));
    auto c = k.inv(M.at(col, col));
    for (int i = col + 1; i < M.m; ++i) {
      if (k.is_zero(M.at(i, col))) continue;
      auto f = k.mul(c, M.at(i, col));
      for (int j = col; j < M.n; ++j)
        M.at(i, j) = k.sub(M.at(i, j), k.mul(f, M.at(col, j)));
    }
  }
  return d;
}

/// Characteristic polynomial, monic, low degree first; Faddeev-LeVerrier.
/// Needs invertible 1..n in the field (char 0 or p > n, which holds for the
/// sampling primes).
template <class K>
std::vector<typename K::Elem> charpoly(const Mat<K>& A) {
  FATDUAL_CHECK(A.m == A.n, "charpoly of non-square matrix");
  const K& k = A.k;
  int n = A.n;
  std::vector<typename K::Elem> c(n + 1, k.zero());
  c[n] = k.one();
  Mat<K> Mi = Mat<K>::zero(k, n, n);
  for (int i = 1; i <= n; ++i) {
    for (int d = 0; d < n; ++d) Mi.at(d, d) = k.add(Mi.at(d, d), c[n - i + 1]);
    Mi = A * Mi;
    auto tr = k.zero();
    for (int d = 0; d < n; ++d) tr = k.add(tr, Mi.at(d, d));
    auto inv_i = k.inv(k.from_int(i));
    c[n - i] = k.neg(k.mul(tr, inv_i));
  }
  return c; // c[0] + c[1] x + ... + c[n] x^n = det(xI - A)
}

/// Column span test: does v lie in the column space of B?  Returns the
/// coordinate vector if so.
template <class K>
std::optional<std::vector<typename K::Elem>> in_span(const Mat<K>& B,
                                                     const std::vector<typename K::Elem>& v) {
  return solve(B, v);
}

} // namespace fatdual
