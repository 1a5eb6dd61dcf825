#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "fatdual/forms.hpp"
#include "fatdual/scalgebra.hpp"

namespace fatdual {

// ---------------------------------------------------------------------------
// Conventions (fixed once, used everywhere):
//   * A path/morphism basis element x of a basic algebra has grade
//     (tail, head); ring products compose x*y = "y then x", so
//     e_head x e_tail = x and Hom(A e_j, A e_k) = e_j A e_k = span of
//     elements graded (tail=k, head=j), acting by right multiplication.
//   * A bimodule element of shape (p1, p2) is an A1-linear map
//     w : W (x)_{A2} P2 -> P1 stored as a dense matrix; rows are graded by
//     the A1 vertex, columns by (A2 vertex j, copy, W-basis element of
//     W e_j), and entries are allowed only where the row grade equals the
//     column's left grade.
//   * A morphism w -> w' is a pair (alpha1, alpha2) with
//     alpha1 . w = w' . (1 (x) alpha2); alpha2 is kept in Yoneda
//     coordinates (one multiplicity matrix per algebra basis element).
// ---------------------------------------------------------------------------

/// Bipartite triangular context A = A1[W]A2 with A1 basic semisimple
/// (product of copies of the ground field; a full matrix algebra enters via
/// its basic reduction).  W carries a doubly graded basis.
template <class K>
struct TriangularAlgebra {
  using E = typename K::Elem;

  K k{};
  int nv1 = 1;             // vertices of A1
  BasicAlgebra<K> a2;      // basic, directed
  int wdim = 0;
  std::vector<int> lgrade; // A1 vertex per W basis element
  std::vector<int> rgrade; // A2 vertex per W basis element
  std::vector<Mat<K>> right_act; // per a2 basis element m: w -> w * m

  std::vector<int> we_basis(int j) const { // W e_j basis indices
    std::vector<int> out;
    for (int b = 0; b < wdim; ++b)
      if (rgrade[b] == j) out.push_back(b);
    return out;
  }

  void validate() const {
    FATDUAL_CHECK((int)lgrade.size() == wdim && (int)rgrade.size() == wdim,
                  "W grading sizes");
    FATDUAL_CHECK((int)right_act.size() == a2.dim(), "one action per a2 basis");
    for (int m = 0; m < a2.dim(); ++m) {
      auto [t, h] = a2.grade[m];
      for (int b = 0; b < wdim; ++b)
        for (int bb = 0; bb < wdim; ++bb) {
          if (k.is_zero(right_act[m].at(bb, b))) continue;
          FATDUAL_CHECK(rgrade[b] == h && rgrade[bb] == t,
                        "right action violates W grading");
          FATDUAL_CHECK(lgrade[bb] == lgrade[b],
                        "right action must preserve the left grading");
        }
    }
    // sampled bimodule axiom: (w*x)*y = w*(x*y)
    Rng rng(0xB1310D);
    for (int trial = 0; trial < 6; ++trial) {
      std::vector<E> x(a2.dim()), y(a2.dim());
      for (int i = 0; i < a2.dim(); ++i) {
        x[i] = k.from_int((long long)rng.below(997));
        y[i] = k.from_int((long long)rng.below(997));
      }
      auto xy = a2.mul(x, y);
      Mat<K> rx(k, wdim, wdim), ry(k, wdim, wdim), rxy(k, wdim, wdim);
      for (int i = 0; i < a2.dim(); ++i) {
        rx = rx + right_act[i].scaled(x[i]);
        ry = ry + right_act[i].scaled(y[i]);
        rxy = rxy + right_act[i].scaled(xy[i]);
      }
      FATDUAL_CHECK(ry * rx == rxy, "right action is not associative");
    }
  }
};

/// Projective shape: multiplicities over A1 and A2 vertices.
struct Shape {
  std::vector<int> p1, p2;

  bool operator==(const Shape& o) const { return p1 == o.p1 && p2 == o.p2; }
  bool operator<(const Shape& o) const {
    return std::make_pair(p1, p2) < std::make_pair(o.p1, o.p2);
  }
  long long total() const {
    long long s = 0;
    for (int v : p1) s += v;
    for (int v : p2) s += v;
    return s;
  }
};

namespace layout {

struct Blocked {
  std::vector<int> offset; // per block
  int total = 0;
};

inline Blocked blocks(const std::vector<int>& sizes) {
  Blocked b;
  int off = 0;
  for (int s : sizes) {
    b.offset.push_back(off);
    off += s;
  }
  b.total = off;
  return b;
}

} // namespace layout

/// Column bookkeeping of the space W (x)_{A2} P2.
template <class K>
struct WP2Layout {
  struct Col {
    int j, copy, wb; // A2 vertex, copy index, W basis element
  };
  std::vector<Col> cols;
  std::vector<int> lgrade_of_col;
  // offset of block (j, copy)
  std::vector<std::vector<int>> block_offset;

  static WP2Layout make(const TriangularAlgebra<K>& t, const std::vector<int>& p2) {
    WP2Layout out;
    out.block_offset.assign(t.a2.nv, {});
    for (int j = 0; j < t.a2.nv; ++j) {
      auto we = t.we_basis(j);
      for (int s = 0; s < p2[j]; ++s) {
        out.block_offset[j].push_back((int)out.cols.size());
        for (int b : we) {
          out.cols.push_back({j, s, b});
          out.lgrade_of_col.push_back(t.lgrade[b]);
        }
      }
    }
    return out;
  }
  int total() const { return (int)cols.size(); }
};

/// Row bookkeeping of P1 (A1 basic semisimple: one dimension per copy).
inline layout::Blocked p1_layout(const std::vector<int>& p1) {
  return layout::blocks(p1);
}

/// Bimodule element: shape plus the explicit matrix of
/// w : W (x) P2 -> P1.
template <class K>
struct BimoduleElement {
  Shape shape;
  Mat<K> mat; // p1 total x wp2 total

  bool operator==(const BimoduleElement& o) const {
    return shape == o.shape && mat == o.mat;
  }
};

template <class K>
int a1_grade_of_row(const TriangularAlgebra<K>& t, const std::vector<int>& p1, int row) {
  int a = 0, off = 0;
  for (; a < t.nv1; ++a) {
    if (row < off + p1[a]) return a;
    off += p1[a];
  }
  throw InternalError("row out of range");
}

template <class K>
BimoduleElement<K> zero_element(const TriangularAlgebra<K>& t, const Shape& sh) {
  auto wl = WP2Layout<K>::make(t, sh.p2);
  auto pl = p1_layout(sh.p1);
  return {sh, Mat<K>(t.k, pl.total, wl.total())};
}

/// Entries sampled uniformly (F_p) or from a large integer box (Q), in the
/// allowed (grade matching) cells only.
template <class K>
BimoduleElement<K> random_element(const TriangularAlgebra<K>& t, const Shape& sh,
                                  Rng& rng) {
  auto e = zero_element(t, sh);
  auto wl = WP2Layout<K>::make(t, sh.p2);
  for (int r = 0; r < e.mat.m; ++r) {
    int g = a1_grade_of_row(t, sh.p1, r);
    for (int c = 0; c < e.mat.n; ++c)
      if (wl.lgrade_of_col[c] == g) e.mat.at(r, c) = t.k.sample(rng);
  }
  return e;
}

template <class K>
void check_element(const TriangularAlgebra<K>& t, const BimoduleElement<K>& e) {
  auto wl = WP2Layout<K>::make(t, e.shape.p2);
  auto pl = p1_layout(e.shape.p1);
  FATDUAL_CHECK(e.mat.m == pl.total && e.mat.n == wl.total(),
                "element matrix shape mismatch");
  for (int r = 0; r < e.mat.m; ++r) {
    int g = a1_grade_of_row(t, e.shape.p1, r);
    for (int c = 0; c < e.mat.n; ++c)
      if (wl.lgrade_of_col[c] != g)
        FATDUAL_CHECK(t.k.is_zero(e.mat.at(r, c)),
                      "entry outside the A1-linear block structure");
  }
}

// ---------------------------------------------------------------------------
// A2-module maps in Yoneda coordinates
// ---------------------------------------------------------------------------

/// A2-linear map P2(src) -> P2(dst): one multiplicity matrix per algebra
/// basis element m (graded tail->head), of size dst[tail(m)] x src[head(m)].
template <class K>
struct A2Map {
  using E = typename K::Elem;

  std::vector<int> src, dst;    // p2 multiplicities
  std::vector<Mat<K>> coef;     // per a2 basis element

  static A2Map zero(const TriangularAlgebra<K>& t, const std::vector<int>& src,
                    const std::vector<int>& dst) {
    A2Map f;
    f.src = src;
    f.dst = dst;
    for (int m = 0; m < t.a2.dim(); ++m) {
      auto [tl, hd] = t.a2.grade[m];
      f.coef.push_back(Mat<K>(t.k, dst[tl], src[hd]));
    }
    return f;
  }

  static A2Map identity(const TriangularAlgebra<K>& t, const std::vector<int>& p2) {
    A2Map f = zero(t, p2, p2);
    for (int v = 0; v < t.a2.nv; ++v)
      f.coef[v] = Mat<K>::identity(t.k, p2[v]); // basis elements 0..nv-1 are e_v
    return f;
  }

  A2Map scaled(const K& k, const E& c) const {
    A2Map r = *this;
    for (auto& m : r.coef) m = m.scaled(c);
    return r;
  }

  A2Map plus(const A2Map& o) const {
    A2Map r = *this;
    for (size_t i = 0; i < r.coef.size(); ++i) r.coef[i] = r.coef[i] + o.coef[i];
    return r;
  }

  bool equals(const A2Map& o) const {
    if (src != o.src || dst != o.dst) return false;
    for (size_t i = 0; i < coef.size(); ++i)
      if (!(coef[i] == o.coef[i])) return false;
    return true;
  }
};

/// g after f.
template <class K>
A2Map<K> compose(const TriangularAlgebra<K>& t, const A2Map<K>& g, const A2Map<K>& f) {
  FATDUAL_CHECK(f.dst == g.src, "A2Map composition shape mismatch");
  const K& k = t.k;
  A2Map<K> r = A2Map<K>::zero(t, f.src, g.dst);
  int n = t.a2.dim();
  for (int m1 = 0; m1 < n; ++m1) {
    if (f.coef[m1].is_zero()) continue;
    for (int m2 = 0; m2 < n; ++m2) {
      if (g.coef[m2].is_zero()) continue;
      // composite coordinate m1 * m2 (ring product), valid when
      // tail(m1) == head(m2)
      if (t.a2.grade[m1].first != t.a2.grade[m2].second) continue;
      const auto& prod = t.a2.mult[m1][m2];
      Mat<K> mm = g.coef[m2] * f.coef[m1];
      for (int tt = 0; tt < n; ++tt) {
        if (k.is_zero(prod[tt])) continue;
        r.coef[tt] = r.coef[tt] + mm.scaled(prod[tt]);
      }
    }
  }
  return r;
}

/// Matrix of 1 (x) f on the W-tensor column spaces.
template <class K>
Mat<K> tensor_matrix(const TriangularAlgebra<K>& t, const A2Map<K>& f) {
  const K& k = t.k;
  auto ls = WP2Layout<K>::make(t, f.src);
  auto ld = WP2Layout<K>::make(t, f.dst);
  Mat<K> out(k, ld.total(), ls.total());
  for (int m = 0; m < t.a2.dim(); ++m) {
    if (f.coef[m].is_zero()) continue;
    auto [tl, hd] = t.a2.grade[m];
    auto src_basis = t.we_basis(hd);
    auto dst_basis = t.we_basis(tl);
    for (int s = 0; s < f.src[hd]; ++s)
      for (int d = 0; d < f.dst[tl]; ++d) {
        const auto c = f.coef[m].at(d, s);
        if (k.is_zero(c)) continue;
        int so = ls.block_offset[hd][s];
        int dof = ld.block_offset[tl][d];
        for (size_t bi = 0; bi < src_basis.size(); ++bi)
          for (size_t bj = 0; bj < dst_basis.size(); ++bj) {
            const auto& ra = t.right_act[m].at(dst_basis[bj], src_basis[bi]);
            if (k.is_zero(ra)) continue;
            out.at(dof + (int)bj, so + (int)bi) =
                k.add(out.at(dof + (int)bj, so + (int)bi), k.mul(c, ra));
          }
      }
  }
  return out;
}

/// Bases of the underlying module spaces of P2: per vertex j, the algebra
/// basis elements with tail j (a basis of A2 e_j).
template <class K>
std::vector<std::vector<int>> p2_module_bases(const TriangularAlgebra<K>& t) {
  std::vector<std::vector<int>> out(t.a2.nv);
  for (int i = 0; i < t.a2.dim(); ++i) out[t.a2.grade[i].first].push_back(i);
  return out;
}

template <class K>
layout::Blocked p2_module_layout(const TriangularAlgebra<K>& t,
                                 const std::vector<int>& p2) {
  auto bases = p2_module_bases(t);
  std::vector<int> sizes;
  for (int j = 0; j < t.a2.nv; ++j)
    for (int s = 0; s < p2[j]; ++s) sizes.push_back((int)bases[j].size());
  return layout::blocks(sizes);
}

/// Matrix of f on the underlying module spaces (faithful; used for rank and
/// invertibility checks).
template <class K>
Mat<K> module_matrix(const TriangularAlgebra<K>& t, const A2Map<K>& f) {
  const K& k = t.k;
  auto bases = p2_module_bases(t);
  // block index helpers
  auto blocked = [&](const std::vector<int>& p2) {
    std::vector<std::pair<int, int>> blocks; // (vertex, copy)
    for (int j = 0; j < t.a2.nv; ++j)
      for (int s = 0; s < p2[j]; ++s) blocks.push_back({j, s});
    return blocks;
  };
  auto sb = blocked(f.src), db = blocked(f.dst);
  auto sl = p2_module_layout(t, f.src), dl = p2_module_layout(t, f.dst);
  Mat<K> out(k, dl.total, sl.total);
  for (int m = 0; m < t.a2.dim(); ++m) {
    if (f.coef[m].is_zero()) continue;
    auto [tl, hd] = t.a2.grade[m]; // map A2 e_hd -> A2 e_tl, x -> x*m
    for (size_t si = 0; si < sb.size(); ++si) {
      if (sb[si].first != hd) continue;
      for (size_t di = 0; di < db.size(); ++di) {
        if (db[di].first != tl) continue;
        const auto c = f.coef[m].at(db[di].second, sb[si].second);
        if (k.is_zero(c)) continue;
        // x in A2 e_hd -> x*m in A2 e_tl
        for (size_t xi = 0; xi < bases[hd].size(); ++xi) {
          int x = bases[hd][xi];
          const auto& prod = t.a2.mult[x][m]; // x*m (ring: "m then x")
          for (size_t yi = 0; yi < bases[tl].size(); ++yi) {
            int y = bases[tl][yi];
            if (k.is_zero(prod[y])) continue;
            out.at(dl.offset[di] + (int)yi, sl.offset[si] + (int)xi) =
                k.add(out.at(dl.offset[di] + (int)yi, sl.offset[si] + (int)xi),
                      k.mul(c, prod[y]));
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Morphisms of bimodule elements
// ---------------------------------------------------------------------------

template <class K>
struct HomPair {
  Mat<K> alpha1; // P1(dst) x P1(src), block structure by A1 vertex
  A2Map<K> alpha2;
};

template <class K>
HomPair<K> hom_identity(const TriangularAlgebra<K>& t, const Shape& sh) {
  HomPair<K> h;
  h.alpha1 = Mat<K>::identity(t.k, p1_layout(sh.p1).total);
  h.alpha2 = A2Map<K>::identity(t, sh.p2);
  return h;
}

template <class K>
HomPair<K> hom_compose(const TriangularAlgebra<K>& t, const HomPair<K>& g,
                       const HomPair<K>& f) {
  return {g.alpha1 * f.alpha1, compose(t, g.alpha2, f.alpha2)};
}

template <class K>
HomPair<K> hom_add(const HomPair<K>& a, const HomPair<K>& b) {
  return {a.alpha1 + b.alpha1, a.alpha2.plus(b.alpha2)};
}

template <class K>
HomPair<K> hom_scaled(const TriangularAlgebra<K>& t, const HomPair<K>& a,
                      const typename K::Elem& c) {
  return {a.alpha1.scaled(c), a.alpha2.scaled(t.k, c)};
}

/// Basis of Hom_W(w, w'): all pairs with alpha1 . w = w' . (1 (x) alpha2),
/// solved as one exact linear system.
template <class K>
std::vector<HomPair<K>> hom_w(const TriangularAlgebra<K>& t,
                              const BimoduleElement<K>& w,
                              const BimoduleElement<K>& w2) {
  const K& k = t.k;
  auto wl_src = WP2Layout<K>::make(t, w.shape.p2);
  int p1s = p1_layout(w.shape.p1).total;
  int p1d = p1_layout(w2.shape.p1).total;

  // variables: alpha1 block entries, then alpha2 coefficient entries
  struct Var1 { int r, c; };
  std::vector<Var1> v1;
  {
    auto lo_s = p1_layout(w.shape.p1), lo_d = p1_layout(w2.shape.p1);
    for (int a = 0; a < t.nv1; ++a)
      for (int r = 0; r < w2.shape.p1[a]; ++r)
        for (int c = 0; c < w.shape.p1[a]; ++c)
          v1.push_back({lo_d.offset[a] + r, lo_s.offset[a] + c});
  }
  struct Var2 { int m, r, c; };
  std::vector<Var2> v2;
  for (int m = 0; m < t.a2.dim(); ++m) {
    auto [tl, hd] = t.a2.grade[m];
    for (int r = 0; r < w2.shape.p2[tl]; ++r)
      for (int c = 0; c < w.shape.p2[hd]; ++c) v2.push_back({m, r, c});
  }
  int nvars = (int)(v1.size() + v2.size());

  // per alpha2 variable, the tensor contribution is a sparse matrix; build
  // the equation alpha1 . w - w' . T(alpha2) = 0 row by row
  int ncols = wl_src.total();
  Mat<K> sys(k, p1d * ncols, nvars);
  // alpha1 part: (alpha1 . w)[r', c] involves alpha1[r', r] * w[r, c]
  for (int vi = 0; vi < (int)v1.size(); ++vi) {
    auto [rd, rs] = v1[vi];
    for (int c = 0; c < ncols; ++c) {
      const auto& wv = w.mat.at(rs, c);
      if (k.is_zero(wv)) continue;
      sys.at(rd * ncols + c, vi) = wv;
    }
  }
  // alpha2 part: -(w' . T_v)[r', c]
  auto wl_dst = WP2Layout<K>::make(t, w2.shape.p2);
  for (int vi = 0; vi < (int)v2.size(); ++vi) {
    auto [m, rr, cc] = v2[vi];
    auto [tl, hd] = t.a2.grade[m];
    auto src_basis = t.we_basis(hd);
    auto dst_basis = t.we_basis(tl);
    if (cc >= w.shape.p2[hd] || rr >= w2.shape.p2[tl]) continue;
    int so = wl_src.block_offset[hd][cc];
    int dof = wl_dst.block_offset[tl][rr];
    for (size_t bi = 0; bi < src_basis.size(); ++bi) {
      int c = so + (int)bi;
      for (size_t bj = 0; bj < dst_basis.size(); ++bj) {
        const auto& ra = t.right_act[m].at(dst_basis[bj], src_basis[bi]);
        if (k.is_zero(ra)) continue;
        int cprime = dof + (int)bj;
        for (int rp = 0; rp < p1d; ++rp) {
          const auto& wv = w2.mat.at(rp, cprime);
          if (k.is_zero(wv)) continue;
          sys.at(rp * ncols + c, (int)v1.size() + vi) =
              k.sub(sys.at(rp * ncols + c, (int)v1.size() + vi), k.mul(ra, wv));
        }
      }
    }
  }

  auto ker = kernel(sys);
  std::vector<HomPair<K>> basis;
  for (int col = 0; col < ker.n; ++col) {
    HomPair<K> h;
    h.alpha1 = Mat<K>(k, p1d, p1s);
    h.alpha2 = A2Map<K>::zero(t, w.shape.p2, w2.shape.p2);
    for (int vi = 0; vi < (int)v1.size(); ++vi)
      h.alpha1.at(v1[vi].r, v1[vi].c) = ker.at(vi, col);
    for (int vi = 0; vi < (int)v2.size(); ++vi)
      h.alpha2.coef[v2[vi].m].at(v2[vi].r, v2[vi].c) =
          ker.at((int)v1.size() + vi, col);
    basis.push_back(std::move(h));
  }
  return basis;
}

/// Check the intertwining identity exactly.
template <class K>
bool is_morphism(const TriangularAlgebra<K>& t, const BimoduleElement<K>& w,
                 const BimoduleElement<K>& w2, const HomPair<K>& h) {
  auto lhs = h.alpha1 * w.mat;
  auto rhs = w2.mat * tensor_matrix(t, h.alpha2);
  return lhs == rhs;
}

template <class K>
long long hom_dim(const TriangularAlgebra<K>& t, const BimoduleElement<K>& a,
                  const BimoduleElement<K>& b) {
  return (long long)hom_w(t, a, b).size();
}

// ---------------------------------------------------------------------------
// The bipartite Tits form of the context
// ---------------------------------------------------------------------------

template <class K>
long long w_space_dim(const TriangularAlgebra<K>& t, const std::vector<int>& p2,
                      const std::vector<int>& p1) {
  // dim Hom_{A1}(W (x) P2, P1) = sum_a #columns with lgrade a * p1[a]
  auto wl = WP2Layout<K>::make(t, p2);
  std::vector<long long> per(t.nv1, 0);
  for (int c = 0; c < wl.total(); ++c) ++per[wl.lgrade_of_col[c]];
  long long s = 0;
  for (int a = 0; a < t.nv1; ++a) s += per[a] * p1[a];
  return s;
}

template <class K>
long long hom_dim_a2(const TriangularAlgebra<K>& t, const std::vector<int>& p2,
                     const std::vector<int>& q2) {
  long long s = 0;
  for (int m = 0; m < t.a2.dim(); ++m) {
    auto [tl, hd] = t.a2.grade[m];
    s += (long long)p2[hd] * q2[tl];
  }
  return s;
}

/// <[P], [P']>_W = dim Hom(P1,P1') + dim Hom(P2,P2') - dim W(P2,P1').
template <class K>
long long pairing(const TriangularAlgebra<K>& t, const Shape& a, const Shape& b) {
  long long s = 0;
  for (int v = 0; v < t.nv1; ++v) s += (long long)a.p1[v] * b.p1[v];
  s += hom_dim_a2(t, a.p2, b.p2);
  s -= w_space_dim(t, a.p2, b.p1);
  return s;
}

/// dim GL(P1) + dim GL(P2) - dim End(w): the orbit dimension of w under
/// GL(P1) x GL(P2).
template <class K>
long long orbit_dim(const TriangularAlgebra<K>& t, const BimoduleElement<K>& w,
                    long long end_dim) {
  long long s = 0;
  for (int v = 0; v < t.nv1; ++v) s += (long long)w.shape.p1[v] * w.shape.p1[v];
  s += hom_dim_a2(t, w.shape.p2, w.shape.p2);
  return s - end_dim;
}

// ---------------------------------------------------------------------------
// Element <-> module correspondence
// ---------------------------------------------------------------------------

/// The triangular matrix algebra A1[W]A2 as a structure-constant algebra;
/// basis: A1 idempotents, then the A2 basis, then the W basis.
template <class K>
SCAlgebra<K> triangle_scalgebra(const TriangularAlgebra<K>& t) {
  const K& k = t.k;
  int n1 = t.nv1, n2 = t.a2.dim(), nw = t.wdim;
  int dim = n1 + n2 + nw;
  std::vector<Mat<K>> lmul(dim, Mat<K>(k, dim, dim));
  // A1 idempotents
  for (int a = 0; a < n1; ++a) {
    lmul[a].at(a, a) = k.one();
    for (int b = 0; b < nw; ++b)
      if (t.lgrade[b] == a) lmul[a].at(n1 + n2 + b, n1 + n2 + b) = k.one();
  }
  // A2 elements: multiply inside A2
  for (int x = 0; x < n2; ++x)
    for (int y = 0; y < n2; ++y) {
      const auto& prod = t.a2.mult[x][y];
      for (int z = 0; z < n2; ++z)
        if (!k.is_zero(prod[z])) lmul[n1 + x].at(n1 + z, n1 + y) = prod[z];
    }
  // W elements: w * a2 = right action (left multiplication operator of w on
  // an A2 basis vector lands in W)
  for (int b = 0; b < nw; ++b)
    for (int y = 0; y < n2; ++y) {
      // (basis w_b) * (basis a2_y): column y of lmul[n1+n2+b]
      for (int bb = 0; bb < nw; ++bb) {
        const auto& v = t.right_act[y].at(bb, b);
        if (!k.is_zero(v)) lmul[n1 + n2 + b].at(n1 + n2 + bb, n1 + y) = v;
      }
    }
  std::vector<typename K::Elem> unit(dim, k.zero());
  for (int a = 0; a < n1; ++a) unit[a] = k.one();
  for (int v = 0; v < t.a2.nv; ++v) unit[n1 + v] = k.one();
  return SCAlgebra<K>::make(k, dim, std::move(lmul), unit);
}

/// The module M(w) = (P1, w, P2) over the triangular algebra.
template <class K>
SCModule<K> to_module(const TriangularAlgebra<K>& t, const SCAlgebra<K>& tri,
                      const BimoduleElement<K>& w) {
  const K& k = t.k;
  auto bases = p2_module_bases(t);
  auto ml = p2_module_layout(t, w.shape.p2);
  int p1tot = p1_layout(w.shape.p1).total;
  int dim = p1tot + ml.total;
  auto wl = WP2Layout<K>::make(t, w.shape.p2);

  // (vertex, copy) list in layout order
  std::vector<std::pair<int, int>> blocks;
  for (int j = 0; j < t.a2.nv; ++j)
    for (int s = 0; s < w.shape.p2[j]; ++s) blocks.push_back({j, s});

  std::vector<Mat<K>> action(tri.dim, Mat<K>(k, dim, dim));
  // A1 idempotents act on P1 rows of their grade
  for (int a = 0; a < t.nv1; ++a) {
    auto lo = p1_layout(w.shape.p1);
    for (int r = 0; r < w.shape.p1[a]; ++r)
      action[a].at(lo.offset[a] + r, lo.offset[a] + r) = k.one();
  }
  // A2 elements act by left multiplication inside each copy
  for (int x = 0; x < t.a2.dim(); ++x) {
    for (size_t bi = 0; bi < blocks.size(); ++bi) {
      auto [j, s] = blocks[bi];
      const auto& base = bases[j];
      for (size_t ci = 0; ci < base.size(); ++ci) {
        const auto& prod = t.a2.mult[x][base[ci]]; // x * c
        for (size_t di = 0; di < base.size(); ++di) {
          const auto& v = prod[base[di]];
          if (!k.is_zero(v))
            action[t.nv1 + x].at(p1tot + ml.offset[bi] + (int)di,
                                 p1tot + ml.offset[bi] + (int)ci) = v;
        }
      }
    }
  }
  // W elements act P2 -> P1 through w
  for (int b = 0; b < t.wdim; ++b) {
    for (size_t bi = 0; bi < blocks.size(); ++bi) {
      auto [j, s] = blocks[bi];
      const auto& base = bases[j];
      for (size_t ci = 0; ci < base.size(); ++ci) {
        int x = base[ci];
        // v_b * x in W, then through the element matrix
        for (int bb = 0; bb < t.wdim; ++bb) {
          const auto& coefw = t.right_act[x].at(bb, b);
          if (k.is_zero(coefw)) continue;
          FATDUAL_CHECK(t.rgrade[bb] == j, "W grading: v*x lands in W e_j");
          // column of w for (j, s, bb)
          auto we = t.we_basis(j);
          int pos = -1;
          for (size_t wi = 0; wi < we.size(); ++wi)
            if (we[wi] == bb) pos = (int)wi;
          int col = wl.block_offset[j][s] + pos;
          for (int r = 0; r < p1tot; ++r) {
            const auto& v = w.mat.at(r, col);
            if (!k.is_zero(v))
              action[t.nv1 + t.a2.dim() + b].at(r, p1tot + ml.offset[bi] + (int)ci) =
                  k.add(action[t.nv1 + t.a2.dim() + b].at(
                            r, p1tot + ml.offset[bi] + (int)ci),
                        k.mul(coefw, v));
          }
        }
      }
    }
  }
  return SCModule<K>::make(tri, std::move(action));
}

/// Total dimension of M(w).
template <class K>
long long module_dim(const TriangularAlgebra<K>& t, const Shape& sh) {
  auto bases = p2_module_bases(t);
  long long s = p1_layout(sh.p1).total;
  for (int j = 0; j < t.a2.nv; ++j) s += (long long)sh.p2[j] * bases[j].size();
  return s;
}

// ---------------------------------------------------------------------------
// Standard resolution and Ext^1
// ---------------------------------------------------------------------------

/// 0 -> (W (x) P2, 0, 0) -> (P1, 0, 0) + (W (x) P2, 1, P2) -> M(w) -> 0
/// with explicit morphisms; exactness is verified by rank computations.
template <class K>
struct StandardResolution {
  BimoduleElement<K> q;  // left term
  BimoduleElement<K> p0; // middle term
  HomPair<K> iota;       // q -> p0
  HomPair<K> pi;         // p0 -> w
  std::vector<int> new_row_of_wcol; // row index in p0 for each W(x)P2 column
};

template <class K>
StandardResolution<K> standard_resolution(const TriangularAlgebra<K>& t,
                                          const BimoduleElement<K>& w) {
  const K& k = t.k;
  auto wl = WP2Layout<K>::make(t, w.shape.p2);
  int p1tot = p1_layout(w.shape.p1).total;

  // shape of the W(x)P2 space as an A1 projective
  std::vector<int> q1(t.nv1, 0);
  for (int c = 0; c < wl.total(); ++c) ++q1[wl.lgrade_of_col[c]];

  StandardResolution<K> res;
  Shape qs{q1, std::vector<int>(t.a2.nv, 0)};
  res.q = zero_element(t, qs);

  Shape p0s{q1, w.shape.p2};
  for (int a = 0; a < t.nv1; ++a) p0s.p1[a] += w.shape.p1[a];
  res.p0 = zero_element(t, p0s);

  // row maps: old P1 rows and W-columns into the combined P1 of p0
  auto lo_w = p1_layout(w.shape.p1);
  auto lo_q = p1_layout(q1);
  auto lo_p0 = p1_layout(p0s.p1);
  std::vector<int> old_row_to_p0(p1tot);
  for (int a = 0; a < t.nv1; ++a)
    for (int r = 0; r < w.shape.p1[a]; ++r)
      old_row_to_p0[lo_w.offset[a] + r] = lo_p0.offset[a] + r;
  res.new_row_of_wcol.assign(wl.total(), -1);
  {
    std::vector<int> used(t.nv1, 0);
    for (int c = 0; c < wl.total(); ++c) {
      int a = wl.lgrade_of_col[c];
      res.new_row_of_wcol[c] = lo_p0.offset[a] + w.shape.p1[a] + used[a];
      ++used[a];
    }
  }
  // q's row of each W-column (its own P1 is exactly the W(x)P2 space)
  std::vector<int> q_row_of_wcol(wl.total(), -1);
  {
    std::vector<int> used(t.nv1, 0);
    for (int c = 0; c < wl.total(); ++c) {
      int a = wl.lgrade_of_col[c];
      q_row_of_wcol[c] = lo_q.offset[a] + used[a];
      ++used[a];
    }
  }

  // p0's element matrix: column c maps to its own new row (the identity
  // summand (W(x)P2, 1, P2))
  for (int c = 0; c < wl.total(); ++c)
    res.p0.mat.at(res.new_row_of_wcol[c], c) = k.one();

  // iota: alpha1 = [-w ; 1] : q.P1 -> p0.P1, alpha2 = 0 (q has no P2)
  res.iota.alpha1 = Mat<K>(k, p1_layout(p0s.p1).total, wl.total());
  for (int c = 0; c < wl.total(); ++c) {
    for (int r = 0; r < p1tot; ++r) {
      const auto& v = w.mat.at(r, c);
      if (!k.is_zero(v))
        res.iota.alpha1.at(old_row_to_p0[r], q_row_of_wcol[c]) = k.neg(v);
    }
    res.iota.alpha1.at(res.new_row_of_wcol[c], q_row_of_wcol[c]) = k.one();
  }
  res.iota.alpha2 = A2Map<K>::zero(t, qs.p2, p0s.p2);

  // pi: alpha1 = [1 | w], alpha2 = identity
  res.pi.alpha1 = Mat<K>(k, p1tot, p1_layout(p0s.p1).total);
  for (int r = 0; r < p1tot; ++r)
    res.pi.alpha1.at(r, old_row_to_p0[r]) = k.one();
  for (int c = 0; c < wl.total(); ++c)
    for (int r = 0; r < p1tot; ++r) {
      const auto& v = w.mat.at(r, c);
      if (!k.is_zero(v)) res.pi.alpha1.at(r, res.new_row_of_wcol[c]) = v;
    }
  res.pi.alpha2 = A2Map<K>::identity(t, w.shape.p2);

  // verify morphisms and exactness
  FATDUAL_CHECK(is_morphism(t, res.q, res.p0, res.iota), "iota is a morphism");
  FATDUAL_CHECK(is_morphism(t, res.p0, w, res.pi), "pi is a morphism");
  auto comp = hom_compose(t, res.pi, res.iota);
  FATDUAL_CHECK(comp.alpha1.is_zero(), "pi . iota = 0");
  FATDUAL_CHECK(rank(res.iota.alpha1) == wl.total(), "iota injective");
  FATDUAL_CHECK(rank(res.pi.alpha1) == p1tot, "pi surjective");
  return res;
}

/// dim Ext^1(w, u) from the standard resolution:
/// coker( Hom(P0, u) -> Hom(Q, u) ), where Hom(Q, u) is the full space of
/// graded linear maps Q.P1 -> u.P1.
template <class K>
long long ext1_dim(const TriangularAlgebra<K>& t, const BimoduleElement<K>& w,
                   const BimoduleElement<K>& u) {
  const K& k = t.k;
  auto res = standard_resolution(t, w);
  long long hom_q = 0;
  for (int a = 0; a < t.nv1; ++a)
    hom_q += (long long)res.q.shape.p1[a] * u.shape.p1[a];
  auto hp0 = hom_w(t, res.p0, u);
  if (hp0.empty()) return hom_q;
  // the induced map phi -> phi1 . iota1, in coordinates of graded maps
  auto lo_q = p1_layout(res.q.shape.p1);
  auto lo_u = p1_layout(u.shape.p1);
  std::vector<std::pair<int, int>> coords; // (u row, q row) with equal grade
  for (int a = 0; a < t.nv1; ++a)
    for (int r = 0; r < u.shape.p1[a]; ++r)
      for (int c = 0; c < res.q.shape.p1[a]; ++c)
        coords.push_back({lo_u.offset[a] + r, lo_q.offset[a] + c});
  FATDUAL_CHECK((long long)coords.size() == hom_q, "Hom(Q,u) coordinate count");
  Mat<K> img(k, (int)coords.size(), (int)hp0.size());
  for (size_t h = 0; h < hp0.size(); ++h) {
    auto m = hp0[h].alpha1 * res.iota.alpha1;
    for (size_t ci = 0; ci < coords.size(); ++ci)
      img.at((int)ci, (int)h) = m.at(coords[ci].first, coords[ci].second);
  }
  return hom_q - rank(img);
}

// ---------------------------------------------------------------------------
// Direct sums and idempotent splitting
// ---------------------------------------------------------------------------

template <class K>
struct SumEmbedding {
  // row/column index maps of each summand into the sum
  std::vector<int> rows_a, rows_b, cols_a, cols_b;
  Shape shape;
};

template <class K>
SumEmbedding<K> sum_layout(const TriangularAlgebra<K>& t, const Shape& a,
                           const Shape& b) {
  SumEmbedding<K> e;
  e.shape.p1.resize(t.nv1);
  e.shape.p2.resize(t.a2.nv);
  for (int v = 0; v < t.nv1; ++v) e.shape.p1[v] = a.p1[v] + b.p1[v];
  for (int v = 0; v < t.a2.nv; ++v) e.shape.p2[v] = a.p2[v] + b.p2[v];
  auto la = p1_layout(a.p1), lb = p1_layout(b.p1), ls = p1_layout(e.shape.p1);
  e.rows_a.resize(la.total);
  e.rows_b.resize(lb.total);
  for (int v = 0; v < t.nv1; ++v) {
    for (int r = 0; r < a.p1[v]; ++r)
      e.rows_a[la.offset[v] + r] = ls.offset[v] + r;
    for (int r = 0; r < b.p1[v]; ++r)
      e.rows_b[lb.offset[v] + r] = ls.offset[v] + a.p1[v] + r;
  }
  auto wa = WP2Layout<K>::make(t, a.p2), wb = WP2Layout<K>::make(t, b.p2),
       ws = WP2Layout<K>::make(t, e.shape.p2);
  e.cols_a.resize(wa.total());
  e.cols_b.resize(wb.total());
  for (int c = 0; c < wa.total(); ++c) {
    auto [j, s, wbi] = wa.cols[c];
    auto we = t.we_basis(j);
    int pos = 0;
    for (size_t i = 0; i < we.size(); ++i)
      if (we[i] == wbi) pos = (int)i;
    e.cols_a[c] = ws.block_offset[j][s] + pos;
  }
  for (int c = 0; c < wb.total(); ++c) {
    auto [j, s, wbi] = wb.cols[c];
    auto we = t.we_basis(j);
    int pos = 0;
    for (size_t i = 0; i < we.size(); ++i)
      if (we[i] == wbi) pos = (int)i;
    e.cols_b[c] = ws.block_offset[j][a.p2[j] + s] + pos;
  }
  return e;
}

template <class K>
BimoduleElement<K> direct_sum(const TriangularAlgebra<K>& t,
                              const BimoduleElement<K>& a,
                              const BimoduleElement<K>& b) {
  auto e = sum_layout<K>(t, a.shape, b.shape);
  auto out = zero_element(t, e.shape);
  for (int r = 0; r < a.mat.m; ++r)
    for (int c = 0; c < a.mat.n; ++c)
      out.mat.at(e.rows_a[r], e.cols_a[c]) = a.mat.at(r, c);
  for (int r = 0; r < b.mat.m; ++r)
    for (int c = 0; c < b.mat.n; ++c)
      out.mat.at(e.rows_b[r], e.cols_b[c]) = b.mat.at(r, c);
  return out;
}

/// Split w along an exact idempotent endomorphism; returns the two
/// complementary summands plus the change of basis that realizes them.
template <class K>
struct SplitResult {
  BimoduleElement<K> image, complement;
  // change of basis on P1 (per vertex) and on P2 (as an A2 map)
  Mat<K> t1;
  A2Map<K> t2;
};

template <class K>
SplitResult<K> split(const TriangularAlgebra<K>& t, const BimoduleElement<K>& w,
                     const HomPair<K>& idem) {
  const K& k = t.k;
  // verify idempotency
  auto sq = hom_compose(t, idem, idem);
  if (!(sq.alpha1 == idem.alpha1) || !sq.alpha2.equals(idem.alpha2))
    throw DomainError("not idempotent", "split requires an exact idempotent");
  FATDUAL_CHECK(is_morphism(t, w, w, idem), "idempotent must be an endomorphism");

  // P1 side: per-vertex image/kernel bases
  auto lo = p1_layout(w.shape.p1);
  Shape im_shape, ker_shape;
  im_shape.p1.resize(t.nv1);
  ker_shape.p1.resize(t.nv1);
  im_shape.p2.resize(t.a2.nv);
  ker_shape.p2.resize(t.a2.nv);
  Mat<K> t1(k, lo.total, lo.total);
  std::vector<int> im_cols, ker_cols; // columns of t1 belonging to image part
  {
    int next_col = 0;
    for (int a = 0; a < t.nv1; ++a) {
      int n = w.shape.p1[a];
      Mat<K> blockm(k, n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          blockm.at(i, j) = idem.alpha1.at(lo.offset[a] + i, lo.offset[a] + j);
      auto im = column_space(blockm);
      auto kerb = column_space(Mat<K>::identity(k, n) - blockm);
      FATDUAL_CHECK(im.n + kerb.n == n, "P1 idempotent split covers");
      im_shape.p1[a] = im.n;
      ker_shape.p1[a] = kerb.n;
      for (int c = 0; c < im.n; ++c, ++next_col) {
        for (int i = 0; i < n; ++i)
          t1.at(lo.offset[a] + i, next_col) = im.at(i, c);
        im_cols.push_back(next_col);
      }
      for (int c = 0; c < kerb.n; ++c, ++next_col) {
        for (int i = 0; i < n; ++i)
          t1.at(lo.offset[a] + i, next_col) = kerb.at(i, c);
        ker_cols.push_back(next_col);
      }
    }
  }

  // P2 side: reduce the idempotent modulo the radical (coefficients of the
  // vertex idempotents), split the multiplicity spaces, and build the
  // change of basis T2 = [eps . incl | (1-eps) . incl]
  std::vector<Mat<K>> tops;
  for (int v = 0; v < t.a2.nv; ++v) tops.push_back(idem.alpha2.coef[v]);
  for (int v = 0; v < t.a2.nv; ++v) {
    auto& tp = tops[v];
    if (!((tp * tp) == tp))
      throw InternalError("top reduction of an exact idempotent is idempotent");
  }
  std::vector<Mat<K>> im_top, ker_top;
  for (int v = 0; v < t.a2.nv; ++v) {
    im_top.push_back(column_space(tops[v]));
    ker_top.push_back(column_space(Mat<K>::identity(k, w.shape.p2[v]) - tops[v]));
    FATDUAL_CHECK(im_top[v].n + ker_top[v].n == w.shape.p2[v],
                  "P2 top idempotent split covers");
    im_shape.p2[v] = im_top[v].n;
    ker_shape.p2[v] = ker_top[v].n;
  }
  // T2 source shape: image mults then kernel mults, per vertex
  std::vector<int> mixed(t.a2.nv);
  for (int v = 0; v < t.a2.nv; ++v) mixed[v] = w.shape.p2[v];
  A2Map<K> trans = A2Map<K>::zero(t, mixed, w.shape.p2);
  // inclusion of a "top column" u at vertex v: the map A2 e_v -> P2 with
  // e_v coefficient u; compose with idem / (1 - idem)
  auto one_minus = [&](const A2Map<K>& f) {
    auto r = A2Map<K>::identity(t, w.shape.p2);
    for (size_t i = 0; i < r.coef.size(); ++i) r.coef[i] = r.coef[i] - f.coef[i];
    return r;
  };
  auto idc = idem.alpha2;
  auto cmpl = one_minus(idc);
  for (int v = 0; v < t.a2.nv; ++v) {
    for (int c = 0; c < im_top[v].n; ++c) {
      A2Map<K> incl = A2Map<K>::zero(t, std::vector<int>(t.a2.nv, 0), w.shape.p2);
      // single source copy at vertex v
      std::vector<int> src(t.a2.nv, 0);
      src[v] = 1;
      incl = A2Map<K>::zero(t, src, w.shape.p2);
      for (int i = 0; i < w.shape.p2[v]; ++i)
        incl.coef[v].at(i, 0) = im_top[v].at(i, c);
      auto col = compose(t, idc, incl);
      // write into trans at target column (v, c)
      for (int m = 0; m < t.a2.dim(); ++m) {
        auto [tl, hd] = t.a2.grade[m];
        if (hd != v) continue;
        for (int r = 0; r < w.shape.p2[tl]; ++r)
          trans.coef[m].at(r, c) = col.coef[m].at(r, 0);
      }
    }
    for (int c = 0; c < ker_top[v].n; ++c) {
      std::vector<int> src(t.a2.nv, 0);
      src[v] = 1;
      A2Map<K> incl = A2Map<K>::zero(t, src, w.shape.p2);
      for (int i = 0; i < w.shape.p2[v]; ++i)
        incl.coef[v].at(i, 0) = ker_top[v].at(i, c);
      auto col = compose(t, cmpl, incl);
      for (int m = 0; m < t.a2.dim(); ++m) {
        auto [tl, hd] = t.a2.grade[m];
        if (hd != v) continue;
        for (int r = 0; r < w.shape.p2[tl]; ++r)
          trans.coef[m].at(r, im_top[v].n + c) = col.coef[m].at(r, 0);
      }
    }
  }
  // T2 must be invertible as a module map (iso on tops implies iso)
  auto t2mod = module_matrix(t, trans);
  FATDUAL_CHECK(inverse(t2mod).has_value(), "P2 change of basis invertible");

  // transform w: w' = T1^{-1} . w . (1 (x) T2)
  auto t1inv = inverse(t1);
  FATDUAL_CHECK(t1inv.has_value(), "P1 change of basis invertible");
  auto wt = (*t1inv) * w.mat * tensor_matrix(t, trans);

  // extract the two blocks; in the transformed layout, image copies come
  // first at every vertex on both sides
  auto split_one = [&](bool image_part) {
    const Shape& target = image_part ? im_shape : ker_shape;
    auto out = zero_element(t, target);
    // row selection
    std::vector<int> rsel;
    {
      int next = 0;
      for (int a = 0; a < t.nv1; ++a) {
        int ni = im_shape.p1[a], nk = ker_shape.p1[a];
        for (int i = 0; i < ni; ++i)
          if (image_part) rsel.push_back(next + i);
        for (int i = 0; i < nk; ++i)
          if (!image_part) rsel.push_back(next + ni + i);
        next += ni + nk;
      }
    }
    // column selection via the mixed layout
    auto wl_mixed = WP2Layout<K>::make(t, mixed);
    auto wl_t = WP2Layout<K>::make(t, target.p2);
    std::vector<int> csel;
    for (int c = 0; c < wl_mixed.total(); ++c) {
      auto [j, s, wb] = wl_mixed.cols[c];
      bool in_image = s < im_shape.p2[j];
      if (in_image == image_part) csel.push_back(c);
    }
    FATDUAL_CHECK((int)csel.size() == wl_t.total(), "column selection size");
    FATDUAL_CHECK((int)rsel.size() == out.mat.m, "row selection size");
    for (int r = 0; r < out.mat.m; ++r)
      for (int c = 0; c < out.mat.n; ++c)
        out.mat.at(r, c) = wt.at(rsel[r], csel[c]);
    // the complementary blocks must vanish exactly
    return out;
  };
  SplitResult<K> out{split_one(true), split_one(false), t1, trans};

  // verify the transform is block diagonal: zero cross blocks
  {
    auto wl_mixed = WP2Layout<K>::make(t, mixed);
    std::vector<bool> row_is_image(wt.m, false), col_is_image(wt.n, false);
    {
      int next = 0;
      for (int a = 0; a < t.nv1; ++a) {
        for (int i = 0; i < im_shape.p1[a]; ++i) row_is_image[next + i] = true;
        next += im_shape.p1[a] + ker_shape.p1[a];
      }
    }
    for (int c = 0; c < wt.n; ++c) {
      auto [j, s, wb] = wl_mixed.cols[c];
      col_is_image[c] = s < im_shape.p2[j];
    }
    for (int r = 0; r < wt.m; ++r)
      for (int c = 0; c < wt.n; ++c)
        if (row_is_image[r] != col_is_image[c])
          FATDUAL_CHECK(k.is_zero(wt.at(r, c)),
                        "idempotent split produced nonzero cross terms");
  }
  check_element(t, out.image);
  check_element(t, out.complement);
  return out;
}

// ---------------------------------------------------------------------------
// Krull-Schmidt in the element category
// ---------------------------------------------------------------------------

template <class K>
bool elements_isomorphic(const TriangularAlgebra<K>& t, const BimoduleElement<K>& a,
                         const BimoduleElement<K>& b, Rng& rng) {
  if (!(a.shape == b.shape)) return false;
  auto ab = hom_w(t, a, b);
  auto ba = hom_w(t, b, a);
  auto aa = hom_w(t, a, a);
  auto bb = hom_w(t, b, b);
  if (ab.size() != ba.size() || aa.size() != bb.size() || ab.size() != aa.size())
    return false;
  auto invertible = [&](const HomPair<K>& h) {
    return inverse(h.alpha1).has_value() &&
           inverse(module_matrix(t, h.alpha2)).has_value();
  };
  for (auto& h : ab)
    if (invertible(h)) return true;
  const K& k = t.k;
  for (int attempt = 0; attempt < 16; ++attempt) {
    HomPair<K> h = hom_scaled(t, ab[0], k.sample(rng));
    for (size_t i = 1; i < ab.size(); ++i)
      h = hom_add(h, hom_scaled(t, ab[i], k.sample(rng)));
    if (invertible(h)) return true;
  }
  return false;
}

template <class K>
struct ElementSummand {
  BimoduleElement<K> element;
  int multiplicity = 1;
};

namespace detail {

template <class K>
void split_element_rec(const TriangularAlgebra<K>& t, const BimoduleElement<K>& w,
                       Rng& rng, std::vector<BimoduleElement<K>>& out) {
  if (w.shape.total() == 0) return;
  auto end = hom_w(t, w, w);
  if (end.size() == 1) {
    out.push_back(w);
    return;
  }
  const K& k = t.k;
  // basis elements first (sparse canonical bases often split rationally),
  // then random combinations
  int nattempts = (int)end.size() + 32;
  for (int attempt = 0; attempt < nattempts; ++attempt) {
    HomPair<K> x = [&] {
      if (attempt < (int)end.size()) return end[attempt];
      HomPair<K> r = hom_scaled(t, end[0], k.sample(rng));
      for (size_t i = 1; i < end.size(); ++i)
        r = hom_add(r, hom_scaled(t, end[i], k.sample(rng)));
      return r;
    }();
    auto total = block_diag(x.alpha1, module_matrix(t, x.alpha2));
    auto chi = Poly<K>(k, charpoly(total));
    auto roots = poly_roots(k, chi, rng);
    if (roots.roots.empty()) continue;
    if (roots.roots.size() == 1 && roots.cofactor.deg() <= 0) continue;
    // spectral idempotent as a polynomial applied to x in End
    auto p = detail::crt_projector_poly(k, chi, roots.roots.front());
    HomPair<K> idem{Mat<K>(k, x.alpha1.m, x.alpha1.n),
                    A2Map<K>::zero(t, w.shape.p2, w.shape.p2)};
    {
      auto unit = hom_identity(t, w.shape);
      for (int i = p.deg(); i >= 0; --i) {
        idem = hom_compose(t, x, idem);
        idem = hom_add(idem, hom_scaled(t, unit, p.c[i]));
      }
    }
    bool zero = idem.alpha1.is_zero();
    for (auto& m : idem.alpha2.coef) zero = zero && m.is_zero();
    auto sq = hom_compose(t, idem, idem);
    if (!(sq.alpha1 == idem.alpha1) || !sq.alpha2.equals(idem.alpha2)) continue;
    auto id = hom_identity(t, w.shape);
    bool is_id = (idem.alpha1 == id.alpha1) && idem.alpha2.equals(id.alpha2);
    if (zero || is_id) continue;
    auto parts = split(t, w, idem);
    split_element_rec(t, parts.image, rng, out);
    split_element_rec(t, parts.complement, rng, out);
    return;
  }
  // no split: accept only if End is local
  {
    const K& kk = t.k;
    int ed = (int)end.size();
    // structure constants of End in the computed basis
    // flatten basis as (alpha1 | module_matrix(alpha2)) entries
    std::vector<std::vector<typename K::Elem>> flat;
    auto flatten = [&](const HomPair<K>& h) {
      std::vector<typename K::Elem> v(h.alpha1.a.begin(), h.alpha1.a.end());
      for (auto& m : h.alpha2.coef) v.insert(v.end(), m.a.begin(), m.a.end());
      return v;
    };
    for (auto& e : end) flat.push_back(flatten(e));
    Mat<K> fb(kk, (int)flat[0].size(), ed);
    for (int c = 0; c < ed; ++c)
      for (int i = 0; i < (int)flat[0].size(); ++i) fb.at(i, c) = flat[c][i];
    std::vector<Mat<K>> lmul(ed, Mat<K>(kk, ed, ed));
    for (int i = 0; i < ed; ++i)
      for (int j = 0; j < ed; ++j) {
        auto prod = flatten(hom_compose(t, end[i], end[j]));
        auto coords = solve(fb, prod);
        FATDUAL_CHECK(coords.has_value(), "End closed under composition");
        for (int tt = 0; tt < ed; ++tt) lmul[i].at(tt, j) = (*coords)[tt];
      }
    auto unitc = solve(fb, flatten(hom_identity(t, w.shape)));
    FATDUAL_CHECK(unitc.has_value(), "identity lies in End");
    auto endsc = SCAlgebra<K>::make(kk, ed, std::move(lmul), *unitc);
    auto rad = radical(endsc);
    if (ed - rad.n == 1) {
      out.push_back(w);
      return;
    }
  }
  throw DomainError("split failed",
                    "no spectral split found and End is not local; resample "
                    "or use a large prime field");
}

} // namespace detail

/// Complete direct-sum decomposition of a bimodule element with
/// multiplicities aggregated by certified isomorphism.
template <class K>
std::vector<ElementSummand<K>> krull_schmidt_element(const TriangularAlgebra<K>& t,
                                                     const BimoduleElement<K>& w,
                                                     uint64_t seed) {
  Rng rng(seed);
  std::vector<BimoduleElement<K>> parts;
  detail::split_element_rec(t, w, rng, parts);
  std::vector<ElementSummand<K>> out;
  for (auto& p : parts) {
    bool merged = false;
    for (auto& s : out)
      if (elements_isomorphic(t, p, s.element, rng)) {
        ++s.multiplicity;
        merged = true;
        break;
      }
    if (!merged) out.push_back({p, 1});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.element.shape < b.element.shape;
  });
  return out;
}

} // namespace fatdual
