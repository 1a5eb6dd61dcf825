#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "fatdual/matrix.hpp"
#include "fatdual/poly.hpp"
#include "fatdual/quiver.hpp"
#include "fatdual/rng.hpp"

namespace fatdual {

/// Finite dimensional associative unital algebra by structure constants.
/// b_i * b_j = sum_k c[i][j][k] b_k, stored as left-multiplication matrices
/// lmul[i] with lmul[i](k, j) = c[i][j][k].
template <class K>
struct SCAlgebra {
  using E = typename K::Elem;

  K k{};
  int dim = 0;
  std::vector<Mat<K>> lmul;
  std::vector<E> unit;

  std::vector<E> mul(const std::vector<E>& x, const std::vector<E>& y) const {
    std::vector<E> r(dim, k.zero());
    for (int i = 0; i < dim; ++i) {
      if (k.is_zero(x[i])) continue;
      for (int kk = 0; kk < dim; ++kk) {
        E acc = k.zero();
        for (int j = 0; j < dim; ++j)
          acc = k.add(acc, k.mul(lmul[i].at(kk, j), y[j]));
        r[kk] = k.add(r[kk], k.mul(x[i], acc));
      }
    }
    return r;
  }

  Mat<K> left_mult(const std::vector<E>& x) const {
    Mat<K> r(k, dim, dim);
    for (int i = 0; i < dim; ++i) {
      if (k.is_zero(x[i])) continue;
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
          r.at(a, b) = k.add(r.at(a, b), k.mul(x[i], lmul[i].at(a, b)));
    }
    return r;
  }

  std::vector<E> basis_vec(int i) const {
    std::vector<E> v(dim, k.zero());
    v[i] = k.one();
    return v;
  }

  /// Constructor entry point: validates unit laws, and associativity
  /// exhaustively for small algebras, by seeded random triples above.
  static SCAlgebra make(K field, int dim, std::vector<Mat<K>> lmul,
                        std::vector<E> unit) {
    SCAlgebra a;
    a.k = field;
    a.dim = dim;
    a.lmul = std::move(lmul);
    a.unit = std::move(unit);
    a.validate();
    return a;
  }

  void validate() const {
    auto lu = left_mult(unit);
    FATDUAL_CHECK(lu == Mat<K>::identity(k, dim), "unit law 1*x failed");
    for (int i = 0; i < dim; ++i) {
      auto r = mul(basis_vec(i), unit);
      for (int j = 0; j < dim; ++j)
        FATDUAL_CHECK(k.eq(r[j], j == i ? k.one() : k.zero()),
                      "unit law x*1 failed");
    }
    if (dim <= 16) {
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
          auto lij = left_mult(mul(basis_vec(i), basis_vec(j)));
          if (!(lij == lmul[i] * lmul[j]))
            throw InternalError("associativity failed on basis triple");
        }
    } else {
      Rng rng(0xA550C); // associativity is multilinear; random triples suffice
      for (int t = 0; t < 8; ++t) {
        std::vector<E> x(dim), y(dim), z(dim);
        for (int i = 0; i < dim; ++i) {
          x[i] = k.from_int((long long)rng.below(997));
          y[i] = k.from_int((long long)rng.below(997));
          z[i] = k.from_int((long long)rng.below(997));
        }
        auto l = mul(mul(x, y), z);
        auto r = mul(x, mul(y, z));
        for (int i = 0; i < dim; ++i)
          FATDUAL_CHECK(k.eq(l[i], r[i]), "associativity failed on sample");
      }
    }
  }
};

/// Module over an SCAlgebra given by one action matrix per basis element.
template <class K>
struct SCModule {
  using E = typename K::Elem;

  const SCAlgebra<K>* alg = nullptr;
  int dim = 0;
  std::vector<Mat<K>> action;

  Mat<K> act(const std::vector<E>& x) const {
    const K& k = alg->k;
    Mat<K> r(k, dim, dim);
    for (int i = 0; i < alg->dim; ++i) {
      if (k.is_zero(x[i])) continue;
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
          r.at(a, b) = k.add(r.at(a, b), k.mul(x[i], action[i].at(a, b)));
    }
    return r;
  }

  static SCModule make(const SCAlgebra<K>& alg, std::vector<Mat<K>> action) {
    SCModule m;
    m.alg = &alg;
    m.dim = action.empty() ? 0 : action[0].m;
    m.action = std::move(action);
    m.validate();
    return m;
  }

  void validate() const {
    const K& k = alg->k;
    FATDUAL_CHECK((int)action.size() == alg->dim, "one action matrix per basis");
    FATDUAL_CHECK(act(alg->unit) == Mat<K>::identity(k, dim),
                  "unit must act as identity");
    if (alg->dim <= 16) {
      for (int i = 0; i < alg->dim; ++i)
        for (int j = 0; j < alg->dim; ++j) {
          auto prod = alg->mul(alg->basis_vec(i), alg->basis_vec(j));
          if (!(act(prod) == action[i] * action[j]))
            throw InternalError("module action disagrees with multiplication");
        }
    } else {
      Rng rng(0xACDC);
      for (int t = 0; t < 8; ++t) {
        std::vector<E> x(alg->dim), y(alg->dim);
        for (int i = 0; i < alg->dim; ++i) {
          x[i] = k.from_int((long long)rng.below(997));
          y[i] = k.from_int((long long)rng.below(997));
        }
        if (!(act(alg->mul(x, y)) == act(x) * act(y)))
          throw InternalError("module action disagrees with multiplication");
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Subspace utilities: a subspace is a dim x r matrix of basis columns.
// ---------------------------------------------------------------------------

/// Row-reduce the transposed columns to get a canonical spanning set.
template <class K>
Mat<K> column_space(const Mat<K>& cols) {
  Mat<K> rt = cols.transpose();
  auto piv = rref(rt);
  Mat<K> out(cols.k, cols.m, (int)piv.size());
  for (int r = 0; r < (int)piv.size(); ++r)
    for (int i = 0; i < cols.m; ++i) out.at(i, r) = rt.at(r, i);
  return out;
}

/// Membership test against a column basis.
template <class K>
bool subspace_contains(const Mat<K>& basis, const std::vector<typename K::Elem>& v) {
  return solve(basis, v).has_value();
}

// ---------------------------------------------------------------------------
// Radical and Wedderburn data
// ---------------------------------------------------------------------------

/// Jacobson radical via the trace-form kernel (valid in characteristic zero
/// and for p > dim, which the sampling primes guarantee); the result is
/// verified to be a nilpotent two-sided ideal.
template <class K>
Mat<K> radical(const SCAlgebra<K>& a) {
  const K& k = a.k;
  if constexpr (std::is_same_v<K, FpField>)
    FATDUAL_CHECK(k.p > (uint64_t)a.dim, "radical needs p > dim");
  Mat<K> gram(k, a.dim, a.dim);
  for (int i = 0; i < a.dim; ++i)
    for (int j = 0; j <= i; ++j) {
      auto prod = a.lmul[i] * a.lmul[j];
      auto tr = k.zero();
      for (int d = 0; d < a.dim; ++d) tr = k.add(tr, prod.at(d, d));
      gram.at(i, j) = tr;
      gram.at(j, i) = tr;
    }
  Mat<K> rad = column_space(kernel(gram));

  // verify: two-sided ideal
  for (int c = 0; c < rad.n; ++c) {
    std::vector<typename K::Elem> v(a.dim);
    for (int i = 0; i < a.dim; ++i) v[i] = rad.at(i, c);
    for (int b = 0; b < a.dim; ++b) {
      if (!subspace_contains(rad, a.mul(a.basis_vec(b), v)) ||
          !subspace_contains(rad, a.mul(v, a.basis_vec(b))))
        throw InternalError("trace-form kernel is not an ideal");
    }
  }
  // verify: nilpotent
  Mat<K> power = rad;
  for (int step = 0; step <= a.dim && power.n > 0; ++step) {
    Mat<K> next(k, a.dim, 0);
    std::vector<std::vector<typename K::Elem>> cols;
    for (int c1 = 0; c1 < power.n; ++c1)
      for (int c2 = 0; c2 < rad.n; ++c2) {
        std::vector<typename K::Elem> x(a.dim), y(a.dim);
        for (int i = 0; i < a.dim; ++i) {
          x[i] = power.at(i, c1);
          y[i] = rad.at(i, c2);
        }
        cols.push_back(a.mul(x, y));
      }
    Mat<K> raw(k, a.dim, (int)cols.size());
    for (int c = 0; c < (int)cols.size(); ++c)
      for (int i = 0; i < a.dim; ++i) raw.at(i, c) = cols[c][i];
    power = column_space(raw);
    if (power.n == 0) return rad;
  }
  if (rad.n > 0) throw InternalError("radical candidate is not nilpotent");
  return rad;
}

template <class K>
struct WedderburnData {
  Mat<K> radical_basis;                   // columns
  std::vector<int> block_sizes;           // d_i with sum d_i^2 = dim(A/rad)
  /// One primitive idempotent per block, lifted to A.  Over Q a block of
  /// size >= 2 may need irrational spectral data to split; in that case the
  /// entry is absent, the block structure is re-verified over two large
  /// prime fields, and passed_to_prime_field records that this happened.
  std::vector<std::optional<std::vector<typename K::Elem>>> primitive_idempotents;
  std::vector<std::vector<typename K::Elem>> central_idempotents;   // primitive central, in A
  bool passed_to_prime_field = false;
};

namespace detail {

/// Spectral projector polynomial: for chi = (x-r)^m * g with g(r) != 0,
/// returns e with e == 1 mod (x-r)^m and e == 0 mod g.  Evaluated at any
/// algebra element killed by chi this is an exact idempotent (a polynomial
/// in that element, so it stays inside the same subalgebra).
template <class K>
Poly<K> crt_projector_poly(const K& k, const Poly<K>& chi,
                           const std::pair<typename K::Elem, int>& root) {
  auto [r, m] = root;
  Poly<K> lin = Poly<K>::x_minus(k, r);
  Poly<K> pm = Poly<K>::constant(k, k.one());
  for (int i = 0; i < m; ++i) pm = poly_mul(pm, lin);
  auto g = poly_divmod(chi, pm).first;
  // invert g modulo pm by extended Euclid on (pm, g), tracking the
  // coefficient of g: invariant s_i * g == r_i  (mod pm)
  Poly<K> a = pm, b = poly_divmod(g, pm).second;
  Poly<K> s0(k, {}), s1 = Poly<K>::constant(k, k.one());
  while (!b.is_zero()) {
    auto [q, rem] = poly_divmod(a, b);
    Poly<K> neg = poly_mul(q, s1);
    for (auto& cc : neg.c) cc = k.neg(cc);
    auto s2 = poly_add(s0, neg);
    a = b;
    b = rem;
    s0 = s1;
    s1 = s2;
  }
  FATDUAL_CHECK(a.deg() == 0, "gcd((x-r)^m, cofactor) must be 1");
  auto inv_lead = k.inv(a.c[0]);
  for (auto& cc : s0.c) cc = k.mul(cc, inv_lead);
  auto h = poly_divmod(s0, pm).second;
  return poly_mul(h, g); // == 1 mod (x-r)^m, == 0 mod g
}

} // namespace detail

/// Quotient algebra A/I for a two-sided ideal given by a column basis.
/// Returns the quotient plus the projection matrix (quot.dim x a.dim).
template <class K>
std::pair<SCAlgebra<K>, Mat<K>> quotient_algebra(const SCAlgebra<K>& a,
                                                 const Mat<K>& ideal) {
  const K& k = a.k;
  // pick complement coordinates: rref of [ideal | I] style
  Mat<K> idt = ideal.transpose();
  Mat<K> red = idt;
  auto piv = rref(red);
  std::vector<bool> is_piv(a.dim, false);
  for (int c : piv) is_piv[c] = true;
  std::vector<int> comp;
  for (int i = 0; i < a.dim; ++i)
    if (!is_piv[i]) comp.push_back(i);
  int qd = (int)comp.size();
  // projection: express e_i mod ideal in the complement coordinates.
  // Solve [ideal | comp-basis] * y = e_i and keep the comp part.
  Mat<K> big(k, a.dim, ideal.n + qd);
  big.set_block(0, 0, ideal);
  for (int c = 0; c < qd; ++c) big.at(comp[c], ideal.n + c) = k.one();
  auto biginv = inverse(big);
  FATDUAL_CHECK(biginv.has_value(), "ideal complement is a basis");
  Mat<K> proj(k, qd, a.dim);
  for (int c = 0; c < qd; ++c)
    for (int i = 0; i < a.dim; ++i) proj.at(c, i) = biginv->at(ideal.n + c, i);

  std::vector<Mat<K>> lmul(qd, Mat<K>(k, qd, qd));
  for (int i = 0; i < qd; ++i)
    for (int j = 0; j < qd; ++j) {
      auto prod = a.mul(a.basis_vec(comp[i]), a.basis_vec(comp[j]));
      auto pc = proj.apply(prod);
      for (int t = 0; t < qd; ++t) lmul[i].at(t, j) = pc[t];
    }
  auto unit = proj.apply(a.unit);
  SCAlgebra<K> q = SCAlgebra<K>::make(k, qd, std::move(lmul), unit);
  return {q, proj};
}

namespace detail {

/// Primitive idempotent inside the unital corner e A e by Fitting splits of
/// random corner elements.  `e` must be an exact idempotent.
template <class K>
std::vector<typename K::Elem> shrink_to_primitive(const SCAlgebra<K>& a,
                                                  std::vector<typename K::Elem> e,
                                                  Rng& rng) {
  const K& k = a.k;
  for (int guard = 0; guard <= a.dim + 2; ++guard) {
    // corner basis
    std::vector<std::vector<typename K::Elem>> corner;
    for (int i = 0; i < a.dim; ++i) {
      auto v = a.mul(e, a.mul(a.basis_vec(i), e));
      corner.push_back(std::move(v));
    }
    Mat<K> raw(k, a.dim, a.dim);
    for (int c = 0; c < a.dim; ++c)
      for (int i = 0; i < a.dim; ++i) raw.at(i, c) = corner[c][i];
    Mat<K> cb = column_space(raw);
    if (cb.n == 1) return e; // corner is k*e
    bool split_found = false;
    for (int attempt = 0; attempt < 24 && !split_found; ++attempt) {
      std::vector<typename K::Elem> x(a.dim, k.zero());
      for (int c = 0; c < cb.n; ++c) {
        auto coef = k.sample(rng);
        for (int i = 0; i < a.dim; ++i)
          x[i] = k.add(x[i], k.mul(coef, cb.at(i, c)));
      }
      // operator of left multiplication by x on the corner
      Mat<K> op(k, cb.n, cb.n);
      for (int c = 0; c < cb.n; ++c) {
        std::vector<typename K::Elem> col(a.dim);
        for (int i = 0; i < a.dim; ++i) col[i] = cb.at(i, c);
        auto img = a.mul(x, col);
        auto coords = solve(cb, img);
        FATDUAL_CHECK(coords.has_value(), "corner not closed under multiplication");
        for (int r = 0; r < cb.n; ++r) op.at(r, c) = (*coords)[r];
      }
      auto chi = Poly<K>(k, charpoly(op));
      auto roots = poly_roots(k, chi, rng);
      if (roots.roots.empty()) continue;
      if (roots.roots.size() == 1 && roots.cofactor.deg() <= 0) continue; // single point spectrum
      auto p = detail::crt_projector_poly(k, chi, roots.roots.front());
      // p(x) computed inside the corner: x^0 means e
      std::vector<typename K::Elem> cand(a.dim, k.zero());
      for (int i = p.deg(); i >= 0; --i) {
        cand = a.mul(x, cand);
        for (int t = 0; t < a.dim; ++t)
          cand[t] = k.add(cand[t], k.mul(p.c[i], e[t]));
      }
      auto sq = a.mul(cand, cand);
      bool idem = true;
      for (int i = 0; i < a.dim; ++i)
        if (!k.eq(sq[i], cand[i])) idem = false;
      bool zero = true, ise = true;
      for (int i = 0; i < a.dim; ++i) {
        if (!k.is_zero(cand[i])) zero = false;
        if (!k.eq(cand[i], e[i])) ise = false;
      }
      if (idem && !zero && !ise) {
        e = cand;
        split_found = true;
      }
    }
    if (!split_found)
      throw DomainError("idempotent split failed",
                        "no rational spectral split found; run over a large "
                        "prime field");
  }
  throw InternalError("primitive idempotent shrink did not terminate");
}

} // namespace detail

/// Central primitive idempotents: idempotents of the center of A, computed
/// by Fitting splits of random central elements (commutative case, so
/// spectral idempotents stay central).
template <class K>
std::vector<std::vector<typename K::Elem>> central_idempotents(const SCAlgebra<K>& a,
                                                               Rng& rng) {
  const K& k = a.k;
  // center: [b_i, z] = 0 for all i
  Mat<K> sys(k, a.dim * a.dim, a.dim);
  for (int i = 0; i < a.dim; ++i) {
    Mat<K> rmul(k, a.dim, a.dim); // right multiplication by b_i
    for (int j = 0; j < a.dim; ++j) {
      auto prod = a.mul(a.basis_vec(j), a.basis_vec(i));
      for (int t = 0; t < a.dim; ++t) rmul.at(t, j) = prod[t];
    }
    auto comm = a.lmul[i] - rmul;
    sys.set_block(i * a.dim, 0, comm);
  }
  Mat<K> zb = column_space(kernel(sys));

  std::vector<std::vector<typename K::Elem>> done, work{a.unit};
  auto corner_dim = [&](const std::vector<typename K::Elem>& e) {
    Mat<K> raw(k, a.dim, zb.n);
    for (int c = 0; c < zb.n; ++c) {
      std::vector<typename K::Elem> z(a.dim);
      for (int i = 0; i < a.dim; ++i) z[i] = zb.at(i, c);
      auto v = a.mul(e, z);
      for (int i = 0; i < a.dim; ++i) raw.at(i, c) = v[i];
    }
    return column_space(raw);
  };
  while (!work.empty()) {
    auto e = work.back();
    work.pop_back();
    auto eZ = corner_dim(e);
    bool split = false;
    if (eZ.n > 1) {
      for (int attempt = 0; attempt < 24 && !split; ++attempt) {
        std::vector<typename K::Elem> x(a.dim, k.zero());
        for (int c = 0; c < eZ.n; ++c) {
          auto coef = k.sample(rng);
          for (int i = 0; i < a.dim; ++i)
            x[i] = k.add(x[i], k.mul(coef, eZ.at(i, c)));
        }
        Mat<K> op(k, eZ.n, eZ.n);
        for (int c = 0; c < eZ.n; ++c) {
          std::vector<typename K::Elem> col(a.dim);
          for (int i = 0; i < a.dim; ++i) col[i] = eZ.at(i, c);
          auto img = a.mul(x, col);
          auto coords = solve(eZ, img);
          if (!coords) break;
          for (int r = 0; r < eZ.n; ++r) op.at(r, c) = (*coords)[r];
        }
        auto chi = Poly<K>(k, charpoly(op));
        auto roots = poly_roots(k, chi, rng);
        if (roots.roots.size() < 1 ||
            (roots.roots.size() == 1 && roots.cofactor.deg() <= 0))
          continue;
        auto p = detail::crt_projector_poly(k, chi, roots.roots.front());
        std::vector<typename K::Elem> cand(a.dim, k.zero());
        for (int i = p.deg(); i >= 0; --i) {
          cand = a.mul(x, cand);
          for (int tt = 0; tt < a.dim; ++tt)
            cand[tt] = k.add(cand[tt], k.mul(p.c[i], e[tt]));
        }
        auto sq = a.mul(cand, cand);
        bool idem = true, zero = true, ise = true;
        for (int i = 0; i < a.dim; ++i) {
          if (!k.eq(sq[i], cand[i])) idem = false;
          if (!k.is_zero(cand[i])) zero = false;
          if (!k.eq(cand[i], e[i])) ise = false;
        }
        if (idem && !zero && !ise) {
          auto rest = e;
          for (int i = 0; i < a.dim; ++i) rest[i] = k.sub(e[i], cand[i]);
          work.push_back(cand);
          work.push_back(rest);
          split = true;
        }
      }
      if (!split)
        throw DomainError("central split failed",
                          "center does not split over this field; run over "
                          "a large prime field");
    }
    if (!split) done.push_back(e);
  }
  // canonical order: by first nonzero coordinate position
  std::sort(done.begin(), done.end(),
            [&](const auto& x, const auto& y) {
              for (int i = 0; i < a.dim; ++i) {
                bool zx = k.is_zero(x[i]), zy = k.is_zero(y[i]);
                if (zx != zy) return zy;
              }
              return false;
            });
  return done;
}

/// Reduce a rational SCAlgebra modulo a sampling prime (denominators must
/// be invertible mod p, which holds for all primes in the table unless the
/// input was crafted against it).
inline SCAlgebra<FpField> reduce_mod_p(const SCAlgebra<RatField>& a, uint64_t p) {
  FpField fp(p);
  auto red = [&](const BigRat& v) {
    BigInt num = numerator(v) % BigInt(p);
    BigInt den = denominator(v) % BigInt(p);
    if (den == 0)
      throw DomainError("bad prime", "denominator vanishes mod p");
    long long n = (long long)num, d = (long long)den;
    return fp.mul(fp.from_int(n), fp.inv(fp.from_int(d)));
  };
  std::vector<Mat<FpField>> lmul;
  for (const auto& l : a.lmul) {
    Mat<FpField> m(fp, a.dim, a.dim);
    for (int i = 0; i < a.dim; ++i)
      for (int j = 0; j < a.dim; ++j) m.at(i, j) = red(l.at(i, j));
    lmul.push_back(std::move(m));
  }
  std::vector<uint64_t> unit;
  for (const auto& u : a.unit) unit.push_back(red(u));
  return SCAlgebra<FpField>::make(fp, a.dim, std::move(lmul), unit);
}

template <class K>
WedderburnData<K> wedderburn(const SCAlgebra<K>& a, Rng& rng);

/// Block-size multiset of A tensored with F_p (used to verify rational
/// Wedderburn data whose splitting left Q).
inline std::vector<int> wedderburn_sizes_mod_p(const SCAlgebra<RatField>& a,
                                               uint64_t p, uint64_t seed) {
  auto ap = reduce_mod_p(a, p);
  Rng rng(seed);
  auto wd = wedderburn(ap, rng);
  return wd.block_sizes;
}

/// Wedderburn structure of A/rad: simple block sizes with matching
/// primitive idempotents (lifted to A) and the central primitive
/// idempotents of A itself.
template <class K>
WedderburnData<K> wedderburn(const SCAlgebra<K>& a, Rng& rng) {
  const K& k = a.k;
  WedderburnData<K> out;
  out.radical_basis = radical(a);
  auto [s, proj] = quotient_algebra(a, out.radical_basis);

  Rng rng_central = rng.fork(1);
  auto zs = central_idempotents(s, rng_central);
  for (auto& z : zs) {
    // block dimension: dim z*S
    Mat<K> raw(k, s.dim, s.dim);
    for (int c = 0; c < s.dim; ++c) {
      auto v = s.mul(z, s.basis_vec(c));
      for (int i = 0; i < s.dim; ++i) raw.at(i, c) = v[i];
    }
    int bd = column_space(raw).n;
    // split semisimple block over this field: bd = d^2
    int d = 0;
    while (d * d < bd) ++d;
    if (d * d != bd)
      throw DomainError("nonsplit block",
                        "semisimple block is not split over this field; run "
                        "over a large prime field");
    out.block_sizes.push_back(d);
    try {
      out.primitive_idempotents.push_back(detail::shrink_to_primitive(s, z, rng));
    } catch (const DomainError&) {
      if constexpr (std::is_same_v<K, RatField>) {
        out.primitive_idempotents.push_back(std::nullopt);
        out.passed_to_prime_field = true;
      } else {
        throw;
      }
    }
  }
  std::sort(out.block_sizes.begin(), out.block_sizes.end());
  int ss = 0;
  for (int d : out.block_sizes) ss += d * d;
  FATDUAL_CHECK(ss + out.radical_basis.n == a.dim,
                "sum d_i^2 + dim rad != dim A");

  // lift the per-block primitive idempotents and the central idempotents
  // from A/rad to A (Newton iteration e -> 3e^2 - 2e^3)
  auto lift = [&](const std::vector<typename K::Elem>& ebar) {
    // choose any preimage, then iterate
    // preimage: coordinates via the complement used by quotient_algebra:
    // solve proj * x = ebar with x in the complement; simplest exact choice:
    // x = sum ebar_i * c_i where proj(c_i) = e_i.  Build right inverse once.
    std::vector<typename K::Elem> x(a.dim, k.zero());
    // right inverse of proj: proj is qd x dim of rank qd
    auto pr = proj;
    // solve proj * v_j = e_j for each quotient basis vector
    for (int j = 0; j < pr.m; ++j) {
      std::vector<typename K::Elem> b(pr.m, k.zero());
      b[j] = k.one();
      auto v = solve(pr, b);
      FATDUAL_CHECK(v.has_value(), "projection is surjective");
      for (int i = 0; i < a.dim; ++i)
        x[i] = k.add(x[i], k.mul(ebar[j], (*v)[i]));
    }
    for (int it = 0; it <= a.dim + 2; ++it) {
      auto x2 = a.mul(x, x);
      bool exact = true;
      for (int i = 0; i < a.dim; ++i)
        if (!k.eq(x2[i], x[i])) exact = false;
      if (exact) return x;
      auto x3 = a.mul(x2, x);
      for (int i = 0; i < a.dim; ++i) {
        auto t = k.sub(k.mul(k.from_int(3), x2[i]), k.mul(k.from_int(2), x3[i]));
        x[i] = t;
      }
    }
    throw InternalError("idempotent lifting did not converge");
  };

  std::vector<std::optional<std::vector<typename K::Elem>>> lifted;
  for (auto& p : out.primitive_idempotents)
    lifted.push_back(p ? std::optional(lift(*p)) : std::nullopt);
  out.primitive_idempotents = lifted;

  if constexpr (std::is_same_v<K, RatField>) {
    if (out.passed_to_prime_field) {
      auto sorted = out.block_sizes;
      for (size_t pi = 0; pi < 2; ++pi) {
        auto sizes = wedderburn_sizes_mod_p(a, sampling_primes[pi], 17 + pi);
        FATDUAL_CHECK(sizes == sorted,
                      "prime-field block sizes disagree with rational data");
      }
    }
  }

  Rng rng_a = rng.fork(2);
  out.central_idempotents = central_idempotents(a, rng_a);
  FATDUAL_CHECK(out.central_idempotents.size() <= out.block_sizes.size(),
                "more central idempotents than blocks");
  return out;
}

// ---------------------------------------------------------------------------
// Hom spaces and Krull-Schmidt splitting for modules
// ---------------------------------------------------------------------------

/// Basis of intertwiners M -> N (matrices X with X a_M(b) = a_N(b) X).
template <class K>
std::vector<Mat<K>> hom_space(const SCModule<K>& m, const SCModule<K>& n) {
  FATDUAL_CHECK(m.alg == n.alg, "hom_space needs modules over the same algebra");
  const K& k = m.alg->k;
  int vars = n.dim * m.dim; // X is n.dim x m.dim, var index i*m.dim + j
  Mat<K> sys(k, m.alg->dim * n.dim * m.dim, vars);
  int row = 0;
  for (int b = 0; b < m.alg->dim; ++b) {
    const auto& am = m.action[b];
    const auto& an = n.action[b];
    // X * am - an * X = 0, entry (i, j)
    for (int i = 0; i < n.dim; ++i)
      for (int j = 0; j < m.dim; ++j) {
        for (int t = 0; t < m.dim; ++t)
          sys.at(row, i * m.dim + t) =
              k.add(sys.at(row, i * m.dim + t), am.at(t, j));
        for (int t = 0; t < n.dim; ++t)
          sys.at(row, t * m.dim + j) =
              k.sub(sys.at(row, t * m.dim + j), an.at(i, t));
        ++row;
      }
  }
  auto ker = kernel(sys);
  std::vector<Mat<K>> basis;
  for (int c = 0; c < ker.n; ++c) {
    Mat<K> x(k, n.dim, m.dim);
    for (int i = 0; i < n.dim; ++i)
      for (int j = 0; j < m.dim; ++j) x.at(i, j) = ker.at(i * m.dim + j, c);
    basis.push_back(std::move(x));
  }
  return basis;
}

/// Restrict a module to an invariant subspace given by a column basis.
template <class K>
SCModule<K> restrict_module(const SCModule<K>& m, const Mat<K>& cols) {
  const K& k = m.alg->k;
  std::vector<Mat<K>> action;
  for (int b = 0; b < m.alg->dim; ++b) {
    Mat<K> img = m.action[b] * cols;
    Mat<K> r(k, cols.n, cols.n);
    for (int c = 0; c < cols.n; ++c) {
      std::vector<typename K::Elem> v(m.dim);
      for (int i = 0; i < m.dim; ++i) v[i] = img.at(i, c);
      auto coords = solve(cols, v);
      FATDUAL_CHECK(coords.has_value(), "subspace is not invariant");
      for (int t = 0; t < cols.n; ++t) r.at(t, c) = (*coords)[t];
    }
    action.push_back(std::move(r));
  }
  return SCModule<K>::make(*m.alg, std::move(action));
}

template <class K>
struct ModuleSummand {
  SCModule<K> module;
  int multiplicity = 1;
};

namespace detail {

template <class K>
std::vector<SCModule<K>> split_indecomposable(const SCModule<K>& m, Rng& rng) {
  const K& k = m.alg->k;
  if (m.dim == 0) return {};
  auto end_basis = hom_space(m, m);
  if (end_basis.size() == 1) return {m}; // brick
  int nattempts = (int)end_basis.size() + 32;
  for (int attempt = 0; attempt < nattempts; ++attempt) {
    Mat<K> x(k, m.dim, m.dim);
    if (attempt < (int)end_basis.size()) {
      x = end_basis[attempt];
    } else {
      for (auto& e : end_basis) x = x + e.scaled(k.sample(rng));
    }
    auto chi = Poly<K>(k, charpoly(x));
    auto roots = poly_roots(k, chi, rng);
    if (roots.roots.empty()) continue;
    bool whole = (roots.roots.size() == 1 && roots.cofactor.deg() <= 0);
    if (whole) continue;
    auto p = detail::crt_projector_poly(k, chi, roots.roots.front());
    Mat<K> pmat = poly_at_matrix(p, x);
    if (!(pmat * pmat == pmat)) throw InternalError("spectral projector not idempotent");
    if (pmat.is_zero() || pmat == Mat<K>::identity(k, m.dim)) continue;
    auto im = column_space(pmat);
    Mat<K> complement = column_space(Mat<K>::identity(k, m.dim) - pmat);
    FATDUAL_CHECK(im.n + complement.n == m.dim, "projector split must cover");
    auto part1 = restrict_module(m, im);
    auto part2 = restrict_module(m, complement);
    auto r1 = split_indecomposable(part1, rng);
    auto r2 = split_indecomposable(part2, rng);
    r1.insert(r1.end(), r2.begin(), r2.end());
    return r1;
  }
  // no split found: accept as indecomposable only if End is local
  {
    std::vector<Mat<K>> lmul;
    // End as an SCAlgebra in the computed basis
    int ed = (int)end_basis.size();
    Mat<K> flat(k, m.dim * m.dim, ed);
    for (int c = 0; c < ed; ++c)
      for (int i = 0; i < m.dim * m.dim; ++i) flat.at(i, c) = end_basis[c].a[i];
    for (int i = 0; i < ed; ++i) {
      Mat<K> li(k, ed, ed);
      for (int j = 0; j < ed; ++j) {
        auto prod = end_basis[i] * end_basis[j];
        std::vector<typename K::Elem> v(prod.a.begin(), prod.a.end());
        auto coords = solve(flat, v);
        FATDUAL_CHECK(coords.has_value(), "End not closed under composition");
        for (int t = 0; t < ed; ++t) li.at(t, j) = (*coords)[t];
      }
      lmul.push_back(std::move(li));
    }
    std::vector<typename K::Elem> unit(ed, k.zero());
    {
      Mat<K> id = Mat<K>::identity(k, m.dim);
      std::vector<typename K::Elem> v(id.a.begin(), id.a.end());
      auto coords = solve(flat, v);
      FATDUAL_CHECK(coords.has_value(), "identity lies in End");
      unit = *coords;
    }
    auto endsc = SCAlgebra<K>::make(k, ed, std::move(lmul), unit);
    auto rad = radical(endsc);
    if (ed - rad.n == 1) return {m}; // local: indecomposable, not a brick
  }
  throw DomainError("split failed",
                    "endomorphism ring is not local and no rational spectral "
                    "split was found; run over a large prime field");
}

} // namespace detail

/// Explicit isomorphism test used for aggregation: equal dimensions, equal
/// Hom dimensions in all four positions, and an explicit invertible
/// intertwiner (sound, not merely numerical).
template <class K>
bool modules_isomorphic(const SCModule<K>& m, const SCModule<K>& n, Rng& rng) {
  if (m.dim != n.dim) return false;
  auto mn = hom_space(m, n);
  auto nm = hom_space(n, m);
  auto mm = hom_space(m, m);
  auto nn = hom_space(n, n);
  if (mn.size() != nm.size() || mm.size() != nn.size() || mn.size() != mm.size())
    return false;
  const K& k = m.alg->k;
  for (auto& x : mn)
    if (inverse(x)) return true;
  for (int attempt = 0; attempt < 16; ++attempt) {
    Mat<K> x(k, n.dim, m.dim);
    for (auto& e : mn) x = x + e.scaled(k.sample(rng));
    if (inverse(x)) return true;
  }
  return false;
}

/// Complete direct-sum decomposition by splitting idempotents of End(M),
/// with multiplicities aggregated by certified isomorphism.
template <class K>
std::vector<ModuleSummand<K>> krull_schmidt(const SCModule<K>& m, uint64_t seed) {
  Rng rng(seed);
  auto parts = detail::split_indecomposable(m, rng);
  std::vector<ModuleSummand<K>> out;
  for (auto& p : parts) {
    bool merged = false;
    for (auto& s : out)
      if (modules_isomorphic(p, s.module, rng)) {
        ++s.multiplicity;
        merged = true;
        break;
      }
    if (!merged) out.push_back({p, 1});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.module.dim < b.module.dim;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Basic algebras with a vertex grading (the carrier of the recursion)
// ---------------------------------------------------------------------------

/// Basic algebra presented by a graded basis: the first `nv` basis elements
/// are the vertex idempotents, all others lie in the radical and carry a
/// (tail, head) grading like paths of a quiver (ring-wise, a basis element
/// x with grade t->h satisfies e_h * x * e_t = x; products compose x*y =
/// "y then x").  Non-idempotent basis elements must span a nilpotent ideal,
/// which holds exactly for path algebras of acyclic quivers and for
/// endomorphism algebras of directed brick collections.
template <class K>
struct BasicAlgebra {
  using E = typename K::Elem;

  K k{};
  int nv = 0;
  std::vector<std::pair<int, int>> grade;            // (tail, head) per basis element
  std::vector<std::vector<std::vector<E>>> mult;     // mult[i][j] = coords of b_i * b_j

  int dim() const { return (int)grade.size(); }

  std::vector<E> mul(const std::vector<E>& x, const std::vector<E>& y) const {
    std::vector<E> r(dim(), k.zero());
    for (int i = 0; i < dim(); ++i) {
      if (k.is_zero(x[i])) continue;
      for (int j = 0; j < dim(); ++j) {
        if (k.is_zero(y[j])) continue;
        auto c = k.mul(x[i], y[j]);
        const auto& prod = mult[i][j];
        for (int t = 0; t < dim(); ++t)
          if (!k.is_zero(prod[t])) r[t] = k.add(r[t], k.mul(c, prod[t]));
      }
    }
    return r;
  }

  /// Basis indices of Hom(P(j), P(k)) = e_j A e_k, i.e. elements graded
  /// k -> j.  (Maps between indecomposable projectives P(v) = A e_v are
  /// right multiplications by paths k -> j.)
  std::vector<int> mor_basis(int j, int kk) const {
    std::vector<int> out;
    for (int i = 0; i < dim(); ++i)
      if (grade[i].first == kk && grade[i].second == j) out.push_back(i);
    return out;
  }

  /// Arrows tail -> head with tail = v (radical elements leaving v).
  bool has_elements_out_of(int v) const {
    for (int i = nv; i < dim(); ++i)
      if (grade[i].first == v) return true;
    return false;
  }

  bool has_elements_into(int v) const {
    for (int i = nv; i < dim(); ++i)
      if (grade[i].second == v) return true;
    return false;
  }

  void validate() const {
    FATDUAL_CHECK((int)grade.size() >= nv, "missing vertex idempotents");
    for (int v = 0; v < nv; ++v)
      FATDUAL_CHECK(grade[v] == std::make_pair(v, v), "idempotents lead the basis");
    for (int i = nv; i < dim(); ++i)
      FATDUAL_CHECK(grade[i].first != grade[i].second ||
                        true /* loops allowed structurally, rejected below */,
                    "grading");
    for (int i = 0; i < dim(); ++i)
      for (int j = 0; j < dim(); ++j) {
        const auto& prod = mult[i][j];
        bool composable = grade[i].first == grade[j].second;
        for (int t = 0; t < dim(); ++t) {
          if (k.is_zero(prod[t])) continue;
          FATDUAL_CHECK(composable, "non-composable product is nonzero");
          FATDUAL_CHECK(grade[t].first == grade[j].first &&
                            grade[t].second == grade[i].second,
                        "product grading mismatch");
          // radical span: product of two radical elements never hits an
          // idempotent basis element
          if (i >= nv && j >= nv)
            FATDUAL_CHECK(t >= nv, "radical product hit an idempotent");
        }
      }
    // unit laws via idempotents
    for (int i = 0; i < dim(); ++i) {
      auto [t, h] = grade[i];
      auto bi = basis_vec(i);
      auto l = mul(basis_vec(h), bi);
      auto r = mul(bi, basis_vec(t));
      for (int c = 0; c < dim(); ++c) {
        FATDUAL_CHECK(k.eq(l[c], bi[c]), "e_head * x != x");
        FATDUAL_CHECK(k.eq(r[c], bi[c]), "x * e_tail != x");
      }
    }
    // sampled associativity
    Rng rng(0xBA51C);
    for (int t = 0; t < 6; ++t) {
      std::vector<E> x(dim()), y(dim()), z(dim());
      for (int i = 0; i < dim(); ++i) {
        x[i] = k.from_int((long long)rng.below(997));
        y[i] = k.from_int((long long)rng.below(997));
        z[i] = k.from_int((long long)rng.below(997));
      }
      auto l = mul(mul(x, y), z);
      auto r = mul(x, mul(y, z));
      for (int i = 0; i < dim(); ++i)
        FATDUAL_CHECK(k.eq(l[i], r[i]), "BasicAlgebra associativity failed");
    }
  }

  std::vector<E> basis_vec(int i) const {
    std::vector<E> v(dim(), k.zero());
    v[i] = k.one();
    return v;
  }

  std::vector<E> unit() const {
    std::vector<E> v(dim(), k.zero());
    for (int i = 0; i < nv; ++i) v[i] = k.one();
    return v;
  }

  SCAlgebra<K> to_scalgebra() const {
    std::vector<Mat<K>> lmul;
    for (int i = 0; i < dim(); ++i) {
      Mat<K> li(k, dim(), dim());
      for (int j = 0; j < dim(); ++j)
        for (int t = 0; t < dim(); ++t) li.at(t, j) = mult[i][j][t];
      lmul.push_back(std::move(li));
    }
    return SCAlgebra<K>::make(k, dim(), std::move(lmul), unit());
  }

  /// Subalgebra on a vertex subset (the corner eAe for e = sum of kept
  /// idempotents); keep[] maps old vertex -> new vertex or -1.
  BasicAlgebra restricted(const std::vector<int>& keep_vertices) const {
    std::vector<int> vmap(nv, -1);
    for (int i = 0; i < (int)keep_vertices.size(); ++i)
      vmap[keep_vertices[i]] = i;
    std::vector<int> bmap(dim(), -1);
    BasicAlgebra out;
    out.k = k;
    out.nv = (int)keep_vertices.size();
    for (int v : keep_vertices)
      out.grade.push_back({vmap[v], vmap[v]});
    for (int v = 0; v < out.nv; ++v) bmap[keep_vertices[v]] = v;
    for (int i = nv; i < dim(); ++i) {
      auto [t, h] = grade[i];
      if (vmap[t] >= 0 && vmap[h] >= 0) {
        bmap[i] = (int)out.grade.size();
        out.grade.push_back({vmap[t], vmap[h]});
      }
    }
    int nd = out.dim();
    out.mult.assign(nd, std::vector<std::vector<E>>(nd, std::vector<E>(nd, k.zero())));
    for (int i = 0; i < dim(); ++i) {
      if (bmap[i] < 0) continue;
      for (int j = 0; j < dim(); ++j) {
        if (bmap[j] < 0) continue;
        for (int t = 0; t < dim(); ++t) {
          if (k.is_zero(mult[i][j][t])) continue;
          FATDUAL_CHECK(bmap[t] >= 0, "corner product left the corner");
          out.mult[bmap[i]][bmap[j]][bmap[t]] = mult[i][j][t];
        }
      }
    }
    out.validate();
    return out;
  }

  /// Connected components of the underlying vertex graph (arrows in either
  /// direction connect).
  std::vector<std::vector<int>> vertex_components() const {
    std::vector<int> label(nv, -1);
    int next = 0;
    for (int s = 0; s < nv; ++s) {
      if (label[s] >= 0) continue;
      std::vector<int> stack{s};
      label[s] = next;
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int i = nv; i < dim(); ++i) {
          auto [t, h] = grade[i];
          int other = -1;
          if (t == v) other = h;
          else if (h == v) other = t;
          if (other >= 0 && label[other] < 0) {
            label[other] = next;
            stack.push_back(other);
          }
        }
      }
      ++next;
    }
    std::vector<std::vector<int>> comps(next);
    for (int v = 0; v < nv; ++v) comps[label[v]].push_back(v);
    return comps;
  }
};

/// Path algebra of an acyclic quiver as a BasicAlgebra; basis is vertices
/// followed by all paths ordered by (length, lexicographic arrow list).
template <class K>
BasicAlgebra<K> path_algebra(K field, const Quiver& q) {
  if (q.has_oriented_cycle())
    throw DomainError("oriented cycle",
                      "path algebra of a quiver with an oriented cycle is "
                      "infinite dimensional");
  BasicAlgebra<K> a;
  a.k = field;
  a.nv = q.vertex_count;
  for (int v = 0; v < q.vertex_count; ++v) a.grade.push_back({v, v});

  // enumerate paths as arrow index sequences (in traversal order)
  std::vector<std::vector<int>> paths; // arrow indices, first arrow first
  std::vector<std::pair<int, int>> pgrade;
  std::vector<std::vector<int>> frontier;
  for (int ai = 0; ai < (int)q.arrows.size(); ++ai) frontier.push_back({ai});
  while (!frontier.empty()) {
    std::vector<std::vector<int>> next;
    for (auto& p : frontier) {
      int tail = q.arrows[p.front()].first;
      int head = q.arrows[p.back()].second;
      paths.push_back(p);
      pgrade.push_back({tail, head});
      for (int ai = 0; ai < (int)q.arrows.size(); ++ai)
        if (q.arrows[ai].first == head) {
          auto np = p;
          np.push_back(ai);
          next.push_back(np);
        }
    }
    frontier = std::move(next);
  }
  // sort by (length, lex)
  std::vector<int> order(paths.size());
  for (int i = 0; i < (int)order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (paths[x].size() != paths[y].size())
      return paths[x].size() < paths[y].size();
    return paths[x] < paths[y];
  });
  std::vector<std::vector<int>> sorted_paths;
  for (int i : order) {
    sorted_paths.push_back(paths[i]);
    a.grade.push_back(pgrade[i]);
  }

  auto find_path = [&](const std::vector<int>& p) {
    for (int i = 0; i < (int)sorted_paths.size(); ++i)
      if (sorted_paths[i] == p) return a.nv + i;
    return -1;
  };

  int nd = a.dim();
  a.mult.assign(nd, std::vector<std::vector<typename K::Elem>>(
                        nd, std::vector<typename K::Elem>(nd, field.zero())));
  auto set_prod = [&](int i, int j, int t) { a.mult[i][j][t] = field.one(); };
  for (int i = 0; i < nd; ++i)
    for (int j = 0; j < nd; ++j) {
      auto [ti, hi] = a.grade[i];
      auto [tj, hj] = a.grade[j];
      if (ti != hj) continue; // b_i * b_j = "b_j then b_i"
      if (i < a.nv && j < a.nv) {
        if (i == j) set_prod(i, j, i);
      } else if (i < a.nv) {
        set_prod(i, j, j);
      } else if (j < a.nv) {
        set_prod(i, j, i);
      } else {
        auto composed = sorted_paths[j - a.nv];
        const auto& second = sorted_paths[i - a.nv];
        composed.insert(composed.end(), second.begin(), second.end());
        int t = find_path(composed);
        FATDUAL_CHECK(t >= 0, "composed path missing from basis");
        set_prod(i, j, t);
      }
    }
  a.validate();
  return a;
}

} // namespace fatdual
