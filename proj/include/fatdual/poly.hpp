#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "fatdual/matrix.hpp"

namespace fatdual {

/// Dense univariate polynomials, coefficient c[i] on x^i.
template <class K>
struct Poly {
  using E = typename K::Elem;
  K k{};
  std::vector<E> c;

  Poly() = default;
  Poly(K field, std::vector<E> coeffs) : k(field), c(std::move(coeffs)) { trim(); }

  static Poly constant(K k, E v) { return Poly(k, {v}); }
  static Poly x_minus(K k, E r) { return Poly(k, {k.neg(r), k.one()}); }

  void trim() {
    while (!c.empty() && k.is_zero(c.back())) c.pop_back();
  }
  int deg() const { return (int)c.size() - 1; } // deg of 0 is -1
  bool is_zero() const { return c.empty(); }
  E lead() const { return c.back(); }

  Poly monic() const {
    if (is_zero()) return *this;
    auto d = k.inv(lead());
    Poly r = *this;
    for (auto& v : r.c) v = k.mul(d, v);
    return r;
  }

  E eval(const E& x) const {
    E r = k.zero();
    for (int i = deg(); i >= 0; --i) r = k.add(k.mul(r, x), c[i]);
    return r;
  }
};

template <class K>
Poly<K> poly_add(const Poly<K>& a, const Poly<K>& b) {
  const K& k = a.k;
  std::vector<typename K::Elem> c(std::max(a.c.size(), b.c.size()), k.zero());
  for (size_t i = 0; i < a.c.size(); ++i) c[i] = a.c[i];
  for (size_t i = 0; i < b.c.size(); ++i) c[i] = k.add(c[i], b.c[i]);
  return Poly<K>(k, c);
}

template <class K>
Poly<K> poly_mul(const Poly<K>& a, const Poly<K>& b) {
  const K& k = a.k;
  if (a.is_zero() || b.is_zero()) return Poly<K>(k, {});
  std::vector<typename K::Elem> c(a.c.size() + b.c.size() - 1, k.zero());
  for (size_t i = 0; i < a.c.size(); ++i)
    for (size_t j = 0; j < b.c.size(); ++j)
      c[i + j] = k.add(c[i + j], k.mul(a.c[i], b.c[j]));
  return Poly<K>(k, c);
}

template <class K>
std::pair<Poly<K>, Poly<K>> poly_divmod(const Poly<K>& a, const Poly<K>& b) {
  const K& k = a.k;
  FATDUAL_CHECK(!b.is_zero(), "polynomial division by zero");
  std::vector<typename K::Elem> rem = a.c, quo;
  int db = b.deg();
  auto lead_inv = k.inv(b.lead());
  if ((int)rem.size() - 1 >= db) quo.assign(rem.size() - db, k.zero());
  for (int i = (int)rem.size() - 1; i >= db; --i) {
    if (k.is_zero(rem[i])) continue;
    auto f = k.mul(rem[i], lead_inv);
    quo[i - db] = f;
    for (int j = 0; j <= db; ++j)
      rem[i - db + j] = k.sub(rem[i - db + j], k.mul(f, b.c[j]));
  }
  return {Poly<K>(k, quo), Poly<K>(k, rem)};
}

template <class K>
Poly<K> poly_gcd(Poly<K> a, Poly<K> b) {
  while (!b.is_zero()) {
    auto r = poly_divmod(a, b).second;
    a = b;
    b = r;
  }
  return a.is_zero() ? a : a.monic();
}

template <class K>
Poly<K> poly_derivative(const Poly<K>& a) {
  const K& k = a.k;
  if (a.deg() <= 0) return Poly<K>(k, {});
  std::vector<typename K::Elem> c(a.deg());
  for (int i = 1; i <= a.deg(); ++i) c[i - 1] = k.mul(k.from_int(i), a.c[i]);
  return Poly<K>(k, c);
}

/// x^e mod f via binary exponentiation.
template <class K>
Poly<K> poly_xpow_mod(const K& k, uint64_t e, const Poly<K>& f) {
  Poly<K> r = Poly<K>::constant(k, k.one());
  Poly<K> base(k, {k.zero(), k.one()});
  base = poly_divmod(base, f).second;
  while (e) {
    if (e & 1) r = poly_divmod(poly_mul(r, base), f).second;
    base = poly_divmod(poly_mul(base, base), f).second;
    e >>= 1;
  }
  return r;
}

template <class K>
Poly<K> poly_pow_mod(Poly<K> base, uint64_t e, const Poly<K>& f) {
  const K& k = base.k;
  Poly<K> r = Poly<K>::constant(k, k.one());
  base = poly_divmod(base, f).second;
  while (e) {
    if (e & 1) r = poly_divmod(poly_mul(r, base), f).second;
    base = poly_divmod(poly_mul(base, base), f).second;
    e >>= 1;
  }
  return r;
}

namespace detail {

/// All roots of a squarefree product of linear factors over F_p
/// (equal-degree splitting, degree one).
inline void fp_split_linear(const FpField& k, const Poly<FpField>& g,
                            Rng& rng, std::vector<uint64_t>& out) {
  if (g.deg() <= 0) return;
  if (g.deg() == 1) {
    auto m = g.monic();
    out.push_back(k.neg(m.c[0]));
    return;
  }
  for (int attempt = 0; attempt < 64; ++attempt) {
    Poly<FpField> shift(k, {k.sample(rng), k.one()});
    auto h = poly_pow_mod(shift, (k.p - 1) / 2, g);
    h = poly_add(h, Poly<FpField>::constant(k, k.neg(k.one())));
    auto d = poly_gcd(h, g);
    if (d.deg() > 0 && d.deg() < g.deg()) {
      fp_split_linear(k, d, rng, out);
      fp_split_linear(k, poly_divmod(g, d).first, rng, out);
      return;
    }
  }
  throw InternalError("equal-degree splitting did not converge");
}

} // namespace detail

/// Roots of f lying in the field, with multiplicities, plus the root-free
/// cofactor.  Over F_p the extraction is complete; over Q it finds small
/// integer/rational roots (enough for structure constants of desk-scale
/// algebras -- anything unsplit is handled by passing to a large prime
/// field at the call site).
template <class K>
struct RootSplit {
  std::vector<std::pair<typename K::Elem, int>> roots;
  Poly<K> cofactor;
};

inline RootSplit<FpField> poly_roots(const FpField& k, const Poly<FpField>& f_in,
                                     Rng& rng) {
  RootSplit<FpField> out;
  Poly<FpField> f = f_in.monic();
  // distinct linear part: gcd(f, x^p - x)
  auto xp = poly_xpow_mod(k, k.p, f);
  auto diff = poly_add(xp, Poly<FpField>(k, {k.zero(), k.neg(k.one())}));
  auto lin = poly_gcd(diff, f);
  std::vector<uint64_t> roots;
  detail::fp_split_linear(k, lin, rng, roots);
  std::sort(roots.begin(), roots.end());
  for (auto r : roots) {
    int mult = 0;
    while (true) {
      auto [q, rem] = poly_divmod(f, Poly<FpField>::x_minus(k, r));
      if (!rem.is_zero()) break;
      f = q;
      ++mult;
    }
    out.roots.push_back({r, mult});
  }
  out.cofactor = f;
  return out;
}

inline RootSplit<RatField> poly_roots(const RatField& k, const Poly<RatField>& f_in,
                                      Rng&) {
  RootSplit<RatField> out;
  Poly<RatField> f = f_in.monic();
  // Clear denominators, then try divisors of the constant term over
  // divisors of the leading coefficient (plus a small fixed range).
  std::vector<BigRat> candidates = {0, 1, -1, 2, -2, 3, -3};
  {
    BigInt denlcm = 1;
    for (const auto& c : f.c) denlcm = lcm(denlcm, denominator(c));
    std::vector<BigInt> ic;
    for (const auto& c : f.c) ic.push_back(numerator(BigRat(c * denlcm)));
    BigInt a0 = abs(ic.front()), an = abs(ic.back());
    auto small_divisors = [](BigInt v) {
      std::vector<BigInt> ds;
      if (v == 0) return ds;
      for (BigInt d = 1; d * d <= v && d < 100000; ++d)
        if (v % d == 0) {
          ds.push_back(d);
          ds.push_back(v / d);
        }
      return ds;
    };
    for (const auto& p : small_divisors(a0))
      for (const auto& q : small_divisors(an)) {
        candidates.push_back(BigRat(p, q));
        candidates.push_back(BigRat(-p, q));
      }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  for (const auto& r : candidates) {
    if (f.deg() <= 0) break;
    if (!k.is_zero(f.eval(r))) continue;
    int mult = 0;
    while (true) {
      auto [q, rem] = poly_divmod(f, Poly<RatField>::x_minus(k, r));
      if (!rem.is_zero()) break;
      f = q;
      ++mult;
    }
    out.roots.push_back({r, mult});
  }
  out.cofactor = f;
  return out;
}

/// Evaluate p at a square matrix.
template <class K>
Mat<K> poly_at_matrix(const Poly<K>& p, const Mat<K>& A) {
  const K& k = A.k;
  Mat<K> r = Mat<K>::zero(k, A.n, A.n);
  for (int i = p.deg(); i >= 0; --i) {
    r = r * A;
    for (int d = 0; d < A.n; ++d) r.at(d, d) = k.add(r.at(d, d), p.c[i]);
  }
  return r;
}

} // namespace fatdual
