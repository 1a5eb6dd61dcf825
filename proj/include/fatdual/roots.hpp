#pragma once

#include <vector>

#include "fatdual/forms.hpp"
#include "fatdual/matrix.hpp"

namespace fatdual {

enum class RootKind { Real, Imaginary };
enum class RegionClass { Preprojective, Regular, Preinjective };

struct Root {
  DimVector d;
  RootKind kind = RootKind::Real;
  BigInt defect = 0; // <delta, d>; zero on Dynkin quivers
};

/// All nonzero d in the coordinate box [0, bound]^n with Q(d) in {0, 1},
/// lexicographically ordered.  For Dynkin quivers the list is complete and
/// bound-independent once bound >= 6.
inline std::vector<Root> positive_roots(const Quiver& q, int bound) {
  auto cls = classify(q);
  if (cls.kind == GraphKind::Wild)
    throw DomainError("wild quiver", "root enumeration needs Dynkin or Euclidean");
  if (bound <= 0) throw DomainError("bad bound", "bound must be positive");
  auto f = quiver_form(q);
  DimVector del;
  if (cls.kind == GraphKind::Euclidean) del = delta(q);

  std::vector<Root> out;
  DimVector d(q.vertex_count, 0);
  while (true) {
    // advance odometer
    int i = 0;
    while (i < q.vertex_count && d[i] == bound) d[i++] = 0;
    if (i == q.vertex_count) break;
    ++d[i];
    BigInt qd = tits_quadratic(f, d);
    if (qd != 0 && qd != 1) continue;
    Root r;
    r.d = d;
    r.kind = (qd == 1) ? RootKind::Real : RootKind::Imaginary;
    if (!del.empty()) r.defect = bilinear(f, del, d);
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(),
            [](const Root& a, const Root& b) { return a.d < b.d; });
  return out;
}

/// Integer Coxeter matrix Phi = -E^{-1} E^T; the dimension-vector shadow of
/// the Auslander-Reiten translation (dim tau M = Phi dim M for
/// non-projective indecomposables).
struct CoxeterMatrix {
  int n = 0;
  std::vector<std::vector<BigInt>> phi;

  DimVector apply(const DimVector& d) const {
    FATDUAL_CHECK((int)d.size() == n, "Coxeter apply dimension mismatch");
    DimVector r(n, 0);
    for (int i = 0; i < n; ++i) {
      BigInt s = 0;
      for (int j = 0; j < n; ++j) s += phi[i][j] * d[j];
      r[i] = (long long)s;
    }
    return r;
  }
};

inline CoxeterMatrix coxeter(const Quiver& q) {
  auto cls = classify(q);
  if (cls.kind == GraphKind::Wild)
    throw DomainError("wild quiver", "Coxeter matrix needs Dynkin or Euclidean");
  if (q.has_oriented_cycle())
    throw DomainError("oriented cycle",
                      "path algebra is infinite dimensional; use an acyclic "
                      "orientation");
  int n = q.vertex_count;
  auto f = quiver_form(q);
  RatField kq;
  Mat<RatField> e(kq, n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) e.at(i, j) = BigRat(f.entries[i][j]);
  auto einv = inverse(e);
  FATDUAL_CHECK(einv.has_value(), "Euler matrix of an acyclic quiver is unimodular");
  auto phi_rat = (*einv) * e.transpose();
  CoxeterMatrix c;
  c.n = n;
  c.phi.assign(n, std::vector<BigInt>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      BigRat v = -phi_rat.at(i, j);
      FATDUAL_CHECK(denominator(v) == 1, "Coxeter matrix must be integral");
      c.phi[i][j] = numerator(v);
    }
  return c;
}

inline CoxeterMatrix coxeter_inverse(const Quiver& q) {
  auto c = coxeter(q);
  RatField kq;
  Mat<RatField> m(kq, c.n, c.n);
  for (int i = 0; i < c.n; ++i)
    for (int j = 0; j < c.n; ++j) m.at(i, j) = BigRat(c.phi[i][j]);
  auto inv = inverse(m);
  FATDUAL_CHECK(inv.has_value(), "Coxeter matrix is invertible over Z");
  CoxeterMatrix r;
  r.n = c.n;
  r.phi.assign(c.n, std::vector<BigInt>(c.n));
  for (int i = 0; i < c.n; ++i)
    for (int j = 0; j < c.n; ++j) {
      FATDUAL_CHECK(denominator(inv->at(i, j)) == 1, "Phi^{-1} integral");
      r.phi[i][j] = numerator(inv->at(i, j));
    }
  return r;
}

/// Defect classification of a root over a Euclidean quiver; the convention
/// defect(d) = <delta, d> is pinned by the Coxeter-iteration oracle below.
inline RegionClass classify_root(const Quiver& q, const Root& r) {
  auto cls = classify(q);
  if (cls.kind != GraphKind::Euclidean)
    throw DomainError("not Euclidean", "defect classification needs a Euclidean quiver");
  auto f = quiver_form(q);
  BigInt qd = tits_quadratic(f, r.d);
  if (qd != 0 && qd != 1)
    throw DomainError("not a root", "vector is not a root");
  BigInt def = bilinear(f, delta(q), r.d);
  if (def < 0) return RegionClass::Preprojective;
  if (def > 0) return RegionClass::Preinjective;
  return RegionClass::Regular;
}

/// Independent oracle: iterate the Coxeter matrix.  Preprojective roots hit
/// a negative coordinate under Phi^k (k > 0), preinjective under Phi^{-k},
/// regular roots stay non-negative both ways.
inline RegionClass coxeter_iteration_class(const Quiver& q, const DimVector& d,
                                           int max_iter = 64) {
  auto phi = coxeter(q);
  auto phi_inv = coxeter_inverse(q);
  auto negative = [](const DimVector& v) {
    for (auto x : v)
      if (x < 0) return true;
    return false;
  };
  DimVector fwd = d, bwd = d;
  for (int i = 0; i < max_iter; ++i) {
    fwd = phi.apply(fwd);
    if (negative(fwd)) return RegionClass::Preprojective;
    bwd = phi_inv.apply(bwd);
    if (negative(bwd)) return RegionClass::Preinjective;
  }
  return RegionClass::Regular;
}

} // namespace fatdual
