#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fatdual/bimod.hpp"

namespace fatdual {

// ---------------------------------------------------------------------------
// Hom-order tests (necessary conditions for degeneration)
// ---------------------------------------------------------------------------

struct HomOrderVerdict {
  bool consistent = true;
  int refuting_probe = -1; // index into the probe list
};

/// Necessary condition for w >= w' (w' in the orbit closure of w): for
/// every probe z, dim Hom(w,z) <= dim Hom(w',z) and
/// dim Hom(z,w) <= dim Hom(z,w').  Finite probing is a falsification
/// strategy; `consistent` is never a proof.
template <class K>
HomOrderVerdict hom_order_leq(const TriangularAlgebra<K>& t,
                              const BimoduleElement<K>& w,
                              const BimoduleElement<K>& wp,
                              const std::vector<BimoduleElement<K>>& probes) {
  if (!(w.shape == wp.shape))
    throw DomainError("shape mismatch", "hom order compares equal shapes");
  for (size_t i = 0; i < probes.size(); ++i) {
    const auto& z = probes[i];
    if (hom_dim(t, w, z) > hom_dim(t, wp, z) ||
        hom_dim(t, z, w) > hom_dim(t, z, wp))
      return {false, (int)i};
  }
  return {true, -1};
}

/// Default probe set when no census is available: w, w' and a few random
/// elements of the same shape.
template <class K>
std::vector<BimoduleElement<K>> default_probes(const TriangularAlgebra<K>& t,
                                               const BimoduleElement<K>& w,
                                               const BimoduleElement<K>& wp,
                                               uint64_t seed, int extra = 20) {
  Rng rng(seed);
  std::vector<BimoduleElement<K>> probes{w, wp};
  for (int i = 0; i < extra; ++i)
    probes.push_back(random_element(t, w.shape, rng));
  return probes;
}

// ---------------------------------------------------------------------------
// Conflation witnesses (Riedtmann-Zwara certificates)
// ---------------------------------------------------------------------------

/// Witness for w >= w': a conflation w' -> w + v -> v, i.e. morphisms whose
/// underlying projective sequence 0 -> P' -> P + Q -> Q -> 0 is exact.
template <class K>
struct ConflationWitness {
  BimoduleElement<K> v;
  HomPair<K> alpha; // w' -> w + v
  HomPair<K> beta;  // w + v -> v
};

template <class K>
Mat<K> underlying_module_map(const TriangularAlgebra<K>& t, const HomPair<K>& h) {
  return block_diag(h.alpha1, module_matrix(t, h.alpha2));
}

/// Exact verification of all witness invariants; true certifies the
/// degeneration w >= w'.
template <class K>
bool verify_witness(const TriangularAlgebra<K>& t, const BimoduleElement<K>& w,
                    const BimoduleElement<K>& wp, const ConflationWitness<K>& cw) {
  if (!(w.shape == wp.shape)) return false;
  auto mid = direct_sum(t, w, cw.v);
  if (!is_morphism(t, wp, mid, cw.alpha)) return false;
  if (!is_morphism(t, mid, cw.v, cw.beta)) return false;
  auto am = underlying_module_map(t, cw.alpha);
  auto bm = underlying_module_map(t, cw.beta);
  long long dw = module_dim(t, wp.shape);
  long long dv = module_dim(t, cw.v.shape);
  long long dm = module_dim(t, mid.shape);
  if (dw + dv != dm) return false;
  if (rank(am) != (int)dw) return false; // injective
  if (rank(bm) != (int)dv) return false; // surjective
  if (!(bm * am).is_zero()) return false;
  return true; // im(alpha) = ker(beta) by the rank count
}

namespace detail {

/// Candidate middle-term morphisms: basis elements, signed pairs of basis
/// elements, then random combinations.
template <class K>
std::vector<HomPair<K>> morphism_candidates(const TriangularAlgebra<K>& t,
                                            const std::vector<HomPair<K>>& basis,
                                            Rng& rng, int randoms) {
  const K& k = t.k;
  std::vector<HomPair<K>> out = basis;
  for (size_t i = 0; i < basis.size(); ++i)
    for (size_t j = i + 1; j < basis.size(); ++j) {
      out.push_back(hom_add(basis[i], basis[j]));
      out.push_back(hom_add(basis[i], hom_scaled(t, basis[j], k.neg(k.one()))));
    }
  for (int r = 0; r < randoms && !basis.empty(); ++r) {
    HomPair<K> h = hom_scaled(t, basis[0], k.sample(rng));
    for (size_t i = 1; i < basis.size(); ++i)
      h = hom_add(h, hom_scaled(t, basis[i], k.sample(rng)));
    out.push_back(h);
  }
  return out;
}

} // namespace detail

/// Search for a conflation witness with dim M(v) bounded.  Candidate v's
/// are zero elements, Krull-Schmidt summands of w and w' (and their direct
/// sums), and random elements; for each v the morphism constraints are
/// solved as linear systems with exactness checked by rank.  NotFound is
/// inconclusive, never a refutation.
template <class K>
std::optional<ConflationWitness<K>> search_witness(const TriangularAlgebra<K>& t,
                                                   const BimoduleElement<K>& w,
                                                   const BimoduleElement<K>& wp,
                                                   long long v_dim_bound,
                                                   uint64_t seed) {
  if (!(w.shape == wp.shape))
    throw DomainError("shape mismatch", "witness search compares equal shapes");
  Rng rng(seed);

  // trivial witness first: w' isomorphic to w
  {
    ConflationWitness<K> cw{zero_element(t, Shape{std::vector<int>(t.nv1, 0),
                                                  std::vector<int>(t.a2.nv, 0)}),
                            HomPair<K>{}, HomPair<K>{}};
    auto homs = hom_w(t, wp, w);
    for (auto& h : detail::morphism_candidates(t, homs, rng, 8)) {
      if (inverse(underlying_module_map(t, h))) {
        cw.alpha = h; // beta is the empty map to v = 0
        cw.beta.alpha1 = Mat<K>(t.k, 0, p1_layout(w.shape.p1).total);
        cw.beta.alpha2 = A2Map<K>::zero(t, w.shape.p2, cw.v.shape.p2);
        if (verify_witness(t, w, wp, cw)) return cw;
      }
    }
  }

  // candidate v pool
  std::vector<BimoduleElement<K>> pool;
  auto add_candidate = [&](const BimoduleElement<K>& e) {
    if (module_dim(t, e.shape) == 0 || module_dim(t, e.shape) > v_dim_bound)
      return;
    for (auto& p : pool)
      if (p == e) return;
    pool.push_back(e);
  };
  std::vector<BimoduleElement<K>> pieces;
  for (const auto* src : {&w, &wp}) {
    try {
      auto ks = krull_schmidt_element(t, *src, rng.next());
      for (auto& s : ks) pieces.push_back(s.element);
    } catch (const DomainError&) {
      pieces.push_back(*src); // splitting unavailable over this field
    }
  }
  for (auto& p : pieces) add_candidate(p);
  // direct sums of two pieces
  for (size_t i = 0; i < pieces.size(); ++i)
    for (size_t j = 0; j < pieces.size(); ++j)
      add_candidate(direct_sum(t, pieces[i], pieces[j]));
  // zero elements of small shapes contained in w's shape
  {
    Shape z{std::vector<int>(t.nv1, 0), std::vector<int>(t.a2.nv, 0)};
    for (int a = 0; a < t.nv1; ++a)
      for (int c = 1; c <= w.shape.p1[a]; ++c) {
        Shape s = z;
        s.p1[a] = c;
        add_candidate(zero_element(t, s));
      }
    for (int j = 0; j < t.a2.nv; ++j)
      for (int c = 1; c <= w.shape.p2[j]; ++c) {
        Shape s = z;
        s.p2[j] = c;
        add_candidate(zero_element(t, s));
      }
  }
  // a few random elements of the piece shapes
  for (auto& p : pieces) {
    add_candidate(random_element(t, p.shape, rng));
  }

  std::stable_sort(pool.begin(), pool.end(),
                   [&](const BimoduleElement<K>& a, const BimoduleElement<K>& b) {
                     return module_dim(t, a.shape) < module_dim(t, b.shape);
                   });

  for (auto& v : pool) {
    auto mid = direct_sum(t, w, v);
    auto alpha_basis = hom_w(t, wp, mid);
    if (alpha_basis.empty()) continue;
    long long need_rank = module_dim(t, wp.shape);
    auto beta_space = hom_w(t, mid, v);
    if (beta_space.empty()) continue;
    for (auto& alpha : detail::morphism_candidates(t, alpha_basis, rng, 24)) {
      auto am = underlying_module_map(t, alpha);
      if (rank(am) != (int)need_rank) continue;
      // betas with beta . alpha = 0: linear subspace of the beta space
      int rows = (int)(module_dim(t, v.shape) * module_dim(t, wp.shape));
      Mat<K> cond(t.k, rows, (int)beta_space.size());
      for (size_t b = 0; b < beta_space.size(); ++b) {
        auto comp = underlying_module_map(t, beta_space[b]) * am;
        for (int i = 0; i < comp.m; ++i)
          for (int j = 0; j < comp.n; ++j)
            cond.at(i * comp.n + j, (int)b) = comp.at(i, j);
      }
      auto ker = kernel(cond);
      if (ker.n == 0) continue;
      std::vector<HomPair<K>> beta_sub;
      for (int c = 0; c < ker.n; ++c) {
        HomPair<K> h = hom_scaled(t, beta_space[0], ker.at(0, c));
        for (size_t b = 1; b < beta_space.size(); ++b)
          h = hom_add(h, hom_scaled(t, beta_space[b], ker.at((int)b, c)));
        beta_sub.push_back(h);
      }
      long long beta_rank = module_dim(t, v.shape);
      for (auto& beta : detail::morphism_candidates(t, beta_sub, rng, 24)) {
        if (rank(underlying_module_map(t, beta)) != (int)beta_rank) continue;
        ConflationWitness<K> cw{v, alpha, beta};
        if (verify_witness(t, w, wp, cw)) return cw;
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Finite-field census
// ---------------------------------------------------------------------------

template <class K>
struct CensusOrbit {
  BimoduleElement<K> representative;
  BigInt size = 0;
  long long end_dim = 0;
  BigInt aut_order = 0;
};

template <class K>
struct OrbitCensus {
  int q = 0;
  Shape shape;
  long long space_dim = 0;
  std::vector<CensusOrbit<K>> orbits;
  // hom_table[i][j] = dim Hom(rep_i, rep_j)
  std::vector<std::vector<long long>> hom_table;
  BigInt group_order = 0; // |GL(P1)| * |GL(P2)|
};

inline BigInt gl_order(int q, int n) {
  BigInt total = 1, qn = 1;
  for (int i = 0; i < n; ++i) qn *= q;
  BigInt qi = 1;
  for (int i = 0; i < n; ++i) {
    total *= (qn - qi);
    qi *= q;
  }
  return total;
}

/// |GL(P, A)| over F_q for a basic algebra: top units times the radical
/// part of End(P).
template <class K>
BigInt gl_order_basic(const TriangularAlgebra<K>& t, const Shape& sh, int q) {
  BigInt total = 1;
  for (int a = 0; a < t.nv1; ++a) total *= gl_order(q, sh.p1[a]);
  for (int v = 0; v < t.a2.nv; ++v) total *= gl_order(q, sh.p2[v]);
  long long rad_dim = 0;
  for (int m = t.a2.nv; m < t.a2.dim(); ++m) {
    auto [tl, hd] = t.a2.grade[m];
    rad_dim += (long long)sh.p2[hd] * sh.p2[tl];
  }
  BigInt qr = 1;
  for (long long i = 0; i < rad_dim; ++i) qr *= q;
  return total * qr;
}

/// Exhaustive enumeration of all q^N elements of the shape, grouped into
/// isomorphism classes certified by explicit invertible morphisms.
template <class K>
OrbitCensus<K> census(const TriangularAlgebra<K>& t, const Shape& sh, int q_size) {
  const K& k = t.k;
  if (q_size > 4)
    throw DomainError("census too large", "census supports q <= 4");
  auto wl = WP2Layout<K>::make(t, sh.p2);
  // allowed cells
  std::vector<std::pair<int, int>> cells;
  {
    auto proto = zero_element(t, sh);
    for (int r = 0; r < proto.mat.m; ++r) {
      int g = a1_grade_of_row(t, sh.p1, r);
      for (int c = 0; c < proto.mat.n; ++c)
        if (wl.lgrade_of_col[c] == g) cells.push_back({r, c});
    }
  }
  if ((long long)cells.size() > 12)
    throw DomainError("census too large", "census supports dim W-space <= 12");

  OrbitCensus<K> out;
  out.q = q_size;
  out.shape = sh;
  out.space_dim = (long long)cells.size();
  out.group_order = gl_order_basic(t, sh, q_size);

  // enumerate field values 0..q-1 via from_int (valid for q prime; for
  // GF(4) the raw bit patterns 0..3 enumerate the field)
  auto value_of = [&](int digit) {
    if constexpr (std::is_same_v<K, SmallField>)
      return (typename K::Elem)digit;
    else
      return k.from_int(digit);
  };

  std::vector<int> odo(cells.size(), 0);
  bool done = cells.empty();
  auto make_elem = [&]() {
    auto e = zero_element(t, sh);
    for (size_t i = 0; i < cells.size(); ++i)
      e.mat.at(cells[i].first, cells[i].second) = value_of(odo[i]);
    return e;
  };

  Rng rng(0xCE4505);
  long long total_seen = 0;
  while (true) {
    auto e = make_elem();
    ++total_seen;
    long long ed = hom_dim(t, e, e);
    int found = -1;
    for (size_t oi = 0; oi < out.orbits.size(); ++oi) {
      auto& o = out.orbits[oi];
      if (o.end_dim != ed) continue;
      if (hom_dim(t, e, o.representative) != ed ||
          hom_dim(t, o.representative, e) != ed)
        continue;
      // certified isomorphism: enumerate the Hom space for an invertible
      // element (complete for these tiny spaces)
      auto homs = hom_w(t, e, o.representative);
      long long combos = 1;
      for (size_t h = 0; h < homs.size(); ++h) combos *= q_size;
      bool cert = false;
      if (combos <= 1 << 16) {
        std::vector<int> c(homs.size(), 0);
        while (true) {
          int ii = 0;
          while (ii < (int)c.size() && c[ii] == q_size - 1) c[ii++] = 0;
          if (ii == (int)c.size()) break;
          ++c[ii];
          HomPair<K> h = hom_scaled(t, homs[0], value_of(c[0]));
          for (size_t b = 1; b < homs.size(); ++b)
            h = hom_add(h, hom_scaled(t, homs[b], value_of(c[(int)b])));
          if (inverse(h.alpha1) && inverse(module_matrix(t, h.alpha2))) {
            cert = true;
            break;
          }
        }
      } else {
        cert = elements_isomorphic(t, e, o.representative, rng);
      }
      if (cert) {
        found = (int)oi;
        break;
      }
    }
    if (found < 0) {
      CensusOrbit<K> o;
      o.representative = e;
      o.end_dim = ed;
      o.size = 1;
      out.orbits.push_back(std::move(o));
    } else {
      out.orbits[found].size += 1;
    }
    // advance odometer
    size_t i = 0;
    while (i < odo.size() && odo[i] == q_size - 1) odo[i++] = 0;
    if (i == odo.size()) break;
    ++odo[i];
    if (done) break;
  }

  // |Aut| per orbit by enumerating units of End
  for (auto& o : out.orbits) {
    auto end = hom_w(t, o.representative, o.representative);
    long long combos = 1;
    for (size_t h = 0; h < end.size(); ++h) combos *= q_size;
    FATDUAL_CHECK(combos <= (1 << 20), "census End space too large to count");
    BigInt units = 0;
    std::vector<int> c(end.size(), 0);
    while (true) {
      HomPair<K> h = hom_scaled(t, end[0], value_of(c[0]));
      for (size_t b = 1; b < end.size(); ++b)
        h = hom_add(h, hom_scaled(t, end[b], value_of(c[(int)b])));
      if (inverse(h.alpha1) && inverse(module_matrix(t, h.alpha2))) units += 1;
      size_t i = 0;
      while (i < c.size() && c[i] == q_size - 1) c[i++] = 0;
      if (i == c.size()) break;
      ++c[i];
    }
    o.aut_order = units;
    // orbit-stabilizer, exact integers
    FATDUAL_CHECK(o.size * o.aut_order == out.group_order,
                  "orbit-stabilizer identity failed");
  }

  // total count
  {
    BigInt total = 0;
    for (auto& o : out.orbits) total += o.size;
    BigInt qn = 1;
    for (long long i = 0; i < out.space_dim; ++i) qn *= q_size;
    FATDUAL_CHECK(total == qn, "orbit sizes must sum to q^N");
  }

  // full pairwise Hom table
  out.hom_table.assign(out.orbits.size(),
                       std::vector<long long>(out.orbits.size(), 0));
  for (size_t i = 0; i < out.orbits.size(); ++i)
    for (size_t j = 0; j < out.orbits.size(); ++j)
      out.hom_table[i][j] =
          hom_dim(t, out.orbits[i].representative, out.orbits[j].representative);
  return out;
}

/// DOT digraph of the witness-certified degeneration relation between the
/// census orbits (edge i -> j when orbit j is a certified degeneration of
/// orbit i).
template <class K>
std::string census_degeneration_dot(const TriangularAlgebra<K>& t,
                                    const OrbitCensus<K>& c, long long v_bound,
                                    uint64_t seed) {
  std::ostringstream os;
  os << "digraph degenerations {\n";
  for (size_t i = 0; i < c.orbits.size(); ++i)
    os << "  o" << i << " [label=\"end=" << c.orbits[i].end_dim
       << " size=" << c.orbits[i].size.str() << "\"];\n";
  for (size_t i = 0; i < c.orbits.size(); ++i)
    for (size_t j = 0; j < c.orbits.size(); ++j) {
      if (i == j) continue;
      auto& wi = c.orbits[i].representative;
      auto& wj = c.orbits[j].representative;
      std::vector<BimoduleElement<K>> probes;
      for (auto& o : c.orbits) probes.push_back(o.representative);
      if (!hom_order_leq(t, wi, wj, probes).consistent) continue;
      if (search_witness(t, wi, wj, v_bound, seed).has_value())
        os << "  o" << i << " -> o" << j << ";\n";
    }
  os << "}\n";
  return os.str();
}

} // namespace fatdual
