#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "fatdual/error.hpp"

namespace fatdual {

/// Finite directed multigraph without loops.  Vertices are 0-based and
/// contiguous; parallel arrows and arbitrary orientations are allowed.
struct Quiver {
  int vertex_count = 0;
  std::vector<std::pair<int, int>> arrows; // (source, target)

  static Quiver make(int vertices, std::vector<std::pair<int, int>> arrows) {
    if (vertices <= 0)
      throw DomainError("empty quiver", "quiver needs at least one vertex");
    for (auto [s, t] : arrows) {
      if (s < 0 || s >= vertices || t < 0 || t >= vertices)
        throw DomainError("bad arrow", "arrow endpoint out of range");
      if (s == t)
        throw DomainError("loop", "loops are not allowed");
    }
    return Quiver{vertices, std::move(arrows)};
  }

  bool has_oriented_cycle() const {
    std::vector<int> indeg(vertex_count, 0);
    for (auto [s, t] : arrows) ++indeg[t];
    std::vector<int> queue;
    for (int v = 0; v < vertex_count; ++v)
      if (indeg[v] == 0) queue.push_back(v);
    int seen = 0;
    while (!queue.empty()) {
      int v = queue.back();
      queue.pop_back();
      ++seen;
      for (auto [s, t] : arrows)
        if (s == v && --indeg[t] == 0) queue.push_back(t);
    }
    return seen < vertex_count;
  }
};

enum class GraphKind { Dynkin, Euclidean, Wild };

/// Diagram families.  TA..TE are the extended (tilde) versions.
enum class DiagramFamily { A, D, E, TA, TD, TE, None };

struct GraphClass {
  GraphKind kind = GraphKind::Wild;
  DiagramFamily family = DiagramFamily::None;
  int index = 0; // the n of A_n, D_n, E_n / tilde versions
  /// relabel[v] = vertex of the standard diagram that v maps to
  /// (empty for Wild).
  std::vector<int> relabel;

  std::string name() const {
    switch (family) {
      case DiagramFamily::A: return "A" + std::to_string(index);
      case DiagramFamily::D: return "D" + std::to_string(index);
      case DiagramFamily::E: return "E" + std::to_string(index);
      case DiagramFamily::TA: return "A~" + std::to_string(index);
      case DiagramFamily::TD: return "D~" + std::to_string(index);
      case DiagramFamily::TE: return "E~" + std::to_string(index);
      case DiagramFamily::None: return "wild";
    }
    return "wild";
  }
};

/// Standard diagrams with the labeling used throughout the library:
///   A_n    path 0-1-...-(n-1)
///   D_n    leaves 0,1 on vertex 2, then path 2-3-...-(n-1)
///   E_n    path 0-...-(n-2) with vertex (n-1) attached to 2
///   A~n    cycle 0-1-...-n-0
///   D~4    leaves 0..3 around center 4
///   D~n    leaves 0,1 on 2, path 2-...-(n-2), leaves n-1,n on n-2
///   E~6    center 0 with legs 0-1-2, 0-3-4, 0-5-6
///   E~7    path 0-...-6 with 7 attached to 3
///   E~8    path 0-...-7 with 8 attached to 2
inline std::vector<std::pair<int, int>> standard_edges(DiagramFamily f, int n) {
  std::vector<std::pair<int, int>> e;
  auto path = [&](int from, int to) {
    for (int i = from; i < to; ++i) e.push_back({i, i + 1});
  };
  switch (f) {
    case DiagramFamily::A:
      path(0, n - 1);
      break;
    case DiagramFamily::D:
      FATDUAL_CHECK(n >= 4, "D_n needs n >= 4");
      e.push_back({0, 2});
      e.push_back({1, 2});
      path(2, n - 1);
      break;
    case DiagramFamily::E:
      FATDUAL_CHECK(n >= 6 && n <= 8, "E_n needs n in 6..8");
      path(0, n - 2);
      e.push_back({n - 1, 2});
      break;
    case DiagramFamily::TA:
      FATDUAL_CHECK(n >= 1, "A~n needs n >= 1");
      path(0, n);
      e.push_back({0, n});
      break;
    case DiagramFamily::TD:
      FATDUAL_CHECK(n >= 4, "D~n needs n >= 4");
      if (n == 4) {
        for (int i = 0; i < 4; ++i) e.push_back({i, 4});
      } else {
        e.push_back({0, 2});
        e.push_back({1, 2});
        path(2, n - 2);
        e.push_back({n - 1, n - 2});
        e.push_back({n, n - 2});
      }
      break;
    case DiagramFamily::TE:
      FATDUAL_CHECK(n >= 6 && n <= 8, "E~n needs n in 6..8");
      if (n == 6) {
        e = {{0, 1}, {1, 2}, {0, 3}, {3, 4}, {0, 5}, {5, 6}};
      } else if (n == 7) {
        path(0, 6);
        e.push_back({7, 3});
      } else {
        path(0, 7);
        e.push_back({8, 2});
      }
      break;
    case DiagramFamily::None:
      throw InternalError("no standard edges for wild");
  }
  return e;
}

inline int diagram_vertex_count(DiagramFamily f, int n) {
  switch (f) {
    case DiagramFamily::A:
    case DiagramFamily::D:
    case DiagramFamily::E:
      return n;
    case DiagramFamily::TA:
    case DiagramFamily::TD:
    case DiagramFamily::TE:
      return n + 1;
    case DiagramFamily::None:
      return 0;
  }
  return 0;
}

/// Standard quiver with every edge oriented low -> high (always acyclic,
/// even for the A~ cycle).
inline Quiver standard_quiver(DiagramFamily f, int n) {
  auto edges = standard_edges(f, n);
  std::vector<std::pair<int, int>> arrows;
  for (auto [a, b] : edges) arrows.push_back({std::min(a, b), std::max(a, b)});
  return Quiver::make(diagram_vertex_count(f, n), std::move(arrows));
}

inline std::vector<std::vector<int>> undirected_adjacency(const Quiver& q) {
  std::vector<std::vector<int>> adj(q.vertex_count,
                                    std::vector<int>(q.vertex_count, 0));
  for (auto [s, t] : q.arrows) {
    ++adj[s][t];
    ++adj[t][s];
  }
  return adj;
}

namespace detail {

inline std::vector<int> component_labels(const Quiver& q) {
  std::vector<int> label(q.vertex_count, -1);
  int next = 0;
  for (int start = 0; start < q.vertex_count; ++start) {
    if (label[start] >= 0) continue;
    std::vector<int> stack{start};
    label[start] = next;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (auto [s, t] : q.arrows) {
        int other = -1;
        if (s == v) other = t;
        else if (t == v) other = s;
        if (other >= 0 && label[other] < 0) {
          label[other] = next;
          stack.push_back(other);
        }
      }
    }
    ++next;
  }
  return label;
}

/// Backtracking graph isomorphism onto a standard diagram; graphs here have
/// at most ~10 vertices.  Returns the lexicographically first map
/// input-vertex -> standard-vertex, or empty if none exists.
inline std::vector<int> find_relabel(const std::vector<std::vector<int>>& a,
                                     const std::vector<std::vector<int>>& b) {
  int n = (int)a.size();
  if ((int)b.size() != n) return {};
  std::vector<int> map(n, -1), used(n, 0);
  std::vector<int> adeg(n, 0), bdeg(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      adeg[i] += a[i][j];
      bdeg[i] += b[i][j];
    }
  auto rec = [&](auto&& self, int v) -> bool {
    if (v == n) return true;
    for (int w = 0; w < n; ++w) {
      if (used[w] || adeg[v] != bdeg[w]) continue;
      bool ok = true;
      for (int u = 0; u < v; ++u)
        if (a[v][u] != b[w][map[u]]) {
          ok = false;
          break;
        }
      if (!ok) continue;
      map[v] = w;
      used[w] = 1;
      if (self(self, v + 1)) return true;
      used[w] = 0;
      map[v] = -1;
    }
    return false;
  };
  if (!rec(rec, 0)) return {};
  return map;
}

/// Positive-definiteness analysis of a symmetric integer matrix by exact
/// symmetric elimination.  Returns (is_psd, kernel_dimension); a negative
/// pivot or a zero pivot with a nonzero row means indefinite.
inline std::pair<bool, int> psd_analysis(std::vector<std::vector<long long>> c) {
  int n = (int)c.size();
  // work over rationals encoded as long double?  No: do fraction-free
  // symmetric elimination with exact rationals via long long pairs would be
  // messy; at n <= 10 with entries in [-4,4] long double would even work,
  // but we stay exact: scale rows to a common denominator step by step
  // using rational arithmetic on (num, den) pairs stored as long double is
  // not exact.  Use boost rationals instead.
  std::vector<std::vector<BigRat>> m(n, std::vector<BigRat>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[i][j] = c[i][j];
  int kernel = 0;
  for (int i = 0; i < n; ++i) {
    if (m[i][i] < 0) return {false, 0};
    if (m[i][i] == 0) {
      for (int j = i; j < n; ++j)
        if (m[i][j] != 0) return {false, 0};
      ++kernel;
      continue;
    }
    for (int r = i + 1; r < n; ++r) {
      if (m[r][i] == 0) continue;
      BigRat f = m[r][i] / m[i][i];
      for (int jj = i; jj < n; ++jj) m[r][jj] -= f * m[i][jj];
    }
    // keep symmetry of the trailing block
    for (int r = i + 1; r < n; ++r)
      for (int jj = r + 1; jj < n; ++jj) m[jj][r] = m[r][jj];
  }
  return {true, kernel};
}

inline GraphClass classify_connected(const Quiver& q) {
  int n = q.vertex_count;
  auto adj = undirected_adjacency(q);
  int edges = (int)q.arrows.size();
  std::vector<int> deg(n, 0);
  bool multi = false;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      deg[i] += adj[i][j];
      if (i < j && adj[i][j] > 1) multi = true;
    }

  GraphClass out;
  DiagramFamily fam = DiagramFamily::None;
  int index = 0;

  auto finish = [&](GraphKind kind) {
    out.kind = kind;
    out.family = fam;
    out.index = index;
    if (fam != DiagramFamily::None) {
      auto std_adj =
          undirected_adjacency(standard_quiver(fam, index));
      out.relabel = find_relabel(adj, std_adj);
      FATDUAL_CHECK(!out.relabel.empty(),
                    "diagram recognized but no relabeling found");
    }
    return out;
  };

  // pattern match against the diagram list
  if (n == 1 && edges == 0) {
    fam = DiagramFamily::A;
    index = 1;
    return finish(GraphKind::Dynkin);
  }
  if (multi) {
    if (n == 2 && edges == 2) {
      fam = DiagramFamily::TA;
      index = 1;
      return finish(GraphKind::Euclidean); // Kronecker
    }
    return finish(GraphKind::Wild);
  }
  if (edges == n) {
    bool all_two = std::all_of(deg.begin(), deg.end(),
                               [](int d) { return d == 2; });
    if (all_two && n >= 3) {
      fam = DiagramFamily::TA;
      index = n - 1;
      return finish(GraphKind::Euclidean);
    }
    return finish(GraphKind::Wild);
  }
  if (edges != n - 1) return finish(GraphKind::Wild); // not a tree

  // tree: look at branch vertices and leg lengths
  std::vector<int> branches;
  for (int v = 0; v < n; ++v)
    if (deg[v] >= 3) branches.push_back(v);

  auto leg_lengths = [&](int center) {
    std::vector<int> legs;
    for (int w = 0; w < n; ++w) {
      if (adj[center][w] == 0) continue;
      int len = 1, prev = center, cur = w;
      while (deg[cur] == 2) {
        for (int x = 0; x < n; ++x)
          if (adj[cur][x] && x != prev) {
            prev = cur;
            cur = x;
            break;
          }
        ++len;
      }
      if (deg[cur] >= 3) return std::vector<int>{}; // runs into a branch
      legs.push_back(len);
    }
    std::sort(legs.begin(), legs.end());
    return legs;
  };

  if (branches.empty()) {
    fam = DiagramFamily::A;
    index = n;
    return finish(GraphKind::Dynkin);
  }
  if (branches.size() == 1) {
    int c = branches[0];
    auto legs = leg_lengths(c);
    if (deg[c] == 3 && legs.size() == 3) {
      int a = legs[0], b = legs[1], cc = legs[2];
      if (a == 1 && b == 1) {
        fam = DiagramFamily::D;
        index = cc + 3;
        return finish(GraphKind::Dynkin);
      }
      if (a == 1 && b == 2 && cc >= 2 && cc <= 4) {
        fam = DiagramFamily::E;
        index = cc + 4;
        return finish(GraphKind::Dynkin);
      }
      if (a == 2 && b == 2 && cc == 2) {
        fam = DiagramFamily::TE;
        index = 6;
        return finish(GraphKind::Euclidean);
      }
      if (a == 1 && b == 3 && cc == 3) {
        fam = DiagramFamily::TE;
        index = 7;
        return finish(GraphKind::Euclidean);
      }
      if (a == 1 && b == 2 && cc == 5) {
        fam = DiagramFamily::TE;
        index = 8;
        return finish(GraphKind::Euclidean);
      }
    }
    if (deg[c] == 4 && legs == std::vector<int>{1, 1, 1, 1}) {
      fam = DiagramFamily::TD;
      index = 4;
      return finish(GraphKind::Euclidean);
    }
    return finish(GraphKind::Wild);
  }
  if (branches.size() == 2) {
    int b1 = branches[0], b2 = branches[1];
    if (deg[b1] != 3 || deg[b2] != 3) return finish(GraphKind::Wild);
    // each branch vertex must carry exactly two pendant leaves
    auto pendant_leaves = [&](int v) {
      int cnt = 0;
      for (int w = 0; w < n; ++w)
        if (adj[v][w] && deg[w] == 1) ++cnt;
      return cnt;
    };
    if (pendant_leaves(b1) == 2 && pendant_leaves(b2) == 2) {
      fam = DiagramFamily::TD;
      index = n - 1;
      return finish(GraphKind::Euclidean);
    }
    return finish(GraphKind::Wild);
  }
  return finish(GraphKind::Wild);
}

} // namespace detail

/// Partition into connected subquivers; arrow data is preserved and vertex
/// numbers are compacted.  Also returns the original index of each vertex.
struct QuiverComponent {
  Quiver quiver;
  std::vector<int> original_vertex;
};

inline std::vector<QuiverComponent> connected_components(const Quiver& q) {
  auto label = detail::component_labels(q);
  int count = *std::max_element(label.begin(), label.end()) + 1;
  std::vector<QuiverComponent> out(count);
  std::vector<int> local(q.vertex_count, -1);
  for (int c = 0; c < count; ++c) {
    for (int v = 0; v < q.vertex_count; ++v)
      if (label[v] == c) {
        local[v] = (int)out[c].original_vertex.size();
        out[c].original_vertex.push_back(v);
      }
    out[c].quiver.vertex_count = (int)out[c].original_vertex.size();
  }
  for (auto [s, t] : q.arrows)
    out[label[s]].quiver.arrows.push_back({local[s], local[t]});
  return out;
}

/// Classify the underlying multigraph of a connected quiver.  The pattern
/// match is cross-validated against exact definiteness of the symmetrized
/// Tits form; a mismatch is an internal error, never a property of the
/// input.
inline GraphClass classify(const Quiver& q) {
  if (connected_components(q).size() != 1)
    throw DomainError("disconnected",
                      "classification is per connected diagram; split "
                      "components first");
  GraphClass cls = detail::classify_connected(q);

  // symmetrized form C = E + E^T has diagonal 2 and -#edges off-diagonal
  int n = q.vertex_count;
  std::vector<std::vector<long long>> c(n, std::vector<long long>(n, 0));
  for (int i = 0; i < n; ++i) c[i][i] = 2;
  for (auto [s, t] : q.arrows) {
    --c[s][t];
    --c[t][s];
  }
  auto [psd, kernel] = detail::psd_analysis(c);
  bool def_dynkin = psd && kernel == 0;
  bool def_euclid = psd && kernel == 1;
  if ((cls.kind == GraphKind::Dynkin) != def_dynkin ||
      (cls.kind == GraphKind::Euclidean) != def_euclid)
    throw InternalError("diagram pattern match disagrees with Tits-form "
                        "definiteness");
  return cls;
}

} // namespace fatdual
