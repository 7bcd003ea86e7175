#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "simap/geometry.hpp"
#include "simap/matrix.hpp"

namespace simap {

using VertexId = std::uint32_t;

/// A permutation (i_0,...,i_n) of {0,...,n} naming one maximal simplex of the
/// barycentric subdivision: its j-th vertex is the barycenter of the first
/// j+1 vertices in this order.
struct Ordering {
  std::vector<std::size_t> perm;
};

/// Identity of a vertex of Sd^k(sigma). A level-0 key is one of the n+1 base
/// vertices; a level-(k+1) key is the barycenter of a set of level-k vertices.
/// Children are kept deduplicated and sorted under the canonical key order,
/// so structurally equal barycenters compare and hash equal. A singleton
/// face ( {w} ) is the barycenter of a 0-simplex, i.e. geometrically w
/// itself, but it is kept one level up so that every vertex of Sd^k has a
/// level-k key.
class VertexKey {
 public:
  static VertexKey base(std::size_t index) {
    auto node = std::make_shared<Node>();
    node->base_index = static_cast<int>(index);
    node->level = 0;
    node->hash = hash_combine(0x9e3779b97f4a7c15ull, index);
    return VertexKey(std::move(node));
  }

  static VertexKey face(std::vector<VertexKey> children) {
    if (children.empty()) {
      throw std::invalid_argument("VertexKey::face: empty child set");
    }
    std::sort(children.begin(), children.end());
    children.erase(std::unique(children.begin(), children.end()), children.end());
    const int child_level = children.front().level();
    for (const VertexKey& c : children) {
      if (c.level() != child_level) {
        throw std::invalid_argument("VertexKey::face: children of mixed levels");
      }
    }
    auto node = std::make_shared<Node>();
    node->base_index = -1;
    node->level = child_level + 1;
    std::size_t h = 0x517cc1b727220a95ull;
    for (const VertexKey& c : children) h = hash_combine(h, c.hash());
    node->hash = h;
    node->children = std::move(children);
    return VertexKey(std::move(node));
  }

  bool is_base() const { return node_->base_index >= 0; }
  int level() const { return node_->level; }

  std::size_t base_index() const {
    if (!is_base()) throw std::logic_error("VertexKey::base_index on a face key");
    return static_cast<std::size_t>(node_->base_index);
  }

  const std::vector<VertexKey>& children() const {
    if (is_base()) throw std::logic_error("VertexKey::children on a base key");
    return node_->children;
  }

  std::size_t hash() const { return node_->hash; }

  friend bool operator==(const VertexKey& a, const VertexKey& b) {
    if (a.node_ == b.node_) return true;
    if (a.node_->hash != b.node_->hash) return false;
    if (a.node_->base_index != b.node_->base_index) return false;
    if (a.is_base()) return true;
    return a.node_->children == b.node_->children;
  }

  // Canonical total order: base keys before face keys, base keys by index,
  // face keys lexicographically by their sorted children.
  friend std::strong_ordering operator<=>(const VertexKey& a, const VertexKey& b) {
    if (a.is_base() != b.is_base()) {
      return a.is_base() ? std::strong_ordering::less : std::strong_ordering::greater;
    }
    if (a.is_base()) return a.node_->base_index <=> b.node_->base_index;
    const auto& ca = a.node_->children;
    const auto& cb = b.node_->children;
    const std::size_t m = std::min(ca.size(), cb.size());
    for (std::size_t i = 0; i < m; ++i) {
      const auto cmp = ca[i] <=> cb[i];
      if (cmp != std::strong_ordering::equal) return cmp;
    }
    return ca.size() <=> cb.size();
  }

  /// Canonical string form: base vertices as "b<i>", faces as a
  /// parenthesized child list in canonical order. Round-trips via parse().
  std::string str() const {
    std::string out;
    append_str(out);
    return out;
  }

  static VertexKey parse(std::string_view text) {
    std::size_t pos = 0;
    VertexKey key = parse_at(text, pos);
    if (pos != text.size()) {
      throw std::invalid_argument("VertexKey::parse: trailing characters");
    }
    return key;
  }

 private:
  struct Node {
    int base_index = -1;  // >= 0 for base keys
    int level = 0;
    std::size_t hash = 0;
    std::vector<VertexKey> children;
  };

  explicit VertexKey(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static std::size_t hash_combine(std::size_t seed, std::size_t value) {
    return seed ^ (value + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
  }

  void append_str(std::string& out) const {
    if (is_base()) {
      out.push_back('b');
      out += std::to_string(node_->base_index);
      return;
    }
    out.push_back('(');
    bool first = true;
    for (const VertexKey& c : node_->children) {
      if (!first) out.push_back(',');
      first = false;
      c.append_str(out);
    }
    out.push_back(')');
  }

  static VertexKey parse_at(std::string_view text, std::size_t& pos) {
    if (pos >= text.size()) {
      throw std::invalid_argument("VertexKey::parse: unexpected end of input");
    }
    if (text[pos] == 'b') {
      ++pos;
      std::size_t start = pos;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
      if (pos == start) {
        throw std::invalid_argument("VertexKey::parse: missing base index");
      }
      return base(std::stoul(std::string(text.substr(start, pos - start))));
    }
    if (text[pos] == '(') {
      ++pos;
      std::vector<VertexKey> children;
      while (true) {
        children.push_back(parse_at(text, pos));
        if (pos >= text.size()) {
          throw std::invalid_argument("VertexKey::parse: unterminated face");
        }
        if (text[pos] == ',') {
          ++pos;
          continue;
        }
        if (text[pos] == ')') {
          ++pos;
          return face(std::move(children));
        }
        throw std::invalid_argument("VertexKey::parse: expected ',' or ')'");
      }
    }
    throw std::invalid_argument("VertexKey::parse: expected 'b' or '('");
  }

  std::shared_ptr<const Node> node_;
};

struct VertexKeyHash {
  std::size_t operator()(const VertexKey& k) const { return k.hash(); }
};

/// Bidirectional map VertexKey <-> dense VertexId. Ids are assigned in
/// insertion order and stay stable, so identical insertion sequences produce
/// identical tables. Single writer during insertion; freely shared once
/// lookups are all that is left.
class VertexInterner {
 public:
  VertexId intern(const VertexKey& key) {
    auto [it, inserted] = ids_.try_emplace(key, static_cast<VertexId>(keys_.size()));
    if (inserted) keys_.push_back(key);
    return it->second;
  }

  std::optional<VertexId> find(const VertexKey& key) const {
    auto it = ids_.find(key);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  const VertexKey& key(VertexId id) const { return keys_.at(id); }
  std::size_t size() const { return keys_.size(); }

 private:
  std::unordered_map<VertexKey, VertexId, VertexKeyHash> ids_;
  std::vector<VertexKey> keys_;
};

/// Sparse barycentric coordinates of a point with respect to Sd^level(sigma):
/// the n+1 (vertex, coefficient) pairs of its containing maximal simplex.
/// Zero coefficients are kept so the full simplex is always visible.
struct SparseActivation {
  int level = 0;
  std::vector<std::pair<VertexId, double>> entries;
};

/// P maps coordinates (b_{i_0},...,b_{i_n}) relative to sigma onto
/// coordinates relative to the maximal simplex named by that ordering;
/// Q is its inverse (rows of running averages).
struct SubdivisionMatrices {
  Matrix P;
  Matrix Q;
};

inline SubdivisionMatrices subdivision_matrices(std::size_t n) {
  SubdivisionMatrices m{Matrix(n + 1, n + 1), Matrix(n + 1, n + 1)};
  for (std::size_t j = 0; j <= n; ++j) {
    m.P.at(j, j) = static_cast<double>(j + 1);
    if (j + 1 <= n) m.P.at(j + 1, j) = -static_cast<double>(j + 1);
    for (std::size_t c = 0; c <= j; ++c) {
      m.Q.at(j, c) = 1.0 / static_cast<double>(j + 1);
    }
  }
  return m;
}

/// The ordering that sorts b non-increasingly; ties broken by ascending
/// original index. This names the maximal simplex of Sd(sigma) containing
/// the point.
inline Ordering locate_ordering(const BarycentricVector& b, double tol = kDefaultTol) {
  for (double c : b.coords) {
    if (c < -tol) {
      throw std::domain_error("locate_ordering: negative coordinate, point outside simplex");
    }
  }
  Ordering ord;
  ord.perm.resize(b.size());
  std::iota(ord.perm.begin(), ord.perm.end(), std::size_t{0});
  std::stable_sort(ord.perm.begin(), ord.perm.end(),
                   [&](std::size_t i, std::size_t j) { return b[i] > b[j]; });
  return ord;
}

/// Coordinates of the point relative to the maximal simplex named by ord:
/// b1_j = (j+1)*(b_{i_j} - b_{i_{j+1}}), b1_n = (n+1)*b_{i_n}. This is the
/// row-vector product with P, written out.
inline BarycentricVector subdivide_coords(const BarycentricVector& b, const Ordering& ord,
                                          double tol = kDefaultTol) {
  const std::size_t n = b.size() - 1;
  if (ord.perm.size() != b.size()) {
    throw std::invalid_argument("subdivide_coords: ordering length mismatch");
  }
  BarycentricVector out;
  out.coords.resize(n + 1);
  for (std::size_t j = 0; j < n; ++j) {
    out.coords[j] =
        static_cast<double>(j + 1) * (b[ord.perm[j]] - b[ord.perm[j + 1]]);
  }
  out.coords[n] = static_cast<double>(n + 1) * b[ord.perm[n]];
  for (double c : out.coords) {
    if (c < -tol) {
      throw std::domain_error("subdivide_coords: ordering does not contain the point");
    }
  }
  return out;
}

/// Vertex keys of the child simplex: the j-th is the barycenter of the
/// prefix {parent[i_0],...,parent[i_j]}.
inline std::vector<VertexKey> child_vertex_keys(const Ordering& ord,
                                                const std::vector<VertexKey>& parent_keys) {
  if (ord.perm.size() != parent_keys.size()) {
    throw std::invalid_argument("child_vertex_keys: ordering length mismatch");
  }
  std::vector<VertexKey> out;
  out.reserve(parent_keys.size());
  std::vector<VertexKey> prefix;
  prefix.reserve(parent_keys.size());
  for (std::size_t j = 0; j < ord.perm.size(); ++j) {
    prefix.push_back(parent_keys[ord.perm[j]]);
    out.push_back(VertexKey::face(prefix));
  }
  return out;
}

/// Keys and coordinates of the maximal simplex of Sd^level(sigma) containing
/// x, without touching an interner.
inline std::pair<std::vector<VertexKey>, BarycentricVector> activation_keys(
    const EnclosingSimplex& simplex, const AmbientPoint& x, int level,
    double tol = kDefaultTol) {
  if (level < 0) throw std::invalid_argument("activation: negative level");
  BarycentricVector b = barycentric_from_ambient(simplex, x);
  std::vector<VertexKey> keys;
  keys.reserve(simplex.dimension() + 1);
  for (std::size_t i = 0; i <= simplex.dimension(); ++i) {
    keys.push_back(VertexKey::base(i));
  }
  for (int step = 0; step < level; ++step) {
    const Ordering ord = locate_ordering(b, tol);
    keys = child_vertex_keys(ord, keys);
    b = subdivide_coords(b, ord, tol);
  }
  return {std::move(keys), std::move(b)};
}

/// Sparse coordinates of x in Sd^level(sigma), interned. Exactly n+1 entries,
/// zeros included.
inline SparseActivation activation(const AmbientPoint& x, int level,
                                   const EnclosingSimplex& simplex, VertexInterner& interner,
                                   double tol = kDefaultTol) {
  auto [keys, coords] = activation_keys(simplex, x, level, tol);
  SparseActivation act;
  act.level = level;
  act.entries.reserve(keys.size());
  for (std::size_t j = 0; j < keys.size(); ++j) {
    act.entries.emplace_back(interner.intern(keys[j]), coords[j]);
  }
  return act;
}

/// Ambient position of a subdivision vertex: base vertices sit at the simplex
/// corners, a face key at the mean of its children's positions.
inline AmbientPoint vertex_ambient_position(const VertexKey& key,
                                            const EnclosingSimplex& simplex) {
  if (key.is_base()) return simplex.vertex(key.base_index());
  const auto& children = key.children();
  AmbientPoint acc(simplex.dimension(), 0.0);
  for (const VertexKey& c : children) {
    const AmbientPoint p = vertex_ambient_position(c, simplex);
    for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += p[d];
  }
  for (double& v : acc) v /= static_cast<double>(children.size());
  return acc;
}

struct SubdivisionCensus {
  std::optional<std::uint64_t> maximal_simplices;  // ((n+1)!)^k
  std::optional<std::uint64_t> sd1_vertices;       // 2^(n+1) - 1
};

inline std::optional<std::uint64_t> checked_factorial(std::uint64_t n) {
  std::uint64_t out = 1;
  for (std::uint64_t i = 2; i <= n; ++i) {
    if (__builtin_mul_overflow(out, i, &out)) return std::nullopt;
  }
  return out;
}

inline std::optional<std::uint64_t> checked_pow(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t out = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (__builtin_mul_overflow(out, base, &out)) return std::nullopt;
  }
  return out;
}

/// Counts for Sd^k(sigma): number of maximal simplices, and the vertex count
/// of the first subdivision (every nonempty face of sigma has one barycenter).
inline SubdivisionCensus subdivision_census(std::size_t n, std::size_t k) {
  if (n < 1) throw std::invalid_argument("subdivision_census: n must be >= 1");
  SubdivisionCensus census;
  if (auto fact = checked_factorial(n + 1)) {
    census.maximal_simplices = checked_pow(*fact, k);
  }
  if (n + 1 < 64) {
    census.sd1_vertices = (std::uint64_t{1} << (n + 1)) - 1;
  }
  return census;
}

}  // namespace simap
