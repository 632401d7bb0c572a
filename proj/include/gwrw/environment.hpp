#pragma once

#include <climits>
#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "error.hpp"
#include "offspring.hpp"
#include "rng.hpp"

namespace gwrw {

enum class VertexKind : std::uint8_t { Root, Backbone, Bud, TrapInterior };

inline const char* to_string(VertexKind k) {
  switch (k) {
    case VertexKind::Root: return "root";
    case VertexKind::Backbone: return "backbone";
    case VertexKind::Bud: return "bud";
    case VertexKind::TrapInterior: return "trap";
  }
  return "?";
}

inline bool on_backbone(VertexKind k) { return k == VertexKind::Root || k == VertexKind::Backbone; }

// Everything an environment needs that does not depend on the seed.
struct EnvironmentModel {
  OffspringLaw law;
  DerivedParams params;
  OffspringLaw g, h;
  std::vector<double> g_cdf, h_cdf;
  std::vector<std::vector<double>> bud_cdf;  // indexed by backbone degree j
  HeightTail tail;
  std::int64_t trap_vertex_cap = 10'000'000;

  EnvironmentModel(const OffspringLaw& l, double beta, int tail_n = 200) : law(l) {
    params = derive_params(law, beta);
    g = g_law(law, params.q);
    h = h_law(law, params.q);
    g_cdf = cumulative(g.probs());
    h_cdf = cumulative(h.probs());
    bud_cdf.resize(std::size_t(g.max_k()) + 1);
    for (int j = 1; j <= g.max_k(); ++j)
      if (g[j] > 0) bud_cdf[std::size_t(j)] = cumulative(backbone_bud_law(law, params.q, j).pmf);
    tail = height_tail(h, tail_n);
  }
};

inline constexpr int kNoTrap = INT_MIN;
inline constexpr std::uint64_t kRootKey = 0x5EEDF00DCAFEBABEull;

struct VertexRecord {
  std::uint64_t key;        // canonical id: a function of the path from the root
  std::int32_t parent;      // store index, -1 for the root
  std::int32_t depth;
  std::int32_t first_child; // -1 until expanded; children are contiguous
  std::uint16_t n_children;
  std::uint8_t n_backbone;  // backbone children come first
  VertexKind kind;
  std::int32_t trap_height; // buds only: cached H, -1 if unknown
  std::int32_t bottom;      // buds only: leftmost deepest vertex of the trap
};

class Environment {
 public:
  using Index = std::int32_t;

  Environment(std::shared_ptr<const EnvironmentModel> model, std::uint64_t seed)
      : model_(std::move(model)), seed_(seed) {
    v_.reserve(1024);
    v_.push_back({kRootKey, -1, 0, -1, 0, 0, VertexKind::Root, -1, -1});
  }

  const EnvironmentModel& model() const { return *model_; }
  std::uint64_t seed() const { return seed_; }
  static constexpr Index root() { return 0; }
  std::size_t vertex_count() const { return v_.size(); }
  const VertexRecord& operator[](Index i) const { return v_[std::size_t(i)]; }

  bool expanded(Index i) const { return v_[std::size_t(i)].first_child >= 0; }

  // Idempotent; draws from the stream keyed by (seed, vertex key).
  void expand(Index i) {
    if (v_[std::size_t(i)].first_child >= 0) return;
    const VertexRecord self = v_[std::size_t(i)];
    const auto b = Stream(seed_, self.key).block(0);
    const double u1 = to_unit(b[0], b[1]), u2 = to_unit(b[2], b[3]);
    const EnvironmentModel& m = *model_;
    int nb = 0, nbud = 0, nt = 0;
    if (on_backbone(self.kind)) {
      nb = discrete_from(u1, m.g_cdf);
      nbud = discrete_from(u2, m.bud_cdf[std::size_t(nb)]);
    } else {
      nt = discrete_from(u1, m.h_cdf);
    }
    const Index first = Index(v_.size());
    const int total = nb + nbud + nt;
    for (int c = 0; c < total; ++c) {
      const VertexKind k = c < nb ? VertexKind::Backbone
                           : c < nb + nbud ? VertexKind::Bud
                                           : VertexKind::TrapInterior;
      v_.push_back({derive_seed(self.key, std::uint64_t(c)), i, self.depth + 1, -1, 0, 0, k, -1, -1});
    }
    VertexRecord& r = v_[std::size_t(i)];
    r.first_child = first;
    r.n_children = std::uint16_t(total);
    r.n_backbone = std::uint8_t(nb);
  }

  std::span<const VertexRecord> children_records(Index i) {
    expand(i);
    const auto& r = v_[std::size_t(i)];
    return {v_.data() + r.first_child, r.n_children};
  }

  // Store indices of the children, expanding on demand.
  std::vector<Index> children(Index i) {
    expand(i);
    const auto& r = v_[std::size_t(i)];
    std::vector<Index> c(r.n_children);
    for (int k = 0; k < r.n_children; ++k) c[std::size_t(k)] = r.first_child + k;
    return c;
  }

  // Height of the trap hanging at a bud (the bud is generation 0). Expands the
  // whole trap and caches H together with the leftmost deepest vertex.
  int trap_height(Index bud) {
    auto& r0 = v_[std::size_t(bud)];
    if (r0.kind != VertexKind::Bud) throw Error(ErrorCode::InvalidArgument, "trap_height needs a bud");
    if (r0.trap_height >= 0) return r0.trap_height;
    const int base = r0.depth;
    int best = -1;
    Index bottom = bud;
    std::int64_t count = 0;
    stack_.clear();
    stack_.push_back(bud);
    while (!stack_.empty()) {
      const Index x = stack_.back();
      stack_.pop_back();
      if (++count > model_->trap_vertex_cap)
        throw Error(ErrorCode::TrapBudget, "trap exceeds the vertex cap");
      expand(x);
      const auto& rx = v_[std::size_t(x)];
      if (rx.depth - base > best) {
        best = rx.depth - base;
        bottom = x;
      }
      for (int c = rx.n_children - 1; c >= 0; --c) stack_.push_back(rx.first_child + c);
    }
    auto& r = v_[std::size_t(bud)];
    r.trap_height = best;
    r.bottom = bottom;
    return best;
  }

  Index trap_bottom(Index bud) {
    trap_height(bud);
    return v_[std::size_t(bud)].bottom;
  }

  // K_x: largest trap height at a backbone vertex, kNoTrap without buds.
  int max_trap_height_at(Index x) {
    expand(x);
    if (!on_backbone(v_[std::size_t(x)].kind))
      throw Error(ErrorCode::InvalidArgument, "max_trap_height_at needs a backbone vertex");
    int k = kNoTrap;
    const auto r = v_[std::size_t(x)];
    for (int c = r.n_backbone; c < r.n_children; ++c) k = std::max(k, trap_height(r.first_child + c));
    return k;
  }

  // First bud in stored order whose trap has height >= h, or -1.
  Index first_bud_with_height(Index x, int h) {
    expand(x);
    const auto r = v_[std::size_t(x)];
    for (int c = r.n_backbone; c < r.n_children; ++c)
      if (trap_height(r.first_child + c) >= h) return r.first_child + c;
    return -1;
  }

  // Line-oriented dump: `id parent kind depth`.
  void dump(std::ostream& os) const {
    for (std::size_t i = 0; i < v_.size(); ++i)
      os << i << ' ' << v_[i].parent << ' ' << to_string(v_[i].kind) << ' ' << v_[i].depth << '\n';
  }

 private:
  std::shared_ptr<const EnvironmentModel> model_;
  std::uint64_t seed_;
  std::vector<VertexRecord> v_;
  std::vector<Index> stack_;
};

}  // namespace gwrw
