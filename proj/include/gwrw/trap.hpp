#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "error.hpp"
#include "offspring.hpp"
#include "rng.hpp"

namespace gwrw {

// Finite rooted tree in child-contiguous layout.
struct Tree {
  std::vector<int> parent;       // -1 at the root
  std::vector<int> first_child;
  std::vector<int> n_children;
  std::vector<int> level;        // distance from the tree root

  std::size_t size() const { return parent.size(); }
  int height() const {
    int h = 0;
    for (int l : level) h = std::max(h, l);
    return h;
  }
};

// Builder with per-vertex child lists; flattened into a Tree at the end.
class TreeBuilder {
 public:
  int add(int parent_id) {
    const int id = int(kids_.size());
    kids_.emplace_back();
    par_.push_back(parent_id);
    return id;
  }
  void attach(int parent_id, int child) {
    kids_[std::size_t(parent_id)].push_back(child);
    par_[std::size_t(child)] = parent_id;
  }
  std::vector<int>& kids(int v) { return kids_[std::size_t(v)]; }
  std::size_t size() const { return kids_.size(); }

  // Breadth-first relabelling from `root`; `map` receives old → new ids.
  Tree flatten(int root, std::vector<int>* map = nullptr) const {
    Tree t;
    std::vector<int> order{root};
    std::vector<int> id(kids_.size(), -1);
    id[std::size_t(root)] = 0;
    for (std::size_t k = 0; k < order.size(); ++k)
      for (int c : kids_[std::size_t(order[k])]) {
        id[std::size_t(c)] = int(order.size());
        order.push_back(c);
      }
    const std::size_t n = order.size();
    t.parent.assign(n, -1);
    t.first_child.assign(n, 0);
    t.n_children.assign(n, 0);
    t.level.assign(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& ks = kids_[std::size_t(order[k])];
      t.n_children[k] = int(ks.size());
      t.first_child[k] = ks.empty() ? 0 : id[std::size_t(ks.front())];
      for (int c : ks) {
        t.parent[std::size_t(id[std::size_t(c)])] = int(k);
        t.level[std::size_t(id[std::size_t(c)])] = t.level[k] + 1;
      }
    }
    if (map) *map = std::move(id);
    return t;
  }

 private:
  std::vector<std::vector<int>> kids_;
  std::vector<int> par_;
};

// Direct h-GW sample below `root` in the builder, abandoned (returns false) as
// soon as a vertex at depth max_h appears, i.e. accepted iff height < max_h.
template <class Rng>
bool grow_hgw_below(TreeBuilder& b, int root, const std::vector<double>& h_cdf, int max_h, Rng& rng,
                    std::vector<std::pair<int, int>>& queue) {
  queue.clear();
  queue.push_back({root, 0});
  for (std::size_t k = 0; k < queue.size(); ++k) {
    const auto [v, d] = queue[k];
    const int c = discrete_from(rng.uniform(), h_cdf);
    if (c > 0 && d + 1 >= max_h) return false;
    for (int i = 0; i < c; ++i) {
      const int w = b.add(v);
      b.kids(v).push_back(w);
      queue.push_back({w, d + 1});
    }
  }
  return true;
}

// Weight Σ_{v ≠ root} β^{level(v)} of an h-GW sample conditioned on height <
// max_h, hung below a spine vertex: the connecting edge has level 0 (weight β)
// and the sample's root is at level 1. Rejection until accepted.
template <class Rng>
double sample_subtrap_weight(const std::vector<double>& h_cdf, int max_h, double beta, Rng& rng,
                             std::int64_t* attempts = nullptr) {
  std::vector<std::pair<int, double>> queue;  // (depth below the subtree root, -)
  for (;;) {
    if (attempts) ++*attempts;
    queue.clear();
    queue.push_back({0, 0.0});
    double w = 0;
    bool ok = true;
    for (std::size_t k = 0; k < queue.size() && ok; ++k) {
      const int d = queue[k].first;
      w += std::pow(beta, d + 1);
      const int c = discrete_from(rng.uniform(), h_cdf);
      if (c > 0 && d + 1 >= max_h) ok = false;
      for (int i = 0; i < c && ok; ++i) queue.push_back({d + 1, 0.0});
    }
    if (ok) return w;
  }
}

// Π of an explicit subtree: Σ over edges (level j → j+1, the subtree root at
// level 0) of β^{j+1}.
inline double subtrap_weight(const Tree& t, double beta) {
  double w = 0;
  for (std::size_t v = 1; v < t.size(); ++v) w += std::pow(beta, t.level[v]);
  return w;
}

// Conditioned subtree with height < max_h by rejection from direct sampling.
template <class Rng>
Tree conditioned_subtree(const OffspringLaw& h, int max_h, Rng& rng, std::int64_t* attempts = nullptr) {
  if (max_h < 1) throw Error(ErrorCode::InvalidArgument, "max_h must be >= 1");
  const auto cdf = cumulative(h.probs());
  std::vector<std::pair<int, int>> queue;
  for (;;) {
    if (attempts) ++*attempts;
    TreeBuilder b;
    const int r = b.add(-1);
    if (grow_hgw_below(b, r, cdf, max_h, rng, queue)) return b.flatten(r);
  }
}

// Joint law of (φ_{n+1}, ψ_{n+1}) given H = n+1.
struct PhiPsiLaw {
  std::vector<int> phi, psi;
  std::vector<double> prob, cdf;
  double total = 0;
};

inline PhiPsiLaw phi_psi_law(const OffspringLaw& h, const HeightTail& tail, int n) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "n must be >= 0");
  const double cn = geiger_cn(tail, n);
  const double an = 1.0 - tail.values[std::size_t(n)];
  const double an1 = 1.0 - tail.values[std::size_t(n) + 1];
  PhiPsiLaw L;
  for (int k = 1; k <= h.max_k(); ++k) {
    if (h[k] == 0) continue;
    for (int j = 1; j <= k; ++j) {
      const double p = cn * h[k] * std::pow(an, j - 1) * std::pow(an1, k - j);
      if (p <= 0) continue;
      L.phi.push_back(j);
      L.psi.push_back(k);
      L.prob.push_back(p);
      L.total += p;
    }
  }
  L.cdf = cumulative(L.prob);
  for (auto& c : L.cdf) c /= L.total;
  return L;
}

template <class Rng>
std::pair<int, int> sample_phi_psi(const PhiPsiLaw& L, Rng& rng) {
  const int i = discrete_from(rng.uniform(), L.cdf);
  return {L.phi[std::size_t(i)], L.psi[std::size_t(i)]};
}

// Everything the Geiger construction needs for a given offspring law.
struct TrapModel {
  OffspringLaw h;
  HeightTail tail;
  std::vector<double> h_cdf;
  double beta;
  double fprime_q;
  std::vector<PhiPsiLaw> phipsi;  // indexed by n: law of (φ_{n+1}, ψ_{n+1})

  TrapModel(const OffspringLaw& h_law_, double beta_, int max_n = 150)
      : h(h_law_), tail(height_tail(h_law_, std::max(max_n + 3, 10))), h_cdf(cumulative(h_law_.probs())),
        beta(beta_), fprime_q(h_law_.mean()) {
    for (int n = 0; n <= max_n; ++n) phipsi.push_back(phi_psi_law(h, tail, n));
  }

  // (φ_i, ψ_i) for spine index i ≥ 1; beyond the table the law has converged.
  const PhiPsiLaw& at_spine(int i) const {
    return phipsi[std::size_t(std::min<int>(i - 1, int(phipsi.size()) - 1))];
  }

  // sup over spine indices of E[ψ_i].
  double sup_mean_psi() const {
    double s = 0;
    for (const auto& L : phipsi) {
      double m = 0;
      for (std::size_t k = 0; k < L.prob.size(); ++k) m += L.psi[k] * L.prob[k] / L.total;
      s = std::max(s, m);
    }
    return s;
  }
};

// A height-conditioned trap, plus its backbone root. Spine indices run from
// δ = 0 to the bud = H, and the backbone root sits at H+1.
struct Trap {
  int H = 0;
  Tree tree;               // vertex 0 is the backbone root, vertex 1 the bud
  std::vector<int> spine;  // spine[i] = tree vertex, i = 0..H+1
  std::vector<double> lambda;  // Λ_i, i = 0..H
  std::vector<int> spine_index_of;  // spine index of v∧δ for every vertex
  double beta = 0;

  std::size_t size() const { return tree.size(); }
  int delta() const { return spine[0]; }
  int root() const { return 0; }
  int bud() const { return 1; }
};

struct TrapSkeleton {
  int H = 0;
  std::vector<double> lambda;  // Λ_0..Λ_H
  double beta = 0;
};

inline TrapSkeleton skeleton(const Trap& t) { return {t.H, t.lambda, t.beta}; }

// Λ_i for one spine index without building the trap.
template <class Rng>
double sample_lambda(const TrapModel& M, int i, Rng& rng) {
  if (i == 0) return 0.0;
  const auto [phi, psi] = sample_phi_psi(M.at_spine(i), rng);
  double lam = 0;
  for (int c = 1; c <= psi; ++c) {
    if (c == phi) continue;
    lam += sample_subtrap_weight(M.h_cdf, c < phi ? i - 1 : i, M.beta, rng);
  }
  return lam;
}

// Geiger construction: 𝒯_0 = {δ}; 𝒯_{i} is a new root whose ψ_i children are
// φ_i - 1 trees of height < i-1, then 𝒯_{i-1}, then ψ_i - φ_i trees of height < i.
// `extra_lambda` continues the spine beyond H for Λ_{H+1}..Λ_{H+extra} without
// materialising vertices (used for the coupled S_∞).
template <class Rng>
Trap geiger_tree(const TrapModel& M, int H, Rng& rng, std::vector<double>* extra_lambda = nullptr,
                 int extra = 0) {
  if (H < 0) throw Error(ErrorCode::InvalidArgument, "H must be >= 0");
  TreeBuilder b;
  std::vector<std::pair<int, int>> queue;
  std::vector<int> spine_b{b.add(-1)};  // δ
  int top = spine_b[0];
  for (int i = 1; i <= H; ++i) {
    const auto [phi, psi] = sample_phi_psi(M.at_spine(i), rng);
    const int r = b.add(-1);
    for (int c = 1; c <= psi; ++c) {
      if (c == phi) {
        b.attach(r, top);
        continue;
      }
      const int max_h = c < phi ? i - 1 : i;
      // Rejected attempts leave orphaned vertices that flatten() drops.
      for (;;) {
        const int y = b.add(r);
        if (grow_hgw_below(b, y, M.h_cdf, max_h, rng, queue)) {
          b.kids(r).push_back(y);
          break;
        }
      }
    }
    top = r;
    spine_b.push_back(r);
  }
  const int xroot = b.add(-1);
  b.attach(xroot, top);
  std::vector<int> map;
  Trap t;
  t.H = H;
  t.beta = M.beta;
  t.tree = b.flatten(xroot, &map);
  for (int v : spine_b) t.spine.push_back(map[std::size_t(v)]);
  t.spine.push_back(0);
  // Spine index of v∧δ and Λ_i from the materialised subtrees.
  const std::size_t n = t.tree.size();
  t.spine_index_of.assign(n, -1);
  for (int i = 0; i <= H + 1; ++i) t.spine_index_of[std::size_t(t.spine[std::size_t(i)])] = i;
  t.lambda.assign(std::size_t(H) + 1, 0.0);
  // Breadth-first order: parents precede children.
  for (std::size_t v = 1; v < n; ++v) {
    if (t.spine_index_of[v] >= 0) continue;
    const int p = t.tree.parent[v];
    const int i = t.spine_index_of[std::size_t(p)];
    t.spine_index_of[v] = i;
    // Level inside the subtrap (spine vertex at level 0): spine level H - i.
    const int lev = t.tree.level[v] - (t.tree.level[std::size_t(t.spine[std::size_t(i)])]);
    t.lambda[std::size_t(i)] += std::pow(M.beta, lev);
  }
  if (extra_lambda) {
    extra_lambda->clear();
    for (int i = H + 1; i <= H + extra; ++i) extra_lambda->push_back(sample_lambda(M, i, rng));
  }
  return t;
}

struct SInfinitySample {
  double value = 0;
  int truncation = 0;
  double error_bound = 0;
};

// Ĉ with β^{-i} E[Λ_i] ≤ Ĉ f'(q)^i.
inline double lambda_constant(const TrapModel& M) {
  const double bf = M.beta * M.fprime_q;
  return M.sup_mean_psi() * M.beta / (M.h[0] * (bf - 1.0));
}

inline int s_infinity_truncation(const TrapModel& M, double tol, double* bound = nullptr) {
  const double C = lambda_constant(M);
  for (int I = 1;; ++I) {
    const double rem =
        2.0 * (std::pow(M.beta, -I) / (M.beta - 1.0) + C * std::pow(M.fprime_q, I + 1) / (1.0 - M.fprime_q));
    if (rem < tol || I > 2000) {
      if (bound) *bound = rem;
      return I;
    }
  }
}

inline double s_infinity_from_lambda(const std::vector<double>& lambda, double beta) {
  double s = 0, w = 1;
  for (double l : lambda) {
    s += w * (1.0 + l);
    w /= beta;
  }
  return 2.0 * s;
}

// S_∞ = 2 Σ_{i≥0} β^{-i}(1 + Λ_i), truncated at I with an analytic bound on
// the expected remainder.
template <class Rng>
SInfinitySample sample_S_infinity(const TrapModel& M, double tol, Rng& rng) {
  if (!(tol > 0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
  SInfinitySample s;
  s.truncation = s_infinity_truncation(M, tol, &s.error_bound);
  std::vector<double> lambda;
  for (int i = 0; i <= s.truncation; ++i) lambda.push_back(sample_lambda(M, i, rng));
  s.value = s_infinity_from_lambda(lambda, M.beta);
  return s;
}

struct EscapeProbabilities {
  double p1 = 0, p2 = 0;
};

// p_1: from the root, reach δ before returning; p_2: from δ, reach the root
// before returning to δ.
inline EscapeProbabilities escape_probabilities(int H, double beta) {
  if (H < 0) throw Error(ErrorCode::InvalidArgument, "H must be >= 0");
  return {(1.0 - 1.0 / beta) / (1.0 - std::pow(beta, -(H + 1))),
          (1.0 - 1.0 / beta) / (std::pow(beta, H) - 1.0 / beta)};
}

// ĥ(i) = P_i[T_δ < T_root] along the spine, normalised so ĥ(δ) = 1.
inline double h_hat(int i, int H, double beta) {
  return -std::expm1((i - (H + 1)) * std::log(beta)) / -std::expm1(-(H + 1) * std::log(beta));
}

// E_δ[T_exc] = 2 Σ ĉ(e) for the walk conditioned on {T_δ^+ < T_root}:
// spine edges ĉ(i,i+1) = β^{-i} ĥ(i)ĥ(i+1)/ĥ(1), subtraps at spine index i
// carry β^{-i} ĥ(i)²/ĥ(1) Λ_i (including the subtraps at the bud, i = H).
inline double mean_excursion_time(const TrapSkeleton& s) {
  if (s.H < 1) throw Error(ErrorCode::InvalidArgument, "H must be >= 1");
  const double b = s.beta;
  const double h1 = h_hat(1, s.H, b);
  double sum = 0;
  for (int i = 0; i <= s.H; ++i) {
    const double hi = h_hat(i, s.H, b);
    const double w = std::pow(b, -i);
    if (i < s.H) sum += w * hi * h_hat(i + 1, s.H, b) / h1;
    sum += w * hi * hi / h1 * s.lambda[std::size_t(i)];
  }
  return 2.0 * sum;
}

// Edge weight to the parent for every vertex (0 at the backbone root):
// original conductances normalised so c(δ, parent δ) = 1.
inline std::vector<double> trap_conductances(const Trap& t) {
  std::vector<double> c(t.size(), 0.0);
  const int Hd = t.tree.level[std::size_t(t.delta())];
  for (std::size_t v = 1; v < t.size(); ++v) c[v] = std::pow(t.beta, t.tree.level[v] - Hd);
  return c;
}

// Doob transform by ĥ: ĉ(y,z) = c(y,z) ĥ(y) ĥ(z) / ĥ(1), so ĉ(0,1) = 1 and the
// bud-root edge vanishes.
inline std::vector<double> conditioned_conductances(const Trap& t) {
  auto c = trap_conductances(t);
  const double h1 = h_hat(1, t.H, t.beta);
  for (std::size_t v = 1; v < t.size(); ++v) {
    const int p = t.tree.parent[v];
    c[v] *= h_hat(t.spine_index_of[v], t.H, t.beta) * h_hat(t.spine_index_of[std::size_t(p)], t.H, t.beta) / h1;
  }
  return c;
}

// Unconditioned walk from δ until it returns to δ (length) or hits the root.
template <class Rng>
std::optional<std::int64_t> simulate_excursion(const Trap& t, Rng& rng) {
  const Tree& T = t.tree;
  const int d = t.delta();
  const double beta = t.beta;
  int v = T.parent[std::size_t(d)];
  std::int64_t len = 1;
  for (;;) {
    if (v == 0) return std::nullopt;
    if (v == d) return len;
    const int k = T.n_children[std::size_t(v)];
    const double u = rng.uniform() * (1.0 + beta * k);
    if (u < 1.0) v = T.parent[std::size_t(v)];
    else v = T.first_child[std::size_t(v)] + std::min(k - 1, int((u - 1.0) / beta));
    ++len;
  }
}

// Conditioned excursion realised by discarding the excursions that reach the root.
template <class Rng>
std::int64_t sample_excursion_rejection(const Trap& t, Rng& rng, std::int64_t* rejected = nullptr) {
  for (;;) {
    if (auto x = simulate_excursion(t, rng)) return *x;
    if (rejected) ++*rejected;
  }
}

// Walk on a tree network given edge weights to the parent (w[root] ignored).
class NetworkWalk {
 public:
  NetworkWalk(const Tree& t, const std::vector<double>& up) : t_(t), up_(up), total_(t.size(), 0.0) {
    for (std::size_t v = 0; v < t.size(); ++v) {
      double s = t.parent[v] >= 0 ? up[v] : 0.0;
      for (int c = 0; c < t.n_children[v]; ++c) s += up[std::size_t(t.first_child[v] + c)];
      total_[v] = s;
    }
  }
  template <class Rng>
  int step(int v, Rng& rng) const {
    double u = rng.uniform() * total_[std::size_t(v)];
    if (t_.parent[std::size_t(v)] >= 0) {
      if (u < up_[std::size_t(v)]) return t_.parent[std::size_t(v)];
      u -= up_[std::size_t(v)];
    }
    const int f = t_.first_child[std::size_t(v)], k = t_.n_children[std::size_t(v)];
    for (int c = 0; c < k - 1; ++c) {
      if (u < up_[std::size_t(f + c)]) return f + c;
      u -= up_[std::size_t(f + c)];
    }
    if (k == 0) return t_.parent[std::size_t(v)];
    return f + k - 1;
  }
  double total(int v) const { return total_[std::size_t(v)]; }

 private:
  const Tree& t_;
  const std::vector<double>& up_;
  std::vector<double> total_;
};

// Conditioned excursion sampled directly on the ĉ network (rejection free).
class ConditionedExcursionSampler {
 public:
  explicit ConditionedExcursionSampler(const Trap& t)
      : t_(t), chat_(conditioned_conductances(t)), walk_(t.tree, chat_) {}
  template <class Rng>
  std::int64_t operator()(Rng& rng) const {
    const int d = t_.delta();
    int v = t_.tree.parent[std::size_t(d)];
    std::int64_t len = 1;
    while (v != d) {
      v = walk_.step(v, rng);
      ++len;
    }
    return len;
  }
  const std::vector<double>& conductances() const { return chat_; }

 private:
  const Trap& t_;
  std::vector<double> chat_;
  NetworkWalk walk_;
};

struct Moments {
  double mean = 0, var = 0;
};

// Exact mean and variance of the return time to δ on a tree network given by
// edge weights to the parent, by recursion on the tree re-rooted at δ.
// Edges of weight 0 are never crossed.
inline Moments return_time_moments(const Tree& T, const std::vector<double>& up, int delta) {
  const std::size_t n = T.size();
  // Re-rooted parent: the neighbour toward δ.
  std::vector<int> toward(n, -1);
  std::vector<char> on_path(n, 0);
  for (int v = delta; v >= 0; v = T.parent[std::size_t(v)]) on_path[std::size_t(v)] = 1;
  for (std::size_t v = 0; v < n; ++v) {
    if (int(v) == delta) continue;
    if (on_path[v]) {
      // Child on the path toward δ.
      const int f = T.first_child[v];
      for (int c = 0; c < T.n_children[v]; ++c)
        if (on_path[std::size_t(f + c)]) toward[v] = f + c;
    } else {
      toward[v] = T.parent[v];
    }
  }
  auto weight = [&](int a, int b) {  // weight of the edge {a, b}
    return T.parent[std::size_t(a)] == b ? up[std::size_t(a)] : up[std::size_t(b)];
  };
  // Order vertices by distance from δ in the re-rooted tree (BFS), process in reverse.
  std::vector<std::vector<int>> kids(n);
  for (std::size_t v = 0; v < n; ++v)
    if (toward[v] >= 0 && weight(int(v), toward[v]) > 0) kids[std::size_t(toward[v])].push_back(int(v));
  std::vector<int> order{delta};
  for (std::size_t k = 0; k < order.size(); ++k)
    for (int c : kids[std::size_t(order[k])]) order.push_back(c);
  std::vector<double> EA(n, 0.0), VA(n, 0.0);
  for (std::size_t k = order.size(); k-- > 1;) {
    const int v = order[k];
    const double cp = weight(v, toward[std::size_t(v)]);
    double sw = 0, m1 = 0, m2 = 0;
    for (int w : kids[std::size_t(v)]) {
      const double cw = weight(v, w);
      sw += cw;
      m1 += cw * (1.0 + EA[std::size_t(w)]);
      m2 += cw * (VA[std::size_t(w)] + (1.0 + EA[std::size_t(w)]) * (1.0 + EA[std::size_t(w)]));
    }
    if (sw == 0) {
      EA[std::size_t(v)] = 1.0;
      VA[std::size_t(v)] = 0.0;
      continue;
    }
    const double EX = m1 / sw, EX2 = m2 / sw, VX = EX2 - EX * EX;
    const double s = cp / (cp + sw);
    const double EK = sw / cp, VK = (1.0 - s) / (s * s);
    EA[std::size_t(v)] = 1.0 + EK * EX;
    VA[std::size_t(v)] = EK * VX + VK * EX * EX;
  }
  // δ: step to each neighbour w then return.
  double sw = 0, m1 = 0, m2 = 0;
  for (int w : kids[std::size_t(delta)]) {
    const double cw = weight(delta, w);
    sw += cw;
    m1 += cw * (1.0 + EA[std::size_t(w)]);
    m2 += cw * (VA[std::size_t(w)] + (1.0 + EA[std::size_t(w)]) * (1.0 + EA[std::size_t(w)]));
  }
  Moments m;
  m.mean = m1 / sw;
  m.var = m2 / sw - m.mean * m.mean;
  return m;
}

inline Moments excursion_moments(const Trap& t) {
  return return_time_moments(t.tree, conditioned_conductances(t), t.delta());
}

// Sum of `count` i.i.d. conditioned excursions. Up to `exact_limit` they are
// simulated on the ĉ network; beyond it the sum is drawn from the normal law
// with the exact mean and variance.
template <class Rng>
double sum_excursions(const Trap& t, const ConditionedExcursionSampler& s, const Moments& m,
                      std::int64_t count, Rng& rng, std::int64_t exact_limit = 2000) {
  if (count <= 0) return 0.0;
  if (count <= exact_limit) {
    double sum = 0;
    for (std::int64_t j = 0; j < count; ++j) sum += double(s(rng));
    return sum;
  }
  (void)t;
  const double c = double(count);
  return std::max(0.0, c * m.mean + std::sqrt(c * m.var) * sample_normal(rng));
}

// CSV rows (i, Λ_i).
inline void dump_skeleton(std::ostream& os, const TrapSkeleton& s) {
  os << "i,lambda\n";
  for (std::size_t i = 0; i < s.lambda.size(); ++i) os << i << ',' << s.lambda[i] << '\n';
}

}  // namespace gwrw
