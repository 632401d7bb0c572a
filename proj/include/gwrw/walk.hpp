#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "environment.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace gwrw {

using Index = Environment::Index;

struct WalkState {
  Index position = Environment::root();
  std::int64_t steps = 0;
  std::uint64_t uniforms = 0;
};

// One step of the β-biased walk from a single uniform.
// Non-root with k children: parent iff u < 1/(1+βk), else child ⌊(u-p)/(β/(1+βk))⌋.
// Root: uniform over children.
inline WalkState step(Environment& env, WalkState s, double u) {
  env.expand(s.position);
  const auto& r = env[s.position];
  const int k = r.n_children;
  const double beta = env.model().params.beta;
  Index next;
  if (r.kind == VertexKind::Root) {
    next = r.first_child + std::min(k - 1, int(u * k));
  } else if (k == 0) {
    next = r.parent;
  } else {
    const double z = 1.0 + beta * k;
    if (u * z < 1.0) next = r.parent;
    else next = r.first_child + std::min(k - 1, int((u * z - 1.0) / beta));
  }
  s.position = next;
  ++s.steps;
  ++s.uniforms;
  return s;
}

inline double max_epsilon(double gamma) { return std::min(0.25, 2.0 * gamma / 3.0); }

inline void validate_epsilon(double eps, double gamma) {
  if (!(eps > 0.0 && eps < max_epsilon(gamma)))
    throw Error(ErrorCode::InvalidArgument,
                "epsilon must lie in (0, " + std::to_string(max_epsilon(gamma)) + ")");
}

// h_n = ⌈(1-ε) ln n / (-ln f'(q))⌉.
inline int big_trap_threshold(double n, double eps, double fprime_q) {
  return int(std::ceil((1.0 - eps) * std::log(n) / -std::log(fprime_q) - 1e-12));
}

// h_n^0 = ⌈ln n / (-ln f'(q))⌉.
inline int trap_height_scale(double n, double fprime_q) {
  return int(std::ceil(std::log(n) / -std::log(fprime_q) - 1e-12));
}

inline double confirm_window(double beta, std::size_t replicas) {
  const double w = 10.0 * (beta + 1.0) / (beta - 1.0) * std::log(double(std::max<std::size_t>(replicas, 2)));
  return std::max(w, 30.0);
}

// Random-access view of a uniform stream with a one-block cache; the U_i
// that drive the backbone moves and the coupled walk on Z.
class UniformTape {
 public:
  UniformTape() = default;
  explicit UniformTape(Stream s) : s_(s) {}
  double operator[](std::uint64_t i) {
    const std::uint64_t b = i >> 1;
    if (b != cached_) {
      buf_ = s_.block(b);
      cached_ = b;
    }
    return (i & 1) ? to_unit(buf_[2], buf_[3]) : to_unit(buf_[0], buf_[1]);
  }
  const Stream& stream() const { return s_; }

 private:
  Stream s_;
  std::uint64_t cached_ = std::numeric_limits<std::uint64_t>::max();
  Philox4x32Block buf_{};
};

// The walk decomposed so that every backbone-to-backbone move consumes the
// next U from the tape (the embedded walk Y) and all other choices come from
// a separate sequential stream. The transition law equals `step`.
class Walker {
 public:
  Walker(Environment& env, UniformTape tape, Stream xs)
      : env_(env), tape_(std::move(tape)), xs_(xs), beta_(env.model().params.beta),
        down_(1.0 / (beta_ + 1.0)) {}

  Index position() const { return pos_; }
  std::int64_t steps() const { return steps_; }
  std::int64_t ysteps() const { return ysteps_; }  // U's consumed
  std::int64_t ytilde() const { return ytilde_; }  // coupled walk on Z
  UniformTape& tape() { return tape_; }

  // Returns true when the step moved between two backbone vertices.
  // With skip_traps, a move into a bud is reported in `bud_hit` and the walker
  // stays put: the trap is a dead end, so it returns to the same vertex.
  bool advance(bool skip_traps, Index* bud_hit) {
    env_.expand(pos_);
    const VertexRecord& r = env_[pos_];
    ++steps_;
    if (on_backbone(r.kind)) {
      const int nb = r.n_backbone, k = r.n_children, nbud = k - nb;
      const bool is_root = r.kind == VertexKind::Root;
      if (nbud > 0) {
        const double pbud = is_root ? double(nbud) / k : beta_ * nbud / (1.0 + beta_ * k);
        const double u = xs_.uniform();
        if (u < pbud) {
          const Index b = r.first_child + nb + std::min(nbud - 1, int(u / pbud * nbud));
          if (skip_traps) {
            if (bud_hit) *bud_hit = b;
          } else {
            pos_ = b;
          }
          return false;
        }
      }
      const double U = tape_[std::uint64_t(ysteps_)];
      ++ysteps_;
      ytilde_ += U <= down_ ? -1 : 1;
      if (is_root) {
        pos_ = r.first_child + std::min(nb - 1, int(U * nb));
      } else {
        const double pp = 1.0 / (1.0 + beta_ * nb);
        if (U < pp) pos_ = r.parent;
        else pos_ = r.first_child + std::min(nb - 1, int((U - pp) / (1.0 - pp) * nb));
      }
      return true;
    }
    const int k = r.n_children;
    if (k == 0) {
      pos_ = r.parent;
    } else {
      const double z = 1.0 + beta_ * k;
      const double u = xs_.uniform() * z;
      if (u < 1.0) pos_ = r.parent;
      else pos_ = r.first_child + std::min(k - 1, int((u - 1.0) / beta_));
    }
    return false;
  }

 private:
  Environment& env_;
  UniformTape tape_;
  Stream xs_;
  double beta_, down_;
  Index pos_ = Environment::root();
  std::int64_t steps_ = 0, ysteps_ = 0, ytilde_ = 0;
};

inline UniformTape walk_tape(std::uint64_t walk_seed, std::uint64_t attempt = 0) {
  return UniformTape(Stream(walk_seed, 2 * attempt + 1));
}
inline Stream walk_side_stream(std::uint64_t walk_seed) { return Stream(walk_seed, 0); }

struct HittingRecord {
  std::uint64_t seed = 0;
  std::int64_t n = 0;
  int h_n = 0;
  std::int64_t delta_n = 0;
  std::int64_t chi_n = 0;
  std::int64_t chi_star_n = 0;
  std::int64_t delta_n_Y = 0;
  std::int64_t max_backtrack = 0;
  std::int64_t offbackbone_steps = 0;
  bool complete = true;
};

class BudgetExceeded : public Error {
 public:
  explicit BudgetExceeded(HittingRecord partial)
      : Error(ErrorCode::BudgetExceeded, "step budget exhausted"), partial_(partial) {}
  const HittingRecord& partial() const { return partial_; }

 private:
  HittingRecord partial_;
};

struct HittingOptions {
  double epsilon = 0.1;
  std::int64_t step_budget = 4'000'000'000;
  std::vector<Index>* trajectory = nullptr;  // filled with X_0..X_Δ when set
};

// Runs X from the root until |X| = n. Never throws on budget exhaustion; the
// returned record then has complete = false.
inline HittingRecord try_run_hitting(Environment& env, std::int64_t n, std::uint64_t walk_seed,
                                     const HittingOptions& opt = {}) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  const auto& P = env.model().params;
  validate_epsilon(opt.epsilon, P.gamma);
  HittingRecord rec;
  rec.seed = walk_seed;
  rec.n = n;
  rec.h_n = big_trap_threshold(double(n), opt.epsilon, P.fprime_q);
  Walker w(env, walk_tape(walk_seed), walk_side_stream(walk_seed));
  if (opt.trajectory) opt.trajectory->assign(1, Environment::root());

  Index trap = -1, bottom = -1;
  bool big = false;
  std::int64_t first_bottom = -1, last_bottom = -1;
  std::int64_t max_depth = 0, bb_steps = 0;

  auto close_entry = [&] {
    if (first_bottom >= 0) rec.chi_star_n += last_bottom - first_bottom;
    first_bottom = last_bottom = -1;
  };

  for (;;) {
    if (w.steps() >= opt.step_budget) {
      rec.complete = false;
      break;
    }
    const bool bb = w.advance(false, nullptr);
    const Index to = w.position();
    const std::int64_t t = w.steps();
    if (opt.trajectory) opt.trajectory->push_back(to);
    if (bb) {
      ++bb_steps;
    } else {
      ++rec.offbackbone_steps;
      if (trap < 0) {
        // Entering a trap through its bud.
        trap = to;
        big = env.trap_height(to) >= rec.h_n;
        bottom = big ? env[to].bottom : -1;
      }
      if (on_backbone(env[to].kind)) {
        // Back at the trap's root.
        if (big) ++rec.chi_n;
        close_entry();
        trap = -1;
        big = false;
      } else if (big) {
        ++rec.chi_n;
        if (to == bottom) {
          if (first_bottom < 0) first_bottom = t;
          last_bottom = t;
        }
      }
    }
    const std::int64_t d = env[to].depth;
    max_depth = std::max(max_depth, d);
    rec.max_backtrack = std::max(rec.max_backtrack, max_depth - d);
    if (d == n) break;
  }
  if (trap >= 0) close_entry();
  rec.delta_n = w.steps();
  rec.delta_n_Y = bb_steps + 1;
  return rec;
}

inline HittingRecord run_hitting(Environment& env, std::int64_t n, std::uint64_t walk_seed,
                                 const HittingOptions& opt = {}) {
  HittingRecord r = try_run_hitting(env, n, walk_seed, opt);
  if (!r.complete) throw BudgetExceeded(r);
  return r;
}

// Independent pass over a stored trajectory: steps with both endpoints in
// h-traps (vertices of a trap, including the edge to its root).
inline std::int64_t chi_from_trajectory(Environment& env, const std::vector<Index>& traj, int h) {
  auto trap_of = [&](Index v) -> Index {
    Index bud = -1;
    while (!on_backbone(env[v].kind)) {
      bud = v;
      v = env[v].parent;
    }
    return bud;
  };
  std::int64_t chi = 0;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const Index a = traj[i - 1], b = traj[i];
    const Index ta = trap_of(a), tb = trap_of(b);
    const Index t = ta >= 0 ? ta : tb;
    if (t >= 0 && env.trap_height(t) >= h) ++chi;
  }
  return chi;
}

struct EmbeddedBackbone {
  std::vector<std::int64_t> sigma;  // σ_0 = 0, σ_{k+1} = first i > σ_k with X_{i-1}, X_i on the backbone
  std::vector<Index> Y;
  std::int64_t delta_n_Y = 0;       // card{k : σ_k ≤ Δ_n}
};

inline EmbeddedBackbone embedded_backbone(const Environment& env, const std::vector<Index>& traj,
                                          std::int64_t delta_n = -1) {
  EmbeddedBackbone e;
  if (traj.empty()) return e;
  if (delta_n < 0) delta_n = std::int64_t(traj.size()) - 1;
  e.sigma.push_back(0);
  e.Y.push_back(traj[0]);
  for (std::size_t i = 1; i < traj.size(); ++i) {
    if (on_backbone(env[traj[i - 1]].kind) && on_backbone(env[traj[i]].kind)) {
      e.sigma.push_back(std::int64_t(i));
      e.Y.push_back(traj[i]);
    }
  }
  for (auto s : e.sigma) e.delta_n_Y += s <= delta_n;
  return e;
}

struct RegenerationTrace {
  std::vector<std::int64_t> path;       // Ỹ_0..Ỹ_horizon
  std::vector<std::int64_t> confirmed;  // SR times
  std::vector<std::int64_t> tentative;  // candidates whose window runs past the horizon
};

inline std::int64_t coupled_increment(double u, double beta) { return u <= 1.0 / (beta + 1.0) ? -1 : 1; }

// A time t < horizon is declared SR when Ỹ_t is a strict running maximum and
// Ỹ_s > Ỹ_t for t < s ≤ t + window.
inline RegenerationTrace detect_super_regenerations(UniformTape& tape, std::int64_t horizon,
                                                    std::int64_t window, double beta) {
  if (!(horizon > window)) throw Error(ErrorCode::InvalidArgument, "horizon must exceed the window");
  RegenerationTrace tr;
  tr.path.resize(std::size_t(horizon) + 1);
  tr.path[0] = 0;
  for (std::int64_t s = 0; s < horizon; ++s)
    tr.path[std::size_t(s) + 1] = tr.path[std::size_t(s)] + coupled_increment(tape[std::uint64_t(s)], beta);
  // Sliding minimum of path over (t, t+window].
  std::deque<std::int64_t> dq;
  std::int64_t runmax = std::numeric_limits<std::int64_t>::min();
  std::int64_t hi = 0;  // path indices pushed so far: (t, hi]
  for (std::int64_t t = 0; t < horizon; ++t) {
    const std::int64_t last = std::min(t + window, horizon);
    while (hi < last) {
      ++hi;
      while (!dq.empty() && tr.path[std::size_t(dq.back())] >= tr.path[std::size_t(hi)]) dq.pop_back();
      dq.push_back(hi);
    }
    while (!dq.empty() && dq.front() <= t) dq.pop_front();
    const std::int64_t y = tr.path[std::size_t(t)];
    const bool candidate = y > runmax;
    runmax = std::max(runmax, y);
    if (!candidate) continue;
    const bool clear = dq.empty() || tr.path[std::size_t(dq.front())] > y;
    if (!clear) continue;
    if (t + window <= horizon) tr.confirmed.push_back(t);
    else tr.tentative.push_back(t);
  }
  return tr;
}

// True when Ỹ stays strictly above its current value for `window` further
// steps starting from tape index `from` (Ỹ at that point taken as 0).
inline bool clears_window(UniformTape& tape, std::uint64_t from, std::int64_t window, double beta) {
  std::int64_t y = 0;
  for (std::int64_t s = 0; s < window; ++s) {
    y += coupled_increment(tape[from + std::uint64_t(s)], beta);
    if (y <= 0) return false;
  }
  return true;
}

// Tape conditioned on {0 is SR} by rejection over independent tapes.
inline UniformTape zero_sr_tape(std::uint64_t walk_seed, std::int64_t window, double beta,
                                int* attempts = nullptr) {
  for (std::uint64_t a = 0;; ++a) {
    UniformTape t = walk_tape(walk_seed, a);
    if (clears_window(t, 0, window, beta)) {
      if (attempts) *attempts = int(a) + 1;
      return t;
    }
  }
}

struct WSample {
  std::int64_t W = 0;
  std::int64_t K = -1;       // index of Y at which the first h_n-trap was met
  int attempts = 0;          // tapes drawn until 0 was confirmed SR
  std::int64_t ysteps = 0;
  bool complete = true;
};

struct WOptions {
  double epsilon = 0.1;
  std::int64_t window = 0;  // 0: default confirm window for `replicas`
  std::size_t replicas = 10000;
  std::int64_t ystep_budget = 200'000'000;
};

// W_n = card{i : X_i = Y_{K(n)}, X_{i+1} = b(n)} for one environment and walk,
// conditioned on 0-SR. Counting stops once a confirmed SR time at or beyond the
// trap's level has been left, after which the root is never visited again.
inline WSample sample_W_replica(std::shared_ptr<const EnvironmentModel> model, std::int64_t n,
                                std::uint64_t seed, const WOptions& opt = {}) {
  const auto& P = model->params;
  validate_epsilon(opt.epsilon, P.gamma);
  const int hn = big_trap_threshold(double(n), opt.epsilon, P.fprime_q);
  const std::int64_t window =
      opt.window > 0 ? opt.window : std::int64_t(confirm_window(P.beta, opt.replicas));
  Environment env(model, derive_seed(seed, 1));
  const std::uint64_t ws = derive_seed(seed, 2);
  WSample out;
  UniformTape tape = zero_sr_tape(ws, window, P.beta, &out.attempts);
  Walker w(env, tape, walk_side_stream(ws));

  Index root = -1, bud = -1;
  std::int64_t runmax = 0;  // max of Ỹ over times < current
  bool leaving = false;

  auto arrive = [&](std::int64_t t) {
    const Index y = w.position();
    if (root < 0) {
      const Index b = env.first_bud_with_height(y, hn);
      if (b >= 0) {
        root = y;
        bud = b;
        out.K = t;
      }
    }
    const std::int64_t yt = w.ytilde();
    const bool record = t == 0 || yt > runmax;
    if (t > 0) runmax = std::max(runmax, yt);
    if (root >= 0 && !leaving && record && env[y].depth >= env[root].depth) {
      if (t == 0 || clears_window(w.tape(), std::uint64_t(w.ysteps()), window, P.beta)) leaving = true;
    }
  };

  arrive(0);
  for (;;) {
    if (w.ysteps() >= opt.ystep_budget) {
      out.complete = false;
      break;
    }
    Index hit = -1;
    const bool moved = w.advance(true, &hit);
    if (!moved) {
      if (hit == bud && w.position() == root) ++out.W;
      continue;
    }
    if (leaving) break;
    arrive(w.ysteps());
  }
  out.ysteps = w.ysteps();
  return out;
}

inline std::vector<WSample> sample_Wn(std::shared_ptr<const EnvironmentModel> model, std::int64_t n,
                                      std::uint64_t seed, std::size_t replicas, unsigned workers,
                                      WOptions opt = {}) {
  opt.replicas = replicas;
  return parallel_map(replicas, workers, [&](std::size_t i) {
    return sample_W_replica(model, n, derive_seed(seed, i), opt);
  });
}

// Empirical pmf of W from samples.
inline std::vector<double> w_pmf(const std::vector<WSample>& s) {
  std::int64_t mx = 0;
  for (auto& x : s) mx = std::max(mx, x.W);
  std::vector<double> p(std::size_t(mx) + 1, 0.0);
  for (auto& x : s) p[std::size_t(x.W)] += 1.0;
  for (auto& v : p) v /= double(s.size());
  return p;
}

struct RhoBlocks {
  std::vector<double> distinct, levels, times;
};

// Backbone walk Y alone (bud excursions do not influence it) split at
// confirmed SR times; returns per-block counts excluding the first block.
inline RhoBlocks rho_blocks_replica(std::shared_ptr<const EnvironmentModel> model, std::uint64_t seed,
                                    std::int64_t horizon, std::int64_t window) {
  const double beta = model->params.beta;
  Environment env(model, derive_seed(seed, 1));
  const std::uint64_t ws = derive_seed(seed, 2);
  UniformTape tape = walk_tape(ws);
  const RegenerationTrace tr = detect_super_regenerations(tape, horizon, window, beta);
  Walker w(env, walk_tape(ws), walk_side_stream(ws));
  std::vector<Index> ypos{Environment::root()};
  ypos.reserve(std::size_t(horizon) + 1);
  while (w.ysteps() < horizon) {
    if (w.advance(true, nullptr)) ypos.push_back(w.position());
  }
  RhoBlocks b;
  std::vector<std::int64_t> stamp;
  for (std::size_t k = 1; k + 1 < tr.confirmed.size(); ++k) {
    const auto t0 = tr.confirmed[k], t1 = tr.confirmed[k + 1];
    std::int64_t distinct = 0;
    for (auto t = t0; t < t1; ++t) {
      const Index v = ypos[std::size_t(t)];
      if (stamp.size() <= std::size_t(v)) stamp.resize(std::size_t(v) + 1, -1);
      if (stamp[std::size_t(v)] != std::int64_t(k)) {
        stamp[std::size_t(v)] = std::int64_t(k);
        ++distinct;
      }
    }
    b.distinct.push_back(double(distinct));
    b.levels.push_back(double(env[ypos[std::size_t(t1)]].depth - env[ypos[std::size_t(t0)]].depth));
    b.times.push_back(double(t1 - t0));
  }
  return b;
}

struct RhoEstimate {
  double rho = 0, lo = 0, hi = 0;
  double per_time = 0;  // E[distinct]/E[block time]
  std::size_t blocks = 0;
};

inline RhoEstimate rho_estimate(std::shared_ptr<const EnvironmentModel> model, std::uint64_t seed,
                                std::size_t replicas, std::size_t blocks, unsigned workers = 1,
                                int bootstrap = 400) {
  if (blocks < 100) throw Error(ErrorCode::InvalidArgument, "rho_estimate needs at least 100 blocks");
  const double beta = model->params.beta;
  const std::int64_t window = std::int64_t(confirm_window(beta, replicas));
  // Mean block length is a few steps; aim for `blocks` blocks overall.
  const std::int64_t horizon =
      std::max<std::int64_t>(4 * window, std::int64_t(8.0 * double(blocks) / double(replicas)) + 2 * window);
  auto parts = parallel_map(replicas, workers, [&](std::size_t i) {
    return rho_blocks_replica(model, derive_seed(seed, i), horizon, window);
  });
  RhoBlocks all;
  for (auto& p : parts) {
    all.distinct.insert(all.distinct.end(), p.distinct.begin(), p.distinct.end());
    all.levels.insert(all.levels.end(), p.levels.begin(), p.levels.end());
    all.times.insert(all.times.end(), p.times.begin(), p.times.end());
  }
  RhoEstimate e;
  e.blocks = all.distinct.size();
  if (e.blocks == 0) return e;
  auto ratio = [&](const std::vector<std::size_t>* idx) {
    double a = 0, b = 0;
    const std::size_t m = all.distinct.size();
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t i = idx ? (*idx)[j] : j;
      a += all.distinct[i];
      b += all.levels[i];
    }
    return a / b;
  };
  e.rho = ratio(nullptr);
  double a = 0, t = 0;
  for (std::size_t i = 0; i < e.blocks; ++i) {
    a += all.distinct[i];
    t += all.times[i];
  }
  e.per_time = a / t;
  Stream bs(derive_seed(seed, 0xB007), 0);
  std::vector<double> reps;
  std::vector<std::size_t> idx(e.blocks);
  for (int r = 0; r < bootstrap; ++r) {
    for (auto& i : idx) i = std::min(e.blocks - 1, std::size_t(bs.uniform() * double(e.blocks)));
    reps.push_back(ratio(&idx));
  }
  std::sort(reps.begin(), reps.end());
  e.lo = reps[std::size_t(0.025 * reps.size())];
  e.hi = reps[std::size_t(0.975 * (reps.size() - 1))];
  return e;
}

}  // namespace gwrw
