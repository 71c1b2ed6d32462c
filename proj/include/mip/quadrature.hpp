#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "mip/function.hpp"

namespace mip {

struct QuadOptions {
  std::uint64_t budget = 1 << 16;
  std::uint64_t seed = 1;
  int workers = 1;
  double tail_bound = 1e-12;      // neglected proposal tail mass
  bool allow_antithetic = true;   // paired +-x draws when both functions are even
};

struct IntegralEstimate {
  double value = 0.0;
  double stderror = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  bool empty = false;  // supports provably disjoint
};

// Every integral entering the first-variation formulas, at one position.
// Interior fields integrate f g (grad phi_g tensor x) over K_f cap int K_g;
// boundary fields integrate f g (n tensor x) over K_f cap bd K_g.
// The trace scalars s_* carry independent accumulators from the same stream.
struct MomentBundle {
  Mat g_int, g_int_stderr;
  Vec v_int, v_int_stderr;
  double s_int = 0.0, s_int_stderr = 0.0;
  Mat g_bd, g_bd_stderr;
  Vec v_bd, v_bd_stderr;
  double s_bd = 0.0, s_bd_stderr = 0.0;
  std::uint64_t samples_interior = 0, samples_boundary = 0;
  std::uint64_t seed = 0;
  bool empty = false;
  bool antithetic = false;
};

// Gaussian importance proposal for pairs with an unbounded participant.
struct Proposal {
  Vec mean;
  Mat spread;      // x = mean + spread * xi, xi standard normal
  Mat spread_inv;
  double log_norm = 0.0;    // log of (2 pi)^{n/2} |det spread|
  double trunc_radius = 0.0;  // cutoff on |xi|
  double scale = 0.0;         // coverage radius: |mean| + sigma_max * trunc_radius
};

Proposal fit_gaussian_proposal(const LogConcaveFunc& f, const LogConcaveFunc& g,
                               double tail_bound, bool force_even);

// One truncated-Gaussian draw; empty when the raw normal falls outside the
// truncation radius (callers retry with the next attempt slot block).
// weight is the reciprocal proposal density.
std::optional<Vec> proposal_point(const Proposal& prop, const Rng& rng, std::uint64_t index,
                                  std::uint32_t slot_base, double& weight);

// Estimates the objective integral of f(x) g(t^{-1}(x-z)) dx.
IntegralEstimate integrate_product(const LogConcaveFunc& f, const LogConcaveFunc& g,
                                   const Position& pos, const QuadOptions& opts);

// Both functions at the reference position (callers pre-apply pullback).
MomentBundle moment_bundle(const LogConcaveFunc& f, const LogConcaveFunc& g,
                           const QuadOptions& opts);

// Gamma-polar cross-check: lhs is Gamma(n) times the surface integral over
// bd(TM) of phi(x) <n(x), A x>; rhs is the equivalent full-space integral
// against the |grad e^{-gauge}| weight. Estimated independently.
std::pair<IntegralEstimate, IntegralEstimate> polar_identity_check(
    const std::function<double(const Vec&)>& phi, const Body& m, const Mat& a, const Mat& t,
    const QuadOptions& opts);

}  // namespace mip
