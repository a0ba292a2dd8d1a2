#pragma once
// Blowup geometry: linear shears, standard blowup charts, strict transforms,
// order computations, and the ε-covering combinatorics for compact sets.

#include <redec/polynomial.hpp>
#include <redec/sets.hpp>

#include <functional>
#include <map>
#include <optional>
#include <vector>

namespace redec {

// ---- linear shears T_E ----------------------------------------------------------
//
// T_w(y)_i = y_i + Σ_{j∈E} w_{i,j}·y_j for i ∉ E, and T_w(y)_j = y_j for j ∈ E;
// the inverse is T_{−w}.

struct ShearMatrix {
  size_t n = 0;
  std::vector<size_t> E;                         // sorted, nonempty, proper
  std::map<std::pair<size_t, size_t>, Rat> w;    // (row i ∈ E^c, col j ∈ E)

  void validate() const;
  Rat entry(size_t i, size_t j) const {
    auto it = w.find({i, j});
    return it == w.end() ? Rat(0) : it->second;
  }
  ShearMatrix negated() const;
  std::vector<size_t> Ec() const;                // complement of E, sorted
};

// The components of T_w as polynomials in y.
std::vector<Poly> shear_map(const ShearMatrix& sh);

// f ∘ T_w (exact symbolic pullback).
Poly shear_pullback(const Poly& f, const ShearMatrix& sh);

// The derivative expansion of ∂^α(f∘T_w)/∂y_E^α as a sum over matrices
// γ ∈ N^{E^c×E} with rowwise column sums ≤ α:
//   Σ_γ  α!/(γ!·(α−|γ|_row)!) · (∂^{|α|} f / ∂x_{E^c}^{|γ|_col} ∂x_E^{α−|γ|_row}) ∘ T_w · w^γ.
// alpha is a full-length exponent vector supported on E.  Equal (as a
// polynomial identity in y) to shear_pullback(f, sh).deriv_multi(alpha).
Poly shear_deriv_expansion(const Poly& f, const ShearMatrix& sh, const Expo& alpha);

// Searches rational shear matrices of increasing height (ties broken
// lexicographically) for one making ∂^α(f∘T_w)/∂y_E^α nonzero at T_w^{-1}(a).
// Requires ord(f; a) = m and the genericity condition: some β with |β| = m,
// ∂^β f(a) ≠ 0 and β restricted to E ≤ α.
ShearMatrix generic_shear_search(const Poly& f, const std::vector<Rat>& a, unsigned m,
                                 const std::vector<size_t>& E, const Expo& alpha);

// ---- standard blowup charts ------------------------------------------------------
//
// π_{I,i}(y)_j = y_i·y_j for j ∈ I∖{i}, and y_j otherwise; the exceptional
// divisor is {y_i = 0}; the center is C = {x_I = 0}.

struct BlowupChart {
  size_t n = 0;
  std::vector<size_t> I;   // sorted, nonempty
  size_t i = 0;            // i ∈ I

  void validate() const;
};

// The components of π_{I,i} as polynomials in y.
std::vector<Poly> chart_map(const BlowupChart& c);

// f ∘ π_{I,i}.
Poly chart_pullback(const Poly& f, const BlowupChart& c);

// Off the divisor the chart is invertible: y_i = x_i, y_j = x_j/x_i (j ∈ I∖{i}).
std::vector<Rat> chart_inverse_point(const BlowupChart& c, const std::vector<Rat>& x);

// l!·(the y_i-derivative expansion): Σ_{α∈N^I, |α|=l} (l!/α!)·(∂^α f/∂x_I^α)∘π · y_{I∖i}^{α_{I∖i}}.
// Equal, as a polynomial identity, to ∂^l(f∘π)/∂y_i^l.
Poly blowup_deriv_expansion(const Poly& f, const BlowupChart& c, unsigned l);

// f ∘ π = y_i^m · f′ with m = ord of f along the center {x_I = 0} (maximal).
// Throws InfiniteOrder when f ≡ 0.
std::pair<unsigned, Poly> strict_transform(const Poly& f, const BlowupChart& c);

// ---- orders ----------------------------------------------------------------------

struct OrderReport {
  std::optional<unsigned> at_point;      // least |α| with ∂^α f(a) ≠ 0 over the family
  std::optional<unsigned> along_center;  // order along {x_E = 0}
  Expo divisor;                          // max x_E^d dividing every member
  bool infinite = false;                 // the whole family vanishes identically
};

OrderReport order_report(const std::vector<Poly>& F, const std::vector<size_t>& E,
                         const std::vector<Rat>& a);

// ---- covering combinatorics ------------------------------------------------------

// A total, transitive tournament on nodes {0..k}: edge(q, p) true means an
// edge from q to p.  Returns a node p with an edge from every q to p.
size_t tournament_sink(size_t count, const std::function<bool(size_t, size_t)>& edge);

struct BlowupCoverItem {
  BlowupChart chart;
  std::map<size_t, Rat> ratio;  // j ∈ I ↦ ε^{ℓ(j)−ℓ(i)}
  std::optional<Rat> clip;      // optional δ bound on |y_i| (and |x_i|)
  CoCeCompactSet Ki;            // {y ∈ π^{-1}(K) : |y_j| ≤ ratio_j for all j ∈ I, clip}
};

// Charts and chart pieces K_i with K = ∪_i π_i(K_i); blocks must partition I.
// When delta is nonempty (one positive rational per element of I, in order),
// each K_i is additionally clipped to |y_i| ≤ δ_i, and coverage is then of the
// δ-clipped part of K.
std::vector<BlowupCoverItem> blowup_cover(size_t n, const std::vector<size_t>& I,
                                          const std::vector<std::vector<size_t>>& blocks,
                                          const Rat& eps, const std::vector<Rat>& delta,
                                          const CoCeCompactSet& K);

// The exact inequality part of membership in π_i(K_i):
// |x_j| ≤ ε^{ℓ(j)−ℓ(i)}·|x_i| for all j ∈ I (and |x_i| ≤ δ_i when clipped);
// x ∈ π_i(K_i) iff x ∈ K and this test passes.
bool cover_image_test(const BlowupCoverItem& item, const std::vector<Rat>& x);

}  // namespace redec
