#pragma once
// Basic presentations over chart boxes, refinement towers with divisor and
// exponent bookkeeping, admissible coordinate/blowup transformations with
// replayable names, and the rank-decreasing local resolution driver,
// instantiated for polynomial families with exact rational certification.

#include <redec/blowup.hpp>

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace redec {

// ---- extended naturals and ranks ---------------------------------------------------

// N ∪ {∞}; ∞ compares above every finite value.
struct ExtNat {
  bool inf = false;
  unsigned v = 0;

  static ExtNat infinity() { return ExtNat{true, 0}; }
  static ExtNat of(unsigned k) { return ExtNat{false, k}; }
  bool operator==(const ExtNat& o) const { return inf == o.inf && (inf || v == o.v); }
  bool operator<(const ExtNat& o) const {
    if (inf) return false;
    if (o.inf) return true;
    return v < o.v;
  }
  std::string str() const { return inf ? "inf" : std::to_string(v); }
};

// The rank sequence (m_0, r_0, ..., m_{k-1}, r_{k-1}, m_k [, r_k if m_k = 0]),
// ordered lexicographically with the shorter sequence padded by ∞.
struct Rank {
  std::vector<ExtNat> seq;
  std::string str() const;
};
bool rank_less(const Rank& a, const Rank& b);
bool rank_eq(const Rank& a, const Rank& b);

// ---- basic presentations ------------------------------------------------------------

// A finite family of polynomials on a chart box carrier, together with the
// exceptional coordinate set E.  K must be a compact box contained in the open
// carrier U; every coordinate of E meets K's zero hyperplane (units are
// absorbed when carving sub-boxes).
struct BasicPresentation {
  size_t n = 0;
  std::vector<Poly> F;
  std::vector<size_t> E;  // sorted
  RationalBox U;          // open carrier
  RationalBox K;          // compact carrier, K ⊆ U

  void validate() const;  // throws InvalidName / DimensionMismatch
};

// Divisor and order-bound report for a family: either the whole family
// vanishes identically, or the monomial divisor d over E together with the
// reduced members F_E = x_E^{-d}·F and a certified order bound m with
// ord(F,E;K) ≤ m.
struct DivResult {
  bool all_zero = false;
  std::vector<unsigned> d;  // aligned with E
  unsigned order_bound = 0;
  std::vector<Poly> F_E;
};
DivResult zero_test_and_div(const BasicPresentation& bp, unsigned fuel = 1u << 18);

// ---- towers and presentations -------------------------------------------------------

struct RefineWitness {
  size_t f_index = 0;
  Expo alpha;  // stage-local exponent vector
};

// One stage of the refinement tower.  Stage data is materialized: the family,
// the exceptional set and the carrier box all live in stage-local coordinates,
// with vars mapping stage-local indices to chart coordinate labels.
struct Stage {
  ExtNat m = ExtNat::infinity();  // order bound for this stage
  std::vector<size_t> N;          // refinement coordinates (stage-local), empty if none
  size_t r = 0;
  unsigned p = 0;                 // accumulated exponent (p_0 = 0)
  std::vector<unsigned> d;        // divisor, aligned with E
  std::vector<RefineWitness> witnesses;
  bool has_N = false;             // whether (N, r) are assigned

  std::vector<Poly> F;
  std::vector<size_t> E;     // stage-local, sorted
  std::vector<size_t> vars;  // stage-local index -> chart coordinate label
  RationalBox K;             // over stage-local coordinates
};

struct Presentation {
  BasicPresentation base;
  std::vector<Stage> tower;  // stage 0..k; stage 0 mirrors base

  Rank rank() const;
  bool resolved() const;  // m_0 = 0
  bool complete() const;  // F_k ≡ 0, or m_k = 0 with |d_k| ≥ p_k
  // Recomputes the refinement recursion from the base and checks that it
  // reproduces the tower (families, E sets, exponents, divisors).
  void check_invariants(unsigned fuel = 1u << 18) const;
};

// The trivial tower (F, E; K : ∞).
Presentation trivial_presentation(const BasicPresentation& bp);

// ---- admissible transformations -----------------------------------------------------

enum class TransKind {
  Inclusion,            // restrict K to a sub-box (absorbing unit E-coordinates)
  LinearShear,          // x_j = y_j + w_j·y_i, identity elsewhere
  ImplicitTranslation,  // x_i = y_i + g(y_{i^c}), identity elsewhere
  BlowupChart,          // standard chart of the blowing-up with center {x_I = 0}
  CenterInclusion,      // Type 0: re-annotate the last stage's order bound
};
std::string trans_kind_name(TransKind k);

struct TransStep {
  TransKind kind = TransKind::Inclusion;
  size_t stage = 0;            // tower stage the step acts at
  std::vector<Poly> h;         // forward map, child chart -> parent chart
  RationalBox K_child;         // carrier after the step (chart coordinates)
  std::vector<size_t> drop_E;  // E labels absorbed as units by this step
  // payloads (used according to kind):
  size_t coord = 0;            // shear target / translation coordinate / chart i
  std::vector<size_t> center;  // blowup center labels I
  Poly g;                      // translation polynomial (in chart coords, ignoring coord)
  std::string detail;          // extra name payload (shear weights, ε/δ, bounds)

  std::string name() const;
};

struct RefinableCert {
  unsigned m = 0;
  std::vector<size_t> N;  // stage-local coordinates of the acted-on stage
  size_t r = 0;
  std::vector<RefineWitness> witnesses;
};

// Directives fixing how the pullback tower terminates; part of the replayable
// name.
struct ExtendDirective {
  size_t stage = 0;
  RefinableCert cert;
};
struct TruncateDirective {
  size_t stage = 0;
  unsigned bound = 0;
};

struct AdmissibleTransformation {
  std::vector<TransStep> steps;  // applied parent-side first
  std::optional<ExtendDirective> extend;
  std::optional<TruncateDirective> truncate;

  TransKind kind() const;         // principal kind
  std::vector<Poly> forward() const;  // composed map, child chart -> parent chart
  std::string name() const;       // replayable
};

// Pullback of a presentation by an admissible transformation: composes the
// family with the transformation steps, rebuilds the refinement tower stage by
// stage (re-verifying the stage witnesses on the new carrier), and terminates
// the tower according to the directive or, absent one, by certifying the best
// order bound at the first stage whose data no longer verifies.
// Throws InadmissibleTransformation when replay fails, BudgetExhausted when
// fuel runs out.
Presentation pullback(const Presentation& P, const AdmissibleTransformation& T,
                      unsigned fuel = 1u << 18);

// Re-runs pullback and compares: the transformation name is self-verifying.
bool replay_verify(const Presentation& parent, const AdmissibleTransformation& T,
                   const Presentation& child, unsigned fuel = 1u << 18);

// ---- refinability detection and refinement ------------------------------------------

struct DetectPiece {
  AdmissibleTransformation T;        // in the presentation's own coordinates
  BasicPresentation piece;           // pullback of bp by T
  std::optional<RefinableCert> cert; // nullopt: order 0 certified on the piece
};

// Covers K by transformed pieces on each of which the pullback either has
// certified order 0 or is certified (m', N, r)-refinable with m' ≤ m.
// When must_beat is set, only classifications with (m', r) lexicographically
// below it are accepted.
std::vector<DetectPiece> detect_refinable(
    const BasicPresentation& bp, unsigned m, unsigned fuel = 1u << 18,
    std::optional<std::pair<unsigned, size_t>> must_beat = std::nullopt);

// The (p, m, N)-refinement: restrictions of the N-derivatives of F_E to
// {x_N = 0}, raised to the exponent p̃/(m−|α|) with p̃ the lcm of the occurring
// gaps (and of q = max(0, p − m − |d_{E∩N}|) when positive, in which case the
// divisor monomial power joins the family).  Returns the refined basic
// presentation (over the sliced carrier); p̃ is reported through p_tilde.
BasicPresentation refine(const BasicPresentation& bp, unsigned p, unsigned m,
                         const std::vector<size_t>& N,
                         const std::vector<RefineWitness>& witnesses,
                         unsigned* p_tilde = nullptr, unsigned fuel = 1u << 18);

// ---- the rank-decreasing driver ------------------------------------------------------

struct RankDropResult {
  std::vector<std::pair<AdmissibleTransformation, Presentation>> children;
};

// One step of the descent: Type 0 re-annotation when the last stage is an
// unsettled ∞ bound over a nonzero family; refinability detection when the
// last stage has a positive finite bound; the exponent-deficit descent when
// the last stage has order 0 but too small a divisor; and the admissible
// blowup family (plus away-from-center coordinate pieces) when complete.
// Every child has strictly smaller rank (asserted).
RankDropResult rank_drop_step(const Presentation& P, unsigned fuel = 1u << 18);

struct LeafCertificate {
  std::vector<size_t> E;            // chart labels
  std::vector<unsigned> d;          // family divisor, aligned with E
  std::vector<int> unit_signs;      // per family member; 0 for zero members
  std::vector<bool> sign_certified; // per family member
};

struct ResolutionNode {
  Presentation P;
  std::optional<AdmissibleTransformation> in_edge;
  size_t parent = SIZE_MAX;
  std::vector<size_t> children;
  bool is_leaf = false;
  std::optional<LeafCertificate> cert;
};

struct ResolutionTree {
  std::vector<ResolutionNode> nodes;  // node 0 is the root
  std::vector<size_t> pending;        // unexpanded nodes (nonempty => partial)
  bool finished() const { return pending.empty(); }
};

// Expands the tree breadth-first until every leaf is resolved or the budget
// (work units) runs out; a partial tree is returned in the latter case and can
// be resumed.  Throws NormalizationFailure on an identically-zero family.
ResolutionTree resolve(const Presentation& P, unsigned budget = 1u << 20);
ResolutionTree resolve_resume(ResolutionTree partial, unsigned budget);

// Exact coverage: walks the tree inverting the recorded transformation chains
// and reports whether some resolved leaf chart image contains x.
bool chart_point_covered(const ResolutionTree& tree, const std::vector<Rat>& x);

nlohmann::json tree_to_json(const ResolutionTree& tree);

// ---- exposed certification helpers ---------------------------------------------------

// Interval sign certificate: +1/−1 when f is certified nonvanishing with that
// sign on the closed box B (by adaptive bisection), nullopt when fuel runs out.
std::optional<int> certify_sign(const Poly& f, const RationalBox& B, unsigned fuel);

// Certifies that at every point of B, some member of G has a nonvanishing
// derivative of total order ≤ m.
bool certify_order_at_most(const std::vector<Poly>& G, unsigned m, const RationalBox& B,
                           unsigned fuel);

}  // namespace redec
