#pragma once
// Computably C^p maps as an immutable combinator graph.  A scalar node
// answers enclosure queries (sound rational-interval ranges over compact
// boxes, tightening with fuel) and produces its partial-derivative nodes;
// vector maps are lists of scalar components.  The implicit-function layer
// (certificates, verification, implicit maps) sits on top.

#include <redec/polynomial.hpp>
#include <redec/semidecision.hpp>
#include <redec/sets.hpp>

#include <memory>
#include <optional>
#include <vector>

namespace redec {

class MapNode;
using NodePtr = std::shared_ptr<const MapNode>;

// Smoothness: nullopt = C^∞.
using Smooth = std::optional<unsigned>;

inline Smooth smooth_min(const Smooth& a, const Smooth& b) {
  if (!a) return b;
  if (!b) return a;
  return std::min(*a, *b);
}
inline Smooth smooth_sub(const Smooth& a, unsigned k) {
  if (!a) return a;
  if (*a < k) throw EngineError(ErrorCode::SmoothnessExceeded, "derivative order");
  return *a - k;
}

class MapNode : public std::enable_shared_from_this<MapNode> {
 public:
  virtual ~MapNode() = default;
  size_t nvars() const { return n_; }
  Smooth smoothness() const { return p_; }

  // Sound range enclosure of this node's value over the compact box B;
  // nullopt when the domain side conditions cannot be verified at this fuel.
  virtual std::optional<RationalInterval> enclose(const RationalBox& B, Fuel fuel) const = 0;

  // Partial derivative node ∂/∂x_i (requires smoothness ≥ 1).
  NodePtr deriv(size_t i) const;

  // If the node is (syntactically) a polynomial, returns it.
  virtual std::optional<Poly> as_poly() const { return std::nullopt; }

 protected:
  MapNode(size_t n, Smooth p) : n_(n), p_(p) {}
  virtual NodePtr make_deriv(size_t i) const = 0;

 private:
  size_t n_;
  Smooth p_;
  mutable std::vector<NodePtr> deriv_cache_;
};

// ---- constructors -----------------------------------------------------------

NodePtr node_poly(const Poly& f);
NodePtr node_const(size_t n, const Rat& c);
NodePtr node_var(size_t n, size_t i);
NodePtr node_add(NodePtr a, NodePtr b);
NodePtr node_sub(NodePtr a, NodePtr b);
NodePtr node_neg(NodePtr a);
NodePtr node_mul(NodePtr a, NodePtr b);
NodePtr node_scale(const Rat& c, NodePtr a);
NodePtr node_recip(NodePtr a);                       // 1/a on {a ≠ 0}
NodePtr node_compose(NodePtr f, std::vector<NodePtr> args);
NodePtr node_integral(NodePtr f, const Rat& a, const Rat& b);  // ∫_a^b over last var
NodePtr node_div_var(NodePtr f, size_t i, unsigned d);          // f / x_i^d

// ---- vector maps --------------------------------------------------------------

struct MapVec {
  size_t n = 0;  // domain dimension
  std::vector<NodePtr> comps;

  size_t m() const { return comps.size(); }
  Smooth smoothness() const {
    Smooth p;
    for (auto& c : comps) p = c ? smooth_min(p, c->smoothness()) : p;
    return p;
  }
};

MapVec map_from_polys(const std::vector<Poly>& fs);
MapVec compose_maps(const MapVec& f, const MapVec& g);  // f ∘ g
MapVec divide_by_variable(const MapVec& f, size_t i, unsigned d);
MapVec integrate_map(const MapVec& f, const Rat& a, const Rat& b);

// ∂^α of one component enclosed over a compact box; nullopt = undecided.
std::optional<RationalInterval> approx_query(const MapVec& f, size_t comp,
                                             const Expo& alpha, const RationalBox& B,
                                             Fuel fuel);

// Semi-decides B ⊆ dom(f) ∧ ∂^α f(B) ⊆ I (componentwise target intervals).
SemiDecision cp_query(const MapVec& f, const Expo& alpha, const RationalBox& B,
                      const std::vector<RationalInterval>& I);

// Adaptive verification that sign·node > 0 everywhere on compact B.
bool sign_definite(const NodePtr& node, const RationalBox& B, int sign, Fuel fuel);

// ---- effective implicit function theorem --------------------------------------

// Certificate that IF(f; r, s) holds for f: R^{m+n} ⊇ U → R^n with x ∈ R^m
// centered boxes [−r,r]^m? (r, s are per-coordinate radii).  Base case n = 1
// records the sign σ; the inductive step records the pivot pair (i, j), the
// base certificate for equation i solved for y_j, and the certificate for the
// reduced system composed with the partial graph map.
struct IFCert {
  MapVec f;             // n equations in m + n variables (x first, then y)
  size_t m = 0, n = 0;
  std::vector<Rat> r;   // m positive radii
  std::vector<Rat> s;   // n positive radii
  int sigma = 0;                        // base case (n = 1)
  size_t pivot_i = 0, pivot_j = 0;      // inductive case
  std::shared_ptr<IFCert> base;         // IF(f_i; (r, s'), s_j)
  std::shared_ptr<IFCert> rest;         // IF(f' ∘ H; r, s')
};

// Replays/searches the certificate conditions; ACCEPT iff IF(f; r, s) holds.
// When `out` is non-null, the found certificate is stored on acceptance.
SemiDecision verify_IF(const MapVec& f, size_t m, std::vector<Rat> r, std::vector<Rat> s,
                       std::shared_ptr<IFCert>* out = nullptr);

// Box variant: IF(f; A, B) with A, B compact boxes (recentred to radii form).
SemiDecision verify_IF_box(const MapVec& f, const RationalBox& A, const RationalBox& B,
                           std::shared_ptr<IFCert>* out = nullptr);

// Section variant IF_λ(f; B): B is a rational box manifold in R^m (its
// degenerate coordinates are fixed), λ lists the section (parameter)
// coordinates; the remaining nondegenerate coordinates are solved.  The
// returned data reconstructs the section φ: Π_λ(B) → B whose image is the
// zero set of f on B.
struct SectionCert {
  std::shared_ptr<IFCert> cert;
  std::vector<size_t> lambda;  // parameter coordinates (d of them)
  std::vector<size_t> mu;      // solved coordinates (increasing)
  RationalBox B;               // the ambient box manifold
  RationalBox A;               // Π_λ(B) closure
  RationalBox S;               // Π_μ(B) closure
};

SemiDecision verify_IF_section(const MapVec& f, const std::vector<size_t>& lambda,
                               const RationalBox& B, std::shared_ptr<SectionCert>* out);

// The full section φ: R^d ⊇ Π_λ(B) → R^m (identity on λ, constants on the
// degenerate coordinates, implicit solutions on μ).
MapVec section_map(const std::shared_ptr<SectionCert>& sc);

// The implicit map g: [−r,r]^m → Π(−s_j, s_j) with f(x, g(x)) = 0.
// Throws InvalidCertificate when replay fails.
MapVec implicit_map(const std::shared_ptr<IFCert>& cert);

// Recentred variant matching verify_IF_box: g maps A into B.
MapVec implicit_map_box(const std::shared_ptr<IFCert>& cert, const RationalBox& A,
                        const RationalBox& B);

}  // namespace redec
