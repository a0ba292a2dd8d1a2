#pragma once
// Blowup-set names and their combinatorics (central coordinates, restriction,
// BOX segments), E-stratifications with frontier relations, graph liftings of
// functions on blowup manifolds, the lifting calculus, and fiber products of
// lifted systems.

#include <redec/blowup.hpp>
#include <redec/soracle.hpp>

#include <map>
#include <optional>
#include <vector>

namespace redec {

// ---- blowup set names ------------------------------------------------------------
//
// A name (I, i, A) with I = (I_1..I_k), i = (i_1..i_k), A = A_0 × … × A_k:
//   X_0 = A_0,   X_j = π_{I_j,i_j}^{-1}(X_{j-1}) ∩ (R^{I_j^c} × A_j),
// subject to the stage invariant I_j ⊆ Cen(X_{j-1}), where
// Cen(Y) = {l : 0 ∈ Π_{{l}}(Y)} is the set of central coordinates.

struct BlowupSetName {
  size_t n = 0;
  std::vector<std::vector<size_t>> I;  // sorted nonempty stage subsets of {0..n-1}
  std::vector<size_t> i;               // chart indices, i_j ∈ I_j
  std::vector<RationalBox> A;          // A[0] of dim n, then A[j] of dim |I_j|

  size_t length() const { return I.size(); }
  void validate() const;               // throws InvalidName

  static BlowupSetName box(const RationalBox& A0);  // length-0 name
  // Appends a blowup stage (requires Ij ⊆ Cen of the current set).
  BlowupSetName blow_up(const std::vector<size_t>& Ij, size_t ij,
                        const RationalBox& Aj) const;
};

// Cen of the named set, by the stage recursion
// Cen(X_j) = (Cen(X_{j-1}) ∖ I_j) ∪ {l ∈ I_j : 0 ∈ (A_j)_l}.
std::vector<size_t> bus_cen(const BlowupSetName& name);

// Exact membership for rational points: the finite chain of chart equations
// and box tests, honoring each box's open/closed facets as written.
bool bus_membership(const BlowupSetName& name, const std::vector<Rat>& x);

// X ∩ B as a new name (I, i, A′) with A′_l = A_l ∩ (R^{J_l^c} × Π_{j∈J_l} B_j),
// where J_l = I_l ∖ (I_{l+1} ∪ … ∪ I_k) and I_0 = {1..n}.
BlowupSetName bus_restrict(const BlowupSetName& name, const RationalBox& B);

// A box containing the named set: stage boxes override earlier coordinates.
RationalBox bus_bounding_box(const BlowupSetName& name);

// The point ((y_l)_{l∉Cen}, (t_l·y_l)_{l∈Cen}) of the segment box BOX(y, Y);
// t assigns a factor in [0,1] to each central coordinate (default 1).
std::vector<Rat> bus_box_point(const BlowupSetName& name, const std::vector<Rat>& y,
                               const std::map<size_t, Rat>& t);

// ---- variety enlargement ---------------------------------------------------------

enum class EnlargeMode { Joint, Each };

// Given polynomials F on the ambient chart of a compact name (all boxes
// closed) whose zero set misses the named set (jointly or per function),
// effectively finds an open enlargement B ⊃ A preserving emptiness, by
// covering the enlarged set with boxes on which a sign certificate holds.
// Diverges if the emptiness hypothesis fails.
BlowupSetName variety_enlarge(const std::vector<Poly>& F, const BlowupSetName& name,
                              EnlargeMode mode);

// ---- E-stratification ------------------------------------------------------------

struct Stratum {
  BlowupSetName base;           // the open blowup set U
  std::vector<size_t> E;        // sorted stratification coordinates
  std::vector<int> sigma;       // sign vector in {-1,0,1}^E
};

// All 3^{|E|} strata of U, in lexicographic σ order (-1 < 0 < 1).
std::vector<Stratum> stratify(const BlowupSetName& U, const std::vector<size_t>& E);

// x ∈ U_σ: membership in U plus the sign conditions.
bool stratum_membership(const Stratum& s, const std::vector<Rat>& x);

// ξ lies in the frontier of σ within U: ξ ≠ σ and ξ_l ∈ {0, σ_l} for all l.
bool stratum_in_frontier(const std::vector<int>& sigma, const std::vector<int>& xi);

// ---- lifted systems and basic liftings ------------------------------------------

// A system of equations over the family algebra together with a good
// direction: the solution set {z : P(z) = 0} is a manifold, a graph over the
// lambda coordinates, certified on compact sub-boxes via the section variant
// of the implicit-function verifier.
struct LiftedSystem {
  SPolyName P;                  // equations in m ambient variables
  std::vector<size_t> lambda;   // good direction (graph coordinates)
  RationalBox box;              // box manifold carrying the solution set
};

// A basic lifting of f: M → R^{n_range}, M ⊆ R^{n_domain}: a lifted system M′
// and a coordinate projection Π with Π: M′ → graph(f|_M) bijective.  The first
// n_domain entries of proj recover the domain point, the last n_range recover
// the function values.
struct BasicLifting {
  size_t n_domain = 0;
  size_t n_range = 0;
  LiftedSystem sys;
  std::vector<size_t> proj;     // length n_domain + n_range, indices into sys ambient
  std::map<size_t, int> signs;  // stratum constraints on domain coordinates
};

// The values (domain point, function values) recovered from a solution z.
std::vector<Rat> lifting_project(const BasicLifting& L, const std::vector<Rat>& z);

// Inlines polynomial-backed symbols, yielding plain polynomials in the
// ambient variables.  Throws MalformedName on combinator-backed symbols.
std::vector<Poly> inline_poly_system(const SFamily& fam, const SPolyName& name);

// Exact Jacobian determinant of the (square) system at a rational point,
// differentiating in the non-lambda ambient coordinates.
Rat system_jacobian_det(const SFamily& fam, const LiftedSystem& sys,
                        const std::vector<Rat>& z);

// ---- the lifting calculus --------------------------------------------------------

// Graph lifting of a polynomial map f = (f_1..f_r) on a box: system
// z_{m+t} − f_t(z_1..z_m) = 0 with lambda the domain coordinates.
BasicLifting lift_graph(const std::vector<Poly>& f, const RationalBox& domain);

// Identity-map lifting: the graph system of the identity on the box.
BasicLifting lift_identity(size_t n, const RationalBox& domain);

// Pairing: a lifting of (f_1, f_2) from liftings on the same domain, glued by
// a fiber product over the shared domain coordinates.
BasicLifting lift_pair(const BasicLifting& L1, const BasicLifting& L2);

// Composition f ∘ g: fiber product gluing g's values to f's domain.  Checks
// that g's value box lands inside f's domain box (CompatibilityViolation).
BasicLifting lift_compose(const BasicLifting& Lf, const BasicLifting& Lg);

// Implicit restriction: the lifting of f on N = {x ∈ M : x_coords = 0},
// obtained by appending the equations Π′(x) = 0 to the system.
BasicLifting lift_implicit(const BasicLifting& L, const std::vector<size_t>& coords);

// Slicing: adds a sign constraint on a domain coordinate (finer stratum).
BasicLifting lift_slice(const BasicLifting& L, size_t coord, int sign);

// Restriction to a smaller domain box B ⊆ domain.
BasicLifting lift_restrict(const BasicLifting& L, const RationalBox& B);

// Refinement: substitutes x_N = 0 into the system, lifting f|_{x_N = 0}.
BasicLifting lift_refine(const BasicLifting& L, const std::vector<size_t>& N);

// Division by variables: from a lifting of f with f = x_k^d·g, a lifting
// of g.  Off {x_k = 0} the system gains a value variable w with equation
// x_k^d·w − f = 0; on the x_k = 0 stratum the caller passes the lifting of
// ∂^{α_k·e_k + d·e_k} f, and ∂^{α_k e_k} g = (α_k!/(α_k+d)!)·that there,
// realized by an exact output-scaling equation.
BasicLifting lift_divide_off_zero(const BasicLifting& Lf, size_t k, unsigned d);
BasicLifting lift_divide_on_zero(const BasicLifting& Lf_deriv, size_t k, unsigned d,
                                 unsigned alpha_k = 0);

// Lazily generated lifting tables: entries (function index, α, σ) produced on
// demand.
struct LiftingTable {
  std::function<BasicLifting(size_t j, const Expo& alpha, const std::vector<int>& sigma)>
      entry;
};

// Precomposition with a polynomial map h: lifting of f ∘ h on h's domain,
// by appending variables y with equations x − h(y) = 0.  Shears, rational
// translations, and blowup charts all route through this.
BasicLifting lift_precompose(const BasicLifting& L, const std::vector<Poly>& h,
                             const RationalBox& hdomain);

BasicLifting lift_shear(const BasicLifting& L, const ShearMatrix& sh,
                        const RationalBox& hdomain);
BasicLifting lift_blowup(const BasicLifting& L, const BlowupChart& chart,
                         const RationalBox& hdomain);

// ---- fiber products --------------------------------------------------------------

// The glued system (f(x) = 0) ∧ (g(y) = 0) ∧ (x_{piM[t]} − y_{piN[t]} = 0)
// in f.n + g.n ambient variables (x block first).  Throws GluingMismatch on
// shape errors.
SPolyName fiber_product_system(const SPolyName& f, const SPolyName& g,
                               const std::vector<size_t>& piM,
                               const std::vector<size_t>& piN);

// Re-embeds a name into new_n ambient variables, old variable t ↦ where[t].
SPolyName spoly_embed(const SPolyName& name, size_t new_n,
                      const std::vector<size_t>& where);

}  // namespace redec
