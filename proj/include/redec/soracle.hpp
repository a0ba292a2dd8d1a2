#pragma once
// Registered function families, syntactic names for polynomial maps over the
// family algebra, and the approximation / precision oracle interfaces.

#include <redec/cmap.hpp>
#include <redec/parse.hpp>

#include <map>
#include <string>
#include <vector>

namespace redec {

struct SFamilyEntry {
  std::string index;
  size_t arity = 0;
  std::vector<Rat> radii;        // domain [−r, r]^arity, per coordinate
  std::optional<Poly> poly;      // polynomial backing (exact)
  NodePtr combinator;            // or combinator backing
};

class SFamily {
 public:
  void register_entry(SFamilyEntry e);
  const SFamilyEntry& get(const std::string& index) const;
  bool has(const std::string& index) const { return entries_.count(index) > 0; }
  std::vector<std::string> indices() const;

  // Plain-text manifest: one entry per line,
  //   family <index> arity <k> radii <r1> ... <rk> poly <expression in x1..xk>
  // '#' starts a comment.
  static SFamily load_manifest_text(const std::string& text);
  static SFamily load_manifest_file(const std::string& path);

  // The derivative ∂^α S_σ as a map node over `arity` variables.
  NodePtr symbol_node(const std::string& index, const Expo& alpha) const;

 private:
  std::map<std::string, SFamilyEntry> entries_;
};

// One registered-symbol occurrence y_i = ∂^{α} S_σ (x_{ξ(1)}, …, x_{ξ(η)}).
struct SSymbol {
  std::string sigma;
  Expo alpha;               // length = arity of σ
  std::vector<size_t> xi;   // length = arity; injective; values < n
  bool operator==(const SSymbol& o) const {
    return sigma == o.sigma && alpha == o.alpha && xi == o.xi;
  }
};

// Name (p(x,y), σ, α, ξ, name(D)) of a polynomial map over the family algebra.
struct SPolyName {
  size_t n = 0;                  // ambient dimension (x variables)
  std::vector<Poly> p;           // components; polynomials in n + symbols.size() vars
  std::vector<SSymbol> symbols;
  RationalBox domain;            // D ⊆ R^n

  void validate(const SFamily& fam) const;  // throws MalformedName
};

struct SManifoldName {
  SPolyName poly;              // defines M = zero set of the map on a box manifold
  std::vector<size_t> lambda;  // projection coordinates
  RationalBox box;             // the box manifold carrying M (within domain)
};

// ---- operations ----------------------------------------------------------------

// Semi-decides ∂^α S_σ(B) ⊆ I.
SemiDecision approx_oracle(const SFamily& fam, const std::string& index, const Expo& alpha,
                           const RationalBox& B, const RationalInterval& I);

// Realizes the named map as a computable map (exact for polynomial backing).
MapVec spoly_eval(const SFamily& fam, const SPolyName& name);

// Formal partial derivative ∂/∂x_j at the name level (product/chain rule over
// p and the family symbols).
SPolyName spoly_formal_partial(const SFamily& fam, const SPolyName& name, size_t j);

struct PrecisionQuery {
  SPolyName poly;
  std::vector<size_t> lambda;
  RationalBox B;    // box manifold, cl(B) ⊆ domain
  size_t i = 0;     // queried coordinate
};

struct PrecisionResult {
  SemiDecision sd;       // ACCEPT iff φ_i ≡ 0 on Π_λ(B)
  bool certified = true; // false ⇒ declared heuristic yes-mode (never accepts)
  unsigned cutoff = 0;   // Taylor cutoff used by the certified test
};

PrecisionResult precision_oracle(const SFamily& fam, const PrecisionQuery& q);

struct EquivResult {
  SemiDecision yes;
  SemiDecision no;
  bool yes_certified = true;
};

// Dovetailed yes/no verifiers for "is M ⊆ {x_i = 0}".
EquivResult manifold_precision_equiv(const SFamily& fam, const SManifoldName& mname,
                                     size_t i);

}  // namespace redec
