#pragma once
// Semi-decision set representations: c.e. open sets (membership of compact
// rational boxes is semi-decided), co-c.e. closed sets (complement c.e.
// open), and co-c.e. compact sets given by computable shrinking sequences of
// finite unions of bounded open boxes.  Conversions between the compact and
// closed representations, the compact-in-open verifier, and the computable
// topology operations live here.

#include <redec/box.hpp>
#include <redec/semidecision.hpp>

#include <functional>
#include <memory>
#include <vector>

namespace redec {

class CeOpenSet {
 public:
  CeOpenSet() = default;
  CeOpenSet(size_t n, std::function<SemiDecision(const RationalBox&)> member)
      : n_(n), member_(std::move(member)) {}

  size_t dim() const { return n_; }

  // Semi-decides cl-free containment: ACCEPT (at some fuel) iff B ⊆ U.
  // B must be a compact rational box of matching dimension.
  SemiDecision contains_box(const RationalBox& B) const;

  // U = union of the given boxes, each taken as written (typically open).
  static CeOpenSet finite_union(size_t n, std::vector<RationalBox> boxes);
  static CeOpenSet whole_space(size_t n);
  static CeOpenSet empty(size_t n);

  // Union of a computable family; the family is consulted at indices 0..fuel
  // and membership is verified by mesh-2^{-fuel} subdivision of the query box
  // (complete by the Lebesgue covering argument on shipped instances).
  static CeOpenSet union_family(size_t n, std::function<CeOpenSet(size_t)> family);
  static CeOpenSet finite_intersection(std::vector<CeOpenSet> parts);

 private:
  size_t n_ = 0;
  std::function<SemiDecision(const RationalBox&)> member_;
};

class CoCeCompactSet {
 public:
  CoCeCompactSet() = default;
  // U(i) must be a finite union of bounded open boxes with cl(U_{i+1}) ⊆ U_i
  // and K = ∩_i U_i; M a rational bound with K ⊆ (−M,M)^n.
  CoCeCompactSet(size_t n, Rat M, std::function<std::vector<RationalBox>(size_t)> U)
      : n_(n), M_(std::move(M)), U_(std::move(U)) {}

  size_t dim() const { return n_; }
  const Rat& bound() const { return M_; }
  std::vector<RationalBox> stage(size_t i) const { return U_(i); }

  static CoCeCompactSet from_box(const RationalBox& closed_box);
  static CoCeCompactSet empty(size_t n);

  // K as a co-c.e. closed set: the c.e. open complement R^n ∖ K.
  CeOpenSet complement_ce_open() const;

 private:
  size_t n_ = 0;
  Rat M_ = Rat(1);
  std::function<std::vector<RationalBox>(size_t)> U_;
};

// Reconstructs a shrinking-sequence representation from a co-c.e. closed
// representation (c.e. open complement) plus a bound M with K ⊆ (−M,M)^n.
CoCeCompactSet coce_compact_from_closed(size_t n, const CeOpenSet& complement, const Rat& M);

// Semi-decides K ⊆ U by searching for a finite cover of K by boxes whose
// closures are accepted by U.
SemiDecision verify_compact_in_open(const CoCeCompactSet& K, const CeOpenSet& U);

// Splits a compact box into the grid of subboxes of mesh ≤ width/2^k.
std::vector<RationalBox> subdivide_box(const RationalBox& B, unsigned k);

}  // namespace redec
