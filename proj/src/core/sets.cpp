#include <redec/sets.hpp>

namespace redec {

namespace {

void require_dim(size_t a, size_t b, const char* what) {
  if (a != b) throw EngineError(ErrorCode::DimensionMismatch, what);
}

bool covered_adaptive(const RationalBox& B, const std::vector<CeOpenSet>& parts,
                      Fuel fuel, unsigned depth) {
  for (auto& p : parts)
    if (p.contains_box(B).accepted(fuel)) return true;
  if (depth == 0) return false;
  // bisect along the widest dimension
  size_t k = 0;
  Rat w(-1);
  for (size_t i = 0; i < B.dims.size(); ++i) {
    Rat wi = B.dims[i].width();
    if (wi > w) { w = wi; k = i; }
  }
  if (w == 0) return false;  // degenerate and not accepted whole
  Rat m = B.dims[k].midpoint();
  RationalBox L = B, R = B;
  L.dims[k] = RationalInterval::closed(B.dims[k].lo.v, m);
  R.dims[k] = RationalInterval::closed(m, B.dims[k].hi.v);
  return covered_adaptive(L, parts, fuel, depth - 1) &&
         covered_adaptive(R, parts, fuel, depth - 1);
}

}  // namespace

SemiDecision CeOpenSet::contains_box(const RationalBox& B) const {
  require_dim(B.dim(), n_, "CeOpenSet::contains_box");
  if (!B.compact())
    throw EngineError(ErrorCode::DomainViolation,
                      "membership queries take compact rational boxes");
  return member_(B);
}

CeOpenSet CeOpenSet::finite_union(size_t n, std::vector<RationalBox> boxes) {
  for (auto& b : boxes) require_dim(b.dim(), n, "CeOpenSet::finite_union");
  return CeOpenSet(n, [boxes = std::move(boxes)](const RationalBox& B) {
    bool ok = box_subset_of_union(B, boxes);
    return SemiDecision([ok](Fuel) { return ok; });
  });
}

CeOpenSet CeOpenSet::whole_space(size_t n) {
  return CeOpenSet(n, [](const RationalBox&) { return SemiDecision::always(); });
}

CeOpenSet CeOpenSet::empty(size_t n) {
  return CeOpenSet(n, [](const RationalBox&) { return SemiDecision::never(); });
}

CeOpenSet CeOpenSet::union_family(size_t n, std::function<CeOpenSet(size_t)> family) {
  return CeOpenSet(n, [n, family = std::move(family)](const RationalBox& B) {
    return SemiDecision([n, family, B](Fuel f) {
      std::vector<CeOpenSet> parts;
      for (size_t i = 0; i <= f; ++i) {
        CeOpenSet p = family(i);
        require_dim(p.dim(), n, "CeOpenSet::union_family");
        parts.push_back(std::move(p));
      }
      unsigned depth = static_cast<unsigned>(f > 24 ? 24 : f);
      return covered_adaptive(B, parts, f, depth);
    });
  });
}

CeOpenSet CeOpenSet::finite_intersection(std::vector<CeOpenSet> parts) {
  if (parts.empty())
    throw EngineError(ErrorCode::DimensionMismatch, "empty intersection has no dimension");
  size_t n = parts[0].dim();
  for (auto& p : parts) require_dim(p.dim(), n, "CeOpenSet::finite_intersection");
  return CeOpenSet(n, [parts = std::move(parts)](const RationalBox& B) {
    std::vector<SemiDecision> subs;
    subs.reserve(parts.size());
    for (auto& p : parts) subs.push_back(p.contains_box(B));
    return SemiDecision::all_of(std::move(subs));
  });
}

CoCeCompactSet CoCeCompactSet::from_box(const RationalBox& B) {
  if (!B.compact())
    throw EngineError(ErrorCode::DomainViolation, "from_box needs a compact box");
  Rat M(1);
  for (auto& I : B.dims) M = rat_max(M, rat_max(rat_abs(I.lo.v), rat_abs(I.hi.v)) + 1);
  size_t n = B.dim();
  return CoCeCompactSet(n, M, [B](size_t i) {
    return std::vector<RationalBox>{B.inflate(dyadic(static_cast<unsigned>(i) + 1), true)};
  });
}

CoCeCompactSet CoCeCompactSet::empty(size_t n) {
  return CoCeCompactSet(n, Rat(1), [](size_t) { return std::vector<RationalBox>{}; });
}

CeOpenSet CoCeCompactSet::complement_ce_open() const {
  auto U = U_;
  return CeOpenSet(n_, [U](const RationalBox& B) {
    // B ∩ K = ∅ iff B misses some stage U_i (stages shrink to K).
    return SemiDecision([U, B](Fuel f) {
      for (size_t i = 0; i <= f; ++i) {
        bool disjoint = true;
        for (auto& A : U(i))
          if (B.intersects(A)) { disjoint = false; break; }
        if (disjoint) return true;
      }
      return false;
    });
  });
}

std::vector<RationalBox> subdivide_box(const RationalBox& B, unsigned k) {
  std::vector<RationalBox> out{B};
  for (size_t d = 0; d < B.dim(); ++d) {
    std::vector<RationalBox> next;
    for (auto& b : out) {
      Rat lo = b.dims[d].lo.v, hi = b.dims[d].hi.v;
      Rat step = (hi - lo) / pow_rat(Rat(2), k);
      if (step == 0) { next.push_back(b); continue; }
      Rat a = lo;
      for (unsigned j = 0; j < (1u << k); ++j) {
        Rat bnd = (j + 1 == (1u << k)) ? hi : Rat(a + step);
        RationalBox piece = b;
        piece.dims[d] = RationalInterval::closed(a, bnd);
        next.push_back(std::move(piece));
        a = bnd;
      }
    }
    out = std::move(next);
  }
  return out;
}

CoCeCompactSet coce_compact_from_closed(size_t n, const CeOpenSet& complement, const Rat& M) {
  require_dim(complement.dim(), n, "coce_compact_from_closed");
  RationalBox BM = RationalBox::cube(n, Rat(-M), Rat(M));
  return CoCeCompactSet(n, Rat(M + 1), [n, complement, BM](size_t j) {
    // Cells (dyadic grid over [−M,M]^n, levels 0..j) verified inside the
    // complement with fuel j are carved out of [−M,M]^n; the remainder is
    // inflated by a strictly decreasing ε_j, which gives the nested open
    // stages shrinking to K.
    std::vector<RationalBox> pieces{BM};
    for (unsigned level = 0; level <= j && level <= 6; ++level) {
      for (auto& cell : subdivide_box(BM, level)) {
        if (!complement.contains_box(cell).accepted(j)) continue;
        std::vector<RationalBox> next;
        for (auto& p : pieces) {
          auto sub = box_subtract(p, cell);
          next.insert(next.end(), sub.begin(), sub.end());
        }
        pieces = std::move(next);
        if (pieces.empty()) break;
      }
      if (pieces.empty()) break;
    }
    Rat eps = dyadic(static_cast<unsigned>(j) + 2);
    std::vector<RationalBox> out;
    out.reserve(pieces.size());
    for (auto& p : pieces) out.push_back(p.inflate(eps, true));
    return out;
  });
}

SemiDecision verify_compact_in_open(const CoCeCompactSet& K, const CeOpenSet& U) {
  require_dim(K.dim(), U.dim(), "verify_compact_in_open");
  return SemiDecision([K, U](Fuel f) {
    // Search for a stage i ≤ f whose boxes have closures verified inside U
    // with fuel f; such boxes cover K by the shrinking-sequence invariant.
    for (size_t i = 0; i <= f; ++i) {
      bool all = true;
      for (auto& A : K.stage(i)) {
        if (!U.contains_box(A.closure()).accepted(f)) { all = false; break; }
      }
      if (all) return true;
    }
    return false;
  });
}

}  // namespace redec
