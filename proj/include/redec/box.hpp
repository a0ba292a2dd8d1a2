#pragma once
// Rational boxes (finite Cartesian products of rational intervals) and their
// canonical names over the alphabet "(", ")", "[", "]", "×", ",", rationals,
// and ±∞.

#include <redec/interval.hpp>

#include <string>
#include <vector>

namespace redec {

class RationalBox {
 public:
  std::vector<RationalInterval> dims;

  RationalBox() = default;
  explicit RationalBox(std::vector<RationalInterval> d) : dims(std::move(d)) {}

  size_t dim() const { return dims.size(); }

  static RationalBox cube(size_t n, const Rat& lo, const Rat& hi, bool closed = true) {
    std::vector<RationalInterval> d(
        n, RationalInterval(ExtRat::fin(lo), ExtRat::fin(hi), closed, closed));
    return RationalBox(std::move(d));
  }
  static RationalBox whole_space(size_t n) {
    return RationalBox(std::vector<RationalInterval>(n, RationalInterval::whole()));
  }
  static RationalBox point(const std::vector<Rat>& p) {
    std::vector<RationalInterval> d;
    d.reserve(p.size());
    for (auto& x : p) d.push_back(RationalInterval::point(x));
    return RationalBox(std::move(d));
  }

  bool compact() const {
    for (auto& I : dims)
      if (!I.compact()) return false;
    return true;
  }
  bool bounded() const {
    for (auto& I : dims)
      if (!I.bounded()) return false;
    return true;
  }
  bool open_box() const {
    for (auto& I : dims)
      if (I.lo_closed || I.hi_closed) return false;
    return true;
  }
  bool degenerate() const {
    for (auto& I : dims)
      if (I.degenerate()) return true;
    return false;
  }

  bool contains(const std::vector<Rat>& x) const {
    if (x.size() != dims.size())
      throw EngineError(ErrorCode::DimensionMismatch, "point/box dimension");
    for (size_t i = 0; i < dims.size(); ++i)
      if (!dims[i].contains(x[i])) return false;
    return true;
  }
  bool subset_of(const RationalBox& o) const {
    if (o.dims.size() != dims.size())
      throw EngineError(ErrorCode::DimensionMismatch, "box/box dimension");
    for (size_t i = 0; i < dims.size(); ++i)
      if (!dims[i].subset_of(o.dims[i])) return false;
    return true;
  }
  bool intersects(const RationalBox& o) const {
    if (o.dims.size() != dims.size())
      throw EngineError(ErrorCode::DimensionMismatch, "box/box dimension");
    for (size_t i = 0; i < dims.size(); ++i)
      if (!dims[i].intersects(o.dims[i])) return false;
    return true;
  }
  std::optional<RationalBox> intersect(const RationalBox& o) const {
    if (!intersects(o)) return std::nullopt;
    std::vector<RationalInterval> d;
    d.reserve(dims.size());
    for (size_t i = 0; i < dims.size(); ++i) d.push_back(*dims[i].intersect(o.dims[i]));
    return RationalBox(std::move(d));
  }
  RationalBox closure() const {
    std::vector<RationalInterval> d;
    d.reserve(dims.size());
    for (auto& I : dims) d.push_back(I.closure());
    return RationalBox(std::move(d));
  }
  std::optional<RationalBox> interior() const {
    std::vector<RationalInterval> d;
    d.reserve(dims.size());
    for (auto& I : dims) {
      auto J = I.interior();
      if (!J) return std::nullopt;
      d.push_back(*J);
    }
    return RationalBox(std::move(d));
  }
  RationalBox inflate(const Rat& eps, bool make_open = true) const {
    std::vector<RationalInterval> d;
    d.reserve(dims.size());
    for (auto& I : dims) d.push_back(I.inflate(eps, make_open));
    return RationalBox(std::move(d));
  }
  RationalBox product(const RationalBox& o) const {
    std::vector<RationalInterval> d = dims;
    d.insert(d.end(), o.dims.begin(), o.dims.end());
    return RationalBox(std::move(d));
  }
  std::vector<Rat> center() const {
    std::vector<Rat> c;
    c.reserve(dims.size());
    for (auto& I : dims) c.push_back(I.midpoint());
    return c;
  }
  Rat max_width() const {
    Rat w(0);
    for (auto& I : dims) w = rat_max(w, I.width());
    return w;
  }
  bool operator==(const RationalBox& o) const { return dims == o.dims; }
};

// --- names -----------------------------------------------------------------

std::string render_interval_name(const RationalInterval& I);
std::string render_box_name(const RationalBox& B);

// Throws EngineError(ParseError) with a position message on malformed input.
RationalBox parse_box_name(const std::string& name);

// --- canonical enumeration ---------------------------------------------------

// All compact rational boxes in R^n whose endpoints have height <= h,
// ordered by height then lexicographically (per-dimension endpoint order).
// Used wherever a construction says "computably enumerate all compact
// rational boxes"; callers stream by increasing h.
std::vector<RationalBox> compact_boxes_up_to_height(size_t n, long h);

// Exact cover test: compact box B ⊆ union of boxes in `cover` (each treated
// with its own open/closed endpoints).  Recursion by exact box subtraction.
bool box_subset_of_union(const RationalBox& B, const std::vector<RationalBox>& cover);

// Exact subtraction helper: pieces of compact box B not inside the interior
// of A, as a finite list of compact boxes whose union contains B ∖ A.
std::vector<RationalBox> box_subtract(const RationalBox& B, const RationalBox& A);

}  // namespace redec
