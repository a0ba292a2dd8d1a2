#include <redec/box.hpp>

#include <algorithm>
#include <cstddef>

namespace redec {

namespace {

const std::string kTimes = "×";     // ×
const std::string kInfty = "∞";     // ∞
const std::string kMinusSign = "−"; // − (accepted on parse)

std::string render_endpoint(const ExtRat& e) {
  if (e.inf < 0) return "-" + kInfty;
  if (e.inf > 0) return "+" + kInfty;
  return rat_to_string(e.v);
}

[[noreturn]] void parse_fail(const std::string& name, size_t pos, const std::string& what) {
  throw EngineError(ErrorCode::ParseError,
                    "box name parse error at byte " + std::to_string(pos) + ": " + what +
                        " in \"" + name + "\"");
}

// Replaces every U+2212 minus sign with ASCII '-'.
std::string normalize_minus(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size();) {
    if (s.compare(i, kMinusSign.size(), kMinusSign) == 0) {
      out.push_back('-');
      i += kMinusSign.size();
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

ExtRat parse_endpoint(const std::string& name, const std::string& tok, size_t pos) {
  if (tok == "-" + kInfty) return ExtRat::neg_inf();
  if (tok == "+" + kInfty || tok == kInfty) return ExtRat::pos_inf();
  auto r = parse_rat(tok);
  if (!r) parse_fail(name, pos, "bad rational endpoint \"" + tok + "\"");
  return ExtRat::fin(*r);
}

RationalInterval parse_interval_name(const std::string& whole, const std::string& s, size_t base) {
  if (s.size() < 2) parse_fail(whole, base, "interval too short");
  char lb = s.front(), rb = s.back();
  if (lb != '[' && lb != '(') parse_fail(whole, base, "expected '[' or '('");
  if (rb != ']' && rb != ')') parse_fail(whole, base + s.size() - 1, "expected ']' or ')'");
  std::string body = s.substr(1, s.size() - 2);
  auto comma = body.find(',');
  if (comma == std::string::npos || body.find(',', comma + 1) != std::string::npos)
    parse_fail(whole, base, "expected exactly one ','");
  ExtRat lo = parse_endpoint(whole, body.substr(0, comma), base + 1);
  ExtRat hi = parse_endpoint(whole, body.substr(comma + 1), base + 2 + comma);
  bool lc = lb == '[', hc = rb == ']';
  if (lo.inf != 0 && lc) parse_fail(whole, base, "closed bracket at -∞");
  if (hi.inf != 0 && hc) parse_fail(whole, base + s.size() - 1, "closed bracket at +∞");
  if (cmp(lo, hi) > 0) parse_fail(whole, base, "empty interval (lo > hi)");
  if (cmp(lo, hi) == 0 && !(lc && hc)) parse_fail(whole, base, "empty interval (open at equal endpoints)");
  if (lo.inf != 0 && lo.inf == hi.inf) parse_fail(whole, base, "empty interval (equal infinities)");
  return RationalInterval(lo, hi, lc, hc);
}

}  // namespace

std::string render_interval_name(const RationalInterval& I) {
  std::string s;
  s += I.lo_closed ? '[' : '(';
  s += render_endpoint(I.lo);
  s += ',';
  s += render_endpoint(I.hi);
  s += I.hi_closed ? ']' : ')';
  return s;
}

std::string render_box_name(const RationalBox& B) {
  if (B.dims.empty()) return "()";
  std::string s;
  for (size_t i = 0; i < B.dims.size(); ++i) {
    if (i) s += kTimes;
    s += render_interval_name(B.dims[i]);
  }
  return s;
}

RationalBox parse_box_name(const std::string& raw) {
  std::string name = normalize_minus(raw);
  if (name.empty()) parse_fail(raw, 0, "empty name");
  if (name == "()") return RationalBox();  // R^0
  std::vector<RationalInterval> dims;
  size_t pos = 0;
  while (pos <= name.size()) {
    size_t next = name.find(kTimes, pos);
    std::string tok = next == std::string::npos ? name.substr(pos)
                                                : name.substr(pos, next - pos);
    dims.push_back(parse_interval_name(raw, tok, pos));
    if (next == std::string::npos) break;
    pos = next + kTimes.size();
    if (pos >= name.size()) parse_fail(raw, pos, "trailing ×");
  }
  return RationalBox(std::move(dims));
}

std::vector<RationalBox> compact_boxes_up_to_height(size_t n, long h) {
  std::vector<Rat> pts;
  for (long den = 1; den <= h; ++den)
    for (long num = -h; num <= h; ++num) {
      Rat r(num, den);
      r.canonicalize();
      pts.push_back(r);
    }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  std::vector<RationalInterval> ivs;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i; j < pts.size(); ++j)
      ivs.push_back(RationalInterval::closed(pts[i], pts[j]));
  // order intervals by (max endpoint height, lo, hi)
  std::stable_sort(ivs.begin(), ivs.end(), [](const RationalInterval& a, const RationalInterval& b) {
    Int ha = rat_height(a.lo.v) > rat_height(a.hi.v) ? rat_height(a.lo.v) : rat_height(a.hi.v);
    Int hb = rat_height(b.lo.v) > rat_height(b.hi.v) ? rat_height(b.lo.v) : rat_height(b.hi.v);
    if (ha != hb) return ha < hb;
    if (a.lo.v != b.lo.v) return a.lo.v < b.lo.v;
    return a.hi.v < b.hi.v;
  });

  std::vector<RationalBox> out;
  std::vector<size_t> idx(n, 0);
  if (n == 0) {
    out.push_back(RationalBox());
    return out;
  }
  // cartesian product in lexicographic index order
  while (true) {
    std::vector<RationalInterval> d;
    d.reserve(n);
    for (size_t k = 0; k < n; ++k) d.push_back(ivs[idx[k]]);
    out.push_back(RationalBox(std::move(d)));
    size_t k = n;
    while (k > 0) {
      --k;
      if (++idx[k] < ivs.size()) break;
      idx[k] = 0;
      if (k == 0) return out;
    }
    if (k == 0 && idx[0] == 0) return out;
  }
}

std::vector<RationalBox> box_subtract(const RationalBox& B, const RationalBox& A) {
  if (B.dims.size() != A.dims.size())
    throw EngineError(ErrorCode::DimensionMismatch, "box_subtract");
  if (!B.intersects(A)) return {B};
  std::vector<RationalBox> out;
  RationalBox cur = B;
  for (size_t k = 0; k < B.dims.size(); ++k) {
    const RationalInterval& I = cur.dims[k];
    const RationalInterval& J = A.dims[k];
    Rat l = I.lo.v, u = I.hi.v;
    if (J.lo.finite()) {
      const Rat& a = J.lo.v;
      bool piece = J.lo_closed ? (a > l) : (a >= l);
      if (piece) {
        RationalBox p = cur;
        p.dims[k] = RationalInterval::closed(l, rat_min(u, a));
        out.push_back(std::move(p));
      }
      if (a > l) cur.dims[k] = RationalInterval::closed(a, u);
    }
    {
      const RationalInterval& I2 = cur.dims[k];
      Rat l2 = I2.lo.v, u2 = I2.hi.v;
      if (J.hi.finite()) {
        const Rat& b = J.hi.v;
        bool piece = J.hi_closed ? (b < u2) : (b <= u2);
        if (piece) {
          RationalBox p = cur;
          p.dims[k] = RationalInterval::closed(rat_max(l2, b), u2);
          out.push_back(std::move(p));
        }
        if (b < u2) cur.dims[k] = RationalInterval::closed(l2, b);
      }
    }
  }
  return out;
}

bool box_subset_of_union(const RationalBox& B, const std::vector<RationalBox>& cover) {
  for (auto& A : cover)
    if (B.subset_of(A)) return true;
  for (size_t i = 0; i < cover.size(); ++i) {
    if (!B.intersects(cover[i])) continue;
    std::vector<RationalBox> rest;
    rest.reserve(cover.size() - 1);
    for (size_t j = 0; j < cover.size(); ++j)
      if (j != i) rest.push_back(cover[j]);
    auto pieces = box_subtract(B, cover[i]);
    bool ok = true;
    for (auto& p : pieces)
      if (!box_subset_of_union(p, rest)) {
        ok = false;
        break;
      }
    if (ok) return true;
    // For fully open cover members one intersecting element is decisive, but
    // closed endpoints make the subtraction a superset of B ∖ A, so keep
    // trying the remaining elements (soundness is unconditional).
  }
  return false;
}

}  // namespace redec
