#include <redec/blowupset.hpp>

#include <algorithm>
#include <set>
#include <sstream>

namespace redec {

namespace {

bool is_sorted_unique(const std::vector<size_t>& v) {
  for (size_t t = 1; t < v.size(); ++t)
    if (v[t - 1] >= v[t]) return false;
  return true;
}

bool in_set(const std::vector<size_t>& v, size_t x) {
  return std::binary_search(v.begin(), v.end(), x);
}

// Cen after each stage 0..k.
std::vector<std::vector<size_t>> cen_stages(const BlowupSetName& nm) {
  std::vector<std::vector<size_t>> out;
  std::vector<size_t> cen;
  for (size_t l = 0; l < nm.n; ++l)
    if (nm.A[0].dims[l].contains(Rat(0))) cen.push_back(l);
  out.push_back(cen);
  for (size_t j = 1; j <= nm.length(); ++j) {
    const auto& I = nm.I[j - 1];
    std::vector<size_t> next;
    for (size_t l : out.back())
      if (!in_set(I, l)) next.push_back(l);
    for (size_t t = 0; t < I.size(); ++t)
      if (nm.A[j].dims[t].contains(Rat(0))) next.push_back(I[t]);
    std::sort(next.begin(), next.end());
    out.push_back(next);
  }
  return out;
}

bool member_stage(const BlowupSetName& nm, size_t j, const std::vector<Rat>& x) {
  if (j == 0) return nm.A[0].contains(x);
  const auto& I = nm.I[j - 1];
  size_t ci = nm.i[j - 1];
  std::vector<Rat> sub;
  sub.reserve(I.size());
  for (size_t l : I) sub.push_back(x[l]);
  if (!nm.A[j].contains(sub)) return false;
  std::vector<Rat> px = x;
  for (size_t l : I)
    if (l != ci) {
      px[l] = x[ci] * x[l];
      px[l].canonicalize();
    }
  return member_stage(nm, j - 1, px);
}

// Conservative "the closed box P may meet stage j of the named set".
bool may_intersect_stage(const BlowupSetName& nm, size_t j, const RationalBox& P) {
  if (j == 0) return P.intersects(nm.A[0]);
  const auto& I = nm.I[j - 1];
  size_t ci = nm.i[j - 1];
  RationalBox Q = P;
  for (size_t t = 0; t < I.size(); ++t) {
    auto iv = Q.dims[I[t]].intersect(nm.A[j].dims[t].closure());
    if (!iv) return false;
    Q.dims[I[t]] = *iv;
  }
  RationalBox img = Q;
  for (size_t l : I)
    if (l != ci) img.dims[l] = interval_mul(Q.dims[ci], Q.dims[l]).closure();
  return may_intersect_stage(nm, j - 1, img);
}

Poly ambient_var(const SPolyName& P, size_t v) {
  return Poly::var(P.n + P.symbols.size(), v);
}

// Old variable t of `p` becomes variable where[t] among new_total variables.
Poly remap_vars(const Poly& p, size_t new_total, const std::vector<size_t>& where) {
  std::vector<Poly> args;
  args.reserve(where.size());
  for (size_t w : where) args.push_back(Poly::var(new_total, w));
  return p.compose(args);
}

std::vector<size_t> identity_upto(size_t n) {
  std::vector<size_t> v(n);
  for (size_t t = 0; t < n; ++t) v[t] = t;
  return v;
}

void merge_signs(std::map<size_t, int>& into, const std::map<size_t, int>& from) {
  for (const auto& [c, s] : from) {
    auto it = into.find(c);
    if (it != into.end() && it->second != s)
      throw EngineError(ErrorCode::CompatibilityViolation, "conflicting stratum signs");
    into[c] = s;
  }
}

Rat det_of(std::vector<std::vector<Rat>> M) {
  size_t m = M.size();
  Rat d(1);
  for (size_t c = 0; c < m; ++c) {
    size_t piv = c;
    while (piv < m && M[piv][c] == 0) ++piv;
    if (piv == m) return Rat(0);
    if (piv != c) {
      std::swap(M[piv], M[c]);
      d = -d;
    }
    d *= M[c][c];
    d.canonicalize();
    for (size_t r = c + 1; r < m; ++r) {
      if (M[r][c] == 0) continue;
      Rat f = M[r][c] / M[c][c];
      f.canonicalize();
      for (size_t t = c; t < m; ++t) {
        M[r][t] -= f * M[c][t];
        M[r][t].canonicalize();
      }
    }
  }
  return d;
}

}  // namespace

// ---- blowup set names ------------------------------------------------------------

void BlowupSetName::validate() const {
  if (A.size() != length() + 1 || i.size() != length())
    throw EngineError(ErrorCode::InvalidName, "stage counts disagree");
  if (A[0].dims.size() != n)
    throw EngineError(ErrorCode::InvalidName, "base box dimension mismatch");
  std::vector<size_t> cen;
  for (size_t l = 0; l < n; ++l)
    if (A[0].dims[l].contains(Rat(0))) cen.push_back(l);
  for (size_t j = 1; j <= length(); ++j) {
    const auto& Ij = I[j - 1];
    if (Ij.empty() || !is_sorted_unique(Ij) || Ij.back() >= n)
      throw EngineError(ErrorCode::InvalidName, "bad stage subset");
    if (!in_set(Ij, i[j - 1]))
      throw EngineError(ErrorCode::InvalidName, "chart index outside stage subset");
    if (A[j].dims.size() != Ij.size())
      throw EngineError(ErrorCode::InvalidName, "stage box dimension mismatch");
    for (size_t l : Ij)
      if (!in_set(cen, l))
        throw EngineError(ErrorCode::InvalidName,
                          "stage subset not within the central coordinates");
    std::vector<size_t> next;
    for (size_t l : cen)
      if (!in_set(Ij, l)) next.push_back(l);
    for (size_t t = 0; t < Ij.size(); ++t)
      if (A[j].dims[t].contains(Rat(0))) next.push_back(Ij[t]);
    std::sort(next.begin(), next.end());
    cen = next;
  }
}

BlowupSetName BlowupSetName::box(const RationalBox& A0) {
  BlowupSetName nm;
  nm.n = A0.dims.size();
  nm.A = {A0};
  return nm;
}

BlowupSetName BlowupSetName::blow_up(const std::vector<size_t>& Ij, size_t ij,
                                     const RationalBox& Aj) const {
  BlowupSetName nm = *this;
  nm.I.push_back(Ij);
  nm.i.push_back(ij);
  nm.A.push_back(Aj);
  nm.validate();
  return nm;
}

std::vector<size_t> bus_cen(const BlowupSetName& name) {
  name.validate();
  return cen_stages(name).back();
}

bool bus_membership(const BlowupSetName& name, const std::vector<Rat>& x) {
  if (x.size() != name.n)
    throw EngineError(ErrorCode::DimensionMismatch, "point dimension mismatch");
  return member_stage(name, name.length(), x);
}

BlowupSetName bus_restrict(const BlowupSetName& name, const RationalBox& B) {
  name.validate();
  if (B.dims.size() != name.n)
    throw EngineError(ErrorCode::DimensionMismatch, "restriction box dimension mismatch");
  size_t k = name.length();
  // J_l = I_l ∖ (I_{l+1} ∪ … ∪ I_k), with I_0 = all coordinates.
  std::vector<std::set<size_t>> later(k + 1);
  for (size_t l = k; l-- > 0;) {
    later[l] = later[l + 1];
    later[l].insert(name.I[l].begin(), name.I[l].end());
  }
  BlowupSetName out = name;
  auto clip = [&](RationalInterval& iv, size_t coord) {
    auto r = iv.intersect(B.dims[coord]);
    if (!r) throw EngineError(ErrorCode::DomainViolation, "restriction is empty");
    iv = *r;
  };
  for (size_t l = 0; l < name.n; ++l)
    if (!later[0].count(l)) clip(out.A[0].dims[l], l);
  for (size_t j = 1; j <= k; ++j)
    for (size_t t = 0; t < name.I[j - 1].size(); ++t) {
      size_t coord = name.I[j - 1][t];
      if (!later[j].count(coord)) clip(out.A[j].dims[t], coord);
    }
  out.validate();
  return out;
}

RationalBox bus_bounding_box(const BlowupSetName& name) {
  RationalBox bb = name.A[0];
  for (size_t j = 1; j <= name.length(); ++j)
    for (size_t t = 0; t < name.I[j - 1].size(); ++t)
      bb.dims[name.I[j - 1][t]] = name.A[j].dims[t];
  return bb;
}

std::vector<Rat> bus_box_point(const BlowupSetName& name, const std::vector<Rat>& y,
                               const std::map<size_t, Rat>& t) {
  std::vector<Rat> out = y;
  for (size_t l : bus_cen(name)) {
    auto it = t.find(l);
    Rat f = it == t.end() ? Rat(1) : it->second;
    out[l] = f * y[l];
    out[l].canonicalize();
  }
  return out;
}

// ---- variety enlargement ---------------------------------------------------------

BlowupSetName variety_enlarge(const std::vector<Poly>& F, const BlowupSetName& name,
                              EnlargeMode mode) {
  name.validate();
  if (F.empty()) throw EngineError(ErrorCode::PrecondViolated, "empty family");
  for (const auto& box : name.A)
    for (const auto& iv : box.dims)
      if (!iv.compact())
        throw EngineError(ErrorCode::PrecondViolated, "name is not compact");
  Rat delta(1);
  for (unsigned j = 1; j <= 14; ++j) {
    BlowupSetName cand = name;
    for (auto& box : cand.A)
      for (auto& iv : box.dims) iv = iv.inflate(delta, /*make_open=*/true);
    BlowupSetName closed = cand;
    for (auto& box : closed.A)
      for (auto& iv : box.dims) iv = iv.closure();
    RationalBox bb = bus_bounding_box(closed);
    unsigned level = std::min<unsigned>(j + 1, 6);
    bool ok = true;
    for (const auto& piece : subdivide_box(bb.closure(), level)) {
      if (!may_intersect_stage(closed, closed.length(), piece.closure())) continue;
      if (mode == EnlargeMode::Joint) {
        bool any = false;
        for (const auto& f : F)
          if (!f.range_on(piece.closure()).contains(Rat(0))) {
            any = true;
            break;
          }
        if (!any) {
          ok = false;
          break;
        }
      } else {
        for (const auto& f : F)
          if (f.range_on(piece.closure()).contains(Rat(0))) {
            ok = false;
            break;
          }
        if (!ok) break;
      }
    }
    if (ok) return cand;
    delta /= 2;
    delta.canonicalize();
  }
  throw EngineError(ErrorCode::BudgetExhausted,
                    "no zero-free enlargement certified within budget");
}

// ---- E-stratification ------------------------------------------------------------

std::vector<Stratum> stratify(const BlowupSetName& U, const std::vector<size_t>& E) {
  if (!is_sorted_unique(E) && !E.empty())
    throw EngineError(ErrorCode::PrecondViolated, "stratification coordinates not sorted");
  std::vector<Stratum> out;
  std::vector<int> sigma(E.size(), -1);
  while (true) {
    out.push_back(Stratum{U, E, sigma});
    size_t t = E.size();
    while (t > 0 && sigma[t - 1] == 1) sigma[--t] = -1;
    if (t == 0) break;
    ++sigma[t - 1];
  }
  return out;
}

bool stratum_membership(const Stratum& s, const std::vector<Rat>& x) {
  if (!bus_membership(s.base, x)) return false;
  for (size_t t = 0; t < s.E.size(); ++t)
    if (sign_of(x[s.E[t]]) != s.sigma[t]) return false;
  return true;
}

bool stratum_in_frontier(const std::vector<int>& sigma, const std::vector<int>& xi) {
  if (sigma.size() != xi.size())
    throw EngineError(ErrorCode::DimensionMismatch, "sign vector length mismatch");
  if (sigma == xi) return false;
  for (size_t t = 0; t < sigma.size(); ++t)
    if (xi[t] != 0 && xi[t] != sigma[t]) return false;
  return true;
}

// ---- lifted systems --------------------------------------------------------------

std::vector<Rat> lifting_project(const BasicLifting& L, const std::vector<Rat>& z) {
  std::vector<Rat> out;
  out.reserve(L.proj.size());
  for (size_t v : L.proj) {
    if (v >= z.size())
      throw EngineError(ErrorCode::DimensionMismatch, "projection index out of range");
    out.push_back(z[v]);
  }
  return out;
}

std::vector<Poly> inline_poly_system(const SFamily& fam, const SPolyName& name) {
  std::vector<Poly> sym_polys;
  for (const auto& s : name.symbols) {
    const auto& e = fam.get(s.sigma);
    if (!e.poly)
      throw EngineError(ErrorCode::MalformedName,
                        "cannot inline a combinator-backed symbol");
    std::vector<Poly> args;
    args.reserve(s.xi.size());
    for (size_t v : s.xi) args.push_back(Poly::var(name.n, v));
    sym_polys.push_back(e.poly->deriv_multi(s.alpha).compose(args));
  }
  std::vector<Poly> out;
  out.reserve(name.p.size());
  std::vector<Poly> args;
  for (size_t v = 0; v < name.n; ++v) args.push_back(Poly::var(name.n, v));
  for (const auto& sp : sym_polys) args.push_back(sp);
  for (const auto& p : name.p) out.push_back(p.compose(args));
  return out;
}

Rat system_jacobian_det(const SFamily& fam, const LiftedSystem& sys,
                        const std::vector<Rat>& z) {
  std::vector<Poly> eqs = inline_poly_system(fam, sys.P);
  std::vector<size_t> mu;
  for (size_t v = 0; v < sys.P.n; ++v)
    if (!std::count(sys.lambda.begin(), sys.lambda.end(), v)) mu.push_back(v);
  if (mu.size() != eqs.size())
    throw EngineError(ErrorCode::DimensionMismatch,
                      "system is not square against the good direction");
  std::vector<std::vector<Rat>> M(eqs.size(), std::vector<Rat>(mu.size(), Rat(0)));
  for (size_t r = 0; r < eqs.size(); ++r)
    for (size_t c = 0; c < mu.size(); ++c) M[r][c] = eqs[r].deriv(mu[c]).eval(z);
  return det_of(std::move(M));
}

// ---- the lifting calculus --------------------------------------------------------

BasicLifting lift_graph(const std::vector<Poly>& f, const RationalBox& domain) {
  size_t m = domain.dims.size();
  size_t r = f.size();
  size_t N = m + r;
  std::vector<Poly> eqs;
  RationalBox box = domain;
  for (size_t t = 0; t < r; ++t) {
    if (f[t].nvars > m)
      throw EngineError(ErrorCode::DimensionMismatch, "component has too many variables");
    eqs.push_back(Poly::var(N, m + t) - f[t].extend_vars(N));
    box.dims.push_back(f[t].range_on(domain));
  }
  SPolyName P;
  P.n = N;
  P.p = std::move(eqs);
  P.domain = box;
  BasicLifting L;
  L.n_domain = m;
  L.n_range = r;
  L.sys = LiftedSystem{std::move(P), identity_upto(m), box};
  L.proj = identity_upto(N);
  return L;
}

BasicLifting lift_identity(size_t n, const RationalBox& domain) {
  std::vector<Poly> comps;
  for (size_t t = 0; t < n; ++t) comps.push_back(Poly::var(n, t));
  return lift_graph(comps, domain);
}

SPolyName spoly_embed(const SPolyName& name, size_t new_n,
                      const std::vector<size_t>& where) {
  if (where.size() != name.n)
    throw EngineError(ErrorCode::DimensionMismatch, "embedding map length mismatch");
  size_t sc = name.symbols.size();
  SPolyName out;
  out.n = new_n;
  out.symbols = name.symbols;
  for (auto& s : out.symbols)
    for (auto& v : s.xi) v = where.at(v);
  std::vector<size_t> full = where;
  for (size_t s = 0; s < sc; ++s) full.push_back(new_n + s);
  for (const auto& p : name.p) out.p.push_back(remap_vars(p, new_n + sc, full));
  out.domain = RationalBox(std::vector<RationalInterval>(new_n, RationalInterval::whole()));
  for (size_t t = 0; t < name.n; ++t) out.domain.dims[where[t]] = name.domain.dims[t];
  return out;
}

SPolyName fiber_product_system(const SPolyName& f, const SPolyName& g,
                               const std::vector<size_t>& piM,
                               const std::vector<size_t>& piN) {
  if (piM.size() != piN.size())
    throw EngineError(ErrorCode::GluingMismatch, "gluing projections differ in length");
  for (size_t v : piM)
    if (v >= f.n) throw EngineError(ErrorCode::GluingMismatch, "gluing index outside x block");
  for (size_t v : piN)
    if (v >= g.n) throw EngineError(ErrorCode::GluingMismatch, "gluing index outside y block");
  size_t N = f.n + g.n;
  size_t fsc = f.symbols.size(), gsc = g.symbols.size();
  size_t tot = N + fsc + gsc;
  SPolyName out;
  out.n = N;
  out.symbols = f.symbols;
  for (const auto& s : g.symbols) {
    SSymbol t = s;
    for (auto& v : t.xi) v += f.n;
    out.symbols.push_back(t);
  }
  std::vector<size_t> fwhere = identity_upto(f.n);
  for (size_t s = 0; s < fsc; ++s) fwhere.push_back(N + s);
  for (const auto& p : f.p) out.p.push_back(remap_vars(p, tot, fwhere));
  std::vector<size_t> gwhere;
  for (size_t t = 0; t < g.n; ++t) gwhere.push_back(f.n + t);
  for (size_t s = 0; s < gsc; ++s) gwhere.push_back(N + fsc + s);
  for (const auto& p : g.p) out.p.push_back(remap_vars(p, tot, gwhere));
  for (size_t t = 0; t < piM.size(); ++t)
    out.p.push_back(Poly::var(tot, piM[t]) - Poly::var(tot, f.n + piN[t]));
  out.domain = f.domain.product(g.domain);
  return out;
}

BasicLifting lift_pair(const BasicLifting& L1, const BasicLifting& L2) {
  if (L1.n_domain != L2.n_domain)
    throw EngineError(ErrorCode::CompatibilityViolation, "pair domains differ in dimension");
  size_t d = L1.n_domain;
  for (size_t c = 0; c < d; ++c)
    if (!(L1.sys.box.dims[L1.proj[c]] == L2.sys.box.dims[L2.proj[c]]))
      throw EngineError(ErrorCode::CompatibilityViolation, "pair domain boxes differ");
  std::vector<size_t> piM(L1.proj.begin(), L1.proj.begin() + d);
  std::vector<size_t> piN(L2.proj.begin(), L2.proj.begin() + d);
  size_t m1 = L1.sys.P.n;
  BasicLifting out;
  out.n_domain = d;
  out.n_range = L1.n_range + L2.n_range;
  out.sys.P = fiber_product_system(L1.sys.P, L2.sys.P, piM, piN);
  out.sys.lambda = L1.sys.lambda;
  out.sys.box = L1.sys.box.product(L2.sys.box);
  out.proj = piM;
  for (size_t t = 0; t < L1.n_range; ++t) out.proj.push_back(L1.proj[d + t]);
  for (size_t t = 0; t < L2.n_range; ++t) out.proj.push_back(L2.proj[d + t] + m1);
  out.signs = L1.signs;
  merge_signs(out.signs, L2.signs);
  return out;
}

BasicLifting lift_compose(const BasicLifting& Lf, const BasicLifting& Lg) {
  if (Lg.n_range != Lf.n_domain)
    throw EngineError(ErrorCode::GluingMismatch, "inner range does not match outer domain");
  for (size_t c = 0; c < Lf.n_domain; ++c) {
    const auto& val = Lg.sys.box.dims[Lg.proj[Lg.n_domain + c]];
    const auto& dom = Lf.sys.box.dims[Lf.proj[c]];
    if (!val.subset_of(dom))
      throw EngineError(ErrorCode::CompatibilityViolation,
                        "inner value box escapes the outer domain box");
  }
  std::vector<size_t> piM(Lf.proj.begin(), Lf.proj.begin() + Lf.n_domain);
  std::vector<size_t> piN;
  for (size_t c = 0; c < Lf.n_domain; ++c) piN.push_back(Lg.proj[Lg.n_domain + c]);
  size_t mf = Lf.sys.P.n;
  BasicLifting out;
  out.n_domain = Lg.n_domain;
  out.n_range = Lf.n_range;
  out.sys.P = fiber_product_system(Lf.sys.P, Lg.sys.P, piM, piN);
  out.sys.lambda.clear();
  for (size_t v : Lg.sys.lambda) out.sys.lambda.push_back(v + mf);
  out.sys.box = Lf.sys.box.product(Lg.sys.box);
  for (size_t c = 0; c < Lg.n_domain; ++c) out.proj.push_back(Lg.proj[c] + mf);
  for (size_t t = 0; t < Lf.n_range; ++t) out.proj.push_back(Lf.proj[Lf.n_domain + t]);
  out.signs = Lg.signs;
  return out;
}

BasicLifting lift_implicit(const BasicLifting& L, const std::vector<size_t>& coords) {
  BasicLifting out = L;
  for (size_t c : coords) {
    if (c >= L.n_domain)
      throw EngineError(ErrorCode::DimensionMismatch, "implicit coordinate out of range");
    size_t v = L.proj[c];
    out.sys.P.p.push_back(ambient_var(out.sys.P, v));
    out.sys.lambda.erase(std::remove(out.sys.lambda.begin(), out.sys.lambda.end(), v),
                         out.sys.lambda.end());
    auto it = out.signs.find(c);
    if (it != out.signs.end() && it->second != 0)
      throw EngineError(ErrorCode::CompatibilityViolation,
                        "implicit coordinate carries a nonzero sign");
    out.signs[c] = 0;
  }
  return out;
}

BasicLifting lift_slice(const BasicLifting& L, size_t coord, int sign) {
  if (coord >= L.n_domain)
    throw EngineError(ErrorCode::DimensionMismatch, "slice coordinate out of range");
  if (sign == 0) return lift_implicit(L, {coord});
  BasicLifting out = L;
  auto it = out.signs.find(coord);
  if (it != out.signs.end() && it->second != sign)
    throw EngineError(ErrorCode::CompatibilityViolation, "conflicting stratum signs");
  out.signs[coord] = sign;
  return out;
}

BasicLifting lift_restrict(const BasicLifting& L, const RationalBox& B) {
  if (B.dims.size() != L.n_domain)
    throw EngineError(ErrorCode::DimensionMismatch, "restriction box dimension mismatch");
  BasicLifting out = L;
  for (size_t c = 0; c < L.n_domain; ++c) {
    size_t v = L.proj[c];
    auto iv = out.sys.box.dims[v].intersect(B.dims[c]);
    if (!iv) throw EngineError(ErrorCode::DomainViolation, "restriction is empty");
    out.sys.box.dims[v] = *iv;
    out.sys.P.domain.dims[v] = *iv;
  }
  return out;
}

BasicLifting lift_refine(const BasicLifting& L, const std::vector<size_t>& N) {
  BasicLifting out = L;
  size_t tot = L.sys.P.n + L.sys.P.symbols.size();
  std::vector<Poly> args;
  for (size_t v = 0; v < tot; ++v) args.push_back(Poly::var(tot, v));
  for (size_t c : N) {
    if (c >= L.n_domain)
      throw EngineError(ErrorCode::DimensionMismatch, "refined coordinate out of range");
    size_t v = L.proj[c];
    for (const auto& s : L.sys.P.symbols)
      if (std::count(s.xi.begin(), s.xi.end(), v))
        throw EngineError(ErrorCode::MalformedName,
                          "refined coordinate feeds a family symbol");
    if (!out.sys.box.dims[v].contains(Rat(0)))
      throw EngineError(ErrorCode::DomainViolation, "refined coordinate box misses 0");
    args[v] = Poly::constant(tot, Rat(0));
    out.sys.box.dims[v] = RationalInterval::point(Rat(0));
    out.sys.P.domain.dims[v] = RationalInterval::point(Rat(0));
    out.sys.lambda.erase(std::remove(out.sys.lambda.begin(), out.sys.lambda.end(), v),
                         out.sys.lambda.end());
    out.signs[c] = 0;
  }
  for (auto& p : out.sys.P.p) p = p.compose(args);
  return out;
}

BasicLifting lift_divide_off_zero(const BasicLifting& Lf, size_t k, unsigned d) {
  if (k >= Lf.n_domain)
    throw EngineError(ErrorCode::DimensionMismatch, "division coordinate out of range");
  auto it = Lf.signs.find(k);
  if (it == Lf.signs.end() || it->second == 0)
    throw EngineError(ErrorCode::CompatibilityViolation,
                      "division off zero requires a nonzero sign on the coordinate");
  size_t m = Lf.sys.P.n;
  size_t r = Lf.n_range;
  size_t sc = Lf.sys.P.symbols.size();
  size_t M2 = m + r;
  size_t tot = M2 + sc;
  BasicLifting out = Lf;
  out.sys.P.n = M2;
  std::vector<size_t> where = identity_upto(m);
  for (size_t s = 0; s < sc; ++s) where.push_back(M2 + s);
  for (auto& p : out.sys.P.p) p = remap_vars(p, tot, where);
  size_t xk = Lf.proj[k];
  for (size_t t = 0; t < r; ++t) {
    Poly eq = Poly::var(tot, xk).pow(d) * Poly::var(tot, m + t) -
              Poly::var(tot, Lf.proj[Lf.n_domain + t]);
    out.sys.P.p.push_back(eq);
    out.sys.box.dims.push_back(RationalInterval::whole());
    out.sys.P.domain.dims.push_back(RationalInterval::whole());
    out.proj[Lf.n_domain + t] = m + t;
  }
  return out;
}

BasicLifting lift_divide_on_zero(const BasicLifting& Lf_deriv, size_t k, unsigned d,
                                 unsigned alpha_k) {
  if (k >= Lf_deriv.n_domain)
    throw EngineError(ErrorCode::DimensionMismatch, "division coordinate out of range");
  Rat scale(factorial(alpha_k), factorial(alpha_k + d));
  scale.canonicalize();
  size_t m = Lf_deriv.sys.P.n;
  size_t r = Lf_deriv.n_range;
  size_t sc = Lf_deriv.sys.P.symbols.size();
  size_t M2 = m + r;
  size_t tot = M2 + sc;
  BasicLifting out = Lf_deriv;
  out.sys.P.n = M2;
  std::vector<size_t> where = identity_upto(m);
  for (size_t s = 0; s < sc; ++s) where.push_back(M2 + s);
  for (auto& p : out.sys.P.p) p = remap_vars(p, tot, where);
  for (size_t t = 0; t < r; ++t) {
    Poly eq = Poly::var(tot, m + t) -
              Poly::var(tot, Lf_deriv.proj[Lf_deriv.n_domain + t]) * Poly::constant(tot, scale);
    out.sys.P.p.push_back(eq);
    out.sys.box.dims.push_back(RationalInterval::whole());
    out.sys.P.domain.dims.push_back(RationalInterval::whole());
    out.proj[Lf_deriv.n_domain + t] = m + t;
  }
  return lift_implicit(out, {k});
}

BasicLifting lift_precompose(const BasicLifting& L, const std::vector<Poly>& h,
                             const RationalBox& hdomain) {
  if (h.size() != L.n_domain)
    throw EngineError(ErrorCode::DimensionMismatch, "precompose map has wrong range");
  size_t q = hdomain.dims.size();
  size_t m = L.sys.P.n;
  size_t sc = L.sys.P.symbols.size();
  size_t M2 = m + q;
  size_t tot = M2 + sc;
  BasicLifting out;
  out.n_domain = q;
  out.n_range = L.n_range;
  out.sys.P = L.sys.P;
  out.sys.P.n = M2;
  std::vector<size_t> where = identity_upto(m);
  for (size_t s = 0; s < sc; ++s) where.push_back(M2 + s);
  for (auto& p : out.sys.P.p) p = remap_vars(p, tot, where);
  for (size_t c = 0; c < L.n_domain; ++c) {
    if (h[c].nvars > q)
      throw EngineError(ErrorCode::DimensionMismatch, "precompose component arity");
    std::vector<Poly> yargs;
    for (size_t t = 0; t < h[c].nvars; ++t) yargs.push_back(Poly::var(tot, m + t));
    out.sys.P.p.push_back(Poly::var(tot, L.proj[c]) - h[c].compose(yargs));
  }
  out.sys.box = L.sys.box.product(hdomain);
  out.sys.P.domain = out.sys.box;
  for (size_t t = 0; t < q; ++t) out.sys.lambda.push_back(m + t);
  for (size_t t = 0; t < q; ++t) out.proj.push_back(m + t);
  for (size_t t = 0; t < L.n_range; ++t) out.proj.push_back(L.proj[L.n_domain + t]);
  return out;
}

BasicLifting lift_shear(const BasicLifting& L, const ShearMatrix& sh,
                        const RationalBox& hdomain) {
  return lift_precompose(L, shear_map(sh), hdomain);
}

BasicLifting lift_blowup(const BasicLifting& L, const BlowupChart& chart,
                         const RationalBox& hdomain) {
  return lift_precompose(L, chart_map(chart), hdomain);
}

}  // namespace redec
