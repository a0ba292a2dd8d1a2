#include <redec/soracle.hpp>

#include <fstream>
#include <numeric>
#include <sstream>

namespace redec {

namespace {

void require(bool ok, ErrorCode ec, const std::string& what) {
  if (!ok) throw EngineError(ec, what);
}

}  // namespace

// ---- family registry -----------------------------------------------------------

void SFamily::register_entry(SFamilyEntry e) {
  require(!e.index.empty(), ErrorCode::MalformedName, "empty family index");
  require(e.radii.size() == e.arity, ErrorCode::MalformedName, "radii arity mismatch");
  for (auto& r : e.radii)
    require(r > 0, ErrorCode::MalformedName, "radii must be positive");
  if (e.poly) {
    require(e.poly->nvars == e.arity, ErrorCode::MalformedName, "backing arity mismatch");
  } else {
    require(e.combinator && e.combinator->nvars() == e.arity, ErrorCode::MalformedName,
            "missing backing");
  }
  entries_[e.index] = std::move(e);
}

const SFamilyEntry& SFamily::get(const std::string& index) const {
  auto it = entries_.find(index);
  if (it == entries_.end())
    throw EngineError(ErrorCode::UnknownFamilyIndex, "unknown family index \"" + index + "\"");
  return it->second;
}

std::vector<std::string> SFamily::indices() const {
  std::vector<std::string> r;
  for (auto& [k, v] : entries_) r.push_back(k);
  return r;
}

SFamily SFamily::load_manifest_text(const std::string& text) {
  SFamily fam;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    auto bad = [&](const std::string& what) -> EngineError {
      return EngineError(ErrorCode::MalformedName,
                         "manifest line " + std::to_string(lineno) + ": " + what);
    };
    if (kw != "family") throw bad("expected 'family'");
    SFamilyEntry e;
    if (!(ls >> e.index)) throw bad("missing index");
    std::string tok;
    if (!(ls >> tok) || tok != "arity") throw bad("expected 'arity'");
    if (!(ls >> e.arity) || e.arity == 0) throw bad("bad arity");
    if (!(ls >> tok) || tok != "radii") throw bad("expected 'radii'");
    for (size_t i = 0; i < e.arity; ++i) {
      if (!(ls >> tok)) throw bad("missing radius");
      auto r = parse_rat(tok);
      if (!r || *r <= 0) throw bad("bad radius \"" + tok + "\"");
      e.radii.push_back(*r);
    }
    if (!(ls >> tok) || tok != "poly") throw bad("expected 'poly'");
    std::string expr;
    std::getline(ls, expr);
    e.poly = parse_poly_xn(expr, e.arity);
    fam.register_entry(std::move(e));
  }
  return fam;
}

SFamily SFamily::load_manifest_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EngineError(ErrorCode::IOError, "cannot open manifest " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_manifest_text(buf.str());
}

NodePtr SFamily::symbol_node(const std::string& index, const Expo& alpha) const {
  const SFamilyEntry& e = get(index);
  require(alpha.size() == e.arity, ErrorCode::DimensionMismatch, "alpha arity");
  if (e.poly) return node_poly(e.poly->deriv_multi(alpha));
  NodePtr node = e.combinator;
  for (size_t i = 0; i < alpha.size(); ++i)
    for (unsigned k = 0; k < alpha[i]; ++k) node = node->deriv(i);
  return node;
}

// ---- names --------------------------------------------------------------------

void SPolyName::validate(const SFamily& fam) const {
  require(domain.dim() == n, ErrorCode::MalformedName, "domain dimension");
  for (auto& q : p)
    require(q.nvars == n + symbols.size(), ErrorCode::MalformedName,
            "component variable count");
  for (auto& s : symbols) {
    const SFamilyEntry& e = fam.get(s.sigma);
    require(s.alpha.size() == e.arity, ErrorCode::MalformedName, "symbol alpha arity");
    require(s.xi.size() == e.arity, ErrorCode::MalformedName, "symbol selection arity");
    std::vector<bool> seen(n, false);
    for (size_t j : s.xi) {
      require(j < n, ErrorCode::MalformedName, "selection index out of range");
      require(!seen[j], ErrorCode::MalformedName, "selection indices must be distinct");
      seen[j] = true;
    }
  }
}

// ---- approximation oracle -------------------------------------------------------

SemiDecision approx_oracle(const SFamily& fam, const std::string& index, const Expo& alpha,
                           const RationalBox& B, const RationalInterval& I) {
  const SFamilyEntry& e = fam.get(index);
  require(B.dim() == e.arity, ErrorCode::DimensionMismatch, "approx_oracle box");
  require(B.compact(), ErrorCode::DomainViolation, "approx_oracle needs a compact box");
  std::vector<RationalInterval> dom;
  for (auto& r : e.radii) dom.push_back(RationalInterval::closed(-r, r));
  require(B.subset_of(RationalBox(dom)), ErrorCode::DomainViolation,
          "box outside the family domain");
  NodePtr node = fam.symbol_node(index, alpha);
  MapVec f;
  f.n = e.arity;
  f.comps.push_back(node);
  return cp_query(f, Expo(e.arity, 0), B, {I});
}

// ---- realization ----------------------------------------------------------------

MapVec spoly_eval(const SFamily& fam, const SPolyName& name) {
  name.validate(fam);
  size_t n = name.n, k = name.symbols.size();
  std::vector<NodePtr> args;
  args.reserve(n + k);
  for (size_t j = 0; j < n; ++j) args.push_back(node_var(n, j));
  for (auto& s : name.symbols) {
    std::vector<NodePtr> sel;
    sel.reserve(s.xi.size());
    for (size_t j : s.xi) sel.push_back(node_var(n, j));
    args.push_back(node_compose(fam.symbol_node(s.sigma, s.alpha), std::move(sel)));
  }
  MapVec f;
  f.n = n;
  for (auto& q : name.p) f.comps.push_back(node_compose(node_poly(q), args));
  return f;
}

// ---- formal partial -------------------------------------------------------------

SPolyName spoly_formal_partial(const SFamily& fam, const SPolyName& name, size_t j) {
  name.validate(fam);
  require(j < name.n, ErrorCode::DimensionMismatch, "partial index");
  SPolyName out;
  out.n = name.n;
  out.domain = name.domain;
  out.symbols = name.symbols;
  auto sym_index = [&](const SSymbol& s) -> size_t {
    for (size_t t = 0; t < out.symbols.size(); ++t)
      if (out.symbols[t] == s) return t;
    // staying inside the derivative-closed algebra requires the symbol to exist
    const SFamilyEntry& e = fam.get(s.sigma);
    if (!e.poly) {
      unsigned total = std::accumulate(s.alpha.begin(), s.alpha.end(), 0u);
      Smooth sm = e.combinator->smoothness();
      if (sm && total > *sm)
        throw EngineError(ErrorCode::SmoothnessExceeded, "formal partial order");
    }
    out.symbols.push_back(s);
    return out.symbols.size() - 1;
  };
  size_t n = name.n;
  // accumulate components as (expo over old vars, then re-extend at the end)
  std::vector<std::vector<std::pair<size_t, Poly>>> sym_terms(name.p.size());
  std::vector<Poly> base;
  for (size_t l = 0; l < name.p.size(); ++l) {
    const Poly& pl = name.p[l];
    base.push_back(pl.deriv(j));
    for (size_t i = 0; i < name.symbols.size(); ++i) {
      Poly dpi = pl.deriv(n + i);
      if (dpi.is_zero()) continue;
      const SSymbol& s = name.symbols[i];
      for (size_t t = 0; t < s.xi.size(); ++t) {
        if (s.xi[t] != j) continue;
        SSymbol ds = s;
        ds.alpha[t] += 1;
        size_t idx = sym_index(ds);
        sym_terms[l].emplace_back(idx, dpi);
      }
    }
  }
  size_t K = out.symbols.size();
  for (size_t l = 0; l < name.p.size(); ++l) {
    Poly q = base[l].extend_vars(n + K);
    for (auto& [idx, coeff] : sym_terms[l])
      q = q + coeff.extend_vars(n + K) * Poly::var(n + K, n + idx);
    out.p.push_back(std::move(q));
  }
  return out;
}

// ---- precision oracle -----------------------------------------------------------

namespace {

// Exact linear solve J h = b over Q; returns false when J is singular.
bool solve_linear(std::vector<std::vector<Rat>> J, std::vector<Rat> b,
                  std::vector<Rat>& h) {
  size_t e = J.size();
  for (size_t col = 0; col < e; ++col) {
    size_t piv = col;
    while (piv < e && J[piv][col] == 0) ++piv;
    if (piv == e) return false;
    std::swap(J[piv], J[col]);
    std::swap(b[piv], b[col]);
    Rat inv = Rat(1) / J[col][col];
    for (size_t c = col; c < e; ++c) J[col][c] *= inv;
    b[col] *= inv;
    for (size_t r = 0; r < e; ++r) {
      if (r == col || J[r][col] == 0) continue;
      Rat f = J[r][col];
      for (size_t c = col; c < e; ++c) J[r][c] -= f * J[col][c];
      b[r] -= f * b[col];
    }
  }
  h = std::move(b);
  return true;
}

// Back-substitution through a triangular system with linear leading unknowns:
// repeatedly finds an equation in which exactly one unknown occurs, linearly,
// and solves it exactly.  Returns false when the system is not triangular.
bool triangular_center(const std::vector<Poly>& eqs, const std::vector<Rat>& known,
                       const std::vector<bool>& is_unknown, std::vector<Rat>& value) {
  size_t m = is_unknown.size();
  std::vector<bool> solved(m, false);
  std::vector<Rat> val = known;  // unknown slots hold placeholders
  size_t remaining = 0;
  for (size_t i = 0; i < m; ++i)
    if (is_unknown[i]) ++remaining;
  std::vector<bool> used(eqs.size(), false);
  while (remaining > 0) {
    bool progress = false;
    for (size_t l = 0; l < eqs.size() && !progress; ++l) {
      if (used[l]) continue;
      // substitute all known values
      std::vector<Poly> args;
      args.reserve(m);
      for (size_t i = 0; i < m; ++i) {
        if (is_unknown[i] && !solved[i]) args.push_back(Poly::var(m, i));
        else args.push_back(Poly::constant(m, val[i]));
      }
      Poly q = eqs[l].compose(args);
      // exactly one unsolved unknown, occurring linearly?
      std::optional<size_t> only;
      bool ok = true;
      for (auto& [ex, c] : q.terms) {
        for (size_t i = 0; i < m; ++i) {
          if (ex[i] == 0) continue;
          if (ex[i] > 1 || (only && *only != i)) { ok = false; break; }
          only = i;
        }
        if (!ok) break;
      }
      if (!ok || !only) continue;
      // q = c1·x_only + c0
      Rat c1(0), c0(0);
      for (auto& [ex, c] : q.terms) {
        if (ex[*only] == 1) c1 = c;
        else c0 = c;
      }
      if (c1 == 0) continue;
      val[*only] = -c0 / c1;
      solved[*only] = true;
      used[l] = true;
      --remaining;
      progress = true;
    }
    if (!progress) return false;
  }
  value = std::move(val);
  return true;
}

struct PrecisionState {
  bool done = false;
  bool accept = false;
};

}  // namespace

PrecisionResult precision_oracle(const SFamily& fam, const PrecisionQuery& q) {
  q.poly.validate(fam);
  size_t m = q.poly.n;
  require(q.B.dim() == m, ErrorCode::DimensionMismatch, "precision_oracle box");
  require(q.i < m, ErrorCode::DimensionMismatch, "precision_oracle coordinate");
  require(q.B.closure().subset_of(q.poly.domain), ErrorCode::PrecondViolated,
          "box closure must lie inside the name domain");
  for (size_t t : q.lambda)
    require(t != q.i, ErrorCode::DomainViolation, "queried coordinate is a parameter");

  MapVec f = spoly_eval(fam, q.poly);
  RationalBox Bc = q.B.closure();
  auto scert = std::make_shared<std::shared_ptr<SectionCert>>();
  SemiDecision pre = verify_IF_section(f, q.lambda, Bc, scert.get());

  PrecisionResult res;
  // the certified Taylor test needs polynomial equations
  std::vector<Poly> eqs;
  bool all_poly = true;
  unsigned cutoff = 1;
  for (auto& c : f.comps) {
    auto pl = c->as_poly();
    if (!pl) { all_poly = false; break; }
    eqs.push_back(*pl);
    cutoff *= std::max(1u, pl->total_degree());
  }
  cutoff += 1;
  res.cutoff = cutoff;
  res.certified = all_poly;  // may still fall back below

  auto state = std::make_shared<PrecisionState>();
  auto certified_flag = std::make_shared<bool>(all_poly);
  size_t qi = q.i;
  res.sd = SemiDecision([pre, scert, state, certified_flag, eqs, all_poly, cutoff, qi,
                         Bc](Fuel fuel) {
    if (state->done) return state->accept;
    if (pre.query(fuel) != Status::ACCEPT) return false;
    const SectionCert& sc = **scert;
    size_t m = Bc.dim();
    // degenerate coordinate: the section is the fixed constant there
    if (Bc.dims[qi].degenerate()) {
      state->done = true;
      state->accept = (Bc.dims[qi].lo.v == 0);
      return state->accept;
    }
    // a solved coordinate: certified Taylor-jet test at the box center
    size_t pos = sc.mu.size();
    for (size_t u = 0; u < sc.mu.size(); ++u)
      if (sc.mu[u] == qi) pos = u;
    if (pos == sc.mu.size()) {
      // parameter coordinate: x_i never vanishes identically on a
      // nondegenerate projection — no acceptance possible
      return false;
    }
    if (!all_poly) {
      *certified_flag = false;
      return false;  // declared heuristic yes-mode: never accepts
    }
    // exact section center by triangular back-substitution
    std::vector<Rat> known(m, Rat(0));
    std::vector<bool> is_unknown(m, false);
    for (size_t t = 0; t < m; ++t) {
      if (Bc.dims[t].degenerate()) known[t] = Bc.dims[t].lo.v;
      else known[t] = Bc.dims[t].midpoint();
    }
    for (size_t u : sc.mu) is_unknown[u] = true;
    std::vector<Rat> center;
    if (!triangular_center(eqs, known, is_unknown, center)) {
      *certified_flag = false;
      return false;
    }
    for (size_t u : sc.mu) {
      if (!Bc.dims[u].contains(center[u])) {
        *certified_flag = false;  // solved point escaped the box; fall back
        return false;
      }
    }
    // shift to the center: Q_l(u, v) = P_l(c + embed(u, v))
    size_t d = sc.lambda.size(), e = sc.mu.size();
    std::vector<Poly> args;
    args.reserve(m);
    std::vector<size_t> slot(m, SIZE_MAX);
    for (size_t t = 0; t < d; ++t) slot[sc.lambda[t]] = t;
    for (size_t u = 0; u < e; ++u) slot[sc.mu[u]] = d + u;
    for (size_t t = 0; t < m; ++t) {
      Poly a = Poly::constant(d + e, center[t]);
      if (slot[t] != SIZE_MAX) a = a + Poly::var(d + e, slot[t]);
      args.push_back(std::move(a));
    }
    std::vector<Poly> Q;
    for (auto& pl : eqs) Q.push_back(pl.compose(args));
    // Jacobian in the solved block at the origin
    std::vector<std::vector<Rat>> J(e, std::vector<Rat>(e, Rat(0)));
    std::vector<Rat> origin(d + e, Rat(0));
    for (size_t l = 0; l < e; ++l)
      for (size_t c = 0; c < e; ++c) J[l][c] = Q[l].deriv(d + c).eval(origin);
    // formal solution v = g(u) up to total degree `cutoff`
    std::vector<Poly> g(e, Poly(d));
    for (unsigned k = 1; k <= cutoff; ++k) {
      std::vector<Poly> subs;
      subs.reserve(d + e);
      for (size_t t = 0; t < d; ++t) subs.push_back(Poly::var(d, t));
      for (size_t u = 0; u < e; ++u) subs.push_back(g[u]);
      std::vector<Poly> R;
      for (auto& ql : Q) R.push_back(ql.compose(subs));
      // collect the degree-k residual coefficients
      std::map<Expo, std::vector<Rat>> resid;
      for (size_t l = 0; l < e; ++l)
        for (auto& [ex, c] : R[l].terms) {
          unsigned td = std::accumulate(ex.begin(), ex.end(), 0u);
          if (td != k) continue;
          auto& v = resid[ex];
          if (v.empty()) v.assign(e, Rat(0));
          v[l] = c;
        }
      for (auto& [ex, rv] : resid) {
        std::vector<Rat> b(e);
        for (size_t l = 0; l < e; ++l) b[l] = -rv[l];
        std::vector<Rat> h;
        if (!solve_linear(J, b, h)) {
          *certified_flag = false;
          state->done = true;
          state->accept = false;
          return false;
        }
        for (size_t u = 0; u < e; ++u) g[u].add_term(ex, h[u]);
      }
    }
    state->done = true;
    state->accept = (center[qi] == 0) && g[pos].is_zero();
    return state->accept;
  });
  // report certification honestly for the common non-poly case up front
  res.certified = all_poly;
  return res;
}

// ---- equivalence of "manifold lies in {x_i = 0}" --------------------------------

EquivResult manifold_precision_equiv(const SFamily& fam, const SManifoldName& mname,
                                     size_t i) {
  bool i_is_param = false;
  for (size_t t : mname.lambda) i_is_param |= (t == i);
  PrecisionResult yes;
  if (i_is_param) {
    // a parameter coordinate never vanishes identically on a nondegenerate
    // projection; the yes-verifier is vacuous here
    yes.sd = SemiDecision::never();
  } else {
    PrecisionQuery q{mname.poly, mname.lambda, mname.box, i};
    yes = precision_oracle(fam, q);
  }

  MapVec f = spoly_eval(fam, mname.poly);
  RationalBox Bc = mname.box.closure();
  size_t m = Bc.dim();
  auto scert = std::make_shared<std::shared_ptr<SectionCert>>();
  SemiDecision pre = verify_IF_section(f, mname.lambda, Bc, scert.get());

  std::vector<Poly> eqs;
  bool all_poly = true;
  for (auto& c : f.comps) {
    auto pl = c->as_poly();
    if (!pl) { all_poly = false; break; }
    eqs.push_back(*pl);
  }

  std::vector<size_t> lambda = mname.lambda;
  SemiDecision no([pre, scert, eqs, all_poly, lambda, Bc, m, i](Fuel fuel) {
    // fixed coordinate: the constant answers the question outright
    if (Bc.dims[i].degenerate()) return Bc.dims[i].lo.v != 0;
    if (pre.query(fuel) != Status::ACCEPT) return false;
    const SectionCert& sc = **scert;
    for (size_t t = 0; t < sc.lambda.size(); ++t)
      if (sc.lambda[t] == i)  // φ_i = x_i on a nondegenerate interval
        return true;
    // sample parameter points of increasing resolution; witness φ_i(a) ≠ 0
    size_t d = sc.lambda.size();
    unsigned levels = static_cast<unsigned>(std::min<Fuel>(fuel, 5));
    std::vector<std::vector<Rat>> points;
    points.push_back(sc.A.center());
    for (unsigned lev = 1; lev <= levels; ++lev) {
      for (auto& cell : subdivide_box(sc.A, lev)) points.push_back(cell.center());
      if (points.size() > 200) break;
    }
    for (auto& a : points) {
      if (all_poly) {
        std::vector<Rat> known(m, Rat(0));
        std::vector<bool> is_unknown(m, false);
        for (size_t t = 0; t < m; ++t)
          if (Bc.dims[t].degenerate()) known[t] = Bc.dims[t].lo.v;
        for (size_t t = 0; t < d; ++t) known[sc.lambda[t]] = a[t];
        for (size_t u : sc.mu) is_unknown[u] = true;
        std::vector<Rat> val;
        if (triangular_center(eqs, known, is_unknown, val)) {
          bool inside = true;
          for (size_t u : sc.mu)
            if (!Bc.dims[u].contains(val[u])) { inside = false; break; }
          if (inside && val[i] != 0) return true;
          if (inside) continue;
        }
      }
      // interval fallback through the implicit section
      MapVec phi = section_map(*scert);
      RationalBox pt = RationalBox::point(a);
      auto I = phi.comps[i]->enclose(pt, fuel);
      if (I && !I->contains(Rat(0))) return true;
    }
    return false;
  });

  EquivResult r;
  r.yes = yes.sd;
  r.no = no;
  r.yes_certified = yes.certified;
  return r;
}

}  // namespace redec
