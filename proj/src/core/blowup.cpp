#include <redec/blowup.hpp>

#include <algorithm>

namespace redec {

namespace {

void require(bool ok, ErrorCode ec, const std::string& what) {
  if (!ok) throw EngineError(ec, what);
}

Rat eps_pow(const Rat& eps, long e) {
  if (e >= 0) return pow_rat(eps, static_cast<unsigned>(e));
  return pow_rat(Rat(1) / eps, static_cast<unsigned>(-e));
}

}  // namespace

// ---- shears ----------------------------------------------------------------------

void ShearMatrix::validate() const {
  require(!E.empty() && E.size() < n, ErrorCode::DomainViolation,
          "E must be a nonempty proper subset");
  require(std::is_sorted(E.begin(), E.end()) &&
              std::adjacent_find(E.begin(), E.end()) == E.end() && E.back() < n,
          ErrorCode::DomainViolation, "bad shear index set");
  std::vector<bool> inE(n, false);
  for (size_t j : E) inE[j] = true;
  for (auto& [ij, v] : w)
    require(ij.first < n && !inE[ij.first] && ij.second < n && inE[ij.second],
            ErrorCode::DomainViolation, "shear entry off the E^c×E grid");
}

ShearMatrix ShearMatrix::negated() const {
  ShearMatrix r = *this;
  for (auto& [ij, v] : r.w) v = -v;
  return r;
}

std::vector<size_t> ShearMatrix::Ec() const {
  std::vector<bool> inE(n, false);
  for (size_t j : E) inE[j] = true;
  std::vector<size_t> r;
  for (size_t i = 0; i < n; ++i)
    if (!inE[i]) r.push_back(i);
  return r;
}

std::vector<Poly> shear_map(const ShearMatrix& sh) {
  sh.validate();
  std::vector<Poly> comps;
  std::vector<bool> inE(sh.n, false);
  for (size_t j : sh.E) inE[j] = true;
  for (size_t i = 0; i < sh.n; ++i) {
    Poly c = Poly::var(sh.n, i);
    if (!inE[i])
      for (size_t j : sh.E) c = c + Poly::var(sh.n, j) * sh.entry(i, j);
    comps.push_back(std::move(c));
  }
  return comps;
}

Poly shear_pullback(const Poly& f, const ShearMatrix& sh) {
  require(f.nvars == sh.n, ErrorCode::DimensionMismatch, "shear_pullback arity");
  return f.compose(shear_map(sh));
}

Poly shear_deriv_expansion(const Poly& f, const ShearMatrix& sh, const Expo& alpha) {
  require(f.nvars == sh.n && alpha.size() == sh.n, ErrorCode::DimensionMismatch,
          "shear_deriv_expansion arity");
  sh.validate();
  std::vector<size_t> Ec = sh.Ec();
  std::vector<bool> inE(sh.n, false);
  for (size_t j : sh.E) inE[j] = true;
  for (size_t i = 0; i < sh.n; ++i)
    require(alpha[i] == 0 || inE[i], ErrorCode::DomainViolation,
            "alpha must be supported on E");
  std::vector<Poly> T = shear_map(sh);

  // per column j ∈ E, enumerate the column of γ (entries over rows E^c) with
  // column sum ≤ α_j; take the cartesian product over columns
  struct Col {
    std::vector<Expo> choices;          // each of length |E^c|
  };
  auto column_choices = [&](unsigned aj) {
    std::vector<Expo> out;
    Expo cur(Ec.size(), 0);
    // enumerate all vectors with sum ≤ aj
    std::function<void(size_t, unsigned)> rec = [&](size_t pos, unsigned left) {
      if (pos == cur.size()) {
        out.push_back(cur);
        return;
      }
      for (unsigned v = 0; v <= left; ++v) {
        cur[pos] = v;
        rec(pos + 1, left - v);
      }
      cur[pos] = 0;
    };
    rec(0, aj);
    return out;
  };

  std::vector<std::vector<Expo>> cols;
  for (size_t j : sh.E) cols.push_back(column_choices(alpha[j]));

  Poly acc(sh.n);
  std::vector<size_t> pick(cols.size(), 0);
  for (;;) {
    // assemble γ, the coefficient, the derivative index β, and w^γ
    Rat coeff(1), wpow(1);
    Expo beta(sh.n, 0);
    for (size_t cj = 0; cj < cols.size(); ++cj) {
      size_t j = sh.E[cj];
      const Expo& col = cols[cj][pick[cj]];
      unsigned colsum = 0;
      for (size_t ri = 0; ri < Ec.size(); ++ri) {
        unsigned g = col[ri];
        colsum += g;
        beta[Ec[ri]] += g;
        coeff /= factorial(g);
        if (g) wpow *= pow_rat(sh.entry(Ec[ri], j), g);
      }
      coeff *= factorial(alpha[j]);
      coeff /= factorial(alpha[j] - colsum);
      beta[j] = alpha[j] - colsum;
    }
    acc = acc + f.deriv_multi(beta).compose(T) * (coeff * wpow);
    // advance the product
    size_t c = 0;
    while (c < cols.size()) {
      if (++pick[c] < cols[c].size()) break;
      pick[c] = 0;
      ++c;
    }
    if (c == cols.size()) break;
  }
  return acc;
}

ShearMatrix generic_shear_search(const Poly& f, const std::vector<Rat>& a, unsigned m,
                                 const std::vector<size_t>& E, const Expo& alpha) {
  require(f.nvars == a.size() && alpha.size() == f.nvars, ErrorCode::DimensionMismatch,
          "generic_shear_search arity");
  auto ord = f.order_at(a);
  require(ord.has_value(), ErrorCode::InfiniteOrder, "f vanishes identically");
  require(*ord == m, ErrorCode::PrecondViolated, "stated order does not match");
  std::vector<bool> inE(f.nvars, false);
  for (size_t j : E) inE[j] = true;
  unsigned atotal = 0;
  for (size_t i = 0; i < f.nvars; ++i) {
    require(alpha[i] == 0 || inE[i], ErrorCode::DomainViolation, "alpha not supported on E");
    atotal += alpha[i];
  }
  require(atotal == m, ErrorCode::DomainViolation, "|alpha| must equal the order");

  // genericity: some β with |β| = m, ∂^β f(a) ≠ 0, and β ≤ α on E
  Poly sh_f = f.shift(a);  // Taylor coefficients at a
  bool generic = false;
  for (auto& [e, c] : sh_f.terms) {
    unsigned total = 0;
    bool fits = true;
    for (size_t i = 0; i < f.nvars; ++i) {
      total += e[i];
      if (inE[i] && e[i] > alpha[i]) fits = false;
    }
    if (total == m && fits) { generic = true; break; }
  }
  if (!generic)
    throw EngineError(ErrorCode::GenConditionFails,
                      "the shear-derivative polynomial in w is identically zero");

  ShearMatrix best;
  best.n = f.nvars;
  best.E = E;
  std::vector<size_t> Ec = best.Ec();
  std::vector<std::pair<size_t, size_t>> slots;
  for (size_t i : Ec)
    for (size_t j : E) slots.emplace_back(i, j);

  for (long h = 1; h <= 64; ++h) {
    // all candidate entry values of height ≤ h, ordered by height then value
    std::vector<Rat> vals;
    for (long g = 1; g <= h; ++g)
      for (auto& r : rationals_of_height(g)) vals.push_back(r);
    // enumerate assignments where some entry has height exactly h
    std::vector<size_t> pick(slots.size(), 0);
    for (;;) {
      bool fresh = false;
      for (size_t s = 0; s < slots.size(); ++s)
        if (rat_height(vals[pick[s]]) == h) fresh = true;
      if (fresh || h == 1) {
        ShearMatrix cand = best;
        cand.w.clear();
        for (size_t s = 0; s < slots.size(); ++s)
          if (vals[pick[s]] != 0) cand.w[slots[s]] = vals[pick[s]];
        Poly P = shear_pullback(f, cand);
        std::vector<Rat> y(f.nvars);
        {
          std::vector<Poly> Tinv = shear_map(cand.negated());
          for (size_t i = 0; i < f.nvars; ++i) y[i] = Tinv[i].eval(a);
        }
        if (P.deriv_multi(alpha).eval(y) != 0) return cand;
      }
      size_t c = 0;
      while (c < slots.size()) {
        if (++pick[c] < vals.size()) break;
        pick[c] = 0;
        ++c;
      }
      if (c == slots.size()) break;
    }
  }
  throw EngineError(ErrorCode::BudgetExhausted, "no admissible shear found");
}

// ---- charts ----------------------------------------------------------------------

void BlowupChart::validate() const {
  require(!I.empty() && I.back() < n && std::is_sorted(I.begin(), I.end()) &&
              std::adjacent_find(I.begin(), I.end()) == I.end(),
          ErrorCode::DomainViolation, "bad chart index set");
  require(std::find(I.begin(), I.end(), i) != I.end(), ErrorCode::DomainViolation,
          "chart coordinate must lie in I");
}

std::vector<Poly> chart_map(const BlowupChart& c) {
  c.validate();
  std::vector<Poly> comps;
  std::vector<bool> inI(c.n, false);
  for (size_t j : c.I) inI[j] = true;
  for (size_t j = 0; j < c.n; ++j) {
    if (inI[j] && j != c.i)
      comps.push_back(Poly::var(c.n, c.i) * Poly::var(c.n, j));
    else
      comps.push_back(Poly::var(c.n, j));
  }
  return comps;
}

Poly chart_pullback(const Poly& f, const BlowupChart& c) {
  require(f.nvars == c.n, ErrorCode::DimensionMismatch, "chart_pullback arity");
  return f.compose(chart_map(c));
}

std::vector<Rat> chart_inverse_point(const BlowupChart& c, const std::vector<Rat>& x) {
  c.validate();
  require(x.size() == c.n, ErrorCode::DimensionMismatch, "chart_inverse_point arity");
  require(x[c.i] != 0, ErrorCode::DomainViolation, "point lies over the center");
  std::vector<Rat> y = x;
  for (size_t j : c.I)
    if (j != c.i) y[j] = x[j] / x[c.i];
  return y;
}

Poly blowup_deriv_expansion(const Poly& f, const BlowupChart& c, unsigned l) {
  require(f.nvars == c.n, ErrorCode::DimensionMismatch, "blowup_deriv_expansion arity");
  c.validate();
  std::vector<Poly> pi = chart_map(c);
  Poly acc(c.n);
  // enumerate α ∈ N^I with |α| = l
  Expo alpha(c.n, 0);
  std::function<void(size_t, unsigned)> rec = [&](size_t pos, unsigned left) {
    if (pos == c.I.size()) {
      if (left != 0) return;
      Rat coeff = factorial(l);
      Poly mono = Poly::constant(c.n, Rat(1));
      for (size_t j : c.I) {
        coeff /= factorial(alpha[j]);
        if (j != c.i && alpha[j])
          mono = mono * Poly::var(c.n, j).pow(alpha[j]);
      }
      acc = acc + f.deriv_multi(alpha).compose(pi) * mono * coeff;
      return;
    }
    size_t j = c.I[pos];
    for (unsigned v = 0; v <= left; ++v) {
      alpha[j] = v;
      rec(pos + 1, left - v);
    }
    alpha[j] = 0;
  };
  rec(0, l);
  return acc;
}

std::pair<unsigned, Poly> strict_transform(const Poly& f, const BlowupChart& c) {
  require(f.nvars == c.n, ErrorCode::DimensionMismatch, "strict_transform arity");
  c.validate();
  auto m = f.order_along(c.I);
  if (!m) throw EngineError(ErrorCode::InfiniteOrder, "f vanishes identically");
  Poly g = chart_pullback(f, c);
  Poly fp = g.divide_var_power(c.i, *m);
  // maximality: the transform does not vanish along the divisor
  require(fp.order_along({c.i}) == 0u, ErrorCode::Internal, "strict transform order");
  return {*m, std::move(fp)};
}

// ---- orders ----------------------------------------------------------------------

OrderReport order_report(const std::vector<Poly>& F, const std::vector<size_t>& E,
                         const std::vector<Rat>& a) {
  require(!F.empty(), ErrorCode::DomainViolation, "empty family");
  OrderReport rep;
  rep.divisor.assign(F[0].nvars, 0u);
  bool first = true;
  for (auto& f : F) {
    auto op = f.order_at(a);
    auto oc = f.order_along(E);
    if (op) rep.at_point = rep.at_point ? std::min(*rep.at_point, *op) : *op;
    if (oc) rep.along_center = rep.along_center ? std::min(*rep.along_center, *oc) : *oc;
    if (!f.is_zero()) {
      Expo cm = f.content_monomial();
      if (first) {
        for (size_t j : E) rep.divisor[j] = cm[j];
        first = false;
      } else {
        for (size_t j : E) rep.divisor[j] = std::min(rep.divisor[j], cm[j]);
      }
    }
  }
  rep.infinite = first;  // no nonzero member seen
  return rep;
}

// ---- covering --------------------------------------------------------------------

size_t tournament_sink(size_t count, const std::function<bool(size_t, size_t)>& edge) {
  require(count > 0, ErrorCode::DomainViolation, "empty tournament");
  size_t cand = 0;
  for (size_t q = 1; q < count; ++q)
    if (!edge(q, cand)) cand = q;
  // with totality and transitivity, cand receives an edge from every node
  for (size_t q = 0; q < count; ++q)
    require(edge(q, cand), ErrorCode::Internal, "tournament is not transitive/total");
  return cand;
}

std::vector<BlowupCoverItem> blowup_cover(size_t n, const std::vector<size_t>& I,
                                          const std::vector<std::vector<size_t>>& blocks,
                                          const Rat& eps, const std::vector<Rat>& delta,
                                          const CoCeCompactSet& K) {
  require(K.dim() == n, ErrorCode::DimensionMismatch, "blowup_cover dimension");
  require(!I.empty(), ErrorCode::DomainViolation, "empty I");
  require(eps > 0, ErrorCode::DomainViolation, "epsilon must be positive");
  require(delta.empty() || delta.size() == I.size(), ErrorCode::DomainViolation,
          "delta must list one bound per element of I");
  for (auto& d : delta) require(d > 0, ErrorCode::DomainViolation, "delta must be positive");
  // blocks partition I
  std::map<size_t, long> level;
  for (size_t l = 0; l < blocks.size(); ++l) {
    require(!blocks[l].empty(), ErrorCode::EmptyBlock, "empty block");
    for (size_t j : blocks[l]) {
      require(std::find(I.begin(), I.end(), j) != I.end(), ErrorCode::DomainViolation,
              "block element outside I");
      require(level.find(j) == level.end(), ErrorCode::DomainViolation,
              "blocks must be disjoint");
      level[j] = static_cast<long>(l);
    }
  }
  require(level.size() == I.size(), ErrorCode::DomainViolation, "blocks must cover I");

  std::vector<BlowupCoverItem> out;
  for (size_t idx = 0; idx < I.size(); ++idx) {
    size_t i = I[idx];
    BlowupCoverItem item;
    item.chart.n = n;
    item.chart.I = I;
    item.chart.i = i;
    std::sort(item.chart.I.begin(), item.chart.I.end());
    for (size_t j : I) item.ratio[j] = eps_pow(eps, level[j] - level[i]);
    if (!delta.empty()) item.clip = delta[idx];

    // K_i = π^{-1}(K) ∩ {|y_j| ≤ b_j}: represent through its c.e. open
    // complement and rebuild the shrinking-stage form
    Rat M = K.bound();
    for (auto& [j, b] : item.ratio) M = rat_max(M, b);
    M += 1;
    CeOpenSet Kcomp = K.complement_ce_open();
    BlowupChart chart = item.chart;
    std::map<size_t, Rat> bounds = item.ratio;
    if (item.clip) bounds[i] = rat_min(bounds[i], *item.clip);
    CeOpenSet comp(n, [chart, bounds, Kcomp, n](const RationalBox& B) {
      return SemiDecision([chart, bounds, Kcomp, n, B](Fuel fuel) -> bool {
        // adaptive bisection: every piece must be certified outside K_i
        std::vector<RationalBox> work{B};
        size_t budget = 128;
        while (!work.empty()) {
          if (budget-- == 0) return false;
          RationalBox P = work.back();
          work.pop_back();
          bool outside = false;
          for (auto& [j, b] : bounds) {
            const RationalInterval& d = P.dims[j];
            if ((d.lo.inf == 0 && d.lo.v > b) || (d.hi.inf == 0 && d.hi.v < -b)) {
              outside = true;
              break;
            }
          }
          if (outside) continue;
          // image box under the chart
          std::vector<RationalInterval> img;
          for (size_t j = 0; j < n; ++j) {
            bool scaled = j != chart.i &&
                          std::find(chart.I.begin(), chart.I.end(), j) != chart.I.end();
            img.push_back(scaled ? interval_mul(P.dims[chart.i], P.dims[j]) : P.dims[j]);
          }
          if (Kcomp.contains_box(RationalBox(img).closure()).query(fuel) == Status::ACCEPT)
            continue;
          // split the widest dimension, up to a fuel-bounded depth
          size_t wd = 0;
          Rat wbest(-1);
          for (size_t j = 0; j < n; ++j) {
            Rat wj = P.dims[j].width();
            if (wj > wbest) { wbest = wj; wd = j; }
          }
          if (wbest <= dyadic(static_cast<unsigned>(std::min<Fuel>(fuel, 24))))
            return false;
          Rat mid = P.dims[wd].midpoint();
          RationalBox L = P, R = P;
          L.dims[wd] = RationalInterval(P.dims[wd].lo, ExtRat::fin(mid), P.dims[wd].lo_closed, true);
          R.dims[wd] = RationalInterval(ExtRat::fin(mid), P.dims[wd].hi, true, P.dims[wd].hi_closed);
          work.push_back(L);
          work.push_back(R);
        }
        return true;
      });
    });
    item.Ki = coce_compact_from_closed(n, comp, M);
    out.push_back(std::move(item));
  }
  return out;
}

bool cover_image_test(const BlowupCoverItem& item, const std::vector<Rat>& x) {
  require(x.size() == item.chart.n, ErrorCode::DimensionMismatch, "cover_image_test arity");
  Rat xi = rat_abs(x[item.chart.i]);
  if (item.clip && xi > *item.clip) return false;
  for (auto& [j, b] : item.ratio)
    if (rat_abs(x[j]) > b * xi) return false;
  return true;
}

}  // namespace redec
