#include <redec/cmap.hpp>

namespace redec {

namespace {

void require(bool cond, ErrorCode code, const char* msg) {
  if (!cond) throw EngineError(code, msg);
}

// Range of a polynomial over a box, tightened by budgeted bisection.
RationalInterval poly_range(const Poly& f, const RationalBox& B, size_t budget) {
  if (!B.bounded() || budget < 2) return f.range_on(B);
  // split the widest dimension
  size_t k = 0;
  Rat w(-1);
  for (size_t i = 0; i < B.dim(); ++i) {
    Rat wi = B.dims[i].width();
    if (wi > w) { w = wi; k = i; }
  }
  if (B.dim() == 0 || w == 0) return f.range_on(B);
  Rat m = B.dims[k].midpoint();
  RationalBox L = B, R = B;
  L.dims[k] = RationalInterval(B.dims[k].lo, ExtRat::fin(m), B.dims[k].lo_closed, true);
  R.dims[k] = RationalInterval(ExtRat::fin(m), B.dims[k].hi, true, B.dims[k].hi_closed);
  RationalInterval a = poly_range(f, L, budget / 2);
  RationalInterval b = poly_range(f, R, budget / 2);
  ExtRat lo = ext_min(a.lo, b.lo), hi = ext_max(a.hi, b.hi);
  bool lc = (cmp(lo, a.lo) == 0 && a.lo_closed) || (cmp(lo, b.lo) == 0 && b.lo_closed);
  bool hc = (cmp(hi, a.hi) == 0 && a.hi_closed) || (cmp(hi, b.hi) == 0 && b.hi_closed);
  return RationalInterval(lo, hi, lc, hc);
}

size_t range_budget(Fuel fuel) {
  // Polynomial ranges tighten mainly with box size; a modest bisection budget
  // removes the worst interval-arithmetic slack without blowing up nested
  // evaluations.
  return fuel >= 6 ? 64 : (size_t(1) << fuel);
}

class PolyNode final : public MapNode {
 public:
  explicit PolyNode(Poly f) : MapNode(f.nvars, std::nullopt), f_(std::move(f)) {}
  std::optional<RationalInterval> enclose(const RationalBox& B, Fuel fuel) const override {
    require(B.dim() == nvars(), ErrorCode::DimensionMismatch, "PolyNode::enclose");
    return poly_range(f_, B, range_budget(fuel));
  }
  std::optional<Poly> as_poly() const override { return f_; }

 protected:
  NodePtr make_deriv(size_t i) const override {
    return std::make_shared<PolyNode>(f_.deriv(i));
  }

 private:
  Poly f_;
};

class SumNode final : public MapNode {
 public:
  SumNode(NodePtr a, NodePtr b)
      : MapNode(a->nvars(), smooth_min(a->smoothness(), b->smoothness())),
        a_(std::move(a)), b_(std::move(b)) {}
  std::optional<RationalInterval> enclose(const RationalBox& B, Fuel fuel) const override {
    auto ia = a_->enclose(B, fuel), ib = b_->enclose(B, fuel);
    if (!ia || !ib) return std::nullopt;
    return interval_add(*ia, *ib);
  }

 protected:
  NodePtr make_deriv(size_t i) const override {
    return node_add(a_->deriv(i), b_->deriv(i));
  }

 private:
  NodePtr a_, b_;
};

class ProdNode final : public MapNode {
 public:
  ProdNode(NodePtr a, NodePtr b)
      : MapNode(a->nvars(), smooth_min(a->smoothness(), b->smoothness())),
        a_(std::move(a)), b_(std::move(b)) {}
  std::optional<RationalInterval> enclose(const RationalBox& B, Fuel fuel) const override {
    auto ia = a_->enclose(B, fuel), ib = b_->enclose(B, fuel);
    if (!ia || !ib) return std::nullopt;
    return interval_mul(*ia, *ib);
  }

 protected:
  NodePtr make_deriv(size_t i) const override {
    return node_add(node_mul(a_->deriv(i), b_), node_mul(a_, b_->deriv(i)));
  }

 private:
  NodePtr a_, b_;
};

class NegNode final : public MapNode {
 public:
  explicit NegNode(NodePtr a) : MapNode(a->nvars(), a->smoothness()), a_(std::move(a)) {}
  std::optional<RationalInterval> enclose(const RationalBox& B, Fuel fuel) const override {
    auto ia = a_->enclose(B, fuel);
    if (!ia) return std::nullopt;
    return interval_neg(*ia);
  }

 protected:
  NodePtr make_deriv(size_t i) const override { return node_neg(a_->deriv(i)); }

 private:
  NodePtr a_;
};

class RecipNode final : public MapNode {
 public:
  explicit RecipNode(NodePtr a) : MapNode(a->nvars(), a->smoothness()), a_(std::move(a)) {}
  std::optional<RationalInterval> enclose(const RationalBox& B, Fuel fuel) const override {
    auto ia = a_->enclose(B, fuel);
    if (!ia || ia->contains(Rat(0))) return std::nullopt;  // domain unverified
    return interval_recip(*ia);
  }

 protected:
  NodePtr make_deriv(size_t i) const override {
    // (1/a)' = -a' / a^2
    return node_neg(node_mul(a_->deriv(i), node_recip(node_mul(a_, a_))));
  }

 private:
  NodePtr a_;
};

class ComposeNode final : public MapNode {
 public:
  ComposeNode(NodePtr f, std::vector<NodePtr> args)
      : MapNode(args.empty() ? 0 : args[0]->nvars(), combined(f, args)),
        f_(std::move(f)), args_(std::move(args)) {}
  std::optional<RationalInterval> enclose(const RationalBox& B, Fuel fuel) const override {
    std::vector<RationalInterval> dims;
    dims.reserve(args_.size());
    for (auto& a : args_) {
      auto ia = a->enclose(B, fuel);
      if (!ia || !ia->bounded()) return std::nullopt;
      dims.push_back(ia->closure());
    }
    return f_->enclose(RationalBox(std::move(dims)), fuel);
  }

 protected:
  NodePtr make_deriv(size_t j) const override {
    NodePtr acc;
    for (size_t i = 0; i < args_.size(); ++i) {
      NodePtr term = node_mul(node_compose(f_->deriv(i), args_), args_[i]->deriv(j));
      acc = acc ? node_add(acc, term) : term;
    }
    return acc ? acc : node_const(nvars(), Rat(0));
  }

 private:
  static Smooth combined(const NodePtr& f, const std::vector<NodePtr>& args) {
    Smooth p = f->smoothness();
    for (auto& a : args) p = smooth_min(p, a->smoothness());
    return p;
  }
  NodePtr f_;
  std::vector<NodePtr> args_;
};

class IntegralNode final : public MapNode {
 public:
  IntegralNode(NodePtr f, Rat a, Rat b)
      : MapNode(f->nvars() - 1, f->smoothness()),
        f_(std::move(f)), a_(std::move(a)), b_(std::move(b)) {
    require(f_->nvars() >= 1, ErrorCode::DimensionMismatch, "integral over empty arity");
    require(a_ < b_, ErrorCode::DomainViolation, "integration bounds");
  }
  std::optional<RationalInterval> enclose(const RationalBox& B, Fuel fuel) const override {
    unsigned k = fuel > 12 ? 12 : static_cast<unsigned>(fuel);
    size_t panels = size_t(1) << k;
    Rat step = (b_ - a_) / Rat(static_cast<unsigned long>(panels));
    step.canonicalize();
    RationalInterval acc = RationalInterval::point(Rat(0));
    Rat y = a_;
    for (size_t t = 0; t < panels; ++t) {
      Rat y2 = (t + 1 == panels) ? b_ : Rat(y + step);
      y2.canonicalize();
      RationalBox Bt = B;
      Bt.dims.push_back(RationalInterval::closed(y, y2));
      auto iv = f_->enclose(Bt, 2);
      if (!iv) return std::nullopt;
      acc = interval_add(acc, interval_mul(*iv, RationalInterval::point(Rat(y2 - y))));
      y = y2;
    }
    return acc;
  }

 protected:
  NodePtr make_deriv(size_t i) const override {
    return node_integral(f_->deriv(i), a_, b_);
  }

 private:
  NodePtr f_;
  Rat a_, b_;
};

// f / x_i (d = 1; higher d is built by nesting).  Away from {x_i = 0} the
// enclosure divides; across the hyperplane it uses
// g(x) = ∫_0^1 (∂f/∂x_i)(x_1,…,t·x_i,…,x_n) dt.
class DivVarNode final : public MapNode {
 public:
  DivVarNode(NodePtr f, size_t i)
      : MapNode(f->nvars(), smooth_sub(f->smoothness(), 1)), f_(std::move(f)), i_(i) {
    require(i_ < nvars(), ErrorCode::DimensionMismatch, "divide_by_variable index");
    size_t n = nvars();
    std::vector<NodePtr> args;
    args.reserve(n);
    for (size_t k = 0; k < n; ++k) {
      if (k == i_)
        args.push_back(node_mul(node_var(n + 1, k), node_var(n + 1, n)));  // t·x_i
      else
        args.push_back(node_var(n + 1, k));
    }
    integral_form_ = node_integral(node_compose(f_->deriv(i_), std::move(args)), Rat(0), Rat(1));
  }
  std::optional<RationalInterval> enclose(const RationalBox& B, Fuel fuel) const override {
    if (B.dims[i_].contains(Rat(0))) return integral_form_->enclose(B, fuel);
    auto iv = f_->enclose(B, fuel);
    if (!iv) return std::nullopt;
    return interval_mul(*iv, interval_recip(B.dims[i_]));
  }

 protected:
  NodePtr make_deriv(size_t j) const override {
    if (j != i_) return node_div_var(f_->deriv(j), i_, 1);
    // g = f/x_i  ⇒  g' = (x_i f' − f)/x_i²
    NodePtr num = node_sub(node_mul(node_var(nvars(), i_), f_->deriv(i_)), f_);
    return node_div_var(num, i_, 2);
  }

 private:
  NodePtr f_;
  size_t i_;
  NodePtr integral_form_;
};

}  // namespace

NodePtr MapNode::deriv(size_t i) const {
  require(i < n_, ErrorCode::DimensionMismatch, "derivative index");
  if (p_ && *p_ < 1) throw EngineError(ErrorCode::SmoothnessExceeded, "C^0 map");
  if (deriv_cache_.empty()) deriv_cache_.resize(n_);
  if (!deriv_cache_[i]) deriv_cache_[i] = make_deriv(i);
  return deriv_cache_[i];
}

NodePtr node_poly(const Poly& f) { return std::make_shared<PolyNode>(f); }
NodePtr node_const(size_t n, const Rat& c) { return node_poly(Poly::constant(n, c)); }
NodePtr node_var(size_t n, size_t i) { return node_poly(Poly::var(n, i)); }

NodePtr node_add(NodePtr a, NodePtr b) {
  require(a->nvars() == b->nvars(), ErrorCode::DimensionMismatch, "node_add");
  auto pa = a->as_poly(), pb = b->as_poly();
  if (pa && pb) return node_poly(*pa + *pb);
  if (pa && pa->is_zero()) return b;
  if (pb && pb->is_zero()) return a;
  return std::make_shared<SumNode>(std::move(a), std::move(b));
}
NodePtr node_neg(NodePtr a) {
  if (auto p = a->as_poly()) return node_poly(-*p);
  return std::make_shared<NegNode>(std::move(a));
}
NodePtr node_sub(NodePtr a, NodePtr b) { return node_add(std::move(a), node_neg(std::move(b))); }
NodePtr node_mul(NodePtr a, NodePtr b) {
  require(a->nvars() == b->nvars(), ErrorCode::DimensionMismatch, "node_mul");
  auto pa = a->as_poly(), pb = b->as_poly();
  if (pa && pb) return node_poly(*pa * *pb);
  if (pa && pa->is_zero()) return a;
  if (pb && pb->is_zero()) return b;
  if (pa && pa->is_constant() && pa->constant_value() == 1) return b;
  if (pb && pb->is_constant() && pb->constant_value() == 1) return a;
  return std::make_shared<ProdNode>(std::move(a), std::move(b));
}
NodePtr node_scale(const Rat& c, NodePtr a) { return node_mul(node_const(a->nvars(), c), a); }
NodePtr node_recip(NodePtr a) { return std::make_shared<RecipNode>(std::move(a)); }

NodePtr node_compose(NodePtr f, std::vector<NodePtr> args) {
  require(f->nvars() == args.size(), ErrorCode::DimensionMismatch, "node_compose arity");
  size_t n = args.empty() ? 0 : args[0]->nvars();
  for (auto& a : args)
    require(a->nvars() == n, ErrorCode::DimensionMismatch, "node_compose vars");
  if (auto pf = f->as_poly()) {
    bool all_poly = true;
    std::vector<Poly> ps;
    for (auto& a : args) {
      if (auto pa = a->as_poly()) ps.push_back(*pa);
      else { all_poly = false; break; }
    }
    if (all_poly) return node_poly(pf->compose(ps));
  }
  return std::make_shared<ComposeNode>(std::move(f), std::move(args));
}

NodePtr node_integral(NodePtr f, const Rat& a, const Rat& b) {
  if (auto pf = f->as_poly()) {
    // exact symbolic integral over the last variable
    size_t n = pf->nvars;
    Poly F(n);  // antiderivative in var n-1
    for (auto& [e, c] : pf->terms) {
      Expo e2 = e;
      e2[n - 1] += 1;
      F.add_term(e2, Rat(c / Rat(e2[n - 1])));
    }
    std::vector<Poly> at_b, at_a;
    for (size_t k = 0; k + 1 < n; ++k) {
      at_b.push_back(Poly::var(n - 1, k));
      at_a.push_back(Poly::var(n - 1, k));
    }
    at_b.push_back(Poly::constant(n - 1, b));
    at_a.push_back(Poly::constant(n - 1, a));
    return node_poly(F.compose(at_b) - F.compose(at_a));
  }
  return std::make_shared<IntegralNode>(std::move(f), a, b);
}

NodePtr node_div_var(NodePtr f, size_t i, unsigned d) {
  require(d >= 1, ErrorCode::DomainViolation, "divide_by_variable power");
  if (auto pf = f->as_poly()) {
    if (!pf->divisible_by_var_power(i, d))
      throw EngineError(ErrorCode::PrecondViolated,
                        "restricted derivatives do not vanish: polynomial not divisible");
    return node_poly(pf->divide_var_power(i, d));
  }
  NodePtr g = std::move(f);
  for (unsigned k = 0; k < d; ++k) g = std::make_shared<DivVarNode>(g, i);
  return g;
}

MapVec map_from_polys(const std::vector<Poly>& fs) {
  MapVec v;
  require(!fs.empty(), ErrorCode::DimensionMismatch, "empty map");
  v.n = fs[0].nvars;
  for (auto& f : fs) {
    require(f.nvars == v.n, ErrorCode::DimensionMismatch, "map_from_polys");
    v.comps.push_back(node_poly(f));
  }
  return v;
}

MapVec compose_maps(const MapVec& f, const MapVec& g) {
  require(f.n == g.m(), ErrorCode::DimensionMismatch, "compose_maps");
  MapVec r;
  r.n = g.n;
  for (auto& c : f.comps) r.comps.push_back(node_compose(c, g.comps));
  return r;
}

MapVec divide_by_variable(const MapVec& f, size_t i, unsigned d) {
  MapVec r;
  r.n = f.n;
  for (auto& c : f.comps) r.comps.push_back(node_div_var(c, i, d));
  return r;
}

MapVec integrate_map(const MapVec& f, const Rat& a, const Rat& b) {
  MapVec r;
  r.n = f.n - 1;
  for (auto& c : f.comps) r.comps.push_back(node_integral(c, a, b));
  return r;
}

namespace {
NodePtr deriv_multi_node(NodePtr f, const Expo& alpha) {
  for (size_t i = 0; i < alpha.size(); ++i)
    for (unsigned k = 0; k < alpha[i]; ++k) f = f->deriv(i);
  return f;
}
}  // namespace

std::optional<RationalInterval> approx_query(const MapVec& f, size_t comp,
                                             const Expo& alpha, const RationalBox& B,
                                             Fuel fuel) {
  require(comp < f.m(), ErrorCode::DimensionMismatch, "approx_query component");
  require(alpha.size() == f.n, ErrorCode::DimensionMismatch, "approx_query multi-index");
  unsigned total = 0;
  for (unsigned a : alpha) total += a;
  Smooth p = f.comps[comp]->smoothness();
  if (p && total > *p) throw EngineError(ErrorCode::SmoothnessExceeded, "|alpha| > p");
  return deriv_multi_node(f.comps[comp], alpha)->enclose(B, fuel);
}

SemiDecision cp_query(const MapVec& f, const Expo& alpha, const RationalBox& B,
                      const std::vector<RationalInterval>& I) {
  require(I.size() == f.m(), ErrorCode::DimensionMismatch, "cp_query targets");
  return SemiDecision([f, alpha, B, I](Fuel fuel) {
    for (size_t k = 0; k < f.m(); ++k) {
      auto iv = approx_query(f, k, alpha, B, fuel);
      if (!iv || !iv->subset_of(I[k])) return false;
    }
    return true;
  });
}

bool sign_definite(const NodePtr& node, const RationalBox& B, int sign, Fuel fuel) {
  size_t budget = fuel >= 2048 ? 2048 : static_cast<size_t>(fuel) + 16;
  // Splitting happens here, so polynomial nodes only need cheap enclosures;
  // adaptive nodes (implicit functions) get fuel so their own refinement depth
  // grows with ours.
  Fuel inner = node->as_poly() ? 1 : (fuel > 24 ? 24 : fuel);
  std::vector<RationalBox> work{B};
  size_t splits = 0;
  while (!work.empty()) {
    RationalBox b = std::move(work.back());
    work.pop_back();
    auto iv = node->enclose(b, inner);
    if (iv) {
      bool def = sign > 0 ? (iv->lo.inf == 0 && (iv->lo.v > 0 || (iv->lo.v == 0 && !iv->lo_closed)))
                          : (iv->hi.inf == 0 && (iv->hi.v < 0 || (iv->hi.v == 0 && !iv->hi_closed)));
      if (def) continue;
    }
    if (splits >= budget) return false;
    size_t k = 0;
    Rat w(-1);
    for (size_t i = 0; i < b.dim(); ++i) {
      Rat wi = b.dims[i].width();
      if (wi > w) { w = wi; k = i; }
    }
    if (b.dim() == 0 || w == 0) return false;  // exact value, not definite
    Rat m = b.dims[k].midpoint();
    RationalBox L = b, R = b;
    L.dims[k] = RationalInterval(b.dims[k].lo, ExtRat::fin(m), b.dims[k].lo_closed, true);
    R.dims[k] = RationalInterval(ExtRat::fin(m), b.dims[k].hi, true, b.dims[k].hi_closed);
    work.push_back(std::move(L));
    work.push_back(std::move(R));
    ++splits;
  }
  return true;
}

}  // namespace redec
