#include <redec/cmap.hpp>

namespace redec {

namespace {

void require(bool cond, ErrorCode code, const char* msg) {
  if (!cond) throw EngineError(code, msg);
}

RationalBox radii_box(const std::vector<Rat>& r) {
  std::vector<RationalInterval> dims;
  dims.reserve(r.size());
  for (auto& q : r) dims.push_back(RationalInterval::closed(Rat(-q), q));
  return RationalBox(std::move(dims));
}

// f restricted to the slice {last var = c}: a node over one fewer variable.
NodePtr slice_last(const NodePtr& f, const Rat& c) {
  size_t n = f->nvars();
  std::vector<NodePtr> args;
  args.reserve(n);
  for (size_t k = 0; k + 1 < n; ++k) args.push_back(node_var(n - 1, k));
  args.push_back(node_const(n - 1, c));
  return node_compose(f, std::move(args));
}

// Base-case check (one equation, last variable solved): returns σ or 0.
int base_sigma(const NodePtr& f, const std::vector<Rat>& r, const Rat& s, Fuel fuel) {
  size_t m = f->nvars() - 1;
  std::vector<Rat> rs = r;
  rs.push_back(s);
  RationalBox D = radii_box(rs);
  RationalBox Bx = radii_box(std::vector<Rat>(r.begin(), r.begin() + m));
  NodePtr dfy = f->deriv(m);
  NodePtr f_lo = slice_last(f, Rat(-s));
  NodePtr f_hi = slice_last(f, s);
  for (int sigma : {+1, -1}) {
    if (!sign_definite(dfy, D, sigma, fuel)) continue;
    if (!sign_definite(f_lo, Bx, -sigma, fuel)) continue;
    if (!sign_definite(f_hi, Bx, sigma, fuel)) continue;
    return sigma;
  }
  return 0;
}

// Scalar implicit function from a base-case certificate: g(x) ∈ (−s, s) with
// f(x, g(x)) = 0, evaluated by certified sign bisection.
class ImplicitNode final : public MapNode {
 public:
  ImplicitNode(NodePtr f, std::vector<Rat> r, Rat s, int sigma)
      : MapNode(f->nvars() - 1, f->smoothness()),
        f_(std::move(f)), r_(std::move(r)), s_(std::move(s)), sigma_(sigma) {}

  std::optional<RationalInterval> enclose(const RationalBox& B, Fuel fuel) const override {
    if (!B.subset_of(radii_box(r_))) return std::nullopt;
    Rat lo = -s_, hi = s_;
    unsigned steps = fuel > 100 ? 100 : static_cast<unsigned>(fuel) + 8;
    // Several cut fractions per step: a single midpoint can coincide with an
    // implicit value (sign test forever ambiguous), but distinct fractions
    // cannot all collide, so width shrinks whenever [lo,hi] is strictly wider
    // than the hull of g(B).
    static const std::pair<int, int> kCuts[] = {{1, 2}, {1, 3}, {2, 3}, {2, 5},
                                                {3, 5}, {1, 5}, {4, 5}};
    for (unsigned k = 0; k < steps; ++k) {
      bool progress = false;
      for (auto [p, q] : kCuts) {
        Rat mid = lo + (hi - lo) * Rat(p, q);
        mid.canonicalize();
        NodePtr fm = slice_last(f_, mid);
        if (sign_definite(fm, B, sigma_, fuel / 2 + 6)) {
          hi = mid;
          progress = true;
          break;
        }
        if (sign_definite(fm, B, -sigma_, fuel / 2 + 6)) {
          lo = mid;
          progress = true;
          break;
        }
      }
      if (!progress) break;  // [lo,hi] stays a sound enclosure of g(B)
    }
    return RationalInterval::closed(lo, hi);
  }

 protected:
  NodePtr make_deriv(size_t k) const override {
    // g_k = −(∂f/∂x_k ∘ Γ)/(∂f/∂y ∘ Γ),  Γ(x) = (x, g(x))
    size_t m = nvars();
    std::vector<NodePtr> gamma;
    gamma.reserve(m + 1);
    for (size_t t = 0; t < m; ++t) gamma.push_back(node_var(m, t));
    gamma.push_back(shared_from_this());
    NodePtr num = node_compose(f_->deriv(k), gamma);
    NodePtr den = node_compose(f_->deriv(m), gamma);
    return node_neg(node_mul(num, node_recip(den)));
  }

 private:
  NodePtr f_;
  std::vector<Rat> r_;
  Rat s_;
  int sigma_;
};

std::vector<Rat> drop_index(const std::vector<Rat>& v, size_t j) {
  std::vector<Rat> out;
  out.reserve(v.size() - 1);
  for (size_t k = 0; k < v.size(); ++k)
    if (k != j) out.push_back(v[k]);
  return out;
}

// Equation f_i with y_j moved to the last slot: a node over the same m+n
// variables reordered as (x, y', y_j).
NodePtr pivot_reorder(const NodePtr& fi, size_t m, size_t n, size_t j) {
  size_t N = m + n;
  std::vector<NodePtr> args(N);
  // old variable v at position: x_t -> t; y_u (u<j) -> m+u; y_j -> N-1;
  // y_u (u>j) -> m+u-1
  for (size_t t = 0; t < m; ++t) args[t] = node_var(N, t);
  for (size_t u = 0; u < n; ++u) {
    size_t pos = u == j ? N - 1 : (u < j ? m + u : m + u - 1);
    args[m + u] = node_var(N, pos);
  }
  return node_compose(fi, std::move(args));
}

// f_k composed with the partial graph map H(x, y') = (x, y_<j, h, y_>j).
NodePtr compose_with_H(const NodePtr& fk, const NodePtr& h, size_t m, size_t n, size_t j) {
  size_t M = m + n - 1;  // variables of the reduced system
  std::vector<NodePtr> args(m + n);
  for (size_t t = 0; t < m; ++t) args[t] = node_var(M, t);
  for (size_t u = 0; u < n; ++u) {
    if (u == j) args[m + u] = h;
    else args[m + u] = node_var(M, u < j ? m + u : m + u - 1);
  }
  return node_compose(fk, std::move(args));
}

std::shared_ptr<IFCert> try_IF(const MapVec& f, size_t m, const std::vector<Rat>& r,
                               const std::vector<Rat>& s, Fuel fuel);

std::shared_ptr<IFCert> try_IF(const MapVec& f, size_t m, const std::vector<Rat>& r,
                               const std::vector<Rat>& s, Fuel fuel) {
  size_t n = f.m();
  if (n == 1) {
    int sigma = base_sigma(f.comps[0], r, s[0], fuel);
    if (!sigma) return nullptr;
    auto c = std::make_shared<IFCert>();
    c->f = f;
    c->m = m;
    c->n = 1;
    c->r = r;
    c->s = s;
    c->sigma = sigma;
    return c;
  }
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      std::vector<Rat> s_rest = drop_index(s, j);
      std::vector<Rat> r_base = r;
      r_base.insert(r_base.end(), s_rest.begin(), s_rest.end());
      NodePtr fi = pivot_reorder(f.comps[i], m, n, j);
      MapVec base_sys{m + n - 1, {fi}};
      auto cert_base = try_IF(base_sys, m + n - 1, r_base, {s[j]}, fuel);
      if (!cert_base) continue;
      NodePtr h = std::make_shared<ImplicitNode>(fi, r_base, s[j], cert_base->sigma);
      MapVec reduced;
      reduced.n = m + n - 1;
      for (size_t k = 0; k < n; ++k)
        if (k != i) reduced.comps.push_back(compose_with_H(f.comps[k], h, m, n, j));
      auto cert_rest = try_IF(reduced, m, r, s_rest, fuel);
      if (!cert_rest) continue;
      auto c = std::make_shared<IFCert>();
      c->f = f;
      c->m = m;
      c->n = n;
      c->r = r;
      c->s = s;
      c->pivot_i = i;
      c->pivot_j = j;
      c->base = cert_base;
      c->rest = cert_rest;
      return c;
    }
  }
  return nullptr;
}

}  // namespace

SemiDecision verify_IF(const MapVec& f, size_t m, std::vector<Rat> r, std::vector<Rat> s,
                       std::shared_ptr<IFCert>* out) {
  size_t n = f.m();
  require(f.n == m + n, ErrorCode::DimensionMismatch, "verify_IF arity");
  require(r.size() == m && s.size() == n, ErrorCode::DimensionMismatch, "verify_IF radii");
  for (auto& q : r) require(q > 0, ErrorCode::DomainViolation, "radii must be positive");
  for (auto& q : s) require(q > 0, ErrorCode::DomainViolation, "radii must be positive");
  return SemiDecision([f, m, r, s, out](Fuel fuel) {
    auto c = try_IF(f, m, r, s, fuel);
    if (c && out) *out = c;
    return c != nullptr;
  });
}

SemiDecision verify_IF_box(const MapVec& f, const RationalBox& A, const RationalBox& B,
                           std::shared_ptr<IFCert>* out) {
  size_t m = A.dim(), n = B.dim();
  require(f.n == m + n && f.m() == n, ErrorCode::DimensionMismatch, "verify_IF_box");
  require(A.compact() && B.compact(), ErrorCode::DomainViolation, "verify_IF_box boxes");
  // recentre: T(x, y) = (a + x, b + y) with (a, b) the centers
  std::vector<Rat> r, s;
  std::vector<NodePtr> t_args;
  size_t N = m + n;
  for (size_t k = 0; k < m; ++k) {
    r.push_back(A.dims[k].width() / 2);
    t_args.push_back(node_add(node_var(N, k), node_const(N, A.dims[k].midpoint())));
  }
  for (size_t k = 0; k < n; ++k) {
    s.push_back(B.dims[k].width() / 2);
    t_args.push_back(node_add(node_var(N, m + k), node_const(N, B.dims[k].midpoint())));
  }
  MapVec ft;
  ft.n = N;
  for (auto& c : f.comps) ft.comps.push_back(node_compose(c, t_args));
  for (auto& q : r) require(q > 0, ErrorCode::DomainViolation, "degenerate x box");
  for (auto& q : s) require(q > 0, ErrorCode::DomainViolation, "degenerate y box");
  return verify_IF(ft, m, std::move(r), std::move(s), out);
}

SemiDecision verify_IF_section(const MapVec& f, const std::vector<size_t>& lambda,
                               const RationalBox& B, std::shared_ptr<SectionCert>* out) {
  size_t m = B.dim();
  require(f.n == m, ErrorCode::DimensionMismatch, "verify_IF_section arity");
  require(B.bounded(), ErrorCode::DomainViolation, "verify_IF_section box");
  std::vector<bool> is_lambda(m, false), is_degenerate(m, false);
  for (size_t i : lambda) {
    require(i < m && !is_lambda[i], ErrorCode::DomainViolation, "lambda injective");
    is_lambda[i] = true;
  }
  std::vector<size_t> mu;
  for (size_t i = 0; i < m; ++i) {
    if (B.dims[i].degenerate()) {
      require(!is_lambda[i], ErrorCode::DomainViolation, "lambda hits a fixed coordinate");
      is_degenerate[i] = true;
    } else if (!is_lambda[i]) {
      mu.push_back(i);
    }
  }
  require(mu.size() == f.m(), ErrorCode::DimensionMismatch,
          "solved coordinates must match equation count");
  size_t d = lambda.size(), e = mu.size();
  // reorder variables to (x_λ, x_μ) and freeze the degenerate ones
  std::vector<NodePtr> args(m);
  for (size_t t = 0; t < d; ++t) args[lambda[t]] = node_var(d + e, t);
  for (size_t u = 0; u < e; ++u) args[mu[u]] = node_var(d + e, d + u);
  for (size_t i = 0; i < m; ++i)
    if (is_degenerate[i]) args[i] = node_const(d + e, B.dims[i].lo.v);
  MapVec fr;
  fr.n = d + e;
  for (auto& c : f.comps) fr.comps.push_back(node_compose(c, args));
  std::vector<RationalInterval> Adims, Sdims;
  for (size_t t = 0; t < d; ++t) Adims.push_back(B.dims[lambda[t]].closure());
  for (size_t u = 0; u < e; ++u) Sdims.push_back(B.dims[mu[u]].closure());
  auto sc = std::make_shared<SectionCert>();
  sc->lambda = lambda;
  sc->mu = mu;
  sc->B = B;
  sc->A = RationalBox(Adims);
  sc->S = RationalBox(Sdims);
  auto inner = verify_IF_box(fr, sc->A, sc->S, &sc->cert);
  return SemiDecision([inner, sc, out](Fuel fuel) {
    if (inner.query(fuel) != Status::ACCEPT) return false;
    if (out) *out = sc;
    return true;
  });
}

MapVec section_map(const std::shared_ptr<SectionCert>& sc) {
  require(sc && sc->cert, ErrorCode::InvalidCertificate, "missing section certificate");
  MapVec g = implicit_map_box(sc->cert, sc->A, sc->S);
  size_t d = sc->lambda.size(), m = sc->B.dim();
  MapVec phi;
  phi.n = d;
  phi.comps.resize(m);
  for (size_t t = 0; t < d; ++t) phi.comps[sc->lambda[t]] = node_var(d, t);
  for (size_t u = 0; u < sc->mu.size(); ++u) phi.comps[sc->mu[u]] = g.comps[u];
  for (size_t i = 0; i < m; ++i)
    if (!phi.comps[i]) phi.comps[i] = node_const(d, sc->B.dims[i].lo.v);
  return phi;
}

MapVec implicit_map(const std::shared_ptr<IFCert>& cert) {
  require(cert != nullptr, ErrorCode::InvalidCertificate, "null certificate");
  const IFCert& c = *cert;
  if (c.n == 1) {
    int sigma = base_sigma(c.f.comps[0], c.r, c.s[0], 24);
    require(sigma == c.sigma && sigma != 0, ErrorCode::InvalidCertificate,
            "base-case replay failed");
    MapVec g;
    g.n = c.m;
    g.comps.push_back(std::make_shared<ImplicitNode>(c.f.comps[0], c.r, c.s[0], c.sigma));
    return g;
  }
  require(c.base && c.rest, ErrorCode::InvalidCertificate, "missing sub-certificates");
  size_t m = c.m, n = c.n, j = c.pivot_j;
  NodePtr fi = pivot_reorder(c.f.comps[c.pivot_i], m, n, j);
  MapVec gp = implicit_map(c.rest);  // n−1 components over m variables
  // h over m+n−1 variables, composed with (id_x, g')
  NodePtr h = std::make_shared<ImplicitNode>(fi, c.base->r, c.base->s[0], c.base->sigma);
  std::vector<NodePtr> args;
  args.reserve(m + n - 1);
  for (size_t t = 0; t < m; ++t) args.push_back(node_var(m, t));
  for (auto& comp : gp.comps) args.push_back(comp);
  NodePtr gj = node_compose(h, std::move(args));
  MapVec g;
  g.n = m;
  for (size_t u = 0; u < n; ++u) {
    if (u == j) g.comps.push_back(gj);
    else g.comps.push_back(gp.comps[u < j ? u : u - 1]);
  }
  return g;
}

MapVec implicit_map_box(const std::shared_ptr<IFCert>& cert, const RationalBox& A,
                        const RationalBox& B) {
  MapVec g0 = implicit_map(cert);
  size_t m = A.dim();
  require(g0.n == m && g0.m() == B.dim(), ErrorCode::InvalidCertificate,
          "implicit_map_box shape");
  // g(x) = b_center + g0(x − a_center)
  std::vector<NodePtr> shift;
  shift.reserve(m);
  for (size_t k = 0; k < m; ++k)
    shift.push_back(node_sub(node_var(m, k), node_const(m, A.dims[k].midpoint())));
  MapVec g;
  g.n = m;
  for (size_t u = 0; u < g0.m(); ++u)
    g.comps.push_back(node_add(node_compose(g0.comps[u], shift),
                               node_const(m, B.dims[u].midpoint())));
  return g;
}

}  // namespace redec
