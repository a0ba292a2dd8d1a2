// Blowup set names: membership chains, central coordinates, restriction,
// segment boxes, variety enlargement, stratifications, the lifting calculus,
// and fiber products of lifted systems.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <redec/blowupset.hpp>

using namespace redec;

namespace {

Poly X(size_t n, size_t i) { return Poly::var(n, i); }

RationalBox closed_square(const Rat& lo, const Rat& hi) {
  return RationalBox::cube(2, lo, hi, /*closed=*/true);
}

std::vector<Rat> pt(std::initializer_list<Rat> xs) { return std::vector<Rat>(xs); }

// Grid of (2g+1)^n rational points over the closed box, endpoints included.
std::vector<std::vector<Rat>> grid_points(const RationalBox& B, unsigned g) {
  std::vector<std::vector<Rat>> pts = {{}};
  for (const auto& iv : B.dims) {
    Rat lo = iv.lo.v, w = iv.width();
    std::vector<std::vector<Rat>> next;
    for (const auto& p : pts)
      for (unsigned s = 0; s <= 2 * g; ++s) {
        auto q = p;
        Rat v = lo + w * Rat(s) / Rat(2 * g);
        v.canonicalize();
        q.push_back(v);
        next.push_back(q);
      }
    pts = std::move(next);
  }
  return pts;
}

// Residuals of the lifted system's equations at an ambient point.
std::vector<Rat> residuals(const SFamily& fam, const SPolyName& P,
                           const std::vector<Rat>& z) {
  std::vector<Rat> out;
  for (const auto& p : inline_poly_system(fam, P)) out.push_back(p.eval(z));
  return out;
}

bool all_zero(const std::vector<Rat>& v) {
  for (const auto& r : v)
    if (r != 0) return false;
  return true;
}

}  // namespace

// ---- blowup set semantics --------------------------------------------------------

TEST_CASE("length-0 name: Cen of the square box") {
  auto nm = BlowupSetName::box(closed_square(-1, 1));
  CHECK(bus_cen(nm) == std::vector<size_t>{0, 1});
  CHECK(bus_membership(nm, pt({Rat(1), Rat(-1)})));
  CHECK(!bus_membership(nm, pt({Rat(2), Rat(0)})));

  auto off = BlowupSetName::box(
      RationalBox({RationalInterval::closed(1, 2), RationalInterval::closed(-1, 1)}));
  CHECK(bus_cen(off) == std::vector<size_t>{1});
}

TEST_CASE("one blowup, full stage box: Cen follows the recursion") {
  auto base = BlowupSetName::box(closed_square(-1, 1));
  auto full = base.blow_up({0, 1}, 0, closed_square(-1, 1));
  CHECK(bus_cen(full) == std::vector<size_t>{0, 1});

  // Stage box missing 0 in the second factor removes 1 from Cen.
  auto part = base.blow_up(
      {0, 1}, 0,
      RationalBox({RationalInterval::closed(-1, 1), RationalInterval::closed(rat_of(1, 2), 1)}));
  CHECK(bus_cen(part) == std::vector<size_t>{0});
}

TEST_CASE("membership chain: chart equations and box tests") {
  auto base = BlowupSetName::box(closed_square(-1, 1));
  auto nm = base.blow_up({0, 1}, 0, closed_square(-1, 1));
  // y ∈ X iff y ∈ A1 and (y0, y0·y1) ∈ A0; here that is just the square.
  CHECK(bus_membership(nm, pt({Rat(1), Rat(1)})));
  CHECK(bus_membership(nm, pt({rat_of(-1, 2), Rat(1)})));
  CHECK(!bus_membership(nm, pt({Rat(1), Rat(2)})));

  // Smaller base box: (y0, y0 y1) must land in [0,1/2]².
  auto tight = BlowupSetName::box(
                   RationalBox({RationalInterval::closed(0, rat_of(1, 2)),
                                RationalInterval::closed(0, rat_of(1, 2))}))
                   .blow_up({0, 1}, 0, closed_square(-1, 1));
  CHECK(bus_membership(tight, pt({rat_of(1, 2), Rat(1)})));    // image (1/2, 1/4)
  CHECK(!bus_membership(tight, pt({rat_of(1, 2), Rat(-1)})));  // image (1/2, -1/4)
}

TEST_CASE("stage invariant violations throw InvalidName") {
  auto off = BlowupSetName::box(
      RationalBox({RationalInterval::closed(1, 2), RationalInterval::closed(-1, 1)}));
  CHECK_THROWS_WITH_AS(off.blow_up({0, 1}, 0, closed_square(-1, 1)),
                       doctest::Contains("central"), EngineError);
  auto base = BlowupSetName::box(closed_square(-1, 1));
  CHECK_THROWS_AS(base.blow_up({0, 1}, 2, closed_square(-1, 1)), EngineError);
  CHECK_THROWS_AS(base.blow_up({}, 0, RationalBox(std::vector<RationalInterval>{})),
                  EngineError);
}

TEST_CASE("restriction: membership agrees on a thousand samples") {
  auto nm = BlowupSetName::box(closed_square(-1, 1)).blow_up({0, 1}, 0, closed_square(-1, 1));
  RationalBox B = RationalBox::cube(2, 0, 1, /*closed=*/true);
  auto restricted = bus_restrict(nm, B);
  size_t checked = 0;
  for (const auto& x : grid_points(RationalBox::cube(2, -2, 2, true), 16)) {
    bool lhs = bus_membership(restricted, x);
    bool rhs = bus_membership(nm, x) && B.contains(x);
    CHECK(lhs == rhs);
    ++checked;
  }
  CHECK(checked >= 1000);
}

TEST_CASE("restriction on a two-stage name stays valid") {
  auto nm = BlowupSetName::box(closed_square(-1, 1))
                .blow_up({0, 1}, 0, closed_square(-1, 1))
                .blow_up({0, 1}, 1, closed_square(-1, 1));
  auto restricted = bus_restrict(nm, RationalBox::cube(2, rat_of(-1, 2), rat_of(1, 2), true));
  restricted.validate();
  for (const auto& x : grid_points(closed_square(-1, 1), 8)) {
    bool lhs = bus_membership(restricted, x);
    bool rhs = bus_membership(nm, x) &&
               RationalBox::cube(2, rat_of(-1, 2), rat_of(1, 2), true).contains(x);
    CHECK(lhs == rhs);
  }
}

TEST_CASE("segment boxes BOX(y, Y) stay inside Y") {
  auto nm = BlowupSetName::box(closed_square(-1, 1)).blow_up({0, 1}, 0, closed_square(-1, 1));
  std::vector<Rat> ts = {Rat(0), rat_of(1, 4), rat_of(1, 2), rat_of(3, 4), Rat(1)};
  for (const auto& y : grid_points(closed_square(-1, 1), 3)) {
    if (!bus_membership(nm, y)) continue;
    for (const auto& t0 : ts)
      for (const auto& t1 : ts) {
        auto p = bus_box_point(nm, y, {{0, t0}, {1, t1}});
        CHECK(bus_membership(nm, p));
      }
  }
}

TEST_CASE("central coordinates characterize which zero slices are nonempty") {
  // Instance A: everything central; every slice {y_J = 0} is inhabited.
  auto full = BlowupSetName::box(closed_square(-1, 1)).blow_up({0, 1}, 0, closed_square(-1, 1));
  // Instance B: coordinate 1 not central; slices forcing y_1 = 0 are empty.
  auto part = BlowupSetName::box(closed_square(-1, 1))
                  .blow_up({0, 1}, 0,
                           RationalBox({RationalInterval::closed(-1, 1),
                                        RationalInterval::closed(rat_of(1, 2), 1)}));
  for (const auto* nm : {&full, &part}) {
    auto cen = bus_cen(*nm);
    for (unsigned mask = 0; mask < 4; ++mask) {
      std::vector<size_t> J;
      for (size_t l = 0; l < 2; ++l)
        if (mask & (1u << l)) J.push_back(l);
      bool subset = true;
      for (size_t l : J)
        if (!std::count(cen.begin(), cen.end(), l)) subset = false;
      bool found = false;
      for (const auto& y : grid_points(closed_square(-1, 1), 8)) {
        bool zeros = true;
        for (size_t l : J)
          if (y[l] != 0) zeros = false;
        if (zeros && bus_membership(*nm, y)) {
          found = true;
          break;
        }
      }
      CHECK(found == subset);
    }
  }
}

// ---- variety enlargement ---------------------------------------------------------

TEST_CASE("enlarging a zero-free interval: x^2 + 1 on [-1,1]") {
  Poly f = X(1, 0) * X(1, 0) + Poly::constant(1, 1);
  auto nm = BlowupSetName::box(RationalBox({RationalInterval::closed(-1, 1)}));
  auto out = variety_enlarge({f}, nm, EnlargeMode::Joint);
  CHECK(out.A[0].dims[0] == RationalInterval::open(-2, 2));
}

TEST_CASE("enlarging away from an outside zero: x - 2 on [0,1]") {
  Poly f = X(1, 0) - Poly::constant(1, 2);
  auto nm = BlowupSetName::box(RationalBox({RationalInterval::closed(0, 1)}));
  auto out = variety_enlarge({f}, nm, EnlargeMode::Each);
  const auto& iv = out.A[0].dims[0];
  CHECK(iv.is_open_interval());
  CHECK(RationalInterval::closed(0, 1).subset_of(iv));
  CHECK(iv.hi.v < 2);  // the enlargement stays clear of the zero at 2
}

TEST_CASE("enlarging via a sign-definite cover: x2^2 - x1^3 - 1 on a square") {
  Poly f = X(2, 1) * X(2, 1) - X(2, 0) * X(2, 0) * X(2, 0) - Poly::constant(2, 1);
  auto nm = BlowupSetName::box(RationalBox::cube(2, rat_of(-1, 2), rat_of(1, 2), true));
  auto out = variety_enlarge({f}, nm, EnlargeMode::Joint);
  for (size_t l = 0; l < 2; ++l) {
    CHECK(nm.A[0].dims[l].subset_of(out.A[0].dims[l]));
    CHECK(out.A[0].dims[l].is_open_interval());
  }
  // Certified emptiness: no sign change of f on a fine grid of the enlargement.
  for (const auto& x : grid_points(out.A[0].closure(), 8)) CHECK(f.eval(x) < 0);
}

TEST_CASE("enlargement fails within budget when a zero sits inside") {
  Poly f = X(1, 0);
  auto nm = BlowupSetName::box(RationalBox({RationalInterval::closed(-1, 1)}));
  CHECK_THROWS_WITH_AS(variety_enlarge({f}, nm, EnlargeMode::Joint),
                       doctest::Contains("enlargement"), EngineError);
}

TEST_CASE("enlargement on a blown-up name") {
  // On the chart, membership forces |y0| ≤ 1; f = y0^2 + y1^2 - 9 stays negative.
  auto nm = BlowupSetName::box(closed_square(-1, 1)).blow_up({0, 1}, 0, closed_square(-1, 1));
  Poly f = X(2, 0) * X(2, 0) + X(2, 1) * X(2, 1) - Poly::constant(2, 9);
  auto out = variety_enlarge({f}, nm, EnlargeMode::Joint);
  out.validate();
  for (size_t j = 0; j < out.A.size(); ++j)
    for (size_t t = 0; t < out.A[j].dims.size(); ++t)
      CHECK(nm.A[j].dims[t].subset_of(out.A[j].dims[t]));
}

// ---- stratification --------------------------------------------------------------

TEST_CASE("empty E gives the single trivial stratum") {
  auto U = BlowupSetName::box(RationalBox::cube(2, -1, 1, /*closed=*/false));
  auto strata = stratify(U, {});
  REQUIRE(strata.size() == 1);
  CHECK(stratum_membership(strata[0], pt({rat_of(1, 2), rat_of(-1, 2)})));
}

TEST_CASE("E = {1} on the open square gives three strata") {
  auto U = BlowupSetName::box(RationalBox::cube(2, -1, 1, /*closed=*/false));
  auto strata = stratify(U, {0});
  REQUIRE(strata.size() == 3);
  CHECK(strata[0].sigma == std::vector<int>{-1});
  CHECK(strata[1].sigma == std::vector<int>{0});
  CHECK(strata[2].sigma == std::vector<int>{1});
  CHECK(stratum_membership(strata[0], pt({rat_of(-1, 2), Rat(0)})));
  CHECK(stratum_membership(strata[1], pt({Rat(0), rat_of(1, 2)})));
  CHECK(stratum_membership(strata[2], pt({rat_of(1, 2), Rat(0)})));
  // The strata partition U: each sample lies in exactly one.
  for (const auto& x : grid_points(closed_square(-1, 1), 4)) {
    int count = 0;
    for (const auto& s : strata)
      if (stratum_membership(s, x)) ++count;
    bool inU = bus_membership(U, x);
    CHECK(count == (inU ? 1 : 0));
  }
}

TEST_CASE("frontier of the positive stratum contains the zero stratum") {
  CHECK(stratum_in_frontier({1}, {0}));
  CHECK(!stratum_in_frontier({1}, {-1}));
  CHECK(!stratum_in_frontier({1}, {1}));
  CHECK(stratum_in_frontier({1, -1}, {0, -1}));
  CHECK(stratum_in_frontier({1, -1}, {1, 0}));
  CHECK(stratum_in_frontier({1, -1}, {0, 0}));
  CHECK(!stratum_in_frontier({1, -1}, {-1, 0}));
}

TEST_CASE("27 strata for a three-element E") {
  auto U = BlowupSetName::box(RationalBox::cube(3, -1, 1, /*closed=*/false));
  CHECK(stratify(U, {0, 1, 2}).size() == 27);
}

// ---- graph liftings and the calculus ---------------------------------------------

TEST_CASE("graph lifting of a polynomial map") {
  SFamily fam;
  RationalBox dom({RationalInterval::open(0, 1)});
  auto L = lift_graph({X(1, 0) * X(1, 0)}, dom);
  CHECK(L.sys.P.n == 2);
  CHECK(L.sys.lambda == std::vector<size_t>{0});
  auto z = pt({rat_of(1, 2), rat_of(1, 4)});
  CHECK(all_zero(residuals(fam, L.sys.P, z)));
  CHECK(lifting_project(L, z) == pt({rat_of(1, 2), rat_of(1, 4)}));
  CHECK(system_jacobian_det(fam, L.sys, z) == Rat(1));
}

TEST_CASE("pairing two liftings: Jacobian nonsingular at x = 1/2") {
  SFamily fam;
  RationalBox dom({RationalInterval::open(0, 1)});
  auto L1 = lift_graph({X(1, 0)}, dom);
  auto L2 = lift_graph({X(1, 0) * X(1, 0)}, dom);
  auto L = lift_pair(L1, L2);
  CHECK(L.n_domain == 1);
  CHECK(L.n_range == 2);
  // Ambient: (x, x) ⊕ (x, x²); equations: two graphs plus the gluing x − x′.
  auto z = pt({rat_of(1, 2), rat_of(1, 2), rat_of(1, 2), rat_of(1, 4)});
  CHECK(all_zero(residuals(fam, L.sys.P, z)));
  CHECK(lifting_project(L, z) == pt({rat_of(1, 2), rat_of(1, 2), rat_of(1, 4)}));
  CHECK(system_jacobian_det(fam, L.sys, z) != Rat(0));
  // Projection injectivity across a thousand sampled solutions.
  std::set<std::vector<Rat>> images;
  size_t count = 0;
  for (unsigned s = 1; s < 1024; ++s) {
    Rat x(s, 1024);
    x.canonicalize();
    std::vector<Rat> sol = {x, x, x, x * x};
    sol[3].canonicalize();
    REQUIRE(all_zero(residuals(fam, L.sys.P, sol)));
    images.insert(lifting_project(L, sol));
    ++count;
  }
  CHECK(images.size() == count);
}

TEST_CASE("identity-map lifting on a blowup manifold is the graph system") {
  SFamily fam;
  RationalBox dom = RationalBox::cube(2, -1, 1, /*closed=*/false);
  auto L = lift_identity(2, dom);
  CHECK(L.sys.P.p.size() == 2);
  CHECK((L.sys.P.p[0] == Poly::var(4, 2) - Poly::var(4, 0)));
  CHECK((L.sys.P.p[1] == Poly::var(4, 3) - Poly::var(4, 1)));
  auto z = pt({rat_of(1, 3), rat_of(-1, 3), rat_of(1, 3), rat_of(-1, 3)});
  CHECK(all_zero(residuals(fam, L.sys.P, z)));
  CHECK(system_jacobian_det(fam, L.sys, z) == Rat(1));
}

TEST_CASE("composition glues inner values to the outer domain") {
  SFamily fam;
  auto Lf = lift_graph({X(1, 0) + Poly::constant(1, 1)},
                       RationalBox({RationalInterval::open(0, 2)}));
  auto Lg = lift_graph({X(1, 0) * X(1, 0)}, RationalBox({RationalInterval::open(0, 1)}));
  auto L = lift_compose(Lf, Lg);
  CHECK(L.n_domain == 1);
  CHECK(L.n_range == 1);
  // Ambient: (u, u+1) ⊕ (x, x²) with gluing u = x².
  auto z = pt({rat_of(1, 4), rat_of(5, 4), rat_of(1, 2), rat_of(1, 4)});
  CHECK(all_zero(residuals(fam, L.sys.P, z)));
  CHECK(lifting_project(L, z) == pt({rat_of(1, 2), rat_of(5, 4)}));
  CHECK(system_jacobian_det(fam, L.sys, z) != Rat(0));
}

TEST_CASE("composition rejects values escaping the outer domain") {
  auto Lf = lift_graph({X(1, 0)}, RationalBox({RationalInterval::open(0, 1)}));
  auto Lg = lift_graph({X(1, 0) + Poly::constant(1, 3)},
                       RationalBox({RationalInterval::open(0, 1)}));
  CHECK_THROWS_WITH_AS(lift_compose(Lf, Lg), doctest::Contains("escapes"), EngineError);
}

TEST_CASE("implicit restriction appends coordinate equations") {
  SFamily fam;
  auto L = lift_identity(2, RationalBox::cube(2, -1, 1, /*closed=*/false));
  auto N = lift_implicit(L, {1});
  CHECK(N.sys.P.p.size() == 3);
  CHECK(N.sys.lambda == std::vector<size_t>{0});
  CHECK(N.signs.at(1) == 0);
  auto z = pt({rat_of(1, 2), Rat(0), rat_of(1, 2), Rat(0)});
  CHECK(all_zero(residuals(fam, N.sys.P, z)));
  CHECK(system_jacobian_det(fam, N.sys, z) != Rat(0));
}

TEST_CASE("slicing records signs and zero-slices delegate to implicit") {
  auto L = lift_identity(1, RationalBox({RationalInterval::open(-1, 1)}));
  auto pos = lift_slice(L, 0, 1);
  CHECK(pos.signs.at(0) == 1);
  CHECK_THROWS_AS(lift_slice(pos, 0, -1), EngineError);
  auto zero = lift_slice(L, 0, 0);
  CHECK(zero.sys.P.p.size() == 2);
}

TEST_CASE("restriction shrinks the carried boxes") {
  auto L = lift_graph({X(1, 0) * X(1, 0)}, RationalBox({RationalInterval::open(-1, 1)}));
  auto R = lift_restrict(L, RationalBox({RationalInterval::open(0, rat_of(1, 2))}));
  CHECK(R.sys.box.dims[0] == RationalInterval::open(0, rat_of(1, 2)));
  CHECK_THROWS_AS(lift_restrict(L, RationalBox({RationalInterval::open(2, 3)})), EngineError);
}

TEST_CASE("refinement substitutes zeros into the system") {
  SFamily fam;
  auto L = lift_graph({X(2, 0) * X(2, 1)}, RationalBox::cube(2, -1, 1, /*closed=*/false));
  auto R = lift_refine(L, {1});
  // f(x1, 0) = 0: the graph equation collapses to the value variable itself.
  auto z = pt({rat_of(1, 2), Rat(0), Rat(0)});
  CHECK(all_zero(residuals(fam, R.sys.P, z)));
  CHECK(R.sys.box.dims[1] == RationalInterval::point(0));
  CHECK(R.sys.lambda == std::vector<size_t>{0});
}

TEST_CASE("division by a variable off its zero set") {
  SFamily fam;
  auto L = lift_graph({X(2, 0) * X(2, 1)}, RationalBox::cube(2, -1, 1, /*closed=*/false));
  CHECK_THROWS_AS(lift_divide_off_zero(L, 1, 1), EngineError);  // needs a sign
  auto Lpos = lift_slice(L, 1, 1);
  auto D = lift_divide_off_zero(Lpos, 1, 1);
  // Solution (a, b, ab) ⊕ w with b·w = ab, so w = a.
  auto z = pt({rat_of(1, 3), rat_of(1, 2), rat_of(1, 6), rat_of(1, 3)});
  CHECK(all_zero(residuals(fam, D.sys.P, z)));
  CHECK(lifting_project(D, z) == pt({rat_of(1, 3), rat_of(1, 2), rat_of(1, 3)}));
  CHECK(system_jacobian_det(fam, D.sys, z) != Rat(0));
}

TEST_CASE("division by a variable on its zero stratum via derivative scaling") {
  SFamily fam;
  // f = x1·x2 = x2·g with g = x1; on {x2 = 0}, g = (1/1!)·∂f/∂x2 = x1.
  auto Lderiv = lift_graph({X(2, 0)}, RationalBox::cube(2, -1, 1, /*closed=*/false));
  auto D = lift_divide_on_zero(Lderiv, 1, 1);
  CHECK(D.signs.at(1) == 0);
  auto z = pt({rat_of(2, 5), Rat(0), rat_of(2, 5), rat_of(2, 5)});
  CHECK(all_zero(residuals(fam, D.sys.P, z)));
  CHECK(lifting_project(D, z) == pt({rat_of(2, 5), Rat(0), rat_of(2, 5)}));
  // Higher-order coefficient: for d = 2 and alpha_k = 1 the scale is 1/3!·3 = 1/6·... exact
  // factorial ratio alpha_k!/(alpha_k+d)! = 1/6.
  auto D2 = lift_divide_on_zero(Lderiv, 1, 2, 1);
  auto z2 = pt({rat_of(1, 2), Rat(0), rat_of(1, 2), rat_of(1, 12)});
  CHECK(all_zero(residuals(fam, D2.sys.P, z2)));
}

TEST_CASE("shear precomposition") {
  SFamily fam;
  ShearMatrix sh;
  sh.n = 2;
  sh.E = {1};
  sh.w[{0, 1}] = rat_of(3, 2);
  auto L = lift_graph({X(2, 0) * X(2, 1)}, RationalBox::cube(2, -4, 4, /*closed=*/false));
  auto S = lift_shear(L, sh, RationalBox::cube(2, -1, 1, /*closed=*/false));
  CHECK(S.n_domain == 2);
  // y = (p, q) ↦ x = (p + (3/2)q, q); value x0·x1.
  Rat p = rat_of(1, 2), q = rat_of(1, 3);
  Rat x0 = p + rat_of(3, 2) * q;
  x0.canonicalize();
  Rat v = x0 * q;
  v.canonicalize();
  auto z = pt({x0, q, v, p, q});
  CHECK(all_zero(residuals(fam, S.sys.P, z)));
  CHECK(lifting_project(S, z) == pt({p, q, v}));
  CHECK(system_jacobian_det(fam, S.sys, z) != Rat(0));
}

TEST_CASE("blowup-chart precomposition") {
  SFamily fam;
  BlowupChart c;
  c.n = 2;
  c.I = {0, 1};
  c.i = 0;
  auto L = lift_graph({X(2, 0) * X(2, 0) + X(2, 1) * X(2, 1)},
                      RationalBox::cube(2, -4, 4, /*closed=*/false));
  auto B = lift_blowup(L, c, RationalBox::cube(2, -1, 1, /*closed=*/false));
  // y = (y0, y1) ↦ x = (y0, y0·y1); value y0²(1 + y1²).
  Rat y0 = rat_of(1, 2), y1 = rat_of(1, 3);
  Rat x1 = y0 * y1;
  x1.canonicalize();
  Rat v = y0 * y0 + x1 * x1;
  v.canonicalize();
  auto z = pt({y0, x1, v, y0, y1});
  CHECK(all_zero(residuals(fam, B.sys.P, z)));
  CHECK(lifting_project(B, z) == pt({y0, y1, v}));
  CHECK(system_jacobian_det(fam, B.sys, z) != Rat(0));
}

// ---- fiber products ---------------------------------------------------------------

TEST_CASE("fiber product of graph(x^2) and graph(x^3) over the shared axis") {
  SFamily fam;
  auto M = lift_graph({X(1, 0) * X(1, 0)}, RationalBox({RationalInterval::open(-2, 2)}));
  auto N = lift_graph({X(1, 0) * X(1, 0) * X(1, 0)},
                      RationalBox({RationalInterval::open(-2, 2)}));
  auto P = fiber_product_system(M.sys.P, N.sys.P, {0}, {0});
  REQUIRE(P.p.size() == 3);   // two graph equations plus the identification
  REQUIRE(P.n == 4);          // unknowns (x, x², y, y³)
  auto z = pt({Rat(1), Rat(1), Rat(1), Rat(1)});
  CHECK(all_zero(residuals(fam, P, z)));
  // Exact 4×4 determinant: the three equation gradients plus the good
  // direction's coordinate row.
  std::vector<Poly> eqs = inline_poly_system(fam, P);
  std::vector<std::vector<Rat>> Mx(4, std::vector<Rat>(4, Rat(0)));
  for (size_t r = 0; r < 3; ++r)
    for (size_t cidx = 0; cidx < 4; ++cidx) Mx[r][cidx] = eqs[r].deriv(cidx).eval(z);
  Mx[3][0] = Rat(1);
  Rat det(0);
  // Laplace expansion along the last row: det = -minor(0).
  {
    std::vector<std::vector<Rat>> m3(3, std::vector<Rat>(3, Rat(0)));
    for (size_t r = 0; r < 3; ++r)
      for (size_t cidx = 1; cidx < 4; ++cidx) m3[r][cidx - 1] = Mx[r][cidx];
    Rat d3 = m3[0][0] * (m3[1][1] * m3[2][2] - m3[1][2] * m3[2][1]) -
             m3[0][1] * (m3[1][0] * m3[2][2] - m3[1][2] * m3[2][0]) +
             m3[0][2] * (m3[1][0] * m3[2][1] - m3[1][1] * m3[2][0]);
    det = (4 % 2 == 0 ? -1 : 1) * d3;  // sign of the (4,1) cofactor
    det.canonicalize();
  }
  CHECK(det != Rat(0));
}

TEST_CASE("fiber product with a point is a single fiber") {
  SFamily fam;
  auto M = lift_graph({X(1, 0) * X(1, 0)}, RationalBox({RationalInterval::open(-2, 2)}));
  SPolyName point;
  point.n = 1;
  point.p = {X(1, 0) - Poly::constant(1, 1)};
  point.domain = RationalBox({RationalInterval::open(0, 2)});
  auto P = fiber_product_system(M.sys.P, point, {0}, {0});
  CHECK(all_zero(residuals(fam, P, pt({Rat(1), Rat(1), Rat(1)}))));
  CHECK(!all_zero(residuals(fam, P, pt({rat_of(1, 2), rat_of(1, 4), Rat(1)}))));
}

TEST_CASE("empty gluing yields the Cartesian product") {
  SFamily fam;
  auto M = lift_graph({X(1, 0) * X(1, 0)}, RationalBox({RationalInterval::open(-2, 2)}));
  auto N = lift_graph({X(1, 0) + Poly::constant(1, 1)},
                      RationalBox({RationalInterval::open(-2, 2)}));
  auto P = fiber_product_system(M.sys.P, N.sys.P, {}, {});
  CHECK(P.p.size() == 2);
  CHECK(P.n == 4);
  CHECK(all_zero(residuals(fam, P, pt({rat_of(1, 2), rat_of(1, 4), Rat(1), Rat(2)}))));
}

TEST_CASE("gluing shape errors throw GluingMismatch") {
  auto M = lift_graph({X(1, 0)}, RationalBox({RationalInterval::open(0, 1)}));
  CHECK_THROWS_AS(fiber_product_system(M.sys.P, M.sys.P, {0}, {}), EngineError);
  CHECK_THROWS_AS(fiber_product_system(M.sys.P, M.sys.P, {7}, {0}), EngineError);
}

TEST_CASE("fiber-product Jacobian nonsingular at sampled solutions") {
  SFamily fam;
  auto L1 = lift_graph({X(1, 0) * X(1, 0)}, RationalBox({RationalInterval::open(0, 1)}));
  auto L2 = lift_graph({X(1, 0) * X(1, 0) * X(1, 0)},
                       RationalBox({RationalInterval::open(0, 1)}));
  auto L = lift_pair(L1, L2);
  for (unsigned s = 1; s <= 32; ++s) {
    Rat x(s, 33);
    x.canonicalize();
    Rat x2 = x * x, x3 = x * x * x;
    x2.canonicalize();
    x3.canonicalize();
    auto z = pt({x, x2, x, x3});
    REQUIRE(all_zero(residuals(fam, L.sys.P, z)));
    CHECK(system_jacobian_det(fam, L.sys, z) != Rat(0));
  }
}

TEST_CASE("fiber products carry family symbols through the embedding") {
  // A symbol-backed system: v = S(x) with S = square, glued to a plain graph.
  SFamily fam;
  SFamilyEntry e;
  e.index = "sq";
  e.arity = 1;
  e.radii = {Rat(2)};
  e.poly = X(1, 0) * X(1, 0);
  fam.register_entry(e);
  SPolyName f;
  f.n = 2;  // variables (x, v); one symbol slot y0 = S(x)
  f.symbols = {SSymbol{"sq", Expo{0}, {0}}};
  f.p = {Poly::var(3, 1) - Poly::var(3, 2)};  // v − S(x)
  f.domain = RationalBox::cube(2, -2, 2, /*closed=*/false);
  SPolyName g;
  g.n = 1;
  g.p = {X(1, 0) - Poly::constant(1, 1)};
  g.domain = RationalBox({RationalInterval::open(0, 2)});
  auto P = fiber_product_system(f, g, {0}, {0});
  REQUIRE(P.symbols.size() == 1);
  CHECK(P.symbols[0].xi == std::vector<size_t>{0});
  CHECK(all_zero(residuals(fam, P, pt({Rat(1), Rat(1), Rat(1)}))));
  CHECK(!all_zero(residuals(fam, P, pt({Rat(1), Rat(2), Rat(1)}))));
}

TEST_CASE("lazily generated lifting tables") {
  LiftingTable table;
  RationalBox dom = RationalBox::cube(2, -1, 1, /*closed=*/false);
  table.entry = [dom](size_t, const Expo& alpha, const std::vector<int>&) {
    // Derivatives of f = x1·x2 as graph liftings, generated on demand.
    Poly f = X(2, 0) * X(2, 1);
    return lift_graph({f.deriv_multi(alpha)}, dom);
  };
  SFamily fam;
  auto L = table.entry(0, Expo{1, 0}, {});  // ∂f/∂x1 = x2
  auto z = pt({rat_of(1, 2), rat_of(1, 3), rat_of(1, 3)});
  CHECK(all_zero(residuals(fam, L.sys.P, z)));
}
