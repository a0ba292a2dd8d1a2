// Function-family registries, polynomial-map names over the family algebra,
// and the approximation / precision oracles.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <redec/soracle.hpp>

#include <random>

using namespace redec;

namespace {

const char* kManifest =
    "# desk-scale polynomial families\n"
    "family sq    arity 1 radii 2 poly x1^2\n"
    "family wave  arity 1 radii 2 poly x1^3 - x1\n"
    "family cube  arity 1 radii 4 poly x1^3\n"
    "family mix   arity 2 radii 2 2 poly x1*x2 + x2^2\n";

SFamily load() { return SFamily::load_manifest_text(kManifest); }

RationalBox open_box(const std::vector<std::pair<int, int>>& ends) {
  std::vector<RationalInterval> d;
  for (auto& [a, b] : ends) d.push_back(RationalInterval::open(Rat(a), Rat(b)));
  return RationalBox(d);
}

// Independent elimination oracle for triangular systems with parameter x_1:
// substitutes solved components back until each solved coordinate is a
// polynomial in x_1 alone; nullopt when the system is not triangular.
std::optional<std::vector<Poly>> eliminate_triangular(const std::vector<Poly>& eqs,
                                                      size_t m) {
  std::vector<std::optional<Poly>> expr(m);  // each over 1 variable (x_1)
  expr[0] = Poly::var(1, 0);
  std::vector<bool> used(eqs.size(), false);
  for (size_t round = 0; round < m; ++round) {
    for (size_t l = 0; l < eqs.size(); ++l) {
      if (used[l]) continue;
      // which variables occur, and are all but one already expressed?
      std::optional<size_t> target;
      bool ready = true;
      for (size_t v = 0; v < m && ready; ++v) {
        if (eqs[l].degree_in(v) == 0 || expr[v]) continue;
        if (target) ready = false;
        else target = v;
      }
      if (!ready || !target || eqs[l].degree_in(*target) != 1) continue;
      // eqs[l] = c1(known)·x_target + c0(known); solve
      Poly c1(1), c0(1);
      for (auto& [e, c] : eqs[l].terms) {
        Poly t = Poly::constant(1, c);
        for (size_t v = 0; v < m; ++v) {
          if (v == *target || e[v] == 0) continue;
          if (!expr[v]) { t = Poly(1); break; }
          t = t * expr[v]->pow(e[v]);
        }
        if (e[*target] == 1) c1 = c1 + t;
        else c0 = c0 + t;
      }
      if (!c1.is_constant() || c1.constant_value() == 0) continue;
      expr[*target] = c0 * (Rat(-1) / c1.constant_value());
      used[l] = true;
    }
  }
  std::vector<Poly> out;
  for (size_t v = 0; v < m; ++v) {
    if (!expr[v]) return std::nullopt;
    out.push_back(*expr[v]);
  }
  return out;
}

}  // namespace

TEST_CASE("manifest loading and registry errors") {
  SFamily fam = load();
  CHECK(fam.has("sq"));
  CHECK(fam.get("mix").arity == 2);
  CHECK(fam.get("sq").radii[0] == 2);
  CHECK(fam.get("wave").poly.has_value());
  CHECK_THROWS_AS((void)fam.get("nope"), EngineError);
  CHECK_THROWS_AS(SFamily::load_manifest_text("family bad arity 1 radii"), EngineError);
  CHECK_THROWS_AS(SFamily::load_manifest_text("entry x arity 1 radii 1 poly x1"),
                  EngineError);
  CHECK_THROWS_AS(SFamily::load_manifest_text("family z arity 1 radii 0 poly x1"),
                  EngineError);
}

TEST_CASE("approx_oracle on second derivative of x^2") {
  SFamily fam = load();
  RationalBox B({RationalInterval::closed(Rat(-1), Rat(1))});
  auto sd = approx_oracle(fam, "sq", {2}, B, RationalInterval::open(Rat(1), Rat(3)));
  CHECK(sd.query(2) == Status::ACCEPT);
  auto sd2 = approx_oracle(fam, "sq", {2}, B, RationalInterval::open(Rat(3), Rat(4)));
  CHECK(sd2.query(24) == Status::UNDECIDED);
}

TEST_CASE("approx_oracle needs subdivision for x^3 - x on [0,1]") {
  SFamily fam = load();
  RationalBox B({RationalInterval::closed(Rat(0), Rat(1))});
  // exact range is [−2√3/9, 0] ⊂ (−1, 1); naive term-wise bounding gives [−1, 1]
  auto sd = approx_oracle(fam, "wave", {0}, B, RationalInterval::open(Rat(-1), Rat(1)));
  CHECK(sd.query(8) == Status::ACCEPT);
  // a target that is genuinely too small stays undecided
  auto sd2 = approx_oracle(fam, "wave", {0}, B,
                           RationalInterval::open(rat_of(-1, 4), Rat(1)));
  CHECK(sd2.query(24) == Status::UNDECIDED);
}

TEST_CASE("approx_oracle domain checks") {
  SFamily fam = load();
  RationalBox big({RationalInterval::closed(Rat(-3), Rat(3))});
  CHECK_THROWS_AS(
      approx_oracle(fam, "sq", {0}, big, RationalInterval::open(Rat(-99), Rat(99))),
      EngineError);
  CHECK_THROWS_AS(approx_oracle(fam, "nope", {0},
                                RationalBox({RationalInterval::closed(Rat(0), Rat(1))}),
                                RationalInterval::open(Rat(-9), Rat(9))),
                  EngineError);
}

TEST_CASE("approx_oracle accepts are sound at rational samples") {
  SFamily fam = load();
  std::mt19937 rng(20260823);
  std::uniform_int_distribution<int> num(-16, 16);
  int accepted = 0;
  for (int trial = 0; trial < 60; ++trial) {
    Rat a = Rat(num(rng)) / 8, b = Rat(num(rng)) / 8;
    if (a > b) std::swap(a, b);
    if (a == b) b = a + 1;
    if (a < -2) a = -2;
    if (b > 2) b = 2;
    if (a >= b) { a = -1; b = 1; }
    RationalBox B({RationalInterval::closed(a, b)});
    Rat lo = Rat(num(rng)), hi = Rat(num(rng));
    if (lo > hi) std::swap(lo, hi);
    if (lo == hi) hi = lo + 1;
    RationalInterval I = RationalInterval::open(lo, hi);
    Expo alpha{static_cast<unsigned>(trial % 3)};
    auto sd = approx_oracle(fam, "wave", alpha, B, I);
    if (sd.query(10) != Status::ACCEPT) continue;
    ++accepted;
    Poly d = fam.get("wave").poly->deriv_multi(alpha);
    for (int s = 0; s <= 20; ++s) {
      Rat x = a + (b - a) * Rat(s) / 20;
      CHECK(I.contains(d.eval({x})));
    }
  }
  CHECK(accepted > 5);
}

TEST_CASE("spoly_eval value realizes the name") {
  SFamily fam = load();
  // p(x, y) = y_1 with the single symbol S_sq' = (x^2)' over x_1: the map x ↦ 2x
  SPolyName name;
  name.n = 1;
  name.symbols = {{"sq", {1}, {0}}};
  name.p = {Poly::var(2, 1)};
  name.domain = open_box({{-2, 2}});
  MapVec f = spoly_eval(fam, name);
  REQUIRE(f.m() == 1);
  auto pl = f.comps[0]->as_poly();
  REQUIRE(pl.has_value());
  CHECK(*pl == Rat(2) * Poly::var(1, 0));
}

TEST_CASE("spoly_eval two-symbol tensor matches direct substitution") {
  SFamily fam = load();
  // p(x, y) = y_1·y_2 + x_1 with y_1 = sq(x_1), y_2 = wave(x_2)
  SPolyName name;
  name.n = 2;
  name.symbols = {{"sq", {0}, {0}}, {"wave", {0}, {1}}};
  Poly p = Poly::var(4, 2) * Poly::var(4, 3) + Poly::var(4, 0);
  name.p = {p};
  name.domain = open_box({{-2, 2}, {-2, 2}});
  MapVec f = spoly_eval(fam, name);
  auto pl = f.comps[0]->as_poly();
  REQUIRE(pl.has_value());
  Poly x1 = Poly::var(2, 0), x2 = Poly::var(2, 1);
  Poly expected = (x1 * x1) * (x2 * x2 * x2 - x2) + x1;
  CHECK(*pl == expected);
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b) {
      std::vector<Rat> pt{Rat(a) / 2, Rat(b) / 2};
      CHECK(pl->eval(pt) == expected.eval(pt));
    }
}

TEST_CASE("formal partial applies the product and chain rules") {
  SFamily fam = load();
  // name for x_1·S'(x_1); its x_1-partial is S'(x_1) + x_1·S''(x_1)
  SPolyName name;
  name.n = 1;
  name.symbols = {{"cube", {1}, {0}}};
  name.p = {Poly::var(2, 0) * Poly::var(2, 1)};
  name.domain = open_box({{-4, 4}});
  SPolyName d = spoly_formal_partial(fam, name, 0);
  REQUIRE(d.symbols.size() == 2);
  CHECK(d.symbols[0] == SSymbol{"cube", {1}, {0}});
  CHECK(d.symbols[1] == SSymbol{"cube", {2}, {0}});
  Poly expected = Poly::var(3, 1) + Poly::var(3, 0) * Poly::var(3, 2);
  REQUIRE(d.p.size() == 1);
  CHECK(d.p[0] == expected);
}

TEST_CASE("formal partials commute with evaluation") {
  SFamily fam = load();
  // two-symbol, two-variable name; compare value(∂name) against ∂value(name)
  SPolyName name;
  name.n = 2;
  name.symbols = {{"sq", {0}, {0}}, {"mix", {1, 0}, {0, 1}}};
  Poly p = Poly::var(4, 2) * Poly::var(4, 3) + Poly::var(4, 1) * Poly::var(4, 2);
  name.p = {p};
  name.domain = open_box({{-2, 2}, {-2, 2}});
  MapVec v = spoly_eval(fam, name);
  auto vp = v.comps[0]->as_poly();
  REQUIRE(vp.has_value());
  for (size_t j = 0; j < 2; ++j) {
    SPolyName dj = spoly_formal_partial(fam, name, j);
    MapVec dv = spoly_eval(fam, dj);
    auto dp = dv.comps[0]->as_poly();
    REQUIRE(dp.has_value());
    CHECK(*dp == vp->deriv(j));
  }
}

TEST_CASE("precision oracle: parabola section never vanishes") {
  SFamily fam = load();
  SPolyName name;
  name.n = 2;
  name.p = {parse_poly_xn("x2 - x1^2", 2)};
  name.domain = open_box({{-4, 4}, {-4, 4}});
  // wide solved interval so the implicit-function precondition verifies
  RationalBox B({RationalInterval::open(Rat(-1), Rat(1)),
                 RationalInterval::open(rat_of(-3, 2), rat_of(3, 2))});
  PrecisionResult r = precision_oracle(fam, {name, {0}, B, 1});
  CHECK(r.certified);
  CHECK(r.cutoff == 3);
  CHECK(r.sd.query(40) == Status::UNDECIDED);
  // spec-shape narrow box: still undecided (here the precondition itself stalls)
  PrecisionResult r2 = precision_oracle(fam, {name, {0}, open_box({{-1, 1}, {-1, 1}}), 1});
  CHECK(r2.sd.query(20) == Status::UNDECIDED);
}

TEST_CASE("precision oracle: flat section accepts") {
  SFamily fam = load();
  SPolyName name;
  name.n = 2;
  name.p = {parse_poly_xn("x2", 2)};
  name.domain = open_box({{-4, 4}, {-4, 4}});
  RationalBox B = open_box({{-1, 1}, {-1, 1}});
  PrecisionResult r = precision_oracle(fam, {name, {0}, B, 1});
  CHECK(r.certified);
  CHECK(r.sd.query(16) == Status::ACCEPT);
}

TEST_CASE("precision oracle: triangular three-variable system") {
  SFamily fam = load();
  SPolyName name;
  name.n = 3;
  name.p = {parse_poly_xn("x2 - x1", 3), parse_poly_xn("x3 - x2 + x1", 3)};
  name.domain = open_box({{-8, 8}, {-8, 8}, {-8, 8}});
  RationalBox B({RationalInterval::open(Rat(-1), Rat(1)),
                 RationalInterval::open(rat_of(-3, 2), rat_of(3, 2)),
                 RationalInterval::open(Rat(-4), Rat(4))});
  PrecisionResult r = precision_oracle(fam, {name, {0}, B, 2});
  CHECK(r.sd.query(32) == Status::ACCEPT);
  // the middle coordinate carries the section x_2 = x_1 ≢ 0
  PrecisionResult r2 = precision_oracle(fam, {name, {0}, B, 1});
  CHECK(r2.sd.query(32) == Status::UNDECIDED);
}

TEST_CASE("precision oracle validates its preconditions") {
  SFamily fam = load();
  SPolyName name;
  name.n = 2;
  name.p = {parse_poly_xn("x2", 2)};
  name.domain = open_box({{-1, 1}, {-1, 1}});
  // closure of B escapes the domain
  CHECK_THROWS_AS(precision_oracle(fam, {name, {0}, open_box({{-1, 1}, {-1, 1}}), 1}),
                  EngineError);
  name.domain = open_box({{-4, 4}, {-4, 4}});
  // querying a parameter coordinate is not meaningful here
  CHECK_THROWS_AS(precision_oracle(fam, {name, {0}, open_box({{-1, 1}, {-1, 1}}), 0}),
                  EngineError);
}

TEST_CASE("manifold equivalence: graph of x^2 is not inside {x2 = 0}") {
  SFamily fam = load();
  SManifoldName mn;
  mn.poly.n = 2;
  mn.poly.p = {parse_poly_xn("x2 - x1^2", 2)};
  mn.poly.domain = open_box({{-4, 4}, {-4, 4}});
  mn.lambda = {0};
  mn.box = RationalBox({RationalInterval::open(Rat(-1), Rat(1)),
                        RationalInterval::open(rat_of(-3, 2), rat_of(3, 2))});
  EquivResult eq = manifold_precision_equiv(fam, mn, 1);
  CHECK(eq.no.query(16) == Status::ACCEPT);
  CHECK(eq.yes.query(16) == Status::UNDECIDED);
}

TEST_CASE("manifold equivalence: flat slice is inside {x2 = 0}") {
  SFamily fam = load();
  SManifoldName mn;
  mn.poly.n = 2;
  mn.poly.p = {parse_poly_xn("x2", 2)};
  mn.poly.domain = open_box({{-4, 4}, {-4, 4}});
  mn.lambda = {0};
  mn.box = open_box({{-1, 1}, {-1, 1}});
  EquivResult eq = manifold_precision_equiv(fam, mn, 1);
  CHECK(eq.yes.query(16) == Status::ACCEPT);
  CHECK(eq.no.query(30) == Status::UNDECIDED);
}

TEST_CASE("manifold equivalence: cubic graph witnessed away from zero") {
  SFamily fam = load();
  SManifoldName mn;
  mn.poly.n = 2;
  mn.poly.p = {parse_poly_xn("x2 - x1^3", 2)};
  mn.poly.domain = open_box({{-4, 4}, {-4, 4}});
  mn.lambda = {0};
  // box around x_1 = 1/2; the section value there is 1/8 ≠ 0
  mn.box = RationalBox({RationalInterval::open(rat_of(1, 4), rat_of(3, 4)),
                        RationalInterval::open(Rat(0), rat_of(1, 2))});
  EquivResult eq = manifold_precision_equiv(fam, mn, 1);
  CHECK(eq.no.query(16) == Status::ACCEPT);
  CHECK(eq.yes.query(16) == Status::UNDECIDED);
}

TEST_CASE("manifold equivalence: parameter coordinates answer no") {
  SFamily fam = load();
  SManifoldName mn;
  mn.poly.n = 2;
  mn.poly.p = {parse_poly_xn("x2", 2)};
  mn.poly.domain = open_box({{-4, 4}, {-4, 4}});
  mn.lambda = {0};
  mn.box = open_box({{-1, 1}, {-1, 1}});
  EquivResult eq = manifold_precision_equiv(fam, mn, 0);
  CHECK(eq.no.query(8) == Status::ACCEPT);
  CHECK(eq.yes.query(8) == Status::UNDECIDED);
}

TEST_CASE("dichotomy agrees with symbolic elimination on small systems") {
  SFamily fam = load();
  struct Item {
    std::vector<std::string> eqs;
    size_t nvars;
    std::vector<std::pair<Rat, Rat>> box;  // open intervals
    size_t i;
  };
  std::vector<Item> corpus = {
      {{"x2 - x1^2"}, 2, {{-1, 1}, {rat_of(-3, 2), rat_of(3, 2)}}, 1},
      {{"x2"}, 2, {{-1, 1}, {-1, 1}}, 1},
      {{"x2 - x1"}, 2, {{-1, 1}, {rat_of(-3, 2), rat_of(3, 2)}}, 1},
      {{"x2 + x1 - x1"}, 2, {{-1, 1}, {-1, 1}}, 1},
      {{"x2 - x1", "x3 - x2 + x1"}, 3,
       {{-1, 1}, {rat_of(-3, 2), rat_of(3, 2)}, {-4, 4}}, 2},
      {{"x2 - x1", "x3 - x2 + x1"}, 3,
       {{-1, 1}, {rat_of(-3, 2), rat_of(3, 2)}, {-4, 4}}, 1},
      {{"x2 - x1^3", "x3 - x2 + x1^3"}, 3,
       {{-1, 1}, {rat_of(-3, 2), rat_of(3, 2)}, {-4, 4}}, 2},
  };
  for (auto& item : corpus) {
    CAPTURE(item.eqs[0]);
    SManifoldName mn;
    mn.poly.n = item.nvars;
    for (auto& e : item.eqs) mn.poly.p.push_back(parse_poly_xn(e, item.nvars));
    std::vector<RationalInterval> dd, bb;
    for (size_t t = 0; t < item.nvars; ++t)
      dd.push_back(RationalInterval::open(Rat(-8), Rat(8)));
    for (auto& [a, b] : item.box) bb.push_back(RationalInterval::open(a, b));
    mn.poly.domain = RationalBox(dd);
    mn.lambda = {0};
    mn.box = RationalBox(bb);
    EquivResult eq = manifold_precision_equiv(fam, mn, item.i);
    bool yes = eq.yes.query(48) == Status::ACCEPT;
    bool no = eq.no.query(48) == Status::ACCEPT;
    CHECK(yes != no);  // exactly one side settles
    auto phi = eliminate_triangular(mn.poly.p, item.nvars);
    REQUIRE(phi.has_value());
    CHECK(yes == (*phi)[item.i].is_zero());
  }
}

TEST_CASE("non-polynomial backing is flagged as heuristic") {
  SFamily fam = load();
  SFamilyEntry e;
  e.index = "rcp";
  e.arity = 1;
  e.radii = {Rat(1)};
  e.combinator = node_recip(node_add(node_const(1, Rat(2)), node_var(1, 0)));
  fam.register_entry(std::move(e));
  SPolyName name;
  name.n = 2;
  // x_2·y_1 = 0 with y_1 = 1/(2 + x_1) nonvanishing: the section is x_2 ≡ 0,
  // but only the heuristic (non-accepting) yes-mode is available
  name.symbols = {{"rcp", {0}, {0}}};
  Poly p = Poly::var(3, 1) * Poly::var(3, 2);
  name.p = {p};
  name.domain = open_box({{-1, 1}, {-4, 4}});
  RationalBox B({RationalInterval::open(rat_of(-1, 2), rat_of(1, 2)),
                 RationalInterval::open(Rat(-1), Rat(1))});
  PrecisionResult r = precision_oracle(fam, {name, {0}, B, 1});
  CHECK_FALSE(r.certified);
  CHECK(r.sd.query(12) == Status::UNDECIDED);
}
