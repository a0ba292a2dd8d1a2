// Computably C^p maps: enclosure queries, closure operations, and the
// effective implicit function theorem.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <redec/cmap.hpp>

#include <random>

using namespace redec;

namespace {
RationalBox unit_square() { return RationalBox::cube(2, Rat(0), Rat(1)); }
Poly X(size_t n, size_t i) { return Poly::var(n, i); }
}  // namespace

TEST_CASE("approx_query on xy") {
  MapVec f = map_from_polys({X(2, 0) * X(2, 1)});
  auto iv = approx_query(f, 0, {0, 0}, unit_square(), 4);
  REQUIRE(iv.has_value());
  CHECK(iv->contains(rat_of(0)));
  CHECK(iv->contains(rat_of(1)));
  // ∂²(xy)/∂x∂y = 1 exactly
  auto iv2 = approx_query(f, 0, {1, 1}, unit_square(), 4);
  REQUIRE(iv2.has_value());
  CHECK(iv2->contains(rat_of(1)));
  CHECK(iv2->lo.v == 1);
  CHECK(iv2->hi.v == 1);
}

TEST_CASE("approx_query on 1/x over [1,2]") {
  MapVec f{1, {node_recip(node_var(1, 0))}};
  RationalBox B({RationalInterval::closed(rat_of(1), rat_of(2))});
  // f' = −1/x² has range [−1, −1/4]
  auto iv = approx_query(f, 0, {1}, B, 6);
  REQUIRE(iv.has_value());
  CHECK(iv->contains(rat_of(-1)));
  CHECK(iv->contains(rat_of(-1, 4)));
  CHECK_FALSE(iv->contains(rat_of(1, 2)));
}

TEST_CASE("compose_maps chain rule") {
  // f = x², g = x+1: (f∘g)' = 2(x+1) has range [2,4] on [0,1]
  MapVec f = map_from_polys({X(1, 0) * X(1, 0)});
  MapVec g = map_from_polys({X(1, 0) + Poly::constant(1, rat_of(1))});
  MapVec fg = compose_maps(f, g);
  RationalBox B({RationalInterval::closed(rat_of(0), rat_of(1))});
  auto iv = approx_query(fg, 0, {1}, B, 6);
  REQUIRE(iv.has_value());
  CHECK(iv->contains(rat_of(2)));
  CHECK(iv->contains(rat_of(4)));

  // identity ∘ f = f: query-for-query equal intervals at equal fuel
  MapVec id = map_from_polys({X(1, 0)});
  MapVec idf = compose_maps(id, f);
  for (Fuel fl : {0, 2, 5}) {
    auto a = approx_query(idf, 0, {0}, B, fl);
    auto b = approx_query(f, 0, {0}, B, fl);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(*a == *b);
  }

  // f=1/x, g=x²+1 on [−1,1] is total; value range ⊇ [1/2,1]
  MapVec r{1, {node_recip(node_var(1, 0))}};
  MapVec q = map_from_polys({X(1, 0) * X(1, 0) + Poly::constant(1, rat_of(1))});
  MapVec rq = compose_maps(r, q);
  RationalBox C({RationalInterval::closed(rat_of(-1), rat_of(1))});
  auto iv2 = approx_query(rq, 0, {0}, C, 8);
  REQUIRE(iv2.has_value());
  CHECK(iv2->contains(rat_of(1, 2)));
  CHECK(iv2->contains(rat_of(1)));
}

TEST_CASE("divide_by_variable on symbolic instances") {
  // x³ / x² = x, and the coefficient identity (1/1!)g'(0) = (1/3!)f'''(0) = 1
  MapVec f = map_from_polys({X(1, 0).pow(3)});
  MapVec g = divide_by_variable(f, 0, 2);
  RationalBox origin({RationalInterval::point(Rat(0))});
  auto gp = approx_query(g, 0, {1}, origin, 4);
  REQUIRE(gp.has_value());
  CHECK(gp->lo.v == 1);
  CHECK(gp->hi.v == 1);
  auto f3 = approx_query(f, 0, {3}, origin, 4);
  CHECK(f3->lo.v == 6);  // f''' = 6, so (1/3!)·6 = 1

  // xy / y = x
  MapVec h = map_from_polys({X(2, 0) * X(2, 1)});
  MapVec hx = divide_by_variable(h, 1, 1);
  auto iv = approx_query(hx, 0, {0, 0}, RationalBox::cube(2, Rat(2), Rat(3)), 4);
  CHECK(iv->lo.v == 2);
  CHECK(iv->hi.v == 3);

  // precondition violation is caught symbolically
  MapVec bad = map_from_polys({X(1, 0) + Poly::constant(1, rat_of(1))});
  CHECK_THROWS_AS(divide_by_variable(bad, 0, 1), EngineError);
}

TEST_CASE("divide_by_variable on a non-polynomial combinator") {
  // f(x,y) = y / (1+x²), so f(x,0) = 0 and g = f/y = 1/(1+x²)
  NodePtr one_over = node_recip(node_poly(X(2, 0) * X(2, 0) + Poly::constant(2, rat_of(1))));
  NodePtr f = node_mul(node_var(2, 1), one_over);
  MapVec fv{2, {f}};
  MapVec g = divide_by_variable(fv, 1, 1);
  // y·g ≡ f as interval functions on sampled boxes (including across y = 0)
  std::mt19937 rng(11);
  std::uniform_int_distribution<long> c(-8, 8);
  for (int t = 0; t < 100; ++t) {
    Rat x0(c(rng), 4), y0(c(rng), 4);
    x0.canonicalize();
    y0.canonicalize();
    RationalBox B({RationalInterval::closed(x0, Rat(x0 + rat_of(1, 4))),
                   RationalInterval::closed(y0, Rat(y0 + rat_of(1, 4)))});
    auto gv = approx_query(g, 0, {0, 0}, B, 6);
    REQUIRE(gv.has_value());
    auto fval = approx_query(fv, 0, {0, 0}, B, 6);
    REQUIRE(fval.has_value());
    auto prod = interval_mul(B.dims[1], *gv);
    // the two enclosures must overlap (both contain the true range of f)
    CHECK(prod.intersects(*fval));
  }
  // exact check at a point off the axis: g(1, 3) = 1/2
  auto pt = approx_query(g, 0, {0, 0},
                         RationalBox({RationalInterval::point(Rat(1)),
                                      RationalInterval::point(Rat(3))}),
                         8);
  CHECK(pt->contains(rat_of(1, 2)));
  // and at a point on the axis: g(1, 0) = 1/2 via the integral form
  auto pt0 = approx_query(g, 0, {0, 0},
                          RationalBox({RationalInterval::point(Rat(1)),
                                       RationalInterval::point(Rat(0))}),
                          8);
  REQUIRE(pt0.has_value());
  CHECK(pt0->contains(rat_of(1, 2)));
  CHECK(pt0->width() < rat_of(1, 10));
}

TEST_CASE("integrate_map") {
  // ∫_0^1 y dy = 1/2 (symbolic)
  MapVec f = map_from_polys({X(1, 0)});
  MapVec F = integrate_map(f, Rat(0), Rat(1));
  auto iv = approx_query(F, 0, {}, RationalBox(), 2);
  CHECK(iv->lo.v == rat_of(1, 2));
  CHECK(iv->hi.v == rat_of(1, 2));

  // ∫_0^1 x·y dy = x/2 on [0,1]
  MapVec g = map_from_polys({X(2, 0) * X(2, 1)});
  MapVec G = integrate_map(g, Rat(0), Rat(1));
  RationalBox B({RationalInterval::closed(rat_of(0), rat_of(1))});
  auto iv2 = approx_query(G, 0, {0}, B, 4);
  CHECK(iv2->contains(rat_of(0)));
  CHECK(iv2->contains(rat_of(1, 2)));
  CHECK_FALSE(iv2->contains(rat_of(3, 4)));

  // ∫_0^1 1/(1+y) dy = log 2 = 0.693147...; enclosure width < 10^-3
  NodePtr rec = node_recip(node_poly(X(1, 0) + Poly::constant(1, rat_of(1))));
  MapVec h{1, {rec}};
  MapVec H = integrate_map(h, Rat(0), Rat(1));
  auto iv3 = approx_query(H, 0, {}, RationalBox(), 12);
  REQUIRE(iv3.has_value());
  // frozen oracle bounds: 0.6931 < log 2 < 0.6932
  CHECK(iv3->lo.v > rat_of(6931, 10000) - rat_of(1, 1000));
  CHECK(iv3->hi.v < rat_of(6932, 10000) + rat_of(1, 1000));
  CHECK(iv3->width() < rat_of(1, 1000));
  CHECK(iv3->contains(rat_of(693147, 1000000)));
}

TEST_CASE("verify_IF base case accepts y − x²") {
  MapVec f = map_from_polys({X(2, 1) - X(2, 0) * X(2, 0)});
  std::shared_ptr<IFCert> cert;
  auto sd = verify_IF(f, 1, {Rat(1)}, {Rat(2)}, &cert);
  CHECK(sd.accepted(8));
  REQUIRE(cert != nullptr);
  CHECK(cert->sigma == 1);
}

TEST_CASE("verify_IF stays undecided on y² − x") {
  MapVec f = map_from_polys({X(2, 1) * X(2, 1) - X(2, 0)});
  auto sd = verify_IF(f, 1, {Rat(1)}, {Rat(1)});
  CHECK_FALSE(sd.accepted(50));
}

TEST_CASE("verify_IF inductive step on a 2-equation system") {
  // f = (y1 − x, y2 − y1²) on |x| ≤ 1, |y1| ≤ 2, |y2| ≤ 2; g(x) = (x, x²)
  size_t n = 3;
  Poly y1 = X(n, 1), y2 = X(n, 2), x = X(n, 0);
  MapVec f = map_from_polys({y1 - x, y2 - y1 * y1});
  std::shared_ptr<IFCert> cert;
  auto sd = verify_IF(f, 1, {Rat(1)}, {Rat(2), Rat(2)}, &cert);
  CHECK(sd.accepted(32));
  REQUIRE(cert != nullptr);
  CHECK(cert->n == 2);
  REQUIRE(cert->base != nullptr);
  REQUIRE(cert->rest != nullptr);

  MapVec g = implicit_map(cert);
  REQUIRE(g.m() == 2);
  // g(1/2) = (1/2, 1/4) within 10^-6
  RationalBox pt({RationalInterval::point(rat_of(1, 2))});
  auto g1 = approx_query(g, 0, {0}, pt, 40);
  auto g2 = approx_query(g, 1, {0}, pt, 40);
  REQUIRE(g1.has_value());
  REQUIRE(g2.has_value());
  CHECK(g1->contains(rat_of(1, 2)));
  CHECK(g2->contains(rat_of(1, 4)));
  CHECK(g1->width() < rat_of(1, 1000000));
  CHECK(g2->width() < rat_of(1, 1000000));
}

TEST_CASE("implicit_map from y − x² certificate") {
  MapVec f = map_from_polys({X(2, 1) - X(2, 0) * X(2, 0)});
  std::shared_ptr<IFCert> cert;
  REQUIRE(verify_IF(f, 1, {Rat(1)}, {Rat(2)}, &cert).accepted(8));
  MapVec g = implicit_map(cert);
  // g([0,1/2]) ⊆ (−1/16, 5/16)
  RationalBox B({RationalInterval::closed(rat_of(0), rat_of(1, 2))});
  auto iv = approx_query(g, 0, {0}, B, 30);
  REQUIRE(iv.has_value());
  CHECK(iv->subset_of(RationalInterval::open(rat_of(-1, 16), rat_of(5, 16))));
  // g'(1/2) interval contains 1
  RationalBox pt({RationalInterval::point(rat_of(1, 2))});
  auto dv = approx_query(g, 0, {1}, pt, 30);
  REQUIRE(dv.has_value());
  CHECK(dv->contains(rat_of(1)));
  CHECK(dv->width() < rat_of(1, 1000));

  // residual: f(x, g(x)) encloses 0 with shrinking width
  MapVec idg{1, {node_var(1, 0), g.comps[0]}};
  MapVec resid = compose_maps(f, idg);
  Rat prev_width(-1);
  for (Fuel fl : {6, 20, 40}) {
    auto rv = approx_query(resid, 0, {0}, pt, fl);
    REQUIRE(rv.has_value());
    CHECK(rv->contains(rat_of(0)));
    if (prev_width >= 0) CHECK(rv->width() <= prev_width);
    prev_width = rv->width();
  }
  CHECK(prev_width < rat_of(1, 1000000000));
}

TEST_CASE("IF locality: acceptance on a grid of nearby radii") {
  MapVec f = map_from_polys({X(2, 1) - X(2, 0) * X(2, 0)});
  for (long dr : {-1, 0, 1}) {
    for (long ds : {-1, 0, 1}) {
      Rat r = Rat(1) + Rat(dr, 8), s = Rat(2) + Rat(ds, 8);
      r.canonicalize();
      s.canonicalize();
      CHECK(verify_IF(f, 1, {r}, {s}).accepted(10));
    }
  }
}

TEST_CASE("chain-rule consistency on random polynomial builds") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<long> c(-3, 3);
  for (int t = 0; t < 50; ++t) {
    Poly f(2), g1(2), g2(2);
    for (unsigned a = 0; a <= 2; ++a)
      for (unsigned b = 0; a + b <= 2; ++b) {
        f.add_term({a, b}, Rat(c(rng)));
        g1.add_term({a, b}, Rat(c(rng)));
        g2.add_term({a, b}, Rat(c(rng)));
      }
    MapVec F = map_from_polys({f});
    MapVec G = map_from_polys({g1, g2});
    MapVec FG = compose_maps(F, G);
    Poly exact = f.compose({g1, g2});
    for (int q = 0; q < 4; ++q) {
      std::vector<Rat> x{Rat(c(rng), 2), Rat(c(rng), 2)};
      x[0].canonicalize();
      x[1].canonicalize();
      RationalBox pt = RationalBox::point(x);
      for (Expo alpha : {Expo{0, 0}, Expo{1, 0}, Expo{0, 1}, Expo{1, 1}}) {
        auto iv = approx_query(FG, 0, alpha, pt, 2);
        REQUIRE(iv.has_value());
        CHECK(iv->contains(exact.deriv_multi(alpha).eval(x)));
      }
    }
  }
}

TEST_CASE("verify_IF_box recentres correctly") {
  // f(x,y) = y − x on A=[1,2], B=[0,3]: solvable, g(x)=x
  MapVec f = map_from_polys({X(2, 1) - X(2, 0)});
  RationalBox A({RationalInterval::closed(rat_of(1), rat_of(2))});
  RationalBox B({RationalInterval::closed(rat_of(0), rat_of(3))});
  std::shared_ptr<IFCert> cert;
  CHECK(verify_IF_box(f, A, B, &cert).accepted(10));
  MapVec g = implicit_map_box(cert, A, B);
  RationalBox pt({RationalInterval::point(rat_of(3, 2))});
  auto iv = approx_query(g, 0, {0}, pt, 40);
  REQUIRE(iv.has_value());
  CHECK(iv->contains(rat_of(3, 2)));
  CHECK(iv->width() < rat_of(1, 1000000));
}
