#include <catch2/catch_amalgamated.hpp>

#include "mapq/polynomial.hpp"

using namespace mapq;
using Catch::Approx;

TEST_CASE("polynomial evaluation and arithmetic") {
    Poly p({1.0, 2.0, 3.0});  // 1 + 2z + 3z^2
    CHECK(p(2.0).real() == Approx(17.0));
    Poly q = p * Poly::linear_root(1.0);
    CHECK(std::abs(q(1.0)) < 1e-14);
    CHECK(q.degree() == 3);
    Poly d = p.derivative();
    CHECK(d(0.5).real() == Approx(5.0));
}

TEST_CASE("companion-matrix roots recover known factorizations") {
    Poly p = Poly::linear_root(1.0) * Poly::linear_root(2.0) * Poly::linear_root(cplx(0, 3)) *
             Poly::linear_root(cplx(0, -3));
    auto rts = p.roots();
    REQUIRE(rts.size() == 4);
    for (auto r : rts) CHECK(std::abs(p(r)) < 1e-9);
    double prod = 1.0;
    for (auto r : rts) prod *= std::abs(r);
    CHECK(prod == Approx(18.0).margin(1e-8));
}

TEST_CASE("deflation removes a root exactly") {
    Poly p = Poly::linear_root(2.0) * Poly({1.0, 1.0, 1.0});
    Poly q = p.deflate(2.0);
    CHECK(q.degree() == 2);
    CHECK(std::abs(q(0.0) - cplx(1.0)) < 1e-12);
}

TEST_CASE("inverse-DFT interpolation recovers polynomial coefficients") {
    Poly p({3.0, cplx(0, -1), 0.5, 2.0, cplx(1.0, 1.0)});
    Poly q = interpolate_on_circle([&](cplx z) { return p(z); }, 7, 1.7);
    REQUIRE(q.degree() == p.degree());
    for (int k = 0; k <= p.degree(); ++k)
        CHECK(std::abs(q.coeffs()[k] - p.coeffs()[k]) < 1e-10);
}

TEST_CASE("rational function evaluation and derivative") {
    RationalFn r{Poly({1.0}), Poly({1.0, 1.0})};  // 1/(1+z)
    CHECK(r(1.0).real() == Approx(0.5));
    CHECK(r.derivative_at(1.0).real() == Approx(-0.25));
}
