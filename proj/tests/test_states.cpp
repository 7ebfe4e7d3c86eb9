#include <cmath>
#include <random>

#include "doctest.h"
#include "lrdyn/states.hpp"
#include "oracles.hpp"
#include "random_models.hpp"

using namespace lrdyn;

namespace
{
    Mat occupation_cell(double p)
    {
        Mat c = Mat::Zero(2, 2);
        c(0, 0) = 1.0 - p;
        c(1, 1) = p;
        return c;
    }

    /// Random even density on the Fock space of `modes` modes.
    Mat random_even_density(std::mt19937_64& rng, int modes)
    {
        const Mat g = testgen::random_even_matrix(rng, modes, false);
        Mat d = g * g.adjoint();
        return d / d.trace();
    }
} // namespace

TEST_SUITE("states")
{
    TEST_CASE("product state examples")
    {
        auto sp = make_space(Box(1, 1), 2);
        Mat vac = Mat::Zero(4, 4);
        vac(0, 0) = 1.0;
        const auto v = product_state(vac, sp, PeriodVector::ones(1));
        for (const auto& x : sp->sites())
            for (int s = 0; s < 2; ++s)
                CHECK(std::abs(expectation(v, number_op(sp, x, s))) <= 1e-15);

        const auto mixed = product_state(Mat(Mat::Identity(4, 4) / 4.0), sp, PeriodVector::ones(1));
        const auto traceless = number_op(sp, {0}, 1) - 0.5 * FockOperator::identity(sp);
        CHECK(std::abs(expectation(mixed, traceless)) <= 1e-15);
        CHECK(std::abs(expectation(mixed, creator(sp, {0}, 0) * annihilator(sp, {1}, 0))) <= 1e-15);

        const double theta = 0.7;
        Vec cell = Vec::Zero(4);
        cell(0) = std::cos(theta);
        cell(3) = std::sin(theta);
        const auto pure = product_state(cell, sp, PeriodVector::ones(1));
        const auto dens = product_state(Mat(cell * cell.adjoint()), sp, PeriodVector::ones(1));
        for (const auto& x : sp->sites())
        {
            const auto b = annihilator(sp, x, SPIN_DOWN) * annihilator(sp, x, SPIN_UP);
            CHECK(std::abs(expectation(pure, b) - std::sin(theta) * std::cos(theta)) <= 1e-14);
            CHECK(std::abs(expectation(dens, b) - std::sin(theta) * std::cos(theta)) <= 1e-14);
        }
        CHECK(pure.tag() == LatticeState::Tag::product);
        CHECK(verify_periodicity(pure, PeriodVector::ones(1)));
    }

    TEST_CASE("product state errors")
    {
        auto sp = make_space(Box(1, 1), 1);
        CHECK_THROWS(product_state(Mat(Mat::Identity(4, 4) / 4.0), sp, PeriodVector::ones(1)));
        Mat odd = Mat::Constant(2, 2, 0.5);
        CHECK_THROWS(product_state(odd, sp, PeriodVector::ones(1)));
        Vec two = Vec::Zero(4);
        two(3) = 1.0;
        CHECK_THROWS_AS(product_state(two, sp, PeriodVector({2})), GeometryError);
        Vec half = Vec::Zero(2);
        half << std::sqrt(0.5), std::sqrt(0.5);
        CHECK_THROWS(product_state(half, sp, PeriodVector::ones(1)));
        CHECK_THROWS(LatticeState::density(sp, Mat::Identity(8, 8), PeriodVector::ones(1)));
    }

    TEST_CASE("expectations")
    {
        std::mt19937_64 rng(6);
        auto sp = make_space(Box(1, 1), 1);
        const auto rho = product_state(random_even_density(rng, 2), sp, PeriodVector({2}));
        CHECK(std::abs(expectation(rho, FockOperator::identity(sp)) - 1.0) <= 1e-12);
        const auto a = creator(sp, {0}) * annihilator(sp, {1}) + cplx(0.3, 0.2) * number_op(sp, {-1});
        const auto b = number_op(sp, {1}) * number_op(sp, {0});
        CHECK(std::abs(expectation(rho, a.adjoint()) - std::conj(expectation(rho, a))) <= 1e-12);
        CHECK(std::abs(expectation(rho, a + cplx(2.0) * b) - expectation(rho, a) - 2.0 * expectation(rho, b)) <= 1e-12);
        const auto h = a + a.adjoint();
        CHECK(std::abs(expectation(rho, h).imag()) <= 1e-12);
        // periodic states are even
        CHECK(std::abs(expectation(rho, annihilator(sp, {0}))) <= 1e-10);
        CHECK(std::abs(expectation(rho, creator(sp, {1}) * number_op(sp, {0}))) <= 1e-10);
    }

    TEST_CASE("space averages")
    {
        auto sp = make_space(Box(1, 3), 1);
        const auto one = FockOperator::identity(sp);
        CHECK(spectral_norm(Mat(space_average(one, sp, 2, PeriodVector::ones(1)).dense() - one.dense())) <= 1e-14);
        const auto a = creator(sp, {0}) * annihilator(sp, {1}) + number_op(sp, {0});
        const auto avg = space_average(a, sp, 2, PeriodVector::ones(1));
        CHECK(avg.norm() <= a.norm() + 1e-12);
        CHECK_THROWS_AS(space_average(a, sp, 3, PeriodVector::ones(1)), GeometryError);
    }

    TEST_CASE("ergodicity defect of product states")
    {
        const double p = 0.3;
        for (int L = 1; L <= 4; ++L)
        {
            auto sp = make_space(Box(1, L), 1);
            const auto rho = product_state(occupation_cell(p), sp, PeriodVector::ones(1));
            const auto n0 = number_op(sp, {0});
            CHECK(ergodicity_defect(rho, n0, L, PeriodVector::ones(1)) ==
                  doctest::Approx(p * (1 - p) / (2 * L + 1)).epsilon(1e-12));
            CHECK(std::abs(ergodicity_defect(rho, FockOperator::identity(sp), L, PeriodVector::ones(1))) <= 1e-12);
        }
    }

    TEST_CASE("ergodicity defect of a two-point mixture")
    {
        const double p1 = 0.2, p2 = 0.9, lambda = 0.35;
        for (int L = 1; L <= 3; ++L)
        {
            auto sp = make_space(Box(1, L), 1);
            Mixture mix({lambda, 1 - lambda}, {product_state(occupation_cell(p1), sp, PeriodVector::ones(1)),
                                               product_state(occupation_cell(p2), sp, PeriodVector::ones(1))});
            const double n = 2 * L + 1;
            const double floor = lambda * (1 - lambda) * (p1 - p2) * (p1 - p2);
            const double exact = floor + (lambda * p1 * (1 - p1) + (1 - lambda) * p2 * (1 - p2)) / n;
            const double d = ergodicity_defect(mix, number_op(sp, {0}), L, PeriodVector::ones(1));
            CHECK(d == doctest::Approx(exact).epsilon(1e-12));
            CHECK(d >= floor);
            CHECK(mix.components_distinct());
        }
    }

    TEST_CASE("mixture validation")
    {
        auto sp = make_space(Box(1, 0), 1);
        const auto a = product_state(occupation_cell(0.2), sp, PeriodVector::ones(1));
        CHECK_THROWS(Mixture({0.5, 0.4}, {a, a}));
        CHECK_THROWS(Mixture({1.2, -0.2}, {a, a}));
        CHECK_FALSE(Mixture({0.5, 0.5}, {a, a}).components_distinct());
        const auto s = Mixture({0.25, 0.75}, {a, product_state(occupation_cell(0.6), sp, PeriodVector::ones(1))}).as_state();
        CHECK(s.tag() == LatticeState::Tag::mixture);
        CHECK(std::abs(expectation(s, number_op(sp, {0})) - 0.5) <= 1e-14);
    }

    TEST_CASE("coarse graining")
    {
        auto sp = make_space(Box(1, 2), 1);
        Mat cell = Mat::Zero(4, 4);
        cell(1, 1) = 1.0; // site 0 occupied, site 1 empty
        const auto rho = product_state(cell, sp, PeriodVector({2}));

        const auto same = coarse_grain(rho, PeriodVector({2}), PeriodVector({2}));
        REQUIRE(same.size() == 1);
        CHECK((same.component(0).density_matrix() - rho.density_matrix()).norm() <= 1e-14);

        const auto uniform = coarse_grain(rho, PeriodVector({2}), PeriodVector({1}));
        CHECK(uniform.size() == 2);
        for (const auto& x : sp->sites())
            CHECK(std::abs(uniform.expectation(number_op(sp, x)) - 0.5) <= 1e-14);
        CHECK(verify_periodicity(uniform.as_state(), PeriodVector({1})));
        CHECK_FALSE(verify_periodicity(rho, PeriodVector({1})));
        CHECK_THROWS(coarse_grain(rho, PeriodVector({2}), PeriodVector({3})));
    }

    TEST_CASE("coarse graining keeps energy densities")
    {
        std::mt19937_64 rng(12);
        for (int k = 0; k < 6; ++k)
        {
            const int l1 = 2 + k % 2;
            const auto phi = testgen::random_interaction(rng, 1, 1, k % 2 == 0);
            auto sp = make_space(Box(1, l1), 1);
            const auto rho = product_state(random_even_density(rng, l1), sp, PeriodVector({l1}));
            const auto mix = coarse_grain(rho, PeriodVector({l1}), PeriodVector({1}));
            const cplx before = expectation(rho, energy_density(phi, PeriodVector({l1})).op);
            const cplx after = mix.expectation(instantiate(energy_density(phi, PeriodVector({1})).op, sp));
            CHECK(std::abs(before - after) <= 1e-9);
        }
    }
}
