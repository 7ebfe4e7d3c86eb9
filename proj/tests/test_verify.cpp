#include <atomic>
#include <cmath>
#include <random>

#include "doctest.h"
#include "lrdyn/verify.hpp"
#include "oracles.hpp"

using namespace lrdyn;

namespace
{
    Vec pair_cell(double theta, double phase = 0.0)
    {
        Vec v = Vec::Zero(4);
        v(0) = std::cos(theta);
        v(3) = std::sin(theta) * std::exp(cplx(0.0, phase));
        return v;
    }

    ProductSpec pair_spec(double theta, double phase = 0.0)
    {
        return ProductSpec{PeriodVector::ones(1), Site{0}, std::nullopt, pair_cell(theta, phase)};
    }

    ProductSpec occupation_spec(double p)
    {
        Mat c = Mat::Zero(2, 2);
        c(0, 0) = 1.0 - p;
        c(1, 1) = p;
        return ProductSpec{PeriodVector::ones(1), Site{0}, c, std::nullopt};
    }

    LocalOperator pairing_at(const Site& x)
    {
        return LocalOperator::annihilator(x, SPIN_DOWN) * LocalOperator::annihilator(x, SPIN_UP);
    }
} // namespace

TEST_SUITE("verify")
{
    TEST_CASE("parallel_for")
    {
        for (int threads : {1, 3})
        {
            std::vector<int> out(17, 0);
            parallel_for(out.size(), threads, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
            for (std::size_t i = 0; i < out.size(); ++i)
                CHECK(out[i] == static_cast<int>(i * i));
        }
        std::atomic<int> seen{0};
        CHECK_THROWS_WITH(parallel_for(8, 2,
                                       [&](std::size_t i) {
                                           ++seen;
                                           if (i == 3 || i == 6)
                                               throw std::runtime_error("index " + std::to_string(i));
                                       }),
                          "index 3");
        CHECK(seen == 8);
    }

    TEST_CASE("bound check, no evolution")
    {
        TimeDependentModel m(build_bcs_model(1, 1.0, 0.5, 0.5));
        const Box box(1, 1);
        auto sp = make_space(box, 2);
        const auto a = instantiate(LocalOperator::creator({0}, 0) * LocalOperator::annihilator({1}, 0), sp);
        const auto r = lr_bound_check(m, m.base.phi, a, box, 0.4, 0.4);
        CHECK(r.pass);
        CHECK(r.m_integral == 0.0);
        const double bound = 2.0 * 2 * a.norm() * w_norm(m.base.phi, m.base.decay, box);
        CHECK(r.rhs == doctest::Approx(bound).epsilon(1e-12));
        CHECK(r.lhs == doctest::Approx(commutator(a, local_energy(m.base.phi, sp)).norm()).epsilon(1e-9));

        const auto one = lr_bound_check(m, m.base.phi, FockOperator::identity(sp), box, 0.0, 0.7);
        CHECK(one.lhs <= 1e-12);
        CHECK(one.pass);
        CHECK_THROWS_AS(lr_bound_check(m, m.base.phi, a, Box(1, 2), 0.0, 0.5), GeometryError);
    }

    TEST_CASE("bound check on BCS with random local A")
    {
        std::mt19937_64 rng(41);
        std::normal_distribution<double> g;
        TimeDependentModel m(build_bcs_model(1, 1.0, 0.5, 0.3));
        const Box box(1, 1);
        auto sp = make_space(box, 2);
        for (int k = 0; k < 3; ++k)
        {
            const LocalOperator a = LocalOperator::creator({0}, 0) * LocalOperator::annihilator({0}, 1) * cplx(g(rng), g(rng)) +
                                    LocalOperator::number({1}, 0) * cplx(g(rng), 0.0);
            const auto r = lr_bound_check(m, m.base.phi, instantiate(a, sp), box, 0.2, 0.7);
            CHECK(r.pass);
            CHECK(r.ratio <= 1.0);
            CHECK(r.support_size == a.support().size());
        }
    }

    TEST_CASE("m_norm_at follows the schedules")
    {
        TimeDependentModel m(build_bcs_model(1, 1.0, 0.5));
        m.phi_schedule = Schedule::linear(1.0, 1.0);
        m.atom_schedules = {Schedule::constant(-2.0)};
        const Box box(1, 1);
        const double f1 = decay_constants(m.base.decay, box).normF1;
        CHECK(m_norm_at(m, box, f1, 1.0) == doctest::Approx(2 * 1.0 + 4 * f1 * 2.0).epsilon(1e-12));
    }

    TEST_CASE("energy density convergence")
    {
        const auto rows = energy_density_convergence(onsite_number(1, 1, 0.8), occupation_spec(0.3),
                                                     LocalOperator::scalar(1.0), {0, 1, 2});
        for (const auto& r : rows)
            CHECK(r.gap <= 1e-14);

        const double p = 0.3;
        const auto nn = energy_density_convergence(nn_density(1, 1, 1.0), occupation_spec(p), LocalOperator::scalar(1.0),
                                                   {1, 2, 3, 4});
        for (const auto& r : nn)
            CHECK(r.gap == doctest::Approx(p * p / (2 * r.L + 1)).epsilon(1e-12));

        const auto local = energy_density_convergence(nn_density(1, 1, 1.0) + nn_hopping(1, 1, 0.5), occupation_spec(p),
                                                      LocalOperator::number({0}), {1, 2, 3});
        for (std::size_t i = 1; i < local.size(); ++i)
            CHECK(local[i].gap < local[i - 1].gap);
    }

    TEST_CASE("energy density radius")
    {
        CHECK(energy_density_radius(build_bcs_model(1, 1.0, 0.5), PeriodVector::ones(1)) == 0);
        const auto f = DecayFunction::exponential(1.0);
        LongRangeModel m{onsite_number(1, 1, 1.0), {make_atom(1.0, {nn_hopping(1, 1, 1.0)}, f)}, f};
        CHECK(energy_density_radius(m, PeriodVector::ones(1)) == 1);
    }

    TEST_CASE("short-range models: both dynamics coincide")
    {
        TimeDependentModel m(build_bcs_model(1, 0.0, 0.5, 0.6));
        const auto rep = main_convergence(m, pair_spec(0.5), pairing_at({0}), LocalOperator::scalar(1.0), 0.0, 0.6, {0, 1, 2});
        REQUIRE(rep.rows.size() == 3);
        for (const auto& r : rep.rows)
            CHECK(r.gap <= 2 * UNITARITY_TOL);
        CHECK(rep.flow_converged);
    }

    TEST_CASE("no evolution means no gap")
    {
        TimeDependentModel m(build_bcs_model(1, 1.0, 0.5));
        const auto rep = main_convergence(m, pair_spec(0.5), pairing_at({0}), LocalOperator::scalar(1.0), 0.3, 0.3, {0, 1});
        for (const auto& r : rep.rows)
        {
            CHECK(r.gap == 0.0);
            CHECK(r.full_steps == 0);
        }
    }

    TEST_CASE("vector and density paths agree")
    {
        TimeDependentModel m(build_bcs_model(1, 1.0, 0.5));
        const auto spec = pair_spec(0.6, 0.2);
        const LocalOperator b = LocalOperator::scalar(1.0) + LocalOperator::number({0}, SPIN_UP);
        const auto vec = main_convergence(m, spec, pairing_at({0}), b, 0.0, 0.5, {0, 1});
        ConvergenceConfig cfg;
        cfg.force_density = true;
        const auto den = main_convergence(m, spec, pairing_at({0}), b, 0.0, 0.5, {0, 1}, cfg);
        REQUIRE(vec.rows.size() == den.rows.size());
        for (std::size_t i = 0; i < vec.rows.size(); ++i)
        {
            CHECK(std::abs(vec.rows[i].full - den.rows[i].full) <= 1e-9);
            CHECK(std::abs(vec.rows[i].effective - den.rows[i].effective) <= 1e-9);
        }
    }

    TEST_CASE("sweeps skip sizes over the mode budget")
    {
        TimeDependentModel m(build_bcs_model(1, 1.0, 0.5));
        ConvergenceConfig cfg;
        cfg.force_density = true;
        const auto rep = main_convergence(m, pair_spec(0.5), pairing_at({0}), LocalOperator::scalar(1.0), 0.0, 0.1, {0, 5}, cfg);
        CHECK(rep.rows.size() == 1);
        CHECK(rep.skipped == std::vector<int>{5});
    }

    TEST_CASE("degenerate mixtures")
    {
        TimeDependentModel m(build_bcs_model(1, 1.0, 0.5));
        const auto spec = pair_spec(0.5, 0.3);
        const auto a = pairing_at({0});
        const auto b = LocalOperator::scalar(1.0);
        const auto single = main_convergence(m, spec, a, b, 0.0, 0.5, {0, 1});
        const auto one = mixture_convergence({1.0}, {spec}, m, a, b, 0.0, 0.5, {0, 1});
        const auto split = mixture_convergence({0.5, 0.5}, {spec, spec}, m, a, b, 0.0, 0.5, {0, 1});
        for (std::size_t i = 0; i < single.rows.size(); ++i)
        {
            CHECK(one.mixed[i].full == single.rows[i].full);
            CHECK(one.mixed[i].effective == single.rows[i].effective);
            CHECK(one.mixed[i].gap == single.rows[i].gap);
            CHECK(split.mixed[i].full == single.rows[i].full);
            CHECK(split.mixed[i].gap == single.rows[i].gap);
        }
    }

    TEST_CASE("flow composition")
    {
        TimeDependentModel m(build_bcs_model(1, 1.0, 0.5, 0.4));
        auto sp = make_space(Box(1, 0), 2);
        const auto rho = product_state(pair_cell(0.5, 0.1), sp, PeriodVector::ones(1));
        SolverConfig cfg;
        for (int split : {1, 250, 377})
            CHECK(flow_composition_defect(m, rho, make_grid(0.0, 1.0, 500), split, cfg) <= 5 * cfg.tol);
    }

    TEST_CASE("random draws are reproducible and within budget")
    {
        std::mt19937_64 a(99), b(99);
        for (int k = 0; k < 20; ++k)
        {
            const auto da = random_lr_draw(a, 7);
            const auto db = random_lr_draw(b, 7);
            CHECK(da.label == db.label);
            CHECK(da.s == db.s);
            CHECK(da.t == db.t);
            CHECK(static_cast<int>(da.box.size()) * da.model.base.nspin() <= 7);
            CHECK(std::abs(da.t - da.s) <= 1.0);
            CHECK(model_selfadjoint_check(da.model.base));
        }
    }
}
