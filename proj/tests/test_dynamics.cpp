#include <random>

#include "doctest.h"
#include "lrdyn/dynamics.hpp"
#include "oracles.hpp"
#include "random_models.hpp"

using namespace lrdyn;

namespace
{
    TimeDependentModel scheduled_bcs()
    {
        TimeDependentModel m(build_bcs_model(1, 1.0, 0.5, 0.7));
        m.phi_schedule = Schedule::sinusoidal(1.0, 0.5, 3.0);
        m.atom_schedules = {Schedule::linear(1.0, -0.3)};
        return m;
    }

    double dist(const FockOperator& a, const FockOperator& b) { return spectral_norm(Mat(a.dense() - b.dense())); }

    FockOperator tau(const TimeDependentHamiltonian& h, double s, double t, const FockOperator& a)
    {
        const int n = std::max(1, static_cast<int>(std::ceil(std::abs(t - s) / 1e-3)));
        return heisenberg(propagate(h, make_grid(s, t, n), Method::cf4), a);
    }
} // namespace

TEST_SUITE("dynamics")
{
    TEST_CASE("grids")
    {
        const auto g = make_grid(0.0, 1.0, 4);
        CHECK(g.step() == 0.25);
        CHECK(g.nodes().size() == 5);
        CHECK(g.node(4) == 1.0);
        CHECK_THROWS(make_grid(0.0, 1.0, 0));
        CHECK_THROWS(make_grid(0.0, std::nan(""), 3));
    }

    TEST_CASE("derivation")
    {
        auto sp = make_space(Box(1, 1), 2);
        const auto m = build_bcs_model(1, 1.0, 0.5, 0.4);
        const auto u = local_energy_model(m, sp);
        CHECK(derivation(m, FockOperator::identity(sp)).matrix().norm() == 0.0);
        CHECK(derivation(u, u).norm() <= 1e-12);
        std::mt19937_64 rng(3);
        const auto a = instantiate(LocalOperator::creator({0}, 0) * LocalOperator::annihilator({1}, 1) * cplx(0.3, 0.8) +
                                       LocalOperator::number({-1}, 1),
                                   sp);
        CHECK(dist(derivation(m, a.adjoint()), derivation(m, a).adjoint()) <= 1e-12);
        const Mat direct = I_UNIT * (u.dense() * a.dense() - a.dense() * u.dense());
        CHECK((derivation(m, a).dense() - direct).norm() <= 1e-12);
    }

    TEST_CASE("trivial evolutions")
    {
        auto sp = make_space(Box(1, 1), 1);
        LongRangeModel zero{Interaction::zero(1, 1), {}, DecayFunction::exponential(1.0)};
        const auto w = propagate(model_hamiltonian(zero, sp), 0.0, 1.0);
        CHECK((w.matrix() - Mat::Identity(8, 8)).norm() <= 1e-15);

        auto sp2 = make_space(Box(1, 1), 2);
        const auto h = model_hamiltonian(scheduled_bcs(), sp2);
        LocalOperator n_total;
        for (const auto& x : sp2->sites())
            n_total += LocalOperator::number(x, 0) + LocalOperator::number(x, 1);
        // hopping and pairing both conserve the particle number
        const auto n = instantiate(n_total, sp2);
        CHECK(dist(heisenberg(propagate(h, 0.0, 0.7), n), n) <= 1e-9);
        const auto same = propagate(h, 0.4, 0.4);
        CHECK((same.matrix() - Mat::Identity(64, 64)).norm() == 0.0);
    }

    TEST_CASE("autonomous one-site BCS against the eigendecomposition")
    {
        auto sp = make_space(Box(1, 0), 2);
        const auto m = build_bcs_model(1, 1.2, 0.35);
        const Mat h = oracle::bcs_energy(1, 1.2, 0.35);
        const Mat u = oracle::evolution(h, 0.9);
        const auto a = annihilator(sp, {0}, SPIN_UP);
        const Mat expect = u.adjoint() * oracle::annihilator(2, 0) * u;
        for (Method method : {Method::cf4, Method::exact})
        {
            const auto p = propagate(model_hamiltonian(m, sp), 0.0, 0.9, method);
            CHECK(spectral_norm(Mat(heisenberg(p, a).dense() - expect)) <= 1e-8);
        }
    }

    TEST_CASE("exact method needs an autonomous Hamiltonian")
    {
        auto sp = make_space(Box(1, 0), 2);
        CHECK_THROWS(propagate(model_hamiltonian(scheduled_bcs(), sp), 0.0, 1.0, Method::exact));
        CHECK_THROWS_AS(propagate(model_hamiltonian(LongRangeModel{onsite_number(1, 1, 1.0), {}}, make_space(Box(1, 6), 1)),
                                  0.0, 0.1, Method::exact),
                        ResourceLimit);
    }

    TEST_CASE("heisenberg is a unital *-automorphism")
    {
        auto sp = make_space(Box(1, 1), 2);
        const auto p = propagate(model_hamiltonian(scheduled_bcs(), sp), 0.2, 1.1);
        CHECK(p.info().unitarity_defect <= UNITARITY_TOL);
        const auto one = FockOperator::identity(sp);
        CHECK(dist(heisenberg(p, one), one) <= 1e-9);
        const auto a = annihilator(sp, {0}, 1) + 0.5 * creator(sp, {1}, 0);
        const auto b = number_op(sp, {-1}, 0) * annihilator(sp, {1}, 1);
        CHECK(heisenberg(p, a).norm() == doctest::Approx(a.norm()).epsilon(1e-9));
        CHECK(dist(heisenberg(p, a.adjoint()), heisenberg(p, a).adjoint()) <= 1e-9);
        CHECK(dist(heisenberg(p, a * b), heisenberg(p, a) * heisenberg(p, b)) <= 1e-9);
    }

    TEST_CASE("cocycle")
    {
        auto sp = make_space(Box(1, 1), 2);
        const auto h = model_hamiltonian(scheduled_bcs(), sp);
        const auto a = annihilator(sp, {0}, SPIN_UP);
        CHECK(cocycle_defect(h, 0.3, 0.3, 1.1, a) <= 1e-14);
        CHECK(cocycle_defect(h, 0.3, 1.1, 1.1, a) <= 1e-14);
        std::mt19937_64 rng(29);
        std::uniform_real_distribution<double> u(0.0, 2.0);
        for (int k = 0; k < 3; ++k)
            CHECK(cocycle_defect(h, u(rng), u(rng), u(rng), a) <= 1e-7);
    }

    TEST_CASE("both Cauchy problems by central differences")
    {
        auto sp = make_space(Box(1, 1), 2);
        const auto m = scheduled_bcs();
        const auto h = model_hamiltonian(m, sp);
        const auto a = creator(sp, {0}, 0) * annihilator(sp, {1}, 1) + number_op(sp, {-1}, 1);
        const double s = 0.2, t = 0.8, dh = 1e-4;

        const Mat dt = (tau(h, s, t + dh, a).dense() - tau(h, s, t - dh, a).dense()) / (2 * dh);
        const Mat dt_expect = tau(h, s, t, derivation(m.at(t), a)).dense();
        CHECK(spectral_norm(Mat(dt - dt_expect)) <= 1e-4 * spectral_norm(dt_expect));

        const Mat ds = (tau(h, s + dh, t, a).dense() - tau(h, s - dh, t, a).dense()) / (2 * dh);
        const Mat ds_expect = -derivation(m.at(s), tau(h, s, t, a)).dense();
        CHECK(spectral_norm(Mat(ds - ds_expect)) <= 1e-4 * spectral_norm(ds_expect));
    }

    TEST_CASE("fourth order convergence")
    {
        auto sp = make_space(Box(1, 1), 2);
        const auto h = model_hamiltonian(scheduled_bcs(), sp);
        const auto a = annihilator(sp, {0}, SPIN_UP);
        const Mat ref = heisenberg(propagate(h, make_grid(0, 1, 2048), Method::cf4), a).dense();
        double prev = 0.0;
        for (int n : {16, 32, 64})
        {
            const double err = spectral_norm(Mat(heisenberg(propagate(h, make_grid(0, 1, n), Method::cf4), a).dense() - ref));
            if (prev > 0.0)
                CHECK(prev / err >= 8.0);
            prev = err;
        }
    }

    TEST_CASE("vector and density evolution agree with the propagator")
    {
        auto sp = make_space(Box(1, 1), 1);
        TimeDependentModel m(LongRangeModel{nn_hopping(1, 1, 0.8) + onsite_number(1, 1, 0.3), {}, DecayFunction::exponential(1.0)});
        m.phi_schedule = Schedule::linear(1.0, 0.5);
        const auto h = model_hamiltonian(m, sp);
        const auto grid = make_grid(0.0, 1.0, 200);
        const Mat w = propagate(h, grid, Method::cf4).matrix();
        Vec psi = Vec::Zero(8);
        psi(3) = 1.0;
        int calls = 0;
        const Vec out = evolve_vector(h, grid, psi, [&](int, double, const Vec&) { ++calls; });
        CHECK(calls == 201);
        CHECK((out - w * psi).norm() <= 1e-12);
        const Mat sigma = psi * psi.adjoint();
        CHECK((evolve_density(h, grid, sigma) - w * sigma * w.adjoint()).norm() <= 1e-12);
    }
}
