#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "lrdyn/meanfield.hpp"
#include "lrdyn/verify.hpp"
#include "oracles.hpp"
#include "random_models.hpp"

using namespace lrdyn;

namespace
{
    constexpr double GAMMA = 1.0, MU = 0.5;

    Vec pair_cell(double theta, double phase)
    {
        Vec v = Vec::Zero(4);
        v(0) = std::cos(theta);
        v(3) = std::sin(theta) * std::exp(cplx(0.0, phase));
        return v;
    }

    LocalOperator pairing_at(const Site& x)
    {
        return LocalOperator::annihilator(x, SPIN_DOWN) * LocalOperator::annihilator(x, SPIN_UP);
    }

    FlowTrajectory bcs_flow(double theta, double phase, double t, int steps, const SolverConfig& cfg = {})
    {
        TimeDependentModel m(build_bcs_model(1, GAMMA, MU));
        auto sp = make_space(Box(1, 0), 2);
        return solve_self_consistency(m, product_state(pair_cell(theta, phase), sp, PeriodVector::ones(1)),
                                      make_grid(0.0, t, steps), cfg);
    }
} // namespace

TEST_SUITE("meanfield")
{
    TEST_CASE("sandwich")
    {
        const Interaction p = pairing_creation(1), q = pairing_annihilation(1);
        CHECK(approx_equal(sandwich({cplx(3.0)}, {p}), p, 0.0));
        CHECK(approx_equal(sandwich({0.0, 0.0}, {p, q}), Interaction::zero(1, 2), 1e-15));
        CHECK(approx_equal(sandwich({1.0, 1.0}, {p, q}), p + q, 1e-15));
        const cplx g0(0.2, 0.1), g1(-0.4, 0.3);
        CHECK(approx_equal(sandwich({g0, g1}, {p, q}), p.scaled(g1) + q.scaled(g0), 1e-15));
    }

    TEST_CASE("approximating interaction")
    {
        const auto m = build_bcs_model(1, GAMMA, MU);
        CHECK(approx_equal(approximating_interaction(LongRangeModel{m.phi, {}, m.decay}, {}), m.phi, 0.0));

        // factors (b^dag, b): the scalars are (conj Delta, Delta)
        const cplx delta(0.3, -0.2);
        const Interaction eff = approximating_interaction(m, {{std::conj(delta), delta}});
        const Interaction textbook =
            onsite_number(1, 2, -MU) + pairing_creation(1).scaled(-GAMMA * delta) +
            pairing_annihilation(1).scaled(-GAMMA * std::conj(delta));
        CHECK(approx_equal(eff, textbook, 1e-14));
        CHECK(eff.is_self_adjoint());
    }

    TEST_CASE("approximating interaction is bounded by the model norm")
    {
        std::mt19937_64 rng(31);
        for (int k = 0; k < 8; ++k)
        {
            const int nspin = 1 + k % 2;
            const auto f = DecayFunction::exponential(1.0);
            const auto m = testgen::random_model(rng, 1, nspin, f);
            const Box box(1, 2);
            auto sp = make_space(Box(1, std::max(1, energy_density_radius(m, PeriodVector::ones(1)))), nspin);
            Mat cell = Mat::Zero(1 << nspin, 1 << nspin);
            std::uniform_real_distribution<double> u(0.05, 1.0);
            for (Eigen::Index i = 0; i < cell.rows(); ++i)
                cell(i, i) = u(rng);
            cell /= cell.trace();
            const auto rho = product_state(cell, sp, PeriodVector::ones(1));
            AtomScalars g;
            for (const auto& a : m.atoms)
            {
                g.emplace_back();
                for (const auto& psi : a.factors)
                    g.back().push_back(expectation(rho, energy_density(psi, PeriodVector::ones(1)).op));
            }
            CHECK(w_norm(approximating_interaction(m, g), f, box) <= m_norm(m, box) + 1e-8);
        }
    }

    TEST_CASE("short-range flows need one iteration")
    {
        const auto base = build_bcs_model(1, 0.0, MU, 0.4);
        TimeDependentModel m(base);
        auto sp = make_space(Box(1, 1), 2);
        const auto rho = product_state(pair_cell(0.4, 0.0), sp, PeriodVector::ones(1));
        const auto f = solve_self_consistency(m, rho, make_grid(0.0, 0.5, 50));
        CHECK(f.max_window_iterations == 1);
        CHECK(f.labels.empty());
        CHECK(f.converged);
    }

    TEST_CASE("zero-length flows")
    {
        const auto f = bcs_flow(0.5, 0.2, 0.0, 1);
        CHECK(f.iterations == 0);
        CHECK(std::abs(f.scalars[0][1] - oracle::pseudospin_delta(GAMMA, MU, 0.5, 0.2, 0.0)) <= 1e-15);
    }

    TEST_CASE("pseudospin precession")
    {
        const double theta = std::numbers::pi / 6, phase = 0.3;
        const auto f = bcs_flow(theta, phase, 2.0, 2000);
        CHECK(f.converged);
        CHECK(f.defect <= 1e-8);
        CHECK(f.max_window_iterations <= 30);
        const auto delta = classical_flow_eval(f, {pairing_at({0})}, [](const std::vector<cplx>& v) { return v[0]; });
        double err = 0.0;
        for (std::size_t k = 0; k < f.nodes(); ++k)
            err = std::max(err, std::abs(delta[k] - oracle::pseudospin_delta(GAMMA, MU, theta, phase, f.times[k])));
        CHECK(err <= 1e-6);

        const double f1 = decay_constants(DecayFunction::exponential(1.0), Box(1, 20)).normF1;
        double gmax = 0.0;
        for (const auto& row : f.scalars)
            for (const auto& g : row)
                gmax = std::max(gmax, std::abs(g));
        CHECK(gmax <= f1 + 1e-9);

        for (double c : f.window_contraction)
            WARN_LE(c, 0.5);
    }

    TEST_CASE("classical flow evaluation")
    {
        const auto f = bcs_flow(0.4, 0.0, 0.5, 100);
        const auto one = classical_flow_eval(f, {LocalOperator::scalar(1.0)}, [](const std::vector<cplx>& v) { return v[0]; });
        const auto konst = classical_flow_eval(f, {}, [](const std::vector<cplx>&) { return cplx(2.5); });
        for (std::size_t k = 0; k < f.nodes(); ++k)
        {
            CHECK(std::abs(one[k] - 1.0) <= 1e-12);
            CHECK(konst[k] == cplx(2.5));
            CHECK(f.state(k).vector().norm() == doctest::Approx(1.0).epsilon(1e-9));
        }
    }

    TEST_CASE("effective dynamics follows the oracle on a larger box")
    {
        const double theta = 0.6, phase = -0.4;
        const auto f = bcs_flow(theta, phase, 1.0, 1000);
        TimeDependentModel m(build_bcs_model(1, GAMMA, MU));
        auto sp = make_space(Box(1, 1), 2);
        const auto rho = product_state(pair_cell(theta, phase), sp, PeriodVector::ones(1));
        const auto vals = effective_expectations(m, f, rho, instantiate(pairing_at({0}), sp), FockOperator::identity(sp));
        double err = 0.0;
        for (std::size_t k = 0; k < vals.size(); ++k)
            err = std::max(err, std::abs(vals[k] - oracle::pseudospin_delta(GAMMA, MU, theta, phase, f.times[k])));
        CHECK(err <= 1e-5);
    }

    TEST_CASE("effective dynamics without atoms is the full dynamics")
    {
        TimeDependentModel m(build_bcs_model(1, 0.0, MU, 0.6));
        m.phi_schedule = Schedule::linear(1.0, 0.5);
        auto sp = make_space(Box(1, 1), 2);
        const auto rho = product_state(pair_cell(0.5, 0.0), sp, PeriodVector::ones(1));
        const auto grid = make_grid(0.0, 0.8, 400);
        const auto f = solve_self_consistency(m, rho, grid);
        const auto a = annihilator(sp, {0}, SPIN_UP) * creator(sp, {1}, SPIN_UP);
        const auto full = heisenberg(propagate(model_hamiltonian(m, sp), grid, Method::cf4), a);
        CHECK(spectral_norm(Mat(effective_dynamics(m, f, a).dense() - full.dense())) <= 1e-10);
    }

    TEST_CASE("mixtures of one component reproduce the single flow")
    {
        TimeDependentModel m(build_bcs_model(1, GAMMA, MU));
        auto sp = make_space(Box(1, 0), 2);
        const auto rho = product_state(pair_cell(0.7, 0.1), sp, PeriodVector::ones(1));
        const auto grid = make_grid(0.0, 0.5, 100);
        const auto single = solve_self_consistency(m, rho, grid);
        const auto mix = evolve_mixture(Mixture({1.0}, {rho}), m, grid);
        REQUIRE(mix.flows.size() == 1);
        CHECK(mix.flows[0].scalars == single.scalars);
    }
}
