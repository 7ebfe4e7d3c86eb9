#include "lrdyn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lrdyn
{

namespace
{
    const double SQRT3 = std::sqrt(3.0);
    const double ALPHA1 = (3.0 - 2.0 * SQRT3) / 12.0;
    const double ALPHA2 = (3.0 + 2.0 * SQRT3) / 12.0;
    const double C1 = 0.5 - SQRT3 / 6.0;
    const double C2 = 0.5 + SQRT3 / 6.0;

    template <typename Block>
    void step_impl(const TimeDependentHamiltonian& h, double t, double dt, Block& x)
    {
        const SpMat h1 = h.at(t + C1 * dt);
        const SpMat h2 = h.at(t + C2 * dt);
        const SpMat first = ALPHA2 * h1 + ALPHA1 * h2;
        const SpMat second = ALPHA1 * h1 + ALPHA2 * h2;
        x = expm_minus_i_apply(first, dt, x);
        x = expm_minus_i_apply(second, dt, x);
    }
} // namespace

std::vector<double> TimeGrid::nodes() const
{
    std::vector<double> out(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k)
        out[k] = node(k);
    return out;
}

TimeGrid make_grid(double s, double t, int steps)
{
    if (!std::isfinite(s) || !std::isfinite(t))
        throw std::invalid_argument("time grid needs finite end points");
    if (steps < 1)
        throw std::invalid_argument("time grid needs at least one step");
    return {s, t, steps};
}

int default_steps(const TimeDependentHamiltonian& h, double s, double t)
{
    const double n = std::ceil(std::abs(t - s) * h.norm_bound(s) / 0.01);
    if (!std::isfinite(n) || n > 1e8)
        throw ResourceLimit("default time grid would need too many steps");
    return std::max(1, static_cast<int>(n));
}

TimeGrid default_grid(const TimeDependentHamiltonian& h, double s, double t)
{
    return make_grid(s, t, default_steps(h, s, t));
}

FockOperator derivation(const FockOperator& u, const FockOperator& a)
{
    return I_UNIT * commutator(u, a);
}

FockOperator derivation(const LongRangeModel& m, const FockOperator& a)
{
    return derivation(local_energy_model(m, a.space()), a);
}

void cf4_step(const TimeDependentHamiltonian& h, double t, double dt, Mat& x) { step_impl(h, t, dt, x); }
void cf4_step(const TimeDependentHamiltonian& h, double t, double dt, Vec& x) { step_impl(h, t, dt, x); }

Propagator propagate(const TimeDependentHamiltonian& h, const TimeGrid& grid, Method method)
{
    h.space()->require_modes(PROPAGATOR_MODE_CAP, "dense propagator");
    const auto n = static_cast<Eigen::Index>(h.dim());
    IntegratorInfo info;
    info.steps = grid.steps;
    info.step = grid.step();
    Mat w = Mat::Identity(n, n);
    if (grid.s == grid.t)
        return Propagator(h.space(), std::move(w), grid.s, grid.t, info);

    if (method == Method::automatic)
        method = h.autonomous() && h.space()->modes() <= EXACT_MODE_CAP ? Method::exact : Method::cf4;
    if (method == Method::exact)
    {
        if (!h.autonomous())
            throw std::invalid_argument("exact propagation needs an autonomous Hamiltonian");
        w = expm_hermitian(Mat(h.at(grid.s)), grid.t - grid.s);
        info.method = "exact";
        info.steps = 1;
        info.step = grid.t - grid.s;
        info.unitarity_defect = unitarity_defect(w);
        return Propagator(h.space(), std::move(w), grid.s, grid.t, info);
    }

    constexpr int check_every = 16;
    for (int k = 0; k < grid.steps; ++k)
    {
        cf4_step(h, grid.node(k), grid.step(), w);
        if ((k + 1) % check_every == 0 || k + 1 == grid.steps)
        {
            double defect = unitarity_defect(w);
            if (defect > 0.5 * UNITARITY_TOL)
            {
                w = polar_unitary(w);
                ++info.reunitarizations;
                defect = unitarity_defect(w);
                if (defect > UNITARITY_TOL)
                    throw std::runtime_error("propagator lost unitarity; reduce the step size");
            }
            info.unitarity_defect = defect;
        }
    }
    return Propagator(h.space(), std::move(w), grid.s, grid.t, info);
}

Propagator propagate(const TimeDependentHamiltonian& h, double s, double t, Method method)
{
    return propagate(h, default_grid(h, s, t), method);
}

FockOperator heisenberg(const Propagator& p, const FockOperator& a)
{
    const Mat& w = p.matrix();
    Mat r = w.adjoint() * (a.matrix() * w);
    SpMat sr = r.sparseView(1e-300, 1.0);
    return FockOperator(a.space(), std::move(sr), SiteSet(p.space()->sites()));
}

Vec evolve_vector(const TimeDependentHamiltonian& h, const TimeGrid& grid, Vec psi, const VectorObserver& observer)
{
    h.space()->require_modes(VECTOR_MODE_CAP, "vector evolution");
    if (static_cast<std::size_t>(psi.size()) != h.dim())
        throw std::invalid_argument("state vector does not match the Fock space");
    if (observer)
        observer(0, grid.s, psi);
    if (grid.s == grid.t)
    {
        for (int k = 1; k <= grid.steps && observer; ++k)
            observer(k, grid.t, psi);
        return psi;
    }
    for (int k = 0; k < grid.steps; ++k)
    {
        cf4_step(h, grid.node(k), grid.step(), psi);
        if (observer)
            observer(k + 1, grid.node(k + 1), psi);
    }
    return psi;
}

Mat evolve_density(const TimeDependentHamiltonian& h, const TimeGrid& grid, const Mat& sigma,
                   const DensityObserver& observer)
{
    h.space()->require_modes(PROPAGATOR_MODE_CAP, "density evolution");
    const auto n = static_cast<Eigen::Index>(h.dim());
    if (sigma.rows() != n || sigma.cols() != n)
        throw std::invalid_argument("density matrix does not match the Fock space");
    Mat w = Mat::Identity(n, n);
    if (observer)
        observer(0, grid.s, sigma);
    for (int k = 0; k < grid.steps; ++k)
    {
        if (grid.s != grid.t)
            cf4_step(h, grid.node(k), grid.step(), w);
        if (observer)
            observer(k + 1, grid.node(k + 1), w * sigma * w.adjoint());
    }
    return w * sigma * w.adjoint();
}

double cocycle_defect(const TimeDependentHamiltonian& h, double s, double r, double t, const FockOperator& a,
                      double max_step, Method method)
{
    auto grid = [&](double from, double to) {
        if (max_step <= 0.0)
            return default_grid(h, from, to);
        return make_grid(from, to, std::max(1, static_cast<int>(std::ceil(std::abs(to - from) / max_step))));
    };
    const FockOperator direct = heisenberg(propagate(h, grid(s, t), method), a);
    const FockOperator inner = heisenberg(propagate(h, grid(r, t), method), a);
    const FockOperator composed = heisenberg(propagate(h, grid(s, r), method), inner);
    return spectral_norm(Mat(direct.matrix() - composed.matrix()));
}

} // namespace lrdyn
