#include "lrdyn/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace lrdyn
{

Interaction sandwich(const std::vector<cplx>& g, const std::vector<Interaction>& factors)
{
    if (factors.empty())
        throw std::invalid_argument("sandwich needs at least one factor");
    if (g.size() != factors.size())
        throw std::invalid_argument("sandwich needs one scalar per factor");
    if (factors.size() == 1)
        return factors.front();
    Interaction out = Interaction::zero(factors.front().dimension(), factors.front().nspin(),
                                        factors.front().translation_invariant());
    for (std::size_t m = 0; m < factors.size(); ++m)
    {
        cplx p{1.0, 0.0};
        for (std::size_t j = 0; j < factors.size(); ++j)
            if (j != m)
                p *= g[j];
        if (p != cplx{0.0, 0.0})
            out = out + factors[m].scaled(p);
    }
    return out;
}

Interaction approximating_interaction(const LongRangeModel& m_at_t, const AtomScalars& g)
{
    if (g.size() != m_at_t.atoms.size())
        throw std::invalid_argument("approximating interaction needs scalars for every atom");
    Interaction out = m_at_t.phi;
    for (std::size_t k = 0; k < g.size(); ++k)
        out = out + sandwich(g[k], m_at_t.atoms[k].factors).scaled(m_at_t.atoms[k].weight);
    return out;
}

namespace
{
    struct ScalarTable
    {
        TimeGrid grid;
        std::vector<std::vector<cplx>> rows; // node x scalar
    };

    cplx interpolate(const ScalarTable& t, double time, std::size_t i)
    {
        const auto& grid = t.grid;
        if (grid.s == grid.t || t.rows.size() == 1)
            return t.rows.front()[i];
        const double x = (time - grid.s) / grid.step();
        const int k = std::clamp(static_cast<int>(std::floor(x)), 0, grid.steps - 1);
        const double frac = x - k;
        return (1.0 - frac) * t.rows[k][i] + frac * t.rows[k + 1][i];
    }

    /// Local energies of Phi and of every atom factor on one space.
    struct EffectiveParts
    {
        SpMat phi;
        bool has_phi = false;
        std::vector<std::vector<SpMat>> psi;
    };

    EffectiveParts build_parts(const LongRangeModel& m, const SpacePtr& space)
    {
        EffectiveParts p;
        if (!m.phi.empty())
        {
            p.phi = local_energy(m.phi, space).matrix();
            p.has_phi = true;
        }
        for (const auto& a : m.atoms)
        {
            std::vector<SpMat> row;
            for (const auto& psi : a.factors)
                row.push_back(local_energy(psi, space).matrix());
            p.psi.push_back(std::move(row));
        }
        return p;
    }

    /// flat scalar index of (atom k, factor j)
    std::vector<std::vector<std::size_t>> flat_index(const LongRangeModel& m)
    {
        std::vector<std::vector<std::size_t>> idx;
        std::size_t n = 0;
        for (const auto& a : m.atoms)
        {
            std::vector<std::size_t> row;
            for (int j = 0; j < a.order(); ++j)
                row.push_back(n++);
            idx.push_back(std::move(row));
        }
        return idx;
    }

    TimeDependentHamiltonian assemble(const TimeDependentModel& m, const EffectiveParts& parts, const SpacePtr& space,
                                      std::shared_ptr<const ScalarTable> table)
    {
        TimeDependentHamiltonian h(space);
        if (parts.has_phi)
        {
            const Schedule c = m.phi_schedule;
            if (c.kind == Schedule::Kind::constant || c.b == 0.0)
                h.add(parts.phi, cplx(c(0.0)));
            else
                h.add(
                    parts.phi, [c](double t) { return cplx(c(t)); }, false);
        }
        const auto idx = flat_index(m.base);
        for (std::size_t k = 0; k < m.base.atoms.size(); ++k)
        {
            const Atom& atom = m.base.atoms[k];
            const Schedule c = m.atom_schedules.empty() ? Schedule::constant(1.0) : m.atom_schedules.at(k);
            const double w = atom.weight;
            if (atom.order() == 1)
            {
                h.add(
                    parts.psi[k][0], [c, w](double t) { return cplx(c(t) * w); }, c.kind == Schedule::Kind::constant);
                continue;
            }
            for (int j = 0; j < atom.order(); ++j)
            {
                std::vector<std::size_t> others;
                for (int i = 0; i < atom.order(); ++i)
                    if (i != j)
                        others.push_back(idx[k][i]);
                h.add(
                    parts.psi[k][j],
                    [c, w, others, table](double t) {
                        cplx p = c(t) * w;
                        for (std::size_t i : others)
                            p *= interpolate(*table, t, i);
                        return p;
                    },
                    false);
            }
        }
        return h;
    }

    void density_step(const TimeDependentHamiltonian& h, double t, double dt, Mat& sigma)
    {
        Mat x = sigma;
        cf4_step(h, t, dt, x);
        Mat y = x.adjoint();
        cf4_step(h, t, dt, y);
        sigma = 0.5 * (y + y.adjoint());
    }
} // namespace

// ---------------------------------------------------------------- FlowTrajectory

AtomScalars FlowTrajectory::at(double t) const
{
    ScalarTable table{grid, scalars};
    AtomScalars out;
    for (std::size_t i = 0; i < index.size(); ++i)
    {
        const auto [k, j] = index[i];
        if (static_cast<std::size_t>(k) >= out.size())
            out.resize(k + 1);
        out[k].resize(std::max<std::size_t>(out[k].size(), j + 1));
        out[k][j] = interpolate(table, t, i);
    }
    return out;
}

AtomScalars FlowTrajectory::at_node(std::size_t k) const { return at(times.at(k)); }

LatticeState FlowTrajectory::state(std::size_t k) const
{
    if (!vectors.empty())
        return LatticeState::pure(space, vectors.at(k), l);
    if (!densities.empty())
        return LatticeState::density(space, densities.at(k), l);
    throw std::logic_error("flow states were not recorded");
}

// ---------------------------------------------------------------- solver

FlowTrajectory solve_self_consistency(const TimeDependentModel& m, const LatticeState& rho0, const TimeGrid& grid,
                                      const SolverConfig& cfg)
{
    if (!(cfg.tol > 0.0) || cfg.max_iter < 1 || !(cfg.damping > 0.0 && cfg.damping <= 1.0) || !(cfg.window > 0.0))
        throw std::invalid_argument("solver configuration out of range");
    const SpacePtr& space = rho0.space();
    if (space->nspin() != m.base.nspin() || space->dimension() != m.base.dimension())
        throw std::invalid_argument("state and model have different lattices");

    FlowTrajectory f;
    f.grid = grid;
    f.times = grid.nodes();
    f.space = space;
    f.l = rho0.period();

    std::vector<SpMat> dens;
    for (std::size_t k = 0; k < m.base.atoms.size(); ++k)
        for (int j = 0; j < m.base.atoms[k].order(); ++j)
        {
            const EnergyDensity e = energy_density(m.base.atoms[k].factors[j], rho0.period());
            if (!space->contains(e.support))
                throw GeometryError("energy density does not fit the self-consistency box");
            dens.push_back(instantiate_matrix(e.op, *space));
            f.labels.push_back("a" + std::to_string(k) + ".f" + std::to_string(j));
            f.index.emplace_back(static_cast<int>(k), j);
        }
    const std::size_t ns = dens.size();

    const bool pure = rho0.is_pure();
    Vec psi;
    Mat sigma;
    if (pure)
        psi = rho0.vector();
    else
        sigma = rho0.density_matrix();

    auto measure = [&](const Vec& v, const Mat& s) {
        std::vector<cplx> g(ns);
        for (std::size_t i = 0; i < ns; ++i)
            g[i] = pure ? expectation(v, dens[i]) : expectation(s, dens[i]);
        return g;
    };
    auto record = [&](const Vec& v, const Mat& s) {
        if (!cfg.record_states)
            return;
        if (pure)
            f.vectors.push_back(v);
        else
            f.densities.push_back(s);
    };

    const EffectiveParts parts = build_parts(m.base, space);
    auto table = std::make_shared<ScalarTable>(ScalarTable{grid, std::vector<std::vector<cplx>>(grid.steps + 1)});
    table->rows[0] = measure(psi, sigma);
    record(psi, sigma);

    if (grid.s == grid.t)
    {
        for (int k = 1; k <= grid.steps; ++k)
        {
            table->rows[k] = table->rows[0];
            record(psi, sigma);
        }
        f.scalars = table->rows;
        return f;
    }

    const int wsteps = std::max(1, static_cast<int>(std::floor(cfg.window / std::abs(grid.step()) + 1e-9)));
    int k0 = 0;
    while (k0 < grid.steps)
    {
        const int k1 = std::min(grid.steps, k0 + wsteps);
        for (int k = k0 + 1; k <= k1; ++k)
            table->rows[k] = table->rows[k0];

        double beta = cfg.damping;
        double prev = std::numeric_limits<double>::infinity();
        double worst_ratio = 0.0;
        int it = 0;
        std::vector<std::vector<cplx>> fresh(k1 - k0);
        std::vector<Vec> vs;
        std::vector<Mat> ss;
        for (;;)
        {
            ++it;
            const TimeDependentHamiltonian h = assemble(m, parts, space, table);
            Vec v = psi;
            Mat s = sigma;
            vs.clear();
            ss.clear();
            double defect = 0.0;
            for (int k = k0; k < k1; ++k)
            {
                if (pure)
                    cf4_step(h, grid.node(k), grid.step(), v);
                else
                    density_step(h, grid.node(k), grid.step(), s);
                fresh[k - k0] = measure(v, s);
                for (std::size_t i = 0; i < ns; ++i)
                    defect = std::max(defect, std::abs(fresh[k - k0][i] - table->rows[k + 1][i]));
                if (pure)
                    vs.push_back(v);
                else
                    ss.push_back(s);
            }
            if (std::isfinite(prev) && prev > 0.0)
                worst_ratio = std::max(worst_ratio, defect / prev);
            const bool done = defect <= cfg.tol;
            const bool exhausted = it >= cfg.max_iter;
            if (done || exhausted)
            {
                for (int k = k0 + 1; k <= k1; ++k)
                    table->rows[k] = fresh[k - k0 - 1];
                f.defect = std::max(f.defect, defect);
                f.converged = f.converged && done;
                break;
            }
            if (defect > prev && beta > 0.5)
                beta = 0.5;
            for (int k = k0 + 1; k <= k1; ++k)
                for (std::size_t i = 0; i < ns; ++i)
                    table->rows[k][i] = (1.0 - beta) * table->rows[k][i] + beta * fresh[k - k0 - 1][i];
            prev = defect;
        }
        f.damping_used = std::min(f.damping_used, beta);
        f.iterations += it;
        f.max_window_iterations = std::max(f.max_window_iterations, it);
        f.window_iterations.push_back(it);
        f.window_contraction.push_back(worst_ratio);
        for (std::size_t i = 0; i < (pure ? vs.size() : ss.size()); ++i)
            record(pure ? vs[i] : Vec{}, pure ? Mat{} : ss[i]);
        if (pure)
            psi = vs.back();
        else
            sigma = ss.back();
        k0 = k1;
    }
    f.scalars = table->rows;
    return f;
}

// ---------------------------------------------------------------- effective dynamics

TimeDependentHamiltonian effective_hamiltonian(const TimeDependentModel& m, const FlowTrajectory& flow,
                                               const SpacePtr& space)
{
    auto table = std::make_shared<const ScalarTable>(ScalarTable{flow.grid, flow.scalars});
    return assemble(m, build_parts(m.base, space), space, std::move(table));
}

FockOperator effective_dynamics(const TimeDependentModel& m, const FlowTrajectory& flow, const FockOperator& a)
{
    const TimeDependentHamiltonian h = effective_hamiltonian(m, flow, a.space());
    return heisenberg(propagate(h, flow.grid, Method::cf4), a);
}

std::vector<cplx> effective_expectations(const TimeDependentModel& m, const FlowTrajectory& flow,
                                         const LatticeState& rho, const FockOperator& a, const FockOperator& b)
{
    const TimeDependentHamiltonian h = effective_hamiltonian(m, flow, rho.space());
    std::vector<cplx> out;
    if (rho.is_pure())
    {
        const Vec phi = b.matrix() * rho.vector();
        evolve_vector(h, flow.grid, phi, [&](int, double, const Vec& v) { out.push_back(expectation(v, a.matrix())); });
        return out;
    }
    const SpMat& bm = b.matrix();
    Mat sigma = bm * rho.density_matrix() * bm.adjoint();
    out.push_back(expectation(sigma, a.matrix()));
    for (int k = 0; k < flow.grid.steps; ++k)
    {
        if (flow.grid.s != flow.grid.t)
            density_step(h, flow.grid.node(k), flow.grid.step(), sigma);
        out.push_back(expectation(sigma, a.matrix()));
    }
    return out;
}

std::vector<cplx> classical_flow_eval(const FlowTrajectory& flow, const std::vector<LocalOperator>& observables,
                                      const CylinderFunction& f)
{
    std::vector<SpMat> ops;
    for (const auto& a : observables)
    {
        if (!flow.space->contains(a.support()))
            throw GeometryError("observable support is not inside the self-consistency box");
        ops.push_back(instantiate_matrix(a, *flow.space));
    }
    const bool pure = !flow.vectors.empty();
    if (!pure && flow.densities.empty())
        throw std::logic_error("flow states were not recorded");
    std::vector<cplx> out;
    std::vector<cplx> vals(ops.size());
    for (std::size_t k = 0; k < flow.nodes(); ++k)
    {
        for (std::size_t i = 0; i < ops.size(); ++i)
            vals[i] = pure ? expectation(flow.vectors[k], ops[i]) : expectation(flow.densities[k], ops[i]);
        out.push_back(f(vals));
    }
    return out;
}

std::vector<cplx> MixtureFlow::mixed(const LocalOperator& a) const
{
    std::vector<cplx> out;
    for (std::size_t i = 0; i < flows.size(); ++i)
    {
        const auto vals = classical_flow_eval(flows[i], {a}, [](const std::vector<cplx>& v) { return v[0]; });
        if (out.empty())
            out.assign(vals.size(), cplx{0.0, 0.0});
        for (std::size_t k = 0; k < vals.size(); ++k)
            out[k] += weights[i] * vals[k];
    }
    return out;
}

MixtureFlow evolve_mixture(const Mixture& mix, const TimeDependentModel& m, const TimeGrid& grid,
                           const SolverConfig& cfg)
{
    MixtureFlow out;
    for (std::size_t i = 0; i < mix.size(); ++i)
    {
        if (mix.component(i).tag() != LatticeState::Tag::product)
            throw std::invalid_argument("mixture components must be product states");
        out.weights.push_back(mix.weight(i));
        out.flows.push_back(solve_self_consistency(m, mix.component(i), grid, cfg));
    }
    return out;
}

} // namespace lrdyn
