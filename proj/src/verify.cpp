#include "lrdyn/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace lrdyn
{

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn)
{
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
    if (workers <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }

    std::mutex mu;
    std::size_t next = 0;
    std::vector<std::exception_ptr> errors(n);
    auto work = [&] {
        for (;;)
        {
            std::size_t i;
            {
                std::lock_guard lock(mu);
                if (next == n)
                    return;
                i = next++;
            }
            try
            {
                fn(i);
            }
            catch (...)
            {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back(work);
    pool.clear();
    // lowest index wins so the reported error does not depend on scheduling
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

double m_norm_at(const TimeDependentModel& m, const Box& box, double normF1, double t)
{
    double total = std::abs(m.phi_schedule(t)) * w_norm(m.base.phi, m.base.decay, box);
    for (std::size_t k = 0; k < m.base.atoms.size(); ++k)
    {
        const auto& atom = m.base.atoms[k];
        const int n = atom.order();
        total += n * n * std::pow(normF1, n - 1) * std::abs(atom.weight * m.atom_coefficient(k, t));
    }
    return total;
}

BoundReport lr_bound_check(const TimeDependentModel& m, const Interaction& phi, const FockOperator& a,
                           const Box& box, double s, double t, const BoundOptions& opt)
{
    const SpacePtr& space = a.space();
    if (space->sites() != box.sites())
        throw GeometryError("lr_bound_check: observable does not live on the box");

    BoundReport r;
    r.s = s;
    r.t = t;
    const auto dc = opt.constants ? *opt.constants : decay_constants(m.base.decay, box);
    r.normF1 = dc.normF1;
    r.constD = dc.constD;

    // integral of ||m||_M over [min, max]
    const int nodes = std::max(2, opt.integral_nodes);
    const double h = (t - s) / (nodes - 1);
    double integral = 0.0;
    for (int k = 0; k < nodes; ++k)
    {
        const double w = (k == 0 || k == nodes - 1) ? 0.5 : 1.0;
        integral += w * m_norm_at(m, box, dc.normF1, s + k * h);
    }
    r.m_integral = std::abs(integral * h);

    r.support_size = a.support().size();
    r.a_norm = a.norm();
    r.phi_w_norm = w_norm(phi, m.base.decay, box);
    const double prefactor = 2.0 * static_cast<double>(r.support_size) * r.a_norm * r.phi_w_norm;
    const double exponent = 16.0 * (dc.constD + 2.0 * dc.normF1 + 1.0) * r.m_integral;
    r.rhs = prefactor > 0.0 ? prefactor * std::exp(exponent) : 0.0;
    r.log_rhs = prefactor > 0.0 ? std::log(prefactor) + exponent : -INFINITY;

    const Mat u = local_energy(phi, space).dense();
    Mat evolved = a.dense();
    if (s != t)
    {
        const auto h_t = model_hamiltonian(m, space);
        const TimeGrid grid = opt.steps > 0 ? make_grid(s, t, opt.steps) : default_grid(h_t, s, t);
        const Propagator p = propagate(h_t, grid, opt.method);
        r.method = p.info().method;
        evolved = p.matrix().adjoint() * evolved * p.matrix();
    }
    else
        r.method = "identity";

    r.lhs = spectral_norm(evolved * u - u * evolved);
    r.ratio = r.rhs > 0.0 ? r.lhs / r.rhs : (r.lhs > 0.0 ? INFINITY : 0.0);
    // absolute floor: an empty support gives rhs = 0 while the commutator is pure roundoff
    r.pass = r.lhs <= r.rhs * (1.0 + 1e-9) + 1e-11 * r.a_norm * spectral_norm(u);
    return r;
}

std::vector<DensityRow> energy_density_convergence(const Interaction& phi, const ProductSpec& state,
                                                   const LocalOperator& b, const std::vector<int>& Ls,
                                                   int threads)
{
    if (!phi.translation_invariant())
        throw std::invalid_argument("energy_density_convergence: interaction is not translation invariant");
    const int d = phi.dimension();
    const EnergyDensity e = energy_density(phi, state.l);

    const SpacePtr ref_space = make_space(Box(d, std::max(e.radius(), 0)), phi.nspin());
    const cplx rho_e = expectation(rebuild(state, ref_space), instantiate(e.op, ref_space));

    std::vector<int> sorted = Ls;
    std::sort(sorted.begin(), sorted.end());
    std::vector<DensityRow> rows(sorted.size());
    parallel_for(sorted.size(), threads, [&](std::size_t i) {
        const int L = sorted[i];
        const SpacePtr space = make_space(Box(d, L), phi.nspin());
        if (!space->contains(b.support()))
            throw GeometryError("energy_density_convergence: probe B does not fit in L = " + std::to_string(L));
        const LatticeState rho = rebuild(state, space);
        const FockOperator bl = instantiate(b, space);
        const double vol = static_cast<double>(space->sites().size());
        const FockOperator u = (1.0 / vol) * local_energy(phi, space);
        DensityRow& row = rows[i];
        row.L = L;
        row.value = expectation(rho, bl.adjoint() * u * bl);
        row.reference = rho_e * expectation(rho, bl.adjoint() * bl);
        row.gap = std::abs(row.value - row.reference);
    });
    return rows;
}

bool ConvergenceReport::trend() const
{
    return rows.size() >= 2 && rows.back().gap < rows.front().gap;
}

bool ConvergenceReport::strictly_decreasing() const
{
    if (rows.size() < 2)
        return false;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (!(rows[i].gap < rows[i - 1].gap))
            return false;
    return true;
}

bool MixtureReport::trend() const
{
    return mixed.size() >= 2 && mixed.back().gap < mixed.front().gap;
}

cplx full_expectation(const TimeDependentModel& m, const LatticeState& rho, const FockOperator& a,
                      const FockOperator& b, double s, double t, int* steps)
{
    const SpacePtr& space = rho.space();
    const auto h = model_hamiltonian(m, space);
    const TimeGrid grid = s == t ? make_grid(s, t, 1) : default_grid(h, s, t);
    if (steps)
        *steps = s == t ? 0 : grid.steps;
    if (rho.is_pure())
    {
        Vec phi = b.matrix() * rho.vector();
        if (s != t)
            phi = evolve_vector(h, grid, phi);
        return phi.dot(a.matrix() * phi);
    }
    Mat sigma = b.matrix() * rho.density_matrix() * b.matrix().adjoint();
    if (s != t)
        sigma = evolve_density(h, grid, sigma);
    return (a.matrix() * sigma).trace();
}

int energy_density_radius(const LongRangeModel& m, const PeriodVector& l)
{
    int r = 0;
    for (const auto& atom : m.atoms)
        for (const auto& psi : atom.factors)
            r = std::max(r, energy_density(psi, l).radius());
    return r;
}

namespace
{
    std::string describe_model(const TimeDependentModel& m)
    {
        std::string out = "d=" + std::to_string(m.base.dimension()) + " spins=" + std::to_string(m.base.nspin()) +
                          " phi_terms=" + std::to_string(m.base.phi.terms().size()) +
                          " atoms=" + std::to_string(m.base.atoms.size()) + " F=" + m.base.decay.describe();
        if (!m.autonomous())
            out += " scheduled";
        return out;
    }

    std::string describe_state(const ProductSpec& spec)
    {
        std::string out = spec.cell_vector ? "pure product l=(" : "product l=(";
        for (std::size_t i = 0; i < spec.l.l.size(); ++i)
            out += (i ? "," : "") + std::to_string(spec.l.l[i]);
        return out + ")";
    }

    bool feasible(const ProductSpec& spec, int modes)
    {
        return modes <= (spec.cell_vector ? VECTOR_MODE_CAP : DENSITY_MODE_CAP);
    }

    ProductSpec as_density(ProductSpec spec)
    {
        if (spec.cell_vector)
        {
            const Vec& v = *spec.cell_vector;
            spec.cell_density = v * v.adjoint();
            spec.cell_vector.reset();
        }
        return spec;
    }
} // namespace

ConvergenceReport main_convergence(const TimeDependentModel& m, const ProductSpec& state_in, const LocalOperator& a,
                                   const LocalOperator& b, double s, double t, const std::vector<int>& Ls,
                                   const ConvergenceConfig& cfg)
{
    const ProductSpec state = cfg.force_density ? as_density(state_in) : state_in;
    const int d = m.base.dimension();
    const int nspin = m.base.nspin();

    ConvergenceReport rep;
    rep.model = describe_model(m);
    rep.state = describe_state(state);
    rep.s = s;
    rep.t = t;

    std::vector<int> sorted = Ls;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<int> run;
    for (int L : sorted)
    {
        const int modes = static_cast<int>(Box(d, L).size()) * nspin;
        if (feasible(state, modes))
            run.push_back(L);
        else
            rep.skipped.push_back(L);
    }

    // the flow is solved once, on the smallest box holding every energy density
    rep.box_eff_radius = cfg.box_eff_radius >= 0 ? cfg.box_eff_radius : energy_density_radius(m.base, state.l);
    const SpacePtr eff_space = make_space(Box(d, rep.box_eff_radius), nspin);
    const int flow_steps = s == t ? 1 : std::max(1, static_cast<int>(std::ceil(std::abs(t - s) / cfg.flow_step)));
    const FlowTrajectory flow =
        solve_self_consistency(m, rebuild(state, eff_space), make_grid(s, t, flow_steps), cfg.solver);
    rep.flow_iterations = flow.iterations;
    rep.flow_defect = flow.defect;
    rep.flow_converged = flow.converged;

    rep.rows.resize(run.size());
    parallel_for(run.size(), cfg.threads, [&](std::size_t i) {
        const auto start = std::chrono::steady_clock::now();
        const int L = run[i];
        const SpacePtr space = make_space(Box(d, L), nspin);
        if (!space->contains(a.support()) || !space->contains(b.support()))
            throw GeometryError("main_convergence: observable does not fit in L = " + std::to_string(L));
        const LatticeState rho = rebuild(state, space);
        const FockOperator al = instantiate(a, space);
        const FockOperator bl = instantiate(b, space);

        ConvergenceRow& row = rep.rows[i];
        row.L = L;
        row.modes = space->modes();
        row.full = full_expectation(m, rho, al, bl, s, t, &row.full_steps);
        row.effective = effective_expectations(m, flow, rho, al, bl).back();
        row.gap = std::abs(row.full - row.effective);
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });
    return rep;
}

MixtureReport mixture_convergence(const std::vector<double>& weights, const std::vector<ProductSpec>& states,
                                  const TimeDependentModel& m, const LocalOperator& a, const LocalOperator& b,
                                  double s, double t, const std::vector<int>& Ls, const ConvergenceConfig& cfg)
{
    if (weights.size() != states.size() || weights.empty())
        throw std::invalid_argument("mixture_convergence: weights and states differ in length");
    double total = 0.0;
    for (double w : weights)
    {
        if (!(w > 0.0))
            throw std::invalid_argument("mixture_convergence: weights must be positive");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("mixture_convergence: weights must sum to 1");

    MixtureReport rep;
    rep.weights = weights;
    for (const auto& spec : states)
        rep.fibers.push_back(main_convergence(m, spec, a, b, s, t, Ls, cfg));

    // L values every fiber could run
    for (const auto& row : rep.fibers.front().rows)
    {
        ConvergenceRow mixed;
        mixed.L = row.L;
        mixed.modes = row.modes;
        bool everywhere = true;
        for (std::size_t i = 0; i < rep.fibers.size() && everywhere; ++i)
        {
            const auto& rows = rep.fibers[i].rows;
            auto it = std::find_if(rows.begin(), rows.end(), [&](const ConvergenceRow& r) { return r.L == row.L; });
            if (it == rows.end())
            {
                everywhere = false;
                break;
            }
            mixed.full += weights[i] * it->full;
            mixed.effective += weights[i] * it->effective;
            mixed.full_steps = std::max(mixed.full_steps, it->full_steps);
            mixed.seconds += it->seconds;
        }
        if (!everywhere)
            continue;
        mixed.gap = std::abs(mixed.full - mixed.effective);
        rep.mixed.push_back(mixed);
    }
    return rep;
}

} // namespace lrdyn

namespace lrdyn
{

double flow_composition_defect(const TimeDependentModel& m, const LatticeState& rho0, const TimeGrid& grid,
                               int split, const SolverConfig& cfg)
{
    if (split <= 0 || split >= grid.steps)
        throw std::invalid_argument("flow_composition_defect: split node must be interior");
    SolverConfig c = cfg;
    c.record_states = true;
    const FlowTrajectory whole = solve_self_consistency(m, rho0, grid, c);
    const TimeGrid tail = make_grid(grid.node(split), grid.t, grid.steps - split);
    const FlowTrajectory rest = solve_self_consistency(m, whole.state(split), tail, c);

    double worst = 0.0;
    for (std::size_t k = 0; k < rest.nodes(); ++k)
        for (std::size_t i = 0; i < rest.scalars[k].size(); ++i)
            worst = std::max(worst, std::abs(rest.scalars[k][i] - whole.scalars[k + split][i]));
    return worst;
}

namespace
{
    struct Geometry
    {
        int d;
        int nspin;
        int L;
        int modes() const { return static_cast<int>(Box(d, L).size()) * nspin; }
    };

    const std::vector<Geometry>& geometries()
    {
        static const std::vector<Geometry> all = {{1, 1, 1}, {1, 1, 2}, {1, 1, 3}, {1, 2, 0},
                                                  {1, 2, 1}, {2, 1, 1}, {1, 1, 4}, {1, 1, 5}};
        return all;
    }

    LocalOperator random_local(std::mt19937_64& rng, const Box& box, int nspin)
    {
        std::uniform_int_distribution<int> count(1, 3), order(1, 2), spin(0, nspin - 1), coin(0, 1);
        std::normal_distribution<double> g;
        SiteSet sites{origin(box.dimension())};
        Site e = origin(box.dimension());
        e[0] = 1;
        if (box.contains(e) && coin(rng))
            sites.push_back(e);
        std::uniform_int_distribution<std::size_t> pick(0, sites.size() - 1);

        LocalOperator a;
        const int n = count(rng);
        for (int k = 0; k < n; ++k)
        {
            Monomial mono;
            mono.coeff = cplx(g(rng), g(rng));
            const int len = order(rng);
            for (int j = 0; j < len; ++j)
                mono.factors.push_back(Factor{sites[pick(rng)], spin(rng), coin(rng) == 1});
            a.add_term(mono);
        }
        return a;
    }
} // namespace

LrDraw random_lr_draw(std::mt19937_64& rng, int max_modes)
{
    std::vector<Geometry> allowed;
    for (const auto& g : geometries())
        if (g.modes() <= max_modes)
            allowed.push_back(g);
    if (allowed.empty())
        throw ResourceLimit("random_lr_draw: no geometry fits in " + std::to_string(max_modes) + " modes");

    std::uniform_int_distribution<std::size_t> pick(0, allowed.size() - 1);
    std::uniform_real_distribution<double> u(-1.0, 1.0), u01(0.0, 1.0);
    std::bernoulli_distribution half(0.5);

    const Geometry geo = allowed[pick(rng)];
    const DecayFunction F =
        half(rng) ? DecayFunction::exponential(0.5 + 1.5 * u01(rng)) : DecayFunction::polynomial(2.0 + 2.0 * u01(rng));

    Interaction phi = onsite_number(geo.d, geo.nspin, u(rng)) + nn_hopping(geo.d, geo.nspin, u(rng));
    if (half(rng))
        phi = phi + nn_density(geo.d, geo.nspin, u(rng));
    if (geo.nspin == 2 && half(rng))
        phi = phi + onsite_hubbard(geo.d, u(rng));

    std::vector<Atom> atoms;
    if (half(rng))
    {
        const Interaction n = onsite_number(geo.d, geo.nspin, 1.0);
        atoms.push_back(make_atom(u(rng), {n, n}, F));
    }
    if (geo.nspin == 2 && half(rng))
        atoms.push_back(make_atom(-std::abs(u(rng)), {pairing_creation(geo.d), pairing_annihilation(geo.d)}, F));
    if (half(rng))
        atoms.push_back(make_atom(u(rng), {onsite_number(geo.d, geo.nspin, 1.0)}, F));

    LrDraw draw{TimeDependentModel(LongRangeModel{phi, atoms, F}), Box(geo.d, geo.L), LocalOperator{}, 0.0, 0.0, 0,
                DecayConstants{}, ""};
    const bool scheduled = geo.modes() <= 7 && half(rng);
    if (scheduled)
    {
        draw.model.phi_schedule = Schedule::sinusoidal(1.0, 0.5 * u01(rng), 3.0 * u01(rng));
        for (std::size_t k = 0; k < atoms.size(); ++k)
            draw.model.atom_schedules.push_back(Schedule::linear(1.0, 0.5 * u(rng)));
    }

    draw.a = random_local(rng, draw.box, geo.nspin);
    draw.s = 2.0 * u01(rng);
    draw.t = draw.s + u(rng);
    // scheduled draws use a coarse but fourth order grid; the bound has a lot of slack
    draw.steps = scheduled ? std::max(1, static_cast<int>(std::ceil(40.0 * std::abs(draw.t - draw.s)))) : 0;

    int largest = geo.L;
    for (const auto& g : allowed)
        if (g.d == geo.d)
            largest = std::max(largest, g.L);
    draw.constants = decay_constants(F, Box(geo.d, largest));
    draw.label = "d=" + std::to_string(geo.d) + " spins=" + std::to_string(geo.nspin) + " L=" + std::to_string(geo.L) +
                 " atoms=" + std::to_string(atoms.size()) + (scheduled ? " scheduled" : "") + " F=" + F.describe();
    return draw;
}

} // namespace lrdyn
