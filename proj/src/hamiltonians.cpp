#include "lrdyn/hamiltonians.hpp"

#include <cmath>
#include <stdexcept>

namespace lrdyn
{

FockOperator local_energy(const Interaction& phi, const SpacePtr& space)
{
    space->require_modes(MATRIX_MODE_CAP, "local energy");
    if (phi.nspin() != space->nspin() || phi.dimension() != space->dimension())
        throw std::invalid_argument("interaction does not match the mode space");
    LocalOperator sum;
    SiteSet support;
    for (const auto& t : phi.tiled(space->sites()))
    {
        sum += t.op;
        support.insert(support.end(), t.sites.begin(), t.sites.end());
    }
    return FockOperator(space, instantiate_matrix(sum, *space), std::move(support));
}

FockOperator atom_energy(const Atom& atom, const SpacePtr& space)
{
    const double volume = static_cast<double>(space->sites().size());
    FockOperator prod = local_energy(atom.factors.front(), space);
    for (std::size_t j = 1; j < atom.factors.size(); ++j)
        prod = prod * local_energy(atom.factors[j], space);
    return cplx(atom.weight / std::pow(volume, atom.order() - 1)) * prod;
}

FockOperator local_energy_model(const LongRangeModel& m, const SpacePtr& space)
{
    FockOperator h = local_energy(m.phi, space);
    for (const auto& a : m.atoms)
        h = h + atom_energy(a, space);
    return h;
}

LocalHamiltonian local_hamiltonian(const LongRangeModel& m, const SpacePtr& space, double t)
{
    return {local_energy_model(m, space), m.short_range_only() ? "interaction" : "model", t};
}

void TimeDependentHamiltonian::add(SpMat part, Coefficient c, bool constant)
{
    autonomous_ = autonomous_ && constant;
    if (static_cast<std::size_t>(part.rows()) != dim() || part.rows() != part.cols())
        throw std::invalid_argument("Hamiltonian part does not match the Fock space");
    part.makeCompressed();
    part_bounds_.push_back(spectral_upper_bound(part));
    parts_.push_back(std::move(part));
    coeffs_.push_back(std::move(c));
}

SpMat TimeDependentHamiltonian::at(double t) const
{
    const auto n = static_cast<Eigen::Index>(dim());
    SpMat h(n, n);
    for (std::size_t k = 0; k < parts_.size(); ++k)
    {
        const cplx c = coeffs_[k](t);
        if (c != cplx{0.0, 0.0})
            h += c * parts_[k];
    }
    return h;
}

double TimeDependentHamiltonian::norm_bound(double t) const
{
    double b = 0.0;
    for (std::size_t k = 0; k < parts_.size(); ++k)
        b += std::abs(coeffs_[k](t)) * part_bounds_[k];
    return b;
}

namespace
{
    void add_scheduled(TimeDependentHamiltonian& h, SpMat part, const Schedule& c)
    {
        if (c.kind == Schedule::Kind::constant || c.b == 0.0)
            h.add(std::move(part), cplx(c(0.0)));
        else
            h.add(
                std::move(part), [c](double t) { return cplx(c(t)); }, false);
    }
} // namespace

TimeDependentHamiltonian model_hamiltonian(const TimeDependentModel& m, const SpacePtr& space)
{
    TimeDependentHamiltonian h(space);
    if (!m.base.phi.empty())
    {
        const Schedule c = m.phi_schedule;
        add_scheduled(h, local_energy(m.base.phi, space).matrix(), c);
    }
    for (std::size_t k = 0; k < m.base.atoms.size(); ++k)
    {
        const Schedule c = m.atom_schedules.empty() ? Schedule::constant(1.0) : m.atom_schedules.at(k);
        add_scheduled(h, atom_energy(m.base.atoms[k], space).matrix(), c);
    }
    return h;
}

TimeDependentHamiltonian model_hamiltonian(const LongRangeModel& m, const SpacePtr& space)
{
    return model_hamiltonian(TimeDependentModel(m), space);
}

} // namespace lrdyn
