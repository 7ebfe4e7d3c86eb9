#include "lrdyn/states.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>

namespace lrdyn
{

namespace
{
    Site floor_div_cell(const Site& x, const Site& offset, const PeriodVector& l)
    {
        Site c(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            const int rel = x[i] - offset[i];
            const int q = rel >= 0 ? rel / l.l[i] : -((-rel + l.l[i] - 1) / l.l[i]);
            c[i] = offset[i] + q * l.l[i];
        }
        return c;
    }

    /// Cell origin -> sites of that cell inside the space.
    std::map<Site, SiteSet> cells_in(const ModeSpace& space, const PeriodVector& l, const Site& offset)
    {
        std::map<Site, SiteSet> cells;
        for (const auto& x : space.sites())
            cells[floor_div_cell(x, offset, l)].push_back(x);
        return cells;
    }

    Site resolve_offset(const Site& offset, int d)
    {
        if (offset.empty())
            return origin(d);
        if (static_cast<int>(offset.size()) != d)
            throw std::invalid_argument("cell offset has the wrong dimension");
        return offset;
    }

    void check_period(const PeriodVector& l, const ModeSpace& space)
    {
        if (l.dimension() != space.dimension())
            throw std::invalid_argument("period vector dimension does not match the box");
    }

    LocalOperator as_local(const FockOperator& a)
    {
        return car_expand(a.matrix(), *a.space(), a.support());
    }

    bool parity_definite(const Vec& v, double tol)
    {
        double even = 0.0, odd = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i)
            ((std::popcount(static_cast<std::uint64_t>(i)) & 1) ? odd : even) += std::norm(v[i]);
        return std::sqrt(even) <= tol || std::sqrt(odd) <= tol;
    }
} // namespace

// ---------------------------------------------------------------- LatticeState

LatticeState LatticeState::pure(SpacePtr space, Vec psi, PeriodVector l)
{
    check_period(l, *space);
    space->require_modes(VECTOR_MODE_CAP, "pure state");
    if (static_cast<std::size_t>(psi.size()) != space->fock_dim())
        throw std::invalid_argument("state vector does not match the Fock space");
    LatticeState s(std::move(space), std::move(l), Tag::custom);
    s.psi_ = std::move(psi);
    s.validate();
    return s;
}

LatticeState LatticeState::density(SpacePtr space, Mat rho, PeriodVector l)
{
    check_period(l, *space);
    space->require_modes(DENSITY_MODE_CAP, "density matrix");
    if (static_cast<std::size_t>(rho.rows()) != space->fock_dim() || rho.rows() != rho.cols())
        throw std::invalid_argument("density matrix does not match the Fock space");
    LatticeState s(std::move(space), std::move(l), Tag::custom);
    s.rho_ = std::move(rho);
    s.validate();
    return s;
}

const Vec& LatticeState::vector() const
{
    if (!psi_)
        throw std::logic_error("state is not pure");
    return *psi_;
}

Mat LatticeState::density_matrix() const
{
    if (rho_)
        return *rho_;
    space_->require_modes(DENSITY_MODE_CAP, "density matrix");
    return (*psi_) * psi_->adjoint();
}

void LatticeState::validate() const
{
    if (psi_)
    {
        if (std::abs(psi_->norm() - 1.0) > 1e-12)
            throw std::invalid_argument("state vector is not normalised");
        return;
    }
    const Mat& r = *rho_;
    if (std::abs(r.trace() - 1.0) > 1e-12)
        throw std::invalid_argument("density matrix does not have unit trace");
    if ((r - r.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("density matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Mat> es(r, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
        throw std::invalid_argument("density matrix is not positive semidefinite");
}

std::string to_string(LatticeState::Tag tag)
{
    switch (tag)
    {
    case LatticeState::Tag::product:
        return "product";
    case LatticeState::Tag::mixture:
        return "mixture";
    case LatticeState::Tag::custom:
        return "custom";
    }
    return "custom";
}

// ---------------------------------------------------------------- product states

LatticeState product_state(const Mat& cell_density, const SpacePtr& space, const PeriodVector& l,
                           const Site& offset_in)
{
    check_period(l, *space);
    space->require_modes(DENSITY_MODE_CAP, "product density");
    const Site offset = resolve_offset(offset_in, space->dimension());
    ModeSpace cell(l.cell_sites(), space->nspin(), space->dimension());
    if (cell_density.rows() != static_cast<Eigen::Index>(cell.fock_dim()) || cell_density.cols() != cell_density.rows())
        throw std::invalid_argument("cell density dimension does not match the cell modes");
    if ((cell_density - cell_density.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("cell density is not Hermitian");
    if (std::abs(cell_density.trace() - 1.0) > 1e-12)
        throw std::invalid_argument("cell density does not have unit trace");
    Eigen::SelfAdjointEigenSolver<Mat> es(cell_density, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
        throw std::invalid_argument("cell density is not positive semidefinite");
    const SpMat cell_sparse = cell_density.sparseView(1e-300, 1.0);
    if (!is_even(FockOperator(std::make_shared<const ModeSpace>(cell), cell_sparse, cell.sites())))
        throw std::invalid_argument("cell density is not even");

    const auto n = static_cast<Eigen::Index>(space->fock_dim());
    Mat d = Mat::Identity(n, n);
    std::map<SiteSet, LocalOperator> reduced;
    for (const auto& [c, sites] : cells_in(*space, l, offset))
    {
        const SiteSet rel = translate_set(sites, negate(c));
        auto it = reduced.find(rel);
        if (it == reduced.end())
            it = reduced.emplace(rel, car_expand(cell_sparse, cell, rel)).first;
        const SpMat r = instantiate_matrix(it->second.translated(c), *space);
        d = r * d;
    }
    d /= d.trace();
    d = 0.5 * (d + d.adjoint()).eval();

    LatticeState s(space, l, LatticeState::Tag::product);
    s.rho_ = std::move(d);
    s.spec_ = ProductSpec{l, offset, cell_density, std::nullopt};
    return s;
}

LatticeState product_state(const Vec& cell_vector, const SpacePtr& space, const PeriodVector& l, const Site& offset_in)
{
    check_period(l, *space);
    space->require_modes(VECTOR_MODE_CAP, "product vector");
    const Site offset = resolve_offset(offset_in, space->dimension());
    ModeSpace cell(l.cell_sites(), space->nspin(), space->dimension());
    if (cell_vector.size() != static_cast<Eigen::Index>(cell.fock_dim()))
        throw std::invalid_argument("cell vector dimension does not match the cell modes");
    if (std::abs(cell_vector.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("cell vector is not normalised");
    if (!parity_definite(cell_vector, 1e-12))
        throw std::invalid_argument("cell vector has no definite parity");

    // |n> = a^dag_{j1} ... a^dag_{jk} |0>, ascending modes
    LocalOperator creation;
    for (Eigen::Index b = 0; b < cell_vector.size(); ++b)
    {
        if (cell_vector[b] == cplx{0.0, 0.0})
            continue;
        Monomial m;
        m.coeff = cell_vector[b];
        for (int j = 0; j < cell.modes(); ++j)
            if ((static_cast<std::uint64_t>(b) >> j) & 1u)
                m.factors.push_back({cell.site_of_mode(j), cell.spin_of_mode(j), true});
        creation.add_term(std::move(m));
    }

    Vec psi = Vec::Zero(static_cast<Eigen::Index>(space->fock_dim()));
    psi[0] = 1.0;
    const std::size_t cell_size = cell.sites().size();
    for (const auto& [c, sites] : cells_in(*space, l, offset))
    {
        if (sites.size() != cell_size)
            throw GeometryError("box is not a whole number of cells; use a cell density");
        psi = instantiate_matrix(creation.translated(c), *space) * psi;
    }
    psi.normalize();

    LatticeState s(space, l, LatticeState::Tag::product);
    s.psi_ = std::move(psi);
    s.spec_ = ProductSpec{l, offset, std::nullopt, cell_vector};
    return s;
}

LatticeState rebuild(const ProductSpec& spec, const SpacePtr& space)
{
    if (spec.cell_vector)
        return product_state(*spec.cell_vector, space, spec.l, spec.offset);
    return product_state(*spec.cell_density, space, spec.l, spec.offset);
}

LatticeState translated_state(const LatticeState& rho, const Site& x)
{
    if (!rho.product_spec())
        throw std::invalid_argument("only product states can be translated on a finite box");
    ProductSpec spec = *rho.product_spec();
    spec.offset = sub(spec.offset, x);
    return rebuild(spec, rho.space());
}

// ---------------------------------------------------------------- expectations

cplx expectation(const Vec& psi, const SpMat& a) { return psi.dot(a * psi); }

cplx expectation(const Mat& rho, const SpMat& a)
{
    cplx acc{0.0, 0.0};
    for (int k = 0; k < a.outerSize(); ++k)
        for (SpMat::InnerIterator it(a, k); it; ++it)
            acc += it.value() * rho(it.col(), it.row());
    return acc;
}

cplx expectation(const LatticeState& rho, const FockOperator& a)
{
    if (!(*a.space() == *rho.space()))
        throw GeometryError("operator and state live on different boxes");
    return rho.is_pure() ? expectation(rho.vector(), a.matrix()) : expectation(rho.density_matrix(), a.matrix());
}

cplx expectation(const LatticeState& rho, const LocalOperator& a)
{
    return expectation(rho, instantiate(a, rho.space()));
}

// ---------------------------------------------------------------- mixtures

Mixture::Mixture(std::vector<double> weights, std::vector<LatticeState> states)
    : weights_(std::move(weights)), states_(std::move(states))
{
    if (weights_.empty() || weights_.size() != states_.size())
        throw std::invalid_argument("mixture needs one weight per component");
    double total = 0.0;
    for (double w : weights_)
    {
        if (!(w > 0.0))
            throw std::invalid_argument("mixture weights must be positive");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("mixture weights must sum to one");
    for (const auto& s : states_)
        if (!(*s.space() == *states_.front().space()))
            throw GeometryError("mixture components live on different boxes");
}

cplx Mixture::expectation(const FockOperator& a) const
{
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < size(); ++i)
        acc += weights_[i] * lrdyn::expectation(states_[i], a);
    return acc;
}

LatticeState Mixture::as_state() const
{
    Mat d = weights_[0] * states_[0].density_matrix();
    for (std::size_t i = 1; i < size(); ++i)
        d += weights_[i] * states_[i].density_matrix();
    LatticeState s(states_[0].space(), states_[0].period(), LatticeState::Tag::mixture);
    s.rho_ = std::move(d);
    return s;
}

bool Mixture::components_distinct(double tol) const
{
    const auto& first = states_.front();
    const auto probes = periodicity_probes(first.period(), first.space()->nspin());
    for (std::size_t i = 0; i < size(); ++i)
        for (std::size_t j = i + 1; j < size(); ++j)
        {
            bool differ = false;
            for (const auto& p : probes)
            {
                if (!first.space()->contains(p.support()))
                    continue;
                const FockOperator op = instantiate(p, first.space());
                if (std::abs(lrdyn::expectation(states_[i], op) - lrdyn::expectation(states_[j], op)) > tol)
                {
                    differ = true;
                    break;
                }
            }
            if (!differ)
                return false;
        }
    return true;
}

// ---------------------------------------------------------------- averages

FockOperator space_average(const FockOperator& a, const SpacePtr& space, int L, const PeriodVector& l)
{
    if (l.dimension() != space->dimension())
        throw std::invalid_argument("period vector dimension does not match the box");
    const LocalOperator local = as_local(a);
    const auto shifts = sublattice_points(Box(space->dimension(), L), l);
    LocalOperator sum;
    SiteSet support;
    const cplx w = 1.0 / static_cast<double>(shifts.size());
    for (const auto& x : shifts)
    {
        const SiteSet moved = translate_set(a.support(), x);
        if (!space->contains(moved))
            throw GeometryError("space average: translated support leaves the box");
        sum += local.translated(x) * w;
        support.insert(support.end(), moved.begin(), moved.end());
    }
    return FockOperator(space, instantiate_matrix(sum, *space), std::move(support));
}

double ergodicity_defect(const LatticeState& rho, const FockOperator& a, int L, const PeriodVector& l)
{
    const FockOperator al = space_average(a, rho.space(), L, l);
    const FockOperator a_here = instantiate(as_local(a), rho.space());
    const cplx second = expectation(rho, al.adjoint() * al);
    return second.real() - std::norm(expectation(rho, a_here));
}

double ergodicity_defect(const Mixture& mix, const FockOperator& a, int L, const PeriodVector& l)
{
    const SpacePtr& space = mix.component(0).space();
    const FockOperator al = space_average(a, space, L, l);
    const FockOperator a_here = instantiate(as_local(a), space);
    return mix.expectation(al.adjoint() * al).real() - std::norm(mix.expectation(a_here));
}

// ---------------------------------------------------------------- coarse graining

Mixture coarse_grain(const LatticeState& rho, const PeriodVector& l1, const PeriodVector& l2)
{
    if (l1.dimension() != l2.dimension() || l1.dimension() != rho.space()->dimension())
        throw std::invalid_argument("coarse_grain: period dimensions differ");
    for (int i = 0; i < l1.dimension(); ++i)
        if (l1.l[i] % l2.l[i] != 0)
            throw std::invalid_argument("coarse_grain: l2 must divide l1 componentwise");
    if (!(rho.period() == l1))
        throw std::invalid_argument("coarse_grain: state is not declared l1-periodic");

    std::vector<Site> shifts{Site{}};
    for (int i = 0; i < l1.dimension(); ++i)
    {
        std::vector<Site> next;
        for (const auto& s : shifts)
            for (int v = 0; v < l1.l[i]; v += l2.l[i])
            {
                Site x = s;
                x.push_back(v);
                next.push_back(std::move(x));
            }
        shifts = std::move(next);
    }
    const double w = static_cast<double>(l2.volume()) / static_cast<double>(l1.volume());
    std::vector<double> weights(shifts.size(), w);
    std::vector<LatticeState> states;
    for (const auto& x : shifts)
        states.push_back(translated_state(rho, x));
    // keep the weights summing to one in floating point
    weights.back() = 1.0 - w * static_cast<double>(shifts.size() - 1);
    return Mixture(std::move(weights), std::move(states));
}

Mixture coarse_grain(const Mixture& rho, const PeriodVector& l1, const PeriodVector& l2)
{
    std::vector<double> weights;
    std::vector<LatticeState> states;
    for (std::size_t i = 0; i < rho.size(); ++i)
    {
        const Mixture part = coarse_grain(rho.component(i), l1, l2);
        for (std::size_t j = 0; j < part.size(); ++j)
        {
            weights.push_back(rho.weight(i) * part.weight(j));
            states.push_back(part.component(j));
        }
    }
    double total = 0.0;
    for (double w : weights)
        total += w;
    for (double& w : weights)
        w /= total;
    return Mixture(std::move(weights), std::move(states));
}

// ---------------------------------------------------------------- periodicity

std::vector<LocalOperator> periodicity_probes(const PeriodVector& l, int nspin)
{
    std::vector<LocalOperator> probes;
    const auto sites = l.cell_sites();
    for (const auto& x : sites)
        for (int s = 0; s < nspin; ++s)
            probes.push_back(LocalOperator::number(x, s));
    for (const auto& x : sites)
        for (int i = 0; i < l.dimension(); ++i)
        {
            Site y = x;
            ++y[i];
            if (y[i] >= l.l[i])
                continue;
            for (int s = 0; s < nspin; ++s)
                probes.push_back(LocalOperator::creator(x, s) * LocalOperator::annihilator(y, s)
                                 + LocalOperator::creator(y, s) * LocalOperator::annihilator(x, s));
        }
    if (nspin == 2)
        for (const auto& x : sites)
            probes.push_back(LocalOperator::annihilator(x, SPIN_DOWN) * LocalOperator::annihilator(x, SPIN_UP));
    return probes;
}

bool verify_periodicity(const LatticeState& rho, const PeriodVector& l, double tol)
{
    const auto& space = rho.space();
    const int d = space->dimension();
    int reach = 0;
    for (const auto& x : space->sites())
        for (int c : x)
            reach = std::max(reach, std::abs(c));
    for (const auto& p : periodicity_probes(l, space->nspin()))
    {
        std::optional<cplx> first;
        for (const auto& x : sublattice_points(Box(d, 2 * reach + 1), l))
        {
            const LocalOperator moved = p.translated(x);
            if (!space->contains(moved.support()))
                continue;
            const cplx v = expectation(rho, moved);
            if (!first)
                first = v;
            else if (std::abs(v - *first) > tol)
                return false;
        }
    }
    return true;
}

} // namespace lrdyn
