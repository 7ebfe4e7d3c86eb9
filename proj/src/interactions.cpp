#include "lrdyn/interactions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lrdyn
{

double local_norm(const LocalOperator& op, int dimension, int nspin)
{
    const SiteSet sup = op.simplified().support();
    if (sup.empty())
    {
        cplx c{0.0, 0.0};
        for (const auto& t : op.terms())
            c += t.coeff;
        return std::abs(c);
    }
    ModeSpace space(sup, nspin, dimension);
    return spectral_norm(instantiate_matrix(op, space));
}

Interaction::Interaction(int dimension, int nspin, bool translation_invariant)
    : d_(dimension), nspin_(nspin), ti_(translation_invariant)
{
    if (dimension < 1 || nspin < 1)
        throw std::invalid_argument("interaction needs dimension >= 1 and a non-empty spin set");
}

void Interaction::add(const SiteSet& z_in, const LocalOperator& op_in)
{
    SiteSet z = normalize_set(z_in);
    if (z.empty())
        throw std::invalid_argument("interaction terms need a non-empty site set");
    for (const auto& x : z)
        if (static_cast<int>(x.size()) != d_)
            throw GeometryError("interaction site of wrong dimension");
    LocalOperator op = op_in.simplified(1e-15);
    if (!op.is_formally_even())
        throw std::invalid_argument("interaction term is not even");
    for (const auto& x : op.support())
        if (!std::binary_search(z.begin(), z.end(), x))
            throw GeometryError("interaction term acts outside its site set");

    if (ti_)
    {
        const Site shift = negate(z.front());
        z = translate_set(z, shift);
        op = op.translated(shift);
    }
    auto it = terms_.find(z);
    if (it == terms_.end())
        it = terms_.emplace(z, LocalOperator{}).first;
    it->second = (it->second + op).simplified(1e-15);
    if (it->second.empty())
    {
        terms_.erase(it);
        norms_.erase(z);
        return;
    }
    norms_[z] = local_norm(it->second, d_, nspin_);
}

double Interaction::term_norm(const SiteSet& z) const
{
    auto it = norms_.find(z);
    return it == norms_.end() ? 0.0 : it->second;
}

std::vector<TiledTerm> Interaction::tiled(const std::vector<Site>& sites) const
{
    auto inside = [&sites](const SiteSet& s) {
        return std::all_of(s.begin(), s.end(),
                           [&sites](const Site& x) { return std::binary_search(sites.begin(), sites.end(), x); });
    };
    std::vector<TiledTerm> out;
    for (const auto& [z, op] : terms_)
    {
        const double nz = term_norm(z);
        if (!ti_)
        {
            if (inside(z))
                out.push_back({z, op, nz});
            continue;
        }
        for (const auto& y : sites)
        {
            SiteSet zy = translate_set(z, y);
            if (inside(zy))
                out.push_back({std::move(zy), op.translated(y), nz});
        }
    }
    return out;
}

int Interaction::range() const
{
    int r = 0;
    for (const auto& [z, op] : terms_)
        for (const auto& x : z)
            for (const auto& y : z)
                for (int i = 0; i < d_; ++i)
                    r = std::max(r, std::abs(x[i] - y[i]));
    return r;
}

Interaction Interaction::adjoint() const
{
    Interaction out(d_, nspin_, ti_);
    for (const auto& [z, op] : terms_)
    {
        out.terms_[z] = op.adjoint().simplified(1e-15);
        out.norms_[z] = term_norm(z);
    }
    return out;
}

Interaction Interaction::scaled(cplx c) const
{
    Interaction out(d_, nspin_, ti_);
    if (c == cplx{0.0, 0.0})
        return out;
    for (const auto& [z, op] : terms_)
    {
        out.terms_[z] = op * c;
        out.norms_[z] = std::abs(c) * term_norm(z);
    }
    return out;
}

bool Interaction::is_self_adjoint(double tol) const { return approx_equal(*this, adjoint(), tol); }

Interaction operator+(const Interaction& a, const Interaction& b)
{
    if (a.d_ != b.d_ || a.nspin_ != b.nspin_ || a.ti_ != b.ti_)
        throw std::invalid_argument("cannot add interactions of different kinds");
    Interaction out = a;
    for (const auto& [z, op] : b.terms_)
        out.add(z, op);
    return out;
}

bool approx_equal(const Interaction& a, const Interaction& b, double tol)
{
    if (a.d_ != b.d_ || a.nspin_ != b.nspin_ || a.ti_ != b.ti_)
        return false;
    std::map<SiteSet, LocalOperator> diff = a.terms_;
    for (const auto& [z, op] : b.terms_)
        diff[z] = diff[z] - op;
    for (const auto& [z, op] : diff)
    {
        const LocalOperator s = op.simplified(0.1 * tol);
        if (!s.empty() && local_norm(s, a.d_, a.nspin_) > tol)
            return false;
    }
    return true;
}

// ---------------------------------------------------------------- families

namespace
{
    Site unit_vector(int d, int i)
    {
        Site e(d, 0);
        e[i] = 1;
        return e;
    }
} // namespace

Interaction onsite_number(int dimension, int nspin, cplx c)
{
    Interaction phi(dimension, nspin, true);
    const Site o = origin(dimension);
    LocalOperator op;
    for (int s = 0; s < nspin; ++s)
        op += LocalOperator::number(o, s) * c;
    phi.add({o}, op);
    return phi;
}

Interaction onsite_hubbard(int dimension, cplx u)
{
    Interaction phi(dimension, 2, true);
    const Site o = origin(dimension);
    phi.add({o}, LocalOperator::number(o, SPIN_UP) * LocalOperator::number(o, SPIN_DOWN) * u);
    return phi;
}

Interaction nn_hopping(int dimension, int nspin, double t)
{
    Interaction phi(dimension, nspin, true);
    const Site o = origin(dimension);
    for (int i = 0; i < dimension; ++i)
    {
        const Site e = unit_vector(dimension, i);
        LocalOperator op;
        for (int s = 0; s < nspin; ++s)
        {
            op += LocalOperator::creator(o, s) * LocalOperator::annihilator(e, s);
            op += LocalOperator::creator(e, s) * LocalOperator::annihilator(o, s);
        }
        phi.add({o, e}, op * cplx(-t));
    }
    return phi;
}

Interaction nn_density(int dimension, int nspin, double v)
{
    Interaction phi(dimension, nspin, true);
    const Site o = origin(dimension);
    for (int i = 0; i < dimension; ++i)
    {
        const Site e = unit_vector(dimension, i);
        LocalOperator n0, n1;
        for (int s = 0; s < nspin; ++s)
        {
            n0 += LocalOperator::number(o, s);
            n1 += LocalOperator::number(e, s);
        }
        phi.add({o, e}, (n0 * n1) * cplx(v));
    }
    return phi;
}

Interaction pairing_creation(int dimension)
{
    Interaction phi(dimension, 2, true);
    const Site o = origin(dimension);
    phi.add({o}, LocalOperator::creator(o, SPIN_UP) * LocalOperator::creator(o, SPIN_DOWN));
    return phi;
}

Interaction pairing_annihilation(int dimension)
{
    Interaction phi(dimension, 2, true);
    const Site o = origin(dimension);
    phi.add({o}, LocalOperator::annihilator(o, SPIN_DOWN) * LocalOperator::annihilator(o, SPIN_UP));
    return phi;
}

Interaction custom_interaction(int dimension, int nspin, const SiteSet& z0, const Mat& m)
{
    const SiteSet z = normalize_set(z0);
    ModeSpace space(z, nspin, dimension);
    if (m.rows() != static_cast<Eigen::Index>(space.fock_dim()) || m.cols() != m.rows())
        throw std::invalid_argument("custom matrix dimension must be 2^(|Z| * |S|)");
    const SpMat sm = m.sparseView(1e-15, 1.0);
    LocalOperator op = car_expand(sm, space, z);
    Interaction phi(dimension, nspin, true);
    phi.add(z, op);
    return phi;
}

// ---------------------------------------------------------------- norms

double w_norm(const Interaction& phi, const DecayFunction& f, const Box& box)
{
    const auto& sites = box.sites();
    const std::size_t n = sites.size();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    for (const auto& t : phi.tiled(sites))
        for (const auto& x : t.sites)
            for (const auto& y : t.sites)
                acc(box.rank(x), box.rank(y)) += t.norm;
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (acc(i, j) > 0.0)
                best = std::max(best, acc(i, j) / f(sites[i], sites[j]));
    return best;
}

double w_norm_lattice(const Interaction& phi, const DecayFunction& f)
{
    std::map<std::pair<Site, Site>, double> acc;
    if (phi.translation_invariant())
    {
        // by invariance only x = 0 matters: sum over translates Z0 - z, z in Z0
        const Site o = origin(phi.dimension());
        for (const auto& [z0, op] : phi.terms())
        {
            const double nz = phi.term_norm(z0);
            for (const auto& z : z0)
                for (const auto& y : translate_set(z0, negate(z)))
                    acc[{o, y}] += nz;
        }
    }
    else
    {
        for (const auto& [z, op] : phi.terms())
        {
            const double nz = phi.term_norm(z);
            for (const auto& x : z)
                for (const auto& y : z)
                    acc[{x, y}] += nz;
        }
    }
    double best = 0.0;
    for (const auto& [xy, v] : acc)
        best = std::max(best, v / f(xy.first, xy.second));
    return best;
}

int EnergyDensity::radius() const
{
    int r = 0;
    for (const auto& x : support)
        for (int c : x)
            r = std::max(r, std::abs(c));
    return r;
}

EnergyDensity energy_density(const Interaction& phi, const PeriodVector& l)
{
    if (!phi.translation_invariant())
        throw std::invalid_argument("energy density needs a translation-invariant interaction");
    if (l.dimension() != phi.dimension())
        throw std::invalid_argument("period vector dimension does not match the interaction");
    const double vol = static_cast<double>(l.volume());
    LocalOperator e;
    for (const auto& x : l.cell_sites())
        for (const auto& [z0, op] : phi.terms())
        {
            const double w = 1.0 / (vol * static_cast<double>(z0.size()));
            for (const auto& z : z0)
                e += op.translated(sub(x, z)) * cplx(w);
        }
    e = e.simplified(1e-15);
    return {e, e.support()};
}

// ---------------------------------------------------------------- models

Atom Atom::reversed() const
{
    Atom r;
    r.weight = weight;
    for (auto it = factors.rbegin(); it != factors.rend(); ++it)
        r.factors.push_back(it->adjoint());
    return r;
}

Atom make_atom(double weight, std::vector<Interaction> raw, const DecayFunction& f)
{
    if (raw.empty())
        throw std::invalid_argument("atoms need at least one factor");
    Atom a;
    a.weight = weight;
    for (auto& psi : raw)
    {
        const double n = w_norm_lattice(psi, f);
        if (!(n > 0.0))
            throw std::invalid_argument("atom factor has zero norm");
        a.weight *= n;
        a.factors.push_back(psi.scaled(1.0 / n));
    }
    return a;
}

double s_norm(const std::vector<Atom>& atoms, double normF1)
{
    double s = 0.0;
    for (const auto& a : atoms)
    {
        const int n = a.order();
        s += static_cast<double>(n * n) * std::pow(normF1, n - 1) * std::abs(a.weight);
    }
    return s;
}

double m_norm(const LongRangeModel& m, const Box& box)
{
    const auto dc = decay_constants(m.decay, box);
    return w_norm(m.phi, m.decay, box) + s_norm(m.atoms, dc.normF1);
}

bool model_selfadjoint_check(const LongRangeModel& m, double tol)
{
    if (!m.phi.is_self_adjoint(tol))
        return false;
    for (const auto& a : m.atoms)
        for (const auto& psi : a.factors)
            if (std::abs(w_norm_lattice(psi, m.decay) - 1.0) > 1e-9)
                return false;
    for (const auto& a : m.atoms)
    {
        const Atom r = a.reversed();
        const bool matched = std::any_of(m.atoms.begin(), m.atoms.end(), [&](const Atom& b) {
            if (b.order() != r.order() || std::abs(b.weight - r.weight) > tol)
                return false;
            for (int j = 0; j < r.order(); ++j)
                if (!approx_equal(b.factors[j], r.factors[j], tol))
                    return false;
            return true;
        });
        if (!matched)
            return false;
    }
    return true;
}

LongRangeModel build_bcs_model(int dimension, double gamma, double mu, double hopping, const DecayFunction& f)
{
    LongRangeModel m{onsite_number(dimension, 2, -mu), {}, f};
    if (hopping != 0.0)
        m.phi = m.phi + nn_hopping(dimension, 2, hopping);
    if (gamma != 0.0)
        m.atoms.push_back(make_atom(-gamma, {pairing_creation(dimension), pairing_annihilation(dimension)}, f));
    return m;
}

double Schedule::operator()(double t) const
{
    switch (kind)
    {
    case Kind::constant:
        return a;
    case Kind::linear:
        return a + b * t;
    case Kind::sinusoidal:
        return a + b * std::sin(omega * t);
    }
    return a;
}

double Schedule::sup_abs(double s, double t) const
{
    const double lo = std::min(s, t), hi = std::max(s, t);
    switch (kind)
    {
    case Kind::constant:
        return std::abs(a);
    case Kind::linear:
        return std::max(std::abs((*this)(lo)), std::abs((*this)(hi)));
    case Kind::sinusoidal: {
        double best = std::max(std::abs((*this)(lo)), std::abs((*this)(hi)));
        const double w = std::abs(omega);
        if (w == 0.0)
            return best;
        // crests and troughs sit at |omega| t = pi/2 + k pi; two consecutive ones cover both
        const double pi = std::numbers::pi;
        const double kmin = std::ceil((w * lo - pi / 2) / pi);
        for (double k = kmin; k < kmin + 2.0; k += 1.0)
        {
            const double tk = (pi / 2 + k * pi) / w;
            if (tk <= hi)
                best = std::max(best, std::abs((*this)(tk)));
        }
        return best;
    }
    }
    return std::abs(a);
}

LongRangeModel TimeDependentModel::at(double t) const
{
    LongRangeModel m{base.phi.scaled(phi_schedule(t)), base.atoms, base.decay};
    for (std::size_t k = 0; k < m.atoms.size(); ++k)
        m.atoms[k].weight *= atom_coefficient(k, t);
    return m;
}

bool TimeDependentModel::autonomous() const
{
    auto is_const = [](const Schedule& s) { return s.kind == Schedule::Kind::constant || s.b == 0.0; };
    return is_const(phi_schedule) && std::all_of(atom_schedules.begin(), atom_schedules.end(), is_const);
}

} // namespace lrdyn
