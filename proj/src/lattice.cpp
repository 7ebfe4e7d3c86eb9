#include "lrdyn/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "lrdyn/linalg.hpp"

namespace lrdyn
{

std::vector<Site> box_sites(int d, int L, std::size_t site_cap)
{
    if (d < 1)
        throw std::invalid_argument("box dimension must be >= 1");
    if (L < 0)
        throw std::invalid_argument("box radius must be >= 0");

    const std::size_t side = static_cast<std::size_t>(2 * L + 1);
    std::size_t count = 1;
    for (int i = 0; i < d; ++i)
    {
        count *= side;
        if (count * static_cast<std::size_t>(d) > site_cap)
            throw ResourceLimit("box of dimension " + std::to_string(d) + " and radius "
                                + std::to_string(L) + " exceeds the site cap");
    }

    std::vector<Site> sites;
    sites.reserve(count);
    Site x(d, -L);
    for (std::size_t n = 0; n < count; ++n)
    {
        sites.push_back(x);
        for (int i = d - 1; i >= 0; --i)
        {
            if (x[i] < L)
            {
                ++x[i];
                break;
            }
            x[i] = -L;
        }
    }
    return sites;
}

Box::Box(int d, int L) : d_(d), L_(L), sites_(box_sites(d, L)) {}

bool Box::contains(const Site& x) const
{
    if (static_cast<int>(x.size()) != d_)
        return false;
    return std::all_of(x.begin(), x.end(), [this](int c) { return std::abs(c) <= L_; });
}

bool Box::contains(const SiteSet& s) const
{
    return std::all_of(s.begin(), s.end(), [this](const Site& x) { return contains(x); });
}

std::size_t Box::rank(const Site& x) const
{
    if (!contains(x))
        throw GeometryError("site outside box");
    std::size_t r = 0;
    const std::size_t side = static_cast<std::size_t>(2 * L_ + 1);
    for (int i = 0; i < d_; ++i)
        r = r * side + static_cast<std::size_t>(x[i] + L_);
    return r;
}

Site add(const Site& a, const Site& b)
{
    Site r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        r[i] = a[i] + b[i];
    return r;
}

Site sub(const Site& a, const Site& b)
{
    Site r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        r[i] = a[i] - b[i];
    return r;
}

Site negate(const Site& a)
{
    Site r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        r[i] = -a[i];
    return r;
}

Site origin(int d) { return Site(d, 0); }

SiteSet normalize_set(SiteSet s)
{
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

SiteSet translate_set(const SiteSet& s, const Site& x)
{
    SiteSet r;
    r.reserve(s.size());
    for (const auto& y : s)
        r.push_back(add(y, x));
    return normalize_set(std::move(r));
}

SiteSet canonical_set(const SiteSet& s)
{
    if (s.empty())
        return s;
    SiteSet n = normalize_set(s);
    return translate_set(n, negate(n.front()));
}

PeriodVector::PeriodVector(std::vector<int> v) : l(std::move(v))
{
    if (l.empty())
        throw std::invalid_argument("period vector must be non-empty");
    for (int li : l)
        if (li < 1)
            throw std::invalid_argument("period entries must be >= 1");
}

int PeriodVector::volume() const
{
    int v = 1;
    for (int li : l)
        v *= li;
    return v;
}

std::vector<Site> PeriodVector::cell_sites() const
{
    std::vector<Site> out;
    const int d = dimension();
    Site x(d, 0);
    const int n = volume();
    for (int k = 0; k < n; ++k)
    {
        out.push_back(x);
        for (int i = d - 1; i >= 0; --i)
        {
            if (x[i] + 1 < l[i])
            {
                ++x[i];
                break;
            }
            x[i] = 0;
        }
    }
    return out;
}

bool PeriodVector::in_sublattice(const Site& x) const
{
    for (std::size_t i = 0; i < l.size(); ++i)
        if (x[i] % l[i] != 0)
            return false;
    return true;
}

std::vector<Site> sublattice_points(const Box& box, const PeriodVector& l)
{
    std::vector<Site> out;
    for (const auto& x : box.sites())
        if (l.in_sublattice(x))
            out.push_back(x);
    return out;
}

DecayFunction DecayFunction::exponential(double kappa)
{
    if (!(kappa > 0.0))
        throw std::invalid_argument("exponential decay needs kappa > 0");
    return DecayFunction(Family::exponential, kappa);
}

DecayFunction DecayFunction::polynomial(double p)
{
    if (!(p > 0.0))
        throw std::invalid_argument("polynomial decay needs p > 0");
    return DecayFunction(Family::polynomial, p);
}

double DecayFunction::operator()(const Site& x, const Site& y) const
{
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        const double d = static_cast<double>(x[i] - y[i]);
        r2 += d * d;
    }
    const double r = std::sqrt(r2);
    switch (family_)
    {
    case Family::exponential:
        return std::exp(-param_ * r);
    case Family::polynomial:
        return std::pow(1.0 + r, -param_);
    }
    return 1.0;
}

std::string DecayFunction::describe() const
{
    std::ostringstream os;
    os << (family_ == Family::exponential ? "exponential(kappa=" : "polynomial(p=") << param_ << ")";
    return os.str();
}

DecayConstants decay_constants(const DecayFunction& F, const Box& box)
{
    const auto& sites = box.sites();
    const std::size_t n = sites.size();
    if (n == 0)
        throw std::invalid_argument("decay constants need a non-empty box");

    Eigen::MatrixXd f(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            f(i, j) = F(sites[i], sites[j]);

    const double normF1 = f.colwise().sum().maxCoeff();
    const Eigen::MatrixXd ff = f * f;
    const double constD = (ff.array() / f.array()).maxCoeff();
    if (!std::isfinite(normF1) || !std::isfinite(constD))
        throw std::overflow_error("decay constants overflowed");
    return {normF1, constD};
}

} // namespace lrdyn
