#include "lrdyn/fock.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace lrdyn
{

// ---------------------------------------------------------------- LocalOperator

LocalOperator LocalOperator::scalar(cplx c)
{
    LocalOperator op;
    op.terms_.push_back({c, {}});
    return op;
}

LocalOperator LocalOperator::annihilator(const Site& x, int spin)
{
    LocalOperator op;
    op.terms_.push_back({1.0, {Factor{x, spin, false}}});
    return op;
}

LocalOperator LocalOperator::creator(const Site& x, int spin)
{
    LocalOperator op;
    op.terms_.push_back({1.0, {Factor{x, spin, true}}});
    return op;
}

LocalOperator LocalOperator::number(const Site& x, int spin)
{
    LocalOperator op;
    op.terms_.push_back({1.0, {Factor{x, spin, true}, Factor{x, spin, false}}});
    return op;
}

void LocalOperator::add_term(Monomial m) { terms_.push_back(std::move(m)); }

LocalOperator LocalOperator::adjoint() const
{
    LocalOperator out;
    out.terms_.reserve(terms_.size());
    for (const auto& t : terms_)
    {
        Monomial m;
        m.coeff = std::conj(t.coeff);
        m.factors.assign(t.factors.rbegin(), t.factors.rend());
        for (auto& f : m.factors)
            f.dagger = !f.dagger;
        out.terms_.push_back(std::move(m));
    }
    return out;
}

LocalOperator LocalOperator::translated(const Site& x) const
{
    LocalOperator out = *this;
    for (auto& t : out.terms_)
        for (auto& f : t.factors)
            f.site = add(f.site, x);
    return out;
}

LocalOperator LocalOperator::simplified(double tol) const
{
    std::map<std::vector<Factor>, cplx> acc;
    std::vector<std::vector<Factor>> order;
    for (const auto& t : terms_)
    {
        auto [it, inserted] = acc.try_emplace(t.factors, cplx{0.0, 0.0});
        if (inserted)
            order.push_back(t.factors);
        it->second += t.coeff;
    }
    LocalOperator out;
    for (const auto& w : order)
    {
        const cplx c = acc[w];
        if (std::abs(c) > tol)
            out.terms_.push_back({c, w});
    }
    return out;
}

SiteSet LocalOperator::support() const
{
    SiteSet s;
    for (const auto& t : terms_)
    {
        if (t.coeff == cplx{0.0, 0.0})
            continue;
        for (const auto& f : t.factors)
            s.push_back(f.site);
    }
    return normalize_set(std::move(s));
}

bool LocalOperator::is_formally_even() const
{
    return std::all_of(terms_.begin(), terms_.end(),
                       [](const Monomial& m) { return m.factors.size() % 2 == 0; });
}

LocalOperator& LocalOperator::operator+=(const LocalOperator& o)
{
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    return *this;
}

LocalOperator& LocalOperator::operator*=(cplx c)
{
    for (auto& t : terms_)
        t.coeff *= c;
    return *this;
}

LocalOperator operator*(const LocalOperator& a, const LocalOperator& b)
{
    LocalOperator out;
    for (const auto& ta : a.terms())
        for (const auto& tb : b.terms())
        {
            Monomial m;
            m.coeff = ta.coeff * tb.coeff;
            m.factors = ta.factors;
            m.factors.insert(m.factors.end(), tb.factors.begin(), tb.factors.end());
            out.add_term(std::move(m));
        }
    return out;
}

// ---------------------------------------------------------------- ModeSpace

ModeSpace::ModeSpace(const Box& box, int nspin) : ModeSpace(box.sites(), nspin, box.dimension()) {}

ModeSpace::ModeSpace(SiteSet sites, int nspin, int dimension)
    : d_(dimension), nspin_(nspin), sites_(normalize_set(std::move(sites)))
{
    if (nspin < 1)
        throw std::invalid_argument("spin set must be non-empty");
    for (std::size_t i = 0; i < sites_.size(); ++i)
    {
        if (static_cast<int>(sites_[i].size()) != d_)
            throw GeometryError("site dimension does not match the space");
        rank_.emplace(sites_[i], static_cast<int>(i));
    }
    if (modes() > 62)
        throw ResourceLimit("mode space too large");
}

bool ModeSpace::contains(const SiteSet& s) const
{
    return std::all_of(s.begin(), s.end(), [this](const Site& x) { return contains(x); });
}

int ModeSpace::mode(const Site& x, int spin) const
{
    auto it = rank_.find(x);
    if (it == rank_.end())
        throw GeometryError("site not in mode space");
    if (spin < 0 || spin >= nspin_)
        throw std::out_of_range("spin label out of range");
    return it->second * nspin_ + spin;
}

void ModeSpace::require_modes(int cap, const std::string& what) const
{
    if (modes() > cap)
        throw ResourceLimit(what + ": " + std::to_string(modes()) + " modes exceed the cap of "
                            + std::to_string(cap));
}

SpacePtr make_space(const Box& box, int nspin) { return std::make_shared<const ModeSpace>(box, nspin); }

SpacePtr make_space(SiteSet sites, int nspin, int dimension)
{
    return std::make_shared<const ModeSpace>(std::move(sites), nspin, dimension);
}

// ---------------------------------------------------------------- FockOperator

namespace
{
    inline bool odd_bits(std::uint64_t b) { return (std::popcount(b) & 1) != 0; }

    Parity classify(const SpMat& m)
    {
        SpMat even(m.rows(), m.cols()), odd(m.rows(), m.cols());
        std::vector<Triplet> te, to;
        for (int k = 0; k < m.outerSize(); ++k)
            for (SpMat::InnerIterator it(m, k); it; ++it)
            {
                const bool flip = odd_bits(static_cast<std::uint64_t>(it.row()))
                                  != odd_bits(static_cast<std::uint64_t>(it.col()));
                (flip ? to : te).emplace_back(it.row(), it.col(), it.value());
            }
        even.setFromTriplets(te.begin(), te.end());
        odd.setFromTriplets(to.begin(), to.end());
        constexpr double tol = 1e-10;
        // sigma(A) - A = -2 A_odd
        if (2.0 * spectral_upper_bound(odd) <= tol)
            return Parity::even;
        if (2.0 * spectral_upper_bound(even) <= tol)
            return Parity::odd;
        return Parity::mixed;
    }

    SiteSet merge(const SiteSet& a, const SiteSet& b)
    {
        SiteSet s = a;
        s.insert(s.end(), b.begin(), b.end());
        return normalize_set(std::move(s));
    }

    void check_same_space(const FockOperator& a, const FockOperator& b)
    {
        if (a.space() != b.space() && !(*a.space() == *b.space()))
            throw GeometryError("operators live on different mode spaces");
    }
} // namespace

FockOperator::FockOperator(SpacePtr space, SpMat matrix, SiteSet support)
    : space_(std::move(space)), m_(std::move(matrix)), support_(normalize_set(std::move(support)))
{
    if (static_cast<std::size_t>(m_.rows()) != space_->fock_dim() || m_.rows() != m_.cols())
        throw std::invalid_argument("operator dimension does not match the Fock space");
    m_.makeCompressed();
    parity_ = classify(m_);
}

FockOperator FockOperator::identity(SpacePtr space)
{
    const auto n = static_cast<Eigen::Index>(space->fock_dim());
    SpMat id(n, n);
    id.setIdentity();
    return FockOperator(std::move(space), std::move(id), {});
}

FockOperator FockOperator::zero(SpacePtr space)
{
    const auto n = static_cast<Eigen::Index>(space->fock_dim());
    return FockOperator(std::move(space), SpMat(n, n), {});
}

FockOperator FockOperator::adjoint() const
{
    return FockOperator(space_, SpMat(m_.adjoint()), support_);
}

FockOperator operator+(const FockOperator& a, const FockOperator& b)
{
    check_same_space(a, b);
    return FockOperator(a.space_, SpMat(a.m_ + b.m_), merge(a.support_, b.support_));
}

FockOperator operator-(const FockOperator& a, const FockOperator& b)
{
    check_same_space(a, b);
    return FockOperator(a.space_, SpMat(a.m_ - b.m_), merge(a.support_, b.support_));
}

FockOperator operator*(const FockOperator& a, const FockOperator& b)
{
    check_same_space(a, b);
    return FockOperator(a.space_, SpMat(a.m_ * b.m_), merge(a.support_, b.support_));
}

FockOperator operator*(cplx c, const FockOperator& a)
{
    return FockOperator(a.space_, SpMat(c * a.m_), a.support_);
}

FockOperator commutator(const FockOperator& a, const FockOperator& b) { return a * b - b * a; }

FockOperator anticommutator(const FockOperator& a, const FockOperator& b) { return a * b + b * a; }

// ---------------------------------------------------------------- instantiation

namespace
{
    struct ModeFactor
    {
        int mode;
        bool dagger;
    };

    /// Applies f_1 ... f_k to |b>; returns false when the result vanishes.
    inline bool apply_factors(const std::vector<ModeFactor>& fs, std::uint64_t& b, int& sign)
    {
        for (auto it = fs.rbegin(); it != fs.rend(); ++it)
        {
            const std::uint64_t bit = std::uint64_t{1} << it->mode;
            const bool occ = (b & bit) != 0;
            if (occ == it->dagger)
                return false;
            if (odd_bits(b & (bit - 1)))
                sign = -sign;
            b ^= bit;
        }
        return true;
    }
} // namespace

SpMat instantiate_matrix(const LocalOperator& op, const ModeSpace& space)
{
    space.require_modes(MATRIX_MODE_CAP, "operator instantiation");
    const std::uint64_t dim = space.fock_dim();
    std::vector<Triplet> trips;
    for (const auto& term : op.terms())
    {
        if (term.coeff == cplx{0.0, 0.0})
            continue;
        std::vector<ModeFactor> fs;
        fs.reserve(term.factors.size());
        for (const auto& f : term.factors)
            fs.push_back({space.mode(f.site, f.spin), f.dagger});
        for (std::uint64_t b = 0; b < dim; ++b)
        {
            std::uint64_t out = b;
            int sign = 1;
            if (apply_factors(fs, out, sign))
                trips.emplace_back(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(b),
                                   term.coeff * static_cast<double>(sign));
        }
    }
    SpMat m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    m.setFromTriplets(trips.begin(), trips.end());
    m.prune(cplx{0.0, 0.0});
    return m;
}

FockOperator instantiate(const LocalOperator& op, const SpacePtr& space)
{
    return FockOperator(space, instantiate_matrix(op, *space), op.simplified().support());
}

FockOperator annihilator(const SpacePtr& space, const Site& x, int spin)
{
    return instantiate(LocalOperator::annihilator(x, spin), space);
}

FockOperator creator(const SpacePtr& space, const Site& x, int spin)
{
    return instantiate(LocalOperator::creator(x, spin), space);
}

FockOperator number_op(const SpacePtr& space, const Site& x, int spin)
{
    return instantiate(LocalOperator::number(x, spin), space);
}

SpMat parity_unitary(const ModeSpace& space)
{
    const auto n = static_cast<Eigen::Index>(space.fock_dim());
    SpMat p(n, n);
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index b = 0; b < n; ++b)
        trips.emplace_back(b, b, odd_bits(static_cast<std::uint64_t>(b)) ? -1.0 : 1.0);
    p.setFromTriplets(trips.begin(), trips.end());
    return p;
}

FockOperator parity_map(const FockOperator& a)
{
    SpMat m = a.matrix();
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it)
            if (odd_bits(static_cast<std::uint64_t>(it.row()))
                != odd_bits(static_cast<std::uint64_t>(it.col())))
                it.valueRef() = -it.value();
    return FockOperator(a.space(), std::move(m), a.support());
}

bool is_even(const FockOperator& a, double tol)
{
    return spectral_norm(SpMat(parity_map(a).matrix() - a.matrix())) <= tol;
}

// ---------------------------------------------------------------- expansion

LocalOperator car_expand(const SpMat& a, const ModeSpace& space, const SiteSet& sites, double drop_tol)
{
    std::vector<int> modes;
    for (const auto& x : sites)
        for (int s = 0; s < space.nspin(); ++s)
            modes.push_back(space.mode(x, s));
    std::sort(modes.begin(), modes.end());
    const int k = static_cast<int>(modes.size());
    const std::uint64_t dim = space.fock_dim();
    const std::uint64_t nwords = std::uint64_t{1} << (2 * k);
    if (static_cast<double>(nwords) * static_cast<double>(dim) > 2e8)
        throw ResourceLimit("CAR expansion of an operator with too large a support");

    LocalOperator out;
    std::vector<int> code(k);
    for (std::uint64_t w = 0; w < nwords; ++w)
    {
        for (int j = 0; j < k; ++j)
            code[j] = static_cast<int>((w >> (2 * j)) & 3u); // 0:1 1:a 2:a^dag 3:Z

        cplx overlap{0.0, 0.0};
        double count = 0.0;
        for (std::uint64_t b = 0; b < dim; ++b)
        {
            std::uint64_t out_b = b;
            int sign = 1;
            bool alive = true;
            // rightmost factor (highest mode) acts first
            for (int j = k - 1; j >= 0 && alive; --j)
            {
                const int m = modes[j];
                const std::uint64_t bit = std::uint64_t{1} << m;
                const bool occ = (out_b & bit) != 0;
                switch (code[j])
                {
                case 0:
                    break;
                case 3:
                    if (occ)
                        sign = -sign;
                    break;
                default: {
                    const bool dag = code[j] == 2;
                    if (occ == dag)
                    {
                        alive = false;
                        break;
                    }
                    if (odd_bits(out_b & (bit - 1)))
                        sign = -sign;
                    out_b ^= bit;
                }
                }
            }
            if (!alive)
                continue;
            count += 1.0;
            overlap += static_cast<double>(sign)
                       * a.coeff(static_cast<Eigen::Index>(out_b), static_cast<Eigen::Index>(b));
        }
        if (count == 0.0)
            continue;
        const cplx c = overlap / count;
        if (std::abs(c) <= drop_tol)
            continue;

        // expand Z_j = 1 - 2 n_j
        std::vector<Monomial> partial{{c, {}}};
        for (int j = 0; j < k; ++j)
        {
            const Site& x = space.site_of_mode(modes[j]);
            const int s = space.spin_of_mode(modes[j]);
            std::vector<Monomial> next;
            for (auto& m : partial)
            {
                switch (code[j])
                {
                case 0:
                    next.push_back(m);
                    break;
                case 1:
                case 2: {
                    Monomial mm = m;
                    mm.factors.push_back({x, s, code[j] == 2});
                    next.push_back(std::move(mm));
                    break;
                }
                case 3: {
                    next.push_back(m);
                    Monomial mm = m;
                    mm.coeff *= -2.0;
                    mm.factors.push_back({x, s, true});
                    mm.factors.push_back({x, s, false});
                    next.push_back(std::move(mm));
                    break;
                }
                }
            }
            partial = std::move(next);
        }
        for (auto& m : partial)
            out.add_term(std::move(m));
    }
    return out.simplified();
}

FockOperator translate_operator(const FockOperator& a, const Site& x)
{
    const auto& space = *a.space();
    const SiteSet target = translate_set(a.support(), x);
    if (!space.contains(target))
        throw GeometryError("translated support leaves the box");
    if (a.support().empty())
        return a;
    LocalOperator local = car_expand(a.matrix(), space, a.support());
    return FockOperator(a.space(), instantiate_matrix(local.translated(x), space), target);
}

} // namespace lrdyn
