#pragma once

// Cubic boxes of Z^d, site-set translations, period vectors and the decay
// functions F used by every norm in the library.

#include <cstddef>
#include <string>
#include <vector>

namespace lrdyn
{
    /// A lattice point of Z^d. Ordered lexicographically.
    using Site = std::vector<int>;

    /// A finite site set, kept sorted and duplicate-free.
    using SiteSet = std::vector<Site>;

    /// Global cap on d * (2L+1)^d for box construction.
    inline constexpr std::size_t DEFAULT_SITE_CAP = 4096;

    /// Sites of the box {-L..L}^d in lexicographic order.
    std::vector<Site> box_sites(int d, int L, std::size_t site_cap = DEFAULT_SITE_CAP);

    /// The cubic box Lambda_L in Z^d.
    class Box
    {
    public:
        Box(int d, int L);

        int dimension() const { return d_; }
        int radius() const { return L_; }
        std::size_t size() const { return sites_.size(); }
        const std::vector<Site>& sites() const { return sites_; }

        bool contains(const Site& x) const;
        bool contains(const SiteSet& s) const;

        /// position of x in the lexicographic order; x must be inside.
        std::size_t rank(const Site& x) const;

    private:
        int d_;
        int L_;
        std::vector<Site> sites_;
    };

    Site add(const Site& a, const Site& b);
    Site sub(const Site& a, const Site& b);
    Site negate(const Site& a);
    Site origin(int d);

    /// Lambda + x, re-sorted.
    SiteSet translate_set(const SiteSet& s, const Site& x);

    /// Sorts and removes duplicates.
    SiteSet normalize_set(SiteSet s);

    /// Translate a set so that its lexicographically smallest site is the origin.
    SiteSet canonical_set(const SiteSet& s);

    /// Period vector (l_1, ..., l_d), every entry >= 1.
    struct PeriodVector
    {
        std::vector<int> l;

        PeriodVector() = default;
        explicit PeriodVector(std::vector<int> v);

        static PeriodVector ones(int d) { return PeriodVector(std::vector<int>(d, 1)); }

        int dimension() const { return static_cast<int>(l.size()); }
        int volume() const;

        /// {0..l_1-1} x ... x {0..l_d-1}, lexicographic.
        std::vector<Site> cell_sites() const;

        /// x in Z^d_l, i.e. every x_i divisible by l_i.
        bool in_sublattice(const Site& x) const;

        bool operator==(const PeriodVector&) const = default;
    };

    /// Points of Lambda_L intersected with Z^d_l.
    std::vector<Site> sublattice_points(const Box& box, const PeriodVector& l);

    /// Symmetric decay kernel F(x,y) in (0,1] with F(x,x) = 1, depending on
    /// the Euclidean distance |x - y| only.
    class DecayFunction
    {
    public:
        enum class Family
        {
            exponential, ///< exp(-kappa |x-y|)
            polynomial   ///< (1 + |x-y|)^(-p)
        };

        static DecayFunction exponential(double kappa);
        static DecayFunction polynomial(double p);

        double operator()(const Site& x, const Site& y) const;

        Family family() const { return family_; }
        double parameter() const { return param_; }
        std::string describe() const;

    private:
        DecayFunction(Family f, double p) : family_(f), param_(p) {}
        Family family_;
        double param_;
    };

    /// Box-restricted summability constants of F.
    struct DecayConstants
    {
        double normF1; ///< max_y sum_x F(x,y)
        double constD; ///< max_{x,y} sum_z F(x,z)F(z,y)/F(x,y)
    };

    DecayConstants decay_constants(const DecayFunction& F, const Box& box);

} // namespace lrdyn
