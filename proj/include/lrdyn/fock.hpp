#pragma once

// Jordan-Wigner realization of the CAR algebra of a finite set of lattice
// sites with a finite spin set.
//
// Two layers:
//  - LocalOperator is an abstract element of the CAR algebra, a polynomial
//    in a_{x,s} and a_{x,s}^dagger. It is representation independent, which
//    is what lets one interaction serve several box sizes.
//  - FockOperator is the matrix of such an element on the Fock space of a
//    ModeSpace, in the occupation basis: bit j of a basis index is the
//    occupation of mode j, and mode j carries the string prod_{k<j}(-1)^{n_k}.
//
// Modes are ordered site-major (lexicographic sites), spin-minor:
// mode = site_rank * |S| + spin.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lrdyn/lattice.hpp"
#include "lrdyn/linalg.hpp"

namespace lrdyn
{
    /// Hard caps on the number of modes for matrix and vector work.
    inline constexpr int MATRIX_MODE_CAP = 14;
    inline constexpr int VECTOR_MODE_CAP = 20;

    inline constexpr int SPIN_UP = 0;
    inline constexpr int SPIN_DOWN = 1;

    /// A generator a_{x,s} (dagger = false) or a_{x,s}^dagger.
    struct Factor
    {
        Site site;
        int spin = 0;
        bool dagger = false;

        auto operator<=>(const Factor&) const = default;
    };

    /// coeff * f_1 f_2 ... f_k (ordered product, f_1 leftmost).
    struct Monomial
    {
        cplx coeff{1.0, 0.0};
        std::vector<Factor> factors;
    };

    /// Polynomial in the CAR generators.
    class LocalOperator
    {
    public:
        LocalOperator() = default;

        static LocalOperator scalar(cplx c);
        static LocalOperator annihilator(const Site& x, int spin = 0);
        static LocalOperator creator(const Site& x, int spin = 0);
        static LocalOperator number(const Site& x, int spin = 0);

        const std::vector<Monomial>& terms() const { return terms_; }
        void add_term(Monomial m);

        LocalOperator adjoint() const;
        LocalOperator translated(const Site& x) const;

        /// Merges identical words and drops terms with |coeff| <= tol.
        LocalOperator simplified(double tol = 0.0) const;

        /// Union of all sites appearing in a non-zero term.
        SiteSet support() const;

        /// true when every monomial has an even number of factors.
        bool is_formally_even() const;
        bool empty() const { return terms_.empty(); }

        LocalOperator& operator+=(const LocalOperator& o);
        LocalOperator& operator*=(cplx c);

        friend LocalOperator operator+(LocalOperator a, const LocalOperator& b) { return a += b; }
        friend LocalOperator operator-(LocalOperator a, const LocalOperator& b)
        {
            return a += b * cplx(-1.0);
        }
        friend LocalOperator operator*(LocalOperator a, cplx c) { return a *= c; }
        friend LocalOperator operator*(cplx c, LocalOperator a) { return a *= c; }
        friend LocalOperator operator*(const LocalOperator& a, const LocalOperator& b);

    private:
        std::vector<Monomial> terms_;
    };

    /// The modes of a finite site set with |S| spin labels.
    class ModeSpace
    {
    public:
        ModeSpace(const Box& box, int nspin);
        ModeSpace(SiteSet sites, int nspin, int dimension);

        int dimension() const { return d_; }
        int nspin() const { return nspin_; }
        int modes() const { return static_cast<int>(sites_.size()) * nspin_; }
        std::size_t fock_dim() const { return std::size_t{1} << modes(); }
        const std::vector<Site>& sites() const { return sites_; }

        bool contains(const Site& x) const { return rank_.count(x) > 0; }
        bool contains(const SiteSet& s) const;
        int mode(const Site& x, int spin) const;
        const Site& site_of_mode(int mode) const { return sites_[mode / nspin_]; }
        int spin_of_mode(int mode) const { return mode % nspin_; }

        /// Throws ResourceLimit when the space exceeds the given mode cap.
        void require_modes(int cap, const std::string& what) const;

        bool operator==(const ModeSpace& o) const
        {
            return sites_ == o.sites_ && nspin_ == o.nspin_;
        }

    private:
        int d_;
        int nspin_;
        std::vector<Site> sites_;
        std::map<Site, int> rank_;
    };

    using SpacePtr = std::shared_ptr<const ModeSpace>;

    SpacePtr make_space(const Box& box, int nspin);
    SpacePtr make_space(SiteSet sites, int nspin, int dimension);

    enum class Parity
    {
        even,
        odd,
        mixed
    };

    /// Matrix of a CAR element on the Fock space of a ModeSpace, tagged with
    /// the site set it acts on. Immutable after construction.
    class FockOperator
    {
    public:
        FockOperator(SpacePtr space, SpMat matrix, SiteSet support);

        static FockOperator identity(SpacePtr space);
        static FockOperator zero(SpacePtr space);

        const SpacePtr& space() const { return space_; }
        const SpMat& matrix() const { return m_; }
        Mat dense() const { return Mat(m_); }
        const SiteSet& support() const { return support_; }
        Parity parity() const { return parity_; }
        std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }

        double norm() const { return spectral_norm(m_); }
        FockOperator adjoint() const;

        friend FockOperator operator+(const FockOperator& a, const FockOperator& b);
        friend FockOperator operator-(const FockOperator& a, const FockOperator& b);
        friend FockOperator operator*(const FockOperator& a, const FockOperator& b);
        friend FockOperator operator*(cplx c, const FockOperator& a);

    private:
        SpacePtr space_;
        SpMat m_;
        SiteSet support_;
        Parity parity_;
    };

    FockOperator commutator(const FockOperator& a, const FockOperator& b);
    FockOperator anticommutator(const FockOperator& a, const FockOperator& b);

    /// Sparse matrix of a LocalOperator on a space; every site it touches must
    /// belong to the space.
    SpMat instantiate_matrix(const LocalOperator& op, const ModeSpace& space);
    FockOperator instantiate(const LocalOperator& op, const SpacePtr& space);

    FockOperator annihilator(const SpacePtr& space, const Site& x, int spin = 0);
    FockOperator creator(const SpacePtr& space, const Site& x, int spin = 0);
    FockOperator number_op(const SpacePtr& space, const Site& x, int spin = 0);

    /// (-1)^{N}, the global parity unitary.
    SpMat parity_unitary(const ModeSpace& space);

    /// sigma(A) = P A P.
    FockOperator parity_map(const FockOperator& a);

    /// ||sigma(A) - A|| <= tol.
    bool is_even(const FockOperator& a, double tol = 1e-10);

    /// Expands a matrix on `space` into a CAR polynomial in the modes of
    /// `sites` (the matrix must act trivially elsewhere; contributions that do
    /// not are dropped). Uses the Hilbert-Schmidt orthogonal product basis
    /// X_1 ... X_k, X_j in {1, a_j, a_j^dagger, 1 - 2 n_j}, ascending modes.
    LocalOperator car_expand(const SpMat& a, const ModeSpace& space, const SiteSet& sites,
                             double drop_tol = 1e-14);

    /// alpha_x(A): shifts every generator by x. Requires support(A) + x to
    /// lie in the box of A.
    FockOperator translate_operator(const FockOperator& a, const Site& x);

} // namespace lrdyn
