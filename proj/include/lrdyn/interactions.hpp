#pragma once

// Interactions (finitely supported maps Z -> even local element), their
// W-norm, energy densities, and long-range models m = (Phi, a) with a a
// finite list of atoms.

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lrdyn/fock.hpp"
#include "lrdyn/lattice.hpp"

namespace lrdyn
{
    struct TiledTerm
    {
        SiteSet sites;
        LocalOperator op;
        double norm;
    };

    /// A finitely supported interaction. Translation-invariant interactions
    /// store only their generating family, keyed by canonical site sets
    /// (smallest site at the origin); every translate of a key is a term.
    class Interaction
    {
    public:
        Interaction(int dimension, int nspin, bool translation_invariant);

        static Interaction zero(int dimension, int nspin, bool translation_invariant = true)
        {
            return Interaction(dimension, nspin, translation_invariant);
        }

        int dimension() const { return d_; }
        int nspin() const { return nspin_; }
        bool translation_invariant() const { return ti_; }

        /// Adds op to Phi_Z. op must be even and act only on sites of Z. For
        /// translation-invariant interactions Z (and op) are shifted to the
        /// canonical representative.
        void add(const SiteSet& z, const LocalOperator& op);

        /// Stored terms (generating family for translation-invariant ones).
        const std::map<SiteSet, LocalOperator>& terms() const { return terms_; }

        /// ||Phi_Z|| for a stored key.
        double term_norm(const SiteSet& z) const;

        /// All terms Phi_Z with Z inside `sites` (sorted). Translation-invariant
        /// interactions are tiled: every translate of every key that fits.
        std::vector<TiledTerm> tiled(const std::vector<Site>& sites) const;

        /// Largest coordinate extent of a stored key (0 for on-site).
        int range() const;

        bool empty() const { return terms_.empty(); }

        Interaction adjoint() const;
        Interaction scaled(cplx c) const;

        /// Phi = Phi^* up to tol in every term.
        bool is_self_adjoint(double tol = 1e-10) const;

        friend Interaction operator+(const Interaction& a, const Interaction& b);
        friend bool approx_equal(const Interaction& a, const Interaction& b, double tol);

    private:
        int d_;
        int nspin_;
        bool ti_;
        std::map<SiteSet, LocalOperator> terms_;
        std::map<SiteSet, double> norms_;
    };

    /// Phi^*: termwise adjoint.
    inline Interaction involution(const Interaction& phi) { return phi.adjoint(); }

    bool approx_equal(const Interaction& a, const Interaction& b, double tol = 1e-10);

    /// Norm of a local element computed on the modes of its own support.
    double local_norm(const LocalOperator& op, int dimension, int nspin);

    // ---- common families (translation invariant)

    /// c * sum_s n_{0,s}
    Interaction onsite_number(int dimension, int nspin, cplx c);
    /// U * n_{0,up} n_{0,down}
    Interaction onsite_hubbard(int dimension, cplx u);
    /// -t sum_{s, i} (a^dag_{0,s} a_{e_i,s} + a^dag_{e_i,s} a_{0,s})
    Interaction nn_hopping(int dimension, int nspin, double t);
    /// v * sum_i n_0 n_{e_i}, n = sum_s n_s
    Interaction nn_density(int dimension, int nspin, double v);
    /// b^dag_0 = a^dag_{0,up} a^dag_{0,down}
    Interaction pairing_creation(int dimension);
    /// b_0 = a_{0,down} a_{0,up}
    Interaction pairing_annihilation(int dimension);
    /// Phi_{Z0} = the element with matrix m on the Fock space of Z0's modes.
    Interaction custom_interaction(int dimension, int nspin, const SiteSet& z0, const Mat& m);

    /// Box-restricted W-norm: max_{x,y in box} sum_{Z ⊇ {x,y}} ||Phi_Z|| / F(x,y)
    /// over the terms that fit in the box.
    double w_norm(const Interaction& phi, const DecayFunction& f, const Box& box);

    /// W-norm over the whole lattice. Exact for translation-invariant
    /// interactions of finite range and for finite interactions.
    double w_norm_lattice(const Interaction& phi, const DecayFunction& f);

    /// e_{Phi,l} as a local element together with its support.
    struct EnergyDensity
    {
        LocalOperator op;
        SiteSet support;

        /// Smallest radius L with support ⊆ Lambda_L.
        int radius() const;
    };

    EnergyDensity energy_density(const Interaction& phi, const PeriodVector& l);

    /// One atom of the long-range part: weight w and n unit-norm interactions.
    struct Atom
    {
        double weight = 0.0;
        std::vector<Interaction> factors;

        int order() const { return static_cast<int>(factors.size()); }
        /// (w, (Psi_n^*, ..., Psi_1^*)).
        Atom reversed() const;
    };

    /// Builds an atom from raw interactions: each factor is divided by its
    /// lattice W-norm and the norms are absorbed into the weight.
    Atom make_atom(double weight, std::vector<Interaction> raw, const DecayFunction& f);

    /// ||a||_S = sum_n n^2 normF1^{n-1} sum_{atoms of order n} |w|.
    double s_norm(const std::vector<Atom>& atoms, double normF1);

    struct LongRangeModel
    {
        Interaction phi;
        std::vector<Atom> atoms;
        DecayFunction decay = DecayFunction::exponential(1.0);

        int dimension() const { return phi.dimension(); }
        int nspin() const { return phi.nspin(); }
        bool short_range_only() const { return atoms.empty(); }
    };

    /// ||m||_M = ||Phi||_W + ||a||_S with box-restricted constants.
    double m_norm(const LongRangeModel& m, const Box& box);

    /// Phi self-adjoint, every factor of unit lattice W-norm, and the atom
    /// list closed under reversal up to tol.
    bool model_selfadjoint_check(const LongRangeModel& m, double tol = 1e-10);

    /// Reduced BCS model: on-site -mu (n_up + n_down), optional hopping, one
    /// order-2 atom (-gamma, (b^dag, b)).
    LongRangeModel build_bcs_model(int dimension, double gamma, double mu, double hopping = 0.0,
                                   const DecayFunction& f = DecayFunction::exponential(1.0));

    /// Real coefficient schedule c(t).
    struct Schedule
    {
        enum class Kind
        {
            constant,
            linear,
            sinusoidal
        };
        Kind kind = Kind::constant;
        double a = 1.0; ///< constant value / ramp start / offset
        double b = 0.0; ///< ramp slope / amplitude
        double omega = 0.0;

        static Schedule constant(double c) { return {Kind::constant, c, 0.0, 0.0}; }
        static Schedule linear(double c0, double slope) { return {Kind::linear, c0, slope, 0.0}; }
        static Schedule sinusoidal(double offset, double amp, double omega)
        {
            return {Kind::sinusoidal, offset, amp, omega};
        }

        double operator()(double t) const;
        /// sup of |c| on [s, t].
        double sup_abs(double s, double t) const;
    };

    /// m(t) = (c_0(t) Phi, {(c_k(t) w_k, factors_k)}).
    struct TimeDependentModel
    {
        LongRangeModel base;
        Schedule phi_schedule;
        std::vector<Schedule> atom_schedules; ///< one per atom, or empty for constants

        explicit TimeDependentModel(LongRangeModel m) : base(std::move(m)) {}

        double atom_coefficient(std::size_t k, double t) const
        {
            return atom_schedules.empty() ? 1.0 : atom_schedules.at(k)(t);
        }
        LongRangeModel at(double t) const;
        bool autonomous() const;
    };

} // namespace lrdyn
