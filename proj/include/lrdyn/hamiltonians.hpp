#pragma once

// Local energies U_L^Phi, U_L^m on a box, and time-dependent Hamiltonians
// H(t) = sum_k c_k(t) H_k used by the integrators.

#include <functional>
#include <string>
#include <vector>

#include "lrdyn/fock.hpp"
#include "lrdyn/interactions.hpp"

namespace lrdyn
{
    struct LocalHamiltonian
    {
        FockOperator h;
        std::string source;
        double time = 0.0;
    };

    /// U^Phi = sum of Phi_Z over all Z inside the space.
    FockOperator local_energy(const Interaction& phi, const SpacePtr& space);

    /// U^m = U^Phi + sum_atoms w |Lambda|^{-(n-1)} U^{Psi_1} ... U^{Psi_n}.
    FockOperator local_energy_model(const LongRangeModel& m, const SpacePtr& space);

    /// The atom part of U^m for a single atom (weight and prefactor included).
    FockOperator atom_energy(const Atom& atom, const SpacePtr& space);

    LocalHamiltonian local_hamiltonian(const LongRangeModel& m, const SpacePtr& space, double t = 0.0);

    /// H(t) = sum_k c_k(t) H_k with sparse H_k and complex coefficients.
    class TimeDependentHamiltonian
    {
    public:
        using Coefficient = std::function<cplx(double)>;

        explicit TimeDependentHamiltonian(SpacePtr space) : space_(std::move(space)) {}

        void add(SpMat part, Coefficient c, bool constant = false);
        void add(SpMat part, cplx c)
        {
            add(
                std::move(part), [c](double) { return c; }, true);
        }

        const SpacePtr& space() const { return space_; }
        std::size_t dim() const { return space_->fock_dim(); }
        std::size_t parts() const { return parts_.size(); }

        SpMat at(double t) const;

        /// true when every coefficient was registered as a constant.
        bool autonomous() const { return autonomous_; }

        /// sum_k |c_k(t)| ||H_k||_bound, an upper bound for ||H(t)||.
        double norm_bound(double t) const;

    private:
        SpacePtr space_;
        std::vector<SpMat> parts_;
        std::vector<double> part_bounds_;
        std::vector<Coefficient> coeffs_;
        bool autonomous_ = true;
    };

    /// H(t) = U^{m(t)} for a scheduled model, split into one part for Phi and
    /// one per atom.
    TimeDependentHamiltonian model_hamiltonian(const TimeDependentModel& m, const SpacePtr& space);

    /// Autonomous H(t) = U^m.
    TimeDependentHamiltonian model_hamiltonian(const LongRangeModel& m, const SpacePtr& space);

} // namespace lrdyn
