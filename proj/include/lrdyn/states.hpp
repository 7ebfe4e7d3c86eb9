#pragma once

// States on a finite box: pure vectors or density matrices with a declared
// period vector; periodic product states, finite mixtures, space averages,
// ergodicity diagnostics and the coarse-graining map between period vectors.

#include <optional>
#include <string>
#include <vector>

#include "lrdyn/fock.hpp"
#include "lrdyn/interactions.hpp"
#include "lrdyn/lattice.hpp"

namespace lrdyn
{
    /// Density matrices are dense; they are limited to this many modes.
    inline constexpr int DENSITY_MODE_CAP = 10;

    /// The data a periodic product state is built from. Cells sit at
    /// offset + Z^d_l; cell_sites() of the period vector give the layout.
    struct ProductSpec
    {
        PeriodVector l;
        Site offset;
        std::optional<Mat> cell_density;
        std::optional<Vec> cell_vector;
    };

    class LatticeState
    {
    public:
        enum class Tag
        {
            product,
            mixture,
            custom
        };

        /// Custom states; validated (unit trace / norm, positivity).
        static LatticeState pure(SpacePtr space, Vec psi, PeriodVector l);
        static LatticeState density(SpacePtr space, Mat rho, PeriodVector l);

        const SpacePtr& space() const { return space_; }
        const PeriodVector& period() const { return l_; }
        Tag tag() const { return tag_; }
        bool is_pure() const { return psi_.has_value(); }
        const Vec& vector() const;
        /// The density matrix (psi psi^dagger for pure states).
        Mat density_matrix() const;
        const std::optional<ProductSpec>& product_spec() const { return spec_; }

        /// Throws std::invalid_argument when trace, norm or positivity fail.
        void validate() const;

    private:
        LatticeState(SpacePtr space, PeriodVector l, Tag tag) : space_(std::move(space)), l_(std::move(l)), tag_(tag) {}

        SpacePtr space_;
        PeriodVector l_;
        Tag tag_;
        std::optional<Vec> psi_;
        std::optional<Mat> rho_;
        std::optional<ProductSpec> spec_;

        friend LatticeState product_state(const Mat&, const SpacePtr&, const PeriodVector&, const Site&);
        friend LatticeState product_state(const Vec&, const SpacePtr&, const PeriodVector&, const Site&);
        friend class Mixture;
    };

    std::string to_string(LatticeState::Tag tag);

    /// Periodic product of an even cell density. Cells cut by the box
    /// contribute their reduced state. Requires DENSITY_MODE_CAP.
    LatticeState product_state(const Mat& cell_density, const SpacePtr& space, const PeriodVector& l,
                               const Site& offset = {});

    /// Pure periodic product of a parity-definite cell vector; every cell
    /// meeting the box must lie inside it.
    LatticeState product_state(const Vec& cell_vector, const SpacePtr& space, const PeriodVector& l,
                               const Site& offset = {});

    /// Rebuilds a product state on another space (same cells, same offset).
    LatticeState rebuild(const ProductSpec& spec, const SpacePtr& space);

    /// rho o alpha_x for a product state: the cells move by -x.
    LatticeState translated_state(const LatticeState& rho, const Site& x);

    /// tr(rho A) or <psi, A psi>.
    cplx expectation(const LatticeState& rho, const FockOperator& a);
    cplx expectation(const LatticeState& rho, const LocalOperator& a);

    /// <psi, A psi> / tr(rho A) on raw data.
    cplx expectation(const Vec& psi, const SpMat& a);
    cplx expectation(const Mat& rho, const SpMat& a);

    /// Finite convex combination of states on one space.
    class Mixture
    {
    public:
        Mixture(std::vector<double> weights, std::vector<LatticeState> states);

        std::size_t size() const { return weights_.size(); }
        double weight(std::size_t i) const { return weights_.at(i); }
        const LatticeState& component(std::size_t i) const { return states_.at(i); }
        const std::vector<double>& weights() const { return weights_; }

        cplx expectation(const FockOperator& a) const;

        /// sum_i lambda_i rho_i as one density matrix, tagged mixture.
        LatticeState as_state() const;

        /// Some probe expectation differs by more than tol between every pair.
        bool components_distinct(double tol = 1e-6) const;

    private:
        std::vector<double> weights_;
        std::vector<LatticeState> states_;
    };

    /// A_L = mean of alpha_x(A) over x in Lambda_L ∩ Z^d_l, built on `space`
    /// (which must contain every translate).
    FockOperator space_average(const FockOperator& a, const SpacePtr& space, int L, const PeriodVector& l);

    /// rho(A_L^dagger A_L) - |rho(A)|^2.
    double ergodicity_defect(const LatticeState& rho, const FockOperator& a, int L, const PeriodVector& l);
    double ergodicity_defect(const Mixture& mix, const FockOperator& a, int L, const PeriodVector& l);

    /// x_{l1,l2}(rho) = (|l2| / |l1|) sum_x rho o alpha_x; a mixture of shifted
    /// product states. Requires l2_i | l1_i.
    Mixture coarse_grain(const LatticeState& rho, const PeriodVector& l1, const PeriodVector& l2);
    Mixture coarse_grain(const Mixture& rho, const PeriodVector& l1, const PeriodVector& l2);

    /// The fixed probe set: number operators on every mode of one cell, plus
    /// nearest-neighbour hopping and on-site pairing monomials inside it.
    std::vector<LocalOperator> periodicity_probes(const PeriodVector& l, int nspin);

    /// Probe expectations agree (to tol) under every in-box shift by Z^d_l.
    bool verify_periodicity(const LatticeState& rho, const PeriodVector& l, double tol = 1e-9);

} // namespace lrdyn
