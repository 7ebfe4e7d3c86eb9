#pragma once

// Finite-volume non-autonomous dynamics. The propagator W(t,s) solves
// d/dt W = -i H(t) W, W(s,s) = 1, and tau_{t,s}(A) = W^dagger A W, so that
//   d/dt tau_{t,s} = tau_{t,s} o delta^{m(t)},  d/ds tau_{t,s} = -delta^{m(s)} o tau_{t,s}
// with delta^m(A) = i[U^m, A].
//
// Time stepping is the fourth order commutator-free scheme with two
// exponentials per step; each exponential is applied by a Taylor series.

#include <functional>
#include <string>
#include <vector>

#include "lrdyn/fock.hpp"
#include "lrdyn/hamiltonians.hpp"

namespace lrdyn
{
    /// Dense propagators are limited to this many modes.
    inline constexpr int PROPAGATOR_MODE_CAP = 12;

    /// Unitarity tolerance of dense propagators.
    inline constexpr double UNITARITY_TOL = 1e-9;

    struct TimeGrid
    {
        double s = 0.0;
        double t = 0.0;
        int steps = 1;

        double step() const { return (t - s) / steps; }
        double node(int k) const { return k == steps ? t : s + k * step(); }
        std::vector<double> nodes() const;
    };

    /// Throws std::invalid_argument unless steps >= 1 and all values are finite.
    TimeGrid make_grid(double s, double t, int steps);

    /// N = ceil(|t - s| ||H(s)|| / 0.01), at least 1.
    int default_steps(const TimeDependentHamiltonian& h, double s, double t);
    TimeGrid default_grid(const TimeDependentHamiltonian& h, double s, double t);

    struct IntegratorInfo
    {
        std::string method = "cf4";
        int steps = 0;
        double step = 0.0;
        double unitarity_defect = 0.0; ///< after the last re-unitarization
        int reunitarizations = 0;
    };

    class Propagator
    {
    public:
        Propagator(SpacePtr space, Mat w, double s, double t, IntegratorInfo info)
            : space_(std::move(space)), w_(std::move(w)), s_(s), t_(t), info_(std::move(info))
        {
        }

        const SpacePtr& space() const { return space_; }
        const Mat& matrix() const { return w_; }
        double s() const { return s_; }
        double t() const { return t_; }
        const IntegratorInfo& info() const { return info_; }

    private:
        SpacePtr space_;
        Mat w_;
        double s_;
        double t_;
        IntegratorInfo info_;
    };

    /// delta(A) = i (U A - A U).
    FockOperator derivation(const FockOperator& u, const FockOperator& a);
    FockOperator derivation(const LongRangeModel& m, const FockOperator& a);

    enum class Method
    {
        automatic, ///< exact for autonomous H up to EXACT_MODE_CAP modes, cf4 otherwise
        cf4,
        exact ///< exp(-i (t-s) H) by eigendecomposition; autonomous H only
    };

    inline constexpr int EXACT_MODE_CAP = 9;

    /// W(t, s) on the grid. Throws ResourceLimit above PROPAGATOR_MODE_CAP.
    Propagator propagate(const TimeDependentHamiltonian& h, const TimeGrid& grid,
                         Method method = Method::automatic);
    Propagator propagate(const TimeDependentHamiltonian& h, double s, double t,
                         Method method = Method::automatic);

    /// tau(A) = W^dagger A W.
    FockOperator heisenberg(const Propagator& p, const FockOperator& a);

    /// One step of the scheme applied to the columns of x.
    void cf4_step(const TimeDependentHamiltonian& h, double t, double dt, Mat& x);
    void cf4_step(const TimeDependentHamiltonian& h, double t, double dt, Vec& x);

    /// Schrodinger evolution of a vector; observer(k, t_k, psi) is called at
    /// every node including k = 0.
    using VectorObserver = std::function<void(int, double, const Vec&)>;
    Vec evolve_vector(const TimeDependentHamiltonian& h, const TimeGrid& grid, Vec psi,
                      const VectorObserver& observer = {});

    /// sigma(t) = W sigma W^dagger at every node.
    using DensityObserver = std::function<void(int, double, const Mat&)>;
    Mat evolve_density(const TimeDependentHamiltonian& h, const TimeGrid& grid, const Mat& sigma,
                       const DensityObserver& observer = {});

    /// || tau_{t,s}(A) - tau_{r,s}(tau_{t,r}(A)) || with default grids, or
    /// with grids of the given step size when max_step > 0.
    double cocycle_defect(const TimeDependentHamiltonian& h, double s, double r, double t,
                          const FockOperator& a, double max_step = 0.0, Method method = Method::cf4);

} // namespace lrdyn
