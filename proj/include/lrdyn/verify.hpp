#pragma once

// Finite-volume experiments: the Lieb-Robinson commutator bound, the
// convergence of local energy densities, and full versus effective dynamics
// across a sweep of box sizes.

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lrdyn/dynamics.hpp"
#include "lrdyn/interactions.hpp"
#include "lrdyn/meanfield.hpp"
#include "lrdyn/states.hpp"

namespace lrdyn
{
    /// Runs fn(0..n-1) on up to `threads` workers. Each index is handled by
    /// exactly one worker; callers write results by index.
    void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

    struct BoundReport
    {
        double lhs = 0.0;
        double rhs = 0.0;
        double log_rhs = 0.0; ///< finite even when rhs overflows
        double ratio = 0.0;
        bool pass = false;

        // inputs
        double s = 0.0;
        double t = 0.0;
        std::size_t support_size = 0;
        double a_norm = 0.0;
        double phi_w_norm = 0.0;
        double normF1 = 0.0;
        double constD = 0.0;
        double m_integral = 0.0;
        std::string method;
    };

    struct BoundOptions
    {
        std::optional<DecayConstants> constants; ///< default: those of the box
        int integral_nodes = 65;
        int steps = 0;                           ///< 0: default grid
        Method method = Method::automatic;
    };

    /// ||[tau_{t,s}(A), U^Phi]|| against
    /// 2 |supp A| ||A|| ||Phi||_W exp(16 (D + 2 ||F||_1 + 1) |int_s^t ||m||_M|),
    /// the integral by the trapezoid rule. A must live on the space of `box`.
    BoundReport lr_bound_check(const TimeDependentModel& m, const Interaction& phi, const FockOperator& a,
                               const Box& box, double s, double t, const BoundOptions& opt = {});

    /// ||m(t)||_M for a scheduled model on a box, with the given ||F||_1.
    double m_norm_at(const TimeDependentModel& m, const Box& box, double normF1, double t);

    struct DensityRow
    {
        int L = 0;
        cplx value;     ///< rho(B^dagger (U_L / |Lambda_L|) B)
        cplx reference; ///< rho(e) rho(B^dagger B)
        double gap = 0.0;
    };

    std::vector<DensityRow> energy_density_convergence(const Interaction& phi, const ProductSpec& state,
                                                       const LocalOperator& b, const std::vector<int>& Ls,
                                                       int threads = 1);

    struct ConvergenceConfig
    {
        SolverConfig solver;
        double flow_step = 1e-3;
        int box_eff_radius = -1;   ///< -1: smallest box holding every energy density
        bool force_density = false;
        int threads = 1;
    };

    struct ConvergenceRow
    {
        int L = 0;
        int modes = 0;
        cplx full;
        cplx effective;
        double gap = 0.0;
        int full_steps = 0;
        double seconds = 0.0;
    };

    struct ConvergenceReport
    {
        std::string model;
        std::string state;
        double s = 0.0;
        double t = 0.0;
        std::vector<ConvergenceRow> rows; ///< sorted by L
        std::vector<int> skipped;         ///< L values over the mode budget
        int box_eff_radius = 0;
        int flow_iterations = 0;
        double flow_defect = 0.0;
        bool flow_converged = true;

        /// gap(L_max) < gap(L_min).
        bool trend() const;
        bool strictly_decreasing() const;
    };

    /// rho(B^dagger tau^{full}_{t,s}(A) B) on one space, default grid.
    cplx full_expectation(const TimeDependentModel& m, const LatticeState& rho, const FockOperator& a,
                          const FockOperator& b, double s, double t, int* steps = nullptr);

    ConvergenceReport main_convergence(const TimeDependentModel& m, const ProductSpec& state, const LocalOperator& a,
                                       const LocalOperator& b, double s, double t, const std::vector<int>& Ls,
                                       const ConvergenceConfig& cfg = {});

    struct MixtureReport
    {
        std::vector<double> weights;
        std::vector<ConvergenceReport> fibers;
        std::vector<ConvergenceRow> mixed; ///< lambda-weighted full / effective values and gap

        bool trend() const;
    };

    MixtureReport mixture_convergence(const std::vector<double>& weights, const std::vector<ProductSpec>& states,
                                      const TimeDependentModel& m, const LocalOperator& a, const LocalOperator& b,
                                      double s, double t, const std::vector<int>& Ls,
                                      const ConvergenceConfig& cfg = {});

    /// Max scalar difference on [r, t] between one solve over [s, t] and a
    /// second solve restarted at node `split` from the recorded state there.
    double flow_composition_defect(const TimeDependentModel& m, const LatticeState& rho0, const TimeGrid& grid,
                                   int split, const SolverConfig& cfg = {});

    /// A randomized Lieb-Robinson test case.
    struct LrDraw
    {
        TimeDependentModel model;
        Box box;
        LocalOperator a;
        double s = 0.0;
        double t = 0.0;
        int steps = 0;
        DecayConstants constants; ///< of the largest box with this dimension
        std::string label;
    };

    /// Models from the built-in families on boxes of at most max_modes modes,
    /// t - s in [-1, 1]. Scheduled models only on boxes of <= 7 modes.
    LrDraw random_lr_draw(std::mt19937_64& rng, int max_modes = 9);

    /// Smallest radius holding e_{Psi,l} for every atom factor.
    int energy_density_radius(const LongRangeModel& m, const PeriodVector& l);

} // namespace lrdyn
