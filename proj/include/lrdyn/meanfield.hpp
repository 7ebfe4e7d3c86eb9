#pragma once

// State-dependent approximating interactions and the self-consistent
// classical flow. The flow is tracked through the scalars
// g_{k,j}(t) = rho_t(e_{Psi_{k,j}, l}) (atom k, factor j) together with the
// evolved state on a finite self-consistency box.

#include <functional>
#include <string>
#include <vector>

#include "lrdyn/dynamics.hpp"
#include "lrdyn/interactions.hpp"
#include "lrdyn/states.hpp"

namespace lrdyn
{
    /// One scalar per factor, per atom.
    using AtomScalars = std::vector<std::vector<cplx>>;

    /// sum_m Psi_m prod_{j != m} g_j; Psi itself for a single factor.
    Interaction sandwich(const std::vector<cplx>& g, const std::vector<Interaction>& factors);

    /// Phi^(m,xi)(t) = Phi(t) + sum_atoms w sandwich(g; Psi_1 .. Psi_n).
    Interaction approximating_interaction(const LongRangeModel& m_at_t, const AtomScalars& g);

    struct SolverConfig
    {
        double tol = 1e-10;
        int max_iter = 30;
        double damping = 1.0;     ///< falls back to 0.5 once the defect grows
        double window = 0.1;      ///< Picard windows never exceed this length
        bool record_states = true;
    };

    struct FlowTrajectory
    {
        TimeGrid grid;
        std::vector<double> times;
        std::vector<std::string> labels;          ///< "a<k>.f<j>" per scalar
        std::vector<std::vector<cplx>> scalars;    ///< node x scalar
        std::vector<std::pair<int, int>> index;   ///< scalar -> (atom, factor)
        SpacePtr space;
        PeriodVector l;
        std::vector<Vec> vectors;                 ///< states per node (pure)
        std::vector<Mat> densities;               ///< states per node (mixed)

        int iterations = 0;                       ///< summed over windows
        int max_window_iterations = 0;
        std::vector<int> window_iterations;
        std::vector<double> window_contraction;   ///< worst defect ratio per window
        double defect = 0.0;                      ///< largest final defect over windows
        double damping_used = 1.0;
        bool converged = true;

        std::size_t nodes() const { return times.size(); }
        /// Scalars at time t, linearly interpolated between nodes.
        AtomScalars at(double t) const;
        AtomScalars at_node(std::size_t k) const;
        /// The evolved state at node k (requires recorded states).
        LatticeState state(std::size_t k) const;
    };

    /// Picard iteration for the self-consistency equation on the space of
    /// rho0, window by window (windows of at most cfg.window, on grid nodes).
    FlowTrajectory solve_self_consistency(const TimeDependentModel& m, const LatticeState& rho0, const TimeGrid& grid,
                                          const SolverConfig& cfg = {});

    /// U^{Phi^(m, g(t))} on a space, with g interpolated from the flow.
    TimeDependentHamiltonian effective_hamiltonian(const TimeDependentModel& m, const FlowTrajectory& flow,
                                                   const SpacePtr& space);

    /// tau^eff_{t,s}(A) over the flow grid, on A's space.
    FockOperator effective_dynamics(const TimeDependentModel& m, const FlowTrajectory& flow, const FockOperator& a);

    /// rho(B^dagger tau^eff_{t_k,s}(A) B) at every flow node, on rho's space.
    std::vector<cplx> effective_expectations(const TimeDependentModel& m, const FlowTrajectory& flow,
                                             const LatticeState& rho, const FockOperator& a, const FockOperator& b);

    /// f(rho_k(A_1), ..., rho_k(A_n)) at every node.
    using CylinderFunction = std::function<cplx(const std::vector<cplx>&)>;
    std::vector<cplx> classical_flow_eval(const FlowTrajectory& flow, const std::vector<LocalOperator>& observables,
                                          const CylinderFunction& f);

    /// One flow per mixture component, each seeing only its own state.
    struct MixtureFlow
    {
        std::vector<double> weights;
        std::vector<FlowTrajectory> flows;

        /// sum_i lambda_i rho_{i,k}(A) at every node.
        std::vector<cplx> mixed(const LocalOperator& a) const;
    };

    MixtureFlow evolve_mixture(const Mixture& mix, const TimeDependentModel& m, const TimeGrid& grid,
                               const SolverConfig& cfg = {});

} // namespace lrdyn
