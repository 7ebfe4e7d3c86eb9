#pragma once

// Random translation-invariant interactions and long-range models for the
// property tests.

#include <random>

#include "lrdyn/interactions.hpp"

namespace testgen
{
    using namespace lrdyn;

    /// Even part of a random matrix on the Fock space of `sites`.
    inline Mat random_even_matrix(std::mt19937_64& rng, int modes, bool hermitian)
    {
        std::normal_distribution<double> g;
        const Eigen::Index n = Eigen::Index{1} << modes;
        Mat m(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                m(i, j) = (__builtin_popcountll(i) % 2 == __builtin_popcountll(j) % 2) ? cplx(g(rng), g(rng)) : 0.0;
        if (hermitian)
            m = 0.5 * (m + m.adjoint()).eval();
        return m;
    }

    inline Site unit(int d, int i)
    {
        Site e(d, 0);
        e[i] = 1;
        return e;
    }

    /// A random finite-range translation-invariant interaction built from the
    /// named families plus, sometimes, a random custom two-site term.
    inline Interaction random_interaction(std::mt19937_64& rng, int d, int nspin, bool self_adjoint = true)
    {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::bernoulli_distribution coin(0.5);
        Interaction phi = onsite_number(d, nspin, u(rng));
        if (coin(rng))
            phi = phi + nn_hopping(d, nspin, u(rng));
        if (coin(rng))
            phi = phi + nn_density(d, nspin, u(rng));
        if (nspin == 2 && coin(rng))
            phi = phi + onsite_hubbard(d, u(rng));
        if (coin(rng))
        {
            const Mat m = 0.3 * random_even_matrix(rng, 2 * nspin, self_adjoint);
            phi = phi + custom_interaction(d, nspin, {origin(d), unit(d, 0)}, m);
        }
        if (!self_adjoint && coin(rng))
            phi = phi.scaled(cplx(u(rng), u(rng)));
        return phi;
    }

    /// A self-adjoint long-range model: Phi plus reversal-closed atoms of
    /// orders 1 to 3.
    inline LongRangeModel random_model(std::mt19937_64& rng, int d, int nspin, const DecayFunction& f)
    {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::bernoulli_distribution coin(0.5);
        LongRangeModel m{random_interaction(rng, d, nspin), {}, f};
        if (coin(rng))
            m.atoms.push_back(make_atom(u(rng), {random_interaction(rng, d, nspin)}, f));
        if (coin(rng))
        {
            const Interaction p = random_interaction(rng, d, nspin, false);
            const Interaction q = random_interaction(rng, d, nspin, false);
            const Atom a = make_atom(u(rng), {p, q}, f);
            m.atoms.push_back(a);
            m.atoms.push_back(a.reversed());
        }
        if (nspin == 2 && coin(rng))
            m.atoms.push_back(make_atom(u(rng), {pairing_creation(d), pairing_annihilation(d)}, f));
        if (coin(rng))
        {
            const Interaction p = random_interaction(rng, d, nspin);
            m.atoms.push_back(make_atom(u(rng), {p, p, p}, f));
        }
        return m;
    }
} // namespace testgen
