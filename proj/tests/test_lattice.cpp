#include <cmath>
#include <random>

#include "doctest.h"
#include "lrdyn/lattice.hpp"
#include "oracles.hpp"

using namespace lrdyn;

TEST_SUITE("lattice")
{
    TEST_CASE("box sites")
    {
        CHECK(box_sites(1, 0) == std::vector<Site>{{0}});
        CHECK(box_sites(1, 2) == std::vector<Site>{{-2}, {-1}, {0}, {1}, {2}});
        const auto s = box_sites(2, 1);
        CHECK(s.size() == 9);
        CHECK(std::is_sorted(s.begin(), s.end()));
        CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
        CHECK(Box(3, 1).size() == 27);
        CHECK_THROWS(box_sites(3, 20));
        CHECK_THROWS(Box(0, 1));
        CHECK_THROWS(Box(1, -1));
    }

    TEST_CASE("box rank and containment")
    {
        Box b(2, 1);
        for (std::size_t i = 0; i < b.size(); ++i)
            CHECK(b.rank(b.sites()[i]) == i);
        CHECK(b.contains(Site{1, -1}));
        CHECK_FALSE(b.contains(Site{2, 0}));
        CHECK(b.contains(SiteSet{{0, 0}, {1, 1}}));
    }

    TEST_CASE("translate_set")
    {
        CHECK(translate_set({{0}}, {3}) == SiteSet{{3}});
        CHECK(translate_set({{-1}, {0}}, {1}) == SiteSet{{0}, {1}});
        CHECK(translate_set({{0}, {2}}, {-2}) == SiteSet{{-2}, {0}});

        std::mt19937_64 rng(3);
        std::uniform_int_distribution<int> c(-5, 5);
        for (int k = 0; k < 50; ++k)
        {
            SiteSet s;
            for (int i = 0; i < 4; ++i)
                s.push_back({c(rng), c(rng)});
            s = normalize_set(s);
            const Site x{c(rng), c(rng)};
            CHECK(translate_set(translate_set(s, x), negate(x)) == s);
            CHECK(translate_set(s, x).size() == s.size());
        }
    }

    TEST_CASE("canonical set puts the smallest site at the origin")
    {
        CHECK(canonical_set({{3}, {5}}) == SiteSet{{0}, {2}});
        CHECK(canonical_set({{1, 2}, {0, 4}}) == SiteSet{{0, 0}, {1, -2}});
    }

    TEST_CASE("period vectors")
    {
        PeriodVector l({2, 1});
        CHECK(l.volume() == 2);
        CHECK(l.cell_sites() == std::vector<Site>{{0, 0}, {1, 0}});
        CHECK(l.in_sublattice({4, -3}));
        CHECK_FALSE(l.in_sublattice({1, 0}));
        CHECK(sublattice_points(Box(2, 1), l).size() == 3);
        CHECK_THROWS(PeriodVector({0}));
    }

    TEST_CASE("decay kernels")
    {
        const auto e = DecayFunction::exponential(0.7);
        const auto p = DecayFunction::polynomial(3.0);
        CHECK(e({1, 2}, {1, 2}) == 1.0);
        CHECK(p({0}, {0}) == 1.0);
        CHECK(e({0}, {2}) == doctest::Approx(std::exp(-1.4)).epsilon(1e-14));
        CHECK(p({0}, {1}) == doctest::Approx(1.0 / 8.0).epsilon(1e-14));
        CHECK(e({0, 0}, {3, 4}) == doctest::Approx(std::exp(-3.5)).epsilon(1e-14));
        CHECK(e({1}, {-2}) == e({-2}, {1}));
        CHECK_THROWS(DecayFunction::exponential(0.0));
        CHECK_THROWS(DecayFunction::polynomial(-1.0));
    }

    TEST_CASE("decay constants against direct sums")
    {
        auto c0 = decay_constants(DecayFunction::exponential(1.0), Box(1, 0));
        CHECK(c0.normF1 == 1.0);
        CHECK(c0.constD == 1.0);

        auto c = decay_constants(DecayFunction::exponential(1.0), Box(1, 2));
        CHECK(c.normF1 == doctest::Approx(1 + 2 * std::exp(-1.0) + 2 * std::exp(-2.0)).epsilon(1e-14));
        CHECK(c.normF1 == doctest::Approx(oracle::exp_row_sum_1d(1.0, 2)).epsilon(1e-14));

        auto q = decay_constants(DecayFunction::polynomial(2.0), Box(1, 1));
        CHECK(q.normF1 == doctest::Approx(1.5).epsilon(1e-14));

        for (int L = 0; L <= 3; ++L)
        {
            const auto f = [](int r) { return std::pow(1.0 + std::abs(r), -2.5); };
            const auto [f1, d] = oracle::constants_1d(f, L);
            const auto k = decay_constants(DecayFunction::polynomial(2.5), Box(1, L));
            CHECK(k.normF1 == doctest::Approx(f1).epsilon(1e-12));
            CHECK(k.constD == doctest::Approx(d).epsilon(1e-12));
        }
    }

    TEST_CASE("decay constants are at least one and monotone in L")
    {
        for (const auto& f : {DecayFunction::exponential(0.5), DecayFunction::exponential(2.0),
                              DecayFunction::polynomial(2.0), DecayFunction::polynomial(4.0)})
            for (int d = 1; d <= 2; ++d)
            {
                DecayConstants prev{0.0, 0.0};
                for (int L = 0; L <= 4; ++L)
                {
                    const auto k = decay_constants(f, Box(d, L));
                    CHECK(k.normF1 >= 1.0);
                    CHECK(k.constD >= 1.0);
                    CHECK(k.normF1 >= prev.normF1);
                    CHECK(k.constD >= prev.constD - 1e-12);
                    prev = k;
                }
            }
    }
}
