#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "lrdyn/experiments.hpp"

using namespace lrdyn;

namespace
{
    std::string field_of(const std::string& text)
    {
        try
        {
            parse_config(text);
        }
        catch (const ConfigError& e)
        {
            return e.field();
        }
        return "";
    }

    const char* BCS_MODEL = R"("model": {"dimension": 1, "spins": 2, "bcs": {"gamma": 1.0, "mu": 0.5}})";

    std::string simulate_with_state(const std::string& state)
    {
        return std::string(R"({"schema": 1, "experiment": "simulate", )") + BCS_MODEL + R"(, "state": )" + state +
               R"(, "time": {"s": 0, "t": 0.2}, "sweep": [0]})";
    }
} // namespace

TEST_SUITE("cli")
{
    TEST_CASE("presets")
    {
        const auto& ps = presets();
        CHECK(ps.size() >= 6);
        std::set<std::string> names;
        for (const auto& p : ps)
        {
            names.insert(p.name);
            CHECK_FALSE(p.description.empty());
            CHECK_NOTHROW(parse_config(p.json));
        }
        for (const char* n : {"smoke", "bcs-converge", "bcs-selfconsistent", "lr-sweep", "density-sweep", "mixture-demo"})
            CHECK(names.count(n) == 1);
        CHECK(find_preset("nope") == nullptr);
    }

    TEST_CASE("errors name the offending field")
    {
        CHECK(field_of("{") == "<document>");
        CHECK(field_of(R"({"schema": 2})") == "schema");
        CHECK(field_of(R"({"experiment": "simulate", "modle": {}})") == "modle");
        CHECK(field_of(R"({"experiment": "nope"})") == "experiment");
        CHECK(field_of(R"({"experiment": "simulate", "model": {"dimension": 4, "spins": 1}})") == "model.dimension");
        CHECK(field_of(R"({"experiment": "simulate", "model": {"dimension": 1, "spins": 2, "bcs": {"gamma": "x", "mu": 0}}})") ==
              "model.bcs.gamma");
        CHECK(field_of(simulate_with_state(R"({"kind": "pairing", "theta": 0.5, "phase": 0, "extra": 1})")) ==
              "state.extra");
        CHECK(field_of(simulate_with_state(R"({"kind": "density", "cell": [[0.5, 0], [0, 0.6]]})")) == "state.cell");
        CHECK(field_of(simulate_with_state(R"({"kind": "vector", "cell": "not base64!"})")) == "state.cell");
        CHECK(field_of(R"({"experiment": "simulate", "seed": -1})") == "seed");
    }

    TEST_CASE("models that are not self-adjoint are rejected")
    {
        const std::string cfg = R"({"experiment": "simulate", "model": {"dimension": 1, "spins": 2,
            "phi": [{"family": "pairing_creation"}]}, "state": {"kind": "pairing", "theta": 0.3}})";
        CHECK(field_of(cfg) == "model.phi");
        const std::string atoms = R"({"experiment": "simulate", "model": {"dimension": 1, "spins": 2,
            "phi": [{"family": "onsite", "coeff": 1.0}],
            "atoms": [{"weight": 1.0, "factors": [{"family": "pairing_creation"}, {"family": "onsite", "coeff": 1.0}]}]},
            "state": {"kind": "pairing", "theta": 0.3}})";
        CHECK(field_of(atoms) == "model.atoms");
    }

    TEST_CASE("base64 cells match the array form")
    {
        const auto vec = parse_config(simulate_with_state(
            R"({"kind": "vector", "cell": "MzMzMzMz4z8AAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAmpmZmZmZ6T8AAAAAAAAAAA=="})"));
        const auto arr = parse_config(simulate_with_state(R"({"kind": "vector", "cell": [0.6, 0, 0, 0.8]})"));
        REQUIRE(vec.components.front().cell_vector);
        CHECK(*vec.components.front().cell_vector == *arr.components.front().cell_vector);

        // the 4x4 density below as row-major little-endian complex doubles
        const std::string b64 =
            "AAAAAAAA4D8AAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAADQPwAAAAAAAAAAAAAA"
            "AAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAA"
            "AAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAIAAAAAAAADQvwAAAAAAAAAAAAAAAAAAAAAA"
            "AAAAAAAAAAAAAAAAAAAAAAAAAAAA4D8AAAAAAAAAAA==";
        const auto den = parse_config(simulate_with_state(R"({"kind": "density", "cell": ")" + b64 + R"("})"));
        const auto den_arr = parse_config(simulate_with_state(
            R"({"kind": "density", "cell": [[0.5, 0, 0, [0, 0.25]], [0, 0, 0, 0], [0, 0, 0, 0], [[0, -0.25], 0, 0, 0.5]]})"));
        REQUIRE(den.components.front().cell_density);
        CHECK(*den.components.front().cell_density == *den_arr.components.front().cell_density);
    }

    TEST_CASE("table formatting")
    {
        CHECK(format_number(0.1) == "0.10000000000000001");
        CHECK(format_number(2.0) == "2");
        Table t{{"a", "b"}, {{"1", "2"}, {"3", "4"}}};
        CHECK(t.csv() == "a,b\n1,2\n3,4\n");
    }

    TEST_CASE("smoke run writes csv and json")
    {
        auto cfg = parse_config(find_preset("smoke")->json);
        const auto r = run_experiment(cfg);
        CHECK(r.all_pass());
        CHECK(r.seconds < 1.0);
        const auto dir = std::filesystem::temp_directory_path() / "lrdyn_cli_test";
        std::filesystem::remove_all(dir);
        const auto files = write_outputs(r, cfg, dir);
        REQUIRE(files.size() == 2);
        std::ifstream in(dir / "smoke.json");
        const auto j = nlohmann::json::parse(in);
        CHECK(j.at("schema_version") == SUMMARY_SCHEMA_VERSION);
        CHECK(j.at("all_pass") == true);
        CHECK(j.at("metadata").contains("created"));
        std::ifstream csv(dir / "smoke.csv");
        std::string header;
        std::getline(csv, header);
        CHECK(header == r.tables.front().second.header.front() + "," + r.tables.front().second.header[1] +
                            header.substr(header.find(',', header.find(',') + 1)));
    }

    TEST_CASE("infeasible sweeps are configuration errors")
    {
        auto text = std::string(R"({"experiment": "converge", )") + BCS_MODEL +
                    R"(, "state": {"kind": "pairing", "theta": 0.5}, "observables": {"A": {"name": "pairing", "site": [0]}},
                       "time": {"t": 0.1}, "sweep": [40]})";
        try
        {
            run_experiment(parse_config(text));
            FAIL("expected a configuration error");
        }
        catch (const ConfigError& e)
        {
            CHECK(e.field() == "sweep");
        }
    }

    TEST_CASE("density preset is deterministic and matches the oracle")
    {
        const auto cfg = parse_config(find_preset("density-sweep")->json);
        const auto a = run_experiment(cfg);
        const auto b = run_experiment(cfg);
        CHECK(a.all_pass());
        CHECK(a.tables.front().second.csv() == b.tables.front().second.csv());
        for (const auto& row : a.tables.front().second.rows)
        {
            const int L = std::stoi(row[0]);
            CHECK(std::stod(row[5]) == doctest::Approx(0.09 / (2 * L + 1)).epsilon(1e-12));
            CHECK(std::stod(row[6]) == doctest::Approx(0.21 / (2 * L + 1)).epsilon(1e-12));
        }
    }
}
