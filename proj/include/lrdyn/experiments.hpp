#pragma once

// Runs one configured experiment and writes its reports: one CSV per table
// and a JSON summary with a pass/fail entry per asserted property.

#include <filesystem>
#include <string>
#include <vector>

#include "lrdyn/config.hpp"

namespace lrdyn
{
    inline constexpr int SUMMARY_SCHEMA_VERSION = 1;

    struct Check
    {
        std::string name;
        bool pass = false;
        std::string detail;
    };

    struct Table
    {
        std::vector<std::string> header;
        std::vector<std::vector<std::string>> rows;

        /// header line plus one line per row, '\n' terminated.
        std::string csv() const;
    };

    /// 17 significant digits, shortest round-trip spelling for integers.
    std::string format_number(double x);

    struct ExperimentResult
    {
        std::string name;
        std::string kind;
        std::vector<std::pair<std::string, Table>> tables; ///< file suffix ("" for the main table) -> table
        std::vector<Check> checks;
        std::vector<std::string> warnings;
        std::string results_json = "{}";                   ///< experiment specific, serialized object
        double seconds = 0.0;

        bool all_pass() const;
    };

    /// Infeasible sizes and geometric misuse surface as ConfigError naming the
    /// config field responsible.
    ExperimentResult run_experiment(const ExperimentConfig& cfg);

    /// Writes <prefix>[-suffix].csv and <prefix>.json into dir; returns the paths.
    std::vector<std::filesystem::path> write_outputs(const ExperimentResult& r, const ExperimentConfig& cfg,
                                                     const std::filesystem::path& dir);

} // namespace lrdyn
