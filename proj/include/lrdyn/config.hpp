#pragma once

// Experiment configuration: a JSON document validated into plain structs
// before anything is allocated, plus the built-in presets.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrdyn/interactions.hpp"
#include "lrdyn/meanfield.hpp"
#include "lrdyn/states.hpp"

namespace lrdyn
{
    /// A config problem; `field` is the JSON path of the offending entry.
    class ConfigError : public std::runtime_error
    {
    public:
        ConfigError(std::string field, const std::string& message)
            : std::runtime_error(field + ": " + message), field_(std::move(field))
        {
        }
        const std::string& field() const { return field_; }

    private:
        std::string field_;
    };

    enum class ExperimentKind
    {
        simulate,
        selfconsistent,
        lrbound,
        converge,
        mixture,
        density
    };

    std::string to_string(ExperimentKind k);

    struct ExperimentConfig
    {
        std::string name = "experiment";
        ExperimentKind kind = ExperimentKind::simulate;
        std::uint64_t seed = 0;
        int threads = 1;

        std::optional<TimeDependentModel> model;
        std::string model_label;

        std::vector<double> weights;         ///< one per component; a single 1 for plain states
        std::vector<ProductSpec> components;
        std::string state_label;

        LocalOperator a = LocalOperator::scalar(1.0);
        LocalOperator b = LocalOperator::scalar(1.0);
        std::string a_label = "identity";
        std::string b_label = "identity";

        double s = 0.0;
        double t = 1.0;
        int steps = 0;         ///< 0: default grid
        int record_every = 1;

        std::vector<int> sweep{0};
        int box = -1;          ///< -1: derived from the model

        SolverConfig solver;
        double flow_step = 1e-3;
        bool force_density = false;

        // lrbound
        int draws = 100;
        int max_modes = 9;

        std::string prefix;    ///< output file stem, defaults to name
        std::string source;    ///< the validated document, re-serialized
    };

    /// Throws ConfigError naming the offending field.
    ExperimentConfig parse_config(const std::string& text);
    ExperimentConfig load_config(const std::filesystem::path& path);

    struct Preset
    {
        std::string name;
        std::string description;
        std::string budget;
        std::string json;
    };

    const std::vector<Preset>& presets();
    const Preset* find_preset(const std::string& name);

} // namespace lrdyn
