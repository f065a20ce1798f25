#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "supct/config.hpp"

namespace supct {

namespace detail {

struct LowDoseLevel {
    const char* tag;
    double I0;
    std::size_t basic_iterations;
    std::size_t k_min;
    std::size_t k_step;
    double nlm_h;
};

inline const std::vector<LowDoseLevel>& low_dose_levels() {
    static const std::vector<LowDoseLevel> levels{
        {"5e4", 5e4, 18, 15, 5, 0.02},
        {"2.5e4", 2.5e4, 12, 10, 5, 0.025},
        {"1e4", 1e4, 8, 5, 4, 0.03},
    };
    return levels;
}

inline const std::vector<std::string>& preset_variants() {
    static const std::vector<std::string> v{"basic", "conventional", "adaptive", "pnp", "post"};
    return v;
}

inline nlohmann::json preset_common() {
    return {
        {"geometry", {{"num_views", 900}}},
        {"phantom", {{"kind", "random"}, {"side", 64}, {"seed", 0}, {"count", 10}}},
        {"dose", {{"I0", 1e6}, {"reference_side", 512}}},
    };
}

inline nlohmann::json preset_algorithm(const std::string& variant, std::size_t iterations) {
    nlohmann::json a = {
        {"variant", variant == "post" ? "postprocess" : variant},
        {"basic", {{"iterations", iterations}, {"num_subsets", 10}}},
        {"epsilon", "from_basic"},
        {"conventional", {{"N", 20}, {"alpha", 1.0}, {"gamma", 0.9995}}},
    };
    return a;
}

}  // namespace detail

/// Names accepted by preset_json: "baseline", "sparse-<v>" and
/// "lowdose-<I0>-<v>" with <v> in basic, conventional, adaptive, pnp, post
/// and <I0> in 5e4, 2.5e4, 1e4.
inline std::vector<std::string> preset_names() {
    std::vector<std::string> names{"baseline"};
    for (const auto& v : detail::preset_variants()) names.push_back("sparse-" + v);
    for (const auto& level : detail::low_dose_levels())
        for (const auto& v : detail::preset_variants()) names.push_back(std::string("lowdose-") + level.tag + "-" + v);
    return names;
}

inline nlohmann::json preset_json(const std::string& name) {
    using nlohmann::json;
    json j = detail::preset_common();
    if (name == "baseline") {
        j["algorithm"] = {{"variant", "basic"}, {"name", "baseline"}, {"basic", {{"iterations", 12}, {"num_subsets", 10}}}};
        return j;
    }
    for (const auto& v : detail::preset_variants()) {
        if (name == "sparse-" + v) {
            j["dose"]["keep_every"] = 15;
            j["algorithm"] = detail::preset_algorithm(v, 12);
            j["algorithm"]["name"] = name;
            j["algorithm"]["pnp"] = {{"alpha", "auto"}, {"gamma", 0.95}, {"k_min", 0}, {"k_step", 1}};
            j["algorithm"]["denoiser"] = {{"kind", "nlm"}, {"patch", 7}, {"window", 21}, {"h", 0.03}};
            return j;
        }
        for (const auto& level : detail::low_dose_levels()) {
            if (name == std::string("lowdose-") + level.tag + "-" + v) {
                j["dose"]["I0"] = level.I0;
                j["algorithm"] = detail::preset_algorithm(v, level.basic_iterations);
                j["algorithm"]["name"] = name;
                j["algorithm"]["pnp"] = {
                    {"alpha", "auto"}, {"gamma", 0.75}, {"k_min", level.k_min}, {"k_step", level.k_step}};
                j["algorithm"]["denoiser"] = {{"kind", "nlm"}, {"patch", 7}, {"window", 21}, {"h", level.nlm_h}};
                return j;
            }
        }
    }
    throw ConfigError("<preset>", "unknown preset \"" + name + "\"");
}

/// Preset with an optional override tree merged on top (RFC 7386 merge patch).
inline RunConfig preset_config(const std::string& name, const nlohmann::json& overrides = nlohmann::json::object()) {
    nlohmann::json j = preset_json(name);
    j.merge_patch(overrides);
    return parse_config(j);
}

}  // namespace supct
