#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"
#include "tp2dp2/core.hpp"
#include "tp2dp2/pretrain.hpp"
#include "tp2dp2/sampler.hpp"

namespace tp2dp2 {

struct BasisSettings {
    int n_basis{1};
    std::optional<double> support;
    std::optional<double> bandwidth;
};

struct EvalSettings {
    double holdout_fraction{0.2};
};

struct RunConfig {
    std::uint64_t seed{0};
    nlohmann::ordered_json dataset = nlohmann::ordered_json::object();  // {}, {"path": ...} or {"recipe": {...}}
    BasisSettings basis;
    PriorBundle prior;
    PretrainConfig pretrain;
    SamplerConfig sampler;
    EvalSettings eval;
    std::string output_dir{"runs/fit"};

    void validate() const;
    // Canonical form: every key present, fixed order; re-resolving it is the identity.
    [[nodiscard]] nlohmann::ordered_json to_json() const;
};

// Fills defaults for missing keys and rejects unknown ones. "seed" is required.
// pretrain.m_init may be an integer or a [lo, hi] range, drawn from the seed.
[[nodiscard]] RunConfig resolve_config(const nlohmann::json& user);

// Applies "a.b.c=value" style overrides; the value is parsed as JSON when it
// parses, else taken as a string.
void apply_override(nlohmann::json& config, const std::string& assignment);

[[nodiscard]] std::string domain_rule_name(DomainRule rule);

}  // namespace tp2dp2
