#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "json.hpp"
#include "tp2dp2/core.hpp"
#include "tp2dp2/posterior.hpp"
#include "tp2dp2/random.hpp"

namespace tp2dp2 {

struct SamplerConfig {
    std::size_t iterations{3000};
    std::size_t burn_in{1000};
    std::size_t thin{1};
    double birth_prob{0.5};
    int birth_death_attempts{1};
    // Random-walk scale for allocated centers, in units of sqrt(count) / time
    // of the component's sequences (roughly one posterior standard deviation).
    double mu_step{1.0};
    std::size_t minibatch{16};
    std::uint64_t seed{0};

    void validate() const;
};

struct MoveStats {
    std::size_t proposed{0};
    std::size_t accepted{0};

    [[nodiscard]] double rate() const noexcept {
        return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
    }
};

struct SamplerDiagnostics {
    MoveStats birth;
    MoveStats death;
    MoveStats mu;
    std::size_t death_noop{0};
    std::size_t sgld_steps{0};
    std::size_t sgld_skipped{0};

    [[nodiscard]] nlohmann::ordered_json to_json() const;
};

struct TraceRecord {
    std::size_t iteration{0};
    std::size_t k{0};
    std::size_t l{0};
    double log_joint{0.0};
    std::vector<int> labels;
    std::vector<std::vector<double>> mu;  // allocated components
    std::vector<double> r;
    std::vector<double> w_mean;
};

struct PosteriorTrace {
    std::vector<TraceRecord> records;
    SamplerDiagnostics diagnostics;
};

struct SamplerResult {
    PosteriorTrace trace;
    MixtureState map_state;
    double map_log_joint{-std::numeric_limits<double>::infinity()};
    std::size_t map_iteration{0};
    bool has_samples{false};
    bool interrupted{false};
    std::size_t iterations_run{0};
    MixtureState final_state;
};

// Integral of the Gamma(1,1) weight prior against exp(-u r).
[[nodiscard]] inline double psi(double u) noexcept { return 1.0 / (1.0 + u); }

// Sorts both component blocks lexicographically and remaps allocations, so the
// representation of a state does not depend on component order.
void canonicalize(MixtureState& state);

// Clamps allocated centers into the DPP domain.
void project_into_domain(MixtureState& state, const DomainBox& box);

struct BirthDeathProposal {
    bool birth{true};
    bool noop{false};
    Component newborn;         // birth only
    std::size_t removed{0};    // death only, index into non_allocated
    double log_accept{0.0};
};

[[nodiscard]] BirthDeathProposal propose_birth_death(const MixtureState& state, const PosteriorContext& ctx,
                                                     const SamplerConfig& config, Rng& rng);
void apply_birth_death(MixtureState& state, const BirthDeathProposal& proposal);

struct CenterProposal {
    std::size_t m{0};
    std::vector<double> mu;
    double log_accept{0.0};
};

[[nodiscard]] double center_step_scale(const MixtureState& state, const PosteriorContext& ctx,
                                       const SamplerConfig& config, std::size_t m, std::size_t d);
[[nodiscard]] CenterProposal propose_allocated_center(const MixtureState& state, const PosteriorContext& ctx,
                                                      LoglikCache& cache, const SamplerConfig& config, std::size_t m,
                                                      Rng& rng);
// Acceptance log-ratio for moving allocated center m to mu.
[[nodiscard]] double center_log_accept(const MixtureState& state, const PosteriorContext& ctx, LoglikCache& cache,
                                       std::size_t m, const std::vector<double>& mu);

void step_non_allocated_U(MixtureState& state, const PosteriorContext& ctx, const SamplerConfig& config, Rng& rng,
                          SamplerDiagnostics& diag);
void step_non_allocated_rW(MixtureState& state, const PriorBundle& prior, Rng& rng);
void step_allocated_U(MixtureState& state, const PosteriorContext& ctx, LoglikCache& cache,
                      const SamplerConfig& config, Rng& rng, SamplerDiagnostics& diag);
void step_allocated_r(MixtureState& state, Rng& rng);
void step_allocated_W_sgld(MixtureState& state, const PosteriorContext& ctx, const SamplerConfig& config,
                           std::size_t iteration, Rng& rng, SamplerDiagnostics& diag);
void step_allocations(MixtureState& state, const PosteriorContext& ctx, LoglikCache& cache, Rng& rng);
// Moves emptied components to the non-allocated block and occupied ones to the
// allocated block, then canonicalizes.
void relabel(MixtureState& state);
void step_u(MixtureState& state, Rng& rng);

// One full sweep in the order: birth-death, non-allocated (r, W), allocated U,
// allocated r, allocated W, allocations, u.
void sweep(MixtureState& state, const PosteriorContext& ctx, LoglikCache& cache, const SamplerConfig& config,
           std::size_t iteration, Rng& rng, SamplerDiagnostics& diag);

[[nodiscard]] SamplerResult run_sampler(const PosteriorContext& ctx, MixtureState init, const SamplerConfig& config,
                                        const std::atomic<bool>* stop = nullptr);

// One JSON object per stored iteration; allocations are run-length encoded as
// [[label, run], ...] with 1-based labels.
[[nodiscard]] nlohmann::ordered_json trace_record_to_json(const TraceRecord& record);
void write_trace(std::ostream& out, const PosteriorTrace& trace);

}  // namespace tp2dp2
