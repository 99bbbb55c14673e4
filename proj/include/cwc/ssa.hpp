#ifndef CWC_SSA_HPP
#define CWC_SSA_HPP

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "cwc/match.hpp"
#include "cwc/model.hpp"
#include "cwc/rng.hpp"

namespace cwc {

class NonFiniteTau : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SimConfig {
    double t_end = 0.0;
    double dt_sample = 1.0;
    uint64_t seed = 0;
    uint64_t max_events = 10'000'000;
};

enum class TerminationReason { reached_t_end, exhausted, event_cap };

const char* to_string(TerminationReason r);

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> rows;  // one row of observable values per time
    TerminationReason reason = TerminationReason::reached_t_end;
    uint64_t event_count = 0;
};

/// Gillespie direct-method stepper over one term. Owns its state; never
/// shared between threads. Per-rule total multiplicities are cached per
/// compartment and refreshed incrementally after each event (an event can
/// only change matches inside the rewritten compartment's subtree and in
/// its ancestor chain); `verify_cache` cross-checks against from-scratch
/// recomputation.
class Engine {
public:
    Engine(const std::vector<Rule>& rules, Term init, uint64_t seed);

    enum class StepStatus { applied, exhausted };

    /// One SSA event: waiting time, rule, site, reactants, rewrite.
    StepStatus step();

    /// Sum of rate × total multiplicity over all rules. Throws NonFiniteTau
    /// when the sum is not finite.
    double total_propensity() const;

    /// Draws the exponential waiting time for the current propensity.
    double sample_tau(double a0);

    /// Selects rule, site and reactants, applies the rewrite and advances
    /// the clock to `t_next`. Requires total_propensity() > 0.
    void fire(double t_next);

    const Term& term() const { return term_; }
    double time() const { return time_; }
    uint64_t events() const { return events_; }
    uint64_t rule_total(size_t rule_idx) const { return cache_[rule_idx].total; }

    /// Exact comparison of every cached total against a fresh recomputation.
    bool verify_cache() const;

private:
    struct RuleCache {
        std::unordered_map<uint64_t, uint64_t> site_mult;  // compartment id -> mult
        uint64_t total = 0;
    };

    void rebuild_cache();
    void refresh(const Path& context_path, const std::vector<std::pair<uint64_t, Symbol>>& pre);
    void collect_subtree(const Term& content, std::vector<std::pair<uint64_t, Symbol>>& out) const;
    void update_site(size_t rule_idx, uint64_t comp_id, const Term& content);

    const std::vector<Rule>& rules_;
    Term term_;
    double time_ = 0.0;
    uint64_t events_ = 0;
    Xoshiro256 rng_;
    std::vector<RuleCache> cache_;
    std::unordered_map<uint32_t, std::vector<size_t>> rules_by_label_;

    static constexpr uint64_t kRootId = 0;
};

using SampleObserver = std::function<void(double time, const Term& state)>;

/// Runs the direct method to t_end, sampling every observable on the grid
/// 0, dt, 2·dt, … with piecewise-constant state (the value after the last
/// event at or before the sample time). Identical model + config gives a
/// bit-identical trajectory.
Trajectory simulate(const Model& model, const SimConfig& config,
                    const SampleObserver& observer = nullptr);

}  // namespace cwc

#endif
