#include "cwc/ssa.hpp"

#include <algorithm>
#include <cmath>

namespace cwc {

const char* to_string(TerminationReason r) {
    switch (r) {
        case TerminationReason::reached_t_end: return "reached_t_end";
        case TerminationReason::exhausted: return "exhausted";
        case TerminationReason::event_cap: return "event_cap";
    }
    return "?";
}

Engine::Engine(const std::vector<Rule>& rules, Term init, uint64_t seed)
    : rules_(rules), term_(std::move(init)), rng_(seed) {
    cache_.resize(rules_.size());
    for (size_t i = 0; i < rules_.size(); ++i)
        rules_by_label_[rules_[i].context.id()].push_back(i);
    rebuild_cache();
}

void Engine::collect_subtree(const Term& content,
                             std::vector<std::pair<uint64_t, Symbol>>& out) const {
    for (const Compartment& c : content.children) {
        out.emplace_back(c.id, c.label);
        collect_subtree(c.content, out);
    }
}

void Engine::update_site(size_t rule_idx, uint64_t comp_id, const Term& content) {
    RuleCache& rc = cache_[rule_idx];
    uint64_t neu = multiplicity(rules_[rule_idx].lhs, content);
    auto it = rc.site_mult.find(comp_id);
    uint64_t old = (it != rc.site_mult.end()) ? it->second : 0;
    rc.total = rc.total - old + neu;
    if (neu == 0) {
        if (it != rc.site_mult.end()) rc.site_mult.erase(it);
    } else if (it != rc.site_mult.end()) {
        it->second = neu;
    } else {
        rc.site_mult.emplace(comp_id, neu);
    }
}

void Engine::rebuild_cache() {
    for (RuleCache& rc : cache_) {
        rc.site_mult.clear();
        rc.total = 0;
    }
    std::vector<std::pair<uint64_t, Symbol>> all;
    all.emplace_back(kRootId, top_label());
    collect_subtree(term_, all);

    // Contents are resolved through a separate walk to pair ids with terms.
    std::function<void(const Term&, uint64_t, Symbol)> visit = [&](const Term& content,
                                                                   uint64_t id, Symbol label) {
        auto it = rules_by_label_.find(label.id());
        if (it != rules_by_label_.end())
            for (size_t r : it->second) update_site(r, id, content);
        for (const Compartment& c : content.children) visit(c.content, c.id, c.label);
    };
    visit(term_, kRootId, top_label());
}

double Engine::total_propensity() const {
    double a0 = 0.0;
    for (size_t i = 0; i < rules_.size(); ++i)
        a0 += rules_[i].rate * static_cast<double>(cache_[i].total);
    if (!std::isfinite(a0)) throw NonFiniteTau("total propensity is not finite");
    return a0;
}

double Engine::sample_tau(double a0) { return -std::log(rng_.next_open_unit()) / a0; }

void Engine::fire(double t_next) {
    const double a0 = total_propensity();

    // Rule: threshold scan in fixed rule order.
    const double rule_target = rng_.next_unit() * a0;
    size_t rule_idx = rules_.size();
    double cum = 0.0;
    size_t last_live = rules_.size();
    for (size_t i = 0; i < rules_.size(); ++i) {
        if (cache_[i].total == 0) continue;
        last_live = i;
        cum += rules_[i].rate * static_cast<double>(cache_[i].total);
        if (cum > rule_target) {
            rule_idx = i;
            break;
        }
    }
    if (rule_idx == rules_.size()) rule_idx = last_live;  // float round-off guard
    const Rule& rule = rules_[rule_idx];
    const RuleCache& rc = cache_[rule_idx];

    // Site: multiplicity-weighted scan in canonical depth-first order.
    const double site_target = rng_.next_unit() * static_cast<double>(rc.total);
    Path site_path;
    uint64_t site_mult = 0;
    {
        double site_cum = 0.0;
        bool found = false;
        Path here;
        Path last_path;
        uint64_t last_mult = 0;
        auto consider = [&](uint64_t id, const Path& path) {
            auto it = rc.site_mult.find(id);
            if (it == rc.site_mult.end()) return;
            last_path = path;
            last_mult = it->second;
            site_cum += static_cast<double>(it->second);
            if (!found && site_cum > site_target) {
                site_path = path;
                site_mult = it->second;
                found = true;
            }
        };
        std::function<void(const Term&)> walk = [&](const Term& content) {
            for (const Compartment& c : content.children) {
                if (found) return;
                here.push_back(c.id);
                if (c.label == rule.context) consider(c.id, here);
                walk(c.content);
                here.pop_back();
            }
        };
        if (rule.context == top_label()) consider(kRootId, here);
        if (!found) walk(term_);
        if (!found) {
            site_path = last_path;
            site_mult = last_mult;
        }
    }

    // Reactant combination: uniform over [0, mult).
    uint64_t index = static_cast<uint64_t>(rng_.next_unit() * static_cast<double>(site_mult));
    if (index >= site_mult) index = site_mult - 1;

    Binding binding = select_reactants(rule, MatchSite{site_path, site_mult}, term_, index);

    std::vector<std::pair<uint64_t, Symbol>> pre;
    collect_subtree(content_at(term_, site_path), pre);

    apply_rule_in_place(term_, rule, binding);

    refresh(site_path, pre);
    time_ = t_next;
    ++events_;
}

void Engine::refresh(const Path& context_path,
                     const std::vector<std::pair<uint64_t, Symbol>>& pre) {
    // Affected sites: the rewritten compartment, everything inside it, and
    // every ancestor up to the root.
    std::vector<std::pair<uint64_t, Symbol>> post;
    const Term& ctx = content_at(term_, context_path);
    collect_subtree(ctx, post);

    // Ids present before but not after the event vanished with the
    // consumed reactants; drop their cache entries.
    for (const auto& [id, label] : pre) {
        bool still = false;
        for (const auto& [pid, plabel] : post) {
            if (pid == id) {
                still = true;
                break;
            }
        }
        if (still) continue;
        auto it = rules_by_label_.find(label.id());
        if (it == rules_by_label_.end()) continue;
        for (size_t r : it->second) {
            auto& rc = cache_[r];
            auto entry = rc.site_mult.find(id);
            if (entry != rc.site_mult.end()) {
                rc.total -= entry->second;
                rc.site_mult.erase(entry);
            }
        }
    }

    // Recompute the whole affected set.
    auto recompute = [&](uint64_t id, Symbol label, const Term& content) {
        auto it = rules_by_label_.find(label.id());
        if (it == rules_by_label_.end()) return;
        for (size_t r : it->second) update_site(r, id, content);
    };

    recompute(kRootId, top_label(), term_);
    const Term* t = &term_;
    const Compartment* comp = nullptr;
    for (uint64_t id : context_path) {
        for (const Compartment& c : t->children) {
            if (c.id == id) {
                comp = &c;
                break;
            }
        }
        recompute(comp->id, comp->label, comp->content);
        t = &comp->content;
    }
    std::function<void(const Term&)> deep = [&](const Term& content) {
        for (const Compartment& c : content.children) {
            recompute(c.id, c.label, c.content);
            deep(c.content);
        }
    };
    deep(ctx);
}

Engine::StepStatus Engine::step() {
    double a0 = total_propensity();
    if (a0 == 0.0) return StepStatus::exhausted;
    double tau = sample_tau(a0);
    fire(time_ + tau);
    return StepStatus::applied;
}

bool Engine::verify_cache() const {
    for (size_t i = 0; i < rules_.size(); ++i) {
        double expect = propensity(rules_[i], term_);
        double got = rules_[i].rate * static_cast<double>(cache_[i].total);
        if (expect != got) return false;
    }
    return true;
}

Trajectory simulate(const Model& model, const SimConfig& config, const SampleObserver& observer) {
    if (!(config.dt_sample > 0.0)) throw std::invalid_argument("dt_sample must be positive");
    if (config.t_end < 0.0) throw std::invalid_argument("t_end must be non-negative");

    Engine engine(model.rules, model.init, config.seed);

    Trajectory traj;
    const uint64_t samples = static_cast<uint64_t>(std::floor(config.t_end / config.dt_sample)) + 1;
    uint64_t next_sample = 0;

    auto emit = [&](uint64_t k) {
        double t = static_cast<double>(k) * config.dt_sample;
        traj.times.push_back(t);
        traj.rows.push_back(eval_observables(model.observables, engine.term()));
        if (observer) observer(t, engine.term());
    };
    auto emit_rest = [&] {
        for (; next_sample < samples; ++next_sample) emit(next_sample);
    };

    while (true) {
        if (engine.events() >= config.max_events) {
            traj.reason = TerminationReason::event_cap;
            break;
        }
        double a0 = engine.total_propensity();
        if (a0 == 0.0) {
            emit_rest();
            traj.reason = TerminationReason::exhausted;
            break;
        }
        double t_next = engine.time() + engine.sample_tau(a0);
        if (t_next > config.t_end) {
            emit_rest();
            traj.reason = TerminationReason::reached_t_end;
            break;
        }
        while (next_sample < samples &&
               static_cast<double>(next_sample) * config.dt_sample < t_next) {
            emit(next_sample);
            ++next_sample;
        }
        engine.fire(t_next);
    }
    traj.event_count = engine.events();
    return traj;
}

}  // namespace cwc
