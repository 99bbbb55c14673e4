#include "cwc/match.hpp"

#include <algorithm>
#include <functional>

namespace cwc {

bool SelectionTrace::operator==(const SelectionTrace& o) const {
    return atom_occurrences == o.atom_occurrences && compartments == o.compartments;
}

const AtomMultiset* Binding::wrap_of(Symbol v) const {
    for (const auto& [sym, ms] : wrap_bindings)
        if (sym == v) return &ms;
    return nullptr;
}

const Term* Binding::term_of(Symbol v) const {
    for (const auto& [sym, t] : term_bindings)
        if (sym == v) return &t;
    return nullptr;
}

namespace {

uint64_t checked_mul(uint64_t a, uint64_t b) {
    uint64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw MatchError("multiplicity overflow");
    return r;
}

uint64_t checked_add(uint64_t a, uint64_t b) {
    uint64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw MatchError("multiplicity overflow");
    return r;
}

uint64_t binomial(uint32_t n, uint32_t r) {
    if (r > n) return 0;
    if (r > n - r) r = n - r;
    uint64_t c = 1;
    for (uint32_t i = 1; i <= r; ++i) {
        c = checked_mul(c, n - r + i);
        c /= i;
    }
    return c;
}

// Lexicographic unranking of an r-combination of {0..n-1}.
std::vector<uint32_t> unrank_combination(uint64_t rank, uint32_t n, uint32_t r) {
    std::vector<uint32_t> out;
    out.reserve(r);
    uint32_t e = 0;
    for (uint32_t slot = 0; slot < r; ++slot) {
        while (true) {
            uint64_t block = binomial(n - 1 - e, r - slot - 1);
            if (rank < block) break;
            rank -= block;
            ++e;
        }
        out.push_back(e);
        ++e;
    }
    return out;
}

/// Match analysis of one pattern multiset against one content term.
struct Analysis {
    struct AtomReq {
        Symbol sym;
        uint32_t required;
        uint32_t avail;
        uint64_t comb;  // C(avail, required)
    };
    struct Group {
        std::vector<const CompartmentPattern*> members;  // lhs order
    };

    const Term* content = nullptr;
    std::vector<AtomReq> atom_reqs;       // canonical species order
    std::vector<Group> groups;            // canonical structural order
    std::vector<std::vector<uint64_t>> m; // per group, per child index
    uint64_t atom_part = 1;
    uint64_t comp_part = 1;

    uint64_t total() const { return checked_mul(atom_part, comp_part); }
};

Analysis analyze(const std::vector<SimplePattern>& lhs, const Term& content);

// Sum over unordered injective assignments of groups[gi..] to unused
// children, of the product of per-slot multiplicities. Children within a
// group are taken with increasing index so each unordered choice is
// visited once.
uint64_t assignment_sum(const Analysis& an, size_t gi, size_t slot, size_t min_child,
                        std::vector<char>& used) {
    if (gi == an.groups.size()) return 1;
    const size_t k = an.groups[gi].members.size();
    if (slot == k) return assignment_sum(an, gi + 1, 0, 0, used);
    uint64_t sum = 0;
    const auto& row = an.m[gi];
    for (size_t c = min_child; c < row.size(); ++c) {
        if (used[c] || row[c] == 0) continue;
        used[c] = 1;
        uint64_t sub = assignment_sum(an, gi, slot + 1, c + 1, used);
        used[c] = 0;
        sum = checked_add(sum, checked_mul(row[c], sub));
    }
    return sum;
}

Analysis analyze(const std::vector<SimplePattern>& lhs, const Term& content) {
    Analysis an;
    an.content = &content;

    // Atom requirements, merged per species.
    AtomMultiset req;
    std::vector<const CompartmentPattern*> cpats;
    for (const SimplePattern& p : lhs) {
        if (p.is_atom())
            req.add(p.atom());
        else
            cpats.push_back(&p.comp());
    }
    for (const auto& e : req.entries()) {
        uint32_t avail = content.atoms.count(e.atom);
        an.atom_reqs.push_back({e.atom, e.count, avail, binomial(avail, e.count)});
        an.atom_part = checked_mul(an.atom_part, an.atom_reqs.back().comb);
    }

    // Group structurally identical compartment patterns (variable names
    // do not distinguish them).
    std::stable_sort(cpats.begin(), cpats.end(),
                     [](const CompartmentPattern* a, const CompartmentPattern* b) {
                         return compartment_pattern_cmp(*a, *b, false) < 0;
                     });
    for (const CompartmentPattern* cp : cpats) {
        if (!an.groups.empty() &&
            compartment_pattern_cmp(*an.groups.back().members.front(), *cp, false) == 0) {
            an.groups.back().members.push_back(cp);
        } else {
            an.groups.push_back({{cp}});
        }
    }

    // Per-(group, child) inner multiplicities.
    an.m.resize(an.groups.size());
    for (size_t g = 0; g < an.groups.size(); ++g) {
        const CompartmentPattern& pat = *an.groups[g].members.front();
        an.m[g].assign(content.children.size(), 0);
        for (size_t c = 0; c < content.children.size(); ++c) {
            const Compartment& child = content.children[c];
            if (child.label != pat.label) continue;
            if (!child.wrap.contains_all(pat.wrap_atoms)) continue;
            an.m[g][c] = multiplicity(pat.content, child.content);
        }
    }

    if (an.atom_part != 0 && !an.groups.empty()) {
        std::vector<char> used(content.children.size(), 0);
        an.comp_part = assignment_sum(an, 0, 0, 0, used);
    }
    return an;
}

/// One level of a concrete selection, produced while decomposing an index.
struct LevelSelection {
    AtomMultiset consumed_atoms;
    std::vector<uint64_t> consumed_children;
    std::vector<std::pair<Symbol, AtomMultiset>> wrap_bindings;
    std::vector<std::pair<Symbol, Term>> term_bindings;
    SelectionTrace trace;
};

void select_level(const std::vector<SimplePattern>& lhs, const Term& content, uint64_t index,
                  LevelSelection& out);

// Decomposes the assignment part of an index against the analysis,
// following the same enumeration order as assignment_sum.
void select_assignment(const Analysis& an, uint64_t index, LevelSelection& out) {
    struct Slot {
        size_t group;
        size_t member;  // index within the group (lhs order)
        size_t child;
        uint64_t inner_index;
    };
    std::vector<Slot> slots;
    std::vector<char> used(an.content->children.size(), 0);

    size_t gi = 0, slot = 0, min_child = 0;
    while (gi < an.groups.size()) {
        if (slot == an.groups[gi].members.size()) {
            ++gi;
            slot = 0;
            min_child = 0;
            continue;
        }
        const auto& row = an.m[gi];
        bool chosen = false;
        for (size_t c = min_child; c < row.size(); ++c) {
            if (used[c] || row[c] == 0) continue;
            used[c] = 1;
            uint64_t rest = assignment_sum(an, gi, slot + 1, c + 1, used);
            uint64_t here = checked_mul(row[c], rest);
            if (index < here) {
                slots.push_back({gi, slot, c, index / rest});
                index %= rest;
                ++slot;
                min_child = c + 1;
                chosen = true;
                break;
            }
            index -= here;
            used[c] = 0;
        }
        if (!chosen) throw IndexOutOfRange("selection index exceeds multiplicity");
    }

    // Within a group, members (in lhs order) pair with chosen children in
    // increasing child order, which is how slots were pushed.
    for (const Slot& s : slots) {
        const CompartmentPattern& pat = *an.groups[s.group].members[s.member];
        const Compartment& child = an.content->children[s.child];

        LevelSelection inner;
        select_level(pat.content, child.content, s.inner_index, inner);

        out.consumed_children.push_back(child.id);

        AtomMultiset wrap_rest = child.wrap;
        wrap_rest.subtract(pat.wrap_atoms);
        out.wrap_bindings.emplace_back(pat.wrap_var(), std::move(wrap_rest));

        Term remainder = child.content;
        remainder.atoms.subtract(inner.consumed_atoms);
        if (!inner.consumed_children.empty()) {
            auto& kids = remainder.children;
            kids.erase(std::remove_if(kids.begin(), kids.end(),
                                      [&](const Compartment& k) {
                                          return std::find(inner.consumed_children.begin(),
                                                           inner.consumed_children.end(),
                                                           k.id) != inner.consumed_children.end();
                                      }),
                       kids.end());
        }
        out.term_bindings.emplace_back(pat.content_var(), std::move(remainder));

        for (auto& wb : inner.wrap_bindings) out.wrap_bindings.push_back(std::move(wb));
        for (auto& tb : inner.term_bindings) out.term_bindings.push_back(std::move(tb));
        out.trace.compartments.emplace_back(child.id, std::move(inner.trace));
    }
}

void select_level(const std::vector<SimplePattern>& lhs, const Term& content, uint64_t index,
                  LevelSelection& out) {
    Analysis an = analyze(lhs, content);
    uint64_t total = an.total();
    if (index >= total) throw IndexOutOfRange("selection index exceeds multiplicity");

    for (const Analysis::AtomReq& r : an.atom_reqs) {
        uint64_t occ_rank = index % r.comb;
        index /= r.comb;
        out.consumed_atoms.add(r.sym, r.required);
        out.trace.atom_occurrences.emplace_back(
            r.sym, unrank_combination(occ_rank, r.avail, r.required));
    }
    if (!an.groups.empty()) select_assignment(an, index, out);
}

void re_id_subtree(Term& t) {
    for (Compartment& c : t.children) {
        c.id = fresh_compartment_id();
        re_id_subtree(c.content);
    }
}

struct RhsBuilder {
    const Binding& binding;
    std::vector<Symbol> used_term_vars;

    void build(const OpenTerm& rhs, Term& into) {
        for (const OpenNode& n : rhs) {
            if (n.is_atom()) {
                into.atoms.add(n.sym());
            } else if (n.is_var()) {
                const Term* bound = binding.term_of(n.sym());
                if (!bound) throw MatchError("unbound term variable $" + n.sym().str());
                Term copy = *bound;
                bool reused = std::find(used_term_vars.begin(), used_term_vars.end(), n.sym()) !=
                              used_term_vars.end();
                if (reused)
                    re_id_subtree(copy);  // duplicated subterms need fresh handles
                else
                    used_term_vars.push_back(n.sym());
                into.atoms.merge(copy.atoms);
                for (Compartment& c : copy.children) into.children.push_back(std::move(c));
            } else {
                const OpenCompartment& oc = n.comp();
                AtomMultiset wrap = oc.wrap_atoms;
                if (oc.wrap_var) {
                    const AtomMultiset* bound = binding.wrap_of(*oc.wrap_var);
                    if (!bound) throw MatchError("unbound wrap variable ~" + oc.wrap_var->str());
                    wrap.merge(*bound);
                }
                Term content;
                build(oc.content, content);
                content.canonicalize();
                into.children.push_back(
                    make_compartment(std::move(wrap), std::move(content), oc.label));
            }
        }
    }
};

void rewrite_content(Term& content, const Rule& rule, const Binding& binding) {
    if (!content.atoms.contains_all(binding.consumed_atoms))
        throw StaleBinding("consumed atoms no longer present for rule " + rule.name);
    std::vector<size_t> doomed;
    for (uint64_t id : binding.consumed_children) {
        auto it = std::find_if(content.children.begin(), content.children.end(),
                               [id](const Compartment& c) { return c.id == id; });
        if (it == content.children.end())
            throw StaleBinding("consumed compartment no longer present for rule " + rule.name);
        doomed.push_back(static_cast<size_t>(it - content.children.begin()));
    }
    std::sort(doomed.rbegin(), doomed.rend());
    for (size_t idx : doomed)
        content.children.erase(content.children.begin() + static_cast<std::ptrdiff_t>(idx));
    content.atoms.subtract(binding.consumed_atoms);

    RhsBuilder builder{binding, {}};
    builder.build(rule.rhs, content);

    // Children's contents are canonical already; only this level needs a sort.
    std::stable_sort(content.children.begin(), content.children.end(),
                     [](const Compartment& a, const Compartment& b) {
                         return compartment_cmp(a, b) < 0;
                     });
}

// Descends to `path`, applies `fn` to the content there, then restores
// canonical sibling order on the way back up.
void with_content_at(Term& t, const Path& path, size_t depth,
                     const std::function<void(Term&)>& fn);

void reposition_child(Term& t, size_t idx) {
    Compartment moved = std::move(t.children[idx]);
    t.children.erase(t.children.begin() + static_cast<std::ptrdiff_t>(idx));
    auto pos = std::lower_bound(t.children.begin(), t.children.end(), moved,
                                [](const Compartment& a, const Compartment& b) {
                                    return compartment_cmp(a, b) < 0;
                                });
    t.children.insert(pos, std::move(moved));
}

void with_content_at(Term& t, const Path& path, size_t depth,
                     const std::function<void(Term&)>& fn) {
    if (depth == path.size()) {
        fn(t);
        return;
    }
    for (size_t i = 0; i < t.children.size(); ++i) {
        if (t.children[i].id == path[depth]) {
            with_content_at(t.children[i].content, path, depth + 1, fn);
            reposition_child(t, i);
            return;
        }
    }
    throw StaleBinding("context compartment no longer present (id " +
                       std::to_string(path[depth]) + ")");
}

void sites_walk(const Rule& rule, const Term& t, Path& here, std::vector<MatchSite>& out) {
    for (const Compartment& c : t.children) {
        here.push_back(c.id);
        if (c.label == rule.context) {
            uint64_t m = multiplicity(rule.lhs, c.content);
            if (m > 0) out.push_back({here, m});
        }
        sites_walk(rule, c.content, here, out);
        here.pop_back();
    }
}

uint64_t total_walk(const Rule& rule, const Term& t) {
    uint64_t total = 0;
    for (const Compartment& c : t.children) {
        if (c.label == rule.context)
            total = checked_add(total, multiplicity(rule.lhs, c.content));
        total = checked_add(total, total_walk(rule, c.content));
    }
    return total;
}

}  // namespace

uint64_t multiplicity(const std::vector<SimplePattern>& lhs, const Term& content) {
    return analyze(lhs, content).total();
}

std::vector<MatchSite> enumerate_sites(const Rule& rule, const Term& system) {
    std::vector<MatchSite> out;
    if (rule.context == top_label()) {
        uint64_t m = multiplicity(rule.lhs, system);
        if (m > 0) out.push_back({{}, m});
    }
    Path here;
    sites_walk(rule, system, here, out);
    return out;
}

double propensity(const Rule& rule, const Term& system) {
    uint64_t total = total_walk(rule, system);
    if (rule.context == top_label())
        total = checked_add(total, multiplicity(rule.lhs, system));
    return rule.rate * static_cast<double>(total);
}

Binding select_reactants(const Rule& rule, const MatchSite& site, const Term& system,
                         uint64_t index) {
    if (index >= site.multiplicity)
        throw IndexOutOfRange("index " + std::to_string(index) + " >= multiplicity " +
                              std::to_string(site.multiplicity));
    const Term& content = content_at(system, site.context_path);
    LevelSelection sel;
    select_level(rule.lhs, content, index, sel);

    Binding b;
    b.context = site.context_path;
    b.consumed_atoms = std::move(sel.consumed_atoms);
    b.consumed_children = std::move(sel.consumed_children);
    b.wrap_bindings = std::move(sel.wrap_bindings);
    b.term_bindings = std::move(sel.term_bindings);
    b.trace = std::move(sel.trace);
    return b;
}

Term apply_rule(const Term& system, const Rule& rule, const Binding& binding) {
    Term out = system;
    apply_rule_in_place(out, rule, binding);
    return out;
}

void apply_rule_in_place(Term& system, const Rule& rule, const Binding& binding) {
    with_content_at(system, binding.context, 0,
                    [&](Term& content) { rewrite_content(content, rule, binding); });
}

}  // namespace cwc
