#include "cwc/rule.hpp"

#include <algorithm>
#include <set>

namespace cwc {

const CompartmentPattern& SimplePattern::comp() const { return std::get<1>(node); }
CompartmentPattern& SimplePattern::comp() { return std::get<1>(node); }

SimplePattern SimplePattern::mk_comp(CompartmentPattern cp) {
    return SimplePattern{std::move(cp)};
}

const OpenCompartment& OpenNode::comp() const { return std::get<1>(node); }

OpenNode OpenNode::mk_comp(OpenCompartment oc) { return OpenNode{std::move(oc), false}; }

namespace {

void collect_lhs_vars(const std::vector<SimplePattern>& pats, std::vector<Symbol>& out) {
    for (const SimplePattern& p : pats) {
        if (p.is_atom()) continue;
        const CompartmentPattern& cp = p.comp();
        for (Symbol v : cp.wrap_vars) out.push_back(v);
        for (Symbol v : cp.content_vars) out.push_back(v);
        collect_lhs_vars(cp.content, out);
    }
}

void check_linearity(const std::vector<SimplePattern>& pats, const std::string& rule,
                     std::vector<RuleViolation>& out) {
    for (const SimplePattern& p : pats) {
        if (p.is_atom()) continue;
        const CompartmentPattern& cp = p.comp();
        std::string where = "compartment pattern ^" + cp.label.str() + " in rule " + rule;
        if (cp.label == top_label())
            out.push_back({RuleViolation::ReservedLabel, where + ": label 'top' is reserved"});
        if (cp.wrap_vars.empty())
            out.push_back({RuleViolation::MissingWrapVar, where + ": no wrap variable"});
        else if (cp.wrap_vars.size() > 1)
            out.push_back({RuleViolation::DuplicateWrapVar, where + ": more than one wrap variable"});
        if (cp.content_vars.empty())
            out.push_back({RuleViolation::MissingContentVar, where + ": no content variable"});
        else if (cp.content_vars.size() > 1)
            out.push_back({RuleViolation::DuplicateContentVar,
                           where + ": more than one content variable"});
        check_linearity(cp.content, rule, out);
    }
}

void check_rhs(const OpenTerm& rhs, const std::set<uint32_t>& bound, const std::string& rule,
               std::vector<RuleViolation>& out) {
    for (const OpenNode& n : rhs) {
        if (n.is_var()) {
            if (!bound.count(n.sym().id()))
                out.push_back({RuleViolation::UnboundVariable,
                               "$" + n.sym().str() + " in rule " + rule + " is not bound by the lhs"});
        } else if (n.is_comp()) {
            const OpenCompartment& oc = n.comp();
            if (oc.label == top_label())
                out.push_back({RuleViolation::ReservedLabel,
                               "rhs compartment in rule " + rule + ": label 'top' is reserved"});
            if (oc.wrap_var && !bound.count(oc.wrap_var->id()))
                out.push_back({RuleViolation::UnboundVariable,
                               "~" + oc.wrap_var->str() + " in rule " + rule +
                                   " is not bound by the lhs"});
            check_rhs(oc.content, bound, rule, out);
        }
    }
}

}  // namespace

std::vector<RuleViolation> validate_rule(const Rule& rule) {
    std::vector<RuleViolation> out;
    check_linearity(rule.lhs, rule.name, out);

    std::vector<Symbol> vars;
    collect_lhs_vars(rule.lhs, vars);
    std::set<uint32_t> bound;
    for (Symbol v : vars) {
        if (!bound.insert(v.id()).second)
            out.push_back({RuleViolation::DuplicateVariable,
                           "variable " + v.str() + " bound twice in lhs of rule " + rule.name});
    }

    check_rhs(rule.rhs, bound, rule.name, out);

    if (!(rule.rate > 0.0))
        out.push_back({RuleViolation::NonPositiveRate,
                       "rule " + rule.name + " has non-positive rate"});
    return out;
}

namespace {

int pattern_list_cmp(const std::vector<SimplePattern>& a, const std::vector<SimplePattern>& b,
                     bool var_names) {
    // Order-insensitive comparison: compare canonically sorted copies.
    auto key = [var_names](const std::vector<SimplePattern>& v) {
        std::vector<const SimplePattern*> s;
        s.reserve(v.size());
        for (const auto& p : v) s.push_back(&p);
        std::sort(s.begin(), s.end(), [var_names](const SimplePattern* x, const SimplePattern* y) {
            return pattern_cmp(*x, *y, var_names) < 0;
        });
        return s;
    };
    auto sa = key(a), sb = key(b);
    size_t n = std::min(sa.size(), sb.size());
    for (size_t i = 0; i < n; ++i) {
        int c = pattern_cmp(*sa[i], *sb[i], var_names);
        if (c != 0) return c;
    }
    if (sa.size() != sb.size()) return sa.size() < sb.size() ? -1 : 1;
    return 0;
}

int sym_vec_cmp(const std::vector<Symbol>& a, const std::vector<Symbol>& b) {
    size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i) {
        int c = Symbol::cmp(a[i], b[i]);
        if (c != 0) return c;
    }
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    return 0;
}

int open_node_cmp(const OpenNode& a, const OpenNode& b) {
    auto rank = [](const OpenNode& n) { return n.is_atom() ? 0 : n.is_var() ? 1 : 2; };
    if (rank(a) != rank(b)) return rank(a) < rank(b) ? -1 : 1;
    if (!a.is_comp()) return Symbol::cmp(a.sym(), b.sym());
    const OpenCompartment& x = a.comp();
    const OpenCompartment& y = b.comp();
    int c = Symbol::cmp(x.label, y.label);
    if (c != 0) return c;
    c = AtomMultiset::cmp(x.wrap_atoms, y.wrap_atoms);
    if (c != 0) return c;
    if (x.wrap_var.has_value() != y.wrap_var.has_value())
        return x.wrap_var.has_value() ? 1 : -1;
    if (x.wrap_var) {
        c = Symbol::cmp(*x.wrap_var, *y.wrap_var);
        if (c != 0) return c;
    }
    return open_term_cmp(x.content, y.content);
}

}  // namespace

int pattern_cmp(const SimplePattern& a, const SimplePattern& b, bool var_names) {
    if (a.is_atom() != b.is_atom()) return a.is_atom() ? -1 : 1;
    if (a.is_atom()) return Symbol::cmp(a.atom(), b.atom());
    return compartment_pattern_cmp(a.comp(), b.comp(), var_names);
}

int compartment_pattern_cmp(const CompartmentPattern& x, const CompartmentPattern& y,
                            bool var_names) {
    int c = Symbol::cmp(x.label, y.label);
    if (c != 0) return c;
    c = AtomMultiset::cmp(x.wrap_atoms, y.wrap_atoms);
    if (c != 0) return c;
    c = pattern_list_cmp(x.content, y.content, var_names);
    if (c != 0) return c;
    if (var_names) {
        c = sym_vec_cmp(x.wrap_vars, y.wrap_vars);
        if (c != 0) return c;
        c = sym_vec_cmp(x.content_vars, y.content_vars);
        if (c != 0) return c;
    }
    return 0;
}

int open_term_cmp(const OpenTerm& a, const OpenTerm& b) {
    std::vector<const OpenNode*> sa, sb;
    for (const auto& n : a) sa.push_back(&n);
    for (const auto& n : b) sb.push_back(&n);
    auto less = [](const OpenNode* x, const OpenNode* y) { return open_node_cmp(*x, *y) < 0; };
    std::sort(sa.begin(), sa.end(), less);
    std::sort(sb.begin(), sb.end(), less);
    size_t n = std::min(sa.size(), sb.size());
    for (size_t i = 0; i < n; ++i) {
        int c = open_node_cmp(*sa[i], *sb[i]);
        if (c != 0) return c;
    }
    if (sa.size() != sb.size()) return sa.size() < sb.size() ? -1 : 1;
    return 0;
}

int rule_cmp(const Rule& a, const Rule& b) {
    if (int c = a.name.compare(b.name); c != 0) return c < 0 ? -1 : 1;
    if (int c = Symbol::cmp(a.context, b.context); c != 0) return c;
    if (int c = pattern_list_cmp(a.lhs, b.lhs, true); c != 0) return c;
    if (int c = open_term_cmp(a.rhs, b.rhs); c != 0) return c;
    if (a.rate != b.rate) return a.rate < b.rate ? -1 : 1;
    return 0;
}

}  // namespace cwc
