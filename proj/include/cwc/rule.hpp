#ifndef CWC_RULE_HPP
#define CWC_RULE_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cwc/term.hpp"

namespace cwc {

struct CompartmentPattern;

/// Left-hand-side pattern element: a literal atom or a compartment pattern.
struct SimplePattern {
    std::variant<Symbol, CompartmentPattern> node;

    bool is_atom() const { return node.index() == 0; }
    Symbol atom() const { return std::get<0>(node); }
    const CompartmentPattern& comp() const;
    CompartmentPattern& comp();

    static SimplePattern mk_atom(Symbol a) { return SimplePattern{a}; }
    static SimplePattern mk_comp(CompartmentPattern cp);
};

/// `( wrap_atoms ~w | content_patterns $X )^label`. Linearity requires
/// exactly one wrap variable and one content variable; the vectors exist so
/// validation can report violations on ill-formed input.
struct CompartmentPattern {
    AtomMultiset wrap_atoms;
    std::vector<Symbol> wrap_vars;
    std::vector<SimplePattern> content;
    std::vector<Symbol> content_vars;
    Symbol label;

    Symbol wrap_var() const { return wrap_vars.front(); }
    Symbol content_var() const { return content_vars.front(); }
};

struct OpenCompartment;

/// Right-hand-side element: atom, bound term variable, or compartment spec.
struct OpenNode {
    std::variant<Symbol, OpenCompartment> node;
    bool is_term_var = false;  // discriminates the two Symbol meanings

    bool is_atom() const { return node.index() == 0 && !is_term_var; }
    bool is_var() const { return is_term_var; }
    bool is_comp() const { return node.index() == 1; }
    Symbol sym() const { return std::get<0>(node); }
    const OpenCompartment& comp() const;

    static OpenNode mk_atom(Symbol a) { return OpenNode{a, false}; }
    static OpenNode mk_var(Symbol v) { return OpenNode{v, true}; }
    static OpenNode mk_comp(OpenCompartment oc);
};

using OpenTerm = std::vector<OpenNode>;

struct OpenCompartment {
    AtomMultiset wrap_atoms;
    std::optional<Symbol> wrap_var;
    OpenTerm content;
    Symbol label;
};

/// Rewrite rule `context : lhs ->[rate] rhs`, applied to the content of
/// compartments of type `context` with the whole-content remainder kept
/// implicitly.
struct Rule {
    std::string name;
    Symbol context;
    std::vector<SimplePattern> lhs;
    OpenTerm rhs;
    double rate = 0.0;
};

struct RuleViolation {
    enum Kind {
        MissingWrapVar,
        DuplicateWrapVar,
        MissingContentVar,
        DuplicateContentVar,
        DuplicateVariable,
        UnboundVariable,
        NonPositiveRate,
        ReservedLabel,
    };
    Kind kind;
    std::string detail;
};

/// Checks linearity, variable binding and the rate; returns an empty list
/// for a valid rule.
std::vector<RuleViolation> validate_rule(const Rule& rule);

/// Structural order; var_names == false treats patterns that differ only in
/// variable naming as equal (the notion of "identical pattern components"
/// used by the counting semantics).
int pattern_cmp(const SimplePattern& a, const SimplePattern& b, bool var_names);
int compartment_pattern_cmp(const CompartmentPattern& a, const CompartmentPattern& b,
                            bool var_names);
int open_term_cmp(const OpenTerm& a, const OpenTerm& b);
int rule_cmp(const Rule& a, const Rule& b);

}  // namespace cwc

#endif
