#ifndef CWC_MATCH_HPP
#define CWC_MATCH_HPP

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cwc/rule.hpp"
#include "cwc/term.hpp"

namespace cwc {

class MatchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class StaleBinding : public MatchError {
public:
    using MatchError::MatchError;
};
class IndexOutOfRange : public MatchError {
public:
    using MatchError::MatchError;
};

/// One applicable location of a rule: a compartment of the rule's context
/// type plus the number of distinct reactant combinations there.
struct MatchSite {
    Path context_path;
    uint64_t multiplicity = 0;
};

/// Records exactly which occurrences a selection consumed, so distinct
/// selection indices are distinguishable even when their effects coincide
/// (e.g. two occurrences of the same atom).
struct SelectionTrace {
    std::vector<std::pair<Symbol, std::vector<uint32_t>>> atom_occurrences;
    std::vector<std::pair<uint64_t, SelectionTrace>> compartments;  // child id, inner

    bool operator==(const SelectionTrace& o) const;
};

/// Match of a rule's lhs at one site: what gets consumed and what the
/// variables captured. Applying the binding and re-reading the reactants
/// reproduces the consumed selection.
struct Binding {
    Path context;
    AtomMultiset consumed_atoms;                 // from the context content
    std::vector<uint64_t> consumed_children;     // ids of consumed child compartments
    std::vector<std::pair<Symbol, AtomMultiset>> wrap_bindings;
    std::vector<std::pair<Symbol, Term>> term_bindings;
    SelectionTrace trace;

    const AtomMultiset* wrap_of(Symbol v) const;
    const Term* term_of(Symbol v) const;
};

/// Number of distinct reactant combinations of `lhs` in `content`:
/// a C(n, r) factor per atom species, and for compartment patterns the sum
/// over distinct unordered injective assignments to matching children of
/// the product of inner multiplicities. Wrap requirements are containment
/// tests and contribute no combinatorial factor.
uint64_t multiplicity(const std::vector<SimplePattern>& lhs, const Term& content);

/// All compartments of the rule's context type (the root counts as `top`)
/// with multiplicity > 0, in depth-first canonical order.
std::vector<MatchSite> enumerate_sites(const Rule& rule, const Term& system);

/// rate × total multiplicity over all sites.
double propensity(const Rule& rule, const Term& system);

/// Deterministic bijection from [0, site.multiplicity) onto the distinct
/// reactant selections at the site. Throws IndexOutOfRange.
Binding select_reactants(const Rule& rule, const MatchSite& site, const Term& system,
                         uint64_t index);

/// Removes the bound reactants, instantiates the rhs at the context
/// compartment and re-canonicalizes. Nothing outside the context subtree
/// changes. Throws StaleBinding when the reactants are no longer present.
Term apply_rule(const Term& system, const Rule& rule, const Binding& binding);

/// In-place variant used by the simulation loop.
void apply_rule_in_place(Term& system, const Rule& rule, const Binding& binding);

}  // namespace cwc

#endif
