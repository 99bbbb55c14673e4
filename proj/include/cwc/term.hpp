#ifndef CWC_TERM_HPP
#define CWC_TERM_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cwc/multiset.hpp"
#include "cwc/symbol.hpp"

namespace cwc {

struct Compartment;

/// Reserved label of the outermost (root) compartment.
Symbol top_label();

class TermError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A CWC term: a multiset of atoms plus a multiset of compartments.
/// Children are kept in canonical order (label, then recursive key), so
/// equality and traversal are deterministic.
struct Term {
    AtomMultiset atoms;
    std::vector<Compartment> children;

    Term() = default;
    Term(const Term&);
    Term(Term&&) noexcept;
    Term& operator=(const Term&);
    Term& operator=(Term&&) noexcept;
    ~Term();

    bool empty() const;

    /// Re-sorts children recursively. Idempotent.
    void canonicalize();
};

/// Labeled compartment: atom-only wrap, nested content term.
/// `id` is a hidden stable handle used for addressing while a term is
/// rewritten; it never participates in equality.
struct Compartment {
    AtomMultiset wrap;
    Term content;
    Symbol label;
    uint64_t id = 0;
};

/// Fresh compartment identifier (process-wide counter).
uint64_t fresh_compartment_id();

Compartment make_compartment(AtomMultiset wrap, Term content, Symbol label);

/// Structural order ignoring ids: atoms first, then children lexicographically.
int term_cmp(const Term& a, const Term& b);
int compartment_cmp(const Compartment& a, const Compartment& b);

inline bool term_eq(const Term& a, const Term& b) { return term_cmp(a, b) == 0; }

/// Address of a compartment: child ids from the root. Empty = root.
using Path = std::vector<uint64_t>;

/// Resolves a path; returns nullptr for the root (which is not a
/// Compartment object) and throws TermError if a step is missing.
const Compartment* resolve(const Term& root, const Path& path);

/// Content term at a path (the root term itself for the empty path).
const Term& content_at(const Term& root, const Path& path);

enum class CountScope { content, wrap, both };

/// Glob over a label: exact name or prefix with a trailing '*'.
struct LabelGlob {
    Symbol exact;        // valid when !prefix_mode
    std::string prefix;  // valid when prefix_mode
    bool prefix_mode = false;

    static LabelGlob parse(std::string_view text);
    bool matches(Symbol label) const;
};

/// Compartment filter: one or more '/'-separated label globs. The last
/// segment matches the compartment's own label, the one before it the
/// direct parent, and so on. A single segment matches at any depth.
struct LabelPathGlob {
    std::vector<LabelGlob> segments;

    static LabelPathGlob parse(std::string_view text);
    std::string str() const;
    bool operator==(const LabelPathGlob& o) const;
};

/// Sums occurrences of `atom` over every compartment matched by `filter`
/// (the root counts as a `top`-labeled compartment), looking at the direct
/// content, the wrap, or both.
uint64_t count_atom(const Term& system, Symbol atom, const LabelPathGlob& filter,
                    CountScope scope);

/// Paths of every compartment labeled `label`, depth-first in canonical
/// child order; the root path is included when label == top.
std::vector<Path> collect_compartments(const Term& system, Symbol label);

/// Builder for assembling terms in code; rejects wraps holding compartments.
struct RawNode {
    bool is_atom = true;
    Symbol atom;
    // compartment parts
    std::vector<RawNode> wrap;
    std::vector<RawNode> content;
    Symbol label;

    static RawNode mk_atom(std::string_view name);
    static RawNode mk_comp(std::vector<RawNode> wrap, std::vector<RawNode> content,
                           std::string_view label);
};

/// Canonicalizes a raw multiset into a Term. Throws TermError (wrap holds
/// a compartment) on ill-formed input. normalize(normalize(x)) == normalize(x).
Term normalize(const std::vector<RawNode>& raw);

/// True when no wrap anywhere in the term holds a compartment (always true
/// for terms built through this API; used by property tests).
bool well_formed(const Term& t);

}  // namespace cwc

#endif
