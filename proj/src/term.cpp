#include "cwc/term.hpp"

#include <algorithm>
#include <atomic>

namespace cwc {

Symbol top_label() {
    static const Symbol s = Symbol::intern("top");
    return s;
}

Term::Term(const Term&) = default;
Term::Term(Term&&) noexcept = default;
Term& Term::operator=(const Term&) = default;
Term& Term::operator=(Term&&) noexcept = default;
Term::~Term() = default;

bool Term::empty() const { return atoms.empty() && children.empty(); }

void Term::canonicalize() {
    for (Compartment& c : children) c.content.canonicalize();
    std::stable_sort(children.begin(), children.end(),
                     [](const Compartment& a, const Compartment& b) {
                         return compartment_cmp(a, b) < 0;
                     });
}

uint64_t fresh_compartment_id() {
    static std::atomic<uint64_t> next{1};
    return next.fetch_add(1, std::memory_order_relaxed);
}

Compartment make_compartment(AtomMultiset wrap, Term content, Symbol label) {
    Compartment c;
    c.wrap = std::move(wrap);
    c.content = std::move(content);
    c.label = label;
    c.id = fresh_compartment_id();
    return c;
}

int compartment_cmp(const Compartment& a, const Compartment& b) {
    int c = Symbol::cmp(a.label, b.label);
    if (c != 0) return c;
    c = AtomMultiset::cmp(a.wrap, b.wrap);
    if (c != 0) return c;
    return term_cmp(a.content, b.content);
}

int term_cmp(const Term& a, const Term& b) {
    int c = AtomMultiset::cmp(a.atoms, b.atoms);
    if (c != 0) return c;
    size_t n = std::min(a.children.size(), b.children.size());
    for (size_t i = 0; i < n; ++i) {
        c = compartment_cmp(a.children[i], b.children[i]);
        if (c != 0) return c;
    }
    if (a.children.size() != b.children.size())
        return a.children.size() < b.children.size() ? -1 : 1;
    return 0;
}

const Compartment* resolve(const Term& root, const Path& path) {
    const Term* t = &root;
    const Compartment* found = nullptr;
    for (uint64_t id : path) {
        found = nullptr;
        for (const Compartment& c : t->children) {
            if (c.id == id) {
                found = &c;
                break;
            }
        }
        if (!found) throw TermError("path step not found: id " + std::to_string(id));
        t = &found->content;
    }
    return found;
}

const Term& content_at(const Term& root, const Path& path) {
    if (path.empty()) return root;
    return resolve(root, path)->content;
}

LabelGlob LabelGlob::parse(std::string_view text) {
    LabelGlob g;
    if (!text.empty() && text.back() == '*') {
        g.prefix_mode = true;
        g.prefix = std::string(text.substr(0, text.size() - 1));
    } else {
        g.exact = Symbol::intern(text);
    }
    return g;
}

bool LabelGlob::matches(Symbol label) const {
    if (!prefix_mode) return label == exact;
    const std::string& name = label.str();
    return name.size() >= prefix.size() &&
           name.compare(0, prefix.size(), prefix) == 0;
}

LabelPathGlob LabelPathGlob::parse(std::string_view text) {
    LabelPathGlob g;
    size_t start = 0;
    while (true) {
        size_t slash = text.find('/', start);
        if (slash == std::string_view::npos) {
            g.segments.push_back(LabelGlob::parse(text.substr(start)));
            break;
        }
        g.segments.push_back(LabelGlob::parse(text.substr(start, slash - start)));
        start = slash + 1;
    }
    return g;
}

std::string LabelPathGlob::str() const {
    std::string out;
    for (size_t i = 0; i < segments.size(); ++i) {
        if (i) out += '/';
        if (segments[i].prefix_mode) {
            out += segments[i].prefix;
            out += '*';
        } else {
            out += segments[i].exact.str();
        }
    }
    return out;
}

bool LabelPathGlob::operator==(const LabelPathGlob& o) const {
    return str() == o.str();
}

namespace {

bool path_glob_matches(const LabelPathGlob& g, const std::vector<Symbol>& ancestry) {
    // ancestry: labels from root (top) down to the compartment itself.
    if (g.segments.size() > ancestry.size()) return false;
    size_t off = ancestry.size() - g.segments.size();
    for (size_t i = 0; i < g.segments.size(); ++i)
        if (!g.segments[i].matches(ancestry[off + i])) return false;
    return true;
}

void count_walk(const Term& t, Symbol self_label, std::vector<Symbol>& ancestry,
                const AtomMultiset* wrap, Symbol atom, const LabelPathGlob& filter,
                CountScope scope, uint64_t& acc) {
    ancestry.push_back(self_label);
    if (path_glob_matches(filter, ancestry)) {
        if (scope != CountScope::wrap) acc += t.atoms.count(atom);
        if (scope != CountScope::content && wrap) acc += wrap->count(atom);
    }
    for (const Compartment& c : t.children)
        count_walk(c.content, c.label, ancestry, &c.wrap, atom, filter, scope, acc);
    ancestry.pop_back();
}

void collect_walk(const Term& t, Symbol label, Path& here, std::vector<Path>& out) {
    for (const Compartment& c : t.children) {
        here.push_back(c.id);
        if (c.label == label) out.push_back(here);
        collect_walk(c.content, label, here, out);
        here.pop_back();
    }
}

}  // namespace

uint64_t count_atom(const Term& system, Symbol atom, const LabelPathGlob& filter,
                    CountScope scope) {
    uint64_t acc = 0;
    std::vector<Symbol> ancestry;
    count_walk(system, top_label(), ancestry, nullptr, atom, filter, scope, acc);
    return acc;
}

std::vector<Path> collect_compartments(const Term& system, Symbol label) {
    std::vector<Path> out;
    if (label == top_label()) out.push_back({});
    Path here;
    collect_walk(system, label, here, out);
    return out;
}

RawNode RawNode::mk_atom(std::string_view name) {
    RawNode n;
    n.is_atom = true;
    n.atom = Symbol::intern(name);
    return n;
}

RawNode RawNode::mk_comp(std::vector<RawNode> wrap, std::vector<RawNode> content,
                         std::string_view label) {
    RawNode n;
    n.is_atom = false;
    n.wrap = std::move(wrap);
    n.content = std::move(content);
    n.label = Symbol::intern(label);
    return n;
}

Term normalize(const std::vector<RawNode>& raw) {
    Term t;
    for (const RawNode& n : raw) {
        if (n.is_atom) {
            t.atoms.add(n.atom);
            continue;
        }
        AtomMultiset wrap;
        for (const RawNode& w : n.wrap) {
            if (!w.is_atom)
                throw TermError("wrap of compartment '" + n.label.str() +
                                "' holds a compartment");
            wrap.add(w.atom);
        }
        t.children.push_back(make_compartment(std::move(wrap), normalize(n.content), n.label));
    }
    t.canonicalize();
    return t;
}

bool well_formed(const Term& t) {
    for (const Compartment& c : t.children)
        if (!well_formed(c.content)) return false;
    return true;
}

}  // namespace cwc
