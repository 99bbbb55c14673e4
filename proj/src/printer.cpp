#include "cwc/printer.hpp"

#include <charconv>
#include <sstream>

namespace cwc {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

namespace {

void print_atoms(std::ostringstream& os, const AtomMultiset& ms, bool& first) {
    for (const auto& e : ms.entries()) {
        if (!first) os << ' ';
        first = false;
        if (e.count > 1) os << e.count << '*';
        os << e.atom.str();
    }
}

void print_term_into(std::ostringstream& os, const Term& t, bool& first);

void print_compartment(std::ostringstream& os, const Compartment& c) {
    os << '(';
    bool wf = true;
    print_atoms(os, c.wrap, wf);
    os << " | ";
    bool cf = true;
    print_term_into(os, c.content, cf);
    os << " )^" << c.label.str();
}

void print_term_into(std::ostringstream& os, const Term& t, bool& first) {
    print_atoms(os, t.atoms, first);
    // group runs of identical children as n*(...)
    size_t i = 0;
    while (i < t.children.size()) {
        size_t j = i + 1;
        while (j < t.children.size() &&
               compartment_cmp(t.children[i], t.children[j]) == 0)
            ++j;
        if (!first) os << ' ';
        first = false;
        if (j - i > 1) os << (j - i) << '*';
        print_compartment(os, t.children[i]);
        i = j;
    }
}

void print_pattern(std::ostringstream& os, const SimplePattern& p);

void print_pattern_list(std::ostringstream& os, const std::vector<SimplePattern>& pats,
                        bool& first) {
    for (const SimplePattern& p : pats) {
        if (!first) os << ' ';
        first = false;
        print_pattern(os, p);
    }
}

void print_pattern(std::ostringstream& os, const SimplePattern& p) {
    if (p.is_atom()) {
        os << p.atom().str();
        return;
    }
    const CompartmentPattern& cp = p.comp();
    os << '(';
    bool first = true;
    print_atoms(os, cp.wrap_atoms, first);
    for (Symbol v : cp.wrap_vars) {
        if (!first) os << ' ';
        first = false;
        os << '~' << v.str();
    }
    os << " | ";
    first = true;
    print_pattern_list(os, cp.content, first);
    for (Symbol v : cp.content_vars) {
        if (!first) os << ' ';
        first = false;
        os << '$' << v.str();
    }
    os << " )^" << cp.label.str();
}

void print_open_term(std::ostringstream& os, const OpenTerm& o, bool& first) {
    for (const OpenNode& n : o) {
        if (!first) os << ' ';
        first = false;
        if (n.is_atom()) {
            os << n.sym().str();
        } else if (n.is_var()) {
            os << '$' << n.sym().str();
        } else {
            const OpenCompartment& oc = n.comp();
            os << '(';
            bool wf = true;
            print_atoms(os, oc.wrap_atoms, wf);
            if (oc.wrap_var) {
                if (!wf) os << ' ';
                wf = false;
                os << '~' << oc.wrap_var->str();
            }
            os << " | ";
            bool cf = true;
            print_open_term(os, oc.content, cf);
            os << " )^" << oc.label.str();
        }
    }
}

const char* scope_word(CountScope s) {
    switch (s) {
        case CountScope::content: return "content";
        case CountScope::wrap: return "wrap";
        case CountScope::both: return "both";
    }
    return "content";
}

}  // namespace

std::string print_term(const Term& t) {
    std::ostringstream os;
    bool first = true;
    print_term_into(os, t, first);
    return os.str();
}

std::string print_rule(const Rule& r) {
    std::ostringstream os;
    os << "rule " << r.name << " @" << r.context.str() << ": ";
    bool first = true;
    print_pattern_list(os, r.lhs, first);
    os << (first ? "" : " ") << "-> [" << format_double(r.rate) << "]";
    std::ostringstream rhs;
    bool rf = true;
    print_open_term(rhs, r.rhs, rf);
    if (!rf) os << ' ' << rhs.str();
    return os.str();
}

std::string print_model(const Model& m) {
    std::ostringstream os;
    os << "# model: " << m.name << " (expanded)\n";
    for (const Rule& r : m.rules) os << print_rule(r) << "\n";
    os << "init: " << print_term(m.init) << "\n";
    for (const ObservableDef& o : m.observables) {
        os << "observe " << o.name << " : count " << o.atom.str() << " in "
           << o.filter.str() << " " << scope_word(o.scope) << "\n";
    }
    if (m.defaults.t_end || m.defaults.dt || m.defaults.seed) {
        os << "sim";
        if (m.defaults.t_end) os << " t_end=" << format_double(*m.defaults.t_end);
        if (m.defaults.dt) os << " dt=" << format_double(*m.defaults.dt);
        if (m.defaults.seed) os << " seed=" << *m.defaults.seed;
        os << "\n";
    }
    return os.str();
}

}  // namespace cwc
