#ifndef CWC_OBSERVABLE_HPP
#define CWC_OBSERVABLE_HPP

#include <string>
#include <vector>

#include "cwc/term.hpp"

namespace cwc {

/// Named atom count over a set of compartments picked by a label filter.
struct ObservableDef {
    std::string name;
    Symbol atom;
    LabelPathGlob filter;
    CountScope scope = CountScope::content;

    double eval(const Term& system) const {
        return static_cast<double>(count_atom(system, atom, filter, scope));
    }
};

inline std::vector<double> eval_observables(const std::vector<ObservableDef>& defs,
                                            const Term& system) {
    std::vector<double> row;
    row.reserve(defs.size());
    for (const ObservableDef& d : defs) row.push_back(d.eval(system));
    return row;
}

}  // namespace cwc

#endif
