#ifndef CWC_MODEL_HPP
#define CWC_MODEL_HPP

#include <optional>
#include <string>
#include <vector>

#include "cwc/observable.hpp"
#include "cwc/rule.hpp"
#include "cwc/term.hpp"

namespace cwc {

/// Simulation defaults carried by a model file's `sim` statement.
struct SimDefaults {
    std::optional<double> t_end;
    std::optional<double> dt;
    std::optional<uint64_t> seed;
};

/// A fully expanded model: concrete rules (no loops, no parameters left),
/// the initial term, observables and defaults.
struct Model {
    std::string name;
    std::vector<Rule> rules;
    Term init;
    std::vector<ObservableDef> observables;
    SimDefaults defaults;
    std::vector<std::pair<std::string, double>> params;  // resolved values
};

}  // namespace cwc

#endif
