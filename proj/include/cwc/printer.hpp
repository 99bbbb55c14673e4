#ifndef CWC_PRINTER_HPP
#define CWC_PRINTER_HPP

#include <string>

#include "cwc/model.hpp"

namespace cwc {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

std::string print_term(const Term& t);
std::string print_rule(const Rule& r);

/// Expanded model back to surface syntax; parsing and expanding the output
/// reproduces the model (rules, init, observables, sim defaults).
std::string print_model(const Model& m);

}  // namespace cwc

#endif
