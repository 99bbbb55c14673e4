#ifndef CWC_BUILTIN_HPP
#define CWC_BUILTIN_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "cwc/dsl.hpp"
#include "cwc/model.hpp"

namespace cwc {

class UnknownBuiltin : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BuiltinDescriptor {
    std::string name;
    std::string description;
    const char* source;  // embedded .cwc text
    std::vector<std::pair<std::string, std::string>> parameters;  // name, doc
};

const std::vector<BuiltinDescriptor>& builtins();
const BuiltinDescriptor* find_builtin(const std::string& name);

/// Parses and expands a bundled model. Throws UnknownBuiltin for a bad name
/// and ModelError if the bundled source fails to expand (a packaging bug).
Model load_builtin(const std::string& name,
                   const std::vector<std::pair<std::string, double>>& overrides = {});

std::vector<ObservableDef> builtin_observables(const std::string& name);

}  // namespace cwc

#endif
