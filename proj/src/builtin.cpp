#include "cwc/builtin.hpp"

#include "am_symbiosis_cwc.inc"
#include "grid_cwc.inc"
#include "quorum_cwc.inc"

namespace cwc {

const std::vector<BuiltinDescriptor>& builtins() {
    static const std::vector<BuiltinDescriptor> list = {
        {"quorum",
         "quorum sensing across 4 sectors, 48 bacteria, oxo3 diffusion (30 s)",
         quorum_cwc,
         {}},
        {"am_symbiosis",
         "arbuscular-mycorrhiza root colonisation over soil layers (21 days)",
         am_symbiosis_cwc,
         {{"P", "phosphate atoms placed in each soil layer L_0..L_3 (10/50/100)"}}},
        {"grid",
         "cell proliferation on a k x n grid seeded with M-phase cells",
         grid_cwc,
         {{"k", "grid rows"},
          {"n", "grid columns"},
          {"init_cells", "seeded cells in row 1 (<= n)"},
          {"k_mit", "mitosis rate"},
          {"k_phase1", "G1 -> S rate"},
          {"k_phase2", "S -> G2 rate"},
          {"k_phase3", "G2 -> M rate"}}},
    };
    return list;
}

const BuiltinDescriptor* find_builtin(const std::string& name) {
    for (const BuiltinDescriptor& b : builtins())
        if (b.name == name) return &b;
    return nullptr;
}

Model load_builtin(const std::string& name,
                   const std::vector<std::pair<std::string, double>>& overrides) {
    const BuiltinDescriptor* b = find_builtin(name);
    if (!b) throw UnknownBuiltin("unknown builtin model '" + name + "'");
    ExpandResult res = load_model(ModelSource{b->source, name + ".cwc"}, name, overrides);
    if (!res.ok())
        throw ModelError("builtin model '" + name + "' failed to expand:\n" +
                         format_diagnostics(res.diagnostics, name + ".cwc"));
    return std::move(*res.model);
}

std::vector<ObservableDef> builtin_observables(const std::string& name) {
    return load_builtin(name).observables;
}

}  // namespace cwc
