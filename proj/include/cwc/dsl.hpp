#ifndef CWC_DSL_HPP
#define CWC_DSL_HPP

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cwc/model.hpp"

namespace cwc {

struct ModelSource {
    std::string text;
    std::string origin = "<memory>";
};

struct Diagnostic {
    int line = 0;
    int col = 0;
    std::string message;
};

std::string format_diagnostics(const std::vector<Diagnostic>& diags,
                               const std::string& origin);

namespace dsl {

struct SrcPos {
    int line = 0;
    int col = 0;
};

/// Integer/real expression over literals, parameters and loop indices:
/// +, -, *, /, unary minus and the ring helper wrap5(x) (maps onto 1..5).
struct Expr;
using ExprPtr = std::shared_ptr<Expr>;

struct Expr {
    enum class Kind { Number, Ref, Unary, Binary, Wrap5 };
    Kind kind = Kind::Number;
    double number = 0.0;
    std::string ref;
    char op = 0;  // + - * /
    ExprPtr lhs, rhs;
    SrcPos pos;
};

/// Identifier template: literal pieces interleaved with {expr} holes,
/// e.g. g_{i}_{j+1}.
struct IdentTpl {
    struct Part {
        std::string text;  // literal piece (empty for holes)
        ExprPtr hole;      // set for interpolation parts
    };
    std::vector<Part> parts;
    SrcPos pos;

    bool plain() const { return parts.size() == 1 && !parts[0].hole; }
    const std::string& plain_text() const { return parts[0].text; }
};

/// Element of a term/pattern/open-term multiset, before expansion.
struct AstSimple {
    enum class Kind { Atom, WrapVar, TermVar, Comp };
    Kind kind = Kind::Atom;
    IdentTpl name;               // atom or variable name
    ExprPtr count;               // repetition factor (null = 1)
    std::vector<AstSimple> wrap; // Comp only: atoms and wrap vars
    std::vector<AstSimple> content;
    IdentTpl label;              // Comp only
    SrcPos pos;
};

struct AstRule {
    std::optional<IdentTpl> name;
    IdentTpl context;
    std::vector<AstSimple> lhs;
    std::vector<AstSimple> rhs;
    ExprPtr rate;
    SrcPos pos;
};

struct AstParam {
    std::string name;
    double value = 0.0;
    SrcPos pos;
};

struct AstInit {
    std::vector<AstSimple> term;
    SrcPos pos;
};

struct AstGlobSeg {
    IdentTpl text;   // empty parts for a bare '*'
    bool star = false;
};

struct AstObserve {
    IdentTpl name;
    IdentTpl atom;
    std::vector<AstGlobSeg> filter;
    CountScope scope = CountScope::content;
    SrcPos pos;
};

struct AstSim {
    std::optional<double> t_end;
    std::optional<double> dt;
    std::optional<uint64_t> seed;
    SrcPos pos;
};

struct AstFor;
using AstForPtr = std::shared_ptr<AstFor>;
using AstStatement =
    std::variant<AstParam, AstRule, AstInit, AstObserve, AstSim, AstForPtr>;

struct AstFor {
    std::string var;
    ExprPtr lo, hi;  // inclusive bounds
    std::vector<AstStatement> body;
    SrcPos pos;
};

struct Ast {
    std::vector<AstStatement> statements;
};

}  // namespace dsl

struct ParseResult {
    std::optional<dsl::Ast> ast;
    std::vector<Diagnostic> diagnostics;
    bool ok() const { return ast.has_value() && diagnostics.empty(); }
};

ParseResult parse(const ModelSource& source);

struct ExpandResult {
    std::optional<Model> model;
    std::vector<Diagnostic> diagnostics;
    bool ok() const { return model.has_value() && diagnostics.empty(); }
};

/// Unrolls loops, substitutes parameters and {expr} interpolations,
/// validates every expanded rule. Zero-rate rules are dropped. Parameter
/// overrides replace `param` defaults and must name declared parameters.
ExpandResult expand(const dsl::Ast& ast, const std::string& model_name,
                    const std::vector<std::pair<std::string, double>>& overrides = {});

/// parse + expand in one step.
ExpandResult load_model(const ModelSource& source, const std::string& model_name,
                        const std::vector<std::pair<std::string, double>>& overrides = {});

/// Parses a bare term in surface syntax (used for `inspect --state` and
/// round-trip tests).
std::optional<Term> parse_term(const std::string& text, std::vector<Diagnostic>& diagnostics);

}  // namespace cwc

#endif
