#include "cwc/dsl.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

namespace cwc {

using namespace dsl;

std::string format_diagnostics(const std::vector<Diagnostic>& diags, const std::string& origin) {
    std::ostringstream os;
    for (const Diagnostic& d : diags)
        os << origin << ":" << d.line << ":" << d.col << ": error: " << d.message << "\n";
    return os.str();
}

namespace {

// ---------------------------------------------------------------- lexer

enum class Tok {
    Ident,
    Number,
    LParen,
    RParen,
    Pipe,
    Caret,
    Colon,
    Arrow,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Star,
    At,
    Eq,
    DotDot,
    Tilde,
    Dollar,
    Slash,
    Comma,
    End,
    Bad,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    double number = 0.0;
    int line = 1;
    int col = 1;
    int end_col = 1;  // one past the last character
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
public:
    Lexer(const std::string& text, std::vector<Diagnostic>& diags)
        : text_(text), diags_(diags) {
        advance();
        tok2_ = tok_;
        advance();
        std::swap(tok_, tok2_);
    }

    const Token& peek() const { return tok_; }
    const Token& peek2() const { return tok2_; }
    Token next() {
        Token t = tok_;
        tok_ = tok2_;
        advance();
        std::swap(tok_, tok2_);
        return t;
    }

private:
    void error(int line, int col, const std::string& msg) {
        diags_.push_back({line, col, msg});
    }

    char cur() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    char at(size_t off) const {
        return pos_ + off < text_.size() ? text_[pos_ + off] : '\0';
    }
    void bump() {
        if (pos_ >= text_.size()) return;
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space() {
        while (true) {
            char c = cur();
            if (c == '#') {
                while (cur() != '\n' && cur() != '\0') bump();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                bump();
            } else {
                break;
            }
        }
    }

    void advance() {
        skip_space();
        tok_ = Token{};
        tok_.line = line_;
        tok_.col = col_;
        char c = cur();
        if (c == '\0') {
            tok_.kind = Tok::End;
            tok_.end_col = col_;
            return;
        }
        if (ident_start(c)) {
            lex_ident();
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && std::isdigit(static_cast<unsigned char>(at(1))))) {
            lex_number();
            return;
        }
        switch (c) {
            case '(': single(Tok::LParen); return;
            case ')': single(Tok::RParen); return;
            case '|': single(Tok::Pipe); return;
            case '^': single(Tok::Caret); return;
            case ':': single(Tok::Colon); return;
            case '[': single(Tok::LBracket); return;
            case ']': single(Tok::RBracket); return;
            case '{': single(Tok::LBrace); return;
            case '}': single(Tok::RBrace); return;
            case '*': single(Tok::Star); return;
            case '@': single(Tok::At); return;
            case '=': single(Tok::Eq); return;
            case '~': single(Tok::Tilde); return;
            case '$': single(Tok::Dollar); return;
            case '/': single(Tok::Slash); return;
            case ',': single(Tok::Comma); return;
            case '-':
                if (at(1) == '>') {
                    tok_.kind = Tok::Arrow;
                    tok_.text = "->";
                    bump();
                    bump();
                    tok_.end_col = col_;
                    return;
                }
                // unary minus inside expressions
                tok_.kind = Tok::Ident;
                tok_.text = "-";
                bump();
                tok_.end_col = col_;
                return;
            case '.':
                if (at(1) == '.') {
                    tok_.kind = Tok::DotDot;
                    tok_.text = "..";
                    bump();
                    bump();
                    tok_.end_col = col_;
                    return;
                }
                break;
            case '+':
                tok_.kind = Tok::Ident;
                tok_.text = "+";
                bump();
                tok_.end_col = col_;
                return;
            default: break;
        }
        error(line_, col_, std::string("unexpected character '") + c + "'");
        tok_.kind = Tok::Bad;
        bump();
        tok_.end_col = col_;
    }

    void single(Tok kind) {
        tok_.kind = kind;
        tok_.text = std::string(1, cur());
        bump();
        tok_.end_col = col_;
    }

    void lex_ident() {
        std::string out;
        while (true) {
            while (ident_char(cur())) {
                out.push_back(cur());
                bump();
            }
            if (cur() == '{') {
                // interpolation hole, kept raw: g_{i}_{j+1}
                out.push_back('{');
                bump();
                while (cur() != '}' && cur() != '\0' && cur() != '\n') {
                    out.push_back(cur());
                    bump();
                }
                if (cur() != '}') {
                    error(tok_.line, tok_.col, "unterminated '{' in identifier");
                    break;
                }
                out.push_back('}');
                bump();
                continue;
            }
            break;
        }
        tok_.kind = Tok::Ident;
        tok_.text = std::move(out);
        tok_.end_col = col_;
    }

    void lex_number() {
        std::string out;
        while (std::isdigit(static_cast<unsigned char>(cur()))) {
            out.push_back(cur());
            bump();
        }
        if (cur() == '.' && at(1) != '.') {
            out.push_back('.');
            bump();
            while (std::isdigit(static_cast<unsigned char>(cur()))) {
                out.push_back(cur());
                bump();
            }
        }
        if (cur() == 'e' || cur() == 'E') {
            size_t save_pos = pos_;
            int save_line = line_, save_col = col_;
            std::string exp(1, cur());
            bump();
            if (cur() == '+' || cur() == '-') {
                exp.push_back(cur());
                bump();
            }
            if (std::isdigit(static_cast<unsigned char>(cur()))) {
                while (std::isdigit(static_cast<unsigned char>(cur()))) {
                    exp.push_back(cur());
                    bump();
                }
                out += exp;
            } else {
                // not an exponent: back off (identifier follows, e.g. `2e`)
                pos_ = save_pos;
                line_ = save_line;
                col_ = save_col;
            }
        }
        tok_.kind = Tok::Number;
        tok_.text = out;
        tok_.number = std::strtod(out.c_str(), nullptr);
        tok_.end_col = col_;
    }

    const std::string& text_;
    std::vector<Diagnostic>& diags_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    Token tok_;
};

// --------------------------------------------------------------- parser

const std::set<std::string> kKeywords = {"rule", "param", "for", "init", "observe", "sim"};

enum class TermMode { Ground, Lhs, Rhs };

class Parser {
public:
    Parser(const ModelSource& src, std::vector<Diagnostic>& diags)
        : lex_(src.text, diags), diags_(diags) {}

    Ast parse_file() {
        Ast ast;
        while (lex_.peek().kind != Tok::End) {
            size_t before = diags_.size();
            auto st = parse_statement();
            if (st) {
                ast.statements.push_back(std::move(*st));
            } else {
                if (diags_.size() == before) error(lex_.peek(), "expected a statement");
                resync();
            }
        }
        return ast;
    }

    std::vector<AstSimple> parse_bare_term() {
        auto t = parse_multiset(TermMode::Ground, /*in_comp=*/false);
        if (lex_.peek().kind != Tok::End) error(lex_.peek(), "trailing input after term");
        return t;
    }

private:
    void error(const Token& at, const std::string& msg) {
        diags_.push_back({at.line, at.col, msg});
    }

    bool is_keyword(const Token& t, const char* kw) {
        return t.kind == Tok::Ident && t.text == kw;
    }
    bool at_statement_keyword() {
        const Token& t = lex_.peek();
        return t.kind == Tok::Ident && kKeywords.count(t.text) > 0;
    }

    void resync() {
        // Skip to the next statement keyword (or closing brace) after an error.
        while (lex_.peek().kind != Tok::End && !at_statement_keyword() &&
               lex_.peek().kind != Tok::RBrace)
            lex_.next();
        if (lex_.peek().kind == Tok::RBrace) lex_.next();
    }

    bool expect(Tok kind, const char* what) {
        if (lex_.peek().kind == kind) {
            lex_.next();
            return true;
        }
        error(lex_.peek(), std::string("expected ") + what);
        return false;
    }

    std::optional<AstStatement> parse_statement() {
        const Token& t = lex_.peek();
        if (is_keyword(t, "param")) return parse_param();
        if (is_keyword(t, "for")) return parse_for();
        if (is_keyword(t, "rule")) return parse_rule();
        if (is_keyword(t, "init")) return parse_init();
        if (is_keyword(t, "observe")) return parse_observe();
        if (is_keyword(t, "sim")) return parse_sim();
        return std::nullopt;
    }

    std::optional<AstStatement> parse_param() {
        Token kw = lex_.next();
        AstParam p;
        p.pos = {kw.line, kw.col};
        Token name = lex_.peek();
        if (name.kind != Tok::Ident || kKeywords.count(name.text)) {
            error(name, "expected parameter name");
            return std::nullopt;
        }
        lex_.next();
        p.name = name.text;
        if (!expect(Tok::Eq, "'='")) return std::nullopt;
        ExprPtr v = parse_expr();
        if (!v) return std::nullopt;
        if (v->kind != Expr::Kind::Number &&
            !(v->kind == Expr::Kind::Unary && v->lhs && v->lhs->kind == Expr::Kind::Number)) {
            error(name, "parameter value must be a number literal");
            return std::nullopt;
        }
        p.value = v->kind == Expr::Kind::Number ? v->number : -v->lhs->number;
        return AstStatement{std::move(p)};
    }

    std::optional<AstStatement> parse_for() {
        Token kw = lex_.next();
        auto f = std::make_shared<AstFor>();
        f->pos = {kw.line, kw.col};
        Token var = lex_.peek();
        if (var.kind != Tok::Ident || kKeywords.count(var.text)) {
            error(var, "expected loop variable name");
            return std::nullopt;
        }
        lex_.next();
        f->var = var.text;
        if (!is_keyword(lex_.peek(), "in")) {
            error(lex_.peek(), "expected 'in'");
            return std::nullopt;
        }
        lex_.next();
        f->lo = parse_expr();
        if (!f->lo) return std::nullopt;
        if (!expect(Tok::DotDot, "'..'")) return std::nullopt;
        f->hi = parse_expr();
        if (!f->hi) return std::nullopt;
        if (!expect(Tok::LBrace, "'{'")) return std::nullopt;
        while (lex_.peek().kind != Tok::RBrace && lex_.peek().kind != Tok::End) {
            size_t before = diags_.size();
            auto st = parse_statement();
            if (!st) {
                if (diags_.size() == before)
                    error(lex_.peek(), "expected a statement inside 'for'");
                resync();
                if (lex_.peek().kind == Tok::End) return std::nullopt;
                continue;
            }
            if (std::holds_alternative<AstParam>(*st) || std::holds_alternative<AstSim>(*st)) {
                error(lex_.peek(), "param/sim statements are not allowed inside 'for'");
                continue;
            }
            f->body.push_back(std::move(*st));
        }
        if (!expect(Tok::RBrace, "'}'")) return std::nullopt;
        return AstStatement{std::move(f)};
    }

    std::optional<AstStatement> parse_rule() {
        Token kw = lex_.next();
        AstRule r;
        r.pos = {kw.line, kw.col};
        if (lex_.peek().kind == Tok::Ident && !kKeywords.count(lex_.peek().text)) {
            r.name = parse_ident_tpl(lex_.next());
        }
        if (!expect(Tok::At, "'@' before the context label")) return std::nullopt;
        Token ctx = lex_.peek();
        if (ctx.kind != Tok::Ident) {
            error(ctx, "expected context label");
            return std::nullopt;
        }
        lex_.next();
        r.context = parse_ident_tpl(ctx);
        if (!expect(Tok::Colon, "':'")) return std::nullopt;
        r.lhs = parse_multiset(TermMode::Lhs, false);
        if (!expect(Tok::Arrow, "'->'")) return std::nullopt;
        Token lb = lex_.peek();
        if (lb.kind != Tok::LBracket) {
            error(lb, "expected '[' rate ']'");
            return std::nullopt;
        }
        lex_.next();
        r.rate = parse_expr();
        if (!r.rate) return std::nullopt;
        if (lex_.peek().kind != Tok::RBracket) {
            error(lex_.peek(), "unterminated rate: expected ']'");
            return std::nullopt;
        }
        lex_.next();
        r.rhs = parse_multiset(TermMode::Rhs, false);
        return AstStatement{std::move(r)};
    }

    std::optional<AstStatement> parse_init() {
        Token kw = lex_.next();
        AstInit init;
        init.pos = {kw.line, kw.col};
        if (!expect(Tok::Colon, "':'")) return std::nullopt;
        init.term = parse_multiset(TermMode::Ground, false);
        return AstStatement{std::move(init)};
    }

    std::optional<AstStatement> parse_observe() {
        Token kw = lex_.next();
        AstObserve obs;
        obs.pos = {kw.line, kw.col};
        Token name = lex_.peek();
        if (name.kind != Tok::Ident || kKeywords.count(name.text)) {
            error(name, "expected observable name");
            return std::nullopt;
        }
        lex_.next();
        obs.name = parse_ident_tpl(name);
        if (!expect(Tok::Colon, "':'")) return std::nullopt;
        if (!is_keyword(lex_.peek(), "count")) {
            error(lex_.peek(), "expected 'count'");
            return std::nullopt;
        }
        lex_.next();
        Token atom = lex_.peek();
        if (atom.kind != Tok::Ident || kKeywords.count(atom.text)) {
            error(atom, "expected atom name");
            return std::nullopt;
        }
        lex_.next();
        obs.atom = parse_ident_tpl(atom);
        if (!is_keyword(lex_.peek(), "in")) {
            error(lex_.peek(), "expected 'in'");
            return std::nullopt;
        }
        lex_.next();
        // label glob path: seg | seg/seg/... ; seg = ident['*'] | '*'
        while (true) {
            AstGlobSeg seg;
            Token t = lex_.peek();
            if (t.kind == Tok::Star) {
                lex_.next();
                seg.star = true;
                seg.text.pos = {t.line, t.col};
            } else if (t.kind == Tok::Ident && !kKeywords.count(t.text)) {
                lex_.next();
                seg.text = parse_ident_tpl(t);
                if (lex_.peek().kind == Tok::Star && lex_.peek().line == t.line &&
                    lex_.peek().col == t.end_col) {
                    lex_.next();
                    seg.star = true;
                }
            } else {
                error(t, "expected label glob");
                return std::nullopt;
            }
            obs.filter.push_back(std::move(seg));
            if (lex_.peek().kind == Tok::Slash) {
                lex_.next();
                continue;
            }
            break;
        }
        Token sc = lex_.peek();
        if (is_keyword(sc, "content") || sc.text == "content") {
            obs.scope = CountScope::content;
        } else if (sc.text == "wrap") {
            obs.scope = CountScope::wrap;
        } else if (sc.text == "both") {
            obs.scope = CountScope::both;
        } else {
            error(sc, "expected scope: content, wrap or both");
            return std::nullopt;
        }
        lex_.next();
        return AstStatement{std::move(obs)};
    }

    std::optional<AstStatement> parse_sim() {
        Token kw = lex_.next();
        AstSim sim;
        sim.pos = {kw.line, kw.col};
        while (lex_.peek().kind == Tok::Ident && !kKeywords.count(lex_.peek().text)) {
            Token key = lex_.next();
            if (!expect(Tok::Eq, "'='")) return std::nullopt;
            Token val = lex_.peek();
            if (val.kind != Tok::Number) {
                error(val, "expected a number");
                return std::nullopt;
            }
            lex_.next();
            if (key.text == "t_end") {
                sim.t_end = val.number;
            } else if (key.text == "dt") {
                sim.dt = val.number;
            } else if (key.text == "seed") {
                sim.seed = static_cast<uint64_t>(val.number);
            } else {
                error(key, "unknown sim setting '" + key.text + "'");
                return std::nullopt;
            }
        }
        return AstStatement{std::move(sim)};
    }

    // term/pattern/open-term multiset; stops at any token that cannot start
    // an element (statement keywords, ')', '->', ']', '}', end).
    std::vector<AstSimple> parse_multiset(TermMode mode, bool in_comp) {
        std::vector<AstSimple> out;
        while (true) {
            const Token& t = lex_.peek();
            if (t.kind == Tok::End || t.kind == Tok::RParen || t.kind == Tok::RBrace ||
                t.kind == Tok::Arrow || t.kind == Tok::RBracket || t.kind == Tok::Pipe)
                break;
            if (t.kind == Tok::Ident && kKeywords.count(t.text)) break;
            auto el = parse_simple(mode, in_comp);
            if (!el) break;
            out.push_back(std::move(*el));
        }
        return out;
    }

    std::optional<AstSimple> parse_simple(TermMode mode, bool in_comp) {
        AstSimple el;
        Token t = lex_.peek();
        el.pos = {t.line, t.col};

        // optional repetition prefix: NUMBER '*' or IDENT '*'
        if ((t.kind == Tok::Number || (t.kind == Tok::Ident && !kKeywords.count(t.text))) &&
            peek_is_count_prefix()) {
            Token c = lex_.next();
            auto e = std::make_shared<Expr>();
            e->pos = {c.line, c.col};
            if (c.kind == Tok::Number) {
                e->kind = Expr::Kind::Number;
                e->number = c.number;
            } else {
                e->kind = Expr::Kind::Ref;
                e->ref = c.text;
            }
            el.count = std::move(e);
            lex_.next();  // '*'
            t = lex_.peek();
        }

        if (t.kind == Tok::Tilde) {
            lex_.next();
            Token name = lex_.peek();
            if (name.kind != Tok::Ident) {
                error(name, "expected wrap variable name after '~'");
                return std::nullopt;
            }
            lex_.next();
            if (mode == TermMode::Ground) {
                error(name, "variables are not allowed in ground terms");
                return std::nullopt;
            }
            el.kind = AstSimple::Kind::WrapVar;
            el.name = parse_ident_tpl(name);
            if (el.count) error(name, "repetition is not allowed on variables");
            return el;
        }
        if (t.kind == Tok::Dollar) {
            lex_.next();
            Token name = lex_.peek();
            if (name.kind != Tok::Ident) {
                error(name, "expected term variable name after '$'");
                return std::nullopt;
            }
            lex_.next();
            if (mode == TermMode::Ground) {
                error(name, "variables are not allowed in ground terms");
                return std::nullopt;
            }
            if (mode == TermMode::Lhs && !in_comp) {
                error(name,
                      "a content variable may only appear inside a compartment pattern "
                      "(the whole-content remainder is implicit)");
                return std::nullopt;
            }
            el.kind = AstSimple::Kind::TermVar;
            el.name = parse_ident_tpl(name);
            if (el.count && mode == TermMode::Lhs) {
                error(name, "repetition is not allowed on pattern variables");
                el.count = nullptr;
            }
            return el;
        }
        if (t.kind == Tok::Ident && !kKeywords.count(t.text)) {
            lex_.next();
            el.kind = AstSimple::Kind::Atom;
            el.name = parse_ident_tpl(t);
            return el;
        }
        if (t.kind == Tok::LParen) {
            lex_.next();
            el.kind = AstSimple::Kind::Comp;
            // wrap part: atoms and (in patterns/open terms) wrap variables
            while (lex_.peek().kind != Tok::Pipe && lex_.peek().kind != Tok::End &&
                   lex_.peek().kind != Tok::RParen) {
                auto w = parse_simple(mode, true);
                if (!w) return std::nullopt;
                if (w->kind == AstSimple::Kind::Comp) {
                    error(t, "a wrap cannot contain a compartment");
                    return std::nullopt;
                }
                if (w->kind == AstSimple::Kind::TermVar) {
                    diags_.push_back({w->pos.line, w->pos.col,
                                      "term variables are not allowed on a wrap"});
                    return std::nullopt;
                }
                el.wrap.push_back(std::move(*w));
            }
            if (!expect(Tok::Pipe, "'|' between wrap and content")) return std::nullopt;
            el.content = parse_multiset(mode, true);
            if (!expect(Tok::RParen, "')' closing the compartment")) return std::nullopt;
            if (!expect(Tok::Caret, "'^' and a label after the compartment"))
                return std::nullopt;
            Token lbl = lex_.peek();
            if (lbl.kind != Tok::Ident) {
                error(lbl, "expected compartment label");
                return std::nullopt;
            }
            lex_.next();
            el.label = parse_ident_tpl(lbl);
            return el;
        }
        error(t, "expected a term element");
        return std::nullopt;
    }

    // current token followed by '*' starts a repetition prefix (the only
    // meaning '*' has inside a term).
    bool peek_is_count_prefix() { return lex_.peek2().kind == Tok::Star; }

    ExprPtr parse_expr() { return parse_additive(); }

    ExprPtr parse_additive() {
        ExprPtr lhs = parse_multiplicative();
        if (!lhs) return nullptr;
        while (lex_.peek().kind == Tok::Ident &&
               (lex_.peek().text == "+" || lex_.peek().text == "-")) {
            Token op = lex_.next();
            ExprPtr rhs = parse_multiplicative();
            if (!rhs) return nullptr;
            auto e = std::make_shared<Expr>();
            e->kind = Expr::Kind::Binary;
            e->op = op.text[0];
            e->lhs = std::move(lhs);
            e->rhs = std::move(rhs);
            e->pos = {op.line, op.col};
            lhs = std::move(e);
        }
        return lhs;
    }

    ExprPtr parse_multiplicative() {
        ExprPtr lhs = parse_factor();
        if (!lhs) return nullptr;
        while (lex_.peek().kind == Tok::Star || lex_.peek().kind == Tok::Slash) {
            Token op = lex_.next();
            ExprPtr rhs = parse_factor();
            if (!rhs) return nullptr;
            auto e = std::make_shared<Expr>();
            e->kind = Expr::Kind::Binary;
            e->op = op.kind == Tok::Star ? '*' : '/';
            e->lhs = std::move(lhs);
            e->rhs = std::move(rhs);
            e->pos = {op.line, op.col};
            lhs = std::move(e);
        }
        return lhs;
    }

    ExprPtr parse_factor() {
        Token t = lex_.peek();
        auto e = std::make_shared<Expr>();
        e->pos = {t.line, t.col};
        if (t.kind == Tok::Number) {
            lex_.next();
            e->kind = Expr::Kind::Number;
            e->number = t.number;
            return e;
        }
        if (t.kind == Tok::Ident && t.text == "-") {
            lex_.next();
            ExprPtr inner = parse_factor();
            if (!inner) return nullptr;
            e->kind = Expr::Kind::Unary;
            e->op = '-';
            e->lhs = std::move(inner);
            return e;
        }
        if (t.kind == Tok::Ident && t.text == "wrap5") {
            lex_.next();
            if (!expect(Tok::LParen, "'(' after wrap5")) return nullptr;
            ExprPtr inner = parse_expr();
            if (!inner) return nullptr;
            if (!expect(Tok::RParen, "')'")) return nullptr;
            e->kind = Expr::Kind::Wrap5;
            e->lhs = std::move(inner);
            return e;
        }
        if (t.kind == Tok::Ident && !kKeywords.count(t.text) && t.text != "+") {
            lex_.next();
            e->kind = Expr::Kind::Ref;
            e->ref = t.text;
            return e;
        }
        if (t.kind == Tok::LParen) {
            lex_.next();
            ExprPtr inner = parse_expr();
            if (!inner) return nullptr;
            if (!expect(Tok::RParen, "')'")) return nullptr;
            return inner;
        }
        error(t, "bad expression");
        return nullptr;
    }

    // Parses an identifier token (possibly holding {expr} holes) into a template.
    IdentTpl parse_ident_tpl(const Token& tok) {
        IdentTpl tpl;
        tpl.pos = {tok.line, tok.col};
        const std::string& s = tok.text;
        std::string lit;
        size_t i = 0;
        while (i < s.size()) {
            if (s[i] == '{') {
                if (!lit.empty() || tpl.parts.empty()) {
                    tpl.parts.push_back({lit, nullptr});
                    lit.clear();
                }
                size_t close = s.find('}', i);
                std::string inner = s.substr(i + 1, close - i - 1);
                ModelSource sub{inner, "<interpolation>"};
                std::vector<Diagnostic> sub_diags;
                Parser sub_parser(sub, sub_diags);
                ExprPtr hole = sub_parser.parse_expr();
                bool clean = hole && sub_parser.lex_.peek().kind == Tok::End &&
                             sub_diags.empty();
                if (!clean) {
                    diags_.push_back({tok.line, tok.col,
                                      "bad interpolation expression '{" + inner + "}'"});
                } else {
                    hole->pos = {tok.line, tok.col};
                    tpl.parts.push_back({"", hole});
                }
                i = close + 1;
            } else {
                lit.push_back(s[i]);
                ++i;
            }
        }
        if (!lit.empty() || tpl.parts.empty()) tpl.parts.push_back({lit, nullptr});
        return tpl;
    }

public:
    ExprPtr parse_expr_public() { return parse_expr(); }
    bool at_end() const { return lex_.peek().kind == Tok::End; }

private:
    Lexer lex_;
    std::vector<Diagnostic>& diags_;
};

// ------------------------------------------------------------- expander

bool valid_ident(const std::string& s) {
    if (s.empty() || !ident_start(s[0])) return false;
    for (char c : s)
        if (!ident_char(c)) return false;
    return true;
}

class Expander {
public:
    Expander(const Ast& ast, std::string model_name,
             const std::vector<std::pair<std::string, double>>& overrides,
             std::vector<Diagnostic>& diags)
        : ast_(ast), overrides_(overrides), diags_(diags) {
        model_.name = std::move(model_name);
    }

    std::optional<Model> run() {
        for (const auto& [name, value] : overrides_) override_pending_.insert(name);

        for (const AstStatement& st : ast_.statements) expand_statement(st);

        for (const std::string& name : override_pending_)
            diags_.push_back({0, 0, "override for unknown parameter '" + name + "'"});

        finish_init();
        if (!diags_.empty()) return std::nullopt;
        return std::move(model_);
    }

private:
    void error(SrcPos pos, const std::string& msg) {
        diags_.push_back({pos.line, pos.col, msg});
    }

    // ---- expression evaluation over params + loop variables

    std::optional<double> eval(const ExprPtr& e) {
        if (!e) return std::nullopt;
        switch (e->kind) {
            case Expr::Kind::Number: return e->number;
            case Expr::Kind::Ref: {
                auto lv = loop_vars_.find(e->ref);
                if (lv != loop_vars_.end()) return static_cast<double>(lv->second);
                auto pv = params_.find(e->ref);
                if (pv != params_.end()) return pv->second;
                error(e->pos, "unbound identifier '" + e->ref + "'");
                return std::nullopt;
            }
            case Expr::Kind::Unary: {
                auto v = eval(e->lhs);
                if (!v) return std::nullopt;
                return -*v;
            }
            case Expr::Kind::Wrap5: {
                auto v = eval_int(e->lhs);
                if (!v) return std::nullopt;
                int64_t m = ((*v - 1) % 5 + 5) % 5 + 1;  // 1-based ring of 5
                return static_cast<double>(m);
            }
            case Expr::Kind::Binary: {
                auto l = eval(e->lhs);
                auto r = eval(e->rhs);
                if (!l || !r) return std::nullopt;
                switch (e->op) {
                    case '+': return *l + *r;
                    case '-': return *l - *r;
                    case '*': return *l * *r;
                    case '/':
                        if (*r == 0.0) {
                            error(e->pos, "division by zero");
                            return std::nullopt;
                        }
                        return *l / *r;
                }
                return std::nullopt;
            }
        }
        return std::nullopt;
    }

    std::optional<int64_t> eval_int(const ExprPtr& e) {
        auto v = eval(e);
        if (!v) return std::nullopt;
        if (*v != std::floor(*v) || std::fabs(*v) > 9.0e15) {
            error(e->pos, "expected an integer value");
            return std::nullopt;
        }
        return static_cast<int64_t>(*v);
    }

    std::optional<std::string> instantiate(const IdentTpl& tpl, const char* what) {
        std::string out;
        for (const IdentTpl::Part& p : tpl.parts) {
            if (p.hole) {
                auto v = eval_int(p.hole);
                if (!v) return std::nullopt;
                out += std::to_string(*v);
            } else {
                out += p.text;
            }
        }
        if (!valid_ident(out)) {
            error(tpl.pos, std::string("invalid expanded ") + what + " '" + out + "'");
            return std::nullopt;
        }
        return out;
    }

    std::optional<uint64_t> eval_count(const ExprPtr& e) {
        if (!e) return 1;
        auto v = eval_int(e);
        if (!v) return std::nullopt;
        if (*v < 0) {
            error(e->pos, "repetition count must be non-negative");
            return std::nullopt;
        }
        return static_cast<uint64_t>(*v);
    }

    // ---- statement dispatch

    void expand_statement(const AstStatement& st) {
        std::visit([this](const auto& s) { expand_one(s); }, st);
    }

    void expand_one(const AstParam& p) {
        if (params_.count(p.name)) {
            error(p.pos, "parameter '" + p.name + "' declared twice");
            return;
        }
        double value = p.value;
        for (const auto& [name, v] : overrides_) {
            if (name == p.name) {
                value = v;
                override_pending_.erase(name);
            }
        }
        params_[p.name] = value;
        model_.params.emplace_back(p.name, value);
    }

    void expand_one(const AstForPtr& fp) {
        const AstFor& f = *fp;
        auto lo = eval_int(f.lo);
        auto hi = eval_int(f.hi);
        if (!lo || !hi) return;
        if (loop_vars_.count(f.var) || params_.count(f.var)) {
            error(f.pos, "loop variable '" + f.var + "' shadows an existing binding");
            return;
        }
        for (int64_t i = *lo; i <= *hi; ++i) {
            loop_vars_[f.var] = i;
            for (const AstStatement& st : f.body) expand_statement(st);
        }
        loop_vars_.erase(f.var);
    }

    void expand_one(const AstRule& r) {
        Rule rule;
        ++rule_counter_;
        if (r.name) {
            auto n = instantiate(*r.name, "rule name");
            if (!n) return;
            rule.name = *n;
        } else {
            rule.name = "r" + std::to_string(rule_counter_);
        }
        auto ctx = instantiate(r.context, "label");
        if (!ctx) return;
        rule.context = Symbol::intern(*ctx);

        bool ok = true;
        for (const AstSimple& el : r.lhs) {
            auto pats = build_patterns(el, ok);
            for (auto& p : pats) rule.lhs.push_back(std::move(p));
        }
        for (const AstSimple& el : r.rhs) {
            auto nodes = build_open(el, ok);
            for (auto& n : nodes) rule.rhs.push_back(std::move(n));
        }
        auto rate = eval(r.rate);
        if (!rate || !ok) return;
        if (!std::isfinite(*rate) || *rate < 0.0) {
            error(r.pos, "rule " + rule.name + ": rate must be a finite non-negative number");
            return;
        }
        if (*rate == 0.0) return;  // zero propensity forever; drop
        rule.rate = *rate;

        for (const RuleViolation& v : validate_rule(rule))
            error(r.pos, v.detail);

        if (!rule_names_.insert(rule.name).second) {
            error(r.pos, "duplicate rule name '" + rule.name + "'");
            return;
        }
        model_.rules.push_back(std::move(rule));
    }

    std::vector<SimplePattern> build_patterns(const AstSimple& el, bool& ok) {
        std::vector<SimplePattern> out;
        auto n = eval_count(el.count);
        if (!n) {
            ok = false;
            return out;
        }
        switch (el.kind) {
            case AstSimple::Kind::Atom: {
                auto name = instantiate(el.name, "atom");
                if (!name) {
                    ok = false;
                    return out;
                }
                for (uint64_t i = 0; i < *n; ++i)
                    out.push_back(SimplePattern::mk_atom(Symbol::intern(*name)));
                return out;
            }
            case AstSimple::Kind::Comp: {
                CompartmentPattern cp;
                auto label = instantiate(el.label, "label");
                if (!label) {
                    ok = false;
                    return out;
                }
                cp.label = Symbol::intern(*label);
                for (const AstSimple& w : el.wrap) {
                    if (w.kind == AstSimple::Kind::WrapVar) {
                        auto v = instantiate(w.name, "variable");
                        if (!v) {
                            ok = false;
                            return out;
                        }
                        cp.wrap_vars.push_back(Symbol::intern(*v));
                    } else {
                        auto nm = instantiate(w.name, "atom");
                        auto wn = eval_count(w.count);
                        if (!nm || !wn) {
                            ok = false;
                            return out;
                        }
                        cp.wrap_atoms.add(Symbol::intern(*nm), static_cast<uint32_t>(*wn));
                    }
                }
                for (const AstSimple& c : el.content) {
                    if (c.kind == AstSimple::Kind::TermVar) {
                        auto v = instantiate(c.name, "variable");
                        if (!v) {
                            ok = false;
                            return out;
                        }
                        cp.content_vars.push_back(Symbol::intern(*v));
                    } else {
                        auto sub = build_patterns(c, ok);
                        for (auto& p : sub) cp.content.push_back(std::move(p));
                    }
                }
                for (uint64_t i = 0; i < *n; ++i) out.push_back(SimplePattern::mk_comp(cp));
                return out;
            }
            default:
                // wrap/term variables outside their place were rejected by the parser
                ok = false;
                return out;
        }
    }

    std::vector<OpenNode> build_open(const AstSimple& el, bool& ok) {
        std::vector<OpenNode> out;
        auto n = eval_count(el.count);
        if (!n) {
            ok = false;
            return out;
        }
        switch (el.kind) {
            case AstSimple::Kind::Atom: {
                auto name = instantiate(el.name, "atom");
                if (!name) {
                    ok = false;
                    return out;
                }
                for (uint64_t i = 0; i < *n; ++i)
                    out.push_back(OpenNode::mk_atom(Symbol::intern(*name)));
                return out;
            }
            case AstSimple::Kind::TermVar: {
                auto v = instantiate(el.name, "variable");
                if (!v) {
                    ok = false;
                    return out;
                }
                for (uint64_t i = 0; i < *n; ++i)
                    out.push_back(OpenNode::mk_var(Symbol::intern(*v)));
                return out;
            }
            case AstSimple::Kind::Comp: {
                OpenCompartment oc;
                auto label = instantiate(el.label, "label");
                if (!label) {
                    ok = false;
                    return out;
                }
                oc.label = Symbol::intern(*label);
                for (const AstSimple& w : el.wrap) {
                    if (w.kind == AstSimple::Kind::WrapVar) {
                        auto v = instantiate(w.name, "variable");
                        if (!v) {
                            ok = false;
                            return out;
                        }
                        if (oc.wrap_var) {
                            error(w.pos, "an open compartment takes at most one wrap variable");
                            ok = false;
                            return out;
                        }
                        oc.wrap_var = Symbol::intern(*v);
                    } else {
                        auto nm = instantiate(w.name, "atom");
                        auto wn = eval_count(w.count);
                        if (!nm || !wn) {
                            ok = false;
                            return out;
                        }
                        oc.wrap_atoms.add(Symbol::intern(*nm), static_cast<uint32_t>(*wn));
                    }
                }
                for (const AstSimple& c : el.content) {
                    auto sub = build_open(c, ok);
                    for (auto& p : sub) oc.content.push_back(std::move(p));
                }
                for (uint64_t i = 0; i < *n; ++i) out.push_back(OpenNode::mk_comp(oc));
                return out;
            }
            default:
                ok = false;
                return out;
        }
    }

    void expand_one(const AstInit& init) {
        bool ok = true;
        for (const AstSimple& el : init.term) {
            auto nodes = build_raw(el, ok);
            for (auto& n : nodes) init_raw_.push_back(std::move(n));
        }
        have_init_ = true;
    }

    std::vector<RawNode> build_raw(const AstSimple& el, bool& ok) {
        std::vector<RawNode> out;
        auto n = eval_count(el.count);
        if (!n) {
            ok = false;
            return out;
        }
        switch (el.kind) {
            case AstSimple::Kind::Atom: {
                auto name = instantiate(el.name, "atom");
                if (!name) {
                    ok = false;
                    return out;
                }
                for (uint64_t i = 0; i < *n; ++i) out.push_back(RawNode::mk_atom(*name));
                return out;
            }
            case AstSimple::Kind::Comp: {
                auto label = instantiate(el.label, "label");
                if (!label) {
                    ok = false;
                    return out;
                }
                std::vector<RawNode> wrap;
                for (const AstSimple& w : el.wrap) {
                    auto sub = build_raw(w, ok);
                    for (auto& x : sub) wrap.push_back(std::move(x));
                }
                std::vector<RawNode> content;
                for (const AstSimple& c : el.content) {
                    auto sub = build_raw(c, ok);
                    for (auto& x : sub) content.push_back(std::move(x));
                }
                RawNode comp = RawNode::mk_comp(std::move(wrap), std::move(content), *label);
                for (uint64_t i = 1; i < *n; ++i) out.push_back(comp);
                if (*n > 0) out.push_back(std::move(comp));
                return out;
            }
            default:
                ok = false;
                return out;
        }
    }

    void expand_one(const AstObserve& obs) {
        ObservableDef def;
        auto name = instantiate(obs.name, "observable name");
        auto atom = instantiate(obs.atom, "atom");
        if (!name || !atom) return;
        def.name = *name;
        def.atom = Symbol::intern(*atom);
        def.scope = obs.scope;
        for (const AstGlobSeg& seg : obs.filter) {
            std::string text;
            if (!seg.text.parts.empty() && !(seg.text.parts.size() == 1 &&
                                             seg.text.parts[0].text.empty() &&
                                             !seg.text.parts[0].hole)) {
                std::string acc;
                for (const IdentTpl::Part& p : seg.text.parts) {
                    if (p.hole) {
                        auto v = eval_int(p.hole);
                        if (!v) return;
                        acc += std::to_string(*v);
                    } else {
                        acc += p.text;
                    }
                }
                text = acc;
            }
            def.filter.segments.push_back(LabelGlob::parse(text + (seg.star ? "*" : "")));
        }
        for (const ObservableDef& existing : model_.observables) {
            if (existing.name == def.name) {
                error(obs.pos, "duplicate observable name '" + def.name + "'");
                return;
            }
        }
        model_.observables.push_back(std::move(def));
    }

    void expand_one(const AstSim& sim) {
        if (have_sim_) {
            error(sim.pos, "duplicate sim statement");
            return;
        }
        have_sim_ = true;
        model_.defaults.t_end = sim.t_end;
        model_.defaults.dt = sim.dt;
        model_.defaults.seed = sim.seed;
    }

    // Collects init statements, then canonicalizes. A sole explicit
    // `( | ... )^top` wrapper is unwrapped; `top` anywhere else is an error.
    void finish_init() {
        if (init_raw_.size() == 1 && !init_raw_[0].is_atom &&
            init_raw_[0].label == top_label() && init_raw_[0].wrap.empty()) {
            std::vector<RawNode> inner = std::move(init_raw_[0].content);
            init_raw_ = std::move(inner);
        }
        if (check_reserved(init_raw_)) return;
        try {
            model_.init = normalize(init_raw_);
        } catch (const TermError& e) {
            diags_.push_back({0, 0, std::string("bad initial term: ") + e.what()});
        }
    }

    bool check_reserved(const std::vector<RawNode>& nodes) {
        for (const RawNode& n : nodes) {
            if (n.is_atom) continue;
            if (n.label == top_label()) {
                diags_.push_back(
                    {0, 0, "label 'top' is reserved for the implicit root compartment"});
                return true;
            }
            if (check_reserved(n.content)) return true;
        }
        return false;
    }

    const Ast& ast_;
    const std::vector<std::pair<std::string, double>>& overrides_;
    std::vector<Diagnostic>& diags_;
    Model model_;
    std::map<std::string, double> params_;
    std::map<std::string, int64_t> loop_vars_;
    std::set<std::string> rule_names_;
    std::set<std::string> override_pending_;
    std::vector<RawNode> init_raw_;
    int rule_counter_ = 0;
    bool have_init_ = false;
    bool have_sim_ = false;
};

}  // namespace

ParseResult parse(const ModelSource& source) {
    ParseResult res;
    Parser p(source, res.diagnostics);
    Ast ast = p.parse_file();
    if (res.diagnostics.empty()) res.ast = std::move(ast);
    return res;
}

ExpandResult expand(const dsl::Ast& ast, const std::string& model_name,
                    const std::vector<std::pair<std::string, double>>& overrides) {
    ExpandResult res;
    Expander ex(ast, model_name, overrides, res.diagnostics);
    res.model = ex.run();
    return res;
}

ExpandResult load_model(const ModelSource& source, const std::string& model_name,
                        const std::vector<std::pair<std::string, double>>& overrides) {
    ParseResult pr = parse(source);
    if (!pr.ok()) {
        ExpandResult res;
        res.diagnostics = std::move(pr.diagnostics);
        return res;
    }
    return expand(*pr.ast, model_name, overrides);
}

std::optional<Term> parse_term(const std::string& text, std::vector<Diagnostic>& diagnostics) {
    ModelSource src{text, "<term>"};
    std::vector<Diagnostic> local;
    Parser p(src, local);
    std::vector<AstSimple> elems = p.parse_bare_term();
    if (!local.empty()) {
        for (auto& d : local) diagnostics.push_back(d);
        return std::nullopt;
    }
    // Evaluate through a parameterless expansion context via a tiny Ast.
    dsl::Ast ast;
    dsl::AstInit init;
    init.term = std::move(elems);
    ast.statements.push_back(std::move(init));
    ExpandResult res = expand(ast, "<term>");
    if (!res.ok()) {
        for (auto& d : res.diagnostics) diagnostics.push_back(d);
        return std::nullopt;
    }
    return std::move(res.model->init);
}

}  // namespace cwc
