#include "chainsynth/sketch/parser.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <set>

namespace chainsynth::sketch {

namespace {

enum class Tok {
    Ident,
    Int,
    Real,
    HoleRef,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    DotDot,
    Prime,
    Assign,  // =
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Amp,
    Bar,
    Bang,
    Implies,
    Iff,
    Arrow,
    End,
};

struct Token {
    Tok type;
    std::string text;
    SourcePos pos;
};

std::vector<Token> lex(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0;
    SourcePos pos;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k, ++i) {
            if (src[i] == '\n') {
                ++pos.line;
                pos.column = 1;
            } else {
                ++pos.column;
            }
        }
    };
    auto is_ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
    auto is_ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };

    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') {
                advance(1);
            }
            continue;
        }
        SourcePos start = pos;
        if (is_ident_start(c)) {
            std::size_t j = i;
            while (j < src.size() && is_ident_char(src[j])) {
                ++j;
            }
            out.push_back({Tok::Ident, std::string(src.substr(i, j - i)), start});
            advance(j - i);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
                ++j;
            }
            bool real = false;
            if (j + 1 < src.size() && src[j] == '.' && std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
                real = true;
                ++j;
                while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
                    ++j;
                }
            }
            if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < src.size() && (src[k] == '+' || src[k] == '-')) {
                    ++k;
                }
                if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
                    real = true;
                    j = k;
                    while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
                        ++j;
                    }
                }
            }
            out.push_back({real ? Tok::Real : Tok::Int, std::string(src.substr(i, j - i)), start});
            advance(j - i);
            continue;
        }
        if (c == '@') {
            std::size_t j = i + 1;
            while (j < src.size() && is_ident_char(src[j])) {
                ++j;
            }
            if (j == i + 1 || j >= src.size() || src[j] != '@') {
                throw SketchError("malformed hole reference; expected @name@", start);
            }
            out.push_back({Tok::HoleRef, std::string(src.substr(i + 1, j - i - 1)), start});
            advance(j + 1 - i);
            continue;
        }
        auto starts = [&](std::string_view s) { return src.substr(i, s.size()) == s; };
        static const std::pair<std::string_view, Tok> symbols[] = {
            {"<=>", Tok::Iff}, {"..", Tok::DotDot}, {"->", Tok::Arrow}, {"=>", Tok::Implies}, {"!=", Tok::Ne},
            {"<=", Tok::Le},   {">=", Tok::Ge},     {"(", Tok::LParen}, {")", Tok::RParen},   {"{", Tok::LBrace},
            {"}", Tok::RBrace}, {"[", Tok::LBracket}, {"]", Tok::RBracket}, {",", Tok::Comma}, {";", Tok::Semi},
            {":", Tok::Colon}, {"'", Tok::Prime},   {"=", Tok::Assign}, {"<", Tok::Lt},       {">", Tok::Gt},
            {"+", Tok::Plus},  {"-", Tok::Minus},   {"*", Tok::Star},   {"/", Tok::Slash},    {"&", Tok::Amp},
            {"|", Tok::Bar},   {"!", Tok::Bang},
        };
        bool matched = false;
        for (const auto& [spelling, type] : symbols) {
            if (starts(spelling)) {
                out.push_back({type, std::string(spelling), start});
                advance(spelling.size());
                matched = true;
                break;
            }
        }
        if (!matched) {
            throw SketchError(std::string("unexpected character '") + c + "'", start);
        }
    }
    out.push_back({Tok::End, "", pos});
    return out;
}

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : _tokens(std::move(tokens)) {}

    SketchProgram program() {
        SketchProgram prog;
        while (is_keyword("hole")) {
            prog.holes.push_back(hole_decl());
        }
        while (is_keyword("constraint")) {
            SourcePos pos = next().pos;
            Expr f = formula();
            accept(Tok::Semi);
            prog.constraints.push_back({std::move(f), pos});
        }
        expect_keyword("module");
        prog.module_name = expect(Tok::Ident, "module name").text;
        while (peek().type == Tok::Ident && peek(1).type == Tok::Colon && !is_keyword("endmodule")) {
            prog.variables.push_back(variable_decl());
        }
        while (!is_keyword("endmodule")) {
            if (peek().type == Tok::End) {
                throw SketchError("missing 'endmodule'", peek().pos);
            }
            prog.commands.push_back(command());
        }
        next();
        if (peek().type != Tok::End) {
            throw SketchError("unexpected input after 'endmodule'", peek().pos);
        }
        return prog;
    }

    Expr standalone_expression() {
        Expr e = expression();
        if (peek().type != Tok::End) {
            throw SketchError("unexpected '" + peek().text + "' after expression", peek().pos);
        }
        return e;
    }

private:
    const Token& peek(std::size_t ahead = 0) const {
        return _tokens[std::min(_pos + ahead, _tokens.size() - 1)];
    }

    const Token& next() {
        const Token& t = _tokens[_pos];
        if (_pos + 1 < _tokens.size()) {
            ++_pos;
        }
        return t;
    }

    bool accept(Tok type) {
        if (peek().type == type) {
            next();
            return true;
        }
        return false;
    }

    const Token& expect(Tok type, const std::string& what) {
        if (peek().type != type) {
            throw SketchError("expected " + what + ", found '" + peek().text + "'", peek().pos);
        }
        return next();
    }

    bool is_keyword(std::string_view word, std::size_t ahead = 0) const {
        return peek(ahead).type == Tok::Ident && peek(ahead).text == word;
    }

    void expect_keyword(std::string_view word) {
        if (!is_keyword(word)) {
            throw SketchError("expected '" + std::string(word) + "', found '" + peek().text + "'", peek().pos);
        }
        next();
    }

    std::int64_t integer() {
        bool negative = accept(Tok::Minus);
        const Token& t = expect(Tok::Int, "integer");
        std::int64_t v = std::stoll(t.text);
        return negative ? -v : v;
    }

    HoleDecl hole_decl() {
        HoleDecl h;
        h.pos = next().pos;
        if (peek().type == Tok::HoleRef || peek().type == Tok::Ident) {
            h.name = next().text;
        } else {
            throw SketchError("expected hole name", peek().pos);
        }
        expect_keyword("either");
        expect(Tok::LBrace, "'{'");
        do {
            OptionDecl o;
            o.pos = peek().pos;
            if (peek().type == Tok::Ident && is_keyword("is", 1)) {
                o.name = next().text;
                next();
            }
            o.value = expression();
            if (is_keyword("cost")) {
                next();
                const Token& c = expect(Tok::Int, "natural cost");
                o.cost = std::stoull(c.text);
                o.has_cost = true;
            }
            h.options.push_back(std::move(o));
        } while (accept(Tok::Comma));
        expect(Tok::RBrace, "'}'");
        accept(Tok::Semi);
        return h;
    }

    VariableDecl variable_decl() {
        VariableDecl v;
        v.pos = peek().pos;
        v.name = next().text;
        expect(Tok::Colon, "':'");
        expect(Tok::LBracket, "'['");
        v.low = integer();
        expect(Tok::DotDot, "'..'");
        v.high = integer();
        expect(Tok::RBracket, "']'");
        expect_keyword("init");
        v.init = integer();
        expect(Tok::Semi, "';'");
        return v;
    }

    Command command() {
        Command c;
        c.pos = peek().pos;
        if (accept(Tok::LBracket)) {
            accept(Tok::Ident);
            expect(Tok::RBracket, "']'");
        }
        c.guard = expression();
        expect(Tok::Arrow, "'->'");
        do {
            c.branches.push_back(branch());
        } while (accept(Tok::Plus));
        accept(Tok::Semi);
        return c;
    }

    bool at_update_start() const {
        if (peek().type == Tok::Ident && peek(1).type == Tok::Prime) {
            return true;
        }
        if (peek().type == Tok::LParen && peek(1).type == Tok::Ident && peek(2).type == Tok::Prime) {
            return true;
        }
        return is_keyword("true") && peek(1).type != Tok::Colon;
    }

    CommandBranch branch() {
        CommandBranch b;
        if (at_update_start()) {
            b.probability.kind = Expr::Kind::IntLiteral;
            b.probability.int_value = 1;
            b.probability.text = "1";
            b.probability.pos = peek().pos;
        } else {
            b.probability = additive();
            expect(Tok::Colon, "':' after branch probability");
        }
        if (is_keyword("true")) {
            next();
            return b;
        }
        do {
            bool paren = accept(Tok::LParen);
            const Token& name = expect(Tok::Ident, "updated variable");
            Assignment a;
            a.value.pos = name.pos;
            pending_update_targets.emplace_back(name.text, name.pos);
            expect(Tok::Prime, "'''");
            expect(Tok::Assign, "'='");
            _in_update = !paren;
            a.value = additive();
            _in_update = false;
            if (paren) {
                expect(Tok::RParen, "')'");
            }
            b.update.push_back(std::move(a));
        } while (accept(Tok::Amp));
        return b;
    }

    /// After a '+' inside an update: does a new `prob : update` branch start?
    bool branch_follows_plus() const {
        int depth = 0;
        for (std::size_t k = 1;; ++k) {
            const Token& t = peek(k);
            switch (t.type) {
            case Tok::LParen:
                ++depth;
                break;
            case Tok::RParen:
                if (--depth < 0) {
                    return false;
                }
                break;
            case Tok::Colon:
                if (depth == 0) {
                    return true;
                }
                break;
            case Tok::Prime:
                // `+ s'=...` starts a branch without an explicit probability.
                return k == 2 || (k == 3 && peek(1).type == Tok::LParen);
            case Tok::Plus:
                // A later `+` before any `:` makes this one arithmetic.
                if (depth == 0) {
                    return false;
                }
                break;
            case Tok::Semi:
            case Tok::Arrow:
            case Tok::Amp:
            case Tok::End:
                return false;
            default:
                break;
            }
        }
    }

    Expr make(Expr::Kind kind, std::vector<Expr> args, SourcePos pos) {
        Expr e;
        e.kind = kind;
        e.args = std::move(args);
        e.pos = pos;
        return e;
    }

    Expr expression() { return iff(); }

    Expr iff() {
        Expr lhs = implies();
        while (peek().type == Tok::Iff) {
            SourcePos pos = next().pos;
            lhs = make(Expr::Kind::Iff, {std::move(lhs), implies()}, pos);
        }
        return lhs;
    }

    Expr implies() {
        Expr lhs = disjunction();
        if (peek().type == Tok::Implies) {
            SourcePos pos = next().pos;
            return make(Expr::Kind::Implies, {std::move(lhs), implies()}, pos);
        }
        return lhs;
    }

    Expr disjunction() {
        Expr lhs = conjunction();
        while (peek().type == Tok::Bar) {
            SourcePos pos = next().pos;
            lhs = make(Expr::Kind::Or, {std::move(lhs), conjunction()}, pos);
        }
        return lhs;
    }

    Expr conjunction() {
        Expr lhs = negation();
        while (peek().type == Tok::Amp) {
            SourcePos pos = next().pos;
            lhs = make(Expr::Kind::And, {std::move(lhs), negation()}, pos);
        }
        return lhs;
    }

    Expr negation() {
        if (peek().type == Tok::Bang) {
            SourcePos pos = next().pos;
            return make(Expr::Kind::Not, {negation()}, pos);
        }
        return comparison();
    }

    Expr comparison() {
        Expr lhs = additive();
        static const std::map<Tok, Expr::Kind> ops = {
            {Tok::Assign, Expr::Kind::Eq}, {Tok::Ne, Expr::Kind::Ne}, {Tok::Lt, Expr::Kind::Lt},
            {Tok::Le, Expr::Kind::Le},     {Tok::Gt, Expr::Kind::Gt}, {Tok::Ge, Expr::Kind::Ge},
        };
        auto it = ops.find(peek().type);
        if (it != ops.end()) {
            SourcePos pos = next().pos;
            lhs = make(it->second, {std::move(lhs), additive()}, pos);
        }
        return lhs;
    }

    Expr additive() {
        Expr lhs = multiplicative();
        while (peek().type == Tok::Plus || peek().type == Tok::Minus) {
            if (peek().type == Tok::Plus && _in_update && branch_follows_plus()) {
                break;
            }
            Expr::Kind kind = peek().type == Tok::Plus ? Expr::Kind::Add : Expr::Kind::Sub;
            SourcePos pos = next().pos;
            lhs = make(kind, {std::move(lhs), multiplicative()}, pos);
        }
        return lhs;
    }

    Expr multiplicative() {
        Expr lhs = unary();
        while (peek().type == Tok::Star || peek().type == Tok::Slash) {
            Expr::Kind kind = peek().type == Tok::Star ? Expr::Kind::Mul : Expr::Kind::Div;
            SourcePos pos = next().pos;
            lhs = make(kind, {std::move(lhs), unary()}, pos);
        }
        return lhs;
    }

    Expr unary() {
        if (peek().type == Tok::Minus) {
            SourcePos pos = next().pos;
            return make(Expr::Kind::Negate, {unary()}, pos);
        }
        return primary();
    }

    Expr primary() {
        const Token& t = peek();
        Expr e;
        e.pos = t.pos;
        e.text = t.text;
        switch (t.type) {
        case Tok::Int:
            next();
            e.kind = Expr::Kind::IntLiteral;
            e.int_value = std::stoll(t.text);
            return e;
        case Tok::Real:
            next();
            e.kind = Expr::Kind::RealLiteral;
            e.real_value = std::stod(t.text);
            return e;
        case Tok::HoleRef:
            next();
            e.kind = Expr::Kind::HoleRef;
            return e;
        case Tok::Ident:
            next();
            if (t.text == "true" || t.text == "false") {
                e.kind = Expr::Kind::BoolLiteral;
                e.bool_value = t.text == "true";
            } else {
                e.kind = Expr::Kind::Variable;
            }
            return e;
        case Tok::LParen: {
            next();
            bool saved = _in_update;
            _in_update = false;
            Expr inner = expression();
            _in_update = saved;
            expect(Tok::RParen, "')'");
            return inner;
        }
        default:
            throw SketchError("expected an expression, found '" + t.text + "'", t.pos);
        }
    }

    /// Constraint formulas reuse the expression grammar; identifiers are
    /// option names and get resolved later.
    Expr formula() { return iff(); }

public:
    std::vector<std::pair<std::string, SourcePos>> pending_update_targets;

private:
    std::vector<Token> _tokens;
    std::size_t _pos = 0;
    bool _in_update = false;
};

void visit(Expr& e, const std::function<void(Expr&)>& fn) {
    fn(e);
    for (auto& a : e.args) {
        visit(a, fn);
    }
}

void resolve_expression(Expr& e, const SketchProgram& prog, bool allow_holes) {
    visit(e, [&](Expr& node) {
        if (node.kind == Expr::Kind::Variable) {
            for (std::size_t v = 0; v < prog.variables.size(); ++v) {
                if (prog.variables[v].name == node.text) {
                    node.index = v;
                    return;
                }
            }
            throw SketchError("unknown identifier '" + node.text + "'", node.pos);
        }
        if (node.kind == Expr::Kind::HoleRef) {
            if (!allow_holes) {
                throw SketchError("hole '" + node.text + "' not allowed here", node.pos);
            }
            for (std::size_t h = 0; h < prog.holes.size(); ++h) {
                if (prog.holes[h].name == node.text) {
                    node.index = h;
                    return;
                }
            }
            throw SketchError("unknown hole '" + node.text + "'", node.pos);
        }
        if (node.kind == Expr::Kind::OptionRef) {
            throw SketchError("option names are only allowed in constraints", node.pos);
        }
    });
}

void resolve_constraint(Expr& e, const SketchProgram& prog) {
    visit(e, [&](Expr& node) {
        switch (node.kind) {
        case Expr::Kind::Variable:
            for (std::size_t h = 0; h < prog.holes.size(); ++h) {
                for (std::size_t o = 0; o < prog.holes[h].options.size(); ++o) {
                    if (prog.holes[h].options[o].name == node.text) {
                        node.kind = Expr::Kind::OptionRef;
                        node.index = h;
                        node.option = o;
                        return;
                    }
                }
            }
            throw SketchError("unknown option name '" + node.text + "'", node.pos);
        case Expr::Kind::BoolLiteral:
        case Expr::Kind::Not:
        case Expr::Kind::And:
        case Expr::Kind::Or:
        case Expr::Kind::Implies:
        case Expr::Kind::Iff:
        case Expr::Kind::OptionRef:
            return;
        default:
            throw SketchError("constraints are propositional formulas over option names", node.pos);
        }
    });
}

void resolve(SketchProgram& prog, Parser& parser) {
    std::set<std::string> holes;
    std::set<std::string> option_names;
    for (const auto& h : prog.holes) {
        if (!holes.insert(h.name).second) {
            throw SketchError("duplicate hole '" + h.name + "'", h.pos);
        }
        for (const auto& o : h.options) {
            if (o.name && !option_names.insert(*o.name).second) {
                throw SketchError("duplicate option name '" + *o.name + "'", o.pos);
            }
        }
    }
    std::set<std::string> vars;
    for (const auto& v : prog.variables) {
        if (!vars.insert(v.name).second) {
            throw SketchError("duplicate variable '" + v.name + "'", v.pos);
        }
        if (v.low > v.high) {
            throw SketchError("empty range for variable '" + v.name + "'", v.pos);
        }
        if (v.init < v.low || v.init > v.high) {
            throw SketchError("initial value of '" + v.name + "' outside its range", v.pos);
        }
    }
    for (auto& h : prog.holes) {
        for (auto& o : h.options) {
            resolve_expression(o.value, prog, false);
        }
    }
    for (auto& c : prog.constraints) {
        resolve_constraint(c.formula, prog);
    }
    std::size_t target = 0;
    for (auto& cmd : prog.commands) {
        resolve_expression(cmd.guard, prog, true);
        for (auto& b : cmd.branches) {
            resolve_expression(b.probability, prog, true);
            for (auto& a : b.update) {
                const auto& [name, pos] = parser.pending_update_targets.at(target++);
                auto it = std::find_if(prog.variables.begin(), prog.variables.end(),
                                       [&](const VariableDecl& v) { return v.name == name; });
                if (it == prog.variables.end()) {
                    throw SketchError("unknown variable '" + name + "' in update", pos);
                }
                a.variable = static_cast<std::size_t>(it - prog.variables.begin());
                resolve_expression(a.value, prog, true);
            }
        }
    }
}

} // namespace

SketchProgram parse(std::string_view text) {
    Parser parser(lex(text));
    SketchProgram prog = parser.program();
    resolve(prog, parser);
    return prog;
}

Expr parse_expression(std::string_view text, const SketchProgram& context) {
    Parser parser(lex(text));
    Expr e = parser.standalone_expression();
    resolve_expression(e, context, false);
    return e;
}

} // namespace chainsynth::sketch
