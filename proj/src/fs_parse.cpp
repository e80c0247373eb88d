#include "featforge/featscript.hpp"
#include "featforge/num.hpp"
#include "fs_builtins.hpp"

#include <cctype>
#include <cmath>
#include <utility>

namespace featforge::featscript {

namespace {

enum class Tok {
    number, ident, string,
    lparen, rparen, comma,
    plus, minus, star, slash,
    lt, le, gt, ge, eq_eq, ne,
    assign,
    kw_let, kw_in, kw_if, kw_then, kw_else, kw_and, kw_or, kw_not,
    end,
};

struct Token {
    Tok kind;
    std::string text;
    double number = 0.0;
    int line = 1;
    int column = 1;
};

struct ParseAbort {
    SyntaxError error;
};

[[noreturn]] void fail(int line, int column, std::string message) {
    throw ParseAbort{SyntaxError{line, column, std::move(message)}};
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

Tok keyword_kind(const std::string& word) {
    if (word == "let") return Tok::kw_let;
    if (word == "in") return Tok::kw_in;
    if (word == "if") return Tok::kw_if;
    if (word == "then") return Tok::kw_then;
    if (word == "else") return Tok::kw_else;
    if (word == "and") return Tok::kw_and;
    if (word == "or") return Tok::kw_or;
    if (word == "not") return Tok::kw_not;
    return Tok::ident;
}

class Lexer {
  public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> tokens;
        while (true) {
            skip_space();
            Token tok;
            tok.line = line_;
            tok.column = column_;
            if (eof()) {
                tok.kind = Tok::end;
                tokens.push_back(tok);
                return tokens;
            }
            char c = peek();
            if (std::isdigit(static_cast<unsigned char>(c))) {
                lex_number(tok);
            } else if (is_ident_start(c)) {
                std::string word;
                while (!eof() && is_ident_char(peek())) word.push_back(advance());
                tok.kind = keyword_kind(word);
                tok.text = word;
            } else if (c == '"') {
                lex_string(tok);
            } else {
                lex_operator(tok);
            }
            tokens.push_back(std::move(tok));
        }
    }

  private:
    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;

    bool eof() const { return pos_ >= src_.size(); }
    char peek() const { return src_[pos_]; }
    char peek2() const { return pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0'; }

    char advance() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        return c;
    }

    void skip_space() {
        while (!eof()) {
            char c = peek();
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else if (c == '#') {  // line comment
                while (!eof() && peek() != '\n') advance();
            } else {
                break;
            }
        }
    }

    void lex_number(Token& tok) {
        std::string text;
        while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) text.push_back(advance());
        if (!eof() && peek() == '.' && std::isdigit(static_cast<unsigned char>(peek2()))) {
            text.push_back(advance());
            while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) text.push_back(advance());
        }
        if (!eof() && (peek() == 'e' || peek() == 'E')) {
            std::size_t mark = pos_;
            int mark_line = line_, mark_col = column_;
            std::string exp_part;
            exp_part.push_back(advance());
            if (!eof() && (peek() == '+' || peek() == '-')) exp_part.push_back(advance());
            if (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) {
                while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) exp_part.push_back(advance());
                text += exp_part;
            } else {
                pos_ = mark;  // not an exponent; rewind
                line_ = mark_line;
                column_ = mark_col;
            }
        }
        auto value = parse_double(text);
        if (!value || !std::isfinite(*value))
            fail(tok.line, tok.column, "number literal out of range: " + text);
        tok.kind = Tok::number;
        tok.text = text;
        tok.number = *value;
    }

    void lex_string(Token& tok) {
        advance();  // opening quote
        std::string text;
        while (true) {
            if (eof()) fail(tok.line, tok.column, "unterminated string literal");
            char c = advance();
            if (c == '"') break;
            if (c == '\n') fail(tok.line, tok.column, "newline inside string literal");
            if (c == '\\') {
                if (eof()) fail(tok.line, tok.column, "unterminated string literal");
                char esc = advance();
                if (esc == '"' || esc == '\\') text.push_back(esc);
                else fail(line_, column_, std::string("unknown escape \\") + esc);
            } else {
                text.push_back(c);
            }
        }
        tok.kind = Tok::string;
        tok.text = text;
    }

    void lex_operator(Token& tok) {
        char c = advance();
        switch (c) {
            case '(': tok.kind = Tok::lparen; return;
            case ')': tok.kind = Tok::rparen; return;
            case ',': tok.kind = Tok::comma; return;
            case '+': tok.kind = Tok::plus; return;
            case '-': tok.kind = Tok::minus; return;
            case '*': tok.kind = Tok::star; return;
            case '/': tok.kind = Tok::slash; return;
            case '<':
                if (!eof() && peek() == '=') { advance(); tok.kind = Tok::le; }
                else tok.kind = Tok::lt;
                return;
            case '>':
                if (!eof() && peek() == '=') { advance(); tok.kind = Tok::ge; }
                else tok.kind = Tok::gt;
                return;
            case '=':
                if (!eof() && peek() == '=') { advance(); tok.kind = Tok::eq_eq; }
                else tok.kind = Tok::assign;
                return;
            case '!':
                if (!eof() && peek() == '=') { advance(); tok.kind = Tok::ne; return; }
                fail(tok.line, tok.column, "unexpected character '!'");
            default:
                fail(tok.line, tok.column, std::string("unexpected character '") + c + "'");
        }
    }
};

class Parser {
  public:
    explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    ExprPtr run() {
        ExprPtr root = expression();
        if (current().kind != Tok::end)
            fail(current().line, current().column, "unexpected trailing input");
        return root;
    }

  private:
    std::vector<Token> tokens_;
    std::size_t index_ = 0;

    const Token& current() const { return tokens_[index_]; }
    const Token& advance() { return tokens_[index_++]; }
    bool check(Tok kind) const { return current().kind == kind; }

    bool match(Tok kind) {
        if (!check(kind)) return false;
        ++index_;
        return true;
    }

    const Token& expect(Tok kind, const char* what) {
        if (!check(kind)) fail(current().line, current().column, std::string("expected ") + what);
        return advance();
    }

    ExprPtr make(Expr e, const Token& at) {
        e.line = at.line;
        e.column = at.column;
        return std::make_unique<Expr>(std::move(e));
    }

    ExprPtr expression() {
        if (check(Tok::kw_let)) return let_expr();
        if (check(Tok::kw_if)) return if_expr();
        return or_expr();
    }

    ExprPtr let_expr() {
        const Token& kw = advance();
        const Token& name = expect(Tok::ident, "identifier after 'let'");
        expect(Tok::assign, "'=' in let binding");
        ExprPtr value = expression();
        expect(Tok::kw_in, "'in' after let value");
        ExprPtr body = expression();
        return make(Expr{Let{name.text, std::move(value), std::move(body)}}, kw);
    }

    ExprPtr if_expr() {
        const Token& kw = advance();
        ExprPtr cond = expression();
        expect(Tok::kw_then, "'then'");
        ExprPtr then_branch = expression();
        expect(Tok::kw_else, "'else'");
        ExprPtr else_branch = expression();
        return make(Expr{If{std::move(cond), std::move(then_branch), std::move(else_branch)}}, kw);
    }

    ExprPtr or_expr() {
        ExprPtr lhs = and_expr();
        while (check(Tok::kw_or)) {
            const Token& op = advance();
            ExprPtr rhs = and_expr();
            lhs = make(Expr{Binary{BinaryOp::logical_or, std::move(lhs), std::move(rhs)}}, op);
        }
        return lhs;
    }

    ExprPtr and_expr() {
        ExprPtr lhs = not_expr();
        while (check(Tok::kw_and)) {
            const Token& op = advance();
            ExprPtr rhs = not_expr();
            lhs = make(Expr{Binary{BinaryOp::logical_and, std::move(lhs), std::move(rhs)}}, op);
        }
        return lhs;
    }

    ExprPtr not_expr() {
        if (check(Tok::kw_not)) {
            const Token& op = advance();
            ExprPtr operand = not_expr();
            return make(Expr{Unary{UnaryOp::logical_not, std::move(operand)}}, op);
        }
        return comparison();
    }

    ExprPtr comparison() {
        ExprPtr lhs = additive();
        BinaryOp op;
        switch (current().kind) {
            case Tok::lt: op = BinaryOp::lt; break;
            case Tok::le: op = BinaryOp::le; break;
            case Tok::gt: op = BinaryOp::gt; break;
            case Tok::ge: op = BinaryOp::ge; break;
            case Tok::eq_eq: op = BinaryOp::eq; break;
            case Tok::ne: op = BinaryOp::ne; break;
            default: return lhs;
        }
        const Token& tok = advance();
        ExprPtr rhs = additive();
        return make(Expr{Binary{op, std::move(lhs), std::move(rhs)}}, tok);  // non-associative
    }

    ExprPtr additive() {
        ExprPtr lhs = multiplicative();
        while (check(Tok::plus) || check(Tok::minus)) {
            const Token& op = advance();
            BinaryOp kind = op.kind == Tok::plus ? BinaryOp::add : BinaryOp::sub;
            ExprPtr rhs = multiplicative();
            lhs = make(Expr{Binary{kind, std::move(lhs), std::move(rhs)}}, op);
        }
        return lhs;
    }

    ExprPtr multiplicative() {
        ExprPtr lhs = unary();
        while (check(Tok::star) || check(Tok::slash)) {
            const Token& op = advance();
            BinaryOp kind = op.kind == Tok::star ? BinaryOp::mul : BinaryOp::div;
            ExprPtr rhs = unary();
            lhs = make(Expr{Binary{kind, std::move(lhs), std::move(rhs)}}, op);
        }
        return lhs;
    }

    ExprPtr unary() {
        if (check(Tok::minus)) {
            const Token& op = advance();
            ExprPtr operand = unary();
            return make(Expr{Unary{UnaryOp::negate, std::move(operand)}}, op);
        }
        return primary();
    }

    ExprPtr primary() {
        const Token& tok = current();
        switch (tok.kind) {
            case Tok::number: {
                advance();
                return make(Expr{NumberLit{tok.number}}, tok);
            }
            case Tok::lparen: {
                advance();
                ExprPtr inner = expression();
                expect(Tok::rparen, "')'");
                return inner;
            }
            case Tok::ident: {
                advance();
                if (!check(Tok::lparen)) return make(Expr{VarRef{tok.text}}, tok);
                advance();  // '('
                if (is_tool_name(tok.text)) return tool_call(tok);
                std::vector<ExprPtr> args;
                if (!check(Tok::rparen)) {
                    args.push_back(expression());
                    while (match(Tok::comma)) args.push_back(expression());
                }
                expect(Tok::rparen, "')'");
                return make(Expr{Call{tok.text, std::move(args)}}, tok);
            }
            default:
                fail(tok.line, tok.column, "expected an expression");
        }
    }

    // Called with '(' already consumed. Tool calls take a schema variable
    // name (bare identifier or quoted string) in the first slot.
    ExprPtr tool_call(const Token& name) {
        std::string variable;
        if (check(Tok::ident) || check(Tok::string)) {
            variable = advance().text;
        } else {
            fail(current().line, current().column,
                 "expected a variable name as the first argument of " + name.text);
        }
        std::vector<ExprPtr> args;
        while (match(Tok::comma)) args.push_back(expression());
        expect(Tok::rparen, "')'");
        return make(Expr{ToolCall{name.text, std::move(variable), std::move(args)}}, name);
    }
};

void collect_variables(const Expr& e, std::set<std::string>& out) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, Let>) {
                collect_variables(*node.value, out);
                collect_variables(*node.body, out);
            } else if constexpr (std::is_same_v<T, If>) {
                collect_variables(*node.condition, out);
                collect_variables(*node.then_branch, out);
                collect_variables(*node.else_branch, out);
            } else if constexpr (std::is_same_v<T, Unary>) {
                collect_variables(*node.operand, out);
            } else if constexpr (std::is_same_v<T, Binary>) {
                collect_variables(*node.lhs, out);
                collect_variables(*node.rhs, out);
            } else if constexpr (std::is_same_v<T, Call>) {
                for (const auto& a : node.args) collect_variables(*a, out);
            } else if constexpr (std::is_same_v<T, ToolCall>) {
                out.insert(node.variable);
                for (const auto& a : node.args) collect_variables(*a, out);
            }
        },
        e.node);
}

}  // namespace

ParseResult parse(std::string_view source) {
    ParseResult result;
    try {
        Lexer lexer(source);
        Parser parser(lexer.run());
        Program program;
        program.source = std::string(source);
        program.ast = parser.run();
        collect_variables(*program.ast, program.declared_variables);
        result.program = std::move(program);
    } catch (const ParseAbort& abort) {
        result.error = abort.error;
    }
    return result;
}

Program Program::clone() const {
    Program copy;
    copy.source = source;
    copy.ast = ast ? clone_expr(*ast) : nullptr;
    copy.declared_variables = declared_variables;
    return copy;
}

}  // namespace featforge::featscript
