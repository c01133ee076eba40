#include "pel/formula.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace pel {

struct Formula::Node {
    Kind kind;
    // atom
    std::string variable;
    std::string value;
    // negation / disjunction
    Formula child_or_lhs;
    Formula rhs;
    // belief
    std::string agent;
    int stage = 0;
    double threshold = 0.0;
    Formula condition;
};

Formula Formula::atom(std::string variable, std::string value) {
    auto node = std::make_shared<Node>();
    node->kind = Kind::atom;
    node->variable = std::move(variable);
    node->value = std::move(value);
    return Formula(std::move(node));
}

Formula Formula::negation(Formula f) {
    auto node = std::make_shared<Node>();
    node->kind = Kind::negation;
    node->child_or_lhs = std::move(f);
    return Formula(std::move(node));
}

Formula Formula::disjunction(Formula lhs, Formula rhs) {
    auto node = std::make_shared<Node>();
    node->kind = Kind::disjunction;
    node->child_or_lhs = std::move(lhs);
    node->rhs = std::move(rhs);
    return Formula(std::move(node));
}

Formula Formula::conjunction(Formula lhs, Formula rhs) {
    return negation(disjunction(negation(std::move(lhs)), negation(std::move(rhs))));
}

Formula Formula::belief_cond(std::string agent, int stage, double threshold, Formula body,
                             Formula condition) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw Error(ErrorCode::threshold_out_of_range,
                    "belief threshold " + std::to_string(threshold) + " outside [0,1]");
    if (stage < 1)
        throw Error(ErrorCode::stage_out_of_range, "stage " + std::to_string(stage) + " < 1");
    auto node = std::make_shared<Node>();
    node->kind = Kind::belief;
    node->agent = std::move(agent);
    node->stage = stage;
    node->threshold = threshold;
    node->child_or_lhs = std::move(body);
    node->condition = std::move(condition);
    return Formula(std::move(node));
}

Formula Formula::belief(std::string agent, int stage, double threshold, Formula body) {
    return belief_cond(std::move(agent), stage, threshold, std::move(body), truth());
}

Formula Formula::truth() { return atom(kTrueVariableName, kTrueVariableLabel); }

Formula::Kind Formula::kind() const { return node_->kind; }
const std::string& Formula::variable_name() const { return node_->variable; }
const std::string& Formula::value_label() const { return node_->value; }
const Formula& Formula::child() const { return node_->child_or_lhs; }
const Formula& Formula::lhs() const { return node_->child_or_lhs; }
const Formula& Formula::rhs() const { return node_->rhs; }
const std::string& Formula::agent() const { return node_->agent; }
int Formula::stage() const { return node_->stage; }
double Formula::threshold() const { return node_->threshold; }
const Formula& Formula::body() const { return node_->child_or_lhs; }
const Formula& Formula::condition() const { return node_->condition; }

bool Formula::is_truth() const {
    return node_->kind == Kind::atom && node_->variable == kTrueVariableName &&
           node_->value == kTrueVariableLabel;
}

namespace {

/// Shortest decimal that parses back to exactly the same double; keeps
/// printed thresholds stable and readable ("0.8", not "0.80000000000000004").
std::string shortest_double(double x) {
    char buf[64];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

void print(const Formula& f, std::string& out) {
    switch (f.kind()) {
        case Formula::Kind::atom:
            out += f.variable_name();
            out += '=';
            out += f.value_label();
            break;
        case Formula::Kind::negation: {
            out += '!';
            bool parens = f.child().kind() == Formula::Kind::disjunction;
            if (parens) out += '(';
            print(f.child(), out);
            if (parens) out += ')';
            break;
        }
        case Formula::Kind::disjunction: {
            print(f.lhs(), out);
            out += " or ";
            // Disjunction is parsed left-associative; parenthesize a
            // right-nested disjunction so the round trip is exact.
            bool parens = f.rhs().kind() == Formula::Kind::disjunction;
            if (parens) out += '(';
            print(f.rhs(), out);
            if (parens) out += ')';
            break;
        }
        case Formula::Kind::belief: {
            bool unconditional = f.condition().is_truth();
            out += unconditional ? "Bel[" : "BelCond[";
            out += f.agent();
            out += ',';
            out += std::to_string(f.stage());
            out += "] >= ";
            out += shortest_double(f.threshold());
            out += " (";
            print(f.body(), out);
            if (!unconditional) {
                out += " | ";
                print(f.condition(), out);
            }
            out += ')';
            break;
        }
    }
}

}  // namespace

std::string Formula::to_string() const {
    std::string out;
    print(*this, out);
    return out;
}

bool operator==(const Formula& a, const Formula& b) {
    if (a.node_ == b.node_) return true;
    if (!a.node_ || !b.node_) return false;
    return a.to_string() == b.to_string();
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Token {
    enum class Type { ident, number, symbol, end };
    Type type = Type::end;
    std::string text;
    std::size_t position = 0;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) { advance(); }

    const Token& current() const { return current_; }

    Token take() {
        Token t = current_;
        advance();
        return t;
    }

    [[noreturn]] void fail(const std::string& expected) const {
        std::ostringstream msg;
        msg << "expected " << expected << " at position " << current_.position;
        if (current_.type == Token::Type::end)
            msg << " (end of input)";
        else
            msg << ", found '" << current_.text << "'";
        throw Error(ErrorCode::syntax_error, msg.str());
    }

private:
    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        current_.position = pos_;
        if (pos_ >= text_.size()) {
            current_ = {Token::Type::end, "", pos_};
            return;
        }
        char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            current_ = {Token::Type::ident, text_.substr(start, pos_ - start), start};
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
            if (pos_ < text_.size() && text_[pos_] == '.') {
                ++pos_;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            }
            current_ = {Token::Type::number, text_.substr(start, pos_ - start), start};
            return;
        }
        if (c == '>' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '=') {
            current_ = {Token::Type::symbol, ">=", pos_};
            pos_ += 2;
            return;
        }
        if (std::string("!()[],|=").find(c) != std::string::npos) {
            current_ = {Token::Type::symbol, std::string(1, c), pos_};
            ++pos_;
            return;
        }
        std::ostringstream msg;
        msg << "unexpected character '" << c << "' at position " << pos_;
        throw Error(ErrorCode::syntax_error, msg.str());
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    Token current_;
};

class Parser {
public:
    explicit Parser(const std::string& text) : lex_(text) {}

    Formula parse() {
        Formula f = or_expr();
        if (lex_.current().type != Token::Type::end) lex_.fail("end of input");
        return f;
    }

private:
    bool at_symbol(const char* s) const {
        return lex_.current().type == Token::Type::symbol && lex_.current().text == s;
    }
    bool at_keyword(const char* s) const {
        return lex_.current().type == Token::Type::ident && lex_.current().text == s;
    }
    void expect_symbol(const char* s) {
        if (!at_symbol(s)) lex_.fail(std::string("'") + s + "'");
        lex_.take();
    }

    Formula or_expr() {
        Formula f = and_expr();
        while (at_keyword("or")) {
            lex_.take();
            f = Formula::disjunction(std::move(f), and_expr());
        }
        return f;
    }

    Formula and_expr() {
        Formula f = unary();
        while (at_keyword("and")) {
            lex_.take();
            f = Formula::conjunction(std::move(f), unary());
        }
        return f;
    }

    Formula unary() {
        if (at_symbol("!")) {
            lex_.take();
            return Formula::negation(unary());
        }
        if (at_symbol("(")) {
            lex_.take();
            Formula f = or_expr();
            expect_symbol(")");
            return f;
        }
        if (at_keyword("Bel") || at_keyword("BelCond")) return belief();
        return atom();
    }

    Formula atom() {
        if (lex_.current().type != Token::Type::ident) lex_.fail("a variable name");
        Token var = lex_.take();
        expect_symbol("=");
        if (lex_.current().type != Token::Type::ident && lex_.current().type != Token::Type::number)
            lex_.fail("a value label");
        Token value = lex_.take();
        return Formula::atom(var.text, value.text);
    }

    Formula belief() {
        bool conditional = lex_.current().text == "BelCond";
        lex_.take();
        expect_symbol("[");
        if (lex_.current().type != Token::Type::ident) lex_.fail("an agent name");
        Token agent = lex_.take();
        expect_symbol(",");
        if (lex_.current().type != Token::Type::number) lex_.fail("a stage number");
        Token stage_tok = lex_.take();
        if (stage_tok.text.find('.') != std::string::npos)
            throw Error(ErrorCode::syntax_error,
                        "stage must be an integer at position " + std::to_string(stage_tok.position));
        int stage = std::stoi(stage_tok.text);
        if (stage < 1)
            throw Error(ErrorCode::stage_out_of_range,
                        "stage must be positive at position " + std::to_string(stage_tok.position));
        expect_symbol("]");
        expect_symbol(">=");
        if (lex_.current().type != Token::Type::number) lex_.fail("a probability");
        Token prob_tok = lex_.take();
        double threshold = std::strtod(prob_tok.text.c_str(), nullptr);
        if (threshold < 0.0 || threshold > 1.0)
            throw Error(ErrorCode::threshold_out_of_range,
                        "threshold " + prob_tok.text + " outside [0,1] at position " +
                            std::to_string(prob_tok.position));
        expect_symbol("(");
        Formula body = or_expr();
        Formula condition;
        if (conditional) {
            expect_symbol("|");
            condition = or_expr();
        } else {
            condition = Formula::truth();
        }
        expect_symbol(")");
        return Formula::belief_cond(agent.text, stage, threshold, std::move(body),
                                    std::move(condition));
    }

    Lexer lex_;
};

}  // namespace

Formula parse_formula(const std::string& text) { return Parser(text).parse(); }

}  // namespace pel
