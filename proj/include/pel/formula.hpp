#pragma once

#include <memory>
#include <string>

#include "pel/types.hpp"

namespace pel {

/// Name of the synthetic constant variable backing the always-true atom.
/// Unconditional Bel desugars to BelCond(· | <true atom>), so nothing else
/// special-cases "no condition".
inline constexpr const char* kTrueVariableName = "_true";
inline constexpr const char* kTrueVariableLabel = "true";

/// Immutable formula AST. `And` and unconditional `Bel` are derived forms,
/// desugared on construction:
///   a and b   ==  !(!a or !b)
///   Bel(phi)  ==  BelCond(phi | _true=true)
/// Structural equality of this normalized form (via to_string) is the
/// identity used for indicator deduplication.
class Formula {
public:
    enum class Kind { atom, negation, disjunction, belief };

    Formula() = default;

    static Formula atom(std::string variable, std::string value);
    static Formula negation(Formula f);
    static Formula disjunction(Formula lhs, Formula rhs);
    static Formula conjunction(Formula lhs, Formula rhs);
    /// Conditional belief: threshold must be in [0,1], stage >= 1.
    static Formula belief_cond(std::string agent, int stage, double threshold, Formula body,
                               Formula condition);
    static Formula belief(std::string agent, int stage, double threshold, Formula body);
    /// The reserved always-true atom.
    static Formula truth();

    bool valid() const { return node_ != nullptr; }
    Kind kind() const;

    // Atom accessors.
    const std::string& variable_name() const;
    const std::string& value_label() const;
    // Negation / disjunction accessors.
    const Formula& child() const;
    const Formula& lhs() const;
    const Formula& rhs() const;
    // Belief accessors.
    const std::string& agent() const;
    int stage() const;
    double threshold() const;
    const Formula& body() const;
    const Formula& condition() const;

    bool is_truth() const;

    /// Canonical concrete syntax; parses back to an identical AST.
    std::string to_string() const;

    friend bool operator==(const Formula& a, const Formula& b);

private:
    struct Node;
    explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

/// Parses the concrete formula syntax:
///   formula := orexpr
///   orexpr  := andexpr ("or" andexpr)*
///   andexpr := unary ("and" unary)*
///   unary   := "!" unary | "(" formula ")" | atom | belief
///   atom    := IDENT "=" (IDENT | NUMBER)
///   belief  := "Bel" "[" agent "," stage "]" ">=" prob "(" formula ")"
///            | "BelCond" "[" agent "," stage "]" ">=" prob "(" formula "|" formula ")"
/// "or" binds looser than "and"; "!" binds tightest. Whitespace is
/// insignificant. Throws syntax-error with the offending position.
Formula parse_formula(const std::string& text);

}  // namespace pel
