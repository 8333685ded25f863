#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace krivine {

/// Surface lambda term in Krivine notation: `x`, `\xt`, `(t)u`.
///
/// Nodes are immutable and shared. Destruction is iterative, so very deep
/// terms (long identity chains, Church numeral bodies) can be dropped
/// without exhausting the native stack.
class Term {
public:
    enum class Kind { Variable, Abstraction, Application };

    static Term variable(std::string name);
    static Term abstraction(std::string binder, Term body);
    static Term application(Term function, Term argument);

    Kind kind() const;
    bool is_variable() const { return kind() == Kind::Variable; }
    bool is_abstraction() const { return kind() == Kind::Abstraction; }
    bool is_application() const { return kind() == Kind::Application; }

    /// Variable name, or the binder of an abstraction.
    const std::string& name() const;
    const Term& body() const;
    const Term& function() const;
    const Term& argument() const;

    /// Node count.
    std::size_t size() const;

    friend bool operator==(const Term& a, const Term& b);

private:
    struct Node;
    Term() = default;
    explicit Term(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    std::shared_ptr<const Node> node_;
};

struct Term::Node {
    Kind kind;
    std::string name;
    Term left;
    Term right;
    ~Node();
};

inline Term::Kind Term::kind() const { return node_->kind; }
inline const std::string& Term::name() const { return node_->name; }
inline const Term& Term::body() const { return node_->left; }
inline const Term& Term::function() const { return node_->left; }
inline const Term& Term::argument() const { return node_->right; }

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t offset, std::string expected);

    std::size_t offset() const { return offset_; }
    const std::string& expected() const { return expected_; }

private:
    std::size_t offset_;
    std::string expected_;
};

/// Result of parsing a prefix of the input: the term and the unconsumed rest.
struct ParseResult {
    Term value;
    std::string_view rest;
};

/// `[a-z][a-z0-9]*`
bool is_identifier(std::string_view s);
/// `[a-z][0-9]*` -- binders stop at the first letter so that `\xx` is `\x x`.
bool is_binder_name(std::string_view s);

/// Parse the longest term at the start of `input`; leading and inner
/// whitespace is skipped, trailing text is returned in `rest`.
ParseResult parse_prefix(std::string_view input);

/// Parse exactly one term; trailing non-whitespace is an error.
Term parse_term(std::string_view input);

/// Number of parse_prefix calls so far in this process (instrumentation for
/// the benchmark harness).
std::uint64_t parse_invocations();

std::string pretty(const Term& t);

std::set<std::string> free_variables(const Term& t);

/// Shorthands used by generators and tests.
inline Term var(std::string name) { return Term::variable(std::move(name)); }
inline Term lam(std::string binder, Term body) { return Term::abstraction(std::move(binder), std::move(body)); }
inline Term app(Term f, Term a) { return Term::application(std::move(f), std::move(a)); }

}  // namespace krivine
