#include "krivine/syntax.hpp"

#include <atomic>
#include <utility>
#include <variant>
#include <vector>

#include "krivine/combinators.hpp"

namespace krivine {

// ---------------------------------------------------------------------------
// Term

Term::Node::~Node() {
    // Children are released through a per-thread worklist instead of nested
    // destructor calls.
    thread_local std::vector<std::shared_ptr<const Node>> pending;
    thread_local bool draining = false;

    if (left.node_ && left.node_.use_count() == 1) pending.push_back(std::move(left.node_));
    if (right.node_ && right.node_.use_count() == 1) pending.push_back(std::move(right.node_));
    if (draining) return;
    draining = true;
    while (!pending.empty()) {
        auto n = std::move(pending.back());
        pending.pop_back();
        n.reset();
    }
    draining = false;
}

Term Term::variable(std::string name) {
    if (!is_identifier(name)) throw std::invalid_argument("invalid variable name '" + name + "'");
    auto n = std::make_shared<Node>();
    n->kind = Kind::Variable;
    n->name = std::move(name);
    return Term(std::move(n));
}

Term Term::abstraction(std::string binder, Term body) {
    if (!is_binder_name(binder)) throw std::invalid_argument("invalid binder name '" + binder + "'");
    auto n = std::make_shared<Node>();
    n->kind = Kind::Abstraction;
    n->name = std::move(binder);
    n->left = std::move(body);
    return Term(std::move(n));
}

Term Term::application(Term function, Term argument) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Application;
    n->left = std::move(function);
    n->right = std::move(argument);
    return Term(std::move(n));
}

std::size_t Term::size() const {
    std::size_t count = 0;
    std::vector<const Term*> todo{this};
    while (!todo.empty()) {
        const Term* t = todo.back();
        todo.pop_back();
        ++count;
        switch (t->kind()) {
        case Kind::Variable: break;
        case Kind::Abstraction: todo.push_back(&t->body()); break;
        case Kind::Application:
            todo.push_back(&t->argument());
            todo.push_back(&t->function());
            break;
        }
    }
    return count;
}

bool operator==(const Term& a, const Term& b) {
    std::vector<std::pair<const Term*, const Term*>> todo{{&a, &b}};
    while (!todo.empty()) {
        auto [x, y] = todo.back();
        todo.pop_back();
        if (x->node_ == y->node_) continue;
        if (x->kind() != y->kind()) return false;
        switch (x->kind()) {
        case Term::Kind::Variable:
            if (x->name() != y->name()) return false;
            break;
        case Term::Kind::Abstraction:
            if (x->name() != y->name()) return false;
            todo.emplace_back(&x->body(), &y->body());
            break;
        case Term::Kind::Application:
            todo.emplace_back(&x->argument(), &y->argument());
            todo.emplace_back(&x->function(), &y->function());
            break;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Parsing

ParseError::ParseError(std::size_t offset, std::string expected)
    : std::runtime_error("parse error at offset " + std::to_string(offset) + ": expected " + expected),
      offset_(offset),
      expected_(std::move(expected)) {}

bool is_identifier(std::string_view s) {
    if (s.empty() || !combinators::is_lower(s[0])) return false;
    for (char c : s.substr(1))
        if (!combinators::is_lower(c) && !combinators::is_digit(c)) return false;
    return true;
}

bool is_binder_name(std::string_view s) {
    if (s.empty() || !combinators::is_lower(s[0])) return false;
    for (char c : s.substr(1))
        if (!combinators::is_digit(c)) return false;
    return true;
}

namespace {

using namespace combinators;

// What the start of a term tells us. A variable is complete on its own; the
// other two open a construct whose remaining parts follow.
struct VarHead { std::string name; };
struct LambdaHead { std::string binder; };
struct ParenHead {};
using Head = std::variant<VarHead, LambdaHead, ParenHead>;

struct Grammar {
    Parser<std::string> identifier = word(sat(is_lower), sat([](char c) { return is_lower(c) || is_digit(c); }));
    Parser<std::string> binder = word(sat(is_lower), sat(is_digit));

    Parser<Head> parse_var = token(map(identifier, [](std::string s) { return Head{VarHead{std::move(s)}}; }));
    Parser<Head> parse_abstraction = token(bind(character('\\'), [b = binder](char) {
        return token(map(b, [](std::string s) { return Head{LambdaHead{std::move(s)}}; }));
    }));
    Parser<Head> parse_application = token(map(character('('), [](char) { return Head{ParenHead{}}; }));

    Parser<Head> head = parse_var | parse_abstraction | parse_application;
    Parser<char> close = token(character(')'));
};

const Grammar& grammar() {
    static const Grammar g;
    return g;
}

std::size_t skip_spaces(std::string_view in, std::size_t pos) {
    while (pos < in.size() && is_space(in[pos])) ++pos;
    return pos;
}

// Pending construct on the continuation stack.
struct Frame {
    enum class Kind { Lambda, OpenParen, Function } kind;
    std::string binder;
    std::optional<Term> function;
};

}  // namespace

namespace {
std::atomic<std::uint64_t> g_parse_calls{0};
}  // namespace

std::uint64_t parse_invocations() { return g_parse_calls.load(std::memory_order_relaxed); }

ParseResult parse_prefix(std::string_view input) {
    g_parse_calls.fetch_add(1, std::memory_order_relaxed);
    const Grammar& g = grammar();
    std::vector<Frame> frames;
    std::size_t pos = 0;

    for (;;) {
        auto h = g.head(input, pos);
        if (!h) {
            std::size_t at = skip_spaces(input, pos);
            if (at < input.size() && input[at] == '\\') throw ParseError(skip_spaces(input, at + 1), "binder");
            throw ParseError(at, "variable, '\\' or '('");
        }
        pos = h->next;

        if (auto* l = std::get_if<LambdaHead>(&h->value)) {
            frames.push_back({Frame::Kind::Lambda, std::move(l->binder), std::nullopt});
            continue;
        }
        if (std::holds_alternative<ParenHead>(h->value)) {
            frames.push_back({Frame::Kind::OpenParen, {}, std::nullopt});
            continue;
        }

        // A complete term; fold it into the pending frames.
        Term result = Term::variable(std::move(std::get<VarHead>(h->value).name));
        bool need_argument = false;
        while (!frames.empty() && !need_argument) {
            Frame& top = frames.back();
            switch (top.kind) {
            case Frame::Kind::Lambda:
                result = Term::abstraction(std::move(top.binder), std::move(result));
                frames.pop_back();
                break;
            case Frame::Kind::Function:
                result = Term::application(std::move(*top.function), std::move(result));
                frames.pop_back();
                break;
            case Frame::Kind::OpenParen: {
                auto c = g.close(input, pos);
                if (!c) throw ParseError(skip_spaces(input, pos), "')'");
                pos = c->next;
                top.kind = Frame::Kind::Function;
                top.function = std::move(result);
                need_argument = true;
                break;
            }
            }
        }
        if (!need_argument) return ParseResult{std::move(result), input.substr(pos)};
    }
}

Term parse_term(std::string_view input) {
    auto r = parse_prefix(input);
    std::size_t consumed = input.size() - r.rest.size();
    std::size_t end = skip_spaces(input, consumed);
    if (end != input.size()) throw ParseError(end, "end of input");
    return std::move(r.value);
}

// ---------------------------------------------------------------------------
// Printing and free variables

std::string pretty(const Term& t) {
    std::string out;
    // Either a subterm to print or a literal ")" to emit.
    std::vector<const Term*> todo{&t};
    while (!todo.empty()) {
        const Term* cur = todo.back();
        todo.pop_back();
        if (!cur) {
            out.push_back(')');
            continue;
        }
        switch (cur->kind()) {
        case Term::Kind::Variable: out += cur->name(); break;
        case Term::Kind::Abstraction:
            out.push_back('\\');
            out += cur->name();
            todo.push_back(&cur->body());
            break;
        case Term::Kind::Application:
            out.push_back('(');
            todo.push_back(&cur->argument());
            todo.push_back(nullptr);
            todo.push_back(&cur->function());
            break;
        }
    }
    return out;
}

std::set<std::string> free_variables(const Term& t) {
    std::set<std::string> out;
    std::vector<std::string> bound;  // binders in scope, innermost last
    // nullptr entries mark the end of an abstraction body.
    std::vector<const Term*> todo{&t};
    while (!todo.empty()) {
        const Term* cur = todo.back();
        todo.pop_back();
        if (!cur) {
            bound.pop_back();
            continue;
        }
        switch (cur->kind()) {
        case Term::Kind::Variable: {
            bool is_bound = false;
            for (const auto& b : bound)
                if (b == cur->name()) {
                    is_bound = true;
                    break;
                }
            if (!is_bound) out.insert(cur->name());
            break;
        }
        case Term::Kind::Abstraction:
            bound.push_back(cur->name());
            todo.push_back(nullptr);
            todo.push_back(&cur->body());
            break;
        case Term::Kind::Application:
            todo.push_back(&cur->argument());
            todo.push_back(&cur->function());
            break;
        }
    }
    return out;
}

}  // namespace krivine
