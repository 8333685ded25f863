#pragma once

// Minimal first-success parser combinators over a string_view.
//
// A parser maps (input, position) to either nothing (failure) or a value and
// the position after it. Alternation keeps only the first successful result,
// so there is at most one parse and no backtracking list.

#include <cctype>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace krivine::combinators {

template <class T>
struct Success {
    T value;
    std::size_t next;
};

template <class T>
using Outcome = std::optional<Success<T>>;

template <class T>
class Parser {
public:
    using value_type = T;
    using Fn = std::function<Outcome<T>(std::string_view, std::size_t)>;

    explicit Parser(Fn fn) : fn_(std::move(fn)) {}

    Outcome<T> operator()(std::string_view in, std::size_t pos) const { return fn_(in, pos); }

private:
    Fn fn_;
};

template <class T>
Parser<T> pure(T value) {
    return Parser<T>([value](std::string_view, std::size_t pos) -> Outcome<T> {
        return Success<T>{value, pos};
    });
}

template <class T>
Parser<T> fail() {
    return Parser<T>([](std::string_view, std::size_t) -> Outcome<T> { return std::nullopt; });
}

/// Monadic bind: run `p`, feed its value to `f`, run the resulting parser.
template <class T, class F>
auto bind(Parser<T> p, F f) -> decltype(f(std::declval<T>())) {
    using R = decltype(f(std::declval<T>()));
    using U = typename R::value_type;
    return R([p = std::move(p), f = std::move(f)](std::string_view in, std::size_t pos) -> Outcome<U> {
        auto first = p(in, pos);
        if (!first) return std::nullopt;
        return f(std::move(first->value))(in, first->next);
    });
}

template <class T, class F>
auto map(Parser<T> p, F f) -> Parser<decltype(f(std::declval<T>()))> {
    using U = decltype(f(std::declval<T>()));
    return Parser<U>([p = std::move(p), f = std::move(f)](std::string_view in, std::size_t pos) -> Outcome<U> {
        auto r = p(in, pos);
        if (!r) return std::nullopt;
        return Success<U>{f(std::move(r->value)), r->next};
    });
}

/// First-success alternation.
template <class T>
Parser<T> operator|(Parser<T> p, Parser<T> q) {
    return Parser<T>([p = std::move(p), q = std::move(q)](std::string_view in, std::size_t pos) -> Outcome<T> {
        if (auto r = p(in, pos)) return r;
        return q(in, pos);
    });
}

inline Parser<char> item() {
    return Parser<char>([](std::string_view in, std::size_t pos) -> Outcome<char> {
        if (pos >= in.size()) return std::nullopt;
        return Success<char>{in[pos], pos + 1};
    });
}

template <class Pred>
Parser<char> sat(Pred pred) {
    return bind(item(), [pred](char c) { return pred(c) ? pure(c) : fail<char>(); });
}

inline Parser<char> character(char c) {
    return sat([c](char d) { return c == d; });
}

/// Zero or more repetitions, collected into a string.
inline Parser<std::string> many(Parser<char> p) {
    return Parser<std::string>([p = std::move(p)](std::string_view in, std::size_t pos) -> Outcome<std::string> {
        std::string out;
        while (auto r = p(in, pos)) {
            out.push_back(r->value);
            pos = r->next;
        }
        return Success<std::string>{std::move(out), pos};
    });
}

/// One leading character from `head`, then `many(tail)`.
inline Parser<std::string> word(Parser<char> head, Parser<char> tail) {
    return bind(std::move(head), [tail = many(std::move(tail))](char c) {
        return map(tail, [c](std::string rest) { return std::string(1, c) + rest; });
    });
}

inline bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

inline Parser<std::string> spaces() { return many(sat(is_space)); }

/// Skip whitespace, then run `p`.
template <class T>
Parser<T> token(Parser<T> p) {
    return bind(spaces(), [p = std::move(p)](const std::string&) { return p; });
}

}  // namespace krivine::combinators
