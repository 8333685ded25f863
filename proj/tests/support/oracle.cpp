#include "oracle.hpp"

#include <string>

namespace oracle {

using krivine::Term;

std::set<std::string> free_vars(const Term& t) {
    switch (t.kind()) {
    case Term::Kind::Variable:
        return {t.name()};
    case Term::Kind::Abstraction: {
        auto s = free_vars(t.body());
        s.erase(t.name());
        return s;
    }
    case Term::Kind::Application: {
        auto s = free_vars(t.function());
        auto r = free_vars(t.argument());
        s.insert(r.begin(), r.end());
        return s;
    }
    }
    return {};
}

namespace {

void all_names(const Term& t, std::set<std::string>& out) {
    out.insert(t.name());
    if (t.is_abstraction()) all_names(t.body(), out);
    if (t.is_application()) {
        all_names(t.function(), out);
        all_names(t.argument(), out);
    }
}

std::string fresh_for(const std::set<std::string>& avoid) {
    for (std::size_t i = 1;; ++i) {
        std::string name = "q" + std::to_string(i);
        if (!avoid.count(name)) return name;
    }
}

}  // namespace

Term substitute(const Term& t, const std::string& x, const Term& u) {
    switch (t.kind()) {
    case Term::Kind::Variable:
        return t.name() == x ? u : t;
    case Term::Kind::Application:
        return krivine::app(substitute(t.function(), x, u), substitute(t.argument(), x, u));
    case Term::Kind::Abstraction: {
        const std::string& y = t.name();
        if (y == x) return t;
        auto fv_u = free_vars(u);
        if (!fv_u.count(y)) return krivine::lam(y, substitute(t.body(), x, u));
        std::set<std::string> avoid = fv_u;
        all_names(t.body(), avoid);
        avoid.insert(x);
        std::string z = fresh_for(avoid);
        Term renamed = substitute(t.body(), y, krivine::var(z));
        return krivine::lam(z, substitute(renamed, x, u));
    }
    }
    return t;
}

std::optional<Term> reduce_once(const Term& t) {
    switch (t.kind()) {
    case Term::Kind::Variable:
        return std::nullopt;
    case Term::Kind::Abstraction:
        if (auto b = reduce_once(t.body())) return krivine::lam(t.name(), *b);
        return std::nullopt;
    case Term::Kind::Application:
        if (t.function().is_abstraction())
            return substitute(t.function().body(), t.function().name(), t.argument());
        if (auto f = reduce_once(t.function())) return krivine::app(*f, t.argument());
        if (auto a = reduce_once(t.argument())) return krivine::app(t.function(), *a);
        return std::nullopt;
    }
    return std::nullopt;
}

std::optional<Term> normalize(const Term& t, Limits limits) {
    Term cur = t;
    for (std::size_t i = 0; i <= limits.max_steps; ++i) {
        if (cur.size() > limits.max_size) return std::nullopt;
        auto next = reduce_once(cur);
        if (!next) return cur;
        cur = std::move(*next);
    }
    return std::nullopt;
}

}  // namespace oracle
