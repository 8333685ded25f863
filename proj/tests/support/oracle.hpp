#pragma once

// Reference normalizer for tests: textbook capture-avoiding substitution,
// leftmost-outermost strategy, directly on surface terms. Shares nothing with
// the compiler or the machine.

#include <cstddef>
#include <optional>

#include "krivine/syntax.hpp"

namespace oracle {

struct Limits {
    std::size_t max_steps = 10'000;
    std::size_t max_size = 20'000;
};

/// One leftmost-outermost beta step, or nullopt if `t` is normal.
std::optional<krivine::Term> reduce_once(const krivine::Term& t);

/// Substitution t[x := u].
krivine::Term substitute(const krivine::Term& t, const std::string& x, const krivine::Term& u);

/// Normal form within the limits; nullopt when a limit is hit.
std::optional<krivine::Term> normalize(const krivine::Term& t, Limits limits = {});

/// Recursive free-variable set, written straight from the three clauses.
std::set<std::string> free_vars(const krivine::Term& t);

}  // namespace oracle
