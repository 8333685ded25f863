#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "krivine/syntax.hpp"

namespace krivine {

using NodeId = std::uint32_t;

/// One node of a compiled term. Field meaning depends on `kind`:
///   Bound:       a = v (1 = innermost lambda group), b = k (1 = leftmost binder)
///   Free:        a = index into Program::free_names
///   Application: a = function node, b = argument node
///   Abstraction: a = arity n, b = body node (never itself an Abstraction)
struct CNode {
    enum class Kind : std::uint8_t { Bound, Free, Application, Abstraction };
    Kind kind;
    std::uint32_t a;
    std::uint32_t b;
};

/// Immutable arena holding a compiled term graph. Shared read-only by every
/// machine and worker evaluating it.
struct Program {
    std::vector<CNode> nodes;
    std::vector<std::string> free_names;
    /// Subtree node counts, indexed like `nodes`.
    std::vector<std::uint32_t> sizes;

    const CNode& operator[](NodeId id) const { return nodes[id]; }
};

/// Compiled term: a root node in a shared program.
class CTerm {
public:
    CTerm(std::shared_ptr<const Program> program, NodeId root) : program_(std::move(program)), root_(root) {}

    const Program& program() const { return *program_; }
    const std::shared_ptr<const Program>& program_ptr() const { return program_; }
    NodeId root() const { return root_; }
    const CNode& node() const { return (*program_)[root_]; }

    /// Subterm sharing this program.
    CTerm at(NodeId id) const { return CTerm(program_, id); }

    std::size_t size() const { return program_->sizes[root_]; }

    /// Structural equality; free variables compare by name.
    friend bool operator==(const CTerm& x, const CTerm& y);

private:
    std::shared_ptr<const Program> program_;
    NodeId root_;
};

/// Builds compiled terms by hand, mainly for tests.
class CTermBuilder {
public:
    NodeId bound(std::uint32_t v, std::uint32_t k);
    NodeId free(const std::string& name);
    NodeId application(NodeId function, NodeId argument);
    NodeId abstraction(std::uint32_t arity, NodeId body);

    CTerm build(NodeId root) &&;

private:
    Program program_;
};

CTerm compile(const Term& t);

/// Bracket notation, e.g. `λ2([1, 2])[1, 1]`.
std::string to_string(const CTerm& c);

/// Checks the v/k bounds and lambda-group fusion invariants.
bool well_formed(const CTerm& c);

/// Generates binder names v1, v2, ... skipping reserved names. The n-th name
/// is a pure function of n and the reserved set.
class FreshNames {
public:
    explicit FreshNames(std::set<std::string> reserved = {});
    const std::string& operator()(std::uint32_t level);

private:
    std::set<std::string> reserved_;
    std::vector<std::string> names_;
    std::uint32_t next_suffix_ = 1;
};

/// Reads a compiled term back as a surface term. Binders get fresh names that
/// avoid `used_names` and the free variables of `c`.
Term decompile(const CTerm& c, const std::set<std::string>& used_names = {});

bool alpha_equivalent(const Term& a, const Term& b);

}  // namespace krivine
