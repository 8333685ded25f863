#include "krivine/compile.hpp"

#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace krivine {

namespace {

constexpr NodeId kUnset = std::numeric_limits<NodeId>::max();

void compute_sizes(Program& p) {
    p.sizes.assign(p.nodes.size(), 0);
    std::vector<std::pair<NodeId, bool>> todo;
    for (NodeId start = 0; start < p.nodes.size(); ++start) {
        if (p.sizes[start] != 0) continue;
        todo.emplace_back(start, false);
        while (!todo.empty()) {
            auto [id, expanded] = todo.back();
            todo.pop_back();
            if (p.sizes[id] != 0) continue;
            const CNode& n = p.nodes[id];
            switch (n.kind) {
            case CNode::Kind::Bound:
            case CNode::Kind::Free: p.sizes[id] = 1; break;
            case CNode::Kind::Abstraction:
                if (expanded) {
                    p.sizes[id] = 1 + p.sizes[n.b];
                } else {
                    todo.emplace_back(id, true);
                    todo.emplace_back(n.b, false);
                }
                break;
            case CNode::Kind::Application:
                if (expanded) {
                    std::uint64_t s = 1ull + p.sizes[n.a] + p.sizes[n.b];
                    p.sizes[id] = static_cast<std::uint32_t>(std::min<std::uint64_t>(s, std::numeric_limits<std::uint32_t>::max()));
                } else {
                    todo.emplace_back(id, true);
                    todo.emplace_back(n.a, false);
                    todo.emplace_back(n.b, false);
                }
                break;
            }
        }
    }
}

std::uint32_t intern(Program& p, std::unordered_map<std::string, std::uint32_t>& index, const std::string& name) {
    auto [it, inserted] = index.try_emplace(name, static_cast<std::uint32_t>(p.free_names.size()));
    if (inserted) p.free_names.push_back(name);
    return it->second;
}

}  // namespace

// ---------------------------------------------------------------------------

bool operator==(const CTerm& x, const CTerm& y) {
    const Program& px = x.program();
    const Program& py = y.program();
    std::vector<std::pair<NodeId, NodeId>> todo{{x.root(), y.root()}};
    while (!todo.empty()) {
        auto [i, j] = todo.back();
        todo.pop_back();
        const CNode& a = px[i];
        const CNode& b = py[j];
        if (a.kind != b.kind) return false;
        switch (a.kind) {
        case CNode::Kind::Bound:
            if (a.a != b.a || a.b != b.b) return false;
            break;
        case CNode::Kind::Free:
            if (px.free_names[a.a] != py.free_names[b.a]) return false;
            break;
        case CNode::Kind::Abstraction:
            if (a.a != b.a) return false;
            todo.emplace_back(a.b, b.b);
            break;
        case CNode::Kind::Application:
            todo.emplace_back(a.a, b.a);
            todo.emplace_back(a.b, b.b);
            break;
        }
    }
    return true;
}

NodeId CTermBuilder::bound(std::uint32_t v, std::uint32_t k) {
    program_.nodes.push_back({CNode::Kind::Bound, v, k});
    return static_cast<NodeId>(program_.nodes.size() - 1);
}

NodeId CTermBuilder::free(const std::string& name) {
    std::uint32_t idx = 0;
    while (idx < program_.free_names.size() && program_.free_names[idx] != name) ++idx;
    if (idx == program_.free_names.size()) program_.free_names.push_back(name);
    program_.nodes.push_back({CNode::Kind::Free, idx, 0});
    return static_cast<NodeId>(program_.nodes.size() - 1);
}

NodeId CTermBuilder::application(NodeId function, NodeId argument) {
    program_.nodes.push_back({CNode::Kind::Application, function, argument});
    return static_cast<NodeId>(program_.nodes.size() - 1);
}

NodeId CTermBuilder::abstraction(std::uint32_t arity, NodeId body) {
    program_.nodes.push_back({CNode::Kind::Abstraction, arity, body});
    return static_cast<NodeId>(program_.nodes.size() - 1);
}

CTerm CTermBuilder::build(NodeId root) && {
    compute_sizes(program_);
    return CTerm(std::make_shared<const Program>(std::move(program_)), root);
}

// ---------------------------------------------------------------------------
// Compilation
//
// Bound occurrences become <v, k>: v counts lambda groups outward from the
// occurrence (innermost group = 1), k is the binder position within that
// group (leftmost = 1). A later binder with the same name shadows an earlier
// one, in the same group or an outer one.

CTerm compile(const Term& t) {
    Program p;
    std::unordered_map<std::string, std::uint32_t> free_index;
    std::vector<std::vector<const std::string*>> groups;

    // term == nullptr closes the innermost group. Children are patched into
    // their parent by id since `nodes` may reallocate.
    struct Pending {
        const Term* term;
        NodeId parent;
        bool into_b;
    };
    std::vector<Pending> todo{{&t, kUnset, false}};
    NodeId root = kUnset;

    auto attach = [&](NodeId parent, bool into_b, NodeId child) {
        if (parent == kUnset) {
            root = child;
        } else if (into_b) {
            p.nodes[parent].b = child;
        } else {
            p.nodes[parent].a = child;
        }
    };
    auto push = [&](CNode n) {
        p.nodes.push_back(n);
        return static_cast<NodeId>(p.nodes.size() - 1);
    };

    while (!todo.empty()) {
        Pending cur = todo.back();
        todo.pop_back();
        if (!cur.term) {
            groups.pop_back();
            continue;
        }
        const Term& term = *cur.term;
        switch (term.kind()) {
        case Term::Kind::Variable: {
            NodeId id = kUnset;
            for (std::size_t g = groups.size(); g-- > 0 && id == kUnset;) {
                const auto& binders = groups[g];
                for (std::size_t k = binders.size(); k-- > 0;) {
                    if (*binders[k] == term.name()) {
                        auto v = static_cast<std::uint32_t>(groups.size() - g);
                        id = push({CNode::Kind::Bound, v, static_cast<std::uint32_t>(k + 1)});
                        break;
                    }
                }
            }
            if (id == kUnset) id = push({CNode::Kind::Free, intern(p, free_index, term.name()), 0});
            attach(cur.parent, cur.into_b, id);
            break;
        }
        case Term::Kind::Abstraction: {
            std::vector<const std::string*> binders;
            const Term* body = &term;
            while (body->is_abstraction()) {
                binders.push_back(&body->name());
                body = &body->body();
            }
            NodeId id = push({CNode::Kind::Abstraction, static_cast<std::uint32_t>(binders.size()), kUnset});
            attach(cur.parent, cur.into_b, id);
            groups.push_back(std::move(binders));
            todo.push_back({nullptr, kUnset, false});
            todo.push_back({body, id, true});
            break;
        }
        case Term::Kind::Application: {
            NodeId id = push({CNode::Kind::Application, kUnset, kUnset});
            attach(cur.parent, cur.into_b, id);
            todo.push_back({&term.argument(), id, true});
            todo.push_back({&term.function(), id, false});
            break;
        }
        }
    }

    compute_sizes(p);
    return CTerm(std::make_shared<const Program>(std::move(p)), root);
}

std::string to_string(const CTerm& c) {
    const Program& p = c.program();
    std::string out;
    constexpr NodeId kClose = kUnset;
    std::vector<NodeId> todo{c.root()};
    while (!todo.empty()) {
        NodeId id = todo.back();
        todo.pop_back();
        if (id == kClose) {
            out.push_back(')');
            continue;
        }
        const CNode& n = p[id];
        switch (n.kind) {
        case CNode::Kind::Bound:
            out += "[" + std::to_string(n.a) + ", " + std::to_string(n.b) + "]";
            break;
        case CNode::Kind::Free: out += p.free_names[n.a]; break;
        case CNode::Kind::Abstraction:
            out += "λ" + std::to_string(n.a);
            todo.push_back(n.b);
            break;
        case CNode::Kind::Application:
            out.push_back('(');
            todo.push_back(n.b);
            todo.push_back(kClose);
            todo.push_back(n.a);
            break;
        }
    }
    return out;
}

bool well_formed(const CTerm& c) {
    const Program& p = c.program();
    // Arities of the enclosing groups, innermost last; entries carry their depth.
    std::vector<std::uint32_t> arities;
    std::vector<std::pair<NodeId, std::size_t>> todo{{c.root(), 0}};
    while (!todo.empty()) {
        auto [id, depth] = todo.back();
        todo.pop_back();
        arities.resize(depth);
        const CNode& n = p[id];
        switch (n.kind) {
        case CNode::Kind::Bound:
            if (n.a < 1 || n.a > depth) return false;
            if (n.b < 1 || n.b > arities[depth - n.a]) return false;
            break;
        case CNode::Kind::Free:
            if (n.a >= p.free_names.size()) return false;
            break;
        case CNode::Kind::Abstraction:
            if (n.a < 1 || p[n.b].kind == CNode::Kind::Abstraction) return false;
            arities.push_back(n.a);
            todo.emplace_back(n.b, depth + 1);
            break;
        case CNode::Kind::Application:
            todo.emplace_back(n.b, depth);
            todo.emplace_back(n.a, depth);
            break;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Read-back

FreshNames::FreshNames(std::set<std::string> reserved) : reserved_(std::move(reserved)) {}

const std::string& FreshNames::operator()(std::uint32_t level) {
    if (level == 0) throw std::out_of_range("fresh name levels start at 1");
    while (names_.size() < level) {
        std::string candidate;
        do {
            candidate = "v" + std::to_string(next_suffix_++);
        } while (reserved_.count(candidate));
        names_.push_back(std::move(candidate));
    }
    return names_[level - 1];
}

namespace {

Term decompile_node(const Program& p, NodeId id, std::vector<std::uint32_t>& group_first_level,
                    std::uint32_t level, FreshNames& names) {
    const CNode& n = p[id];
    switch (n.kind) {
    case CNode::Kind::Bound: {
        if (n.a < 1 || n.a > group_first_level.size()) throw std::out_of_range("bound variable escapes its scope");
        std::uint32_t first = group_first_level[group_first_level.size() - n.a];
        return Term::variable(names(first + n.b - 1));
    }
    case CNode::Kind::Free: return Term::variable(p.free_names[n.a]);
    case CNode::Kind::Application:
        return Term::application(decompile_node(p, n.a, group_first_level, level, names),
                                 decompile_node(p, n.b, group_first_level, level, names));
    case CNode::Kind::Abstraction: {
        group_first_level.push_back(level + 1);
        Term body = decompile_node(p, n.b, group_first_level, level + n.a, names);
        group_first_level.pop_back();
        for (std::uint32_t i = n.a; i >= 1; --i) body = Term::abstraction(names(level + i), std::move(body));
        return body;
    }
    }
    throw std::logic_error("unreachable");
}

}  // namespace

Term decompile(const CTerm& c, const std::set<std::string>& used_names) {
    std::set<std::string> reserved = used_names;
    reserved.insert(c.program().free_names.begin(), c.program().free_names.end());
    FreshNames names(std::move(reserved));
    std::vector<std::uint32_t> groups;
    return decompile_node(c.program(), c.root(), groups, 0, names);
}

// ---------------------------------------------------------------------------

namespace {

// Position of the innermost binder named `name`, counted from the outermost
// binder; -1 when free.
long binder_position(const std::vector<const std::string*>& scope, const std::string& name) {
    for (std::size_t i = scope.size(); i-- > 0;)
        if (*scope[i] == name) return static_cast<long>(i);
    return -1;
}

bool alpha_rec(const Term& a, const Term& b, std::vector<const std::string*>& sa, std::vector<const std::string*>& sb) {
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
    case Term::Kind::Variable: {
        long pa = binder_position(sa, a.name());
        long pb = binder_position(sb, b.name());
        if (pa != pb) return false;
        return pa >= 0 || a.name() == b.name();
    }
    case Term::Kind::Abstraction: {
        sa.push_back(&a.name());
        sb.push_back(&b.name());
        bool eq = alpha_rec(a.body(), b.body(), sa, sb);
        sa.pop_back();
        sb.pop_back();
        return eq;
    }
    case Term::Kind::Application:
        return alpha_rec(a.function(), b.function(), sa, sb) && alpha_rec(a.argument(), b.argument(), sa, sb);
    }
    return false;
}

}  // namespace

bool alpha_equivalent(const Term& a, const Term& b) {
    std::vector<const std::string*> sa, sb;
    return alpha_rec(a, b, sa, sb);
}

}  // namespace krivine
