#include "krivine/machine.hpp"

#include <algorithm>
#include <new>
#include <ostream>
#include <sstream>

namespace krivine {

// ---------------------------------------------------------------------------
// EnvRef / Environment

EnvRef::EnvRef(const EnvRef& other) noexcept : env_(other.env_) {
    if (env_) env_->refs_.fetch_add(1, std::memory_order_relaxed);
}

EnvRef& EnvRef::operator=(const EnvRef& other) noexcept {
    EnvRef copy(other);
    std::swap(env_, copy.env_);
    return *this;
}

EnvRef& EnvRef::operator=(EnvRef&& other) noexcept {
    if (this != &other) {
        EnvRef old(std::move(*this));
        env_ = other.detach();
    }
    return *this;
}

EnvRef::~EnvRef() {
    if (env_ && env_->refs_.fetch_sub(1, std::memory_order_acq_rel) == 1) Environment::destroy(env_);
}

Environment* Environment::allocate(EnvRef parent, std::uint32_t size) {
    void* raw = ::operator new(sizeof(Environment) + size * sizeof(Closure));
    return new (raw) Environment(std::move(parent), size);
}

EnvRef Environment::pop_frame(EnvRef parent, std::vector<Closure>& stack, std::uint32_t n) {
    Environment* e = allocate(std::move(parent), n);
    Closure* slots = e->data();
    for (std::uint32_t i = 0; i < n; ++i) {
        new (slots + i) Closure(std::move(stack.back()));
        stack.pop_back();
    }
    return EnvRef(e);
}

EnvRef Environment::pad_frame(EnvRef parent, std::vector<Closure>& stack, std::uint32_t n, std::uint32_t first_level) {
    Environment* e = allocate(std::move(parent), n);
    Closure* slots = e->data();
    std::uint32_t i = 0;
    for (; i < n && !stack.empty(); ++i) {
        new (slots + i) Closure(std::move(stack.back()));
        stack.pop_back();
    }
    for (std::uint32_t level = first_level; i < n; ++i, ++level) new (slots + i) Closure(Closure::fresh(level));
    return EnvRef(e);
}

void Environment::destroy(Environment* e) {
    thread_local std::vector<Environment*> pending;
    thread_local bool draining = false;

    pending.push_back(e);
    if (draining) return;
    draining = true;
    auto unref = [](EnvRef& r) {
        Environment* child = r.detach();
        if (child && child->refs_.fetch_sub(1, std::memory_order_acq_rel) == 1) pending.push_back(child);
    };
    while (!pending.empty()) {
        Environment* cur = pending.back();
        pending.pop_back();
        unref(cur->parent_);
        Closure* slots = cur->data();
        for (std::uint32_t i = 0; i < cur->size_; ++i) {
            unref(slots[i].env);
            slots[i].~Closure();
        }
        cur->~Environment();
        ::operator delete(cur);
    }
    draining = false;
}

// ---------------------------------------------------------------------------
// Transitions

StepOutcome step(const Program& program, MachineState& s) {
    if (s.control & kFreshBit) return StepOutcome::HaltFresh;
    const CNode& n = program[s.control];
    switch (n.kind) {
    case CNode::Kind::Application:
        s.stack.push_back(Closure{n.b, s.env});
        s.control = n.a;
        return StepOutcome::Continue;
    case CNode::Kind::Abstraction:
        if (s.stack.size() < n.a) return StepOutcome::HaltLambda;
        s.env = Environment::pop_frame(std::move(s.env), s.stack, n.a);
        s.control = n.b;
        return StepOutcome::Continue;
    case CNode::Kind::Bound: {
        const Environment* e = s.env.get();
        for (std::uint32_t up = 1; up < n.a && e; ++up) e = e->parent().get();
        if (!e || n.b < 1 || n.b > e->closures().size()) throw IndexError("variable <" + std::to_string(n.a) + ", " + std::to_string(n.b) + "> is not bound in the environment chain");
        const Closure& c = e->closures()[n.b - 1];
        s.control = c.term;
        s.env = c.env;  // copy before the old env (which may own c) is released
        return StepOutcome::Continue;
    }
    case CNode::Kind::Free: return StepOutcome::HaltFree;
    }
    return StepOutcome::HaltFree;
}

// ---------------------------------------------------------------------------
// Reducer

Reducer::Reducer(const Program& program, TokenSink& sink, Interrupt interrupt)
    : program_(program), sink_(sink), interrupt_(interrupt) {}

bool Reducer::split(Var, std::span<const Closure>, std::uint32_t, std::uint64_t, std::uint64_t&, StreamStatus&) {
    return false;
}

StreamStatus Reducer::run(const Closure& c, std::uint32_t level, StepBudget budget) {
    constexpr std::uint64_t kTickEvery = 4096;
    const std::uint64_t start = used_;
    const std::uint64_t limit = budget.is_unlimited() ? StepBudget::kUnlimited : start + budget.max_steps;
    StreamStatus overall = StreamStatus::Done;

    work_.clear();
    work_.push_back(Item{Item::Kind::Root, c, level});

    while (!work_.empty()) {
        Item item = std::move(work_.back());
        work_.pop_back();
        if (item.kind == Item::Kind::End) {
            sink_.put({OutputToken::Kind::ArgEnd});
            continue;
        }
        if (item.kind == Item::Kind::Arg) sink_.put({OutputToken::Kind::ArgStart});

        MachineState& s = state_;
        s.control = item.closure.term;
        s.env = std::move(item.closure.env);
        s.stack.clear();
        std::uint32_t lvl = item.level;

        for (;;) {
            if (used_ >= limit || interrupt_.requested()) {
                sink_.put({OutputToken::Kind::Truncated});
                s.env = EnvRef{};
                s.stack.clear();
                work_.clear();
                return used_ >= limit ? StreamStatus::BudgetExhausted : StreamStatus::Cancelled;
            }
            StepOutcome out = step(program_, s);
            if (out == StepOutcome::Continue) {
                if (++used_ % kTickEvery == 0) sink_.tick();
                continue;
            }
            if (out == StepOutcome::HaltLambda) {
                // Under-applied lambda group: bind what the stack has, open
                // read-back binders for the rest and continue into the body.
                const CNode& n = program_[s.control];
                auto missing = static_cast<std::uint32_t>(n.a - s.stack.size());
                sink_.put({OutputToken::Kind::HeadLambda, missing, Var{Var::Kind::Fresh, lvl + 1}});
                s.env = Environment::pad_frame(std::move(s.env), s.stack, n.a, lvl + 1);
                s.control = n.b;
                lvl += missing;
                ++used_;
                continue;
            }

            Var head = out == StepOutcome::HaltFree ? Var{Var::Kind::Free, program_[s.control].a}
                                                    : Var{Var::Kind::Fresh, s.control & ~kFreshBit};
            s.env = EnvRef{};
            args_.assign(std::make_move_iterator(s.stack.rbegin()), std::make_move_iterator(s.stack.rend()));
            s.stack.clear();

            if (args_.size() >= 2) {
                std::vector<Closure> args = std::move(args_);
                args_.clear();
                std::uint64_t consumed = 0;
                StreamStatus sub = StreamStatus::Done;
                // split() may call run() on a nested reducer only, never on this one.
                if (split(head, args, lvl, limit == StepBudget::kUnlimited ? limit : limit - used_, consumed, sub)) {
                    used_ += consumed;
                    if (sub == StreamStatus::Cancelled) {
                        work_.clear();
                        return sub;
                    }
                    if (sub == StreamStatus::BudgetExhausted) overall = sub;
                    break;
                }
                args_ = std::move(args);
            }

            sink_.put({OutputToken::Kind::HeadVar, static_cast<std::uint32_t>(args_.size()), head});
            for (std::size_t i = args_.size(); i-- > 0;) {
                work_.push_back(Item{Item::Kind::End, Closure{}, 0});
                work_.push_back(Item{Item::Kind::Arg, std::move(args_[i]), lvl});
            }
            args_.clear();
            break;
        }
    }
    return overall;
}

StreamStatus normalize_stream(const CTerm& t, StepBudget budget, TokenSink& sink, Interrupt interrupt) {
    Reducer r(t.program(), sink, interrupt);
    return r.run(Closure{t.root(), EnvRef{}}, 0, budget);
}

// ---------------------------------------------------------------------------
// Rendering and read-back

namespace {

std::set<std::string> free_name_set(const Program& p) { return {p.free_names.begin(), p.free_names.end()}; }

}  // namespace

Renderer::Renderer(const Program& program, std::ostream& out, bool live)
    : program_(program), out_(out), live_(live), names_(free_name_set(program)) {}

void Renderer::put(const OutputToken& t) {
    switch (t.kind) {
    case OutputToken::Kind::HeadLambda:
        for (std::uint32_t i = 0; i < t.count; ++i) out_ << '\\' << names_(t.var.index + i);
        break;
    case OutputToken::Kind::HeadVar:
        for (std::uint32_t i = 0; i < t.count; ++i) out_ << '(';
        if (t.var.kind == Var::Kind::Free)
            out_ << program_.free_names[t.var.index];
        else
            out_ << names_(t.var.index);
        if (live_) out_.flush();
        break;
    case OutputToken::Kind::ArgStart: out_ << ')'; break;
    case OutputToken::Kind::ArgEnd:
        if (live_) out_.flush();
        break;
    case OutputToken::Kind::Truncated: out_ << "..."; break;
    }
}

std::string render(const Program& program, std::span<const OutputToken> tokens) {
    std::ostringstream out;
    Renderer r(program, out);
    for (const auto& t : tokens) r.put(t);
    return out.str();
}

Term read_back(const Program& program, std::span<const OutputToken> tokens) {
    FreshNames names(free_name_set(program));
    struct Frame {
        std::vector<std::string> binders;
        std::optional<Term> acc;
    };
    std::vector<Frame> frames(1);
    auto finish = [](Frame& f) {
        if (!f.acc) throw std::invalid_argument("token stream has an argument without a head");
        Term t = std::move(*f.acc);
        for (auto it = f.binders.rbegin(); it != f.binders.rend(); ++it) t = Term::abstraction(*it, std::move(t));
        return t;
    };
    for (const auto& t : tokens) {
        switch (t.kind) {
        case OutputToken::Kind::HeadLambda:
            for (std::uint32_t i = 0; i < t.count; ++i) frames.back().binders.push_back(names(t.var.index + i));
            break;
        case OutputToken::Kind::HeadVar:
            frames.back().acc = Term::variable(t.var.kind == Var::Kind::Free ? program.free_names[t.var.index]
                                                                              : names(t.var.index));
            break;
        case OutputToken::Kind::ArgStart: frames.emplace_back(); break;
        case OutputToken::Kind::ArgEnd: {
            if (frames.size() < 2) throw std::invalid_argument("unbalanced ArgEnd in token stream");
            Term arg = finish(frames.back());
            frames.pop_back();
            Frame& parent = frames.back();
            if (!parent.acc) throw std::invalid_argument("argument before head in token stream");
            parent.acc = Term::application(std::move(*parent.acc), std::move(arg));
            break;
        }
        case OutputToken::Kind::Truncated: throw std::invalid_argument("cannot read back a truncated token stream");
        }
    }
    if (frames.size() != 1) throw std::invalid_argument("unterminated argument in token stream");
    return finish(frames.back());
}

Normalized normalize(const Term& t, StepBudget budget, Interrupt interrupt) {
    CTerm c = compile(t);
    VectorSink sink;
    Reducer r(c.program(), sink, interrupt);
    Normalized out;
    out.status = r.run(Closure{c.root(), EnvRef{}}, 0, budget);
    out.steps = r.steps_used();
    out.rendered = render(c.program(), sink.tokens);
    if (out.status == StreamStatus::Done) out.term = read_back(c.program(), sink.tokens);
    return out;
}

bool is_normal(const Term& t) {
    std::vector<const Term*> todo{&t};
    while (!todo.empty()) {
        const Term* cur = todo.back();
        todo.pop_back();
        switch (cur->kind()) {
        case Term::Kind::Variable: break;
        case Term::Kind::Abstraction: todo.push_back(&cur->body()); break;
        case Term::Kind::Application:
            if (cur->function().is_abstraction()) return false;
            todo.push_back(&cur->function());
            todo.push_back(&cur->argument());
            break;
        }
    }
    return true;
}

}  // namespace krivine
