#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "krivine/compile.hpp"

namespace krivine {

// ---------------------------------------------------------------------------
// Heap objects

class Environment;

/// Counted reference to an environment. The null reference is the empty root
/// environment.
class EnvRef {
public:
    EnvRef() = default;
    EnvRef(const EnvRef& other) noexcept;
    EnvRef(EnvRef&& other) noexcept : env_(other.env_) { other.env_ = nullptr; }
    EnvRef& operator=(const EnvRef& other) noexcept;
    EnvRef& operator=(EnvRef&& other) noexcept;
    ~EnvRef();

    const Environment* get() const { return env_; }
    const Environment* operator->() const { return env_; }
    explicit operator bool() const { return env_ != nullptr; }
    bool is_root() const { return env_ == nullptr; }

private:
    friend class Environment;
    explicit EnvRef(Environment* adopted) : env_(adopted) {}
    Environment* detach() noexcept {
        Environment* e = env_;
        env_ = nullptr;
        return e;
    }

    Environment* env_ = nullptr;
};

/// Term references with this bit set denote a read-back variable (a binder
/// opened while normalizing under a lambda); the low bits hold its level.
inline constexpr std::uint32_t kFreshBit = 0x8000'0000u;

/// (&t, e): a compiled subterm and the environment giving its bound
/// variables meaning.
struct Closure {
    std::uint32_t term = 0;
    EnvRef env;

    bool is_fresh() const { return (term & kFreshBit) != 0; }
    std::uint32_t fresh_level() const { return term & ~kFreshBit; }
    static Closure fresh(std::uint32_t level) { return Closure{level | kFreshBit, EnvRef{}}; }
};

/// (e, ξ1, ..., ξn). Immutable once published; shared between machines and
/// threads by reference count. Release of long chains is iterative.
class Environment {
public:
    Environment(const Environment&) = delete;
    Environment& operator=(const Environment&) = delete;

    /// New frame over `parent`. ξ1 takes the top of `stack` (its back), ξ2 the
    /// next entry, and so on; the `n` entries are removed from `stack`.
    static EnvRef pop_frame(EnvRef parent, std::vector<Closure>& stack, std::uint32_t n);

    /// Frame binding the `m` top stack entries followed by read-back variables
    /// for levels first_level .. first_level + (n - m) - 1.
    static EnvRef pad_frame(EnvRef parent, std::vector<Closure>& stack, std::uint32_t n, std::uint32_t first_level);

    const EnvRef& parent() const { return parent_; }
    std::span<const Closure> closures() const { return {data(), size_}; }

private:
    friend class EnvRef;
    explicit Environment(EnvRef parent, std::uint32_t size) : size_(size), parent_(std::move(parent)) {}
    ~Environment() = default;

    static Environment* allocate(EnvRef parent, std::uint32_t size);
    static void destroy(Environment* e);

    Closure* data() { return reinterpret_cast<Closure*>(this + 1); }
    const Closure* data() const { return reinterpret_cast<const Closure*>(this + 1); }

    mutable std::atomic<std::uint32_t> refs_{1};
    std::uint32_t size_;
    EnvRef parent_;
};

static_assert(sizeof(Environment) % alignof(Closure) == 0);

// ---------------------------------------------------------------------------
// Machine

struct StepBudget {
    static constexpr std::uint64_t kUnlimited = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t max_steps = kUnlimited;

    static StepBudget unlimited() { return {}; }
    static StepBudget steps(std::uint64_t n) { return {n}; }
    bool is_unlimited() const { return max_steps == kUnlimited; }
};

/// Registers T, E, S. The top of the stack is `stack.back()`.
struct MachineState {
    std::uint32_t control = 0;
    EnvRef env;
    std::vector<Closure> stack;

    static MachineState start(const CTerm& t) { return MachineState{t.root(), EnvRef{}, {}}; }
};

enum class StepOutcome {
    Continue,
    HaltFree,    // control is a free variable
    HaltFresh,   // control is a read-back variable
    HaltLambda,  // abstraction with fewer closures on the stack than its arity
};

/// Raised when a variable fetch walks past the root environment. Outputs of
/// `compile` never trigger it.
class IndexError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Exactly one transition:
///   (t)u            push (u, E), continue with t
///   λn t, |S| >= n  pop ξ1..ξn into a new frame over E, continue with t
///   <v, k>          (T, E) := k-th closure of the frame v - 1 links above E
StepOutcome step(const Program& program, MachineState& state);

// ---------------------------------------------------------------------------
// Output stream

/// Head variable of a read-back spine.
struct Var {
    enum class Kind : std::uint8_t { Free, Fresh };
    Kind kind = Kind::Free;
    std::uint32_t index = 0;  // Free: Program::free_names index; Fresh: level (>= 1)

    friend bool operator==(const Var&, const Var&) = default;
};

/// One increment of the streamed normal form.
///   HeadLambda: `count` binders, levels var.index .. var.index + count - 1
///   HeadVar:    head variable `var` applied to `count` arguments
///   ArgStart / ArgEnd: bracket each argument, left to right
///   Truncated:  the enclosing subterm stops here (budget or cancellation)
struct OutputToken {
    enum class Kind : std::uint8_t { HeadLambda, HeadVar, ArgStart, ArgEnd, Truncated };
    Kind kind;
    std::uint32_t count = 0;
    Var var;

    friend bool operator==(const OutputToken&, const OutputToken&) = default;
};

enum class StreamStatus { Done, BudgetExhausted, Cancelled };

class TokenSink {
public:
    virtual ~TokenSink() = default;
    virtual void put(const OutputToken& token) = 0;
    /// Called periodically while the machine runs between tokens.
    virtual void tick() {}
};

class VectorSink final : public TokenSink {
public:
    void put(const OutputToken& token) override { tokens.push_back(token); }
    std::vector<OutputToken> tokens;
};

class CountingSink final : public TokenSink {
public:
    void put(const OutputToken&) override { ++count; }
    std::uint64_t count = 0;
};

/// Cancellation flags polled between transitions. Either may be null.
struct Interrupt {
    const std::atomic<bool>* primary = nullptr;
    const std::atomic<bool>* secondary = nullptr;

    bool requested() const {
        return (primary && primary->load(std::memory_order_relaxed)) ||
               (secondary && secondary->load(std::memory_order_relaxed));
    }
};

/// Krivine machine with read-back: drives closures to head form and streams
/// the beta-normal form, descending into spine arguments left to right.
class Reducer {
public:
    Reducer(const Program& program, TokenSink& sink, Interrupt interrupt = {});
    virtual ~Reducer() = default;

    /// Stream the normal form of `c`, which lives under `level` read-back
    /// binders. A non-Done stream ends with a Truncated token.
    StreamStatus run(const Closure& c, std::uint32_t level, StepBudget budget);

    std::uint64_t steps_used() const { return used_; }

protected:
    /// Hook at a head variable with two or more arguments (`args` in spine
    /// order). An override that handles the spine must emit every token for
    /// it, add the steps it spent to `consumed`, and return true.
    virtual bool split(Var head, std::span<const Closure> args, std::uint32_t level, std::uint64_t remaining,
                       std::uint64_t& consumed, StreamStatus& status);

    const Program& program_;
    TokenSink& sink_;
    Interrupt interrupt_;

private:
    struct Item {
        enum class Kind : std::uint8_t { Root, Arg, End } kind;
        Closure closure;
        std::uint32_t level;
    };

    std::vector<Item> work_;
    std::vector<Closure> args_;
    MachineState state_;
    std::uint64_t used_ = 0;
};

StreamStatus normalize_stream(const CTerm& t, StepBudget budget, TokenSink& sink, Interrupt interrupt = {});

// ---------------------------------------------------------------------------
// Rendering

/// Writes tokens as Krivine notation. Read-back binders are named by level
/// (v1, v2, ... avoiding the program's free names).
class Renderer final : public TokenSink {
public:
    /// With `live`, the stream is flushed after every HeadVar and ArgEnd.
    Renderer(const Program& program, std::ostream& out, bool live = false);

    void put(const OutputToken& token) override;

private:
    const Program& program_;
    std::ostream& out_;
    bool live_;
    FreshNames names_;
};

std::string render(const Program& program, std::span<const OutputToken> tokens);

/// Rebuilds the term spelled by a complete (Truncated-free) token stream.
Term read_back(const Program& program, std::span<const OutputToken> tokens);

/// Result of a whole normalization.
struct Normalized {
    StreamStatus status;
    std::optional<Term> term;  // set when status == Done
    std::string rendered;      // full text, or the prefix ending in "..."
    std::uint64_t steps = 0;
};

Normalized normalize(const Term& t, StepBudget budget = StepBudget::unlimited(), Interrupt interrupt = {});

/// True when no subterm has the shape (\x t)u.
bool is_normal(const Term& t);

}  // namespace krivine
