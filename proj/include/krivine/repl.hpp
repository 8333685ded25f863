#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "krivine/machine.hpp"
#include "krivine/parallel.hpp"

namespace krivine {

enum class EvalMode { Sequential, Parallel };

struct ReplEvent {
    enum class Kind { Line, Interrupt, Eof, SetMode, SetWorkers, SetBudget, Diagnostic };
    Kind kind = Kind::Line;
    std::string text;  // Line: the term; Diagnostic: the message
    EvalMode mode = EvalMode::Sequential;
    std::size_t workers = 1;
    StepBudget budget;

    static ReplEvent line(std::string text) { return {Kind::Line, std::move(text)}; }
    static ReplEvent interrupt() { return {Kind::Interrupt}; }
    static ReplEvent eof() { return {Kind::Eof}; }
};

struct Session {
    EvalMode mode = EvalMode::Sequential;
    std::size_t workers = ParallelOptions::default_workers();
    StepBudget budget;
    std::uint32_t granularity = 16;
    bool buffered = false;
    /// Printed before each line when non-empty (interactive use).
    std::string prompt;
    std::vector<std::string> history;
};

/// `:q`, `:mode seq|par`, `:workers N`, `:steps N|off`. Returns nullopt for
/// lines that are not directives; unknown or malformed directives yield a
/// Diagnostic event.
std::optional<ReplEvent> handle_directive(std::string_view line);

/// Events flowing from the input activity to the evaluation activity. An
/// Interrupt raises the cancel flag immediately, so a running evaluation
/// sees it without waiting for the event to be dequeued; the flag is lowered
/// when the event itself is dequeued.
class EventQueue {
public:
    void push(ReplEvent e);
    ReplEvent pop();

    void interrupt() noexcept { cancel_.store(true, std::memory_order_relaxed); }
    std::atomic<bool>& cancel_flag() { return cancel_; }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<ReplEvent> events_;
    std::atomic<bool> cancel_{false};
};

/// Reads lines from `in` until end of input, translating directives; ends
/// with Eof.
void feed_lines(std::istream& in, EventQueue& queue);

class Repl {
public:
    Repl(Session session, std::ostream& out, std::ostream& err);

    /// Processes events until Eof. Returns 0.
    int run(EventQueue& events);

    const Session& session() const { return session_; }
    /// Pool used in parallel mode; null until the first parallel evaluation.
    Manager* manager() { return manager_.get(); }

private:
    void evaluate(const std::string& line, EventQueue& events);

    Session session_;
    std::ostream& out_;
    std::ostream& err_;
    std::unique_ptr<Manager> manager_;
};

int run_repl(Session& session, EventQueue& events, std::ostream& out, std::ostream& err);

}  // namespace krivine
