#pragma once

// Manager/worker evaluation. The machine runs sequentially until a head
// variable with several argument closures appears; those arguments are then
// normalized as independent tasks and their streams are stitched back in
// spine order.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "krivine/machine.hpp"

namespace krivine {

using TaskId = std::uint64_t;

struct ParallelOptions {
    /// Pool size; 1 means purely sequential evaluation.
    std::size_t workers = default_workers();
    /// Minimum argument size (compiled nodes, after following variable
    /// indirections) worth a task. 0 dispatches every argument.
    std::uint32_t granularity = 16;
    /// Collect each task's whole result before forwarding it.
    bool buffered = false;

    static std::size_t default_workers();
};

enum class TaskStatus { Pending, Running, Done, BudgetExhausted, Cancelled, Failed };

const char* to_string(TaskStatus s);

/// Reply channel of one task: tokens stream in as the worker produces them.
class TaskChannel {
public:
    void push(std::vector<OutputToken>& batch);
    void close(TaskStatus status, std::uint64_t steps, TaskId failed_task = 0, std::string error = {});

    /// Moves newly arrived tokens into `out`. Blocks until there is something
    /// new or the channel is closed; returns false once closed and drained.
    /// With `until_closed`, waits for the close and then returns everything.
    bool take(std::vector<OutputToken>& out, bool until_closed = false);

    bool closed() const;
    TaskStatus status() const;
    std::uint64_t steps() const;
    TaskId failed_task() const;
    std::string error() const;

private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::vector<OutputToken> pending_;
    bool closed_ = false;
    TaskStatus status_ = TaskStatus::Pending;
    std::uint64_t steps_ = 0;
    TaskId failed_task_ = 0;
    std::string error_;
};

/// Shared by every task of one evaluation.
struct EvalContext {
    std::shared_ptr<const Program> program;
    ParallelOptions options;
    std::atomic<bool> cancel{false};
    Interrupt external;

    Interrupt interrupt() const { return Interrupt{&cancel, external.primary}; }
};

struct Task {
    TaskId id = 0;
    Closure closure;
    std::uint32_t level = 0;
    StepBudget budget;
    std::shared_ptr<TaskChannel> reply_to;
};

struct TaskResult {
    TaskId id = 0;
    std::vector<OutputToken> tokens;
    TaskStatus status = TaskStatus::Pending;
    std::uint64_t steps = 0;
};

/// Snapshot of the manager's info table.
struct ManagerInfo {
    std::map<TaskId, TaskStatus> active_tasks;
    std::size_t worker_count = 0;
};

class WorkerError : public std::runtime_error {
public:
    WorkerError(TaskId task, const std::string& what)
        : std::runtime_error("task " + std::to_string(task) + " failed: " + what), task_(task) {}
    TaskId task_id() const { return task_; }

private:
    TaskId task_;
};

class Manager;

/// A submitted task. Whoever claims it first (a pool thread, or a waiter that
/// finds it still pending) runs it.
class TaskHandle {
public:
    TaskId id() const { return task_.id; }
    const std::shared_ptr<TaskChannel>& channel() const { return task_.reply_to; }
    bool try_claim() { return !claimed_.exchange(true, std::memory_order_acq_rel); }

private:
    friend class Manager;
    Task task_;
    std::shared_ptr<EvalContext> context_;
    std::atomic<bool> claimed_{false};
};

class Manager {
public:
    explicit Manager(std::size_t workers = ParallelOptions::default_workers());
    ~Manager();

    Manager(const Manager&) = delete;
    Manager& operator=(const Manager&) = delete;

    /// Enqueues `task` (its id is assigned here) and records it as active.
    std::shared_ptr<TaskHandle> submit(std::shared_ptr<EvalContext> context, Task task);

    /// Runs a claimed task on the calling thread, streaming into `sink`.
    /// Returns the final status and step count; never throws for task errors.
    TaskStatus execute(TaskHandle& handle, TokenSink& sink, std::uint64_t& steps, TaskId& failed, std::string& error);

    /// Forwards the task's tokens to `sink` in order: runs it inline if still
    /// pending (and `allow_inline`), otherwise drains its channel.
    TaskStatus await(TaskHandle& handle, TokenSink& sink, bool buffered, bool allow_inline, std::uint64_t& steps,
                     TaskId& failed, std::string& error);

    /// Waits for a task and returns its whole result.
    TaskResult collect(TaskHandle& handle);

    /// Cancels every active task; workers stop at their next transition.
    void cancel_all();

    ManagerInfo info() const;
    std::size_t worker_count() const { return pool_.size(); }
    std::uint64_t tasks_submitted() const { return next_id_.load() - 1; }

private:
    void worker_loop();
    void set_status(TaskId id, TaskStatus s);
    void retire(TaskId id);

    std::vector<std::thread> pool_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::shared_ptr<TaskHandle>> queue_;
    std::map<TaskId, std::pair<TaskStatus, std::shared_ptr<EvalContext>>> active_;
    bool stopping_ = false;
    std::atomic<TaskId> next_id_{1};
};

/// Concatenates ordered argument results under `head`:
/// HeadVar(head, n), then ArgStart ... ArgEnd around each result. A result
/// that did not finish is closed with ArgEnds for its open arguments.
std::vector<OutputToken> combine(Var head, const std::vector<TaskResult>& results);

struct ParallelRun {
    StreamStatus status = StreamStatus::Done;
    std::uint64_t steps = 0;
    TaskId root_task = 0;
};

/// Streams the normal form of `t` evaluated on `manager`. The root is itself
/// a task, normally claimed and run by the calling thread. Throws
/// WorkerError if any task fails.
ParallelRun par_normalize_stream(const CTerm& t, Manager& manager, const ParallelOptions& options, StepBudget budget,
                                 TokenSink& sink, Interrupt interrupt = {});

Normalized par_normalize(const Term& t, Manager& manager, const ParallelOptions& options,
                         StepBudget budget = StepBudget::unlimited(), Interrupt interrupt = {});

/// Convenience overload with a temporary pool of `workers` threads.
Normalized par_normalize(const Term& t, std::size_t workers, StepBudget budget = StepBudget::unlimited());

}  // namespace krivine
