#include "krivine/parallel.hpp"

#include <algorithm>

namespace krivine {

std::size_t ParallelOptions::default_workers() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

const char* to_string(TaskStatus s) {
    switch (s) {
    case TaskStatus::Pending: return "pending";
    case TaskStatus::Running: return "running";
    case TaskStatus::Done: return "done";
    case TaskStatus::BudgetExhausted: return "budget-exhausted";
    case TaskStatus::Cancelled: return "cancelled";
    case TaskStatus::Failed: return "failed";
    }
    return "?";
}

namespace {

TaskStatus from_stream(StreamStatus s) {
    switch (s) {
    case StreamStatus::Done: return TaskStatus::Done;
    case StreamStatus::BudgetExhausted: return TaskStatus::BudgetExhausted;
    case StreamStatus::Cancelled: return TaskStatus::Cancelled;
    }
    return TaskStatus::Failed;
}

StreamStatus to_stream(TaskStatus s) {
    switch (s) {
    case TaskStatus::BudgetExhausted: return StreamStatus::BudgetExhausted;
    case TaskStatus::Cancelled: return StreamStatus::Cancelled;
    default: return StreamStatus::Done;
    }
}

// Batches tokens into a task channel.
class ChannelSink final : public TokenSink {
public:
    explicit ChannelSink(TaskChannel& channel) : channel_(channel) { batch_.reserve(kBatch); }

    void put(const OutputToken& t) override {
        batch_.push_back(t);
        if (batch_.size() >= kBatch) flush();
    }
    void tick() override { flush(); }
    void flush() {
        if (!batch_.empty()) channel_.push(batch_);
    }

private:
    static constexpr std::size_t kBatch = 4096;
    TaskChannel& channel_;
    std::vector<OutputToken> batch_;
};

// Forwards tokens and remembers how many arguments are still open.
class DepthSink final : public TokenSink {
public:
    explicit DepthSink(TokenSink& inner) : inner_(inner) {}

    void put(const OutputToken& t) override {
        if (t.kind == OutputToken::Kind::ArgStart) ++open;
        if (t.kind == OutputToken::Kind::ArgEnd) --open;
        inner_.put(t);
    }
    void tick() override { inner_.tick(); }

    std::size_t open = 0;

private:
    TokenSink& inner_;
};

// Effective size of the term a closure denotes: variable indirections are
// followed first, since a bare variable may stand for a large argument.
std::uint32_t denoted_size(const Program& p, const Closure& c) {
    std::uint32_t term = c.term;
    const Environment* env = c.env.get();
    for (;;) {
        if (term & kFreshBit) return 1;
        const CNode& n = p[term];
        if (n.kind != CNode::Kind::Bound) return p.sizes[term];
        const Environment* e = env;
        for (std::uint32_t up = 1; up < n.a && e; ++up) e = e->parent().get();
        if (!e || n.b > e->closures().size()) return 1;
        const Closure& next = e->closures()[n.b - 1];
        term = next.term;
        env = next.env.get();
    }
}

std::vector<StepBudget> divide(std::uint64_t remaining, std::size_t parts) {
    std::vector<StepBudget> shares(parts, StepBudget::unlimited());
    if (remaining == StepBudget::kUnlimited || parts == 0) return shares;
    std::uint64_t base = remaining / parts;
    for (auto& s : shares) s = StepBudget::steps(base);
    shares[0] = StepBudget::steps(base + remaining % parts);
    return shares;
}

class ParallelReducer final : public Reducer {
public:
    ParallelReducer(const Program& program, TokenSink& sink, Manager& manager, std::shared_ptr<EvalContext> ctx)
        : Reducer(program, sink, ctx->interrupt()), manager_(manager), ctx_(std::move(ctx)) {}

protected:
    bool split(Var head, std::span<const Closure> args, std::uint32_t level, std::uint64_t remaining,
               std::uint64_t& consumed, StreamStatus& status) override {
        const ParallelOptions& opts = ctx_->options;
        if (opts.workers <= 1) return false;

        std::vector<bool> dispatch(args.size());
        std::size_t count = 0;
        for (std::size_t i = 0; i < args.size(); ++i) {
            dispatch[i] = denoted_size(program_, args[i]) >= opts.granularity;
            count += dispatch[i];
        }
        if (count < 2) return false;

        sink_.put({OutputToken::Kind::HeadVar, static_cast<std::uint32_t>(args.size()), head});
        auto shares = divide(remaining, args.size());

        std::vector<std::shared_ptr<TaskHandle>> handles(args.size());
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (!dispatch[i]) continue;
            handles[i] = manager_.submit(ctx_, Task{0, args[i], level, shares[i], std::make_shared<TaskChannel>()});
        }

        status = StreamStatus::Done;
        for (std::size_t i = 0; i < args.size(); ++i) {
            sink_.put({OutputToken::Kind::ArgStart});
            DepthSink out(sink_);
            TaskStatus ts;
            std::uint64_t steps = 0;
            if (handles[i]) {
                TaskId failed = 0;
                std::string error;
                ts = manager_.await(*handles[i], out, opts.buffered, true, steps, failed, error);
                if (ts == TaskStatus::Failed) {
                    drain(handles, i + 1);
                    throw WorkerError(failed, error);
                }
            } else {
                ParallelReducer inline_reducer(program_, out, manager_, ctx_);
                ts = from_stream(inline_reducer.run(args[i], level, shares[i]));
                steps = inline_reducer.steps_used();
            }
            consumed += steps;
            for (; out.open > 0; --out.open) sink_.put({OutputToken::Kind::ArgEnd});
            sink_.put({OutputToken::Kind::ArgEnd});
            if (ts == TaskStatus::Cancelled) {
                drain(handles, i + 1);
                status = StreamStatus::Cancelled;
                return true;
            }
            if (ts == TaskStatus::BudgetExhausted) status = StreamStatus::BudgetExhausted;
        }
        return true;
    }

private:
    // Waits out the tasks from `first` on, discarding their output, so that
    // none outlives the evaluation that spawned it.
    void drain(const std::vector<std::shared_ptr<TaskHandle>>& handles, std::size_t first) {
        ctx_->cancel.store(true);
        CountingSink discard;
        for (std::size_t j = first; j < handles.size(); ++j) {
            if (!handles[j]) continue;
            std::uint64_t steps = 0;
            TaskId failed = 0;
            std::string error;
            manager_.await(*handles[j], discard, true, true, steps, failed, error);
        }
    }

    Manager& manager_;
    std::shared_ptr<EvalContext> ctx_;
};

}  // namespace

// ---------------------------------------------------------------------------
// TaskChannel

void TaskChannel::push(std::vector<OutputToken>& batch) {
    {
        std::lock_guard lock(mu_);
        if (pending_.empty()) {
            pending_.swap(batch);
        } else {
            pending_.insert(pending_.end(), batch.begin(), batch.end());
        }
    }
    batch.clear();
    cv_.notify_all();
}

void TaskChannel::close(TaskStatus status, std::uint64_t steps, TaskId failed_task, std::string error) {
    {
        std::lock_guard lock(mu_);
        closed_ = true;
        status_ = status;
        steps_ = steps;
        failed_task_ = failed_task;
        error_ = std::move(error);
    }
    cv_.notify_all();
}

bool TaskChannel::take(std::vector<OutputToken>& out, bool until_closed) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return closed_ || (!until_closed && !pending_.empty()); });
    if (pending_.empty()) return !closed_;
    if (out.empty()) {
        out.swap(pending_);
    } else {
        out.insert(out.end(), pending_.begin(), pending_.end());
        pending_.clear();
    }
    return true;
}

bool TaskChannel::closed() const {
    std::lock_guard lock(mu_);
    return closed_;
}

TaskStatus TaskChannel::status() const {
    std::lock_guard lock(mu_);
    return status_;
}

std::uint64_t TaskChannel::steps() const {
    std::lock_guard lock(mu_);
    return steps_;
}

TaskId TaskChannel::failed_task() const {
    std::lock_guard lock(mu_);
    return failed_task_;
}

std::string TaskChannel::error() const {
    std::lock_guard lock(mu_);
    return error_;
}

// ---------------------------------------------------------------------------
// Manager

Manager::Manager(std::size_t workers) {
    workers = std::max<std::size_t>(workers, 1);
    pool_.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) pool_.emplace_back([this] { worker_loop(); });
}

Manager::~Manager() {
    cancel_all();
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : pool_) t.join();
}

std::shared_ptr<TaskHandle> Manager::submit(std::shared_ptr<EvalContext> context, Task task) {
    auto handle = std::make_shared<TaskHandle>();
    task.id = next_id_.fetch_add(1);
    if (!task.reply_to) task.reply_to = std::make_shared<TaskChannel>();
    handle->task_ = std::move(task);
    handle->context_ = std::move(context);
    {
        std::lock_guard lock(mu_);
        active_[handle->id()] = {TaskStatus::Pending, handle->context_};
        queue_.push_back(handle);
    }
    cv_.notify_one();
    return handle;
}

void Manager::set_status(TaskId id, TaskStatus s) {
    std::lock_guard lock(mu_);
    if (auto it = active_.find(id); it != active_.end()) it->second.first = s;
}

void Manager::retire(TaskId id) {
    std::lock_guard lock(mu_);
    active_.erase(id);
}

TaskStatus Manager::execute(TaskHandle& handle, TokenSink& sink, std::uint64_t& steps, TaskId& failed,
                            std::string& error) {
    set_status(handle.id(), TaskStatus::Running);
    EvalContext& ctx = *handle.context_;
    TaskStatus status;
    ParallelReducer reducer(*ctx.program, sink, *this, handle.context_);
    try {
        status = from_stream(reducer.run(handle.task_.closure, handle.task_.level, handle.task_.budget));
    } catch (const WorkerError& e) {
        status = TaskStatus::Failed;
        failed = e.task_id();
        error = e.what();
    } catch (const std::exception& e) {
        status = TaskStatus::Failed;
        failed = handle.id();
        error = e.what();
    }
    if (status == TaskStatus::Failed) ctx.cancel.store(true);
    steps = reducer.steps_used();
    handle.task_.closure = Closure{};
    retire(handle.id());
    return status;
}

TaskStatus Manager::await(TaskHandle& handle, TokenSink& sink, bool buffered, bool allow_inline, std::uint64_t& steps,
                          TaskId& failed, std::string& error) {
    const auto& channel = handle.channel();
    if (allow_inline && handle.try_claim()) {
        TaskStatus s = execute(handle, sink, steps, failed, error);
        channel->close(s, steps, failed, error);
        return s;
    }
    std::vector<OutputToken> batch;
    while (channel->take(batch, buffered)) {
        for (const auto& t : batch) sink.put(t);
        batch.clear();
    }
    steps = channel->steps();
    failed = channel->failed_task();
    error = channel->error();
    return channel->status();
}

TaskResult Manager::collect(TaskHandle& handle) {
    TaskResult r;
    r.id = handle.id();
    VectorSink sink;
    TaskId failed = 0;
    std::string error;
    r.status = await(handle, sink, true, false, r.steps, failed, error);
    r.tokens = std::move(sink.tokens);
    return r;
}

void Manager::cancel_all() {
    std::lock_guard lock(mu_);
    for (auto& [id, entry] : active_) entry.second->cancel.store(true);
}

ManagerInfo Manager::info() const {
    ManagerInfo info;
    info.worker_count = pool_.size();
    std::lock_guard lock(mu_);
    for (const auto& [id, entry] : active_) info.active_tasks.emplace(id, entry.first);
    return info;
}

void Manager::worker_loop() {
    for (;;) {
        std::shared_ptr<TaskHandle> handle;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (queue_.empty()) return;
            handle = std::move(queue_.front());
            queue_.pop_front();
        }
        if (!handle->try_claim()) continue;
        ChannelSink sink(*handle->channel());
        std::uint64_t steps = 0;
        TaskId failed = 0;
        std::string error;
        TaskStatus s = execute(*handle, sink, steps, failed, error);
        sink.flush();
        handle->channel()->close(s, steps, failed, std::move(error));
    }
}

// ---------------------------------------------------------------------------

std::vector<OutputToken> combine(Var head, const std::vector<TaskResult>& results) {
    std::vector<OutputToken> out;
    out.push_back({OutputToken::Kind::HeadVar, static_cast<std::uint32_t>(results.size()), head});
    for (const auto& r : results) {
        out.push_back({OutputToken::Kind::ArgStart});
        std::size_t open = 0;
        for (const auto& t : r.tokens) {
            if (t.kind == OutputToken::Kind::ArgStart) ++open;
            if (t.kind == OutputToken::Kind::ArgEnd) --open;
            out.push_back(t);
        }
        for (; open > 0; --open) out.push_back({OutputToken::Kind::ArgEnd});
        out.push_back({OutputToken::Kind::ArgEnd});
    }
    return out;
}

ParallelRun par_normalize_stream(const CTerm& t, Manager& manager, const ParallelOptions& options, StepBudget budget,
                                 TokenSink& sink, Interrupt interrupt) {
    auto ctx = std::make_shared<EvalContext>();
    ctx->program = t.program_ptr();
    ctx->options = options;
    ctx->external = interrupt;

    auto handle = manager.submit(ctx, Task{0, Closure{t.root(), EnvRef{}}, 0, budget, nullptr});
    ParallelRun run;
    run.root_task = handle->id();
    TaskId failed = 0;
    std::string error;
    TaskStatus s = manager.await(*handle, sink, false, true, run.steps, failed, error);
    if (s == TaskStatus::Failed) throw WorkerError(failed, error);
    run.status = to_stream(s);
    return run;
}

Normalized par_normalize(const Term& t, Manager& manager, const ParallelOptions& options, StepBudget budget,
                         Interrupt interrupt) {
    CTerm c = compile(t);
    VectorSink sink;
    ParallelRun run = par_normalize_stream(c, manager, options, budget, sink, interrupt);
    Normalized out;
    out.status = run.status;
    out.steps = run.steps;
    out.rendered = render(c.program(), sink.tokens);
    if (out.status == StreamStatus::Done) out.term = read_back(c.program(), sink.tokens);
    return out;
}

Normalized par_normalize(const Term& t, std::size_t workers, StepBudget budget) {
    Manager manager(workers);
    ParallelOptions options;
    options.workers = workers;
    return par_normalize(t, manager, options, budget);
}

}  // namespace krivine
