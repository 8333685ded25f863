#include "krivine/repl.hpp"

#include <cctype>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace krivine {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::optional<std::uint64_t> parse_count(std::string_view s) {
    std::uint64_t n = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc{} || ptr != s.data() + s.size() || n == 0) return std::nullopt;
    return n;
}

ReplEvent diagnostic(std::string msg) { return {ReplEvent::Kind::Diagnostic, std::move(msg)}; }

}  // namespace

std::optional<ReplEvent> handle_directive(std::string_view line) {
    line = trim(line);
    if (line.empty() || line.front() != ':') return std::nullopt;

    std::istringstream words{std::string(line.substr(1))};
    std::string cmd, arg, extra;
    words >> cmd >> arg >> extra;
    if (!extra.empty()) return diagnostic("too many arguments to :" + cmd);

    if ((cmd == "q" || cmd == "quit") && arg.empty()) return ReplEvent::eof();
    if (cmd == "mode") {
        ReplEvent e{ReplEvent::Kind::SetMode};
        if (arg == "seq") return e;
        if (arg == "par") {
            e.mode = EvalMode::Parallel;
            return e;
        }
        return diagnostic("usage: :mode seq|par");
    }
    if (cmd == "workers") {
        auto n = parse_count(arg);
        if (!n) return diagnostic("usage: :workers N (N >= 1)");
        ReplEvent e{ReplEvent::Kind::SetWorkers};
        e.workers = static_cast<std::size_t>(*n);
        return e;
    }
    if (cmd == "steps") {
        ReplEvent e{ReplEvent::Kind::SetBudget};
        if (arg == "off") return e;
        auto n = parse_count(arg);
        if (!n) return diagnostic("usage: :steps N|off");
        e.budget = StepBudget::steps(*n);
        return e;
    }
    return diagnostic("unknown directive :" + cmd);
}

void EventQueue::push(ReplEvent e) {
    if (e.kind == ReplEvent::Kind::Interrupt) interrupt();
    {
        std::lock_guard lock(mu_);
        events_.push_back(std::move(e));
    }
    cv_.notify_one();
}

ReplEvent EventQueue::pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !events_.empty(); });
    ReplEvent e = std::move(events_.front());
    events_.pop_front();
    return e;
}

void feed_lines(std::istream& in, EventQueue& queue) {
    std::string line;
    while (std::getline(in, line)) {
        if (auto d = handle_directive(line)) {
            bool quit = d->kind == ReplEvent::Kind::Eof;
            queue.push(std::move(*d));
            if (quit) return;
            continue;
        }
        if (trim(line).empty()) continue;
        queue.push(ReplEvent::line(std::move(line)));
    }
    queue.push(ReplEvent::eof());
}

// ---------------------------------------------------------------------------

Repl::Repl(Session session, std::ostream& out, std::ostream& err)
    : session_(std::move(session)), out_(out), err_(err) {}

int Repl::run(EventQueue& events) {
    for (;;) {
        if (!session_.prompt.empty()) out_ << session_.prompt << std::flush;
        ReplEvent e = events.pop();
        switch (e.kind) {
        case ReplEvent::Kind::Eof: return 0;
        case ReplEvent::Kind::Interrupt:
            // Consumed: whatever it targeted has already stopped.
            events.cancel_flag().store(false);
            break;
        case ReplEvent::Kind::Diagnostic: err_ << e.text << '\n'; break;
        case ReplEvent::Kind::SetMode: session_.mode = e.mode; break;
        case ReplEvent::Kind::SetWorkers:
            if (e.workers != session_.workers) manager_.reset();
            session_.workers = e.workers;
            break;
        case ReplEvent::Kind::SetBudget: session_.budget = e.budget; break;
        case ReplEvent::Kind::Line:
            session_.history.push_back(e.text);
            evaluate(e.text, events);
            break;
        }
    }
}

void Repl::evaluate(const std::string& line, EventQueue& events) {
    std::optional<CTerm> compiled;
    try {
        compiled = compile(parse_term(line));
    } catch (const ParseError& pe) {
        err_ << "parse error at offset " << pe.offset() << ": expected " << pe.expected() << '\n';
        return;
    }

    Interrupt interrupt{&events.cancel_flag()};
    Renderer renderer(compiled->program(), out_, true);
    StreamStatus status = StreamStatus::Done;
    try {
        if (session_.mode == EvalMode::Parallel) {
            if (!manager_) manager_ = std::make_unique<Manager>(session_.workers);
            ParallelOptions opts;
            opts.workers = session_.workers;
            opts.granularity = session_.granularity;
            opts.buffered = session_.buffered;
            status = par_normalize_stream(*compiled, *manager_, opts, session_.budget, renderer, interrupt).status;
        } else {
            status = normalize_stream(*compiled, session_.budget, renderer, interrupt);
        }
    } catch (const std::exception& ex) {
        out_ << '\n';
        err_ << "evaluation error: " << ex.what() << '\n';
        return;
    }
    out_ << '\n';
    if (status == StreamStatus::Cancelled) out_ << "[interrupted]\n";
    if (status == StreamStatus::BudgetExhausted) out_ << "[step budget exhausted]\n";
    out_.flush();
}

int run_repl(Session& session, EventQueue& events, std::ostream& out, std::ostream& err) {
    Repl repl(session, out, err);
    int rc = repl.run(events);
    session = repl.session();
    return rc;
}

}  // namespace krivine
