// krivine: lambda-calculus interpreter on a Krivine machine.
//
//   krivine repl
//   krivine eval [--mode seq|par] [--workers N] [--max-steps N] [--granularity N] [--buffered] <file|->
//   krivine bench exp --m 6 --n 6 --mode par --workers 4 --runs 10 [--csv]
//   krivine bench id --ys 4 --ids 200000 ...

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "CLI11.hpp"
#include "krivine/bench.hpp"
#include "krivine/compile.hpp"
#include "krivine/machine.hpp"
#include "krivine/parallel.hpp"
#include "krivine/repl.hpp"
#include "krivine/syntax.hpp"

namespace {

using namespace krivine;

// SIGINT is blocked in every thread; one thread waits for it and forwards it.
template <class OnInterrupt>
void route_sigint(OnInterrupt on_interrupt) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    std::thread([set, on_interrupt]() mutable {
        for (;;) {
            int sig = 0;
            if (sigwait(&set, &sig) == 0 && sig == SIGINT) on_interrupt();
        }
    }).detach();
}

StepBudget budget_from(std::uint64_t max_steps) {
    return max_steps == 0 ? StepBudget::unlimited() : StepBudget::steps(max_steps);
}

EvalMode mode_from(const std::string& s) { return s == "par" ? EvalMode::Parallel : EvalMode::Sequential; }

struct EvalArgs {
    std::string mode = "seq";
    std::size_t workers = ParallelOptions::default_workers();
    std::uint64_t max_steps = 0;
    std::uint32_t granularity = 16;
    bool buffered = false;
    std::string input = "-";
};

int cmd_eval(const EvalArgs& a) {
    std::string text;
    if (a.input == "-") {
        text.assign(std::istreambuf_iterator<char>(std::cin), {});
    } else {
        std::ifstream f(a.input);
        if (!f) {
            std::cerr << "cannot open " << a.input << '\n';
            return 1;
        }
        text.assign(std::istreambuf_iterator<char>(f), {});
    }

    std::optional<CTerm> compiled;
    try {
        compiled = compile(parse_term(text));
    } catch (const ParseError& e) {
        std::cerr << a.input << ": parse error at offset " << e.offset() << ": expected " << e.expected() << '\n';
        return 1;
    }

    static std::atomic<bool> cancel{false};
    route_sigint([] { cancel.store(true); });
    Interrupt interrupt{&cancel};

    Renderer out(compiled->program(), std::cout, true);
    StreamStatus status;
    try {
        if (mode_from(a.mode) == EvalMode::Parallel) {
            Manager manager(a.workers);
            ParallelOptions opts;
            opts.workers = a.workers;
            opts.granularity = a.granularity;
            opts.buffered = a.buffered;
            status = par_normalize_stream(*compiled, manager, opts, budget_from(a.max_steps), out, interrupt).status;
        } else {
            status = normalize_stream(*compiled, budget_from(a.max_steps), out, interrupt);
        }
    } catch (const std::exception& e) {
        std::cout << std::endl;
        std::cerr << "evaluation error: " << e.what() << '\n';
        return 1;
    }
    std::cout << std::endl;
    if (status == StreamStatus::BudgetExhausted) {
        std::cerr << "step budget exhausted\n";
        return 3;
    }
    if (status == StreamStatus::Cancelled) {
        std::cerr << "interrupted\n";
        return 3;
    }
    return 0;
}

int cmd_repl(const EvalArgs& a) {
    Session session;
    session.mode = mode_from(a.mode);
    session.workers = a.workers;
    session.budget = budget_from(a.max_steps);
    session.granularity = a.granularity;
    session.buffered = a.buffered;
    if (isatty(STDIN_FILENO)) session.prompt = "> ";

    static EventQueue events;
    route_sigint([] { events.push(ReplEvent::interrupt()); });
    std::thread([] { feed_lines(std::cin, events); }).detach();
    int rc = run_repl(session, events, std::cout, std::cerr);
    // The reader thread may still be blocked on stdin; skip static teardown.
    std::cout.flush();
    std::_Exit(rc);
}

struct BenchArgs {
    std::string mode = "both";
    std::size_t workers = ParallelOptions::default_workers();
    std::size_t runs = 10;
    std::uint32_t granularity = 16;
    bool buffered = false;
    bool csv = false;
    bool grid = false;
    bool full_scale = false;
    std::uint64_t max_steps = 0;
    std::uint32_t m = 6, n = 6;
    std::uint32_t ys = 4;
    std::uint32_t ids = 0;  // 0: scale default
};

int cmd_bench(const BenchArgs& a, bool exponential) {
    std::vector<bench::BenchSpec> specs;
    std::vector<EvalMode> modes;
    if (a.mode != "par") modes.push_back(EvalMode::Sequential);
    if (a.mode != "seq") modes.push_back(EvalMode::Parallel);

    auto add = [&](std::variant<bench::Exponential, bench::Identities> family) {
        for (EvalMode m : modes) {
            bench::BenchSpec s;
            s.family = family;
            s.mode = m;
            s.workers = a.workers;
            s.runs = a.runs;
            s.granularity = a.granularity;
            s.buffered = a.buffered;
            s.budget = budget_from(a.max_steps);
            specs.push_back(s);
        }
    };

    if (exponential) {
        if (a.grid) {
            std::vector<std::uint32_t> values = a.full_scale ? std::vector<std::uint32_t>{6, 7, 8}
                                                              : std::vector<std::uint32_t>{5, 6, 7};
            for (auto m : values)
                for (auto n : values) add(bench::Exponential{m, n});
        } else {
            add(bench::Exponential{a.m, a.n});
        }
    } else {
        std::uint32_t ids = a.ids ? a.ids : (a.full_scale ? 2'000'000u : 200'000u);
        if (a.grid) {
            for (std::uint32_t y = 1; y <= 8; ++y) add(bench::Identities{y, ids});
        } else {
            add(bench::Identities{a.ys, ids});
        }
    }

    // Group rows by mode.
    std::stable_sort(specs.begin(), specs.end(), [](const auto& x, const auto& y) { return x.mode < y.mode; });
    std::vector<bench::BenchResult> results;
    for (const auto& s : specs) {
        results.push_back(bench::run_bench(s));
        if (!a.csv) std::cerr << "." << std::flush;
    }
    if (!a.csv) std::cerr << '\n';
    std::cout << bench::report(results, a.csv ? bench::ReportFormat::Csv : bench::ReportFormat::Table);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lambda-calculus interpreter on a Krivine machine"};
    app.require_subcommand(1);

    EvalArgs eval_args;
    auto add_eval_options = [&](CLI::App* sub) {
        sub->add_option("--mode", eval_args.mode, "seq or par")->check(CLI::IsMember({"seq", "par"}));
        sub->add_option("--workers", eval_args.workers, "worker threads in par mode")->check(CLI::PositiveNumber);
        sub->add_option("--max-steps", eval_args.max_steps, "machine transition budget (0 = unlimited)");
        sub->add_option("--granularity", eval_args.granularity, "minimum argument size dispatched as a task");
        sub->add_flag("--buffered", eval_args.buffered, "collect whole task results before output");
    };

    auto* repl = app.add_subcommand("repl", "interactive read-eval-print loop");
    add_eval_options(repl);

    auto* eval = app.add_subcommand("eval", "normalize one term from a file or standard input");
    add_eval_options(eval);
    eval->add_option("input", eval_args.input, "term file, or - for standard input");

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "time sequential and parallel normalization");
    bench->require_subcommand(1);
    auto add_bench_options = [&](CLI::App* sub) {
        sub->add_option("--mode", bench_args.mode, "seq, par or both")->check(CLI::IsMember({"seq", "par", "both"}));
        sub->add_option("--workers", bench_args.workers)->check(CLI::PositiveNumber);
        sub->add_option("--runs", bench_args.runs)->check(CLI::PositiveNumber);
        sub->add_option("--granularity", bench_args.granularity);
        sub->add_option("--max-steps", bench_args.max_steps);
        sub->add_flag("--buffered", bench_args.buffered);
        sub->add_flag("--csv", bench_args.csv, "CSV instead of a table");
        sub->add_flag("--grid", bench_args.grid, "run the full parameter grid");
        sub->add_flag("--full-scale", bench_args.full_scale, "m,n in {6,7,8} / 2,000,000 identities");
    };
    auto* exp = bench->add_subcommand("exp", "exponential term ((\\x\\y((a)(x)y)(b)(y)x)Cm)Cn");
    add_bench_options(exp);
    exp->add_option("--m", bench_args.m)->check(CLI::PositiveNumber);
    exp->add_option("--n", bench_args.n)->check(CLI::PositiveNumber);
    auto* id = bench->add_subcommand("id", "identities term (\\y((x)y)...y)(\\ii)...z");
    add_bench_options(id);
    id->add_option("--ys", bench_args.ys)->check(CLI::PositiveNumber);
    id->add_option("--ids", bench_args.ids)->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    if (repl->parsed()) return cmd_repl(eval_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    if (exp->parsed()) return cmd_bench(bench_args, true);
    if (id->parsed()) return cmd_bench(bench_args, false);
    return 1;
}
